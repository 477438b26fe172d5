//! Domain types: interaction matrices, masses, compact sets and grids,
//! weights, degree schedules, configurations and hypothesis checks.

mod configuration;
mod geometry;
mod hypotheses;
mod matrix;
mod schedule;
mod weight;

pub use configuration::Configuration;
pub use geometry::*;
pub use hypotheses::{validate_hypotheses, HypothesisOutcome, HypothesisReport};
pub use matrix::*;
pub use schedule::{make_degree_schedule, DegreeSchedule, ScheduleRule};
pub use weight::{Admissibility, Weight, WeightExpr, WeightTuple};
