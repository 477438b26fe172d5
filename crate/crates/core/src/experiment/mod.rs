//! Configuration files, presets and the artifacts written by the `vecgas`
//! binary.

mod config;
mod run;

pub use config::{
    interaction_matrix, parse_sets, BmSection, EnsembleSection, ExperimentConfig, GridSection, LdpSection,
    NeighborhoodSection, OutputSection, Problem, ProblemSection, ScheduleSection, SolverSection,
};
pub use run::{error_exit_code, load_config, parse_k_range, run_experiment, Outcome, RunOptions, Task};
