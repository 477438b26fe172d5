//! Weighted vector equilibrium problems on quadrature grids.

mod fixed_point;
mod kernel;
mod solver;
mod usc;
mod variational;

pub use fixed_point::{potential_weight, verify_nonadmissible_fixed_point, FixedPointReport};
pub use kernel::KernelOperator;
pub use solver::{solve_equilibrium, EquilibriumSolution, SolverOptions};
pub use usc::{usc_upper_approx, usc_upper_approx_tuple};
pub use variational::{verify_variational, ComponentResidual, ResidualReport, VariationalOptions};

