//! The Gibbs measures `Prob_k` with density `|VDM^Q_k|^2 / Z^Q_k` against
//! `nu`, their push-forwards `sigma_k` to empirical measures, partition
//! functions, neighborhood functionals and large-deviation diagnostics.
//! Configurations live on the quadrature grids of the sets.

mod ldp;
mod neighborhood;
mod partition;
mod rate;
mod sampler;
mod spec;

pub use ldp::{
    fit_rate, ldp_concentration_experiment, BallEstimator, BallFrequency, ConcentrationReport, ConcentrationRow, LdpOptions, RateFit,
};
pub use neighborhood::{
    ball_log_probability, neighborhood_functionals, neighborhood_level, BallProbability, FunctionalOptions, NeighborhoodFunctionals, NeighborhoodSpec,
};
pub use partition::{partition_function, partition_level, PartitionEstimate, PartitionMode, PartitionOptions, EXACT_BUDGET};
pub use rate::{ball_rate_bound, rate_function, BallOptions, BallRateBound, RATE_CLAMP_TOL};
pub use sampler::{
    sample_level, sample_prob_k, stationary_distribution, sweep_transition_matrix, ChainDiagnostics, Draw,
    EnumeratedEnsemble, SampleBatch, SamplerOptions,
};
pub use spec::{EnsembleSpec, Level, ReferenceMeasure};
