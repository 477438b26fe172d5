//! Weighted Vandermonde products, grid Fekete arrays, k-th order vector
//! transfinite diameters and rational approximation of `C`.

mod diameter;
mod optimize;
mod rational;
mod vdm;

pub use diameter::{transfinite_diameter_estimate, DiameterEstimate, DiameterPoint};
pub use optimize::{fekete_optimize, FeketeOptions, FeketeResult};
pub use rational::{rationalize_matrix, RationalMatrix, RationalizeRule};
pub use vdm::{log_vdm, normalization_exponent, scaling_check, ScalingCheck, VdmMode, VdmValue};
