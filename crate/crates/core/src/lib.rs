//! Vector logarithmic energy problems on planar compact sets.
//!
//! The crate covers the whole pipeline for a `d`-tuple of compact sets
//! `K = (K_1, ..., K_d)`, external fields `Q = (Q_1, ..., Q_d)`, masses `r`
//! and a symmetric positive semidefinite interaction matrix `C`:
//!
//! * [`domain`]: interaction matrices, mass vectors, sets with quadrature
//!   grids, weights, degree schedules and standing-hypothesis checks.
//! * [`potential`]: logarithmic potentials, mutual energies and the vector
//!   energies `E` and `E_Q` of discrete measures.
//! * [`equilibrium`]: the minimizer of `E_Q` over measures with prescribed
//!   masses, its variational certificate, and fixed-point checks for the
//!   non-admissible weight `-U^mu`.
//! * [`fekete`]: weighted Vandermonde products, grid Fekete arrays and
//!   k-th order transfinite diameters.
//! * [`ensemble`]: the Gibbs measures `Prob_k`, partition functions,
//!   sampling, neighborhood functionals and large-deviation diagnostics.
//! * [`bmtest`]: Bernstein-Markov ratio curves for polynomial and rational
//!   families.
//! * [`experiment`]: configuration files, presets and CSV emission used by
//!   the `vecgas` binary.

#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::needless_range_loop)]

pub mod bmtest;
pub mod domain;
pub mod ensemble;
pub mod equilibrium;
mod error;
pub mod experiment;
pub mod fekete;
pub mod metric;
pub mod potential;

pub use error::{Error, Result};
pub use num_complex::Complex64;
