//! The weight `-U^mu_i` makes `mu` its own weighted equilibrium.

use super::solver::{solve_equilibrium, SolverOptions};
use super::variational::grid_partial_potentials;
use crate::domain::{Admissibility, CompactSetTuple, InteractionMatrix, MassVector, Weight, WeightTuple};
use crate::metric::bl_distance_vector;
use crate::potential::{vector_energy, DiscreteVectorMeasure};
use crate::Result;

#[derive(Debug, Clone)]
pub struct FixedPointReport {
    /// `E_u(returned) - E_u(mu)`; nonnegative up to solver accuracy.
    pub energy_gap: f64,
    /// Bounded-Lipschitz distance between the returned minimizer and `mu`.
    pub distance: f64,
    pub solver_converged: bool,
    pub passed: bool,
    pub weight: WeightTuple,
}

/// `u_i = -sum_j c_ij U^{mu_j}` tabulated on the grid of `K_i`.
pub fn potential_weight(mu: &DiscreteVectorMeasure, c: &InteractionMatrix, k: &CompactSetTuple) -> Result<WeightTuple> {
    let u = grid_partial_potentials(mu, c, k);
    let weights = u
        .into_iter()
        .enumerate()
        .map(|(i, ui)| Weight::tabulated(k.grid(i).nodes.clone(), ui.into_iter().map(|v| -v).collect()))
        .collect::<Result<Vec<_>>>()?;
    Ok(WeightTuple::new(weights))
}

/// Solves the equilibrium problem with weight `-U^mu_i` and compares the
/// minimizer with `mu`. Passes when the energy gap is at most `energy_tol`
/// and the distance at most `distance_tol`.
pub fn verify_nonadmissible_fixed_point(
    mu: &DiscreteVectorMeasure,
    c: &InteractionMatrix,
    k: &CompactSetTuple,
    opts: &SolverOptions,
    energy_tol: f64,
    distance_tol: f64,
) -> Result<FixedPointReport> {
    let weight = potential_weight(mu, c, k)?;
    let r = MassVector::new(mu.masses())?;
    let sol = solve_equilibrium(c, k, &weight, &r, opts)?;
    let e_ret = vector_energy(&sol.minimizer, c, Some(&weight))?.weighted_energy;
    let e_mu = vector_energy(mu, c, Some(&weight))?.weighted_energy;
    let energy_gap = e_ret - e_mu;
    let distance = bl_distance_vector(&sol.minimizer, mu)?;
    Ok(FixedPointReport {
        energy_gap,
        distance,
        solver_converged: sol.converged,
        passed: energy_gap.abs() <= energy_tol && distance <= distance_tol,
        weight: weight.with_admissibility(Admissibility::Continuous),
    })
}
