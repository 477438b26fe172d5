//! Metropolis sampling of the `beta = 2` ensemble with `Q(x) = x^2 / 2`.
//!
//! The averaged empirical measure should sit close to the semicircle
//! equilibrium on `[-sqrt 2, sqrt 2]` in the bounded-Lipschitz metric.

use vecgas::domain::{DegreeSchedule, CompactSetTuple, InteractionMatrix, MassVector, Weight, WeightTuple};
use vecgas::ensemble::{sample_prob_k, EnsembleSpec, ReferenceMeasure, SamplerOptions};
use vecgas::metric::bl_distance_vector;

fn main() -> vecgas::Result<()> {
    let k = CompactSetTuple::intervals(&[(-2.0, 2.0)], 600)?;
    let q = WeightTuple::new(vec![Weight::expr("x^2/2")?]);
    let schedule = DegreeSchedule::explicit(vec![vec![10], vec![20], vec![40]])?;
    let spec = EnsembleSpec::new(
        InteractionMatrix::beta(2.0)?,
        k.clone(),
        q,
        MassVector::ones(1),
        schedule,
        ReferenceMeasure::quadrature(&k),
        2024,
    )?;
    let eq = spec.equilibrium()?;
    for level in 1..=3 {
        let batch = sample_prob_k(&spec, level, 200, &SamplerOptions::default())?;
        batch.check_mixing()?;
        let mean = batch.mean_empirical(&k)?;
        println!(
            "m = {:>2}: acceptance {:.3}, BL distance of the mean empirical measure {:.4}",
            spec.level(level)?.total(),
            batch.acceptance_rate(),
            bl_distance_vector(&mean, &eq.minimizer)?
        );
    }
    Ok(())
}
