//! Partition functions of the Legendre ensemble on `[0, 1]` against the
//! closed-form Selberg integral.
//!
//! Small levels are summed exactly; larger ones use annealed importance
//! sampling.

use vecgas::domain::{CompactSetTuple, DegreeSchedule, InteractionMatrix, MassVector, WeightTuple};
use vecgas::ensemble::{partition_function, EnsembleSpec, PartitionMode, PartitionOptions, ReferenceMeasure};

fn log_factorial(n: usize) -> f64 {
    (1..=n).map(|x| (x as f64).ln()).sum()
}

/// `log int_{[0,1]^m} prod_{i<j} |x_i - x_j|^2 dx`.
fn selberg(m: usize) -> f64 {
    (0..m).map(|j| 2.0 * log_factorial(j) + log_factorial(j + 1) - log_factorial(m + j)).sum()
}

fn main() -> vecgas::Result<()> {
    let k = CompactSetTuple::intervals(&[(0.0, 1.0)], 400)?;
    let sizes = [2usize, 3, 6, 10];
    let schedule = DegreeSchedule::explicit(sizes.iter().map(|&m| vec![m]).collect())?;
    let spec = EnsembleSpec::new(
        InteractionMatrix::identity(1),
        k.clone(),
        WeightTuple::zero(1),
        MassVector::ones(1),
        schedule,
        ReferenceMeasure::quadrature(&k),
        7,
    )?;
    for (level, &m) in sizes.iter().enumerate() {
        let mode = if m <= 3 { PartitionMode::Auto } else { PartitionMode::Stochastic };
        let est = partition_function(&spec, level + 1, &PartitionOptions { mode, ..PartitionOptions::default() })?;
        println!(
            "m = {m:>2}: log Z = {:>9.4} +- {:.4} ({}), Selberg {:>9.4}",
            est.log_z,
            est.log_z_stderr,
            if est.stochastic { "annealed" } else { "exact" },
            selberg(m)
        );
    }
    Ok(())
}
