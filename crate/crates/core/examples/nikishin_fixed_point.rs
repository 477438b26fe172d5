//! Feeding the weight `-U^mu` back into the solver returns `mu`.
//!
//! Uses a Nikishin pair on disjoint intervals and an arbitrary smooth
//! starting measure.

use vecgas::domain::{CompactSetTuple, InteractionMatrix, MassVector};
use vecgas::equilibrium::{verify_nonadmissible_fixed_point, SolverOptions};
use vecgas::potential::DiscreteVectorMeasure;

fn main() -> vecgas::Result<()> {
    let k = CompactSetTuple::intervals(&[(0.0, 1.0), (-2.0, -1.0)], 200)?;
    let c = InteractionMatrix::nikishin(2);
    let r = MassVector::new(vec![1.0, 0.5])?;
    let weights: Vec<Vec<f64>> = k
        .grids()
        .iter()
        .zip(r.as_slice())
        .map(|(g, mass)| {
            let raw: Vec<f64> = g.nodes.iter().zip(&g.weights).map(|(z, w)| w * (1.0 + z.re * z.re)).collect();
            let total: f64 = raw.iter().sum();
            raw.iter().map(|x| mass * x / total).collect()
        })
        .collect();
    let mu = DiscreteVectorMeasure::on_grids(&k, weights, &r)?;

    let report = verify_nonadmissible_fixed_point(&mu, &c, &k, &SolverOptions::default(), 1e-3, 0.02)?;
    println!("energy gap {:.3e}", report.energy_gap);
    println!("BL distance to the input {:.4}", report.distance);
    println!("passed {}", report.passed);
    Ok(())
}
