//! Weighted Fekete arrays and the k-th order transfinite diameter of an
//! Angelesco pair, compared with `exp(-E*)`.
//!
//! Also shows rationalizing an irrational interaction matrix onto a
//! denominator grid.

use vecgas::domain::{make_degree_schedule, CompactSetTuple, InteractionMatrix, MassVector, WeightTuple};
use vecgas::equilibrium::SolverOptions;
use vecgas::fekete::{rationalize_matrix, transfinite_diameter_estimate, FeketeOptions, RationalizeRule};

fn main() -> vecgas::Result<()> {
    let k = CompactSetTuple::intervals(&[(-1.0, 0.0), (0.0, 1.0)], 300)?;
    let c = InteractionMatrix::angelesco(2);
    let r = MassVector::ones(2);
    let schedule = make_degree_schedule(&r, 12)?;
    let est = transfinite_diameter_estimate(
        &c,
        &k,
        &WeightTuple::zero(2),
        &r,
        &schedule,
        1..=12,
        &SolverOptions::default(),
        &FeketeOptions::default(),
    )?;
    println!("exp(-E*) = {:.6}", (-est.weighted_energy).exp());
    println!("{:>3} {:>8} {:>10} {:>10}", "k", "degrees", "delta_k", "BL dist");
    for p in &est.points {
        println!("{:>3} {:>8} {:>10.6} {:>10.4}", p.k, format!("{:?}", p.degrees), p.delta_hat, p.distance_to_equilibrium);
    }

    let irrational = InteractionMatrix::new(vec![vec![1.0, 0.5f64.sqrt()], vec![0.5f64.sqrt(), 1.0]])?;
    let q = rationalize_matrix(&irrational, 12, RationalizeRule::Upward)?;
    println!("rationalized over {}: {:?} (max deviation {:.3e})", q.denominator, q.numerators, q.max_deviation(&irrational));
    Ok(())
}
