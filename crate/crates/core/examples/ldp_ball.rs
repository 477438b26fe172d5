//! Large-deviation decay of a bounded-Lipschitz ball.
//!
//! The ball has radius 0.2 around the uniform law on `[0, 1]`, seen from
//! the Legendre ensemble on `[-1, 1]`. Its annealed probabilities are
//! compared with the duality bracket for `inf_G (E_Q - E_Q*)`.

use vecgas::domain::{CompactSetTuple, DegreeSchedule, InteractionMatrix, MassVector, WeightTuple};
use vecgas::ensemble::{
    ball_log_probability, ball_rate_bound, BallOptions, EnsembleSpec, NeighborhoodSpec, PartitionMode, PartitionOptions,
    ReferenceMeasure,
};
use vecgas::potential::DiscreteVectorMeasure;

fn main() -> vecgas::Result<()> {
    let k = CompactSetTuple::intervals(&[(-1.0, 1.0)], 400)?;
    let sizes = [10usize, 20, 30];
    let spec = EnsembleSpec::new(
        InteractionMatrix::identity(1),
        k.clone(),
        WeightTuple::zero(1),
        MassVector::ones(1),
        DegreeSchedule::explicit(sizes.iter().map(|&m| vec![m]).collect())?,
        ReferenceMeasure::quadrature(&k),
        3,
    )?;
    let grid = k.grid(0);
    let raw: Vec<f64> = grid.nodes.iter().zip(&grid.weights).map(|(z, w)| if z.re >= 0.0 { *w } else { 0.0 }).collect();
    let total: f64 = raw.iter().sum();
    let center = DiscreteVectorMeasure::on_grids(&k, vec![raw.iter().map(|x| x / total).collect()], &MassVector::ones(1))?;
    let ball = NeighborhoodSpec::new(center, 0.2)?;

    let bound = ball_rate_bound(&spec, &ball, &BallOptions::default())?;
    println!("inf over the ball of E_Q - E_Q* in [{:.4}, {:.4}]", bound.lower, bound.upper);

    let opts = PartitionOptions { mode: PartitionMode::Stochastic, particles: 32, temperatures: 300, ..PartitionOptions::default() };
    let mut previous: Option<(f64, f64)> = None;
    for level in 1..=sizes.len() {
        let lv = spec.level(level)?;
        let p = ball_log_probability(&lv, &ball, &opts)?;
        let slope = previous.map(|(s, l)| -(p.log_sigma - l) / (lv.speed() - s));
        println!(
            "m = {:>2}: log sigma = {:>9.3} +- {:.3}, speed {:>5}, local slope {}",
            lv.total(),
            p.log_sigma,
            p.log_sigma_stderr,
            lv.speed(),
            slope.map(|s| format!("{s:.4}")).unwrap_or_else(|| "-".into())
        );
        previous = Some((lv.speed(), p.log_sigma));
    }
    Ok(())
}
