//! Vector equilibrium of an Angelesco pair on `[-1, 0]` and `[0, 1]`.
//!
//! Prints the Robin constants, the energy and the support of each
//! component.

use vecgas::domain::{CompactSetTuple, InteractionMatrix, MassVector, WeightTuple};
use vecgas::equilibrium::{solve_equilibrium, SolverOptions};
use vecgas::potential::vector_energy;

fn main() -> vecgas::Result<()> {
    let k = CompactSetTuple::intervals(&[(-1.0, 0.0), (0.0, 1.0)], 400)?;
    let c = InteractionMatrix::angelesco(2);
    let r = MassVector::ones(2);
    let sol = solve_equilibrium(&c, &k, &WeightTuple::zero(2), &r, &SolverOptions::default())?;

    println!("converged {} after {} iterations", sol.converged, sol.iterations);
    println!("max variational residual {:.2e}", sol.residuals.max_residual());
    println!("Robin constants {:?}", sol.robin_constants);

    let e = vector_energy(&sol.minimizer, &c, None)?;
    println!("E = {:.6}", e.energy);
    for (i, comp) in sol.minimizer.components().iter().enumerate() {
        let support: Vec<f64> = comp.nodes().iter().zip(comp.weights()).filter(|(_, w)| **w > 1e-9).map(|(z, _)| z.re).collect();
        let (lo, hi) = support.iter().fold((f64::MAX, f64::MIN), |(a, b), x| (a.min(*x), b.max(*x)));
        println!("mu_{} mass {:.4} support approx [{lo:.3}, {hi:.3}]", i + 1, comp.mass());
    }
    Ok(())
}
