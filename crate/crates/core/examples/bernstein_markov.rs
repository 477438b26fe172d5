//! Bernstein-Markov ratio curves.
//!
//! The arcsine measure on `[-1, 1]` has `M_k^(1/k) -> 1`. A measure living
//! on half the interval does not. Rational functions with a pole at 3 stay
//! Bernstein-Markov for the arcsine measure.

use vecgas::bmtest::{arcsine_measure, bm_ratio_poly, bm_ratio_rational, BmOptions, RationalFamilySpec};
use vecgas::domain::CompactSetTuple;
use vecgas::Complex64;

fn main() -> vecgas::Result<()> {
    let k = CompactSetTuple::intervals(&[(-1.0, 1.0)], 600)?;
    let grid = k.grid(0);
    let arcsine = arcsine_measure(grid)?;
    let half: Vec<f64> = grid.nodes.iter().zip(&arcsine).map(|(z, w)| if z.re >= 0.0 { *w } else { 0.0 }).collect();
    let opts = BmOptions::default();

    let full = bm_ratio_poly(grid, &arcsine, None, 5..=30, &opts)?;
    let partial = bm_ratio_poly(grid, &half, None, 5..=30, &opts)?;
    let family = RationalFamilySpec::with_poles(0, 1.0, 1.0, vec![Complex64::new(3.0, 0.0)], vec![1.0], 8)?;
    let rational = bm_ratio_rational(&family, grid, &arcsine, None, 5..=30, &opts)?;

    println!("{:>3} {:>10} {:>10} {:>10}", "k", "arcsine", "half", "rational");
    for ((a, b), c) in full.points.iter().zip(&partial.points).zip(&rational.points).step_by(5) {
        println!("{:>3} {:>10.4} {:>10.4} {:>10.4}", a.k, a.root, b.root, c.root);
    }
    Ok(())
}
