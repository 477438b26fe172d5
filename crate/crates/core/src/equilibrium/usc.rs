//! Continuous upper approximations of upper semicontinuous weights.

use num_complex::Complex64;

use crate::domain::{Admissibility, Weight, WeightTuple};
use crate::{Error, Result};

/// `Q_n(z) = max_w (u(w) - L_n |z - w|)` with `L_n = 2^n L_0`, taken over
/// the tabulated points where `u` is finite. `Q_n` is Lipschitz, decreases
/// in `n` and dominates `u` at every tabulated point. Values of `-inf` are
/// allowed in `u`.
pub fn usc_upper_approx(points: &[Complex64], u: &[f64], level: u32, l0: f64) -> Result<Weight> {
    if points.len() != u.len() {
        return Err(Error::Weight(format!("{} points but {} values", points.len(), u.len())));
    }
    if u.iter().any(|v| v.is_nan() || *v == f64::INFINITY) {
        return Err(Error::Weight("an upper semicontinuous weight cannot take +inf or NaN".into()));
    }
    if !u.iter().any(|v| v.is_finite()) {
        return Err(Error::Weight("weight is infinite at every node".into()));
    }
    if !(l0.is_finite() && l0 > 0.0) {
        return Err(Error::Weight(format!("base Lipschitz constant must be positive, got {l0}")));
    }
    Ok(Weight::LipschitzEnvelope {
        points: points.to_vec(),
        values: u.to_vec(),
        lipschitz: l0 * 2f64.powi(level as i32),
    })
}

/// Applies [`usc_upper_approx`] to every component.
pub fn usc_upper_approx_tuple(tables: &[(Vec<Complex64>, Vec<f64>)], level: u32, l0: f64) -> Result<WeightTuple> {
    let weights = tables
        .iter()
        .map(|(p, u)| usc_upper_approx(p, u, level, l0))
        .collect::<Result<Vec<_>>>()?;
    Ok(WeightTuple::new(weights).with_admissibility(Admissibility::UscUpperApproximated { level }))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn line(n: usize) -> Vec<Complex64> {
        (0..n).map(|k| Complex64::new(-1.0 + 2.0 * k as f64 / (n - 1) as f64, 0.0)).collect()
    }

    #[test]
    fn lipschitz_weight_is_a_fixed_point() {
        let pts = line(41);
        let u: Vec<f64> = pts.iter().map(|z| z.re.abs()).collect();
        let q = usc_upper_approx(&pts, &u, 0, 1.0).unwrap();
        let v = q.eval_many(&pts).unwrap();
        for (a, b) in v.iter().zip(&u) {
            assert!((a - b).abs() < 1e-15);
        }
    }

    #[test]
    fn step_weight_envelopes_decrease() {
        // u = 0 left of the origin, -1 from the origin on
        let pts = line(201);
        let u: Vec<f64> = pts.iter().map(|z| if z.re < 0.0 { 0.0 } else { -1.0 }).collect();
        let mut prev: Option<Vec<f64>> = None;
        let probe = Complex64::new(0.05, 0.0);
        let mut probe_prev = f64::INFINITY;
        for n in 0..8 {
            let v = usc_upper_approx(&pts, &u, n, 1.0).unwrap().eval_many(&pts).unwrap();
            for (a, b) in v.iter().zip(&u) {
                assert!(a >= b);
            }
            if let Some(p) = &prev {
                assert!(v.iter().zip(p).all(|(a, b)| a <= b));
            }
            let at = usc_upper_approx(&pts, &u, n, 1.0).unwrap().eval(probe).unwrap();
            assert!(at <= probe_prev);
            probe_prev = at;
            prev = Some(v);
        }
        assert!((probe_prev + 1.0).abs() < 1e-12);
    }

    #[test]
    fn rejects_infinite_weights() {
        let pts = line(3);
        assert!(matches!(
            usc_upper_approx(&pts, &[f64::NEG_INFINITY; 3], 1, 1.0),
            Err(Error::Weight(_))
        ));
        assert!(usc_upper_approx(&pts, &[0.0, f64::INFINITY, 0.0], 1, 1.0).is_err());
    }

    proptest! {
        #[test]
        fn envelopes_are_monotone_in_level(u in proptest::collection::vec(-3.0f64..3.0, 20), n in 0u32..6) {
            let pts = line(20);
            let a = usc_upper_approx(&pts, &u, n, 0.5).unwrap().eval_many(&pts).unwrap();
            let b = usc_upper_approx(&pts, &u, n + 1, 0.5).unwrap().eval_many(&pts).unwrap();
            for l in 0..20 {
                prop_assert!(a[l] >= b[l] && b[l] >= u[l]);
            }
        }
    }
}
