//! Rational approximation of the interaction matrix.

use crate::domain::InteractionMatrix;
use crate::{Error, Result};

/// Rounding direction for off-diagonal entries.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum RationalizeRule {
    /// Every entry rounded up: `c_hat >= c` entrywise.
    #[default]
    Upward,
    /// Nonnegative entries rounded up, negative entries rounded down.
    SignSplit,
}

#[derive(Debug, Clone)]
pub struct RationalMatrix {
    pub matrix: InteractionMatrix,
    /// Numerators over the common denominator `bound`.
    pub numerators: Vec<Vec<i64>>,
    pub denominator: i64,
    /// Multiples of `1/bound` added to the diagonal to restore positive
    /// semidefiniteness.
    pub diagonal_lift: i64,
}

impl RationalMatrix {
    pub fn max_deviation(&self, c: &InteractionMatrix) -> f64 {
        let d = c.dim();
        let mut worst: f64 = 0.0;
        for i in 0..d {
            for j in 0..d {
                worst = worst.max((self.matrix.get(i, j) - c.get(i, j)).abs());
            }
        }
        worst
    }
}

fn round_to(bound: i64, value: f64, up: bool) -> i64 {
    let scaled = value * bound as f64;
    let nearest = scaled.round();
    if (scaled - nearest).abs() <= 1e-9 * nearest.abs().max(1.0) {
        nearest as i64
    } else if up {
        scaled.ceil() as i64
    } else {
        scaled.floor() as i64
    }
}

/// Entries `p / bound`, rounded per `rule`, with the diagonal then lifted by
/// the least multiple of `1/bound` that keeps the matrix positive
/// semidefinite. The lift never exceeds `d / bound`.
pub fn rationalize_matrix(c: &InteractionMatrix, bound: u32, rule: RationalizeRule) -> Result<RationalMatrix> {
    if bound == 0 {
        return Err(Error::Domain("denominator bound must be positive".into()));
    }
    let b = bound as i64;
    let d = c.dim();
    let mut num = vec![vec![0i64; d]; d];
    for i in 0..d {
        for j in 0..d {
            let v = c.get(i, j);
            let up = match rule {
                RationalizeRule::Upward => true,
                RationalizeRule::SignSplit => i == j || v >= 0.0,
            };
            num[i][j] = round_to(b, v, up);
        }
    }
    for lift in 0..=(d as i64) {
        let rows: Vec<Vec<f64>> = (0..d)
            .map(|i| (0..d).map(|j| (num[i][j] + if i == j { lift } else { 0 }) as f64 / b as f64).collect())
            .collect();
        if let Ok(matrix) = InteractionMatrix::with_tolerance(rows, 0.0) {
            for (i, row) in num.iter_mut().enumerate() {
                row[i] += lift;
            }
            return Ok(RationalMatrix { matrix, numerators: num, denominator: b, diagonal_lift: lift });
        }
    }
    Err(Error::Matrix("cannot certify positive semidefiniteness after diagonal repair".into()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn rational_matrix_is_a_fixed_point() {
        let c = InteractionMatrix::angelesco(3);
        let out = rationalize_matrix(&c, 100, RationalizeRule::Upward).unwrap();
        assert_eq!(out.matrix, c);
        assert_eq!(out.diagonal_lift, 0);
        let n = InteractionMatrix::nikishin(3);
        assert_eq!(rationalize_matrix(&n, 100, RationalizeRule::SignSplit).unwrap().matrix, n);
    }

    #[test]
    fn irrational_coupling_rounds_up() {
        let s = std::f64::consts::FRAC_1_SQRT_2;
        let c = InteractionMatrix::new(vec![vec![1.0, s], vec![s, 1.0]]).unwrap();
        let out = rationalize_matrix(&c, 100, RationalizeRule::Upward).unwrap();
        assert_eq!(out.numerators[0][1], 71);
        assert!((out.matrix.get(0, 1) - 0.71).abs() < 1e-15);
        assert!(out.matrix.min_eigenvalue() >= 0.0);
        assert!(out.max_deviation(&c) <= 1.0 / 100.0);
    }

    #[test]
    fn near_singular_matrix_needs_a_lift() {
        let c = InteractionMatrix::new(vec![vec![1.0, 0.705], vec![0.705, 0.5]]).unwrap();
        let out = rationalize_matrix(&c, 10, RationalizeRule::Upward).unwrap();
        assert_eq!(out.numerators[0][1], 8);
        assert_eq!(out.diagonal_lift, 1);
        assert!(out.matrix.min_eigenvalue() >= 0.0);
        assert!(out.max_deviation(&c) <= (c.dim() as f64 + 1.0) / 10.0);
    }

    fn random_psd(d: usize, raw: &[f64]) -> InteractionMatrix {
        let g: Vec<Vec<f64>> = (0..d).map(|i| (0..d).map(|j| raw[i * d + j]).collect()).collect();
        let rows = (0..d)
            .map(|i| (0..d).map(|j| (0..d).map(|l| g[i][l] * g[j][l]).sum::<f64>() + if i == j { 0.05 } else { 0.0 }).collect())
            .collect();
        InteractionMatrix::new(rows).unwrap()
    }

    proptest! {
        #[test]
        fn rounding_directions_hold(raw in proptest::collection::vec(-1.0f64..1.0, 16), bound in 2u32..200) {
            let c = random_psd(4, &raw);
            let up = rationalize_matrix(&c, bound, RationalizeRule::Upward).unwrap();
            let split = rationalize_matrix(&c, bound, RationalizeRule::SignSplit).unwrap();
            for i in 0..4 {
                for j in 0..4 {
                    let (cij, u, s) = (c.get(i, j), up.matrix.get(i, j), split.matrix.get(i, j));
                    prop_assert!(u >= cij - 1e-15);
                    if i != j && cij < 0.0 {
                        prop_assert!(s <= cij + 1e-15);
                    } else {
                        prop_assert!(s >= cij - 1e-15);
                    }
                    let lift = if i == j { up.diagonal_lift as f64 / bound as f64 } else { 0.0 };
                    prop_assert!(u - cij - lift <= 1.0 / bound as f64 + 1e-12);
                }
            }
            prop_assert!(up.matrix.min_eigenvalue() >= 0.0);
            prop_assert!(up.diagonal_lift <= 4);
        }
    }
}
