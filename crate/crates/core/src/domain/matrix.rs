use nalgebra::{DMatrix, SymmetricEigen};

use crate::{Error, Result};

/// Default tolerance on the smallest eigenvalue when checking `C >= 0`.
pub const DEFAULT_PSD_TOL: f64 = 1e-10;

/// Symmetric positive semidefinite interaction matrix `C = (c_ij)` with no
/// zero column.
#[derive(Debug, Clone, PartialEq)]
pub struct InteractionMatrix {
    d: usize,
    entries: Vec<f64>,
    min_eigenvalue: f64,
}

impl InteractionMatrix {
    pub fn new(rows: Vec<Vec<f64>>) -> Result<Self> {
        Self::with_tolerance(rows, DEFAULT_PSD_TOL)
    }

    pub fn with_tolerance(rows: Vec<Vec<f64>>, psd_tol: f64) -> Result<Self> {
        let d = rows.len();
        if d == 0 {
            return Err(Error::Matrix("empty interaction matrix".into()));
        }
        if rows.iter().any(|row| row.len() != d) {
            return Err(Error::Dimension(format!("interaction matrix is not {d}x{d}")));
        }
        let entries: Vec<f64> = rows.into_iter().flatten().collect();
        if entries.iter().any(|c| !c.is_finite()) {
            return Err(Error::Matrix("non-finite entry".into()));
        }
        for i in 0..d {
            for j in 0..i {
                if entries[i * d + j] != entries[j * d + i] {
                    return Err(Error::Matrix(format!("not symmetric at ({i},{j})")));
                }
            }
        }
        for j in 0..d {
            if (0..d).all(|i| entries[i * d + j] == 0.0) {
                return Err(Error::Matrix(format!("column {j} is zero")));
            }
        }
        let min_eigenvalue = min_symmetric_eigenvalue(d, &entries);
        if min_eigenvalue < -psd_tol {
            return Err(Error::Matrix(format!(
                "not positive semidefinite: smallest eigenvalue {min_eigenvalue:.3e}"
            )));
        }
        Ok(Self { d, entries, min_eigenvalue })
    }

    /// `c_ii = 1`, `c_ij = 1/2` for `i != j`.
    pub fn angelesco(d: usize) -> Self {
        let rows = (0..d)
            .map(|i| (0..d).map(|j| if i == j { 1.0 } else { 0.5 }).collect())
            .collect();
        Self::new(rows).expect("Angelesco matrix is positive definite")
    }

    /// `c_ii = 1`, `c_{i,i+-1} = -1/2`, zero elsewhere.
    pub fn nikishin(d: usize) -> Self {
        let rows = (0..d)
            .map(|i| {
                (0..d)
                    .map(|j| match i.abs_diff(j) {
                        0 => 1.0,
                        1 => -0.5,
                        _ => 0.0,
                    })
                    .collect()
            })
            .collect();
        Self::new(rows).expect("Nikishin matrix is positive definite")
    }

    /// The `1x1` matrix `[beta]` of a scalar beta ensemble.
    pub fn beta(beta: f64) -> Result<Self> {
        if !(beta > 0.0) {
            return Err(Error::Matrix(format!("beta must be positive, got {beta}")));
        }
        Self::new(vec![vec![beta]])
    }

    pub fn identity(d: usize) -> Self {
        let rows = (0..d)
            .map(|i| (0..d).map(|j| if i == j { 1.0 } else { 0.0 }).collect())
            .collect();
        Self::new(rows).expect("identity is positive definite")
    }

    pub fn dim(&self) -> usize {
        self.d
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.entries[i * self.d + j]
    }

    pub fn rows(&self) -> Vec<Vec<f64>> {
        self.entries.chunks(self.d).map(|r| r.to_vec()).collect()
    }

    pub fn min_eigenvalue(&self) -> f64 {
        self.min_eigenvalue
    }

    pub fn has_negative_entry(&self) -> bool {
        self.entries.iter().any(|&c| c < 0.0)
    }

    /// `v^T C v`.
    pub fn quadratic_form(&self, v: &[f64]) -> f64 {
        let d = self.d;
        (0..d)
            .map(|i| (0..d).map(|j| v[i] * self.get(i, j) * v[j]).sum::<f64>())
            .sum()
    }

    /// Scaling exponent `B = sum_ij c_ij r_i r_j`.
    pub fn scaling_exponent(&self, r: &MassVector) -> f64 {
        self.quadratic_form(r.as_slice())
    }

    /// Number of pairwise interaction factors weighted by `C`:
    /// `sum_i c_ii m_i (m_i - 1)/2 + sum_{i<j} c_ij m_i m_j`.
    pub fn pair_weight(&self, m: &[usize]) -> f64 {
        let mut total = 0.0;
        for i in 0..self.d {
            let mi = m[i] as f64;
            total += self.get(i, i) * mi * (mi - 1.0) / 2.0;
            for j in (i + 1)..self.d {
                total += self.get(i, j) * mi * m[j] as f64;
            }
        }
        total
    }

    pub(crate) fn to_dmatrix(&self) -> DMatrix<f64> {
        DMatrix::from_row_slice(self.d, self.d, &self.entries)
    }

    pub fn check_dim(&self, d: usize, what: &str) -> Result<()> {
        if self.d != d {
            return Err(Error::Dimension(format!(
                "{what} has {d} components but C is {0}x{0}",
                self.d
            )));
        }
        Ok(())
    }
}

pub(crate) fn min_symmetric_eigenvalue(d: usize, entries: &[f64]) -> f64 {
    let m = DMatrix::from_row_slice(d, d, entries);
    SymmetricEigen::new(m).eigenvalues.iter().copied().fold(f64::INFINITY, f64::min)
}

/// Total masses `r_1, ..., r_d > 0`.
#[derive(Debug, Clone, PartialEq)]
pub struct MassVector(Vec<f64>);

impl MassVector {
    pub fn new(r: Vec<f64>) -> Result<Self> {
        if r.is_empty() {
            return Err(Error::Dimension("empty mass vector".into()));
        }
        if let Some(bad) = r.iter().find(|x| !(**x > 0.0) || !x.is_finite()) {
            return Err(Error::Domain(format!("masses must be positive, got {bad}")));
        }
        Ok(Self(r))
    }

    pub fn ones(d: usize) -> Self {
        Self(vec![1.0; d])
    }

    pub fn dim(&self) -> usize {
        self.0.len()
    }

    pub fn total(&self) -> f64 {
        self.0.iter().sum()
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    #[inline]
    pub fn get(&self, i: usize) -> f64 {
        self.0[i]
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn presets_match_named_ensembles() {
        let a = InteractionMatrix::angelesco(3);
        assert_eq!(a.get(0, 0), 1.0);
        assert_eq!(a.get(0, 2), 0.5);
        let n = InteractionMatrix::nikishin(3);
        assert_eq!(n.get(0, 1), -0.5);
        assert_eq!(n.get(0, 2), 0.0);
        assert!(n.min_eigenvalue() > 0.0);
        assert_eq!(InteractionMatrix::beta(2.0).unwrap().get(0, 0), 2.0);
    }

    #[test]
    fn rejects_invalid_matrices() {
        assert!(matches!(
            InteractionMatrix::new(vec![vec![1.0, 0.3], vec![0.2, 1.0]]),
            Err(Error::Matrix(_))
        ));
        assert!(matches!(
            InteractionMatrix::new(vec![vec![1.0, 2.0], vec![2.0, 1.0]]),
            Err(Error::Matrix(_))
        ));
        assert!(matches!(
            InteractionMatrix::new(vec![vec![1.0, 0.0], vec![0.0, 0.0]]),
            Err(Error::Matrix(_))
        ));
        assert!(matches!(
            InteractionMatrix::new(vec![vec![1.0, 0.0]]),
            Err(Error::Dimension(_))
        ));
        // singular but PSD is fine
        assert!(InteractionMatrix::new(vec![vec![1.0, 1.0], vec![1.0, 1.0]]).is_ok());
    }

    #[test]
    fn scaling_exponent_for_angelesco() {
        let c = InteractionMatrix::angelesco(2);
        assert_eq!(c.scaling_exponent(&MassVector::ones(2)), 3.0);
    }

    #[test]
    fn masses_must_be_positive() {
        assert!(MassVector::new(vec![1.0, 0.0]).is_err());
        assert!(MassVector::new(vec![]).is_err());
        assert_eq!(MassVector::new(vec![2.0, 1.0]).unwrap().total(), 3.0);
    }
}
