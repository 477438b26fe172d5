//! Orthonormal polynomials of a discrete measure by Arnoldi iteration,
//! evaluated off the support through the Hessenberg recurrence.

use num_complex::Complex64;

use crate::{Error, Result};

/// Values `q_j(x)` for `j = 0..=degree` at every evaluation point, where
/// `q_j` are orthonormal in `L^2(sum_l mass_l delta_{z_l})`.
pub(crate) fn orthonormal_values(
    support: &[Complex64],
    mass: &[f64],
    eval: &[Complex64],
    degree: usize,
    rank_tol: f64,
) -> Result<Vec<Vec<Complex64>>> {
    let root: Vec<f64> = mass.iter().map(|m| m.sqrt()).collect();
    let norm0 = root.iter().map(|r| r * r).sum::<f64>().sqrt();
    if !(norm0 > 0.0) {
        return Err(Error::Rank { degree: 0, detail: "measure has no mass".into() });
    }
    let mut basis: Vec<Vec<Complex64>> = vec![root.iter().map(|r| Complex64::new(r / norm0, 0.0)).collect()];
    let mut values: Vec<Vec<Complex64>> = vec![vec![Complex64::new(1.0 / norm0, 0.0); eval.len()]];
    for j in 0..degree {
        let mut w: Vec<Complex64> = basis[j].iter().zip(support).map(|(v, z)| v * z).collect();
        let scale = w.iter().map(|x| x.norm_sqr()).sum::<f64>().sqrt();
        let mut h = vec![Complex64::new(0.0, 0.0); j + 1];
        for _ in 0..2 {
            for (i, v) in basis.iter().enumerate() {
                let c: Complex64 = v.iter().zip(&w).map(|(a, b)| a.conj() * b).sum();
                h[i] += c;
                w.iter_mut().zip(v).for_each(|(x, a)| *x -= c * a);
            }
        }
        let sub = w.iter().map(|x| x.norm_sqr()).sum::<f64>().sqrt();
        if !(sub > rank_tol * scale) || sub == 0.0 {
            return Err(Error::Rank {
                degree: j + 1,
                detail: format!("{} support points cannot separate degree {} polynomials", support.len(), j + 1),
            });
        }
        basis.push(w.iter().map(|x| x / sub).collect());
        let next: Vec<Complex64> = eval
            .iter()
            .enumerate()
            .map(|(p, x)| {
                let mut acc = x * values[j][p];
                for (i, hi) in h.iter().enumerate() {
                    acc -= hi * values[i][p];
                }
                acc / sub
            })
            .collect();
        values.push(next);
    }
    Ok(values)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn real(xs: &[f64]) -> Vec<Complex64> {
        xs.iter().map(|&x| Complex64::new(x, 0.0)).collect()
    }

    #[test]
    fn legendre_type_orthonormality() {
        let n = 200;
        let z: Vec<Complex64> = (0..n).map(|l| Complex64::new(-1.0 + 2.0 * (l as f64 + 0.5) / n as f64, 0.0)).collect();
        let mass = vec![1.0 / n as f64; n];
        let q = orthonormal_values(&z, &mass, &z, 6, 1e-10).unwrap();
        for a in 0..=6 {
            for b in 0..=6 {
                let ip: Complex64 = (0..n).map(|l| q[a][l].conj() * q[b][l] * mass[l]).sum();
                let expected = if a == b { 1.0 } else { 0.0 };
                assert!((ip - expected).norm() < 1e-10);
            }
        }
    }

    #[test]
    fn recurrence_matches_direct_values_off_support() {
        let z = real(&[0.0, 0.5, 1.0]);
        let mass = vec![1.0 / 3.0; 3];
        let x = real(&[2.0]);
        let q = orthonormal_values(&z, &mass, &x, 1, 1e-10).unwrap();
        // q_1 = (x - 1/2) / sd with sd^2 = 1/6.
        assert!((q[1][0].norm() - 1.5 * 6f64.sqrt()).abs() < 1e-12);
    }

    #[test]
    fn two_atoms_have_rank_two() {
        let z = real(&[-1.0, 1.0]);
        let err = orthonormal_values(&z, &[0.5, 0.5], &z, 2, 1e-10);
        assert!(matches!(err, Err(Error::Rank { degree: 2, .. })));
    }
}
