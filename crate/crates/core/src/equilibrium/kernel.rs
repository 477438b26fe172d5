//! Dense interaction operator `A = (c_ij G_ij)` on the stacked grids.

use rayon::prelude::*;

use crate::domain::{CompactSetTuple, InteractionMatrix};
use crate::potential::kernel_entry;

/// `A[k][l] = c_ij G_ij[k][l]` for node `k` of `K_i` and node `l` of `K_j`,
/// where `G_ij` is the log kernel with cell self-interaction on coincident
/// nodes. Quadratic form `w^T A w` equals `E` of the grid measure `w`.
#[derive(Debug, Clone)]
pub struct KernelOperator {
    offsets: Vec<usize>,
    n: usize,
    a: Vec<f64>,
}

impl KernelOperator {
    pub fn new(c: &InteractionMatrix, k: &CompactSetTuple) -> Self {
        let d = k.dim();
        let mut offsets = vec![0];
        for i in 0..d {
            offsets.push(offsets[i] + k.grid(i).len());
        }
        let n = offsets[d];
        let owner: Vec<(usize, usize)> =
            (0..d).flat_map(|i| (0..k.grid(i).len()).map(move |l| (i, l))).collect();
        let mut a = vec![0.0; n * n];
        a.par_chunks_mut(n).enumerate().for_each(|(row, out)| {
            let (i, kk) = owner[row];
            let gi = k.grid(i);
            let z = gi.nodes[kk];
            for (col, slot) in out.iter_mut().enumerate() {
                let (j, ll) = owner[col];
                let cij = c.get(i, j);
                if cij != 0.0 {
                    let gj = k.grid(j);
                    *slot = cij * kernel_entry(z, gj.nodes[ll], Some(gi.self_log[kk]), Some(gj.self_log[ll]));
                }
            }
        });
        Self { offsets, n, a }
    }

    pub fn len(&self) -> usize {
        self.n
    }

    pub fn is_empty(&self) -> bool {
        self.n == 0
    }

    pub fn dim(&self) -> usize {
        self.offsets.len() - 1
    }

    pub fn range(&self, i: usize) -> std::ops::Range<usize> {
        self.offsets[i]..self.offsets[i + 1]
    }

    pub fn entry(&self, row: usize, col: usize) -> f64 {
        self.a[row * self.n + col]
    }

    /// `A x`: stacked partial potentials of the grid measure `x`.
    pub fn apply(&self, x: &[f64]) -> Vec<f64> {
        let nz: Vec<(usize, f64)> = x.iter().cloned().enumerate().filter(|(_, v)| *v != 0.0).collect();
        self.a
            .par_chunks(self.n)
            .map(|row| nz.iter().map(|&(l, v)| row[l] * v).sum())
            .collect()
    }

    /// Splits a stacked vector into per-component slices.
    pub fn split(&self, x: &[f64]) -> Vec<Vec<f64>> {
        (0..self.dim()).map(|i| x[self.range(i)].to_vec()).collect()
    }

    pub fn stack(&self, parts: &[Vec<f64>]) -> Vec<f64> {
        parts.concat()
    }

    /// Largest eigenvalue magnitude estimate by power iteration.
    pub fn spectral_bound(&self, iterations: usize) -> f64 {
        let mut v = vec![1.0 / (self.n as f64).sqrt(); self.n];
        let mut lambda = 0.0;
        for _ in 0..iterations {
            let w = self.apply(&v);
            let norm = w.iter().map(|x| x * x).sum::<f64>().sqrt();
            if norm == 0.0 {
                return 0.0;
            }
            lambda = norm;
            v = w.into_iter().map(|x| x / norm).collect();
        }
        lambda
    }
}
