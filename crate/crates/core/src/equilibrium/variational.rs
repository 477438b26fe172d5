//! Variational certificate: `U^mu_i + Q_i >= F_i` on `K_i` and
//! `U^mu_i + Q_i <= F_i` on the support of `mu_i`, checked at every node.

use rayon::prelude::*;

use crate::domain::{CompactSetTuple, InteractionMatrix, WeightTuple};
use crate::potential::{kernel_entry, DiscreteVectorMeasure};
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct VariationalOptions {
    pub tol: f64,
    /// Nodes closer than this to a segment end or disc rim are skipped.
    pub endpoint_exclusion: f64,
    /// Support nodes carry weight above `mass_floor * r_i`.
    pub mass_floor: f64,
}

impl Default for VariationalOptions {
    fn default() -> Self {
        Self { tol: 5e-3, endpoint_exclusion: 0.0, mass_floor: 1e-9 }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ComponentResidual {
    /// Robin constant `F_i`: weighted median of `U^mu_i + Q_i` on the support.
    pub robin: f64,
    /// `max (F_i - e_i)_+` over all checked nodes.
    pub residual_lower: f64,
    /// `max (e_i - F_i)_+` over checked support nodes.
    pub residual_support: f64,
    pub support_size: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ResidualReport {
    pub components: Vec<ComponentResidual>,
    pub tol: f64,
    pub passed: bool,
}

impl ResidualReport {
    pub fn max_residual(&self) -> f64 {
        self.components.iter().map(|c| c.residual_lower.max(c.residual_support)).fold(0.0, f64::max)
    }

    pub fn robin_constants(&self) -> Vec<f64> {
        self.components.iter().map(|c| c.robin).collect()
    }

    pub fn write_csv<W: std::io::Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["component", "robin_constant", "residual_lower", "residual_support", "support_nodes", "passed"])?;
        for (i, c) in self.components.iter().enumerate() {
            let ok = c.residual_lower < self.tol && c.residual_support < self.tol;
            w.write_record([
                (i + 1).to_string(),
                format!("{:.17e}", c.robin),
                format!("{:.17e}", c.residual_lower),
                format!("{:.17e}", c.residual_support),
                c.support_size.to_string(),
                ok.to_string(),
            ])?;
        }
        w.flush()?;
        Ok(())
    }
}

pub(crate) fn weighted_median(values: &[(f64, f64)]) -> f64 {
    let mut v: Vec<(f64, f64)> = values.to_vec();
    v.sort_by(|a, b| a.0.total_cmp(&b.0));
    let total: f64 = v.iter().map(|p| p.1).sum();
    let mut acc = 0.0;
    for (x, w) in &v {
        acc += w;
        if acc >= 0.5 * total {
            return *x;
        }
    }
    v.last().map_or(f64::NAN, |p| p.0)
}

/// Residuals from node values `e_i = U^mu_i + Q_i` and weights `w_i`.
pub(crate) fn residuals_from_values(
    k: &CompactSetTuple,
    e: &[Vec<f64>],
    w: &[Vec<f64>],
    masses: &[f64],
    opts: &VariationalOptions,
) -> ResidualReport {
    let components: Vec<ComponentResidual> = (0..k.dim())
        .map(|i| {
            let grid = k.grid(i);
            let floor = opts.mass_floor * masses[i];
            let checked: Vec<bool> = grid
                .nodes
                .iter()
                .map(|&z| opts.endpoint_exclusion <= 0.0 || k.set(i).boundary_distance(z) >= opts.endpoint_exclusion)
                .collect();
            let support: Vec<(f64, f64)> =
                (0..grid.len()).filter(|&l| w[i][l] > floor).map(|l| (e[i][l], w[i][l])).collect();
            let robin = weighted_median(&support);
            let mut lower: f64 = 0.0;
            let mut upper: f64 = 0.0;
            for l in 0..grid.len() {
                if !checked[l] || !e[i][l].is_finite() {
                    continue;
                }
                lower = lower.max(robin - e[i][l]);
                if w[i][l] > floor {
                    upper = upper.max(e[i][l] - robin);
                }
            }
            ComponentResidual { robin, residual_lower: lower, residual_support: upper, support_size: support.len() }
        })
        .collect();
    let passed = components.iter().all(|c| c.residual_lower < opts.tol && c.residual_support < opts.tol);
    ResidualReport { components, tol: opts.tol, passed }
}

/// Partial potentials `U^mu_i` at the nodes of every grid.
pub(crate) fn grid_partial_potentials(
    mu: &DiscreteVectorMeasure,
    c: &InteractionMatrix,
    k: &CompactSetTuple,
) -> Vec<Vec<f64>> {
    (0..k.dim())
        .map(|i| {
            let g = k.grid(i);
            (0..g.len())
                .into_par_iter()
                .map(|l| {
                    let z = g.nodes[l];
                    let mut total = 0.0;
                    for j in 0..k.dim() {
                        let cij = c.get(i, j);
                        if cij == 0.0 {
                            continue;
                        }
                        let comp = mu.component(j);
                        let cells = comp.self_log();
                        let mut s = 0.0;
                        for (m, (&t, &wt)) in comp.nodes().iter().zip(comp.weights()).enumerate() {
                            if wt > 0.0 {
                                s += wt * kernel_entry(z, t, Some(g.self_log[l]), cells.map(|c| c[m]));
                            }
                        }
                        total += cij * s;
                    }
                    total
                })
                .collect()
        })
        .collect()
}

/// Checks the variational inequalities for a measure carried by the grids
/// of `k`.
pub fn verify_variational(
    mu: &DiscreteVectorMeasure,
    c: &InteractionMatrix,
    k: &CompactSetTuple,
    q: &WeightTuple,
    opts: &VariationalOptions,
) -> Result<ResidualReport> {
    c.check_dim(k.dim(), "set tuple")?;
    if mu.dim() != k.dim() {
        return Err(Error::Dimension(format!("measure has {} components, sets {}", mu.dim(), k.dim())));
    }
    for i in 0..k.dim() {
        if mu.component(i).nodes() != k.grid(i).nodes.as_slice() {
            return Err(Error::Dimension(format!("component {} is not carried by the grid of K_{}", i + 1, i + 1)));
        }
    }
    let qv = q.tabulate(k)?;
    let u = grid_partial_potentials(mu, c, k);
    let e: Vec<Vec<f64>> = u.iter().zip(&qv).map(|(u, q)| u.iter().zip(q).map(|(a, b)| a + b).collect()).collect();
    Ok(residuals_from_values(k, &e, &mu.weights(), &mu.masses(), opts))
}
