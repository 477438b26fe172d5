//! Minimizer of `E_Q` over grid measures with prescribed masses.
//!
//! The objective `w^T A w + 2 q^T w` is minimized over the product of
//! scaled simplices by a monotone accelerated projected-gradient method
//! with backtracking, optionally followed by an active-set solve of the
//! discrete optimality system.

use nalgebra::{DMatrix, DVector};

use super::kernel::KernelOperator;
use super::variational::{residuals_from_values, ResidualReport, VariationalOptions};
use crate::domain::{CompactSetTuple, InteractionMatrix, MassVector, WeightTuple};
use crate::potential::DiscreteVectorMeasure;
use crate::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct SolverOptions {
    pub variational: VariationalOptions,
    pub max_iter: usize,
    /// Iterations between residual checks.
    pub check_every: usize,
    /// Run the active-set refinement when the gradient phase stops short.
    pub polish: bool,
    pub max_polish_rounds: usize,
    /// Starting weights; defaults to the normalized quadrature measure.
    pub start: Option<Vec<Vec<f64>>>,
}

impl Default for SolverOptions {
    fn default() -> Self {
        Self {
            variational: VariationalOptions::default(),
            max_iter: 20_000,
            check_every: 10,
            polish: true,
            max_polish_rounds: 40,
            start: None,
        }
    }
}

impl SolverOptions {
    pub fn with_tol(mut self, tol: f64) -> Self {
        self.variational.tol = tol;
        self
    }
}

#[derive(Debug, Clone)]
pub struct EquilibriumSolution {
    pub minimizer: DiscreteVectorMeasure,
    pub robin_constants: Vec<f64>,
    pub residuals: ResidualReport,
    /// `E_Q` of the minimizer.
    pub weighted_energy: f64,
    pub iterations: usize,
    pub polish_rounds: usize,
    pub converged: bool,
    /// `E_Q` after every accepted gradient step.
    pub energy_trace: Vec<f64>,
}

/// Problem data shared by the solver phases.
struct Problem<'a> {
    k: &'a CompactSetTuple,
    op: KernelOperator,
    q: Vec<f64>,
    allowed: Vec<bool>,
    masses: Vec<f64>,
}

impl Problem<'_> {
    fn objective(&self, x: &[f64], ax: &[f64]) -> f64 {
        x.iter()
            .zip(ax)
            .zip(&self.q)
            .filter(|((v, _), _)| **v != 0.0)
            .map(|((v, a), q)| v * (a + 2.0 * q))
            .sum()
    }

    fn project(&self, y: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; y.len()];
        for i in 0..self.op.dim() {
            let range = self.op.range(i);
            let idx: Vec<usize> = range.clone().filter(|&l| self.allowed[l]).collect();
            let vals: Vec<f64> = idx.iter().map(|&l| y[l]).collect();
            for (l, v) in idx.iter().zip(project_simplex(&vals, self.masses[i])) {
                out[*l] = v;
            }
        }
        out
    }

    fn report(&self, x: &[f64], ax: &[f64], opts: &VariationalOptions) -> ResidualReport {
        let e: Vec<f64> = ax.iter().zip(&self.q).map(|(a, q)| a + q).collect();
        residuals_from_values(self.k, &self.op.split(&e), &self.op.split(x), &self.masses, opts)
    }
}

/// Euclidean projection onto `{w >= 0, sum w = mass}` by sorting.
pub(crate) fn project_simplex(y: &[f64], mass: f64) -> Vec<f64> {
    let mut sorted = y.to_vec();
    sorted.sort_by(|a, b| b.total_cmp(a));
    let mut acc = 0.0;
    let mut theta = 0.0;
    for (k, v) in sorted.iter().enumerate() {
        acc += v;
        let t = (acc - mass) / (k + 1) as f64;
        if *v - t > 0.0 {
            theta = t;
        }
    }
    y.iter().map(|v| (v - theta).max(0.0)).collect()
}

pub fn solve_equilibrium(
    c: &InteractionMatrix,
    k: &CompactSetTuple,
    q: &WeightTuple,
    r: &MassVector,
    opts: &SolverOptions,
) -> Result<EquilibriumSolution> {
    let d = k.dim();
    c.check_dim(d, "set tuple")?;
    if r.dim() != d {
        return Err(Error::Dimension(format!("{} masses for {d} components", r.dim())));
    }
    if k.grids().iter().any(|g| g.is_empty()) {
        return Err(Error::Geometry("empty grid".into()));
    }
    let qv = q.tabulate(k)?;
    let allowed: Vec<bool> = qv.iter().flatten().map(|v| v.is_finite()).collect();
    let qflat: Vec<f64> = qv.iter().flatten().map(|v| if v.is_finite() { *v } else { 0.0 }).collect();
    let problem = Problem { k, op: KernelOperator::new(c, k), q: qflat, allowed, masses: r.as_slice().to_vec() };
    solve_problem(&problem, opts)
}

fn solve_problem(p: &Problem<'_>, opts: &SolverOptions) -> Result<EquilibriumSolution> {
    let n = p.op.len();
    let start = match &opts.start {
        Some(w) => {
            if w.len() != p.op.dim() || w.iter().enumerate().any(|(i, wi)| wi.len() != p.op.range(i).len()) {
                return Err(Error::Dimension("starting weights do not match the grids".into()));
            }
            p.project(&w.concat())
        }
        None => {
            let mut x = vec![0.0; n];
            for i in 0..p.op.dim() {
                let g = p.k.grid(i);
                let range = p.op.range(i);
                let total: f64 = range.clone().zip(&g.weights).filter(|(l, _)| p.allowed[*l]).map(|(_, w)| w).sum();
                for (l, w) in range.zip(&g.weights) {
                    if p.allowed[l] {
                        x[l] = p.masses[i] * w / total;
                    }
                }
            }
            x
        }
    };

    let mut x = start;
    let mut ax = p.op.apply(&x);
    let mut fx = p.objective(&x, &ax);
    let mut y = x.clone();
    let mut ay = ax.clone();
    let mut t: f64 = 1.0;
    let mut lip = 2.0 * p.op.spectral_bound(30).max(1e-12);
    let mut trace = vec![fx];
    let mut report = p.report(&x, &ax, &opts.variational);
    let mut iterations = 0;

    while !report.passed && iterations < opts.max_iter {
        iterations += 1;
        let fy = p.objective(&y, &ay);
        let grad: Vec<f64> = ay.iter().zip(&p.q).map(|(a, q)| 2.0 * (a + q)).collect();
        let (z, az, fz) = loop {
            let step: Vec<f64> = y.iter().zip(&grad).map(|(v, g)| v - g / lip).collect();
            let z = p.project(&step);
            let az = p.op.apply(&z);
            let fz = p.objective(&z, &az);
            let diff: Vec<f64> = z.iter().zip(&y).map(|(a, b)| a - b).collect();
            let model = fy
                + grad.iter().zip(&diff).map(|(g, d)| g * d).sum::<f64>()
                + 0.5 * lip * diff.iter().map(|d| d * d).sum::<f64>();
            if fz <= model + 1e-12 * fy.abs().max(1.0) || lip > 1e300 {
                break (z, az, fz);
            }
            lip *= 2.0;
        };
        let t_next = 0.5 * (1.0 + (1.0 + 4.0 * t * t).sqrt());
        if fz <= fx {
            let momentum = (t - 1.0) / t_next;
            let (xo, axo) = (std::mem::take(&mut x), std::mem::take(&mut ax));
            y = z.iter().zip(&xo).map(|(a, b)| a + momentum * (a - b)).collect();
            ay = az.iter().zip(&axo).map(|(a, b)| a + momentum * (a - b)).collect();
            x = z;
            ax = az;
            fx = fz;
            t = t_next;
        } else {
            // rejected step: restart momentum from the current iterate
            y = x.clone();
            ay = ax.clone();
            t = 1.0;
        }
        trace.push(fx);
        if iterations % opts.check_every == 0 {
            report = p.report(&x, &ax, &opts.variational);
        }
    }
    report = p.report(&x, &ax, &opts.variational);

    let mut polish_rounds = 0;
    if !report.passed && opts.polish {
        if let Some((xp, rounds)) = active_set_refine(p, &x, opts) {
            polish_rounds = rounds;
            let axp = p.op.apply(&xp);
            let fp = p.objective(&xp, &axp);
            let rp = p.report(&xp, &axp, &opts.variational);
            if fp <= fx + 1e-12 * fx.abs().max(1.0) && rp.max_residual() <= report.max_residual() {
                x = xp;
                fx = fp;
                report = rp;
                trace.push(fx);
            }
        }
    }

    let weights = p.op.split(&x);
    let minimizer =
        DiscreteVectorMeasure::on_grids(p.k, weights, &MassVector::new(p.masses.clone())?).or_else(|_| {
            // renormalize round-off in the last digit
            let w = p
                .op
                .split(&x)
                .into_iter()
                .zip(&p.masses)
                .map(|(wi, m)| {
                    let s: f64 = wi.iter().sum();
                    wi.into_iter().map(|v| v * m / s).collect()
                })
                .collect();
            DiscreteVectorMeasure::on_grids(p.k, w, &MassVector::new(p.masses.clone())?)
        })?;
    Ok(EquilibriumSolution {
        robin_constants: report.robin_constants(),
        converged: report.passed,
        residuals: report,
        minimizer,
        weighted_energy: fx,
        iterations,
        polish_rounds,
        energy_trace: trace,
    })
}

/// Active-set solve of `A_SS w_S + q_S = F_i` on the support, with
/// `sum w = r_i`. Nodes with negative weight leave the support; nodes that
/// violate `e >= F_i` join it.
fn active_set_refine(p: &Problem<'_>, x: &[f64], opts: &SolverOptions) -> Option<(Vec<f64>, usize)> {
    let d = p.op.dim();
    let floor: Vec<f64> = p.masses.iter().map(|m| opts.variational.mass_floor * m).collect();
    let owner: Vec<usize> = (0..d).flat_map(|i| p.op.range(i).map(move |_| i)).collect();
    let mut support: Vec<bool> = x.iter().enumerate().map(|(l, v)| *v > floor[owner[l]]).collect();
    let mut best: Option<Vec<f64>> = None;
    for round in 1..=opts.max_polish_rounds {
        let idx: Vec<usize> = (0..x.len()).filter(|&l| support[l]).collect();
        let s = idx.len();
        let mut m = DMatrix::<f64>::zeros(s + d, s + d);
        let mut rhs = DVector::<f64>::zeros(s + d);
        for (a, &la) in idx.iter().enumerate() {
            for (b, &lb) in idx.iter().enumerate() {
                m[(a, b)] = p.op.entry(la, lb);
            }
            m[(a, s + owner[la])] = -1.0;
            m[(s + owner[la], a)] = 1.0;
            rhs[a] = -p.q[la];
        }
        for i in 0..d {
            rhs[s + i] = p.masses[i];
        }
        let sol = m.lu().solve(&rhs)?;
        let mut w = vec![0.0; x.len()];
        for (a, &l) in idx.iter().enumerate() {
            w[l] = sol[a];
        }
        let negative: Vec<usize> = idx.iter().cloned().filter(|&l| w[l] < 0.0).collect();
        if !negative.is_empty() {
            for l in negative {
                support[l] = false;
            }
            continue;
        }
        let aw = p.op.apply(&w);
        let robin: Vec<f64> = (0..d).map(|i| sol[s + i]).collect();
        let violators: Vec<usize> = (0..x.len())
            .filter(|&l| !support[l] && p.allowed[l] && aw[l] + p.q[l] < robin[owner[l]] - 1e-12)
            .collect();
        best = Some(w);
        if violators.is_empty() {
            return best.map(|b| (b, round));
        }
        for l in violators {
            support[l] = true;
        }
    }
    best.map(|b| (b, opts.max_polish_rounds))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    proptest! {
        #[test]
        fn simplex_projection_is_feasible_and_optimal(
            y in proptest::collection::vec(-3.0f64..3.0, 1..30),
            mass in 0.1f64..4.0,
            probe in proptest::collection::vec(0.0f64..1.0, 30),
        ) {
            let x = project_simplex(&y, mass);
            prop_assert!(x.iter().all(|v| *v >= 0.0));
            prop_assert!((x.iter().sum::<f64>() - mass).abs() < 1e-12 * mass.max(1.0) * y.len() as f64);
            // any feasible point is no closer to y
            let raw: Vec<f64> = probe[..y.len()].to_vec();
            let s: f64 = raw.iter().sum::<f64>() + 1e-9;
            let other: Vec<f64> = raw.iter().map(|v| (v + 1e-9 / y.len() as f64) * mass / s).collect();
            let dist = |a: &[f64]| a.iter().zip(&y).map(|(u, v)| (u - v).powi(2)).sum::<f64>();
            prop_assert!(dist(&x) <= dist(&other) + 1e-9);
        }
    }
}
