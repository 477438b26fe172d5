use std::sync::OnceLock;

use num_complex::Complex64;

use crate::domain::{
    CompactSetTuple, Configuration, DegreeSchedule, InteractionMatrix, MassVector, Weight, WeightTuple,
};
use crate::equilibrium::{solve_equilibrium, EquilibriumSolution, SolverOptions};
use crate::fekete::normalization_exponent;
use crate::potential::DiscreteVectorMeasure;
use crate::{Error, Result};

/// Base measure `nu = (nu_1, ..., nu_d)` as masses on the grid nodes.
#[derive(Debug, Clone, PartialEq)]
pub struct ReferenceMeasure {
    weights: Vec<Vec<f64>>,
}

impl ReferenceMeasure {
    /// Density 1 against the grid quadrature: length, arclength or area.
    pub fn quadrature(k: &CompactSetTuple) -> Self {
        Self { weights: k.grids().iter().map(|g| g.weights.clone()).collect() }
    }

    /// Density `rho_i` against the grid quadrature.
    pub fn with_density(k: &CompactSetTuple, densities: &[Weight]) -> Result<Self> {
        if densities.len() != k.dim() {
            return Err(Error::Dimension(format!("{} densities for {} components", densities.len(), k.dim())));
        }
        let weights = densities
            .iter()
            .zip(k.grids())
            .map(|(rho, g)| Ok(rho.on_grid(g)?.iter().zip(&g.weights).map(|(a, b)| a * b).collect()))
            .collect::<Result<Vec<Vec<f64>>>>()?;
        Self::from_weights(k, weights)
    }

    pub fn from_weights(k: &CompactSetTuple, weights: Vec<Vec<f64>>) -> Result<Self> {
        if weights.len() != k.dim() {
            return Err(Error::Dimension(format!("{} weight vectors for {} components", weights.len(), k.dim())));
        }
        for (i, (w, g)) in weights.iter().zip(k.grids()).enumerate() {
            if w.len() != g.len() {
                return Err(Error::Dimension(format!(
                    "nu_{} has {} weights on a grid of {} nodes",
                    i + 1,
                    w.len(),
                    g.len()
                )));
            }
            if w.iter().any(|x| !x.is_finite() || *x < 0.0) {
                return Err(Error::Domain(format!("nu_{} has negative or non-finite weights", i + 1)));
            }
            if w.iter().sum::<f64>() <= 0.0 {
                return Err(Error::Domain(format!("nu_{} has zero total mass", i + 1)));
            }
        }
        Ok(Self { weights })
    }

    pub fn dim(&self) -> usize {
        self.weights.len()
    }

    pub fn component(&self, i: usize) -> &[f64] {
        &self.weights[i]
    }

    pub fn total(&self, i: usize) -> f64 {
        self.weights[i].iter().sum()
    }
}

/// Everything that defines `Prob_k`: `C`, `K`, `Q`, `r`, the degree
/// schedule, the base measure `nu` and the seed of all random streams.
#[derive(Debug)]
pub struct EnsembleSpec {
    pub c: InteractionMatrix,
    pub k: CompactSetTuple,
    pub q: WeightTuple,
    pub r: MassVector,
    pub schedule: DegreeSchedule,
    pub nu: ReferenceMeasure,
    pub seed: u64,
    pub solver: SolverOptions,
    q_grid: Vec<Vec<f64>>,
    equilibrium: OnceLock<EquilibriumSolution>,
}

impl Clone for EnsembleSpec {
    fn clone(&self) -> Self {
        let equilibrium = OnceLock::new();
        if let Some(sol) = self.equilibrium.get() {
            let _ = equilibrium.set(sol.clone());
        }
        Self {
            c: self.c.clone(),
            k: self.k.clone(),
            q: self.q.clone(),
            r: self.r.clone(),
            schedule: self.schedule.clone(),
            nu: self.nu.clone(),
            seed: self.seed,
            solver: self.solver.clone(),
            q_grid: self.q_grid.clone(),
            equilibrium,
        }
    }
}

impl EnsembleSpec {
    pub fn new(
        c: InteractionMatrix,
        k: CompactSetTuple,
        q: WeightTuple,
        r: MassVector,
        schedule: DegreeSchedule,
        nu: ReferenceMeasure,
        seed: u64,
    ) -> Result<Self> {
        let d = k.dim();
        c.check_dim(d, "set tuple")?;
        if r.dim() != d || schedule.dim() != d || nu.dim() != d {
            return Err(Error::Dimension(format!(
                "masses {}, schedule {}, base measure {} for {d} components",
                r.dim(),
                schedule.dim(),
                nu.dim()
            )));
        }
        for i in 0..d {
            if nu.component(i).len() != k.grid(i).len() {
                return Err(Error::Dimension(format!("nu_{} does not match the grid of K_{}", i + 1, i + 1)));
            }
        }
        let q_grid = q.tabulate(&k)?;
        Ok(Self {
            c,
            k,
            q,
            r,
            schedule,
            nu,
            seed,
            solver: SolverOptions::default(),
            q_grid,
            equilibrium: OnceLock::new(),
        })
    }

    pub fn with_solver(mut self, solver: SolverOptions) -> Self {
        self.solver = solver;
        self.equilibrium = OnceLock::new();
        self
    }

    /// Same ensemble with `Q = 0`.
    pub fn without_field(&self) -> Self {
        let mut out = self.clone();
        out.q = WeightTuple::zero(self.k.dim());
        out.q_grid = self.k.grids().iter().map(|g| vec![0.0; g.len()]).collect();
        out.equilibrium = OnceLock::new();
        out
    }

    pub fn dim(&self) -> usize {
        self.k.dim()
    }

    /// `Q_i` at the grid nodes.
    pub fn field(&self, i: usize) -> &[f64] {
        &self.q_grid[i]
    }

    /// Equilibrium measure `mu^{K,Q}` on the grids, solved on first use.
    pub fn equilibrium(&self) -> Result<&EquilibriumSolution> {
        if let Some(sol) = self.equilibrium.get() {
            return Ok(sol);
        }
        let sol = solve_equilibrium(&self.c, &self.k, &self.q, &self.r, &self.solver)?;
        if !sol.converged {
            log::warn!("equilibrium solver stopped at residual {:.3e}", sol.residuals.max_residual());
        }
        Ok(self.equilibrium.get_or_init(|| sol))
    }

    /// Degrees `m_k` with precomputed node tables.
    pub fn level(&self, k: usize) -> Result<Level<'_>> {
        let m = self.schedule.get(k)?.to_vec();
        Level::new(self, k, m)
    }

    /// A level with explicit degrees, outside the schedule.
    pub fn level_with(&self, m: Vec<usize>) -> Result<Level<'_>> {
        Level::new(self, 0, m)
    }
}

/// Degree tuple `m_k` of an ensemble together with node tables used by
/// every configuration-space computation. States are node indices per
/// component.
#[derive(Debug, Clone)]
pub struct Level<'a> {
    pub spec: &'a EnsembleSpec,
    pub k: usize,
    pub m: Vec<usize>,
    /// `(m_i / r_i) Q_i` at each node.
    penalty: Vec<Vec<f64>>,
    log_nu: Vec<Vec<f64>>,
    /// `twins[i][j][t]`: node of grid `i` at the position of node `t` of
    /// grid `j`, kept for pairs `i != j` with positive coupling.
    twins: Vec<Vec<Vec<Option<usize>>>>,
}

fn position_key(z: Complex64) -> (u64, u64) {
    ((z.re + 0.0).to_bits(), (z.im + 0.0).to_bits())
}

impl<'a> Level<'a> {
    fn new(spec: &'a EnsembleSpec, k: usize, m: Vec<usize>) -> Result<Self> {
        let d = spec.dim();
        if m.len() != d {
            return Err(Error::Dimension(format!("{} degrees for {d} components", m.len())));
        }
        if m.contains(&0) {
            return Err(Error::Domain("every component needs at least one point".into()));
        }
        let mut penalty = Vec::with_capacity(d);
        let mut log_nu = Vec::with_capacity(d);
        for i in 0..d {
            let scale = m[i] as f64 / spec.r.get(i);
            penalty.push(spec.q_grid[i].iter().map(|q| scale * q).collect::<Vec<f64>>());
            log_nu.push(spec.nu.component(i).iter().map(|w| w.ln()).collect::<Vec<f64>>());
            let usable = (0..spec.k.grid(i).len()).filter(|&t| Self::usable(&penalty[i], &log_nu[i], t)).count();
            if usable == 0 || (spec.c.get(i, i) > 0.0 && usable < m[i]) {
                return Err(Error::Domain(format!(
                    "m_{} = {} points do not fit the {usable} usable nodes of K_{}",
                    i + 1,
                    m[i],
                    i + 1
                )));
            }
        }
        let mut twins = vec![vec![vec![]; d]; d];
        for i in 0..d {
            let index: std::collections::HashMap<(u64, u64), usize> =
                spec.k.grid(i).nodes.iter().enumerate().map(|(t, &z)| (position_key(z), t)).collect();
            for j in 0..d {
                if i != j && spec.c.get(i, j) > 0.0 && spec.k.intersects(i, j) {
                    twins[i][j] = spec.k.grid(j).nodes.iter().map(|&z| index.get(&position_key(z)).copied()).collect();
                }
            }
        }
        Ok(Self { spec, k, m, penalty, log_nu, twins })
    }

    fn usable(penalty: &[f64], log_nu: &[f64], t: usize) -> bool {
        penalty[t].is_finite() && log_nu[t].is_finite()
    }

    pub fn dim(&self) -> usize {
        self.m.len()
    }

    pub fn total(&self) -> usize {
        self.m.iter().sum()
    }

    /// `2 |r|^2 / (|m| (|m| - 1))`.
    pub fn exponent(&self) -> f64 {
        normalization_exponent(&self.spec.r, self.total())
    }

    /// `|m| (|m| - 1) / |r|^2 = 2 / exponent`, the scale on which
    /// `log sigma_k(G)` decays like `-inf_G I`.
    pub fn speed(&self) -> f64 {
        2.0 / self.exponent()
    }

    pub fn grid_len(&self, i: usize) -> usize {
        self.spec.k.grid(i).len()
    }

    pub fn node(&self, i: usize, t: usize) -> Complex64 {
        self.spec.k.grid(i).nodes[t]
    }

    pub fn nu_weights(&self, i: usize) -> &[f64] {
        self.spec.nu.component(i)
    }

    pub(crate) fn is_usable(&self, i: usize, t: usize) -> bool {
        Self::usable(&self.penalty[i], &self.log_nu[i], t)
    }

    /// Nodes of component `i` where a new point would coincide with a point
    /// of a positively coupled component in a partial state.
    pub(crate) fn blocked_nodes(&self, partial: &[Vec<usize>], i: usize) -> Vec<usize> {
        let mut out = vec![];
        for (j, comp) in partial.iter().enumerate() {
            if j == i {
                if self.spec.c.get(i, i) > 0.0 {
                    out.extend_from_slice(comp);
                }
            } else if !self.twins[i][j].is_empty() {
                out.extend(comp.iter().filter_map(|&t| self.twins[i][j][t]));
            }
        }
        out.sort_unstable();
        out.dedup();
        out
    }

    /// `log nu(K^k) = sum_i m_i log nu_i(K_i)`.
    pub fn log_nu_total(&self) -> f64 {
        (0..self.dim()).map(|i| self.m[i] as f64 * self.spec.nu.total(i).ln()).sum()
    }

    /// `log` of the number of ordered node tuples.
    pub fn log_state_count(&self) -> f64 {
        (0..self.dim()).map(|i| self.m[i] as f64 * (self.grid_len(i) as f64).ln()).sum()
    }

    fn pair(&self, i: usize, s: usize, j: usize, t: usize) -> f64 {
        let cij = self.spec.c.get(i, j);
        if cij == 0.0 {
            return 0.0;
        }
        let dist = (self.node(i, s) - self.node(j, t)).norm();
        if dist == 0.0 {
            if cij > 0.0 {
                f64::NEG_INFINITY
            } else {
                f64::INFINITY
            }
        } else {
            cij * dist.ln()
        }
    }

    /// `log |VDM^Q_k|^2` of a state; `-inf` on coincidences with positive
    /// coupling.
    pub fn log_density(&self, state: &[Vec<usize>]) -> f64 {
        let d = self.dim();
        let mut acc = 0.0;
        let mut neg_blocked = false;
        for i in 0..d {
            for (l, &s) in state[i].iter().enumerate() {
                acc -= 2.0 * self.penalty[i][s];
                for &t in &state[i][l + 1..] {
                    let v = self.pair(i, s, i, t);
                    if v == f64::NEG_INFINITY {
                        return v;
                    }
                    neg_blocked |= v == f64::INFINITY;
                    if v.is_finite() {
                        acc += 2.0 * v;
                    }
                }
                for j in (i + 1)..d {
                    for &t in &state[j] {
                        let v = self.pair(i, s, j, t);
                        if v == f64::NEG_INFINITY {
                            return v;
                        }
                        neg_blocked |= v == f64::INFINITY;
                        if v.is_finite() {
                            acc += 2.0 * v;
                        }
                    }
                }
            }
        }
        if neg_blocked {
            f64::INFINITY
        } else {
            acc
        }
    }

    /// Terms of `log |VDM^Q_k|^2` that involve point `l` of component `i`
    /// when that point sits at node `t`.
    pub(crate) fn local(&self, state: &[Vec<usize>], i: usize, l: usize, t: usize) -> f64 {
        let mut acc = -2.0 * self.penalty[i][t];
        let mut neg_blocked = false;
        for (j, comp) in state.iter().enumerate() {
            for (p, &s) in comp.iter().enumerate() {
                if j == i && p == l {
                    continue;
                }
                let v = self.pair(i, t, j, s);
                if v == f64::NEG_INFINITY {
                    return v;
                }
                neg_blocked |= v == f64::INFINITY;
                if v.is_finite() {
                    acc += 2.0 * v;
                }
            }
        }
        if neg_blocked {
            f64::INFINITY
        } else {
            acc
        }
    }

    /// `sum log nu` over the nodes of a state.
    pub fn log_nu(&self, state: &[Vec<usize>]) -> f64 {
        state.iter().enumerate().map(|(i, comp)| comp.iter().map(|&t| self.log_nu[i][t]).sum::<f64>()).sum()
    }

    pub fn configuration(&self, state: &[Vec<usize>]) -> Configuration {
        Configuration::from_points(
            state.iter().enumerate().map(|(i, comp)| comp.iter().map(|&t| self.node(i, t)).collect()).collect(),
        )
    }

    pub fn empirical(&self, state: &[Vec<usize>]) -> Result<DiscreteVectorMeasure> {
        DiscreteVectorMeasure::empirical(&self.configuration(state), &self.spec.r)
    }

    /// Visits every ordered node tuple with its `log |VDM^Q|^2`; refuses
    /// spaces larger than `budget`.
    pub fn enumerate<F: FnMut(&[Vec<usize>], f64)>(&self, budget: f64, mut visit: F) -> Result<()> {
        let count = self.log_state_count().exp();
        if count > budget {
            return Err(Error::Budget(format!(
                "{count:.3e} configurations exceed the exact-enumeration budget {budget:.1e}"
            )));
        }
        let mut state: Vec<Vec<usize>> = self.m.iter().map(|&mi| vec![0; mi]).collect();
        loop {
            visit(&state, self.log_density(&state));
            let mut advanced = false;
            'odometer: for i in (0..self.dim()).rev() {
                let n = self.grid_len(i);
                for l in (0..state[i].len()).rev() {
                    state[i][l] += 1;
                    if state[i][l] < n {
                        advanced = true;
                        break 'odometer;
                    }
                    state[i][l] = 0;
                }
            }
            if !advanced {
                return Ok(());
            }
        }
    }
}

/// Numerically stable running `log sum exp`.
#[derive(Debug, Clone, Copy)]
pub(crate) struct LogSum {
    max: f64,
    scaled: f64,
}

impl LogSum {
    pub(crate) fn new() -> Self {
        Self { max: f64::NEG_INFINITY, scaled: 0.0 }
    }

    pub(crate) fn add(&mut self, x: f64) {
        if x == f64::NEG_INFINITY {
            return;
        }
        if x > self.max {
            self.scaled = self.scaled * (self.max - x).exp() + 1.0;
            self.max = x;
        } else {
            self.scaled += (x - self.max).exp();
        }
    }

    pub(crate) fn value(&self) -> f64 {
        if self.max == f64::NEG_INFINITY {
            f64::NEG_INFINITY
        } else {
            self.max + self.scaled.ln()
        }
    }
}
