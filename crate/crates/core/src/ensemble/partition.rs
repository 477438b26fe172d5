use rayon::prelude::*;

use super::sampler::{chain_rng, sweep_within, Proposals, Region, STREAM_ANNEALING};
use super::spec::{EnsembleSpec, Level, LogSum};
use crate::{Error, Result};

/// Largest configuration space summed exactly.
pub const EXACT_BUDGET: f64 = 1e7;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum PartitionMode {
    /// Exact below the budget, annealed importance sampling above.
    #[default]
    Auto,
    Exact,
    Stochastic,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PartitionOptions {
    pub mode: PartitionMode,
    pub budget: f64,
    /// Independent annealing runs.
    pub particles: usize,
    /// Intermediate inverse temperatures `beta_t = (t / T)^4`.
    pub temperatures: usize,
    /// Rejection attempts per particle when starting inside a region.
    pub max_start_tries: u64,
}

impl Default for PartitionOptions {
    fn default() -> Self {
        Self { mode: PartitionMode::Auto, budget: EXACT_BUDGET, particles: 64, temperatures: 1000, max_start_tries: 100_000 }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PartitionEstimate {
    pub k: usize,
    pub m: Vec<usize>,
    pub log_z: f64,
    /// Standard error of `log_z`; zero in exact mode.
    pub log_z_stderr: f64,
    pub stochastic: bool,
    /// `2 |r|^2 / (|m| (|m| - 1))`.
    pub exponent: f64,
}

impl PartitionEstimate {
    pub fn z(&self) -> f64 {
        self.log_z.exp()
    }

    pub fn z_stderr(&self) -> f64 {
        self.z() * self.log_z_stderr
    }

    /// `Z_k^{|r|^2 / (|m| (|m| - 1))}`.
    /// Equal to 1 for a single point.
    pub fn normalized(&self) -> f64 {
        if self.exponent.is_finite() {
            (0.5 * self.exponent * self.log_z).exp()
        } else {
            1.0
        }
    }

    pub fn normalized_stderr(&self) -> f64 {
        if self.exponent.is_finite() {
            self.normalized() * 0.5 * self.exponent * self.log_z_stderr
        } else {
            0.0
        }
    }
}

/// `Z^Q_k = int |VDM^Q_k|^2 dnu` over ordered grid tuples.
pub fn partition_function(spec: &EnsembleSpec, k: usize, opts: &PartitionOptions) -> Result<PartitionEstimate> {
    partition_level(&spec.level(k)?, opts)
}

pub fn partition_level(level: &Level<'_>, opts: &PartitionOptions) -> Result<PartitionEstimate> {
    let exact = match opts.mode {
        PartitionMode::Exact => true,
        PartitionMode::Stochastic => false,
        PartitionMode::Auto => level.log_state_count() <= opts.budget.ln(),
    };
    let (log_z, log_z_stderr) =
        if exact { (exact_log_z(level, opts.budget)?, 0.0) } else { annealed_log_z(level, opts, None)? };
    Ok(PartitionEstimate {
        k: level.k,
        m: level.m.clone(),
        log_z,
        log_z_stderr,
        stochastic: !exact,
        exponent: level.exponent(),
    })
}

fn exact_log_z(level: &Level<'_>, budget: f64) -> Result<f64> {
    let mut acc = LogSum::new();
    let mut infinite = false;
    level.enumerate(budget, |s, l| {
        infinite |= l == f64::INFINITY;
        acc.add(l + level.log_nu(s));
    })?;
    if infinite {
        return Err(Error::DegenerateConfig("integrand is infinite on coincident points".into()));
    }
    Ok(acc.value())
}

/// Annealed importance sampling from the product of normalized base
/// measures to `Prob_k` along `beta_t = (t / T)^4`. With a region, the
/// start is drawn by rejection and every move stays inside, which
/// estimates the integral over the region.
pub(crate) fn annealed_log_z(level: &Level<'_>, opts: &PartitionOptions, region: Option<Region<'_>>) -> Result<(f64, f64)> {
    if opts.particles < 2 || opts.temperatures == 0 {
        return Err(Error::Domain("annealing needs at least two particles and one temperature".into()));
    }
    let proposals = Proposals::new(level)?;
    let log_mass: f64 = (0..level.dim())
        .map(|i| {
            let usable: f64 = (0..level.grid_len(i)).filter(|&t| level.is_usable(i, t)).map(|t| level.nu_weights(i)[t]).sum();
            level.m[i] as f64 * usable.ln()
        })
        .sum();
    let steps = opts.temperatures;
    let betas: Vec<f64> = (0..=steps).map(|t| (t as f64 / steps as f64).powi(4)).collect();
    let runs: Vec<(f64, u64, bool)> = (0..opts.particles)
        .into_par_iter()
        .map(|p| {
            let mut rng = chain_rng(level.spec.seed, STREAM_ANNEALING, p);
            let mut tries = 1u64;
            let (mut state, mut lw) = proposals.draw_distinct(level, &mut rng);
            if let Some(inside) = region {
                while lw == f64::NEG_INFINITY || !inside(&state) {
                    if tries >= opts.max_start_tries {
                        return (f64::NEG_INFINITY, tries, false);
                    }
                    tries += 1;
                    (state, lw) = proposals.draw_distinct(level, &mut rng);
                }
            }
            for t in 1..=steps {
                let l = level.log_density(&state);
                if l == f64::NEG_INFINITY {
                    return (f64::NEG_INFINITY, tries, true);
                }
                lw += (betas[t] - betas[t - 1]) * l;
                sweep_within(level, &proposals, &mut state, betas[t], &mut rng, region);
            }
            (lw, tries, true)
        })
        .collect();
    let log_w: Vec<f64> = runs.iter().filter(|r| r.2).map(|r| r.0).collect();
    if log_w.iter().any(|w| *w == f64::INFINITY || w.is_nan()) {
        return Err(Error::DegenerateConfig("integrand is infinite on coincident points".into()));
    }
    if log_w.len() < 2 {
        return Err(Error::Statistics("fewer than two annealing runs started inside the region".into()));
    }
    let (log_start, start_se) = if region.is_some() {
        let tries: u64 = runs.iter().map(|r| r.1).sum();
        let p0 = log_w.len() as f64 / tries as f64;
        (p0.ln(), ((1.0 - p0) / log_w.len() as f64).sqrt())
    } else {
        (0.0, 0.0)
    };
    let max = log_w.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if max == f64::NEG_INFINITY {
        return Ok((f64::NEG_INFINITY, f64::INFINITY));
    }
    let w: Vec<f64> = log_w.iter().map(|l| (l - max).exp()).collect();
    let n = w.len() as f64;
    let mean = w.iter().sum::<f64>() / n;
    let var = w.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0);
    let rel = (var / n).sqrt() / mean;
    Ok((log_mass + log_start + max + mean.ln(), rel.hypot(start_se)))
}
