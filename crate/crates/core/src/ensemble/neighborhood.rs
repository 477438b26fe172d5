use super::partition::{annealed_log_z, partition_level, PartitionOptions};
use super::sampler::{sample_level, SamplerOptions};
use super::spec::{EnsembleSpec, Level, LogSum};
use crate::fekete::{fekete_optimize, FeketeOptions};
use crate::metric::bl_distance_vector;
use crate::potential::DiscreteVectorMeasure;
use crate::{Error, Result};

/// Open bounded-Lipschitz ball `{mu : sum_i d(mu_i, center_i) < radius}`.
#[derive(Debug, Clone, PartialEq)]
pub struct NeighborhoodSpec {
    pub center: DiscreteVectorMeasure,
    pub radius: f64,
}

impl NeighborhoodSpec {
    pub fn new(center: DiscreteVectorMeasure, radius: f64) -> Result<Self> {
        if !(radius > 0.0) {
            return Err(Error::Domain(format!("ball radius must be positive, got {radius}")));
        }
        Ok(Self { center, radius })
    }

    /// A ball containing all of `M_r(K)`: bounded-Lipschitz distances never
    /// exceed twice the total mass.
    pub fn everything(center: DiscreteVectorMeasure) -> Self {
        let radius = 2.0 * center.masses().iter().sum::<f64>() + 1.0;
        Self { center, radius }
    }

    pub fn distance(&self, mu: &DiscreteVectorMeasure) -> Result<f64> {
        bl_distance_vector(mu, &self.center)
    }

    pub fn contains(&self, mu: &DiscreteVectorMeasure) -> Result<bool> {
        Ok(self.distance(mu)? < self.radius)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct FunctionalOptions {
    pub partition: PartitionOptions,
    pub sampler: SamplerOptions,
    /// Draws used for `sigma_k(G)` in stochastic mode.
    pub draws: usize,
    /// Also test the grid Fekete array as a candidate for `W_k`.
    pub include_fekete: bool,
}

impl Default for FunctionalOptions {
    fn default() -> Self {
        Self {
            partition: PartitionOptions::default(),
            sampler: SamplerOptions::default(),
            draws: 4000,
            include_fekete: true,
        }
    }
}

/// `W_k(G)`, `J_k(G)` and `sigma_k(G)` for the weighted ensemble.
#[derive(Debug, Clone, PartialEq)]
pub struct NeighborhoodFunctionals {
    pub k: usize,
    pub w_k: f64,
    pub j_k: f64,
    pub log_w: f64,
    pub log_j: f64,
    pub sigma: f64,
    pub sigma_stderr: f64,
    /// No configuration of the level has its empirical measure in `G`.
    pub empty: bool,
    pub stochastic: bool,
}

impl NeighborhoodFunctionals {
    fn empty(k: usize, stochastic: bool) -> Self {
        Self {
            k,
            w_k: 0.0,
            j_k: 0.0,
            log_w: f64::NEG_INFINITY,
            log_j: f64::NEG_INFINITY,
            sigma: 0.0,
            sigma_stderr: 0.0,
            empty: true,
            stochastic,
        }
    }
}

/// `W_k(G) = sup |VDM^Q_k|^exponent` and
/// `J_k(G) = (int_{G_k} |VDM^Q_k|^2 dnu)^(exponent / 2)` over configurations
/// whose empirical measure lies in `G`. Exact enumeration below the budget;
/// above it, `J_k ~ (Z_k sigma_k(G))^(exponent / 2)` from draws of
/// `sigma_k` and `W_k` from the best draw (a lower bound for the supremum).
pub fn neighborhood_functionals(
    spec: &EnsembleSpec,
    k: usize,
    g: &NeighborhoodSpec,
    opts: &FunctionalOptions,
) -> Result<NeighborhoodFunctionals> {
    neighborhood_level(&spec.level(k)?, g, opts)
}

pub fn neighborhood_level(level: &Level<'_>, g: &NeighborhoodSpec, opts: &FunctionalOptions) -> Result<NeighborhoodFunctionals> {
    let z = partition_level(level, &opts.partition)?;
    let e = level.exponent();
    if !z.stochastic {
        let mut inside = LogSum::new();
        let mut best = f64::NEG_INFINITY;
        let mut failure = None;
        level.enumerate(opts.partition.budget, |s, l| {
            if failure.is_some() || l == f64::NEG_INFINITY {
                return;
            }
            match level.empirical(s).and_then(|mu| g.contains(&mu)) {
                Ok(true) => {
                    inside.add(l + level.log_nu(s));
                    best = best.max(l);
                }
                Ok(false) => {}
                Err(err) => failure = Some(err),
            }
        })?;
        if let Some(err) = failure {
            return Err(err);
        }
        if best == f64::NEG_INFINITY {
            return Ok(NeighborhoodFunctionals::empty(level.k, false));
        }
        let log_w = 0.5 * e * best;
        let log_j = 0.5 * e * inside.value();
        return Ok(NeighborhoodFunctionals {
            k: level.k,
            w_k: log_w.exp(),
            j_k: log_j.exp(),
            log_w,
            log_j,
            sigma: (inside.value() - z.log_z).exp(),
            sigma_stderr: 0.0,
            empty: false,
            stochastic: false,
        });
    }
    let batch = sample_level(level, opts.draws, &opts.sampler)?;
    let mut hits = 0usize;
    let mut best = f64::NEG_INFINITY;
    for (draw, mu) in batch.draws.iter().zip(batch.empirical_measures()?) {
        if g.contains(&mu)? {
            hits += 1;
            best = best.max(draw.log_density);
        }
    }
    if opts.include_fekete {
        let spec = level.spec;
        let fk = fekete_optimize(&spec.c, &spec.k, &spec.q, &spec.r, &level.m, &FeketeOptions::default())?;
        if g.contains(&fk.empirical_measure)? {
            best = best.max(2.0 * fk.value.log_vdm_weighted);
        }
    }
    if hits == 0 {
        let mut out = NeighborhoodFunctionals::empty(level.k, true);
        if best > f64::NEG_INFINITY {
            out.log_w = 0.5 * e * best;
            out.w_k = out.log_w.exp();
        }
        return Ok(out);
    }
    let n = batch.draws.len() as f64;
    let sigma = hits as f64 / n;
    let log_w = 0.5 * e * best;
    let log_j = 0.5 * e * (z.log_z + sigma.ln());
    Ok(NeighborhoodFunctionals {
        k: level.k,
        w_k: log_w.exp(),
        j_k: log_j.exp(),
        log_w,
        log_j,
        sigma,
        sigma_stderr: (sigma * (1.0 - sigma) / n).sqrt(),
        empty: false,
        stochastic: true,
    })
}

/// `log sigma_k(G) = log Z_k(G) - log Z_k`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BallProbability {
    pub log_sigma: f64,
    pub log_sigma_stderr: f64,
    /// `log int_{G_k} |VDM^Q_k|^2 dnu`.
    pub log_z_ball: f64,
    pub log_z: f64,
}

/// Probability of a ball under `sigma_k` from two partition functions:
/// exact sums below the budget, otherwise annealing with every move
/// constrained to the ball. Reaches probabilities far below what direct
/// sampling resolves.
pub fn ball_log_probability(level: &Level<'_>, g: &NeighborhoodSpec, opts: &PartitionOptions) -> Result<BallProbability> {
    let z = partition_level(level, opts)?;
    let inside = |s: &[Vec<usize>]| level.empirical(s).and_then(|mu| g.contains(&mu)).unwrap_or(false);
    let (log_z_ball, se_ball) = if z.stochastic {
        annealed_log_z(level, opts, Some(&inside))?
    } else {
        let mut acc = LogSum::new();
        level.enumerate(opts.budget, |s, l| {
            if l > f64::NEG_INFINITY && inside(s) {
                acc.add(l + level.log_nu(s));
            }
        })?;
        (acc.value(), 0.0)
    };
    Ok(BallProbability {
        log_sigma: log_z_ball - z.log_z,
        log_sigma_stderr: se_ball.hypot(z.log_z_stderr),
        log_z_ball,
        log_z: z.log_z,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::domain::MassVector;
    use crate::ensemble::spec::tests::{angelesco, scalar};
    use crate::metric::bl_witness;

    fn exact() -> FunctionalOptions {
        FunctionalOptions::default()
    }

    #[test]
    fn whole_space_recovers_partition_function_and_diameter() {
        let spec = scalar(-1.0, 1.0, 40, 1.0, None, 3);
        let level = spec.level(3).unwrap();
        let eq = DiscreteVectorMeasure::uniform(&spec.k, &spec.r).unwrap();
        let f = neighborhood_level(&level, &NeighborhoodSpec::everything(eq), &exact()).unwrap();
        let z = partition_level(&level, &PartitionOptions::default()).unwrap();
        assert!((f.j_k - z.normalized()).abs() < 1e-12 * z.normalized());
        assert!((f.sigma - 1.0).abs() < 1e-12);
        let fk = fekete_optimize(&spec.c, &spec.k, &spec.q, &spec.r, &level.m, &FeketeOptions::default()).unwrap();
        assert!((f.w_k - fk.value.normalized_weighted).abs() < 1e-12);
    }

    #[test]
    fn integral_is_bounded_by_supremum() {
        let spec = angelesco(10);
        for k in 1..=2 {
            let level = spec.level(k).unwrap();
            let center = DiscreteVectorMeasure::uniform(&spec.k, &spec.r).unwrap();
            for radius in [0.05, 0.2, 0.5, 4.0] {
                let g = NeighborhoodSpec::new(center.clone(), radius).unwrap();
                let f = neighborhood_level(&level, &g, &exact()).unwrap();
                if f.empty {
                    assert_eq!((f.w_k, f.j_k), (0.0, 0.0));
                    continue;
                }
                let bound = f.log_w + 0.5 * level.exponent() * level.log_nu_total();
                assert!(f.log_j <= bound + 1e-12, "k {k} radius {radius}");
            }
        }
    }

    #[test]
    fn weight_shift_stays_within_the_oscillation_bound() {
        let weighted = scalar(-1.0, 1.0, 14, 1.0, Some("x"), 4);
        let plain = weighted.without_field();
        let center = DiscreteVectorMeasure::uniform(&weighted.k, &weighted.r).unwrap();
        let radius = 0.3;
        let g = NeighborhoodSpec::new(center.clone(), radius).unwrap();
        let level_q = weighted.level(4).unwrap();
        let level_0 = plain.level(4).unwrap();
        let wq = neighborhood_level(&level_q, &g, &exact()).unwrap();
        let w0 = neighborhood_level(&level_0, &g, &exact()).unwrap();
        assert!(!wq.empty);
        let m = 4.0;
        let alpha = level_q.exponent() * m * m;
        let q_center: f64 = center.component(0).integrate(weighted.field(0));
        let q_bl = 1.0f64;
        let shift = alpha * q_center;
        let slack = alpha * q_bl * radius;
        assert!(wq.log_w <= w0.log_w - shift + slack + 1e-12);
        assert!(wq.log_w >= w0.log_w - shift - slack - 1e-12);
    }

    #[test]
    fn empty_neighborhood_is_flagged() {
        let spec = scalar(-1.0, 1.0, 8, 1.0, None, 2);
        let level = spec.level(2).unwrap();
        let k = crate::domain::CompactSetTuple::intervals(&[(-1.0, 1.0)], 8).unwrap();
        let mut w = vec![0.0; 8];
        w[0] = 1.0;
        let center = DiscreteVectorMeasure::on_grids(&k, vec![w], &MassVector::ones(1)).unwrap();
        let g = NeighborhoodSpec::new(center, 0.01).unwrap();
        let f = neighborhood_level(&level, &g, &exact()).unwrap();
        assert!(f.empty);
        assert_eq!((f.w_k, f.j_k), (0.0, 0.0));
        assert!(NeighborhoodSpec::new(g.center.clone(), 0.0).is_err());
    }

    #[test]
    fn sampled_ball_probability_matches_enumeration() {
        let spec = scalar(-1.0, 1.0, 16, 1.0, None, 3);
        let level = spec.level(3).unwrap();
        let center = DiscreteVectorMeasure::uniform(&spec.k, &spec.r).unwrap();
        let g = NeighborhoodSpec::new(center, 0.2).unwrap();
        let exact = neighborhood_level(&level, &g, &exact()).unwrap();
        let opts = FunctionalOptions {
            partition: PartitionOptions { mode: super::super::PartitionMode::Stochastic, ..Default::default() },
            draws: 8000,
            ..Default::default()
        };
        let sampled = neighborhood_level(&level, &g, &opts).unwrap();
        assert!(sampled.stochastic);
        assert!((sampled.sigma - exact.sigma).abs() < 4.0 * sampled.sigma_stderr + 0.01);
        assert!(sampled.log_w <= exact.log_w + 1e-12);
        let annealed = ball_log_probability(&level, &g, &opts.partition).unwrap();
        assert!((annealed.log_sigma - exact.sigma.ln()).abs() < 0.05 + 4.0 * annealed.log_sigma_stderr);
        let enumerated = ball_log_probability(&level, &g, &PartitionOptions::default()).unwrap();
        assert!((enumerated.log_sigma - exact.sigma.ln()).abs() < 1e-12);
    }

    #[test]
    fn ball_membership_uses_the_summed_distance() {
        let spec = angelesco(20);
        let center = DiscreteVectorMeasure::uniform(&spec.k, &spec.r).unwrap();
        let g = NeighborhoodSpec::new(center.clone(), 0.5).unwrap();
        let level = spec.level(2).unwrap();
        let mu = level.empirical(&[vec![0, 19], vec![0, 19]]).unwrap();
        let d: f64 = (0..2).map(|i| bl_witness(mu.component(i), center.component(i)).unwrap().distance).sum();
        assert!((g.distance(&mu).unwrap() - d).abs() < 1e-12);
    }
}
