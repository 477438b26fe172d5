use statrs::distribution::{ContinuousCDF, StudentsT};

use super::neighborhood::{ball_log_probability, NeighborhoodSpec};
use super::partition::{partition_level, PartitionEstimate, PartitionOptions};
use super::rate::{ball_rate_bound, BallOptions};
use super::sampler::{sample_level, SamplerOptions};
use super::spec::EnsembleSpec;
use crate::potential::vector_energy;
use crate::{Error, Result};

/// How `sigma_k(G)` is estimated.
#[derive(Debug, Clone, PartialEq, Default)]
pub enum BallEstimator {
    /// Fraction of sampled draws inside `G`.
    #[default]
    Sampling,
    /// Ratio of the annealed ball and full partition functions; reaches
    /// probabilities far below `1 / draws`.
    Annealing(PartitionOptions),
}

#[derive(Debug, Clone, PartialEq)]
pub struct LdpOptions {
    pub draws: usize,
    pub estimator: BallEstimator,
    pub sampler: SamplerOptions,
    /// `None` skips the partition function column.
    pub partition: Option<PartitionOptions>,
    /// Two-sided confidence level of slope intervals.
    pub confidence: f64,
    /// Bracket the infimum of the rate function over each ball.
    pub predict: Option<BallOptions>,
}

impl Default for LdpOptions {
    fn default() -> Self {
        Self {
            draws: 4000,
            estimator: BallEstimator::Sampling,
            sampler: SamplerOptions::default(),
            partition: Some(PartitionOptions::default()),
            confidence: 0.95,
            predict: Some(BallOptions::default()),
        }
    }
}

/// `log sigma_k(G)` with its standard error.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BallFrequency {
    pub log_q: f64,
    pub log_q_stderr: f64,
}

impl BallFrequency {
    fn from_hits(hits: usize, n: usize) -> Self {
        let q = hits as f64 / n as f64;
        let n = n as f64;
        Self { log_q: q.ln(), log_q_stderr: ((1.0 - q + 1.0 / n) / (n * q)).sqrt() }
    }

    pub fn q(&self) -> f64 {
        self.log_q.exp()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ConcentrationRow {
    pub k: usize,
    pub total: usize,
    /// `|m| (|m| - 1) / |r|^2`.
    pub speed: f64,
    pub partition: Option<PartitionEstimate>,
    /// Fraction of draws outside `A_{k, eta}`.
    pub p_k: f64,
    /// `sigma_k(G)` per neighborhood.
    pub q_k: Vec<BallFrequency>,
    pub draws: usize,
}

/// Weighted least-squares fit of `log q_k = a - rate * speed_k`.
#[derive(Debug, Clone, PartialEq)]
pub struct RateFit {
    pub rate: f64,
    pub intercept: f64,
    pub ci_low: f64,
    pub ci_high: f64,
    pub levels_used: usize,
    /// Bracket for the infimum of `I` over the neighborhood.
    pub predicted: Option<(f64, f64)>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ConcentrationReport {
    pub eta: f64,
    /// `delta_Q(K) = exp(-E_Q*)` from the equilibrium solver.
    pub delta_q: f64,
    pub rows: Vec<ConcentrationRow>,
    /// One entry per neighborhood; `Err` text when too few levels hit it.
    pub fits: Vec<std::result::Result<RateFit, String>>,
}

impl ConcentrationReport {
    pub fn write_csv<W: std::io::Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record([
            "k",
            "m_total",
            "z_estimate",
            "z_stderr",
            "p_k",
            "neighborhood",
            "q_k",
            "log_q_k",
            "log_q_k_stderr",
            "fitted_slope",
        ])?;
        for row in &self.rows {
            let (z, se) = row
                .partition
                .as_ref()
                .map(|p| (format!("{:.17e}", p.z()), format!("{:.17e}", p.z_stderr())))
                .unwrap_or_default();
            if row.q_k.is_empty() {
                let mut rec = vec![row.k.to_string(), row.total.to_string(), z.clone(), se.clone(), format!("{:.17e}", row.p_k)];
                rec.resize(10, String::new());
                w.write_record(rec)?;
            }
            for (g, q) in row.q_k.iter().enumerate() {
                let slope = match &self.fits[g] {
                    Ok(fit) => format!("{:.17e}", fit.rate),
                    Err(_) => String::new(),
                };
                w.write_record([
                    row.k.to_string(),
                    row.total.to_string(),
                    z.clone(),
                    se.clone(),
                    format!("{:.17e}", row.p_k),
                    (g + 1).to_string(),
                    format!("{:.17e}", q.q()),
                    format!("{:.17e}", q.log_q),
                    format!("{:.17e}", q.log_q_stderr),
                    slope,
                ])?;
            }
        }
        w.flush()?;
        Ok(())
    }
}

/// Samples `sigma_k` at every level, records the concentration defect
/// `p_k` and the ball frequencies `q_k(G)`, and fits the decay rate of
/// each `q_k(G)` against the speed.
pub fn ldp_concentration_experiment(
    spec: &EnsembleSpec,
    k_range: std::ops::RangeInclusive<usize>,
    eta: f64,
    neighborhoods: &[NeighborhoodSpec],
    opts: &LdpOptions,
) -> Result<ConcentrationReport> {
    if !(eta > 0.0) {
        return Err(Error::Domain(format!("eta must be positive, got {eta}")));
    }
    let eq = spec.equilibrium()?;
    let e_star = vector_energy(&eq.minimizer, &spec.c, Some(&spec.q))?.weighted_energy;
    let delta_q = (-e_star).exp();
    let mut rows = vec![];
    for k in k_range {
        let level = spec.level(k)?;
        let partition = opts.partition.as_ref().map(|p| partition_level(&level, p)).transpose()?;
        let batch = sample_level(&level, opts.draws, &opts.sampler)?;
        let measures = batch.empirical_measures()?;
        let threshold = delta_q - eta;
        let below = batch
            .normalized_values()
            .iter()
            .filter(|&&v| threshold <= 0.0 || v < threshold)
            .count();
        let below = if threshold <= 0.0 { 0 } else { below };
        let n = batch.draws.len();
        let q_k = neighborhoods
            .iter()
            .map(|g| match &opts.estimator {
                BallEstimator::Sampling => {
                    let mut hits = 0usize;
                    for mu in &measures {
                        if g.contains(mu)? {
                            hits += 1;
                        }
                    }
                    Ok(BallFrequency::from_hits(hits, n))
                }
                BallEstimator::Annealing(p) => {
                    let b = ball_log_probability(&level, g, p)?;
                    Ok(BallFrequency { log_q: b.log_sigma, log_q_stderr: b.log_sigma_stderr })
                }
            })
            .collect::<Result<Vec<_>>>()?;
        rows.push(ConcentrationRow {
            k,
            total: level.total(),
            speed: level.speed(),
            partition,
            p_k: below as f64 / n as f64,
            q_k,
            draws: n,
        });
    }
    let mut fits = vec![];
    for (g, ball) in neighborhoods.iter().enumerate() {
        let fit = fit_rate(&rows, g, opts.confidence).map_err(|e| e.to_string());
        let fit = match (fit, &opts.predict) {
            (Ok(mut f), Some(bo)) => {
                let b = ball_rate_bound(spec, ball, bo)?;
                f.predicted = Some((b.lower, b.upper));
                Ok(f)
            }
            (other, _) => other,
        };
        fits.push(fit);
    }
    Ok(ConcentrationReport { eta, delta_q, rows, fits })
}

/// Weighted least squares of `log q` with weights from the standard
/// errors; the residual scale is used when it exceeds the model scale.
pub fn fit_rate(rows: &[ConcentrationRow], g: usize, confidence: f64) -> Result<RateFit> {
    let pts: Vec<(f64, f64, f64)> = rows
        .iter()
        .filter(|r| r.q_k[g].log_q.is_finite())
        .map(|r| {
            let f = r.q_k[g];
            (-r.speed, f.log_q, 1.0 / f.log_q_stderr.powi(2).max(1e-12))
        })
        .collect();
    if pts.len() < 3 {
        return Err(Error::Statistics(format!(
            "neighborhood {} was hit at {} levels; a slope fit needs three",
            g + 1,
            pts.len()
        )));
    }
    let sw: f64 = pts.iter().map(|p| p.2).sum();
    let xm = pts.iter().map(|p| p.2 * p.0).sum::<f64>() / sw;
    let ym = pts.iter().map(|p| p.2 * p.1).sum::<f64>() / sw;
    let sxx: f64 = pts.iter().map(|p| p.2 * (p.0 - xm).powi(2)).sum();
    if sxx <= 0.0 {
        return Err(Error::Statistics("levels share a single speed".into()));
    }
    let sxy: f64 = pts.iter().map(|p| p.2 * (p.0 - xm) * (p.1 - ym)).sum();
    let rate = sxy / sxx;
    let intercept = ym - rate * xm;
    let dof = pts.len() as f64 - 2.0;
    let chi2: f64 = pts.iter().map(|p| p.2 * (p.1 - intercept - rate * p.0).powi(2)).sum();
    let se = ((chi2 / dof).max(1.0) / sxx).sqrt();
    let t = StudentsT::new(0.0, 1.0, dof)
        .map_err(|e| Error::Statistics(e.to_string()))?
        .inverse_cdf(0.5 + 0.5 * confidence);
    Ok(RateFit {
        rate,
        intercept,
        ci_low: rate - t * se,
        ci_high: rate + t * se,
        levels_used: pts.len(),
        predicted: None,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ensemble::spec::tests::scalar;
    use crate::potential::DiscreteVectorMeasure;

    fn row(speed: f64, log_q: f64) -> ConcentrationRow {
        let q_k = vec![BallFrequency { log_q, log_q_stderr: 0.01 }];
        ConcentrationRow { k: 0, total: 0, speed, partition: None, p_k: 0.0, q_k, draws: 1_000_000 }
    }

    #[test]
    fn fit_recovers_an_exact_rate() {
        let rows: Vec<_> = [10.0, 20.0, 40.0, 80.0].iter().map(|&s| row(s, -0.1 - 0.03 * s)).collect();
        let fit = fit_rate(&rows, 0, 0.95).unwrap();
        assert!((fit.rate - 0.03).abs() < 1e-9);
        assert!(fit.ci_low <= fit.rate && fit.rate <= fit.ci_high);
    }

    #[test]
    fn fit_needs_three_levels() {
        let rows = vec![row(10.0, -0.7), row(20.0, f64::NEG_INFINITY), row(30.0, -1.6)];
        assert!(matches!(fit_rate(&rows, 0, 0.95), Err(Error::Statistics(_))));
    }

    #[test]
    fn annealed_and_sampled_frequencies_agree() {
        let spec = scalar(-1.0, 1.0, 40, 1.0, None, 6);
        let center = DiscreteVectorMeasure::uniform(&spec.k, &spec.r).unwrap();
        let g = NeighborhoodSpec::new(center, 0.15).unwrap();
        let sampled = LdpOptions { draws: 4000, partition: None, predict: None, ..Default::default() };
        let annealed = LdpOptions {
            estimator: BallEstimator::Annealing(PartitionOptions { particles: 64, temperatures: 200, ..Default::default() }),
            ..sampled.clone()
        };
        let a = ldp_concentration_experiment(&spec, 4..=6, 0.05, std::slice::from_ref(&g), &sampled).unwrap();
        let b = ldp_concentration_experiment(&spec, 4..=6, 0.05, &[g], &annealed).unwrap();
        for (x, y) in a.rows.iter().zip(&b.rows) {
            let (x, y) = (x.q_k[0], y.q_k[0]);
            let tol = 4.0 * (x.log_q_stderr.powi(2) + y.log_q_stderr.powi(2)).sqrt() + 0.05;
            assert!((x.log_q - y.log_q).abs() < tol, "{x:?} {y:?}");
        }
    }

    #[test]
    fn neighborhood_of_equilibrium_has_zero_rate() {
        let spec = scalar(-1.0, 1.0, 60, 1.0, None, 6);
        let center = DiscreteVectorMeasure::uniform(&spec.k, &spec.r).unwrap();
        let all = NeighborhoodSpec::everything(center);
        let opts = LdpOptions { draws: 400, partition: None, ..Default::default() };
        let rep = ldp_concentration_experiment(&spec, 3..=6, 0.05, &[all], &opts).unwrap();
        assert!(rep.rows.iter().all(|r| r.q_k[0].log_q == 0.0));
        let fit = rep.fits[0].as_ref().unwrap();
        assert!(fit.rate.abs() < 1e-12);
        assert_eq!(fit.predicted, Some((0.0, 0.0)));
        let mut out = vec![];
        rep.write_csv(&mut out).unwrap();
        assert_eq!(String::from_utf8(out).unwrap().lines().count(), 5);
    }
}
