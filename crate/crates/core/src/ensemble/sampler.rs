use nalgebra::{DMatrix, DVector};
use rand::distr::weighted::WeightedIndex;
use rand::distr::Distribution;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use super::spec::{EnsembleSpec, Level};
use crate::domain::{CompactSetTuple, Configuration};
use crate::potential::DiscreteVectorMeasure;
use crate::{Error, Result};

/// Stream tags keeping the random sources of different tasks disjoint.
pub(crate) const STREAM_SAMPLER: u64 = 1;
pub(crate) const STREAM_ANNEALING: u64 = 2;

pub(crate) fn chain_rng(seed: u64, tag: u64, chain: usize) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream((tag << 40) | chain as u64);
    rng
}

#[derive(Debug, Clone, PartialEq)]
pub struct SamplerOptions {
    /// Sweeps discarded before the first draw.
    pub burn_in: usize,
    /// Sweeps between consecutive draws.
    pub thin: usize,
    pub chains: usize,
    /// Sweeps per acceptance window; a window without an accepted move
    /// counts as a stall.
    pub mixing_window: usize,
}

impl Default for SamplerOptions {
    fn default() -> Self {
        Self { burn_in: 200, thin: 2, chains: 8, mixing_window: 50 }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ChainDiagnostics {
    pub chain: usize,
    pub sweeps: usize,
    pub proposals: u64,
    pub accepted: u64,
    pub stalled_windows: usize,
}

impl ChainDiagnostics {
    pub fn acceptance_rate(&self) -> f64 {
        if self.proposals == 0 {
            0.0
        } else {
            self.accepted as f64 / self.proposals as f64
        }
    }
}

#[derive(Debug, Clone)]
pub struct Draw {
    pub chain: usize,
    pub node_indices: Vec<Vec<usize>>,
    pub configuration: Configuration,
    /// `log |VDM^Q_k|^2`.
    pub log_density: f64,
}

/// Draws from `Prob_k` restricted to the grid.
#[derive(Debug, Clone)]
pub struct SampleBatch {
    pub k: usize,
    pub m: Vec<usize>,
    pub exponent: f64,
    pub draws: Vec<Draw>,
    pub diagnostics: Vec<ChainDiagnostics>,
    r: crate::domain::MassVector,
}

impl SampleBatch {
    pub fn acceptance_rate(&self) -> f64 {
        let (a, p) = self.diagnostics.iter().fold((0u64, 0u64), |acc, d| (acc.0 + d.accepted, acc.1 + d.proposals));
        if p == 0 {
            0.0
        } else {
            a as f64 / p as f64
        }
    }

    /// [`Error::Mixing`] when some chain had a window without accepted
    /// moves.
    pub fn check_mixing(&self) -> Result<()> {
        let stalled: Vec<usize> = self.diagnostics.iter().filter(|d| d.stalled_windows > 0).map(|d| d.chain).collect();
        if stalled.is_empty() {
            Ok(())
        } else {
            Err(Error::Mixing(format!("chains {stalled:?} had windows with zero acceptance")))
        }
    }

    /// Empirical measure `mu^k` of every draw.
    pub fn empirical_measures(&self) -> Result<Vec<DiscreteVectorMeasure>> {
        self.draws.iter().map(|d| DiscreteVectorMeasure::empirical(&d.configuration, &self.r)).collect()
    }

    /// Average of the empirical measures as weights on the grids of `k`.
    pub fn mean_empirical(&self, k: &CompactSetTuple) -> Result<DiscreteVectorMeasure> {
        if self.draws.is_empty() {
            return Err(Error::Statistics("no draws".into()));
        }
        let mut weights: Vec<Vec<f64>> = k.grids().iter().map(|g| vec![0.0; g.len()]).collect();
        let n = self.draws.len() as f64;
        for draw in &self.draws {
            for (i, comp) in draw.node_indices.iter().enumerate() {
                let w = self.r.get(i) / (comp.len() as f64 * n);
                for &t in comp {
                    weights[i][t] += w;
                }
            }
        }
        DiscreteVectorMeasure::on_grids(k, weights, &self.r)
    }

    /// Normalized weighted value `|VDM^Q_k|^exponent` of every draw.
    pub fn normalized_values(&self) -> Vec<f64> {
        self.draws.iter().map(|d| (0.5 * self.exponent * d.log_density).exp()).collect()
    }

    pub fn write_csv<W: std::io::Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["draw", "chain", "component", "points"])?;
        for (n, draw) in self.draws.iter().enumerate() {
            for (i, comp) in draw.configuration.components().iter().enumerate() {
                let pts: Vec<String> = comp.iter().map(|z| format!("{:.17e}{:+.17e}i", z.re, z.im)).collect();
                w.write_record([n.to_string(), draw.chain.to_string(), (i + 1).to_string(), pts.join(" ")])?;
            }
        }
        w.flush()?;
        Ok(())
    }
}

/// Probability of accepting a move whose local terms go from `old` to
/// `new` at inverse temperature `beta`.
pub(crate) fn acceptance(beta: f64, old: f64, new: f64) -> f64 {
    if beta == 0.0 || new == f64::INFINITY || old == f64::NEG_INFINITY {
        return 1.0;
    }
    if new == f64::NEG_INFINITY || old == f64::INFINITY {
        return 0.0;
    }
    (beta * (new - old)).exp().min(1.0)
}

/// Single-site independence proposals from the normalized base measure.
pub(crate) struct Proposals {
    dists: Vec<WeightedIndex<f64>>,
    node_mass: Vec<Vec<f64>>,
    mass: Vec<f64>,
}

impl Proposals {
    pub(crate) fn new(level: &Level<'_>) -> Result<Self> {
        let node_mass: Vec<Vec<f64>> = (0..level.dim())
            .map(|i| (0..level.grid_len(i)).map(|t| if level.is_usable(i, t) { level.nu_weights(i)[t] } else { 0.0 }).collect())
            .collect();
        let dists = node_mass
            .iter()
            .enumerate()
            .map(|(i, w)| {
                WeightedIndex::new(w).map_err(|e| Error::Domain(format!("base measure of component {}: {e}", i + 1)))
            })
            .collect::<Result<Vec<_>>>()?;
        let mass = node_mass.iter().map(|w| w.iter().sum()).collect();
        Ok(Self { dists, node_mass, mass })
    }

    /// Points placed one at a time from the base measure restricted to
    /// nodes that keep the density positive. Returns the state and the log
    /// of its importance weight against the unrestricted product, the
    /// product of the allowed mass fractions.
    pub(crate) fn draw_distinct<R: Rng>(&self, level: &Level<'_>, rng: &mut R) -> (Vec<Vec<usize>>, f64) {
        let mut state: Vec<Vec<usize>> = vec![vec![]; level.dim()];
        let mut log_w = 0.0;
        for i in 0..level.dim() {
            let total: f64 = self.mass[i];
            for _ in 0..level.m[i] {
                let blocked = level.blocked_nodes(&state, i);
                let blocked_mass: f64 = blocked.iter().map(|&t| self.node_mass[i][t]).sum();
                let allowed = total - blocked_mass;
                if allowed <= 0.0 {
                    return (state, f64::NEG_INFINITY);
                }
                log_w += (allowed / total).ln();
                let mut t = self.dists[i].sample(rng);
                let mut tries = 0;
                while blocked.binary_search(&t).is_ok() {
                    tries += 1;
                    if tries > 1000 {
                        let w: Vec<f64> = (0..self.node_mass[i].len())
                            .map(|u| if blocked.binary_search(&u).is_ok() { 0.0 } else { self.node_mass[i][u] })
                            .collect();
                        t = WeightedIndex::new(w).expect("allowed mass is positive").sample(rng);
                        break;
                    }
                    t = self.dists[i].sample(rng);
                }
                state[i].push(t);
            }
        }
        (state, log_w)
    }
}

/// One systematic sweep over all points at inverse temperature `beta`;
/// returns the number of accepted moves.
pub(crate) fn sweep<R: Rng>(
    level: &Level<'_>,
    proposals: &Proposals,
    state: &mut [Vec<usize>],
    beta: f64,
    rng: &mut R,
) -> u64 {
    sweep_within(level, proposals, state, beta, rng, None)
}

/// Constraint on states; moves leaving it are rejected.
pub(crate) type Region<'r> = &'r (dyn Fn(&[Vec<usize>]) -> bool + Sync);

/// [`sweep`] restricted to a region containing the current state.
pub(crate) fn sweep_within<R: Rng>(
    level: &Level<'_>,
    proposals: &Proposals,
    state: &mut [Vec<usize>],
    beta: f64,
    rng: &mut R,
    region: Option<Region<'_>>,
) -> u64 {
    let mut accepted = 0;
    for i in 0..state.len() {
        for l in 0..state[i].len() {
            let t = proposals.dists[i].sample(rng);
            let s = state[i][l];
            let u: f64 = rng.random();
            if t == s {
                accepted += 1;
                continue;
            }
            let old = level.local(state, i, l, s);
            let new = level.local(state, i, l, t);
            if u < acceptance(beta, old, new) {
                state[i][l] = t;
                if region.is_some_and(|inside| !inside(state)) {
                    state[i][l] = s;
                } else {
                    accepted += 1;
                }
            }
        }
    }
    accepted
}

/// Evenly spread usable nodes, then random repair of degenerate points.
fn initial_state<R: Rng>(level: &Level<'_>, proposals: &Proposals, rng: &mut R) -> Result<Vec<Vec<usize>>> {
    let mut state: Vec<Vec<usize>> = (0..level.dim())
        .map(|i| {
            let usable: Vec<usize> = (0..level.grid_len(i)).filter(|&t| level.is_usable(i, t)).collect();
            let mi = level.m[i];
            (0..mi).map(|l| usable[((2 * l + 1) * usable.len()) / (2 * mi)]).collect()
        })
        .collect();
    for _ in 0..1000 {
        if level.log_density(&state) > f64::NEG_INFINITY {
            return Ok(state);
        }
        for i in 0..state.len() {
            for l in 0..state[i].len() {
                if level.local(&state, i, l, state[i][l]) == f64::NEG_INFINITY {
                    state[i][l] = proposals.dists[i].sample(rng);
                }
            }
        }
    }
    Err(Error::DegenerateConfig("no configuration with positive density found".into()))
}

/// Metropolis-within-sweep sampling of `Prob_k` on the grid: each point in
/// turn is proposed at a `nu`-distributed node of its component and
/// accepted with probability `min(1, |VDM^Q_k(new)|^2 / |VDM^Q_k(old)|^2)`.
/// Chains run in parallel on disjoint streams derived from the seed.
pub fn sample_prob_k(spec: &EnsembleSpec, k: usize, n_draws: usize, opts: &SamplerOptions) -> Result<SampleBatch> {
    let level = spec.level(k)?;
    sample_level(&level, n_draws, opts)
}

/// [`sample_prob_k`] at a given level.
pub fn sample_level(level: &Level<'_>, n_draws: usize, opts: &SamplerOptions) -> Result<SampleBatch> {
    if opts.chains == 0 || opts.thin == 0 {
        return Err(Error::Domain("sampler needs at least one chain and thinning >= 1".into()));
    }
    let proposals = Proposals::new(level)?;
    let chains = opts.chains.min(n_draws.max(1));
    let results = (0..chains)
        .into_par_iter()
        .map(|chain| {
            let quota = n_draws / chains + usize::from(chain < n_draws % chains);
            run_chain(level, &proposals, chain, quota, opts)
        })
        .collect::<Result<Vec<_>>>()?;
    let mut draws = vec![];
    let mut diagnostics = vec![];
    for (d, diag) in results {
        draws.extend(d);
        diagnostics.push(diag);
    }
    let batch = SampleBatch {
        k: level.k,
        m: level.m.clone(),
        exponent: level.exponent(),
        draws,
        diagnostics,
        r: level.spec.r.clone(),
    };
    if let Err(e) = batch.check_mixing() {
        log::warn!("{e}");
    }
    Ok(batch)
}

fn run_chain(
    level: &Level<'_>,
    proposals: &Proposals,
    chain: usize,
    quota: usize,
    opts: &SamplerOptions,
) -> Result<(Vec<Draw>, ChainDiagnostics)> {
    let mut rng = chain_rng(level.spec.seed, STREAM_SAMPLER, chain);
    let mut state = initial_state(level, proposals, &mut rng)?;
    let total_sweeps = opts.burn_in + quota * opts.thin;
    let per_sweep = level.total() as u64;
    let mut diag = ChainDiagnostics { chain, sweeps: total_sweeps, proposals: 0, accepted: 0, stalled_windows: 0 };
    let mut draws = Vec::with_capacity(quota);
    let mut window_accepted = 0;
    for s in 1..=total_sweeps {
        let acc = sweep(level, proposals, &mut state, 1.0, &mut rng);
        diag.proposals += per_sweep;
        diag.accepted += acc;
        window_accepted += acc;
        if opts.mixing_window > 0 && s % opts.mixing_window == 0 {
            if window_accepted == 0 {
                diag.stalled_windows += 1;
            }
            window_accepted = 0;
        }
        if s > opts.burn_in && (s - opts.burn_in).is_multiple_of(opts.thin) {
            draws.push(Draw {
                chain,
                node_indices: state.clone(),
                configuration: level.configuration(&state),
                log_density: level.log_density(&state),
            });
        }
    }
    Ok((draws, diag))
}

/// Exact enumeration of `Prob_k` on the grid.
#[derive(Debug, Clone)]
pub struct EnumeratedEnsemble {
    pub states: Vec<Vec<Vec<usize>>>,
    pub probabilities: Vec<f64>,
}

impl EnumeratedEnsemble {
    pub fn new(level: &Level<'_>, budget: f64) -> Result<Self> {
        let mut states = vec![];
        let mut logs = vec![];
        level.enumerate(budget, |s, l| {
            states.push(s.to_vec());
            logs.push(l + level.log_nu(s));
        })?;
        if logs.contains(&f64::INFINITY) {
            return Err(Error::DegenerateConfig("configurations with infinite density".into()));
        }
        let max = logs.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        if max == f64::NEG_INFINITY {
            return Err(Error::DegenerateConfig("every configuration has zero density".into()));
        }
        let mut probabilities: Vec<f64> = logs.iter().map(|l| (l - max).exp()).collect();
        let total: f64 = probabilities.iter().sum();
        probabilities.iter_mut().for_each(|p| *p /= total);
        Ok(Self { states, probabilities })
    }

    pub fn index_of(&self, state: &[Vec<usize>]) -> Option<usize> {
        self.states.iter().position(|s| s == state)
    }

    /// Total variation distance to a distribution over the same states.
    pub fn total_variation(&self, other: &[f64]) -> f64 {
        0.5 * self.probabilities.iter().zip(other).map(|(a, b)| (a - b).abs()).sum::<f64>()
    }
}

/// Transition matrix of one full sweep of the sampler over the enumerated
/// states; rows sum to one.
pub fn sweep_transition_matrix(level: &Level<'_>, ensemble: &EnumeratedEnsemble) -> Result<DMatrix<f64>> {
    let n = ensemble.states.len();
    let probs: Vec<Vec<f64>> = (0..level.dim())
        .map(|i| {
            let w: Vec<f64> =
                (0..level.grid_len(i)).map(|t| if level.is_usable(i, t) { level.nu_weights(i)[t] } else { 0.0 }).collect();
            let total: f64 = w.iter().sum();
            w.into_iter().map(|x| x / total).collect()
        })
        .collect();
    let mut sweep_matrix = DMatrix::<f64>::identity(n, n);
    for i in 0..level.dim() {
        for l in 0..level.m[i] {
            let mut site = DMatrix::<f64>::zeros(n, n);
            for (a, state) in ensemble.states.iter().enumerate() {
                let s = state[i][l];
                let old = level.local(state, i, l, s);
                let mut stay = 0.0;
                for (t, &pt) in probs[i].iter().enumerate() {
                    if pt == 0.0 {
                        continue;
                    }
                    if t == s {
                        stay += pt;
                        continue;
                    }
                    let new = level.local(state, i, l, t);
                    let acc = acceptance(1.0, old, new);
                    let mut next = state.clone();
                    next[i][l] = t;
                    let b = ensemble.index_of(&next).ok_or_else(|| Error::Domain("state outside enumeration".into()))?;
                    site[(a, b)] += pt * acc;
                    stay += pt * (1.0 - acc);
                }
                site[(a, a)] += stay;
            }
            sweep_matrix *= site;
        }
    }
    Ok(sweep_matrix)
}

/// Stationary row vector of a stochastic matrix.
pub fn stationary_distribution(p: &DMatrix<f64>) -> Result<Vec<f64>> {
    let n = p.nrows();
    let mut a = p.transpose() - DMatrix::<f64>::identity(n, n);
    for j in 0..n {
        a[(n - 1, j)] = 1.0;
    }
    let mut b = DVector::<f64>::zeros(n);
    b[n - 1] = 1.0;
    let x = a.lu().solve(&b).ok_or_else(|| Error::Domain("transition matrix has no unique stationary vector".into()))?;
    Ok(x.iter().copied().collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ensemble::spec::tests::{angelesco, scalar};
    use crate::ensemble::spec::ReferenceMeasure;
    use statrs::distribution::{ChiSquared, ContinuousCDF};

    #[test]
    fn single_point_draws_follow_the_base_measure() {
        let spec = scalar(0.0, 1.0, 200, 1.0, None, 1);
        let opts = SamplerOptions { burn_in: 10, thin: 1, chains: 4, mixing_window: 50 };
        let batch = sample_prob_k(&spec, 1, 5000, &opts).unwrap();
        let mut counts = [0usize; 20];
        for d in &batch.draws {
            counts[d.node_indices[0][0] * 20 / 200] += 1;
        }
        let nu = spec.nu.component(0);
        let total: f64 = nu.iter().sum();
        let mut chi2 = 0.0;
        for (b, &c) in counts.iter().enumerate() {
            let expected = 5000.0 * nu[b * 10..(b + 1) * 10].iter().sum::<f64>() / total;
            chi2 += (c as f64 - expected).powi(2) / expected;
        }
        let p = 1.0 - ChiSquared::new(19.0).unwrap().cdf(chi2);
        assert!(p > 0.01, "chi-square p-value {p}");
    }

    #[test]
    fn sweep_kernel_preserves_the_gibbs_measure() {
        let spec = scalar(0.0, 1.0, 3, 1.0, Some("x"), 2);
        let level = spec.level(2).unwrap();
        let ens = EnumeratedEnsemble::new(&level, 1e3).unwrap();
        assert_eq!(ens.states.len(), 9);
        let p = sweep_transition_matrix(&level, &ens).unwrap();
        for row in p.row_iter() {
            assert!((row.sum() - 1.0).abs() < 1e-12);
        }
        let pi = stationary_distribution(&p).unwrap();
        assert!(ens.total_variation(&pi) < 1e-12);
    }

    #[test]
    fn two_component_kernel_preserves_the_gibbs_measure() {
        let spec = angelesco(4);
        let level = spec.level(2).unwrap();
        let ens = EnumeratedEnsemble::new(&level, 1e3).unwrap();
        let p = sweep_transition_matrix(&level, &ens).unwrap();
        let pi = DVector::from_vec(ens.probabilities.clone());
        let moved = p.transpose() * &pi;
        assert!((moved - pi).amax() < 1e-12);
    }

    #[test]
    fn draws_do_not_depend_on_thread_count() {
        let spec = angelesco(50);
        let opts = SamplerOptions { burn_in: 20, thin: 1, chains: 3, mixing_window: 10 };
        let run = |threads| {
            rayon::ThreadPoolBuilder::new()
                .num_threads(threads)
                .build()
                .unwrap()
                .install(|| sample_prob_k(&spec, 3, 30, &opts).unwrap())
        };
        let a = run(1);
        let b = run(4);
        let idx = |s: &SampleBatch| s.draws.iter().map(|d| d.node_indices.clone()).collect::<Vec<_>>();
        assert_eq!(idx(&a), idx(&b));
        assert_eq!(a.draws.len(), 30);
    }

    #[test]
    fn draws_respect_membership_and_sizes() {
        let spec = angelesco(60);
        let batch = sample_prob_k(&spec, 3, 40, &SamplerOptions::default()).unwrap();
        for d in &batch.draws {
            assert_eq!(d.configuration.sizes(), vec![3, 3]);
            assert!(Configuration::new(d.configuration.components().to_vec(), &spec.k).is_ok());
            assert!(d.log_density.is_finite());
        }
        assert!(batch.acceptance_rate() > 0.0);
        batch.check_mixing().unwrap();
        let mean = batch.mean_empirical(&spec.k).unwrap();
        assert!((mean.masses()[0] - 1.0).abs() < 1e-12);
    }

    #[test]
    fn region_constrained_sweeps_stay_inside() {
        let spec = scalar(-1.0, 1.0, 30, 1.0, None, 3);
        let level = spec.level(3).unwrap();
        let proposals = Proposals::new(&level).unwrap();
        let inside = |s: &[Vec<usize>]| s[0].iter().all(|&t| t < 15);
        let mut state = vec![vec![1, 5, 9]];
        let mut rng = chain_rng(1, 9, 0);
        for _ in 0..200 {
            sweep_within(&level, &proposals, &mut state, 1.0, &mut rng, Some(&inside));
            assert!(inside(&state));
        }
    }

    #[test]
    fn distinct_starts_avoid_coincidences() {
        let mut spec = scalar(0.0, 1.0, 12, 1.0, None, 10);
        spec.nu = ReferenceMeasure::from_weights(&spec.k, vec![vec![0.5; 12]]).unwrap();
        let level = spec.level(10).unwrap();
        let proposals = Proposals::new(&level).unwrap();
        let mut rng = chain_rng(3, 9, 0);
        for _ in 0..50 {
            let (state, lw) = proposals.draw_distinct(&level, &mut rng);
            assert!(level.log_density(&state).is_finite());
            let exact: f64 = (0..10).map(|j| ((12 - j) as f64 / 12.0).ln()).sum();
            assert!((lw - exact).abs() < 1e-9);
        }
    }
}
