//! Bernstein-Markov diagnostics: sup-norm over `L^2(nu)`-norm ratios of
//! weighted polynomials and rational functions on a grid.
//!
//! On a finite grid the largest ratio over a finite-dimensional space is
//! `sqrt(max_x w(x)^2 K(x, x))`, with `K` the reproducing kernel of the
//! space in `L^2(w^2 nu)`; it is computed exactly from orthonormal bases.

mod kernel;

use std::ops::RangeInclusive;

use num_complex::Complex64;
use rand::distr::weighted::WeightedIndex;
use rand::distr::Distribution;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;

use crate::domain::{CompactSetTuple, Grid, Weight};
use crate::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct BmOptions {
    /// Random functions tried per degree and denominator draw.
    pub samples: usize,
    pub seed: u64,
    /// Relative size below which a new Arnoldi direction counts as zero.
    pub rank_tol: f64,
}

impl Default for BmOptions {
    fn default() -> Self {
        Self { samples: 200, seed: 0, rank_tol: 1e-10 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BmPoint {
    pub k: usize,
    /// Numerator degree.
    pub degree: usize,
    /// Poles per denominator.
    pub poles: usize,
    /// Exact grid value of `sup |w f| / ||w f||_{L^2(nu)}` over the family.
    pub m_hat: f64,
    /// `m_hat^{1/k}`, and `m_hat` itself at `k = 0`.
    pub root: f64,
    /// Node where the extremal function peaks.
    pub argmax: Complex64,
    /// Largest ratio among the random functions; never above `m_hat`.
    pub random_max: f64,
    /// `sup / L^1(nu)` ratio of the extremal function.
    pub l1_ratio: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct BmRatioCurve {
    pub points: Vec<BmPoint>,
}

impl BmRatioCurve {
    pub fn root_sequence(&self) -> Vec<f64> {
        self.points.iter().map(|p| p.root).collect()
    }

    pub fn write_csv<W: std::io::Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["k", "M_k", "M_k_root", "degree", "poles", "random_max", "l1_ratio"])?;
        for p in &self.points {
            w.write_record([
                p.k.to_string(),
                format!("{:.17e}", p.m_hat),
                format!("{:.17e}", p.root),
                p.degree.to_string(),
                p.poles.to_string(),
                format!("{:.17e}", p.random_max),
                format!("{:.17e}", p.l1_ratio),
            ])?;
        }
        w.flush()?;
        Ok(())
    }
}

/// Rational functions `p / q` on `K_i` with `deg p <= a k` and the
/// `floor(b k)` zeros of `q` drawn from a measure on the pole set.
#[derive(Debug, Clone, PartialEq)]
pub struct RationalFamilySpec {
    pub component: usize,
    pub a: f64,
    pub b: f64,
    pub poles: Vec<Complex64>,
    /// Sampling weights of the pole nodes.
    pub pole_weights: Vec<f64>,
    /// Denominator draws per degree.
    pub draws: usize,
}

impl RationalFamilySpec {
    /// Pole set `union_{j != i} K_j`, sampled by the grid quadrature weights.
    pub fn from_tuple(k: &CompactSetTuple, component: usize, a: f64, b: f64, draws: usize) -> Result<Self> {
        if component >= k.dim() {
            return Err(Error::Dimension(format!("component {} of a {}-tuple", component + 1, k.dim())));
        }
        let mut poles = vec![];
        let mut weights = vec![];
        for j in (0..k.dim()).filter(|&j| j != component) {
            poles.extend_from_slice(&k.grid(j).nodes);
            weights.extend_from_slice(&k.grid(j).weights);
        }
        Self::with_poles(component, a, b, poles, weights, draws)
    }

    pub fn with_poles(
        component: usize,
        a: f64,
        b: f64,
        poles: Vec<Complex64>,
        pole_weights: Vec<f64>,
        draws: usize,
    ) -> Result<Self> {
        if !(a > 0.0 && a.is_finite()) || !(b >= 0.0 && b.is_finite()) {
            return Err(Error::Domain(format!("degree caps need a > 0 and b >= 0, got a = {a}, b = {b}")));
        }
        if draws == 0 {
            return Err(Error::Domain("at least one denominator draw is needed".into()));
        }
        if poles.len() != pole_weights.len() {
            return Err(Error::Dimension(format!("{} poles with {} weights", poles.len(), pole_weights.len())));
        }
        if b > 0.0 && (poles.is_empty() || !(pole_weights.iter().sum::<f64>() > 0.0)) {
            return Err(Error::Domain("rational family with b > 0 needs a nonempty pole set".into()));
        }
        Ok(Self { component, a, b, poles, pole_weights, draws })
    }

    fn degrees(&self, k: usize) -> (usize, usize) {
        ((self.a * k as f64 + 1e-9).floor() as usize, (self.b * k as f64 + 1e-9).floor() as usize)
    }
}

/// Cell masses of the arcsine distribution of the interval spanned by a
/// grid of real nodes.
pub fn arcsine_measure(grid: &Grid) -> Result<Vec<f64>> {
    if grid.nodes.iter().any(|z| z.im != 0.0) {
        return Err(Error::Geometry("arcsine measure needs real nodes".into()));
    }
    let mut order: Vec<usize> = (0..grid.len()).collect();
    order.sort_by(|&i, &j| grid.nodes[i].re.total_cmp(&grid.nodes[j].re));
    let xs: Vec<f64> = order.iter().map(|&i| grid.nodes[i].re).collect();
    let (lo, hi) = (xs[0], xs[xs.len() - 1]);
    if !(hi > lo) {
        return Err(Error::Geometry("arcsine measure needs an interval of positive length".into()));
    }
    let cdf = |x: f64| (((2.0 * x - lo - hi) / (hi - lo)).clamp(-1.0, 1.0)).asin() / std::f64::consts::PI;
    let mut out = vec![0.0; grid.len()];
    for (p, &i) in order.iter().enumerate() {
        let left = if p == 0 { lo } else { 0.5 * (xs[p - 1] + xs[p]) };
        let right = if p + 1 == xs.len() { hi } else { 0.5 * (xs[p] + xs[p + 1]) };
        out[i] += cdf(right) - cdf(left);
    }
    Ok(out)
}

struct Setup<'a> {
    grid: &'a Grid,
    /// Probability weights of `nu`.
    nu: Vec<f64>,
    /// `Q` at the nodes, zero when unweighted.
    q: Vec<f64>,
}

impl<'a> Setup<'a> {
    fn new(grid: &'a Grid, nu: &[f64], q: Option<&Weight>) -> Result<Self> {
        if nu.len() != grid.len() {
            return Err(Error::Dimension(format!("{} weights for {} nodes", nu.len(), grid.len())));
        }
        if nu.iter().any(|w| !(w.is_finite() && *w >= 0.0)) {
            return Err(Error::Domain("base measure weights must be finite and nonnegative".into()));
        }
        let total: f64 = nu.iter().sum();
        if !(total > 0.0) {
            return Err(Error::Domain("base measure has no mass".into()));
        }
        let q = match q {
            Some(w) => w.on_grid(grid)?,
            None => vec![0.0; grid.len()],
        };
        Ok(Self { grid, nu: nu.iter().map(|w| w / total).collect(), q })
    }

    /// Exact and sampled ratios for numerator degree `degree` and the
    /// multiplier `log w(x) = -k Q(x) - sum log|x - pole|`.
    fn ratio<R: Rng>(&self, k: usize, degree: usize, poles: &[Complex64], samples: usize, rank_tol: f64, rng: &mut R) -> Result<Ratio> {
        let nodes = &self.grid.nodes;
        let log_w: Vec<f64> = nodes
            .iter()
            .zip(&self.q)
            .map(|(x, q)| {
                let field = if k == 0 { 0.0 } else { -(k as f64) * q };
                field - poles.iter().map(|p| (x - p).norm().ln()).sum::<f64>()
            })
            .collect();
        // Shift so the largest multiplier on the support is 1.
        let shift = log_w
            .iter()
            .zip(&self.nu)
            .filter(|(_, m)| **m > 0.0)
            .map(|(l, _)| *l)
            .fold(f64::NEG_INFINITY, f64::max);
        if !shift.is_finite() {
            return Err(Error::Domain("weight vanishes on the support of the base measure".into()));
        }
        let w: Vec<f64> = log_w.iter().map(|l| (l - shift).exp()).collect();
        let (support, mass): (Vec<Complex64>, Vec<f64>) = nodes
            .iter()
            .zip(w.iter().zip(&self.nu))
            .filter(|(_, (wi, m))| **m > 0.0 && **wi > 0.0)
            .map(|(z, (wi, m))| (*z, m * wi * wi))
            .unzip();
        let values = kernel::orthonormal_values(&support, &mass, nodes, degree, rank_tol)?;
        let diag: Vec<f64> = (0..nodes.len()).map(|p| w[p] * w[p] * values.iter().map(|v| v[p].norm_sqr()).sum::<f64>()).collect();
        let (best, kmax) = diag.iter().enumerate().fold((0, f64::NEG_INFINITY), |acc, (p, &v)| if v > acc.1 { (p, v) } else { acc });
        let m_hat = kmax.sqrt();

        let extremal: Vec<f64> = (0..nodes.len())
            .map(|p| w[p] * values.iter().map(|v| v[p] * v[best].conj()).sum::<Complex64>().norm())
            .collect();
        let sup = extremal.iter().cloned().fold(0.0, f64::max);
        let l1: f64 = extremal.iter().zip(&self.nu).map(|(f, m)| f * m).sum();

        let mut random_max: f64 = 0.0;
        for _ in 0..samples {
            let c: Vec<Complex64> = (0..=degree)
                .map(|_| Complex64::new(rng.sample(StandardNormal), rng.sample(StandardNormal)))
                .collect();
            let norm = c.iter().map(|x| x.norm_sqr()).sum::<f64>().sqrt();
            let s = (0..nodes.len())
                .map(|p| w[p] * c.iter().zip(&values).map(|(cj, v)| cj * v[p]).sum::<Complex64>().norm())
                .fold(0.0, f64::max);
            random_max = random_max.max(s / norm);
        }
        Ok(Ratio { m_hat, argmax: nodes[best], random_max, l1_ratio: sup / l1 })
    }
}

struct Ratio {
    m_hat: f64,
    argmax: Complex64,
    random_max: f64,
    l1_ratio: f64,
}

fn point(k: usize, degree: usize, poles: usize, r: Ratio) -> BmPoint {
    let root = if k == 0 { r.m_hat } else { r.m_hat.powf(1.0 / k as f64) };
    BmPoint { k, degree, poles, m_hat: r.m_hat, root, argmax: r.argmax, random_max: r.random_max, l1_ratio: r.l1_ratio }
}

fn degree_rng(seed: u64, k: usize) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(k as u64);
    rng
}

/// Ratios `sup_K |w^k p| / ||w^k p||_{L^2(nu)}` over polynomials of degree
/// at most `k`, with `w = exp(-Q)` when a weight is given. `nu` holds the
/// weights of the base measure on the grid nodes; it is normalized to a
/// probability measure.
pub fn bm_ratio_poly(
    grid: &Grid,
    nu: &[f64],
    q: Option<&Weight>,
    k_range: RangeInclusive<usize>,
    opts: &BmOptions,
) -> Result<BmRatioCurve> {
    let setup = Setup::new(grid, nu, q)?;
    let points = k_range
        .collect::<Vec<_>>()
        .into_par_iter()
        .map(|k| {
            let mut rng = degree_rng(opts.seed, k);
            Ok(point(k, k, 0, setup.ratio(k, k, &[], opts.samples, opts.rank_tol, &mut rng)?))
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(BmRatioCurve { points })
}

/// Rational counterpart of [`bm_ratio_poly`]: for each draw of a
/// denominator the exact ratio over numerators is computed in
/// `L^2(|q|^{-2} nu)`, and the largest value over the draws is kept.
pub fn bm_ratio_rational(
    family: &RationalFamilySpec,
    grid: &Grid,
    nu: &[f64],
    q: Option<&Weight>,
    k_range: RangeInclusive<usize>,
    opts: &BmOptions,
) -> Result<BmRatioCurve> {
    let setup = Setup::new(grid, nu, q)?;
    let gap = family
        .poles
        .iter()
        .flat_map(|p| grid.nodes.iter().map(move |z| (z - p).norm()))
        .fold(f64::INFINITY, f64::min);
    if family.b > 0.0 && !(gap > 0.0) {
        return Err(Error::Domain(format!("pole set meets K_{}", family.component + 1)));
    }
    let sampler = if family.poles.is_empty() { None } else { Some(WeightedIndex::new(&family.pole_weights).map_err(|e| Error::Domain(e.to_string()))?) };
    let points = k_range
        .collect::<Vec<_>>()
        .into_par_iter()
        .map(|k| {
            let (degree, n_poles) = family.degrees(k);
            let mut rng = degree_rng(opts.seed, k);
            let draws = if n_poles == 0 { 1 } else { family.draws };
            let mut best: Option<Ratio> = None;
            let mut random_max: f64 = 0.0;
            for _ in 0..draws {
                let poles: Vec<Complex64> = match &sampler {
                    Some(s) => (0..n_poles).map(|_| family.poles[s.sample(&mut rng)]).collect(),
                    None => vec![],
                };
                let r = setup.ratio(k, degree, &poles, opts.samples, opts.rank_tol, &mut rng)?;
                random_max = random_max.max(r.random_max);
                if best.as_ref().is_none_or(|b| r.m_hat > b.m_hat) {
                    best = Some(r);
                }
            }
            let mut r = best.expect("at least one draw");
            r.random_max = random_max;
            Ok(point(k, degree, n_poles, r))
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(BmRatioCurve { points })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::domain::CompactSet;
    use proptest::prelude::*;

    fn interval(a: f64, b: f64, n: usize) -> Grid {
        CompactSetTuple::intervals(&[(a, b)], n).unwrap().grid(0).clone()
    }

    #[test]
    fn constants_have_unit_ratio() {
        let g = interval(-1.0, 1.0, 101);
        let curve = bm_ratio_poly(&g, &g.weights, None, 0..=0, &BmOptions::default()).unwrap();
        assert!((curve.points[0].m_hat - 1.0).abs() < 1e-12);
        assert!((curve.points[0].l1_ratio - 1.0).abs() < 1e-12);
    }

    #[test]
    fn arcsine_kernel_matches_chebyshev() {
        let g = interval(-1.0, 1.0, 20001);
        let nu = arcsine_measure(&g).unwrap();
        assert!((nu.iter().sum::<f64>() - 1.0).abs() < 1e-12);
        let curve = bm_ratio_poly(&g, &nu, None, 1..=8, &BmOptions { samples: 0, ..Default::default() }).unwrap();
        for p in &curve.points {
            let christoffel = 2.0 * p.k as f64 + 1.0;
            assert!((p.m_hat * p.m_hat / christoffel - 1.0).abs() < 0.02, "k {} {}", p.k, p.m_hat);
            assert_eq!(p.argmax.re.abs(), 1.0);
        }
    }

    #[test]
    fn random_functions_stay_below_the_kernel_value() {
        let g = interval(-1.0, 1.0, 301);
        let nu = arcsine_measure(&g).unwrap();
        let opts = BmOptions { samples: 2000, ..Default::default() };
        let curve = bm_ratio_poly(&g, &nu, Some(&Weight::expr("x^2").unwrap()), 1..=6, &opts).unwrap();
        for p in &curve.points {
            assert!(p.random_max <= p.m_hat * (1.0 + 1e-12));
            assert!(p.random_max > 0.3 * p.m_hat);
            assert!(p.l1_ratio >= p.m_hat * (1.0 - 1e-12));
        }
    }

    #[test]
    fn weighted_roots_decrease_for_the_weight_test_set() {
        let g = interval(-1.0, 1.0, 601);
        let nu = arcsine_measure(&g).unwrap();
        for q in ["0", "x", "x^2", "abs(x)"] {
            let w = Weight::expr(q).unwrap();
            let curve = bm_ratio_poly(&g, &nu, Some(&w), 1..=30, &BmOptions { samples: 0, ..Default::default() }).unwrap();
            let roots = curve.root_sequence();
            assert!(roots[4..].windows(2).all(|w| w[1] < w[0]), "{q}: {roots:?}");
            assert!(roots[29] < 1.1, "{q}: {}", roots[29]);
        }
    }

    #[test]
    fn half_supported_measure_fails_the_root_test() {
        let g = interval(-1.0, 1.0, 401);
        let nu: Vec<f64> = g.nodes.iter().zip(&g.weights).map(|(z, w)| if z.re <= 0.0 { *w } else { 0.0 }).collect();
        let curve = bm_ratio_poly(&g, &nu, None, 5..=15, &BmOptions { samples: 0, ..Default::default() }).unwrap();
        assert!(curve.points.iter().all(|p| p.root > 2f64.sqrt()));
    }

    #[test]
    fn two_atoms_cannot_carry_quadratics() {
        let g = interval(-1.0, 1.0, 11);
        let mut nu = vec![0.0; 11];
        nu[0] = 1.0;
        nu[10] = 1.0;
        assert!(bm_ratio_poly(&g, &nu, None, 0..=1, &BmOptions::default()).is_ok());
        assert!(matches!(bm_ratio_poly(&g, &nu, None, 0..=2, &BmOptions::default()), Err(Error::Rank { .. })));
        let fam = RationalFamilySpec::with_poles(0, 1.0, 1.0, vec![Complex64::new(3.0, 0.0)], vec![1.0], 2).unwrap();
        assert!(matches!(bm_ratio_rational(&fam, &g, &nu, None, 2..=3, &BmOptions::default()), Err(Error::Rank { .. })));
    }

    #[test]
    fn rational_family_without_poles_is_polynomial() {
        let g = interval(-1.0, 1.0, 201);
        let nu = arcsine_measure(&g).unwrap();
        let opts = BmOptions { samples: 20, seed: 9, ..Default::default() };
        let fam = RationalFamilySpec::with_poles(0, 1.0, 0.0, vec![], vec![], 3).unwrap();
        let poly = bm_ratio_poly(&g, &nu, None, 0..=10, &opts).unwrap();
        let rat = bm_ratio_rational(&fam, &g, &nu, None, 0..=10, &opts).unwrap();
        assert_eq!(poly, rat);
    }

    #[test]
    fn external_pole_keeps_the_root_test() {
        let g = interval(-1.0, 1.0, 2001);
        let nu = arcsine_measure(&g).unwrap();
        let fam = RationalFamilySpec::with_poles(0, 1.0, 1.0, vec![Complex64::new(3.0, 0.0)], vec![1.0], 1).unwrap();
        let curve = bm_ratio_rational(&fam, &g, &nu, None, 1..=30, &BmOptions { samples: 0, ..Default::default() }).unwrap();
        let roots = curve.root_sequence();
        assert!(roots[29] < 1.15);
        assert!(roots[29] < roots[9]);
    }

    #[test]
    fn pole_set_from_the_other_components() {
        let sets = vec![CompactSet::interval(-1.0, -0.2).unwrap(), CompactSet::interval(0.2, 1.0).unwrap()];
        let k = CompactSetTuple::new(sets, crate::domain::GridSpec::new(101)).unwrap();
        let fam = RationalFamilySpec::from_tuple(&k, 0, 1.0, 1.0, 4).unwrap();
        assert!(fam.poles.iter().all(|p| p.re >= 0.2));
        let g = k.grid(0);
        let curve = bm_ratio_rational(&fam, g, &g.weights, None, 1..=6, &BmOptions::default()).unwrap();
        assert!(curve.points.iter().all(|p| p.m_hat >= 1.0 && p.poles == p.k));
        let bad = RationalFamilySpec::with_poles(0, 1.0, 1.0, vec![g.nodes[3]], vec![1.0], 1).unwrap();
        assert!(matches!(bm_ratio_rational(&bad, g, &g.weights, None, 1..=2, &BmOptions::default()), Err(Error::Domain(_))));
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(24))]

        #[test]
        fn weight_perturbation_moves_ratios_by_bounded_factors(eps in 0.0f64..0.05, k in 1usize..12, phase in 0.0f64..6.0) {
            let g = interval(-1.0, 1.0, 161);
            let nu = arcsine_measure(&g).unwrap();
            let q = Weight::expr("x^2 / 2").unwrap();
            let shifted = Weight::expr(&format!("x^2 / 2 + {eps} * sin(3 * x + {phase})")).unwrap();
            let opts = BmOptions { samples: 0, ..Default::default() };
            let a = bm_ratio_poly(&g, &nu, Some(&q), k..=k, &opts).unwrap().points[0].m_hat;
            let b = bm_ratio_poly(&g, &nu, Some(&shifted), k..=k, &opts).unwrap().points[0].m_hat;
            let bound = (2.0 * k as f64 * eps).exp();
            prop_assert!(b <= a * bound * (1.0 + 1e-9) && b >= a / bound * (1.0 - 1e-9));
        }
    }
}
