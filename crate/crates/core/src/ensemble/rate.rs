use super::neighborhood::NeighborhoodSpec;
use super::spec::EnsembleSpec;
use crate::domain::{Weight, WeightTuple};
use crate::equilibrium::solve_equilibrium;
use crate::metric::bl_witness;
use crate::potential::{vector_energy, DiscreteVectorMeasure};
use crate::{Error, Result};

/// Negative rates down to `-RATE_CLAMP_TOL` are reported as zero.
pub const RATE_CLAMP_TOL: f64 = 1e-4;

/// `I(mu) = E_Q(mu) - E_Q(mu^{K,Q})`, with the equilibrium solved once per
/// spec.
pub fn rate_function(mu: &DiscreteVectorMeasure, spec: &EnsembleSpec) -> Result<f64> {
    if mu.dim() != spec.dim() {
        return Err(Error::Dimension(format!("{} components for a {}-component ensemble", mu.dim(), spec.dim())));
    }
    for (i, (mass, ri)) in mu.masses().iter().zip(spec.r.as_slice()).enumerate() {
        if (mass - ri).abs() > 1e-9 * ri.max(1.0) {
            return Err(Error::Dimension(format!("component {} has mass {mass}, expected {ri}", i + 1)));
        }
    }
    let e_star = equilibrium_energy(spec)?;
    let e = vector_energy(mu, &spec.c, Some(&spec.q))?.weighted_energy;
    let rate = e - e_star;
    if (-RATE_CLAMP_TOL..0.0).contains(&rate) {
        Ok(0.0)
    } else {
        if rate < 0.0 {
            log::warn!("rate {rate:.3e} below the clamp tolerance: equilibrium not fully resolved");
        }
        Ok(rate)
    }
}

fn equilibrium_energy(spec: &EnsembleSpec) -> Result<f64> {
    let eq = spec.equilibrium()?;
    Ok(vector_energy(&eq.minimizer, &spec.c, Some(&spec.q))?.weighted_energy)
}

#[derive(Debug, Clone, PartialEq)]
pub struct BallOptions {
    /// Rounds of conditional-gradient updates of the test function.
    pub rounds: usize,
    /// Golden-section steps per round.
    pub line_steps: usize,
}

impl Default for BallOptions {
    fn default() -> Self {
        Self { rounds: 8, line_steps: 14 }
    }
}

/// Bracket `[lower, upper]` for `inf { I(mu) : mu in G }` over grid measures.
#[derive(Debug, Clone)]
pub struct BallRateBound {
    pub lower: f64,
    pub upper: f64,
    /// Feasible measure attaining `upper`.
    pub minimizer: DiscreteVectorMeasure,
    pub lambda: f64,
}

impl BallRateBound {
    pub fn estimate(&self) -> f64 {
        0.5 * (self.lower + self.upper)
    }
}

struct Ball<'a> {
    spec: &'a EnsembleSpec,
    ball: &'a NeighborhoodSpec,
    center: Vec<Vec<f64>>,
    e_star: f64,
}

struct Probe {
    dual: f64,
    measure: DiscreteVectorMeasure,
}

impl Ball<'_> {
    fn energy(&self, w: &[Vec<f64>]) -> Result<(f64, DiscreteVectorMeasure)> {
        let mu = DiscreteVectorMeasure::on_grids(&self.spec.k, w.to_vec(), &self.spec.r)?;
        Ok((vector_energy(&mu, &self.spec.c, Some(&self.spec.q))?.weighted_energy - self.e_star, mu))
    }

    /// Moves `mu` toward the center just enough to enter the ball; the
    /// distance scales linearly along the segment.
    fn feasible(&self, mu: &DiscreteVectorMeasure) -> Result<(f64, DiscreteVectorMeasure)> {
        let d = self.ball.distance(mu)?;
        let t = if d <= self.ball.radius { 0.0 } else { 1.0 - self.ball.radius * (1.0 - 1e-9) / d };
        let w: Vec<Vec<f64>> = mu
            .weights()
            .iter()
            .zip(&self.center)
            .map(|(a, b)| a.iter().zip(b).map(|(x, y)| (1.0 - t) * x + t * y).collect())
            .collect();
        self.energy(&w)
    }

    /// Lagrangian lower bound for the multiplier `lambda` and test functions
    /// `f`, and the minimizer of the tilted problem.
    fn probe(&self, f: &[Vec<f64>], lambda: f64) -> Result<Probe> {
        let spec = self.spec;
        let weights = (0..spec.dim())
            .map(|i| {
                let grid = spec.k.grid(i);
                let values = spec.field(i).iter().zip(&f[i]).map(|(q, fi)| q + lambda * fi).collect();
                Weight::tabulated(grid.nodes.clone(), values)
            })
            .collect::<Result<Vec<_>>>()?;
        let sol = solve_equilibrium(&spec.c, &spec.k, &WeightTuple::new(weights), &spec.r, &spec.solver)?;
        let f_center: f64 = (0..spec.dim()).map(|i| self.center[i].iter().zip(&f[i]).map(|(a, b)| a * b).sum::<f64>()).sum();
        let dual = sol.weighted_energy - 2.0 * lambda * (f_center + self.ball.radius) - self.e_star;
        Ok(Probe { dual, measure: sol.minimizer })
    }

    fn witness(&self, mu: &DiscreteVectorMeasure) -> Result<Vec<Vec<f64>>> {
        (0..self.spec.dim())
            .map(|i| {
                let w = bl_witness(mu.component(i), self.ball.center.component(i))?;
                Ok(self.spec.k.grid(i).nodes.iter().map(|&z| w.extend(z)).collect())
            })
            .collect()
    }
}

/// Minimum of the rate function over a bounded-Lipschitz ball, bracketed
/// by weak duality: for unit test functions `f` and `lambda >= 0`,
/// `inf_G E_Q >= min E_{Q + lambda f} - 2 lambda (int f dcenter + radius)`,
/// while feasible points of the ball bound it from above.
pub fn ball_rate_bound(spec: &EnsembleSpec, ball: &NeighborhoodSpec, opts: &BallOptions) -> Result<BallRateBound> {
    let d = spec.dim();
    if ball.center.dim() != d {
        return Err(Error::Dimension("ball center does not match the ensemble".into()));
    }
    for i in 0..d {
        if ball.center.component(i).nodes() != spec.k.grid(i).nodes.as_slice() {
            return Err(Error::Domain("ball center must be a measure on the ensemble grids".into()));
        }
    }
    let e_star = equilibrium_energy(spec)?;
    let ctx = Ball { spec, ball, center: ball.center.weights(), e_star };
    let eq = spec.equilibrium()?.minimizer.clone();
    if ball.contains(&eq)? {
        return Ok(BallRateBound { lower: 0.0, upper: 0.0, minimizer: eq, lambda: 0.0 });
    }
    let (mut upper, mut minimizer) = ctx.feasible(&eq)?;
    let mut lower: f64 = 0.0;
    let mut best_lambda = 0.0;
    let mut f = ctx.witness(&eq)?;
    for round in 0..opts.rounds {
        let mut consider = |p: &Probe, lambda: f64, lower: &mut f64, upper: &mut f64| -> Result<()> {
            if p.dual > *lower {
                *lower = p.dual;
                best_lambda = lambda;
            }
            let (e, mu) = ctx.feasible(&p.measure)?;
            if e < *upper {
                *upper = e;
                minimizer = mu;
            }
            Ok(())
        };
        let grid: Vec<f64> = (-6..=6).map(|j| 2f64.powi(j)).collect();
        let mut probes = vec![];
        for &lambda in &grid {
            let p = ctx.probe(&f, lambda)?;
            consider(&p, lambda, &mut lower, &mut upper)?;
            probes.push(p.dual);
        }
        let best = (0..grid.len()).max_by(|&a, &b| probes[a].total_cmp(&probes[b])).unwrap_or(0);
        let mut a = if best == 0 { 0.0 } else { grid[best - 1] };
        let mut b = grid[(best + 1).min(grid.len() - 1)];
        let phi = 0.5 * (5f64.sqrt() - 1.0);
        let mut x1 = b - phi * (b - a);
        let mut x2 = a + phi * (b - a);
        let mut p1 = ctx.probe(&f, x1)?;
        let mut p2 = ctx.probe(&f, x2)?;
        consider(&p1, x1, &mut lower, &mut upper)?;
        consider(&p2, x2, &mut lower, &mut upper)?;
        for _ in 0..opts.line_steps {
            if p1.dual > p2.dual {
                b = x2;
                x2 = x1;
                p2 = p1;
                x1 = b - phi * (b - a);
                p1 = ctx.probe(&f, x1)?;
                consider(&p1, x1, &mut lower, &mut upper)?;
            } else {
                a = x1;
                x1 = x2;
                p1 = p2;
                x2 = a + phi * (b - a);
                p2 = ctx.probe(&f, x2)?;
                consider(&p2, x2, &mut lower, &mut upper)?;
            }
        }
        let tilted = if p1.dual > p2.dual { p1.measure } else { p2.measure };
        let gamma = 2.0 / (round as f64 + 3.0);
        for (fi, wi) in f.iter_mut().zip(ctx.witness(&tilted)?) {
            fi.iter_mut().zip(wi).for_each(|(a, b)| *a = (1.0 - gamma) * *a + gamma * b);
        }
    }
    Ok(BallRateBound { lower: lower.min(upper), upper, minimizer, lambda: best_lambda })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::domain::MassVector;
    use crate::ensemble::spec::tests::{angelesco, scalar};
    use rand::{Rng, SeedableRng};

    #[test]
    fn rate_vanishes_at_equilibrium() {
        let spec = scalar(-1.0, 1.0, 300, 1.0, None, 1);
        let eq = spec.equilibrium().unwrap().minimizer.clone();
        assert_eq!(rate_function(&eq, &spec).unwrap(), 0.0);
    }

    #[test]
    fn rate_of_uniform_measure() {
        let spec = scalar(-1.0, 1.0, 1000, 1.0, None, 1);
        let uniform = DiscreteVectorMeasure::uniform(&spec.k, &spec.r).unwrap();
        let expected = 1.5 - 2.0 * std::f64::consts::LN_2;
        assert!((rate_function(&uniform, &spec).unwrap() - expected).abs() < 2e-3);
    }

    #[test]
    fn rate_is_positive_off_equilibrium() {
        let spec = angelesco(120);
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(4);
        for _ in 0..10 {
            let w: Vec<Vec<f64>> = (0..2)
                .map(|i| {
                    let raw: Vec<f64> = (0..spec.k.grid(i).len()).map(|_| rng.random::<f64>().powi(3)).collect();
                    let s: f64 = raw.iter().sum();
                    raw.iter().map(|x| x / s).collect()
                })
                .collect();
            let mu = DiscreteVectorMeasure::on_grids(&spec.k, w, &spec.r).unwrap();
            assert!(rate_function(&mu, &spec).unwrap() > 0.0);
        }
    }

    #[test]
    fn mass_mismatch_is_rejected() {
        let spec = scalar(-1.0, 1.0, 50, 1.0, None, 1);
        let half = DiscreteVectorMeasure::uniform(&spec.k, &MassVector::new(vec![0.5]).unwrap()).unwrap();
        assert!(matches!(rate_function(&half, &spec), Err(Error::Dimension(_))));
    }

    #[test]
    fn ball_bracket_is_consistent() {
        let spec = scalar(-1.0, 1.0, 200, 1.0, None, 1);
        let center = DiscreteVectorMeasure::uniform(&spec.k, &spec.r).unwrap();
        let far = NeighborhoodSpec::new(center.clone(), 0.1).unwrap();
        let b = ball_rate_bound(&spec, &far, &BallOptions::default()).unwrap();
        assert!(b.lower <= b.upper);
        assert!(b.upper > 0.0);
        assert!(far.distance(&b.minimizer).unwrap() <= far.radius);
        assert!((rate_function(&b.minimizer, &spec).unwrap() - b.upper).abs() < 1e-9);
        assert!(b.upper - b.lower < 0.05 * b.upper, "{} {}", b.lower, b.upper);
        assert!(b.upper < rate_function(&center, &spec).unwrap());
        let near = NeighborhoodSpec::new(center, 1.0).unwrap();
        let z = ball_rate_bound(&spec, &near, &BallOptions::default()).unwrap();
        assert_eq!((z.lower, z.upper), (0.0, 0.0));
    }
}
