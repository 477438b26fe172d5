//! TOML experiment configuration and its translation into problem data.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::bmtest::arcsine_measure;
use crate::domain::{
    CompactSet, CompactSetTuple, DegreeSchedule, GridSpec, InteractionMatrix, MassVector, Piece, ScheduleRule, Weight,
    WeightTuple,
};
use crate::ensemble::{EnsembleSpec, NeighborhoodSpec, PartitionMode, PartitionOptions, ReferenceMeasure, SamplerOptions};
use crate::equilibrium::SolverOptions;
use crate::potential::DiscreteVectorMeasure;
use crate::{Error, Result};

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentConfig {
    pub problem: ProblemSection,
    pub grid: GridSection,
    pub solver: SolverSection,
    pub schedule: ScheduleSection,
    pub ensemble: EnsembleSection,
    pub ldp: LdpSection,
    pub bmtest: BmSection,
    pub output: OutputSection,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ProblemSection {
    /// `angelesco`, `nikishin` or `beta`.
    pub preset: Option<String>,
    pub beta: Option<f64>,
    /// Explicit interaction matrix, used when no preset is given; a single
    /// set defaults to `[[1]]`.
    pub matrix: Option<Vec<Vec<f64>>>,
    /// Masses; all ones when absent.
    pub r: Option<Vec<f64>>,
    /// `"[a,b];[c,d]"`: components separated by `;`, pieces by `|`.
    pub sets: String,
    /// One expression per component; absent means `Q = 0`.
    pub weights: Option<Vec<String>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GridSection {
    /// Nodes per piece.
    pub resolution: usize,
    pub snap_tol: Option<f64>,
}

impl Default for GridSection {
    fn default() -> Self {
        Self { resolution: 200, snap_tol: None }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SolverSection {
    pub tol: f64,
    pub max_iter: usize,
    /// Active-set refinement after the gradient phase.
    pub polish: bool,
}

impl Default for SolverSection {
    fn default() -> Self {
        let s = SolverOptions::default();
        Self { tol: s.variational.tol, max_iter: s.max_iter, polish: s.polish }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ScheduleSection {
    /// `scaled`, `round-repair` or `round`.
    pub rule: String,
    pub k_max: usize,
    /// Explicit degree tuples; override the rule.
    pub tuples: Option<Vec<Vec<usize>>>,
}

impl Default for ScheduleSection {
    fn default() -> Self {
        Self { rule: "scaled".into(), k_max: 10, tuples: None }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EnsembleSection {
    /// `quadrature`, `arcsine` or `density`.
    pub nu: String,
    /// Densities against the quadrature when `nu = "density"`.
    pub density: Option<Vec<String>>,
    pub seed: u64,
    pub draws: usize,
    pub burn_in: usize,
    pub thin: usize,
    pub chains: usize,
    /// `auto`, `exact` or `stochastic`.
    pub partition: String,
    pub particles: usize,
    pub temperatures: usize,
}

impl Default for EnsembleSection {
    fn default() -> Self {
        let s = SamplerOptions::default();
        let p = PartitionOptions::default();
        Self {
            nu: "quadrature".into(),
            density: None,
            seed: 0,
            draws: 1000,
            burn_in: s.burn_in,
            thin: s.thin,
            chains: s.chains,
            partition: "auto".into(),
            particles: p.particles,
            temperatures: p.temperatures,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct LdpSection {
    pub eta: f64,
    /// `sampling` or `annealing`.
    pub estimator: String,
    pub neighborhoods: Vec<NeighborhoodSection>,
}

impl Default for LdpSection {
    fn default() -> Self {
        Self { eta: 0.05, estimator: "sampling".into(), neighborhoods: vec![] }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NeighborhoodSection {
    /// `equilibrium` or `uniform`.
    pub center: String,
    /// For `uniform`: restrict each component to these sets (same syntax
    /// as `problem.sets`).
    pub support: Option<String>,
    pub radius: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct BmSection {
    /// 1-based component index.
    pub component: usize,
    /// `quadrature` or `arcsine`.
    pub measure: String,
    /// Restrict the base measure to these sets.
    pub support: Option<String>,
    /// Use the problem weight `Q_i`.
    pub weighted: bool,
    pub a: f64,
    pub b: f64,
    pub draws: usize,
    pub samples: usize,
}

impl Default for BmSection {
    fn default() -> Self {
        Self {
            component: 1,
            measure: "quadrature".into(),
            support: None,
            weighted: false,
            a: 1.0,
            b: 1.0,
            draws: 8,
            samples: 200,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OutputSection {
    pub directory: String,
    /// Only `csv` is produced.
    pub formats: Vec<String>,
}

impl Default for OutputSection {
    fn default() -> Self {
        Self { directory: "out".into(), formats: vec!["csv".into()] }
    }
}

impl ExperimentConfig {
    pub fn from_toml(source: &str) -> Result<Self> {
        toml::from_str(source).map_err(|e| Error::Config(e.to_string()))
    }

    pub fn to_toml(&self) -> Result<String> {
        toml::to_string(self).map_err(|e| Error::Config(e.to_string()))
    }
}

/// Parses `"[a,b];[c,d]|disc(cx,cy,r)"`: one component per `;`-separated
/// entry, `|` joining pieces of one component. Pieces are real intervals
/// `[a,b]`, segments `seg(x1,y1,x2,y2)`, discs `disc(cx,cy,r)` and circles
/// `circle(cx,cy,r)`.
pub fn parse_sets(source: &str) -> Result<Vec<CompactSet>> {
    let source = source.trim();
    if source.is_empty() {
        return Err(Error::Config("no sets given".into()));
    }
    source
        .split(';')
        .map(|component| {
            let pieces = component.split('|').map(parse_piece).collect::<Result<Vec<_>>>()?;
            CompactSet::new(pieces).map_err(|e| Error::Config(format!("set `{}`: {e}", component.trim())))
        })
        .collect()
}

fn parse_piece(source: &str) -> Result<Piece> {
    let s: String = source.chars().filter(|c| !c.is_whitespace()).collect();
    let numbers = |inner: &str, n: usize| -> Result<Vec<f64>> {
        let v = inner
            .split(',')
            .map(|t| t.parse::<f64>().map_err(|_| Error::Config(format!("bad number `{t}` in `{source}`"))))
            .collect::<Result<Vec<f64>>>()?;
        if v.len() == n {
            Ok(v)
        } else {
            Err(Error::Config(format!("`{source}` needs {n} numbers")))
        }
    };
    let inside = |prefix: &str, open: char, close: char| {
        s.strip_prefix(prefix).and_then(|t| t.strip_prefix(open)).and_then(|t| t.strip_suffix(close))
    };
    if let Some(inner) = inside("", '[', ']') {
        let v = numbers(inner, 2)?;
        return Ok(Piece::interval(v[0], v[1]));
    }
    if let Some(inner) = inside("seg", '(', ')') {
        let v = numbers(inner, 4)?;
        return Ok(Piece::Segment { start: Complex64::new(v[0], v[1]), end: Complex64::new(v[2], v[3]) });
    }
    if let Some(inner) = inside("disc", '(', ')') {
        let v = numbers(inner, 3)?;
        return Ok(Piece::disc(v[0], v[1], v[2]));
    }
    if let Some(inner) = inside("circle", '(', ')') {
        let v = numbers(inner, 3)?;
        return Ok(Piece::circle(v[0], v[1], v[2]));
    }
    Err(Error::Config(format!("cannot parse set piece `{source}`")))
}

/// Interaction matrix from a preset name or explicit rows.
pub fn interaction_matrix(problem: &ProblemSection, d: usize) -> Result<InteractionMatrix> {
    let c = match (problem.preset.as_deref(), &problem.matrix) {
        (Some(_), Some(_)) => return Err(Error::Config("give either a preset or a matrix, not both".into())),
        (Some("angelesco"), None) => InteractionMatrix::angelesco(d),
        (Some("nikishin"), None) => InteractionMatrix::nikishin(d),
        (Some("beta"), None) => {
            let beta = problem.beta.ok_or_else(|| Error::Config("preset beta needs `beta`".into()))?;
            InteractionMatrix::beta(beta)?
        }
        (Some(other), None) => {
            return Err(Error::Config(format!("unknown preset `{other}` (expected angelesco, nikishin or beta)")))
        }
        (None, Some(rows)) => InteractionMatrix::new(rows.clone())?,
        (None, None) if d == 1 => InteractionMatrix::new(vec![vec![1.0]])?,
        (None, None) => return Err(Error::Config("problem needs a preset or a matrix".into())),
    };
    if c.dim() != d {
        return Err(Error::Config(format!("matrix of dimension {} for {d} sets", c.dim())));
    }
    Ok(c)
}

/// Everything a run needs, built from a configuration.
#[derive(Debug, Clone)]
pub struct Problem {
    pub c: InteractionMatrix,
    pub k: CompactSetTuple,
    pub q: WeightTuple,
    pub r: MassVector,
    pub schedule: DegreeSchedule,
    pub solver: SolverOptions,
}

impl Problem {
    pub fn from_config(cfg: &ExperimentConfig) -> Result<Self> {
        let sets = parse_sets(&cfg.problem.sets)?;
        let d = sets.len();
        let c = interaction_matrix(&cfg.problem, d)?;
        if cfg.grid.resolution == 0 {
            return Err(Error::Config("grid resolution must be positive".into()));
        }
        let mut spec = GridSpec::new(cfg.grid.resolution);
        spec.snap_tol = cfg.grid.snap_tol;
        let k = CompactSetTuple::new(sets, spec)?;
        let r = MassVector::new(cfg.problem.r.clone().unwrap_or_else(|| vec![1.0; d]))?;
        if r.dim() != d {
            return Err(Error::Config(format!("{} masses for {d} sets", r.dim())));
        }
        let q = match &cfg.problem.weights {
            None => WeightTuple::zero(d),
            Some(list) if list.len() == d => {
                WeightTuple::new(list.iter().map(|s| Weight::expr(s)).collect::<Result<Vec<_>>>()?)
            }
            Some(list) => return Err(Error::Config(format!("{} weights for {d} sets", list.len()))),
        };
        let schedule = match &cfg.schedule.tuples {
            Some(t) => DegreeSchedule::explicit(t.clone())?,
            None => DegreeSchedule::from_rule(&r, cfg.schedule.k_max, cfg.schedule.rule.parse::<ScheduleRule>()?)?,
        };
        let mut solver = SolverOptions::default().with_tol(cfg.solver.tol);
        solver.max_iter = cfg.solver.max_iter;
        solver.polish = cfg.solver.polish;
        Ok(Self { c, k, q, r, schedule, solver })
    }

    /// Weights of the uniform quadrature measure restricted to `support`.
    pub fn restricted_uniform(&self, support: Option<&str>) -> Result<Vec<Vec<f64>>> {
        let restrict = support.map(parse_sets).transpose()?;
        (0..self.k.dim())
            .map(|i| {
                let g = self.k.grid(i);
                let w: Vec<f64> = g
                    .nodes
                    .iter()
                    .zip(&g.weights)
                    .map(|(z, w)| match &restrict {
                        Some(sets) if sets.iter().all(|s| !s.contains(*z, 1e-12)) => 0.0,
                        _ => *w,
                    })
                    .collect();
                if !(w.iter().sum::<f64>() > 0.0) {
                    return Err(Error::Config(format!("support leaves no grid node of K_{}", i + 1)));
                }
                Ok(w)
            })
            .collect()
    }

    pub fn ensemble(&self, cfg: &ExperimentConfig, seed: u64) -> Result<EnsembleSpec> {
        let e = &cfg.ensemble;
        let nu = match e.nu.as_str() {
            "quadrature" => ReferenceMeasure::quadrature(&self.k),
            "arcsine" => ReferenceMeasure::from_weights(
                &self.k,
                self.k.grids().iter().map(arcsine_measure).collect::<Result<Vec<_>>>()?,
            )?,
            "density" => {
                let list = e.density.as_ref().ok_or_else(|| Error::Config("nu = density needs `density`".into()))?;
                ReferenceMeasure::with_density(&self.k, &list.iter().map(|s| Weight::expr(s)).collect::<Result<Vec<_>>>()?)?
            }
            other => return Err(Error::Config(format!("unknown reference measure `{other}`"))),
        };
        Ok(EnsembleSpec::new(self.c.clone(), self.k.clone(), self.q.clone(), self.r.clone(), self.schedule.clone(), nu, seed)?
            .with_solver(self.solver.clone()))
    }

    pub fn neighborhood(&self, spec: &EnsembleSpec, g: &NeighborhoodSection) -> Result<NeighborhoodSpec> {
        let center = match g.center.as_str() {
            "equilibrium" => spec.equilibrium()?.minimizer.clone(),
            "uniform" => {
                let w = self.restricted_uniform(g.support.as_deref())?;
                let scaled = w
                    .iter()
                    .zip(self.r.as_slice())
                    .map(|(wi, ri)| {
                        let s: f64 = wi.iter().sum();
                        wi.iter().map(|x| ri * x / s).collect()
                    })
                    .collect();
                DiscreteVectorMeasure::on_grids(&self.k, scaled, &self.r)?
            }
            other => return Err(Error::Config(format!("unknown neighborhood center `{other}`"))),
        };
        NeighborhoodSpec::new(center, g.radius)
    }
}

pub fn sampler_options(cfg: &ExperimentConfig) -> SamplerOptions {
    SamplerOptions {
        burn_in: cfg.ensemble.burn_in,
        thin: cfg.ensemble.thin,
        chains: cfg.ensemble.chains,
        ..SamplerOptions::default()
    }
}

pub fn partition_options(cfg: &ExperimentConfig) -> Result<PartitionOptions> {
    let mode = match cfg.ensemble.partition.as_str() {
        "auto" => PartitionMode::Auto,
        "exact" => PartitionMode::Exact,
        "stochastic" => PartitionMode::Stochastic,
        other => return Err(Error::Config(format!("unknown partition mode `{other}`"))),
    };
    Ok(PartitionOptions {
        mode,
        particles: cfg.ensemble.particles,
        temperatures: cfg.ensemble.temperatures,
        ..PartitionOptions::default()
    })
}
