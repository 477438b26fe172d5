//! Subcommand dispatch, CSV artifacts and the run manifest.

use std::fs::{self, File};
use std::io::BufWriter;
use std::ops::RangeInclusive;
use std::path::{Path, PathBuf};

use serde::Serialize;
use sha2::{Digest, Sha256};

use super::config::{partition_options, sampler_options, ExperimentConfig, Problem};
use crate::bmtest::{arcsine_measure, bm_ratio_poly, bm_ratio_rational, BmOptions, RationalFamilySpec};
use crate::domain::{validate_hypotheses, HypothesisReport};
use crate::ensemble::{ldp_concentration_experiment, sample_prob_k, BallEstimator, ConcentrationReport, LdpOptions};
use crate::equilibrium::solve_equilibrium;
use crate::fekete::{transfinite_diameter_estimate, FeketeOptions};
use crate::potential::vector_energy;
use crate::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub enum Task {
    Equilibrium,
    Fekete { k_range: RangeInclusive<usize> },
    Sample { k: usize, draws: Option<usize> },
    Ldp { k_range: RangeInclusive<usize>, eta: Option<f64> },
    BmTest { rational: bool, k_range: RangeInclusive<usize> },
    Validate,
}

impl Task {
    pub fn name(&self) -> &'static str {
        match self {
            Task::Equilibrium => "equilibrium",
            Task::Fekete { .. } => "fekete",
            Task::Sample { .. } => "sample",
            Task::Ldp { .. } => "ldp",
            Task::BmTest { .. } => "bm-test",
            Task::Validate => "validate",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct RunOptions {
    /// Overrides `output.directory`.
    pub out: Option<PathBuf>,
    /// Overrides `ensemble.seed`.
    pub seed: Option<u64>,
    pub force: bool,
    pub threads: Option<usize>,
    /// Verbatim configuration text recorded in the manifest.
    pub source: String,
    pub args: Vec<String>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Outcome {
    Success,
    /// Standing hypotheses failed.
    ValidationFailed,
    /// A solver or chain stopped short; partial outputs were written.
    NotConverged,
}

impl Outcome {
    pub fn exit_code(self) -> i32 {
        match self {
            Outcome::Success => 0,
            Outcome::ValidationFailed => 2,
            Outcome::NotConverged => 3,
        }
    }
}

/// Exit code for an error: 3 for numerical failures, 1 otherwise.
pub fn error_exit_code(e: &Error) -> i32 {
    match e {
        Error::Mixing(_) | Error::Rank { .. } | Error::Statistics(_) => 3,
        _ => 1,
    }
}

#[derive(Serialize)]
struct Manifest<'a> {
    tool: &'static str,
    version: &'static str,
    subcommand: &'a str,
    args: &'a [String],
    seed: u64,
    threads: Option<usize>,
    outcome: String,
    files: Vec<String>,
    /// Seconds since the Unix epoch.
    timestamp: u64,
    config_sha256: String,
    config: &'a str,
    resolved: String,
}

struct Artifacts {
    dir: PathBuf,
    files: Vec<String>,
}

impl Artifacts {
    fn create(&mut self, name: &str) -> Result<BufWriter<File>> {
        self.files.push(name.to_string());
        Ok(BufWriter::new(File::create(self.dir.join(name))?))
    }
}

fn write_hypotheses(report: &HypothesisReport, out: impl std::io::Write) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["hypothesis", "passed", "diagnostics"])?;
    for (name, h) in [
        ("nonnegative_on_intersections", &report.nonnegative_on_intersections),
        ("range_vector", &report.range_vector),
        ("dependent_columns", &report.dependent_columns),
    ] {
        w.write_record([name, &h.passed.to_string(), &h.diagnostics.join("; ")])?;
    }
    w.flush()?;
    Ok(())
}

fn write_fits(report: &ConcentrationReport, out: impl std::io::Write) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["neighborhood", "rate", "ci_low", "ci_high", "predicted_lower", "predicted_upper", "levels_used", "error"])?;
    for (g, fit) in report.fits.iter().enumerate() {
        let row = match fit {
            Ok(f) => {
                let (lo, hi) = f.predicted.map(|(a, b)| (format!("{a:.17e}"), format!("{b:.17e}"))).unwrap_or_default();
                vec![
                    (g + 1).to_string(),
                    format!("{:.17e}", f.rate),
                    format!("{:.17e}", f.ci_low),
                    format!("{:.17e}", f.ci_high),
                    lo,
                    hi,
                    f.levels_used.to_string(),
                    String::new(),
                ]
            }
            Err(e) => vec![(g + 1).to_string(), String::new(), String::new(), String::new(), String::new(), String::new(), String::new(), e.clone()],
        };
        w.write_record(row)?;
    }
    w.flush()?;
    Ok(())
}

/// Runs one subcommand, writes its CSV files and `manifest.toml` into the
/// output directory, and reports how it ended.
pub fn run_experiment(cfg: &ExperimentConfig, task: &Task, opts: &RunOptions) -> Result<Outcome> {
    let dir = opts.out.clone().unwrap_or_else(|| PathBuf::from(&cfg.output.directory));
    if cfg.output.formats.iter().any(|f| f != "csv") {
        return Err(Error::Config(format!("unsupported output formats {:?}; only csv is produced", cfg.output.formats)));
    }
    fs::create_dir_all(&dir)?;
    let mut art = Artifacts { dir: dir.clone(), files: vec![] };
    let seed = opts.seed.unwrap_or(cfg.ensemble.seed);
    let problem = Problem::from_config(cfg)?;

    let report = validate_hypotheses(&problem.c, &problem.k)?;
    write_hypotheses(&report, art.create("hypotheses.csv")?)?;
    let outcome = if !report.passed() {
        if matches!(task, Task::Validate) || !opts.force {
            log::error!("standing hypotheses failed: {}", report.failures().join(", "));
            Outcome::ValidationFailed
        } else {
            log::warn!("FORCED RUN: standing hypotheses failed ({}); results are outside the theory", report.failures().join(", "));
            execute(cfg, &problem, task, seed, &mut art)?
        }
    } else {
        execute(cfg, &problem, task, seed, &mut art)?
    };

    let source = if opts.source.is_empty() { cfg.to_toml()? } else { opts.source.clone() };
    let manifest = Manifest {
        tool: "vecgas",
        version: env!("CARGO_PKG_VERSION"),
        subcommand: task.name(),
        args: &opts.args,
        seed,
        threads: opts.threads,
        outcome: format!("{outcome:?}"),
        files: art.files.clone(),
        timestamp: std::time::SystemTime::now().duration_since(std::time::UNIX_EPOCH).map(|d| d.as_secs()).unwrap_or(0),
        config_sha256: format!("{:x}", Sha256::digest(source.as_bytes())),
        config: &source,
        resolved: cfg.to_toml()?,
    };
    let text = toml::to_string(&manifest).map_err(|e| Error::Config(e.to_string()))?;
    fs::write(dir.join("manifest.toml"), text)?;
    Ok(outcome)
}

fn execute(cfg: &ExperimentConfig, p: &Problem, task: &Task, seed: u64, art: &mut Artifacts) -> Result<Outcome> {
    match task {
        Task::Validate => Ok(Outcome::Success),
        Task::Equilibrium => {
            let sol = solve_equilibrium(&p.c, &p.k, &p.q, &p.r, &p.solver)?;
            let mut w = csv::Writer::from_writer(art.create("minimizer.csv")?);
            w.write_record(["node", "component", "x", "y", "weight"])?;
            for (i, comp) in sol.minimizer.components().iter().enumerate() {
                for (l, (z, m)) in comp.nodes().iter().zip(comp.weights()).enumerate() {
                    w.write_record([
                        l.to_string(),
                        (i + 1).to_string(),
                        format!("{:.17e}", z.re),
                        format!("{:.17e}", z.im),
                        format!("{m:.17e}"),
                    ])?;
                }
            }
            w.flush()?;
            sol.residuals.write_csv(art.create("residuals.csv")?)?;
            vector_energy(&sol.minimizer, &p.c, Some(&p.q))?.write_csv(art.create("energy.csv")?)?;
            if sol.converged {
                Ok(Outcome::Success)
            } else {
                log::error!("equilibrium solver stopped after {} iterations without meeting the tolerance", sol.iterations);
                Ok(Outcome::NotConverged)
            }
        }
        Task::Fekete { k_range } => {
            let est = transfinite_diameter_estimate(&p.c, &p.k, &p.q, &p.r, &p.schedule, k_range.clone(), &p.solver, &FeketeOptions::default())?;
            est.write_csv(art.create("diameter.csv")?)?;
            let mut w = csv::Writer::from_writer(art.create("configurations.csv")?);
            w.write_record(["k", "component", "index", "x", "y"])?;
            for pt in &est.points {
                for (i, comp) in pt.fekete.configuration.components().iter().enumerate() {
                    for (l, z) in comp.iter().enumerate() {
                        w.write_record([
                            pt.k.to_string(),
                            (i + 1).to_string(),
                            l.to_string(),
                            format!("{:.17e}", z.re),
                            format!("{:.17e}", z.im),
                        ])?;
                    }
                }
            }
            w.flush()?;
            Ok(if est.equilibrium.converged { Outcome::Success } else { Outcome::NotConverged })
        }
        Task::Sample { k, draws } => {
            let spec = p.ensemble(cfg, seed)?;
            let batch = sample_prob_k(&spec, *k, draws.unwrap_or(cfg.ensemble.draws), &sampler_options(cfg))?;
            batch.write_csv(art.create("draws.csv")?)?;
            let mut w = csv::Writer::from_writer(art.create("diagnostics.csv")?);
            w.write_record(["chain", "sweeps", "proposals", "accepted", "acceptance_rate", "stalled_windows"])?;
            for d in &batch.diagnostics {
                w.write_record([
                    d.chain.to_string(),
                    d.sweeps.to_string(),
                    d.proposals.to_string(),
                    d.accepted.to_string(),
                    format!("{:.17e}", d.acceptance_rate()),
                    d.stalled_windows.to_string(),
                ])?;
            }
            w.flush()?;
            match batch.check_mixing() {
                Ok(()) => Ok(Outcome::Success),
                Err(e) => {
                    log::error!("{e}");
                    Ok(Outcome::NotConverged)
                }
            }
        }
        Task::Ldp { k_range, eta } => {
            let spec = p.ensemble(cfg, seed)?;
            let neighborhoods = cfg.ldp.neighborhoods.iter().map(|g| p.neighborhood(&spec, g)).collect::<Result<Vec<_>>>()?;
            let estimator = match cfg.ldp.estimator.as_str() {
                "sampling" => BallEstimator::Sampling,
                "annealing" => BallEstimator::Annealing(partition_options(cfg)?),
                other => return Err(Error::Config(format!("unknown ball estimator `{other}`"))),
            };
            let opts = LdpOptions {
                draws: cfg.ensemble.draws,
                estimator,
                sampler: sampler_options(cfg),
                partition: Some(partition_options(cfg)?),
                ..LdpOptions::default()
            };
            let report = ldp_concentration_experiment(&spec, k_range.clone(), eta.unwrap_or(cfg.ldp.eta), &neighborhoods, &opts)?;
            report.write_csv(art.create("summary.csv")?)?;
            write_fits(&report, art.create("fits.csv")?)?;
            Ok(Outcome::Success)
        }
        Task::BmTest { rational, k_range } => {
            let b = &cfg.bmtest;
            let i = b.component.checked_sub(1).filter(|&i| i < p.k.dim()).ok_or_else(|| {
                Error::Config(format!("bmtest component {} outside 1..={}", b.component, p.k.dim()))
            })?;
            let grid = p.k.grid(i);
            let base = match b.measure.as_str() {
                "quadrature" => grid.weights.clone(),
                "arcsine" => arcsine_measure(grid)?,
                other => return Err(Error::Config(format!("unknown base measure `{other}`"))),
            };
            let keep = p.restricted_uniform(b.support.as_deref())?;
            let nu: Vec<f64> = base.iter().zip(&keep[i]).map(|(w, k)| if *k > 0.0 { *w } else { 0.0 }).collect();
            let q = b.weighted.then(|| p.q.get(i));
            let opts = BmOptions { samples: b.samples, seed, ..BmOptions::default() };
            let curve = if *rational {
                let family = RationalFamilySpec::from_tuple(&p.k, i, b.a, b.b, b.draws)?;
                bm_ratio_rational(&family, grid, &nu, q, k_range.clone(), &opts)?
            } else {
                bm_ratio_poly(grid, &nu, q, k_range.clone(), &opts)?
            };
            curve.write_csv(art.create("curve.csv")?)?;
            Ok(Outcome::Success)
        }
    }
}

/// Parses `a..b` (inclusive).
pub fn parse_k_range(s: &str) -> Result<RangeInclusive<usize>> {
    let (a, b) = s
        .split_once("..")
        .ok_or_else(|| Error::Config(format!("k range `{s}` must look like a..b")))?;
    let b = b.strip_prefix('=').unwrap_or(b);
    let parse = |t: &str| t.trim().parse::<usize>().map_err(|_| Error::Config(format!("bad k range `{s}`")));
    let (a, b) = (parse(a)?, parse(b)?);
    if a > b {
        return Err(Error::Config(format!("empty k range `{s}`")));
    }
    Ok(a..=b)
}

/// Reads a configuration file and returns it with its verbatim text.
pub fn load_config(path: &Path) -> Result<(ExperimentConfig, String)> {
    let text = fs::read_to_string(path).map_err(|e| Error::Config(format!("{}: {e}", path.display())))?;
    Ok((ExperimentConfig::from_toml(&text)?, text))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn scalar_config() -> ExperimentConfig {
        ExperimentConfig::from_toml(
            r#"
            [problem]
            preset = "beta"
            beta = 2.0
            sets = "[-2,2]"
            weights = ["x^2/2"]
            [grid]
            resolution = 80
            [schedule]
            k_max = 6
            [ensemble]
            draws = 60
            burn_in = 20
            chains = 2
            "#,
        )
        .unwrap()
    }

    #[test]
    fn k_ranges() {
        assert_eq!(parse_k_range("2..5").unwrap(), 2..=5);
        assert_eq!(parse_k_range("2..=5").unwrap(), 2..=5);
        assert!(parse_k_range("5..2").is_err());
        assert!(parse_k_range("5").is_err());
    }

    #[test]
    fn reruns_are_bit_identical() {
        let cfg = scalar_config();
        let a = tempfile::tempdir().unwrap();
        let b = tempfile::tempdir().unwrap();
        for dir in [&a, &b] {
            let opts = RunOptions { out: Some(dir.path().to_path_buf()), seed: Some(3), ..Default::default() };
            assert_eq!(run_experiment(&cfg, &Task::Sample { k: 4, draws: None }, &opts).unwrap(), Outcome::Success);
        }
        for f in ["draws.csv", "diagnostics.csv", "hypotheses.csv"] {
            assert_eq!(fs::read(a.path().join(f)).unwrap(), fs::read(b.path().join(f)).unwrap());
        }
        let manifest = fs::read_to_string(a.path().join("manifest.toml")).unwrap();
        assert!(manifest.contains("config_sha256") && manifest.contains("seed = 3"));
    }

    #[test]
    fn failed_hypotheses_stop_the_run_unless_forced() {
        let mut cfg = scalar_config();
        cfg.problem.preset = Some("nikishin".into());
        cfg.problem.beta = None;
        cfg.problem.sets = "[-1,1];[0,2]".into();
        cfg.problem.weights = None;
        let dir = tempfile::tempdir().unwrap();
        let opts = RunOptions { out: Some(dir.path().to_path_buf()), ..Default::default() };
        assert_eq!(run_experiment(&cfg, &Task::Validate, &opts).unwrap(), Outcome::ValidationFailed);
        assert_eq!(run_experiment(&cfg, &Task::Equilibrium, &opts).unwrap(), Outcome::ValidationFailed);
        assert!(!dir.path().join("minimizer.csv").exists());
        let forced = RunOptions { force: true, ..opts };
        let outcome = run_experiment(&cfg, &Task::Equilibrium, &forced).unwrap();
        assert_ne!(outcome, Outcome::ValidationFailed);
        assert!(dir.path().join("minimizer.csv").exists());
    }
}
