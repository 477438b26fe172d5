use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use vecgas::experiment::{error_exit_code, load_config, parse_k_range, run_experiment, ExperimentConfig, RunOptions, Task};
use vecgas::Error;

/// Vector equilibrium problems, Fekete arrays and log-gas ensembles.
#[derive(Parser, Debug)]
#[command(name = "vecgas", version)]
struct Cli {
    #[command(flatten)]
    global: Global,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Debug)]
struct Global {
    /// TOML experiment file.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Output directory (overrides `output.directory`).
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Worker threads; results do not depend on this.
    #[arg(long, global = true, env = "VECGAS_THREADS")]
    threads: Option<usize>,
    /// Run even if the standing hypotheses fail.
    #[arg(long, global = true)]
    force: bool,
    /// `angelesco`, `nikishin` or `beta`.
    #[arg(long, global = true)]
    preset: Option<String>,
    /// Compact sets, e.g. `"[-1,0];[0,1]"`.
    #[arg(long, global = true)]
    sets: Option<String>,
    #[arg(long, global = true)]
    beta: Option<f64>,
    /// Weight expressions, one per component, separated by `;`.
    #[arg(long, global = true)]
    weights: Option<String>,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Solve the constrained equilibrium problem.
    Equilibrium,
    /// Weighted Fekete arrays and the transfinite diameter.
    Fekete {
        #[arg(long, default_value = "1..6")]
        k_range: String,
    },
    /// Draw configurations from the discrete ensemble.
    Sample {
        #[arg(long)]
        k: usize,
        #[arg(long)]
        draws: Option<usize>,
    },
    /// Partition function growth and neighborhood concentration.
    Ldp {
        #[arg(long, default_value = "1..5")]
        k_range: String,
        #[arg(long)]
        eta: Option<f64>,
    },
    /// Bernstein-Markov ratios for polynomials or rational functions.
    BmTest {
        #[arg(long)]
        rational: bool,
        #[arg(long, default_value = "1..20")]
        k_range: String,
        /// 1-based component (overrides `bmtest.component`).
        #[arg(long)]
        component: Option<usize>,
    },
    /// Check the standing hypotheses only.
    Validate,
}

fn configure(g: &Global) -> vecgas::Result<(ExperimentConfig, String)> {
    let (mut cfg, source) = match &g.config {
        Some(path) => load_config(path)?,
        None => (ExperimentConfig::default(), String::new()),
    };
    if let Some(p) = &g.preset {
        cfg.problem.preset = Some(p.clone());
    }
    if let Some(s) = &g.sets {
        cfg.problem.sets = s.clone();
    }
    if let Some(b) = g.beta {
        cfg.problem.beta = Some(b);
    }
    if let Some(w) = &g.weights {
        cfg.problem.weights = Some(w.split(';').map(|s| s.trim().to_string()).collect());
    }
    if cfg.problem.sets.trim().is_empty() {
        return Err(Error::Config("no compact sets given; use --config or --sets".into()));
    }
    Ok((cfg, source))
}

fn task(cmd: &Command, cfg: &mut ExperimentConfig) -> vecgas::Result<Task> {
    Ok(match cmd {
        Command::Equilibrium => Task::Equilibrium,
        Command::Fekete { k_range } => Task::Fekete { k_range: parse_k_range(k_range)? },
        Command::Sample { k, draws } => Task::Sample { k: *k, draws: *draws },
        Command::Ldp { k_range, eta } => Task::Ldp { k_range: parse_k_range(k_range)?, eta: *eta },
        Command::BmTest { rational, k_range, component } => {
            if let Some(c) = component {
                cfg.bmtest.component = *c;
            }
            Task::BmTest { rational: *rational, k_range: parse_k_range(k_range)? }
        }
        Command::Validate => Task::Validate,
    })
}

fn run(cli: Cli) -> vecgas::Result<i32> {
    let (mut cfg, source) = configure(&cli.global)?;
    let task = task(&cli.command, &mut cfg)?;
    let g = &cli.global;
    let opts = RunOptions {
        out: g.out.clone(),
        seed: g.seed,
        force: g.force,
        threads: g.threads,
        source,
        args: std::env::args().skip(1).collect(),
    };
    let mut pool = rayon::ThreadPoolBuilder::new();
    if let Some(n) = g.threads {
        pool = pool.num_threads(n);
    }
    let pool = pool.build().map_err(|e| Error::Config(e.to_string()))?;
    let outcome = pool.install(|| run_experiment(&cfg, &task, &opts))?;
    Ok(outcome.exit_code())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    let cli = Cli::parse();
    let code = match run(cli) {
        Ok(code) => code,
        Err(e) => {
            log::error!("{e}");
            error_exit_code(&e)
        }
    };
    ExitCode::from(code as u8)
}
