//! Driving a run from a TOML configuration, as the `vecgas` binary does.
//!
//! Writes the equilibrium CSV files and `manifest.toml` into a directory
//! given as the first argument (default `out/config_run`).

use std::path::PathBuf;

use vecgas::experiment::{run_experiment, ExperimentConfig, RunOptions, Task};

const CONFIG: &str = r#"
[problem]
preset = "angelesco"
sets = "[-1,0];[0,1]"
weights = ["0", "x^2"]

[grid]
resolution = 300

[solver]
tol = 1e-3
"#;

fn main() -> vecgas::Result<()> {
    let out = std::env::args().nth(1).map(PathBuf::from).unwrap_or_else(|| PathBuf::from("out/config_run"));
    let cfg = ExperimentConfig::from_toml(CONFIG)?;
    let opts = RunOptions { out: Some(out.clone()), source: CONFIG.into(), ..RunOptions::default() };
    let outcome = run_experiment(&cfg, &Task::Equilibrium, &opts)?;
    println!("{outcome:?} (exit code {}), results in {}", outcome.exit_code(), out.display());
    Ok(())
}
