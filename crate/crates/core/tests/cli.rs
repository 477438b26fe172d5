use std::fs;
use std::path::Path;
use std::process::Command;

fn vecgas(args: &[&str], out: &Path) -> i32 {
    Command::new(env!("CARGO_BIN_EXE_vecgas"))
        .args(args)
        .arg("--out")
        .arg(out)
        .env("RUST_LOG", "off")
        .status()
        .expect("binary runs")
        .code()
        .expect("exit code")
}

fn write_config(dir: &Path, body: &str) -> String {
    let path = dir.join("run.toml");
    fs::write(&path, body).unwrap();
    path.to_string_lossy().into_owned()
}

#[test]
fn validation_failure_exits_with_2() {
    let dir = tempfile::tempdir().unwrap();
    let code = vecgas(&["validate", "--preset", "nikishin", "--sets", "[-1,1];[0,2]"], dir.path());
    assert_eq!(code, 2);
    let report = fs::read_to_string(dir.path().join("hypotheses.csv")).unwrap();
    assert!(report.contains("nonnegative_on_intersections,false"));
    assert!(dir.path().join("manifest.toml").exists());
}

#[test]
fn forced_run_proceeds_past_failed_hypotheses() {
    let dir = tempfile::tempdir().unwrap();
    let args = ["equilibrium", "--preset", "nikishin", "--sets", "[-1,1];[0,2]"];
    assert_eq!(vecgas(&args, dir.path()), 2);
    assert!(!dir.path().join("minimizer.csv").exists());
    let mut forced = args.to_vec();
    forced.push("--force");
    assert_ne!(vecgas(&forced, dir.path()), 2);
    assert!(dir.path().join("minimizer.csv").exists());
}

#[test]
fn configuration_errors_exit_with_1() {
    let dir = tempfile::tempdir().unwrap();
    assert_eq!(vecgas(&["equilibrium"], dir.path()), 1);
    assert_eq!(vecgas(&["equilibrium", "--preset", "hyperbolic", "--sets", "[0,1]"], dir.path()), 1);
    let cfg = write_config(dir.path(), "[problem]\nsets = \"[0,1]\"\ncolour = 3\n");
    assert_eq!(vecgas(&["equilibrium", "--config", &cfg], dir.path()), 1);
    assert_eq!(vecgas(&["fekete", "--sets", "[0,1]", "--k-range", "4..2"], dir.path()), 1);
}

#[test]
fn non_convergence_exits_with_3_after_writing() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(
        dir.path(),
        "[problem]\npreset = \"angelesco\"\nsets = \"[-1,0];[0,1]\"\n[solver]\ntol = 1e-9\nmax_iter = 3\npolish = false\n",
    );
    assert_eq!(vecgas(&["equilibrium", "--config", &cfg], dir.path()), 3);
    assert!(dir.path().join("minimizer.csv").exists());
    let manifest = fs::read_to_string(dir.path().join("manifest.toml")).unwrap();
    assert!(manifest.contains("NotConverged"));
}

#[test]
fn reruns_are_identical_across_thread_counts() {
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    let args = ["sample", "--preset", "angelesco", "--sets", "[-1,0];[0,1]", "--k", "3", "--draws", "80", "--seed", "5"];
    let mut one = args.to_vec();
    one.extend(["--threads", "1"]);
    assert_eq!(vecgas(&one, a.path()), 0);
    let status = Command::new(env!("CARGO_BIN_EXE_vecgas"))
        .args(args)
        .arg("--out")
        .arg(b.path())
        .env("VECGAS_THREADS", "4")
        .env("RUST_LOG", "off")
        .status()
        .unwrap();
    assert_eq!(status.code(), Some(0));
    for f in ["draws.csv", "diagnostics.csv"] {
        assert_eq!(fs::read(a.path().join(f)).unwrap(), fs::read(b.path().join(f)).unwrap(), "{f} differs");
    }
    let manifest = fs::read_to_string(b.path().join("manifest.toml")).unwrap();
    assert!(manifest.contains("threads = 4") && manifest.contains("seed = 5"));
}

#[test]
fn every_subcommand_writes_its_tables() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(
        dir.path(),
        r#"
[problem]
sets = "[-1,1]"
[grid]
resolution = 120
[ensemble]
draws = 60
burn_in = 20
chains = 2
[ldp]
neighborhoods = [{ center = "equilibrium", radius = 0.3 }]
"#,
    );
    let cases: [(&[&str], &[&str]); 5] = [
        (&["equilibrium"], &["minimizer.csv", "residuals.csv", "energy.csv"]),
        (&["fekete", "--k-range", "2..5"], &["diameter.csv", "configurations.csv"]),
        (&["sample", "--k", "4"], &["draws.csv", "diagnostics.csv"]),
        (&["ldp", "--k-range", "2..4"], &["summary.csv", "fits.csv"]),
        (&["bm-test", "--k-range", "1..6"], &["curve.csv"]),
    ];
    for (args, files) in cases {
        let out = dir.path().join(args[0]);
        let mut full = args.to_vec();
        full.extend(["--config", &cfg]);
        assert_eq!(vecgas(&full, &out), 0, "{args:?}");
        for f in files.iter().chain(&["hypotheses.csv", "manifest.toml"]) {
            let text = fs::read_to_string(out.join(f)).unwrap_or_else(|_| panic!("{f} missing for {args:?}"));
            assert!(text.lines().count() >= 2, "{f} is empty for {args:?}");
        }
    }
}
