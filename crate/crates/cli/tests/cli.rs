use std::path::Path;
use std::process::{Command, Output};

use fracball_cli::report::{RecordKind, Report};

fn run(args: &[&str], config: &Path, out: &Path, env: Option<(&str, &str)>) -> Output {
    let mut cmd = Command::new(env!("CARGO_BIN_EXE_fracball"));
    cmd.args(args)
        .arg("--config")
        .arg(config)
        .arg("--out")
        .arg(out);
    cmd.env_remove("FRACBALL_JOBS");
    if let Some((k, v)) = env {
        cmd.env(k, v);
    }
    cmd.output().expect("binary runs")
}

fn write_config(dir: &Path, text: &str) -> std::path::PathBuf {
    let p = dir.join("c.conf");
    std::fs::write(&p, text).unwrap();
    p
}

#[test]
fn eigs_writes_json_and_csv() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(
        dir.path(),
        "grid.N = [1, 2, 3]\ngrid.s = [0.5]\ntrunc.K = 12\n",
    );
    let out = dir.path().join("out");
    let res = run(&["eigs"], &cfg, &out, None);
    assert_eq!(
        res.status.code(),
        Some(0),
        "{}",
        String::from_utf8_lossy(&res.stderr)
    );
    let report = Report::decode(&std::fs::read(out.join("report.json")).unwrap()).unwrap();
    assert_eq!(report.records.len(), 3);
    assert!(report
        .records
        .iter()
        .all(|r| r.kind == RecordKind::Spectrum));
    let csv = std::fs::read_to_string(out.join("spectrum_summary.csv")).unwrap();
    assert!(csv.starts_with("N,s,K,ell_max,truncation_safe,gap,gap_err,status"));
    assert_eq!(csv.lines().count(), 4);
    assert!(out.join("spectrum.csv").exists());
}

#[test]
fn format_flag_limits_outputs() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "grid.N = [1]\ngrid.s = [0.5]\ntrunc.K = 8\n");
    let out = dir.path().join("csv-only");
    let res = run(&["eigs", "--format", "csv"], &cfg, &out, None);
    assert_eq!(res.status.code(), Some(0));
    assert!(!out.join("report.json").exists());
    assert!(out.join("spectrum.csv").exists());
}

#[test]
fn inconclusive_campaign_exits_zero() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(
        dir.path(),
        "grid.N = [1, 4]\ngrid.s = [0.1]\ntrunc.K = 4\ntrunc.n_max = 1\n",
    );
    let res = run(&["conjecture"], &cfg, &dir.path().join("o"), None);
    assert_eq!(res.status.code(), Some(0));
    assert!(String::from_utf8_lossy(&res.stdout).contains("0 no"));
}

#[test]
fn config_errors_exit_one() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "grid.N = [1]\nbogus.key = 3\n");
    let res = run(&["eigs"], &cfg, &dir.path().join("o"), None);
    assert_eq!(res.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&res.stderr).contains("bogus.key"));

    let res = run(
        &["eigs"],
        &dir.path().join("missing.conf"),
        &dir.path().join("o"),
        None,
    );
    assert_eq!(res.status.code(), Some(1));
}

#[test]
fn invalid_jobs_environment_exits_one() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "grid.N = [1]\ntrunc.K = 8\n");
    let res = run(
        &["eigs"],
        &cfg,
        &dir.path().join("o"),
        Some(("FRACBALL_JOBS", "many")),
    );
    assert_eq!(res.status.code(), Some(1));
    let res = run(
        &["eigs"],
        &cfg,
        &dir.path().join("o"),
        Some(("FRACBALL_JOBS", "2")),
    );
    assert_eq!(res.status.code(), Some(0));
}

#[test]
fn seed_flag_changes_the_config_hash() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "grid.N = [1]\ntrunc.K = 8\n");
    let a = dir.path().join("a");
    let b = dir.path().join("b");
    run(&["eigs", "--seed", "1"], &cfg, &a, None);
    run(&["eigs", "--seed", "2"], &cfg, &b, None);
    let ra = Report::decode(&std::fs::read(a.join("report.json")).unwrap()).unwrap();
    let rb = Report::decode(&std::fs::read(b.join("report.json")).unwrap()).unwrap();
    assert_ne!(ra.config_hash, rb.config_hash);
    assert_eq!(ra.records[0].payload, rb.records[0].payload);
}

#[test]
fn supercritical_request_never_reports_a_solution() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(
        dir.path(),
        "grid.N = [3]\ngrid.s = [0.5]\ngrid.nonlinearity = [\"power(1, 4)\"]\ntrunc.K = 12\n",
    );
    let out = dir.path().join("o");
    let res = run(&["solve"], &cfg, &out, None);
    assert_eq!(res.status.code(), Some(0));
    let report = Report::decode(&std::fs::read(out.join("report.json")).unwrap()).unwrap();
    let rec = &report.records[0];
    let err = rec.payload["error"].as_str().expect("row records an error");
    assert!(
        err.contains("did not converge") || err.contains("trivial"),
        "{err}"
    );
}
