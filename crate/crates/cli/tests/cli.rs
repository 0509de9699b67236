use dfrt_core::basis::{BeamBasis, ModeIndex};
use dfrt_core::dynamics::{random_real_coefficients, CouplingTensor, GammaEntry};
use dfrt_core::io;
use dfrt_core::transform::{synthesize_on_grid, QuadratureGrid};
use dfrt_core::Complex64;
use serde_json::Value;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};
use std::sync::Arc;

fn dfrt(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_dfrt")).args(args).env_remove(io::CACHE_DIR_ENV).output().unwrap()
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

fn p(path: &Path) -> &str {
    path.to_str().unwrap()
}

fn manifest(path: &Path) -> Value {
    let m = dfrt_cli::manifest_path(path);
    serde_json::from_str(&std::fs::read_to_string(&m).unwrap_or_else(|_| panic!("no manifest {}", m.display())))
        .unwrap()
}

/// In-span field on the (3, 2) reference grid plus its coefficients.
fn in_span_field(dir: &Path) -> (PathBuf, dfrt_core::transform::CoefficientVector) {
    let b = BeamBasis::with_truncation(3, 2, 1.0).unwrap();
    let g = Arc::new(QuadratureGrid::reference(3, 2, 1.0).unwrap());
    let c = random_real_coefficients(b.mode_set(), 1.0, 5).unwrap();
    let f = synthesize_on_grid(&c, &b, g.clone()).unwrap();
    let path = dir.join("field.csv");
    io::write_field_csv(&path, &g, &f.values_on(&g).unwrap()).unwrap();
    (path, c)
}

#[test]
fn wigner_three_j_example() {
    let o = dfrt(&["wigner", "--3j", "1", "1", "0", "0", "0", "0"]);
    assert_eq!(o.status.code(), Some(0));
    let out = stdout(&o);
    let v: f64 = out.lines().next().unwrap().trim().parse().unwrap();
    assert!((v + 1.0 / 3f64.sqrt()).abs() < 1e-15);
    assert!(out.contains("-1/sqrt(3)"), "{out}");
}

#[test]
fn wigner_six_j_and_cg() {
    let o = dfrt(&["wigner", "--6j", "1", "1", "1", "1", "1", "1"]);
    assert_eq!(o.status.code(), Some(0));
    assert!(stdout(&o).contains("1/6"));
    let o = dfrt(&["wigner", "--cg", "1", "1", "1", "-1", "0", "0"]);
    assert_eq!(o.status.code(), Some(0));
    assert!(stdout(&o).contains("1/sqrt(3)"));
}

#[test]
fn special_functions() {
    let o = dfrt(&["special", "zeros", "0", "2"]);
    assert_eq!(o.status.code(), Some(0));
    let z: Vec<f64> = stdout(&o).lines().map(|l| l.parse().unwrap()).collect();
    assert!((z[0] - std::f64::consts::PI).abs() < 1e-12 && (z[1] - 2.0 * std::f64::consts::PI).abs() < 1e-12);
    let o = dfrt(&["special", "bessel", "0", "1.0"]);
    let v: f64 = stdout(&o).trim().parse().unwrap();
    assert!((v - 1f64.sin()).abs() < 1e-15);
}

#[test]
fn infeasible_maxent_exits_two() {
    let o = dfrt(&["maxent", "--C", "999", "--lmax", "3"]);
    assert_eq!(o.status.code(), Some(2));
    let err = stderr(&o);
    let line = err.lines().next().unwrap();
    assert!(line.starts_with("error kind=infeasible message="), "{line}");
    assert!(line.contains("(1, 9)"), "{line}");
}

#[test]
fn maxent_writes_json() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("maxent.json");
    let o = dfrt(&["maxent", "--C", "3", "--lmax", "4", "--out", p(&out)]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let v: Value = serde_json::from_str(&std::fs::read_to_string(&out).unwrap()).unwrap();
    assert!(v["mu"].as_f64().unwrap() > 0.0);
    assert_eq!(manifest(&out)["subcommand"], "maxent");
}

#[test]
fn usage_errors_exit_one() {
    let o = dfrt(&["wigner", "--bogus"]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).starts_with("error kind=usage"));
    assert_eq!(dfrt(&["no-such-command"]).status.code(), Some(1));
    assert_eq!(dfrt(&["--help"]).status.code(), Some(0));
    assert_eq!(dfrt(&["--version"]).status.code(), Some(0));
}

#[test]
fn verify_reports_in_span_field() {
    let dir = tempfile::tempdir().unwrap();
    let (field, _) = in_span_field(dir.path());
    let out = dir.path().join("verify.json");
    let o = dfrt(&["verify", "--field", p(&field), "--lmax", "3", "--nmax", "2", "--out", p(&out)]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let v: Value = serde_json::from_str(&stdout(&o)).unwrap();
    assert!(v["parseval_gap"].as_f64().unwrap() < 1e-8);
    assert!(v["gram_max_offdiag"].as_f64().unwrap() < 1e-6);
    assert!(v["div_max"].as_f64().unwrap() < 1e-6);
    let m = manifest(&out);
    assert_eq!(m["inputs"][0]["sha256"], io::sha256_file(&field).unwrap());
}

#[test]
fn transform_and_reconstruct_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    let (field, c) = in_span_field(dir.path());
    let coeffs = dir.path().join("a.csv");
    let o = dfrt(&[
        "transform",
        "--field",
        p(&field),
        "--lmax",
        "3",
        "--nmax",
        "2",
        "--grid",
        "24,22,28",
        "--out",
        p(&coeffs),
    ]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let a = io::read_coeffs_csv(&coeffs, 1.0).unwrap();
    for (x, y) in a.values().iter().zip(c.values()) {
        assert!((x - y).norm() < 1e-6);
    }
    assert!(dfrt_cli::manifest_path(&coeffs).exists());

    let bad = dfrt(&[
        "transform",
        "--field",
        p(&field),
        "--lmax",
        "3",
        "--nmax",
        "2",
        "--grid",
        "10,10,10",
        "--out",
        p(&coeffs),
    ]);
    assert_eq!(bad.status.code(), Some(1));

    let pts = dir.path().join("pts.csv");
    io::write_points_csv(&pts, &[[0.1, 0.2, 0.3], [-0.5, 0.0, 0.25]]).unwrap();
    let rec = dir.path().join("u.csv");
    let o = dfrt(&["reconstruct", "--coeffs", p(&coeffs), "--points", p(&pts), "--out", p(&rec)]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let text = std::fs::read_to_string(&rec).unwrap();
    assert_eq!(text.lines().count(), 3);
}

#[test]
fn spectrum_and_coboundary() {
    let dir = tempfile::tempdir().unwrap();
    let (field, _) = in_span_field(dir.path());
    let coeffs = dir.path().join("a.csv");
    assert_eq!(
        dfrt(&["transform", "--field", p(&field), "--lmax", "3", "--nmax", "2", "--out", p(&coeffs)]).status.code(),
        Some(0)
    );

    let spec = dir.path().join("spec.csv");
    let o = dfrt(&["spectrum", "--coeffs", p(&coeffs), "--out", p(&spec)]);
    assert_eq!(o.status.code(), Some(0));
    assert!(std::fs::read_to_string(&spec).unwrap().starts_with("ell,E,P"));

    let d = dir.path().join("da.csv");
    let rep = dir.path().join("report.json");
    let o = dfrt(&[
        "coboundary",
        "--coeffs",
        p(&coeffs),
        "--spins",
        "1,1,1",
        "--kernel",
        "unit",
        "--out",
        p(&d),
        "--report",
        p(&rep),
    ]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let r: Value = serde_json::from_str(&std::fs::read_to_string(&rep).unwrap()).unwrap();
    assert!(r["nilpotency"]["ratio"].as_f64().unwrap().is_finite());
    assert_eq!((r["degree_in"].as_u64(), r["degree_out"].as_u64()), (Some(0), Some(1)));
    assert_eq!(io::read_coeffs_csv(&d, 1.0).unwrap().len(), 30);

    let o = dfrt(&["coboundary", "--coeffs", p(&coeffs), "--spins", "9,1,1", "--out", p(&d)]);
    assert_eq!(o.status.code(), Some(1));
}

fn write_config(dir: &Path, body: &str) -> PathBuf {
    let path = dir.join("sim.json");
    std::fs::write(&path, body).unwrap();
    path
}

#[test]
fn coupling_simulate_decay_report_pipeline() {
    let dir = tempfile::tempdir().unwrap();
    let gamma = dir.path().join("gamma.bin");
    let o = dfrt(&["coupling", "--lmax", "2", "--nmax", "2", "--out", p(&gamma)]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let info: Value = serde_json::from_str(&stdout(&o)).unwrap();
    assert!(io::sidecar_path(&gamma).exists());
    assert_eq!(info["hash"], io::sha256_file(&gamma).unwrap());

    // deterministic: a second run produces the same bytes
    let gamma2 = dir.path().join("gamma2.bin");
    assert_eq!(dfrt(&["coupling", "--lmax", "2", "--nmax", "2", "--out", p(&gamma2)]).status.code(), Some(0));
    assert_eq!(std::fs::read(&gamma).unwrap(), std::fs::read(&gamma2).unwrap());

    let cfg = write_config(
        dir.path(),
        r#"{"nu": 0.01, "dt": 0.001, "t_end": 0.1, "initial": {"random_seed": 3, "amplitude": 0.5}}"#,
    );
    let traj = dir.path().join("traj.csv");
    let o = dfrt(&["simulate", "--config", p(&cfg), "--gamma", p(&gamma), "--out", p(&traj)]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let m = manifest(&traj);
    assert_eq!(m["cache_hashes"][0]["sha256"], info["hash"]);
    let t = io::read_trajectory_csv(&traj, 1.0).unwrap();
    assert_eq!(t.len(), 101);
    assert!(t.energy.windows(2).all(|w| w[1] <= w[0] + 1e-12));

    let report = dir.path().join("decay.csv");
    let o = dfrt(&["decay-report", "--traj", p(&traj), "--mu-min", "0", "--out", p(&report)]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let text = std::fs::read_to_string(&report).unwrap();
    assert!(text.starts_with("t,status,mu,r_squared,satisfies"));
    assert_eq!(text.lines().count(), 102);
}

#[test]
fn coupling_uses_the_cache_directory() {
    let dir = tempfile::tempdir().unwrap();
    let cache = dir.path().join("cache");
    let run = |out: &Path| {
        Command::new(env!("CARGO_BIN_EXE_dfrt"))
            .args(["coupling", "--lmax", "2", "--nmax", "1", "--out", p(out)])
            .env(io::CACHE_DIR_ENV, &cache)
            .output()
            .unwrap()
    };
    let first = run(&dir.path().join("g1.bin"));
    let second = run(&dir.path().join("g2.bin"));
    let a: Value = serde_json::from_str(&stdout(&first)).unwrap();
    let b: Value = serde_json::from_str(&stdout(&second)).unwrap();
    assert_eq!(a["cache_hit"], false);
    assert_eq!(b["cache_hit"], true);
    assert_eq!(a["hash"], b["hash"]);
}

#[test]
fn config_errors_name_the_key() {
    let dir = tempfile::tempdir().unwrap();
    let gamma = dir.path().join("gamma.bin");
    io::write_gamma(&gamma, &CouplingTensor::zeroed(dfrt_core::basis::ModeSet::new(1, 1, 1.0).unwrap())).unwrap();
    let traj = dir.path().join("traj.csv");
    for (body, key) in [
        (r#"{"nu": -1, "dt": 0.001, "t_end": 1}"#, "nu"),
        (r#"{"nu": 0.1, "t_end": 1}"#, "dt"),
        (r#"{"nu": 0.1, "dt": 0.001, "t_end": 1, "forcing": 2}"#, "forcing"),
        (r#"{"nu": 0.1, "dt": 0.001, "t_end": 1, "initial": {"random_seed": 1, "mode_coeffs": []}}"#, "initial"),
    ] {
        let cfg = write_config(dir.path(), body);
        let o = dfrt(&["simulate", "--config", p(&cfg), "--gamma", p(&gamma), "--out", p(&traj)]);
        assert_eq!(o.status.code(), Some(1), "{body}");
        let err = stderr(&o);
        assert!(err.starts_with("error kind=config"), "{err}");
        assert!(err.contains(key), "{body}: {err}");
    }
}

#[test]
fn blow_up_exits_two_after_writing_outputs() {
    let dir = tempfile::tempdir().unwrap();
    let ms = dfrt_core::basis::ModeSet::new(2, 1, 1.0).unwrap();
    let k = ms.index_of(&ModeIndex::new(2, 0, 1).unwrap()).unwrap();
    let t = CouplingTensor::from_entries(
        ms,
        vec![GammaEntry { i: k, j: k, k, value: Complex64::new(1.0, 0.0) }],
        (0, 0, 0),
    )
    .unwrap();
    let gamma = dir.path().join("gamma.bin");
    io::write_gamma(&gamma, &t).unwrap();
    let cfg = write_config(
        dir.path(),
        r#"{"nu": 0.0, "dt": 0.001, "t_end": 3, "real_field": false, "initial": {"mode_coeffs": [{"ell": 2, "m": 0, "n": 1, "re": 1.0}]}}"#,
    );
    let traj = dir.path().join("traj.csv");
    let o = dfrt(&["simulate", "--config", p(&cfg), "--gamma", p(&gamma), "--out", p(&traj)]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).starts_with("error kind=non_finite"), "{}", stderr(&o));
    assert!(traj.exists() && dfrt_cli::manifest_path(&traj).exists());
}

#[test]
fn tampered_gamma_is_rejected() {
    let dir = tempfile::tempdir().unwrap();
    let gamma = dir.path().join("gamma.bin");
    io::write_gamma(&gamma, &CouplingTensor::zeroed(dfrt_core::basis::ModeSet::new(1, 1, 1.0).unwrap())).unwrap();
    let mut bytes = std::fs::read(&gamma).unwrap();
    bytes[10] ^= 0xff;
    std::fs::write(&gamma, bytes).unwrap();
    let cfg = write_config(dir.path(), r#"{"nu": 0.1, "dt": 0.01, "t_end": 0.1}"#);
    let o = dfrt(&["simulate", "--config", p(&cfg), "--gamma", p(&gamma), "--out", p(&dir.path().join("t.csv"))]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).starts_with("error kind=format"), "{}", stderr(&o));
}

#[test]
fn basis_table_lists_every_shell() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("table.csv");
    let o = dfrt(&["basis-table", "--lmax", "3", "--nmax", "2", "--out", p(&out)]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let text = std::fs::read_to_string(&out).unwrap();
    assert_eq!(text.lines().count(), 1 + 6);
}
