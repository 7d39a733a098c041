use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use envforge::coeffs::coefficient_set;
use envforge::snapshot::{read_direct, read_envelope};
use envforge::system::toy_system;
use envforge::C64;
use serde_json::Value;
use tempfile::TempDir;

const TOY: &str = "[system]\nname = \"toy\"\n\n[carrier]\nk = [0.5]\n";
const DOMAIN: &str = "[domain]\nlength = 25.132741228718345\npoints = 64\n";

fn envforge(args: &[&str], envs: &[(&str, &str)]) -> Output {
    let mut cmd = Command::new(env!("CARGO_BIN_EXE_envforge"));
    cmd.args(args).env_remove("ENVFORGE_THREADS");
    for (k, v) in envs {
        cmd.env(k, v);
    }
    cmd.output().expect("binary runs")
}

/// Writes `config.toml` and returns (config path, output dir).
fn setup(dir: &TempDir, text: &str) -> (PathBuf, PathBuf) {
    let cfg = dir.path().join("config.toml");
    std::fs::write(&cfg, text).unwrap();
    (cfg, dir.path().join("out"))
}

fn run(cmd: &str, cfg: &Path, out: &Path) -> Output {
    envforge(&[cmd, cfg.to_str().unwrap(), "--out", out.to_str().unwrap()], &[])
}

fn json(path: &Path) -> Value {
    serde_json::from_str(&std::fs::read_to_string(path).unwrap()).unwrap()
}

fn csv_column(path: &Path, name: &str) -> Vec<f64> {
    let text = std::fs::read_to_string(path).unwrap();
    let mut lines = text.lines();
    let col = lines.next().unwrap().split(',').position(|h| h == name).unwrap();
    lines.map(|l| l.split(',').nth(col).unwrap().parse().unwrap()).collect()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

#[test]
fn coeffs_reports_engine_coefficients() {
    let dir = TempDir::new().unwrap();
    let (cfg, _) = setup(&dir, TOY);
    let o = envforge(&["coeffs", cfg.to_str().unwrap()], &[]);
    assert!(o.status.success(), "{}", stderr(&o));
    let doc: Value = serde_json::from_slice(&o.stdout).unwrap();
    let engine = coefficient_set(&toy_system(), &[0.5]).unwrap();
    let beta = doc["nls"]["nonlinear_coeff"][0].as_f64().unwrap();
    assert!((beta - engine.nls.nonlinear_coeff.re).abs() < 1e-15);
    assert!((doc["nls"]["dispersion_coeff"].as_f64().unwrap() + 0.25).abs() < 1e-12);
    assert!(!doc["nls"]["records"].as_array().unwrap().is_empty());
}

#[test]
fn coeffs_deep_water_dispersion() {
    let dir = TempDir::new().unwrap();
    let (cfg, _) = setup(&dir, "[system]\nname = \"deepwater\"\n\n[carrier]\nk = [1.0]\n");
    let o = envforge(&["coeffs", cfg.to_str().unwrap()], &[]);
    assert!(o.status.success(), "{}", stderr(&o));
    let doc: Value = serde_json::from_slice(&o.stdout).unwrap();
    assert!((doc["nls"]["dispersion_coeff"].as_f64().unwrap() + 0.125).abs() < 1e-12);
}

#[test]
fn degenerate_carrier_exits_3() {
    let dir = TempDir::new().unwrap();
    let (cfg, _) = setup(&dir, &TOY.replace("0.5", "1.0"));
    let o = envforge(&["coeffs", cfg.to_str().unwrap()], &[]);
    assert_eq!(o.status.code(), Some(3));
    assert!(stderr(&o).contains("degenerate carrier"), "{}", stderr(&o));
}

#[test]
fn config_errors_exit_2() {
    let dir = TempDir::new().unwrap();
    for text in [
        format!("{TOY}colour = \"blue\"\n"),
        "[system]\nname = \"toy\"\nextra = 1\n\n[carrier]\nk = [0.5]\n".to_string(),
        "[system]\nname = \"toy\"\ndissipation = { kind = \"constant\", delta = 0.1, p = 2 }\n\n[carrier]\nk = [0.5]\n".to_string(),
        "[system]\nname = \"pendulum\"\n".to_string(),
        "not toml at all [".to_string(),
    ] {
        let (cfg, _) = setup(&dir, &text);
        let o = envforge(&["coeffs", cfg.to_str().unwrap()], &[]);
        assert_eq!(o.status.code(), Some(2), "{text}: {}", stderr(&o));
    }
    // a missing section is a config error too
    let (cfg, out) = setup(&dir, TOY);
    assert_eq!(run("simulate-envelope", &cfg, &out).status.code(), Some(2));
}

#[test]
fn polynomial_system_matches_builtin_toy() {
    let dir = TempDir::new().unwrap();
    let text = r#"
[system]
name = "polynomial"
linear = [{ powers = [5], im = 1.0 }, { powers = [3], im = -1.0 }]
bilinear = [
    { powers = [0, 1], im = 1.0 },
    { powers = [1, 2], im = -1.0 },
    { powers = [0, 3], im = -1.0 },
]

[carrier]
k = [0.5]
"#;
    let (cfg, _) = setup(&dir, text);
    let poly = envforge(&["coeffs", cfg.to_str().unwrap()], &[]);
    assert!(poly.status.success(), "{}", stderr(&poly));
    let (cfg, _) = setup(&dir, TOY);
    let toy = envforge(&["coeffs", cfg.to_str().unwrap()], &[]);
    let (p, t): (Value, Value) = (
        serde_json::from_slice(&poly.stdout).unwrap(),
        serde_json::from_slice(&toy.stdout).unwrap(),
    );
    assert_eq!(p["nls"], t["nls"]);
    assert_eq!(p["hnls"], t["hnls"]);
}

#[test]
fn amplifying_dissipation_warns() {
    let dir = TempDir::new().unwrap();
    let text = "[system]\nname = \"toy\"\ndissipation = { kind = \"constant\", delta = -0.01 }\n\n[carrier]\nk = [0.5]\n";
    let (cfg, _) = setup(&dir, text);
    let o = envforge(&["coeffs", cfg.to_str().unwrap()], &[]);
    assert!(o.status.success());
    assert!(stderr(&o).contains("warning"), "{}", stderr(&o));
}

fn envelope_config(initial: &str, envelope: &str) -> String {
    format!("{TOY}\n{DOMAIN}\n[initial]\n{initial}\n\n[envelope]\n{envelope}\n")
}

#[test]
fn zero_initial_condition_stays_zero() {
    let dir = TempDir::new().unwrap();
    let (cfg, out) = setup(&dir, &envelope_config("kind = \"zero\"", "dt = 0.01\ntau_end = 0.5\nequation = \"hnls\"\nsamples = 5\nsnapshots = true"));
    let o = run("simulate-envelope", &cfg, &out);
    assert!(o.status.success(), "{}", stderr(&o));
    assert!(csv_column(&out.join("diagnostics.csv"), "mass").iter().all(|&m| m == 0.0));
    for i in 0..=5 {
        let s = read_envelope(&mut std::fs::File::open(out.join(format!("envelope_{i:04}.envf"))).unwrap()).unwrap();
        assert!(s.a.iter().chain(s.b.as_ref().unwrap()).all(|z| z.norm() == 0.0));
    }
}

#[test]
fn plane_wave_snapshot_matches_rotation() {
    let dir = TempDir::new().unwrap();
    let (cfg, out) = setup(
        &dir,
        &envelope_config("kind = \"plane-wave\"\namplitude = 0.1", "dt = 0.01\ntau_end = 10.0\nsamples = 2\nsnapshots = true"),
    );
    let o = run("simulate-envelope", &cfg, &out);
    assert!(o.status.success(), "{}", stderr(&o));
    let last = read_envelope(&mut std::fs::File::open(out.join("envelope_0002.envf")).unwrap()).unwrap();
    assert!((last.tau - 10.0).abs() < 1e-12);
    let beta = coefficient_set(&toy_system(), &[0.5]).unwrap().nls.nonlinear_coeff.re;
    let exact = C64::from_polar(0.1, beta * 0.01 * 10.0);
    assert!(last.a.iter().all(|z| (z - exact).norm() < 1e-8));

    let manifest = json(&out.join("manifest.json"));
    assert_eq!(manifest["status"], "ok");
    assert_eq!(manifest["command"], "simulate-envelope");
    assert_eq!(manifest["config_sha256"].as_str().unwrap().len(), 64);
    assert!(manifest["config"].as_str().unwrap().contains("plane-wave"));
    assert!(manifest["wall_clock_s"].as_f64().unwrap() >= 0.0);
    assert!(manifest["version"].is_string());
}

#[test]
fn identical_configs_give_identical_csv() {
    let dir = TempDir::new().unwrap();
    let text = envelope_config(
        "kind = \"plane-wave\"\namplitude = 1.0\nmodulation = 0.3",
        "dt = 1e-3\ntau_end = 0.5\nequation = \"hnls\"\nsamples = 10",
    );
    let (cfg, out) = setup(&dir, &text);
    let other = dir.path().join("again");
    assert!(run("simulate-envelope", &cfg, &out).status.success());
    assert!(run("simulate-envelope", &cfg, &other).status.success());
    let a = std::fs::read(out.join("diagnostics.csv")).unwrap();
    assert_eq!(a, std::fs::read(other.join("diagnostics.csv")).unwrap());
    // only finished files, no temporaries
    let names: Vec<String> = std::fs::read_dir(&out)
        .unwrap()
        .map(|e| e.unwrap().file_name().into_string().unwrap())
        .collect();
    assert_eq!(names.len(), 2, "{names:?}");
}

#[test]
fn blow_up_exits_4_with_failure_time() {
    let dir = TempDir::new().unwrap();
    let (cfg, out) = setup(
        &dir,
        &envelope_config("kind = \"plane-wave\"\namplitude = 1e7", "dt = 0.01\ntau_end = 1.0\nsamples = 4"),
    );
    let o = run("simulate-envelope", &cfg, &out);
    assert_eq!(o.status.code(), Some(4), "{}", stderr(&o));
    let manifest = json(&out.join("manifest.json"));
    assert_eq!(manifest["status"], "failed");
    assert!((manifest["failure"]["time"].as_f64().unwrap() - 0.01).abs() < 1e-12);
    assert!(out.join("diagnostics.csv").exists());
}

#[test]
fn direct_run_writes_real_snapshots() {
    let dir = TempDir::new().unwrap();
    let text = format!(
        "{TOY}\n{DOMAIN}\n[initial]\nkind = \"plane-wave\"\namplitude = 1.0\nmodulation = 0.5\n\n[direct]\neps = 0.1\ndt = 0.2\ntau_end = 0.1\nsamples = 2\nsnapshots = true\n"
    );
    let (cfg, out) = setup(&dir, &text);
    let o = run("simulate-direct", &cfg, &out);
    assert!(o.status.success(), "{}", stderr(&o));
    let last = read_direct(&mut std::fs::File::open(out.join("direct_0002.dirf")).unwrap()).unwrap();
    assert!((last.t - 10.0).abs() < 1e-12);
    assert_eq!(last.eps, 0.1);
    // 20 carrier wavelengths at 16 points each
    assert_eq!(last.u.len(), 512);
    let mean = csv_column(&out.join("diagnostics.csv"), "integral");
    assert!(mean.iter().all(|m| (m - mean[0]).abs() < 1e-9 * mean[0].abs().max(1.0)));
}

#[test]
fn direct_run_rejects_non_toy_systems() {
    let dir = TempDir::new().unwrap();
    let text = format!("[system]\nname = \"deepwater\"\n\n[carrier]\nk = [1.0]\n\n{DOMAIN}\n[initial]\nkind = \"zero\"\n\n[direct]\neps = 0.1\ndt = 0.2\ntau_end = 0.1\n");
    let (cfg, out) = setup(&dir, &text);
    assert_eq!(run("simulate-direct", &cfg, &out).status.code(), Some(2));
}

fn study_config(eps: &str, tau_end: f64) -> String {
    format!("[system]\nname = \"toy\"\n\n[study]\neps = {eps}\ntau_end = {tau_end}\n")
}

#[test]
fn validate_needs_three_eps() {
    let dir = TempDir::new().unwrap();
    let (cfg, out) = setup(&dir, &study_config("[0.05]", 1.0));
    let o = run("validate", &cfg, &out);
    assert_eq!(o.status.code(), Some(2), "{}", stderr(&o));
}

#[test]
fn validate_at_zero_time_is_unreliable() {
    let dir = TempDir::new().unwrap();
    let (cfg, out) = setup(&dir, &study_config("[0.1, 0.05, 0.025]", 0.0));
    let o = run("validate", &cfg, &out);
    assert_eq!(o.status.code(), Some(5), "{}", stderr(&o));
    let report = json(&out.join("report.json"));
    for r in report["reports"].as_array().unwrap() {
        assert!(r["l2"].as_array().unwrap().iter().all(|e| e.as_f64().unwrap() < 1e-10));
    }
    assert_eq!(json(&out.join("manifest.json"))["status"], "failed");
}

#[test]
fn validate_standard_study_separates_orders() {
    let dir = TempDir::new().unwrap();
    let (cfg, out) = setup(&dir, &study_config("[0.05, 0.025, 0.0125]", 1.0));
    let o = run("validate", &cfg, &out);
    assert!(o.status.success(), "{}", stderr(&o));
    let report = json(&out.join("report.json"));
    assert!(report["separation"].as_f64().unwrap() >= 0.7, "{report}");
    for mode in ["nls", "hnls"] {
        let l2 = csv_column(&out.join(format!("convergence_{mode}.csv")), "l2");
        assert_eq!(l2.len(), 3);
        assert!(l2.windows(2).all(|w| w[1] < w[0]));
    }
}

fn mi_config(a: &str, q: &str) -> String {
    format!("[system]\nname = \"deepwater\"\n\n[carrier]\nk = [1.0]\n\n[mi]\na = {a}\nq = {q}\n")
}

#[test]
fn mi_scan_matches_band() {
    let dir = TempDir::new().unwrap();
    // band edge 4a = 1.2, center 2 sqrt(2) a
    let (cfg, out) = setup(&dir, &mi_config("[0.3]", "[0.8485281374238571, 1.8]"));
    let o = envforge(
        &["mi-scan", cfg.to_str().unwrap(), "--out", out.to_str().unwrap()],
        &[("ENVFORGE_THREADS", "2")],
    );
    assert!(o.status.success(), "{}", stderr(&o));
    let file = out.join("mi_scan.csv");
    let measured = csv_column(&file, "measured");
    let predicted = csv_column(&file, "predicted");
    assert!(((measured[0] - predicted[0]) / predicted[0]).abs() < 0.05);
    assert_eq!(predicted[1], 0.0);
    assert!(measured[1] < 1e-3 * predicted[0]);
    assert_eq!(json(&out.join("manifest.json"))["threads"], 2);
}

#[test]
fn mi_scan_empty_grid_writes_header_only() {
    let dir = TempDir::new().unwrap();
    let (cfg, out) = setup(&dir, &mi_config("[]", "[0.5]"));
    assert!(run("mi-scan", &cfg, &out).status.success());
    assert_eq!(
        std::fs::read_to_string(out.join("mi_scan.csv")).unwrap(),
        "k,a,q,measured,predicted,status\n"
    );
}

#[test]
fn bad_thread_cap_is_a_config_error() {
    let dir = TempDir::new().unwrap();
    let (cfg, out) = setup(&dir, &mi_config("[]", "[]"));
    let o = envforge(
        &["mi-scan", cfg.to_str().unwrap(), "--out", out.to_str().unwrap()],
        &[("ENVFORGE_THREADS", "zero")],
    );
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn shipped_configs_parse() {
    let dir = Path::new(env!("CARGO_MANIFEST_DIR")).join("configs");
    for entry in std::fs::read_dir(dir).unwrap() {
        let path = entry.unwrap().path();
        let text = std::fs::read_to_string(&path).unwrap();
        let parsed: Result<toml::Value, _> = toml::from_str(&text);
        assert!(parsed.is_ok(), "{}", path.display());
    }
    let cfg = Path::new(env!("CARGO_MANIFEST_DIR")).join("configs/toy_coeffs.toml");
    let o = envforge(&["coeffs", cfg.to_str().unwrap()], &[]);
    assert!(o.status.success(), "{}", stderr(&o));
}
