use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use tempfile::TempDir;

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_wittenrate"))
}

fn configs() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../configs")
}

fn write_config(dir: &TempDir, body: &str) -> PathBuf {
    let p = dir.path().join("run.json");
    fs::write(&p, body).unwrap();
    p
}

fn run(cmd: &str, config: &Path, out: &Path) -> Output {
    bin()
        .arg(cmd)
        .arg("--config")
        .arg(config)
        .arg("--out")
        .arg(out)
        .output()
        .unwrap()
}

/// Rows of a headed CSV as numbers, header dropped.
fn numeric_rows(path: &Path) -> Vec<Vec<f64>> {
    fs::read_to_string(path)
        .unwrap()
        .lines()
        .skip(1)
        .map(|l| l.split(',').map(|c| c.parse().unwrap_or(f64::NAN)).collect())
        .collect()
}

#[test]
fn quadratic_spectrum_has_harmonic_gap() {
    let dir = TempDir::new().unwrap();
    let cfg = write_config(
        &dir,
        r#"{"potential": {"family": "quadratic", "alpha": 0.5}, "beta": 2, "k": 3,
            "grid": {"lo": -6, "hi": 6, "n": 1201}}"#,
    );
    let out = dir.path().join("out");
    let o = run("spectrum", &cfg, &out);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let rows = numeric_rows(&out.join("eigenvalues.csv"));
    assert_eq!(rows.len(), 3);
    // H = -Δ + β²α²x² - βα has levels 2βα·m.
    assert!(rows[0][1].abs() < 1e-8);
    assert!((rows[1][1] - 2.0).abs() < 1e-3);
    assert!((rows[2][1] - 4.0).abs() < 2e-3);
    let vecs = fs::read_to_string(out.join("eigenvectors.csv")).unwrap();
    assert!(vecs.starts_with("x,psi0,psi1,psi2"));
    assert_eq!(vecs.lines().count(), 1202);
    assert!(out.join("manifest.json").exists());
}

#[test]
fn malformed_config_exits_2() {
    let dir = TempDir::new().unwrap();
    let cfg = write_config(&dir, r#"{"potential": {"family": "quadratic", "alpha": 0.5}, "beta": "#);
    let o = run("spectrum", &cfg, &dir.path().join("out"));
    assert_eq!(o.status.code(), Some(2));
    let cfg = write_config(
        &dir,
        r#"{"potential": {"family": "quadratic", "alpha": -1}, "beta": 1}"#,
    );
    assert_eq!(run("spectrum", &cfg, &dir.path().join("out")).status.code(), Some(2));
}

#[test]
fn too_many_eigenpairs_exits_2() {
    let dir = TempDir::new().unwrap();
    let cfg = write_config(
        &dir,
        r#"{"potential": {"family": "quadratic", "alpha": 0.5}, "beta": 1, "k": 50,
            "grid": {"lo": -3, "hi": 3, "n": 21}}"#,
    );
    assert_eq!(run("spectrum", &cfg, &dir.path().join("out")).status.code(), Some(2));
}

#[test]
fn missing_config_exits_4() {
    let dir = TempDir::new().unwrap();
    let o = run("spectrum", &dir.path().join("absent.json"), &dir.path().join("out"));
    assert_eq!(o.status.code(), Some(4));
}

#[test]
fn bad_usage_exits_2() {
    let o = bin().arg("nonsense").output().unwrap();
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn gibbs_start_stays_at_equilibrium() {
    let dir = TempDir::new().unwrap();
    let cfg = write_config(
        &dir,
        r#"{"potential": {"family": "quartic_double_well", "h": 1, "a": 1}, "beta": 4,
            "grid": {"lo": -3, "hi": 3, "n": 601}, "initial": "gibbs", "dt": 0.05, "t_end": 5,
            "snapshot_every": 50}"#,
    );
    let out = dir.path().join("out");
    let o = run("evolve", &cfg, &out);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let trace = numeric_rows(&out.join("trace.csv"));
    assert!(trace.len() > 90);
    for r in &trace {
        assert!((r[1] - 1.0).abs() < 1e-10);
        assert!(r[2] < 1e-9, "distance {}", r[2]);
    }
    assert!(out.join("snapshots.csv").exists());
    assert!(out.join("snapshot_00000.csv").exists());
}

#[test]
fn quadratic_validate_passes() {
    let dir = TempDir::new().unwrap();
    let out = dir.path().join("out");
    let o = run("validate", &configs().join("quadratic.json"), &out);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stdout));
    let table = fs::read_to_string(out.join("validate.csv")).unwrap();
    assert!(!table.contains("FAIL"));
}

#[test]
fn beta_flag_overrides_config() {
    let dir = TempDir::new().unwrap();
    let out = dir.path().join("out");
    let o = bin()
        .args(["rates", "--beta", "6", "--config"])
        .arg(configs().join("quartic.json"))
        .arg("--out")
        .arg(&out)
        .output()
        .unwrap();
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let rows = numeric_rows(&out.join("rates.csv"));
    assert_eq!(rows[0][0], 6.0);
}

#[test]
fn quartic_scan_matches_golden_and_repeats_bitwise() {
    let dir = TempDir::new().unwrap();
    let a = dir.path().join("a");
    let b = dir.path().join("b");
    let cfg = configs().join("quartic.json");
    assert!(run("scan", &cfg, &a).status.success());
    let o = bin()
        .args(["scan", "--threads", "1", "--config"])
        .arg(&cfg)
        .arg("--out")
        .arg(&b)
        .output()
        .unwrap();
    assert!(o.status.success());
    let first = fs::read(a.join("scan.csv")).unwrap();
    assert_eq!(first, fs::read(b.join("scan.csv")).unwrap());
    assert_eq!(
        fs::read(a.join("manifest.json")).unwrap(),
        fs::read(b.join("manifest.json")).unwrap()
    );

    let golden = numeric_rows(&Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/golden/quartic_scan.csv"));
    let got = numeric_rows(&a.join("scan.csv"));
    assert_eq!(golden.len(), got.len());
    for (g, r) in golden.iter().zip(&got) {
        assert_eq!(g.len(), r.len());
        for (x, y) in g.iter().zip(r) {
            assert!((x - y).abs() <= 1e-9 * x.abs().max(1e-300), "{x} vs {y}");
        }
    }
    let fits = fs::read_to_string(a.join("fits.csv")).unwrap();
    assert!(fits.lines().count() == 6);
}
