use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use tempfile::TempDir;

const SPHERE: &str = r#"
[metric]
name = "sphere"

[walk]
N = 100
start = [0.1, 0.2]
seed = 5
paths = 3
horizon = 0.1
"#;

fn geowalk(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_geowalk"))
        .args(args)
        .arg("--out-dir")
        .arg(dir)
        .env("SOURCE_DATE_EPOCH", "1700000000")
        .output()
        .expect("binary runs")
}

fn config(dir: &TempDir, text: &str) -> PathBuf {
    let path = dir.path().join("run.toml");
    fs::write(&path, text).unwrap();
    path
}

fn data_lines(text: &str) -> Vec<&str> {
    text.lines().filter(|l| !l.starts_with('#')).collect()
}

#[test]
fn zero_steps_gives_header_and_single_record() {
    let dir = TempDir::new().unwrap();
    let cfg = config(&dir, &SPHERE.replace("paths = 3", "paths = 1\nn_steps = 0"));
    let out = geowalk(dir.path(), &["simulate", "--config", cfg.to_str().unwrap()]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let text = fs::read_to_string(dir.path().join("paths.csv")).unwrap();
    assert!(text.starts_with("# geowalk "));
    assert!(text.contains("# seed: 5"));
    assert!(text.contains("# timestamp: 2023-11-14T22:13:20Z"));
    assert_eq!(data_lines(&text), vec!["path,kind,t,chart,x1,x2", "0,discrete,0,0,0.1,0.2"]);
}

#[test]
fn same_seed_gives_identical_files() {
    let dir = TempDir::new().unwrap();
    let cfg = config(&dir, SPHERE);
    let (a, b) = (dir.path().join("a"), dir.path().join("b"));
    for out in [&a, &b] {
        let o = geowalk(out, &["simulate", "--config", cfg.to_str().unwrap(), "--set", "walk.kind=subordinated"]);
        assert!(o.status.success());
    }
    let first = fs::read(a.join("paths.csv")).unwrap();
    assert_eq!(first, fs::read(b.join("paths.csv")).unwrap());

    let c = dir.path().join("c");
    assert!(geowalk(
        &c,
        &["simulate", "--config", cfg.to_str().unwrap(), "--set", "walk.kind=subordinated", "--seed", "6"]
    )
    .status
    .success());
    assert_ne!(first, fs::read(c.join("paths.csv")).unwrap());
}

#[test]
fn katok_comparison_runs_share_the_clock() {
    let dir = TempDir::new().unwrap();
    let text = SPHERE.replace("name = \"sphere\"", "name = \"katok\"\nr = 0.5");
    let cfg = config(&dir, &text);
    let (a, b) = (dir.path().join("r05"), dir.path().join("r0"));
    assert!(geowalk(&a, &["simulate", "--config", cfg.to_str().unwrap(), "--set", "walk.kind=subordinated"])
        .status
        .success());
    assert!(geowalk(
        &b,
        &["simulate", "--config", cfg.to_str().unwrap(), "--set", "walk.kind=subordinated", "--set", "metric.r=0"]
    )
    .status
    .success());
    let times = |p: &Path| -> Vec<String> {
        let text = fs::read_to_string(p.join("paths.csv")).unwrap();
        data_lines(&text).iter().skip(1).map(|l| l.split(',').take(3).collect::<Vec<_>>().join(",")).collect()
    };
    assert_eq!(times(&a), times(&b));
}

#[test]
fn svg_is_written_on_request() {
    let dir = TempDir::new().unwrap();
    let cfg = config(&dir, SPHERE);
    assert!(geowalk(dir.path(), &["simulate", "--config", cfg.to_str().unwrap(), "--svg"]).status.success());
    let svg = fs::read_to_string(dir.path().join("paths.svg")).unwrap();
    assert!(svg.starts_with("<svg") && svg.matches("<polyline").count() == 3);
}

#[test]
fn generator_reports_sphere_symbol() {
    let dir = TempDir::new().unwrap();
    let cfg = config(&dir, &format!("{SPHERE}\n[study]\nprobes = [[0.3, 0.5]]\n"));
    let out = geowalk(dir.path(), &["generator", "--config", cfg.to_str().unwrap()]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let doc: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(dir.path().join("generator.json")).unwrap()).unwrap();
    assert_eq!(doc["header"]["seed"], 5);
    let symbol = &doc["estimates"][0]["symbol"];
    let c = 0.5f64.cos();
    assert!((symbol[0][0].as_f64().unwrap() - 1.0 / (8.0 * c * c)).abs() < 1e-6);
    assert!((symbol[1][1].as_f64().unwrap() - 0.125).abs() < 1e-6);
    assert!(symbol[0][1].as_f64().unwrap().abs() < 1e-6);
}

#[test]
fn generator_with_no_probes_writes_empty_array() {
    let dir = TempDir::new().unwrap();
    let cfg = config(&dir, "[metric]\nname = \"sphere\"\n\n[study]\nprobes = []\n");
    assert!(geowalk(dir.path(), &["generator", "--config", cfg.to_str().unwrap()]).status.success());
    let doc: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(dir.path().join("generator.json")).unwrap()).unwrap();
    assert_eq!(doc["estimates"], serde_json::json!([]));
    assert!(doc["header"]["seed"].is_null());
}

#[test]
fn convergence_table_has_geometric_n_and_slope_footer() {
    let dir = TempDir::new().unwrap();
    let cfg = config(
        &dir,
        "[metric]\nname = \"katok\"\nr = 0.5\n\n[study]\nNs = [100, 400, 1600, 6400]\nprobes = [[0.2, 0.4]]\n",
    );
    assert!(geowalk(dir.path(), &["converge", "--config", cfg.to_str().unwrap()]).status.success());
    let text = fs::read_to_string(dir.path().join("convergence.csv")).unwrap();
    let rows = data_lines(&text);
    assert_eq!(rows[0], "N,sup_error");
    let ns: Vec<f64> = rows[1..].iter().map(|r| r.split(',').next().unwrap().parse().unwrap()).collect();
    assert_eq!(ns, vec![100.0, 400.0, 1600.0, 6400.0]);
    let slope: f64 = text.lines().last().unwrap().strip_prefix("# slope: ").unwrap().parse().unwrap();
    assert!((-0.65..=-0.35).contains(&slope), "slope {slope}");
}

#[test]
fn exit_table_is_a_monotone_probability() {
    let dir = TempDir::new().unwrap();
    let cfg = config(&dir, &format!("{SPHERE}\n[study]\ndeltas = [0.1]\ntimes = [0.0, 0.01, 0.02, 0.05]\n"));
    let out = geowalk(dir.path(), &["exit-times", "--config", cfg.to_str().unwrap(), "--paths", "300", "--N", "64"]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let text = fs::read_to_string(dir.path().join("exit-times.csv")).unwrap();
    let rows: Vec<Vec<f64>> =
        data_lines(&text)[1..].iter().map(|r| r.split(',').map(|v| v.parse().unwrap()).collect()).collect();
    assert_eq!(rows.len(), 4);
    assert_eq!(rows[0][4], 0.0);
    for w in rows.windows(2) {
        assert!(w[1][4] >= w[0][4]);
    }
    for r in &rows {
        assert!(0.0 <= r[5] && r[5] <= r[4] && r[4] <= r[6] && r[6] <= 1.0);
    }
}

#[test]
fn config_errors_exit_with_code_2_and_line() {
    let dir = TempDir::new().unwrap();
    let cfg = config(&dir, &SPHERE.replace("N = 100", "N = \"many\""));
    let out = geowalk(dir.path(), &["simulate", "--config", cfg.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(err.starts_with("error[config]:") && err.contains("line 6"), "{err}");
}

#[test]
fn semantic_errors_are_config_errors() {
    let dir = TempDir::new().unwrap();
    let cfg = config(&dir, &SPHERE.replace("name = \"sphere\"", "name = \"katok\"\nr = 1.5"));
    let out = geowalk(dir.path(), &["simulate", "--config", cfg.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn missing_config_is_an_io_error() {
    let dir = TempDir::new().unwrap();
    let out = geowalk(dir.path(), &["simulate", "--config", "/no/such/file.toml"]);
    assert_eq!(out.status.code(), Some(4));
    assert!(String::from_utf8_lossy(&out.stderr).starts_with("error[io]:"));
}
