use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

const BENCHMARK: &str = include_str!("../../../configs/benchmark.toml");

fn configs() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../configs")
}

fn ampc(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_ampc"))
        .args(args)
        .env_remove("AMPC_OUT_DIR")
        .output()
        .expect("binary runs")
}

fn text(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn err(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

fn write_config(dir: &Path, name: &str, body: &str) -> PathBuf {
    let p = dir.join(name);
    fs::write(&p, body).unwrap();
    p
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

fn summary_statuses(out: &Path) -> Vec<String> {
    fs::read_to_string(out.join("summary.csv"))
        .unwrap()
        .lines()
        .skip(1)
        .map(|l| l.split(',').nth(1).unwrap().to_string())
        .collect()
}

#[test]
fn synthesize_prints_positive_margins_and_caches() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = configs().join("benchmark.toml");
    let o = ampc(&["synthesize", "--config", s(&cfg), "--out-dir", s(dir.path())]);
    assert_eq!(o.status.code(), Some(0), "{}", err(&o));
    let out = text(&o);
    let lines: Vec<&str> = out.lines().collect();
    let start = lines.iter().position(|l| l.starts_with("vertex")).unwrap();
    let margins: Vec<f64> = lines[start + 1..start + 5]
        .iter()
        .map(|l| l.split_whitespace().nth(1).unwrap().parse().unwrap())
        .collect();
    assert!(margins.iter().all(|m| *m > 0.0), "{margins:?}");
    assert!(!out.contains("(cached)"));
    assert_eq!(fs::read_dir(dir.path().join("cache")).unwrap().count(), 1);
    let again = ampc(&["synthesize", "--config", s(&cfg), "--out-dir", s(dir.path())]);
    assert!(text(&again).contains("(cached)"));
    assert_eq!(text(&again).replace(" (cached)", ""), out);
}

#[test]
fn singleton_hull_prints_zero_radii() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = configs().join("certainty_equivalence.toml");
    let o = ampc(&["synthesize", "--config", s(&cfg), "--out-dir", s(dir.path())]);
    assert_eq!(o.status.code(), Some(0), "{}", err(&o));
    let out = text(&o);
    assert!(out.contains("rho = 0.000000"));
    let table: Vec<&str> = out.lines().skip_while(|l| !l.trim_start().starts_with("i ")).skip(1).collect();
    assert_eq!(table.len(), 6);
    for row in table {
        assert_eq!(row.split_whitespace().nth(1), Some("0.000000"));
    }
}

#[test]
fn overrides_change_the_design() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = configs().join("benchmark.toml");
    let o = ampc(&["synthesize", "--config", s(&cfg), "--out-dir", s(dir.path()), "--horizon", "3", "--gamma", "0.8"]);
    assert_eq!(o.status.code(), Some(0), "{}", err(&o));
    let rows = text(&o).lines().skip_while(|l| !l.trim_start().starts_with("i ")).count();
    assert_eq!(rows, 5);
    let bad = ampc(&["synthesize", "--config", s(&cfg), "--out-dir", s(dir.path()), "--gamma", "1.2"]);
    assert_eq!(bad.status.code(), Some(2));
    assert!(err(&bad).contains("controller.gamma"));
}

#[test]
fn malformed_matrix_row_is_a_config_error() {
    let dir = tempfile::tempdir().unwrap();
    let body = BENCHMARK.replacen("b = [[1.2, 0.0], [0.0, 1.2]]", "b = [[1.2, 0.0], [0.0]]", 1);
    let cfg = write_config(dir.path(), "bad.toml", &body);
    let o = ampc(&["synthesize", "--config", s(&cfg), "--out-dir", s(dir.path())]);
    assert_eq!(o.status.code(), Some(2));
    assert!(err(&o).contains("hull[1].b"), "{}", err(&o));
    let missing = ampc(&["run", "--config", s(&dir.path().join("nope.toml")), "--out-dir", s(dir.path())]);
    assert_eq!(missing.status.code(), Some(2));
}

#[test]
fn rejected_synthesis_exits_three() {
    let dir = tempfile::tempdir().unwrap();
    let body = BENCHMARK.replace("tube_scale = 0.02", "tube_scale = 1.0");
    let cfg = write_config(dir.path(), "wide.toml", &body);
    let o = ampc(&["synthesize", "--config", s(&cfg), "--out-dir", s(dir.path())]);
    assert_eq!(o.status.code(), Some(3), "{}", err(&o));
    let r = ampc(&["run", "--config", s(&cfg), "--out-dir", s(dir.path()), "--runs", "1"]);
    assert_eq!(r.status.code(), Some(3));
}

#[test]
fn benchmark_sweep_is_clean() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = configs().join("benchmark.toml");
    let o = ampc(&["run", "--config", s(&cfg), "--out-dir", s(dir.path()), "--runs", "100"]);
    assert_eq!(o.status.code(), Some(0), "{}", err(&o));
    let agg = fs::read_to_string(dir.path().join("aggregate.csv")).unwrap();
    assert!(agg.lines().any(|l| l == "constraint_violations,0"));
    assert!(agg.lines().any(|l| l == "completed,100"));
    let statuses = summary_statuses(dir.path());
    assert_eq!(statuses.len(), 100);
    assert!(statuses.iter().all(|s| s == "completed"));
    assert_eq!(fs::read_dir(dir.path().join("runs")).unwrap().count(), 100);
}

#[test]
fn same_seed_gives_identical_files() {
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    let cfg = configs().join("benchmark.toml");
    for d in [&a, &b] {
        let o = ampc(&["run", "--config", s(&cfg), "--out-dir", s(d.path()), "--runs", "6", "--seed", "7"]);
        assert_eq!(o.status.code(), Some(0), "{}", err(&o));
    }
    for name in ["summary.csv", "aggregate.csv", "runs/run_000.csv", "runs/run_005.csv"] {
        assert_eq!(fs::read(a.path().join(name)).unwrap(), fs::read(b.path().join(name)).unwrap(), "{name}");
    }
    let c = tempfile::tempdir().unwrap();
    ampc(&["run", "--config", s(&cfg), "--out-dir", s(c.path()), "--runs", "6", "--seed", "8"]);
    assert_ne!(fs::read(a.path().join("summary.csv")).unwrap(), fs::read(c.path().join("summary.csv")).unwrap());
}

#[test]
fn shrunk_input_box_is_reported() {
    // The reference-input offset keeps the tightened input budget large, so a tiny
    // input box is caught partly at the first solve and partly one step later.
    let dir = tempfile::tempdir().unwrap();
    let body = BENCHMARK.replace("input = [3.0, 3.0]", "input = [0.05, 0.05]");
    let cfg = write_config(dir.path(), "tiny.toml", &body);
    let o = ampc(&["run", "--config", s(&cfg), "--out-dir", s(dir.path()), "--runs", "100"]);
    let statuses = summary_statuses(dir.path());
    assert_eq!(statuses.len(), 100);
    let infeasible = statuses.iter().filter(|s| *s == "initially-infeasible").count();
    let falsified = statuses.iter().filter(|s| s.starts_with("falsified@")).count();
    assert!(infeasible > 0);
    assert_eq!(infeasible + falsified, 100);
    let agg = fs::read_to_string(dir.path().join("aggregate.csv")).unwrap();
    assert!(agg.lines().any(|l| l == "constraint_violations,0"));
    let expected = if falsified == 0 { 0 } else { 4 };
    assert_eq!(o.status.code(), Some(expected), "{}", err(&o));
}

#[test]
fn export_plots_writes_five_families() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = configs().join("benchmark.toml");
    let o = ampc(&["run", "--config", s(&cfg), "--out-dir", s(dir.path()), "--nominal"]);
    assert_eq!(o.status.code(), Some(0), "{}", err(&o));
    let e = ampc(&["export-plots", "--out-dir", s(dir.path())]);
    assert_eq!(e.status.code(), Some(0), "{}", err(&e));
    let data = fs::read_to_string(dir.path().join("plots/run_000.csv")).unwrap();
    let mut lines = data.lines();
    assert_eq!(lines.next(), Some("time,series,value"));
    let mut counts = std::collections::BTreeMap::new();
    for l in lines {
        *counts.entry(l.split(',').nth(1).unwrap().to_string()).or_insert(0usize) += 1;
    }
    let families: std::collections::BTreeSet<&str> = counts.keys().map(|k| k.split('/').next().unwrap()).collect();
    assert_eq!(families.len(), 5, "{families:?}");
    assert_eq!(counts.len(), 11);
    assert!(counts.values().all(|c| *c == 60));
}

#[test]
fn export_plots_without_runs_fails() {
    let dir = tempfile::tempdir().unwrap();
    let o = ampc(&["export-plots", "--out-dir", s(dir.path())]);
    assert_eq!(o.status.code(), Some(1));
    assert!(err(&o).contains("missing run data"));
}

#[test]
fn out_dir_defaults_from_environment() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = configs().join("certainty_equivalence.toml");
    let o = Command::new(env!("CARGO_BIN_EXE_ampc"))
        .args(["run", "--config", s(&cfg), "--runs", "2"])
        .env("AMPC_OUT_DIR", dir.path())
        .output()
        .unwrap();
    assert_eq!(o.status.code(), Some(0), "{}", err(&o));
    assert!(dir.path().join("summary.csv").exists());
    assert_eq!(summary_statuses(dir.path()), vec!["completed", "completed"]);
}
