use std::path::Path;
use std::process::{Command, Output};

fn patch_uce(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_patch-uce"))
        .args(args)
        .env("RUST_LOG", "warn")
        .output()
        .unwrap()
}

fn path_str(p: &Path) -> &str {
    p.to_str().unwrap()
}

fn tiny_run(dir: &Path, optimizer: &str) -> String {
    let config = dir.join("run.json");
    std::fs::write(
        &config,
        format!(
            r#"{{"optimizer":"{optimizer}","restarts":2,"seed":11,
                "uce":{{"n_samples":8,"n_iterations":2}},
                "baseline":{{"budget":10,"n_initial":4,"n_candidates":50}},
                "design_space":{{"grid_cells_per_side":8}}}}"#
        ),
    )
    .unwrap();
    path_str(&config).to_string()
}

#[test]
fn target_subcommand_writes_bundled_curve() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("target.csv");
    let o = patch_uce(&["target", "--out", path_str(&out)]);
    assert!(o.status.success());
    let written = std::fs::read_to_string(&out).unwrap();
    assert_eq!(written, include_str!("../data/two_band_target.csv"));
    assert_eq!(written.lines().count(), 102);
}

#[test]
fn simulate_writes_one_row_per_frequency() {
    let dir = tempfile::tempdir().unwrap();
    let geometry = dir.path().join("g.json");
    std::fs::write(
        &geometry,
        r#"{"patch_l_mm":29.0,"patch_w_mm":38.0,"slot_w_mm":0.0,"slot_offset_mm":0.0,"slot_h_mm":0.0,"feed":{"ix":0,"iy":4}}"#,
    )
    .unwrap();
    let out = dir.path().join("s11.csv");
    let o = patch_uce(&["simulate", "--geometry", path_str(&geometry), "--grid", "8", "--out", path_str(&out)]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    assert!(String::from_utf8_lossy(&o.stdout).contains("dip at"));
    let text = std::fs::read_to_string(&out).unwrap();
    assert!(text.starts_with("freq_hz"));
    assert_eq!(text.lines().count(), 102);
}

#[test]
fn missing_file_exits_with_two() {
    let o = patch_uce(&["simulate", "--geometry", "/nonexistent/g.json", "--out", "/tmp/x.csv"]);
    assert_eq!(o.status.code(), Some(2));
    let o = patch_uce(&["optimize", "--config", "/nonexistent/run.json"]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn bad_configuration_exits_with_one() {
    let o = patch_uce(&["optimize", "--optimizer", "annealing"]);
    assert_eq!(o.status.code(), Some(1));

    let dir = tempfile::tempdir().unwrap();
    let config = dir.path().join("run.json");
    std::fs::write(&config, r#"{"optimiser":"uce"}"#).unwrap();
    let o = patch_uce(&["optimize", "--config", path_str(&config)]);
    assert_eq!(o.status.code(), Some(1));

    std::fs::write(&config, r#"{"restarts":0}"#).unwrap();
    let o = patch_uce(&["optimize", "--config", path_str(&config)]);
    assert_eq!(o.status.code(), Some(1));
}

#[test]
fn optimize_writes_artifacts_and_repeats_exactly() {
    let dir = tempfile::tempdir().unwrap();
    let config = tiny_run(dir.path(), "uce");
    let a = dir.path().join("a");
    let b = dir.path().join("b");
    for out in [&a, &b] {
        let o = patch_uce(&["optimize", "--config", &config, "--out", path_str(out), "--no-timing"]);
        assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    }
    for name in [
        "restarts.csv",
        "best_geometry.json",
        "plot.csv",
        "plot.svg",
        "restart_0/trace.csv",
        "restart_0/final.json",
        "restart_0/geometry.json",
        "restart_0/curve.csv",
        "restart_1/trace.csv",
    ] {
        let x = std::fs::read(a.join(name)).unwrap_or_else(|_| panic!("missing {name}"));
        let y = std::fs::read(b.join(name)).unwrap();
        assert_eq!(x, y, "{name} differs between identical runs");
    }
    let trace = std::fs::read_to_string(a.join("restart_0/trace.csv")).unwrap();
    assert_eq!(trace.lines().count(), 1 + 2);
}

#[test]
fn bench_writes_comparison_table() {
    let dir = tempfile::tempdir().unwrap();
    let config = dir.path().join("bench.json");
    std::fs::write(
        &config,
        r#"{"optimizers":["uce","dummy"],
            "run":{"restarts":1,"seed":3,"timing":false,
                   "uce":{"n_samples":8,"n_iterations":2},
                   "baseline":{"budget":16,"n_initial":4,"n_candidates":50},
                   "design_space":{"grid_cells_per_side":8}}}"#,
    )
    .unwrap();
    let out = dir.path().join("bench");
    let o = patch_uce(&["bench", "--config", path_str(&config), "--out", path_str(&out)]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let table = std::fs::read_to_string(out.join("table.csv")).unwrap();
    assert_eq!(table.lines().count(), 3);
    assert!(out.join("uce/restart_0/trace.csv").exists());
    assert!(out.join("dummy/restart_0/trace.csv").exists());
    assert!(out.join("table.txt").exists());
}

#[test]
fn dummy_baseline_runs_through_cli() {
    let dir = tempfile::tempdir().unwrap();
    let config = tiny_run(dir.path(), "dummy");
    let out = dir.path().join("d");
    let o = patch_uce(&["optimize", "--config", &config, "--out", path_str(&out), "--no-timing"]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let trace = std::fs::read_to_string(out.join("restart_0/trace.csv")).unwrap();
    assert_eq!(trace.lines().count(), 1 + 10);
}
