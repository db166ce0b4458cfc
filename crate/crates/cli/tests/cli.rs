use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn mlnsocp(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_mlnsocp")).args(args).output().unwrap()
}

fn out_flag(dir: &Path) -> String {
    dir.to_str().unwrap().to_string()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

#[test]
fn localize_table1_default_writes_one_row_per_unknown() {
    let dir = tempfile::tempdir().unwrap();
    let o = mlnsocp(&["localize", "--side", "40", "--seed", "1", "--out", &out_flag(dir.path())]);
    assert!(o.status.success(), "{}", stderr(&o));
    let csv = fs::read_to_string(dir.path().join("estimates.csv")).unwrap();
    let mut lines = csv.lines();
    assert_eq!(
        lines.next().unwrap(),
        "node,true_x,true_y,est_x,est_y,error,p_i,status"
    );
    assert_eq!(lines.count(), 70);
    let summary: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(dir.path().join("summary.json")).unwrap()).unwrap();
    assert_eq!(summary["unknowns"], 70);
    assert!(summary["mean_error"].as_f64().unwrap() > 0.0);
    assert!(!csv.contains('\r'));
}

#[test]
fn repeated_runs_are_byte_identical() {
    let (a, b) = (tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap());
    for d in [&a, &b] {
        let o = mlnsocp(&["localize", "--side", "40", "--trials", "1", "--seed", "9", "--out", &out_flag(d.path())]);
        assert!(o.status.success(), "{}", stderr(&o));
    }
    for f in ["estimates.csv", "summary.json"] {
        assert_eq!(fs::read(a.path().join(f)).unwrap(), fs::read(b.path().join(f)).unwrap(), "{f}");
    }
    // config.txt differs only in the output path
    let strip = |d: &Path| {
        fs::read_to_string(d.join("config.txt"))
            .unwrap()
            .lines()
            .filter(|l| !l.starts_with("out ="))
            .collect::<Vec<_>>()
            .join("\n")
    };
    assert_eq!(strip(a.path()), strip(b.path()));
}

#[test]
fn all_anchor_network_succeeds_with_note() {
    let dir = tempfile::tempdir().unwrap();
    let o = mlnsocp(&["localize", "--side", "40", "--p", "1.0", "--out", &out_flag(dir.path())]);
    assert!(o.status.success(), "{}", stderr(&o));
    let summary = fs::read_to_string(dir.path().join("summary.json")).unwrap();
    assert!(summary.contains("no unknown nodes"), "{summary}");
}

#[test]
fn echoed_config_reproduces_the_run() {
    let (a, b) = (tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap());
    let cfg = a.path().join("run.txt");
    fs::write(&cfg, "side = 40\nnodes = 30\np = 0.3\n# comment\ng = 0.4\n").unwrap();
    let o = mlnsocp(&["localize", "--config", cfg.to_str().unwrap(), "--p", "0.5", "--out", &out_flag(a.path())]);
    assert!(o.status.success(), "{}", stderr(&o));
    let echo = fs::read_to_string(a.path().join("config.txt")).unwrap();
    assert!(echo.contains("p = 0.5") && echo.contains("g = 0.4"), "{echo}");
    let echoed = a.path().join("config.txt");
    let o = mlnsocp(&["localize", "--config", echoed.to_str().unwrap(), "--out", &out_flag(b.path())]);
    assert!(o.status.success(), "{}", stderr(&o));
    assert_eq!(
        fs::read(a.path().join("estimates.csv")).unwrap(),
        fs::read(b.path().join("estimates.csv")).unwrap()
    );
}

#[test]
fn usage_errors_exit_one() {
    let dir = tempfile::tempdir().unwrap();
    let out = out_flag(dir.path());
    let o = mlnsocp(&["localize", "--p", "0.3", "--out", &out]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains("side length"));

    let cfg = dir.path().join("bad.txt");
    fs::write(&cfg, "side = 40\nanchors = 3\n").unwrap();
    let o = mlnsocp(&["deploy", "--config", cfg.to_str().unwrap(), "--out", &out]);
    assert_eq!(o.status.code(), Some(1));
    let err = stderr(&o);
    assert!(err.contains("anchors") && err.contains("eta_n") && err.contains("spacing"), "{err}");

    let o = mlnsocp(&["deploy", "--side", "40", "--bogus", "1"]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains("valid keys"));

    let o = mlnsocp(&["experiment", "table3", "--side", "40", "--out", &out]);
    assert_eq!(o.status.code(), Some(1));
    let err = stderr(&o);
    for name in ["table1", "table2", "cdf", "rmse-surface", "crlb-surface", "scaling"] {
        assert!(err.contains(name), "{err}");
    }

    let o = mlnsocp(&["deploy", "--side", "40", "--g", "2"]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains("los_probability"));
}

#[test]
fn crlb_surface_experiment_has_41_by_41_points() {
    let dir = tempfile::tempdir().unwrap();
    let o = mlnsocp(&[
        "experiment",
        "crlb-surface",
        "--side",
        "40",
        "--nodes",
        "1600",
        "--p",
        "0.0025",
        "--placement",
        "boundary",
        "--spacing",
        "1",
        "--out",
        &out_flag(dir.path()),
    ]);
    assert!(o.status.success(), "{}", stderr(&o));
    let csv = fs::read_to_string(dir.path().join("crlb.csv")).unwrap();
    assert_eq!(csv.lines().count(), 1 + 41 * 41);
    let manifest: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(dir.path().join("manifest.json")).unwrap()).unwrap();
    assert_eq!(manifest["experiment"], "crlb-surface");
    assert!(manifest["wall_time_s"].as_f64().is_some());
    assert!(manifest["config"].as_str().unwrap().contains("placement = boundary"));
    assert_eq!(manifest["summary"]["argmin"], serde_json::json!([20.0, 20.0]));
}

#[test]
fn table1_experiment_reports_the_full_grid() {
    let dir = tempfile::tempdir().unwrap();
    let o = mlnsocp(&["experiment", "table1", "--side", "40", "--trials", "1", "--out", &out_flag(dir.path())]);
    assert!(o.status.success(), "{}", stderr(&o));
    let report: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(dir.path().join("report.json")).unwrap()).unwrap();
    let cells = report["cells"].as_array().unwrap();
    assert_eq!(cells.len(), 16);
    let methods: std::collections::BTreeSet<_> = cells.iter().map(|c| c["method"].as_str().unwrap()).collect();
    assert_eq!(methods.len(), 2);
    assert!(cells.iter().all(|c| c["mean_error"].as_f64().is_some()));
}

#[test]
fn deploy_and_measure_share_the_topology() {
    let dir = tempfile::tempdir().unwrap();
    let out = out_flag(dir.path());
    assert!(mlnsocp(&["deploy", "--side", "40", "--seed", "4", "--out", &out]).status.success());
    let topo = fs::read_to_string(dir.path().join("topology.json")).unwrap();
    let m = tempfile::tempdir().unwrap();
    let path = dir.path().join("topology.json");
    let o = mlnsocp(&["measure", "--side", "40", "--topology", path.to_str().unwrap(), "--out", &out_flag(m.path())]);
    assert!(o.status.success(), "{}", stderr(&o));
    assert_eq!(fs::read_to_string(m.path().join("topology.json")).unwrap(), topo);
    let csv = fs::read_to_string(m.path().join("measurements.csv")).unwrap();
    assert!(csv.lines().count() > 1);
}
