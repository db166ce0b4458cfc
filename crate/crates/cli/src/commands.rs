use std::fmt::Write as _;
use std::fs;
use std::path::Path;
use std::time::Instant;

use mlnsocp::crlb::crlb_surface;
use mlnsocp::harness::{
    localize_topology, run_cdf, run_rmse_surface, run_scaling_check, run_table1, run_table2, ScalingVerdict,
};
use mlnsocp::net::deploy_uniform;
use mlnsocp::{MeasurementSet, SolverSettings, SolverStatus, Topology};
use serde_json::{json, Value};

use crate::config::{check_experiment, RunConfig};
use crate::error::CliError;

fn write(dir: &Path, name: &str, contents: &str) -> Result<(), CliError> {
    fs::write(dir.join(name), contents)?;
    Ok(())
}

fn to_json(v: &Value) -> String {
    let mut s = serde_json::to_string_pretty(v).expect("json values serialize");
    s.push('\n');
    s
}

/// Creates the output directory and echoes the resolved config into it.
fn prepare(cfg: &RunConfig) -> Result<(), CliError> {
    fs::create_dir_all(&cfg.out)
        .map_err(|e| CliError::Usage(format!("output directory {} is not writable: {e}", cfg.out.display())))?;
    write(&cfg.out, "config.txt", &cfg.echo())
}

fn topology(cfg: &RunConfig) -> Result<Topology<f64>, CliError> {
    match &cfg.topology {
        Some(path) => {
            let text = fs::read_to_string(path)
                .map_err(|e| CliError::Usage(format!("cannot read topology {}: {e}", path.display())))?;
            Ok(Topology::from_json(&text)?)
        }
        None => Ok(deploy_uniform(&cfg.network, cfg.seed)?),
    }
}

pub fn deploy(cfg: &RunConfig) -> Result<(), CliError> {
    prepare(cfg)?;
    let topo = topology(cfg)?;
    write(&cfg.out, "topology.json", &topo.to_json()?)?;
    println!(
        "{} unknowns, {} anchors, {} edges",
        topo.unknown_count(),
        topo.anchor_count(),
        topo.edges().len()
    );
    Ok(())
}

pub fn measure(cfg: &RunConfig) -> Result<(), CliError> {
    prepare(cfg)?;
    let topo = topology(cfg)?;
    let set = MeasurementSet::sample(&topo, cfg.network.eta_l, cfg.network.eta_n, cfg.seed);
    write(&cfg.out, "topology.json", &topo.to_json()?)?;
    write(&cfg.out, "measurements.csv", &set.to_csv())?;
    println!("{} measurements, {} floored", set.len(), set.floored_count());
    Ok(())
}

fn median(mut v: Vec<f64>) -> Option<f64> {
    if v.is_empty() {
        return None;
    }
    v.sort_by(f64::total_cmp);
    let n = v.len();
    Some(if n % 2 == 1 { v[n / 2] } else { 0.5 * (v[n / 2 - 1] + v[n / 2]) })
}

fn status_name(s: SolverStatus) -> &'static str {
    match s {
        SolverStatus::Optimal => "optimal",
        SolverStatus::MaxIter => "max-iter",
        SolverStatus::Infeasible => "infeasible",
        SolverStatus::NumericalFailure => "numerical-failure",
    }
}

pub fn localize(cfg: &RunConfig) -> Result<(), CliError> {
    prepare(cfg)?;
    let topo = topology(cfg)?;
    let result = localize_topology(&topo, &cfg.network, cfg.seed, &[cfg.method], &SolverSettings::default())?.remove(0);
    let axes = ["x", "y", "z"];
    let d = topo.dimension();
    let mut csv = String::from("node");
    for prefix in ["true", "est"] {
        for a in &axes[..d] {
            let _ = write!(csv, ",{prefix}_{a}");
        }
    }
    csv.push_str(",error,p_i,status\n");
    for r in 0..topo.unknown_count() {
        let _ = write!(csv, "{r}");
        for c in topo.position(r).coords() {
            let _ = write!(csv, ",{c}");
        }
        match result.nodes.iter().find(|n| n.node == r) {
            Some(n) => {
                for c in n.estimate.coords() {
                    let _ = write!(csv, ",{c}");
                }
                let _ = writeln!(csv, ",{},{},{}", n.error, n.p_i, status_name(n.status));
            }
            None => {
                csv.push_str(&",".repeat(d));
                csv.push_str(",,0,unlocalizable\n");
            }
        }
    }
    write(&cfg.out, "estimates.csv", &csv)?;

    let errors: Vec<f64> = result.nodes.iter().map(|n| n.error).filter(|e| e.is_finite()).collect();
    let failures = result.numerical_failures();
    let mut note = Vec::new();
    if topo.unknown_count() == 0 {
        note.push("no unknown nodes; nothing to localize");
    }
    let summary = json!({
        "method": cfg.method.as_str(),
        "seed": cfg.seed,
        "unknowns": topo.unknown_count(),
        "localized": result.nodes.len(),
        "unlocalizable": result.unlocalizable.len(),
        "numerical_failures": failures,
        "mean_error": result.mean_error(),
        "median_error": median(errors.clone()),
        "max_error": errors.iter().copied().reduce(f64::max),
        "note": note.join("; "),
    });
    write(&cfg.out, "summary.json", &to_json(&summary))?;
    println!(
        "localized {} of {} unknowns, mean error {}",
        result.nodes.len(),
        topo.unknown_count(),
        result.mean_error().map_or("n/a".into(), |e| format!("{e:.4} m"))
    );
    if failures > 0 {
        return Err(CliError::Numerical(format!("{failures} node solves failed")));
    }
    Ok(())
}

fn crlb_files(cfg: &RunConfig) -> Result<Value, CliError> {
    let grid = crlb_surface(&cfg.network, cfg.spacing, cfg.scaling)?;
    write(&cfg.out, "crlb.csv", &grid.to_csv())?;
    let summary = json!({
        "points_per_axis": grid.points,
        "spacing": grid.spacing,
        "minimum": grid.minimum,
        "argmin": [grid.argmin.0, grid.argmin.1],
        "anchors": grid.anchors.iter().map(|a| a.coords().to_vec()).collect::<Vec<_>>(),
    });
    write(&cfg.out, "crlb.json", &to_json(&summary))?;
    println!("bound minimum {:.4} at ({}, {})", grid.minimum, grid.argmin.0, grid.argmin.1);
    Ok(summary)
}

pub fn crlb(cfg: &RunConfig) -> Result<(), CliError> {
    prepare(cfg)?;
    crlb_files(cfg).map(|_| ())
}

/// Runs a named experiment and writes its artifacts plus `manifest.json`.
pub fn experiment(cfg: &RunConfig, name: &str) -> Result<(), CliError> {
    check_experiment(name)?;
    prepare(cfg)?;
    let start = Instant::now();
    let (t, seed) = (cfg.trials, cfg.seed);
    let mut status = "complete";
    let (artifacts, summary): (Vec<&str>, Value) = match name {
        "table1" | "table2" => {
            let report = if name == "table1" { run_table1(t, seed)? } else { run_table2(t, seed)? };
            write(&cfg.out, "report.json", &report.to_json()?)?;
            write(&cfg.out, "raw.csv", &report.raw_csv())?;
            let cells: Vec<Value> = report
                .cells
                .iter()
                .map(|c| json!({"label": c.label, "method": c.method.as_str(), "mean_error": c.mean_error}))
                .collect();
            (vec!["report.json", "raw.csv"], json!({ "cells": cells }))
        }
        "cdf" => {
            let report = run_cdf(t, &[cfg.network.anchor_fraction], seed)?;
            write(&cfg.out, "report.json", &report.to_json()?)?;
            write(&cfg.out, "cdf.csv", &report.cdf_csv())?;
            (vec!["report.json", "cdf.csv"], json!({ "p": cfg.network.anchor_fraction }))
        }
        "rmse-surface" => {
            let surface = run_rmse_surface(&cfg.network, t, cfg.spacing, seed)?;
            write(&cfg.out, "rmse.csv", &surface.to_csv())?;
            let minima: Vec<Value> = surface
                .surfaces
                .iter()
                .map(|s| json!({"method": s.method.as_str(), "minimum": s.minimum, "argmin": [s.argmin.0, s.argmin.1]}))
                .collect();
            (vec!["rmse.csv"], json!({ "minima": minima }))
        }
        "crlb-surface" => (vec!["crlb.csv", "crlb.json"], crlb_files(cfg)?),
        "scaling" => {
            let report = run_scaling_check(t, seed)?;
            status = match report.verdict {
                ScalingVerdict::Pass => "pass",
                ScalingVerdict::Fail => "fail",
                ScalingVerdict::Inconclusive => "inconclusive",
            };
            let body = serde_json::to_value(&report).expect("report serializes");
            write(&cfg.out, "scaling.json", &to_json(&body))?;
            (vec!["scaling.json"], json!({ "range_exponent": report.range_exponent }))
        }
        _ => unreachable!("checked above"),
    };
    let manifest = json!({
        "experiment": name,
        "status": status,
        "base_seed": seed,
        "trials": t,
        "config": cfg.echo(),
        "artifacts": artifacts,
        "summary": summary,
        "wall_time_s": start.elapsed().as_secs_f64(),
    });
    write(&cfg.out, "manifest.json", &to_json(&manifest))?;
    println!("{name}: {status}, artifacts in {}", cfg.out.display());
    Ok(())
}
