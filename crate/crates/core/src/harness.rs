//! Monte Carlo experiments: deploy, measure, localize each unknown node from
//! its anchors, score, aggregate.
//!
//! Localization is non-cooperative. Only node-to-anchor links are measured;
//! node-to-node edges exist in the topology but carry no constraint.
//!
//! Trial `k` of condition `c` uses the seed `derive_seed([base, c, k])`. Both
//! methods of a condition see the same deployment and the same measurements
//! in each trial, so method differences are paired. Trials run in parallel
//! and are aggregated in trial order, so every report is a pure function of
//! (conditions, base seed, trial count).

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::time::Instant;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::conic::{build_node_problem, extract_position, LinkModel, Method};
use crate::error::{Error, Result};
use crate::measurement::{sample_edge, Measurement};
use crate::net::{boundary_anchors, deploy_uniform, edge_labels, AnchorPlacement, NetworkConfig, Position, Topology};
use crate::rng::derive_seed;
use crate::solver::complexity::fit_slope;
use crate::solver::{solve, SolveSample, SolverSettings, SolverStatus};
use crate::Scalar;

pub const METHODS: [Method; 2] = [Method::DSocp, Method::MlnSocp];
pub const DEFAULT_TRIALS: usize = 100;

/// Solver settings for Monte Carlo runs. Localization errors are metres, so
/// a `1e-6` relative gap is far below the sampling noise and saves the last
/// few slowly converging iterations of every solve.
pub fn experiment_settings<T: Scalar>() -> SolverSettings<T> {
    SolverSettings {
        gap_tol: T::lit(1e-6),
        feas_tol: T::lit(1e-6),
        ..SolverSettings::default()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NodeResult<T> {
    pub node: usize,
    pub p_i: usize,
    pub truth: Position<T>,
    pub estimate: Position<T>,
    /// Euclidean distance between truth and estimate, metres.
    pub error: T,
    pub status: SolverStatus,
    pub iterations: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrialResult<T> {
    pub seed: u64,
    pub method: Method,
    /// One entry per localizable unknown node, in node order.
    pub nodes: Vec<NodeResult<T>>,
    /// Unknown nodes with no anchor in range.
    pub unlocalizable: Vec<usize>,
}

impl<T: Scalar> TrialResult<T> {
    /// No unknown node could be localized.
    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn mean_error(&self) -> Option<T> {
        (!self.nodes.is_empty())
            .then(|| self.nodes.iter().map(|n| n.error).sum::<T>() / T::from_usize(self.nodes.len()).unwrap())
    }

    pub fn numerical_failures(&self) -> usize {
        self.nodes
            .iter()
            .filter(|n| n.status == SolverStatus::NumericalFailure)
            .count()
    }
}

/// Anchors heard by unknown node `r`, each with its measurement drawn from
/// the link's own substream of `seed`.
pub fn node_links<T: Scalar>(
    topology: &Topology<T>,
    r: usize,
    eta_l: T,
    eta_n: T,
    seed: u64,
) -> Result<Vec<(Position<T>, Measurement<T>)>> {
    Ok(topology
        .neighbor_anchors(r)?
        .into_iter()
        .map(|(t, edge)| (topology.position(t).clone(), sample_edge(edge, eta_l, eta_n, seed)))
        .collect())
}

/// Solves one node's program and scores the estimate.
pub fn localize_node<T: Scalar>(
    truth: &Position<T>,
    node: usize,
    links: &[(Position<T>, Measurement<T>)],
    model: &LinkModel<T>,
    method: Method,
    settings: &SolverSettings<T>,
) -> Result<NodeResult<T>> {
    let program = build_node_problem(links, model, method)?;
    let sol = solve(&program.form, settings)?;
    // A non-finite solution scores as NaN and is flagged below.
    let estimate = extract_position(&program, &sol.x).unwrap_or_else(|_| truth.map(|_| T::nan()));
    let error = estimate.distance(truth);
    Ok(NodeResult {
        node,
        p_i: links.len(),
        truth: truth.clone(),
        error,
        estimate,
        status: if error.is_finite() { sol.status } else { SolverStatus::NumericalFailure },
        iterations: sol.iterations,
    })
}

/// Localizes every unknown node of an existing topology.
pub fn localize_topology<T: Scalar>(
    topology: &Topology<T>,
    config: &NetworkConfig<T>,
    seed: u64,
    methods: &[Method],
    settings: &SolverSettings<T>,
) -> Result<Vec<TrialResult<T>>> {
    let model = LinkModel {
        g: config.los_probability,
        eta_l: config.eta_l,
        eta_n: config.eta_n,
    };
    let mut out: Vec<TrialResult<T>> = methods
        .iter()
        .map(|&method| TrialResult {
            seed,
            method,
            nodes: Vec::new(),
            unlocalizable: Vec::new(),
        })
        .collect();
    for r in 0..topology.unknown_count() {
        let links = node_links(topology, r, config.eta_l, config.eta_n, seed)?;
        for (res, &method) in out.iter_mut().zip(methods) {
            if links.is_empty() {
                res.unlocalizable.push(r);
                continue;
            }
            res.nodes
                .push(localize_node(topology.position(r), r, &links, &model, method, settings)?);
        }
    }
    Ok(out)
}

/// One deployment localized by each method in `methods`.
pub fn run_trial_methods<T: Scalar>(
    config: &NetworkConfig<T>,
    seed: u64,
    methods: &[Method],
    settings: &SolverSettings<T>,
) -> Result<Vec<TrialResult<T>>> {
    let topology = deploy_uniform(config, seed)?;
    localize_topology(&topology, config, seed, methods, settings)
}

pub fn run_trial<T: Scalar>(config: &NetworkConfig<T>, seed: u64, method: Method) -> Result<TrialResult<T>> {
    Ok(run_trial_methods(config, seed, &[method], &experiment_settings())?.remove(0))
}

/// One swept configuration.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Condition {
    pub label: String,
    /// The swept parameters, by name.
    pub params: BTreeMap<String, f64>,
    pub config: NetworkConfig<f64>,
}

impl Condition {
    pub fn new(config: NetworkConfig<f64>, params: &[(&str, f64)]) -> Self {
        let label = params
            .iter()
            .map(|(k, v)| format!("{k}={}", fmt_num(*v)))
            .collect::<Vec<_>>()
            .join(" ");
        Self {
            label,
            params: params.iter().map(|(k, v)| (k.to_string(), *v)).collect(),
            config,
        }
    }
}

fn fmt_num(v: f64) -> String {
    let r = (v * 1e4).round() / 1e4;
    format!("{r}")
}

/// Aggregate of one (condition, method) cell.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CellSummary {
    pub cell: usize,
    pub label: String,
    pub method: Method,
    pub params: BTreeMap<String, f64>,
    pub trials: usize,
    /// Per-node errors pooled over trials.
    pub localized: usize,
    pub unlocalizable: usize,
    pub numerical_failures: usize,
    /// Fraction of unknown nodes that had at least one anchor in range.
    pub coverage: f64,
    pub mean_error: f64,
    pub std_error: f64,
    pub median_error: f64,
    /// Trials where no node could be localized.
    pub empty_trials: usize,
}

/// One line of the raw per-node dump.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RawRow {
    pub cell: usize,
    pub trial: usize,
    pub node: usize,
    pub p_i: usize,
    pub error: f64,
    pub method: Method,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CdfCurve {
    pub anchor_fraction: f64,
    pub method: Method,
    pub samples: usize,
    /// Evaluation levels, metres, shared by the methods of one condition.
    pub levels: Vec<f64>,
    pub cdf: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentReport {
    pub name: String,
    pub base_seed: u64,
    pub trials: usize,
    pub conditions: Vec<Condition>,
    pub cells: Vec<CellSummary>,
    #[serde(skip_serializing_if = "Vec::is_empty", default)]
    pub cdf: Vec<CdfCurve>,
    #[serde(skip)]
    pub raw: Vec<RawRow>,
}

impl ExperimentReport {
    pub fn cell(&self, cell: usize, method: Method) -> Option<&CellSummary> {
        self.cells.iter().find(|c| c.cell == cell && c.method == method)
    }

    /// Cell of the condition whose swept parameters include all of `params`.
    pub fn find(&self, method: Method, params: &[(&str, f64)]) -> Option<&CellSummary> {
        self.cells.iter().find(|c| {
            c.method == method
                && params
                    .iter()
                    .all(|(k, v)| c.params.get(*k).is_some_and(|x| (x - v).abs() < 1e-9))
        })
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    /// `cell,trial,node,p_i,error,method`
    pub fn raw_csv(&self) -> String {
        let mut out = String::from("cell,trial,node,p_i,error,method\n");
        for r in &self.raw {
            let _ = writeln!(out, "{},{},{},{},{},{}", r.cell, r.trial, r.node, r.p_i, r.error, r.method.as_str());
        }
        out
    }

    /// `p,method,level,cdf`
    pub fn cdf_csv(&self) -> String {
        let mut out = String::from("p,method,level,cdf\n");
        for c in &self.cdf {
            for (l, v) in c.levels.iter().zip(&c.cdf) {
                let _ = writeln!(out, "{},{},{},{}", c.anchor_fraction, c.method.as_str(), l, v);
            }
        }
        out
    }
}

fn mean_std_median(v: &[f64]) -> (f64, f64, f64) {
    if v.is_empty() {
        return (f64::NAN, f64::NAN, f64::NAN);
    }
    let n = v.len() as f64;
    let mean = v.iter().sum::<f64>() / n;
    let var = if v.len() > 1 {
        v.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / (n - 1.0)
    } else {
        0.0
    };
    let mut s = v.to_vec();
    s.sort_by(f64::total_cmp);
    let k = s.len();
    let median = if k % 2 == 1 { s[k / 2] } else { 0.5 * (s[k / 2 - 1] + s[k / 2]) };
    (mean, var.sqrt(), median)
}

/// Runs `trials` paired trials of every condition with both methods.
pub fn run_conditions(
    name: &str,
    conditions: Vec<Condition>,
    trials: usize,
    base_seed: u64,
    settings: &SolverSettings<f64>,
) -> Result<ExperimentReport> {
    for c in &conditions {
        c.config.validate()?;
    }
    let jobs: Vec<(usize, usize)> = (0..conditions.len())
        .flat_map(|c| (0..trials).map(move |k| (c, k)))
        .collect();
    let results: Vec<Result<Vec<TrialResult<f64>>>> = jobs
        .par_iter()
        .map(|&(c, k)| {
            let seed = derive_seed(&[base_seed, c as u64, k as u64]);
            run_trial_methods(&conditions[c].config, seed, &METHODS, settings)
        })
        .collect();
    let mut raw = Vec::new();
    let mut cells = Vec::new();
    // pooled errors, unlocalizable, failures, empty trials per (cell, method)
    let mut acc: BTreeMap<(usize, usize), (Vec<f64>, usize, usize, usize)> = BTreeMap::new();
    for (&(c, k), res) in jobs.iter().zip(results) {
        for (mi, tr) in res?.into_iter().enumerate() {
            let e = acc.entry((c, mi)).or_default();
            e.1 += tr.unlocalizable.len();
            e.2 += tr.numerical_failures();
            e.3 += usize::from(tr.is_empty());
            for n in &tr.nodes {
                e.0.push(n.error);
                raw.push(RawRow {
                    cell: c,
                    trial: k,
                    node: n.node,
                    p_i: n.p_i,
                    error: n.error,
                    method: tr.method,
                });
            }
        }
    }
    for ((c, mi), (errors, unloc, fails, empty)) in acc {
        let (mean, std, median) = mean_std_median(&errors);
        let total = errors.len() + unloc;
        cells.push(CellSummary {
            cell: c,
            label: conditions[c].label.clone(),
            method: METHODS[mi],
            params: conditions[c].params.clone(),
            trials,
            localized: errors.len(),
            unlocalizable: unloc,
            numerical_failures: fails,
            coverage: if total == 0 { 0.0 } else { errors.len() as f64 / total as f64 },
            mean_error: mean,
            std_error: std,
            median_error: median,
            empty_trials: empty,
        });
    }
    Ok(ExperimentReport {
        name: name.to_string(),
        base_seed,
        trials,
        conditions,
        cells,
        cdf: Vec::new(),
        raw,
    })
}

fn base_config() -> NetworkConfig<f64> {
    NetworkConfig::table1_default()
}

/// Radio range, side length and noise sweep of the first table.
pub fn table1_conditions() -> Vec<Condition> {
    let mut out = Vec::new();
    for (side, eta_l, eta_n) in [(40.0, 0.1, 0.06), (80.0, 0.1, 0.06), (40.0, 0.2, 0.15), (40.0, 0.3, 0.25)] {
        for r_factor in [2f64.sqrt(), 1.0] {
            let config = NetworkConfig {
                side,
                radio_range: r_factor * side,
                eta_l,
                eta_n,
                ..base_config()
            };
            out.push(Condition::new(
                config,
                &[("side", side), ("range_factor", r_factor), ("eta_l", eta_l), ("eta_n", eta_n)],
            ));
        }
    }
    out
}

/// LOS probability and network size sweep of the second table.
pub fn table2_conditions() -> Vec<Condition> {
    let mut out = Vec::new();
    for g in [0.95, 0.7, 0.4, 0.1] {
        for nodes in [50usize, 100, 150, 200, 250, 300] {
            let config = NetworkConfig {
                nodes,
                los_probability: g,
                ..base_config()
            };
            out.push(Condition::new(config, &[("g", g), ("nodes", nodes as f64)]));
        }
    }
    out
}

pub fn run_table1(trials: usize, base_seed: u64) -> Result<ExperimentReport> {
    run_conditions("table1", table1_conditions(), trials, base_seed, &experiment_settings())
}

pub fn run_table2(trials: usize, base_seed: u64) -> Result<ExperimentReport> {
    run_conditions("table2", table2_conditions(), trials, base_seed, &experiment_settings())
}

/// Empirical CDF of `errors` at each of `levels`.
pub fn empirical_cdf(errors: &[f64], levels: &[f64]) -> Vec<f64> {
    let mut s = errors.to_vec();
    s.sort_by(f64::total_cmp);
    let n = s.len().max(1) as f64;
    levels
        .iter()
        .map(|&l| s.partition_point(|&e| e <= l) as f64 / n)
        .collect()
}

/// Number of evaluation levels per CDF curve.
pub const CDF_LEVELS: usize = 200;

/// Pooled per-node error CDFs for each anchor fraction in `p_values`, on the
/// base deployment otherwise. Levels run evenly from 0 to the largest error
/// seen by either method.
pub fn run_cdf(trials: usize, p_values: &[f64], base_seed: u64) -> Result<ExperimentReport> {
    let conditions = p_values
        .iter()
        .map(|&p| {
            if !(p > 0.0 && p <= 1.0) {
                return Err(Error::config("anchor_fraction", "CDF anchor fractions must lie in (0, 1]"));
            }
            Ok(Condition::new(
                NetworkConfig {
                    anchor_fraction: p,
                    ..base_config()
                },
                &[("p", p)],
            ))
        })
        .collect::<Result<Vec<_>>>()?;
    let mut report = run_conditions("cdf", conditions, trials, base_seed, &experiment_settings())?;
    for (c, &p) in p_values.iter().enumerate() {
        let pooled = |m: Method| -> Vec<f64> {
            report
                .raw
                .iter()
                .filter(|r| r.cell == c && r.method == m)
                .map(|r| r.error)
                .collect()
        };
        let per: Vec<(Method, Vec<f64>)> = METHODS.iter().map(|&m| (m, pooled(m))).collect();
        let top = per
            .iter()
            .flat_map(|(_, e)| e.iter().copied())
            .fold(0.0f64, f64::max);
        let levels: Vec<f64> = (0..CDF_LEVELS)
            .map(|i| top * i as f64 / (CDF_LEVELS - 1) as f64)
            .collect();
        for (m, errors) in per {
            report.cdf.push(CdfCurve {
                anchor_fraction: p,
                method: m,
                samples: errors.len(),
                cdf: empirical_cdf(&errors, &levels),
                levels: levels.clone(),
            });
        }
    }
    Ok(report)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MethodSurface {
    pub method: Method,
    /// Row-major with `y` as the row index.
    pub rmse: Vec<f64>,
    pub minimum: f64,
    pub argmin: (f64, f64),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RmseSurface {
    pub base_seed: u64,
    pub trials: usize,
    pub spacing: f64,
    /// Points per axis.
    pub points: usize,
    pub anchors: Vec<Position<f64>>,
    pub surfaces: Vec<MethodSurface>,
}

impl RmseSurface {
    pub fn coordinate(&self, i: usize) -> f64 {
        i as f64 * self.spacing
    }

    pub fn method(&self, m: Method) -> Option<&MethodSurface> {
        self.surfaces.iter().find(|s| s.method == m)
    }

    /// `x,y,method,rmse`; grid points with no anchor in range print `NaN`.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("x,y,method,rmse\n");
        for s in &self.surfaces {
            for (k, v) in s.rmse.iter().enumerate() {
                let (ix, iy) = (k % self.points, k / self.points);
                let _ = writeln!(
                    out,
                    "{},{},{},{}",
                    self.coordinate(ix),
                    self.coordinate(iy),
                    s.method.as_str(),
                    v
                );
            }
        }
        out
    }
}

/// Places a single unknown node at every grid point of `[0, side]^2` in
/// turn, localizes it against the boundary anchors in `trials` independent
/// measurement and link-label realizations, and reports the RMSE per point.
pub fn run_rmse_surface(config: &NetworkConfig<f64>, trials: usize, spacing: f64, base_seed: u64) -> Result<RmseSurface> {
    config.validate()?;
    if config.placement != AnchorPlacement::Boundary {
        return Err(Error::config("placement", "the RMSE surface needs boundary anchors"));
    }
    if !(spacing > 0.0 && spacing.is_finite()) {
        return Err(Error::config("grid_spacing", "must be positive"));
    }
    if trials == 0 {
        return Err(Error::config("trials", "must be >= 1"));
    }
    let anchors = boundary_anchors(config.side, config.anchor_count()?);
    let points = ((config.side / spacing) + 1e-9).floor() as usize + 1;
    let settings = experiment_settings();
    let sq_errors: Vec<Result<Vec<Option<f64>>>> = (0..points * points)
        .into_par_iter()
        .map(|k| {
            let x = Position::xy((k % points) as f64 * spacing, (k / points) as f64 * spacing);
            let mut sums = vec![Some(0.0); METHODS.len()];
            for t in 0..trials {
                let seed = derive_seed(&[base_seed, k as u64, t as u64]);
                let topo = Topology::from_positions(
                    config.side,
                    vec![x.clone()],
                    anchors.clone(),
                    config.radio_range,
                    edge_labels(seed, config.los_probability),
                )?;
                for (res, sum) in localize_topology(&topo, config, seed, &METHODS, &settings)?
                    .iter()
                    .zip(sums.iter_mut())
                {
                    *sum = match (res.nodes.first(), *sum) {
                        (Some(n), Some(s)) => Some(s + n.error * n.error),
                        _ => None,
                    };
                }
            }
            Ok(sums.into_iter().map(|s| s.map(|v| (v / trials as f64).sqrt())).collect())
        })
        .collect();
    let mut per_point = Vec::with_capacity(sq_errors.len());
    for r in sq_errors {
        per_point.push(r?);
    }
    let surfaces = METHODS
        .iter()
        .enumerate()
        .map(|(mi, &method)| {
            let rmse: Vec<f64> = per_point.iter().map(|p| p[mi].unwrap_or(f64::NAN)).collect();
            let mut minimum = f64::INFINITY;
            let mut argmin = (f64::NAN, f64::NAN);
            for (k, &v) in rmse.iter().enumerate() {
                if v < minimum {
                    minimum = v;
                    argmin = ((k % points) as f64 * spacing, (k / points) as f64 * spacing);
                }
            }
            MethodSurface {
                method,
                rmse,
                minimum,
                argmin,
            }
        })
        .collect();
    Ok(RmseSurface {
        base_seed,
        trials,
        spacing,
        points,
        anchors,
        surfaces,
    })
}

/// Band the fitted error-versus-range exponent must fall in.
pub const RANGE_EXPONENT_BAND: (f64, f64) = (0.2, 1.1);

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ScalingVerdict {
    Pass,
    Fail,
    Inconclusive,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScalingReport {
    pub verdict: ScalingVerdict,
    pub method: Method,
    /// `(R, mean error)` at fixed side and anchor count.
    pub range_sweep: Vec<(f64, f64)>,
    pub range_exponent: Option<f64>,
    /// `(side, mean error)` at fixed anchor count, `R = side`.
    pub side_sweep: Vec<(f64, f64)>,
    pub side_monotone: bool,
    /// `(anchor count, mean error)` at fixed side and range.
    pub anchor_sweep: Vec<(usize, f64)>,
    pub anchors_help: bool,
    pub diagnostics: Vec<String>,
}

/// Errors below this are treated as noise-free.
const DEGENERATE_ERROR: f64 = 1e-6;

/// Sweeps for the error scaling law, evaluated with `method`.
pub fn run_scaling_check_with(
    base: &NetworkConfig<f64>,
    ranges: &[f64],
    sides: &[f64],
    anchor_fractions: &[f64],
    trials: usize,
    base_seed: u64,
    method: Method,
) -> Result<ScalingReport> {
    let settings = experiment_settings();
    let mean_of = |report: &ExperimentReport, cell: usize| -> f64 {
        report.cell(cell, method).map_or(f64::NAN, |c| c.mean_error)
    };
    let range_conditions: Vec<Condition> = ranges
        .iter()
        .map(|&r| {
            Condition::new(
                NetworkConfig {
                    radio_range: r,
                    ..base.clone()
                },
                &[("radio_range", r)],
            )
        })
        .collect();
    let rep = run_conditions("scaling-range", range_conditions, trials, base_seed, &settings)?;
    let range_sweep: Vec<(f64, f64)> = ranges.iter().enumerate().map(|(i, &r)| (r, mean_of(&rep, i))).collect();

    let side_conditions: Vec<Condition> = sides
        .iter()
        .map(|&s| {
            Condition::new(
                NetworkConfig {
                    side: s,
                    radio_range: s,
                    ..base.clone()
                },
                &[("side", s)],
            )
        })
        .collect();
    let rep = run_conditions("scaling-side", side_conditions, trials, base_seed ^ 0x5151, &settings)?;
    let side_sweep: Vec<(f64, f64)> = sides.iter().enumerate().map(|(i, &s)| (s, mean_of(&rep, i))).collect();

    let anchor_conditions: Vec<Condition> = anchor_fractions
        .iter()
        .map(|&p| {
            Condition::new(
                NetworkConfig {
                    anchor_fraction: p,
                    ..base.clone()
                },
                &[("anchor_fraction", p)],
            )
        })
        .collect();
    let rep = run_conditions("scaling-anchors", anchor_conditions.clone(), trials, base_seed ^ 0xa4a4, &settings)?;
    let anchor_sweep: Vec<(usize, f64)> = anchor_conditions
        .iter()
        .enumerate()
        .map(|(i, c)| (c.config.anchor_count().unwrap_or(0), mean_of(&rep, i)))
        .collect();

    let mut diagnostics = Vec::new();
    let side_monotone = side_sweep.windows(2).all(|w| w[1].1 >= w[0].1);
    let anchors_help = anchor_sweep.windows(2).all(|w| w[1].1 <= w[0].1);
    let degenerate = range_sweep.iter().any(|&(_, e)| !(e > DEGENERATE_ERROR) || !e.is_finite());
    let range_exponent = if degenerate || range_sweep.len() < 2 {
        diagnostics.push("range sweep errors are zero or undefined; no exponent fitted".into());
        None
    } else {
        let xs: Vec<f64> = range_sweep.iter().map(|p| p.0.ln()).collect();
        let ys: Vec<f64> = range_sweep.iter().map(|p| p.1.ln()).collect();
        Some(fit_slope(&xs, &ys))
    };
    let monotone_range = range_sweep.windows(2).all(|w| w[1].1 >= w[0].1);
    if !monotone_range {
        diagnostics.push(format!("mean error is not monotone in R: {range_sweep:?}"));
    }
    if !side_monotone {
        diagnostics.push(format!("mean error decreases with side length: {side_sweep:?}"));
    }
    if !anchors_help {
        diagnostics.push(format!("more anchors increased the mean error: {anchor_sweep:?}"));
    }
    let verdict = match range_exponent {
        None => ScalingVerdict::Inconclusive,
        Some(e) => {
            let in_band = (RANGE_EXPONENT_BAND.0..=RANGE_EXPONENT_BAND.1).contains(&e);
            if in_band && side_monotone && anchors_help {
                ScalingVerdict::Pass
            } else if !monotone_range && !in_band {
                ScalingVerdict::Inconclusive
            } else {
                ScalingVerdict::Fail
            }
        }
    };
    Ok(ScalingReport {
        verdict,
        method,
        range_sweep,
        range_exponent,
        side_sweep,
        side_monotone,
        anchor_sweep,
        anchors_help,
        diagnostics,
    })
}

/// Default sweeps: `R` over 10..40 m at `N_d = 40` with 30 anchors, side
/// length 20, 40, 80 m at 30 anchors, and 10 versus 40 anchors.
pub fn run_scaling_check(trials: usize, base_seed: u64) -> Result<ScalingReport> {
    run_scaling_check_with(
        &base_config(),
        &[10.0, 14.0, 20.0, 28.0, 40.0],
        &[20.0, 40.0, 80.0],
        &[0.1, 0.4],
        trials,
        base_seed,
        Method::MlnSocp,
    )
}

/// Times repeated solves of random single-node programs with `p` anchors
/// each, for the complexity budget check. Programs are drawn from seeded
/// planar instances with Table 1 noise.
pub fn time_solves(p_values: &[usize], repetitions: usize, base_seed: u64) -> Result<Vec<SolveSample>> {
    let settings = SolverSettings::default();
    let config = base_config();
    let model = LinkModel {
        g: config.los_probability,
        eta_l: config.eta_l,
        eta_n: config.eta_n,
    };
    let mut out = Vec::new();
    for (pi, &p) in p_values.iter().enumerate() {
        for k in 0..repetitions {
            let seed = derive_seed(&[base_seed, pi as u64, k as u64]);
            let c = NetworkConfig {
                nodes: p + 1,
                anchor_fraction: p as f64 / (p + 1) as f64,
                radio_range: 1e3,
                ..config.clone()
            };
            let topo = deploy_uniform(&c, seed)?;
            let links = node_links(&topo, 0, c.eta_l, c.eta_n, seed)?;
            let program = build_node_problem(&links, &model, Method::MlnSocp)?;
            let start = Instant::now();
            let sol = solve(&program.form, &settings)?;
            let wall_time = start.elapsed().as_secs_f64();
            out.push(SolveSample {
                p_i: links.len(),
                iterations: sol.iterations,
                wall_time,
            });
        }
    }
    Ok(out)
}
