//! Flat `key = value` run configuration. Flags use the same keys and
//! override the file.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use mlnsocp::crlb::NoiseScaling;
use mlnsocp::{AnchorPlacement, Method, NetworkConfig};

use crate::error::CliError;

pub const EXPERIMENTS: [&str; 6] = ["table1", "table2", "cdf", "rmse-surface", "crlb-surface", "scaling"];

/// Every accepted key, in echo order, with a one-line description.
pub const KEYS: [(&str, &str); 17] = [
    ("dimension", "2 or 3"),
    ("side", "side length N_d of the square or cube, metres (required)"),
    ("nodes", "total node count"),
    ("p", "anchor fraction in [0, 1]"),
    ("range", "radio range R in metres (default: side)"),
    ("g", "LOS probability in [0, 1]"),
    ("eta_l", "LOS noise standard deviation per metre"),
    ("eta_n", "NLOS bias mean per metre"),
    ("placement", "random-uniform or boundary"),
    ("method", "mln-socp or d-socp"),
    ("seed", "base seed"),
    ("trials", "Monte Carlo trials per cell"),
    ("out", "output directory"),
    ("experiment", "one of table1, table2, cdf, rmse-surface, crlb-surface, scaling"),
    ("spacing", "grid spacing of the surfaces, metres"),
    ("scaling", "bound noise model: constant or proportional"),
    ("topology", "topology JSON to use instead of a fresh deployment"),
];

#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub network: NetworkConfig<f64>,
    pub method: Method,
    pub seed: u64,
    pub trials: usize,
    pub out: PathBuf,
    pub experiment: Option<String>,
    pub spacing: f64,
    pub scaling: NoiseScaling,
    pub topology: Option<PathBuf>,
}

pub fn valid_keys() -> String {
    KEYS.iter().map(|k| k.0).collect::<Vec<_>>().join(", ")
}

/// Reads `key = value` lines. Blank lines and `#` comments are skipped.
pub fn parse_file(text: &str) -> Result<BTreeMap<String, String>, CliError> {
    let mut out = BTreeMap::new();
    for (i, line) in text.lines().enumerate() {
        let line = line.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let (k, v) = line
            .split_once('=')
            .ok_or_else(|| CliError::Usage(format!("config line {}: expected key = value, got `{line}`", i + 1)))?;
        out.insert(k.trim().to_string(), v.trim().to_string());
    }
    Ok(out)
}

pub fn load(path: Option<&Path>, overrides: &[(String, String)]) -> Result<RunConfig, CliError> {
    let mut values = match path {
        Some(p) => {
            let text = std::fs::read_to_string(p)
                .map_err(|e| CliError::Usage(format!("cannot read config {}: {e}", p.display())))?;
            parse_file(&text)?
        }
        None => BTreeMap::new(),
    };
    for (k, v) in overrides {
        values.insert(k.clone(), v.clone());
    }
    resolve(&values)
}

fn num<T: std::str::FromStr>(values: &BTreeMap<String, String>, key: &str, default: T) -> Result<T, CliError> {
    match values.get(key) {
        None => Ok(default),
        Some(v) => v
            .parse()
            .map_err(|_| CliError::Usage(format!("{key}: cannot parse `{v}`"))),
    }
}

pub fn resolve(values: &BTreeMap<String, String>) -> Result<RunConfig, CliError> {
    if let Some(k) = values.keys().find(|k| !KEYS.iter().any(|(name, _)| name == k)) {
        return Err(CliError::Usage(format!("unknown key `{k}`; valid keys: {}", valid_keys())));
    }
    let side: f64 = match values.get("side") {
        Some(_) => num(values, "side", 0.0)?,
        None => return Err(CliError::Usage("missing `side`: the side length N_d is required".into())),
    };
    let base = NetworkConfig::<f64>::table1_default();
    let placement = match values.get("placement").map(String::as_str) {
        None | Some("random-uniform") => AnchorPlacement::RandomUniform,
        Some("boundary") => AnchorPlacement::Boundary,
        Some(v) => return Err(CliError::Usage(format!("placement: `{v}` is not random-uniform or boundary"))),
    };
    let network = NetworkConfig {
        dimension: num(values, "dimension", base.dimension)?,
        side,
        nodes: num(values, "nodes", base.nodes)?,
        anchor_fraction: num(values, "p", base.anchor_fraction)?,
        radio_range: num(values, "range", side)?,
        los_probability: num(values, "g", base.los_probability)?,
        eta_l: num(values, "eta_l", base.eta_l)?,
        eta_n: num(values, "eta_n", base.eta_n)?,
        placement,
    };
    network.validate().map_err(|e| CliError::Usage(e.to_string()))?;
    let method = match values.get("method") {
        None => Method::MlnSocp,
        Some(v) => Method::parse(v).ok_or_else(|| CliError::Usage(format!("method: `{v}` is not mln-socp or d-socp")))?,
    };
    let experiment = values.get("experiment").cloned();
    if let Some(e) = &experiment {
        check_experiment(e)?;
    }
    let scaling = match values.get("scaling").map(String::as_str) {
        None | Some("constant") => NoiseScaling::Constant,
        Some("proportional") => NoiseScaling::Proportional,
        Some(v) => return Err(CliError::Usage(format!("scaling: `{v}` is not constant or proportional"))),
    };
    let trials = num(values, "trials", 100usize)?;
    if trials == 0 {
        return Err(CliError::Usage("trials: must be at least 1".into()));
    }
    let spacing = num(values, "spacing", 1.0f64)?;
    if !(spacing > 0.0 && spacing.is_finite()) {
        return Err(CliError::Usage("spacing: must be positive".into()));
    }
    Ok(RunConfig {
        network,
        method,
        seed: num(values, "seed", 1u64)?,
        trials,
        out: values.get("out").map_or_else(|| PathBuf::from("."), PathBuf::from),
        experiment,
        spacing,
        scaling,
        topology: values.get("topology").map(PathBuf::from),
    })
}

pub fn check_experiment(name: &str) -> Result<(), CliError> {
    if EXPERIMENTS.contains(&name) {
        Ok(())
    } else {
        Err(CliError::Usage(format!(
            "unknown experiment `{name}`; expected one of: {}",
            EXPERIMENTS.join(", ")
        )))
    }
}

impl RunConfig {
    /// The fully resolved configuration in file format. Parsing it back
    /// yields the same `RunConfig`.
    pub fn echo(&self) -> String {
        let n = &self.network;
        let mut s = String::new();
        let mut put = |k: &str, v: String| {
            let _ = writeln!(s, "{k} = {v}");
        };
        put("dimension", n.dimension.to_string());
        put("side", n.side.to_string());
        put("nodes", n.nodes.to_string());
        put("p", n.anchor_fraction.to_string());
        put("range", n.radio_range.to_string());
        put("g", n.los_probability.to_string());
        put("eta_l", n.eta_l.to_string());
        put("eta_n", n.eta_n.to_string());
        put(
            "placement",
            match n.placement {
                AnchorPlacement::RandomUniform => "random-uniform",
                AnchorPlacement::Boundary => "boundary",
            }
            .into(),
        );
        put("method", self.method.as_str().into());
        put("seed", self.seed.to_string());
        put("trials", self.trials.to_string());
        put("out", self.out.display().to_string());
        if let Some(e) = &self.experiment {
            put("experiment", e.clone());
        }
        put("spacing", self.spacing.to_string());
        put(
            "scaling",
            match self.scaling {
                NoiseScaling::Constant => "constant",
                NoiseScaling::Proportional => "proportional",
            }
            .into(),
        );
        if let Some(t) = &self.topology {
            put("topology", t.display().to_string());
        }
        s
    }
}
