//! Network model: node positions, LOS/NLOS-labelled edges, random deployments.
//!
//! Nodes are indexed `0..n`. Unknown nodes occupy `0..m_u` and anchors
//! `m_u..n`, so every unknown-to-anchor edge is stored as `(unknown, anchor)`
//! with `r < t`.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rng::{substream, TAG_EDGE_LABEL, TAG_NODE_POSITION};
use crate::Scalar;

/// A point in `R^d`, `d` in {2, 3}.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Position<T> {
    coords: Vec<T>,
}

impl<T: Scalar> Position<T> {
    pub fn new(coords: Vec<T>) -> Result<Self> {
        if !(2..=3).contains(&coords.len()) {
            return Err(Error::config("dimension", format!("{} not in {{2, 3}}", coords.len())));
        }
        if coords.iter().any(|c| !c.is_finite()) {
            return Err(Error::Input("position has a non-finite coordinate".into()));
        }
        Ok(Self { coords })
    }

    pub fn xy(x: T, y: T) -> Self {
        Self { coords: vec![x, y] }
    }

    pub fn coords(&self) -> &[T] {
        &self.coords
    }

    pub fn dim(&self) -> usize {
        self.coords.len()
    }

    pub fn distance(&self, other: &Self) -> T {
        debug_assert_eq!(self.dim(), other.dim());
        self.coords
            .iter()
            .zip(&other.coords)
            .map(|(&a, &b)| (a - b) * (a - b))
            .sum::<T>()
            .sqrt()
    }

    pub fn map(&self, f: impl Fn(T) -> T) -> Self {
        Self {
            coords: self.coords.iter().map(|&c| f(c)).collect(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum LinkKind {
    #[serde(rename = "LOS")]
    Los,
    #[serde(rename = "NLOS")]
    Nlos,
}

impl LinkKind {
    pub fn as_str(self) -> &'static str {
        match self {
            LinkKind::Los => "LOS",
            LinkKind::Nlos => "NLOS",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum AnchorPlacement {
    RandomUniform,
    /// Equal arc-length spacing along the square's perimeter, starting at the
    /// origin corner and walking counter-clockwise. Four anchors land on the
    /// four corners.
    Boundary,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NetworkConfig<T> {
    pub dimension: usize,
    /// Side length `N_d` of the deployment square / cube, metres.
    pub side: T,
    /// Total node count, anchors included.
    pub nodes: usize,
    pub anchor_fraction: T,
    pub radio_range: T,
    /// Probability that a link is line-of-sight.
    pub los_probability: T,
    /// Measurement-noise standard deviation per unit length.
    pub eta_l: T,
    /// NLOS-bias standard deviation per unit length.
    pub eta_n: T,
    pub placement: AnchorPlacement,
}

impl<T: Scalar> NetworkConfig<T> {
    /// The Table 1 base configuration: 40 m square, 100 nodes, 30% anchors,
    /// `R = N_d`, `g = 0.7`, `eta = (0.1, 0.06)`.
    pub fn table1_default() -> Self {
        Self {
            dimension: 2,
            side: T::lit(40.0),
            nodes: 100,
            anchor_fraction: T::lit(0.3),
            radio_range: T::lit(40.0),
            los_probability: T::lit(0.7),
            eta_l: T::lit(0.1),
            eta_n: T::lit(0.06),
            placement: AnchorPlacement::RandomUniform,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let unit = |v: T| v >= T::zero() && v <= T::one();
        if !(2..=3).contains(&self.dimension) {
            return Err(Error::config("dimension", format!("{} not in {{2, 3}}", self.dimension)));
        }
        if !(self.side.is_finite() && self.side > T::zero()) {
            return Err(Error::config("side", "side length must be positive"));
        }
        if self.nodes == 0 {
            return Err(Error::config("nodes", "node count must be positive"));
        }
        if !unit(self.anchor_fraction) {
            return Err(Error::config("anchor_fraction", "must lie in [0, 1]"));
        }
        if !(self.radio_range.is_finite() && self.radio_range > T::zero()) {
            return Err(Error::config("radio_range", "must be positive"));
        }
        if !unit(self.los_probability) {
            return Err(Error::config("los_probability", "must lie in [0, 1]"));
        }
        if !(self.eta_l.is_finite() && self.eta_l >= T::zero()) {
            return Err(Error::config("eta_l", "must be finite and non-negative"));
        }
        if !(self.eta_n.is_finite() && self.eta_n >= T::zero()) {
            return Err(Error::config("eta_n", "must be finite and non-negative"));
        }
        if self.placement == AnchorPlacement::Boundary && self.dimension != 2 {
            return Err(Error::config("placement", "boundary placement is defined for d = 2 only"));
        }
        self.anchor_count().map(|_| ())
    }

    /// `round(p * n)`, at least one. `p = 0` is rejected.
    pub fn anchor_count(&self) -> Result<usize> {
        if self.anchor_fraction <= T::zero() {
            return Err(Error::config("anchor_fraction", "zero anchors requested"));
        }
        let raw = (self.anchor_fraction * T::from_usize(self.nodes).unwrap())
            .round()
            .to_usize()
            .unwrap_or(0);
        Ok(raw.clamp(1, self.nodes))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Edge<T> {
    pub r: usize,
    pub t: usize,
    pub kind: LinkKind,
    pub true_distance: T,
}

/// Immutable network instance.
#[derive(Debug, Clone, PartialEq)]
pub struct Topology<T> {
    dimension: usize,
    side: T,
    unknowns: Vec<Position<T>>,
    anchors: Vec<Position<T>>,
    /// Sorted by `(r, t)`, `r < t`.
    edges: Vec<Edge<T>>,
}

impl<T: Scalar> Topology<T> {
    /// Builds a topology from explicit positions, connecting every pair within
    /// `radio_range` and labelling each edge with `label(r, t)`.
    pub fn from_positions(
        side: T,
        unknowns: Vec<Position<T>>,
        anchors: Vec<Position<T>>,
        radio_range: T,
        mut label: impl FnMut(usize, usize) -> LinkKind,
    ) -> Result<Self> {
        let dimension = unknowns
            .first()
            .or(anchors.first())
            .map(Position::dim)
            .ok_or_else(|| Error::Usage("topology needs at least one node".into()))?;
        if unknowns.iter().chain(&anchors).any(|p| p.dim() != dimension) {
            return Err(Error::Input("positions have mixed dimensions".into()));
        }
        let all: Vec<&Position<T>> = unknowns.iter().chain(&anchors).collect();
        let mut edges = Vec::new();
        for r in 0..all.len() {
            for t in r + 1..all.len() {
                let d = all[r].distance(all[t]);
                if d <= radio_range {
                    edges.push(Edge {
                        r,
                        t,
                        kind: label(r, t),
                        true_distance: d,
                    });
                }
            }
        }
        Ok(Self {
            dimension,
            side,
            unknowns,
            anchors,
            edges,
        })
    }

    pub fn dimension(&self) -> usize {
        self.dimension
    }

    pub fn side(&self) -> T {
        self.side
    }

    pub fn unknown_count(&self) -> usize {
        self.unknowns.len()
    }

    pub fn anchor_count(&self) -> usize {
        self.anchors.len()
    }

    pub fn node_count(&self) -> usize {
        self.unknowns.len() + self.anchors.len()
    }

    pub fn is_anchor(&self, node: usize) -> bool {
        node >= self.unknowns.len() && node < self.node_count()
    }

    pub fn position(&self, node: usize) -> &Position<T> {
        let m_u = self.unknowns.len();
        if node < m_u {
            &self.unknowns[node]
        } else {
            &self.anchors[node - m_u]
        }
    }

    pub fn unknowns(&self) -> &[Position<T>] {
        &self.unknowns
    }

    pub fn anchors(&self) -> &[Position<T>] {
        &self.anchors
    }

    pub fn edges(&self) -> &[Edge<T>] {
        &self.edges
    }

    /// Anchors sharing an edge with unknown node `r`, ascending by anchor index.
    pub fn neighbor_anchors(&self, r: usize) -> Result<Vec<(usize, &Edge<T>)>> {
        if r >= self.unknowns.len() {
            return Err(Error::Usage(format!("node {r} is not an unknown node")));
        }
        let m_u = self.unknowns.len();
        let start = self.edges.partition_point(|e| e.r < r);
        Ok(self.edges[start..]
            .iter()
            .take_while(|e| e.r == r)
            .filter(|e| e.t >= m_u)
            .map(|e| (e.t, e))
            .collect())
    }

    pub fn to_json(&self) -> Result<String> {
        let m_u = self.unknowns.len();
        let doc = TopologyDoc {
            dimension: self.dimension,
            side: self.side,
            nodes: (0..self.node_count())
                .map(|id| NodeDoc {
                    id,
                    role: if id < m_u { Role::Unknown } else { Role::Anchor },
                    coords: self.position(id).coords.clone(),
                })
                .collect(),
            edges: self.edges.clone(),
        };
        Ok(serde_json::to_string_pretty(&doc)?)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let doc: TopologyDoc<T> = serde_json::from_str(text)?;
        let mut unknowns = Vec::new();
        let mut anchors = Vec::new();
        for (i, n) in doc.nodes.into_iter().enumerate() {
            if n.id != i {
                return Err(Error::Input(format!("node ids must be 0..n in order, found {} at {i}", n.id)));
            }
            let p = Position::new(n.coords)?;
            match n.role {
                Role::Unknown if anchors.is_empty() => unknowns.push(p),
                Role::Unknown => return Err(Error::Input("unknown node listed after an anchor".into())),
                Role::Anchor => anchors.push(p),
            }
        }
        let n = unknowns.len() + anchors.len();
        let mut last = None;
        for e in &doc.edges {
            if e.r >= e.t || e.t >= n {
                return Err(Error::Input(format!("bad edge ({}, {})", e.r, e.t)));
            }
            if last.is_some_and(|l| l >= (e.r, e.t)) {
                return Err(Error::Input("edges must be sorted and unique".into()));
            }
            last = Some((e.r, e.t));
        }
        Ok(Self {
            dimension: doc.dimension,
            side: doc.side,
            unknowns,
            anchors,
            edges: doc.edges,
        })
    }
}

#[derive(Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
enum Role {
    Unknown,
    Anchor,
}

#[derive(Serialize, Deserialize)]
struct NodeDoc<T> {
    id: usize,
    role: Role,
    coords: Vec<T>,
}

#[derive(Serialize, Deserialize)]
#[serde(bound = "T: Scalar")]
struct TopologyDoc<T> {
    dimension: usize,
    side: T,
    nodes: Vec<NodeDoc<T>>,
    edges: Vec<Edge<T>>,
}

/// Perimeter point at arc length `s` from the origin, walking (0,0) → (N,0) →
/// (N,N) → (0,N).
fn perimeter_point<T: Scalar>(side: T, s: T) -> Position<T> {
    let two = T::lit(2.0);
    let three = T::lit(3.0);
    if s < side {
        Position::xy(s, T::zero())
    } else if s < two * side {
        Position::xy(side, s - side)
    } else if s < three * side {
        Position::xy(side - (s - two * side), side)
    } else {
        Position::xy(T::zero(), side - (s - three * side))
    }
}

/// `n_a` anchors evenly spaced along the perimeter of the `side` square.
pub fn boundary_anchors<T: Scalar>(side: T, n_a: usize) -> Vec<Position<T>> {
    let spacing = T::lit(4.0) * side / T::from_usize(n_a.max(1)).unwrap();
    (0..n_a)
        .map(|k| perimeter_point(side, spacing * T::from_usize(k).unwrap()))
        .collect()
}

fn uniform_position<T: Scalar>(seed: u64, id: usize, dim: usize, side: T) -> Position<T> {
    let mut rng = substream(seed, TAG_NODE_POSITION, id, 0);
    Position {
        coords: (0..dim)
            .map(|_| T::lit(rng.random::<f64>()) * side)
            .collect(),
    }
}

/// Random deployment: node `i` draws its coordinates from its own substream,
/// each edge `(r, t)` draws its LOS/NLOS label from another.
pub fn deploy_uniform<T: Scalar>(config: &NetworkConfig<T>, seed: u64) -> Result<Topology<T>> {
    config.validate()?;
    let n_a = config.anchor_count()?;
    let m_u = config.nodes - n_a;
    let dim = config.dimension;
    let unknowns = (0..m_u)
        .map(|i| uniform_position(seed, i, dim, config.side))
        .collect();
    let anchors = match config.placement {
        AnchorPlacement::RandomUniform => (m_u..config.nodes)
            .map(|i| uniform_position(seed, i, dim, config.side))
            .collect(),
        AnchorPlacement::Boundary => boundary_anchors(config.side, n_a),
    };
    Topology::from_positions(
        config.side,
        unknowns,
        anchors,
        config.radio_range,
        edge_labels(seed, config.los_probability),
    )
}

/// LOS/NLOS labelling where edge `(r, t)` is LOS with probability `g`, drawn
/// from its own substream of `seed`.
pub fn edge_labels<T: Scalar>(seed: u64, g: T) -> impl FnMut(usize, usize) -> LinkKind {
    let g = g.to_f64_lossy();
    move |r, t| {
        if substream(seed, TAG_EDGE_LABEL, r, t).random::<f64>() < g {
            LinkKind::Los
        } else {
            LinkKind::Nlos
        }
    }
}
