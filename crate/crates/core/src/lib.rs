//! Range-based sensor localization under mixed line-of-sight / non-line-of-sight
//! conditions.
//!
//! Each unknown node is localized on its own from the anchors it can hear. The
//! weighted maximum-likelihood fit over its links is relaxed into an epigraph
//! second-order cone program, assembled in SeDuMi-style standard form by
//! [`conic`], and solved by the primal-dual interior-point method in
//! [`solver`]. Around that core sit a network simulator ([`net`],
//! [`measurement`]), a Cramér-Rao bound analyzer ([`crlb`]) and the Monte Carlo
//! harness used to regenerate the published experiments ([`harness`]).
//!
//! The numerical code is generic over the scalar type (any [`Scalar`], i.e.
//! `f32` or `f64`). Concrete `f64` aliases are exported at the crate root for
//! the common case.

pub mod conic;
pub mod crlb;
pub mod error;
pub mod harness;
pub mod measurement;
pub mod net;
pub mod rng;
mod scalar;
pub mod solver;
pub mod standard_form;

pub use conic::{build_node_problem, extract_position, fit_objective, validate_assembly, ConicProgram, LinkModel, Method};
pub use error::{Error, Result};
pub use measurement::{LinkWeights, Measurement, MeasurementSet};
pub use net::{AnchorPlacement, Edge, LinkKind, NetworkConfig, Position, Topology};
pub use scalar::Scalar;
pub use solver::{solve, ConicSolution, SolverSettings, SolverStatus};
pub use standard_form::StandardForm;

pub type Position64 = net::Position<f64>;
pub type NetworkConfig64 = net::NetworkConfig<f64>;
pub type Topology64 = net::Topology<f64>;
pub type Edge64 = net::Edge<f64>;
pub type Measurement64 = measurement::Measurement<f64>;
pub type MeasurementSet64 = measurement::MeasurementSet<f64>;
pub type LinkModel64 = conic::LinkModel<f64>;
pub type ConicProgram64 = conic::ConicProgram<f64>;
pub type StandardForm64 = standard_form::StandardForm<f64>;
pub type SolverSettings64 = solver::SolverSettings<f64>;
pub type ConicSolution64 = solver::ConicSolution<f64>;

pub type Position32 = net::Position<f32>;
pub type ConicProgram32 = conic::ConicProgram<f32>;
pub type SolverSettings32 = solver::SolverSettings<f32>;
