//! Cramér-Rao lower bound for range-based positioning.
//!
//! Each anchor link contributes `lambda * u u^T` to the Fisher information,
//! with `u` the unit vector from anchor to node and an information rate that
//! mixes the LOS and NLOS variances by the LOS probability:
//! `lambda = g / sigma^2 + (1 - g) / gamma^2`. The scalar bound reported is
//! `sqrt(trace(F^-1))`, the root of the bound on total position MSE.

use std::fmt::Write as _;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::net::{boundary_anchors, AnchorPlacement, NetworkConfig, Position};
use crate::Scalar;

/// How the range variance depends on distance.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum NoiseScaling {
    /// `sigma^2 = eta_l^2 d^2`, `gamma^2 = (eta_l^2 + eta_n^2) d^2`.
    Proportional,
    /// `sigma^2 = eta_l^2`, `gamma^2 = eta_l^2 + eta_n^2`.
    Constant,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CrlbParams<T> {
    pub eta_l: T,
    pub eta_n: T,
    pub g: T,
    pub scaling: NoiseScaling,
}

impl<T: Scalar> CrlbParams<T> {
    fn validate(&self) -> Result<()> {
        if !(self.eta_l.is_finite() && self.eta_l > T::zero()) {
            return Err(Error::config("eta_l", "must be positive for a finite bound"));
        }
        if !(self.eta_n.is_finite() && self.eta_n >= T::zero()) {
            return Err(Error::config("eta_n", "must be finite and non-negative"));
        }
        if !(self.g >= T::zero() && self.g <= T::one()) {
            return Err(Error::config("g", "must lie in [0, 1]"));
        }
        Ok(())
    }

    /// Information rate of one link at distance `d`.
    pub fn rate(&self, d: T) -> T {
        let s2 = self.eta_l * self.eta_l;
        let n2 = s2 + self.eta_n * self.eta_n;
        let scale = match self.scaling {
            NoiseScaling::Proportional => d * d,
            NoiseScaling::Constant => T::one(),
        };
        (self.g / s2 + (T::one() - self.g) / n2) / scale
    }
}

/// Symmetric `d x d` Fisher information matrix, row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct Fim<T> {
    pub dim: usize,
    pub m: Vec<T>,
}

impl<T: Scalar> Fim<T> {
    pub fn at(&self, i: usize, j: usize) -> T {
        self.m[i * self.dim + j]
    }

    pub fn trace(&self) -> T {
        (0..self.dim).map(|i| self.at(i, i)).sum()
    }

    pub fn det(&self) -> T {
        let a = |i, j| self.at(i, j);
        match self.dim {
            2 => a(0, 0) * a(1, 1) - a(0, 1) * a(1, 0),
            _ => {
                a(0, 0) * (a(1, 1) * a(2, 2) - a(1, 2) * a(2, 1)) - a(0, 1) * (a(1, 0) * a(2, 2) - a(1, 2) * a(2, 0))
                    + a(0, 2) * (a(1, 0) * a(2, 1) - a(1, 1) * a(2, 0))
            }
        }
    }

    /// `trace(F^-1)` via the adjugate, `None` when `F` is numerically singular.
    pub fn trace_inverse(&self) -> Option<T> {
        let det = self.det();
        let tr = self.trace();
        let scale = tr.powi(self.dim as i32);
        if !(det > T::lit(1e-10) * scale) || !det.is_finite() {
            return None;
        }
        let a = |i, j| self.at(i, j);
        let adj_trace = match self.dim {
            2 => a(0, 0) + a(1, 1),
            _ => {
                (a(1, 1) * a(2, 2) - a(1, 2) * a(2, 1))
                    + (a(0, 0) * a(2, 2) - a(0, 2) * a(2, 0))
                    + (a(0, 0) * a(1, 1) - a(0, 1) * a(1, 0))
            }
        };
        Some(adj_trace / det)
    }

    /// Eigenvalues by cyclic Jacobi rotations, ascending.
    pub fn eigenvalues(&self) -> Vec<T> {
        let n = self.dim;
        let mut a = self.m.clone();
        for _ in 0..50 {
            let off: T = (0..n)
                .flat_map(|i| (0..n).filter(move |&j| j != i).map(move |j| (i, j)))
                .map(|(i, j)| a[i * n + j] * a[i * n + j])
                .sum();
            if off <= T::epsilon() * T::epsilon() * self.trace().abs().max(T::one()) {
                break;
            }
            for p in 0..n {
                for q in p + 1..n {
                    let apq = a[p * n + q];
                    if apq == T::zero() {
                        continue;
                    }
                    let theta = (a[q * n + q] - a[p * n + p]) / (T::lit(2.0) * apq);
                    let t = theta.signum() / (theta.abs() + (theta * theta + T::one()).sqrt());
                    let c = T::one() / (t * t + T::one()).sqrt();
                    let s = t * c;
                    for k in 0..n {
                        let (akp, akq) = (a[k * n + p], a[k * n + q]);
                        a[k * n + p] = c * akp - s * akq;
                        a[k * n + q] = s * akp + c * akq;
                    }
                    for k in 0..n {
                        let (apk, aqk) = (a[p * n + k], a[q * n + k]);
                        a[p * n + k] = c * apk - s * aqk;
                        a[q * n + k] = s * apk + c * aqk;
                    }
                }
            }
        }
        let mut ev: Vec<T> = (0..n).map(|i| a[i * n + i]).collect();
        ev.sort_by(|x, y| x.partial_cmp(y).unwrap_or(std::cmp::Ordering::Equal));
        ev
    }
}

/// Fisher information at `x` from every anchor in `anchors`.
pub fn fim<T: Scalar>(x: &Position<T>, anchors: &[Position<T>], params: &CrlbParams<T>) -> Result<Fim<T>> {
    params.validate()?;
    let dim = x.dim();
    let mut m = vec![T::zero(); dim * dim];
    for a in anchors {
        if a.dim() != dim {
            return Err(Error::DimensionMismatch {
                expected: dim,
                got: a.dim(),
            });
        }
        let d = x.distance(a);
        if !(d > T::zero()) {
            return Err(Error::SingularFim);
        }
        let u: Vec<T> = x.coords().iter().zip(a.coords()).map(|(&p, &q)| (p - q) / d).collect();
        let lambda = params.rate(d);
        for i in 0..dim {
            for j in i..dim {
                let v = m[i * dim + j] + lambda * u[i] * u[j];
                m[i * dim + j] = v;
                m[j * dim + i] = v;
            }
        }
    }
    Ok(Fim { dim, m })
}

/// `sqrt(trace(F^-1))`, or infinity when the bound is unbounded (singular
/// information, or `x` on an anchor).
pub fn crlb_at<T: Scalar>(x: &Position<T>, anchors: &[Position<T>], params: &CrlbParams<T>) -> Result<T> {
    match fim(x, anchors, params) {
        Ok(f) => Ok(f.trace_inverse().map_or(T::infinity(), |t| t.sqrt())),
        Err(Error::SingularFim) => Ok(T::infinity()),
        Err(e) => Err(e),
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CrlbGrid<T> {
    pub spacing: T,
    pub side: T,
    /// Points per axis.
    pub points: usize,
    /// Row-major with `y` as the row index; infinity marks unbounded points.
    pub values: Vec<T>,
    pub anchors: Vec<Position<T>>,
    pub params: CrlbParams<T>,
    /// Anchors farther than this from a grid point are ignored there.
    pub radio_range: Option<T>,
    pub minimum: T,
    pub argmin: (T, T),
}

impl<T: Scalar> CrlbGrid<T> {
    pub fn coordinate(&self, i: usize) -> T {
        T::from_usize(i).unwrap() * self.spacing
    }

    pub fn value(&self, ix: usize, iy: usize) -> T {
        self.values[iy * self.points + ix]
    }

    /// `x,y,crlb` rows in grid order; unbounded points print as `inf`.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("x,y,crlb\n");
        for iy in 0..self.points {
            for ix in 0..self.points {
                let v = self.value(ix, iy);
                let _ = writeln!(out, "{},{},{}", self.coordinate(ix), self.coordinate(iy), v);
            }
        }
        out
    }
}

/// Evaluates the bound over `[0, side]^2` at the given spacing. Grid points
/// are visited row by row; the first strict minimum wins.
pub fn crlb_grid<T: Scalar>(
    anchors: &[Position<T>],
    side: T,
    spacing: T,
    params: &CrlbParams<T>,
    radio_range: Option<T>,
) -> Result<CrlbGrid<T>> {
    params.validate()?;
    if !(spacing > T::zero() && spacing.is_finite()) {
        return Err(Error::config("grid_spacing", "must be positive"));
    }
    if !(side > T::zero() && side.is_finite()) {
        return Err(Error::config("side", "side length must be positive"));
    }
    if anchors.iter().any(|a| a.dim() != 2) {
        return Err(Error::Input("surface evaluation is planar only".into()));
    }
    // Tolerate the last point landing a hair past the side.
    let points = ((side / spacing) + T::lit(1e-9)).floor().to_usize().unwrap_or(0) + 1;
    let coord = |i: usize| T::from_usize(i).unwrap() * spacing;
    let rows: Vec<Vec<T>> = (0..points)
        .into_par_iter()
        .map(|iy| {
            (0..points)
                .map(|ix| {
                    let x = Position::xy(coord(ix), coord(iy));
                    let heard: Vec<Position<T>> = anchors
                        .iter()
                        .filter(|a| radio_range.is_none_or(|r| x.distance(a) <= r))
                        .cloned()
                        .collect();
                    crlb_at(&x, &heard, params).unwrap_or(T::infinity())
                })
                .collect()
        })
        .collect();
    let values: Vec<T> = rows.into_iter().flatten().collect();
    let mut minimum = T::infinity();
    let mut argmin = (T::zero(), T::zero());
    for (k, &v) in values.iter().enumerate() {
        if v < minimum {
            minimum = v;
            argmin = (coord(k % points), coord(k / points));
        }
    }
    Ok(CrlbGrid {
        spacing,
        side,
        points,
        values,
        anchors: anchors.to_vec(),
        params: *params,
        radio_range,
        minimum,
        argmin,
    })
}

/// Bound surface of a boundary-anchor deployment described by `config`.
pub fn crlb_surface<T: Scalar>(config: &NetworkConfig<T>, spacing: T, scaling: NoiseScaling) -> Result<CrlbGrid<T>> {
    config.validate()?;
    if config.placement != AnchorPlacement::Boundary {
        return Err(Error::config("placement", "the bound surface needs boundary anchors"));
    }
    let anchors = boundary_anchors(config.side, config.anchor_count()?);
    let params = CrlbParams {
        eta_l: config.eta_l,
        eta_n: config.eta_n,
        g: config.los_probability,
        scaling,
    };
    crlb_grid(&anchors, config.side, spacing, &params, Some(config.radio_range))
}
