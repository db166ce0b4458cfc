//! Noisy range measurements and the per-link variance weights.
//!
//! Simulation scales noise with the true distance: `w ~ N(0, (eta_l d)^2)` on
//! every link, plus an exponential bias `o ~ Exp(mean eta_n d)` on NLOS links.
//! NLOS ranges are corrected by subtracting the known bias mean. The
//! estimator only sees measured values, so its variances
//! (`sigma^2 = eta_l^2 d^2`, `gamma^2 = (eta_l^2 + eta_n^2) d^2`) use the
//! corrected measurement.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use rand::Rng;
use rand_distr::{Distribution, Exp1, StandardNormal};

use crate::error::{Error, Result};
use crate::net::{Edge, LinkKind, Topology};
use crate::rng::{substream, TAG_MEASUREMENT};
use crate::Scalar;

/// Smallest range value handed to the estimator, metres.
pub const RANGE_FLOOR: f64 = 1e-3;

#[derive(Debug, Clone, PartialEq)]
pub struct Measurement<T> {
    pub r: usize,
    pub t: usize,
    pub kind: LinkKind,
    pub raw: T,
    /// `raw` for LOS, `raw - mu` for NLOS, floored at [`RANGE_FLOOR`].
    pub corrected: T,
    /// NLOS bias mean; zero for LOS.
    pub mu: T,
    pub sigma_sq: T,
    /// Only defined for NLOS links.
    pub gamma_sq: Option<T>,
    /// Set when `raw` or `corrected` hit the floor; `corrected = raw - mu`
    /// no longer holds exactly for such records.
    pub floored: bool,
}

impl<T: Scalar> Measurement<T> {
    /// Builds a record from given noise terms. `bias` is ignored for LOS links.
    pub fn from_parts(edge: &Edge<T>, eta_l: T, eta_n: T, noise: T, bias: T) -> Self {
        let floor = T::lit(RANGE_FLOOR);
        let d = edge.true_distance;
        let (raw, mu) = match edge.kind {
            LinkKind::Los => (d + noise, T::zero()),
            LinkKind::Nlos => (d + bias + noise, eta_n * d),
        };
        let mut floored = false;
        let mut clamp = |v: T| {
            if v < floor {
                floored = true;
                floor
            } else {
                v
            }
        };
        let raw = clamp(raw);
        let corrected = clamp(raw - mu);
        let sigma_sq = eta_l * eta_l * corrected * corrected;
        let gamma_sq = (edge.kind == LinkKind::Nlos)
            .then(|| (eta_l * eta_l + eta_n * eta_n) * corrected * corrected);
        Self {
            r: edge.r,
            t: edge.t,
            kind: edge.kind,
            raw,
            corrected,
            mu,
            sigma_sq,
            gamma_sq,
            floored,
        }
    }
}

fn standard_normal<R: Rng>(rng: &mut R) -> f64 {
    StandardNormal.sample(rng)
}

pub fn sample_los<T: Scalar, R: Rng>(edge: &Edge<T>, eta_l: T, rng: &mut R) -> Result<Measurement<T>> {
    if edge.kind != LinkKind::Los {
        return Err(Error::Usage("sample_los called on an NLOS edge".into()));
    }
    let sd = eta_l * edge.true_distance;
    let noise = sd * T::lit(standard_normal(rng));
    Ok(Measurement::from_parts(edge, eta_l, T::zero(), noise, T::zero()))
}

pub fn sample_nlos<T: Scalar, R: Rng>(
    edge: &Edge<T>,
    eta_l: T,
    eta_n: T,
    rng: &mut R,
) -> Result<Measurement<T>> {
    if edge.kind != LinkKind::Nlos {
        return Err(Error::Usage("sample_nlos called on a LOS edge".into()));
    }
    let d = edge.true_distance;
    // Fixed draw order: bias first, then noise.
    let e: f64 = Exp1.sample(rng);
    let bias = eta_n * d * T::lit(e);
    let noise = eta_l * d * T::lit(standard_normal(rng));
    Ok(Measurement::from_parts(edge, eta_l, eta_n, noise, bias))
}

/// Draws the measurement of one edge from its own substream of `seed`.
pub fn sample_edge<T: Scalar>(edge: &Edge<T>, eta_l: T, eta_n: T, seed: u64) -> Measurement<T> {
    let mut rng = substream(seed, TAG_MEASUREMENT, edge.r, edge.t);
    match edge.kind {
        LinkKind::Los => sample_los(edge, eta_l, &mut rng),
        LinkKind::Nlos => sample_nlos(edge, eta_l, eta_n, &mut rng),
    }
    .expect("kind dispatched")
}

/// Weight coefficients of a link's two cone constraints.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LinkWeights<T> {
    /// `sqrt(g / sigma^2)`
    pub los: T,
    /// `sqrt((1 - g) / gamma^2)`
    pub nlos: T,
}

impl<T: Scalar> LinkWeights<T> {
    pub fn for_kind(&self, kind: LinkKind) -> T {
        match kind {
            LinkKind::Los => self.los,
            LinkKind::Nlos => self.nlos,
        }
    }
}

/// Both weight formulas evaluated at the corrected range; the link's kind
/// selects which one its constraint uses.
pub fn estimator_weights<T: Scalar>(m: &Measurement<T>, g: T, eta_l: T, eta_n: T) -> Result<LinkWeights<T>> {
    if !(m.corrected > T::zero()) {
        return Err(Error::Input(format!(
            "link ({}, {}) has non-positive corrected range",
            m.r, m.t
        )));
    }
    let d2 = m.corrected * m.corrected;
    let sigma_sq = eta_l * eta_l * d2;
    let gamma_sq = (eta_l * eta_l + eta_n * eta_n) * d2;
    Ok(LinkWeights {
        los: (g / sigma_sq).sqrt(),
        nlos: ((T::one() - g) / gamma_sq).sqrt(),
    })
}

/// One measurement per topology edge.
#[derive(Debug, Clone, PartialEq)]
pub struct MeasurementSet<T> {
    pub seed: u64,
    pub eta_l: T,
    pub eta_n: T,
    measurements: BTreeMap<(usize, usize), Measurement<T>>,
}

impl<T: Scalar> MeasurementSet<T> {
    pub fn sample(topology: &Topology<T>, eta_l: T, eta_n: T, seed: u64) -> Self {
        let measurements = topology
            .edges()
            .iter()
            .map(|e| ((e.r, e.t), sample_edge(e, eta_l, eta_n, seed)))
            .collect();
        Self {
            seed,
            eta_l,
            eta_n,
            measurements,
        }
    }

    pub fn get(&self, r: usize, t: usize) -> Option<&Measurement<T>> {
        self.measurements.get(&(r.min(t), r.max(t)))
    }

    pub fn len(&self) -> usize {
        self.measurements.len()
    }

    pub fn is_empty(&self) -> bool {
        self.measurements.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = &Measurement<T>> {
        self.measurements.values()
    }

    pub fn floored_count(&self) -> usize {
        self.iter().filter(|m| m.floored).count()
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from("r,t,kind,raw,corrected,mu,sigma_sq,gamma_sq\n");
        for m in self.iter() {
            let gamma = m.gamma_sq.map(|g| g.to_string()).unwrap_or_default();
            writeln!(
                out,
                "{},{},{},{},{},{},{},{}",
                m.r,
                m.t,
                m.kind.as_str(),
                m.raw,
                m.corrected,
                m.mu,
                m.sigma_sq,
                gamma
            )
            .unwrap();
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn edge(kind: LinkKind, d: f64) -> Edge<f64> {
        Edge {
            r: 0,
            t: 1,
            kind,
            true_distance: d,
        }
    }

    #[test]
    fn zero_noise_is_exact() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let m = sample_los(&edge(LinkKind::Los, 8.5), 0.0, &mut rng).unwrap();
        assert_eq!((m.raw, m.corrected), (8.5, 8.5));
        let m = sample_nlos(&edge(LinkKind::Nlos, 8.5), 0.0, 0.0, &mut rng).unwrap();
        assert_eq!((m.raw, m.corrected), (8.5, 8.5));
    }

    #[test]
    fn kind_mismatch_is_a_usage_error() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        assert!(sample_los(&edge(LinkKind::Nlos, 1.0), 0.1, &mut rng).is_err());
        assert!(sample_nlos(&edge(LinkKind::Los, 1.0), 0.1, 0.1, &mut rng).is_err());
    }

    #[test]
    fn mean_removal_identity() {
        let e = edge(LinkKind::Nlos, 10.0);
        let m = Measurement::from_parts(&e, 0.1, 0.06, 0.0, 0.06 * 10.0);
        assert_eq!(m.corrected, 10.0);
        assert_eq!(m.mu, 0.6);
    }

    #[test]
    fn same_seed_same_value() {
        let e = edge(LinkKind::Los, 10.0);
        assert_eq!(sample_edge(&e, 0.1, 0.0, 9), sample_edge(&e, 0.1, 0.0, 9));
    }

    #[test]
    fn negative_values_are_floored_and_flagged() {
        let e = edge(LinkKind::Los, 1.0);
        let m = Measurement::from_parts(&e, 0.1, 0.0, -5.0, 0.0);
        assert!(m.floored);
        assert_eq!(m.corrected, RANGE_FLOOR);
        assert!(m.sigma_sq > 0.0);
    }

    #[test]
    fn weights_examples() {
        let los = Measurement::from_parts(&edge(LinkKind::Los, 10.0), 0.1, 0.0, 0.0, 0.0);
        let w = estimator_weights(&los, 1.0, 0.1, 0.0).unwrap();
        assert!((w.los - 1.0).abs() < 1e-12);

        let nlos = Measurement::from_parts(&edge(LinkKind::Nlos, 10.0), 0.1, 0.06, 0.0, 0.6);
        let w = estimator_weights(&nlos, 0.0, 0.1, 0.06).unwrap();
        // 1 / (sqrt(0.0136) * 10)
        assert!((w.nlos - 0.857_492_925_712_544).abs() < 1e-12);

        let w = estimator_weights(&los, 0.5, 0.1, 0.0).unwrap();
        assert_eq!(w.los, w.nlos);
    }

    #[test]
    fn weights_reject_non_positive_range() {
        let mut m = Measurement::from_parts(&edge(LinkKind::Los, 10.0), 0.1, 0.0, 0.0, 0.0);
        m.corrected = 0.0;
        assert!(estimator_weights(&m, 0.7, 0.1, 0.06).is_err());
    }

    #[test]
    fn variance_identity_at_true_distance() {
        let (el, en) = (0.1_f64, 0.06_f64);
        for d in [1.0, 10.0, 100.0] {
            let sigma_sq = (el * d).powi(2);
            let mu = en * d;
            let gamma_sq = (el * el + en * en) * d * d;
            assert!((gamma_sq - (mu * mu + sigma_sq)).abs() <= 1e-12 * gamma_sq);
        }
    }

    #[test]
    fn csv_has_header_and_blank_gamma_for_los() {
        let topo = Topology::from_positions(
            10.0,
            vec![crate::Position::xy(0.0, 0.0)],
            vec![crate::Position::xy(3.0, 4.0)],
            10.0,
            |_, _| LinkKind::Los,
        )
        .unwrap();
        let set = MeasurementSet::sample(&topo, 0.0, 0.0, 1);
        assert_eq!(set.to_csv(), "r,t,kind,raw,corrected,mu,sigma_sq,gamma_sq\n0,1,LOS,5,5,0,0,\n");
    }
}
