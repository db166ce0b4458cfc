//! Per-node epigraph SOCP in SeDuMi standard form.
//!
//! For an unknown node with `p` neighbouring anchors in `R^d` the variable
//! vector is
//!
//! ```text
//! x~ = [ x_r (d) | anchor coords (d*p, unused) | q (p) | z (p) | y (p) | V ]
//! ```
//!
//! (`5p + 3` entries in the plane) and the program maximizes `-V` over
//!
//! ```text
//! ||(q_1, z_1, ..., q_p, z_p)|| <= V                          one cone, 2p+1
//! |y_k - d_k| <= c_k q_k      c_k = eta_l d_k / sqrt(g)         p cones, 2   (LOS)
//! |y_k - d_k| <= c_k z_k      c_k = sqrt(eta_l^2+eta_n^2) d_k / sqrt(1-g)
//!                                                               p cones, 2   (NLOS)
//! ||x_r - a_k|| <= y_k                                          p cones, d+1
//! ```
//!
//! Only one of each anchor's two 2-cones applies to its link; the other is
//! emitted as the vacuous cone `(slot, 0)`, which just keeps the slot
//! non-negative. The anchor-coordinate slots appear in no constraint and
//! their rows of `A` are zero.

use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::measurement::Measurement;
use crate::net::{LinkKind, Position};
use crate::standard_form::StandardForm;
use crate::Scalar;

/// Lower bound on the estimator-side `eta_l`; an exact zero would make every
/// weight infinite.
pub const ESTIMATOR_ETA_FLOOR: f64 = 1e-3;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Method {
    /// Weighted mixed LOS/NLOS formulation.
    MlnSocp,
    /// Baseline: every link treated as LOS with unit weight and its raw range.
    DSocp,
}

impl Method {
    pub fn as_str(self) -> &'static str {
        match self {
            Method::MlnSocp => "mln-socp",
            Method::DSocp => "d-socp",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        match s.to_ascii_lowercase().as_str() {
            "mln-socp" | "mln_socp" | "mln" => Some(Method::MlnSocp),
            "d-socp" | "d_socp" | "d" => Some(Method::DSocp),
            _ => None,
        }
    }
}

/// Link statistics the estimator is told.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LinkModel<T> {
    pub g: T,
    pub eta_l: T,
    pub eta_n: T,
}

/// Index map of the variable vector.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct VarLayout {
    pub dim: usize,
    pub p: usize,
}

impl VarLayout {
    pub fn n_vars(&self) -> usize {
        self.dim * (self.p + 1) + 3 * self.p + 1
    }
    pub fn position(&self, j: usize) -> usize {
        j
    }
    pub fn vestigial(&self) -> std::ops::Range<usize> {
        self.dim..self.dim * (self.p + 1)
    }
    pub fn q(&self, k: usize) -> usize {
        self.dim * (self.p + 1) + k
    }
    pub fn z(&self, k: usize) -> usize {
        self.q(k) + self.p
    }
    pub fn y(&self, k: usize) -> usize {
        self.q(k) + 2 * self.p
    }
    pub fn v(&self) -> usize {
        self.dim * (self.p + 1) + 3 * self.p
    }

    /// Cone dimension list `[2p+1, 2 x 2p, (d+1) x p]`.
    pub fn cones(&self) -> Vec<usize> {
        let mut c = vec![2 * self.p + 1];
        c.extend(std::iter::repeat_n(2, 2 * self.p));
        c.extend(std::iter::repeat_n(self.dim + 1, self.p));
        c
    }
}

/// Which of an anchor's two residual cones carries its link.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct LinkSlots {
    pub q_active: bool,
    pub z_active: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ConicProgram<T> {
    pub form: StandardForm<T>,
    pub layout: VarLayout,
    pub links: Vec<LinkSlots>,
}

impl<T: Scalar> ConicProgram<T> {
    pub fn n_vars(&self) -> usize {
        self.form.n_vars
    }
    pub fn p_i(&self) -> usize {
        self.layout.p
    }
    pub fn cones(&self) -> &[usize] {
        &self.form.cones
    }

    /// Text dump used by the golden files: header lines, then `A` row by row.
    pub fn dump(&self) -> String {
        let join = |v: &[T]| v.iter().map(|x| x.to_string()).collect::<Vec<_>>().join(" ");
        let f = &self.form;
        let mut out = String::new();
        writeln!(out, "n_vars {}", f.n_vars).unwrap();
        writeln!(out, "p_i {}", self.layout.p).unwrap();
        writeln!(out, "dimension {}", self.layout.dim).unwrap();
        writeln!(out, "equality_constraints {}", f.equality_constraints()).unwrap();
        writeln!(
            out,
            "cones {}",
            f.cones.iter().map(|c| c.to_string()).collect::<Vec<_>>().join(" ")
        )
        .unwrap();
        writeln!(out, "bt {}", join(&f.bt)).unwrap();
        writeln!(out, "offset {}", join(&f.offset)).unwrap();
        writeln!(out, "A {} {}", f.n_vars, f.cone_dim()).unwrap();
        for row in f.a.chunks(f.cone_dim().max(1)) {
            writeln!(out, "{}", join(row)).unwrap();
        }
        out
    }
}

/// `(distance, coefficient)` of the link's active residual cone, as the
/// pair (LOS slot, NLOS slot); at most one is `Some`.
type ResidualCone<T> = Option<(T, T)>;

fn residual_cones<T: Scalar>(
    meas: &Measurement<T>,
    model: &LinkModel<T>,
    method: Method,
) -> (ResidualCone<T>, ResidualCone<T>) {
    let eta_l = model.eta_l.max(T::lit(ESTIMATOR_ETA_FLOOR));
    let eta_nlos = (eta_l * eta_l + model.eta_n * model.eta_n).sqrt();
    match method {
        Method::DSocp => (Some((meas.raw, T::one())), None),
        Method::MlnSocp => match meas.kind {
            LinkKind::Los if model.g > T::zero() => (Some((meas.corrected, eta_l * meas.corrected / model.g.sqrt())), None),
            LinkKind::Nlos if model.g < T::one() => (
                None,
                Some((meas.corrected, eta_nlos * meas.corrected / (T::one() - model.g).sqrt())),
            ),
            _ => (None, None),
        },
    }
}

/// Weighted range-fit objective the program relaxes,
/// `sum_k ((d_k - ||x - a_k||) / c_k)^2` over the active residual cones.
/// Its square root bounds the program optimum from above.
pub fn fit_objective<T: Scalar>(
    anchors: &[(Position<T>, Measurement<T>)],
    model: &LinkModel<T>,
    method: Method,
    x: &Position<T>,
) -> T {
    anchors
        .iter()
        .map(|(a, m)| {
            let (q, z) = residual_cones(m, model, method);
            q.or(z).map_or(T::zero(), |(d, c)| {
                let r = (d - x.distance(a)) / c;
                r * r
            })
        })
        .sum()
}

/// Assembles the SOCP for one unknown node from its anchors.
pub fn build_node_problem<T: Scalar>(
    anchors: &[(Position<T>, Measurement<T>)],
    model: &LinkModel<T>,
    method: Method,
) -> Result<ConicProgram<T>> {
    let p = anchors.len();
    if p == 0 {
        let node = 0;
        return Err(Error::Unlocalizable { node });
    }
    let dim = anchors[0].0.dim();
    if anchors.iter().any(|(a, _)| a.dim() != dim) {
        return Err(Error::Input("anchors have mixed dimensions".into()));
    }
    for (a, m) in anchors {
        if !(m.raw.is_finite() && m.corrected.is_finite()) || a.coords().iter().any(|c| !c.is_finite()) {
            return Err(Error::Input(format!("non-finite data on link ({}, {})", m.r, m.t)));
        }
        if !(m.corrected > T::zero() && m.raw > T::zero()) {
            return Err(Error::Input(format!("non-positive range on link ({}, {})", m.r, m.t)));
        }
    }
    let layout = VarLayout { dim, p };
    let n = layout.n_vars();
    let cones = layout.cones();
    let m: usize = cones.iter().sum();

    // Columns are filled with the un-negated block entries [b_j A_j] and
    // negated at the end.
    let mut a = vec![T::zero(); n * m];
    let mut offset = vec![T::zero(); m];
    let mut set = |row: usize, col: usize, v: T| a[row * m + col] = v;

    // (1) ||U|| <= V, U = (q_1, z_1, q_2, z_2, ...)
    set(layout.v(), 0, T::one());
    for k in 0..p {
        set(layout.q(k), 1 + 2 * k, T::one());
        set(layout.z(k), 2 + 2 * k, T::one());
    }

    let mut links = Vec::with_capacity(p);
    let q_base = 2 * p + 1;
    let z_base = q_base + 2 * p;
    let y_base = z_base + 2 * p;
    for (k, (anchor, meas)) in anchors.iter().enumerate() {
        let (q_cone, z_cone) = residual_cones(meas, model, method);
        for (cone, col, slot) in [(q_cone, q_base + 2 * k, layout.q(k)), (z_cone, z_base + 2 * k, layout.z(k))] {
            match cone {
                Some((d, coef)) => {
                    set(slot, col, coef);
                    set(layout.y(k), col + 1, T::one());
                    offset[col + 1] = -d;
                }
                None => set(slot, col, T::one()),
            }
        }
        links.push(LinkSlots {
            q_active: q_cone.is_some(),
            z_active: z_cone.is_some(),
        });

        // (4) ||x_r - a_k|| <= y_k
        let col = y_base + (dim + 1) * k;
        set(layout.y(k), col, T::one());
        for (j, &c) in anchor.coords().iter().enumerate() {
            set(layout.position(j), col + 1 + j, T::one());
            offset[col + 1 + j] = T::zero() - c;
        }
    }
    for v in a.iter_mut().filter(|v| **v != T::zero()) {
        *v = -*v;
    }
    let mut bt = vec![T::zero(); n];
    bt[layout.v()] = -T::one();
    Ok(ConicProgram {
        form: StandardForm::new(n, a, bt, offset, cones)?,
        layout,
        links,
    })
}

/// Leading `d` entries of a solution vector.
pub fn extract_position<T: Scalar>(program: &ConicProgram<T>, x: &[T]) -> Result<Position<T>> {
    if x.len() != program.n_vars() {
        return Err(Error::DimensionMismatch {
            expected: program.n_vars(),
            got: x.len(),
        });
    }
    Position::new(x[..program.layout.dim].to_vec())
}

#[derive(Debug, Clone, PartialEq)]
pub struct AssemblyCheck {
    pub name: &'static str,
    pub passed: bool,
    pub detail: String,
}

#[derive(Debug, Clone, PartialEq)]
pub struct AssemblyReport {
    pub checks: Vec<AssemblyCheck>,
}

impl AssemblyReport {
    pub fn passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }

    pub fn failures(&self) -> impl Iterator<Item = &AssemblyCheck> {
        self.checks.iter().filter(|c| !c.passed)
    }
}

/// Structural audit of an assembled program. Never fails; inspect
/// [`AssemblyReport::passed`].
pub fn validate_assembly<T: Scalar>(program: &ConicProgram<T>) -> AssemblyReport {
    let mut checks = Vec::new();
    let mut check = |name: &'static str, passed: bool, detail: String| {
        checks.push(AssemblyCheck { name, passed, detail })
    };
    let f = &program.form;
    let lay = program.layout;
    let p = lay.p;
    let expected_cones = lay.cones();

    check(
        "n_vars",
        f.n_vars == lay.n_vars(),
        format!("n_vars = {}, layout expects {}", f.n_vars, lay.n_vars()),
    );
    check(
        "cone_count",
        f.cones.len() == 3 * p + 1,
        format!("{} cones, expected 3p+1 = {}", f.cones.len(), 3 * p + 1),
    );
    check(
        "cone_dims",
        f.cones == expected_cones,
        format!("cones {:?}, expected {:?}", f.cones, expected_cones),
    );
    let m = f.cone_dim();
    let m_expected: usize = expected_cones.iter().sum();
    let shape_ok = f.a.len() == f.n_vars * m && f.offset.len() == m && f.bt.len() == f.n_vars && m == m_expected;
    check(
        "shapes",
        shape_ok,
        format!("A {} entries, offset {}, total cone dim {} (expected {})", f.a.len(), f.offset.len(), m, m_expected),
    );
    check(
        "equality_constraints",
        f.equality_constraints() == 0,
        format!("{} equality constraints", f.equality_constraints()),
    );
    check(
        "link_slots",
        program.links.len() == p && program.links.iter().all(|l| !(l.q_active && l.z_active)),
        format!("{} link records for p = {}", program.links.len(), p),
    );
    if !shape_ok || f.n_vars != lay.n_vars() || program.links.len() != p {
        return AssemblyReport { checks };
    }

    let col = |c: usize| -> Vec<(usize, T)> {
        (0..f.n_vars)
            .filter_map(|r| {
                let v = f.a_at(r, c);
                (v != T::zero()).then_some((r, v))
            })
            .collect()
    };
    // Exactly one nonzero, at `row`, equal to `-1` when `unit`.
    let single = |c: usize, row: usize, unit: bool| -> bool {
        let nz = col(c);
        nz.len() == 1 && nz[0].0 == row && (!unit || nz[0].1 == -T::one()) && (unit || nz[0].1 < T::zero())
    };

    let vestigial_nonzero = lay
        .vestigial()
        .flat_map(|r| (0..m).map(move |c| (r, c)))
        .filter(|&(r, c)| f.a_at(r, c) != T::zero())
        .count();
    check(
        "vestigial_zero",
        vestigial_nonzero == 0,
        format!("{vestigial_nonzero} nonzero entries in anchor-coordinate rows"),
    );

    let bt_ok = f
        .bt
        .iter()
        .enumerate()
        .all(|(i, &b)| if i == lay.v() { b == -T::one() } else { b == T::zero() });
    check("objective_selects_v", bt_ok, "bt must be -e_V".into());

    let mut bad = Vec::new();
    if !single(0, lay.v(), true) {
        bad.push("cone 1 column 0".to_string());
    }
    for k in 0..p {
        if !single(1 + 2 * k, lay.q(k), true) || !single(2 + 2 * k, lay.z(k), true) {
            bad.push(format!("cone 1 indicator block E_{}", k + 1));
        }
    }
    if f.offset[..2 * p + 1].iter().any(|&v| v != T::zero()) {
        bad.push("cone 1 offset".into());
    }
    let q_base = 2 * p + 1;
    let z_base = q_base + 2 * p;
    let y_base = z_base + 2 * p;
    for (k, link) in program.links.iter().enumerate() {
        for (active, c, slot, fam) in [
            (link.q_active, q_base + 2 * k, lay.q(k), "LOS"),
            (link.z_active, z_base + 2 * k, lay.z(k), "NLOS"),
        ] {
            let ok = if active {
                single(c, slot, false) && single(c + 1, lay.y(k), true) && f.offset[c] == T::zero() && f.offset[c + 1] < T::zero()
            } else {
                single(c, slot, true) && col(c + 1).is_empty() && f.offset[c] == T::zero() && f.offset[c + 1] == T::zero()
            };
            if !ok {
                bad.push(format!("{fam} cone for anchor {}", k + 1));
            }
        }
        let c = y_base + (lay.dim + 1) * k;
        let mut ok = single(c, lay.y(k), true) && f.offset[c] == T::zero();
        for j in 0..lay.dim {
            ok &= single(c + 1 + j, lay.position(j), true);
        }
        if !ok {
            bad.push(format!("distance cone for anchor {}", k + 1));
        }
    }
    check("indicator_blocks", bad.is_empty(), bad.join("; "));

    AssemblyReport { checks }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::net::{Edge, LinkKind};

    fn meas(k: usize, kind: LinkKind, d: f64) -> Measurement<f64> {
        Measurement::from_parts(
            &Edge {
                r: 0,
                t: k + 1,
                kind,
                true_distance: d,
            },
            0.1,
            0.06,
            0.0,
            0.06 * d,
        )
    }

    fn three_anchor() -> Vec<(Position<f64>, Measurement<f64>)> {
        vec![
            (Position::xy(0.0, 0.0), meas(0, LinkKind::Los, 5.0)),
            (Position::xy(10.0, 0.0), meas(1, LinkKind::Nlos, 65f64.sqrt())),
            (Position::xy(0.0, 10.0), meas(2, LinkKind::Los, 45f64.sqrt())),
        ]
    }

    const MODEL: LinkModel<f64> = LinkModel {
        g: 0.7,
        eta_l: 0.1,
        eta_n: 0.06,
    };

    #[test]
    fn dimension_identities() {
        let prog = build_node_problem(&three_anchor(), &MODEL, Method::MlnSocp).unwrap();
        assert_eq!(prog.n_vars(), 18);
        assert_eq!(prog.cones(), &[7, 2, 2, 2, 2, 2, 2, 3, 3, 3]);
        assert_eq!(prog.form.cone_dim(), 28);
        assert_eq!(prog.form.equality_constraints(), 0);
        let one = build_node_problem(&three_anchor()[..1], &MODEL, Method::MlnSocp).unwrap();
        assert_eq!(one.n_vars(), 8);
        assert_eq!(one.cones(), &[3, 2, 2, 3]);
    }

    #[test]
    fn builder_output_validates() {
        for method in [Method::MlnSocp, Method::DSocp] {
            let prog = build_node_problem(&three_anchor(), &MODEL, method).unwrap();
            let report = validate_assembly(&prog);
            assert!(report.passed(), "{:?}", report.failures().collect::<Vec<_>>());
        }
    }

    #[test]
    fn truncated_cone_list_fails() {
        let mut prog = build_node_problem(&three_anchor(), &MODEL, Method::MlnSocp).unwrap();
        prog.form.cones.pop();
        let report = validate_assembly(&prog);
        assert!(!report.passed());
        assert!(report.failures().any(|c| c.name == "cone_count"));
    }

    #[test]
    fn nonzero_vestigial_column_fails() {
        let mut prog = build_node_problem(&three_anchor(), &MODEL, Method::MlnSocp).unwrap();
        let m = prog.form.cone_dim();
        prog.form.a[3 * m + 5] = 0.5;
        let report = validate_assembly(&prog);
        assert!(report.failures().any(|c| c.name == "vestigial_zero"));
    }

    #[test]
    fn no_anchors_is_unlocalizable() {
        assert!(matches!(
            build_node_problem::<f64>(&[], &MODEL, Method::MlnSocp),
            Err(Error::Unlocalizable { .. })
        ));
    }

    #[test]
    fn non_finite_measurement_rejected() {
        let mut a = three_anchor();
        a[1].1.corrected = f64::NAN;
        assert!(matches!(build_node_problem(&a, &MODEL, Method::MlnSocp), Err(Error::Input(_))));
    }

    #[test]
    fn noiseless_node_at_anchor_admits_zero_objective() {
        // Node at anchor 1 (0,0), exact ranges to all anchors.
        let anchors = vec![
            (Position::xy(0.0, 0.0), meas(0, LinkKind::Los, RANGE)),
            (Position::xy(10.0, 0.0), meas(1, LinkKind::Los, 10.0)),
            (Position::xy(0.0, 10.0), meas(2, LinkKind::Los, 10.0)),
        ];
        const RANGE: f64 = crate::measurement::RANGE_FLOOR;
        let prog = build_node_problem(&anchors, &MODEL, Method::MlnSocp).unwrap();
        let lay = prog.layout;
        let mut x = vec![0.0; prog.n_vars()];
        x[lay.y(0)] = RANGE;
        x[lay.y(1)] = 10.0;
        x[lay.y(2)] = 10.0;
        let r = prog.form.residuals(&x).unwrap();
        assert_eq!(r.cone_violation, 0.0);
        assert_eq!(r.objective, 0.0);
    }

    #[test]
    fn extract_leading_slots() {
        let prog = build_node_problem(&three_anchor(), &MODEL, Method::MlnSocp).unwrap();
        let mut x = vec![0.0; 18];
        x[0] = 3.0;
        x[1] = 4.0;
        assert_eq!(extract_position(&prog, &x).unwrap(), Position::xy(3.0, 4.0));
        assert!(extract_position(&prog, &x[..5]).is_err());
    }

    #[test]
    fn d_socp_matches_mln_for_unit_los() {
        // g = 1, eta_l * d = 1 on every link.
        let anchors: Vec<_> = [(0.0, 0.0), (20.0, 0.0), (0.0, 20.0)]
            .iter()
            .enumerate()
            .map(|(k, &(x, y))| (Position::xy(x, y), meas(k, LinkKind::Los, 10.0)))
            .collect();
        let model = LinkModel {
            g: 1.0,
            eta_l: 0.1,
            eta_n: 0.06,
        };
        let a = build_node_problem(&anchors, &model, Method::MlnSocp).unwrap();
        let b = build_node_problem(&anchors, &model, Method::DSocp).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn three_dimensional_layout() {
        let anchors: Vec<_> = (0..4)
            .map(|k| {
                (
                    Position::new(vec![k as f64, 1.0, 2.0]).unwrap(),
                    meas(k, LinkKind::Los, 3.0),
                )
            })
            .collect();
        let prog = build_node_problem(&anchors, &MODEL, Method::MlnSocp).unwrap();
        assert_eq!(prog.n_vars(), 3 * 5 + 12 + 1);
        assert_eq!(*prog.cones().last().unwrap(), 4);
        assert!(validate_assembly(&prog).passed());
    }
}
