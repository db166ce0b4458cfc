//! Primal-dual interior-point method for the conic standard form.
//!
//! The program `maximize bt^T x  s.t.  offset - A^T x in K` is solved as
//!
//! ```text
//! minimize c^T x   s.t.  G x + s = h,  s in K          (c = -bt, G = A^T, h = offset)
//! maximize -h^T z  s.t.  G^T z + c = 0,  z in K
//! ```
//!
//! with Nesterov–Todd scaling and a Mehrotra predictor-corrector. The start is
//! `x = 0`, `s = z = e` (unit first coordinate in every cone), so the method
//! is an infeasible-start one and the iterate sequence is fully determined by
//! the program data.

pub mod complexity;
pub mod cone;
pub mod kkt;
pub mod ldl;
pub mod oracle;

use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::standard_form::{Residuals, StandardForm};
use crate::Scalar;
use cone::{jordan_divide, jordan_product, max_step, NtScaling};
use kkt::{Kkt, SparseG};

pub use complexity::{complexity_budget_check, ComplexityReport, ComplexityVerdict, SolveSample};
pub use oracle::{oracle_localize, range_objective, Bounds};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SolverSettings<T> {
    pub gap_tol: T,
    pub feas_tol: T,
    pub max_iter: usize,
    /// Fraction of the distance to the cone boundary taken per step.
    pub step_fraction: T,
    /// Keep one [`IterateRecord`] per iteration.
    pub record_trace: bool,
}

impl<T: Scalar> Default for SolverSettings<T> {
    fn default() -> Self {
        // Single precision cannot reach 1e-8; eps^(2/3) is about 2.5e-5.
        let tol = T::lit(1e-8).max(T::epsilon().powf(T::lit(2.0 / 3.0)));
        Self {
            gap_tol: tol,
            feas_tol: tol,
            max_iter: 100,
            step_fraction: T::lit(0.99),
            record_trace: false,
        }
    }
}

impl<T: Scalar> SolverSettings<T> {
    pub fn validate(&self) -> Result<()> {
        if !(self.gap_tol > T::zero()) {
            return Err(Error::config("gap_tol", "must be > 0"));
        }
        if !(self.feas_tol > T::zero()) {
            return Err(Error::config("feas_tol", "must be > 0"));
        }
        if self.max_iter == 0 {
            return Err(Error::config("max_iter", "must be >= 1"));
        }
        if !(self.step_fraction > T::zero() && self.step_fraction < T::one()) {
            return Err(Error::config("step_fraction", "must lie in (0, 1)"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum SolverStatus {
    Optimal,
    MaxIter,
    Infeasible,
    NumericalFailure,
}

impl SolverStatus {
    pub fn as_str(self) -> &'static str {
        match self {
            SolverStatus::Optimal => "optimal",
            SolverStatus::MaxIter => "max-iter",
            SolverStatus::Infeasible => "infeasible",
            SolverStatus::NumericalFailure => "numerical-failure",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct IterateRecord<T> {
    pub iteration: usize,
    pub objective: T,
    pub gap: T,
    pub primal_residual: T,
    pub dual_residual: T,
    pub step: T,
    pub sigma: T,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConicSolution<T> {
    pub x: Vec<T>,
    /// Primal slack `offset - A^T x`.
    pub s: Vec<T>,
    /// Dual cone variable.
    pub z: Vec<T>,
    pub status: SolverStatus,
    /// Relative duality gap.
    pub gap: T,
    pub primal_residual: T,
    pub dual_residual: T,
    pub iterations: usize,
    /// Minimized objective `-bt^T x`.
    pub objective: T,
    pub trace: Vec<IterateRecord<T>>,
}

impl<T: Scalar> ConicSolution<T> {
    /// Iterate trace as CSV.
    pub fn trace_csv(&self) -> String {
        let mut out = String::from("iteration,objective,gap,primal_residual,dual_residual,step,sigma\n");
        for r in &self.trace {
            let _ = writeln!(
                out,
                "{},{:e},{:e},{:e},{:e},{:e},{:e}",
                r.iteration, r.objective, r.gap, r.primal_residual, r.dual_residual, r.step, r.sigma
            );
        }
        out
    }
}

/// Constraint evaluation of `x` against `form`.
pub fn residuals<T: Scalar>(form: &StandardForm<T>, x: &[T]) -> Result<Residuals<T>> {
    form.residuals(x)
}

fn inf_norm<T: Scalar>(v: &[T]) -> T {
    v.iter().fold(T::zero(), |a, x| a.max(x.abs()))
}

fn dot<T: Scalar>(a: &[T], b: &[T]) -> T {
    a.iter().zip(b).map(|(&x, &y)| x * y).sum()
}

/// Column-compressed `G = A^T`, keeping only the columns that touch a cone
/// or the objective. Returns the kept original column indices alongside.
fn sparse_g<T: Scalar>(form: &StandardForm<T>) -> (SparseG<T>, Vec<usize>) {
    let (n, m) = (form.n_vars, form.cone_dim());
    let mut col_ptr = vec![0];
    let mut row_idx = Vec::new();
    let mut val = Vec::new();
    let mut keep = Vec::new();
    for i in 0..n {
        let start = row_idx.len();
        for c in 0..m {
            let v = form.a_at(i, c);
            if v != T::zero() {
                row_idx.push(c);
                val.push(v);
            }
        }
        if row_idx.len() == start && form.bt[i] == T::zero() {
            continue;
        }
        keep.push(i);
        col_ptr.push(row_idx.len());
    }
    let g = SparseG {
        m,
        n: keep.len(),
        col_ptr,
        row_idx,
        val,
    };
    (g, keep)
}

/// Per-cone views over a stacked vector.
struct Blocks<'a> {
    cones: &'a [usize],
    starts: &'a [usize],
}

impl Blocks<'_> {
    fn range(&self, k: usize) -> std::ops::Range<usize> {
        self.starts[k]..self.starts[k] + self.cones[k]
    }
}

struct Workspace<T> {
    scalings: Vec<NtScaling<T>>,
    lambda: Vec<T>,
}

impl<T: Scalar> Workspace<T> {
    fn new(blocks: &Blocks, s: &[T], z: &[T]) -> Option<Self> {
        let mut scalings = Vec::with_capacity(blocks.cones.len());
        for k in 0..blocks.cones.len() {
            let r = blocks.range(k);
            scalings.push(NtScaling::new(&s[r.clone()], &z[r])?);
        }
        let mut ws = Self {
            scalings,
            lambda: vec![T::zero(); s.len()],
        };
        ws.refresh(blocks, s, z).then_some(ws)
    }

    /// Scalings and `lambda = W z` at a new iterate; `false` if either point
    /// has left the cone interior.
    fn refresh(&mut self, blocks: &Blocks, s: &[T], z: &[T]) -> bool {
        for (k, w) in self.scalings.iter_mut().enumerate() {
            let r = blocks.range(k);
            if !w.update(&s[r.clone()], &z[r.clone()]) {
                return false;
            }
            w.apply_w(&z[r.clone()], &mut self.lambda[r]);
        }
        true
    }

    fn apply(&self, blocks: &Blocks, v: &[T], out: &mut [T], inverse: bool) {
        for (k, w) in self.scalings.iter().enumerate() {
            let r = blocks.range(k);
            if inverse {
                w.apply_winv(&v[r.clone()], &mut out[r]);
            } else {
                w.apply_w(&v[r.clone()], &mut out[r]);
            }
        }
    }
}

/// Buffers and result of one Newton solve.
struct Newton<T> {
    t: Vec<T>,
    wt: Vec<T>,
    bx: Vec<T>,
    bz: Vec<T>,
    dx: Vec<T>,
    ds: Vec<T>,
    dz: Vec<T>,
}

impl<T: Scalar> Newton<T> {
    fn new(n: usize, m: usize) -> Self {
        Self {
            t: vec![T::zero(); m],
            wt: vec![T::zero(); m],
            bx: vec![T::zero(); n],
            bz: vec![T::zero(); m],
            dx: vec![T::zero(); n],
            ds: vec![T::zero(); m],
            dz: vec![T::zero(); m],
        }
    }

    /// Direction `(dx, ds, dz)` for complementarity target `target`.
    fn solve(&mut self, kkt: &mut Kkt<T>, ws: &Workspace<T>, blocks: &Blocks, rx: &[T], rz: &[T], target: &[T]) {
        // t = lambda \ target
        for k in 0..blocks.cones.len() {
            let r = blocks.range(k);
            jordan_divide(&ws.lambda[r.clone()], &target[r.clone()], &mut self.t[r]);
        }
        ws.apply(blocks, &self.t, &mut self.wt, false);
        for (b, &r) in self.bx.iter_mut().zip(rx) {
            *b = -r;
        }
        for ((b, &r), &w) in self.bz.iter_mut().zip(rz).zip(&self.wt) {
            *b = -r - w;
        }
        kkt.solve(&self.bx, &self.bz, &mut self.dx, &mut self.dz);
        // ds = W (t - W dz), reusing wt and bz as scratch
        ws.apply(blocks, &self.dz, &mut self.wt, false);
        for ((b, &t), &w) in self.bz.iter_mut().zip(&self.t).zip(&self.wt) {
            *b = t - w;
        }
        ws.apply(blocks, &self.bz, &mut self.ds, false);
    }
}

fn step_length<T: Scalar>(blocks: &Blocks, s: &[T], ds: &[T], z: &[T], dz: &[T]) -> T {
    let mut alpha = T::infinity();
    for k in 0..blocks.cones.len() {
        let r = blocks.range(k);
        alpha = alpha.min(max_step(&s[r.clone()], &ds[r.clone()]));
        alpha = alpha.min(max_step(&z[r.clone()], &dz[r]));
    }
    alpha
}

/// Runs the interior-point method on `form`.
pub fn solve<T: Scalar>(form: &StandardForm<T>, settings: &SolverSettings<T>) -> Result<ConicSolution<T>> {
    settings.validate()?;
    let m = form.cone_dim();
    let cones = form.cones.clone();
    let starts = form.cone_starts();
    let blocks = Blocks {
        cones: &cones,
        starts: &starts,
    };
    let degree = T::from_usize(cones.len().max(1)).unwrap();
    // Columns absent from every cone and from the objective stay at zero.
    let (g, keep) = sparse_g(form);
    let n = g.n;
    let c: Vec<T> = keep.iter().map(|&i| -form.bt[i]).collect();
    // The feasible set scales with h, so solve for h / beta and scale x and s
    // back at the end; this keeps the unit start on the problem's own scale.
    let beta = inf_norm(&form.offset).max(T::one());
    let h_scaled: Vec<T> = form.offset.iter().map(|&v| v / beta).collect();
    let h = &h_scaled;
    let (c_norm, h_norm) = (inf_norm(&c), inf_norm(h));

    let mut x = vec![T::zero(); n];
    let mut s = vec![T::zero(); m];
    let mut z = vec![T::zero(); m];
    for &st in &starts {
        s[st] = T::one();
        z[st] = T::one();
    }
    let mut kkt = Kkt::new(&g, &cones, &starts);
    let mut trace = Vec::new();
    let mut status = SolverStatus::MaxIter;
    let mut iterations = 0;
    let (mut pres, mut dres, mut rel_gap): (T, T, T);
    let mut rx = vec![T::zero(); n];
    let mut rz = vec![T::zero(); m];
    let mut ws = Workspace::new(&blocks, &s, &z).expect("unit start is interior");
    let (mut pred, mut corr) = (Newton::new(n, m), Newton::new(n, m));
    let mut target = vec![T::zero(); m];
    let (mut winv_ds, mut w_dz, mut tmp) = (vec![T::zero(); m], vec![T::zero(); m], vec![T::zero(); m]);

    loop {
        // Residuals at the current iterate.
        rx.copy_from_slice(&c);
        g.tmul_add(&z, &mut rx);
        for i in 0..m {
            rz[i] = s[i] - h[i];
        }
        g.mul_add(&x, &mut rz);
        let pobj = dot(&c, &x);
        let dobj = -dot(h, &z);
        let sz = dot(&s, &z);
        pres = inf_norm(&rz) / (T::one() + h_norm);
        dres = inf_norm(&rx) / (T::one() + c_norm);
        rel_gap = sz / (T::one() + pobj.abs().min(dobj.abs()));
        if ![pres, dres, rel_gap, pobj].iter().all(|v| v.is_finite()) {
            status = SolverStatus::NumericalFailure;
            break;
        }
        if pres <= settings.feas_tol && dres <= settings.feas_tol && rel_gap <= settings.gap_tol {
            status = SolverStatus::Optimal;
            break;
        }
        // Infeasibility certificates.
        let hz = dot(h, &z);
        if hz < T::zero() {
            let mut gz = vec![T::zero(); n];
            g.tmul_add(&z, &mut gz);
            if inf_norm(&gz) / -hz < settings.feas_tol {
                status = SolverStatus::Infeasible;
                break;
            }
        }
        if pobj < T::zero() {
            let mut gxs = s.clone();
            g.mul_add(&x, &mut gxs);
            if inf_norm(&gxs) / -pobj < settings.feas_tol && dres > settings.feas_tol {
                // Unbounded primal: the dual has no feasible point.
                status = SolverStatus::Infeasible;
                break;
            }
        }
        if iterations >= settings.max_iter {
            break;
        }
        iterations += 1;

        if !ws.refresh(&blocks, &s, &z) || kkt.factor(&ws.scalings).is_none() {
            status = SolverStatus::NumericalFailure;
            break;
        }
        let mu = sz / degree;

        // Predictor.
        for k in 0..cones.len() {
            let r = blocks.range(k);
            jordan_product(&ws.lambda[r.clone()], &ws.lambda[r.clone()], &mut target[r]);
        }
        target.iter_mut().for_each(|v| *v = -*v);
        pred.solve(&mut kkt, &ws, &blocks, &rx, &rz, &target);
        let alpha_aff = step_length(&blocks, &s, &pred.ds, &z, &pred.dz).min(T::one());
        let sz_aff = (0..m).fold(T::zero(), |acc, i| {
            acc + (s[i] + alpha_aff * pred.ds[i]) * (z[i] + alpha_aff * pred.dz[i])
        });
        let rho = (sz_aff / sz).max(T::zero()).min(T::one());
        let sigma = rho * rho * rho;

        // Corrector: -lambda o lambda - (W^-1 ds_a) o (W dz_a) + sigma mu e.
        ws.apply(&blocks, &pred.ds, &mut winv_ds, true);
        ws.apply(&blocks, &pred.dz, &mut w_dz, false);
        for k in 0..cones.len() {
            let r = blocks.range(k);
            jordan_product(&winv_ds[r.clone()], &w_dz[r.clone()], &mut tmp[r.clone()]);
            for i in r.clone() {
                target[i] = target[i] - tmp[i];
            }
            target[r.start] = target[r.start] + sigma * mu;
        }
        corr.solve(&mut kkt, &ws, &blocks, &rx, &rz, &target);
        let alpha = (settings.step_fraction * step_length(&blocks, &s, &corr.ds, &z, &corr.dz)).min(T::one());
        if !alpha.is_finite() || alpha <= T::zero() {
            status = SolverStatus::NumericalFailure;
            break;
        }
        for i in 0..n {
            x[i] = x[i] + alpha * corr.dx[i];
        }
        for i in 0..m {
            s[i] = s[i] + alpha * corr.ds[i];
            z[i] = z[i] + alpha * corr.dz[i];
        }
        if settings.record_trace {
            trace.push(IterateRecord {
                iteration: iterations,
                objective: pobj,
                gap: rel_gap,
                primal_residual: pres,
                dual_residual: dres,
                step: alpha,
                sigma,
            });
        }
    }

    let objective = dot(&c, &x) * beta;
    let mut full = vec![T::zero(); form.n_vars];
    for (&i, &v) in keep.iter().zip(&x) {
        full[i] = v * beta;
    }
    s.iter_mut().for_each(|v| *v = *v * beta);
    Ok(ConicSolution {
        objective,
        x: full,
        s,
        z,
        status,
        gap: rel_gap,
        primal_residual: pres,
        dual_residual: dres,
        iterations,
        trace,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    /// minimize t  s.t. ||x - 1|| <= t: optimum t = 0 at x = 1.
    fn tiny() -> StandardForm<f64> {
        StandardForm::new(2, vec![0.0, -1.0, -1.0, 0.0], vec![0.0, -1.0], vec![0.0, -1.0], vec![2]).unwrap()
    }

    #[test]
    fn solves_tiny_program() {
        let sol = solve(&tiny(), &SolverSettings::default()).unwrap();
        assert_eq!(sol.status, SolverStatus::Optimal);
        assert!((sol.x[0] - 1.0).abs() < 1e-6, "{:?}", sol.x);
        assert!(sol.objective.abs() < 1e-6);
    }

    /// minimize -x1 - x2  s.t. ||(x1, x2)|| <= 1 (a 3-cone).
    #[test]
    fn disc_maximum() {
        // slack = (1, x1, x2) = offset - A^T x, offset = (1, 0, 0)
        let a = vec![0.0, -1.0, 0.0, 0.0, 0.0, -1.0];
        let form = StandardForm::new(2, a, vec![1.0, 1.0], vec![1.0, 0.0, 0.0], vec![3]).unwrap();
        let sol = solve(&form, &SolverSettings::default()).unwrap();
        assert_eq!(sol.status, SolverStatus::Optimal);
        let r = 0.5f64.sqrt();
        assert!((sol.x[0] - r).abs() < 1e-6 && (sol.x[1] - r).abs() < 1e-6, "{:?}", sol.x);
    }

    /// A large cone exercises the expanded KKT path.
    #[test]
    fn expanded_cone_projection() {
        // minimize t s.t. ||x - b|| <= t, x free in R^6, plus x_0 <= -1 via a 2-cone
        // (slot 1 - ... ) : (-1 - x0, 0) in K.
        let nx = 6;
        let n = nx + 1;
        let m = nx + 1 + 2;
        let b = [3.0, -1.0, 2.0, 0.5, 0.0, 4.0f64];
        let mut a = vec![0.0f64; n * m];
        for i in 0..nx {
            a[i * m + 1 + i] = -1.0;
        }
        a[nx * m] = -1.0;
        a[nx + 1] = 1.0; // x0 row, column nx+1
        let mut offset = vec![0.0; m];
        for i in 0..nx {
            offset[1 + i] = -b[i];
        }
        offset[nx + 1] = -1.0;
        let mut bt = vec![0.0; n];
        bt[nx] = -1.0;
        let form = StandardForm::new(n, a, bt, offset, vec![nx + 1, 2]).unwrap();
        let sol = solve(&form, &SolverSettings::default()).unwrap();
        assert_eq!(sol.status, SolverStatus::Optimal);
        // x0 clamps at -1; others match b.
        assert!((sol.x[0] + 1.0).abs() < 1e-6, "{:?}", sol.x);
        for i in 1..nx {
            assert!((sol.x[i] - b[i]).abs() < 1e-6);
        }
        assert!((sol.objective - 4.0).abs() < 1e-6);
    }

    #[test]
    fn infeasible_program_detected() {
        // x <= -1 and x >= 1 as two 2-cones: (-1 - x, 0), (x - 1, 0).
        let a = vec![1.0, 0.0, -1.0, 0.0];
        let form = StandardForm::new(1, a, vec![0.0], vec![-1.0, 0.0, -1.0, 0.0], vec![2, 2]).unwrap();
        let sol = solve(&form, &SolverSettings::default()).unwrap();
        assert_eq!(sol.status, SolverStatus::Infeasible);
    }

    #[test]
    fn rejects_bad_settings() {
        let s = SolverSettings {
            max_iter: 0,
            ..SolverSettings::default()
        };
        assert!(solve(&tiny(), &s).is_err());
    }

    #[test]
    fn trace_is_recorded_and_deterministic() {
        let s = SolverSettings {
            record_trace: true,
            ..SolverSettings::default()
        };
        let a = solve(&tiny(), &s).unwrap();
        let b = solve(&tiny(), &s).unwrap();
        assert_eq!(a.trace.len(), a.iterations);
        assert_eq!(a.trace_csv(), b.trace_csv());
        assert!(a.trace_csv().starts_with("iteration,"));
    }

    #[test]
    fn single_precision_default_tolerance() {
        let s = SolverSettings::<f32>::default();
        assert!(s.gap_tol > 1e-6 && s.gap_tol < 1e-4);
    }
}
