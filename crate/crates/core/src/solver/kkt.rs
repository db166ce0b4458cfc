//! Scaled KKT system of the interior-point iteration:
//!
//! ```text
//! [ 0   G^T  ] [dx]   [bx]
//! [ G  -W^2  ] [dz] = [bz]
//! ```
//!
//! Cones up to [`DENSE_CONE_LIMIT`] contribute their dense `-W^2` block.
//! Larger cones are expanded with two auxiliary rows so that the dense
//! rank-two part of `W^2` never materializes:
//!
//! ```text
//! [ -eta^2 D   eta v   eta u ]
//! [  eta v^T    -1       0   ]
//! [  eta u^T     0       1   ]
//! ```
//!
//! whose Schur complement is `-eta^2 (D + u u^T - v v^T) = -W^2`. The whole
//! matrix is quasi-definite (positive on `x` and the `u` rows, negative on
//! `z` and the `v` rows), so an LDL^T with a static symmetric ordering and
//! small signed regularization is stable. Iterative refinement against the
//! unregularized matrix recovers the accuracy lost to regularization.

use super::cone::NtScaling;
use super::ldl::{minimum_degree, Ldl, UpperCsc};
use crate::Scalar;

pub const DENSE_CONE_LIMIT: usize = 4;
const MAX_REFINE: usize = 3;

/// Column-compressed `G` (rows: slack entries, columns: variables).
#[derive(Debug, Clone)]
pub struct SparseG<T> {
    pub m: usize,
    pub n: usize,
    pub col_ptr: Vec<usize>,
    pub row_idx: Vec<usize>,
    pub val: Vec<T>,
}

impl<T: Scalar> SparseG<T> {
    /// `y += G x`
    pub fn mul_add(&self, x: &[T], y: &mut [T]) {
        for j in 0..self.n {
            let xj = x[j];
            if xj == T::zero() {
                continue;
            }
            for p in self.col_ptr[j]..self.col_ptr[j + 1] {
                y[self.row_idx[p]] = y[self.row_idx[p]] + self.val[p] * xj;
            }
        }
    }

    /// `y += G^T z`
    pub fn tmul_add(&self, z: &[T], y: &mut [T]) {
        for j in 0..self.n {
            let mut acc = T::zero();
            for p in self.col_ptr[j]..self.col_ptr[j + 1] {
                acc = acc + self.val[p] * z[self.row_idx[p]];
            }
            y[j] = y[j] + acc;
        }
    }
}

/// Scaling-dependent entry of one cone's block.
#[derive(Debug, Clone, Copy)]
enum Entry {
    /// `-(W^2)_{ab}`
    Dense(usize, usize),
    /// `-eta^2 D_aa`
    Diag(usize),
    /// `eta v_a`
    V(usize),
    /// `eta u_a`
    U(usize),
}

/// Everything is stored in the permuted numbering; right-hand sides are
/// permuted on the way in and solutions on the way out.
pub struct Kkt<T> {
    n: usize,
    m: usize,
    dim: usize,
    /// `perm[k]` = original index at permuted position `k`.
    perm: Vec<usize>,
    csc: UpperCsc,
    /// Unregularized values in CSC order.
    vals: Vec<T>,
    reg_vals: Vec<T>,
    diag_pos: Vec<usize>,
    /// Diagonal sign per permuted position.
    sign: Vec<T>,
    /// Per cone: the CSC positions it refreshes.
    updates: Vec<Vec<(usize, Entry)>>,
    ldl: Ldl<T>,
    reg_static: T,
    reg_eps: T,
    reg_delta: T,
    rhs: Vec<T>,
    sol: Vec<T>,
    work: Vec<T>,
    resid: Vec<T>,
    kx: Vec<T>,
    w2: Vec<T>,
}

impl<T: Scalar> Kkt<T> {
    pub fn new(g: &SparseG<T>, cones: &[usize], starts: &[usize]) -> Self {
        let (n, m) = (g.n, g.m);
        let n_expanded = cones.iter().filter(|&&d| d > DENSE_CONE_LIMIT).count();
        let dim = n + m + 2 * n_expanded;
        // Upper-triangular entries in the original numbering.
        let mut entries: Vec<(usize, usize, T, Option<(usize, Entry)>)> = Vec::new();
        let mut push = |r: usize, c: usize, v: T, e: Option<(usize, Entry)>| entries.push((r.min(c), r.max(c), v, e));
        for i in 0..n {
            push(i, i, T::zero(), None);
            for p in g.col_ptr[i]..g.col_ptr[i + 1] {
                push(i, n + g.row_idx[p], g.val[p], None);
            }
        }
        let mut sign = vec![T::one(); dim];
        for s in sign.iter_mut().skip(n).take(m) {
            *s = -T::one();
        }
        let mut extra = n + m;
        for (k, (&d, &st)) in cones.iter().zip(starts).enumerate() {
            let base = n + st;
            if d <= DENSE_CONE_LIMIT {
                for a in 0..d {
                    for b in a..d {
                        push(base + a, base + b, T::zero(), Some((k, Entry::Dense(a, b))));
                    }
                }
            } else {
                let (ev, eu) = (extra, extra + 1);
                extra += 2;
                for a in 0..d {
                    push(base + a, base + a, T::zero(), Some((k, Entry::Diag(a))));
                }
                for a in 1..d {
                    push(base + a, ev, T::zero(), Some((k, Entry::V(a))));
                }
                push(ev, ev, -T::one(), None);
                for a in 0..d {
                    push(base + a, eu, T::zero(), Some((k, Entry::U(a))));
                }
                push(eu, eu, T::one(), None);
                sign[ev] = -T::one();
            }
        }

        let mut pivot_ready = vec![true; dim];
        pivot_ready[..n].iter_mut().for_each(|r| *r = false);
        let perm = minimum_degree(dim, entries.iter().map(|e| (e.0, e.1)), &pivot_ready);
        let mut pinv = vec![0; dim];
        for (k, &i) in perm.iter().enumerate() {
            pinv[i] = k;
        }
        let nnz = entries.len();
        let permuted: Vec<(usize, usize)> = entries
            .iter()
            .map(|e| {
                let (a, b) = (pinv[e.0], pinv[e.1]);
                (a.min(b), a.max(b))
            })
            .collect();
        let mut col_ptr = vec![0usize; dim + 1];
        for &(_, c) in &permuted {
            col_ptr[c + 1] += 1;
        }
        for c in 0..dim {
            col_ptr[c + 1] += col_ptr[c];
        }
        let mut fill = col_ptr.clone();
        let mut row_idx = vec![0; nnz];
        let mut vals = vec![T::zero(); nnz];
        let mut diag_pos = vec![0; dim];
        let mut updates = vec![Vec::new(); cones.len()];
        for (e, &(r, c)) in permuted.iter().enumerate() {
            let at = fill[c];
            fill[c] += 1;
            row_idx[at] = r;
            vals[at] = entries[e].2;
            if r == c {
                diag_pos[r] = at;
            }
            if let Some((k, entry)) = entries[e].3 {
                updates[k].push((at, entry));
            }
        }
        let csc = UpperCsc { n: dim, col_ptr, row_idx };
        let ldl = Ldl::symbolic(&csc);
        let eps = T::epsilon();
        let max_dense = cones.iter().copied().filter(|&d| d <= DENSE_CONE_LIMIT).max().unwrap_or(1);
        Self {
            n,
            m,
            dim,
            sign: perm.iter().map(|&i| sign[i]).collect(),
            perm,
            csc,
            reg_vals: vals.clone(),
            vals,
            diag_pos,
            updates,
            ldl,
            reg_static: eps * T::lit(1e2),
            reg_eps: eps * T::lit(1e3),
            reg_delta: eps.sqrt(),
            rhs: vec![T::zero(); dim],
            sol: vec![T::zero(); dim],
            work: vec![T::zero(); dim],
            resid: vec![T::zero(); dim],
            kx: vec![T::zero(); dim],
            w2: vec![T::zero(); max_dense * max_dense],
        }
    }

    pub fn factor_nnz(&self) -> usize {
        self.ldl.nnz()
    }

    /// Loads the current scalings and factors. `None` on breakdown.
    pub fn factor(&mut self, scalings: &[NtScaling<T>]) -> Option<()> {
        for (k, w) in scalings.iter().enumerate() {
            let d = w.dim();
            if d <= DENSE_CONE_LIMIT {
                w.w2_into(&mut self.w2[..d * d]);
                for &(at, entry) in &self.updates[k] {
                    if let Entry::Dense(a, b) = entry {
                        self.vals[at] = -self.w2[a * d + b];
                    }
                }
            } else {
                let (d1, u, v) = w.expansion();
                let eta = w.eta;
                for &(at, entry) in &self.updates[k] {
                    self.vals[at] = match entry {
                        Entry::Diag(0) => -eta * eta * d1,
                        Entry::Diag(_) => -eta * eta,
                        Entry::V(a) => eta * v[a],
                        Entry::U(a) => eta * u[a],
                        Entry::Dense(..) => unreachable!("dense entry in an expanded cone"),
                    };
                }
            }
        }
        self.reg_vals.copy_from_slice(&self.vals);
        for k in 0..self.dim {
            let at = self.diag_pos[k];
            self.reg_vals[at] = self.reg_vals[at] + self.sign[k] * self.reg_static;
        }
        self.ldl
            .factor(&self.csc, &self.reg_vals, &self.sign, self.reg_eps, self.reg_delta)
            .map(|_| ())
    }

    /// `kx = K sol`, unregularized.
    fn matvec(&mut self) {
        let (x, y) = (&self.sol, &mut self.kx);
        y.iter_mut().for_each(|v| *v = T::zero());
        for j in 0..self.dim {
            let (lo, hi) = (self.csc.col_ptr[j], self.csc.col_ptr[j + 1]);
            let xj = x[j];
            let mut acc = T::zero();
            for (&i, &v) in self.csc.row_idx[lo..hi].iter().zip(&self.vals[lo..hi]) {
                acc = acc + v * x[i];
                y[i] = y[i] + v * xj;
            }
            // The diagonal was counted twice above.
            let diag = self.vals[self.diag_pos[j]];
            y[j] = y[j] + acc - diag * xj;
        }
    }

    /// Solves for `(dx, dz)` given `(bx, bz)`; auxiliary rows get zero
    /// right-hand side. Refinement stops once the residual is near machine
    /// precision or stops shrinking.
    pub fn solve(&mut self, bx: &[T], bz: &[T], dx: &mut [T], dz: &mut [T]) {
        let (n, m) = (self.n, self.m);
        // Original order in `work`, then gathered into permuted `rhs`.
        self.work[..n].copy_from_slice(bx);
        self.work[n..n + m].copy_from_slice(bz);
        self.work[n + m..].iter_mut().for_each(|v| *v = T::zero());
        let mut rhs_norm = T::zero();
        for (r, &i) in self.rhs.iter_mut().zip(&self.perm) {
            *r = self.work[i];
            rhs_norm = rhs_norm.max(r.abs());
        }
        let eps = T::epsilon();
        let tol = eps.sqrt() * eps.sqrt().sqrt() * (T::one() + rhs_norm);
        self.sol.iter_mut().for_each(|v| *v = T::zero());
        self.resid.copy_from_slice(&self.rhs);
        let mut prev = T::infinity();
        for _ in 0..=MAX_REFINE {
            self.work.copy_from_slice(&self.resid);
            self.ldl.solve(&mut self.work);
            for (s, &w) in self.sol.iter_mut().zip(&self.work) {
                *s = *s + w;
            }
            self.matvec();
            let mut norm = T::zero();
            for ((r, &b), &k) in self.resid.iter_mut().zip(&self.rhs).zip(&self.kx) {
                *r = b - k;
                norm = norm.max(r.abs());
            }
            if norm <= tol || norm > prev * T::lit(0.5) {
                break;
            }
            prev = norm;
        }
        for (&s, &i) in self.sol.iter().zip(&self.perm) {
            self.work[i] = s;
        }
        dx.copy_from_slice(&self.work[..n]);
        dz.copy_from_slice(&self.work[n..n + m]);
    }
}
