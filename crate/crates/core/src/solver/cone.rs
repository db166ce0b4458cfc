//! Second-order cone primitives: Jordan algebra, step lengths and
//! Nesterov–Todd scaling.
//!
//! Cones are `K = { v : v_0 >= ||v_1..|| }`; `e = (1, 0, ..., 0)` is the
//! identity and `J = diag(1, -1, ..., -1)`.

use crate::Scalar;

#[inline]
fn tail_norm<T: Scalar>(v: &[T]) -> T {
    v[1..].iter().map(|&x| x * x).sum::<T>().sqrt()
}

/// `v^T J v`, computed as `(v_0 - ||v_1||)(v_0 + ||v_1||)`.
#[inline]
pub fn jdet<T: Scalar>(v: &[T]) -> T {
    let t = tail_norm(v);
    (v[0] - t) * (v[0] + t)
}

pub fn is_interior<T: Scalar>(v: &[T]) -> bool {
    v[0] > tail_norm(v)
}

/// `u o v = (u^T v, u_0 v_1 + v_0 u_1)`.
pub fn jordan_product<T: Scalar>(u: &[T], v: &[T], out: &mut [T]) {
    out[0] = u.iter().zip(v).map(|(&a, &b)| a * b).sum();
    for i in 1..u.len() {
        out[i] = u[0] * v[i] + v[0] * u[i];
    }
}

/// Solves `lambda o x = d` for `x`.
pub fn jordan_divide<T: Scalar>(lambda: &[T], d: &[T], out: &mut [T]) {
    let l0 = lambda[0];
    let dot: T = lambda[1..].iter().zip(&d[1..]).map(|(&a, &b)| a * b).sum();
    let x0 = (l0 * d[0] - dot) / jdet(lambda);
    out[0] = x0;
    for i in 1..lambda.len() {
        out[i] = (d[i] - x0 * lambda[i]) / l0;
    }
}

/// Largest `alpha >= 0` keeping `u + alpha d` in the cone; `u` must be
/// interior. Returns infinity when the ray never leaves.
pub fn max_step<T: Scalar>(u: &[T], d: &[T]) -> T {
    let mut alpha = T::infinity();
    if d[0] < T::zero() {
        alpha = -u[0] / d[0];
    }
    // phi(a) = a^2 dJd + 2a uJd + uJu
    let mut a = d[0] * d[0];
    let mut b = u[0] * d[0];
    for i in 1..u.len() {
        a = a - d[i] * d[i];
        b = b - u[i] * d[i];
    }
    let c = jdet(u);
    if a < T::zero() || b < T::zero() {
        let disc = b * b - a * c;
        if disc >= T::zero() {
            let denom = -b + disc.sqrt();
            if denom > T::zero() {
                alpha = alpha.min(c / denom);
            }
        }
    }
    alpha.max(T::zero())
}

/// Nesterov–Todd scaling `W = eta * Wbar` of one cone, with
/// `Wbar = [[a, q^T], [q, I + q q^T / (1 + a)]]`, `a^2 - ||q||^2 = 1`, so that
/// `W z = W^{-1} s`.
#[derive(Debug, Clone)]
pub struct NtScaling<T> {
    pub eta: T,
    /// `(a, q)`
    pub w: Vec<T>,
}

impl<T: Scalar> NtScaling<T> {
    /// `None` unless both points are strictly interior.
    pub fn new(s: &[T], z: &[T]) -> Option<Self> {
        let mut w = Self {
            eta: T::one(),
            w: vec![T::zero(); s.len()],
        };
        w.update(s, z).then_some(w)
    }

    /// Recomputes the scaling in place for a new pair of the same dimension.
    /// Returns `false` (leaving `self` unspecified) unless both points are
    /// strictly interior.
    pub fn update(&mut self, s: &[T], z: &[T]) -> bool {
        let (sd, zd) = (jdet(s), jdet(z));
        if !(sd > T::zero() && zd > T::zero() && s[0] > T::zero() && z[0] > T::zero()) {
            return false;
        }
        let (sr, zr) = (sd.sqrt(), zd.sqrt());
        let dot: T = s.iter().zip(z).map(|(&a, &b)| (a / sr) * (b / zr)).sum();
        let gamma = ((T::one() + dot) / T::lit(2.0)).sqrt();
        let two_gamma = T::lit(2.0) * gamma;
        self.w[0] = (s[0] / sr + z[0] / zr) / two_gamma;
        for i in 1..s.len() {
            self.w[i] = (s[i] / sr - z[i] / zr) / two_gamma;
        }
        self.eta = (sr / zr).sqrt();
        self.eta.is_finite() && self.w.iter().all(|v| v.is_finite())
    }

    pub fn dim(&self) -> usize {
        self.w.len()
    }

    fn apply(&self, v: &[T], out: &mut [T], inverse: bool) {
        let a = self.w[0];
        let q = &self.w[1..];
        let qv: T = q.iter().zip(&v[1..]).map(|(&x, &y)| x * y).sum();
        let (sign, scale) = if inverse {
            (-T::one(), T::one() / self.eta)
        } else {
            (T::one(), self.eta)
        };
        let v0 = v[0];
        out[0] = scale * (a * v0 + sign * qv);
        let coef = sign * v0 + qv / (T::one() + a);
        for i in 1..v.len() {
            out[i] = scale * (v[i] + coef * q[i - 1]);
        }
    }

    pub fn apply_w(&self, v: &[T], out: &mut [T]) {
        self.apply(v, out, false)
    }

    pub fn apply_winv(&self, v: &[T], out: &mut [T]) {
        self.apply(v, out, true)
    }

    /// Dense `W^2`, row-major.
    pub fn w2_dense(&self) -> Vec<T> {
        let n = self.dim();
        let mut out = vec![T::zero(); n * n];
        self.w2_into(&mut out);
        out
    }

    /// Writes dense `W^2` (row-major, `dim * dim` entries) into `out`.
    pub fn w2_into(&self, out: &mut [T]) {
        let n = self.dim();
        let (a, q) = (self.w[0], &self.w[1..]);
        let ww: T = q.iter().map(|&x| x * x).sum();
        let b = T::one() / (T::one() + a);
        let c = T::one() + a + b * ww;
        let d = T::one() + T::lit(2.0) * b + b * b * ww;
        let e2 = self.eta * self.eta;
        out[0] = e2 * (a * a + ww);
        for i in 1..n {
            out[i] = e2 * c * q[i - 1];
            out[i * n] = out[i];
            for j in 1..n {
                let id = if i == j { T::one() } else { T::zero() };
                out[i * n + j] = e2 * (id + d * q[i - 1] * q[j - 1]);
            }
        }
    }

    /// `W^2 = eta^2 (D + u u^T - v v^T)` with `D = diag(d1, 1, ..., 1)` and
    /// `v_0 = 0`; `D - v v^T` is positive definite, which keeps the expanded
    /// KKT system quasi-definite. Returns `(d1, u, v)`.
    pub fn expansion(&self) -> (T, Vec<T>, Vec<T>) {
        let (a, q) = (self.w[0], &self.w[1..]);
        let ww: T = q.iter().map(|&x| x * x).sum();
        let half = T::lit(0.5);
        let c = T::one() + a + ww / (T::one() + a);
        let d = T::one() + T::lit(2.0) / (T::one() + a) + ww / ((T::one() + a) * (T::one() + a));
        let d1 = (half * (a * a + ww * (T::one() - c * c / (T::one() + ww * d)))).max(T::zero());
        let u0_sq = a * a + ww - d1;
        let u0 = u0_sq.sqrt();
        let c2_u02 = c * c / u0_sq;
        let v1 = (c2_u02 - d).max(T::zero()).sqrt();
        let u1 = c2_u02.sqrt();
        let mut u = Vec::with_capacity(self.dim());
        let mut v = Vec::with_capacity(self.dim());
        u.push(u0);
        v.push(T::zero());
        for &qi in q {
            u.push(u1 * qi);
            v.push(v1 * qi);
        }
        (d1, u, v)
    }
}
