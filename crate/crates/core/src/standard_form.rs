//! SeDuMi-style conic standard form.
//!
//! A program over `x` in `R^n` is
//!
//! ```text
//! maximize   bt^T x
//! subject to offset - A^T x  in  K = K_1 x ... x K_L
//! ```
//!
//! where each `K_j` is a second-order cone `{ s : s_0 >= ||s_1..|| }` of
//! dimension `cones[j]`. `A` is stored row-major with `n` rows and
//! `sum(cones)` columns, so column `c` of `A` produces slack entry `c`.
//! There is no equality block.

use crate::error::{Error, Result};
use crate::Scalar;

#[derive(Debug, Clone, PartialEq)]
pub struct StandardForm<T> {
    pub n_vars: usize,
    /// `n_vars x cone_dim`, row-major.
    pub a: Vec<T>,
    pub bt: Vec<T>,
    pub offset: Vec<T>,
    pub cones: Vec<usize>,
}

/// Constraint evaluation at a point.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Residuals<T> {
    /// `min_k (s_k0 - ||s_k1..||)`; non-negative iff the point is feasible.
    pub primal: T,
    /// `max(0, -primal)`.
    pub cone_violation: T,
    /// Minimized objective `-bt^T x`.
    pub objective: T,
}

impl<T: Scalar> StandardForm<T> {
    pub fn new(n_vars: usize, a: Vec<T>, bt: Vec<T>, offset: Vec<T>, cones: Vec<usize>) -> Result<Self> {
        let m: usize = cones.iter().sum();
        if a.len() != n_vars * m {
            return Err(Error::DimensionMismatch {
                expected: n_vars * m,
                got: a.len(),
            });
        }
        if bt.len() != n_vars {
            return Err(Error::DimensionMismatch {
                expected: n_vars,
                got: bt.len(),
            });
        }
        if offset.len() != m {
            return Err(Error::DimensionMismatch {
                expected: m,
                got: offset.len(),
            });
        }
        if cones.contains(&0) {
            return Err(Error::Input("zero-dimensional cone".into()));
        }
        if a.iter().chain(&bt).chain(&offset).any(|v| !v.is_finite()) {
            return Err(Error::Input("non-finite program data".into()));
        }
        Ok(Self {
            n_vars,
            a,
            bt,
            offset,
            cones,
        })
    }

    pub fn cone_dim(&self) -> usize {
        self.offset.len()
    }

    pub fn equality_constraints(&self) -> usize {
        0
    }

    #[inline]
    pub fn a_at(&self, row: usize, col: usize) -> T {
        self.a[row * self.cone_dim() + col]
    }

    /// `offset - A^T x`.
    pub fn slack(&self, x: &[T]) -> Vec<T> {
        let m = self.cone_dim();
        let mut s = self.offset.clone();
        for (i, &xi) in x.iter().enumerate() {
            if xi == T::zero() {
                continue;
            }
            let row = &self.a[i * m..(i + 1) * m];
            for (sj, &aij) in s.iter_mut().zip(row) {
                *sj = *sj - aij * xi;
            }
        }
        s
    }

    /// Start offset of each cone block within the slack vector.
    pub fn cone_starts(&self) -> Vec<usize> {
        self.cones
            .iter()
            .scan(0, |acc, &d| {
                let s = *acc;
                *acc += d;
                Some(s)
            })
            .collect()
    }

    pub fn residuals(&self, x: &[T]) -> Result<Residuals<T>> {
        if x.len() != self.n_vars {
            return Err(Error::DimensionMismatch {
                expected: self.n_vars,
                got: x.len(),
            });
        }
        let s = self.slack(x);
        let mut margin = T::infinity();
        for (start, &dim) in self.cone_starts().iter().zip(&self.cones) {
            let block = &s[*start..start + dim];
            let tail = block[1..].iter().map(|&v| v * v).sum::<T>().sqrt();
            margin = margin.min(block[0] - tail);
        }
        if self.cones.is_empty() {
            margin = T::zero();
        }
        let objective = -self.bt.iter().zip(x).map(|(&b, &v)| b * v).sum::<T>();
        Ok(Residuals {
            primal: margin,
            cone_violation: (-margin).max(T::zero()),
            objective,
        })
    }
}
