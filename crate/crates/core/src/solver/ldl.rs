//! Sparse LDL^T for symmetric quasi-definite matrices.
//!
//! Input is the upper triangle in compressed-column form (row indices
//! `<=` column, diagonal present in every column). The factorization is the
//! up-looking algorithm driven by the elimination tree, without pivoting;
//! a fill-reducing symmetric permutation is chosen beforehand by
//! [`minimum_degree`].

use std::cmp::Reverse;
use std::collections::{BTreeSet, BinaryHeap};

use crate::Scalar;

const NONE: usize = usize::MAX;

/// Greedy minimum-degree ordering on the graph with the given undirected
/// edges. Ties go to the lowest index. Returns `perm` with `perm[k]` the
/// original index eliminated `k`-th.
///
/// Nodes with `pivot_ready[i] == false` have a structurally zero diagonal.
/// They are held back until a neighbour's elimination has filled their
/// diagonal, so that no pivot rests on regularization alone; only when no
/// ready node is left does the ordering fall back to plain degree.
pub fn minimum_degree(n: usize, edges: impl IntoIterator<Item = (usize, usize)>, pivot_ready: &[bool]) -> Vec<usize> {
    let mut adj: Vec<BTreeSet<usize>> = vec![BTreeSet::new(); n];
    for (a, b) in edges {
        if a != b {
            adj[a].insert(b);
            adj[b].insert(a);
        }
    }
    let mut ready = pivot_ready.to_vec();
    let key = |ready: bool, deg: usize, v: usize| Reverse((!ready, deg, v));
    let mut heap: BinaryHeap<_> = (0..n).map(|i| key(ready[i], adj[i].len(), i)).collect();
    let mut done = vec![false; n];
    let mut perm = Vec::with_capacity(n);
    while let Some(Reverse((waiting, deg, v))) = heap.pop() {
        if done[v] || deg != adj[v].len() || waiting == ready[v] {
            continue;
        }
        done[v] = true;
        perm.push(v);
        let nbrs: Vec<usize> = std::mem::take(&mut adj[v]).into_iter().collect();
        for &a in &nbrs {
            adj[a].remove(&v);
            ready[a] = true;
        }
        for (i, &a) in nbrs.iter().enumerate() {
            for &b in &nbrs[i + 1..] {
                adj[a].insert(b);
                adj[b].insert(a);
            }
        }
        for &a in &nbrs {
            heap.push(key(ready[a], adj[a].len(), a));
        }
    }
    perm
}

/// Pattern of an upper-triangular CSC matrix.
#[derive(Debug, Clone)]
pub struct UpperCsc {
    pub n: usize,
    pub col_ptr: Vec<usize>,
    pub row_idx: Vec<usize>,
}

/// `L D L^T` with a fixed pattern. The symbolic phase records, for every
/// row `k` of `L`, the columns it touches in the order the up-looking
/// factorization visits them and where each entry lands, so the numeric phase
/// is straight-line scatter/gather.
#[derive(Debug, Clone)]
pub struct Ldl<T> {
    n: usize,
    l_ptr: Vec<usize>,
    l_idx: Vec<usize>,
    l_val: Vec<T>,
    /// Row `k` visits `(reach_col[j], reach_pos[j])` for `j` in
    /// `reach_ptr[k]..reach_ptr[k + 1]`; `reach_pos` is the slot of `L_kc`.
    reach_ptr: Vec<usize>,
    reach_col: Vec<usize>,
    reach_pos: Vec<usize>,
    d: Vec<T>,
    d_inv: Vec<T>,
    y: Vec<T>,
}

impl<T: Scalar> Ldl<T> {
    /// Elimination tree, pattern of `L` and per-row visiting order.
    pub fn symbolic(a: &UpperCsc) -> Self {
        let n = a.n;
        let mut etree = vec![NONE; n];
        let mut lnz = vec![0usize; n];
        let mut work = vec![NONE; n];
        for j in 0..n {
            work[j] = j;
            for &row in &a.row_idx[a.col_ptr[j]..a.col_ptr[j + 1]] {
                let mut i = row;
                debug_assert!(i <= j, "lower-triangular entry in upper CSC");
                while work[i] != j {
                    if etree[i] == NONE {
                        etree[i] = j;
                    }
                    lnz[i] += 1;
                    work[i] = j;
                    i = etree[i];
                }
            }
        }
        let mut l_ptr = vec![0usize; n + 1];
        for i in 0..n {
            l_ptr[i + 1] = l_ptr[i] + lnz[i];
        }
        let nnz = l_ptr[n];
        let mut l_idx = vec![0; nnz];
        let mut next = l_ptr[..n].to_vec();
        let mut reach_ptr = vec![0];
        let mut reach_col = Vec::with_capacity(nnz);
        let mut reach_pos = Vec::with_capacity(nnz);
        let mut mark = vec![false; n];
        let mut stack = Vec::new();
        let mut row = Vec::new();
        for k in 0..n {
            row.clear();
            for &i in &a.row_idx[a.col_ptr[k]..a.col_ptr[k + 1]] {
                if i == k || mark[i] {
                    continue;
                }
                // Path from i up the etree, stopping at marked nodes; pushed
                // in reverse so that the final order is topological.
                stack.clear();
                let mut j = i;
                while j != NONE && j < k && !mark[j] {
                    mark[j] = true;
                    stack.push(j);
                    j = etree[j];
                }
                row.extend(stack.iter().rev());
            }
            for &c in row.iter().rev() {
                mark[c] = false;
                l_idx[next[c]] = k;
                reach_col.push(c);
                reach_pos.push(next[c]);
                next[c] += 1;
            }
            reach_ptr.push(reach_col.len());
        }
        Self {
            n,
            l_ptr,
            l_idx,
            l_val: vec![T::zero(); nnz],
            reach_ptr,
            reach_col,
            reach_pos,
            d: vec![T::zero(); n],
            d_inv: vec![T::zero(); n],
            y: vec![T::zero(); n],
        }
    }

    pub fn nnz(&self) -> usize {
        self.l_ptr[self.n]
    }

    /// Numeric factorization. A pivot whose signed value `sign[k] * D_kk`
    /// falls below `eps` is replaced by `sign[k] * delta`; the number of such
    /// replacements is returned. `None` on a non-finite pivot.
    pub fn factor(&mut self, a: &UpperCsc, values: &[T], sign: &[T], eps: T, delta: T) -> Option<usize> {
        let mut bumped = 0;
        let y = &mut self.y;
        for k in 0..self.n {
            let mut dk = T::zero();
            let (lo, hi) = (a.col_ptr[k], a.col_ptr[k + 1]);
            for (&i, &v) in a.row_idx[lo..hi].iter().zip(&values[lo..hi]) {
                if i == k {
                    dk = v;
                } else {
                    y[i] = v;
                }
            }
            let (rlo, rhi) = (self.reach_ptr[k], self.reach_ptr[k + 1]);
            for (&c, &pos) in self.reach_col[rlo..rhi].iter().zip(&self.reach_pos[rlo..rhi]) {
                let yc = y[c];
                y[c] = T::zero();
                let start = self.l_ptr[c];
                for (&r, &l) in self.l_idx[start..pos].iter().zip(&self.l_val[start..pos]) {
                    y[r] = y[r] - l * yc;
                }
                let lkc = yc * self.d_inv[c];
                self.l_val[pos] = lkc;
                dk = dk - yc * lkc;
            }
            if sign[k] * dk <= eps {
                dk = sign[k] * delta;
                bumped += 1;
            }
            if !dk.is_finite() {
                return None;
            }
            self.d[k] = dk;
            self.d_inv[k] = T::one() / dk;
        }
        Some(bumped)
    }

    /// Solves `L D L^T x = b` in place.
    pub fn solve(&self, b: &mut [T]) {
        let b = &mut b[..self.n];
        for c in 0..self.n {
            let bc = b[c];
            let (lo, hi) = (self.l_ptr[c], self.l_ptr[c + 1]);
            for (&r, &l) in self.l_idx[lo..hi].iter().zip(&self.l_val[lo..hi]) {
                b[r] = b[r] - l * bc;
            }
        }
        for (bi, &di) in b.iter_mut().zip(&self.d_inv) {
            *bi = *bi * di;
        }
        for c in (0..self.n).rev() {
            let (lo, hi) = (self.l_ptr[c], self.l_ptr[c + 1]);
            let acc = self.l_idx[lo..hi]
                .iter()
                .zip(&self.l_val[lo..hi])
                .fold(b[c], |acc, (&r, &l)| acc - l * b[r]);
            b[c] = acc;
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn to_csc(n: usize, dense: &[f64]) -> (UpperCsc, Vec<f64>) {
        let mut col_ptr = vec![0];
        let mut row_idx = vec![];
        let mut vals = vec![];
        for j in 0..n {
            for i in 0..=j {
                let v = dense[i * n + j];
                if v != 0.0 || i == j {
                    row_idx.push(i);
                    vals.push(v);
                }
            }
            col_ptr.push(row_idx.len());
        }
        (UpperCsc { n, col_ptr, row_idx }, vals)
    }

    /// Random quasi-definite matrix [[P, B^T], [B, -N]] with sparse coupling.
    fn quasi_definite() -> impl Strategy<Value = (usize, usize, Vec<f64>)> {
        (1usize..6, 1usize..6).prop_flat_map(|(n1, n2)| {
            let n = n1 + n2;
            prop::collection::vec(prop_oneof![3 => Just(0.0), 2 => -2.0..2.0f64], n * n)
                .prop_map(move |r| {
                    let mut m = vec![0.0; n * n];
                    for i in 0..n {
                        for j in 0..=i {
                            let v = r[i * n + j];
                            m[i * n + j] = v;
                            m[j * n + i] = v;
                        }
                    }
                    // Make the diagonal blocks strongly definite.
                    for i in 0..n {
                        let row: f64 = (0..n).map(|j| m[i * n + j].abs()).sum();
                        m[i * n + i] = if i < n1 { row + 1.0 } else { -(row + 1.0) };
                    }
                    (n1, n2, m)
                })
        })
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(1000))]

        #[test]
        fn factor_solves_quasi_definite((n1, n2, m) in quasi_definite(), b in prop::collection::vec(-3.0..3.0f64, 12)) {
            let n = n1 + n2;
            let (csc, vals) = to_csc(n, &m);
            let sign: Vec<f64> = (0..n).map(|i| if i < n1 { 1.0 } else { -1.0 }).collect();
            let mut ldl = Ldl::symbolic(&csc);
            let bumped = ldl.factor(&csc, &vals, &sign, 1e-14, 1e-8).unwrap();
            prop_assert_eq!(bumped, 0);
            let mut x = b[..n].to_vec();
            ldl.solve(&mut x);
            for i in 0..n {
                let ax: f64 = (0..n).map(|j| m[i * n + j] * x[j]).sum();
                prop_assert!((ax - b[i]).abs() < 1e-9);
            }
        }
    }

    #[test]
    fn minimum_degree_eliminates_leaves_before_hub() {
        // Star: node 0 connected to 1..5.
        let perm = minimum_degree(6, (1..6).map(|i| (0, i)), &[true; 6]);
        assert_eq!(perm.len(), 6);
        assert_ne!(perm[0], 0);
        let mut sorted = perm.clone();
        sorted.sort();
        assert_eq!(sorted, (0..6).collect::<Vec<_>>());
    }
}
