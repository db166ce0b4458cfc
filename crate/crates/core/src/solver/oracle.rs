//! Brute-force reference minimizer of the weighted range-fit objective,
//! used to check the conic relaxation on small planar instances.

use crate::error::{Error, Result};
use crate::net::Position;
use crate::Scalar;

/// `sum_k w_k (d_k - ||x - a_k||)^2`.
pub fn range_objective<T: Scalar>(anchors: &[Position<T>], ranges: &[T], weights: &[T], x: &[T]) -> T {
    anchors
        .iter()
        .zip(ranges)
        .zip(weights)
        .map(|((a, &d), &w)| {
            let dist = a
                .coords()
                .iter()
                .zip(x)
                .map(|(&p, &q)| (p - q) * (p - q))
                .sum::<T>()
                .sqrt();
            w * (d - dist) * (d - dist)
        })
        .sum()
}

/// Axis-aligned search box `[x_min, x_max] x [y_min, y_max]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Bounds<T> {
    pub x: (T, T),
    pub y: (T, T),
}

/// Scans the box on a grid with the given spacing, then polishes the best
/// grid point by a shrinking compass search confined to the box.
///
/// Grid points are visited row by row from the lower-left corner
/// (`y` outer, `x` inner) and only a strictly smaller value replaces the
/// incumbent, so among tied minimizers the first in that order wins.
pub fn oracle_localize<T: Scalar>(
    anchors: &[Position<T>],
    ranges: &[T],
    weights: &[T],
    bounds: Bounds<T>,
    resolution: T,
) -> Result<Position<T>> {
    if anchors.iter().any(|a| a.dim() != 2) {
        return Err(Error::Input("oracle search is planar only".into()));
    }
    if anchors.len() != ranges.len() || anchors.len() != weights.len() {
        return Err(Error::DimensionMismatch {
            expected: anchors.len(),
            got: ranges.len().min(weights.len()),
        });
    }
    let finite = [bounds.x.0, bounds.x.1, bounds.y.0, bounds.y.1].iter().all(|v| v.is_finite());
    if !finite || bounds.x.0 > bounds.x.1 || bounds.y.0 > bounds.y.1 {
        return Err(Error::Input("oracle bounds must be finite and ordered".into()));
    }
    if !(resolution > T::zero()) {
        return Err(Error::Input("oracle resolution must be > 0".into()));
    }
    let steps = |lo: T, hi: T| ((hi - lo) / resolution).floor().to_usize().unwrap_or(0);
    let (nx, ny) = (steps(bounds.x.0, bounds.x.1), steps(bounds.y.0, bounds.y.1));
    let f = |p: &[T]| range_objective(anchors, ranges, weights, p);

    let mut best = [bounds.x.0, bounds.y.0];
    let mut best_val = f(&best);
    for j in 0..=ny {
        let y = bounds.y.0 + T::from_usize(j).unwrap() * resolution;
        for i in 0..=nx {
            let p = [bounds.x.0 + T::from_usize(i).unwrap() * resolution, y];
            let v = f(&p);
            if v < best_val {
                best_val = v;
                best = p;
            }
        }
    }

    let clamp = |v: T, (lo, hi): (T, T)| v.max(lo).min(hi);
    let mut step = resolution;
    let floor = resolution * T::lit(1e-6);
    while step > floor {
        let mut moved = false;
        for (dx, dy) in [(1.0, 0.0), (-1.0, 0.0), (0.0, 1.0), (0.0, -1.0)] {
            let p = [
                clamp(best[0] + T::lit(dx) * step, bounds.x),
                clamp(best[1] + T::lit(dy) * step, bounds.y),
            ];
            let v = f(&p);
            if v < best_val {
                best_val = v;
                best = p;
                moved = true;
                break;
            }
        }
        if !moved {
            step = step * T::lit(0.5);
        }
    }
    Ok(Position::xy(best[0], best[1]))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn bounds(lo: f64, hi: f64) -> Bounds<f64> {
        Bounds { x: (lo, hi), y: (lo, hi) }
    }

    #[test]
    fn noiseless_three_anchors() {
        let anchors = vec![Position::xy(0.0, 0.0), Position::xy(10.0, 0.0), Position::xy(0.0, 10.0)];
        let ranges = [5.0, 65f64.sqrt(), 45f64.sqrt()];
        let p = oracle_localize(&anchors, &ranges, &[1.0; 3], bounds(0.0, 10.0), 0.05).unwrap();
        assert!((p.coords()[0] - 3.0).abs() < 1e-4 && (p.coords()[1] - 4.0).abs() < 1e-4, "{p:?}");
    }

    #[test]
    fn single_anchor_lands_on_ring() {
        let anchors = vec![Position::xy(5.0, 5.0)];
        let p = oracle_localize(&anchors, &[3.0], &[1.0], bounds(0.0, 10.0), 0.1).unwrap();
        let r = p.distance(&anchors[0]);
        assert!((r - 3.0).abs() <= 0.1, "{r}");
    }

    #[test]
    fn four_corners_give_center() {
        let anchors = vec![
            Position::xy(0.0, 0.0),
            Position::xy(10.0, 0.0),
            Position::xy(10.0, 10.0),
            Position::xy(0.0, 10.0),
        ];
        let d = 50f64.sqrt();
        let p = oracle_localize(&anchors, &[d; 4], &[1.0; 4], bounds(0.0, 10.0), 0.1).unwrap();
        assert!((p.coords()[0] - 5.0).abs() < 1e-4 && (p.coords()[1] - 5.0).abs() < 1e-4);
    }

    #[test]
    fn rejects_bad_input() {
        let anchors = vec![Position::xy(0.0, 0.0)];
        assert!(oracle_localize(&anchors, &[1.0], &[1.0], bounds(0.0, 1.0), 0.0).is_err());
        assert!(oracle_localize(&anchors, &[1.0, 2.0], &[1.0], bounds(0.0, 1.0), 0.1).is_err());
        assert!(oracle_localize(&anchors, &[1.0], &[1.0], bounds(1.0, 0.0), 0.1).is_err());
    }
}
