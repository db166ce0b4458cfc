//! Empirical check that solve time grows at most polynomially in the number
//! of anchor links, with a budget exponent of 2.6.

use serde::{Deserialize, Serialize};

pub const EXPONENT_BUDGET: f64 = 2.6;
const MIN_DISTINCT: usize = 4;
const MIN_PER_SIZE: usize = 20;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SolveSample {
    pub p_i: usize,
    pub iterations: usize,
    /// Seconds.
    pub wall_time: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ComplexityVerdict {
    Pass,
    Fail,
    Inconclusive,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ComplexityReport {
    pub verdict: ComplexityVerdict,
    /// Fitted slope of log(median time) against log(p_i).
    pub exponent: Option<f64>,
    pub budget: f64,
    /// `(p_i, solves, median seconds, median iterations)` per size.
    pub sizes: Vec<(usize, usize, f64, f64)>,
    pub note: String,
}

fn median(mut v: Vec<f64>) -> f64 {
    v.sort_by(|a, b| a.total_cmp(b));
    let n = v.len();
    if n % 2 == 1 {
        v[n / 2]
    } else {
        0.5 * (v[n / 2 - 1] + v[n / 2])
    }
}

/// Least-squares slope of `ys` on `xs`.
pub fn fit_slope(xs: &[f64], ys: &[f64]) -> f64 {
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxy: f64 = xs.iter().zip(ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = xs.iter().map(|x| (x - mx) * (x - mx)).sum();
    sxy / sxx
}

pub fn complexity_budget_check(trace: &[SolveSample]) -> ComplexityReport {
    let mut by_p: std::collections::BTreeMap<usize, Vec<&SolveSample>> = Default::default();
    for s in trace {
        by_p.entry(s.p_i).or_default().push(s);
    }
    let sizes: Vec<(usize, usize, f64, f64)> = by_p
        .iter()
        .map(|(&p, v)| {
            let t = median(v.iter().map(|s| s.wall_time).collect());
            let it = median(v.iter().map(|s| s.iterations as f64).collect());
            (p, v.len(), t, it)
        })
        .collect();
    let inconclusive = |note: String, sizes| ComplexityReport {
        verdict: ComplexityVerdict::Inconclusive,
        exponent: None,
        budget: EXPONENT_BUDGET,
        sizes,
        note,
    };
    if sizes.len() < MIN_DISTINCT {
        return inconclusive(format!("need {MIN_DISTINCT} distinct sizes, got {}", sizes.len()), sizes);
    }
    if let Some(&(p, k, _, _)) = sizes.iter().find(|s| s.1 < MIN_PER_SIZE) {
        return inconclusive(format!("size {p} has {k} solves, need {MIN_PER_SIZE}"), sizes);
    }
    if sizes.iter().any(|s| s.0 == 0 || !(s.2 > 0.0)) {
        return inconclusive("zero size or non-positive median time".into(), sizes);
    }
    let xs: Vec<f64> = sizes.iter().map(|s| (s.0 as f64).ln()).collect();
    let ys: Vec<f64> = sizes.iter().map(|s| s.2.ln()).collect();
    let exponent = fit_slope(&xs, &ys);
    ComplexityReport {
        verdict: if exponent <= EXPONENT_BUDGET {
            ComplexityVerdict::Pass
        } else {
            ComplexityVerdict::Fail
        },
        exponent: Some(exponent),
        budget: EXPONENT_BUDGET,
        sizes,
        note: String::new(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn stub(f: impl Fn(f64) -> f64) -> Vec<SolveSample> {
        [5usize, 10, 20, 40]
            .iter()
            .flat_map(|&p| {
                let t = f(p as f64);
                (0..20).map(move |k| SolveSample {
                    p_i: p,
                    iterations: 10,
                    // small deterministic jitter around the model time
                    wall_time: t * (1.0 + 0.01 * ((k % 5) as f64 - 2.0)),
                })
            })
            .collect()
    }

    #[test]
    fn constant_time_passes() {
        let r = complexity_budget_check(&stub(|_| 1e-3));
        assert_eq!(r.verdict, ComplexityVerdict::Pass);
        assert!(r.exponent.unwrap().abs() < 1e-9);
    }

    #[test]
    fn quadratic_passes() {
        let r = complexity_budget_check(&stub(|p| 1e-6 * p * p));
        assert_eq!(r.verdict, ComplexityVerdict::Pass);
        assert!((r.exponent.unwrap() - 2.0).abs() < 1e-9);
    }

    #[test]
    fn cubic_fails() {
        let r = complexity_budget_check(&stub(|p| 1e-6 * p * p * p));
        assert_eq!(r.verdict, ComplexityVerdict::Fail);
    }

    #[test]
    fn sparse_data_is_inconclusive() {
        let mut t = stub(|_| 1.0);
        t.retain(|s| s.p_i != 40);
        assert_eq!(complexity_budget_check(&t).verdict, ComplexityVerdict::Inconclusive);
        let t: Vec<_> = stub(|_| 1.0).into_iter().step_by(2).collect();
        assert_eq!(complexity_budget_check(&t).verdict, ComplexityVerdict::Inconclusive);
    }
}
