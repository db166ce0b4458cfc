//! Randomized invariants shared by the property tests and the acceptance run.
//! Each suite draws `cases` inputs from a fixed-seed runner.

use mlnsocp::crlb::{crlb_at, fim, CrlbParams, NoiseScaling};
use mlnsocp::harness::{run_trial, TrialResult};
use mlnsocp::measurement::{sample_los, sample_nlos};
use mlnsocp::net::deploy_uniform;
use mlnsocp::{
    build_node_problem, fit_objective, solve, validate_assembly, Edge, LinkKind, LinkModel, Measurement,
    MeasurementSet, Method, NetworkConfig, Position, SolverStatus,
};
use proptest::prelude::*;
use proptest::test_runner::{Config, RngAlgorithm, TestRng, TestRunner};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub type Link = (Position<f64>, Measurement<f64>);
pub type Suite = (&'static str, fn(u32) -> Result<(), String>);

// Only the acceptance run iterates the whole list.
#[allow(dead_code)]
pub const SUITES: [Suite; 7] = [
    ("assembly validation", assembly_validates),
    ("solver cone membership", solutions_in_cone),
    ("measurement moments", measurement_moments),
    ("crlb psd", crlb_psd),
    ("crlb anchor monotonicity", crlb_monotone),
    ("deployment determinism", deployment_determinism),
    ("trial determinism", trial_determinism),
];

fn runner(cases: u32) -> TestRunner {
    let config = Config {
        cases,
        failure_persistence: None,
        ..Config::default()
    };
    TestRunner::new_with_rng(config, TestRng::deterministic_rng(RngAlgorithm::ChaCha))
}

fn run<S: Strategy>(cases: u32, strategy: S, test: impl Fn(S::Value) -> Result<(), TestCaseError>) -> Result<(), String>
where
    S::Value: std::fmt::Debug,
{
    runner(cases).run(&strategy, test).map_err(|e| e.to_string())
}

fn kind() -> impl Strategy<Value = LinkKind> {
    prop_oneof![Just(LinkKind::Los), Just(LinkKind::Nlos)]
}

fn method() -> impl Strategy<Value = Method> {
    prop_oneof![Just(Method::MlnSocp), Just(Method::DSocp)]
}

fn pt() -> impl Strategy<Value = Position<f64>> {
    (0.0..40.0f64, 0.0..40.0f64).prop_map(|(x, y)| Position::xy(x, y))
}

fn model() -> impl Strategy<Value = LinkModel<f64>> {
    (0.05..0.95f64, 0.01..0.3f64, 0.01..0.3f64).prop_map(|(g, eta_l, eta_n)| LinkModel { g, eta_l, eta_n })
}

/// A node with noisy links to 1..=8 anchors in a 40 m square.
fn instance() -> impl Strategy<Value = (Position<f64>, Vec<Link>, LinkModel<f64>)> {
    let link = (pt(), kind(), -1.0..1.0f64, 0.0..3.0f64);
    (pt(), prop::collection::vec(link, 1..=8), model()).prop_map(|(x, links, model)| {
        let links = links
            .into_iter()
            .enumerate()
            .map(|(k, (a, kind, u, e))| {
                let d = a.distance(&x);
                let edge = Edge {
                    r: 0,
                    t: k + 1,
                    kind,
                    true_distance: d,
                };
                let noise = model.eta_l * d * u;
                let bias = model.eta_n * d * e;
                (a, Measurement::from_parts(&edge, model.eta_l, model.eta_n, noise, bias))
            })
            .collect();
        (x, links, model)
    })
}

pub fn assembly_validates(cases: u32) -> Result<(), String> {
    run(cases, (instance(), method()), |((_, links, model), method)| {
        let program = build_node_problem(&links, &model, method).unwrap();
        let p = links.len();
        prop_assert_eq!(program.form.n_vars, 5 * p + 3);
        prop_assert_eq!(program.form.equality_constraints(), 0);
        let report = validate_assembly(&program);
        prop_assert!(report.passed(), "{:?}", report);
        Ok(())
    })
}

pub fn solutions_in_cone(cases: u32) -> Result<(), String> {
    run(cases, (instance(), method()), |((x, links, model), method)| {
        let program = build_node_problem(&links, &model, method).unwrap();
        let sol = solve(&program.form, &Default::default()).unwrap();
        prop_assert_eq!(sol.status, SolverStatus::Optimal);
        let r = program.form.residuals(&sol.x).unwrap();
        prop_assert!(r.cone_violation <= 1e-6, "cone violation {}", r.cone_violation);
        let bound = fit_objective(&links, &model, method, &x).sqrt();
        prop_assert!(sol.objective <= bound + 1e-6 * (1.0 + bound), "{} > {}", sol.objective, bound);
        Ok(())
    })
}

fn mean_var(v: &[f64]) -> (f64, f64) {
    let n = v.len() as f64;
    let m = v.iter().sum::<f64>() / n;
    (m, v.iter().map(|x| (x - m) * (x - m)).sum::<f64>() / (n - 1.0))
}

/// Corrected range error: zero mean, variance `(eta_l d)^2` for LOS and
/// `(eta_l^2 + eta_n^2) d^2` for NLOS. Bounds are six standard errors.
pub fn measurement_moments(cases: u32) -> Result<(), String> {
    let strategy = (5.0..50.0f64, 0.01..0.25f64, 0.01..0.3f64, kind(), any::<u64>());
    run(cases, strategy, |(d, eta_l, eta_n, kind, seed)| {
        const N: usize = 4000;
        let edge = Edge {
            r: 0,
            t: 1,
            kind,
            true_distance: d,
        };
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let errs: Vec<f64> = (0..N)
            .map(|_| {
                let m = match kind {
                    LinkKind::Los => sample_los(&edge, eta_l, &mut rng),
                    LinkKind::Nlos => sample_nlos(&edge, eta_l, eta_n, &mut rng),
                }
                .unwrap();
                m.raw - m.mu - d
            })
            .collect();
        let var = match kind {
            LinkKind::Los => (eta_l * d).powi(2),
            LinkKind::Nlos => (eta_l * eta_l + eta_n * eta_n) * d * d,
        };
        let (m, s2) = mean_var(&errs);
        let n = N as f64;
        prop_assert!(m.abs() <= 6.0 * (var / n).sqrt(), "mean {} var {}", m, var);
        // Fourth moment of exponential-plus-Gaussian is at most 9 sigma^4.
        prop_assert!((s2 - var).abs() <= 6.0 * var * (8.0 / n).sqrt(), "sample var {} vs {}", s2, var);
        Ok(())
    })
}

fn crlb_params() -> impl Strategy<Value = CrlbParams<f64>> {
    let scaling = prop_oneof![Just(NoiseScaling::Proportional), Just(NoiseScaling::Constant)];
    (0.01..0.5f64, 0.0..0.5f64, 0.0..=1.0f64, scaling).prop_map(|(eta_l, eta_n, g, scaling)| CrlbParams {
        eta_l,
        eta_n,
        g,
        scaling,
    })
}

pub fn crlb_psd(cases: u32) -> Result<(), String> {
    run(cases, (pt(), prop::collection::vec(pt(), 1..8), crlb_params()), |(x, anchors, params)| {
        prop_assume!(anchors.iter().all(|a| a.distance(&x) > 1e-3));
        let f = fim(&x, &anchors, &params).unwrap();
        prop_assert_eq!(f.at(0, 1), f.at(1, 0));
        // Eigenvalues of the 2x2 from trace and determinant.
        let (t, det) = (f.at(0, 0) + f.at(1, 1), f.at(0, 0) * f.at(1, 1) - f.at(0, 1) * f.at(1, 0));
        let disc = (t * t / 4.0 - det).max(0.0).sqrt();
        prop_assert!(t / 2.0 - disc >= -1e-12 * t.max(1.0), "eigenvalue {}", t / 2.0 - disc);
        Ok(())
    })
}

pub fn crlb_monotone(cases: u32) -> Result<(), String> {
    let strategy = (pt(), prop::collection::vec(pt(), 2..6), pt(), crlb_params());
    run(cases, strategy, |(x, anchors, extra, params)| {
        prop_assume!(anchors.iter().chain([&extra]).all(|a| a.distance(&x) > 1e-2));
        let before = crlb_at(&x, &anchors, &params).unwrap();
        let mut more = anchors.clone();
        more.push(extra);
        let after = crlb_at(&x, &more, &params).unwrap();
        prop_assert!(after <= before * (1.0 + 1e-9) || before.is_infinite(), "{} > {}", after, before);
        Ok(())
    })
}

pub fn deployment_determinism(cases: u32) -> Result<(), String> {
    let strategy = (any::<u64>(), 2usize..60, 0.05..1.0f64, 0.0..=1.0f64);
    run(cases, strategy, |(seed, nodes, frac, g)| {
        let config = NetworkConfig {
            nodes,
            anchor_fraction: frac,
            los_probability: g,
            ..NetworkConfig::table1_default()
        };
        let a = deploy_uniform(&config, seed).unwrap();
        let b = deploy_uniform(&config, seed).unwrap();
        prop_assert_eq!(a.to_json().unwrap(), b.to_json().unwrap());
        let ma = MeasurementSet::sample(&a, config.eta_l, config.eta_n, seed);
        let mb = MeasurementSet::sample(&b, config.eta_l, config.eta_n, seed);
        prop_assert_eq!(ma.to_csv(), mb.to_csv());
        Ok(())
    })
}

pub fn trial_determinism(cases: u32) -> Result<(), String> {
    run(cases, (any::<u64>(), method()), |(seed, method)| {
        let config = NetworkConfig {
            nodes: 10,
            ..NetworkConfig::table1_default()
        };
        let a = run_trial(&config, seed, method).unwrap();
        let b = run_trial(&config, seed, method).unwrap();
        let bits = |t: &TrialResult<f64>| -> Vec<u64> { t.nodes.iter().map(|n| n.error.to_bits()).collect() };
        prop_assert_eq!(bits(&a), bits(&b));
        prop_assert_eq!(a.unlocalizable, b.unlocalizable);
        Ok(())
    })
}
