use proptest::prelude::*;
use sosp_core::oracles::{AdversarialOracle, DirectionMode, ExactOracle, NoiseSpec, SubsampleMode, SubsampledOracle};
use sosp_core::problems::{FiniteSumRegression, MatrixFactorization, QuarticDoubleWell};
use sosp_core::theory::{gd_decrease, nc_decrease};
use sosp_core::{certify, run, DenseVector, OracleBundle, Problem, RngState, RunResult, StepKind, ToleranceConfig};

fn config_for<P: Problem>(p: &P, eps_g: f64, eps_h: f64) -> ToleranceConfig {
    let c = p.constants();
    let mut cfg = ToleranceConfig::new(eps_g, eps_h, c.lipschitz_grad, c.lipschitz_hess);
    cfg.f_bar = c.f_bar;
    cfg.max_iter = 200_000;
    cfg
}

/// Trace-level invariants that hold for any run with valid oracles.
fn check_trace(r: &RunResult, cfg: &ToleranceConfig) {
    for rec in &r.trace {
        match rec.kind {
            StepKind::GradientStep => {
                assert_eq!(rec.hvp_count, 0);
                assert!(rec.lambda_hat.is_none());
                assert!(rec.grad_norm_est > cfg.eps_g);
            }
            StepKind::NegativeCurvatureStep => {
                assert!(rec.grad_norm_est <= cfg.eps_g);
                assert!(rec.lambda_hat.unwrap() < -cfg.eps_h);
                let a = rec.alpha_k.unwrap();
                assert!(a >= cfg.eps_h && a <= cfg.alpha.min(rec.lambda_hat.unwrap().abs()));
            }
            StepKind::Terminated => {
                assert!(rec.grad_norm_est <= cfg.eps_g);
                assert!(rec.lambda_hat.unwrap() >= -cfg.eps_h);
            }
        }
    }
    if r.terminated {
        assert_eq!(r.iterations, r.gd_count + r.nc_count);
        assert_eq!(r.trace.len() as u64, r.iterations + 1);
        assert_eq!(r.trace.last().unwrap().kind, StepKind::Terminated);
    }
    assert_eq!(r.total_hvps, r.trace.iter().map(|t| t.hvp_count).sum::<u64>());
}

fn gd_violations(r: &RunResult, cfg: &ToleranceConfig) -> usize {
    let f = r.f_path().unwrap();
    r.trace
        .iter()
        .filter(|t| t.kind == StepKind::GradientStep)
        .filter(|t| {
            let k = t.k as usize;
            f[k + 1] > f[k] - gd_decrease(cfg.eps_g, cfg.lipschitz_grad) + 1e-10
        })
        .count()
}

fn run_and_certify<P: Problem, O: OracleBundle>(p: &P, o: &O, cfg: &ToleranceConfig, x0: Vec<f64>, seed: u64) {
    let mut rng = RngState::new(seed, 0);
    let r = run(&DenseVector::new(x0).unwrap(), o, cfg, &mut rng).unwrap();
    assert!(r.terminated, "seed {seed} did not terminate");
    check_trace(&r, cfg);
    assert_eq!(gd_violations(&r, cfg), 0);
    let c = certify(p, r.final_point.as_slice(), cfg.eps_g, cfg.eps_h);
    assert!(c.passed(), "seed {seed}: {c:?}");
}

#[test]
fn quartic_adversarial_runs_certify() {
    let p = QuarticDoubleWell::uniform(5, 1.0, 2.0).unwrap();
    let cfg = config_for(&p, 0.1, 0.1);
    for seed in 0..20 {
        let spec = NoiseSpec { direction_mode: DirectionMode::RandomUnit, ..NoiseSpec::saturating(1.0) };
        let o = AdversarialOracle::new(&p, cfg.eps_g, cfg.eps_h, spec).unwrap();
        run_and_certify(&p, &o, &cfg, vec![0.0; 5], seed);
        run_and_certify(&p, &ExactOracle::new(&p), &cfg, vec![0.0; 5], seed);
    }
}

#[test]
fn factorization_runs_certify() {
    let mut rng = RngState::new(40, 0);
    let p = MatrixFactorization::planted(4, 2, 2.0, 1.0, 8.0, &mut rng).unwrap();
    let (eg, eh) = (1.0 / 24.0, 1.0 / 3.0);
    let cfg = config_for(&p, eg, eh);
    for seed in 0..5 {
        let o = AdversarialOracle::new(&p, eg, eh, NoiseSpec::saturating(1.0)).unwrap();
        let mut r = RngState::new(seed, 1);
        let x0: Vec<f64> = r.gaussian_vec(8).into_iter().map(|v| 1e-3 * v).collect();
        run_and_certify(&p, &o, &cfg, x0, seed);
    }
}

#[test]
fn subsampled_runs_terminate() {
    let mut rng = RngState::new(41, 0);
    let p = FiniteSumRegression::generate(100, 4, 0.5, &mut rng).unwrap();
    let mut cfg = config_for(&p, 0.1, 0.1);
    cfg.xi = 0.1;
    let o = SubsampledOracle::new(&p, cfg.eps_g, cfg.eps_h, cfg.xi, SubsampleMode::Practical).unwrap();
    let r = run(&DenseVector::zeros(4).unwrap(), &o, &cfg, &mut RngState::new(2, 0)).unwrap();
    assert!(r.terminated);
    check_trace(&r, &cfg);
    assert!(r.trace.iter().all(|t| t.grad_samples.is_some()));
}

#[test]
fn convex_regression_stops_at_first_small_gradient() {
    let mut rng = RngState::new(42, 0);
    let p = FiniteSumRegression::generate(80, 5, 0.0, &mut rng).unwrap();
    let cfg = config_for(&p, 0.05, 0.05);
    let r = run(&DenseVector::zeros(5).unwrap(), &ExactOracle::new(&p), &cfg, &mut rng).unwrap();
    assert!(r.terminated);
    assert_eq!(r.nc_count, 0);
    assert!(r.trace.last().unwrap().lambda_hat.unwrap() >= -cfg.eps_h);
}

#[test]
fn negative_curvature_steps_descend_on_average() {
    let p = QuarticDoubleWell::uniform(3, 1.0, 2.0).unwrap();
    let cfg = config_for(&p, 0.1, 0.1);
    let o = ExactOracle::new(&p);
    let mut deltas = Vec::new();
    for seed in 0..200 {
        let r = run(&DenseVector::zeros(3).unwrap(), &o, &cfg, &mut RngState::new(seed, 0)).unwrap();
        let f = r.f_path().unwrap();
        for t in r.trace.iter().filter(|t| t.kind == StepKind::NegativeCurvatureStep) {
            deltas.push(f[t.k as usize + 1] - f[t.k as usize]);
        }
    }
    let n = deltas.len() as f64;
    assert!(n >= 200.0);
    let mean = deltas.iter().sum::<f64>() / n;
    let var = deltas.iter().map(|d| (d - mean).powi(2)).sum::<f64>() / (n - 1.0);
    assert!(mean <= -nc_decrease(cfg.eps_h, cfg.lipschitz_hess) + 3.0 * (var / n).sqrt());
}

#[test]
fn runs_are_reproducible() {
    let p = QuarticDoubleWell::uniform(4, 1.0, 2.0).unwrap();
    let cfg = config_for(&p, 0.1, 0.1);
    let o = AdversarialOracle::new(&p, 0.1, 0.1, NoiseSpec::saturating(1.0)).unwrap();
    let a = run(&DenseVector::zeros(4).unwrap(), &o, &cfg, &mut RngState::new(9, 3)).unwrap();
    let b = run(&DenseVector::zeros(4).unwrap(), &o, &cfg, &mut RngState::new(9, 3)).unwrap();
    assert_eq!(a, b);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn quartic_certificate_from_any_start(
        x0 in prop::collection::vec(-1.9..1.9f64, 1..5),
        frac in 0.0..=1.0f64,
        seed in any::<u64>(),
    ) {
        let d = x0.len();
        let p = QuarticDoubleWell::uniform(d, 1.0, 2.0).unwrap();
        let cfg = config_for(&p, 0.1, 0.1);
        let o = AdversarialOracle::new(&p, cfg.eps_g, cfg.eps_h, NoiseSpec::saturating(frac)).unwrap();
        let r = run(&DenseVector::new(x0).unwrap(), &o, &cfg, &mut RngState::new(seed, 0)).unwrap();
        prop_assert!(r.terminated);
        check_trace(&r, &cfg);
        prop_assert_eq!(gd_violations(&r, &cfg), 0);
        prop_assert!(certify(&p, r.final_point.as_slice(), cfg.eps_g, cfg.eps_h).passed());
    }
}
