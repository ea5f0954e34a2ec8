use sosp_core::operator::{dense_spectral_norm, to_dense};
use sosp_core::oracles::{subsampled_gradient, subsampled_hessian, SubsampleMode};
use sosp_core::problems::FiniteSumRegression;
use sosp_core::vector::norm;
use sosp_core::{FiniteSum, Problem, RngState};

#[test]
fn gradient_batches_meet_relative_bound() {
    let mut rng = RngState::new(10, 0);
    let p = FiniteSumRegression::generate(300, 6, 0.5, &mut rng).unwrap();
    let x: Vec<f64> = rng.gaussian_vec(6);
    let exact = p.gradient(&x);
    let (eps_g, xi) = (0.05, 0.05);
    let trials = 1000;
    let mut ok = 0;
    for t in 0..trials {
        let mut r = RngState::new(11, t);
        let est = subsampled_gradient(&p, &x, eps_g, xi, SubsampleMode::OracleInformed, &mut r).unwrap();
        let e: Vec<f64> = est.g.iter().zip(&exact).map(|(a, b)| a - b).collect();
        if norm(&e) <= eps_g.max(norm(&est.g)) / 3.0 {
            ok += 1;
        }
    }
    assert!(ok as f64 / trials as f64 >= 1.0 - xi - 0.01, "{ok}/{trials}");
}

#[test]
fn hessian_batches_meet_spectral_bound() {
    let mut rng = RngState::new(12, 0);
    let p = FiniteSumRegression::generate(300, 6, 0.5, &mut rng).unwrap();
    let x: Vec<f64> = rng.gaussian_vec(6);
    let exact = p.dense_hessian(&x);
    let (eps_h, xi) = (1.0, 0.05);
    let trials = 300;
    let mut ok = 0;
    for t in 0..trials {
        let mut r = RngState::new(13, t);
        let (h, size) = subsampled_hessian(&p, &x, eps_h, xi, &mut r).unwrap();
        assert!(size > 0);
        if dense_spectral_norm(&(to_dense(&h) - &exact)) <= 2.0 * eps_h / 9.0 {
            ok += 1;
        }
    }
    assert!(ok as f64 / trials as f64 >= 1.0 - xi - 0.02, "{ok}/{trials}");
}

#[test]
fn sampled_hessian_is_symmetric() {
    let mut rng = RngState::new(14, 0);
    let p = FiniteSumRegression::generate(40, 5, 0.7, &mut rng).unwrap();
    let x = rng.gaussian_vec(5);
    let (h, _) = subsampled_hessian(&p, &x, 5.0, 0.2, &mut rng).unwrap();
    let m = to_dense(&h);
    assert!((&m - m.transpose()).amax() < 1e-12);
    assert!(p.n_samples() == 40);
}
