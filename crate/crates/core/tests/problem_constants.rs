use sosp_core::operator::dense_spectral_norm;
use sosp_core::problems::{FiniteSumRegression, MatrixFactorization, QuarticDoubleWell};
use sosp_core::vector::norm;
use sosp_core::{Problem, RngState};

fn diff(a: &[f64], b: &[f64]) -> Vec<f64> {
    a.iter().zip(b).map(|(x, y)| x - y).collect()
}

fn random_point<P: Problem>(p: &P, rng: &mut RngState) -> Vec<f64> {
    let unit: Vec<f64> = (0..p.dim()).map(|_| rng.uniform()).collect();
    p.region_point(&unit)
}

/// Claimed L and M on 1000 random in-region pairs, plus `f >= f_bar`.
fn check_constants<P: Problem>(p: &P, seed: u64) {
    let mut rng = RngState::new(seed, 0);
    let c = p.constants();
    for _ in 0..1000 {
        let x = random_point(p, &mut rng);
        let y = random_point(p, &mut rng);
        assert!(p.in_region(&x) && p.in_region(&y));
        let dist = norm(&diff(&x, &y));
        let dg = norm(&diff(&p.gradient(&x), &p.gradient(&y)));
        assert!(dg <= c.lipschitz_grad * dist * (1.0 + 1e-9) + 1e-12, "L violated: {dg} > {} * {dist}", c.lipschitz_grad);
        let dh = dense_spectral_norm(&(p.dense_hessian(&x) - p.dense_hessian(&y)));
        assert!(dh <= c.lipschitz_hess * dist * (1.0 + 1e-9) + 1e-12, "M violated: {dh} > {} * {dist}", c.lipschitz_hess);
        assert!(p.value(&x) >= c.f_bar - 1e-12);
    }
}

#[test]
fn quartic_constants_hold_on_box() {
    check_constants(&QuarticDoubleWell::new(vec![1.0, 0.5, 2.0], 3.0).unwrap(), 1);
    check_constants(&QuarticDoubleWell::uniform(1, 1.0, 2.0).unwrap(), 2);
}

#[test]
fn factorization_constants_hold_on_spectral_ball() {
    let mut rng = RngState::new(3, 0);
    let p = MatrixFactorization::planted(6, 2, 2.0, 1.0, 8.0, &mut rng).unwrap();
    check_constants(&p, 4);
}

#[test]
fn regression_constants_hold_globally() {
    let mut rng = RngState::new(5, 0);
    let p = FiniteSumRegression::generate(200, 8, 0.5, &mut rng).unwrap();
    check_constants(&p, 6);
}

#[test]
fn quartic_lower_bound_is_attained() {
    let p = QuarticDoubleWell::new(vec![1.0, 4.0], 4.0).unwrap();
    assert_eq!(p.value(&[1.0, -2.0]), p.constants().f_bar);
}
