use serde::{Deserialize, Serialize};

use super::{GradientEstimate, HessianEstimate, OracleBundle, OracleError};
use crate::operator::{RankTwoPerturbed, SymmetricOperator};
use crate::problems::{HessianAt, Problem};
use crate::rng::RngState;
use crate::vector;

/// Direction of the injected gradient error.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum DirectionMode {
    #[default]
    OrthogonalToGradient,
    RandomUnit,
}

/// How much of the permitted oracle error to inject.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NoiseSpec {
    /// Fraction of the gradient allowance `max{eps_g, ||g||}/3`.
    pub grad_fraction: f64,
    /// Fraction of the Hessian allowance `2 eps_h / 9`.
    pub hess_fraction: f64,
    #[serde(default)]
    pub direction_mode: DirectionMode,
    /// Allows fractions above 1, which break the oracle contract.
    #[serde(default)]
    pub stress: bool,
}

impl NoiseSpec {
    /// Both fractions set to `fraction`, orthogonal direction.
    pub fn saturating(fraction: f64) -> Self {
        Self {
            grad_fraction: fraction,
            hess_fraction: fraction,
            direction_mode: DirectionMode::OrthogonalToGradient,
            stress: false,
        }
    }

    pub fn validate(&self) -> Result<(), OracleError> {
        for (field, value) in [("grad_fraction", self.grad_fraction), ("hess_fraction", self.hess_fraction)] {
            let ok = value >= 0.0 && value.is_finite() && (self.stress || value <= 1.0);
            if !ok {
                return Err(OracleError::NoiseFraction { field, value });
            }
        }
        Ok(())
    }

    /// Whether these settings stay inside the oracle contract.
    pub fn within_contract(&self) -> bool {
        self.grad_fraction <= 1.0 && self.hess_fraction <= 1.0
    }
}

/// Unit vector along which the error is injected.
fn error_direction(exact_g: &[f64], mode: DirectionMode, rng: &mut RngState) -> Vec<f64> {
    let d = exact_g.len();
    let gn = vector::norm(exact_g);
    if mode == DirectionMode::RandomUnit || gn == 0.0 {
        return rng.unit_vector(d);
    }
    if d == 1 {
        // no orthogonal complement; fall back to a random sign
        return vec![rng.rademacher()];
    }
    loop {
        let mut u = rng.gaussian_vec(d);
        let c = vector::dot(&u, exact_g) / (gn * gn);
        vector::axpy_in_place(-c, exact_g, &mut u);
        let n = vector::norm(&u);
        if n > 1e-8 {
            return u.into_iter().map(|v| v / n).collect();
        }
    }
}

/// `g = grad f + e` with `||e|| = r max{eps_g, ||g||}` exactly, where
/// `r = grad_fraction / 3`.
///
/// For a unit direction `u` and `c = grad f^T u` the large-gradient fixed
/// point is `t = [r^2 c + sqrt(r^4 c^2 + (1-r^2) r^2 ||grad f||^2)] / (1-r^2)`;
/// when `||grad f + t u|| < eps_g` the small-gradient value `t = r eps_g`
/// is used instead. Since `r ||grad f + t u|| - t` is strictly decreasing
/// exactly one branch is consistent.
pub fn adversarial_gradient(
    exact_g: &[f64],
    eps_g: f64,
    spec: &NoiseSpec,
    rng: &mut RngState,
) -> Result<Vec<f64>, OracleError> {
    spec.validate()?;
    if !(eps_g > 0.0 && eps_g.is_finite()) {
        return Err(OracleError::NotPositive { field: "eps_g", value: eps_g });
    }
    let r = spec.grad_fraction / 3.0;
    if r == 0.0 {
        return Ok(exact_g.to_vec());
    }
    let u = error_direction(exact_g, spec.direction_mode, rng);
    let gn = vector::norm(exact_g);
    let t = if r < 1.0 {
        let c = vector::dot(exact_g, &u);
        let r2 = r * r;
        let t_large = (r2 * c + (r2 * r2 * c * c + (1.0 - r2) * r2 * gn * gn).sqrt()) / (1.0 - r2);
        let mut g = exact_g.to_vec();
        vector::axpy_in_place(t_large, &u, &mut g);
        if vector::norm(&g) >= eps_g {
            t_large
        } else {
            r * eps_g
        }
    } else {
        // stress only: no consistent fixed point exists
        r * eps_g.max(gn)
    };
    let mut g = exact_g.to_vec();
    vector::axpy_in_place(t, &u, &mut g);
    if spec.within_contract() {
        let allowed = eps_g.max(vector::norm(&g)) / 3.0;
        if t > allowed * (1.0 + 1e-12) + 1e-15 {
            return Err(OracleError::GradientBound { error: t, allowed });
        }
    }
    Ok(g)
}

/// `H = hess f + c (2/9) eps_h (u u^T - w w^T)` with `u`, `w` orthonormal, so
/// `||H - hess f|| = c (2/9) eps_h` exactly. In dimension 1 the perturbation
/// is `+-c (2/9) eps_h`.
pub fn adversarial_hessian<'a, O: SymmetricOperator + 'a>(
    exact_h: O,
    eps_h: f64,
    spec: &NoiseSpec,
    rng: &mut RngState,
) -> Result<RankTwoPerturbed<O>, OracleError> {
    spec.validate()?;
    if !(eps_h > 0.0 && eps_h.is_finite()) {
        return Err(OracleError::NotPositive { field: "eps_h", value: eps_h });
    }
    let d = exact_h.dim();
    let coef = spec.hess_fraction * 2.0 * eps_h / 9.0;
    let (u, w) = if d == 1 {
        if rng.rademacher() > 0.0 {
            (vec![1.0], vec![0.0])
        } else {
            (vec![0.0], vec![1.0])
        }
    } else {
        let u = rng.unit_vector(d);
        let mut w = rng.gaussian_vec(d);
        loop {
            let c = vector::dot(&w, &u);
            vector::axpy_in_place(-c, &u, &mut w);
            let n = vector::norm(&w);
            if n > 1e-8 {
                w.iter_mut().for_each(|v| *v /= n);
                break;
            }
            w = rng.gaussian_vec(d);
        }
        (u, w)
    };
    Ok(RankTwoPerturbed::new(exact_h, coef, u, w))
}

/// Exact oracles with worst-case admissible errors injected.
pub struct AdversarialOracle<'a, P> {
    problem: &'a P,
    eps_g: f64,
    eps_h: f64,
    spec: NoiseSpec,
}

impl<'a, P: Problem> AdversarialOracle<'a, P> {
    pub fn new(problem: &'a P, eps_g: f64, eps_h: f64, spec: NoiseSpec) -> Result<Self, OracleError> {
        spec.validate()?;
        for (field, value) in [("eps_g", eps_g), ("eps_h", eps_h)] {
            if !(value > 0.0 && value.is_finite()) {
                return Err(OracleError::NotPositive { field, value });
            }
        }
        Ok(Self { problem, eps_g, eps_h, spec })
    }

    pub fn spec(&self) -> &NoiseSpec {
        &self.spec
    }
}

impl<P: Problem> OracleBundle for AdversarialOracle<'_, P> {
    fn dim(&self) -> usize {
        self.problem.dim()
    }

    fn gradient(&self, x: &[f64], rng: &mut RngState) -> Result<GradientEstimate, OracleError> {
        let g = adversarial_gradient(&self.problem.gradient(x), self.eps_g, &self.spec, rng)?;
        Ok(GradientEstimate::exact(g))
    }

    fn hessian<'a>(&'a self, x: &[f64], rng: &mut RngState) -> Result<HessianEstimate<'a>, OracleError> {
        let op = adversarial_hessian(HessianAt::new(self.problem, x), self.eps_h, &self.spec, rng)?;
        Ok(HessianEstimate { op: Box::new(op), samples: None })
    }

    fn diagnostics(&self) -> Option<&dyn Problem> {
        Some(self.problem as &dyn Problem)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::operator::{dense_eigenvalues, dense_spectral_norm, to_dense, DenseSymmetric};
    use proptest::prelude::*;

    fn err(g: &[f64], exact: &[f64]) -> f64 {
        let e: Vec<f64> = g.iter().zip(exact).map(|(a, b)| a - b).collect();
        vector::norm(&e)
    }

    #[test]
    fn zero_fraction_is_exact() {
        let mut rng = RngState::new(1, 0);
        let spec = NoiseSpec::saturating(0.0);
        assert_eq!(adversarial_gradient(&[1.0, -2.0], 0.3, &spec, &mut rng).unwrap(), vec![1.0, -2.0]);
        let h = adversarial_hessian(DenseSymmetric::diagonal(&[1.0, 2.0]), 0.9, &spec, &mut rng).unwrap();
        assert_eq!(dense_eigenvalues(&to_dense(&h)), vec![1.0, 2.0]);
    }

    #[test]
    fn small_gradient_branch() {
        let mut rng = RngState::new(2, 0);
        let spec = NoiseSpec::saturating(1.0);
        let g = adversarial_gradient(&[0.0, 0.0, 0.0], 0.3, &spec, &mut rng).unwrap();
        assert!((vector::norm(&g) - 0.1).abs() < 1e-15);
    }

    #[test]
    fn large_gradient_branch_hits_relative_bound() {
        let mut rng = RngState::new(3, 0);
        let spec = NoiseSpec::saturating(1.0);
        let exact = [3.0, 0.0];
        let g = adversarial_gradient(&exact, 0.3, &spec, &mut rng).unwrap();
        let e = err(&g, &exact);
        assert!((e - 1.0 / (8.0_f64 / 9.0).sqrt()).abs() < 1e-12);
        assert!((vector::norm(&g) - (9.0_f64 + 1.125).sqrt()).abs() < 1e-12);
        assert!((e / vector::norm(&g) - 1.0 / 3.0).abs() < 1e-12);
    }

    #[test]
    fn one_dimensional_gradient_noise() {
        let mut rng = RngState::new(4, 0);
        let spec = NoiseSpec::saturating(1.0);
        for _ in 0..50 {
            let g = adversarial_gradient(&[0.5], 0.1, &spec, &mut rng).unwrap();
            let e = (g[0] - 0.5).abs();
            assert!((e - 0.1_f64.max(g[0].abs()) / 3.0).abs() < 1e-12);
        }
    }

    #[test]
    fn hessian_perturbation_norm() {
        let mut rng = RngState::new(5, 0);
        let spec = NoiseSpec::saturating(1.0);
        let h = adversarial_hessian(DenseSymmetric::diagonal(&[0.0, 0.0]), 0.9, &spec, &mut rng).unwrap();
        let m = to_dense(&h);
        assert!((dense_spectral_norm(&m) - 0.2).abs() < 1e-12);
        let base = [-1.0, 0.5, 2.0];
        let h = adversarial_hessian(DenseSymmetric::diagonal(&base), 0.9, &spec, &mut rng).unwrap();
        let lmin = dense_eigenvalues(&to_dense(&h))[0];
        assert!((-1.2 - 1e-12..=-0.8 + 1e-12).contains(&lmin));
        let h1 = adversarial_hessian(DenseSymmetric::diagonal(&[3.0]), 0.9, &spec, &mut rng).unwrap();
        assert!(((to_dense(&h1)[(0, 0)] - 3.0).abs() - 0.2).abs() < 1e-12);
    }

    #[test]
    fn fractions_above_one_need_stress_mode() {
        let mut rng = RngState::new(6, 0);
        let mut spec = NoiseSpec::saturating(1.5);
        assert!(matches!(
            adversarial_gradient(&[1.0], 0.1, &spec, &mut rng),
            Err(OracleError::NoiseFraction { .. })
        ));
        spec.stress = true;
        assert!(adversarial_gradient(&[1.0, 0.0], 0.1, &spec, &mut rng).is_ok());
        assert!(!spec.within_contract());
    }

    proptest! {
        #[test]
        fn contract_is_met_with_equality(
            exact in prop::collection::vec(-5.0..5.0f64, 1..6),
            frac in 0.0..=1.0f64,
            eps_g in 0.01..2.0f64,
            random in any::<bool>(),
            seed in any::<u64>(),
        ) {
            let mut rng = RngState::new(seed, 0);
            let spec = NoiseSpec {
                grad_fraction: frac,
                hess_fraction: frac,
                direction_mode: if random { DirectionMode::RandomUnit } else { DirectionMode::OrthogonalToGradient },
                stress: false,
            };
            let g = adversarial_gradient(&exact, eps_g, &spec, &mut rng).unwrap();
            let e = err(&g, &exact);
            let target = frac / 3.0 * eps_g.max(vector::norm(&g));
            prop_assert!((e - target).abs() <= 1e-9 * target.max(1.0));
        }
    }
}
