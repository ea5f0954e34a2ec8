use serde::{Deserialize, Serialize};

use super::{GradientEstimate, HessianEstimate, OracleBundle, OracleError};
use crate::operator::SymmetricOperator;
use crate::problems::{FiniteSum, Problem};
use crate::rng::RngState;
use crate::theory;
use crate::vector;

/// Denominator `D` of the gradient batch size.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum SubsampleMode {
    /// `D = max{eps_g, ||grad f(x)||}`. Reads the exact gradient norm, so it
    /// is only meaningful for validation.
    OracleInformed,
    /// `D = eps_g`.
    #[default]
    Practical,
}

/// Multiplicities of `draws` uniform with-replacement picks from `0..n`, as
/// `(index, count)` pairs with nonzero counts in increasing index order.
///
/// Small batches are drawn one index at a time; large ones go through a
/// sequential-binomial multinomial, which has the same distribution.
pub fn sample_counts(n: usize, draws: u64, rng: &mut RngState) -> Vec<(usize, u64)> {
    assert!(n > 0, "empty population");
    let mut counts = vec![0_u64; n];
    if draws <= 8 * n as u64 {
        for _ in 0..draws {
            counts[rng.index(n)] += 1;
        }
    } else {
        let mut remaining = draws;
        for (i, c) in counts.iter_mut().enumerate().take(n - 1) {
            if remaining == 0 {
                break;
            }
            let k = rng.binomial(remaining, 1.0 / (n - i) as f64);
            *c = k;
            remaining -= k;
        }
        counts[n - 1] += remaining;
    }
    counts.into_iter().enumerate().filter(|(_, c)| *c > 0).collect()
}

fn check_bound(field: &'static str, value: f64) -> Result<f64, OracleError> {
    if value > 0.0 && value.is_finite() {
        Ok(value)
    } else {
        Err(OracleError::NotPositive { field, value })
    }
}

/// Mean of `|S_g| = ceil(16 (1 + sqrt(8 ln(1/xi)))^2 (G(x)/D)^2)` sampled
/// component gradients.
pub fn subsampled_gradient<P: FiniteSum + ?Sized>(
    problem: &P,
    x: &[f64],
    eps_g: f64,
    xi: f64,
    mode: SubsampleMode,
    rng: &mut RngState,
) -> Result<GradientEstimate, OracleError> {
    let g_bound = check_bound("G(x)", problem.grad_bound(x))?;
    let denom = match mode {
        SubsampleMode::Practical => eps_g,
        SubsampleMode::OracleInformed => eps_g.max(vector::norm(&problem.gradient(x))),
    };
    let size = theory::grad_sample_size(g_bound, denom, xi)?;
    let n = problem.n_samples();
    let mut g = vec![0.0; problem.dim()];
    for (i, c) in sample_counts(n, size, rng) {
        problem.add_sample_gradient(i, x, c as f64 / size as f64, &mut g);
    }
    Ok(GradientEstimate { g, samples: Some(size), oversized: size > 1000 * n as u64 })
}

/// Mean of sampled component Hessians, as an operator.
pub struct SampledHessian<'a, P: ?Sized> {
    problem: &'a P,
    x: Vec<f64>,
    weights: Vec<(usize, f64)>,
}

impl<P: FiniteSum + ?Sized> SymmetricOperator for SampledHessian<'_, P> {
    fn dim(&self) -> usize {
        self.problem.dim()
    }

    fn apply(&self, v: &[f64], out: &mut [f64]) {
        out.iter_mut().for_each(|o| *o = 0.0);
        for &(i, w) in &self.weights {
            self.problem.add_sample_hvp(i, &self.x, v, w, out);
        }
    }
}

/// `|S_H| = ceil(484 ln(2d/xi) (K(x)/eps_h)^2)` sampled component Hessians.
pub fn subsampled_hessian<'a, P: FiniteSum + ?Sized>(
    problem: &'a P,
    x: &[f64],
    eps_h: f64,
    xi: f64,
    rng: &mut RngState,
) -> Result<(SampledHessian<'a, P>, u64), OracleError> {
    let k_bound = check_bound("K(x)", problem.hess_bound(x))?;
    let size = theory::hess_sample_size(k_bound, problem.dim(), eps_h, xi)?;
    let weights = sample_counts(problem.n_samples(), size, rng)
        .into_iter()
        .map(|(i, c)| (i, c as f64 / size as f64))
        .collect();
    Ok((SampledHessian { problem, x: x.to_vec(), weights }, size))
}

/// Finite-sum oracles built from uniform with-replacement subsampling.
pub struct SubsampledOracle<'a, P> {
    problem: &'a P,
    eps_g: f64,
    eps_h: f64,
    xi: f64,
    mode: SubsampleMode,
}

impl<'a, P: FiniteSum> SubsampledOracle<'a, P> {
    pub fn new(problem: &'a P, eps_g: f64, eps_h: f64, xi: f64, mode: SubsampleMode) -> Result<Self, OracleError> {
        check_bound("eps_g", eps_g)?;
        check_bound("eps_h", eps_h)?;
        if !(xi > 0.0 && xi < 1.0) {
            return Err(OracleError::Theory(theory::TheoryError::NotProbability { name: "xi", value: xi }));
        }
        Ok(Self { problem, eps_g, eps_h, xi, mode })
    }
}

impl<P: FiniteSum> OracleBundle for SubsampledOracle<'_, P> {
    fn dim(&self) -> usize {
        self.problem.dim()
    }

    fn gradient(&self, x: &[f64], rng: &mut RngState) -> Result<GradientEstimate, OracleError> {
        subsampled_gradient(self.problem, x, self.eps_g, self.xi, self.mode, rng)
    }

    fn hessian<'a>(&'a self, x: &[f64], rng: &mut RngState) -> Result<HessianEstimate<'a>, OracleError> {
        let (op, size) = subsampled_hessian(self.problem, x, self.eps_h, self.xi, rng)?;
        Ok(HessianEstimate { op: Box::new(op), samples: Some(size) })
    }

    fn diagnostics(&self) -> Option<&dyn Problem> {
        Some(self.problem as &dyn Problem)
    }
}
