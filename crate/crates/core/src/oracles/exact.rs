use super::{GradientEstimate, HessianEstimate, OracleBundle, OracleError};
use crate::problems::{HessianAt, Problem};
use crate::rng::RngState;

/// `g = grad f(x)`, `H = hess f(x)`.
pub struct ExactOracle<'a, P> {
    problem: &'a P,
}

impl<'a, P: Problem> ExactOracle<'a, P> {
    pub fn new(problem: &'a P) -> Self {
        Self { problem }
    }
}

impl<P: Problem> OracleBundle for ExactOracle<'_, P> {
    fn dim(&self) -> usize {
        self.problem.dim()
    }

    fn gradient(&self, x: &[f64], _rng: &mut RngState) -> Result<GradientEstimate, OracleError> {
        Ok(GradientEstimate::exact(self.problem.gradient(x)))
    }

    fn hessian<'a>(&'a self, x: &[f64], _rng: &mut RngState) -> Result<HessianEstimate<'a>, OracleError> {
        Ok(HessianEstimate { op: Box::new(HessianAt::new(self.problem, x)), samples: None })
    }

    fn diagnostics(&self) -> Option<&dyn Problem> {
        Some(self.problem as &dyn Problem)
    }
}
