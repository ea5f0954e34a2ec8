use super::{bad, Problem, ProblemConstants, ProblemError};

/// `f(x) = sum_i (x_i^4 / 4 - b_i x_i^2 / 2)`.
///
/// The origin is a strict saddle with `lambda_min = -max b_i`; the minimizers
/// sit at `x_i = +-sqrt(b_i)`. Constants hold on the box `||x||_inf <= R`.
#[derive(Debug, Clone, PartialEq)]
pub struct QuarticDoubleWell {
    b: Vec<f64>,
    radius: f64,
}

impl QuarticDoubleWell {
    pub fn new(b: Vec<f64>, radius: f64) -> Result<Self, ProblemError> {
        if b.is_empty() {
            return Err(bad("b", "need at least one coordinate"));
        }
        if let Some(v) = b.iter().find(|v| !(**v > 0.0 && v.is_finite())) {
            return Err(bad("b", format!("entries must be positive, got {v}")));
        }
        let need = 2.0 * b.iter().fold(0.0_f64, |m, v| m.max(v.sqrt()));
        if !(radius >= need && radius.is_finite()) {
            return Err(bad("radius", format!("must be >= 2 max sqrt(b_i) = {need}, got {radius}")));
        }
        Ok(Self { b, radius })
    }

    /// All `b_i = b`.
    pub fn uniform(dim: usize, b: f64, radius: f64) -> Result<Self, ProblemError> {
        Self::new(vec![b; dim], radius)
    }

    pub fn radius(&self) -> f64 {
        self.radius
    }

    fn b_max(&self) -> f64 {
        self.b.iter().fold(0.0_f64, |m, v| m.max(*v))
    }
}

impl Problem for QuarticDoubleWell {
    fn dim(&self) -> usize {
        self.b.len()
    }

    fn value(&self, x: &[f64]) -> f64 {
        x.iter().zip(&self.b).map(|(x, b)| x.powi(4) / 4.0 - b * x * x / 2.0).sum()
    }

    fn gradient(&self, x: &[f64]) -> Vec<f64> {
        x.iter().zip(&self.b).map(|(x, b)| x.powi(3) - b * x).collect()
    }

    fn hvp(&self, x: &[f64], v: &[f64]) -> Vec<f64> {
        x.iter()
            .zip(&self.b)
            .zip(v)
            .map(|((x, b), v)| (3.0 * x * x - b) * v)
            .collect()
    }

    fn constants(&self) -> ProblemConstants {
        let r = self.radius;
        ProblemConstants {
            lipschitz_grad: 3.0 * r * r + self.b_max(),
            lipschitz_hess: 6.0 * r,
            f_bar: -self.b.iter().map(|b| b * b).sum::<f64>() / 4.0,
        }
    }

    fn in_region(&self, x: &[f64]) -> bool {
        x.iter().all(|v| v.abs() <= self.radius)
    }

    fn region_point(&self, unit: &[f64]) -> Vec<f64> {
        unit.iter().map(|u| (2.0 * u - 1.0) * self.radius).collect()
    }
}
