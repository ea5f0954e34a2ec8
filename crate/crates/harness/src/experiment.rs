use rayon::prelude::*;
use sosp_core::oracles::{AdversarialOracle, ExactOracle, SubsampledOracle};
use sosp_core::problems::{FiniteSumRegression, MatrixFactorization, QuarticDoubleWell};
use sosp_core::theory::{self, BoundInputs, BoundReport};
use sosp_core::{
    certify, run, DenseVector, FiniteSum, IterationRecord, OracleBundle, Problem, RngState, RunResult, StepKind,
    ToleranceConfig,
};

use crate::config::{ExperimentConfig, OracleConfig, ProblemConfig};
use crate::summary::{EnsembleSummary, SeedRow};
use crate::HarnessError;

/// Ceiling on the default iteration budget. The high-probability bound `n`
/// is astronomically loose at small tolerances.
pub const MAX_ITER_CEILING: u64 = 10_000_000;

pub enum BuiltProblem {
    Quartic(QuarticDoubleWell),
    Factorization(MatrixFactorization),
    Regression(FiniteSumRegression),
}

impl BuiltProblem {
    pub fn as_problem(&self) -> &dyn Problem {
        match self {
            BuiltProblem::Quartic(p) => p,
            BuiltProblem::Factorization(p) => p,
            BuiltProblem::Regression(p) => p,
        }
    }
}

fn build_err(field: &str, e: impl ToString) -> HarnessError {
    HarnessError::Config { field: field.to_string(), message: e.to_string() }
}

/// A validated config with its problem instantiated and tolerances resolved.
pub struct Experiment {
    pub config: ExperimentConfig,
    pub problem: BuiltProblem,
    pub tolerance: ToleranceConfig,
    base_start: Vec<f64>,
}

impl Experiment {
    pub fn build(config: &ExperimentConfig) -> Result<Self, HarnessError> {
        config.validate()?;
        let problem = match &config.problem {
            ProblemConfig::Quartic { dim, b, radius } => {
                BuiltProblem::Quartic(QuarticDoubleWell::uniform(*dim, *b, *radius).map_err(|e| build_err("problem", e))?)
            }
            ProblemConfig::MatrixFactorization { rows, rank, sigma1, sigma_r, gamma, data_seed } => {
                let mut rng = RngState::new(*data_seed, 0);
                let gamma = gamma.unwrap_or(4.0 * sigma1);
                BuiltProblem::Factorization(
                    MatrixFactorization::planted(*rows, *rank, *sigma1, *sigma_r, gamma, &mut rng)
                        .map_err(|e| build_err("problem", e))?,
                )
            }
            ProblemConfig::Regression { samples, dim, lambda, data_seed } => {
                let mut rng = RngState::new(*data_seed, 0);
                BuiltProblem::Regression(
                    FiniteSumRegression::generate(*samples, *dim, *lambda, &mut rng)
                        .map_err(|e| build_err("problem", e))?,
                )
            }
        };
        let p = problem.as_problem();
        let constants = p.constants();
        let base_start = match &config.start.point {
            Some(x) => x.clone(),
            None => vec![config.start.value; p.dim()],
        };

        let t = &config.tolerance;
        let eps_h = match t.preset {
            Some(regime) => {
                theory::coupling_preset(regime, t.eps_g, constants.lipschitz_grad, constants.lipschitz_hess)
                    .map_err(|e| build_err("tolerance.preset", e))?
                    .1
            }
            None => t.eps_h,
        };
        let mut tol = ToleranceConfig::new(t.eps_g, eps_h, constants.lipschitz_grad, constants.lipschitz_hess);
        tol.alpha = t.alpha.unwrap_or(eps_h);
        tol.f_bar = constants.f_bar;
        tol.delta = t.delta;
        tol.xi = t.xi;
        tol.eta = t.eta;
        tol.step_policy = t.step_policy;
        tol.sign_policy = t.sign_policy;
        tol.max_iter = match t.max_iter {
            Some(m) => m,
            None => {
                let n = theory::high_prob_iters(p.value(&base_start), &tol)
                    .map_err(|e| build_err("tolerance", e))?
                    .n;
                (10.0 * n).ceil().min(MAX_ITER_CEILING as f64) as u64
            }
        };
        tol.validate().map_err(|e| build_err("tolerance", e))?;
        Ok(Self { config: config.clone(), problem, tolerance: tol, base_start })
    }

    pub fn problem(&self) -> &dyn Problem {
        self.problem.as_problem()
    }

    /// `x0` for one seed: the configured start plus its own perturbation.
    pub fn start(&self, seed_index: u64) -> Vec<f64> {
        let mut x = self.base_start.clone();
        let s = self.config.start.perturb;
        if s > 0.0 {
            let mut rng = RngState::new(self.config.run.base_seed, seed_index).fork(1);
            let noise = rng.gaussian_vec(x.len());
            for (xi, z) in x.iter_mut().zip(noise) {
                *xi += s * z;
            }
        }
        x
    }

    pub fn bound_report(&self) -> Result<BoundReport, HarnessError> {
        let p = self.problem();
        let x0 = &self.base_start;
        let (g, k) = match &self.problem {
            BuiltProblem::Regression(r) => (r.grad_bound(x0), r.hess_bound(x0)),
            _ => (1.0, 1.0),
        };
        let inputs = BoundInputs {
            f0: p.value(x0),
            dim: p.dim(),
            hess_norm: p.hessian_norm_bound() + 2.0 * self.tolerance.eps_h / 9.0,
            grad_bound: g,
            hess_bound: k,
        };
        theory::bound_report(&self.tolerance, &inputs).map_err(|e| build_err("tolerance", e))
    }

    pub fn bundle(&self) -> Result<Box<dyn OracleBundle + '_>, HarnessError> {
        fn simple<'a, P: Problem>(
            p: &'a P,
            oracle: &OracleConfig,
            tol: &ToleranceConfig,
        ) -> Result<Box<dyn OracleBundle + 'a>, HarnessError> {
            match oracle {
                OracleConfig::Exact => Ok(Box::new(ExactOracle::new(p))),
                OracleConfig::Adversarial { .. } => {
                    let spec = oracle.noise_spec().expect("adversarial");
                    Ok(Box::new(
                        AdversarialOracle::new(p, tol.eps_g, tol.eps_h, spec).map_err(|e| build_err("oracle", e))?,
                    ))
                }
                OracleConfig::Subsampled { .. } => Err(build_err("oracle.mode", "subsampling needs a finite-sum problem")),
            }
        }
        let tol = &self.tolerance;
        let oracle = &self.config.oracle;
        match (&self.problem, oracle) {
            (BuiltProblem::Regression(p), OracleConfig::Subsampled { sampling }) => Ok(Box::new(
                SubsampledOracle::new(p, tol.eps_g, tol.eps_h, tol.xi, *sampling).map_err(|e| build_err("oracle", e))?,
            )),
            (BuiltProblem::Quartic(p), o) => simple(p, o, tol),
            (BuiltProblem::Factorization(p), o) => simple(p, o, tol),
            (BuiltProblem::Regression(p), o) => simple(p, o, tol),
        }
    }

    /// Runs one seed. Optimizer errors mark the row failed instead of
    /// aborting the ensemble.
    pub fn run_seed(&self, bundle: &dyn OracleBundle, seed_index: u64) -> (SeedRow, Vec<IterationRecord>) {
        let x0 = self.start(seed_index);
        let p = self.problem();
        let f0 = p.value(&x0);
        let mut rng = RngState::new(self.config.run.base_seed, seed_index);
        let outcome = DenseVector::new(x0)
            .map_err(|e| e.to_string())
            .and_then(|x0| run(&x0, bundle, &self.tolerance, &mut rng).map_err(|e| e.to_string()));
        match outcome {
            Ok(result) => {
                let row = self.row(seed_index, f0, &result);
                (row, result.trace)
            }
            Err(message) => (SeedRow::failed(seed_index, f0, message), Vec::new()),
        }
    }

    fn row(&self, seed_index: u64, f0: f64, r: &RunResult) -> SeedRow {
        let p = self.problem();
        let tol = &self.tolerance;
        let cert = certify(p, r.final_point.as_slice(), tol.eps_g, tol.eps_h);
        let bounds = theory::c_eps(tol.eps_g, tol.eps_h, tol.lipschitz_grad, tol.lipschitz_hess)
            .and_then(|c| theory::expected_iter_bound(f0, tol.f_bar, c))
            .and_then(|e| theory::high_prob_iters(f0, tol).map(|h| (e, h.n)))
            .ok();

        let f = r.f_path().unwrap_or_default();
        let gd_min = theory::gd_decrease(tol.eps_g, tol.lipschitz_grad);
        let mut gd_violations = 0;
        let mut first_gd_violation = None;
        let (mut nc_count, mut nc_mean, mut nc_m2) = (0_u64, 0.0, 0.0);
        for rec in &r.trace {
            let k = rec.k as usize;
            if k + 1 >= f.len() {
                continue;
            }
            let delta = f[k + 1] - f[k];
            match rec.kind {
                StepKind::GradientStep if delta > -gd_min + 1e-10 => {
                    gd_violations += 1;
                    first_gd_violation.get_or_insert(rec.k);
                }
                StepKind::NegativeCurvatureStep => {
                    nc_count += 1;
                    let d = delta - nc_mean;
                    nc_mean += d / nc_count as f64;
                    nc_m2 += d * (delta - nc_mean);
                }
                _ => {}
            }
        }

        SeedRow {
            seed_index,
            failed: false,
            error: None,
            terminated: r.terminated,
            t: r.iterations,
            gd_steps: r.gd_count,
            nc_steps: r.nc_count,
            grad_evals: r.total_grad_evals,
            hvps: r.total_hvps,
            f0,
            f_final: r.final_f,
            grad_norm: cert.grad_norm,
            lambda_min: cert.lambda_min,
            cert_grad_ok: cert.grad_ok,
            cert_curv_ok: cert.curvature_ok,
            expected_bound: bounds.map(|b| b.0),
            n_bound: bounds.map(|b| b.1),
            gd_violations,
            first_gd_violation,
            nc_count,
            nc_mean,
            nc_m2,
            region_exits: r.region_exits,
            first_region_exit: r.first_region_exit,
        }
    }
}

pub struct EnsembleOutput {
    pub summary: EnsembleSummary,
    /// Per-seed traces, indexed like `summary.rows`.
    pub traces: Vec<Vec<IterationRecord>>,
}

/// Runs every seed of `config` on `config.run.workers` threads. Results are
/// merged by seed index, so the output does not depend on the worker count.
pub fn run_ensemble(config: &ExperimentConfig) -> Result<EnsembleOutput, HarnessError> {
    let exp = Experiment::build(config)?;
    let bundle = exp.bundle()?;
    let bounds = exp.bound_report()?;
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(config.run.workers)
        .build()
        .map_err(|e| HarnessError::Pool(e.to_string()))?;
    let results: Vec<(SeedRow, Vec<IterationRecord>)> =
        pool.install(|| (0..config.run.seeds).into_par_iter().map(|i| exp.run_seed(bundle.as_ref(), i)).collect());
    let (rows, traces): (Vec<_>, Vec<_>) = results.into_iter().unzip();
    let summary = EnsembleSummary::new(config.clone(), &exp.tolerance, bounds, rows);
    Ok(EnsembleOutput { summary, traces })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn quartic_local_minimum_stops_immediately() {
        let cfg = ExperimentConfig::from_toml_str(
            "[problem]\nkind = \"quartic\"\ndim = 1\n[start]\nvalue = 1.0\n",
        )
        .unwrap();
        let out = run_ensemble(&cfg).unwrap();
        let row = &out.summary.rows[0];
        assert_eq!(row.t, 0);
        assert!(row.terminated && row.cert_grad_ok && row.cert_curv_ok);
        assert_eq!(out.traces[0].len(), 1);
    }

    #[test]
    fn default_budget_is_capped() {
        let exp = Experiment::build(&ExperimentConfig::default()).unwrap();
        assert_eq!(exp.tolerance.max_iter, MAX_ITER_CEILING);
        assert_eq!(exp.tolerance.alpha, exp.tolerance.eps_h);
        assert_eq!(exp.tolerance.lipschitz_grad, 13.0);
    }

    #[test]
    fn preset_sets_eps_h() {
        let cfg = ExperimentConfig::from_toml_str("[tolerance]\neps_g = 0.01\npreset = \"sqrt\"").unwrap();
        let exp = Experiment::build(&cfg).unwrap();
        assert!((exp.tolerance.eps_h - (0.01_f64 * 12.0).sqrt()).abs() < 1e-15);
    }

    #[test]
    fn perturbation_depends_on_seed_only() {
        let cfg = ExperimentConfig::from_toml_str("[start]\nperturb = 0.001\n[run]\nbase_seed = 4").unwrap();
        let exp = Experiment::build(&cfg).unwrap();
        assert_eq!(exp.start(3), exp.start(3));
        assert_ne!(exp.start(3), exp.start(4));
        assert!(exp.start(3).iter().all(|v| v.abs() < 0.01));
    }

    #[test]
    fn alpha_above_l_is_a_config_error() {
        let cfg = ExperimentConfig::from_toml_str("[tolerance]\nalpha = 100.0").unwrap();
        assert!(matches!(Experiment::build(&cfg), Err(HarnessError::Config { .. })));
    }
}
