use std::fmt;

use serde::{Deserialize, Serialize};
use sosp_core::theory::{self, BoundReport};
use sosp_core::ToleranceConfig;

use crate::config::ExperimentConfig;

/// One seed of an ensemble. Flat so it maps onto a CSV row.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SeedRow {
    pub seed_index: u64,
    /// The optimizer returned an error; `error` holds it.
    pub failed: bool,
    pub error: Option<String>,
    pub terminated: bool,
    pub t: u64,
    pub gd_steps: u64,
    pub nc_steps: u64,
    pub grad_evals: u64,
    pub hvps: u64,
    pub f0: f64,
    pub f_final: Option<f64>,
    /// Exact `||grad f||` at the final point.
    pub grad_norm: f64,
    /// Exact `lambda_min(hess f)` at the final point.
    pub lambda_min: f64,
    pub cert_grad_ok: bool,
    pub cert_curv_ok: bool,
    /// `(f0 - f_bar) / c_eps`
    pub expected_bound: Option<f64>,
    /// High-probability iteration bound `n`.
    pub n_bound: Option<f64>,
    pub gd_violations: u64,
    pub first_gd_violation: Option<u64>,
    /// Number of negative-curvature steps with a measured `f` change.
    pub nc_count: u64,
    pub nc_mean: f64,
    /// Sum of squared deviations of the `f` changes from `nc_mean`.
    pub nc_m2: f64,
    pub region_exits: u64,
    pub first_region_exit: Option<u64>,
}

impl SeedRow {
    pub fn failed(seed_index: u64, f0: f64, error: String) -> Self {
        Self {
            seed_index,
            failed: true,
            error: Some(error),
            terminated: false,
            t: 0,
            gd_steps: 0,
            nc_steps: 0,
            grad_evals: 0,
            hvps: 0,
            f0,
            f_final: None,
            grad_norm: 0.0,
            lambda_min: 0.0,
            cert_grad_ok: false,
            cert_curv_ok: false,
            expected_bound: None,
            n_bound: None,
            gd_violations: 0,
            first_gd_violation: None,
            nc_count: 0,
            nc_mean: 0.0,
            nc_m2: 0.0,
            region_exits: 0,
            first_region_exit: None,
        }
    }

    pub fn certified(&self) -> bool {
        self.cert_grad_ok && self.cert_curv_ok
    }
}

/// Pooled mean and standard error of negative-curvature `f` changes.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize, Default)]
pub struct PooledDescent {
    pub count: u64,
    pub mean: f64,
    pub std_err: f64,
}

impl PooledDescent {
    /// Merges per-row `(count, mean, m2)` in row order.
    pub fn from_rows(rows: &[SeedRow]) -> Self {
        let (mut n, mut mean, mut m2) = (0_u64, 0.0_f64, 0.0_f64);
        for r in rows.iter().filter(|r| !r.failed && r.nc_count > 0) {
            let nb = r.nc_count as f64;
            let na = n as f64;
            let tot = na + nb;
            let d = r.nc_mean - mean;
            mean += d * nb / tot;
            m2 += r.nc_m2 + d * d * na * nb / tot;
            n += r.nc_count;
        }
        let std_err = if n >= 2 { (m2 / (n as f64 - 1.0) / n as f64).sqrt() } else { 0.0 };
        Self { count: n, mean, std_err }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Aggregate {
    pub runs: u64,
    pub failed: u64,
    pub terminated: u64,
    /// Over completed (non-failed) runs.
    pub mean_t: f64,
    pub median_t: f64,
    pub max_t: u64,
    /// Mean of the per-seed expected-T bounds.
    pub mean_expected_bound: f64,
    pub exceed_n: u64,
    pub certificate_failures: u64,
    pub gd_violations: u64,
    pub runs_leaving_region: u64,
    pub nc: PooledDescent,
}

impl Aggregate {
    pub fn from_rows(rows: &[SeedRow]) -> Self {
        let ok: Vec<&SeedRow> = rows.iter().filter(|r| !r.failed).collect();
        let mut ts: Vec<u64> = ok.iter().map(|r| r.t).collect();
        ts.sort_unstable();
        let m = ts.len();
        let median_t = match m {
            0 => 0.0,
            _ if m % 2 == 1 => ts[m / 2] as f64,
            _ => (ts[m / 2 - 1] + ts[m / 2]) as f64 / 2.0,
        };
        let mean = |v: Vec<f64>| if v.is_empty() { 0.0 } else { v.iter().sum::<f64>() / v.len() as f64 };
        Self {
            runs: rows.len() as u64,
            failed: (rows.len() - m) as u64,
            terminated: ok.iter().filter(|r| r.terminated).count() as u64,
            mean_t: mean(ts.iter().map(|&t| t as f64).collect()),
            median_t,
            max_t: ts.last().copied().unwrap_or(0),
            mean_expected_bound: mean(ok.iter().map(|r| r.expected_bound.unwrap_or(f64::INFINITY)).collect()),
            exceed_n: ok.iter().filter(|r| r.n_bound.is_none_or(|n| r.t as f64 > n)).count() as u64,
            certificate_failures: ok.iter().filter(|r| r.terminated && !r.certified()).count() as u64,
            gd_violations: ok.iter().map(|r| r.gd_violations).sum(),
            runs_leaving_region: ok.iter().filter(|r| r.region_exits > 0).count() as u64,
            nc: PooledDescent::from_rows(rows),
        }
    }
}

/// Everything needed to re-validate an ensemble without rerunning it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EnsembleSummary {
    pub config: ExperimentConfig,
    pub tolerance: ToleranceConfig,
    /// Theory bounds at the unperturbed start.
    pub bounds: BoundReport,
    pub gd_decrease: f64,
    pub nc_decrease: f64,
    pub aggregate: Aggregate,
    pub rows: Vec<SeedRow>,
}

impl EnsembleSummary {
    pub fn new(config: ExperimentConfig, tolerance: &ToleranceConfig, bounds: BoundReport, rows: Vec<SeedRow>) -> Self {
        Self {
            config,
            tolerance: tolerance.clone(),
            bounds,
            gd_decrease: theory::gd_decrease(tolerance.eps_g, tolerance.lipschitz_grad),
            nc_decrease: theory::nc_decrease(tolerance.eps_h, tolerance.lipschitz_hess),
            aggregate: Aggregate::from_rows(&rows),
            rows,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Check {
    pub name: String,
    pub passed: bool,
    pub detail: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ValidationReport {
    pub checks: Vec<Check>,
}

impl ValidationReport {
    pub fn passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }
}

impl fmt::Display for ValidationReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for c in &self.checks {
            writeln!(f, "[{}] {}: {}", if c.passed { "PASS" } else { "FAIL" }, c.name, c.detail)?;
        }
        Ok(())
    }
}

/// Re-checks a summary. Aggregates are recomputed from the rows, so a
/// hand-edited `aggregate` block cannot hide a failure.
///
/// * (a) mean T over completed runs is at most the mean expected-T bound;
/// * (b) the fraction of runs with `T > n` is at most `delta`;
/// * (c) every terminated run passes the exact certificate;
/// * (d) no gradient step decreased `f` by less than `eps_g^2/(6L)`;
/// * (e) pooled negative-curvature `f` change is at most
///   `-2 eps_h^3/(9 M^2) + 3 SE`.
///
/// A sixth check fails when any run errored.
pub fn validate(summary: &EnsembleSummary) -> ValidationReport {
    let rows = &summary.rows;
    let agg = Aggregate::from_rows(rows);
    let mut checks = Vec::new();
    let mut push = |name: &str, passed: bool, detail: String| {
        checks.push(Check { name: name.to_string(), passed, detail })
    };

    push(
        "a expected stopping time",
        agg.mean_t <= agg.mean_expected_bound,
        format!("mean T = {:.4} vs bound {:.4}", agg.mean_t, agg.mean_expected_bound),
    );

    let completed = agg.runs - agg.failed;
    let frac = if completed == 0 { 0.0 } else { agg.exceed_n as f64 / completed as f64 };
    push(
        "b high-probability stopping time",
        frac <= summary.tolerance.delta,
        format!("fraction T > n = {frac:.4} vs delta = {}", summary.tolerance.delta),
    );

    let bad_cert: Vec<String> = rows
        .iter()
        .filter(|r| !r.failed && r.terminated && !r.certified())
        .map(|r| {
            format!(
                "seed {} iteration {} (|grad f| = {:.3e}, lambda_min = {:.3e})",
                r.seed_index, r.t, r.grad_norm, r.lambda_min
            )
        })
        .collect();
    push(
        "c termination certificate",
        bad_cert.is_empty(),
        if bad_cert.is_empty() {
            format!("{} terminated runs certified", agg.terminated)
        } else {
            format!("{} violations: {}", bad_cert.len(), bad_cert.join("; "))
        },
    );

    let bad_gd: Vec<String> = rows
        .iter()
        .filter(|r| r.gd_violations > 0)
        .map(|r| format!("seed {} iteration {}", r.seed_index, r.first_gd_violation.unwrap_or(0)))
        .collect();
    push(
        "d gradient-step descent",
        bad_gd.is_empty(),
        if bad_gd.is_empty() {
            "no violations".to_string()
        } else {
            format!("{} violations, first at {}", agg.gd_violations, bad_gd.join("; "))
        },
    );

    let nc = agg.nc;
    let limit = -summary.nc_decrease + 3.0 * nc.std_err;
    push(
        "e negative-curvature descent",
        nc.count == 0 || nc.mean <= limit,
        if nc.count == 0 {
            "no negative-curvature steps".to_string()
        } else {
            format!("mean df = {:.4e} over {} steps vs {:.4e}", nc.mean, nc.count, limit)
        },
    );

    let failed: Vec<String> = rows
        .iter()
        .filter(|r| r.failed)
        .map(|r| format!("seed {}: {}", r.seed_index, r.error.as_deref().unwrap_or("")))
        .collect();
    push(
        "runs completed",
        failed.is_empty(),
        if failed.is_empty() { format!("{} runs", agg.runs) } else { failed.join("; ") },
    );

    ValidationReport { checks }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn row(i: u64, nc: &[f64]) -> SeedRow {
        let mut r = SeedRow::failed(i, 1.0, String::new());
        r.failed = false;
        r.error = None;
        r.terminated = true;
        r.cert_grad_ok = true;
        r.cert_curv_ok = true;
        r.t = i;
        r.expected_bound = Some(100.0);
        r.n_bound = Some(1e6);
        r.nc_count = nc.len() as u64;
        if !nc.is_empty() {
            r.nc_mean = nc.iter().sum::<f64>() / nc.len() as f64;
            r.nc_m2 = nc.iter().map(|d| (d - r.nc_mean).powi(2)).sum();
        }
        r
    }

    #[test]
    fn pooled_moments_match_direct_computation() {
        let a = [-1.0, -2.0, 0.5];
        let b = [-3.0];
        let c = [0.25, -0.75];
        let rows = vec![row(0, &a), row(1, &[]), row(2, &b), row(3, &c)];
        let p = PooledDescent::from_rows(&rows);
        let all: Vec<f64> = a.iter().chain(&b).chain(&c).copied().collect();
        let n = all.len() as f64;
        let mean = all.iter().sum::<f64>() / n;
        let var = all.iter().map(|d| (d - mean).powi(2)).sum::<f64>() / (n - 1.0);
        assert_eq!(p.count, 6);
        assert!((p.mean - mean).abs() < 1e-14);
        assert!((p.std_err - (var / n).sqrt()).abs() < 1e-14);
    }

    #[test]
    fn median_and_counts() {
        let rows: Vec<SeedRow> = (0..4).map(|i| row(i, &[])).collect();
        let agg = Aggregate::from_rows(&rows);
        assert_eq!(agg.median_t, 1.5);
        assert_eq!(agg.max_t, 3);
        assert_eq!(agg.mean_t, 1.5);
        assert_eq!(agg.terminated, 4);
    }
}
