use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use sosp_core::config::{SignPolicy, StepPolicy};
use sosp_core::theory::CouplingRegime;
use sosp_harness::{io, run_ensemble, validate, EnsembleSummary, Experiment, ExperimentConfig, HarnessError};

/// Stochastic second-order stationary point search: runs, sweeps and checks.
#[derive(Parser)]
#[command(name = "sosp", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run a seeded ensemble, write results and validate them.
    Run(RunArgs),
    /// Repeat an ensemble over several tolerances.
    Sweep {
        #[command(flatten)]
        run: RunArgs,
        /// Comma-separated eps_g values.
        #[arg(long, value_delimiter = ',', required = true)]
        eps: Vec<f64>,
        /// Derive eps_h from eps_g. Without it eps_h = eps_g.
        #[arg(long, value_enum)]
        preset: Option<Preset>,
    },
    /// Re-validate a written summary.json.
    Validate {
        #[arg(long)]
        summary: PathBuf,
    },
    /// Print the closed-form bounds for a config.
    Bounds {
        #[arg(long)]
        config: Option<PathBuf>,
    },
}

#[derive(Args, Clone)]
struct RunArgs {
    /// TOML experiment file. Defaults apply when omitted.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    seeds: Option<u64>,
    #[arg(long)]
    base_seed: Option<u64>,
    /// Output directory.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Worker threads, 0 for one per core.
    #[arg(long)]
    workers: Option<usize>,
    #[arg(long, value_enum)]
    policy: Option<Policy>,
    #[arg(long, value_enum)]
    sign: Option<Sign>,
    /// Skip per-seed trace files.
    #[arg(long)]
    no_traces: bool,
}

#[derive(Clone, Copy, ValueEnum)]
enum Policy {
    Short,
    Long,
}

#[derive(Clone, Copy, ValueEnum)]
enum Sign {
    Rademacher,
    Descent,
}

#[derive(Clone, Copy, ValueEnum)]
enum Preset {
    Sqrt,
    CubeTwoThirds,
}

fn load(path: Option<&Path>) -> Result<ExperimentConfig, HarnessError> {
    match path {
        Some(p) => ExperimentConfig::load(p),
        None => Ok(ExperimentConfig::default()),
    }
}

impl RunArgs {
    fn config(&self) -> Result<ExperimentConfig, HarnessError> {
        let mut cfg = load(self.config.as_deref())?;
        if let Some(s) = self.seeds {
            cfg.run.seeds = s;
        }
        if let Some(s) = self.base_seed {
            cfg.run.base_seed = s;
        }
        if let Some(o) = &self.out {
            cfg.run.out = Some(o.clone());
        }
        if let Some(w) = self.workers {
            cfg.run.workers = w;
        }
        if let Some(p) = self.policy {
            cfg.tolerance.step_policy = match p {
                Policy::Short => StepPolicy::ShortStep,
                Policy::Long => StepPolicy::LongStep,
            };
        }
        if let Some(s) = self.sign {
            cfg.tolerance.sign_policy = match s {
                Sign::Rademacher => SignPolicy::Rademacher,
                Sign::Descent => SignPolicy::DescentAligned,
            };
        }
        if self.no_traces {
            cfg.run.traces = false;
        }
        cfg.validate()?;
        Ok(cfg)
    }
}

fn print_aggregate(s: &EnsembleSummary) {
    let a = &s.aggregate;
    println!(
        "runs {}  terminated {}  failed {}  mean T {:.2}  median T {}  max T {}  E[T] bound {:.2}  n {:.2}",
        a.runs, a.terminated, a.failed, a.mean_t, a.median_t, a.max_t, a.mean_expected_bound, s.bounds.n_high_prob
    );
}

/// Runs one ensemble; returns whether validation passed.
fn execute(cfg: &ExperimentConfig, out: Option<&Path>) -> Result<bool, HarnessError> {
    let output = run_ensemble(cfg)?;
    if let Some(dir) = out {
        io::write_outputs(dir, &output, cfg.run.traces)?;
    }
    print_aggregate(&output.summary);
    let report = validate(&output.summary);
    print!("{report}");
    Ok(report.passed())
}

fn dispatch(cli: Cli) -> Result<bool, HarnessError> {
    match cli.command {
        Command::Run(args) => {
            let cfg = args.config()?;
            execute(&cfg, cfg.run.out.as_deref())
        }
        Command::Sweep { run, eps, preset } => {
            let base = run.config()?;
            let mut all = true;
            for e in eps {
                let mut cfg = base.clone();
                cfg.tolerance.eps_g = e;
                match preset {
                    Some(Preset::Sqrt) => cfg.tolerance.preset = Some(CouplingRegime::Sqrt),
                    Some(Preset::CubeTwoThirds) => cfg.tolerance.preset = Some(CouplingRegime::CubeTwoThirds),
                    None => {
                        cfg.tolerance.preset = None;
                        cfg.tolerance.eps_h = e;
                    }
                }
                cfg.validate()?;
                println!("== eps_g = {e}");
                let dir = base.run.out.as_ref().map(|d| d.join(format!("eps_{e}")));
                all &= execute(&cfg, dir.as_deref())?;
            }
            Ok(all)
        }
        Command::Validate { summary } => {
            let s = io::read_summary_json(&summary)?;
            print_aggregate(&s);
            let report = validate(&s);
            print!("{report}");
            Ok(report.passed())
        }
        Command::Bounds { config } => {
            let cfg = load(config.as_deref())?;
            let exp = Experiment::build(&cfg)?;
            let report = exp.bound_report()?;
            let tol = &exp.tolerance;
            println!("eps_g {}  eps_h {}  L {}  M {}  f_bar {}", tol.eps_g, tol.eps_h, tol.lipschitz_grad, tol.lipschitz_hess, tol.f_bar);
            let text = serde_json::to_string_pretty(&report).expect("bound report serializes");
            println!("{text}");
            println!(
                "note: for a union bound over all iterations set xi = delta / (2 n) = {:.3e}",
                report.union_bound_xi
            );
            Ok(true)
        }
    }
}

fn main() -> ExitCode {
    match dispatch(Cli::parse()) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
