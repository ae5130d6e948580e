//! `bdescent <experiment> [flags]`
//!
//! Exit codes: 0 success, 2 usage or configuration error, 3 runtime failure.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::Parser;

use bdescent::experiments::{run_experiment, ConfigError, ExperimentKind, RawConfig, Report};

const EXIT_USAGE: u8 = 2;
const EXIT_RUNTIME: u8 = 3;

#[derive(Debug, Parser)]
#[command(
    name = "bdescent",
    version,
    about = "Local backtracking gradient descent experiments"
)]
struct Cli {
    /// descent | poisson | saddle-mc | duality-check
    experiment: String,

    /// identity | indefinite | quartic | poisson
    #[arg(long)]
    objective: Option<String>,
    /// Objective dimension (grid dimension for poisson, vector length for duality-check)
    #[arg(long)]
    dim: Option<String>,
    /// Interior grid points per axis (poisson)
    #[arg(long)]
    n: Option<String>,
    /// Poisson source: sine | constant | bump
    #[arg(long)]
    source: Option<String>,
    /// Exponent of the gradient space l^p
    #[arg(long)]
    p: Option<String>,
    /// local | armijo
    #[arg(long)]
    rule: Option<String>,
    /// Step-size safety factor in (0, 1) [default: 0.5]
    #[arg(long)]
    alpha: Option<String>,
    /// Grid ratio in (0, 1) [default: 0.5]
    #[arg(long)]
    beta: Option<String>,
    /// Largest trial step [default: 1]
    #[arg(long)]
    delta0: Option<String>,
    /// Stop when the gradient norm falls to this value
    #[arg(long = "grad-tol")]
    grad_tol: Option<String>,
    /// Stop after 10 consecutive steps no longer than this
    #[arg(long = "step-tol")]
    step_tol: Option<String>,
    /// Iteration budget
    #[arg(long = "max-iters")]
    max_iters: Option<String>,
    /// Report divergence once f drops below this [default: -1e12]
    #[arg(long = "divergence-floor", allow_hyphen_values = true)]
    divergence_floor: Option<String>,
    /// Report an escaping orbit once |x| exceeds this [default: 1e8]
    #[arg(long = "norm-ceiling")]
    norm_ceiling: Option<String>,
    /// Monte Carlo trials (samples for duality-check)
    #[arg(long)]
    trials: Option<String>,
    /// Radius of the sampling ball
    #[arg(long)]
    radius: Option<String>,
    /// Relative hyperparameter jitter per trial
    #[arg(long)]
    jitter: Option<String>,
    /// Seed for all sampling [default: 0]
    #[arg(long)]
    seed: Option<String>,
    /// Comma-separated starting point (fixed start for saddle-mc)
    #[arg(long, allow_hyphen_values = true)]
    x0: Option<String>,
    /// Output directory
    #[arg(long)]
    out: Option<String>,
    /// Write one trace CSV per Monte Carlo trial
    #[arg(long = "keep-traces")]
    keep_traces: bool,
    /// Run Monte Carlo trials on one thread
    #[arg(long)]
    serial: bool,
    /// Flat key=value file; flags override its entries
    #[arg(long)]
    config: Option<PathBuf>,
}

impl Cli {
    fn flag_pairs(&self) -> Vec<(&'static str, Option<String>)> {
        let b = |v: bool| v.then(|| "true".to_string());
        vec![
            ("objective", self.objective.clone()),
            ("dim", self.dim.clone()),
            ("n", self.n.clone()),
            ("source", self.source.clone()),
            ("p", self.p.clone()),
            ("rule", self.rule.clone()),
            ("alpha", self.alpha.clone()),
            ("beta", self.beta.clone()),
            ("delta0", self.delta0.clone()),
            ("grad-tol", self.grad_tol.clone()),
            ("step-tol", self.step_tol.clone()),
            ("max-iters", self.max_iters.clone()),
            ("divergence-floor", self.divergence_floor.clone()),
            ("norm-ceiling", self.norm_ceiling.clone()),
            ("trials", self.trials.clone()),
            ("radius", self.radius.clone()),
            ("jitter", self.jitter.clone()),
            ("seed", self.seed.clone()),
            ("x0", self.x0.clone()),
            ("out", self.out.clone()),
            ("keep-traces", b(self.keep_traces)),
            ("serial", b(self.serial)),
        ]
    }

    fn raw_config(&self) -> Result<RawConfig, ConfigError> {
        let mut raw = match &self.config {
            Some(path) => {
                let text = std::fs::read_to_string(path)
                    .map_err(|e| ConfigError::new("config", format!("{}: {e}", path.display())))?;
                RawConfig::parse(&text)?
            }
            None => RawConfig::default(),
        };
        for (key, value) in self.flag_pairs() {
            if let Some(v) = value {
                raw.set(key, v)?;
            }
        }
        Ok(raw)
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let cfg = cli
        .experiment
        .parse::<ExperimentKind>()
        .and_then(|kind| cli.raw_config()?.validate(kind));
    let cfg = match cfg {
        Ok(c) => c,
        Err(e) => {
            eprintln!("bdescent: {e}");
            return ExitCode::from(EXIT_USAGE);
        }
    };
    match run_experiment(&cfg) {
        Ok(report) => {
            match &report {
                Report::Descent(r, _) => {
                    println!("{:?} after {} iterations", r.trace.outcome, r.trace.iters)
                }
                Report::Poisson(r, ..) => println!(
                    "{:?} after {} iterations, |u_gd - u_direct| / max(1, |u_direct|) = {:e}",
                    r.trace.outcome, r.trace.iters, r.descent_vs_direct
                ),
                Report::SaddleMc(s, _) => println!(
                    "{} trials: minimum {}, saddle {}, diverging {}, other {}",
                    s.trials, s.counts.minimum, s.counts.saddle, s.counts.diverging, s.counts.other
                ),
                Report::Duality(r) => println!(
                    "max violations: pairing {:e}, norm {:e}; min monotonicity {:e}",
                    r.max_pairing_violation, r.max_norm_violation, r.min_monotonicity
                ),
            }
            println!("wrote {}", cfg.out.join("summary.json").display());
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("bdescent: {e}");
            ExitCode::from(EXIT_RUNTIME)
        }
    }
}
