//! Experiment front end used by the `bdescent` binary.
//!
//! | experiment      | artifacts in `--out`                                   |
//! |-----------------|--------------------------------------------------------|
//! | `descent`       | `summary.json`, `trace.csv`, `plot.csv`                |
//! | `poisson`       | `summary.json`, `trace.csv`, `plot.csv`, `solution.csv`, `direct.csv` |
//! | `saddle-mc`     | `summary.json` (+ `traces/trial_NNNNN.csv` with `--keep-traces`) |
//! | `duality-check` | `summary.json`                                         |

mod config;
mod mc;

pub use config::{ConfigError, ExperimentConfig, ExperimentKind, ObjectiveName, RawConfig, KEYS};
pub use mc::{
    saddle_mc, sample_ball, McConfig, McCounts, McStart, McSummary, OtherTrial, TrialClass,
    TrialResult, MAX_BALL_DIM, PROXIMITY,
};

use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};
use std::sync::Arc;

use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::backtracking::{StepKind, StepRule};
use crate::driver::{
    converged_point_audit, run_descent, tail_diagnostics, write_plot_csv, write_trace_csv, Audit,
    DescentTrace, TailDiagnostics, TraceSummary,
};
use crate::error::{Error, Result};
use crate::objectives::{make_quartic_saddle, Objective, Quadratic};
use crate::poisson::{
    direct_solve, energy_objective, solution_errors, write_nodes_csv, GridSpec, PoissonProblem,
    Source,
};
use crate::sequence_space::{duality_map, pairing, Exponent, VecP};

/// Fraction of a trace treated as its tail in summaries.
pub const TAIL_FRACTION: f64 = 0.01;

/// Tolerance of the duality identities checked by `duality-check`.
pub const DUALITY_TOL: f64 = 1e-12;

/// Builds a built-in objective. For `poisson`, `dim` is the grid dimension
/// and `n` the interior points per axis.
pub fn builtin_objective(
    name: ObjectiveName,
    dim: usize,
    n: usize,
    source: Source,
) -> Result<Arc<dyn Objective>> {
    Ok(match name {
        ObjectiveName::Identity => Arc::new(Quadratic::identity(dim)?),
        ObjectiveName::Indefinite => Arc::new(Quadratic::indefinite(dim)?),
        ObjectiveName::Quartic => Arc::new(make_quartic_saddle(dim)?),
        ObjectiveName::Poisson => {
            let prob = PoissonProblem::sampled(GridSpec::new(dim, n)?, source);
            Arc::new(energy_objective(&prob))
        }
    })
}

/// Default starting point: the origin for `poisson`, `(1, 0, ..., 0)`
/// otherwise.
pub fn default_start(name: ObjectiveName, unknowns: usize) -> Vec<f64> {
    let mut x = vec![0.0; unknowns];
    if name != ObjectiveName::Poisson {
        x[0] = 1.0;
    }
    x
}

fn step_rule(cfg: &ExperimentConfig) -> Result<StepRule> {
    StepRule::new(
        cfg.rule,
        cfg.hyper,
        crate::backtracking::grid_budget(&cfg.hyper).max(1),
    )
}

fn start_point(cfg: &ExperimentConfig, obj: &dyn Objective) -> Result<VecP> {
    let coeffs = cfg
        .x0
        .clone()
        .unwrap_or_else(|| default_start(cfg.objective, obj.dim()));
    if coeffs.len() != obj.dim() {
        return Err(Error::DimensionMismatch {
            left: obj.dim(),
            right: coeffs.len(),
        });
    }
    VecP::new(coeffs, Exponent::new(cfg.p)?.conjugate())
}

#[derive(Clone, Debug, Serialize)]
pub struct DescentReport {
    pub experiment: &'static str,
    pub objective: String,
    pub p: f64,
    pub rule: StepKind,
    #[serde(flatten)]
    pub trace: TraceSummary,
    pub tail: TailDiagnostics,
    pub audit: Audit,
}

#[derive(Clone, Debug, Serialize)]
pub struct PoissonReport {
    pub experiment: &'static str,
    pub grid: GridSpec,
    pub source: Source,
    #[serde(flatten)]
    pub trace: TraceSummary,
    pub direct_max_error: Option<f64>,
    pub direct_l2_error: Option<f64>,
    pub descent_max_error: Option<f64>,
    /// `|u_gd - u_direct| / max(1, |u_direct|)`.
    pub descent_vs_direct: f64,
    pub h1_seminorm: f64,
}

#[derive(Clone, Debug, Serialize)]
pub struct DualityReport {
    pub experiment: &'static str,
    pub p: f64,
    pub dim: usize,
    pub samples: usize,
    pub seed: u64,
    /// `max |<y, J y> - |y|^2| / max(1, |y|^2)`.
    pub max_pairing_violation: f64,
    /// `max | |J y|_q - |y|_p | / max(1, |y|^2)`.
    pub max_norm_violation: f64,
    /// `min <y1 - y2, J y1 - J y2>` over consecutive sample pairs.
    pub min_monotonicity: f64,
    pub passed: bool,
}

/// Everything an experiment produced.
#[derive(Clone, Debug)]
pub enum Report {
    Descent(DescentReport, DescentTrace),
    Poisson(PoissonReport, DescentTrace, Vec<f64>, Vec<f64>),
    SaddleMc(McSummary, Vec<TrialResult>),
    Duality(DualityReport),
}

impl Report {
    pub fn summary_json(&self) -> Result<String> {
        let s = match self {
            Report::Descent(r, _) => serde_json::to_string_pretty(r)?,
            Report::Poisson(r, ..) => serde_json::to_string_pretty(r)?,
            Report::SaddleMc(s, _) => serde_json::to_string_pretty(s)?,
            Report::Duality(r) => serde_json::to_string_pretty(r)?,
        };
        Ok(s + "\n")
    }
}

/// Runs the configured experiment in memory.
pub fn run(cfg: &ExperimentConfig) -> Result<Report> {
    match cfg.experiment {
        ExperimentKind::Descent => run_descent_experiment(cfg),
        ExperimentKind::Poisson => run_poisson_experiment(cfg),
        ExperimentKind::SaddleMc => run_saddle_mc(cfg),
        ExperimentKind::DualityCheck => Ok(Report::Duality(duality_check(
            cfg.p, cfg.dim, cfg.trials, cfg.seed,
        )?)),
    }
}

/// Runs the experiment and writes its artifacts. Fails after writing the
/// summary when a `duality-check` misses its tolerance.
pub fn run_experiment(cfg: &ExperimentConfig) -> Result<Report> {
    let report = run(cfg)?;
    emit_results(&report, &cfg.out, cfg.keep_traces)?;
    if let Report::Duality(r) = &report {
        if !r.passed {
            return Err(Error::Check(format!(
                "duality identities violated: pairing {:e}, norm {:e}, monotonicity {:e}",
                r.max_pairing_violation, r.max_norm_violation, r.min_monotonicity
            )));
        }
    }
    Ok(report)
}

fn run_descent_experiment(cfg: &ExperimentConfig) -> Result<Report> {
    let obj = builtin_objective(cfg.objective, cfg.dim, cfg.n, cfg.source)?;
    let x0 = start_point(cfg, obj.as_ref())?;
    let trace = run_descent(obj.as_ref(), &x0, &step_rule(cfg)?, &cfg.stop)?;
    let audit = if obj.dim() <= 200 {
        converged_point_audit(obj.as_ref(), &trace, 10.0 * cfg.stop.grad_tol)?
    } else {
        Audit::Indeterminate
    };
    let report = DescentReport {
        experiment: "descent",
        objective: obj.name().to_string(),
        p: cfg.p,
        rule: cfg.rule,
        trace: trace.summary(),
        tail: tail_diagnostics(&trace, TAIL_FRACTION)?,
        audit,
    };
    Ok(Report::Descent(report, trace))
}

fn run_poisson_experiment(cfg: &ExperimentConfig) -> Result<Report> {
    let grid = GridSpec::new(cfg.dim, cfg.n)?;
    let prob = PoissonProblem::sampled(grid, cfg.source);
    let energy = energy_objective(&prob);
    let direct = direct_solve(&prob)?;
    let x0 = start_point(cfg, &energy)?;
    let trace = run_descent(&energy, &x0, &step_rule(cfg)?, &cfg.stop)?;
    let u = trace.terminal.coeffs().to_vec();

    let exact = cfg.source.exact(grid.dim());
    let (direct_max, direct_l2) = match exact {
        Some(f) => {
            let (m, l) = solution_errors(&direct, &prob, f)?;
            (Some(m), Some(l))
        }
        None => (None, None),
    };
    let descent_max = exact
        .map(|f| solution_errors(&u, &prob, f).map(|e| e.0))
        .transpose()?;
    let ud = VecP::euclidean(direct.clone())?;
    let diff = trace
        .terminal
        .with_exponent(Exponent::EUCLIDEAN)
        .sub(&ud)?
        .norm();
    let report = PoissonReport {
        experiment: "poisson",
        grid,
        source: cfg.source,
        trace: trace.summary(),
        direct_max_error: direct_max,
        direct_l2_error: direct_l2,
        descent_max_error: descent_max,
        descent_vs_direct: diff / ud.norm().max(1.0),
        h1_seminorm: energy.h1_seminorm(&u),
    };
    Ok(Report::Poisson(report, trace, u, direct))
}

fn run_saddle_mc(cfg: &ExperimentConfig) -> Result<Report> {
    let obj = builtin_objective(cfg.objective, cfg.dim, cfg.n, cfg.source)?;
    let start = match &cfg.x0 {
        Some(x) => McStart::Fixed(x.clone()),
        None => McStart::Ball(cfg.radius),
    };
    let mc = McConfig {
        trials: cfg.trials,
        start,
        hyper: cfg.hyper,
        jitter: cfg.jitter,
        seed: cfg.seed,
        rule: cfg.rule,
        stop: cfg.stop,
        p: cfg.p,
        parallel: cfg.parallel,
        keep_traces: cfg.keep_traces,
    };
    let (summary, results) = saddle_mc(obj.as_ref(), &mc)?;
    Ok(Report::SaddleMc(summary, results))
}

/// Samples `samples` vectors with coordinates uniform in `[-1, 1]` and checks
/// `<y, J y> = |y|^2`, `|J y|_q = |y|_p` and monotonicity of `J` on
/// consecutive pairs.
pub fn duality_check(p: f64, dim: usize, samples: usize, seed: u64) -> Result<DualityReport> {
    let p_exp = Exponent::new(p)?;
    if dim == 0 {
        return Err(Error::invalid("dim", "must be positive"));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut max_pair = 0.0_f64;
    let mut max_norm = 0.0_f64;
    let mut min_mono = f64::INFINITY;
    let mut prev: Option<(VecP, VecP)> = None;
    for _ in 0..samples {
        let c: Vec<f64> = (0..dim).map(|_| rng.gen_range(-1.0..=1.0)).collect();
        let y = VecP::new(c, p_exp)?;
        let j = duality_map(&y);
        let n = y.norm();
        let scale = (n * n).max(1.0);
        max_pair = max_pair.max((pairing(&y, &j)? - n * n).abs() / scale);
        max_norm = max_norm.max((j.norm() - n).abs() / scale);
        if let Some((py, pj)) = &prev {
            let m = pairing(&y.sub(py)?, &j.sub(pj)?)?;
            min_mono = min_mono.min(m);
        }
        prev = Some((y, j));
    }
    if !min_mono.is_finite() {
        min_mono = 0.0;
    }
    Ok(DualityReport {
        experiment: "duality-check",
        p,
        dim,
        samples,
        seed,
        max_pairing_violation: max_pair,
        max_norm_violation: max_norm,
        min_monotonicity: min_mono,
        passed: max_pair <= DUALITY_TOL && max_norm <= DUALITY_TOL && min_mono >= -DUALITY_TOL,
    })
}

fn create_file(path: &Path) -> Result<BufWriter<File>> {
    File::create(path)
        .map(BufWriter::new)
        .map_err(|e| Error::io(path, e))
}

fn write_with(
    path: PathBuf,
    f: impl FnOnce(&mut BufWriter<File>) -> std::io::Result<()>,
) -> Result<()> {
    let mut w = create_file(&path)?;
    f(&mut w)
        .and_then(|_| w.flush())
        .map_err(|e| Error::io(&path, e))
}

/// Writes the artifacts of `report` under `dir` and returns their paths.
pub fn emit_results(report: &Report, dir: &Path, keep_traces: bool) -> Result<Vec<PathBuf>> {
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let mut written = Vec::new();
    let summary = dir.join("summary.json");
    let json = report.summary_json()?;
    write_with(summary.clone(), |w| w.write_all(json.as_bytes()))?;
    written.push(summary);

    let traces = |trace: &DescentTrace, written: &mut Vec<PathBuf>| -> Result<()> {
        let p = dir.join("trace.csv");
        write_with(p.clone(), |w| write_trace_csv(trace, w))?;
        written.push(p);
        let p = dir.join("plot.csv");
        write_with(p.clone(), |w| write_plot_csv(trace, w))?;
        written.push(p);
        Ok(())
    };

    match report {
        Report::Descent(_, trace) => traces(trace, &mut written)?,
        Report::Poisson(r, trace, u, direct) => {
            traces(trace, &mut written)?;
            for (name, vals) in [("solution.csv", u), ("direct.csv", direct)] {
                let p = dir.join(name);
                write_with(p.clone(), |w| write_nodes_csv(&r.grid, vals, w))?;
                written.push(p);
            }
        }
        Report::SaddleMc(_, results) if keep_traces => {
            let tdir = dir.join("traces");
            fs::create_dir_all(&tdir).map_err(|e| Error::io(&tdir, e))?;
            for r in results {
                if let Some(trace) = &r.trace {
                    let p = tdir.join(format!("trial_{:05}.csv", r.trial));
                    write_with(p.clone(), |w| write_trace_csv(trace, w))?;
                    written.push(p);
                }
            }
        }
        Report::SaddleMc(..) | Report::Duality(_) => {}
    }
    Ok(written)
}
