//! Experiment configuration: a flat `key = value` map, filled from a config
//! file and then overridden by command-line flags, validated into an
//! [`ExperimentConfig`].
//!
//! Keys are the long flag names without the leading dashes (`grad-tol`,
//! `delta0`, ...). Blank lines and lines starting with `#` are ignored.

use std::collections::BTreeMap;
use std::fmt;
use std::path::PathBuf;
use std::str::FromStr;

use serde::Serialize;

use crate::backtracking::{local_step_size, HyperParams, StepKind};
use crate::driver::StopSpec;
use crate::poisson::{GridSpec, Source};

/// A configuration problem tied to the offending field.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ConfigError {
    pub field: String,
    pub reason: String,
}

impl ConfigError {
    pub fn new(field: impl Into<String>, reason: impl Into<String>) -> Self {
        ConfigError {
            field: field.into(),
            reason: reason.into(),
        }
    }
}

impl fmt::Display for ConfigError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "invalid `{}`: {}", self.field, self.reason)
    }
}

impl std::error::Error for ConfigError {}

/// Every key accepted in a config file.
pub const KEYS: &[&str] = &[
    "objective",
    "dim",
    "n",
    "source",
    "p",
    "rule",
    "alpha",
    "beta",
    "delta0",
    "grad-tol",
    "step-tol",
    "max-iters",
    "divergence-floor",
    "norm-ceiling",
    "trials",
    "radius",
    "jitter",
    "seed",
    "x0",
    "out",
    "keep-traces",
    "serial",
];

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum ExperimentKind {
    Descent,
    Poisson,
    SaddleMc,
    DualityCheck,
}

impl FromStr for ExperimentKind {
    type Err = ConfigError;
    fn from_str(s: &str) -> Result<Self, ConfigError> {
        match s {
            "descent" => Ok(ExperimentKind::Descent),
            "poisson" => Ok(ExperimentKind::Poisson),
            "saddle-mc" => Ok(ExperimentKind::SaddleMc),
            "duality-check" => Ok(ExperimentKind::DualityCheck),
            _ => Err(ConfigError::new(
                "experiment",
                format!("`{s}` is not one of descent, poisson, saddle-mc, duality-check"),
            )),
        }
    }
}

/// Built-in objectives selectable by name.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum ObjectiveName {
    /// `1/2 |x|^2`.
    Identity,
    /// `1/2 (x1^2 - x2^2 + sum_{j>=3} x_j^2)`.
    Indefinite,
    /// Quartic with one saddle and two minima.
    Quartic,
    /// Finite-difference Poisson energy.
    Poisson,
}

impl ObjectiveName {
    pub const ALL: [ObjectiveName; 4] = [
        ObjectiveName::Identity,
        ObjectiveName::Indefinite,
        ObjectiveName::Quartic,
        ObjectiveName::Poisson,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            ObjectiveName::Identity => "identity",
            ObjectiveName::Indefinite => "indefinite",
            ObjectiveName::Quartic => "quartic",
            ObjectiveName::Poisson => "poisson",
        }
    }

    /// Default dimension; for `poisson` this is the grid dimension.
    pub fn default_dim(self) -> usize {
        match self {
            ObjectiveName::Identity => 2,
            ObjectiveName::Poisson => 1,
            _ => 3,
        }
    }

    /// Stopping rule matched to the step sizes the objective produces near
    /// its critical points: `step_tol` sits between a tenth of and the full
    /// terminal `delta * grad_tol`, so runs end on the gradient test and the
    /// tail steps stay within `10 * step_tol`.
    pub fn default_stop(self) -> StopSpec {
        let base = StopSpec::default();
        match self {
            // delta = 1/4 at the minimum
            ObjectiveName::Identity | ObjectiveName::Indefinite => StopSpec {
                grad_tol: 1e-8,
                step_tol: 1e-9,
                ..base
            },
            // delta = 2^-5 at the saddle and 2^-7 at the minima, down to
            // about 4e-3 there under 5% hyperparameter jitter
            ObjectiveName::Quartic => StopSpec {
                grad_tol: 1e-8,
                step_tol: 4e-11,
                ..base
            },
            // delta = 2^-10 for n = 63
            ObjectiveName::Poisson => StopSpec {
                max_iters: 200_000,
                grad_tol: 1e-9,
                step_tol: 5e-13,
                ..base
            },
        }
    }
}

impl FromStr for ObjectiveName {
    type Err = ConfigError;
    fn from_str(s: &str) -> Result<Self, ConfigError> {
        match s {
            "identity" | "quadratic" => Ok(ObjectiveName::Identity),
            "indefinite" => Ok(ObjectiveName::Indefinite),
            "quartic" => Ok(ObjectiveName::Quartic),
            "poisson" => Ok(ObjectiveName::Poisson),
            _ => Err(ConfigError::new(
                "objective",
                format!("`{s}` is not one of identity, indefinite, quartic, poisson"),
            )),
        }
    }
}

/// Validated experiment configuration.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ExperimentConfig {
    pub experiment: ExperimentKind,
    pub objective: ObjectiveName,
    pub dim: usize,
    /// Interior points per axis (`poisson` only).
    pub n: usize,
    pub source: Source,
    /// Exponent of the gradient space; iterates use the conjugate exponent.
    pub p: f64,
    pub rule: StepKind,
    pub hyper: HyperParams,
    pub stop: StopSpec,
    pub trials: usize,
    pub radius: f64,
    pub jitter: f64,
    pub seed: u64,
    pub x0: Option<Vec<f64>>,
    pub out: PathBuf,
    pub keep_traces: bool,
    pub parallel: bool,
}

/// Raw `key -> value` pairs prior to validation.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct RawConfig {
    pairs: BTreeMap<String, String>,
}

impl RawConfig {
    /// Parses the flat `key = value` format.
    pub fn parse(text: &str) -> Result<Self, ConfigError> {
        let mut raw = RawConfig::default();
        for (i, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let (k, v) = line.split_once('=').ok_or_else(|| {
                ConfigError::new(format!("line {}", i + 1), "expected `key = value`")
            })?;
            raw.set(k.trim(), v.trim())?;
        }
        Ok(raw)
    }

    pub fn set(&mut self, key: &str, value: impl Into<String>) -> Result<(), ConfigError> {
        if !KEYS.contains(&key) {
            return Err(ConfigError::new(key, "unknown key"));
        }
        self.pairs.insert(key.to_string(), value.into());
        Ok(())
    }

    pub fn get(&self, key: &str) -> Option<&str> {
        self.pairs.get(key).map(String::as_str)
    }

    /// Later values win.
    pub fn merge(&mut self, other: RawConfig) {
        self.pairs.extend(other.pairs);
    }

    fn parsed<T: FromStr>(&self, key: &str) -> Result<Option<T>, ConfigError>
    where
        T::Err: fmt::Display,
    {
        self.get(key)
            .map(|v| {
                v.parse::<T>()
                    .map_err(|e| ConfigError::new(key, format!("`{v}`: {e}")))
            })
            .transpose()
    }

    fn flag(&self, key: &str) -> Result<bool, ConfigError> {
        match self.get(key) {
            None | Some("false") | Some("0") => Ok(false),
            Some("true") | Some("1") | Some("") => Ok(true),
            Some(v) => Err(ConfigError::new(key, format!("`{v}` is not a boolean"))),
        }
    }

    pub fn validate(&self, experiment: ExperimentKind) -> Result<ExperimentConfig, ConfigError> {
        let default_objective = match experiment {
            ExperimentKind::Poisson => ObjectiveName::Poisson,
            ExperimentKind::SaddleMc => ObjectiveName::Quartic,
            _ => ObjectiveName::Identity,
        };
        let objective = self
            .parsed::<ObjectiveName>("objective")?
            .unwrap_or(default_objective);
        if experiment == ExperimentKind::Poisson && objective != ObjectiveName::Poisson {
            return Err(ConfigError::new(
                "objective",
                "the poisson experiment uses the poisson objective",
            ));
        }
        let dim = self.parsed::<usize>("dim")?.unwrap_or(match experiment {
            ExperimentKind::DualityCheck => 50,
            _ => objective.default_dim(),
        });
        if dim == 0 {
            return Err(ConfigError::new("dim", "must be positive"));
        }
        if objective == ObjectiveName::Poisson && dim > 2 {
            return Err(ConfigError::new("dim", "poisson grids are 1D or 2D"));
        }
        if matches!(
            objective,
            ObjectiveName::Indefinite | ObjectiveName::Quartic
        ) && experiment != ExperimentKind::DualityCheck
            && dim < 2
        {
            return Err(ConfigError::new("dim", "needs at least 2"));
        }
        let n = self.parsed::<usize>("n")?.unwrap_or(63);
        if n == 0 {
            return Err(ConfigError::new("n", "must be positive"));
        }
        let source = match self.get("source") {
            None => Source::Sine,
            Some(s) => Source::parse(s).ok_or_else(|| {
                ConfigError::new(
                    "source",
                    format!("`{s}` is not one of sine, constant, bump"),
                )
            })?,
        };

        let p = self.parsed::<f64>("p")?.unwrap_or(2.0);
        if !(p > 1.0 && p.is_finite()) {
            return Err(ConfigError::new("p", format!("{p} not in (1, inf)")));
        }
        if objective == ObjectiveName::Poisson && p != 2.0 && experiment == ExperimentKind::Poisson
        {
            return Err(ConfigError::new(
                "p",
                "the poisson experiment runs in the Euclidean geometry",
            ));
        }
        let rule = match self.get("rule") {
            None | Some("local") => StepKind::LocalBacktracking,
            Some("armijo") => StepKind::Armijo,
            Some(s) => {
                return Err(ConfigError::new(
                    "rule",
                    format!("`{s}` is not one of local, armijo"),
                ))
            }
        };

        let base = HyperParams::default();
        let alpha = self.parsed::<f64>("alpha")?.unwrap_or(base.alpha);
        let beta = self.parsed::<f64>("beta")?.unwrap_or(base.beta);
        let delta0 = self.parsed::<f64>("delta0")?.unwrap_or(base.delta0);
        let hyper = HyperParams::new(alpha, beta, delta0).map_err(|e| match e {
            crate::Error::InvalidParameter { name, reason } => ConfigError::new(name, reason),
            other => ConfigError::new("hyperparameters", other.to_string()),
        })?;

        let d = match objective {
            ObjectiveName::Poisson => poisson_stop(dim, n, &hyper, self.parsed("grad-tol")?)?,
            _ => objective.default_stop(),
        };
        let stop = StopSpec {
            max_iters: self.parsed("max-iters")?.unwrap_or(d.max_iters),
            grad_tol: self.parsed("grad-tol")?.unwrap_or(d.grad_tol),
            step_tol: self.parsed("step-tol")?.unwrap_or(d.step_tol),
            divergence_floor: self
                .parsed("divergence-floor")?
                .unwrap_or(d.divergence_floor),
            norm_ceiling: self.parsed("norm-ceiling")?.unwrap_or(d.norm_ceiling),
        };
        if stop.max_iters < 1 {
            return Err(ConfigError::new("max-iters", "must be at least 1"));
        }
        if !(stop.grad_tol > 0.0) {
            return Err(ConfigError::new("grad-tol", "must be positive"));
        }
        if !(stop.step_tol > 0.0) {
            return Err(ConfigError::new("step-tol", "must be positive"));
        }
        if stop.divergence_floor.is_nan() {
            return Err(ConfigError::new("divergence-floor", "is NaN"));
        }
        if !(stop.norm_ceiling > 0.0) {
            return Err(ConfigError::new("norm-ceiling", "must be positive"));
        }

        let trials = self.parsed::<usize>("trials")?.unwrap_or(match experiment {
            ExperimentKind::DualityCheck => 1000,
            _ => 500,
        });
        let radius = self.parsed::<f64>("radius")?.unwrap_or(1.0);
        if !(radius > 0.0 && radius.is_finite()) {
            return Err(ConfigError::new("radius", "must be positive"));
        }
        let jitter = self.parsed::<f64>("jitter")?.unwrap_or(0.05);
        if !(0.0..1.0).contains(&jitter) {
            return Err(ConfigError::new(
                "jitter",
                format!("{jitter} not in [0, 1)"),
            ));
        }
        let seed = self.parsed::<u64>("seed")?.unwrap_or(0);

        let x0 = match self.get("x0") {
            None => None,
            Some(s) => {
                let v: Result<Vec<f64>, _> =
                    s.split(',').map(|t| t.trim().parse::<f64>()).collect();
                let v = v.map_err(|e| ConfigError::new("x0", format!("`{s}`: {e}")))?;
                if v.iter().any(|c| !c.is_finite()) {
                    return Err(ConfigError::new("x0", "non-finite coordinate"));
                }
                Some(v)
            }
        };

        Ok(ExperimentConfig {
            experiment,
            objective,
            dim,
            n,
            source,
            p,
            rule,
            hyper,
            stop,
            trials,
            radius,
            jitter,
            seed,
            x0,
            out: PathBuf::from(self.get("out").unwrap_or("out")),
            keep_traces: self.flag("keep-traces")?,
            parallel: !self.flag("serial")?,
        })
    }
}

/// Poisson stopping rule for a given grid. The energy has a constant
/// Lipschitz bound, so the terminal step `delta * grad_tol` is known up front
/// and `step_tol` is set to half of it. The budget grows with the condition
/// number, like `(n + 1)^2`, from 200 000 at `n = 63`.
fn poisson_stop(
    dim: usize,
    n: usize,
    hyper: &HyperParams,
    grad_tol: Option<f64>,
) -> Result<StopSpec, ConfigError> {
    let base = ObjectiveName::Poisson.default_stop();
    let grad_tol = grad_tol.unwrap_or(base.grad_tol);
    let grid = GridSpec::new(dim, n).map_err(|e| ConfigError::new("n", e.to_string()))?;
    let lipschitz = grid.weight() * grid.laplacian_norm_bound();
    let delta = local_step_size(hyper, 0.0, 1.0, lipschitz)
        .map_err(|e| ConfigError::new("hyperparameters", e.to_string()))?;
    let scale = ((n + 1) as f64 / 64.0).powi(2).max(1.0);
    Ok(StopSpec {
        max_iters: (base.max_iters as f64 * scale).ceil() as usize,
        grad_tol,
        step_tol: 0.5 * delta * grad_tol,
        ..base
    })
}
