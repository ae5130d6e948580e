//! The descent iteration `x_{n+1} = x_n - delta(x_n) d(x_n)`.
//!
//! [`run_descent`] records every iterate's value, gradient norm, step size
//! and step norm, keeps the last [`TAIL_CAPACITY`] iterates for tail
//! diagnostics, and stops on the first condition that fires. Within one
//! iterate the outcome precedence is
//!
//! `StepSizeFailure > DivergingValue > EscapingNorm > GradConverged >
//! StepConverged > BudgetExhausted`.

use std::collections::VecDeque;
use std::io::Write;

use serde::Serialize;

use crate::backtracking::{direction_from_gradient, LocalData, StepKind, StepRule};
use crate::error::{Error, Result};
use crate::objectives::{classify_critical_point, Objective, PointClass};
use crate::sequence_space::{axpy, VecP};

/// Number of trailing iterates retained by the driver.
pub const TAIL_CAPACITY: usize = 64;

/// Consecutive sub-tolerance steps required for [`Outcome::StepConverged`].
pub const STEP_STREAK: usize = 10;

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct StopSpec {
    pub max_iters: usize,
    pub grad_tol: f64,
    pub step_tol: f64,
    pub divergence_floor: f64,
    pub norm_ceiling: f64,
}

impl Default for StopSpec {
    fn default() -> Self {
        StopSpec {
            max_iters: 100_000,
            grad_tol: 1e-8,
            step_tol: 1e-9,
            divergence_floor: -1e12,
            norm_ceiling: 1e8,
        }
    }
}

impl StopSpec {
    pub fn validate(&self) -> Result<()> {
        if self.max_iters < 1 {
            return Err(Error::invalid("max_iters", "must be at least 1"));
        }
        if !(self.grad_tol > 0.0) {
            return Err(Error::invalid("grad_tol", "must be positive"));
        }
        if !(self.step_tol > 0.0) {
            return Err(Error::invalid("step_tol", "must be positive"));
        }
        if self.divergence_floor.is_nan() {
            return Err(Error::invalid("divergence_floor", "is NaN"));
        }
        if !(self.norm_ceiling > 0.0) {
            return Err(Error::invalid("norm_ceiling", "must be positive"));
        }
        Ok(())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum Outcome {
    GradConverged,
    StepConverged,
    DivergingValue,
    EscapingNorm,
    BudgetExhausted,
    StepSizeFailure,
}

impl Outcome {
    pub fn is_converged(self) -> bool {
        matches!(self, Outcome::GradConverged | Outcome::StepConverged)
    }

    pub fn is_diverging(self) -> bool {
        matches!(self, Outcome::DivergingValue | Outcome::EscapingNorm)
    }
}

/// One iterate. `delta` and `step_norm` are absent on the terminal record,
/// from which no step is taken.
#[derive(Clone, Debug, PartialEq)]
pub struct IterRecord {
    pub iter: usize,
    pub value: f64,
    pub grad_norm: f64,
    pub delta: Option<f64>,
    pub step_norm: Option<f64>,
    /// `|d(x_n)|`, equal to `grad_norm` up to rounding.
    pub direction_norm: f64,
    pub local: LocalData,
}

#[derive(Clone, Debug)]
pub struct DescentTrace {
    pub records: Vec<IterRecord>,
    pub terminal: VecP,
    pub outcome: Outcome,
    /// Why the step-size search failed, for [`Outcome::StepSizeFailure`].
    pub failure: Option<String>,
    tail: VecDeque<VecP>,
}

impl DescentTrace {
    /// Number of steps taken (index of the terminal record).
    pub fn iters(&self) -> usize {
        self.records.len() - 1
    }

    pub fn last(&self) -> &IterRecord {
        self.records
            .last()
            .expect("a trace always holds the starting point")
    }

    /// The retained trailing iterates, oldest first; the last one is the
    /// terminal point.
    pub fn tail_points(&self) -> impl Iterator<Item = &VecP> {
        self.tail.iter()
    }

    pub fn summary(&self) -> TraceSummary {
        let last = self.last();
        TraceSummary {
            outcome: self.outcome,
            iters: self.iters(),
            final_f: last.value,
            final_grad_norm: last.grad_norm,
            terminal_point: self.terminal.coeffs().to_vec(),
        }
    }
}

/// JSON summary of a single run.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct TraceSummary {
    pub outcome: Outcome,
    pub iters: usize,
    pub final_f: f64,
    pub final_grad_norm: f64,
    pub terminal_point: Vec<f64>,
}

/// Runs the descent from `x0` until a stop condition fires.
///
/// The iterates live in the exponent carried by `x0`; gradients come back in
/// the conjugate exponent and are mapped to directions by the duality map.
/// Non-finite values or gradients abort the run with the iteration index.
pub fn run_descent(
    obj: &dyn Objective,
    x0: &VecP,
    rule: &StepRule,
    stop: &StopSpec,
) -> Result<DescentTrace> {
    stop.validate()?;
    if x0.dim() != obj.dim() {
        return Err(Error::DimensionMismatch {
            left: obj.dim(),
            right: x0.dim(),
        });
    }
    if !x0.is_finite() {
        return Err(Error::NonFiniteEvaluation {
            what: "starting point",
            iter: 0,
        });
    }

    let mut x = x0.clone();
    let mut records = Vec::new();
    let mut tail = VecDeque::with_capacity(TAIL_CAPACITY);
    let mut streak = 0usize;

    for iter in 0.. {
        let value = obj.value(&x);
        if !value.is_finite() {
            return Err(Error::NonFiniteEvaluation {
                what: "value",
                iter,
            });
        }
        let grad = obj.gradient(&x);
        if !grad.is_finite() {
            return Err(Error::NonFiniteEvaluation {
                what: "gradient",
                iter,
            });
        }
        let grad_norm = grad.norm();
        let direction = direction_from_gradient(&grad).with_exponent(x.exponent());
        let local = LocalData::at(obj, &x);

        // Armijo has no step to offer at an exact critical point.
        let step = if rule.kind == StepKind::Armijo && grad_norm == 0.0 {
            None
        } else {
            Some(rule.step_size(obj, &x, grad_norm, &direction, &local))
        };

        if tail.len() == TAIL_CAPACITY {
            tail.pop_front();
        }
        tail.push_back(x.clone());
        records.push(IterRecord {
            iter,
            value,
            grad_norm,
            delta: None,
            step_norm: None,
            direction_norm: direction.norm(),
            local,
        });

        let mut failure = None;
        let outcome = match &step {
            Some(Err(e)) => {
                failure = Some(e.to_string());
                Some(Outcome::StepSizeFailure)
            }
            _ if value < stop.divergence_floor => Some(Outcome::DivergingValue),
            _ if x.norm() > stop.norm_ceiling => Some(Outcome::EscapingNorm),
            _ if grad_norm <= stop.grad_tol => Some(Outcome::GradConverged),
            _ if streak >= STEP_STREAK => Some(Outcome::StepConverged),
            _ if iter >= stop.max_iters => Some(Outcome::BudgetExhausted),
            _ => None,
        };
        if let Some(outcome) = outcome {
            return Ok(DescentTrace {
                records,
                terminal: x,
                outcome,
                failure,
                tail,
            });
        }

        let delta = match step {
            Some(Ok(d)) => d,
            // a zero Armijo gradient is always caught as GradConverged
            _ => unreachable!("a zero gradient is below any positive grad_tol"),
        };
        let next = axpy(-delta, &direction, &x)?;
        let step_norm = next.sub(&x)?.norm();
        let rec = records.last_mut().expect("just pushed");
        rec.delta = Some(delta);
        rec.step_norm = Some(step_norm);
        streak = if step_norm <= stop.step_tol {
            streak + 1
        } else {
            0
        };
        x = next;
    }
    unreachable!("the iteration loop only exits by returning")
}

/// Tail summary of a trace.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct TailDiagnostics {
    /// Largest step norm in the tail window.
    pub max_step_norm: f64,
    /// `max |x_i - x_j|` over the retained iterates inside the tail window.
    pub diameter: f64,
    pub last_grad_norm: f64,
    /// Records in the tail window.
    pub window: usize,
}

/// Diagnostics over the last `ceil(tail_fraction * len)` records (at least
/// two when the trace has two, so that the window contains a step).
pub fn tail_diagnostics(trace: &DescentTrace, tail_fraction: f64) -> Result<TailDiagnostics> {
    if !(tail_fraction > 0.0 && tail_fraction < 1.0) {
        return Err(Error::invalid(
            "tail_fraction",
            format!("{tail_fraction} not in (0, 1)"),
        ));
    }
    let len = trace.records.len();
    let window = ((tail_fraction * len as f64).ceil() as usize)
        .max(2)
        .min(len);
    let recs = &trace.records[len - window..];
    let max_step_norm = recs.iter().filter_map(|r| r.step_norm).fold(0.0, f64::max);
    let pts: Vec<&VecP> = trace
        .tail
        .iter()
        .skip(trace.tail.len().saturating_sub(window))
        .collect();
    let mut diameter = 0.0_f64;
    for (i, a) in pts.iter().enumerate() {
        for b in &pts[i + 1..] {
            diameter = diameter.max(a.sub(b)?.norm());
        }
    }
    Ok(TailDiagnostics {
        max_step_norm,
        diameter,
        last_grad_norm: trace.last().grad_norm,
        window,
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum Audit {
    CriticalMinimumLike,
    CriticalSaddle,
    CriticalMaximum,
    NotConverged,
    Indeterminate,
}

/// Classifies the terminal point of a converged trace; diverging or
/// unfinished traces, and converged ones stopped away from a critical point,
/// are `NotConverged`.
pub fn converged_point_audit(obj: &dyn Objective, trace: &DescentTrace, tol: f64) -> Result<Audit> {
    if !trace.outcome.is_converged() {
        return Ok(Audit::NotConverged);
    }
    Ok(match classify_critical_point(obj, &trace.terminal, tol)? {
        PointClass::Minimum => Audit::CriticalMinimumLike,
        PointClass::Saddle => Audit::CriticalSaddle,
        PointClass::Maximum => Audit::CriticalMaximum,
        PointClass::NotCritical => Audit::NotConverged,
        PointClass::Indeterminate => Audit::Indeterminate,
    })
}

fn sci(v: f64) -> String {
    format!("{v:.16e}")
}

/// Trace as CSV: `iter,f,grad_norm,delta,step_norm`, 17 significant digits.
/// The terminal row leaves `delta` and `step_norm` empty.
pub fn write_trace_csv<W: Write>(trace: &DescentTrace, mut w: W) -> std::io::Result<()> {
    writeln!(w, "iter,f,grad_norm,delta,step_norm")?;
    for r in &trace.records {
        writeln!(
            w,
            "{},{},{},{},{}",
            r.iter,
            sci(r.value),
            sci(r.grad_norm),
            r.delta.map(sci).unwrap_or_default(),
            r.step_norm.map(sci).unwrap_or_default()
        )?;
    }
    Ok(())
}

/// Plot data: `iter,f,grad_norm`.
pub fn write_plot_csv<W: Write>(trace: &DescentTrace, mut w: W) -> std::io::Result<()> {
    writeln!(w, "iter,f,grad_norm")?;
    for r in &trace.records {
        writeln!(w, "{},{},{}", r.iter, sci(r.value), sci(r.grad_norm))?;
    }
    Ok(())
}
