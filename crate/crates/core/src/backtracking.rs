//! Step-size selection on the geometric grid `{beta^n * delta0 : n = 0, 1, ...}`.
//!
//! Two rules are provided:
//!
//! - **Local backtracking**: the largest grid value `delta` with
//!   `delta < alpha / L(x)` and `delta * |grad f(x)| < r(x)`, where `(r, L)` is
//!   the local Lipschitz data of the objective. No function evaluations are
//!   needed.
//! - **Armijo**: the largest grid value with
//!   `f(x - delta d) <= f(x) - alpha * delta * <grad f(x), d>`.
//!
//! Grid values are produced by repeated multiplication from `delta0`, so a
//! returned step is bitwise equal to the corresponding grid element.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::objectives::Objective;
use crate::sequence_space::{axpy, duality_map, pairing, VecP};

/// Smallest grid value the search is allowed to reach.
const GRID_FLOOR: f64 = 1e-300;

/// Number of halvings that walks the grid from `delta0` down to `1e-300`.
/// Zero when `delta0` is already below that floor.
pub fn grid_budget(hp: &HyperParams) -> u32 {
    let reach = (GRID_FLOOR / hp.delta0).ln() / hp.beta.ln();
    if reach.is_finite() && reach > 0.0 {
        reach.floor().min(u32::MAX as f64) as u32
    } else {
        0
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct HyperParams {
    pub alpha: f64,
    pub beta: f64,
    pub delta0: f64,
}

impl HyperParams {
    pub fn new(alpha: f64, beta: f64, delta0: f64) -> Result<Self> {
        if !(alpha > 0.0 && alpha < 1.0) {
            return Err(Error::invalid("alpha", format!("{alpha} not in (0, 1)")));
        }
        if !(beta > 0.0 && beta < 1.0) {
            return Err(Error::invalid("beta", format!("{beta} not in (0, 1)")));
        }
        if !(delta0 > 0.0 && delta0.is_finite()) {
            return Err(Error::invalid(
                "delta0",
                format!("{delta0} must be positive"),
            ));
        }
        Ok(HyperParams {
            alpha,
            beta,
            delta0,
        })
    }
}

impl Default for HyperParams {
    fn default() -> Self {
        HyperParams {
            alpha: 0.5,
            beta: 0.5,
            delta0: 1.0,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum StepKind {
    LocalBacktracking,
    Armijo,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct StepRule {
    pub kind: StepKind,
    pub hyper: HyperParams,
    max_halvings: u32,
}

impl StepRule {
    /// The reduction budget is capped so that the grid never goes below
    /// `1e-300`.
    pub fn new(kind: StepKind, hyper: HyperParams, max_halvings: u32) -> Result<Self> {
        if max_halvings == 0 {
            return Err(Error::invalid("max_halvings", "must be positive"));
        }
        let cap = grid_budget(&hyper);
        if cap == 0 {
            return Err(Error::invalid("delta0", "grid starts below 1e-300"));
        }
        Ok(StepRule {
            kind,
            hyper,
            max_halvings: max_halvings.min(cap),
        })
    }

    pub fn local(hyper: HyperParams) -> Self {
        Self::new(
            StepKind::LocalBacktracking,
            hyper,
            grid_budget(&hyper).max(1),
        )
        .expect("valid hyperparameters")
    }

    pub fn armijo(hyper: HyperParams) -> Self {
        Self::new(StepKind::Armijo, hyper, grid_budget(&hyper).max(1))
            .expect("valid hyperparameters")
    }

    pub fn max_halvings(&self) -> u32 {
        self.max_halvings
    }
}

/// Largest grid value accepted by `accept`, scanning `n = 0, 1, ...`.
fn first_on_grid(
    hp: &HyperParams,
    budget: u32,
    mut accept: impl FnMut(f64) -> bool,
) -> Result<f64> {
    let mut delta = hp.delta0;
    for _ in 0..=budget {
        if accept(delta) {
            return Ok(delta);
        }
        delta *= hp.beta;
    }
    Err(Error::StepSizeExhausted(budget))
}

/// Local backtracking step `delta_hat(x)`: the largest `beta^n * delta0` with
/// `delta < alpha / L` and `delta * grad_norm < r`, both strict. The second
/// condition holds trivially when `grad_norm == 0`.
pub fn local_step_size(hp: &HyperParams, grad_norm: f64, r_x: f64, l_x: f64) -> Result<f64> {
    local_step_size_with_budget(hp, grad_norm, r_x, l_x, grid_budget(hp))
}

pub fn local_step_size_with_budget(
    hp: &HyperParams,
    grad_norm: f64,
    r_x: f64,
    l_x: f64,
    budget: u32,
) -> Result<f64> {
    if !(r_x > 0.0) {
        return Err(Error::invalid("r(x)", format!("{r_x} must be positive")));
    }
    if !(l_x > 0.0) {
        return Err(Error::invalid("L(x)", format!("{l_x} must be positive")));
    }
    if !(grad_norm >= 0.0) {
        return Err(Error::invalid(
            "grad_norm",
            format!("{grad_norm} must be non-negative"),
        ));
    }
    let bound = hp.alpha / l_x;
    first_on_grid(hp, budget, |d| d < bound && d * grad_norm < r_x)
}

/// Armijo step along `direction`:
/// the largest `beta^n * delta0` with
/// `f(x - delta d) <= f(x) - alpha * delta * <grad f(x), d>`.
pub fn armijo_step_size(
    obj: &dyn Objective,
    x: &VecP,
    direction: &VecP,
    hp: &HyperParams,
) -> Result<f64> {
    armijo_step_size_with_budget(obj, x, direction, hp, grid_budget(hp))
}

pub fn armijo_step_size_with_budget(
    obj: &dyn Objective,
    x: &VecP,
    direction: &VecP,
    hp: &HyperParams,
    budget: u32,
) -> Result<f64> {
    let slope = pairing(&obj.gradient(x), direction)?;
    if !(slope > 0.0) {
        return Err(Error::NotDescentDirection(slope));
    }
    let f0 = obj.value(x);
    let dir = direction.with_exponent(x.exponent());
    first_on_grid(hp, budget, |d| {
        // shapes were checked by `pairing`
        let trial = axpy(-d, &dir, x).expect("matching shapes");
        obj.value(&trial) <= f0 - hp.alpha * d * slope
    })
}

/// Descent direction for a gradient in `l^p`: the gradient itself when
/// `p = 2`, otherwise its image under the duality mapping. Either way
/// `<g, d> = |g|^2` and `|d| = |g|`.
pub fn direction_from_gradient(grad: &VecP) -> VecP {
    duality_map(grad)
}

pub fn descent_direction(obj: &dyn Objective, x: &VecP) -> VecP {
    direction_from_gradient(&obj.gradient(x))
}

/// Local Lipschitz data `(r, L)` expressed in the geometry of the iterates.
///
/// Objectives report a Euclidean radius and a Euclidean Hessian bound. For
/// iterates in `l^q` with gradients in `l^p`:
///
/// - `p >= 2` (`q <= 2`): `|v|_2 <= |v|_q` and `|w|_p <= |w|_2`, so the
///   Euclidean data is already valid;
/// - `p < 2` (`q > 2`): the `q`-ball of radius `r / d^(1/2 - 1/q)` sits inside
///   the Euclidean ball of radius `r`, and the `q -> p` Lipschitz constant is
///   at most `d^(1/p - 1/q)` times the Euclidean one.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct LocalData {
    pub radius: f64,
    pub lipschitz: f64,
}

impl LocalData {
    pub fn at(obj: &dyn Objective, x: &VecP) -> LocalData {
        let radius = obj.local_radius(x);
        let lipschitz = obj.local_lipschitz(x);
        let q = x.exponent().get();
        let p = x.exponent().conjugate().get();
        if p >= 2.0 {
            return LocalData { radius, lipschitz };
        }
        let d = x.dim() as f64;
        LocalData {
            radius: radius / d.powf(0.5 - 1.0 / q),
            lipschitz: lipschitz * d.powf(1.0 / p - 1.0 / q),
        }
    }
}

impl StepRule {
    /// Step size at `x` for the given gradient and direction.
    pub fn step_size(
        &self,
        obj: &dyn Objective,
        x: &VecP,
        grad_norm: f64,
        direction: &VecP,
        local: &LocalData,
    ) -> Result<f64> {
        match self.kind {
            StepKind::LocalBacktracking => local_step_size_with_budget(
                &self.hyper,
                grad_norm,
                local.radius,
                local.lipschitz,
                self.max_halvings,
            ),
            StepKind::Armijo => {
                armijo_step_size_with_budget(obj, x, direction, &self.hyper, self.max_halvings)
            }
        }
    }
}

/// True when `delta` equals `beta^n * delta0` (built by repeated
/// multiplication) for some `n <= budget`.
pub fn is_grid_member(hp: &HyperParams, delta: f64, budget: u32) -> bool {
    let mut g = hp.delta0;
    for _ in 0..=budget {
        if g == delta {
            return true;
        }
        if g < delta {
            return false;
        }
        g *= hp.beta;
    }
    false
}
