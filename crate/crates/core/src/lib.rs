//! Local backtracking gradient descent on finite truncations of `l^p`
//! sequence spaces.
//!
//! The crate is organised bottom-up:
//!
//! - [`sequence_space`]: coefficient vectors tagged with their `l^p` exponent,
//!   norms, the dual pairing and the normalized duality mapping.
//! - [`objectives`]: the [`Objective`](objectives::Objective) trait, the
//!   built-in test functions and gradient / critical-point diagnostics.
//! - [`backtracking`]: step-size rules on the geometric grid `beta^n * delta0`.
//! - [`driver`]: the descent iteration, trace recording and tail diagnostics.
//! - [`poisson`]: finite-difference Poisson energy and its direct-solve oracle.
//! - [`experiments`]: configuration, the saddle-avoidance Monte Carlo study and
//!   artifact emission used by the `bdescent` binary.

// `!(x > 0.0)` rejects NaN along with non-positive values.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod backtracking;
pub mod driver;
pub mod error;
pub mod experiments;
pub mod objectives;
pub mod poisson;
pub mod sequence_space;

pub use error::{Error, Result};
pub use sequence_space::{Exponent, VecP};
