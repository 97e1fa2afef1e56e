//! Scaled conjugate gradient (SCG) optimization with adaptive diagonal
//! preconditioning, plus the machinery needed to study it empirically:
//! finite-sum problem oracles, hyperparameter schedules, per-run traces,
//! convergence-bound evaluation, and executable conformance checks.
//!
//! The update rule combines a scaled stochastic gradient with the previous
//! search direction,
//!
//! ```text
//! dir_n = (1 + gamma_n) * g_n - delta_n * dir_{n-1}
//! m_n   = beta_n * m_{n-1} + (1 - beta_n) * dir_n
//! mhat  = m_n / (1 - zeta^(n+1))
//! H_n d = -mhat          (H_n diagonal, positive definite)
//! x_{n+1} = x_n + alpha_n * d
//! ```
//!
//! With `gamma = delta = 0` this collapses to the familiar adaptive-method
//! family (Adam-style or AMSGrad-style depending on the preconditioner), and
//! with `gamma = 0` to the stochastic conjugate gradient method. The
//! [`conformance`] module turns those reductions, the moment bounds, and the
//! preconditioner monotonicity property into pass/fail checks over seeded
//! runs, while [`diagnostics`] evaluates the convergence-rate bounds the
//! method satisfies under constant and diminishing learning rates.
//!
//! Core numerics are generic over the scalar type via [`Scalar`]; the CLI and
//! test harness use the `f64` aliases exported at the crate root.

use std::fmt::{Debug, Display};
use std::iter::Sum;

use num_traits::{Float, FloatConst, NumAssignOps};

pub mod cli;
pub mod conformance;
pub mod config;
pub mod diagnostics;
pub mod optimizer;
pub mod output;
pub mod problems;
pub mod rng;
pub mod runner;
pub mod schedules;
pub mod vecmath;

mod error;

pub use error::{Error, Result};

/// Scalar type the core numerics are generic over. Implemented for `f32` and
/// `f64`; the tight-tolerance diagnostics are only meaningful at `f64`.
pub trait Scalar:
    Float + FloatConst + NumAssignOps + Sum + Debug + Display + Send + Sync + 'static
{
    /// Lossy conversion from `f64`, used when seeding generic state from
    /// configuration values and generated data.
    fn from_f64(v: f64) -> Self;
}

impl Scalar for f32 {
    fn from_f64(v: f64) -> Self {
        v as f32
    }
}

impl Scalar for f64 {
    fn from_f64(v: f64) -> Self {
        v
    }
}

/// Concrete `f64` aliases used by the CLI and the acceptance harness.
pub type Vector64 = vecmath::Vector<f64>;
pub type DiagPd64 = vecmath::DiagPd<f64>;
pub type HyperSchedule64 = schedules::HyperSchedule<f64>;
pub type ScgState64 = optimizer::ScgState<f64>;
pub type Trace64 = diagnostics::Trace<f64>;
