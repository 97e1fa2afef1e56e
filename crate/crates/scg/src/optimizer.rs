//! The scaled conjugate gradient update with diagonal preconditioning.
//!
//! One step, given the stochastic gradient `g` at the current iterate and
//! the schedule values `(alpha, beta, gamma, delta)` for step `n`:
//!
//! ```text
//! dir     = (1 + gamma) * g - delta * dir_prev
//! m       = beta * m_prev + (1 - beta) * dir
//! mhat    = m / (1 - zeta^(n+1))
//! H       = preconditioner update from dir           (see PrecondVariant)
//! d       = -mhat / H                                (diagonal solve)
//! x_next  = x + alpha * d
//! ```
//!
//! Setting `gamma = delta = 0` makes `dir = g`, recovering the plain
//! adaptive method for the chosen preconditioner; setting only `gamma = 0`
//! recovers the stochastic conjugate gradient direction `g - delta *
//! dir_prev`. Both reductions are exercised bitwise by the conformance
//! suite.
//!
//! Initial state uses zero vectors for the previous direction, the momentum,
//! and both second-moment accumulators. Zeros keep the moment-bound
//! constants at their gradient-only values and make the first bias-corrected
//! second moment equal to `dir_0 * dir_0` elementwise.

use crate::schedules::{geometric, HyperAt};
use crate::vecmath::{axpy, solve_diag, DiagPd, Vector};
use crate::{Error, Result, Scalar};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PrecondVariant {
    /// `H = I`; no adaptation.
    Identity,
    /// Adam-style second moment with bias correction and a running
    /// coordinatewise max, which keeps the diagonal nondecreasing:
    /// `v = theta*v + (1-theta)*dir^2`, `vbar = v / (1 - theta^(n+1))`,
    /// `vhat = max(vhat, vbar)`, `h = sqrt(vhat) + eps`.
    AdamMax,
    /// Same recursion without the bias correction:
    /// `vhat = max(vhat, v)`, `h = sqrt(vhat) + eps`.
    AmsGrad,
}

impl PrecondVariant {
    pub fn name(&self) -> &'static str {
        match self {
            PrecondVariant::Identity => "identity",
            PrecondVariant::AdamMax => "adam_max",
            PrecondVariant::AmsGrad => "ams_grad",
        }
    }
}

/// Preconditioner configuration. `eps > 0` is added after the square root,
/// which keeps the diagonal strictly positive (the raw `sqrt(vhat)` is
/// singular until every coordinate has seen a nonzero direction) without
/// disturbing its monotonicity.
#[derive(Debug, Clone)]
pub struct PrecondKind<T> {
    pub variant: PrecondVariant,
    pub theta: T,
    pub eps: T,
}

impl<T: Scalar> PrecondKind<T> {
    pub fn new(variant: PrecondVariant, theta: T, eps: T) -> Result<Self> {
        if !(theta >= T::zero() && theta < T::one()) {
            return Err(Error::config("theta must lie in [0, 1)"));
        }
        if eps.is_nan() || eps <= T::zero() {
            return Err(Error::config("eps must be > 0"));
        }
        Ok(PrecondKind { variant, theta, eps })
    }

    pub fn identity(dim_eps: T) -> Result<Self> {
        Self::new(PrecondVariant::Identity, T::zero(), dim_eps)
    }
}

/// Second-moment accumulators: `v` is the exponential average, `vhat` the
/// running coordinatewise max. Both start at zero and `vhat` never
/// decreases.
#[derive(Debug, Clone)]
pub struct PrecondState<T> {
    pub v: Vector<T>,
    pub vhat: Vector<T>,
}

impl<T: Scalar> PrecondState<T> {
    pub fn zeros(dim: usize) -> Self {
        PrecondState {
            v: Vector::zeros(dim),
            vhat: Vector::zeros(dim),
        }
    }
}

/// Full optimizer state for one run.
#[derive(Debug, Clone)]
pub struct ScgState<T> {
    /// Current iterate `x_n`.
    pub x: Vector<T>,
    /// Previous search direction (zero before the first step).
    pub dir_prev: Vector<T>,
    /// Previous momentum (zero before the first step).
    pub m_prev: Vector<T>,
    pub precond: PrecondState<T>,
    /// Completed step count.
    pub n: u64,
}

impl<T: Scalar> ScgState<T> {
    pub fn new(x0: Vector<T>) -> Self {
        let dim = x0.len();
        ScgState {
            x: x0,
            dir_prev: Vector::zeros(dim),
            m_prev: Vector::zeros(dim),
            precond: PrecondState::zeros(dim),
            n: 0,
        }
    }

    pub fn dim(&self) -> usize {
        self.x.len()
    }
}

/// Per-step quantities surfaced for tracing.
#[derive(Debug, Clone)]
pub struct StepOutcome<T> {
    /// Squared norm of the search direction `dir_n`.
    pub dir_sq: T,
    /// Squared norm of the momentum `m_n`.
    pub m_sq: T,
    /// The preconditioner diagonal used for this step.
    pub h: DiagPd<T>,
}

/// `(1 + gamma) * g - delta * dir_prev`.
pub fn scg_direction<T: Scalar>(
    g: &Vector<T>,
    dir_prev: &Vector<T>,
    gamma: T,
    delta: T,
) -> Result<Vector<T>> {
    if g.len() != dir_prev.len() {
        return Err(Error::DimensionMismatch {
            left: g.len(),
            right: dir_prev.len(),
        });
    }
    let scale = T::one() + gamma;
    Ok(Vector::new(
        g.iter()
            .zip(dir_prev.iter())
            .map(|(&gi, &pi)| scale * gi - delta * pi)
            .collect(),
    ))
}

/// Momentum update with bias correction: returns `(m_n, mhat_n)` where
/// `m_n = beta * m_prev + (1 - beta) * dir` and
/// `mhat_n = m_n / (1 - zeta^(n+1))`.
pub fn momentum_update<T: Scalar>(
    m_prev: &Vector<T>,
    dir: &Vector<T>,
    beta: T,
    zeta: T,
    n: u64,
) -> Result<(Vector<T>, Vector<T>)> {
    if m_prev.len() != dir.len() {
        return Err(Error::DimensionMismatch {
            left: m_prev.len(),
            right: dir.len(),
        });
    }
    let one_minus_beta = T::one() - beta;
    let m = Vector::new(
        m_prev
            .iter()
            .zip(dir.iter())
            .map(|(&mp, &di)| beta * mp + one_minus_beta * di)
            .collect(),
    );
    let corr = T::one() - geometric(zeta, n + 1);
    let mhat = Vector::new(m.iter().map(|&mi| mi / corr).collect());
    Ok((m, mhat))
}

/// Advances the second-moment accumulators with the current direction and
/// returns the new state together with the preconditioner diagonal.
pub fn precond_update<T: Scalar>(
    state: &PrecondState<T>,
    kind: &PrecondKind<T>,
    dir: &Vector<T>,
    n: u64,
) -> Result<(PrecondState<T>, DiagPd<T>)> {
    if state.v.len() != dir.len() {
        return Err(Error::DimensionMismatch {
            left: state.v.len(),
            right: dir.len(),
        });
    }
    let dim = dir.len();
    match kind.variant {
        PrecondVariant::Identity => Ok((state.clone(), DiagPd::identity(dim))),
        PrecondVariant::AdamMax => {
            let one_minus_theta = T::one() - kind.theta;
            let corr = T::one() - geometric(kind.theta, n + 1);
            let mut v = Vec::with_capacity(dim);
            let mut vhat = Vec::with_capacity(dim);
            let mut h = Vec::with_capacity(dim);
            for i in 0..dim {
                let vi = kind.theta * state.v[i] + one_minus_theta * dir[i] * dir[i];
                let vbar = vi / corr;
                let vh = state.vhat[i].max(vbar);
                v.push(vi);
                vhat.push(vh);
                h.push(vh.sqrt() + kind.eps);
            }
            Ok((
                PrecondState {
                    v: Vector::new(v),
                    vhat: Vector::new(vhat),
                },
                DiagPd::new(h)?,
            ))
        }
        PrecondVariant::AmsGrad => {
            let one_minus_theta = T::one() - kind.theta;
            let mut v = Vec::with_capacity(dim);
            let mut vhat = Vec::with_capacity(dim);
            let mut h = Vec::with_capacity(dim);
            for i in 0..dim {
                let vi = kind.theta * state.v[i] + one_minus_theta * dir[i] * dir[i];
                let vh = state.vhat[i].max(vi);
                v.push(vi);
                vhat.push(vh);
                h.push(vh.sqrt() + kind.eps);
            }
            Ok((
                PrecondState {
                    v: Vector::new(v),
                    vhat: Vector::new(vhat),
                },
                DiagPd::new(h)?,
            ))
        }
    }
}

/// Optimizer configuration: preconditioner plus the momentum
/// bias-correction base.
#[derive(Debug, Clone)]
pub struct ScgOptimizer<T> {
    pub kind: PrecondKind<T>,
    pub zeta: T,
}

impl<T: Scalar> ScgOptimizer<T> {
    pub fn new(kind: PrecondKind<T>, zeta: T) -> Result<Self> {
        if !(zeta >= T::zero() && zeta < T::one()) {
            return Err(Error::config("zeta must lie in [0, 1)"));
        }
        Ok(ScgOptimizer { kind, zeta })
    }

    /// One optimizer step; mutates `state` in place. Non-finite gradients or
    /// iterates abort the run rather than propagating.
    pub fn step(
        &self,
        state: &mut ScgState<T>,
        g: &Vector<T>,
        hyper: &HyperAt<T>,
    ) -> Result<StepOutcome<T>> {
        g.check_finite("stochastic gradient", state.n)?;
        let dir = scg_direction(g, &state.dir_prev, hyper.gamma, hyper.delta)?;
        let (m, mhat) = momentum_update(&state.m_prev, &dir, hyper.beta, self.zeta, state.n)?;
        let (precond, h) = precond_update(&state.precond, &self.kind, &dir, state.n)?;
        let d = solve_diag(&h, &mhat)?;
        let x_next = axpy(hyper.alpha, &d, &state.x)?;
        x_next.check_finite("iterate", state.n)?;
        let outcome = StepOutcome {
            dir_sq: dir.norm_sq(),
            m_sq: m.norm_sq(),
            h,
        };
        state.x = x_next;
        state.dir_prev = dir;
        state.m_prev = m;
        state.precond = precond;
        state.n += 1;
        Ok(outcome)
    }
}
