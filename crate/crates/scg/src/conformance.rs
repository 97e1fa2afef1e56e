//! Executable pass/fail checks packaging the optimizer's provable
//! properties: moment bounds on the momentum and the search direction,
//! preconditioner monotonicity, reduction equivalences against independent
//! reference trajectories, oracle unbiasedness, and the convexity links
//! between the performance measure and the suboptimality gap.
//!
//! Expectation-level bounds are asserted on trial means, matching the
//! statements they implement; per-trial assertions would be stricter than
//! claimed. Every check is deterministic given its configuration and seed.

use crate::diagnostics::{trial_mean, Trace};
use crate::optimizer::{PrecondKind, ScgOptimizer, ScgState};
use crate::problems::{FiniteSumProblem, MinibatchOracle, Sampling};
use crate::schedules::HyperSchedule;
use crate::vecmath::Vector;
use crate::{Error, Result, Scalar};

/// Outcome of one check. `pass` holds exactly when the worst violation is
/// within the check's stated tolerance.
#[derive(Debug, Clone)]
pub struct CheckReport {
    pub name: String,
    pub pass: bool,
    pub worst_violation: f64,
    pub worst_step: u64,
    pub trials: usize,
    pub note: Option<String>,
}

impl CheckReport {
    fn new(name: &str, trials: usize) -> Self {
        CheckReport {
            name: name.to_string(),
            pass: true,
            worst_violation: 0.0,
            worst_step: 0,
            trials,
            note: None,
        }
    }

    fn record(&mut self, violation: f64, step: u64) {
        if violation > self.worst_violation {
            self.worst_violation = violation;
            self.worst_step = step;
        }
    }
}

/// Trial-mean squared momentum norm stays below `m_tilde_sq` at every
/// logged step, tolerance zero.
pub fn check_momentum_bound<T: Scalar>(
    traces: &[Trace<T>],
    m_tilde_sq: T,
) -> Result<CheckReport> {
    let mut report = CheckReport::new("momentum_bound", traces.len());
    for (n, mean) in trial_mean(traces, |r| r.m_sq)? {
        let excess = (mean - m_tilde_sq).to_f64().unwrap_or(f64::NAN);
        if excess > 0.0 {
            report.pass = false;
            report.record(excess, n);
        }
    }
    Ok(report)
}

/// Trial-mean squared direction norm stays below `16 * m_hat_sq` at every
/// logged step, tolerance zero. The inequality is proved for `gamma <= 1`
/// and `delta <= 1/2`; larger `gamma` values are admissible for the
/// optimizer, so the check only warns about them.
pub fn check_direction_bound<T: Scalar>(
    traces: &[Trace<T>],
    m_hat_sq: T,
    schedule: &HyperSchedule<T>,
) -> Result<CheckReport> {
    let mut report = CheckReport::new("direction_bound", traces.len());
    if schedule.gamma0() > T::one() {
        report.note = Some(format!(
            "gamma0 = {} exceeds 1; the direction bound is only proved for gamma <= 1",
            schedule.gamma0()
        ));
    }
    let bound = T::from_f64(16.0) * m_hat_sq;
    for (n, mean) in trial_mean(traces, |r| r.dir_sq)? {
        let excess = (mean - bound).to_f64().unwrap_or(f64::NAN);
        if excess > 0.0 {
            report.pass = false;
            report.record(excess, n);
        }
    }
    Ok(report)
}

/// The preconditioner diagonal never decreased, coordinatewise and exactly,
/// over every trial. Violations are tracked stepwise during the run, so the
/// sparse logging grid cannot hide a dip.
pub fn check_precond_monotone<T: Scalar>(traces: &[Trace<T>]) -> Result<CheckReport> {
    if traces.is_empty() {
        return Err(Error::metric("monotonicity check needs at least one trace"));
    }
    let mut report = CheckReport::new("precond_monotone", traces.len());
    for t in traces {
        let worst = t.a4_worst_decrease.to_f64().unwrap_or(f64::NAN);
        if worst > 0.0 {
            report.pass = false;
            report.record(worst, t.a4_step);
        }
    }
    Ok(report)
}

/// Same monotonicity check over an explicit diagonal sequence; used by
/// mutation controls that fabricate a non-monotone preconditioner.
pub fn precond_monotone_from_diagonals<T, I>(diagonals: I) -> CheckReport
where
    T: Scalar,
    I: IntoIterator<Item = Vec<T>>,
{
    let mut report = CheckReport::new("precond_monotone", 1);
    let mut prev: Option<Vec<T>> = None;
    for (step, diag) in diagonals.into_iter().enumerate() {
        if let Some(p) = &prev {
            for i in 0..p.len().min(diag.len()) {
                let dec = (p[i] - diag[i]).to_f64().unwrap_or(f64::NAN);
                if dec > 0.0 {
                    report.pass = false;
                    report.record(dec, step as u64);
                }
            }
        }
        prev = Some(diag);
    }
    report
}

/// Per-coordinate relative deviation, zero when both values coincide.
fn rel_dev<T: Scalar>(a: T, b: T) -> f64 {
    if a == b {
        return 0.0;
    }
    let scale = a.abs().max(b.abs());
    ((a - b).abs() / scale).to_f64().unwrap_or(f64::NAN)
}

/// Iterate stream of the full optimizer under the given schedule.
#[allow(clippy::too_many_arguments)]
fn scg_trajectory<T: Scalar>(
    problem: &dyn FiniteSumProblem<T>,
    schedule: &HyperSchedule<T>,
    kind: &PrecondKind<T>,
    zeta: T,
    batch_size: usize,
    sampling: Sampling,
    seed: u64,
    steps: u64,
) -> Result<Vec<Vector<T>>> {
    let optimizer = ScgOptimizer::new(kind.clone(), zeta)?;
    let mut oracle = MinibatchOracle::new(problem.num_samples(), batch_size, sampling, seed)?;
    let mut state = ScgState::new(problem.initial_point());
    let mut xs = Vec::with_capacity(steps as usize);
    for n in 0..steps {
        let hyper = schedule.eval(n);
        let g = oracle.sample_gradient(problem, &state.x);
        optimizer.step(&mut state, &g, &hyper)?;
        xs.push(state.x.clone());
    }
    Ok(xs)
}

/// Independent straight-line transcription of the update rule used as the
/// reference route for the reduction checks. With `use_previous_direction`
/// unset the momentum consumes the raw gradient (the plain adaptive
/// method); set, it consumes `g - delta_n * dir_prev` (the non-scaled
/// conjugate direction). Deliberately does not call into [`crate::optimizer`].
#[allow(clippy::too_many_arguments)]
fn reference_trajectory<T: Scalar>(
    problem: &dyn FiniteSumProblem<T>,
    schedule: &HyperSchedule<T>,
    kind: &PrecondKind<T>,
    zeta: T,
    batch_size: usize,
    sampling: Sampling,
    seed: u64,
    steps: u64,
    use_previous_direction: bool,
) -> Result<Vec<Vector<T>>> {
    use crate::optimizer::PrecondVariant;

    let dim = problem.dim();
    let mut oracle = MinibatchOracle::new(problem.num_samples(), batch_size, sampling, seed)?;
    let mut x = problem.initial_point();
    let mut dir_prev = vec![T::zero(); dim];
    let mut m = vec![T::zero(); dim];
    let mut v = vec![T::zero(); dim];
    let mut vhat = vec![T::zero(); dim];
    let mut xs = Vec::with_capacity(steps as usize);
    for n in 0..steps {
        let hyper = schedule.eval(n);
        let g = oracle.sample_gradient(problem, &x);
        let dir: Vec<T> = if use_previous_direction {
            (0..dim).map(|i| g[i] - hyper.delta * dir_prev[i]).collect()
        } else {
            g.as_slice().to_vec()
        };
        for i in 0..dim {
            m[i] = hyper.beta * m[i] + (T::one() - hyper.beta) * dir[i];
        }
        let zeta_corr = T::one() - crate::schedules::geometric(zeta, n + 1);
        let theta_corr = T::one() - crate::schedules::geometric(kind.theta, n + 1);
        for i in 0..dim {
            let mhat = m[i] / zeta_corr;
            let h = match kind.variant {
                PrecondVariant::Identity => T::one(),
                PrecondVariant::AdamMax => {
                    v[i] = kind.theta * v[i] + (T::one() - kind.theta) * dir[i] * dir[i];
                    let vbar = v[i] / theta_corr;
                    vhat[i] = vhat[i].max(vbar);
                    vhat[i].sqrt() + kind.eps
                }
                PrecondVariant::AmsGrad => {
                    v[i] = kind.theta * v[i] + (T::one() - kind.theta) * dir[i] * dir[i];
                    vhat[i] = vhat[i].max(v[i]);
                    vhat[i].sqrt() + kind.eps
                }
            };
            let d = -mhat / h;
            x[i] += hyper.alpha * d;
        }
        dir_prev = dir;
        xs.push(x.clone());
    }
    Ok(xs)
}

fn compare_trajectories<T: Scalar>(
    report: &mut CheckReport,
    a: &[Vector<T>],
    b: &[Vector<T>],
    tol: f64,
) {
    for (step, (xa, xb)) in a.iter().zip(b.iter()).enumerate() {
        for i in 0..xa.len() {
            let dev = rel_dev(xa[i], xb[i]);
            if dev > tol {
                report.pass = false;
            }
            report.record(dev, step as u64 + 1);
        }
    }
}

/// Reduction equivalences: with `gamma = delta = 0` the optimizer must
/// reproduce the plain adaptive reference path, and with `gamma = 0` the
/// conjugate-direction reference path, coordinate by coordinate within
/// relative `1e-12` (the computation paths are arranged to agree bitwise).
/// Both routes share the sampling seed, so they see identical gradients.
#[allow(clippy::too_many_arguments)]
pub fn check_reductions<T: Scalar>(
    problem: &dyn FiniteSumProblem<T>,
    schedule: &HyperSchedule<T>,
    kind: &PrecondKind<T>,
    zeta: T,
    batch_size: usize,
    sampling: Sampling,
    seed: u64,
    steps: u64,
) -> Result<CheckReport> {
    let tol = 1e-12;
    let mut report = CheckReport::new("reductions", 1);

    let plain = schedule.with_gamma0(T::zero())?.with_delta0(T::zero())?;
    let ours = scg_trajectory(problem, &plain, kind, zeta, batch_size, sampling, seed, steps)?;
    let reference = reference_trajectory(
        problem, &plain, kind, zeta, batch_size, sampling, seed, steps, false,
    )?;
    compare_trajectories(&mut report, &ours, &reference, tol);

    let conjugate = schedule.with_gamma0(T::zero())?;
    let ours = scg_trajectory(
        problem, &conjugate, kind, zeta, batch_size, sampling, seed, steps,
    )?;
    let reference = reference_trajectory(
        problem, &conjugate, kind, zeta, batch_size, sampling, seed, steps, true,
    )?;
    compare_trajectories(&mut report, &ours, &reference, tol);

    Ok(report)
}

/// Oracle unbiasedness at a fixed point. Epoch partitioning must reproduce
/// the full gradient exactly (relative `1e-10`) after one epoch; uniform
/// sampling is checked by Monte Carlo against a three-standard-error band
/// per coordinate over `100_000` draws.
pub fn check_unbiasedness<T: Scalar>(
    problem: &dyn FiniteSumProblem<T>,
    x: &Vector<T>,
    batch_size: usize,
    sampling: Sampling,
    seed: u64,
) -> Result<CheckReport> {
    let dim = problem.dim();
    let full = problem.full_gradient(x);
    let mut report = CheckReport::new("unbiasedness", 1);
    match sampling {
        Sampling::EpochPartition => {
            let mut oracle =
                MinibatchOracle::new(problem.num_samples(), batch_size, sampling, seed)?;
            let batches = problem.num_samples() / batch_size;
            let mut acc = Vector::zeros(dim);
            for _ in 0..batches {
                acc.add_assign(&oracle.sample_gradient(problem, x))?;
            }
            let w = T::one() / T::from_f64(batches as f64);
            for i in 0..dim {
                let mean = acc[i] * w;
                let rel = ((mean - full[i]).abs() / (T::one() + full[i].abs()))
                    .to_f64()
                    .unwrap_or(f64::NAN);
                if rel > 1e-10 {
                    report.pass = false;
                }
                report.record(rel, 0);
            }
        }
        Sampling::UniformWithReplacement => {
            let draws = 100_000u64;
            let mut oracle =
                MinibatchOracle::new(problem.num_samples(), batch_size, sampling, seed)?;
            let mut sum = vec![T::zero(); dim];
            let mut sum_sq = vec![T::zero(); dim];
            for _ in 0..draws {
                let g = oracle.sample_gradient(problem, x);
                for i in 0..dim {
                    sum[i] += g[i];
                    sum_sq[i] += g[i] * g[i];
                }
            }
            let n = T::from_f64(draws as f64);
            for i in 0..dim {
                let mean = sum[i] / n;
                let var = (sum_sq[i] / n - mean * mean).max(T::zero());
                let se = (var / n).sqrt();
                let guard = T::from_f64(1e-12) * (T::one() + full[i].abs());
                let excess = (mean - full[i]).abs() - T::from_f64(3.0) * se - guard;
                let rel = (excess / (T::one() + full[i].abs()))
                    .to_f64()
                    .unwrap_or(f64::NAN);
                if rel > 0.0 {
                    report.pass = false;
                    report.record(rel, 0);
                }
            }
        }
    }
    Ok(report)
}

/// Convexity links between the performance measure and the suboptimality
/// gap, both pointwise (`f(x_n) - f_star <= V_n`) and through the averaged
/// iterate (`f(xbar_n) - f_star <= avg V_n`), absolute tolerance `1e-9`.
/// The traces must have been recorded against the problem's optimum.
pub fn check_convex_links<T: Scalar>(
    traces: &[Trace<T>],
    problem: &dyn FiniteSumProblem<T>,
) -> Result<CheckReport> {
    if !problem.is_convex() {
        return Err(Error::metric("convexity links need a convex problem"));
    }
    let (x_star, f_star) = problem
        .optimum()
        .ok_or_else(|| Error::metric("convexity links need a known optimum"))?;
    for t in traces {
        match &t.x_ref {
            Some(r) if r == x_star => {}
            _ => {
                return Err(Error::metric(
                    "convexity links need traces recorded against the optimum",
                ))
            }
        }
    }
    let tol = 1e-9;
    let mut report = CheckReport::new("convex_links", traces.len());
    for t in traces {
        for row in &t.rows {
            let v = row
                .v
                .ok_or_else(|| Error::metric("trace row lacks the performance measure"))?;
            let avg_v = row.avg_v.unwrap_or(v);
            let pointwise = ((row.f - f_star) - v).to_f64().unwrap_or(f64::NAN);
            let averaged = ((row.f_avg_iterate - f_star) - avg_v)
                .to_f64()
                .unwrap_or(f64::NAN);
            for excess in [pointwise, averaged] {
                if excess > tol {
                    report.pass = false;
                }
                if excess > 0.0 {
                    report.record(excess, row.n);
                }
            }
        }
    }
    Ok(report)
}
