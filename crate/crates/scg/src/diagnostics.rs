//! Per-run traces and the quantities derived from them: the performance
//! measure, averaged regret, the constants entering the convergence-rate
//! bounds, the bound right-hand sides themselves, and empirical log-log rate
//! fits.
//!
//! The performance measure of a run against a reference point `x_ref` is
//! `V_n = <x_n - x_ref, grad f(x_n)>`; its running average over steps
//! `1..=n` is what the rate bounds control. Expectations are realized as
//! means over independently seeded trials.

use crate::schedules::HyperSchedule;
use crate::vecmath::Vector;
use crate::{Error, Result, Scalar};

/// One logged step. Row `n` describes the state after `n` optimizer steps:
/// full loss and gradient at the iterate `x_n`, the performance measure
/// `V_n` against the run's reference point, running aggregates over steps
/// `1..=n`, and the momentum/direction/preconditioner quantities of the step
/// that produced `x_n`.
#[derive(Debug, Clone)]
pub struct TraceRow<T> {
    pub n: u64,
    pub f: T,
    pub grad_norm: T,
    pub v: Option<T>,
    pub avg_v: Option<T>,
    pub m_sq: T,
    pub dir_sq: T,
    pub h_max: T,
    pub h_min: T,
    pub h_sum: T,
    /// Running max over iterates (including the start) of the largest
    /// squared coordinate distance to the reference point.
    pub d_hat: Option<T>,
    /// Full loss at the running average iterate `(1/n) * sum_{k<=n} x_k`.
    pub f_avg_iterate: T,
    /// Sum of the first `n` sampled batch losses, evaluated at the iterate
    /// each batch was drawn at (the first term is at the starting point).
    pub cum_sampled_loss: T,
}

/// Everything recorded about one seeded run. Rows are logged every step up
/// to 1000 and on a geometric grid afterwards; the final step is always
/// present. Run-level aggregates are maintained at every step regardless of
/// the logging cadence.
#[derive(Debug, Clone)]
pub struct Trace<T> {
    pub rows: Vec<TraceRow<T>>,
    pub seed: u64,
    pub config_hash: u64,
    pub steps: u64,
    pub x_ref: Option<Vector<T>>,
    pub final_x: Vector<T>,
    /// Largest squared norm of any sampled batch gradient.
    pub max_g_sq: T,
    /// Smallest preconditioner diagonal entry over the whole run.
    pub min_h: T,
    /// Preconditioner diagonal sum at the final step.
    pub final_h_sum: T,
    pub d_hat_final: Option<T>,
    /// Largest coordinatewise decrease of the preconditioner diagonal
    /// between consecutive steps; 0 when the diagonal never decreased.
    pub a4_worst_decrease: T,
    /// Step at which the worst decrease occurred (0 when none).
    pub a4_step: u64,
}

impl<T: Scalar> Trace<T> {
    pub fn row_at(&self, n: u64) -> Option<&TraceRow<T>> {
        self.rows
            .binary_search_by_key(&n, |r| r.n)
            .ok()
            .map(|i| &self.rows[i])
    }
}

/// `<x - x_ref, grad_full>`, the per-step performance measure.
pub fn perf_measure<T: Scalar>(x: &Vector<T>, x_ref: &Vector<T>, grad_full: &Vector<T>) -> Result<T> {
    if x.len() != x_ref.len() || x.len() != grad_full.len() {
        return Err(Error::DimensionMismatch {
            left: x.len(),
            right: x_ref.len().max(grad_full.len()),
        });
    }
    let mut acc = T::zero();
    for i in 0..x.len() {
        acc += (x[i] - x_ref[i]) * grad_full[i];
    }
    Ok(acc)
}

/// Average regret over the first `horizon` sampled losses:
/// `(sum_t (loss_t - f_star)) / horizon`. The horizon must be a logged step.
pub fn regret_avg<T: Scalar>(trace: &Trace<T>, f_star: T, horizon: u64) -> Result<T> {
    if horizon == 0 {
        return Err(Error::metric("regret horizon must be >= 1"));
    }
    let row = trace.row_at(horizon).ok_or_else(|| {
        Error::metric(format!("step {horizon} is not a logged step of this trace"))
    })?;
    let h = T::from_f64(horizon as f64);
    Ok((row.cum_sampled_loss - h * f_star) / h)
}

/// Constants entering the rate bounds, realized from one or more traces.
/// Realized suprema make the bound hypotheses true along the observed runs;
/// the bounds are then self-referential to those runs by construction.
#[derive(Debug, Clone)]
pub struct BoundConstants<T> {
    /// `D`: max squared coordinate excursion from the reference point.
    pub d_max: T,
    /// Trial-mean final preconditioner diagonal sum (valid as a supremum
    /// because the diagonal is nondecreasing).
    pub sum_b: T,
    /// Bound on the expected squared momentum norm.
    pub m_tilde_sq: T,
    /// Squared-scale bound on the direction: the direction moment stays
    /// below 16 times this value.
    pub m_hat_sq: T,
    /// Sup over the run of `max_i h_i^{-1/2}`; at most `eps^{-1/2}`.
    pub h_inv_sqrt_max: T,
    pub one_minus_beta: T,
    pub one_plus_gamma: T,
    pub one_minus_zeta: T,
}

/// Realizes [`BoundConstants`] from trial traces. `m_analytic` is the
/// problem's analytic gradient-norm bound when it has one; otherwise the
/// largest observed sampled-gradient norm stands in. With zero-initialized
/// momentum and direction the moment bounds reduce to the gradient bound
/// itself.
pub fn estimate_constants<T: Scalar>(
    traces: &[Trace<T>],
    schedule: &HyperSchedule<T>,
    m_analytic: Option<T>,
) -> Result<BoundConstants<T>> {
    if traces.is_empty() {
        return Err(Error::metric("constants need at least one trace"));
    }
    let mut d_max = T::zero();
    let mut sum_b_acc = T::zero();
    let mut min_h = T::infinity();
    let mut max_g_sq = T::zero();
    for t in traces {
        let d = t
            .d_hat_final
            .ok_or_else(|| Error::metric("constants need a reference point (no optimum known)"))?;
        d_max = d_max.max(d);
        sum_b_acc += t.final_h_sum;
        min_h = min_h.min(t.min_h);
        max_g_sq = max_g_sq.max(t.max_g_sq);
    }
    let m_sq = match m_analytic {
        Some(m) => m * m,
        None => max_g_sq,
    };
    Ok(BoundConstants {
        d_max,
        sum_b: sum_b_acc / T::from_f64(traces.len() as f64),
        m_tilde_sq: m_sq,
        m_hat_sq: m_sq,
        h_inv_sqrt_max: T::one() / min_h.sqrt(),
        one_minus_beta: T::one() - schedule.beta_sup(),
        one_plus_gamma: T::one() + schedule.gamma0(),
        one_minus_zeta: T::one() - schedule.zeta(),
    })
}

/// Right-hand side of the constant-rate bound on the running-average
/// performance measure after `n` steps:
///
/// ```text
/// D*sumB / (2*(1-beta)*alpha*n)
///   + Btilde^2 * Mtilde^2 * alpha / (2*(1-beta)*(1-zeta)^2)
///   + Mtilde * sqrt(D*d) * beta / (1-beta)
///   + 4 * Mhat * sqrt(D*d) * delta / (1+gamma)
/// ```
pub fn constant_rate_bound<T: Scalar>(
    c: &BoundConstants<T>,
    alpha: T,
    beta: T,
    delta: T,
    n: u64,
    dim: usize,
) -> Result<T> {
    if n == 0 {
        return Err(Error::metric("bound is defined for n >= 1"));
    }
    let two = T::from_f64(2.0);
    let n_t = T::from_f64(n as f64);
    let sqrt_dd = (c.d_max * T::from_f64(dim as f64)).sqrt();
    let term1 = c.d_max * c.sum_b / (two * c.one_minus_beta * alpha * n_t);
    let term2 = c.h_inv_sqrt_max * c.h_inv_sqrt_max * c.m_tilde_sq * alpha
        / (two * c.one_minus_beta * c.one_minus_zeta * c.one_minus_zeta);
    let term3 = c.m_tilde_sq.sqrt() * sqrt_dd * beta / c.one_minus_beta;
    let term4 = T::from_f64(4.0) * c.m_hat_sq.sqrt() * sqrt_dd * delta / c.one_plus_gamma;
    Ok(term1 + term2 + term3 + term4)
}

/// Right-hand side of the diminishing-rate bound for steps
/// `alpha0/(n+1)^eta` and geometric momentum/direction sequences with bases
/// `beta` and `delta`:
///
/// ```text
/// D*sumB / (2*(1-b)*n^(1-eta))
///   + Btilde^2 * Mtilde^2 / (2*(1-b)*(1-zeta)^2*(1-eta)*n^eta)
///   + beta * Mtilde * sqrt(D*d) / ((1-b)*(1-beta)*n)
///   + 4 * delta * Mhat * sqrt(D*d) / ((1-delta)*n)
/// ```
///
/// where `1-b` is the stored `one_minus_beta` constant.
pub fn diminishing_rate_bound<T: Scalar>(
    c: &BoundConstants<T>,
    eta: T,
    beta: T,
    delta: T,
    n: u64,
    dim: usize,
) -> Result<T> {
    if !(eta > T::zero() && eta < T::one()) {
        return Err(Error::config("eta must lie in (0, 1)"));
    }
    if n == 0 {
        return Err(Error::metric("bound is defined for n >= 1"));
    }
    if !(beta >= T::zero() && beta < T::one()) || !(delta >= T::zero() && delta < T::one()) {
        return Err(Error::config("geometric bases must lie in [0, 1)"));
    }
    let two = T::from_f64(2.0);
    let n_t = T::from_f64(n as f64);
    let sqrt_dd = (c.d_max * T::from_f64(dim as f64)).sqrt();
    let term1 = c.d_max * c.sum_b / (two * c.one_minus_beta * n_t.powf(T::one() - eta));
    let term2 = c.h_inv_sqrt_max * c.h_inv_sqrt_max * c.m_tilde_sq
        / (two
            * c.one_minus_beta
            * c.one_minus_zeta
            * c.one_minus_zeta
            * (T::one() - eta)
            * n_t.powf(eta));
    let term3 = beta * c.m_tilde_sq.sqrt() * sqrt_dd
        / (c.one_minus_beta * (T::one() - beta) * n_t);
    let term4 = T::from_f64(4.0) * delta * c.m_hat_sq.sqrt() * sqrt_dd
        / ((T::one() - delta) * n_t);
    Ok(term1 + term2 + term3 + term4)
}

/// Least-squares slope of `ln(value)` against `ln(n)` over the points whose
/// step index lies in `[window.0, window.1]`. Needs at least 10 points, all
/// positive.
pub fn fit_rate<T: Scalar>(series: &[(u64, T)], window: (u64, u64)) -> Result<T> {
    let pts: Vec<(T, T)> = series
        .iter()
        .filter(|(n, _)| *n >= window.0 && *n <= window.1)
        .map(|&(n, v)| (T::from_f64(n as f64), v))
        .collect();
    if pts.len() < 10 {
        return Err(Error::metric(format!(
            "rate fit needs at least 10 points in the window, got {}",
            pts.len()
        )));
    }
    if pts.iter().any(|&(_, v)| v.is_nan() || v <= T::zero()) {
        return Err(Error::metric("rate fit needs positive values"));
    }
    let count = T::from_f64(pts.len() as f64);
    let mut sx = T::zero();
    let mut sy = T::zero();
    for &(n, v) in &pts {
        sx += n.ln();
        sy += v.ln();
    }
    let (mx, my) = (sx / count, sy / count);
    let mut sxx = T::zero();
    let mut sxy = T::zero();
    for &(n, v) in &pts {
        let dx = n.ln() - mx;
        sxx += dx * dx;
        sxy += dx * (v.ln() - my);
    }
    if sxx.is_nan() || sxx <= T::zero() {
        return Err(Error::metric("rate fit window has no spread in n"));
    }
    Ok(sxy / sxx)
}

/// The common logged-step grid of a trial set; errors if the traces were not
/// logged on identical grids.
pub fn aligned_steps<T: Scalar>(traces: &[Trace<T>]) -> Result<Vec<u64>> {
    let first = traces
        .first()
        .ok_or_else(|| Error::metric("no traces to align"))?;
    let grid: Vec<u64> = first.rows.iter().map(|r| r.n).collect();
    for t in &traces[1..] {
        if t.rows.len() != grid.len() || t.rows.iter().zip(&grid).any(|(r, &n)| r.n != n) {
            return Err(Error::metric("traces have mismatched logging grids"));
        }
    }
    Ok(grid)
}

/// Trial mean of a per-row quantity on the aligned grid.
pub fn trial_mean<T: Scalar>(
    traces: &[Trace<T>],
    field: impl Fn(&TraceRow<T>) -> T,
) -> Result<Vec<(u64, T)>> {
    let grid = aligned_steps(traces)?;
    let k = T::from_f64(traces.len() as f64);
    Ok(grid
        .iter()
        .enumerate()
        .map(|(i, &n)| {
            let mut acc = T::zero();
            for t in traces {
                acc += field(&t.rows[i]);
            }
            (n, acc / k)
        })
        .collect())
}

/// Trial mean of an optional per-row quantity; errors when any trace lacks
/// the value.
pub fn trial_mean_opt<T: Scalar>(
    traces: &[Trace<T>],
    field: impl Fn(&TraceRow<T>) -> Option<T>,
    what: &str,
) -> Result<Vec<(u64, T)>> {
    let grid = aligned_steps(traces)?;
    let k = T::from_f64(traces.len() as f64);
    let mut out = Vec::with_capacity(grid.len());
    for (i, &n) in grid.iter().enumerate() {
        let mut acc = T::zero();
        for t in traces {
            match field(&t.rows[i]) {
                Some(v) => acc += v,
                None => return Err(Error::metric(format!("{what} is unavailable at step {n}"))),
            }
        }
        out.push((n, acc / k));
    }
    Ok(out)
}
