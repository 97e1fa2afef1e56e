//! Seeded run execution: one optimizer trajectory per trial, with the
//! full-gradient bookkeeping the diagnostics need at every step and sparse
//! row logging.

use rayon::prelude::*;

use crate::diagnostics::{Trace, TraceRow};
use crate::optimizer::{ScgOptimizer, ScgState};
use crate::problems::{FiniteSumProblem, MinibatchOracle, Sampling};
use crate::schedules::HyperSchedule;
use crate::vecmath::Vector;
use crate::{Error, Result, Scalar};

/// Everything a trial needs besides its seed.
pub struct TrialSettings<'a, T> {
    pub problem: &'a dyn FiniteSumProblem<T>,
    pub schedule: &'a HyperSchedule<T>,
    pub optimizer: &'a ScgOptimizer<T>,
    pub steps: u64,
    pub batch_size: usize,
    pub sampling: Sampling,
    /// Reference point for the performance measure; rows carry no `V`
    /// values without one.
    pub x_ref: Option<Vector<T>>,
    pub config_hash: u64,
}

/// Logged steps for a run of the given length: every step up to 1000, then
/// a geometric grid with ratio `2^(1/8)`, and always the final step.
pub fn log_points(steps: u64) -> Vec<u64> {
    let mut points = Vec::new();
    let dense = steps.min(1000);
    points.extend(1..=dense);
    if steps > 1000 {
        let ratio = 2f64.powf(0.125);
        let mut next = 1000f64;
        loop {
            next *= ratio;
            let n = next.ceil() as u64;
            if n >= steps {
                break;
            }
            if *points.last().unwrap() != n {
                points.push(n);
            }
        }
        points.push(steps);
    }
    points
}

/// Runs one seeded trial and records its trace.
pub fn run_trial<T: Scalar>(settings: &TrialSettings<T>, seed: u64) -> Result<Trace<T>> {
    let problem = settings.problem;
    let dim = problem.dim();
    let mut oracle = MinibatchOracle::new(
        problem.num_samples(),
        settings.batch_size,
        settings.sampling,
        seed,
    )?;
    let mut state = ScgState::new(problem.initial_point());
    let x_ref = settings.x_ref.as_ref();
    if let Some(r) = x_ref {
        if r.len() != dim {
            return Err(Error::DimensionMismatch {
                left: r.len(),
                right: dim,
            });
        }
    }

    let log_at = log_points(settings.steps);
    let mut rows: Vec<TraceRow<T>> = Vec::with_capacity(log_at.len());
    let mut next_log = 0usize;

    let mut sum_v = T::zero();
    let mut sum_x = Vector::zeros(dim);
    let mut cum_sampled_loss = T::zero();
    let mut d_hat: Option<T> = x_ref.map(|r| state.x.max_sq_dist(r)).transpose()?;
    let mut max_g_sq = T::zero();
    let mut min_h = T::infinity();
    let mut final_h_sum = T::zero();
    let mut a4_worst = T::zero();
    let mut a4_step = 0u64;
    let mut prev_h: Option<Vec<T>> = None;

    for n in 0..settings.steps {
        let hyper = settings.schedule.eval(n);
        let (sampled_loss, g) = oracle.sample_loss_grad(problem, &state.x);
        let g_sq = g.norm_sq();
        if g_sq > max_g_sq {
            max_g_sq = g_sq;
        }
        cum_sampled_loss += sampled_loss;

        let out = settings.optimizer.step(&mut state, &g, &hyper)?;

        let h = out.h.as_slice();
        if let Some(prev) = &prev_h {
            for i in 0..dim {
                let dec = prev[i] - h[i];
                if dec > a4_worst {
                    a4_worst = dec;
                    a4_step = n;
                }
            }
        }
        let h_min = out.h.min_entry();
        if h_min < min_h {
            min_h = h_min;
        }
        final_h_sum = out.h.sum();
        match &mut prev_h {
            Some(buf) => buf.copy_from_slice(h),
            None => prev_h = Some(h.to_vec()),
        }

        let completed = n + 1;
        let (f, grad) = problem.full_loss_grad(&state.x);
        if !f.is_finite() {
            return Err(Error::NonFinite {
                context: "full loss",
                step: n,
            });
        }
        grad.check_finite("full gradient", n)?;
        let v = match x_ref {
            Some(r) => {
                let v = crate::diagnostics::perf_measure(&state.x, r, &grad)?;
                sum_v += v;
                let excursion = state.x.max_sq_dist(r)?;
                if let Some(dh) = &mut d_hat {
                    if excursion > *dh {
                        *dh = excursion;
                    }
                }
                Some(v)
            }
            None => None,
        };
        sum_x.add_assign(&state.x)?;

        if next_log < log_at.len() && log_at[next_log] == completed {
            next_log += 1;
            let inv_n = T::one() / T::from_f64(completed as f64);
            let avg_iterate = sum_x.scale(inv_n);
            rows.push(TraceRow {
                n: completed,
                f,
                grad_norm: grad.norm(),
                v,
                avg_v: v.map(|_| sum_v * inv_n),
                m_sq: out.m_sq,
                dir_sq: out.dir_sq,
                h_max: out.h.max_entry(),
                h_min,
                h_sum: final_h_sum,
                d_hat,
                f_avg_iterate: problem.full_loss(&avg_iterate),
                cum_sampled_loss,
            });
        }
    }

    Ok(Trace {
        rows,
        seed,
        config_hash: settings.config_hash,
        steps: settings.steps,
        x_ref: settings.x_ref.clone(),
        final_x: state.x,
        max_g_sq,
        min_h,
        final_h_sum,
        d_hat_final: d_hat,
        a4_worst_decrease: a4_worst,
        a4_step,
    })
}

/// Runs `trials` independent trials in a worker pool; trial `k` uses seed
/// `base_seed + k`. Traces come back in trial order regardless of
/// scheduling.
pub fn run_trials<T: Scalar>(
    settings: &TrialSettings<T>,
    base_seed: u64,
    trials: usize,
) -> Result<Vec<Trace<T>>> {
    if trials == 0 {
        return Err(Error::config("trials must be >= 1"));
    }
    (0..trials as u64)
        .into_par_iter()
        .map(|k| run_trial(settings, base_seed.wrapping_add(k)))
        .collect()
}

/// Lean un-traced run returning only the final iterate; used to designate a
/// reference point for problems with no known optimum.
pub fn reference_final_iterate<T: Scalar>(
    problem: &dyn FiniteSumProblem<T>,
    schedule: &HyperSchedule<T>,
    optimizer: &ScgOptimizer<T>,
    steps: u64,
    batch_size: usize,
    sampling: Sampling,
    seed: u64,
) -> Result<Vector<T>> {
    let mut oracle = MinibatchOracle::new(problem.num_samples(), batch_size, sampling, seed)?;
    let mut state = ScgState::new(problem.initial_point());
    for n in 0..steps {
        let hyper = schedule.eval(n);
        let g = oracle.sample_gradient(problem, &state.x);
        optimizer.step(&mut state, &g, &hyper)?;
    }
    Ok(state.x)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::optimizer::{PrecondKind, PrecondVariant};
    use crate::problems::QuadraticSum;

    fn settings<'a>(
        problem: &'a QuadraticSum<f64>,
        schedule: &'a HyperSchedule<f64>,
        optimizer: &'a ScgOptimizer<f64>,
        x_ref: Option<Vector<f64>>,
        steps: u64,
    ) -> TrialSettings<'a, f64> {
        TrialSettings {
            problem,
            schedule,
            optimizer,
            steps,
            batch_size: 4,
            sampling: Sampling::EpochPartition,
            x_ref,
            config_hash: 0,
        }
    }

    #[test]
    fn log_grid_is_dense_then_geometric() {
        let pts = log_points(50);
        assert_eq!(pts, (1..=50).collect::<Vec<_>>());
        let pts = log_points(100_000);
        assert_eq!(pts[..1000], (1..=1000u64).collect::<Vec<_>>()[..]);
        assert_eq!(*pts.last().unwrap(), 100_000);
        for w in pts.windows(2) {
            assert!(w[1] > w[0]);
        }
        // Geometric spacing keeps the tail compact but well-populated.
        let tail = pts.iter().filter(|&&n| n > 1000).count();
        assert!(tail > 40 && tail < 100, "tail points: {tail}");
    }

    #[test]
    fn incremental_averages_match_from_scratch_recomputation() {
        let problem = QuadraticSum::<f64>::generate(5, 20, 3).unwrap();
        let schedule =
            HyperSchedule::constant(0.05, 0.9, 0.1, 1e-3, 0.9, 0.999).unwrap();
        let optimizer = ScgOptimizer::new(
            PrecondKind::new(PrecondVariant::AdamMax, 0.999, 1e-8).unwrap(),
            0.9,
        )
        .unwrap();
        let x_ref = problem.optimum().map(|(x, _)| x.clone());
        let s = settings(&problem, &schedule, &optimizer, x_ref.clone(), 200);
        let trace = run_trial(&s, 7).unwrap();

        // Replay the trajectory independently, accumulating V from scratch.
        let mut oracle = MinibatchOracle::new(20, 4, Sampling::EpochPartition, 7).unwrap();
        let mut state = ScgState::new(problem.initial_point());
        let mut vs = Vec::new();
        for n in 0..200u64 {
            let hyper = schedule.eval(n);
            let (_, g) = oracle.sample_loss_grad(&problem, &state.x);
            optimizer.step(&mut state, &g, &hyper).unwrap();
            let grad = problem.full_gradient(&state.x);
            vs.push(
                crate::diagnostics::perf_measure(&state.x, x_ref.as_ref().unwrap(), &grad)
                    .unwrap(),
            );
        }
        for row in &trace.rows {
            let n = row.n as usize;
            let scratch: f64 = vs[..n].iter().sum::<f64>() / n as f64;
            let inc = row.avg_v.unwrap();
            assert!(
                (scratch - inc).abs() <= 1e-12 * (1.0 + scratch.abs()),
                "n={} scratch={} incremental={}",
                n,
                scratch,
                inc
            );
        }
    }

    #[test]
    fn identical_seeds_give_bitwise_identical_traces() {
        let problem = QuadraticSum::<f64>::generate(4, 16, 9).unwrap();
        let schedule =
            HyperSchedule::constant(0.05, 0.9, 0.1, 1e-3, 0.9, 0.999).unwrap();
        let optimizer = ScgOptimizer::new(
            PrecondKind::new(PrecondVariant::AmsGrad, 0.999, 1e-8).unwrap(),
            0.0,
        )
        .unwrap();
        let x_ref = problem.optimum().map(|(x, _)| x.clone());
        let s = settings(&problem, &schedule, &optimizer, x_ref, 50);
        let a = run_trial(&s, 5).unwrap();
        let b = run_trial(&s, 5).unwrap();
        assert_eq!(a.rows.len(), b.rows.len());
        for (ra, rb) in a.rows.iter().zip(&b.rows) {
            assert_eq!(ra.f.to_bits(), rb.f.to_bits());
            assert_eq!(ra.v.unwrap().to_bits(), rb.v.unwrap().to_bits());
            assert_eq!(ra.m_sq.to_bits(), rb.m_sq.to_bits());
        }
        assert_eq!(a.final_x, b.final_x);
        // Constants realized from identical traces are bitwise identical.
        let ca =
            crate::diagnostics::estimate_constants(&[a], &schedule, None).unwrap();
        let cb =
            crate::diagnostics::estimate_constants(&[b], &schedule, None).unwrap();
        assert_eq!(ca.d_max.to_bits(), cb.d_max.to_bits());
        assert_eq!(ca.sum_b.to_bits(), cb.sum_b.to_bits());
        assert_eq!(ca.m_tilde_sq.to_bits(), cb.m_tilde_sq.to_bits());
        assert_eq!(ca.h_inv_sqrt_max.to_bits(), cb.h_inv_sqrt_max.to_bits());
    }

    #[test]
    fn trials_come_back_in_order_with_offset_seeds() {
        let problem = QuadraticSum::<f64>::generate(4, 16, 9).unwrap();
        let schedule =
            HyperSchedule::constant(0.05, 0.0, 0.0, 0.0, 0.0, 0.999).unwrap();
        let optimizer =
            ScgOptimizer::new(PrecondKind::identity(1e-8).unwrap(), 0.0).unwrap();
        let s = settings(&problem, &schedule, &optimizer, None, 20);
        let traces = run_trials(&s, 100, 4).unwrap();
        let seeds: Vec<u64> = traces.iter().map(|t| t.seed).collect();
        assert_eq!(seeds, vec![100, 101, 102, 103]);
        for t in &traces {
            let solo = run_trial(&s, t.seed).unwrap();
            assert_eq!(solo.final_x, t.final_x);
        }
    }
}
