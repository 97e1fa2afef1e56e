//! Run orchestration behind the command-line interface: builds the problem
//! and optimizer from a [`RunConfig`], executes the trial pool, evaluates
//! requested conformance checks, and writes the CSV/summary artifacts.

use std::fs;
use std::path::Path;

use crate::config::{CheckName, RunConfig};
use crate::conformance::{
    check_convex_links, check_direction_bound, check_momentum_bound, check_precond_monotone,
    check_reductions, check_unbiasedness, CheckReport,
};
use crate::diagnostics::{
    constant_rate_bound, diminishing_rate_bound, estimate_constants, fit_rate, trial_mean_opt,
    BoundConstants, Trace,
};
use crate::output::{
    write_aggregate_csv, write_trace_csv, MarginEntry, SlopeEntry, Summary,
};
use crate::problems::{make_problem, FiniteSumProblem};
use crate::rng::SplitMix64;
use crate::runner::{reference_final_iterate, run_trials, TrialSettings};
use crate::schedules::Regime;
use crate::vecmath::Vector;
use crate::{Error, Result};

/// Seed offset for the designated reference run (distinct from every trial
/// seed `base..base+trials`).
const REFERENCE_RUN_SEED_OFFSET: u64 = 999_983;

/// Seed offset for the points probed by the unbiasedness check.
const PROBE_POINT_SEED_OFFSET: u64 = 424_243;

/// Everything a run produces before formatting.
pub struct RunArtifacts {
    pub traces: Vec<Trace<f64>>,
    pub constants: Option<BoundConstants<f64>>,
    pub summary: Summary,
}

impl RunArtifacts {
    pub fn all_checks_passed(&self) -> bool {
        self.summary.checks.iter().all(|c| c.pass)
    }
}

/// Runs the configured trials, evaluates the configured checks, and (when
/// `out_dir` is given) writes `trial_XXX.csv`, `aggregate.csv`, and
/// `summary.txt`.
pub fn execute_run(config: &RunConfig, out_dir: Option<&Path>) -> Result<RunArtifacts> {
    warn_on_kappa_rises(config)?;
    let artifacts = run_and_check(config, &config.checks)?;
    if let Some(dir) = out_dir {
        write_run_artifacts(config, &artifacts, dir, true)?;
    }
    Ok(artifacts)
}

/// The diminishing-rate bound assumes the derived sequence
/// `kappa_n = alpha_n (1 - beta_n)(1 + gamma_n) / (1 - zeta^(n+1))` never
/// rises. Rises are reported, never fatal.
fn warn_on_kappa_rises(config: &RunConfig) -> Result<()> {
    if config.regime == Regime::Diminishing {
        let horizon = config.steps.min(1000);
        let rises = config.schedule()?.check_kappa_monotone(horizon);
        if !rises.is_empty() {
            eprintln!(
                "note: kappa rises at {} step(s) in the first {} (first at n = {}); \
                 the diminishing-rate bound assumes a nonincreasing kappa",
                rises.len(),
                horizon,
                rises[0]
            );
        }
    }
    Ok(())
}

/// The conformance-suite entry point: like a run, but defaulting to every
/// check the configuration supports and emitting only the summary file.
pub fn execute_check(config: &RunConfig, out_dir: Option<&Path>) -> Result<RunArtifacts> {
    warn_on_kappa_rises(config)?;
    let checks = if config.checks.is_empty() {
        applicable_checks(config)?
    } else {
        config.checks.clone()
    };
    let artifacts = run_and_check(config, &checks)?;
    if let Some(dir) = out_dir {
        write_run_artifacts(config, &artifacts, dir, false)?;
    }
    Ok(artifacts)
}

/// One grid-search evaluation: the parameter value with the resulting final
/// trial-mean loss (and running-average measure when available).
#[derive(Debug, Clone)]
pub struct GridPoint {
    pub value: String,
    pub final_f: f64,
    pub final_avg_v: Option<f64>,
}

/// Runs the configuration once per parameter value and reports the final
/// trial-mean full loss for each; artifacts land in `gridsearch.csv`.
pub fn execute_gridsearch(
    config: &RunConfig,
    param: &str,
    values: &[String],
    out_dir: Option<&Path>,
) -> Result<Vec<GridPoint>> {
    if values.is_empty() {
        return Err(Error::config("gridsearch needs at least one value"));
    }
    let mut points = Vec::with_capacity(values.len());
    for value in values {
        let mut cfg = config.clone();
        cfg.checks = Vec::new();
        cfg.apply_override(&format!("{param}={value}"))?;
        let artifacts = run_and_check(&cfg, &[])?;
        let last = artifacts
            .traces
            .iter()
            .map(|t| t.rows.last().expect("runs log their final step"))
            .collect::<Vec<_>>();
        let k = last.len() as f64;
        let final_f = last.iter().map(|r| r.f).sum::<f64>() / k;
        let final_avg_v = last
            .iter()
            .map(|r| r.avg_v)
            .collect::<Option<Vec<f64>>>()
            .map(|vs| vs.iter().sum::<f64>() / k);
        points.push(GridPoint {
            value: value.clone(),
            final_f,
            final_avg_v,
        });
    }
    if let Some(dir) = out_dir {
        fs::create_dir_all(dir)?;
        let mut csv = String::from("value,final_f,final_avg_V\n");
        for p in &points {
            csv.push_str(&format!(
                "{},{},{}\n",
                p.value,
                crate::output::fmt17(p.final_f),
                p.final_avg_v
                    .map(crate::output::fmt17)
                    .unwrap_or_else(|| "NA".to_string()),
            ));
        }
        fs::write(dir.join("gridsearch.csv"), csv)?;
    }
    Ok(points)
}

/// Checks the configuration can support without extra information.
fn applicable_checks(config: &RunConfig) -> Result<Vec<CheckName>> {
    let problem = make_problem::<f64>(&config.problem_spec())?;
    let mut checks = vec![
        CheckName::PrecondMonotone,
        CheckName::Reductions,
        CheckName::Unbiasedness,
    ];
    if problem.grad_bound().is_some() {
        checks.insert(0, CheckName::DirectionBound);
        checks.insert(0, CheckName::MomentumBound);
    }
    if problem.is_convex() && problem.optimum().is_some() {
        checks.push(CheckName::ConvexLinks);
    }
    Ok(checks)
}

fn run_and_check(config: &RunConfig, checks: &[CheckName]) -> Result<RunArtifacts> {
    let problem = make_problem::<f64>(&config.problem_spec())?;
    let schedule = config.schedule()?;
    let optimizer = config.optimizer()?;
    let x_ref = match problem.optimum() {
        Some((x, _)) => Some(x.clone()),
        None if config.reference_steps > 0 => Some(reference_final_iterate(
            problem.as_ref(),
            &schedule,
            &optimizer,
            config.reference_steps,
            config.batch_size,
            config.sampling,
            config.seed.wrapping_add(REFERENCE_RUN_SEED_OFFSET),
        )?),
        None => None,
    };

    let settings = TrialSettings {
        problem: problem.as_ref(),
        schedule: &schedule,
        optimizer: &optimizer,
        steps: config.steps,
        batch_size: config.batch_size,
        sampling: config.sampling,
        x_ref,
        config_hash: config.hash(),
    };
    let traces = run_trials(&settings, config.seed, config.trials)?;

    let constants = if settings.x_ref.is_some() {
        Some(estimate_constants(
            &traces,
            &schedule,
            problem.grad_bound(),
        )?)
    } else {
        None
    };

    let mut reports = Vec::new();
    for check in checks {
        reports.push(evaluate_check(
            *check,
            config,
            problem.as_ref(),
            &schedule,
            &traces,
        )?);
    }

    let mut summary = Summary {
        checks: reports,
        slopes: Vec::new(),
        margins: Vec::new(),
    };

    if let Ok(avg_v) = trial_mean_opt(&traces, |r| r.avg_v, "running-average measure") {
        let window = ((config.steps / 100).max(10), config.steps);
        if let Ok(slope) = fit_rate(&avg_v, window) {
            summary.slopes.push(SlopeEntry {
                series: "avg_V".to_string(),
                window,
                slope,
            });
        }
        if let (Some(c), Some(&(n, measured))) = (&constants, avg_v.last()) {
            let rhs = match config.regime {
                Regime::Constant => constant_rate_bound(
                    c,
                    config.alpha0,
                    config.beta0,
                    config.delta0,
                    n,
                    config.dim_for_bounds(),
                ),
                Regime::Diminishing => diminishing_rate_bound(
                    c,
                    config.eta,
                    config.decay_base,
                    config.decay_base,
                    n,
                    config.dim_for_bounds(),
                ),
            }?;
            summary.margins.push(MarginEntry {
                bound: match config.regime {
                    Regime::Constant => "bound_t1".to_string(),
                    Regime::Diminishing => "bound_t2".to_string(),
                },
                n,
                measured,
                rhs,
            });
        }
    }

    Ok(RunArtifacts {
        traces,
        constants,
        summary,
    })
}

fn evaluate_check(
    check: CheckName,
    config: &RunConfig,
    problem: &dyn FiniteSumProblem<f64>,
    schedule: &crate::schedules::HyperSchedule<f64>,
    traces: &[Trace<f64>],
) -> Result<CheckReport> {
    match check {
        CheckName::MomentumBound | CheckName::DirectionBound => {
            let m = problem.grad_bound().ok_or_else(|| {
                Error::config(format!(
                    "{} requires a problem with an analytic gradient bound",
                    check.name()
                ))
            })?;
            // Zero-initialized momentum and direction keep both moment
            // constants at M^2.
            if check == CheckName::MomentumBound {
                check_momentum_bound(traces, m * m)
            } else {
                check_direction_bound(traces, m * m, schedule)
            }
        }
        CheckName::PrecondMonotone => check_precond_monotone(traces),
        CheckName::Reductions => check_reductions(
            problem,
            schedule,
            &config.precond_kind()?,
            config.zeta,
            config.batch_size,
            config.sampling,
            config.seed,
            config.steps.min(1000),
        ),
        CheckName::Unbiasedness => {
            let mut rng =
                SplitMix64::new(config.seed.wrapping_add(PROBE_POINT_SEED_OFFSET));
            let mut worst = CheckReport {
                name: "unbiasedness".to_string(),
                pass: true,
                worst_violation: 0.0,
                worst_step: 0,
                trials: 1,
                note: None,
            };
            let dim = problem.dim();
            let mut points = vec![problem.initial_point()];
            for _ in 0..4 {
                points.push(Vector::new((0..dim).map(|_| rng.next_normal()).collect()));
            }
            for (i, x) in points.iter().enumerate() {
                let r = check_unbiasedness(
                    problem,
                    x,
                    config.batch_size,
                    config.sampling,
                    config.seed.wrapping_add(i as u64),
                )?;
                if !r.pass {
                    worst.pass = false;
                }
                if r.worst_violation > worst.worst_violation {
                    worst.worst_violation = r.worst_violation;
                    worst.worst_step = i as u64;
                }
            }
            Ok(worst)
        }
        CheckName::ConvexLinks => check_convex_links(traces, problem),
    }
}

impl RunConfig {
    /// Parameter dimension entering the bound formulas (the mlp packs its
    /// layers, so its dimension is derived, not configured).
    pub fn dim_for_bounds(&self) -> usize {
        match self.problem_kind {
            crate::problems::ProblemKind::Mlp => 4 * self.hidden + 1,
            _ => self.dim,
        }
    }
}

/// Per-row bound columns for the CSV writers.
pub fn bound_columns<'a>(
    config: &'a RunConfig,
    constants: Option<&'a BoundConstants<f64>>,
) -> impl Fn(u64) -> (Option<f64>, Option<f64>) + 'a {
    move |n: u64| {
        let Some(c) = constants else {
            return (None, None);
        };
        match config.regime {
            Regime::Constant => (
                constant_rate_bound(
                    c,
                    config.alpha0,
                    config.beta0,
                    config.delta0,
                    n,
                    config.dim_for_bounds(),
                )
                .ok(),
                None,
            ),
            Regime::Diminishing => (
                None,
                diminishing_rate_bound(
                    c,
                    config.eta,
                    config.decay_base,
                    config.decay_base,
                    n,
                    config.dim_for_bounds(),
                )
                .ok(),
            ),
        }
    }
}

fn write_run_artifacts(
    config: &RunConfig,
    artifacts: &RunArtifacts,
    dir: &Path,
    with_traces: bool,
) -> Result<()> {
    fs::create_dir_all(dir)?;
    let bounds = bound_columns(config, artifacts.constants.as_ref());
    if with_traces {
        for (i, trace) in artifacts.traces.iter().enumerate() {
            let mut buf = Vec::new();
            write_trace_csv(&mut buf, trace, &bounds)?;
            fs::write(dir.join(format!("trial_{i:03}.csv")), buf)?;
        }
        let mut buf = Vec::new();
        write_aggregate_csv(&mut buf, &artifacts.traces, &bounds)?;
        fs::write(dir.join("aggregate.csv"), buf)?;
    }
    fs::write(dir.join("summary.txt"), artifacts.summary.render())?;
    Ok(())
}

/// Renders the check table and headline numbers for the terminal.
pub fn print_summary(summary: &Summary) {
    if !summary.checks.is_empty() {
        println!("{:<18} {:<6} {:>14} {:>10} {:>7}", "check", "pass", "worst", "step", "trials");
        for c in &summary.checks {
            println!(
                "{:<18} {:<6} {:>14.3e} {:>10} {:>7}{}",
                c.name,
                c.pass,
                c.worst_violation,
                c.worst_step,
                c.trials,
                c.note.as_deref().map(|n| format!("  ({n})")).unwrap_or_default()
            );
        }
    }
    for s in &summary.slopes {
        println!(
            "slope[{}] over n in [{}, {}]: {:.4}",
            s.series, s.window.0, s.window.1, s.slope
        );
    }
    for m in &summary.margins {
        println!(
            "{} at n = {}: measured {:.6e} <= rhs {:.6e} (margin {:.6e})",
            m.bound,
            m.n,
            m.measured,
            m.rhs,
            m.rhs - m.measured
        );
    }
}
