//! Acceptance suite: one test per criterion, each printing a PASS/FAIL line
//! (visible with `cargo test -- --nocapture`). The two expensive seeded runs
//! are shared across criteria through a `OnceLock`.

use std::sync::OnceLock;

use scg::conformance::{
    check_convex_links, check_direction_bound, check_momentum_bound, check_precond_monotone,
    check_reductions, check_unbiasedness, precond_monotone_from_diagonals,
};
use scg::diagnostics::{
    constant_rate_bound, diminishing_rate_bound, estimate_constants, fit_rate, regret_avg,
    trial_mean_opt, BoundConstants, Trace,
};
use scg::optimizer::{PrecondKind, PrecondVariant, ScgOptimizer};
use scg::problems::{
    finite_diff_check, FiniteSumProblem, LogisticSynthetic, QuadraticSum, RosenbrockSum,
    Sampling, TinyMlp,
};
use scg::rng::SplitMix64;
use scg::runner::{run_trials, TrialSettings};
use scg::schedules::HyperSchedule;
use scg::vecmath::Vector;

const DATA_SEED: u64 = 7;
const BASE_SEED: u64 = 42;

fn adam_max() -> PrecondKind<f64> {
    PrecondKind::new(PrecondVariant::AdamMax, 0.999, 1e-8).unwrap()
}

/// Constant-rate setting used throughout: alpha 1e-3, beta = zeta = 0.9,
/// theta = 0.999, gamma = 0.1, delta = 1e-3.
fn constant_schedule() -> HyperSchedule<f64> {
    HyperSchedule::constant(1e-3, 0.9, 0.1, 1e-3, 0.9, 0.999).unwrap()
}

/// Diminishing-rate setting of the convergence-order criterion: alpha
/// 0.35/(n+1)^0.5 and geometric beta/gamma/delta with base 0.5.
fn diminishing_schedule() -> HyperSchedule<f64> {
    HyperSchedule::diminishing(0.35, 0.5, 0.9, 0.1, 0.5, 0.5, 0.9, 0.999).unwrap()
}

#[allow(clippy::too_many_arguments)]
fn run(
    problem: &dyn FiniteSumProblem<f64>,
    schedule: &HyperSchedule<f64>,
    kind: PrecondKind<f64>,
    zeta: f64,
    steps: u64,
    batch_size: usize,
    sampling: Sampling,
    trials: usize,
) -> Vec<Trace<f64>> {
    let optimizer = ScgOptimizer::new(kind, zeta).unwrap();
    let settings = TrialSettings {
        problem,
        schedule,
        optimizer: &optimizer,
        steps,
        batch_size,
        sampling,
        x_ref: problem.optimum().map(|(x, _)| x.clone()),
        config_hash: 0,
    };
    run_trials(&settings, BASE_SEED, trials).unwrap()
}

struct SharedRuns {
    logistic: LogisticSynthetic<f64>,
    grad_bound: f64,
    f_star: f64,
    dim_schedule: HyperSchedule<f64>,
    dim_traces: Vec<Trace<f64>>,
    dim_constants: BoundConstants<f64>,
    const_schedule: HyperSchedule<f64>,
    const_traces: Vec<Trace<f64>>,
    const_constants: BoundConstants<f64>,
}

fn shared() -> &'static SharedRuns {
    static RUNS: OnceLock<SharedRuns> = OnceLock::new();
    RUNS.get_or_init(|| {
        let logistic = LogisticSynthetic::<f64>::generate(20, 1000, DATA_SEED).unwrap();
        let grad_bound = logistic.grad_bound().unwrap();
        let f_star = logistic.optimum().unwrap().1;

        let dim_schedule = diminishing_schedule();
        let dim_traces = run(
            &logistic,
            &dim_schedule,
            adam_max(),
            0.9,
            100_000,
            10,
            Sampling::UniformWithReplacement,
            10,
        );
        let dim_constants =
            estimate_constants(&dim_traces, &dim_schedule, Some(grad_bound)).unwrap();

        let const_schedule = constant_schedule();
        let const_traces = run(
            &logistic,
            &const_schedule,
            adam_max(),
            0.9,
            10_000,
            10,
            Sampling::UniformWithReplacement,
            10,
        );
        let const_constants =
            estimate_constants(&const_traces, &const_schedule, Some(grad_bound)).unwrap();

        SharedRuns {
            logistic,
            grad_bound,
            f_star,
            dim_schedule,
            dim_traces,
            dim_constants,
            const_schedule,
            const_traces,
            const_constants,
        }
    })
}

#[test]
fn criterion_01_diminishing_rate_convergence_order() {
    let s = shared();
    let avg_v = trial_mean_opt(&s.dim_traces, |r| r.avg_v, "avg V").unwrap();
    let slope = fit_rate(&avg_v, (1_000, 100_000)).unwrap();
    let pass = (-0.65..=-0.35).contains(&slope);
    println!(
        "criterion 01 (diminishing-rate convergence order): {} (slope = {:.4}, band [-0.65, -0.35])",
        if pass { "PASS" } else { "FAIL" },
        slope
    );
    assert!(pass, "fitted slope {slope} outside [-0.65, -0.35]");
}

#[test]
fn criterion_02_constant_rate_bound_dominates() {
    let s = shared();
    let avg_v = trial_mean_opt(&s.const_traces, |r| r.avg_v, "avg V").unwrap();
    let mut violations = 0usize;
    let mut checked = 0usize;
    for &(n, measured) in avg_v.iter().filter(|(n, _)| *n >= 10) {
        let rhs = constant_rate_bound(&s.const_constants, 1e-3, 0.9, 1e-3, n, 20).unwrap();
        checked += 1;
        if measured > rhs {
            violations += 1;
        }
    }
    println!(
        "criterion 02 (constant-rate bound domination): {} ({} violations over {} logged steps)",
        if violations == 0 { "PASS" } else { "FAIL" },
        violations,
        checked
    );
    assert!(checked > 100);
    assert_eq!(violations, 0);
}

#[test]
fn criterion_03_diminishing_rate_bound_dominates() {
    let s = shared();
    let avg_v = trial_mean_opt(&s.dim_traces, |r| r.avg_v, "avg V").unwrap();
    let mut violations = 0usize;
    let mut checked = 0usize;
    for &(n, measured) in avg_v.iter().filter(|(n, _)| *n >= 10) {
        let rhs = diminishing_rate_bound(&s.dim_constants, 0.5, 0.5, 0.5, n, 20).unwrap();
        checked += 1;
        if measured > rhs {
            violations += 1;
        }
    }
    println!(
        "criterion 03 (diminishing-rate bound domination): {} ({} violations over {} logged steps)",
        if violations == 0 { "PASS" } else { "FAIL" },
        violations,
        checked
    );
    assert!(checked > 100);
    assert_eq!(violations, 0);
}

#[test]
fn criterion_04_moment_bounds_with_negative_controls() {
    let s = shared();
    let m_sq = s.grad_bound * s.grad_bound;
    let mut pass = true;
    for (label, traces, schedule) in [
        ("diminishing", &s.dim_traces, &s.dim_schedule),
        ("constant", &s.const_traces, &s.const_schedule),
    ] {
        let momentum = check_momentum_bound(traces, m_sq).unwrap();
        let direction = check_direction_bound(traces, m_sq, schedule).unwrap();
        pass &= momentum.pass && direction.pass;
        assert!(momentum.pass, "momentum bound failed on {label} run");
        assert!(direction.pass, "direction bound failed on {label} run");
        // Negative controls: a sabotaged constant must be caught.
        let control_m = check_momentum_bound(traces, m_sq / 1000.0).unwrap();
        let control_d = check_direction_bound(traces, m_sq / 1000.0, schedule).unwrap();
        pass &= !control_m.pass && !control_d.pass;
        assert!(!control_m.pass, "sabotaged momentum bound passed on {label} run");
        assert!(!control_d.pass, "sabotaged direction bound passed on {label} run");
    }
    println!(
        "criterion 04 (momentum/direction moment bounds + negative controls): {}",
        if pass { "PASS" } else { "FAIL" }
    );
}

#[test]
fn criterion_05_preconditioner_monotonicity() {
    let s = shared();
    // Adam-style diagonal over 10^4 steps.
    let adam = check_precond_monotone(&s.const_traces).unwrap();
    assert!(adam.pass, "adam_max diagonal decreased: {}", adam.worst_violation);

    // AMSGrad-style diagonal over 10^4 steps (zeta = 0 variant).
    let schedule = HyperSchedule::constant(1e-3, 0.9, 0.1, 1e-3, 0.0, 0.999).unwrap();
    let traces = run(
        &s.logistic,
        &schedule,
        PrecondKind::new(PrecondVariant::AmsGrad, 0.999, 1e-8).unwrap(),
        0.0,
        10_000,
        10,
        Sampling::UniformWithReplacement,
        3,
    );
    let ams = check_precond_monotone(&traces).unwrap();
    assert!(ams.pass, "ams_grad diagonal decreased: {}", ams.worst_violation);

    // Mutation control: drop the running max and the check must fail.
    let theta = 0.999f64;
    let mut v = 0.0f64;
    let mut diags = Vec::new();
    for (n, d) in [3.0f64, 0.05, 0.05, 0.05, 0.05].iter().enumerate() {
        v = theta * v + (1.0 - theta) * d * d;
        let vbar = v / (1.0 - theta.powi(n as i32 + 1));
        diags.push(vec![vbar.sqrt() + 1e-8]);
    }
    let control = precond_monotone_from_diagonals(diags);
    assert!(!control.pass, "mutation control unexpectedly monotone");

    println!(
        "criterion 05 (preconditioner monotonicity, both variants + mutation control): PASS \
         (adam worst {:.1e}, ams worst {:.1e})",
        adam.worst_violation, ams.worst_violation
    );
}

#[test]
fn criterion_06_reduction_equivalences() {
    let s = shared();
    let report = check_reductions(
        &s.logistic,
        &s.const_schedule,
        &adam_max(),
        0.9,
        10,
        Sampling::UniformWithReplacement,
        BASE_SEED,
        1000,
    )
    .unwrap();
    println!(
        "criterion 06 (reduction equivalences over 10^3 steps): {} (worst relative deviation {:.1e})",
        if report.pass { "PASS" } else { "FAIL" },
        report.worst_violation
    );
    assert!(report.pass, "worst deviation {}", report.worst_violation);
}

fn all_problems() -> Vec<(Box<dyn FiniteSumProblem<f64>>, usize)> {
    vec![
        (
            Box::new(QuadraticSum::<f64>::generate(10, 40, DATA_SEED).unwrap()),
            8,
        ),
        (
            Box::new(LogisticSynthetic::<f64>::generate(20, 1000, DATA_SEED).unwrap()),
            10,
        ),
        (
            Box::new(RosenbrockSum::<f64>::generate(6, 30, 0.2, DATA_SEED).unwrap()),
            5,
        ),
        (
            Box::new(TinyMlp::<f64>::generate(8, 64, DATA_SEED).unwrap()),
            8,
        ),
    ]
}

#[test]
fn criterion_07_epoch_partition_unbiasedness() {
    let mut worst = 0.0f64;
    for (problem, batch) in all_problems() {
        let mut rng = SplitMix64::new(DATA_SEED ^ 0xA5A5);
        let dim = problem.dim();
        let mut points = vec![problem.initial_point()];
        for _ in 0..4 {
            points.push(Vector::new(
                (0..dim).map(|_| 0.5 * rng.next_normal()).collect(),
            ));
        }
        for (i, x) in points.iter().enumerate() {
            let report = check_unbiasedness(
                problem.as_ref(),
                x,
                batch,
                Sampling::EpochPartition,
                BASE_SEED + i as u64,
            )
            .unwrap();
            worst = worst.max(report.worst_violation);
            assert!(
                report.pass,
                "{} point {}: relative deviation {}",
                problem.name(),
                i,
                report.worst_violation
            );
        }
    }
    println!(
        "criterion 07 (epoch-partition unbiasedness, 4 problems x 5 points): PASS (worst rel {:.1e})",
        worst
    );
}

#[test]
fn criterion_08_gradient_correctness() {
    let mut worst = 0.0f64;
    for (problem, _) in all_problems() {
        let mut rng = SplitMix64::new(DATA_SEED ^ 0x5A5A);
        let dim = problem.dim();
        let points = [
            problem.initial_point(),
            Vector::new((0..dim).map(|_| 0.5 * rng.next_normal()).collect()),
        ];
        for x in &points {
            let err = finite_diff_check(problem.as_ref(), x, 1e-6).unwrap();
            worst = worst.max(err);
            assert!(
                err <= 1e-5,
                "{}: finite-difference relative error {err}",
                problem.name()
            );
        }
    }
    println!(
        "criterion 08 (gradient correctness vs finite differences): PASS (worst rel {:.1e})",
        worst
    );
}

#[test]
fn criterion_09_convexity_links_and_regret_decay() {
    let s = shared();

    // Pointwise and averaged-iterate inequalities on a quadratic run.
    let quadratic = QuadraticSum::<f64>::generate(10, 100, DATA_SEED).unwrap();
    let schedule = HyperSchedule::constant(1e-2, 0.9, 0.1, 1e-3, 0.9, 0.999).unwrap();
    let traces = run(
        &quadratic,
        &schedule,
        adam_max(),
        0.9,
        2_000,
        10,
        Sampling::UniformWithReplacement,
        3,
    );
    let quad_links = check_convex_links(&traces, &quadratic).unwrap();
    assert!(quad_links.pass, "quadratic links excess {}", quad_links.worst_violation);

    // Same inequalities on both logistic runs.
    let dim_links = check_convex_links(&s.dim_traces, &s.logistic).unwrap();
    assert!(dim_links.pass, "logistic links excess {}", dim_links.worst_violation);
    let const_links = check_convex_links(&s.const_traces, &s.logistic).unwrap();
    assert!(const_links.pass, "logistic links excess {}", const_links.worst_violation);

    // Average regret must have decayed to at most a fifth between horizons
    // 10^3 and 10^5 under the diminishing schedules.
    let k = s.dim_traces.len() as f64;
    let short: f64 = s
        .dim_traces
        .iter()
        .map(|t| regret_avg(t, s.f_star, 1_000).unwrap())
        .sum::<f64>()
        / k;
    let long: f64 = s
        .dim_traces
        .iter()
        .map(|t| regret_avg(t, s.f_star, 100_000).unwrap())
        .sum::<f64>()
        / k;
    let ratio = long / short;
    assert!(
        ratio <= 0.2,
        "average regret ratio {ratio} exceeds 1/5 (short {short}, long {long})"
    );
    println!(
        "criterion 09 (convexity links + regret decay): PASS (worst excess {:.1e}, regret ratio {:.3})",
        quad_links
            .worst_violation
            .max(dim_links.worst_violation)
            .max(const_links.worst_violation),
        ratio
    );
}

#[test]
fn criterion_10_nonconvex_training_reaches_loss_target() {
    let mlp = TinyMlp::<f64>::generate(16, 512, DATA_SEED).unwrap();
    let initial_loss = mlp.full_loss(&mlp.initial_point());
    let traces = run(
        &mlp,
        &constant_schedule(),
        adam_max(),
        0.9,
        5_000,
        32,
        Sampling::EpochPartition,
        10,
    );
    let target = 0.1 * initial_loss;
    let mut reached = 0;
    let mut worst = f64::NEG_INFINITY;
    for t in &traces {
        let final_f = t.rows.last().unwrap().f;
        worst = worst.max(final_f);
        if final_f <= target {
            reached += 1;
        }
    }
    println!(
        "criterion 10 (nonconvex training, loss <= 0.1 x initial within 5000 steps): {} \
         ({}/10 seeds, worst final {:.4} vs target {:.4})",
        if reached == 10 { "PASS" } else { "FAIL" },
        reached,
        worst,
        target
    );
    assert_eq!(reached, 10, "worst final loss {worst} vs target {target}");
}

#[test]
fn criterion_11_csv_determinism() {
    use scg::cli::execute_run;
    use scg::config::RunConfig;

    let text = "\
[problem]
kind = logistic
dim = 10
samples = 200

[schedule]
regime = constant

[run]
steps = 500
trials = 3
batch_size = 10
sampling = uniform
seed = 42
";
    let cfg = RunConfig::parse(text).unwrap();
    let dir_a = tempfile::tempdir().unwrap();
    let dir_b = tempfile::tempdir().unwrap();
    execute_run(&cfg, Some(dir_a.path())).unwrap();
    execute_run(&cfg, Some(dir_b.path())).unwrap();
    let mut compared = 0;
    for name in [
        "trial_000.csv",
        "trial_001.csv",
        "trial_002.csv",
        "aggregate.csv",
        "summary.txt",
    ] {
        let a = std::fs::read(dir_a.path().join(name)).unwrap();
        let b = std::fs::read(dir_b.path().join(name)).unwrap();
        assert!(!a.is_empty());
        assert_eq!(a, b, "{name} differs between identical runs");
        compared += 1;
    }
    println!(
        "criterion 11 (byte-identical CSV output across repeated runs): PASS ({compared} files compared)"
    );
}
