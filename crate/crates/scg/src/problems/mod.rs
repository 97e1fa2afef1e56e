//! Finite-sum objectives with stochastic gradient oracles.
//!
//! A problem is an average `f(x) = (1/T) * sum_i f_i(x)` of differentiable
//! sample losses. Every built-in generates its data deterministically from a
//! data seed with the documented [`crate::rng`] recipe, so instances are
//! reproducible from the constants alone. The optimizer's sampling stream
//! uses a separate seed owned by [`MinibatchOracle`].

mod linalg;
mod logistic;
mod mlp;
mod oracle;
mod quadratic;
mod rosenbrock;

pub use logistic::LogisticSynthetic;
pub use mlp::TinyMlp;
pub use oracle::{MinibatchOracle, Sampling};
pub use quadratic::QuadraticSum;
pub use rosenbrock::RosenbrockSum;

use crate::vecmath::Vector;
use crate::{Error, Result, Scalar};

/// A differentiable finite-sum objective.
pub trait FiniteSumProblem<T: Scalar>: Send + Sync {
    fn dim(&self) -> usize;

    fn num_samples(&self) -> usize;

    fn name(&self) -> &'static str;

    fn is_convex(&self) -> bool;

    /// Known minimizer and optimal value, when available.
    fn optimum(&self) -> Option<(&Vector<T>, T)>;

    /// Analytic `M` with `E[norm(G)^2] <= M^2` over every sampling
    /// distribution the oracle produces, when one exists.
    fn grad_bound(&self) -> Option<T>;

    /// Loss of sample `i` at `x`.
    fn sample_loss(&self, x: &Vector<T>, i: usize) -> T;

    /// Adds `weight * grad_i(x)` into `grad_acc` and returns `loss_i(x)`.
    /// The fused form keeps full-gradient passes allocation-free.
    fn sample_loss_grad_acc(
        &self,
        x: &Vector<T>,
        i: usize,
        weight: T,
        grad_acc: &mut Vector<T>,
    ) -> T;

    /// Starting iterate for optimizer runs (zeros unless the problem needs a
    /// symmetry-breaking initialization).
    fn initial_point(&self) -> Vector<T> {
        Vector::zeros(self.dim())
    }

    /// Gradient of sample `i` at `x`.
    fn sample_grad(&self, x: &Vector<T>, i: usize) -> Vector<T> {
        let mut g = Vector::zeros(self.dim());
        self.sample_loss_grad_acc(x, i, T::one(), &mut g);
        g
    }

    /// Mean loss and gradient over an index batch.
    fn batch_loss_grad(&self, x: &Vector<T>, batch: &[usize]) -> (T, Vector<T>) {
        let mut grad = Vector::zeros(self.dim());
        let w = T::one() / T::from_f64(batch.len() as f64);
        let mut loss = T::zero();
        for &i in batch {
            loss += self.sample_loss_grad_acc(x, i, w, &mut grad);
        }
        (loss * w, grad)
    }

    /// Exact average loss and gradient over all samples.
    fn full_loss_grad(&self, x: &Vector<T>) -> (T, Vector<T>) {
        let mut grad = Vector::zeros(self.dim());
        let t = self.num_samples();
        let w = T::one() / T::from_f64(t as f64);
        let mut loss = T::zero();
        for i in 0..t {
            loss += self.sample_loss_grad_acc(x, i, w, &mut grad);
        }
        (loss * w, grad)
    }

    fn full_loss(&self, x: &Vector<T>) -> T {
        let t = self.num_samples();
        let w = T::one() / T::from_f64(t as f64);
        let mut loss = T::zero();
        for i in 0..t {
            loss += self.sample_loss(x, i);
        }
        loss * w
    }

    fn full_gradient(&self, x: &Vector<T>) -> Vector<T> {
        self.full_loss_grad(x).1
    }
}

/// Which built-in to construct.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ProblemKind {
    Quadratic,
    Logistic,
    Rosenbrock,
    Mlp,
}

impl ProblemKind {
    pub fn parse(s: &str) -> Result<Self> {
        match s {
            "quadratic" => Ok(ProblemKind::Quadratic),
            "logistic" => Ok(ProblemKind::Logistic),
            "rosenbrock" => Ok(ProblemKind::Rosenbrock),
            "mlp" => Ok(ProblemKind::Mlp),
            other => Err(Error::config(format!(
                "unknown problem kind '{other}' (expected quadratic | logistic | rosenbrock | mlp)"
            ))),
        }
    }
}

/// Size and seeding of a built-in problem instance.
#[derive(Debug, Clone)]
pub struct ProblemSpec {
    pub kind: ProblemKind,
    pub dim: usize,
    pub samples: usize,
    pub data_seed: u64,
    /// Per-sample shift magnitude (rosenbrock only); 0 keeps the common
    /// minimizer known.
    pub shift_scale: f64,
    /// Hidden width (mlp only); the mlp parameter count is `4 * hidden + 1`.
    pub hidden: usize,
}

/// Builds one of the four built-in problems from its spec.
pub fn make_problem<T: Scalar>(spec: &ProblemSpec) -> Result<Box<dyn FiniteSumProblem<T>>> {
    if spec.samples == 0 {
        return Err(Error::config("problem needs at least one sample"));
    }
    match spec.kind {
        ProblemKind::Quadratic => Ok(Box::new(QuadraticSum::generate(
            spec.dim,
            spec.samples,
            spec.data_seed,
        )?)),
        ProblemKind::Logistic => Ok(Box::new(LogisticSynthetic::generate(
            spec.dim,
            spec.samples,
            spec.data_seed,
        )?)),
        ProblemKind::Rosenbrock => Ok(Box::new(RosenbrockSum::generate(
            spec.dim,
            spec.samples,
            spec.shift_scale,
            spec.data_seed,
        )?)),
        ProblemKind::Mlp => Ok(Box::new(TinyMlp::generate(
            spec.hidden,
            spec.samples,
            spec.data_seed,
        )?)),
    }
}

/// Max over coordinates of the relative error between the analytic gradient
/// and central finite differences with per-coordinate step
/// `h_scale * (1 + |x_i|)`. Relative error is measured against
/// `1 + |analytic_i|`.
pub fn finite_diff_check<T: Scalar>(
    problem: &dyn FiniteSumProblem<T>,
    x: &Vector<T>,
    h_scale: T,
) -> Result<T> {
    if h_scale.is_nan() || h_scale <= T::zero() {
        return Err(Error::config("finite-difference step must be > 0"));
    }
    let analytic = problem.full_gradient(x);
    let mut worst = T::zero();
    let mut probe = x.clone();
    for i in 0..x.len() {
        let h = h_scale * (T::one() + x[i].abs());
        probe[i] = x[i] + h;
        let f_plus = problem.full_loss(&probe);
        probe[i] = x[i] - h;
        let f_minus = problem.full_loss(&probe);
        probe[i] = x[i];
        let fd = (f_plus - f_minus) / (h + h);
        let rel = (fd - analytic[i]).abs() / (T::one() + analytic[i].abs());
        if rel > worst {
            worst = rel;
        }
    }
    Ok(worst)
}
