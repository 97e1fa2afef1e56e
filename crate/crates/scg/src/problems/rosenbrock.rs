//! Nonconvex finite sum of per-sample shifted Rosenbrock functions.

use super::FiniteSumProblem;
use crate::rng::SplitMix64;
use crate::vecmath::Vector;
use crate::{Error, Result, Scalar};

/// Each sample evaluates the classic banana function on `x - c_i`, paired
/// coordinates `(x_0, x_1), (x_2, x_3), ...`:
///
/// ```text
/// f_i(x) = sum_pairs (1 - u_even)^2 + 100 * (u_odd - u_even^2)^2,
/// u = x - c_i
/// ```
///
/// With `shift_scale = 0` every `c_i` is zero and the all-ones vector is the
/// common minimizer (a known stationary point with value 0). Nonzero shifts
/// make the sum genuinely stochastic with no known optimum.
///
/// Generation recipe for seed `s`: with a SplitMix64 stream seeded by `s`,
/// draw `d` standard normals per sample and scale them by `shift_scale`.
pub struct RosenbrockSum<T> {
    dim: usize,
    shifts: Vec<T>, // row-major T x d
    samples: usize,
    x_star: Option<(Vector<T>, T)>,
}

impl<T: Scalar> RosenbrockSum<T> {
    pub fn generate(dim: usize, samples: usize, shift_scale: f64, data_seed: u64) -> Result<Self> {
        if dim == 0 || !dim.is_multiple_of(2) {
            return Err(Error::config("rosenbrock problem needs an even dim >= 2"));
        }
        if shift_scale.is_nan() || shift_scale < 0.0 {
            return Err(Error::config("shift_scale must be >= 0"));
        }
        let mut rng = SplitMix64::new(data_seed);
        let mut shifts = Vec::with_capacity(samples * dim);
        for _ in 0..samples * dim {
            shifts.push(T::from_f64(rng.next_normal() * shift_scale));
        }
        let x_star = if shift_scale == 0.0 {
            Some((Vector::new(vec![T::one(); dim]), T::zero()))
        } else {
            None
        };
        Ok(RosenbrockSum {
            dim,
            shifts,
            samples,
            x_star,
        })
    }

    fn shift(&self, i: usize) -> &[T] {
        &self.shifts[i * self.dim..(i + 1) * self.dim]
    }
}

impl<T: Scalar> FiniteSumProblem<T> for RosenbrockSum<T> {
    fn dim(&self) -> usize {
        self.dim
    }

    fn num_samples(&self) -> usize {
        self.samples
    }

    fn name(&self) -> &'static str {
        "rosenbrock"
    }

    fn is_convex(&self) -> bool {
        false
    }

    fn optimum(&self) -> Option<(&Vector<T>, T)> {
        self.x_star.as_ref().map(|(x, f)| (x, *f))
    }

    fn grad_bound(&self) -> Option<T> {
        None
    }

    fn sample_loss(&self, x: &Vector<T>, i: usize) -> T {
        let c = self.shift(i);
        let hundred = T::from_f64(100.0);
        let mut acc = T::zero();
        for j in (0..self.dim).step_by(2) {
            let u = x[j] - c[j];
            let v = x[j + 1] - c[j + 1];
            let a = T::one() - u;
            let b = v - u * u;
            acc += a * a + hundred * b * b;
        }
        acc
    }

    fn sample_loss_grad_acc(
        &self,
        x: &Vector<T>,
        i: usize,
        weight: T,
        grad_acc: &mut Vector<T>,
    ) -> T {
        let c = self.shift(i);
        let hundred = T::from_f64(100.0);
        let two = T::from_f64(2.0);
        let mut acc = T::zero();
        for j in (0..self.dim).step_by(2) {
            let u = x[j] - c[j];
            let v = x[j + 1] - c[j + 1];
            let a = T::one() - u;
            let b = v - u * u;
            acc += a * a + hundred * b * b;
            let db = two * hundred * b;
            grad_acc[j] += weight * (-two * a - db * two * u);
            grad_acc[j + 1] += weight * db;
        }
        acc
    }
}
