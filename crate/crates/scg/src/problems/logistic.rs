//! Synthetic binary logistic regression:
//! `f_i(x) = ln(1 + exp(-y_i * dot(z_i, x)))` with labels in `{-1, +1}`.

use super::linalg::solve_dense;
use super::FiniteSumProblem;
use crate::rng::SplitMix64;
use crate::vecmath::Vector;
use crate::{Error, Result, Scalar};

/// Convex logistic objective over generated features. Every per-sample
/// gradient satisfies `norm(grad_i) <= norm(z_i)`, so the largest feature
/// norm is an analytic bound `M` for any batch average as well.
///
/// Generation recipe for seed `s`: with a SplitMix64 stream seeded by `s`,
/// draw `d` standard normals scaled by `2/sqrt(d)` (the ground-truth weight
/// vector), then for each of the `T` samples draw `d` standard normals (the
/// features `z_i`), set the label to the sign of `dot(z_i, w_true)`, and
/// flip it when one further uniform draw is below `0.3`. The heavy label
/// noise keeps the classes overlapping (finite optimum) and gives the
/// gradient oracle a solid stochastic floor at the optimum.
///
/// The reference optimum is derived at construction with damped Newton
/// iterations driven to gradient norm `<= 1e-10`.
pub struct LogisticSynthetic<T> {
    dim: usize,
    features: Vec<T>, // row-major T x d
    labels: Vec<T>,   // -1 or +1
    grad_bound: T,    // max_i norm(z_i)
    x_star: Vector<T>,
    f_star: T,
}

/// `(ln(1 + exp(-s)), sigma(-s))`: the sample loss and the gradient weight,
/// computed on the non-overflowing branch.
fn loss_and_weight<T: Scalar>(s: T) -> (T, T) {
    if s >= T::zero() {
        let e = (-s).exp();
        (e.ln_1p(), e / (T::one() + e))
    } else {
        let e = s.exp();
        (-s + e.ln_1p(), T::one() / (T::one() + e))
    }
}

impl<T: Scalar> LogisticSynthetic<T> {
    pub fn generate(dim: usize, samples: usize, data_seed: u64) -> Result<Self> {
        if dim == 0 {
            return Err(Error::config("logistic problem needs dim >= 1"));
        }
        if samples < dim {
            return Err(Error::config(
                "logistic problem needs samples >= dim for a unique optimum",
            ));
        }
        let mut rng = SplitMix64::new(data_seed);
        let w_scale = 2.0 / (dim as f64).sqrt();
        let w_true: Vec<f64> = (0..dim).map(|_| rng.next_normal() * w_scale).collect();
        let mut features = Vec::with_capacity(samples * dim);
        let mut labels = Vec::with_capacity(samples);
        let mut grad_bound = 0.0f64;
        for _ in 0..samples {
            let mut margin = 0.0;
            let mut norm_sq = 0.0;
            for w in &w_true {
                let z = rng.next_normal();
                features.push(T::from_f64(z));
                margin += z * w;
                norm_sq += z * z;
            }
            let mut label = if margin >= 0.0 { 1.0 } else { -1.0 };
            if rng.next_f64() < 0.3 {
                label = -label;
            }
            labels.push(T::from_f64(label));
            grad_bound = grad_bound.max(norm_sq.sqrt());
        }
        let mut p = LogisticSynthetic {
            dim,
            features,
            labels,
            grad_bound: T::from_f64(grad_bound),
            x_star: Vector::zeros(dim),
            f_star: T::zero(),
        };
        p.x_star = p.solve_reference_optimum()?;
        p.f_star = p.full_loss(&p.x_star.clone());
        Ok(p)
    }

    fn row(&self, i: usize) -> &[T] {
        &self.features[i * self.dim..(i + 1) * self.dim]
    }

    fn margin(&self, x: &Vector<T>, i: usize) -> T {
        let row = self.row(i);
        let mut acc = T::zero();
        for (z, &xi) in row.iter().zip(x.iter()) {
            acc += *z * xi;
        }
        acc * self.labels[i]
    }

    /// Damped Newton from the origin until the full gradient norm drops to
    /// `1e-10`. Fails (non-separable data assumed) if 200 iterations do not
    /// get there.
    fn solve_reference_optimum(&self) -> Result<Vector<T>> {
        let d = self.dim;
        let t = self.num_samples();
        let w = T::one() / T::from_f64(t as f64);
        let tol = T::from_f64(1e-10);
        let mut x = Vector::zeros(d);
        for _ in 0..200 {
            let (f_x, grad) = self.full_loss_grad(&x);
            if grad.norm() <= tol {
                return Ok(x);
            }
            // Hessian: 1/T sum p(1-p) z z^T with p the sample probability.
            let mut hess = vec![T::zero(); d * d];
            for i in 0..t {
                let s = self.margin(&x, i);
                let (_, weight) = loss_and_weight(s);
                let coeff = w * weight * (T::one() - weight);
                let row = self.row(i);
                for r in 0..d {
                    let cr = coeff * row[r];
                    for c in 0..d {
                        hess[r * d + c] += cr * row[c];
                    }
                }
            }
            let mut step: Vec<T> = grad.iter().map(|&g| -g).collect();
            solve_dense(&mut hess, &mut step, d)
                .map_err(|_| Error::config("logistic reference solve hit a singular Hessian"))?;
            let step = Vector::new(step);
            if grad.norm() <= T::from_f64(1e-4) {
                // Quadratic phase: full steps, no line search (loss deltas
                // are below floating-point resolution here).
                x = crate::vecmath::axpy(T::one(), &step, &x)?;
                continue;
            }
            let slope = crate::vecmath::dot(&grad, &step)?;
            // Armijo backtracking for the damped phase.
            let mut stride = T::one();
            let c1 = T::from_f64(1e-4);
            let mut accepted = false;
            for _ in 0..60 {
                let cand = crate::vecmath::axpy(stride, &step, &x)?;
                if self.full_loss(&cand) <= f_x + c1 * stride * slope {
                    x = cand;
                    accepted = true;
                    break;
                }
                stride *= T::from_f64(0.5);
            }
            if !accepted {
                return Err(Error::config(
                    "logistic reference solve stalled; instance may be separable",
                ));
            }
        }
        Err(Error::config(
            "logistic reference solve did not reach gradient norm 1e-10",
        ))
    }
}

impl<T: Scalar> FiniteSumProblem<T> for LogisticSynthetic<T> {
    fn dim(&self) -> usize {
        self.dim
    }

    fn num_samples(&self) -> usize {
        self.labels.len()
    }

    fn name(&self) -> &'static str {
        "logistic"
    }

    fn is_convex(&self) -> bool {
        true
    }

    fn optimum(&self) -> Option<(&Vector<T>, T)> {
        Some((&self.x_star, self.f_star))
    }

    fn grad_bound(&self) -> Option<T> {
        Some(self.grad_bound)
    }

    fn sample_loss(&self, x: &Vector<T>, i: usize) -> T {
        loss_and_weight(self.margin(x, i)).0
    }

    fn sample_loss_grad_acc(
        &self,
        x: &Vector<T>,
        i: usize,
        weight: T,
        grad_acc: &mut Vector<T>,
    ) -> T {
        let (loss, sig) = loss_and_weight(self.margin(x, i));
        let c = -weight * sig * self.labels[i];
        let row = self.row(i);
        for (g, z) in grad_acc.as_mut_slice().iter_mut().zip(row.iter()) {
            *g += c * *z;
        }
        loss
    }
}
