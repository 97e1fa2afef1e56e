//! One-hidden-layer tanh network with a logistic output and cross-entropy
//! loss, gradients by closed-form backpropagation.

use super::FiniteSumProblem;
use crate::rng::SplitMix64;
use crate::vecmath::Vector;
use crate::{Error, Result, Scalar};

/// Two-input binary classifier on Gaussian blob data. Parameters are packed
/// as `[W1 row-major (hidden x 2), b1 (hidden), w2 (hidden), b2]`, so the
/// dimension is `4 * hidden + 1`.
///
/// Generation recipe for seed `s`, with a single SplitMix64 stream seeded by
/// `s`: for each of the `T` samples (classes alternate 0, 1, 0, 1, ...) draw
/// two standard normals, scale by `0.6`, add the class center (`(-1,-1)` for
/// class 0, `(1,1)` for class 1), and clamp each input coordinate to
/// `[-4, 4]`. The same stream then provides the starting parameters: `W1`
/// entries are standard normals scaled by `1/sqrt(2)`, `b1` is zero, `w2`
/// entries are standard normals scaled by `0.1/sqrt(hidden)`, `b2` is zero.
/// The random `W1` breaks the hidden-unit symmetry that zero initialization
/// would never escape; the small `w2` keeps the initial logits near zero,
/// so training starts from chance-level loss.
pub struct TinyMlp<T> {
    hidden: usize,
    inputs: Vec<T>, // row-major T x 2
    targets: Vec<T>, // 0 or 1
    init: Vector<T>,
}

/// `(ln(1 + exp(s)) - y*s, sigma(s) - y)`: stable cross-entropy loss with
/// logits and its derivative in the logit.
fn loss_and_delta<T: Scalar>(s: T, y: T) -> (T, T) {
    if s >= T::zero() {
        let e = (-s).exp();
        (s + e.ln_1p() - y * s, T::one() / (T::one() + e) - y)
    } else {
        let e = s.exp();
        (e.ln_1p() - y * s, e / (T::one() + e) - y)
    }
}

impl<T: Scalar> TinyMlp<T> {
    pub fn generate(hidden: usize, samples: usize, data_seed: u64) -> Result<Self> {
        if hidden == 0 {
            return Err(Error::config("mlp needs hidden >= 1"));
        }
        if samples < 2 || !samples.is_multiple_of(2) {
            return Err(Error::config("mlp needs an even number of samples >= 2"));
        }
        let mut rng = SplitMix64::new(data_seed);
        let sigma = 0.6;
        let mut inputs = Vec::with_capacity(samples * 2);
        let mut targets = Vec::with_capacity(samples);
        for k in 0..samples {
            let class = (k % 2) as f64;
            let center = if k % 2 == 0 { -1.0 } else { 1.0 };
            for _ in 0..2 {
                let raw = center + sigma * rng.next_normal();
                inputs.push(T::from_f64(raw.clamp(-4.0, 4.0)));
            }
            targets.push(T::from_f64(class));
        }
        let dim = 4 * hidden + 1;
        let mut init = vec![T::zero(); dim];
        let w1_scale = 1.0 / 2.0f64.sqrt();
        for slot in init.iter_mut().take(2 * hidden) {
            *slot = T::from_f64(rng.next_normal() * w1_scale);
        }
        let w2_scale = 0.1 / (hidden as f64).sqrt();
        for slot in init.iter_mut().skip(3 * hidden).take(hidden) {
            *slot = T::from_f64(rng.next_normal() * w2_scale);
        }
        Ok(TinyMlp {
            hidden,
            inputs,
            targets,
            init: Vector::new(init),
        })
    }

    fn input(&self, i: usize) -> (T, T) {
        (self.inputs[2 * i], self.inputs[2 * i + 1])
    }

    /// Splits the packed parameter slice into `(w1, b1, w2, b2)`.
    fn unpack<'a>(&self, x: &'a [T]) -> (&'a [T], &'a [T], &'a [T], T) {
        let h = self.hidden;
        (&x[..2 * h], &x[2 * h..3 * h], &x[3 * h..4 * h], x[4 * h])
    }
}

impl<T: Scalar> FiniteSumProblem<T> for TinyMlp<T> {
    fn dim(&self) -> usize {
        4 * self.hidden + 1
    }

    fn num_samples(&self) -> usize {
        self.targets.len()
    }

    fn name(&self) -> &'static str {
        "mlp"
    }

    fn is_convex(&self) -> bool {
        false
    }

    fn optimum(&self) -> Option<(&Vector<T>, T)> {
        None
    }

    fn grad_bound(&self) -> Option<T> {
        None
    }

    fn initial_point(&self) -> Vector<T> {
        self.init.clone()
    }

    fn sample_loss(&self, x: &Vector<T>, i: usize) -> T {
        let (w1, b1, w2, b2) = self.unpack(x.as_slice());
        let (u0, u1) = self.input(i);
        let mut s = b2;
        for j in 0..self.hidden {
            let z = w1[2 * j] * u0 + w1[2 * j + 1] * u1 + b1[j];
            s += w2[j] * z.tanh();
        }
        loss_and_delta(s, self.targets[i]).0
    }

    fn sample_loss_grad_acc(
        &self,
        x: &Vector<T>,
        i: usize,
        weight: T,
        grad_acc: &mut Vector<T>,
    ) -> T {
        let h = self.hidden;
        let (w1, b1, w2, b2) = self.unpack(x.as_slice());
        let (u0, u1) = self.input(i);
        // Forward pass, keeping the activations for the backward pass.
        let mut act = vec![T::zero(); h];
        let mut s = b2;
        for j in 0..h {
            let z = w1[2 * j] * u0 + w1[2 * j + 1] * u1 + b1[j];
            let a = z.tanh();
            act[j] = a;
            s += w2[j] * a;
        }
        let (loss, delta) = loss_and_delta(s, self.targets[i]);
        // Backward pass.
        let g = grad_acc.as_mut_slice();
        let wd = weight * delta;
        for j in 0..h {
            let dz = wd * w2[j] * (T::one() - act[j] * act[j]);
            g[2 * j] += dz * u0;
            g[2 * j + 1] += dz * u1;
            g[2 * h + j] += dz;
            g[3 * h + j] += wd * act[j];
        }
        g[4 * h] += wd;
        loss
    }
}
