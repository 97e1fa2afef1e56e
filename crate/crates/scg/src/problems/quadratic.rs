//! Least-squares finite sum: `f_i(x) = (dot(a_i, x) - b_i)^2 / 2`.

use super::linalg::solve_dense;
use super::FiniteSumProblem;
use crate::rng::SplitMix64;
use crate::vecmath::Vector;
use crate::{Error, Result, Scalar};

/// Convex quadratic built from random rows. The minimizer is derived at
/// construction by solving the normal equations directly, which serves as an
/// independent oracle for the optimum.
///
/// Generation recipe for seed `s`: with a SplitMix64 stream seeded by `s`,
/// for each of the `T` samples draw `d` standard normals scaled by
/// `1/sqrt(d)` (the row `a_i`), then one standard normal (the offset `b_i`).
pub struct QuadraticSum<T> {
    dim: usize,
    rows: Vec<T>, // row-major T x d
    offsets: Vec<T>,
    x_star: Vector<T>,
    f_star: T,
}

impl<T: Scalar> QuadraticSum<T> {
    pub fn generate(dim: usize, samples: usize, data_seed: u64) -> Result<Self> {
        if dim == 0 {
            return Err(Error::config("quadratic problem needs dim >= 1"));
        }
        if samples < dim {
            return Err(Error::config(
                "quadratic problem needs samples >= dim for a unique minimizer",
            ));
        }
        let mut rng = SplitMix64::new(data_seed);
        let scale = 1.0 / (dim as f64).sqrt();
        let mut rows = Vec::with_capacity(samples * dim);
        let mut offsets = Vec::with_capacity(samples);
        for _ in 0..samples {
            for _ in 0..dim {
                rows.push(T::from_f64(rng.next_normal() * scale));
            }
            offsets.push(T::from_f64(rng.next_normal()));
        }
        Self::from_flat(dim, rows, offsets)
    }

    /// Builds the problem from explicit rows (used by tests and tiny
    /// hand-crafted instances).
    pub fn from_data(rows: Vec<Vector<T>>, offsets: Vec<T>) -> Result<Self> {
        if rows.is_empty() || rows.len() != offsets.len() {
            return Err(Error::config("rows and offsets must be equal and nonempty"));
        }
        let dim = rows[0].len();
        let mut flat = Vec::with_capacity(rows.len() * dim);
        for r in &rows {
            if r.len() != dim {
                return Err(Error::DimensionMismatch {
                    left: r.len(),
                    right: dim,
                });
            }
            flat.extend_from_slice(r.as_slice());
        }
        Self::from_flat(dim, flat, offsets)
    }

    fn from_flat(dim: usize, rows: Vec<T>, offsets: Vec<T>) -> Result<Self> {
        let samples = offsets.len();
        // Normal equations: (1/T sum a a^T) x = 1/T sum b a.
        let w = T::one() / T::from_f64(samples as f64);
        let mut gram = vec![T::zero(); dim * dim];
        let mut rhs = vec![T::zero(); dim];
        for i in 0..samples {
            let row = &rows[i * dim..(i + 1) * dim];
            for r in 0..dim {
                let wr = w * row[r];
                rhs[r] += wr * offsets[i];
                for c in 0..dim {
                    gram[r * dim + c] += wr * row[c];
                }
            }
        }
        solve_dense(&mut gram, &mut rhs, dim)
            .map_err(|_| Error::config("quadratic rows are rank deficient"))?;
        let x_star = Vector::new(rhs);
        let mut p = QuadraticSum {
            dim,
            rows,
            offsets,
            x_star,
            f_star: T::zero(),
        };
        p.f_star = p.full_loss(&p.x_star.clone());
        Ok(p)
    }

    fn row(&self, i: usize) -> &[T] {
        &self.rows[i * self.dim..(i + 1) * self.dim]
    }

    fn residual(&self, x: &Vector<T>, i: usize) -> T {
        let row = self.row(i);
        let mut acc = T::zero();
        for (a, &xi) in row.iter().zip(x.iter()) {
            acc += *a * xi;
        }
        acc - self.offsets[i]
    }
}

impl<T: Scalar> FiniteSumProblem<T> for QuadraticSum<T> {
    fn dim(&self) -> usize {
        self.dim
    }

    fn num_samples(&self) -> usize {
        self.offsets.len()
    }

    fn name(&self) -> &'static str {
        "quadratic"
    }

    fn is_convex(&self) -> bool {
        true
    }

    fn optimum(&self) -> Option<(&Vector<T>, T)> {
        Some((&self.x_star, self.f_star))
    }

    fn grad_bound(&self) -> Option<T> {
        None // gradients grow linearly in x; no global bound exists
    }

    fn sample_loss(&self, x: &Vector<T>, i: usize) -> T {
        let r = self.residual(x, i);
        T::from_f64(0.5) * r * r
    }

    fn sample_loss_grad_acc(
        &self,
        x: &Vector<T>,
        i: usize,
        weight: T,
        grad_acc: &mut Vector<T>,
    ) -> T {
        let r = self.residual(x, i);
        let c = weight * r;
        let row = self.row(i);
        for (g, a) in grad_acc.as_mut_slice().iter_mut().zip(row.iter()) {
            *g += c * *a;
        }
        T::from_f64(0.5) * r * r
    }
}
