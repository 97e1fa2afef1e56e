//! Dense vector and positive-definite diagonal arithmetic used by every
//! other module. All operations are pure; callers that need to reject
//! NaN/Inf mid-run do so via [`Vector::check_finite`].

use crate::{Error, Result, Scalar};

/// Dense coordinate vector of fixed dimension.
#[derive(Debug, Clone, PartialEq)]
pub struct Vector<T>(Vec<T>);

impl<T: Scalar> Vector<T> {
    pub fn new(entries: Vec<T>) -> Self {
        Vector(entries)
    }

    pub fn zeros(dim: usize) -> Self {
        Vector(vec![T::zero(); dim])
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn as_slice(&self) -> &[T] {
        &self.0
    }

    pub fn as_mut_slice(&mut self) -> &mut [T] {
        &mut self.0
    }

    pub fn iter(&self) -> std::slice::Iter<'_, T> {
        self.0.iter()
    }

    /// Squared Euclidean norm.
    pub fn norm_sq(&self) -> T {
        self.0.iter().map(|&v| v * v).sum()
    }

    pub fn norm(&self) -> T {
        self.norm_sq().sqrt()
    }

    /// Largest squared coordinate distance to `other`.
    pub fn max_sq_dist(&self, other: &Vector<T>) -> Result<T> {
        check_len(self, other)?;
        let mut worst = T::zero();
        for (&a, &b) in self.0.iter().zip(other.iter()) {
            let d = (a - b) * (a - b);
            if d > worst {
                worst = d;
            }
        }
        Ok(worst)
    }

    pub fn scale(&self, a: T) -> Vector<T> {
        Vector(self.0.iter().map(|&v| a * v).collect())
    }

    /// In-place `self += other`, used for running iterate sums.
    pub fn add_assign(&mut self, other: &Vector<T>) -> Result<()> {
        check_len(self, other)?;
        for (s, &o) in self.0.iter_mut().zip(other.iter()) {
            *s += o;
        }
        Ok(())
    }

    pub fn fill(&mut self, v: T) {
        for s in self.0.iter_mut() {
            *s = v;
        }
    }

    /// Errors if any entry is NaN or infinite.
    pub fn check_finite(&self, context: &'static str, step: u64) -> Result<()> {
        if self.0.iter().all(|v| v.is_finite()) {
            Ok(())
        } else {
            Err(Error::NonFinite { context, step })
        }
    }
}

impl<T: Scalar> std::ops::Index<usize> for Vector<T> {
    type Output = T;
    fn index(&self, i: usize) -> &T {
        &self.0[i]
    }
}

impl<T: Scalar> std::ops::IndexMut<usize> for Vector<T> {
    fn index_mut(&mut self, i: usize) -> &mut T {
        &mut self.0[i]
    }
}

/// Diagonal of a positive-definite diagonal matrix: every entry > 0.
#[derive(Debug, Clone, PartialEq)]
pub struct DiagPd<T>(Vec<T>);

impl<T: Scalar> DiagPd<T> {
    /// Validates positivity of every entry.
    pub fn new(diag: Vec<T>) -> Result<Self> {
        for (i, &v) in diag.iter().enumerate() {
            if v.is_nan() || v <= T::zero() {
                return Err(Error::SingularPreconditioner {
                    index: i,
                    value: v.to_f64().unwrap_or(f64::NAN),
                });
            }
        }
        Ok(DiagPd(diag))
    }

    pub fn identity(dim: usize) -> Self {
        DiagPd(vec![T::one(); dim])
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn as_slice(&self) -> &[T] {
        &self.0
    }

    pub fn min_entry(&self) -> T {
        self.0.iter().cloned().fold(T::infinity(), T::min)
    }

    pub fn max_entry(&self) -> T {
        self.0.iter().cloned().fold(T::zero(), T::max)
    }

    pub fn sum(&self) -> T {
        self.0.iter().cloned().sum()
    }
}

fn check_len<T: Scalar>(x: &Vector<T>, y: &Vector<T>) -> Result<()> {
    if x.len() == y.len() {
        Ok(())
    } else {
        Err(Error::DimensionMismatch {
            left: x.len(),
            right: y.len(),
        })
    }
}

/// `a * x + y`, elementwise.
pub fn axpy<T: Scalar>(a: T, x: &Vector<T>, y: &Vector<T>) -> Result<Vector<T>> {
    check_len(x, y)?;
    Ok(Vector(
        x.iter().zip(y.iter()).map(|(&xi, &yi)| a * xi + yi).collect(),
    ))
}

/// Euclidean inner product.
pub fn dot<T: Scalar>(x: &Vector<T>, y: &Vector<T>) -> Result<T> {
    check_len(x, y)?;
    Ok(x.iter().zip(y.iter()).map(|(&xi, &yi)| xi * yi).sum())
}

/// Solves `H d = -mhat` for diagonal positive-definite `H`: exactly
/// `d_i = -mhat_i / h_i` per coordinate.
pub fn solve_diag<T: Scalar>(h: &DiagPd<T>, mhat: &Vector<T>) -> Result<Vector<T>> {
    if h.len() != mhat.len() {
        return Err(Error::DimensionMismatch {
            left: h.len(),
            right: mhat.len(),
        });
    }
    Ok(Vector(
        h.as_slice()
            .iter()
            .zip(mhat.iter())
            .map(|(&hi, &mi)| -mi / hi)
            .collect(),
    ))
}
