//! Small dense linear solve used to derive reference optima. Problem sizes
//! here are tens of coordinates, so plain Gaussian elimination with partial
//! pivoting is plenty.

use crate::{Error, Result, Scalar};

/// Solves `A x = b` in place for a row-major `n x n` matrix. On success `b`
/// holds the solution; `a` is destroyed.
pub fn solve_dense<T: Scalar>(a: &mut [T], b: &mut [T], n: usize) -> Result<()> {
    assert_eq!(a.len(), n * n);
    assert_eq!(b.len(), n);
    for col in 0..n {
        let mut pivot = col;
        let mut best = a[col * n + col].abs();
        for row in (col + 1)..n {
            let mag = a[row * n + col].abs();
            if mag > best {
                best = mag;
                pivot = row;
            }
        }
        if best.is_nan() || best <= T::zero() {
            return Err(Error::metric("singular linear system"));
        }
        if pivot != col {
            for k in 0..n {
                a.swap(col * n + k, pivot * n + k);
            }
            b.swap(col, pivot);
        }
        let diag = a[col * n + col];
        for row in (col + 1)..n {
            let factor = a[row * n + col] / diag;
            if factor == T::zero() {
                continue;
            }
            for k in col..n {
                a[row * n + k] -= factor * a[col * n + k];
            }
            b[row] -= factor * b[col];
        }
    }
    for col in (0..n).rev() {
        let mut acc = b[col];
        for k in (col + 1)..n {
            acc -= a[col * n + k] * b[k];
        }
        b[col] = acc / a[col * n + col];
    }
    Ok(())
}
