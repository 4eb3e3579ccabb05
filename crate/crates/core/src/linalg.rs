//! Small dense solves for the least-squares autoregression.

use crate::error::{Error, Result};
use crate::scalar::Real;

/// Solve `a x = b` for a square row-major `a` by Gaussian elimination with
/// partial pivoting.
///
/// A pivot below `tol * max|diag(a)|` is reported as singular.
pub(crate) fn solve<T: Real>(mut a: Vec<T>, mut b: Vec<T>, tol: T) -> Result<Vec<T>> {
    let n = b.len();
    debug_assert_eq!(a.len(), n * n);
    let scale = (0..n).map(|i| a[i * n + i].abs()).fold(T::zero(), T::max);
    if n > 0 && !(scale > T::zero()) {
        return Err(Error::Singular {
            column: 0,
            pivot: 0.0,
        });
    }
    for c in 0..n {
        let p = (c..n)
            .max_by(|&i, &j| {
                a[i * n + c]
                    .abs()
                    .partial_cmp(&a[j * n + c].abs())
                    .unwrap_or(std::cmp::Ordering::Equal)
            })
            .unwrap_or(c);
        let piv = a[p * n + c];
        if !(piv.abs() > tol * scale) {
            return Err(Error::Singular {
                column: c,
                pivot: piv.to_f64_lossy(),
            });
        }
        if p != c {
            for k in 0..n {
                a.swap(p * n + k, c * n + k);
            }
            b.swap(p, c);
        }
        for r in c + 1..n {
            let f = a[r * n + c] / piv;
            if f == T::zero() {
                continue;
            }
            for k in c..n {
                let v = a[c * n + k];
                a[r * n + k] -= f * v;
            }
            let bc = b[c];
            b[r] -= f * bc;
        }
    }
    for c in (0..n).rev() {
        let mut acc = b[c];
        for k in c + 1..n {
            acc -= a[c * n + k] * b[k];
        }
        b[c] = acc / a[c * n + c];
    }
    Ok(b)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn solves_small_system() {
        let a = vec![0.0f64, 2.0, 1.0, 1.0, 1.0, 0.0, 3.0, 0.0, 1.0];
        let x = solve(a, vec![7.0, 3.0, 6.0], 1e-12).unwrap();
        for (got, want) in x.iter().zip([1.0, 2.0, 3.0]) {
            assert!((got - want).abs() < 1e-12);
        }
    }

    #[test]
    fn rank_deficient_is_singular() {
        let a = vec![1.0, 2.0, 2.0, 4.0];
        assert!(matches!(
            solve(a, vec![1.0, 2.0], 1e-10),
            Err(Error::Singular { column: 1, .. })
        ));
        assert!(matches!(
            solve(vec![0.0], vec![1.0], 1e-10),
            Err(Error::Singular { .. })
        ));
    }
}
