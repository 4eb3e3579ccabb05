//! Two-dimensional transforms on row-major buffers.

use num_complex::Complex;
use rustfft::{FftDirection, FftPlanner};

use crate::scalar::Real;

/// In-place unnormalized 2-D DFT of an `n1 x n2` row-major buffer.
///
/// `Forward` computes `sum_u z_u e^{-2 pi i (j1 u1 / n1 + j2 u2 / n2)}`,
/// `Inverse` the same with a positive exponent.
pub(crate) fn fft2<T: Real>(data: &mut [Complex<T>], n1: usize, n2: usize, dir: FftDirection) {
    debug_assert_eq!(data.len(), n1 * n2);
    let mut planner = FftPlanner::<T>::new();
    let rows = planner.plan_fft(n2, dir);
    for row in data.chunks_exact_mut(n2) {
        rows.process(row);
    }
    let cols = planner.plan_fft(n1, dir);
    let mut col = vec![Complex::new(T::zero(), T::zero()); n1];
    for c in 0..n2 {
        for r in 0..n1 {
            col[r] = data[r * n2 + c];
        }
        cols.process(&mut col);
        for r in 0..n1 {
            data[r * n2 + c] = col[r];
        }
    }
}

#[inline]
pub(crate) fn wrap(i: i64, n: usize) -> usize {
    i.rem_euclid(n as i64) as usize
}
