//! Cepstral coefficients of a spectral estimate and the canonical factor
//! built from them.
//!
//! With `L, T` the leading/trailing truncation lags of a [`HalfPlaneWindow`]
//! and `𝐌 = L T`:
//!
//! * `alpha_j = (4𝐌)^{-1} sum_k cos(j . lambda~_k) log f_k` over the box
//!   `(-M, M]` for `j` in `𝓜 ∪ {0}`; the half-plane variant
//!   `(2𝐌)^{-1} sum_{k in 𝓜}` is available through [`CepstrumSum`];
//! * `A_k = exp{-sum+_j alpha_j e^{-i j . lambda~_k}}` on the box `(-M, M]`;
//! * `a_j = Re (4𝐌)^{-1} sum_k A_k e^{i j . lambda~_k}`.
//!
//! The moving-average factor `B = 1/A` uses the positive exponent. All sums
//! over the box are evaluated with 2-D FFTs of size `2L x 2T`.

use num_complex::Complex;
use rustfft::FftDirection;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fft::{fft2, wrap};
use crate::lattice::{HalfPlaneOrder, HalfPlaneWindow, Index2};
use crate::scalar::Real;
use crate::spectral::{coarse_frequency, four_pi_sq, SmoothingBandwidth, SpectralGrid};

/// Default cap on `|sum+ alpha_j e^{-i j . lambda}|` before exponentiation.
pub const DEFAULT_OVERFLOW_CAP: f64 = 50.0;

/// Tolerance on the discarded imaginary part of recovered coefficients.
pub const IMAG_RESIDUE_TOL: f64 = 1e-9;

/// How the cosine transform of `log f` is summed over the coarse grid.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CepstrumSum {
    /// `(2𝐌)^{-1} sum_{k in 𝓜}`. The self-conjugate rims are counted twice,
    /// so the level of `log f` leaks into lags with odd trailing component
    /// and `alpha_0` carries a factor `|𝓜| / 2𝐌`.
    HalfPlane,
    /// `(4𝐌)^{-1} sum_{k in (-M, M]}`, reading negative frequencies through
    /// the grid's even fold. A flat spectrum has no cepstrum beyond `alpha_0`.
    #[default]
    FullBox,
}

/// Cepstral coefficients over `𝓜` plus `alpha_0`.
#[derive(Debug, Clone, PartialEq)]
pub struct CepstralField<T> {
    window: HalfPlaneWindow,
    alpha0: T,
    alphas: Vec<T>,
    sum: CepstrumSum,
}

impl<T: Real> CepstralField<T> {
    /// `alphas` in the canonical enumeration of `window`.
    pub fn new(window: HalfPlaneWindow, alpha0: T, alphas: Vec<T>) -> Result<Self> {
        if alphas.len() != window.len() {
            return Err(Error::Mismatch(format!(
                "window has {} lags, got {}",
                window.len(),
                alphas.len()
            )));
        }
        if !alpha0.is_finite() || alphas.iter().any(|a| !a.is_finite()) {
            return Err(Error::InvalidParameter(
                "cepstral coefficients must be finite".into(),
            ));
        }
        Ok(Self {
            window,
            alpha0,
            alphas,
            sum: CepstrumSum::FullBox,
        })
    }

    /// The summation convention `alpha_0` was computed with.
    pub fn with_sum(self, sum: CepstrumSum) -> Self {
        Self { sum, ..self }
    }

    pub fn sum(&self) -> CepstrumSum {
        self.sum
    }

    /// Field with the given nonzero entries (physical lags); everything else zero.
    pub fn from_entries(
        window: HalfPlaneWindow,
        alpha0: T,
        entries: &[(Index2, T)],
    ) -> Result<Self> {
        let mut alphas = vec![T::zero(); window.len()];
        for &(j, v) in entries {
            let p = window.position(j).ok_or_else(|| {
                Error::InvalidWindow(format!("lag {j:?} outside the half-plane window"))
            })?;
            alphas[p] = v;
        }
        Self::new(window, alpha0, alphas)
    }

    pub fn window(&self) -> HalfPlaneWindow {
        self.window
    }

    pub fn alpha0(&self) -> T {
        self.alpha0
    }

    pub fn alphas(&self) -> &[T] {
        &self.alphas
    }

    /// `alpha_j` at a physical lag; zero outside the window.
    pub fn get(&self, j: Index2) -> T {
        if j == (0, 0) {
            return self.alpha0;
        }
        self.window
            .position(j)
            .map_or(T::zero(), |p| self.alphas[p])
    }

    /// `(lag, alpha)` pairs in enumeration order, physical lags.
    pub fn iter(&self) -> impl Iterator<Item = (Index2, T)> + '_ {
        let order = self.window.order;
        self.window
            .canonical_indices()
            .into_iter()
            .map(move |c| order.from_canonical(c))
            .zip(self.alphas.iter().copied())
    }

    /// Number of terms in the half-plane sum, `|𝓜| = T (1 + 2L)`.
    pub fn half_plane_count(&self) -> usize {
        self.window.len()
    }

    /// `log f(lambda) = alpha_0 + 2 sum+ alpha_j cos(j . lambda)`.
    pub fn log_spectrum(&self, lambda: (T, T)) -> T {
        let two = T::lit(2.0);
        self.iter().fold(self.alpha0, |acc, (j, a)| {
            acc + two * a * (T::from_index(j.0) * lambda.0 + T::from_index(j.1) * lambda.1).cos()
        })
    }

    /// Spectral grid `exp(log_spectrum)` on the coarse grid of `bw`.
    pub fn synthesize(&self, bw: SmoothingBandwidth, floor: T) -> SpectralGrid<T> {
        SpectralGrid::from_fn(bw, floor, |a, b| self.log_spectrum((a, b)).exp())
    }
}

/// Coefficients of the autoregressive (prediction-error) factor; `a_0 = 1` implicit.
#[derive(Debug, Clone, PartialEq)]
pub struct ARField<T> {
    window: HalfPlaneWindow,
    coeffs: Vec<T>,
}

/// Coefficients of the moving-average (Wold) factor; `zeta_0 = 1` implicit.
#[derive(Debug, Clone, PartialEq)]
pub struct MAField<T> {
    window: HalfPlaneWindow,
    coeffs: Vec<T>,
}

macro_rules! coefficient_field {
    ($ty:ident) => {
        impl<T: Real> $ty<T> {
            pub fn new(window: HalfPlaneWindow, coeffs: Vec<T>) -> Result<Self> {
                if coeffs.len() != window.len() {
                    return Err(Error::Mismatch(format!(
                        "window has {} lags, got {}",
                        window.len(),
                        coeffs.len()
                    )));
                }
                if coeffs.iter().any(|c| !c.is_finite()) {
                    return Err(Error::InvalidParameter(
                        "coefficients must be finite".into(),
                    ));
                }
                Ok(Self { window, coeffs })
            }

            pub fn zeros(window: HalfPlaneWindow) -> Self {
                Self {
                    window,
                    coeffs: vec![T::zero(); window.len()],
                }
            }

            pub fn from_entries(window: HalfPlaneWindow, entries: &[(Index2, T)]) -> Result<Self> {
                let mut coeffs = vec![T::zero(); window.len()];
                for &(j, v) in entries {
                    let p = window.position(j).ok_or_else(|| {
                        Error::InvalidWindow(format!("lag {j:?} outside the half-plane window"))
                    })?;
                    coeffs[p] = v;
                }
                Self::new(window, coeffs)
            }

            pub fn window(&self) -> HalfPlaneWindow {
                self.window
            }

            pub fn coeffs(&self) -> &[T] {
                &self.coeffs
            }

            /// Coefficient at a physical lag; zero outside the window.
            pub fn get(&self, j: Index2) -> T {
                self.window
                    .position(j)
                    .map_or(T::zero(), |p| self.coeffs[p])
            }

            /// `(lag, coefficient)` pairs in enumeration order, physical lags.
            pub fn iter(&self) -> impl Iterator<Item = (Index2, T)> + '_ {
                let order = self.window.order;
                self.window
                    .canonical_indices()
                    .into_iter()
                    .map(move |c| order.from_canonical(c))
                    .zip(self.coeffs.iter().copied())
            }

            /// Same coefficients viewed on the transposed lattice.
            pub fn transposed(&self) -> Self {
                let order = match self.window.order {
                    HalfPlaneOrder::RowLex => HalfPlaneOrder::ColLex,
                    HalfPlaneOrder::ColLex => HalfPlaneOrder::RowLex,
                };
                let window = HalfPlaneWindow {
                    m1: self.window.m2,
                    m2: self.window.m1,
                    order,
                };
                // canonical enumeration is unchanged by a transpose
                Self {
                    window,
                    coeffs: self.coeffs.clone(),
                }
            }
        }
    };
}

coefficient_field!(ARField);
coefficient_field!(MAField);

/// Canonical factor `A_k` (or `B_k`) on the box, stored in canonical
/// coordinates: leading index `1-L..=L` major, trailing `1-T..=T` minor.
#[derive(Debug, Clone, PartialEq)]
pub struct TransferGrid<T> {
    window: HalfPlaneWindow,
    values: Vec<Complex<T>>,
}

impl<T: Real> TransferGrid<T> {
    /// Build from a closure over canonical indices; used by tests and oracles.
    pub fn from_fn(window: HalfPlaneWindow, mut f: impl FnMut(Index2) -> Complex<T>) -> Self {
        let (lead, trail) = window.canonical_lags();
        let (l, t) = (lead as i64, trail as i64);
        let mut values = Vec::with_capacity(4 * lead * trail);
        for kl in 1 - l..=l {
            for kt in 1 - t..=t {
                values.push(f((kl, kt)));
            }
        }
        Self { window, values }
    }

    pub fn window(&self) -> HalfPlaneWindow {
        self.window
    }

    pub fn values(&self) -> &[Complex<T>] {
        &self.values
    }

    /// Value at a physical coarse index (folded by periodicity).
    pub fn at(&self, k: Index2) -> Complex<T> {
        let (lead, trail) = self.window.canonical_lags();
        let (kl, kt) = self.window.order.to_canonical(k);
        let row = fold_box(kl, lead);
        let col = fold_box(kt, trail);
        self.values[row * 2 * trail + col]
    }

    /// Largest `|A_k - conj(A_{-k})|`.
    pub fn hermitian_defect(&self) -> T {
        let (lead, trail) = self.window.canonical_lags();
        let (l, t) = (lead as i64, trail as i64);
        let mut worst = T::zero();
        for kl in 1 - l..=l {
            for kt in 1 - t..=t {
                let a = self.values[fold_box(kl, lead) * 2 * trail + fold_box(kt, trail)];
                let b = self.values[fold_box(-kl, lead) * 2 * trail + fold_box(-kt, trail)];
                worst = worst.max((a - b.conj()).norm());
            }
        }
        worst
    }

    /// Row-major values on the `2L x 2T` FFT torus.
    fn to_torus(&self) -> Vec<Complex<T>> {
        let (lead, trail) = self.window.canonical_lags();
        let (l, t) = (lead as i64, trail as i64);
        let (p1, p2) = (2 * lead, 2 * trail);
        let mut torus = vec![Complex::new(T::zero(), T::zero()); p1 * p2];
        let mut it = self.values.iter();
        for kl in 1 - l..=l {
            for kt in 1 - t..=t {
                torus[wrap(kl, p1) * p2 + wrap(kt, p2)] = *it.next().unwrap();
            }
        }
        torus
    }
}

/// Position of `k` inside `1-P..=P` after folding modulo `2P`.
fn fold_box(k: i64, p: usize) -> usize {
    let p = p as i64;
    let mut r = k.rem_euclid(2 * p);
    if r > p {
        r -= 2 * p;
    }
    (r + p - 1) as usize
}

/// Estimate `alpha_j` for `j` in `𝓜 ∪ {0}` from a spectral grid with the
/// full-box sum.
///
/// The window's lags must equal the grid's `(M1, M2)`. Frequencies outside
/// the stored half of the grid are read through its even fold.
pub fn cepstral_coeffs<T: Real>(
    f: &SpectralGrid<T>,
    window: &HalfPlaneWindow,
) -> Result<CepstralField<T>> {
    cepstral_coeffs_with(f, window, CepstrumSum::FullBox)
}

/// [`cepstral_coeffs`] under a chosen summation convention.
pub fn cepstral_coeffs_with<T: Real>(
    f: &SpectralGrid<T>,
    window: &HalfPlaneWindow,
    sum: CepstrumSum,
) -> Result<CepstralField<T>> {
    let (mm1, mm2) = f.coarse();
    if (window.m1, window.m2) != (mm1, mm2) {
        return Err(Error::Mismatch(format!(
            "window lags ({}, {}) vs grid ({mm1}, {mm2})",
            window.m1, window.m2
        )));
    }
    HalfPlaneWindow::new(window.m1, window.m2, window.order)?;
    let (lead, trail) = window.canonical_lags();
    let (p1, p2) = (2 * lead, 2 * trail);
    let order = window.order;

    // log f on the summation support, zero elsewhere, then one inverse FFT gives
    // sum log f_k e^{i j . lambda_k}; its real part is the cosine sum.
    let mut torus = vec![Complex::new(T::zero(), T::zero()); p1 * p2];
    let mut put = |k: Index2| {
        let v = f.at(order.from_canonical(k)).ln();
        torus[wrap(k.0, p1) * p2 + wrap(k.1, p2)] = Complex::new(v, T::zero());
    };
    let norm = match sum {
        CepstrumSum::HalfPlane => {
            window.canonical_indices().into_iter().for_each(&mut put);
            T::from_count(2 * lead * trail)
        }
        CepstrumSum::FullBox => {
            let (l, t) = (lead as i64, trail as i64);
            for k1 in 1 - l..=l {
                for k2 in 1 - t..=t {
                    put((k1, k2));
                }
            }
            T::from_count(4 * lead * trail)
        }
    };
    fft2(&mut torus, p1, p2, FftDirection::Inverse);
    let coef = |j: Index2| torus[wrap(j.0, p1) * p2 + wrap(j.1, p2)].re / norm;

    let alpha0 = coef((0, 0));
    let alphas = window.canonical_indices().into_iter().map(coef).collect();
    Ok(CepstralField::new(*window, alpha0, alphas)?.with_sum(sum))
}

fn exponent_torus<T: Real>(c: &CepstralField<T>) -> Vec<Complex<T>> {
    let (lead, trail) = c.window.canonical_lags();
    let (p1, p2) = (2 * lead, 2 * trail);
    let mut torus = vec![Complex::new(T::zero(), T::zero()); p1 * p2];
    for (j, &a) in c.window.canonical_indices().into_iter().zip(&c.alphas) {
        torus[wrap(j.0, p1) * p2 + wrap(j.1, p2)] = Complex::new(a, T::zero());
    }
    // sum+ alpha_j e^{-i j . lambda_k}
    fft2(&mut torus, p1, p2, FftDirection::Forward);
    torus
}

fn exp_grid<T: Real>(c: &CepstralField<T>, sign: T, cap: T) -> Result<TransferGrid<T>> {
    let (lead, trail) = c.window.canonical_lags();
    let (l, t) = (lead as i64, trail as i64);
    let (p1, p2) = (2 * lead, 2 * trail);
    let torus = exponent_torus(c);
    let mut values = Vec::with_capacity(p1 * p2);
    for kl in 1 - l..=l {
        for kt in 1 - t..=t {
            let z = torus[wrap(kl, p1) * p2 + wrap(kt, p2)];
            let mag = z.norm();
            if !(mag <= cap) {
                return Err(Error::Overflow {
                    magnitude: mag.to_f64_lossy(),
                    cap: cap.to_f64_lossy(),
                });
            }
            values.push((z * sign).exp());
        }
    }
    Ok(TransferGrid {
        window: c.window,
        values,
    })
}

/// `A_k = exp{-sum+ alpha_j e^{-i j . lambda~_k}}` with the default overflow cap.
pub fn transfer_grid<T: Real>(c: &CepstralField<T>) -> Result<TransferGrid<T>> {
    transfer_grid_with_cap(c, T::lit(DEFAULT_OVERFLOW_CAP))
}

pub fn transfer_grid_with_cap<T: Real>(c: &CepstralField<T>, cap: T) -> Result<TransferGrid<T>> {
    exp_grid(c, -T::one(), cap)
}

/// `B_k = 1 / A_k = exp{+sum+ alpha_j e^{-i j . lambda~_k}}`.
pub fn ma_transfer_grid<T: Real>(c: &CepstralField<T>) -> Result<TransferGrid<T>> {
    exp_grid(c, T::one(), T::lit(DEFAULT_OVERFLOW_CAP))
}

/// Fourier coefficients `Re (4𝐌)^{-1} sum_k G_k e^{i j . lambda~_k}` over the window.
fn inverse_coefficients<T: Real>(g: &TransferGrid<T>) -> Result<Vec<T>> {
    let (lead, trail) = g.window.canonical_lags();
    let (p1, p2) = (2 * lead, 2 * trail);
    let mut torus = g.to_torus();
    let scale = g.values.iter().fold(T::one(), |m, z| m.max(z.norm()));
    fft2(&mut torus, p1, p2, FftDirection::Inverse);
    let norm = T::from_count(p1 * p2);
    let tol = T::lit(IMAG_RESIDUE_TOL).max(T::lit(100.0) * T::epsilon() * scale);
    let mut out = Vec::with_capacity(g.window.len());
    for j in g.window.canonical_indices() {
        let z = torus[wrap(j.0, p1) * p2 + wrap(j.1, p2)] / norm;
        if z.im.abs() > tol {
            return Err(Error::Asymmetric(z.im.to_f64_lossy()));
        }
        out.push(z.re);
    }
    Ok(out)
}

/// AR prediction coefficients `a_j`, `j` in `𝓜`, from the canonical factor.
pub fn ar_coeffs<T: Real>(a: &TransferGrid<T>) -> Result<ARField<T>> {
    ARField::new(a.window, inverse_coefficients(a)?)
}

/// MA (Wold) coefficients `zeta_j`, `j` in `𝓜`.
pub fn ma_coeffs<T: Real>(c: &CepstralField<T>) -> Result<MAField<T>> {
    MAField::new(c.window, inverse_coefficients(&ma_transfer_grid(c)?)?)
}

/// One-step prediction error variance `(2 pi)^2 exp(alpha_0)`.
///
/// Under the half-plane sum `alpha_0` overstates the mean of `log f` by the
/// factor `|𝓜| / 2𝐌`, which this does not undo.
pub fn innovation_variance<T: Real>(c: &CepstralField<T>) -> T {
    four_pi_sq::<T>() * c.alpha0.exp()
}

/// Coarse frequency of a canonical index for a window, in physical coordinates.
pub fn window_frequency<T: Real>(window: &HalfPlaneWindow, k: Index2) -> (T, T) {
    coarse_frequency(k, (window.m1, window.m2))
}
