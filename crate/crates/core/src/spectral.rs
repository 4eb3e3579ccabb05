//! Cosine-bell tapered periodogram and the smoothed spectral estimate on the
//! coarse frequency grid.
//!
//! Fourier frequencies are `lambda_j = 2 pi j / n`. For a bandwidth `m` the
//! coarse grid is `lambda~_k = lambda_{m k} = pi k / M` with `M = n / (2 m)`.
//! Frequencies outside `(-pi, pi]` are folded back by 2π-periodicity.

use num_complex::Complex;
use rustfft::FftDirection;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fft::{fft2, wrap};
use crate::lattice::{GridDims, Lattice2D};
use crate::scalar::Real;

/// Default positivity floor applied to spectral estimates.
pub const DEFAULT_FLOOR: f64 = 1e-12;

/// Cosine-bell (Hanning) taper `h_t = h_{t1} h_{t2} / 4`,
/// `h_{t_l} = 1 - cos(2 pi t_l / n_l)`.
#[derive(Debug, Clone, PartialEq)]
pub struct TaperWeights<T> {
    dims: GridDims,
    rows: Vec<T>,
    cols: Vec<T>,
    weights: Vec<T>,
    sumsq: T,
}

impl<T: Real> TaperWeights<T> {
    pub fn dims(&self) -> GridDims {
        self.dims
    }

    /// Marginal weights `1 - cos(2 pi t / n1)` for `t = 1..=n1`.
    pub fn row_weights(&self) -> &[T] {
        &self.rows
    }

    pub fn col_weights(&self) -> &[T] {
        &self.cols
    }

    /// Row-major `h_t` over the full grid.
    pub fn weights(&self) -> &[T] {
        &self.weights
    }

    pub fn at(&self, t1: usize, t2: usize) -> T {
        self.weights[self.dims.offset(t1, t2)]
    }

    /// `sum_t h_t^2`.
    pub fn sumsq(&self) -> T {
        self.sumsq
    }

    pub fn sum(&self) -> T {
        self.weights.iter().copied().sum()
    }
}

fn marginal<T: Real>(n: usize) -> Vec<T> {
    let two_pi = T::PI() + T::PI();
    (1..=n)
        .map(|t| T::one() - (two_pi * T::from_count(t) / T::from_count(n)).cos())
        .collect()
}

pub fn cosine_bell_taper<T: Real>(dims: GridDims) -> Result<TaperWeights<T>> {
    if dims.n1 < 2 || dims.n2 < 2 {
        return Err(Error::InvalidDims(format!(
            "{dims}: taper needs both sides >= 2"
        )));
    }
    let rows = marginal::<T>(dims.n1);
    let cols = marginal::<T>(dims.n2);
    let quarter = T::lit(0.25);
    let mut weights = Vec::with_capacity(dims.cells());
    for &hr in &rows {
        for &hc in &cols {
            weights.push(quarter * hr * hc);
        }
    }
    let sumsq = weights.iter().map(|&h| h * h).sum();
    Ok(TaperWeights {
        dims,
        rows,
        cols,
        weights,
        sumsq,
    })
}

fn check_taper<T: Real>(x: &Lattice2D<T>, taper: &TaperWeights<T>) -> Result<()> {
    if x.dims() != taper.dims() {
        return Err(Error::Mismatch(format!(
            "lattice {} vs taper {}",
            x.dims(),
            taper.dims()
        )));
    }
    x.require_fully_observed()
}

/// `w^T(lambda) = (sum h^2)^{-1/2} sum_t h_t x_t e^{i t . lambda}` by direct summation.
pub fn tapered_dft<T: Real>(
    x: &Lattice2D<T>,
    taper: &TaperWeights<T>,
    lambda: (T, T),
) -> Result<Complex<T>> {
    check_taper(x, taper)?;
    let d = x.dims();
    let mut acc = Complex::new(T::zero(), T::zero());
    for t1 in 1..=d.n1 {
        for t2 in 1..=d.n2 {
            let phase = T::from_count(t1) * lambda.0 + T::from_count(t2) * lambda.1;
            acc += Complex::from_polar(taper.at(t1, t2) * x.raw(t1, t2), phase);
        }
    }
    Ok(acc / taper.sumsq().sqrt())
}

/// `I^T(lambda) = |w^T(lambda)|^2 / (2 pi)^2`.
pub fn tapered_periodogram<T: Real>(
    x: &Lattice2D<T>,
    taper: &TaperWeights<T>,
    lambda: (T, T),
) -> Result<T> {
    let w = tapered_dft(x, taper, lambda)?;
    Ok(w.norm_sqr() / four_pi_sq::<T>())
}

pub(crate) fn four_pi_sq<T: Real>() -> T {
    let two_pi = T::PI() + T::PI();
    two_pi * two_pi
}

/// `sum_t v_t e^{i t . lambda_j}` at every Fourier frequency, row-major in
/// `(j1 mod n1, j2 mod n2)`.
fn positive_exponent_grid<T: Real>(
    dims: GridDims,
    v: impl Fn(usize, usize) -> T,
) -> Vec<Complex<T>> {
    let (n1, n2) = (dims.n1, dims.n2);
    let mut buf: Vec<Complex<T>> = Vec::with_capacity(dims.cells());
    for t1 in 1..=n1 {
        for t2 in 1..=n2 {
            buf.push(Complex::new(v(t1, t2), T::zero()));
        }
    }
    fft2(&mut buf, n1, n2, FftDirection::Inverse);
    // storage starts at t = 1, so shift the phase by one step in each coordinate
    let two_pi = T::PI() + T::PI();
    for j1 in 0..n1 {
        for j2 in 0..n2 {
            let phase = two_pi
                * (T::from_count(j1) / T::from_count(n1) + T::from_count(j2) / T::from_count(n2));
            buf[j1 * n2 + j2] *= Complex::from_polar(T::one(), phase);
        }
    }
    buf
}

/// Tapered DFT at every Fourier frequency.
pub fn tapered_dft_grid<T: Real>(
    x: &Lattice2D<T>,
    taper: &TaperWeights<T>,
) -> Result<Vec<Complex<T>>> {
    check_taper(x, taper)?;
    let mut g = positive_exponent_grid(x.dims(), |t1, t2| taper.at(t1, t2) * x.raw(t1, t2));
    let norm = taper.sumsq().sqrt();
    g.iter_mut().for_each(|z| *z /= norm);
    Ok(g)
}

/// Plain DFT `n^{-1/2} sum_t x_t e^{i t . lambda_j}` at every Fourier frequency,
/// i.e. the tapered DFT with `h == 1`.
pub fn plain_dft_grid<T: Real>(x: &Lattice2D<T>) -> Result<Vec<Complex<T>>> {
    x.require_fully_observed()?;
    let mut g = positive_exponent_grid(x.dims(), |t1, t2| x.raw(t1, t2));
    let norm = T::from_count(x.dims().cells()).sqrt();
    g.iter_mut().for_each(|z| *z /= norm);
    Ok(g)
}

/// Cosine-bell tapered DFT at `lambda_j` rebuilt from plain DFT ordinates via
/// the three-term stencil `-w_{j-1} + 2 w_j - w_{j+1}` in each coordinate.
///
/// Scaled by `n^{1/2} / (16 (sum h^2)^{1/2})`, which equals `1/6` whenever
/// both sides are at least 3, so it agrees with [`tapered_dft`] exactly.
pub fn taper_dft_identity<T: Real>(x: &Lattice2D<T>, j: (i64, i64)) -> Result<Complex<T>> {
    let plain = plain_dft_grid(x)?;
    let taper = cosine_bell_taper::<T>(x.dims())?;
    Ok(identity_from_plain(&plain, x.dims(), &taper, j))
}

fn identity_from_plain<T: Real>(
    plain: &[Complex<T>],
    dims: GridDims,
    taper: &TaperWeights<T>,
    j: (i64, i64),
) -> Complex<T> {
    let stencil = [(-1i64, -T::one()), (0, T::lit(2.0)), (1, -T::one())];
    let mut acc = Complex::new(T::zero(), T::zero());
    for &(d1, c1) in &stencil {
        for &(d2, c2) in &stencil {
            let o = wrap(j.0 + d1, dims.n1) * dims.n2 + wrap(j.1 + d2, dims.n2);
            acc += plain[o] * (c1 * c2);
        }
    }
    let scale = T::from_count(dims.cells()).sqrt() / (T::lit(16.0) * taper.sumsq().sqrt());
    acc * scale
}

/// Identity-based tapered DFT at every Fourier frequency (fast-path cross-check).
pub fn taper_dft_identity_grid<T: Real>(x: &Lattice2D<T>) -> Result<Vec<Complex<T>>> {
    let plain = plain_dft_grid(x)?;
    let d = x.dims();
    let taper = cosine_bell_taper::<T>(d)?;
    let mut out = Vec::with_capacity(d.cells());
    for j1 in 0..d.n1 as i64 {
        for j2 in 0..d.n2 as i64 {
            out.push(identity_from_plain(&plain, d, &taper, (j1, j2)));
        }
    }
    Ok(out)
}

/// Tapered periodogram at every Fourier frequency, row-major in `(j1 mod n1, j2 mod n2)`.
pub fn periodogram_grid<T: Real>(x: &Lattice2D<T>, taper: &TaperWeights<T>) -> Result<Vec<T>> {
    let c = four_pi_sq::<T>();
    Ok(tapered_dft_grid(x, taper)?
        .into_iter()
        .map(|w| w.norm_sqr() / c)
        .collect())
}

/// Smoothing bandwidth `(m1, m2)` for a lattice of given dims; `M_l = n_l / (2 m_l)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct SmoothingBandwidth {
    pub dims: GridDims,
    pub m1: usize,
    pub m2: usize,
}

impl SmoothingBandwidth {
    pub fn new(dims: GridDims, m1: usize, m2: usize) -> Result<Self> {
        dims.require_even()?;
        for (m, n) in [(m1, dims.n1), (m2, dims.n2)] {
            if m == 0 || (n / 2) % m != 0 {
                return Err(Error::InvalidBandwidth(format!(
                    "m = {m} must divide n/2 = {}",
                    n / 2
                )));
            }
        }
        Ok(Self { dims, m1, m2 })
    }

    /// Coarse-grid extents `(M1, M2)`.
    pub fn coarse(&self) -> (usize, usize) {
        (self.dims.n1 / (2 * self.m1), self.dims.n2 / (2 * self.m2))
    }

    /// Advisory notes when `m_l < n_l^{3/4}`: the smoothing is too light for
    /// the bias/variance rate the estimator's theory asks for.
    pub fn advisories(&self) -> Vec<String> {
        [(1, self.m1, self.dims.n1), (2, self.m2, self.dims.n2)]
            .iter()
            .filter(|(_, m, n)| (*m as f64) < (*n as f64).powf(0.75))
            .map(|(l, m, n)| {
                format!(
                    "m[{l}] = {m} is below n[{l}]^(3/4) = {:.1}",
                    (*n as f64).powf(0.75)
                )
            })
            .collect()
    }
}

/// How the sample mean is removed before transforming.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum Demean {
    /// Known zero mean.
    None,
    /// Plain sample mean.
    #[default]
    Plain,
    /// `sum h x / sum h`; zeroes the tapered DFT at frequency 0.
    TaperWeighted,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SpectrumOptions<T> {
    pub demean: Demean,
    pub floor: T,
}

impl<T: Real> Default for SpectrumOptions<T> {
    fn default() -> Self {
        Self {
            demean: Demean::Plain,
            floor: T::lit(DEFAULT_FLOOR),
        }
    }
}

/// Spectral values on the coarse grid `k1 = 0..=M1`, `k2 = 1-M2..=M2`.
#[derive(Debug, Clone, PartialEq)]
pub struct SpectralGrid<T> {
    bandwidth: SmoothingBandwidth,
    values: Vec<T>,
    floor: T,
}

impl<T: Real> SpectralGrid<T> {
    /// Evaluate `f` at every stored coarse frequency `(pi k1 / M1, pi k2 / M2)`.
    pub fn from_fn(bandwidth: SmoothingBandwidth, floor: T, mut f: impl FnMut(T, T) -> T) -> Self {
        let (mm1, mm2) = bandwidth.coarse();
        let mut values = Vec::with_capacity((mm1 + 1) * 2 * mm2);
        for k1 in 0..=mm1 as i64 {
            for k2 in 1 - mm2 as i64..=mm2 as i64 {
                let (l1, l2) = coarse_frequency::<T>((k1, k2), (mm1, mm2));
                values.push(f(l1, l2).max(floor));
            }
        }
        Self {
            bandwidth,
            values,
            floor,
        }
    }

    /// Grid from stored values in `(k1, k2)` row-major order.
    pub fn from_values(bandwidth: SmoothingBandwidth, values: Vec<T>, floor: T) -> Result<Self> {
        let (mm1, mm2) = bandwidth.coarse();
        if values.len() != (mm1 + 1) * 2 * mm2 {
            return Err(Error::Mismatch(format!(
                "expected {} grid values, got {}",
                (mm1 + 1) * 2 * mm2,
                values.len()
            )));
        }
        if values.iter().any(|v| !v.is_finite() || *v < floor) {
            return Err(Error::InvalidParameter(
                "grid values must be finite and >= floor".into(),
            ));
        }
        Ok(Self {
            bandwidth,
            values,
            floor,
        })
    }

    pub fn bandwidth(&self) -> SmoothingBandwidth {
        self.bandwidth
    }

    pub fn coarse(&self) -> (usize, usize) {
        self.bandwidth.coarse()
    }

    pub fn floor(&self) -> T {
        self.floor
    }

    pub fn values(&self) -> &[T] {
        &self.values
    }

    /// Stored `(k1, k2, value)` triples in grid order.
    pub fn entries(&self) -> impl Iterator<Item = ((i64, i64), T)> + '_ {
        let (mm1, mm2) = self.coarse();
        (0..=mm1 as i64)
            .flat_map(move |k1| (1 - mm2 as i64..=mm2 as i64).map(move |k2| (k1, k2)))
            .zip(self.values.iter().copied())
    }

    /// Value at any coarse index; indices are folded by periodicity and the
    /// even symmetry `f(k) = f(-k)`.
    pub fn at(&self, k: (i64, i64)) -> T {
        let (mm1, mm2) = self.coarse();
        let (p1, p2) = (2 * mm1 as i64, 2 * mm2 as i64);
        let mut k1 = k.0.rem_euclid(p1);
        let mut k2 = k.1.rem_euclid(p2);
        if k1 > mm1 as i64 {
            k1 = p1 - k1;
            k2 = (p2 - k2) % p2;
        }
        if k2 > mm2 as i64 {
            k2 -= p2;
        }
        if k2 <= -(mm2 as i64) {
            k2 += p2;
        }
        let row = k1 as usize;
        let col = (k2 + mm2 as i64 - 1) as usize;
        self.values[row * 2 * mm2 + col]
    }

    /// Multiply every value by `c > 0`.
    pub fn scaled(&self, c: T) -> Self {
        Self {
            bandwidth: self.bandwidth,
            values: self
                .values
                .iter()
                .map(|&v| (v * c).max(self.floor))
                .collect(),
            floor: self.floor,
        }
    }
}

/// `(pi k1 / M1, pi k2 / M2)`.
pub fn coarse_frequency<T: Real>(k: (i64, i64), coarse: (usize, usize)) -> (T, T) {
    (
        T::PI() * T::from_index(k.0) / T::from_count(coarse.0),
        T::PI() * T::from_index(k.1) / T::from_count(coarse.1),
    )
}

/// Remove the mean according to `mode`.
pub fn demeaned<T: Real>(
    x: &Lattice2D<T>,
    mode: Demean,
    taper: &TaperWeights<T>,
) -> Result<Lattice2D<T>> {
    x.require_fully_observed()?;
    let mean = match mode {
        Demean::None => return Ok(x.clone()),
        Demean::Plain => x.observed_mean().ok_or(Error::NoObservations)?,
        Demean::TaperWeighted => {
            let num: T = x
                .values()
                .iter()
                .zip(taper.weights())
                .map(|(&v, &h)| v * h)
                .sum();
            num / taper.sum()
        }
    };
    Ok(x.map(|v| v - mean))
}

/// Averaged tapered periodogram
/// `f^(lambda~_k) = (4 m1 m2)^{-1} sum_{-m < l <= m} I^T(lambda~_k + lambda_l)`.
pub fn smoothed_spectrum<T: Real>(
    x: &Lattice2D<T>,
    bw: &SmoothingBandwidth,
    opts: &SpectrumOptions<T>,
) -> Result<SpectralGrid<T>> {
    if x.dims() != bw.dims {
        return Err(Error::Mismatch(format!(
            "lattice {} vs bandwidth dims {}",
            x.dims(),
            bw.dims
        )));
    }
    let bw = SmoothingBandwidth::new(bw.dims, bw.m1, bw.m2)?;
    let taper = cosine_bell_taper::<T>(x.dims())?;
    let xd = demeaned(x, opts.demean, &taper)?;
    let pgram = periodogram_grid(&xd, &taper)?;
    Ok(smooth_periodogram(&pgram, &bw, opts.floor))
}

/// Smooth a full periodogram grid (as returned by [`periodogram_grid`]).
pub fn smooth_periodogram<T: Real>(
    pgram: &[T],
    bw: &SmoothingBandwidth,
    floor: T,
) -> SpectralGrid<T> {
    let (n1, n2) = (bw.dims.n1, bw.dims.n2);
    let (m1, m2) = (bw.m1 as i64, bw.m2 as i64);
    let norm = T::from_count(4 * bw.m1 * bw.m2);
    let (mm1, mm2) = bw.coarse();
    let mut values = Vec::with_capacity((mm1 + 1) * 2 * mm2);
    for k1 in 0..=mm1 as i64 {
        for k2 in 1 - mm2 as i64..=mm2 as i64 {
            let mut acc = T::zero();
            for l1 in 1 - m1..=m1 {
                let r = wrap(m1 * k1 + l1, n1);
                for l2 in 1 - m2..=m2 {
                    acc += pgram[r * n2 + wrap(m2 * k2 + l2, n2)];
                }
            }
            values.push((acc / norm).max(floor));
        }
    }
    SpectralGrid {
        bandwidth: *bw,
        values,
        floor,
    }
}
