//! End-to-end coefficient fitting: lattice to spectral grid to AR field.

use crate::ar::{ar_spectrum_grid, ls_fit, ARFit, ARWindow};
use crate::cepstrum::{
    ar_coeffs, cepstral_coeffs_with, innovation_variance, transfer_grid, ARField, CepstralField,
    CepstrumSum,
};
use crate::error::{Error, Result};
use crate::lattice::{GridDims, HalfPlaneOrder, HalfPlaneWindow, Lattice2D};
use crate::scalar::Real;
use crate::spectral::{smoothed_spectrum, SmoothingBandwidth, SpectralGrid, SpectrumOptions};

/// Coefficients of the exponential-model predictor.
#[derive(Debug, Clone, PartialEq)]
pub struct FexpFit<T> {
    pub cepstrum: CepstralField<T>,
    pub ar: ARField<T>,
    pub sigma2: T,
}

/// Largest leading sub-rectangle whose sides are multiples of `2 m`.
pub fn spectral_dims(dims: GridDims, m1: usize, m2: usize) -> Result<GridDims> {
    if m1 == 0 || m2 == 0 {
        return Err(Error::InvalidBandwidth(
            "bandwidths must be positive".into(),
        ));
    }
    let n1 = dims.n1 - dims.n1 % (2 * m1);
    let n2 = dims.n2 - dims.n2 % (2 * m2);
    if n1 == 0 || n2 == 0 {
        return Err(Error::InvalidBandwidth(format!(
            "bandwidth ({m1},{m2}) too wide for {dims}"
        )));
    }
    GridDims::new(n1, n2)
}

/// Bandwidth on the trimmed lattice, with the trimmed lattice itself.
pub fn trimmed_for_bandwidth<T: Real>(
    x: &Lattice2D<T>,
    m1: usize,
    m2: usize,
) -> Result<(Lattice2D<T>, SmoothingBandwidth)> {
    let d = spectral_dims(x.dims(), m1, m2)?;
    let xt = if d == x.dims() {
        x.clone()
    } else {
        x.sublattice((1, 1), (d.n1, d.n2))?
    };
    let bw = SmoothingBandwidth::new(d, m1, m2)?;
    Ok((xt, bw))
}

/// Cepstrum, canonical factor and AR coefficients from a spectral grid.
pub fn fexp_from_grid<T: Real>(
    grid: &SpectralGrid<T>,
    order: HalfPlaneOrder,
    sum: CepstrumSum,
) -> Result<FexpFit<T>> {
    let (mm1, mm2) = grid.coarse();
    let window = HalfPlaneWindow::new(mm1, mm2, order)?;
    let cepstrum = cepstral_coeffs_with(grid, &window, sum)?;
    let ar = ar_coeffs(&transfer_grid(&cepstrum)?)?;
    let sigma2 = innovation_variance(&cepstrum);
    Ok(FexpFit {
        cepstrum,
        ar,
        sigma2,
    })
}

/// Exponential-model coefficients from the smoothed tapered periodogram.
pub fn fexp_fit_periodogram<T: Real>(
    x: &Lattice2D<T>,
    m1: usize,
    m2: usize,
    order: HalfPlaneOrder,
    opts: &SpectrumOptions<T>,
    sum: CepstrumSum,
) -> Result<FexpFit<T>> {
    let (xt, bw) = trimmed_for_bandwidth(x, m1, m2)?;
    fexp_from_grid(&smoothed_spectrum(&xt, &bw, opts)?, order, sum)
}

/// Exponential-model coefficients from the autoregressive spectrum of a
/// least-squares fit, evaluated on the same coarse grid the periodogram
/// route would use.
pub fn fexp_fit_ar<T: Real>(
    x: &Lattice2D<T>,
    fit: &ARFit<T>,
    m1: usize,
    m2: usize,
    order: HalfPlaneOrder,
    sum: CepstrumSum,
) -> Result<FexpFit<T>> {
    let bw = SmoothingBandwidth::new(spectral_dims(x.dims(), m1, m2)?, m1, m2)?;
    fexp_from_grid(&ar_spectrum_grid(fit, &bw)?, order, sum)
}

/// Least-squares fit followed by [`fexp_fit_ar`].
pub fn fexp_fit_ar_window<T: Real>(
    x: &Lattice2D<T>,
    w: &ARWindow,
    m1: usize,
    m2: usize,
    order: HalfPlaneOrder,
    sum: CepstrumSum,
) -> Result<FexpFit<T>> {
    fexp_fit_ar(x, &ls_fit(x, w)?, m1, m2, order, sum)
}
