//! Nonparametric prediction on two-dimensional lattices.
//!
//! A stationary field observed on an `n1 x n2` grid is predicted from its
//! half-plane past. Coefficients come from the cepstrum of a smoothed tapered
//! periodogram (the exponential model) or from a least-squares half-plane
//! autoregression. A Monte Carlo harness compares the two on simulated
//! moving-average fields, and [`ingest`] carries point data through gridding,
//! demeaning and step-by-step prediction of missing cells.
//!
//! Everything numerical is generic over [`Real`] (`f32` or `f64`); the
//! aliases below fix `f64`.
//!
//! ```
//! use fexp::{smoothed_spectrum, cepstral_coeffs, transfer_grid, ar_coeffs};
//! use fexp::{GridDims, HalfPlaneOrder, HalfPlaneWindow, Lattice, SmoothingBandwidth};
//!
//! let d = GridDims::new(16, 16).unwrap();
//! let x = Lattice::from_fn(d, |i, j| ((i * 7 + j * 3) % 5) as f64);
//! let bw = SmoothingBandwidth::new(d, 2, 2).unwrap();
//! let f = smoothed_spectrum(&x, &bw, &Default::default()).unwrap();
//! let w = HalfPlaneWindow::new(4, 4, HalfPlaneOrder::RowLex).unwrap();
//! let a = ar_coeffs(&transfer_grid(&cepstral_coeffs(&f, &w).unwrap()).unwrap()).unwrap();
//! assert_eq!(a.coeffs().len(), w.len());
//! ```

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod ar;
pub mod cepstrum;
pub mod error;
mod fft;
pub mod ingest;
pub mod io;
pub mod lattice;
mod linalg;
pub mod mc;
pub mod pipeline;
pub mod predict;
pub mod scalar;
pub mod spectral;

pub use ar::{
    ar_predict, ar_spectrum, ar_spectrum_grid, ls_fit, order_select, ARWindow, Criterion,
    OrderSelection,
};
pub use cepstrum::{
    ar_coeffs, cepstral_coeffs, cepstral_coeffs_with, innovation_variance, ma_coeffs,
    transfer_grid, CepstrumSum,
};
pub use error::{Error, Result};
pub use ingest::{
    demean, grid_points, sequential_predict, FitSource, GridSpec, PointRecord, SequentialOptions,
};
pub use lattice::{
    half_plane_indices, lex_compare, GridDims, HalfPlaneOrder, HalfPlaneWindow, Index2,
};
pub use mc::{
    run_experiment, simulate_field, true_spectrum, InnovationDist, MCConfig, Predictor, RMSEReport,
};
pub use pipeline::{fexp_fit_ar, fexp_fit_periodogram, FexpFit};
pub use predict::{
    choose_ordering, predict, predict_boundary, predict_interior, PredictOptions, PredictionResult,
};
pub use scalar::Real;
pub use spectral::{
    cosine_bell_taper, smoothed_spectrum, taper_dft_identity, tapered_dft, tapered_periodogram,
    Demean, SmoothingBandwidth, SpectrumOptions,
};

pub type Lattice = lattice::Lattice2D<f64>;
pub type SpectralGrid = spectral::SpectralGrid<f64>;
pub type CepstralField = cepstrum::CepstralField<f64>;
pub type ARField = cepstrum::ARField<f64>;
pub type MAField = cepstrum::MAField<f64>;
pub type TransferGrid = cepstrum::TransferGrid<f64>;
pub type ARFit = ar::ARFit<f64>;
pub type TaperWeights = spectral::TaperWeights<f64>;
