//! Truncated half-plane autoregression fitted by least squares.
//!
//! The support `S[-pL, pU]` is the box `-pL_l <= k_l <= pU_l` intersected with
//! the prediction half-plane of the window's ordering. The fit regresses `x_j`
//! on `{x_{j-k} : k in S}` over every `j` whose regressors all lie inside the
//! lattice, which gives `n_p = (n1 - p1)(n2 - p2)` equations.

use std::fmt;

use num_complex::Complex;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::lattice::{GridDims, HalfPlaneOrder, Index2, Lattice2D};
use crate::linalg;
use crate::predict::{predict_with_weights, PredictOptions, PredictionResult};
use crate::scalar::Real;
use crate::spectral::{coarse_frequency, SmoothingBandwidth, SpectralGrid, DEFAULT_FLOOR};

fn row_lex() -> HalfPlaneOrder {
    HalfPlaneOrder::RowLex
}

/// Box bounds of a truncated autoregression, in physical coordinates.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct ARWindow {
    pub pl1: usize,
    pub pu1: usize,
    pub pl2: usize,
    pub pu2: usize,
    #[serde(default = "row_lex")]
    pub order: HalfPlaneOrder,
}

impl ARWindow {
    pub fn new(pl1: usize, pu1: usize, pl2: usize, pu2: usize) -> Self {
        Self {
            pl1,
            pu1,
            pl2,
            pu2,
            order: HalfPlaneOrder::RowLex,
        }
    }

    pub fn with_order(self, order: HalfPlaneOrder) -> Self {
        Self { order, ..self }
    }

    /// The single-parameter family `pL = 0`, `pU = (p, p)`.
    pub fn from_pstar(p: usize) -> Self {
        Self::new(0, p, 0, p)
    }

    /// Parse `pL1,pU1,pL2,pU2`.
    pub fn parse(s: &str) -> Result<Self> {
        let parts: Vec<usize> = s
            .split(',')
            .map(|p| p.trim().parse::<usize>())
            .collect::<std::result::Result<_, _>>()
            .map_err(|e| Error::InvalidWindow(format!("{s:?}: {e}")))?;
        match parts[..] {
            [a, b, c, d] => Ok(Self::new(a, b, c, d)),
            _ => Err(Error::InvalidWindow(format!(
                "{s:?}: expected pL1,pU1,pL2,pU2"
            ))),
        }
    }

    /// `(p1, p2) = (pL1 + pU1, pL2 + pU2)`.
    pub fn p(&self) -> (usize, usize) {
        (self.pl1 + self.pu1, self.pl2 + self.pu2)
    }

    /// Bounds `(L1, U1, L2, U2)` in (leading, trailing) coordinates.
    fn canonical_bounds(&self) -> (i64, i64, i64, i64) {
        let b = (
            self.pl1 as i64,
            self.pu1 as i64,
            self.pl2 as i64,
            self.pu2 as i64,
        );
        match self.order {
            HalfPlaneOrder::RowLex => b,
            HalfPlaneOrder::ColLex => (b.2, b.3, b.0, b.1),
        }
    }

    fn canonical_support(&self) -> Vec<Index2> {
        let (l1, u1, l2, u2) = self.canonical_bounds();
        let mut out = Vec::new();
        for k1 in -l1..=u1 {
            for k2 in -l2..=u2 {
                if (k1, k2) > (0, 0) {
                    out.push((k1, k2));
                }
            }
        }
        out
    }

    /// Lags of `S` in physical coordinates, in half-plane order.
    pub fn support(&self) -> Vec<Index2> {
        self.canonical_support()
            .into_iter()
            .map(|k| self.order.from_canonical(k))
            .collect()
    }

    /// Number of lags in `S`, by enumeration.
    pub fn cardinality(&self) -> usize {
        self.canonical_support().len()
    }

    /// `n_p = (n1 - p1)(n2 - p2)`, or an error unless `n_l > p_l`.
    pub fn effective_count(&self, dims: GridDims) -> Result<usize> {
        let (p1, p2) = self.p();
        if dims.n1 <= p1 || dims.n2 <= p2 {
            return Err(Error::InvalidWindow(format!(
                "order ({p1},{p2}) needs a lattice larger than {dims}"
            )));
        }
        Ok((dims.n1 - p1) * (dims.n2 - p2))
    }

    fn trailing_lag(&self) -> usize {
        let (_, _, l2, u2) = self.canonical_bounds();
        l2.max(u2) as usize
    }
}

impl fmt::Display for ARWindow {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{},{},{},{}", self.pl1, self.pu1, self.pl2, self.pu2)
    }
}

/// Fitted coefficients `d_p(k)` over `S` and the residual variance.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ARFit<T> {
    pub window: ARWindow,
    /// Physical lags, aligned with `coeffs`.
    pub lags: Vec<Index2>,
    pub coeffs: Vec<T>,
    pub sigma2: T,
    pub n_p: usize,
}

impl<T: Real> ARFit<T> {
    /// A fit with given coefficients (in `window.support()` order).
    pub fn from_coeffs(window: ARWindow, coeffs: Vec<T>, sigma2: T) -> Result<Self> {
        let lags = window.support();
        if lags.len() != coeffs.len() {
            return Err(Error::Mismatch(format!(
                "{} coefficients for {} lags",
                coeffs.len(),
                lags.len()
            )));
        }
        Ok(Self {
            window,
            lags,
            coeffs,
            sigma2,
            n_p: 0,
        })
    }

    pub fn get(&self, k: Index2) -> T {
        self.lags
            .iter()
            .position(|&l| l == k)
            .map_or(T::zero(), |i| self.coeffs[i])
    }

    pub fn iter(&self) -> impl Iterator<Item = (Index2, T)> + '_ {
        self.lags.iter().copied().zip(self.coeffs.iter().copied())
    }
}

/// Least squares over the lags `support` (canonical) and the equations
/// `j1 in lo.0..=hi.0`, `j2 in lo.1..=hi.1`. Returns (coefficients, RSS).
fn fit_region<T: Real>(
    x: &Lattice2D<T>,
    support: &[Index2],
    lo: Index2,
    hi: Index2,
) -> Result<(Vec<T>, T, usize)> {
    let h = support.len();
    let mut xtx = vec![T::zero(); h * h];
    let mut xty = vec![T::zero(); h];
    let mut row = vec![T::zero(); h];
    let at = |j: Index2| x.raw(j.0 as usize, j.1 as usize);
    let mut count = 0;
    for j1 in lo.0..=hi.0 {
        for j2 in lo.1..=hi.1 {
            for (r, k) in row.iter_mut().zip(support) {
                *r = at((j1 - k.0, j2 - k.1));
            }
            let y = at((j1, j2));
            for a in 0..h {
                xty[a] += row[a] * y;
                for b in a..h {
                    xtx[a * h + b] += row[a] * row[b];
                }
            }
            count += 1;
        }
    }
    for a in 0..h {
        for b in 0..a {
            xtx[a * h + b] = xtx[b * h + a];
        }
    }
    let coeffs = linalg::solve(xtx, xty, T::epsilon() * T::lit(1e4))?;
    let mut rss = T::zero();
    for j1 in lo.0..=hi.0 {
        for j2 in lo.1..=hi.1 {
            let fitted: T = support
                .iter()
                .zip(&coeffs)
                .map(|(k, &d)| d * at((j1 - k.0, j2 - k.1)))
                .sum();
            let e = at((j1, j2)) - fitted;
            rss += e * e;
        }
    }
    Ok((coeffs, rss, count))
}

/// Least-squares autoregression of order `w` on a fully observed lattice.
pub fn ls_fit<T: Real>(x: &Lattice2D<T>, w: &ARWindow) -> Result<ARFit<T>> {
    x.require_fully_observed()?;
    let n_p = w.effective_count(x.dims())?;
    let xc = match w.order {
        HalfPlaneOrder::RowLex => x.clone(),
        HalfPlaneOrder::ColLex => x.transpose(),
    };
    let d = xc.dims();
    let (l1, u1, l2, u2) = w.canonical_bounds();
    let support = w.canonical_support();
    let (coeffs, rss, count) = fit_region(
        &xc,
        &support,
        (1 + u1, 1 + u2),
        (d.n1 as i64 - l1, d.n2 as i64 - l2),
    )?;
    debug_assert_eq!(count, n_p);
    Ok(ARFit {
        window: *w,
        lags: support
            .into_iter()
            .map(|k| w.order.from_canonical(k))
            .collect(),
        coeffs,
        sigma2: rss / T::from_count(n_p),
        n_p,
    })
}

/// `x_s = sum_{k in S} d(k) x_{s-k}` with recursive filling of unobserved cells.
pub fn ar_predict<T: Real>(
    x: &Lattice2D<T>,
    fit: &ARFit<T>,
    s: Index2,
    opts: PredictOptions,
) -> Result<PredictionResult<T>> {
    let weights: Vec<(Index2, T)> = fit.iter().collect();
    predict_with_weights(
        x,
        fit.window.order,
        &weights,
        fit.window.trailing_lag(),
        s,
        opts,
    )
}

/// `sigma2 / ((2 pi)^2 |1 - sum d(k) e^{i k.lambda}|^2)`.
pub fn ar_spectrum<T: Real>(fit: &ARFit<T>, lambda: (T, T)) -> Result<T> {
    let mut z = Complex::new(T::one(), T::zero());
    for (k, d) in fit.iter() {
        let th = T::from_index(k.0) * lambda.0 + T::from_index(k.1) * lambda.1;
        z -= Complex::new(th.cos(), th.sin()) * d;
    }
    let denom = z.norm_sqr();
    if !(denom > T::epsilon()) {
        return Err(Error::Pole(denom.to_f64_lossy()));
    }
    let two_pi = T::lit(2.0) * T::PI();
    Ok(fit.sigma2 / (two_pi * two_pi * denom))
}

/// [`ar_spectrum`] on the coarse grid of `bw`.
pub fn ar_spectrum_grid<T: Real>(
    fit: &ARFit<T>,
    bw: &SmoothingBandwidth,
) -> Result<SpectralGrid<T>> {
    let (mm1, mm2) = bw.coarse();
    let mut values = Vec::with_capacity((mm1 + 1) * 2 * mm2);
    for k1 in 0..=mm1 as i64 {
        for k2 in 1 - mm2 as i64..=mm2 as i64 {
            values.push(ar_spectrum(fit, coarse_frequency((k1, k2), (mm1, mm2)))?);
        }
    }
    let mut it = values.into_iter();
    Ok(SpectralGrid::from_fn(*bw, T::lit(DEFAULT_FLOOR), |_, _| {
        it.next().expect("same grid order")
    }))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Criterion {
    Bic,
    Fpe,
}

impl Criterion {
    pub fn parse(s: &str) -> Option<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "bic" => Some(Criterion::Bic),
            "fpe" => Some(Criterion::Fpe),
            _ => None,
        }
    }

    /// `log s2 + h log(n)/n` or `s2 (n + h)/(n - h)`.
    pub fn value<T: Real>(self, sigma2: T, h: usize, n_p: usize) -> T {
        let (h, n) = (T::from_count(h), T::from_count(n_p));
        match self {
            Criterion::Bic => sigma2.ln() + h * n.ln() / n,
            Criterion::Fpe => sigma2 * (n + h) / (n - h),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CriterionRow<T> {
    pub window: ARWindow,
    pub h: usize,
    pub n_p: usize,
    pub sigma2: T,
    pub value: T,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct OrderSelection<T> {
    pub criterion: Criterion,
    pub chosen: ARWindow,
    pub chosen_index: usize,
    pub table: Vec<CriterionRow<T>>,
}

/// Evaluate `criterion` for each candidate and stop at the first increase.
///
/// The chosen window is the last candidate before the criterion first goes
/// up; if it never does, the last candidate.
pub fn order_select<T: Real>(
    x: &Lattice2D<T>,
    candidates: &[ARWindow],
    criterion: Criterion,
) -> Result<OrderSelection<T>> {
    if candidates.is_empty() {
        return Err(Error::InvalidParameter("no candidate windows".into()));
    }
    let table: Vec<CriterionRow<T>> = candidates
        .par_iter()
        .map(|w| {
            let fit = ls_fit(x, w)?;
            let h = w.cardinality();
            Ok(CriterionRow {
                window: *w,
                h,
                n_p: fit.n_p,
                sigma2: fit.sigma2,
                value: criterion.value(fit.sigma2, h, fit.n_p),
            })
        })
        .collect::<Result<_>>()?;
    let chosen_index = table
        .windows(2)
        .position(|p| p[1].value > p[0].value)
        .unwrap_or(table.len() - 1);
    Ok(OrderSelection {
        criterion,
        chosen: table[chosen_index].window,
        chosen_index,
        table,
    })
}
