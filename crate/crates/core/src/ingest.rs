//! Point data to lattice, mean removal, and step-by-step prediction of
//! missing cells.
//!
//! Grid orientation: row 1 is the southern edge and rows advance northward
//! with latitude; column 1 is the eastern edge and columns advance westward.

use std::collections::hash_map::Entry;
use std::collections::HashMap;

use serde::{Deserialize, Serialize};

use crate::ar::{ar_predict, ls_fit, ARFit, ARWindow};
use crate::cepstrum::{ARField, CepstrumSum};
use crate::error::{Error, Result};
use crate::lattice::{GridDims, HalfPlaneOrder, Index2, Lattice2D};
use crate::pipeline::{fexp_fit_periodogram, spectral_dims};
use crate::predict::{choose_ordering_for, predict, PredictOptions, PredictionResult};
use crate::scalar::Real;
use crate::spectral::SpectrumOptions;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PointRecord {
    pub lat: f64,
    pub lon: f64,
    pub value: f64,
}

/// Bounding box split into `rows x cols` cells.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GridSpec {
    pub lat_min: f64,
    pub lat_max: f64,
    pub lon_min: f64,
    pub lon_max: f64,
    pub rows: usize,
    pub cols: usize,
}

impl GridSpec {
    pub fn validate(&self) -> Result<GridDims> {
        let ok = |a: f64, b: f64| a.is_finite() && b.is_finite() && a < b;
        if !ok(self.lat_min, self.lat_max) || !ok(self.lon_min, self.lon_max) {
            return Err(Error::InvalidParameter(
                "bounding box needs finite min < max on both axes".into(),
            ));
        }
        GridDims::new(self.rows, self.cols)
    }

    /// 1-based cell of a point, or `None` outside the box.
    pub fn cell_of(&self, lat: f64, lon: f64) -> Option<Index2> {
        let bin = |u: f64, lo: f64, hi: f64, n: usize| -> Option<usize> {
            if !(u >= lo && u <= hi) {
                return None;
            }
            let i = ((u - lo) / (hi - lo) * n as f64).floor() as usize;
            Some(i.min(n - 1) + 1)
        };
        let r = bin(lat, self.lat_min, self.lat_max, self.rows)?;
        // distance west of the eastern edge
        let c = bin(
            self.lon_max - lon,
            0.0,
            self.lon_max - self.lon_min,
            self.cols,
        )?;
        Some((r as i64, c as i64))
    }

    /// Cell centre as `(lat, lon)`.
    pub fn centre(&self, cell: Index2) -> (f64, f64) {
        let h = (self.lat_max - self.lat_min) / self.rows as f64;
        let w = (self.lon_max - self.lon_min) / self.cols as f64;
        (
            self.lat_min + (cell.0 as f64 - 0.5) * h,
            self.lon_max - (cell.1 as f64 - 0.5) * w,
        )
    }
}

/// Average the points falling in each cell; cells without points are unobserved.
///
/// Points outside the box or with non-finite fields are dropped.
pub fn grid_points(points: &[PointRecord], spec: &GridSpec) -> Result<Lattice2D<f64>> {
    let dims = spec.validate()?;
    let mut sum = vec![0.0; dims.cells()];
    let mut count = vec![0usize; dims.cells()];
    let mut dropped = 0;
    for p in points {
        match spec.cell_of(p.lat, p.lon).filter(|_| p.value.is_finite()) {
            Some((r, c)) => {
                let o = dims.offset(r as usize, c as usize);
                sum[o] += p.value;
                count[o] += 1;
            }
            None => dropped += 1,
        }
    }
    if dropped > 0 {
        log::warn!("{dropped} point(s) outside the grid or non-finite");
    }
    let mask: Vec<bool> = count.iter().map(|&n| n > 0).collect();
    let values = sum
        .iter()
        .zip(&count)
        .map(|(&s, &n)| if n > 0 { s / n as f64 } else { 0.0 })
        .collect();
    Lattice2D::new(dims, values, mask)
}

/// Subtract the mean of the observed cells; returns the mean for re-adding.
pub fn demean<T: Real>(x: &Lattice2D<T>) -> Result<(Lattice2D<T>, T)> {
    let mean = x.observed_mean().ok_or(Error::NoObservations)?;
    let values = x
        .values()
        .iter()
        .zip(x.mask())
        .map(|(&v, &m)| if m { v - mean } else { v })
        .collect();
    Ok((Lattice2D::new(x.dims(), values, x.mask().to_vec())?, mean))
}

/// Where the prediction coefficients come from.
#[derive(Debug, Clone, PartialEq)]
pub enum FitSource<T> {
    /// Exponential-model fit from the smoothed periodogram with bandwidth `(m1, m2)`.
    Fexp {
        m1: usize,
        m2: usize,
        sum: CepstrumSum,
    },
    /// Least-squares autoregression; the window's own order is ignored.
    Ar { window: ARWindow },
    /// Fixed AR-factor coefficients, used as given; nothing is fitted.
    Given(ARField<T>),
}

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct SequentialOptions {
    /// Inclusive 1-based corners of the fitting sublattice; whole lattice if unset.
    pub fit_region: Option<((usize, usize), (usize, usize))>,
    /// Force one ordering for every cell instead of choosing per cell.
    pub order: Option<HalfPlaneOrder>,
    /// Skip mean removal; the field is taken to have mean zero.
    pub zero_mean: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SequentialPrediction<T> {
    pub cell: Index2,
    /// Prediction with the stored mean added back.
    pub value: T,
    pub order: HalfPlaneOrder,
    pub used_recursion: bool,
    pub zero_filled_count: usize,
}

enum Fitted<T> {
    Field(ARField<T>),
    Ls(ARFit<T>),
}

impl<T: Real> Fitted<T> {
    fn predict(&self, x: &Lattice2D<T>, s: Index2) -> Result<PredictionResult<T>> {
        match self {
            Fitted::Field(a) => predict(x, a, s, PredictOptions::default()),
            Fitted::Ls(f) => ar_predict(x, f, s, PredictOptions::default()),
        }
    }
}

/// Predict `cells` in the given order, each prediction becoming an observed
/// value for the cells after it.
///
/// Coefficients are fitted once per ordering on the demeaned fitting
/// sublattice, which must be fully observed. Reported values include the
/// mean of the observed cells of `x` unless `opts.zero_mean` is set.
pub fn sequential_predict<T: Real>(
    x: &Lattice2D<T>,
    source: &FitSource<T>,
    cells: &[Index2],
    opts: SequentialOptions,
) -> Result<Vec<SequentialPrediction<T>>> {
    if cells.is_empty() {
        return Ok(Vec::new());
    }
    let (mut xd, mean) = if opts.zero_mean {
        (x.clone(), T::zero())
    } else {
        demean(x)?
    };
    let d = x.dims();
    let fit_x = match opts.fit_region {
        Some((tl, br)) => xd.sublattice(tl, br)?,
        None => xd.clone(),
    };
    if !matches!(source, FitSource::Given(_)) {
        fit_x.require_fully_observed()?;
    }

    // lags that decide the per-cell ordering
    let lags = match source {
        FitSource::Fexp { m1, m2, .. } => {
            let s = spectral_dims(fit_x.dims(), *m1, *m2)?;
            (s.n1 / (2 * m1), s.n2 / (2 * m2))
        }
        FitSource::Ar { window } => {
            let (a, b, c, e) = (window.pl1, window.pu1, window.pl2, window.pu2);
            (a.max(b).max(1), c.max(e).max(1))
        }
        FitSource::Given(a) => (a.window().m1, a.window().m2),
    };

    let mut fits: HashMap<HalfPlaneOrder, Fitted<T>> = HashMap::new();
    let mut out = Vec::with_capacity(cells.len());
    for &s in cells {
        let order = match (source, opts.order) {
            (FitSource::Given(a), _) => a.window().order,
            (_, Some(o)) => o,
            _ => choose_ordering_for(&xd, s, lags.0, lags.1)?,
        };
        let fit = match fits.entry(order) {
            Entry::Occupied(e) => e.into_mut(),
            Entry::Vacant(v) => {
                let f = match source {
                    FitSource::Fexp { m1, m2, sum } => Fitted::Field(
                        fexp_fit_periodogram(
                            &fit_x,
                            *m1,
                            *m2,
                            order,
                            &SpectrumOptions::default(),
                            *sum,
                        )?
                        .ar,
                    ),
                    FitSource::Ar { window } => {
                        Fitted::Ls(ls_fit(&fit_x, &window.with_order(order))?)
                    }
                    FitSource::Given(a) => Fitted::Field(a.clone()),
                };
                log::debug!("fitted {} coefficients", order.name());
                v.insert(f)
            }
        };
        let r = fit.predict(&xd, s)?;
        if d.contains(s) {
            xd.set(s.0 as usize, s.1 as usize, r.value);
        }
        out.push(SequentialPrediction {
            cell: s,
            value: r.value + mean,
            order,
            used_recursion: r.used_recursion,
            zero_filled_count: r.zero_filled_count,
        });
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lattice::HalfPlaneWindow;
    use rand::seq::SliceRandom;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;
    use rand_distr::StandardNormal;

    fn spec(rows: usize, cols: usize) -> GridSpec {
        GridSpec {
            lat_min: 33.7,
            lat_max: 34.4,
            lon_min: -118.7,
            lon_max: -118.0,
            rows,
            cols,
        }
    }

    #[test]
    fn one_point_per_cell() {
        let g = spec(3, 4);
        let mut pts = Vec::new();
        for r in 1..=3 {
            for c in 1..=4 {
                let (lat, lon) = g.centre((r, c));
                pts.push(PointRecord {
                    lat,
                    lon,
                    value: (10 * r + c) as f64,
                });
            }
        }
        let x = grid_points(&pts, &g).unwrap();
        assert!(x.is_fully_observed());
        assert_eq!(x.get((2, 3)), Some(23.0));
        // row 1 is south, column 1 is east
        assert!(g.centre((1, 1)).0 < g.centre((2, 1)).0);
        assert!(g.centre((1, 1)).1 > g.centre((1, 2)).1);
    }

    #[test]
    fn cell_edges() {
        let g = GridSpec {
            lat_min: 0.0,
            lat_max: 2.0,
            lon_min: -2.0,
            lon_max: 0.0,
            rows: 2,
            cols: 2,
        };
        assert_eq!(g.cell_of(0.0, 0.0), Some((1, 1)));
        assert_eq!(g.cell_of(1.0, -1.0), Some((2, 2)));
        assert_eq!(g.cell_of(2.0, -2.0), Some((2, 2)));
        assert_eq!(g.cell_of(0.999, -0.999), Some((1, 1)));
        assert_eq!(g.cell_of(2.001, -1.0), None);
        assert_eq!(g.cell_of(1.0, 0.1), None);
        assert_eq!(g.cell_of(f64::NAN, -1.0), None);
    }

    #[test]
    fn cell_mean_and_empty_input() {
        let g = spec(2, 2);
        let (lat, lon) = g.centre((1, 2));
        let pts = [
            PointRecord {
                lat,
                lon,
                value: 1.0,
            },
            PointRecord {
                lat,
                lon,
                value: 3.0,
            },
        ];
        let x = grid_points(&pts, &g).unwrap();
        assert_eq!(x.get((1, 2)), Some(2.0));
        assert_eq!(x.missing_count(), 3);
        assert_eq!(grid_points(&[], &g).unwrap().observed_count(), 0);
        assert!(grid_points(&[], &GridSpec { rows: 0, ..g }).is_err());
        assert!(grid_points(&[], &GridSpec { lat_max: 30.0, ..g }).is_err());
    }

    /// 5259 points over 14 x 23 cells with the given cells left empty.
    fn fixture(empty: &[Index2], seed: u64) -> (GridSpec, Vec<PointRecord>) {
        let g = spec(14, 23);
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let cells: Vec<Index2> = (1..=14)
            .flat_map(|r| (1..=23).map(move |c| (r, c)))
            .filter(|c| !empty.contains(c))
            .collect();
        let h = (g.lat_max - g.lat_min) / 14.0;
        let w = (g.lon_max - g.lon_min) / 23.0;
        let pts = (0..5259)
            .map(|i| {
                // every non-empty cell gets at least one point
                let c = if i < cells.len() {
                    cells[i]
                } else {
                    cells[rng.random_range(0..cells.len())]
                };
                let (lat, lon) = g.centre(c);
                PointRecord {
                    lat: lat + rng.random_range(-0.49..0.49) * h,
                    lon: lon + rng.random_range(-0.49..0.49) * w,
                    value: 4.0e5 + 1.0e5 * rng.sample::<f64, _>(StandardNormal),
                }
            })
            .collect();
        (g, pts)
    }

    const EMPTY: [Index2; 8] = [
        (8, 20),
        (8, 21),
        (8, 22),
        (4, 21),
        (7, 22),
        (9, 23),
        (6, 23),
        (1, 23),
    ];

    #[test]
    fn fixture_counts() {
        let (g, pts) = fixture(&EMPTY, 5);
        assert_eq!(pts.len(), 5259);
        let x = grid_points(&pts, &g).unwrap();
        assert_eq!(x.dims().cells(), 322);
        assert_eq!(x.missing_count(), 8);
        for c in EMPTY {
            assert!(!x.is_observed(c));
        }
    }

    #[test]
    fn gridding_ignores_point_order() {
        let (g, mut pts) = fixture(&EMPTY, 9);
        let a = grid_points(&pts, &g).unwrap();
        pts.shuffle(&mut ChaCha8Rng::seed_from_u64(1));
        let b = grid_points(&pts, &g).unwrap();
        assert_eq!(a.mask(), b.mask());
        for (u, v) in a.values().iter().zip(b.values()) {
            assert!((u - v).abs() <= 1e-9 * u.abs());
        }
    }

    #[test]
    fn demean_examples() {
        let d = GridDims::new(3, 3).unwrap();
        let mut x = Lattice2D::from_fn(d, |_, _| 2.5f64);
        x.mask_cell(2, 2);
        x.set(2, 2, 99.0);
        x.mask_cell(2, 2);
        let (y, m) = demean(&x).unwrap();
        assert_eq!(m, 2.5);
        assert!(y
            .values()
            .iter()
            .zip(y.mask())
            .all(|(v, &o)| !o || *v == 0.0));
        assert!(!y.is_observed((2, 2)));
        assert_eq!(y.raw(2, 2), x.raw(2, 2));
        let (_, m2) = demean(&y).unwrap();
        assert_eq!(m2, 0.0);

        let mut z = Lattice2D::from_fn(d, |i, j| (i * j) as f64);
        let (_, m1) = demean(&z).unwrap();
        let (_, again) = demean(&demean(&z).unwrap().0).unwrap();
        assert!(m1 > 0.0 && again.abs() < 1e-15);
        for r in 1..=3 {
            for c in 1..=3 {
                z.mask_cell(r, c);
            }
        }
        assert_eq!(demean(&z).unwrap_err(), Error::NoObservations);
    }

    fn separable_field(n1: usize, n2: usize, rng: &mut ChaCha8Rng) -> Lattice2D<f64> {
        let (r1, r2) = (0.5, 0.4);
        let burn = 30;
        let (b1, b2) = (n1 + burn, n2 + burn);
        let mut y = vec![0.0; b1 * b2];
        for i in 0..b1 {
            for j in 0..b2 {
                let mut v: f64 = rng.sample(StandardNormal);
                if i > 0 {
                    v += r1 * y[(i - 1) * b2 + j];
                }
                if j > 0 {
                    v += r2 * y[i * b2 + j - 1];
                }
                if i > 0 && j > 0 {
                    v -= r1 * r2 * y[(i - 1) * b2 + j - 1];
                }
                y[i * b2 + j] = v;
            }
        }
        Lattice2D::from_fn(GridDims::new(n1, n2).unwrap(), |i, j| {
            y[(i - 1 + burn) * b2 + j - 1 + burn]
        })
    }

    #[test]
    fn zero_coefficients_predict_the_mean() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let mut x = separable_field(10, 12, &mut rng).map(|v| v + 7.0);
        x.mask_cell(5, 6);
        x.mask_cell(10, 12);
        let mean = x.observed_mean().unwrap();
        let a = ARField::zeros(HalfPlaneWindow::new(2, 2, HalfPlaneOrder::RowLex).unwrap());
        let out = sequential_predict(
            &x,
            &FitSource::Given(a),
            &[(5, 6), (10, 12), (11, 3)],
            Default::default(),
        )
        .unwrap();
        assert_eq!(out.len(), 3);
        for p in out {
            assert!((p.value - mean).abs() < 1e-12);
        }
    }

    #[test]
    fn empty_cell_list_fits_nothing() {
        // a masked fit region would fail if anything were fitted
        let mut x = Lattice2D::from_fn(GridDims::new(6, 6).unwrap(), |i, j| (i + j) as f64);
        x.mask_cell(1, 1);
        let src = FitSource::Ar {
            window: ARWindow::from_pstar(1),
        };
        assert!(sequential_predict(&x, &src, &[], Default::default())
            .unwrap()
            .is_empty());
        assert!(matches!(
            sequential_predict(&x, &src, &[(1, 1)], Default::default()),
            Err(Error::MaskedCells { .. })
        ));
    }

    #[test]
    fn predictions_feed_forward() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let mut x = separable_field(16, 24, &mut rng);
        for c in [(8, 20), (8, 21), (8, 22)] {
            x.mask_cell(c.0 as usize, c.1 as usize);
        }
        let opts = SequentialOptions {
            fit_region: Some(((1, 1), (16, 19))),
            order: Some(HalfPlaneOrder::RowLex),
            ..Default::default()
        };
        let src = FitSource::Ar {
            window: ARWindow::from_pstar(1),
        };
        let seq = sequential_predict(&x, &src, &[(8, 20), (8, 21), (8, 22)], opts).unwrap();
        // (8,21) reads (8,20) through lag (0,1); with the first value fed back
        // it needs no recursion
        assert!(!seq[1].used_recursion);
        assert!(!seq[2].used_recursion);
        let alone = sequential_predict(&x, &src, &[(8, 21)], opts).unwrap();
        assert!(alone[0].used_recursion);
        assert!((alone[0].value - seq[1].value).abs() < 1e-12);
    }

    #[test]
    fn masked_values_and_shift_do_not_matter() {
        let mut rng = ChaCha8Rng::seed_from_u64(21);
        let mut x = separable_field(16, 24, &mut rng);
        for c in EMPTY.iter().filter(|c| c.0 <= 16) {
            x.mask_cell(c.0 as usize, c.1 as usize);
        }
        let opts = SequentialOptions {
            fit_region: Some(((1, 1), (16, 19))),
            order: None,
            ..Default::default()
        };
        for src in [
            FitSource::Fexp {
                m1: 2,
                m2: 2,
                sum: CepstrumSum::FullBox,
            },
            FitSource::Ar {
                window: ARWindow::from_pstar(1),
            },
        ] {
            let base = sequential_predict(&x, &src, &EMPTY, opts).unwrap();
            let mut y = x.clone();
            for c in EMPTY {
                y.set(c.0 as usize, c.1 as usize, 1.0e6);
                y.mask_cell(c.0 as usize, c.1 as usize);
            }
            let junk = sequential_predict(&y, &src, &EMPTY, opts).unwrap();
            let shifted = sequential_predict(&x.map(|v| v + 250.0), &src, &EMPTY, opts).unwrap();
            for ((a, b), c) in base.iter().zip(&junk).zip(&shifted) {
                assert_eq!(a.value, b.value);
                assert!((c.value - a.value - 250.0).abs() < 1e-9, "{:?}", a.cell);
            }
        }
    }

    #[test]
    fn single_missing_cell_within_two_sd() {
        let mut hits = 0;
        for rep in 0..200 {
            let mut rng = ChaCha8Rng::seed_from_u64(1000 + rep);
            let full = separable_field(24, 24, &mut rng);
            let truth = full.raw(12, 12);
            let mut x = full.clone();
            x.mask_cell(12, 12);
            // a 12 x 24 band of full rows above the hole
            let opts = SequentialOptions {
                fit_region: Some(((1, 1), (11, 24))),
                order: Some(HalfPlaneOrder::RowLex),
                ..Default::default()
            };
            let p = sequential_predict(
                &x,
                &FitSource::Ar {
                    window: ARWindow::new(0, 1, 0, 1),
                },
                &[(12, 12)],
                opts,
            )
            .unwrap();
            if (p[0].value - truth).abs() <= 2.0 {
                hits += 1;
            }
        }
        assert!(hits >= 190, "{hits}/200");
    }
}
