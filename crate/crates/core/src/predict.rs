//! Half-plane linear prediction with recursive filling of unobserved cells.
//!
//! A prediction is `x^_s = sum_k w_k x^_{s-k}` over lags `k` that follow the
//! origin in the active ordering. For the cepstral predictor `w_k = -a_k`; the
//! least-squares autoregression supplies `w_k` directly.
//!
//! Values `x^_u` referenced by the sum are resolved as:
//!
//! * observed cells use their value;
//! * unobserved cells inside the lattice are predicted recursively;
//! * outside the lattice, interior requests read zero. Boundary requests
//!   (target one row past the leading edge) recurse along the new row and
//!   along a strip left of the lattice, and read zero where
//!   `u2 < -r` or `(u2 < 0 and u1 < n1 - r)`, with `r = min(floor(n2/8), T)`.
//!
//! Column-leading requests run on the transposed lattice. Every referenced cell
//! precedes the one referencing it, so the recursion is a finite DAG and is
//! evaluated bottom-up with an explicit stack.

use std::collections::{HashMap, HashSet};

use serde::Serialize;

use crate::cepstrum::ARField;
use crate::error::{Error, Result};
use crate::lattice::{GridDims, HalfPlaneOrder, HalfPlaneWindow, Index2, Lattice2D};
use crate::scalar::Real;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PredictionResult<T> {
    pub value: T,
    pub order: HalfPlaneOrder,
    pub used_recursion: bool,
    /// Distinct cells read as zero by the fill convention.
    pub zero_filled_count: usize,
    /// Distinct cells (other than the target) predicted recursively.
    pub recursive_cells: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct PredictOptions {
    /// Treat an observed target as unobserved instead of rejecting it.
    pub allow_observed_target: bool,
}

impl PredictOptions {
    pub fn validation() -> Self {
        Self {
            allow_observed_target: true,
        }
    }
}

/// Ordering suggested by the target's location alone.
///
/// Targets one row past the lattice use the row-leading order, one column
/// past the column-leading order; interior targets default to row-leading.
pub fn choose_ordering(s: Index2, dims: GridDims) -> Result<HalfPlaneOrder> {
    let (n1, n2) = (dims.n1 as i64, dims.n2 as i64);
    if s.0 < 1 || s.1 < 1 || s.0 > n1 + 1 || s.1 > n2 + 1 {
        return Err(Error::InvalidLocation(
            s.0,
            s.1,
            format!("more than one step outside {dims}"),
        ));
    }
    if s.0 == n1 + 1 {
        Ok(HalfPlaneOrder::RowLex)
    } else if s.1 == n2 + 1 {
        Ok(HalfPlaneOrder::ColLex)
    } else {
        Ok(HalfPlaneOrder::RowLex)
    }
}

/// Like [`choose_ordering`], but an interior target switches to the
/// column-leading order when its support under that order has fewer
/// unobserved cells.
pub fn choose_ordering_for<T: Real>(
    x: &Lattice2D<T>,
    s: Index2,
    m1: usize,
    m2: usize,
) -> Result<HalfPlaneOrder> {
    let by_location = choose_ordering(s, x.dims())?;
    let dims = x.dims();
    if s.0 > dims.n1 as i64 || s.1 > dims.n2 as i64 {
        return Ok(by_location);
    }
    let unobserved = |order| -> Result<usize> {
        let w = HalfPlaneWindow::new(m1, m2, order)?;
        Ok(w.canonical_indices()
            .into_iter()
            .map(|c| order.from_canonical(c))
            .filter(|k| !x.is_observed((s.0 - k.0, s.1 - k.1)))
            .count())
    };
    let row = unobserved(HalfPlaneOrder::RowLex)?;
    let col = unobserved(HalfPlaneOrder::ColLex)?;
    Ok(if row > col {
        HalfPlaneOrder::ColLex
    } else {
        HalfPlaneOrder::RowLex
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Mode {
    Interior,
    Boundary,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Cell<T> {
    Known(T),
    Zero,
    Recurse,
}

/// Recursive evaluator in canonical (leading, trailing) coordinates.
struct Recursion<'a, T> {
    x: &'a Lattice2D<T>,
    terms: &'a [(Index2, T)],
    target: Index2,
    mode: Mode,
    r: i64,
}

impl<T: Real> Recursion<'_, T> {
    fn classify(&self, u: Index2) -> Cell<T> {
        if u == self.target {
            return Cell::Recurse;
        }
        let d = self.x.dims();
        let (n1, n2) = (d.n1 as i64, d.n2 as i64);
        if d.contains(u) {
            return match self.x.get(u) {
                Some(v) => Cell::Known(v),
                None => Cell::Recurse,
            };
        }
        match self.mode {
            Mode::Interior => Cell::Zero,
            Mode::Boundary => {
                if u.0 == n1 + 1 && (1..=n2).contains(&u.1) {
                    Cell::Recurse
                } else if u.1 < -self.r || (u.1 < 0 && u.0 < n1 - self.r) {
                    Cell::Zero
                } else if u.1 <= 0 && (1..=n1 + 1).contains(&u.0) {
                    Cell::Recurse
                } else {
                    Cell::Zero
                }
            }
        }
    }

    fn run(&self) -> (T, usize, usize) {
        let mut memo: HashMap<Index2, T> = HashMap::new();
        let mut zeros: HashSet<Index2> = HashSet::new();
        let mut stack = vec![self.target];
        while let Some(&u) = stack.last() {
            if memo.contains_key(&u) {
                stack.pop();
                continue;
            }
            let mut pending = false;
            let mut acc = T::zero();
            for &(k, w) in self.terms {
                let v = (u.0 - k.0, u.1 - k.1);
                match self.classify(v) {
                    Cell::Known(val) => acc += w * val,
                    Cell::Zero => {
                        zeros.insert(v);
                    }
                    Cell::Recurse => match memo.get(&v) {
                        Some(&val) => acc += w * val,
                        None => {
                            stack.push(v);
                            pending = true;
                        }
                    },
                }
            }
            if !pending {
                memo.insert(u, acc);
                stack.pop();
            }
        }
        (memo[&self.target], memo.len() - 1, zeros.len())
    }
}

/// Predict `s` from weights `w_k` on physical lags under `order`.
///
/// `trail_lag` is the trailing truncation lag used in the boundary fill
/// bound `r`.
pub fn predict_with_weights<T: Real>(
    x: &Lattice2D<T>,
    order: HalfPlaneOrder,
    weights: &[(Index2, T)],
    trail_lag: usize,
    s: Index2,
    opts: PredictOptions,
) -> Result<PredictionResult<T>> {
    let terms: Vec<(Index2, T)> = weights
        .iter()
        .map(|&(k, w)| (order.to_canonical(k), w))
        .collect();
    if let Some((k, _)) = terms.iter().find(|(k, _)| *k <= (0, 0)) {
        return Err(Error::InvalidWindow(format!(
            "lag {k:?} does not follow the origin"
        )));
    }
    let transposed;
    let xc = match order {
        HalfPlaneOrder::RowLex => x,
        HalfPlaneOrder::ColLex => {
            transposed = x.transpose();
            &transposed
        }
    };
    let sc = order.to_canonical(s);
    let d = xc.dims();
    let (n1, n2) = (d.n1 as i64, d.n2 as i64);
    let mode = if d.contains(sc) {
        if xc.is_observed(sc) && !opts.allow_observed_target {
            return Err(Error::InvalidLocation(
                s.0,
                s.1,
                "target cell is observed".into(),
            ));
        }
        Mode::Interior
    } else if sc.0 == n1 + 1 && (1..=n2 + 1).contains(&sc.1) {
        Mode::Boundary
    } else {
        return Err(Error::InvalidLocation(
            s.0,
            s.1,
            format!(
                "not inside {} nor one step past its leading edge under {} order",
                x.dims(),
                order.name()
            ),
        ));
    };
    let r = ((d.n2 / 8).min(trail_lag)) as i64;
    let rec = Recursion {
        x: xc,
        terms: &terms,
        target: sc,
        mode,
        r,
    };
    let (value, recursive_cells, zero_filled_count) = rec.run();
    Ok(PredictionResult {
        value,
        order,
        used_recursion: recursive_cells > 0,
        zero_filled_count,
        recursive_cells,
    })
}

fn fexp_weights<T: Real>(a: &ARField<T>) -> Vec<(Index2, T)> {
    a.iter().map(|(k, v)| (k, -v)).collect()
}

/// `x^_s = -sum_{k in 𝓜} a_k x^_{s-k}` for a target inside the lattice.
pub fn predict_interior<T: Real>(
    x: &Lattice2D<T>,
    a: &ARField<T>,
    s: Index2,
    opts: PredictOptions,
) -> Result<PredictionResult<T>> {
    if !x.dims().contains(s) {
        return Err(Error::InvalidLocation(
            s.0,
            s.1,
            format!("outside {}", x.dims()),
        ));
    }
    let w = a.window();
    predict_with_weights(x, w.order, &fexp_weights(a), w.canonical_lags().1, s, opts)
}

/// One-step extrapolation past the leading edge of the field's ordering.
pub fn predict_boundary<T: Real>(
    x: &Lattice2D<T>,
    a: &ARField<T>,
    s: Index2,
) -> Result<PredictionResult<T>> {
    let w = a.window();
    let sc = w.order.to_canonical(s);
    let dc = match w.order {
        HalfPlaneOrder::RowLex => x.dims(),
        HalfPlaneOrder::ColLex => x.dims().transposed(),
    };
    if sc.0 != dc.n1 as i64 + 1 || sc.1 < 1 || sc.1 > dc.n2 as i64 + 1 {
        return Err(Error::InvalidLocation(
            s.0,
            s.1,
            "not one step past the leading edge".into(),
        ));
    }
    predict_with_weights(
        x,
        w.order,
        &fexp_weights(a),
        w.canonical_lags().1,
        s,
        PredictOptions::default(),
    )
}

/// Interior or boundary prediction, chosen from the target's location.
pub fn predict<T: Real>(
    x: &Lattice2D<T>,
    a: &ARField<T>,
    s: Index2,
    opts: PredictOptions,
) -> Result<PredictionResult<T>> {
    if x.dims().contains(s) {
        predict_interior(x, a, s, opts)
    } else {
        predict_boundary(x, a, s)
    }
}
