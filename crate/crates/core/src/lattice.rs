//! Lattice data model and half-plane index machinery.
//!
//! Sites are addressed with 1-based `(row, col)` pairs; storage is row-major
//! with `(t1, t2) -> (t1 - 1) * n2 + (t2 - 1)`. Lags and coefficient indices
//! are signed pairs `(k1, k2)`.
//!
//! A [`HalfPlaneOrder`] picks which coordinate leads the lexicographic order.
//! Everything downstream works in *canonical* coordinates (leading coordinate
//! first); [`HalfPlaneOrder::to_canonical`] and
//! [`HalfPlaneOrder::from_canonical`] convert between the two.

use std::cmp::Ordering;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scalar::Real;

/// Signed lattice index or lag `(first, second)`.
pub type Index2 = (i64, i64);

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct GridDims {
    pub n1: usize,
    pub n2: usize,
}

impl GridDims {
    pub fn new(n1: usize, n2: usize) -> Result<Self> {
        if n1 == 0 || n2 == 0 {
            return Err(Error::InvalidDims(format!(
                "{n1}x{n2}: both sides must be >= 1"
            )));
        }
        Ok(Self { n1, n2 })
    }

    /// Total number of cells, n1 * n2.
    pub fn cells(&self) -> usize {
        self.n1 * self.n2
    }

    /// Dimensions with rows and columns exchanged.
    pub fn transposed(&self) -> Self {
        Self {
            n1: self.n2,
            n2: self.n1,
        }
    }

    pub fn is_even(&self) -> bool {
        self.n1.is_multiple_of(2) && self.n2.is_multiple_of(2)
    }

    /// Required by the spectral estimators: both sides even.
    pub fn require_even(&self) -> Result<()> {
        if self.is_even() {
            Ok(())
        } else {
            Err(Error::InvalidDims(format!(
                "{}x{}: spectral estimation needs even dimensions",
                self.n1, self.n2
            )))
        }
    }

    /// Largest even-sided dims that fit inside these (drops a trailing row/column).
    pub fn even_trimmed(&self) -> Self {
        Self {
            n1: self.n1 - self.n1 % 2,
            n2: self.n2 - self.n2 % 2,
        }
    }

    pub fn contains(&self, t: Index2) -> bool {
        t.0 >= 1 && t.1 >= 1 && t.0 <= self.n1 as i64 && t.1 <= self.n2 as i64
    }

    #[inline]
    pub fn offset(&self, t1: usize, t2: usize) -> usize {
        debug_assert!(t1 >= 1 && t2 >= 1 && t1 <= self.n1 && t2 <= self.n2);
        (t1 - 1) * self.n2 + (t2 - 1)
    }
}

impl fmt::Display for GridDims {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}x{}", self.n1, self.n2)
    }
}

/// Rectangular grid of real observations with an observation mask.
#[derive(Debug, Clone, PartialEq)]
pub struct Lattice2D<T> {
    dims: GridDims,
    values: Vec<T>,
    mask: Vec<bool>,
}

impl<T: Real> Lattice2D<T> {
    pub fn new(dims: GridDims, values: Vec<T>, mask: Vec<bool>) -> Result<Self> {
        if values.len() != dims.cells() || mask.len() != dims.cells() {
            return Err(Error::InvalidDims(format!(
                "{dims} lattice needs {} values and mask entries, got {} and {}",
                dims.cells(),
                values.len(),
                mask.len()
            )));
        }
        Ok(Self { dims, values, mask })
    }

    /// Fully observed lattice from row-major values.
    pub fn from_values(dims: GridDims, values: Vec<T>) -> Result<Self> {
        let mask = vec![true; values.len()];
        Self::new(dims, values, mask)
    }

    pub fn from_fn(dims: GridDims, mut f: impl FnMut(usize, usize) -> T) -> Self {
        let mut values = Vec::with_capacity(dims.cells());
        for t1 in 1..=dims.n1 {
            for t2 in 1..=dims.n2 {
                values.push(f(t1, t2));
            }
        }
        Self {
            dims,
            values,
            mask: vec![true; dims.cells()],
        }
    }

    pub fn zeros(dims: GridDims) -> Self {
        Self::from_fn(dims, |_, _| T::zero())
    }

    pub fn dims(&self) -> GridDims {
        self.dims
    }

    pub fn values(&self) -> &[T] {
        &self.values
    }

    pub fn mask(&self) -> &[bool] {
        &self.mask
    }

    /// Observed value at a 1-based site; `None` if masked or outside the grid.
    pub fn get(&self, t: Index2) -> Option<T> {
        if !self.dims.contains(t) {
            return None;
        }
        let o = self.dims.offset(t.0 as usize, t.1 as usize);
        self.mask[o].then(|| self.values[o])
    }

    /// Stored value regardless of the mask. Panics outside the grid.
    pub fn raw(&self, t1: usize, t2: usize) -> T {
        self.values[self.dims.offset(t1, t2)]
    }

    pub fn is_observed(&self, t: Index2) -> bool {
        self.dims.contains(t) && self.mask[self.dims.offset(t.0 as usize, t.1 as usize)]
    }

    /// Store an observed value at a 1-based site.
    pub fn set(&mut self, t1: usize, t2: usize, v: T) {
        let o = self.dims.offset(t1, t2);
        self.values[o] = v;
        self.mask[o] = true;
    }

    /// Mark a site unobserved, leaving its stored value untouched.
    pub fn mask_cell(&mut self, t1: usize, t2: usize) {
        let o = self.dims.offset(t1, t2);
        self.mask[o] = false;
    }

    pub fn missing_count(&self) -> usize {
        self.mask.iter().filter(|m| !**m).count()
    }

    pub fn observed_count(&self) -> usize {
        self.dims.cells() - self.missing_count()
    }

    pub fn is_fully_observed(&self) -> bool {
        self.mask.iter().all(|&m| m)
    }

    pub fn require_fully_observed(&self) -> Result<()> {
        match self.missing_count() {
            0 => Ok(()),
            count => Err(Error::MaskedCells { count }),
        }
    }

    /// Swap rows and columns.
    pub fn transpose(&self) -> Self {
        let d = self.dims;
        let td = d.transposed();
        let mut values = Vec::with_capacity(d.cells());
        let mut mask = Vec::with_capacity(d.cells());
        for t1 in 1..=td.n1 {
            for t2 in 1..=td.n2 {
                let o = d.offset(t2, t1);
                values.push(self.values[o]);
                mask.push(self.mask[o]);
            }
        }
        Self {
            dims: td,
            values,
            mask,
        }
    }

    /// Sub-rectangle with 1-based inclusive corners `top_left..=bottom_right`.
    pub fn sublattice(
        &self,
        top_left: (usize, usize),
        bottom_right: (usize, usize),
    ) -> Result<Self> {
        let (r0, c0) = top_left;
        let (r1, c1) = bottom_right;
        if r0 < 1 || c0 < 1 || r1 > self.dims.n1 || c1 > self.dims.n2 || r0 > r1 || c0 > c1 {
            return Err(Error::InvalidDims(format!(
                "sublattice ({r0},{c0})..=({r1},{c1}) outside {}",
                self.dims
            )));
        }
        let dims = GridDims::new(r1 - r0 + 1, c1 - c0 + 1)?;
        let mut values = Vec::with_capacity(dims.cells());
        let mut mask = Vec::with_capacity(dims.cells());
        for t1 in r0..=r1 {
            for t2 in c0..=c1 {
                let o = self.dims.offset(t1, t2);
                values.push(self.values[o]);
                mask.push(self.mask[o]);
            }
        }
        Self::new(dims, values, mask)
    }

    /// Lattice with every value (observed or not) mapped through `f`.
    pub fn map(&self, f: impl Fn(T) -> T) -> Self {
        Self {
            dims: self.dims,
            values: self.values.iter().map(|&v| f(v)).collect(),
            mask: self.mask.clone(),
        }
    }

    /// Mean over observed cells.
    pub fn observed_mean(&self) -> Option<T> {
        let n = self.observed_count();
        if n == 0 {
            return None;
        }
        let s: T = self
            .values
            .iter()
            .zip(&self.mask)
            .filter(|(_, m)| **m)
            .map(|(v, _)| *v)
            .sum();
        Some(s / T::from_count(n))
    }
}

/// Which coordinate leads the lexicographic half-plane order.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum HalfPlaneOrder {
    /// Row index leads: j precedes k iff j1 < k1, or j1 = k1 and j2 < k2.
    #[serde(rename = "row")]
    RowLex,
    /// Column index leads.
    #[serde(rename = "col")]
    ColLex,
}

impl HalfPlaneOrder {
    /// Map a physical pair to (leading, trailing).
    #[inline]
    pub fn to_canonical(self, j: Index2) -> Index2 {
        match self {
            HalfPlaneOrder::RowLex => j,
            HalfPlaneOrder::ColLex => (j.1, j.0),
        }
    }

    #[inline]
    pub fn from_canonical(self, j: Index2) -> Index2 {
        // the swap is an involution
        self.to_canonical(j)
    }

    pub fn name(self) -> &'static str {
        match self {
            HalfPlaneOrder::RowLex => "row",
            HalfPlaneOrder::ColLex => "col",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "row" | "rowlex" => Some(HalfPlaneOrder::RowLex),
            "col" | "collex" => Some(HalfPlaneOrder::ColLex),
            _ => None,
        }
    }
}

/// Lexicographic comparison of two lattice indices under `order`.
///
/// `Ordering::Less` means `j` precedes `k`.
pub fn lex_compare(j: Index2, k: Index2, order: HalfPlaneOrder) -> Ordering {
    let (a, b) = (order.to_canonical(j), order.to_canonical(k));
    a.0.cmp(&b.0).then(a.1.cmp(&b.1))
}

/// Truncated half-plane window `𝓜` with lags `m1` (coordinate 1) and `m2`
/// (coordinate 2).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct HalfPlaneWindow {
    pub m1: usize,
    pub m2: usize,
    pub order: HalfPlaneOrder,
}

impl HalfPlaneWindow {
    pub fn new(m1: usize, m2: usize, order: HalfPlaneOrder) -> Result<Self> {
        if m1 == 0 || m2 == 0 {
            return Err(Error::InvalidWindow(format!(
                "lags must be positive, got ({m1}, {m2})"
            )));
        }
        Ok(Self { m1, m2, order })
    }

    /// (leading lag, trailing lag).
    pub fn canonical_lags(&self) -> (usize, usize) {
        match self.order {
            HalfPlaneOrder::RowLex => (self.m1, self.m2),
            HalfPlaneOrder::ColLex => (self.m2, self.m1),
        }
    }

    /// |𝓜| = trail * (1 + 2 * lead).
    pub fn len(&self) -> usize {
        let (lead, trail) = self.canonical_lags();
        trail * (1 + 2 * lead)
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    /// Position of a physical lag inside the canonical enumeration.
    pub fn position(&self, j: Index2) -> Option<usize> {
        let (lead, trail) = self.canonical_lags();
        let (l, t) = self.order.to_canonical(j);
        let (lead, trail) = (lead as i64, trail as i64);
        if l == 0 {
            (1..=trail).contains(&t).then(|| (t - 1) as usize)
        } else if (1..=lead).contains(&l) && (1 - trail..=trail).contains(&t) {
            Some((trail + (l - 1) * 2 * trail + (t - (1 - trail))) as usize)
        } else {
            None
        }
    }

    pub fn contains(&self, j: Index2) -> bool {
        self.position(j).is_some()
    }

    /// Canonical (leading, trailing) lags in enumeration order.
    pub(crate) fn canonical_indices(&self) -> Vec<Index2> {
        let (lead, trail) = self.canonical_lags();
        let (lead, trail) = (lead as i64, trail as i64);
        let mut out = Vec::with_capacity(self.len());
        out.extend((1..=trail).map(|t| (0, t)));
        for l in 1..=lead {
            out.extend((1 - trail..=trail).map(|t| (l, t)));
        }
        out
    }
}

/// Enumerate `𝓜` in its canonical order: the `(0, k)` block first, then the
/// leading-coordinate blocks, all expressed in physical coordinates.
pub fn half_plane_indices(window: &HalfPlaneWindow) -> Result<Vec<Index2>> {
    HalfPlaneWindow::new(window.m1, window.m2, window.order)?;
    Ok(window
        .canonical_indices()
        .into_iter()
        .map(|c| window.order.from_canonical(c))
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::collections::HashSet;

    use proptest::prelude::*;

    use HalfPlaneOrder::*;

    #[test]
    fn lex_compare_examples() {
        assert_eq!(lex_compare((0, 1), (1, -3), RowLex), Ordering::Less);
        assert_eq!(lex_compare((2, 5), (2, 5), RowLex), Ordering::Equal);
        assert_eq!(lex_compare((2, 5), (2, 5), ColLex), Ordering::Equal);
        assert_eq!(lex_compare((0, 1), (1, -3), ColLex), Ordering::Greater);
    }

    #[test]
    fn indices_small_windows() {
        let w = HalfPlaneWindow::new(1, 1, RowLex).unwrap();
        assert_eq!(
            half_plane_indices(&w).unwrap(),
            vec![(0, 1), (1, 0), (1, 1)]
        );

        let w = HalfPlaneWindow::new(1, 2, RowLex).unwrap();
        let idx = half_plane_indices(&w).unwrap();
        assert_eq!(idx, vec![(0, 1), (0, 2), (1, -1), (1, 0), (1, 1), (1, 2)]);
        assert_eq!(idx.len(), 2 * (1 + 2));

        let w = HalfPlaneWindow::new(1, 1, ColLex).unwrap();
        assert_eq!(
            half_plane_indices(&w).unwrap(),
            vec![(1, 0), (0, 1), (1, 1)]
        );
    }

    #[test]
    fn brute_force_enumeration_matches() {
        // Oracle: scan a box and keep lags inside the truncation bounds that follow 0.
        for m1 in 1..=4usize {
            for m2 in 1..=4usize {
                let w = HalfPlaneWindow::new(m1, m2, RowLex).unwrap();
                let mut expected = Vec::new();
                for k1 in -10..=10i64 {
                    for k2 in -10..=10i64 {
                        let in_box = (k1 == 0 && (1..=m2 as i64).contains(&k2))
                            || ((1..=m1 as i64).contains(&k1)
                                && (1 - m2 as i64..=m2 as i64).contains(&k2));
                        if in_box {
                            expected.push((k1, k2));
                        }
                    }
                }
                let got = half_plane_indices(&w).unwrap();
                assert_eq!(got, expected);
                assert_eq!(got.len(), m2 * (1 + 2 * m1));
                for (pos, j) in got.iter().enumerate() {
                    assert_eq!(lex_compare((0, 0), *j, RowLex), Ordering::Less);
                    assert_eq!(w.position(*j), Some(pos));
                }
            }
        }
    }

    #[test]
    fn window_and_its_negation_tile_the_box() {
        for m1 in 1..=4i64 {
            for m2 in 1..=4i64 {
                let w = HalfPlaneWindow::new(m1 as usize, m2 as usize, RowLex).unwrap();
                let plus: HashSet<Index2> = half_plane_indices(&w).unwrap().into_iter().collect();
                let minus: HashSet<Index2> = plus.iter().map(|&(a, b)| (-a, -b)).collect();
                assert!(plus.is_disjoint(&minus));
                let mut union: HashSet<Index2> = plus.union(&minus).copied().collect();
                union.insert((0, 0));
                // Reflection of a box that is closed on one side: compare with the
                // symmetric box of half-widths (m1, m2), minus the two rims where
                // the truncation is one-sided.
                let sym: HashSet<Index2> = (-m1..=m1)
                    .flat_map(|a| (-m2..=m2).map(move |b| (a, b)))
                    .filter(|&(a, b)| {
                        let (ca, cb) = if (a, b) > (0, 0) { (a, b) } else { (-a, -b) };
                        (ca == 0 && cb <= m2) || (ca > 0 && cb > -m2)
                    })
                    .collect();
                assert_eq!(union, sym);
            }
        }
    }

    #[test]
    fn rejects_zero_lags() {
        assert!(HalfPlaneWindow::new(0, 1, RowLex).is_err());
        let bad = HalfPlaneWindow {
            m1: 2,
            m2: 0,
            order: RowLex,
        };
        assert!(half_plane_indices(&bad).is_err());
    }

    #[test]
    fn lattice_csv_layout_and_transpose() {
        let d = GridDims::new(2, 3).unwrap();
        let x = Lattice2D::from_fn(d, |r, c| (10 * r + c) as f64);
        assert_eq!(x.values(), &[11.0, 12.0, 13.0, 21.0, 22.0, 23.0]);
        let t = x.transpose();
        assert_eq!(t.dims(), GridDims { n1: 3, n2: 2 });
        assert_eq!(t.get((3, 2)), Some(23.0));
        assert_eq!(t.transpose(), x);
    }

    #[test]
    fn masked_cells_read_as_none() {
        let d = GridDims::new(2, 2).unwrap();
        let mut x = Lattice2D::from_values(d, vec![1.0, 2.0, 3.0, 4.0]).unwrap();
        x.mask_cell(1, 2);
        assert_eq!(x.get((1, 2)), None);
        assert_eq!(x.get((0, 1)), None);
        assert_eq!(x.missing_count(), 1);
        assert_eq!(x.observed_mean(), Some((1.0 + 3.0 + 4.0) / 3.0));
        assert!(matches!(
            x.require_fully_observed(),
            Err(Error::MaskedCells { count: 1 })
        ));
    }

    fn pair() -> impl Strategy<Value = Index2> {
        (-20i64..20, -20i64..20)
    }

    fn order() -> impl Strategy<Value = HalfPlaneOrder> {
        prop_oneof![Just(RowLex), Just(ColLex)]
    }

    proptest! {
        #[test]
        fn ordering_is_total_and_antisymmetric(j in pair(), k in pair(), o in order()) {
            let a = lex_compare(j, k, o);
            let b = lex_compare(k, j, o);
            prop_assert_eq!(a, b.reverse());
            prop_assert_eq!(a == Ordering::Equal, j == k);
        }

        #[test]
        fn ordering_is_transitive(a in pair(), b in pair(), c in pair(), o in order()) {
            if lex_compare(a, b, o) == Ordering::Less && lex_compare(b, c, o) == Ordering::Less {
                prop_assert_eq!(lex_compare(a, c, o), Ordering::Less);
            }
        }

        #[test]
        fn col_lex_is_swapped_row_lex(m1 in 1usize..6, m2 in 1usize..6) {
            let col = half_plane_indices(&HalfPlaneWindow::new(m1, m2, ColLex).unwrap()).unwrap();
            let row = half_plane_indices(&HalfPlaneWindow::new(m2, m1, RowLex).unwrap()).unwrap();
            let swapped: Vec<Index2> = row.into_iter().map(|(a, b)| (b, a)).collect();
            prop_assert_eq!(col, swapped);
        }
    }
}
