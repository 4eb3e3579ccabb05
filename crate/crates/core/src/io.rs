//! Plain-text formats for lattices, spectral grids, coefficient fields and
//! point records.
//!
//! Every format is comma separated with one record per line. Blank lines are
//! skipped. Errors carry the 1-based line number.

use std::fmt::Write as _;
use std::str::FromStr;

use crate::cepstrum::{ARField, CepstralField, MAField};
use crate::error::{Error, Result};
use crate::ingest::PointRecord;
use crate::lattice::{GridDims, HalfPlaneOrder, HalfPlaneWindow, Index2, Lattice2D};
use crate::scalar::Real;
use crate::spectral::{SmoothingBandwidth, SpectralGrid};

/// Token for an unobserved lattice cell.
pub const MISSING: &str = "NA";

fn lines(text: &str) -> impl Iterator<Item = (usize, Vec<&str>)> {
    text.lines()
        .enumerate()
        .map(|(i, l)| (i + 1, l.trim()))
        .filter(|(_, l)| !l.is_empty())
        .map(|(i, l)| (i, l.split(',').map(str::trim).collect()))
}

fn field<V: FromStr>(line: usize, tok: &str, what: &str) -> Result<V> {
    tok.parse().map_err(|_| Error::Parse {
        line,
        msg: format!("bad {what} {tok:?}"),
    })
}

fn real<T: Real>(line: usize, tok: &str) -> Result<T> {
    let v: f64 = field(line, tok, "value")?;
    if !v.is_finite() {
        return Err(Error::Parse {
            line,
            msg: format!("non-finite value {tok:?}"),
        });
    }
    Ok(T::lit(v))
}

fn arity(line: usize, rec: &[&str], n: usize) -> Result<()> {
    if rec.len() != n {
        return Err(Error::Parse {
            line,
            msg: format!("expected {n} fields, got {}", rec.len()),
        });
    }
    Ok(())
}

/// Parse a lattice: `rows,cols`, then one line per row with `NA` for holes.
pub fn lattice_from_csv<T: Real>(text: &str) -> Result<Lattice2D<T>> {
    let mut it = lines(text);
    let (line, head) = it.next().ok_or(Error::Parse {
        line: 1,
        msg: "empty input".into(),
    })?;
    arity(line, &head, 2)?;
    let dims = GridDims::new(
        field(line, head[0], "row count")?,
        field(line, head[1], "column count")?,
    )?;
    let mut values = Vec::with_capacity(dims.cells());
    let mut mask = Vec::with_capacity(dims.cells());
    let mut rows = 0;
    for (line, rec) in it {
        rows += 1;
        if rows > dims.n1 {
            return Err(Error::Parse {
                line,
                msg: format!("more than {} rows", dims.n1),
            });
        }
        arity(line, &rec, dims.n2)?;
        for tok in rec {
            if tok.eq_ignore_ascii_case(MISSING) {
                values.push(T::zero());
                mask.push(false);
            } else {
                values.push(real(line, tok)?);
                mask.push(true);
            }
        }
    }
    if rows != dims.n1 {
        return Err(Error::Parse {
            line: text.lines().count(),
            msg: format!("expected {} rows, got {rows}", dims.n1),
        });
    }
    Lattice2D::new(dims, values, mask)
}

pub fn lattice_to_csv<T: Real>(x: &Lattice2D<T>) -> String {
    let d = x.dims();
    let mut out = format!("{},{}\n", d.n1, d.n2);
    for t1 in 1..=d.n1 {
        let row: Vec<String> = (1..=d.n2)
            .map(|t2| match x.get((t1 as i64, t2 as i64)) {
                Some(v) => v.to_string(),
                None => MISSING.to_string(),
            })
            .collect();
        out.push_str(&row.join(","));
        out.push('\n');
    }
    out
}

/// `m1,m2,M1,M2` on the first line, then `k1,k2,value` for every stored index.
pub fn spectral_grid_to_csv<T: Real>(g: &SpectralGrid<T>) -> String {
    let bw = g.bandwidth();
    let (mm1, mm2) = g.coarse();
    let mut out = format!("{},{},{mm1},{mm2}\n", bw.m1, bw.m2);
    for ((k1, k2), v) in g.entries() {
        let _ = writeln!(out, "{k1},{k2},{v}");
    }
    out
}

pub fn spectral_grid_from_csv<T: Real>(text: &str, floor: T) -> Result<SpectralGrid<T>> {
    let mut it = lines(text);
    let (line, head) = it.next().ok_or(Error::Parse {
        line: 1,
        msg: "empty input".into(),
    })?;
    arity(line, &head, 4)?;
    let p: Vec<usize> = head
        .iter()
        .map(|t| field(line, t, "header field"))
        .collect::<Result<_>>()?;
    let (m1, m2, mm1, mm2) = (p[0], p[1], p[2], p[3]);
    let bw = SmoothingBandwidth::new(GridDims::new(2 * m1 * mm1, 2 * m2 * mm2)?, m1, m2)?;
    let width = 2 * mm2;
    let mut values = vec![None; (mm1 + 1) * width];
    for (line, rec) in it {
        arity(line, &rec, 3)?;
        let k1: i64 = field(line, rec[0], "k1")?;
        let k2: i64 = field(line, rec[1], "k2")?;
        if k1 < 0 || k1 > mm1 as i64 || k2 < 1 - mm2 as i64 || k2 > mm2 as i64 {
            return Err(Error::Parse {
                line,
                msg: format!("index ({k1},{k2}) outside the stored grid"),
            });
        }
        let slot = &mut values[k1 as usize * width + (k2 + mm2 as i64 - 1) as usize];
        if slot.is_some() {
            return Err(Error::Parse {
                line,
                msg: format!("duplicate index ({k1},{k2})"),
            });
        }
        *slot = Some(real::<T>(line, rec[2])?);
    }
    let missing = values.iter().filter(|v| v.is_none()).count();
    if missing > 0 {
        return Err(Error::Parse {
            line: text.lines().count(),
            msg: format!("{missing} grid value(s) missing"),
        });
    }
    SpectralGrid::from_values(bw, values.into_iter().flatten().collect(), floor)
}

fn coeff_header(w: &HalfPlaneWindow) -> String {
    format!("{},{},{}\n", w.m1, w.m2, w.order.name())
}

fn coeff_rows<T: Real>(out: &mut String, it: impl Iterator<Item = (Index2, T)>) {
    for ((j1, j2), v) in it {
        let _ = writeln!(out, "{j1},{j2},{v}");
    }
}

/// Window header plus `(lag, value)` rows; the origin row, if any, is split off.
type CoeffRows<T> = (HalfPlaneWindow, Option<T>, Vec<(Index2, T)>);

fn coeffs_from_csv<T: Real>(text: &str) -> Result<CoeffRows<T>> {
    let mut it = lines(text);
    let (line, head) = it.next().ok_or(Error::Parse {
        line: 1,
        msg: "empty input".into(),
    })?;
    arity(line, &head, 3)?;
    let order = HalfPlaneOrder::parse(head[2]).ok_or_else(|| Error::Parse {
        line,
        msg: format!("unknown order {:?}", head[2]),
    })?;
    let w = HalfPlaneWindow::new(
        field(line, head[0], "M1")?,
        field(line, head[1], "M2")?,
        order,
    )?;
    let mut origin = None;
    let mut entries = Vec::with_capacity(w.len());
    let mut seen = std::collections::HashSet::new();
    for (line, rec) in it {
        arity(line, &rec, 3)?;
        let j: Index2 = (field(line, rec[0], "j1")?, field(line, rec[1], "j2")?);
        let v = real::<T>(line, rec[2])?;
        if !seen.insert(j) {
            return Err(Error::Parse {
                line,
                msg: format!("duplicate lag {j:?}"),
            });
        }
        if j == (0, 0) {
            origin = Some(v);
        } else if w.contains(j) {
            entries.push((j, v));
        } else {
            return Err(Error::Parse {
                line,
                msg: format!("lag {j:?} outside the window"),
            });
        }
    }
    Ok((w, origin, entries))
}

/// `M1,M2,order`, then `0,0,alpha0` and `j1,j2,alpha_j` in enumeration order.
pub fn cepstrum_to_csv<T: Real>(c: &CepstralField<T>) -> String {
    let mut out = coeff_header(&c.window());
    let _ = writeln!(out, "0,0,{}", c.alpha0());
    coeff_rows(&mut out, c.iter());
    out
}

pub fn cepstrum_from_csv<T: Real>(text: &str) -> Result<CepstralField<T>> {
    let (w, alpha0, entries) = coeffs_from_csv(text)?;
    let alpha0 = alpha0.ok_or(Error::Parse {
        line: 2,
        msg: "missing 0,0 row".into(),
    })?;
    CepstralField::from_entries(w, alpha0, &entries)
}

pub fn ar_field_to_csv<T: Real>(a: &ARField<T>) -> String {
    let mut out = coeff_header(&a.window());
    coeff_rows(&mut out, a.iter());
    out
}

/// Read AR coefficients. A cepstrum file is rejected: its `0,0` row has no
/// counterpart here.
pub fn ar_field_from_csv<T: Real>(text: &str) -> Result<ARField<T>> {
    let (w, origin, entries) = coeffs_from_csv(text)?;
    if origin.is_some() {
        return Err(Error::Parse {
            line: 2,
            msg: "unexpected 0,0 row in an AR coefficient file".into(),
        });
    }
    ARField::from_entries(w, &entries)
}

pub fn ma_field_to_csv<T: Real>(z: &MAField<T>) -> String {
    let mut out = coeff_header(&z.window());
    coeff_rows(&mut out, z.iter());
    out
}

/// Points with header `lat,lon,value`.
pub fn points_from_csv(text: &str) -> Result<Vec<PointRecord>> {
    let mut it = lines(text);
    let (line, head) = it.next().ok_or(Error::Parse {
        line: 1,
        msg: "empty input".into(),
    })?;
    if head
        .iter()
        .map(|h| h.to_ascii_lowercase())
        .ne(["lat", "lon", "value"])
    {
        return Err(Error::Parse {
            line,
            msg: "expected header lat,lon,value".into(),
        });
    }
    it.map(|(line, rec)| {
        arity(line, &rec, 3)?;
        let p = PointRecord {
            lat: real(line, rec[0])?,
            lon: real(line, rec[1])?,
            value: real(line, rec[2])?,
        };
        Ok(p)
    })
    .collect()
}

pub fn points_to_csv(points: &[PointRecord]) -> String {
    let mut out = String::from("lat,lon,value\n");
    for p in points {
        let _ = writeln!(out, "{},{},{}", p.lat, p.lon, p.value);
    }
    out
}
