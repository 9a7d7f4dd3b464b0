//! Grid functions with nearest-neighbour interpolation.
//!
//! Fields built on a lattice answer nearest-node queries in O(1) through a dense
//! index table: when the lattice node under `x` belongs to the field it is the
//! nearest point (lattice Voronoi cells are cubes). Otherwise, near the
//! boundary, a shell search runs outward and ties go to the lowest point index.

use std::io::{BufRead, Write};
use std::sync::Arc;

use serde::Serialize;
use smallvec::SmallVec;

use crate::error::{Error, Result};
use crate::geometry::Grid;
use crate::real::{distance, Real};

#[derive(Debug)]
struct LatticeIndex<S> {
    origin: Vec<S>,
    spacing: S,
    kmin: Vec<i64>,
    extent: Vec<i64>,
    table: Vec<u32>,
}

/// See [`Field::neighbour_jumps`].
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize)]
pub struct NeighbourJumps {
    /// Largest nearest-neighbour distance.
    pub spacing: f64,
    pub pairs: usize,
    pub max_jump: f64,
    pub mean_jump: f64,
    /// Largest `|u_i - u_j| / |x_i - x_j|`.
    pub max_quotient: f64,
}

const EMPTY: u32 = u32::MAX;

impl<S: Real> LatticeIndex<S> {
    fn build(origin: Vec<S>, spacing: S, indices: &[Vec<i64>]) -> Option<Self> {
        let dim = origin.len();
        let mut kmin = vec![i64::MAX; dim];
        let mut kmax = vec![i64::MIN; dim];
        for k in indices {
            for i in 0..dim {
                kmin[i] = kmin[i].min(k[i]);
                kmax[i] = kmax[i].max(k[i]);
            }
        }
        let extent: Vec<i64> = (0..dim).map(|i| kmax[i] - kmin[i] + 1).collect();
        let size = extent.iter().try_fold(1usize, |acc, &e| acc.checked_mul(e as usize))?;
        if size > 64 * indices.len().max(1024) {
            return None;
        }
        let mut table = vec![EMPTY; size];
        let mut idx = LatticeIndex {
            origin,
            spacing,
            kmin,
            extent,
            table: Vec::new(),
        };
        for (p, k) in indices.iter().enumerate() {
            let slot = idx.slot(k)?;
            table[slot] = p as u32;
        }
        idx.table = table;
        Some(idx)
    }

    fn slot(&self, k: &[i64]) -> Option<usize> {
        let mut s = 0usize;
        for ((&ki, &lo), &ext) in k.iter().zip(&self.kmin).zip(&self.extent) {
            let off = ki - lo;
            if off < 0 || off >= ext {
                return None;
            }
            s = s * ext as usize + off as usize;
        }
        Some(s)
    }

    fn nearest(&self, points: &[Vec<S>], x: &[S]) -> usize {
        let dim = x.len();
        let centre: SmallVec<[i64; 8]> = (0..dim)
            .map(|i| {
                ((x[i] - self.origin[i]) / self.spacing)
                    .round()
                    .to_i64()
                    .unwrap_or(0)
                    .clamp(self.kmin[i] - 1, self.kmin[i] + self.extent[i])
            })
            .collect();
        if let Some(slot) = self.slot(&centre) {
            if self.table[slot] != EMPTY {
                return self.table[slot] as usize;
            }
        }
        let max_shell = (0..dim)
            .map(|i| {
                (centre[i] - self.kmin[i])
                    .abs()
                    .max((self.kmin[i] + self.extent[i] - 1 - centre[i]).abs())
            })
            .max()
            .unwrap_or(0);
        let mut best: Option<(S, usize)> = None;
        let mut lo: SmallVec<[i64; 8]> = SmallVec::from_elem(0, dim);
        let mut hi: SmallVec<[i64; 8]> = SmallVec::from_elem(0, dim);
        for shell in 0..=max_shell {
            if let Some((d2, _)) = best {
                let lb = (S::lit(shell as f64) - S::lit(0.5)) * self.spacing;
                if lb > S::zero() && lb * lb > d2 {
                    break;
                }
            }
            // the cube of half-width `shell` cut to the table, keeping its surface
            let mut empty = false;
            for i in 0..dim {
                lo[i] = (centre[i] - shell).max(self.kmin[i]);
                hi[i] = (centre[i] + shell).min(self.kmin[i] + self.extent[i] - 1);
                empty |= lo[i] > hi[i];
            }
            if empty {
                continue;
            }
            let mut k = lo.clone();
            'cells: loop {
                if (0..dim).any(|i| (k[i] - centre[i]).abs() == shell) {
                    let p = self.table[self.slot(&k).expect("inside the table")];
                    if p != EMPTY {
                        let p = p as usize;
                        let d2 = sq_dist(&points[p], x);
                        best = match best {
                            Some((bd, bi)) if bd < d2 || (bd == d2 && bi < p) => Some((bd, bi)),
                            _ => Some((d2, p)),
                        };
                    }
                }
                for i in (0..dim).rev() {
                    if k[i] < hi[i] {
                        k[i] += 1;
                        continue 'cells;
                    }
                    k[i] = lo[i];
                }
                break;
            }
        }
        best.map(|(_, i)| i).unwrap_or(0)
    }
}

#[inline]
fn sq_dist<S: Real>(a: &[S], b: &[S]) -> S {
    a.iter()
        .zip(b)
        .fold(S::zero(), |acc, (p, q)| acc + (*p - *q) * (*p - *q))
}

#[derive(Debug)]
struct Support<S> {
    dim: usize,
    points: Vec<Vec<S>>,
    lattice: Option<LatticeIndex<S>>,
}

/// Values and standard errors on a finite point set.
#[derive(Debug, Clone)]
pub struct Field<S> {
    support: Arc<Support<S>>,
    values: Vec<S>,
    stderrs: Vec<S>,
}

impl<S: Real> Field<S> {
    pub fn from_grid(grid: &Grid<S>, values: Vec<S>, stderrs: Vec<S>) -> Result<Self> {
        let lattice = LatticeIndex::build(grid.origin.clone(), grid.spacing, &grid.indices);
        Self::assemble(grid.dim, grid.points.clone(), lattice, values, stderrs)
    }

    /// Field on arbitrary points. A lattice index is used when the points lie on
    /// a common axis-aligned lattice.
    pub fn from_points(points: Vec<Vec<S>>, values: Vec<S>, stderrs: Vec<S>) -> Result<Self> {
        let dim = points
            .first()
            .map(Vec::len)
            .ok_or_else(|| Error::input("field needs at least one point"))?;
        let lattice = detect_lattice(&points).and_then(|(o, h, idx)| LatticeIndex::build(o, h, &idx));
        Self::assemble(dim, points, lattice, values, stderrs)
    }

    pub fn constant_on_grid(grid: &Grid<S>, value: S) -> Result<Self> {
        let n = grid.len();
        Self::from_grid(grid, vec![value; n], vec![S::zero(); n])
    }

    fn assemble(
        dim: usize,
        points: Vec<Vec<S>>,
        lattice: Option<LatticeIndex<S>>,
        values: Vec<S>,
        stderrs: Vec<S>,
    ) -> Result<Self> {
        if points.is_empty() {
            return Err(Error::input("field needs at least one point"));
        }
        if values.len() != points.len() || stderrs.len() != points.len() {
            return Err(Error::input(format!(
                "field has {} points but {} values and {} standard errors",
                points.len(),
                values.len(),
                stderrs.len()
            )));
        }
        if points.iter().any(|p| p.len() != dim) {
            return Err(Error::input("field points have inconsistent dimensions"));
        }
        Ok(Field {
            support: Arc::new(Support { dim, points, lattice }),
            values,
            stderrs,
        })
    }

    /// Same points, new values.
    pub fn with_values(&self, values: Vec<S>, stderrs: Vec<S>) -> Result<Self> {
        if values.len() != self.len() || stderrs.len() != self.len() {
            return Err(Error::input("value count does not match the field's points"));
        }
        Ok(Field {
            support: self.support.clone(),
            values,
            stderrs,
        })
    }

    /// Same points, every value `value`, zero standard error.
    pub fn filled(&self, value: S) -> Self {
        Field {
            support: self.support.clone(),
            values: vec![value; self.len()],
            stderrs: vec![S::zero(); self.len()],
        }
    }

    pub fn dim(&self) -> usize {
        self.support.dim
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn points(&self) -> &[Vec<S>] {
        &self.support.points
    }

    pub fn values(&self) -> &[S] {
        &self.values
    }

    pub fn stderrs(&self) -> &[S] {
        &self.stderrs
    }

    pub fn shares_points_with(&self, other: &Field<S>) -> bool {
        Arc::ptr_eq(&self.support, &other.support)
    }

    /// Index of the nearest field point.
    pub fn nearest(&self, x: &[S]) -> usize {
        match &self.support.lattice {
            Some(lat) => lat.nearest(&self.support.points, x),
            None => {
                let mut best = (S::infinity(), 0);
                for (i, p) in self.support.points.iter().enumerate() {
                    let d2 = sq_dist(p, x);
                    if d2 < best.0 {
                        best = (d2, i);
                    }
                }
                best.1
            }
        }
    }

    /// Nearest-neighbour interpolant.
    #[inline]
    pub fn interpolate(&self, x: &[S]) -> S {
        self.values[self.nearest(x)]
    }

    /// Clamps values into `[lo, hi]`; returns the clamped field and the number
    /// of values that were outside.
    pub fn clamped(&self, lo: S, hi: S) -> (Self, usize) {
        let mut violations = 0;
        let values = self
            .values
            .iter()
            .map(|&v| {
                if v < lo || v > hi {
                    violations += 1;
                }
                v.max(lo).min(hi)
            })
            .collect();
        (
            Field {
                support: self.support.clone(),
                values,
                stderrs: self.stderrs.clone(),
            },
            violations,
        )
    }

    /// Grid sup-norm of the difference.
    pub fn sup_diff(&self, other: &Field<S>) -> S {
        self.values
            .iter()
            .zip(&other.values)
            .fold(S::zero(), |m, (a, b)| m.max((*a - *b).abs()))
    }

    pub fn max_stderr(&self) -> S {
        self.stderrs.iter().fold(S::zero(), |m, s| m.max(*s))
    }

    /// Largest standard error of the pointwise difference of two independent fields.
    pub fn max_combined_stderr(&self, other: &Field<S>) -> S {
        self.stderrs
            .iter()
            .zip(&other.stderrs)
            .fold(S::zero(), |m, (a, b)| m.max((*a * *a + *b * *b).sqrt()))
    }

    /// Value differences across nearest-neighbour pairs: a discrete modulus of
    /// continuity at the resolution of the points. Quadratic in the point count.
    pub fn neighbour_jumps(&self) -> NeighbourJumps {
        let pts: Vec<Vec<f64>> = self
            .points()
            .iter()
            .map(|p| p.iter().map(|c| c.to_f64_lossy()).collect())
            .collect();
        let vals: Vec<f64> = self.values.iter().map(|v| v.to_f64_lossy()).collect();
        let n = pts.len();
        let mut nearest = vec![f64::INFINITY; n];
        for i in 0..n {
            for j in 0..n {
                if i != j {
                    nearest[i] = nearest[i].min(distance(&pts[i], &pts[j]));
                }
            }
        }
        let mut out = NeighbourJumps {
            spacing: nearest.iter().copied().filter(|d| d.is_finite()).fold(0.0, f64::max),
            ..NeighbourJumps::default()
        };
        let mut total = 0.0;
        for i in 0..n {
            for j in i + 1..n {
                let d = distance(&pts[i], &pts[j]);
                if d <= nearest[i].max(nearest[j]) * (1.0 + 1e-9) {
                    let jump = (vals[i] - vals[j]).abs();
                    out.pairs += 1;
                    out.max_jump = out.max_jump.max(jump);
                    out.max_quotient = out.max_quotient.max(jump / d);
                    total += jump;
                }
            }
        }
        if out.pairs > 0 {
            out.mean_jump = total / out.pairs as f64;
        }
        out
    }

    /// Writes `x1,...,xd,value,stderr` rows with a column header.
    pub fn write_csv<W: Write>(&self, mut w: W) -> Result<()> {
        let cols: Vec<String> = (1..=self.dim()).map(|i| format!("x{i}")).collect();
        writeln!(w, "{},value,stderr", cols.join(","))?;
        for ((p, v), s) in self.points().iter().zip(&self.values).zip(&self.stderrs) {
            let coords: Vec<String> = p.iter().map(|c| format!("{c:?}")).collect();
            writeln!(w, "{},{v:?},{s:?}", coords.join(","))?;
        }
        Ok(())
    }

    /// Reads the format of [`Field::write_csv`]; lines starting with `#` are skipped.
    pub fn read_csv<R: BufRead>(r: R) -> Result<Self> {
        let mut points = Vec::new();
        let mut values = Vec::new();
        let mut stderrs = Vec::new();
        let mut dim = None;
        for (lineno, line) in r.lines().enumerate() {
            let line = line?;
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            if dim.is_none() {
                let cols: Vec<&str> = line.split(',').collect();
                if cols.len() < 3 || cols[cols.len() - 2] != "value" || cols[cols.len() - 1] != "stderr" {
                    return Err(Error::input(format!(
                        "line {}: expected column header x1,...,value,stderr",
                        lineno + 1
                    )));
                }
                dim = Some(cols.len() - 2);
                continue;
            }
            let nums: Vec<f64> = line
                .split(',')
                .map(|t| t.trim().parse::<f64>())
                .collect::<std::result::Result<_, _>>()
                .map_err(|e| Error::input(format!("line {}: {e}", lineno + 1)))?;
            let d = dim.unwrap_or(0);
            if nums.len() != d + 2 {
                return Err(Error::input(format!("line {}: expected {} columns", lineno + 1, d + 2)));
            }
            points.push(nums[..d].iter().map(|&v| S::lit(v)).collect());
            values.push(S::lit(nums[d]));
            stderrs.push(S::lit(nums[d + 1]));
        }
        Self::from_points(points, values, stderrs)
    }
}

type DetectedLattice<S> = (Vec<S>, S, Vec<Vec<i64>>);

fn detect_lattice<S: Real>(points: &[Vec<S>]) -> Option<DetectedLattice<S>> {
    let dim = points.first()?.len();
    let origin = points[0].clone();
    let mut spacing: Option<S> = None;
    for p in points {
        for i in 0..dim {
            let d = (p[i] - origin[i]).abs();
            if d > S::zero() {
                spacing = Some(spacing.map_or(d, |h: S| h.min(d)));
            }
        }
    }
    let h = spacing?;
    let tol = S::lit(1e-6);
    let mut indices = Vec::with_capacity(points.len());
    for p in points {
        let mut k = Vec::with_capacity(dim);
        for i in 0..dim {
            let t = (p[i] - origin[i]) / h;
            let r = t.round();
            if (t - r).abs() > tol {
                return None;
            }
            k.push(r.to_i64()?);
        }
        indices.push(k);
    }
    Some((origin, h, indices))
}
