//! Bounded domains described by signed distance, with boundary projection,
//! the origin-centred enclosing ball and interior lattices.
//!
//! Sign convention: negative inside, positive outside. For the exact shapes the
//! signed distance is the true Euclidean distance to the boundary; implicit shapes
//! are trusted to return a value no larger in magnitude than that distance.

use rand::Rng;

use crate::error::{Error, Result};
use crate::expr::Expr;
use crate::real::{distance, dot, norm, Real};
use crate::sampling::sphere_direction;

/// Largest lattice a single grid request may enumerate.
const MAX_LATTICE_NODES: u64 = 50_000_000;
const BISECTION_CAP: usize = 200;

#[derive(Debug, Clone, PartialEq)]
pub enum Shape<S> {
    Ball { center: Vec<S>, radius: S },
    Box { lo: Vec<S>, hi: Vec<S> },
    Annulus { center: Vec<S>, r_in: S, r_out: S },
    Implicit { sdf: Expr },
}

#[derive(Debug, Clone, PartialEq)]
pub struct DomainGeometry<S> {
    dim: usize,
    shape: Shape<S>,
    enclosing_radius: S,
    boundary_tolerance: S,
}

/// Regular lattice points, in lexicographic index order.
#[derive(Debug, Clone)]
pub struct Grid<S> {
    pub dim: usize,
    pub origin: Vec<S>,
    pub spacing: S,
    pub indices: Vec<Vec<i64>>,
    pub points: Vec<Vec<S>>,
}

impl<S: Real> Grid<S> {
    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }
}

fn check_dim(dim: usize) -> Result<()> {
    if dim < 3 {
        return Err(Error::config(format!("dimension must be at least 3, got {dim}")));
    }
    Ok(())
}

impl<S: Real> DomainGeometry<S> {
    pub fn ball(center: Vec<S>, radius: S) -> Result<Self> {
        let dim = center.len();
        check_dim(dim)?;
        if !(radius > S::zero()) {
            return Err(Error::config("ball radius must be positive"));
        }
        let r = norm(&center) + radius;
        Ok(Self::exact(dim, Shape::Ball { center, radius }, r))
    }

    /// Ball of radius `radius` centred at the origin of `R^dim`.
    pub fn centered_ball(dim: usize, radius: S) -> Result<Self> {
        Self::ball(vec![S::zero(); dim], radius)
    }

    pub fn unit_ball(dim: usize) -> Result<Self> {
        Self::centered_ball(dim, S::one())
    }

    pub fn cuboid(lo: Vec<S>, hi: Vec<S>) -> Result<Self> {
        let dim = lo.len();
        check_dim(dim)?;
        if hi.len() != dim {
            return Err(Error::config("box corners have different dimensions"));
        }
        if lo.iter().zip(&hi).any(|(a, b)| !(a < b)) {
            return Err(Error::config("box requires lo < hi in every coordinate"));
        }
        let r = lo
            .iter()
            .zip(&hi)
            .map(|(a, b)| {
                let m = a.abs().max(b.abs());
                m * m
            })
            .sum::<S>()
            .sqrt();
        Ok(Self::exact(dim, Shape::Box { lo, hi }, r))
    }

    pub fn annulus(center: Vec<S>, r_in: S, r_out: S) -> Result<Self> {
        let dim = center.len();
        check_dim(dim)?;
        if !(r_in > S::zero() && r_in < r_out) {
            return Err(Error::config("annulus requires 0 < r_in < r_out"));
        }
        let r = norm(&center) + r_out;
        Ok(Self::exact(dim, Shape::Annulus { center, r_in, r_out }, r))
    }

    /// Domain given by a signed-distance expression in `x1..xd`.
    ///
    /// The enclosing radius cannot be derived from an expression and must be supplied;
    /// its validity is the caller's responsibility.
    pub fn implicit(sdf: Expr, enclosing_radius: Option<S>, boundary_tolerance: Option<S>) -> Result<Self> {
        let dim = sdf.dim();
        check_dim(dim)?;
        let r = enclosing_radius.ok_or_else(|| Error::config("implicit domain requires an enclosing radius"))?;
        if !(r > S::zero()) {
            return Err(Error::config("enclosing radius must be positive"));
        }
        let tol = boundary_tolerance.unwrap_or_else(|| Self::default_tolerance(r));
        Ok(DomainGeometry {
            dim,
            shape: Shape::Implicit { sdf },
            enclosing_radius: r,
            boundary_tolerance: tol,
        })
    }

    fn exact(dim: usize, shape: Shape<S>, r: S) -> Self {
        DomainGeometry {
            dim,
            shape,
            enclosing_radius: r,
            boundary_tolerance: Self::default_tolerance(r),
        }
    }

    fn default_tolerance(r: S) -> S {
        S::epsilon().sqrt() * S::lit(0.01) * r
    }

    pub fn with_boundary_tolerance(mut self, tol: S) -> Self {
        self.boundary_tolerance = tol;
        self
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn shape(&self) -> &Shape<S> {
        &self.shape
    }

    /// Radius of the origin-centred ball containing the domain.
    pub fn enclosing_ball(&self) -> S {
        self.enclosing_radius
    }

    pub fn boundary_tolerance(&self) -> S {
        self.boundary_tolerance
    }

    pub fn is_implicit(&self) -> bool {
        matches!(self.shape, Shape::Implicit { .. })
    }

    fn check_point(&self, x: &[S]) -> Result<()> {
        if x.len() != self.dim {
            return Err(Error::input(format!(
                "point has dimension {}, domain has dimension {}",
                x.len(),
                self.dim
            )));
        }
        Ok(())
    }

    pub fn signed_distance(&self, x: &[S]) -> Result<S> {
        self.check_point(x)?;
        self.sd(x)
    }

    /// Signed distance without the dimension check.
    #[inline]
    pub(crate) fn sd(&self, x: &[S]) -> Result<S> {
        Ok(match &self.shape {
            Shape::Ball { center, radius } => distance(x, center) - *radius,
            Shape::Annulus { center, r_in, r_out } => {
                let rho = distance(x, center);
                (rho - *r_out).max(*r_in - rho)
            }
            Shape::Box { lo, hi } => {
                let two = S::lit(2.0);
                let mut outside = S::zero();
                let mut inside = S::neg_infinity();
                for i in 0..self.dim {
                    let mid = (lo[i] + hi[i]) / two;
                    let half = (hi[i] - lo[i]) / two;
                    let q = (x[i] - mid).abs() - half;
                    if q > S::zero() {
                        outside += q * q;
                    }
                    inside = inside.max(q);
                }
                if outside > S::zero() {
                    outside.sqrt()
                } else {
                    inside
                }
            }
            Shape::Implicit { sdf } => sdf.eval_at(x, None)?,
        })
    }

    pub fn contains(&self, x: &[S]) -> Result<bool> {
        Ok(self.signed_distance(x)? < S::zero())
    }

    /// Nearest boundary point (exact shapes) or a bisection estimate along the
    /// gradient (implicit shapes).
    pub fn project_to_boundary(&self, x: &[S]) -> Result<Vec<S>> {
        self.check_point(x)?;
        match &self.shape {
            Shape::Ball { center, radius } => radial(x, center, *radius),
            Shape::Annulus { center, r_in, r_out } => {
                let rho = distance(x, center);
                let target = if rho < (*r_in + *r_out) / S::lit(2.0) {
                    *r_in
                } else {
                    *r_out
                };
                radial(x, center, target)
            }
            Shape::Box { lo, hi } => {
                let mut y = x.to_vec();
                let outside = (0..self.dim).any(|i| x[i] < lo[i] || x[i] > hi[i]);
                if outside {
                    for i in 0..self.dim {
                        y[i] = x[i].max(lo[i]).min(hi[i]);
                    }
                } else {
                    let mut best = (S::infinity(), 0, lo[0]);
                    for i in 0..self.dim {
                        let dl = x[i] - lo[i];
                        let dh = hi[i] - x[i];
                        if dl < best.0 {
                            best = (dl, i, lo[i]);
                        }
                        if dh < best.0 {
                            best = (dh, i, hi[i]);
                        }
                    }
                    y[best.1] = best.2;
                }
                Ok(y)
            }
            Shape::Implicit { .. } => self.bisect_to_boundary(x),
        }
    }

    fn bisect_to_boundary(&self, x: &[S]) -> Result<Vec<S>> {
        let tol = self.boundary_tolerance;
        let mut p = x.to_vec();
        let mut s = self.sd(&p)?;
        // Newton steps with a re-evaluated gradient; the gradient line of a
        // non-Euclidean distance need not reach the boundary in one go.
        for _ in 0..BISECTION_CAP {
            if s.abs() <= tol {
                return Ok(p);
            }
            let grad = self.gradient(&p)?;
            let g2 = dot(&grad, &grad);
            if !(g2 > S::zero()) {
                return Err(Error::numerical("vanishing signed-distance gradient during projection"));
            }
            let step = s / g2;
            let q: Vec<S> = p.iter().zip(&grad).map(|(a, g)| *a - step * *g).collect();
            let sq = self.sd(&q)?;
            if (sq > S::zero()) != (s > S::zero()) {
                return self.bisect_segment(&p, s, &q);
            }
            if sq.abs() >= s.abs() {
                return Err(Error::numerical(format!(
                    "boundary projection stalled at {p:?} (signed distance {s:?})"
                )));
            }
            p = q;
            s = sq;
        }
        Err(Error::numerical(format!(
            "boundary projection did not converge within {BISECTION_CAP} iterations from {x:?}"
        )))
    }

    /// Bisection on the segment `[a, b]`, where `sd(a) = sa` and `sd(b)` has the other sign.
    fn bisect_segment(&self, a: &[S], sa: S, b: &[S]) -> Result<Vec<S>> {
        let tol = self.boundary_tolerance;
        let mut lo = a.to_vec();
        let mut hi = b.to_vec();
        let half = S::lit(0.5);
        for _ in 0..BISECTION_CAP {
            let mid: Vec<S> = lo.iter().zip(&hi).map(|(u, v)| (*u + *v) * half).collect();
            let s = self.sd(&mid)?;
            if s.abs() <= tol {
                return Ok(mid);
            }
            if (s > S::zero()) == (sa > S::zero()) {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        Err(Error::numerical(format!(
            "boundary bisection did not converge within {BISECTION_CAP} iterations"
        )))
    }

    fn gradient(&self, x: &[S]) -> Result<Vec<S>> {
        let h = S::epsilon().cbrt() * self.enclosing_radius.max(S::one());
        let mut p = x.to_vec();
        let mut g = vec![S::zero(); self.dim];
        for i in 0..self.dim {
            p[i] = x[i] + h;
            let plus = self.sd(&p)?;
            p[i] = x[i] - h;
            let minus = self.sd(&p)?;
            p[i] = x[i];
            g[i] = (plus - minus) / (h + h);
        }
        Ok(g)
    }

    /// Unit outward normal at (or near) a boundary point.
    pub fn outward_normal(&self, y: &[S]) -> Result<Vec<S>> {
        self.check_point(y)?;
        let n = match &self.shape {
            Shape::Ball { center, .. } => y.iter().zip(center).map(|(a, c)| *a - *c).collect(),
            Shape::Annulus { center, r_in, r_out } => {
                let outer = distance(y, center) >= (*r_in + *r_out) / S::lit(2.0);
                let s = if outer { S::one() } else { -S::one() };
                y.iter().zip(center).map(|(a, c)| s * (*a - *c)).collect()
            }
            Shape::Box { lo, hi } => {
                let mut best = (S::infinity(), 0, S::one());
                for i in 0..self.dim {
                    let dl = (y[i] - lo[i]).abs();
                    let dh = (hi[i] - y[i]).abs();
                    if dl < best.0 {
                        best = (dl, i, -S::one());
                    }
                    if dh < best.0 {
                        best = (dh, i, S::one());
                    }
                }
                let mut n = vec![S::zero(); self.dim];
                n[best.1] = best.2;
                n
            }
            Shape::Implicit { .. } => self.gradient(y)?,
        };
        let len = norm(&n);
        if !(len > S::zero()) {
            return Err(Error::numerical("normal undefined at this point"));
        }
        Ok(n.into_iter().map(|v| v / len).collect())
    }

    /// Axis-aligned bounding box `(lo, hi)`.
    pub fn bounding_box(&self) -> (Vec<S>, Vec<S>) {
        match &self.shape {
            Shape::Ball { center, radius } => (
                center.iter().map(|c| *c - *radius).collect(),
                center.iter().map(|c| *c + *radius).collect(),
            ),
            Shape::Annulus { center, r_out, .. } => (
                center.iter().map(|c| *c - *r_out).collect(),
                center.iter().map(|c| *c + *r_out).collect(),
            ),
            Shape::Box { lo, hi } => (lo.clone(), hi.clone()),
            Shape::Implicit { .. } => (
                vec![-self.enclosing_radius; self.dim],
                vec![self.enclosing_radius; self.dim],
            ),
        }
    }

    /// Anchor of the interior lattices: the shape centre (origin for implicit shapes).
    pub fn lattice_origin(&self) -> Vec<S> {
        match &self.shape {
            Shape::Ball { center, .. } | Shape::Annulus { center, .. } => center.clone(),
            Shape::Box { lo, hi } => lo.iter().zip(hi).map(|(a, b)| (*a + *b) / S::lit(2.0)).collect(),
            Shape::Implicit { .. } => vec![S::zero(); self.dim],
        }
    }

    /// Lattice points `origin + k·h` with `signed_distance <= -margin`.
    pub fn lattice(&self, spacing: S, margin: S) -> Result<Grid<S>> {
        if !(spacing > S::zero()) {
            return Err(Error::config("grid spacing must be positive"));
        }
        let origin = self.lattice_origin();
        let (lo, hi) = self.bounding_box();
        let mut kmin = Vec::with_capacity(self.dim);
        let mut kmax = Vec::with_capacity(self.dim);
        let mut total: u64 = 1;
        for i in 0..self.dim {
            let a = ((lo[i] - origin[i]) / spacing).floor().to_i64().unwrap_or(i64::MIN);
            let b = ((hi[i] - origin[i]) / spacing).ceil().to_i64().unwrap_or(i64::MAX);
            total = total.saturating_mul((b - a + 1).max(0) as u64);
            kmin.push(a);
            kmax.push(b);
        }
        if total > MAX_LATTICE_NODES {
            return Err(Error::config(format!(
                "grid spacing {spacing} would enumerate {total} lattice nodes"
            )));
        }
        let mut indices = Vec::new();
        let mut points = Vec::new();
        let mut k = kmin.clone();
        let mut p = vec![S::zero(); self.dim];
        'outer: loop {
            for i in 0..self.dim {
                p[i] = origin[i] + S::lit(k[i] as f64) * spacing;
            }
            if self.sd(&p)? <= -margin {
                indices.push(k.clone());
                points.push(p.clone());
            }
            // odometer increment, last axis fastest
            let mut axis = self.dim;
            loop {
                if axis == 0 {
                    break 'outer;
                }
                axis -= 1;
                if k[axis] < kmax[axis] {
                    k[axis] += 1;
                    break;
                }
                k[axis] = kmin[axis];
            }
        }
        Ok(Grid {
            dim: self.dim,
            origin,
            spacing,
            indices,
            points,
        })
    }

    /// Strictly interior evaluation lattice: every point has `signed_distance <= -h/2`.
    pub fn interior_grid(&self, spacing: S) -> Result<Grid<S>> {
        let grid = self.lattice(spacing, spacing / S::lit(2.0))?;
        if grid.is_empty() {
            return Err(Error::config(format!(
                "grid spacing {spacing} leaves no interior points"
            )));
        }
        Ok(grid)
    }

    /// Draws a point on the boundary. Spheres and faces are sampled uniformly by
    /// area; implicit boundaries by projecting uniform near-boundary points.
    pub fn sample_boundary<R: Rng + ?Sized>(&self, rng: &mut R) -> Result<Vec<S>> {
        match &self.shape {
            Shape::Ball { center, radius } => {
                let dir = sphere_direction::<S, _>(self.dim, rng);
                Ok(center.iter().zip(&dir).map(|(c, d)| *c + *radius * *d).collect())
            }
            Shape::Annulus { center, r_in, r_out } => {
                let dir = sphere_direction::<S, _>(self.dim, rng);
                let e = S::lit((self.dim - 1) as f64);
                let w_in = r_in.powf(e);
                let w_out = r_out.powf(e);
                let pick = S::unit_uniform(rng) * (w_in + w_out);
                let rad = if pick < w_in { *r_in } else { *r_out };
                Ok(center.iter().zip(&dir).map(|(c, d)| *c + rad * *d).collect())
            }
            Shape::Box { lo, hi } => {
                let d = self.dim;
                let widths: Vec<S> = lo.iter().zip(hi).map(|(a, b)| *b - *a).collect();
                let areas: Vec<S> = (0..d)
                    .map(|i| (0..d).filter(|&j| j != i).fold(S::one(), |acc, j| acc * widths[j]))
                    .collect();
                let total: S = areas.iter().copied().sum::<S>() * S::lit(2.0);
                let mut pick = S::unit_uniform(rng) * total;
                let mut face = (d - 1, true);
                'faces: for (i, a) in areas.iter().enumerate() {
                    for upper in [false, true] {
                        if pick < *a {
                            face = (i, upper);
                            break 'faces;
                        }
                        pick -= *a;
                    }
                }
                let mut y: Vec<S> = (0..d).map(|j| lo[j] + S::unit_uniform(rng) * widths[j]).collect();
                y[face.0] = if face.1 { hi[face.0] } else { lo[face.0] };
                Ok(y)
            }
            Shape::Implicit { .. } => {
                let r = self.enclosing_radius;
                let band = r * S::lit(0.05);
                for _ in 0..1_000_000 {
                    let p: Vec<S> = (0..self.dim)
                        .map(|_| (S::unit_uniform(rng) * S::lit(2.0) - S::one()) * r)
                        .collect();
                    if self.sd(&p)?.abs() < band {
                        return self.bisect_to_boundary(&p);
                    }
                }
                Err(Error::numerical("no near-boundary point found for implicit domain"))
            }
        }
    }
}

fn radial<S: Real>(x: &[S], center: &[S], radius: S) -> Result<Vec<S>> {
    let rho = distance(x, center);
    if !(rho > S::zero()) {
        return Err(Error::input("radial projection is undefined at the centre"));
    }
    Ok(x.iter()
        .zip(center)
        .map(|(a, c)| *c + radius * (*a - *c) / rho)
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::expr::Role;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn unit_ball() -> DomainGeometry<f64> {
        DomainGeometry::unit_ball(3).unwrap()
    }

    fn cube() -> DomainGeometry<f64> {
        DomainGeometry::cuboid(vec![-1.0; 3], vec![1.0; 3]).unwrap()
    }

    #[test]
    fn signed_distance_examples() {
        let b = unit_ball();
        assert_eq!(b.signed_distance(&[0.0, 0.0, 0.0]).unwrap(), -1.0);
        assert_eq!(b.signed_distance(&[2.0, 0.0, 0.0]).unwrap(), 1.0);
        assert_eq!(cube().signed_distance(&[0.0, 0.0, 0.5]).unwrap(), -0.5);
        assert!(matches!(b.signed_distance(&[0.0, 0.0]), Err(Error::Input(_))));
    }

    #[test]
    fn projection_examples() {
        let b = unit_ball();
        assert_eq!(b.project_to_boundary(&[0.5, 0.0, 0.0]).unwrap(), vec![1.0, 0.0, 0.0]);
        assert_eq!(
            b.project_to_boundary(&[0.0, 0.0, -0.999]).unwrap(),
            vec![0.0, 0.0, -1.0]
        );
        assert_eq!(
            cube().project_to_boundary(&[0.9, 0.0, 0.0]).unwrap(),
            vec![1.0, 0.0, 0.0]
        );
        assert!(b.project_to_boundary(&[0.0, 0.0, 0.0]).is_err());
    }

    #[test]
    fn enclosing_radius_examples() {
        assert_eq!(unit_ball().enclosing_ball(), 1.0);
        assert!((cube().enclosing_ball() - 3f64.sqrt()).abs() < 1e-15);
        let off = DomainGeometry::ball(vec![0.5, 0.0, 0.0], 1.0).unwrap();
        assert_eq!(off.enclosing_ball(), 1.5);
        let sdf = Expr::parse("r - 1", Role::Domain, 3).unwrap();
        assert!(matches!(
            DomainGeometry::<f64>::implicit(sdf, None, None),
            Err(Error::Config(_))
        ));
    }

    #[test]
    fn rejects_low_dimension() {
        assert!(matches!(DomainGeometry::<f64>::unit_ball(2), Err(Error::Config(_))));
    }

    // brute-force count of the origin-anchored lattice with the -h/2 margin
    fn brute_force_count(h: f64) -> usize {
        let n = (1.0 / h).ceil() as i64 + 1;
        let mut count = 0;
        for i in -n..=n {
            for j in -n..=n {
                for k in -n..=n {
                    let r = ((i * i + j * j + k * k) as f64).sqrt() * h;
                    if r - 1.0 <= -h / 2.0 {
                        count += 1;
                    }
                }
            }
        }
        count
    }

    #[test]
    fn interior_grid_unit_ball() {
        let g = unit_ball().interior_grid(0.5).unwrap();
        assert_eq!(brute_force_count(0.5), 19);
        assert_eq!(g.len(), 19);
        assert!(g.points.iter().any(|p| p.iter().all(|v| *v == 0.0)));
        assert_eq!(unit_ball().interior_grid(0.3).unwrap().len(), brute_force_count(0.3));
        assert!(matches!(unit_ball().interior_grid(2.5), Err(Error::Config(_))));
        assert!(unit_ball().interior_grid(0.0).is_err());
    }

    #[test]
    fn interior_grid_cube_is_centre_anchored() {
        let g = cube().interior_grid(1.0).unwrap();
        // nodes {-1, 0, 1}^3; every node touching a face is removed by the margin
        assert_eq!(g.points, vec![vec![0.0, 0.0, 0.0]]);
        let g = cube().interior_grid(0.5).unwrap();
        assert_eq!(g.len(), 27);
    }

    #[test]
    fn interior_grid_properties() {
        let d = unit_ball();
        let g = d.interior_grid(0.2).unwrap();
        for p in &g.points {
            assert!(d.signed_distance(p).unwrap() <= -0.1);
        }
        let mut sorted = g.indices.clone();
        sorted.sort();
        sorted.dedup();
        assert_eq!(sorted.len(), g.len());
        assert_eq!(sorted, g.indices, "lexicographic ordering");
    }

    #[test]
    fn sign_agrees_with_membership() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let shapes = [
            unit_ball(),
            cube(),
            DomainGeometry::annulus(vec![0.0; 3], 0.4, 1.0).unwrap(),
        ];
        type Member<'a> = &'a dyn Fn(&[f64]) -> bool;
        let member: [Member; 3] = [
            &|x: &[f64]| norm(x) < 1.0,
            &|x: &[f64]| x.iter().all(|v| v.abs() < 1.0),
            &|x: &[f64]| (0.4..1.0).contains(&norm(x)) && norm(x) > 0.4,
        ];
        for (dom, inside) in shapes.iter().zip(member) {
            let (lo, hi) = dom.bounding_box();
            for _ in 0..10_000 {
                let x: Vec<f64> = (0..3).map(|i| lo[i] + rng.random::<f64>() * (hi[i] - lo[i])).collect();
                let s = dom.signed_distance(&x).unwrap();
                if s != 0.0 {
                    assert_eq!(s < 0.0, inside(&x), "{x:?} sd={s}");
                }
            }
        }
    }

    #[test]
    fn projection_lands_on_boundary() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let sdf = Expr::parse("max(abs(x1), max(abs(x2), abs(x3))) - 1", Role::Domain, 3).unwrap();
        let shapes = [
            unit_ball(),
            cube(),
            DomainGeometry::annulus(vec![0.1, 0.0, 0.0], 0.4, 1.0).unwrap(),
            DomainGeometry::implicit(Expr::parse("r - 1", Role::Domain, 3).unwrap(), Some(1.0), None).unwrap(),
            DomainGeometry::implicit(sdf, Some(2.0), None).unwrap(),
        ];
        for dom in &shapes {
            let r = dom.enclosing_ball();
            for _ in 0..1000 {
                let y = dom.sample_boundary(&mut rng).unwrap();
                let n = dom.outward_normal(&y).unwrap();
                let t = (rng.random::<f64>() - 0.5) * 0.02 * r;
                let x: Vec<f64> = y.iter().zip(&n).map(|(a, b)| a + t * b).collect();
                let p = dom
                    .project_to_boundary(&x)
                    .unwrap_or_else(|e| panic!("{e} at {x:?} sd {:?}", dom.signed_distance(&x)));
                let s = dom.signed_distance(&p).unwrap().abs();
                let tol = if dom.is_implicit() {
                    dom.boundary_tolerance()
                } else {
                    1e-12 * r
                };
                assert!(s <= tol, "{:?}: sd {s} > {tol}", dom.shape());
            }
        }
    }

    #[test]
    fn generic_over_f32() {
        let b = DomainGeometry::<f32>::unit_ball(3).unwrap();
        assert_eq!(b.signed_distance(&[0.0, 0.0, 0.0]).unwrap(), -1.0f32);
        assert_eq!(b.interior_grid(0.5).unwrap().len(), 19);
    }
}
