//! Green-tight norm `sup_x ∫_D |w(y)| |x - y|^{2-d} dy` and the Kato modulus.
//!
//! Both are midpoint sums over lattice cells of volume `h^d`. The cell that
//! contains `x` is singular; it is replaced by the integral of `|z|^{2-d}` over
//! the ball of radius `h/2`, which in polar coordinates is
//! `S_{d-1} ∫_0^{h/2} r^{2-d} r^{d-1} dr = S_{d-1} (h/2)^2 / 2`,
//! with `S_{d-1}` the area of the unit sphere.

use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::geometry::DomainGeometry;
use crate::linear::GreenConstants;
use crate::real::Real;

/// Relative size of the singular-cell term above which a result is flagged.
pub const CELL_WARNING_FRACTION: f64 = 0.1;

/// `∫_{|z| < rho} |z|^{2-d} dz`.
pub fn singular_ball_integral(dim: usize, rho: f64) -> f64 {
    GreenConstants::sphere_area(dim) * rho * rho / 2.0
}

#[derive(Debug, Clone, Serialize)]
pub struct PotentialNorm {
    pub value: f64,
    /// Sample point attaining the maximum.
    pub argmax: Vec<f64>,
    /// Share of the maximum contributed by the singular cell.
    pub cell_fraction: f64,
    pub spacing: f64,
    pub warning: Option<String>,
}

fn finish(value: f64, argmax: Vec<f64>, cell: f64, spacing: f64) -> PotentialNorm {
    let cell_fraction = if value > 0.0 { cell / value } else { 0.0 };
    let warning = (cell_fraction > CELL_WARNING_FRACTION).then(|| {
        format!(
            "singular cell contributes {:.1}% of the integral; refine the grid below h = {spacing}",
            100.0 * cell_fraction
        )
    });
    PotentialNorm {
        value,
        argmax,
        cell_fraction,
        spacing,
        warning,
    }
}

fn check_dim<S: Real>(domain: &DomainGeometry<S>, samples: &[Vec<S>]) -> Result<()> {
    if domain.dim() < 3 {
        return Err(Error::config("potential norms need d >= 3"));
    }
    if samples.is_empty() {
        return Err(Error::input("no sample points for the supremum"));
    }
    if let Some(p) = samples.iter().find(|p| p.len() != domain.dim()) {
        return Err(Error::input(format!("sample point {p:?} has the wrong dimension")));
    }
    Ok(())
}

/// Default sample set for suprema over `D`: the lattice centre and the interior
/// grid at spacing `R/4`.
pub fn default_sup_samples<S: Real>(domain: &DomainGeometry<S>) -> Result<Vec<Vec<S>>> {
    let centre = domain.lattice_origin();
    let mut pts = vec![centre.clone()];
    if let Ok(g) = domain.interior_grid(domain.enclosing_ball() / S::lit(4.0)) {
        pts.extend(g.points.into_iter().filter(|p| *p != centre));
    }
    pts.retain(|p| domain.contains(p).unwrap_or(false));
    Ok(pts)
}

/// Lattice estimate of `‖w‖_D = sup_x ∫_D |w(y)| |x - y|^{2-d} dy`, maximized
/// over `samples` (so a lower estimate of the true supremum).
pub fn green_tight_norm<S, W>(
    domain: &DomainGeometry<S>,
    w: &W,
    spacing: S,
    samples: &[Vec<S>],
) -> Result<PotentialNorm>
where
    S: Real,
    W: Fn(&[S]) -> Result<S> + Sync + ?Sized,
{
    check_dim(domain, samples)?;
    let dim = domain.dim();
    let grid = domain.lattice(spacing, S::zero())?;
    let weights: Vec<f64> = grid
        .points
        .iter()
        .map(|y| w(y).map(|v| v.to_f64_lossy().abs()))
        .collect::<Result<_>>()?;
    let nodes: Vec<Vec<f64>> = grid
        .points
        .iter()
        .map(|p| p.iter().map(|c| c.to_f64_lossy()).collect())
        .collect();
    let h = spacing.to_f64_lossy();
    let cell_volume = h.powi(dim as i32);
    let sup_w = weights.iter().fold(0.0f64, |m, v| m.max(*v));
    let cell_term = sup_w * singular_ball_integral(dim, h / 2.0);

    let per_sample: Vec<(f64, f64)> = samples
        .par_iter()
        .map(|x| {
            let x: Vec<f64> = x.iter().map(|c| c.to_f64_lossy()).collect();
            let mut sum = 0.0;
            let mut in_cell = false;
            for (y, wy) in nodes.iter().zip(&weights) {
                let mut r2 = 0.0;
                let mut cheb = 0.0f64;
                for (a, b) in y.iter().zip(&x) {
                    r2 += (a - b) * (a - b);
                    cheb = cheb.max((a - b).abs());
                }
                if cheb <= h / 2.0 && !in_cell {
                    in_cell = true;
                    continue;
                }
                if *wy != 0.0 {
                    sum += wy * r2.sqrt().powi(2 - dim as i32) * cell_volume;
                }
            }
            let cell = if in_cell { cell_term } else { 0.0 };
            (sum + cell, cell)
        })
        .collect();
    let (i, (value, cell)) = per_sample
        .iter()
        .enumerate()
        .fold((0, (f64::NEG_INFINITY, 0.0)), |best, (i, v)| {
            if v.0 > best.1 .0 {
                (i, *v)
            } else {
                best
            }
        });
    let argmax = samples[i].iter().map(|c| c.to_f64_lossy()).collect();
    Ok(finish(value.max(0.0), argmax, cell, h))
}

/// Kato modulus `sup_x ∫_{|y - x| <= alpha} |g(y - x) w(y)| dy` with
/// `g(z) = |z|^{2-d}` and `w` extended by zero outside `D`. The lattice is
/// anchored at each `x`, so for a fixed spacing the result is non-decreasing
/// in `alpha`.
pub fn kato_modulus<S, W>(
    domain: &DomainGeometry<S>,
    w: &W,
    alpha: S,
    spacing: S,
    samples: &[Vec<S>],
) -> Result<PotentialNorm>
where
    S: Real,
    W: Fn(&[S]) -> Result<S> + Sync + ?Sized,
{
    check_dim(domain, samples)?;
    if !(alpha > S::zero()) || !(spacing > S::zero()) {
        return Err(Error::config("Kato radius and spacing must be positive"));
    }
    let dim = domain.dim();
    let h = spacing.to_f64_lossy();
    let a = alpha.to_f64_lossy();
    let kmax = (a / h).floor() as i64;
    let count = (2 * kmax + 1) as u64;
    if count.saturating_pow(dim as u32) > 50_000_000 {
        return Err(Error::config(format!("Kato stencil alpha/h = {} is too large", a / h)));
    }
    // offsets k ≠ 0 with |k h| <= alpha, and their kernel weights
    let mut offsets: Vec<(Vec<i64>, f64)> = Vec::new();
    let mut k = vec![-kmax; dim];
    'outer: loop {
        let r2: f64 = k.iter().map(|&c| (c as f64 * h).powi(2)).sum();
        if r2 > 0.0 && r2 <= a * a * (1.0 + 1e-12) {
            offsets.push((k.clone(), r2.sqrt().powi(2 - dim as i32)));
        }
        let mut axis = dim;
        loop {
            if axis == 0 {
                break 'outer;
            }
            axis -= 1;
            if k[axis] < kmax {
                k[axis] += 1;
                break;
            }
            k[axis] = -kmax;
        }
    }
    let cell_volume = h.powi(dim as i32);
    let ball = singular_ball_integral(dim, (h / 2.0).min(a));
    let extended = |y: &[S]| -> Result<f64> {
        if domain.signed_distance(y)? > S::zero() {
            Ok(0.0)
        } else {
            Ok(w(y)?.to_f64_lossy().abs())
        }
    };
    let per_sample: Vec<(f64, f64)> = samples
        .par_iter()
        .map(|x| -> Result<(f64, f64)> {
            let cell = extended(x)? * ball;
            let mut sum = 0.0;
            let mut y = x.clone();
            for (off, g) in &offsets {
                for i in 0..dim {
                    y[i] = x[i] + S::lit(off[i] as f64 * h);
                }
                let wy = extended(&y)?;
                if wy != 0.0 {
                    sum += wy * g * cell_volume;
                }
            }
            Ok((sum + cell, cell))
        })
        .collect::<Result<_>>()?;
    let (i, (value, cell)) = per_sample
        .iter()
        .enumerate()
        .fold((0, (f64::NEG_INFINITY, 0.0)), |best, (i, v)| {
            if v.0 > best.1 .0 {
                (i, *v)
            } else {
                best
            }
        });
    let argmax = samples[i].iter().map(|c| c.to_f64_lossy()).collect();
    Ok(finish(value.max(0.0), argmax, cell, h))
}

#[derive(Debug, Clone, Serialize)]
pub struct KatoLevel {
    pub alpha: f64,
    pub value: f64,
}

/// Kato modulus over `alpha0, alpha0/2, ...` (`levels` values), each level at
/// spacing `alpha/16`.
pub fn kato_profile<S, W>(
    domain: &DomainGeometry<S>,
    w: &W,
    alpha0: S,
    levels: usize,
    samples: &[Vec<S>],
) -> Result<Vec<KatoLevel>>
where
    S: Real,
    W: Fn(&[S]) -> Result<S> + Sync + ?Sized,
{
    let mut out = Vec::with_capacity(levels);
    let mut alpha = alpha0;
    for _ in 0..levels {
        let m = kato_modulus(domain, w, alpha, alpha / S::lit(16.0), samples)?;
        out.push(KatoLevel {
            alpha: alpha.to_f64_lossy(),
            value: m.value,
        });
        alpha /= S::lit(2.0);
    }
    Ok(out)
}

/// True when every level is strictly below the previous one.
pub fn strictly_decreasing(profile: &[KatoLevel]) -> bool {
    profile.windows(2).all(|p| p[1].value < p[0].value)
}
