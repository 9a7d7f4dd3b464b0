//! Boundary behaviour: approach sequences, controlled convergence and the
//! control-function heuristic.
//!
//! Along a sequence `x_j → y ∈ ∂D`, `h` converges to `phi(y)` controlled by
//! `k` when either `k` stays bounded and `h(x_j) → phi(y)` (regime `*`), or
//! `k → ∞` and `h(x_j)/(1 + k(x_j)) → 0` (regime `**`). Only a finite tail is
//! observed, so the classification is a heuristic with a threshold on `k`.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::estimate::Estimate;
use crate::field::Field;
use crate::geometry::DomainGeometry;
use crate::linear::{field_harmonic_extension, harmonic_extension, ExitSampler};
use crate::problem::{Approach, SequenceSpec};
use crate::real::{distance, dot, norm, Real};
use crate::sampling::Streams;

/// Piece of a declared discontinuity set on the boundary.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase", deny_unknown_fields)]
pub enum ControlPiece {
    Point {
        at: Vec<f64>,
    },
    /// Broken line through the given vertices.
    Polyline {
        points: Vec<Vec<f64>>,
    },
    /// Intersection of the boundary with the hyperplane `normal·y = offset`;
    /// distances are measured to the hyperplane, which vanishes on the boundary
    /// exactly on the piece.
    Section {
        normal: Vec<f64>,
        offset: f64,
    },
}

fn segment_distance(y: &[f64], a: &[f64], b: &[f64]) -> f64 {
    let ab: Vec<f64> = b.iter().zip(a).map(|(p, q)| p - q).collect();
    let ay: Vec<f64> = y.iter().zip(a).map(|(p, q)| p - q).collect();
    let len2 = dot(&ab, &ab);
    let t = if len2 > 0.0 {
        (dot(&ay, &ab) / len2).clamp(0.0, 1.0)
    } else {
        0.0
    };
    let proj: Vec<f64> = a.iter().zip(&ab).map(|(p, d)| p + t * d).collect();
    distance(y, &proj)
}

impl ControlPiece {
    pub fn check(&self, dim: usize) -> Result<()> {
        let bad = match self {
            ControlPiece::Point { at } => at.len() != dim,
            ControlPiece::Polyline { points } => points.is_empty() || points.iter().any(|p| p.len() != dim),
            ControlPiece::Section { normal, .. } => normal.len() != dim || norm(normal) == 0.0,
        };
        if bad {
            return Err(Error::input(format!(
                "malformed discontinuity piece {self:?} for d = {dim}"
            )));
        }
        Ok(())
    }

    pub fn distance(&self, y: &[f64]) -> f64 {
        match self {
            ControlPiece::Point { at } => distance(y, at),
            ControlPiece::Polyline { points } => {
                if points.len() == 1 {
                    return distance(y, &points[0]);
                }
                points
                    .windows(2)
                    .map(|w| segment_distance(y, &w[0], &w[1]))
                    .fold(f64::INFINITY, f64::min)
            }
            ControlPiece::Section { normal, offset } => (dot(normal, y) - offset).abs() / norm(normal),
        }
    }
}

/// Boundary function `g(y) = min(dist(y, S)^{-a}, M)`, zero when `S` is empty.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ControlFunction {
    pub pieces: Vec<ControlPiece>,
    pub exponent: f64,
    pub cap: f64,
}

impl ControlFunction {
    pub fn new(pieces: Vec<ControlPiece>, exponent: f64, cap: f64, dim: usize) -> Result<Self> {
        if !(exponent > 0.0 && exponent <= dim as f64 - 2.0) {
            return Err(Error::config(format!(
                "control exponent must lie in (0, d - 2], got {exponent}"
            )));
        }
        if !(cap > 0.0 && cap.is_finite()) {
            return Err(Error::config("control cap must be positive and finite"));
        }
        for p in &pieces {
            p.check(dim)?;
        }
        Ok(ControlFunction { pieces, exponent, cap })
    }

    pub fn distance(&self, y: &[f64]) -> f64 {
        self.pieces.iter().map(|p| p.distance(y)).fold(f64::INFINITY, f64::min)
    }

    pub fn eval(&self, y: &[f64]) -> f64 {
        if self.pieces.is_empty() {
            return 0.0;
        }
        let d = self.distance(y);
        if d > 0.0 {
            d.powf(-self.exponent).min(self.cap)
        } else {
            self.cap
        }
    }
}

/// Output of [`control_function_heuristic`].
#[derive(Debug, Clone)]
pub struct Control<S> {
    pub g: ControlFunction,
    /// `k = H_D g` at the requested points.
    pub k: Field<S>,
    pub warning: Option<String>,
}

/// Builds `g` from a declared discontinuity set and its harmonic extension at `points`.
#[allow(clippy::too_many_arguments)]
pub fn control_function_heuristic<S: Real>(
    domain: &DomainGeometry<S>,
    pieces: Vec<ControlPiece>,
    exponent: f64,
    cap: f64,
    points: &[Vec<S>],
    n: usize,
    sampler: &ExitSampler<S>,
    streams: &Streams,
) -> Result<Control<S>> {
    let g = ControlFunction::new(pieces, exponent, cap, domain.dim())?;
    let warning = g
        .pieces
        .is_empty()
        .then(|| "empty discontinuity set: the control is identically zero".to_string());
    let gf = |y: &[S]| -> Result<S> {
        let y: Vec<f64> = y.iter().map(|c| c.to_f64_lossy()).collect();
        Ok(S::lit(g.eval(&y)))
    };
    let k = field_harmonic_extension(domain, &gf, points, n, sampler, streams)?;
    Ok(Control { g, k, warning })
}

/// Points approaching a boundary point.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ApproachSequence<S> {
    pub target: Vec<S>,
    pub points: Vec<Vec<S>>,
}

impl<S: Real> ApproachSequence<S> {
    pub fn distances(&self) -> Vec<S> {
        self.points.iter().map(|p| distance(p, &self.target)).collect()
    }

    /// Distances must decrease strictly, end below `1e-3·R`, and every point
    /// must be interior.
    pub fn check(&self, domain: &DomainGeometry<S>) -> Result<()> {
        let d = self.distances();
        if d.is_empty() {
            return Err(Error::input("empty approach sequence"));
        }
        if d.windows(2).any(|w| !(w[1] < w[0])) {
            return Err(Error::input(format!(
                "approach to {:?} is not strictly decreasing",
                self.target
            )));
        }
        let last = *d.last().unwrap_or(&S::zero());
        if !(last < S::lit(1e-3) * domain.enclosing_ball()) {
            return Err(Error::input(format!(
                "approach to {:?} stops at distance {last}, not below 1e-3·R",
                self.target
            )));
        }
        for p in &self.points {
            if !domain.contains(p)? {
                return Err(Error::input(format!("approach point {p:?} is not interior")));
            }
        }
        Ok(())
    }
}

/// Sequence `x_j = y - δ_j e`, `δ_j = start·R·decay^j`, with `e` the unit
/// vector from the lattice centre to `y` (radial) or the outward normal at `y`.
pub fn approach_sequence<S: Real>(
    domain: &DomainGeometry<S>,
    target: &[S],
    spec: &SequenceSpec,
) -> Result<ApproachSequence<S>> {
    if !(spec.decay > 0.0 && spec.decay < 1.0) || spec.terms == 0 || !(spec.start > 0.0) {
        return Err(Error::config(
            "approach sequences need 0 < decay < 1, terms > 0, start > 0",
        ));
    }
    let e: Vec<S> = match spec.approach {
        Approach::Normal => domain.outward_normal(target)?,
        Approach::Radial => {
            let c = domain.lattice_origin();
            let v: Vec<S> = target.iter().zip(&c).map(|(a, b)| *a - *b).collect();
            let n = norm(&v);
            if !(n > S::zero()) {
                return Err(Error::input("radial approach target coincides with the centre"));
            }
            v.into_iter().map(|a| a / n).collect()
        }
    };
    let r = domain.enclosing_ball();
    let points = (0..spec.terms)
        .map(|j| {
            let delta = S::lit(spec.start * spec.decay.powi(j as i32)) * r;
            target.iter().zip(&e).map(|(y, d)| *y - delta * *d).collect()
        })
        .collect();
    let seq = ApproachSequence {
        target: target.to_vec(),
        points,
    };
    seq.check(domain)?;
    Ok(seq)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Classification {
    /// `k` bounded on the tail: `h` must converge to `phi(y)`.
    Star,
    /// `k` beyond the threshold: `h/(1 + k)` must vanish.
    StarStar,
    Inconclusive,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CcOptions {
    pub tolerance: f64,
    pub k_threshold: f64,
    /// Number of final terms examined.
    pub tail: usize,
}

impl Default for CcOptions {
    fn default() -> Self {
        CcOptions {
            tolerance: 0.05,
            k_threshold: 1e3,
            tail: 4,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ControlledConvergenceReport {
    pub boundary_point: Vec<f64>,
    pub approach: Vec<Vec<f64>>,
    pub distances: Vec<f64>,
    pub h_values: Vec<f64>,
    pub h_stderrs: Vec<f64>,
    pub k_values: Vec<f64>,
    pub phi: f64,
    pub classification: Classification,
    /// `|tail mean of h - phi(y)|` for `*`, `max |h/(1 + k)|` over the tail for `**`.
    pub tail_error: f64,
    pub pass: bool,
}

/// Pointwise estimator used along sequences; the second argument is a query
/// index for keying random streams.
pub type PointEstimator<'a, S> = &'a (dyn Fn(&[S], u64) -> Result<Estimate<S>> + Sync + 'a);

/// Nearest-neighbour values of a field.
pub fn field_estimator<S: Real>(field: &Field<S>) -> impl Fn(&[S], u64) -> Result<Estimate<S>> + Sync + '_ {
    move |x, _| {
        let i = field.nearest(x);
        Ok(Estimate {
            value: field.values()[i],
            stderr: field.stderrs()[i],
            n_samples: 0,
        })
    }
}

pub fn constant_estimator<S: Real>(value: S) -> impl Fn(&[S], u64) -> Result<Estimate<S>> + Sync {
    move |_, _| Ok(Estimate::exact(value))
}

/// Fresh harmonic-extension estimate of `f` at each query.
pub fn harmonic_estimator<'a, S, F>(
    domain: &'a DomainGeometry<S>,
    f: &'a F,
    n: usize,
    sampler: ExitSampler<S>,
    streams: Streams,
) -> impl Fn(&[S], u64) -> Result<Estimate<S>> + Sync + 'a
where
    S: Real,
    F: Fn(&[S]) -> Result<S> + Sync + ?Sized,
{
    move |x, i| harmonic_extension(domain, f, x, n, &sampler, &streams.at_point(i))
}

/// Classifies each sequence and tests the matching convergence condition.
/// Sequence `s`, term `j` is queried with index `s·terms + j`.
pub fn controlled_convergence_check<S, P>(
    domain: &DomainGeometry<S>,
    h: PointEstimator<'_, S>,
    k: PointEstimator<'_, S>,
    phi: &P,
    sequences: &[ApproachSequence<S>],
    options: &CcOptions,
) -> Result<Vec<ControlledConvergenceReport>>
where
    S: Real,
    P: Fn(&[S]) -> Result<S> + Sync + ?Sized,
{
    if options.tail == 0 {
        return Err(Error::config("tail length must be positive"));
    }
    sequences
        .par_iter()
        .enumerate()
        .map(|(s, seq)| {
            seq.check(domain)?;
            if seq.points.len() < options.tail {
                return Err(Error::input("approach sequence shorter than the tail"));
            }
            let base = (s * seq.points.len()) as u64;
            let mut hv = Vec::new();
            let mut hs = Vec::new();
            let mut kv = Vec::new();
            for (j, x) in seq.points.iter().enumerate() {
                let he = h(x, base + j as u64)?;
                hv.push(he.value.to_f64_lossy());
                hs.push(he.stderr.to_f64_lossy());
                kv.push(k(x, base + j as u64)?.value.to_f64_lossy());
            }
            let phi_y = phi(&seq.target)?.to_f64_lossy();
            let t0 = hv.len() - options.tail;
            let tail_k = &kv[t0..];
            let (classification, tail_error, pass) = if tail_k.iter().all(|&v| v < options.k_threshold) {
                let mean = hv[t0..].iter().sum::<f64>() / options.tail as f64;
                let se = hs[t0..].iter().map(|s| s * s).sum::<f64>().sqrt() / options.tail as f64;
                let err = (mean - phi_y).abs();
                (Classification::Star, err, err <= options.tolerance + 3.0 * se)
            } else if tail_k[tail_k.len() - 1] >= options.k_threshold {
                let err = hv[t0..]
                    .iter()
                    .zip(tail_k)
                    .map(|(h, k)| (h / (1.0 + k)).abs())
                    .fold(0.0, f64::max);
                (Classification::StarStar, err, err < options.tolerance)
            } else {
                (Classification::Inconclusive, f64::NAN, false)
            };
            Ok(ControlledConvergenceReport {
                boundary_point: seq.target.iter().map(|c| c.to_f64_lossy()).collect(),
                approach: seq
                    .points
                    .iter()
                    .map(|p| p.iter().map(|c| c.to_f64_lossy()).collect())
                    .collect(),
                distances: seq.distances().iter().map(|d| d.to_f64_lossy()).collect(),
                h_values: hv,
                h_stderrs: hs,
                k_values: kv,
                phi: phi_y,
                classification,
                tail_error,
                pass,
            })
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sampling::Purpose;

    fn ball() -> DomainGeometry<f64> {
        DomainGeometry::unit_ball(3).unwrap()
    }

    fn equator() -> ControlPiece {
        ControlPiece::Section {
            normal: vec![0.0, 0.0, 1.0],
            offset: 0.0,
        }
    }

    #[test]
    fn piece_distances() {
        assert_eq!(equator().distance(&[0.6, 0.0, -0.8]), 0.8);
        let p = ControlPiece::Point {
            at: vec![0.0, 0.0, 1.0],
        };
        assert_eq!(p.distance(&[0.0, 0.0, -1.0]), 2.0);
        let l = ControlPiece::Polyline {
            points: vec![vec![0.0, 0.0, 0.0], vec![1.0, 0.0, 0.0]],
        };
        assert_eq!(l.distance(&[0.5, 2.0, 0.0]), 2.0);
        assert_eq!(l.distance(&[3.0, 0.0, 0.0]), 2.0);
    }

    #[test]
    fn control_function_bounds() {
        let g = ControlFunction::new(vec![equator()], 1.0, 1e3, 3).unwrap();
        assert_eq!(g.eval(&[0.0, 0.0, 1.0]), 1.0);
        assert_eq!(g.eval(&[1.0, 0.0, 0.0]), 1e3);
        assert_eq!(g.eval(&[0.0, 0.6, 0.5]), 2.0);
        assert!(ControlFunction::new(vec![], 1.5, 1e3, 3).is_err());
        let empty = ControlFunction::new(vec![], 0.5, 1e3, 3).unwrap();
        assert_eq!(empty.eval(&[1.0, 0.0, 0.0]), 0.0);
    }

    #[test]
    fn empty_set_gives_zero_control() {
        let d = ball();
        let pts = d.interior_grid(0.5).unwrap().points;
        let c = control_function_heuristic(
            &d,
            vec![],
            0.5,
            1e3,
            &pts,
            10,
            &ExitSampler::wos(&d),
            &Streams::new(1, Purpose::Control),
        )
        .unwrap();
        assert!(c.k.values().iter().all(|&v| v == 0.0));
        assert!(c.warning.is_some());
    }

    #[test]
    fn sequences_are_checked() {
        let d = ball();
        let s = approach_sequence(&d, &[0.0, 0.0, 1.0], &SequenceSpec::default()).unwrap();
        assert_eq!(s.points.len(), 12);
        assert!((s.points[0][2] - 0.5).abs() < 1e-15);
        let short = SequenceSpec {
            terms: 3,
            ..SequenceSpec::default()
        };
        assert!(matches!(
            approach_sequence(&d, &[0.0, 0.0, 1.0], &short),
            Err(Error::Input(_))
        ));
        let bad = ApproachSequence {
            target: vec![0.0, 0.0, 1.0],
            points: vec![vec![0.0, 0.0, 0.9999], vec![0.0, 0.0, 0.5]],
        };
        assert!(bad.check(&d).is_err());
    }

    #[test]
    fn constant_data_is_star_and_passes() {
        let d = ball();
        let seq = approach_sequence(&d, &[0.0, 0.0, 1.0], &SequenceSpec::default()).unwrap();
        let h = constant_estimator(1.0);
        let k = constant_estimator(0.0);
        let r = controlled_convergence_check(&d, &h, &k, &|_: &[f64]| Ok(1.0), &[seq], &CcOptions::default()).unwrap();
        assert_eq!(r[0].classification, Classification::Star);
        assert!(r[0].pass);
    }

    #[test]
    fn large_control_switches_regime() {
        let d = ball();
        let seq = approach_sequence(&d, &[1.0, 0.0, 0.0], &SequenceSpec::default()).unwrap();
        let h = constant_estimator(0.5);
        let k = |x: &[f64], _| Ok(Estimate::exact(1.0 / (1.0 - norm(x))));
        let r = controlled_convergence_check(
            &d,
            &h,
            &k,
            &|_: &[f64]| Ok(0.0),
            std::slice::from_ref(&seq),
            &CcOptions::default(),
        )
        .unwrap();
        assert_eq!(r[0].classification, Classification::StarStar);
        assert!(r[0].pass);
        let zero = constant_estimator(0.0);
        let r =
            controlled_convergence_check(&d, &h, &zero, &|_: &[f64]| Ok(0.0), &[seq], &CcOptions::default()).unwrap();
        assert_eq!(r[0].classification, Classification::Star);
        assert!(!r[0].pass);
    }
}
