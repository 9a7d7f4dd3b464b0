//! Brownian exit experiments.
//!
//! Two samplers are provided. Walk-on-spheres draws the exit point with the
//! exact harmonic-measure law (up to the terminal shell) but carries no time
//! information. The Euler–Maruyama sampler steps `X + sqrt(dt)·N(0, I)`, which
//! makes the exit time and occupation integrals `∫ w(X_s) ds` available at the
//! price of an `O(sqrt(dt))` overshoot bias. An optional Brownian-bridge test
//! catches excursions that leave and re-enter within one step.

mod rng;

use std::sync::Arc;

use rand::Rng;
use smallvec::SmallVec;

pub use rng::{Purpose, RngStream, StreamKey, Streams};

use crate::error::{Error, Result};
use crate::geometry::DomainGeometry;
use crate::real::{norm, Real};

pub const DEFAULT_STEP_CAP: usize = 1_000_000;

/// Uniformly distributed unit vector in `R^dim`.
pub fn sphere_direction<S: Real, R: Rng + ?Sized>(dim: usize, rng: &mut R) -> Vec<S> {
    loop {
        let v: Vec<S> = (0..dim).map(|_| S::standard_normal(rng)).collect();
        let n = norm(&v);
        if n > S::zero() {
            return v.into_iter().map(|c| c / n).collect();
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WosConfig<S> {
    /// Walks stop once within this distance of the boundary.
    pub shell: S,
    pub step_cap: usize,
}

impl<S: Real> WosConfig<S> {
    /// Shell `1e-4·R`, cap `1e6` steps.
    pub fn for_domain(domain: &DomainGeometry<S>) -> Self {
        WosConfig {
            shell: S::lit(1e-4) * domain.enclosing_ball(),
            step_cap: DEFAULT_STEP_CAP,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EmConfig<S> {
    pub dt: S,
    pub step_cap: usize,
    /// Brownian-bridge crossing test between interior positions.
    pub bridge: bool,
}

impl<S: Real> EmConfig<S> {
    /// `dt = 1e-4·R²` (so `sqrt(dt) = 1e-2·R`), cap `1e6` steps, no bridge test.
    pub fn for_domain(domain: &DomainGeometry<S>) -> Self {
        let r = domain.enclosing_ball();
        EmConfig {
            dt: S::lit(1e-4) * r * r,
            step_cap: DEFAULT_STEP_CAP,
            bridge: false,
        }
    }

    pub fn with_dt(self, dt: S) -> Self {
        EmConfig { dt, ..self }
    }

    pub fn with_bridge(self, bridge: bool) -> Self {
        EmConfig { bridge, ..self }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExitSample<S> {
    pub exit_point: Vec<S>,
    pub steps: usize,
}

pub type IntegrandFn<'a, S> = &'a (dyn Fn(&[S]) -> Result<S> + Sync + 'a);

/// Labelled scalar functions whose occupation integrals are accumulated along a path.
#[derive(Clone)]
pub struct Integrands<'a, S> {
    labels: Arc<[Arc<str>]>,
    funcs: Vec<IntegrandFn<'a, S>>,
}

impl<'a, S: Real> Integrands<'a, S> {
    pub fn new() -> Self {
        Integrands {
            labels: Arc::from(Vec::new()),
            funcs: Vec::new(),
        }
    }

    pub fn with(self, label: &str, f: IntegrandFn<'a, S>) -> Self {
        let mut labels: Vec<Arc<str>> = self.labels.iter().cloned().collect();
        labels.push(Arc::from(label));
        let mut funcs = self.funcs;
        funcs.push(f);
        Integrands {
            labels: Arc::from(labels),
            funcs,
        }
    }

    pub fn len(&self) -> usize {
        self.funcs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.funcs.is_empty()
    }
}

impl<S: Real> Default for Integrands<'_, S> {
    fn default() -> Self {
        Self::new()
    }
}

/// One Euler–Maruyama path run to its exit.
#[derive(Debug, Clone, PartialEq)]
pub struct PathSample<S> {
    pub exit_point: Vec<S>,
    pub exit_time: S,
    pub steps: usize,
    labels: Arc<[Arc<str>]>,
    occupation: SmallVec<[S; 2]>,
}

impl<S: Real> PathSample<S> {
    /// Occupation integral `∫_0^τ w(X_s) ds` registered under `label`.
    pub fn occupation(&self, label: &str) -> Result<S> {
        self.labels
            .iter()
            .position(|l| &**l == label)
            .map(|i| self.occupation[i])
            .ok_or_else(|| Error::input(format!("no integrand registered under label `{label}`")))
    }

    pub fn occupations(&self) -> &[S] {
        &self.occupation
    }
}

/// Feynman–Kac weight `exp(∫_0^τ w(X_s) ds)` for the integrand registered under `label`.
pub fn feynman_kac_weight<S: Real>(sample: &PathSample<S>, label: &str) -> Result<S> {
    Ok(sample.occupation(label)?.exp())
}

fn start_distance<S: Real>(domain: &DomainGeometry<S>, x: &[S]) -> Result<S> {
    let s = domain.signed_distance(x)?;
    if !(s < S::zero()) {
        return Err(Error::input(format!(
            "starting point {x:?} is not interior (signed distance {s})"
        )));
    }
    Ok(-s)
}

/// Walk-on-spheres exit point from interior `x`, drawing from `stream`.
pub fn wos_exit<S: Real>(
    domain: &DomainGeometry<S>,
    x: &[S],
    config: &WosConfig<S>,
    stream: &RngStream,
) -> Result<ExitSample<S>> {
    wos_exit_with(domain, x, config, &mut stream.rng())
}

pub fn wos_exit_with<S: Real, R: Rng + ?Sized>(
    domain: &DomainGeometry<S>,
    x: &[S],
    config: &WosConfig<S>,
    rng: &mut R,
) -> Result<ExitSample<S>> {
    if !(config.shell > S::zero()) {
        return Err(Error::config("walk-on-spheres shell must be positive"));
    }
    let mut radius = start_distance(domain, x)?;
    let mut pos = x.to_vec();
    let mut steps = 0;
    while radius > config.shell {
        if steps >= config.step_cap {
            return Err(Error::numerical(format!(
                "walk-on-spheres exceeded {} steps from {x:?}",
                config.step_cap
            )));
        }
        let dir = sphere_direction::<S, R>(domain.dim(), rng);
        for (p, d) in pos.iter_mut().zip(&dir) {
            *p += radius * *d;
        }
        steps += 1;
        radius = -domain.sd(&pos)?;
    }
    Ok(ExitSample {
        exit_point: domain.project_to_boundary(&pos)?,
        steps,
    })
}

/// Euler–Maruyama path from interior `x`, accumulating the registered occupation integrals.
pub fn em_path<S: Real>(
    domain: &DomainGeometry<S>,
    x: &[S],
    config: &EmConfig<S>,
    integrands: &Integrands<'_, S>,
    stream: &RngStream,
) -> Result<PathSample<S>> {
    em_path_with(domain, x, config, integrands, &mut stream.rng())
}

pub fn em_path_with<S: Real, R: Rng + ?Sized>(
    domain: &DomainGeometry<S>,
    x: &[S],
    config: &EmConfig<S>,
    integrands: &Integrands<'_, S>,
    rng: &mut R,
) -> Result<PathSample<S>> {
    let mut occupation: SmallVec<[S; 2]> = SmallVec::from_elem(S::zero(), integrands.len());
    let (exit_point, steps) = em_run(domain, x, config, &integrands.funcs, &mut occupation, rng)?;
    Ok(PathSample {
        exit_point,
        exit_time: S::from_usize_lossy(steps) * config.dt,
        steps,
        labels: integrands.labels.clone(),
        occupation,
    })
}

/// Core stepping loop. Left-endpoint sums over the pre-exit positions are added
/// to `occupation`; returns the projected exit point and the number of steps.
pub(crate) fn em_run<S: Real, R: Rng + ?Sized>(
    domain: &DomainGeometry<S>,
    x: &[S],
    config: &EmConfig<S>,
    funcs: &[IntegrandFn<'_, S>],
    occupation: &mut [S],
    rng: &mut R,
) -> Result<(Vec<S>, usize)> {
    if !(config.dt > S::zero()) {
        return Err(Error::config("time step must be positive"));
    }
    let dt = config.dt;
    let sqrt_dt = dt.sqrt();
    let two = S::lit(2.0);
    let mut depth = start_distance(domain, x)?;
    let mut pos = x.to_vec();
    let mut steps = 0usize;
    loop {
        for (acc, f) in occupation.iter_mut().zip(funcs) {
            let w = f(&pos).map_err(|e| e.context(format!("integrand at path step {steps}, position {pos:?}")))?;
            *acc += w * dt;
        }
        for p in pos.iter_mut() {
            *p += sqrt_dt * S::standard_normal(rng);
        }
        steps += 1;
        let s = domain.sd(&pos)?;
        if s >= S::zero() {
            break;
        }
        let next_depth = -s;
        if config.bridge {
            // half-space approximation of the crossing probability of the bridge
            let p = (-two * depth * next_depth / dt).exp();
            if S::unit_uniform(rng) < p {
                break;
            }
        }
        depth = next_depth;
        if steps >= config.step_cap {
            return Err(Error::numerical(format!(
                "Euler–Maruyama path exceeded {} steps from {x:?}",
                config.step_cap
            )));
        }
    }
    Ok((domain.project_to_boundary(&pos)?, steps))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ball() -> DomainGeometry<f64> {
        DomainGeometry::unit_ball(3).unwrap()
    }

    #[test]
    fn wos_single_step_from_centre() {
        let d = ball();
        let cfg = WosConfig::for_domain(&d);
        let s = Streams::new(1, Purpose::ExitPoint);
        for i in 0..100 {
            let e = wos_exit(&d, &[0.0; 3], &cfg, &s.replicate(i)).unwrap();
            assert_eq!(e.steps, 1);
            assert!(d.signed_distance(&e.exit_point).unwrap().abs() <= 1e-12);
        }
    }

    #[test]
    fn wos_rejects_exterior_start() {
        let d = ball();
        let cfg = WosConfig::for_domain(&d);
        let s = Streams::new(1, Purpose::ExitPoint).replicate(0);
        assert!(matches!(wos_exit(&d, &[1.5, 0.0, 0.0], &cfg, &s), Err(Error::Input(_))));
    }

    #[test]
    fn wos_step_cap() {
        let d = ball();
        let cfg = WosConfig {
            shell: 1e-300,
            step_cap: 5,
        };
        let s = Streams::new(1, Purpose::ExitPoint).replicate(0);
        let r = wos_exit(&d, &[0.1, 0.0, 0.0], &cfg, &s);
        assert!(matches!(r, Err(Error::Numerical(_))), "{r:?}");
    }

    #[test]
    fn zero_integrand_gives_exact_zero() {
        let d = ball();
        let cfg = EmConfig::for_domain(&d).with_dt(1e-3);
        let zero = |_: &[f64]| Ok(0.0);
        let ints = Integrands::new().with("zero", &zero);
        let s = Streams::new(3, Purpose::Path);
        for i in 0..50 {
            let p = em_path(&d, &[0.2, 0.1, 0.0], &cfg, &ints, &s.replicate(i)).unwrap();
            assert_eq!(p.occupation("zero").unwrap(), 0.0);
            assert_eq!(feynman_kac_weight(&p, "zero").unwrap(), 1.0);
            assert!(p.exit_time > 0.0);
            assert_eq!(p.exit_time, p.steps as f64 * 1e-3);
            assert!(feynman_kac_weight(&p, "other").is_err());
        }
    }

    #[test]
    fn occupation_bounds_for_nonpositive_integrand() {
        let d = ball();
        let cfg = EmConfig::for_domain(&d).with_dt(1e-3);
        // -U <= w <= 0 with sup U = 2
        let w = |x: &[f64]| Ok(-2.0 * (1.0 - norm(x).min(1.0)));
        let ints = Integrands::new().with("w", &w);
        let s = Streams::new(4, Purpose::Path);
        for i in 0..200 {
            let p = em_path(&d, &[0.0; 3], &cfg, &ints, &s.replicate(i)).unwrap();
            let occ = p.occupation("w").unwrap();
            assert!(occ <= 0.0 && occ >= -p.exit_time * 2.0, "{occ} tau={}", p.exit_time);
            let weight = feynman_kac_weight(&p, "w").unwrap();
            assert!(weight > 0.0 && weight <= 1.0);
        }
    }

    #[test]
    fn integrand_error_carries_path_context() {
        let d = ball();
        let cfg = EmConfig::for_domain(&d).with_dt(1e-3);
        let bad = |_: &[f64]| Err(Error::numerical("boom"));
        let ints = Integrands::new().with("bad", &bad);
        let err = em_path(&d, &[0.0; 3], &cfg, &ints, &Streams::new(0, Purpose::Path).replicate(0)).unwrap_err();
        assert!(err.to_string().contains("path step 0"), "{err}");
    }

    #[test]
    fn identical_streams_are_bit_identical() {
        let d = ball();
        let cfg = EmConfig::for_domain(&d).with_dt(1e-3).with_bridge(true);
        let w = |x: &[f64]| Ok(-x[0].abs());
        let ints = Integrands::new().with("w", &w);
        let key = Streams::new(9, Purpose::Path).at_point(2).replicate(17);
        let a = em_path(&d, &[0.3, 0.0, 0.0], &cfg, &ints, &key).unwrap();
        let b = em_path(&d, &[0.3, 0.0, 0.0], &cfg, &ints, &key).unwrap();
        assert_eq!(a, b);
        let wc = WosConfig::for_domain(&d);
        assert_eq!(
            wos_exit(&d, &[0.3, 0.0, 0.0], &wc, &key).unwrap(),
            wos_exit(&d, &[0.3, 0.0, 0.0], &wc, &key).unwrap()
        );
    }
}
