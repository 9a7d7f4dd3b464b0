//! Linear estimators: harmonic extension `E^x f(X_τ)`, Green potential
//! `E^x ∫_0^τ q(X_s) ds`, and the Schrödinger representation
//! `E^x[exp(∫_0^τ q(X_s) ds) φ(X_τ)]` for `q ≤ 0`.

use rayon::prelude::*;
use smallvec::SmallVec;

use crate::error::{Error, Result};
use crate::estimate::{check_count, monte_carlo, Estimate};
use crate::field::Field;
use crate::geometry::DomainGeometry;
use crate::real::{norm, Real};
use crate::sampling::{em_run, wos_exit_with, EmConfig, IntegrandFn, Streams, WosConfig};

/// `Γ(k/2)` for a positive integer `k`.
fn gamma_half(k: usize) -> f64 {
    let (mut g, mut t) = if k.is_multiple_of(2) {
        (1.0, 1.0)
    } else {
        (std::f64::consts::PI.sqrt(), 0.5)
    };
    // Γ(t + 1) = t Γ(t)
    while 2.0 * t < k as f64 {
        g *= t;
        t += 1.0;
    }
    g
}

/// Dimension-dependent constants of the Newtonian Green function.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GreenConstants {
    pub dim: usize,
    /// `Γ(d/2 - 1) / (2 π^{d/2})`, so that `G(x, y) = c |x - y|^{2-d}` for `½Δ` on `R^d`.
    pub c: f64,
}

impl GreenConstants {
    pub fn new(dim: usize) -> Result<Self> {
        if dim < 3 {
            return Err(Error::config(format!("Green constant needs d >= 3, got {dim}")));
        }
        let c = gamma_half(dim - 2) / (2.0 * std::f64::consts::PI.powf(dim as f64 / 2.0));
        Ok(GreenConstants { dim, c })
    }

    /// Surface area of the unit sphere in `R^d`.
    pub fn sphere_area(dim: usize) -> f64 {
        2.0 * std::f64::consts::PI.powf(dim as f64 / 2.0) / gamma_half(dim)
    }
}

/// The kernel `g` as displayed: `|v|^{d-2}` for `d >= 3`, `ln(1/|v|)` for `d = 2`, `|v|` for `d = 1`.
pub fn green_kernel<S: Real>(dim: usize, v: &[S]) -> Result<S> {
    let r = kernel_radius(dim, v)?;
    Ok(match dim {
        1 => r,
        2 => (S::one() / r).ln(),
        _ => r.powi(dim as i32 - 2),
    })
}

/// `|v|^{2-d}`, the singular profile of the Green function for `d >= 3`.
pub fn newtonian_kernel<S: Real>(dim: usize, v: &[S]) -> Result<S> {
    if dim < 3 {
        return Err(Error::config(format!("Newtonian kernel needs d >= 3, got {dim}")));
    }
    let r = kernel_radius(dim, v)?;
    Ok(r.powi(2 - dim as i32))
}

fn kernel_radius<S: Real>(dim: usize, v: &[S]) -> Result<S> {
    if dim == 0 || v.len() != dim {
        return Err(Error::input(format!(
            "kernel argument has length {}, expected {dim}",
            v.len()
        )));
    }
    let r = norm(v);
    if r == S::zero() {
        return Err(Error::numerical("Green kernel is singular at v = 0"));
    }
    Ok(r)
}

/// Exit-point sampler for harmonic extension.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ExitSampler<S> {
    WalkOnSpheres(WosConfig<S>),
    EulerMaruyama(EmConfig<S>),
}

impl<S: Real> ExitSampler<S> {
    pub fn wos(domain: &DomainGeometry<S>) -> Self {
        ExitSampler::WalkOnSpheres(WosConfig::for_domain(domain))
    }

    pub fn em(domain: &DomainGeometry<S>) -> Self {
        ExitSampler::EulerMaruyama(EmConfig::for_domain(domain))
    }
}

fn eval_boundary<S: Real>(f: &(impl Fn(&[S]) -> Result<S> + ?Sized), y: &[S]) -> Result<S> {
    f(y).map_err(|e| e.context(format!("boundary function at {y:?}")))
}

/// Monte Carlo estimate of `E^x f(X_τ)` from `n` exit points.
pub fn harmonic_extension<S, F>(
    domain: &DomainGeometry<S>,
    f: &F,
    x: &[S],
    n: usize,
    sampler: &ExitSampler<S>,
    streams: &Streams,
) -> Result<Estimate<S>>
where
    S: Real,
    F: Fn(&[S]) -> Result<S> + Sync + ?Sized,
{
    domain.signed_distance(x)?;
    monte_carlo(n, streams, |rng| {
        let y = match sampler {
            ExitSampler::WalkOnSpheres(cfg) => wos_exit_with(domain, x, cfg, rng)?.exit_point,
            ExitSampler::EulerMaruyama(cfg) => em_run(domain, x, cfg, &[], &mut [], rng)?.0,
        };
        eval_boundary(f, &y)
    })
}

/// Monte Carlo estimate of `Gq(x) = E^x ∫_0^τ q(X_s) ds` from `n` Euler–Maruyama paths.
pub fn green_potential<S, Q>(
    domain: &DomainGeometry<S>,
    q: &Q,
    x: &[S],
    n: usize,
    config: &EmConfig<S>,
    streams: &Streams,
) -> Result<Estimate<S>>
where
    S: Real,
    Q: Fn(&[S]) -> Result<S> + Sync,
{
    let funcs: [IntegrandFn<'_, S>; 1] = [q];
    monte_carlo(n, streams, |rng| {
        let mut occ = [S::zero()];
        em_run(domain, x, config, &funcs, &mut occ, rng)?;
        Ok(occ[0])
    })
}

/// Monte Carlo estimate of `E^x[exp(∫_0^τ q(X_s) ds) φ(X_τ)]` for `q ≤ 0`.
///
/// A positive value of `q` along a path is a hypothesis error.
pub fn schrodinger_solution<S, Q, P>(
    domain: &DomainGeometry<S>,
    q: &Q,
    phi: &P,
    x: &[S],
    n: usize,
    config: &EmConfig<S>,
    streams: &Streams,
) -> Result<Estimate<S>>
where
    S: Real,
    Q: Fn(&[S]) -> Result<S> + Sync + ?Sized,
    P: Fn(&[S]) -> Result<S> + Sync + ?Sized,
{
    let checked = |y: &[S]| -> Result<S> {
        let v = q(y)?;
        if v > S::zero() {
            return Err(Error::hypothesis(format!("potential q = {v} > 0 at {y:?}")));
        }
        Ok(v)
    };
    let funcs: [IntegrandFn<'_, S>; 1] = [&checked];
    monte_carlo(n, streams, |rng| {
        let mut occ: SmallVec<[S; 1]> = SmallVec::from_elem(S::zero(), 1);
        let (y, _) = em_run(domain, x, config, &funcs, &mut occ, rng)?;
        Ok(occ[0].exp() * eval_boundary(phi, &y)?)
    })
}

/// Harmonic extension at every point, each point drawing from its own stream family.
pub fn field_harmonic_extension<S, F>(
    domain: &DomainGeometry<S>,
    f: &F,
    points: &[Vec<S>],
    n: usize,
    sampler: &ExitSampler<S>,
    streams: &Streams,
) -> Result<Field<S>>
where
    S: Real,
    F: Fn(&[S]) -> Result<S> + Sync + ?Sized,
{
    check_count(n)?;
    let estimates: Vec<Estimate<S>> = points
        .par_iter()
        .enumerate()
        .map(|(i, x)| harmonic_extension(domain, f, x, n, sampler, &streams.at_point(i as u64)))
        .collect::<Result<_>>()?;
    Field::from_points(
        points.to_vec(),
        estimates.iter().map(|e| e.value).collect(),
        estimates.iter().map(|e| e.stderr).collect(),
    )
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sampling::{sphere_direction, Purpose};
    use approx::assert_relative_eq;

    fn ball() -> DomainGeometry<f64> {
        DomainGeometry::unit_ball(3).unwrap()
    }

    #[test]
    fn green_constant_values() {
        assert_relative_eq!(
            GreenConstants::new(3).unwrap().c,
            1.0 / (2.0 * std::f64::consts::PI),
            epsilon = 1e-15
        );
        // d = 4: Γ(1) / (2π²)
        assert_relative_eq!(
            GreenConstants::new(4).unwrap().c,
            1.0 / (2.0 * std::f64::consts::PI.powi(2)),
            epsilon = 1e-15
        );
        // d = 5: Γ(3/2) / (2π^{5/2})
        let expected = 0.5 * std::f64::consts::PI.sqrt() / (2.0 * std::f64::consts::PI.powf(2.5));
        assert_relative_eq!(GreenConstants::new(5).unwrap().c, expected, epsilon = 1e-15);
        assert!(GreenConstants::new(2).is_err());
        assert_relative_eq!(
            GreenConstants::sphere_area(3),
            4.0 * std::f64::consts::PI,
            epsilon = 1e-13
        );
    }

    #[test]
    fn kernel_branches() {
        assert_eq!(green_kernel(3, &[0.0, 2.0, 0.0]).unwrap(), 2.0);
        assert_eq!(green_kernel(2, &[1.0, 0.0]).unwrap(), 0.0);
        assert_eq!(green_kernel(5, &[2.0, 0.0, 0.0, 0.0, 0.0]).unwrap(), 8.0);
        assert_eq!(green_kernel(1, &[-3.0]).unwrap(), 3.0);
        assert!(matches!(green_kernel(3, &[0.0; 3]), Err(Error::Numerical(_))));
        assert_eq!(newtonian_kernel(3, &[0.0, 2.0, 0.0]).unwrap(), 0.5);
    }

    #[test]
    fn linear_boundary_data_is_reproduced() {
        let d = ball();
        let f = |y: &[f64]| Ok(y[0]);
        let s = Streams::new(11, Purpose::ExitPoint);
        let e = harmonic_extension(&d, &f, &[0.3, 0.1, 0.0], 20_000, &ExitSampler::wos(&d), &s).unwrap();
        assert!(e.agrees_with(0.3, 3.0, 0.0), "{e:?}");
    }

    #[test]
    fn wos_mean_value_property_is_exact() {
        // one WoS step from the centre is a uniform sphere point drawn from the same stream
        let d = ball();
        let f = |y: &[f64]| Ok(y[2] * y[2] + y[0]);
        let s = Streams::new(2, Purpose::ExitPoint);
        let e = harmonic_extension(&d, &f, &[0.0; 3], 1000, &ExitSampler::wos(&d), &s).unwrap();
        let direct = monte_carlo(1000, &s, |rng| {
            let y: Vec<f64> = sphere_direction(3, rng);
            f(&y)
        })
        .unwrap();
        assert_relative_eq!(e.value, direct.value, epsilon = 1e-12);
    }

    #[test]
    fn zero_potential_reduces_to_harmonic_extension() {
        let d = ball();
        let cfg = EmConfig::for_domain(&d).with_dt(1e-3);
        let phi = |y: &[f64]| Ok(if y[2] > 0.0 { 1.0 } else { 0.0 });
        let zero = |_: &[f64]| Ok(0.0);
        let s = Streams::new(9, Purpose::Path);
        let x = [0.1, 0.0, 0.2];
        let a = schrodinger_solution(&d, &zero, &phi, &x, 500, &cfg, &s).unwrap();
        let b = harmonic_extension(&d, &phi, &x, 500, &ExitSampler::EulerMaruyama(cfg), &s).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn green_potential_of_zero_is_exactly_zero() {
        let d = ball();
        let cfg = EmConfig::for_domain(&d).with_dt(1e-3);
        let e = green_potential(
            &d,
            &|_: &[f64]| Ok(0.0),
            &[0.0; 3],
            100,
            &cfg,
            &Streams::new(1, Purpose::Path),
        )
        .unwrap();
        assert_eq!(e.value, 0.0);
        assert_eq!(e.stderr, 0.0);
    }

    #[test]
    fn positive_potential_is_rejected() {
        let d = ball();
        let cfg = EmConfig::for_domain(&d).with_dt(1e-2);
        let r = schrodinger_solution(
            &d,
            &|_: &[f64]| Ok(0.1),
            &|_: &[f64]| Ok(1.0),
            &[0.0; 3],
            10,
            &cfg,
            &Streams::new(1, Purpose::Path),
        );
        assert!(matches!(r.unwrap_err().root(), Error::Hypothesis(_)));
    }

    #[test]
    fn boundary_errors_carry_the_point() {
        let d = ball();
        let f = |y: &[f64]| if y[0] > 0.0 { Err(Error::input("bad")) } else { Ok(0.0) };
        let err = harmonic_extension(
            &d,
            &f,
            &[0.0; 3],
            100,
            &ExitSampler::wos(&d),
            &Streams::new(1, Purpose::ExitPoint),
        )
        .unwrap_err();
        assert!(err.to_string().contains("boundary function at"), "{err}");
    }

    #[test]
    fn constant_payoff_is_exact_with_wos() {
        let d = ball();
        let grid = d.interior_grid(0.5).unwrap();
        let f = field_harmonic_extension(
            &d,
            &|_: &[f64]| Ok(1.0),
            &grid.points,
            50,
            &ExitSampler::wos(&d),
            &Streams::new(4, Purpose::ExitPoint),
        )
        .unwrap();
        assert!(f.values().iter().all(|&v| v == 1.0));
        assert!(f.stderrs().iter().all(|&v| v == 0.0));
    }
}
