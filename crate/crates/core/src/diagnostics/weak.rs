//! Weak-form residuals `½∫ u Δψ - ∫ s(x, u) ψ` against compactly supported
//! radial bumps with analytic Laplacians.
//!
//! For `ψ(x) = g(t)`, `t = |x - c|²/ρ²`, the Laplacian is
//! `Δψ = (2d g'(t) + 4t g''(t)) / ρ²`.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::field::Field;
use crate::geometry::DomainGeometry;
use crate::linear::GreenConstants;
use crate::real::Real;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum BumpProfile {
    /// `exp(-1/(1 - t))`, smooth.
    Smooth,
    /// `(1 - t)^k`, of class `C^{k-1}`; `k >= 3`.
    Polynomial(u32),
}

/// Radial bump centred at `center` with support radius `radius`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TestFunction {
    pub profile: BumpProfile,
    pub center: Vec<f64>,
    pub radius: f64,
}

impl TestFunction {
    pub fn new(profile: BumpProfile, center: Vec<f64>, radius: f64) -> Result<Self> {
        if let BumpProfile::Polynomial(k) = profile {
            if k < 3 {
                return Err(Error::config("polynomial bumps need exponent >= 3"));
            }
        }
        if !(radius > 0.0) {
            return Err(Error::config("bump radius must be positive"));
        }
        Ok(TestFunction {
            profile,
            center,
            radius,
        })
    }

    pub fn name(&self) -> String {
        match self.profile {
            BumpProfile::Smooth => format!("smooth(r={})", self.radius),
            BumpProfile::Polynomial(k) => format!("poly{k}(r={})", self.radius),
        }
    }

    /// `(g, g', g'')` at `t ∈ [0, 1)`.
    fn profile(&self, t: f64) -> (f64, f64, f64) {
        if t >= 1.0 {
            return (0.0, 0.0, 0.0);
        }
        let s = 1.0 - t;
        match self.profile {
            BumpProfile::Smooth => {
                let g = (-1.0 / s).exp();
                (g, -g / (s * s), g * (2.0 * t - 1.0) / s.powi(4))
            }
            BumpProfile::Polynomial(k) => {
                let k = k as i32;
                let kf = k as f64;
                (s.powi(k), -kf * s.powi(k - 1), kf * (kf - 1.0) * s.powi(k - 2))
            }
        }
    }

    fn t(&self, x: &[f64]) -> f64 {
        x.iter().zip(&self.center).map(|(a, b)| (a - b) * (a - b)).sum::<f64>() / (self.radius * self.radius)
    }

    pub fn value(&self, x: &[f64]) -> f64 {
        self.profile(self.t(x)).0
    }

    pub fn laplacian(&self, x: &[f64]) -> f64 {
        let t = self.t(x);
        let (_, g1, g2) = self.profile(t);
        let d = self.center.len() as f64;
        (2.0 * d * g1 + 4.0 * t * g2) / (self.radius * self.radius)
    }

    /// `∫ ψ = S_{d-1} ρ^d ∫_0^1 g(s²) s^{d-1} ds`, by composite Simpson.
    pub fn integral(&self) -> f64 {
        let d = self.center.len();
        let n = 20_000;
        let h = 1.0 / n as f64;
        let f = |s: f64| self.profile(s * s).0 * s.powi(d as i32 - 1);
        let mut sum = f(0.0) + f(1.0);
        for i in 1..n {
            sum += f(i as f64 * h) * if i % 2 == 1 { 4.0 } else { 2.0 };
        }
        GreenConstants::sphere_area(d) * self.radius.powi(d as i32) * sum * h / 3.0
    }

    /// Support must stay strictly inside `D`.
    pub fn check_support<S: Real>(&self, domain: &DomainGeometry<S>) -> Result<()> {
        if self.center.len() != domain.dim() {
            return Err(Error::input("test function has the wrong dimension"));
        }
        let c: Vec<S> = self.center.iter().map(|&v| S::lit(v)).collect();
        let sd = domain.signed_distance(&c)?.to_f64_lossy();
        if !(sd + self.radius < 0.0) {
            return Err(Error::input(format!(
                "support of {} at {:?} touches the boundary",
                self.name(),
                self.center
            )));
        }
        Ok(())
    }
}

/// Three bumps of different smoothness centred at `center`.
pub fn standard_bumps(center: Vec<f64>, radius: f64) -> Vec<TestFunction> {
    vec![
        TestFunction {
            profile: BumpProfile::Smooth,
            center: center.clone(),
            radius,
        },
        TestFunction {
            profile: BumpProfile::Polynomial(3),
            center: center.clone(),
            radius,
        },
        TestFunction {
            profile: BumpProfile::Polynomial(6),
            center,
            radius,
        },
    ]
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct WeakResidual {
    pub test_function: String,
    pub residual: f64,
    /// `3·sqrt(Σ (a_j SE_j)²)`, propagating the field's standard errors linearly.
    pub mc_term: f64,
    /// Quadrature error of the test function itself.
    pub quadrature_term: f64,
    /// Nearest-neighbour interpolation error of the field.
    pub interpolation_term: f64,
    pub budget: f64,
    pub pass: bool,
}

/// Residual of `½Δu = s(x, u)` in the weak sense, by midpoint quadrature at
/// spacing `spacing` on the lattice of `domain`.
///
/// The budget adds three terms. The Monte Carlo term propagates the field's
/// standard errors. The quadrature term is `sup|u|·|Q[½Δψ]| + sup|s|·|Q[ψ] - ∫ψ|`,
/// measured on the test function where the exact values (`∫Δψ = 0`) are known.
/// The interpolation term bounds `|u - ũ|` by `L·h_f·sqrt(d)/2`, with `L` the
/// largest difference quotient between lattice neighbours of the field (or of
/// nearest pairs when the field is not on a lattice).
pub fn weak_residual<S, Src>(
    domain: &DomainGeometry<S>,
    u: &Field<S>,
    source: &Src,
    tests: &[TestFunction],
    spacing: S,
) -> Result<Vec<WeakResidual>>
where
    S: Real,
    Src: Fn(&[S], S) -> Result<S> + Sync + ?Sized,
{
    let dim = domain.dim();
    let lattice = domain.lattice(spacing, S::zero())?;
    let h = spacing.to_f64_lossy();
    let vol = h.powi(dim as i32);
    let jumps = u.neighbour_jumps();
    let (lip, h_field) = (jumps.max_quotient, jumps.spacing);
    let interp = lip * h_field * (dim as f64).sqrt() / 2.0;
    let mut out = Vec::with_capacity(tests.len());
    for psi in tests {
        psi.check_support(domain)?;
        let mut residual = 0.0;
        let mut q_lap = 0.0;
        let mut q_psi = 0.0;
        let mut sup_u = 0.0f64;
        let mut sup_s = 0.0f64;
        let mut abs_weight = 0.0;
        let mut coeff = vec![0.0; u.len()];
        for y in &lattice.points {
            let yf: Vec<f64> = y.iter().map(|c| c.to_f64_lossy()).collect();
            let t = psi.t(&yf);
            if t >= 1.0 {
                continue;
            }
            let p = psi.value(&yf);
            let lap = psi.laplacian(&yf);
            let j = u.nearest(y);
            let uj = u.values()[j];
            let s = source(y, uj)?.to_f64_lossy();
            let uf = uj.to_f64_lossy();
            // ∂s/∂u by central differences
            let du = 1e-6 * uf.abs().max(1.0);
            let ds =
                (source(y, uj + S::lit(du))?.to_f64_lossy() - source(y, uj - S::lit(du))?.to_f64_lossy()) / (2.0 * du);
            residual += vol * (0.5 * uf * lap - s * p);
            q_lap += vol * 0.5 * lap;
            q_psi += vol * p;
            coeff[j] += vol * (0.5 * lap - ds * p);
            abs_weight += vol * (0.5 * lap.abs() + ds.abs() * p);
            sup_u = sup_u.max(uf.abs());
            sup_s = sup_s.max(s.abs());
        }
        let mc = 3.0
            * coeff
                .iter()
                .zip(u.stderrs())
                .map(|(a, se)| (a * se.to_f64_lossy()).powi(2))
                .sum::<f64>()
                .sqrt();
        let quad = sup_u * q_lap.abs() + sup_s * (q_psi - psi.integral()).abs();
        let interpolation = interp * abs_weight;
        let budget = mc + quad + interpolation;
        out.push(WeakResidual {
            test_function: psi.name(),
            residual,
            mc_term: mc,
            quadrature_term: quad,
            interpolation_term: interpolation,
            budget,
            pass: residual.abs() <= budget,
        });
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ball() -> DomainGeometry<f64> {
        DomainGeometry::unit_ball(3).unwrap()
    }

    #[test]
    fn laplacian_matches_finite_differences() {
        for psi in standard_bumps(vec![0.1, -0.05, 0.0], 0.5) {
            for x in [[0.1, 0.0, 0.1], [0.3, -0.1, 0.05], [0.0, 0.0, -0.2]] {
                let h = 1e-4;
                let mut fd = 0.0;
                for i in 0..3 {
                    let mut p = x;
                    let mut m = x;
                    p[i] += h;
                    m[i] -= h;
                    fd += (psi.value(&p) - 2.0 * psi.value(&x) + psi.value(&m)) / (h * h);
                }
                let exact = psi.laplacian(&x);
                assert!(
                    (fd - exact).abs() < 1e-4 * (1.0 + exact.abs()),
                    "{}: {fd} vs {exact}",
                    psi.name()
                );
            }
        }
    }

    #[test]
    fn integral_of_cubic_bump() {
        // ∫_{|x|<1} (1 - |x|²)³ dx = 4π ∫_0^1 (1 - s²)³ s² ds = 4π · 16/315
        let psi = TestFunction::new(BumpProfile::Polynomial(3), vec![0.0; 3], 1.0).unwrap();
        let exact = 4.0 * std::f64::consts::PI * 16.0 / 315.0;
        assert!((psi.integral() - exact).abs() < 1e-10);
    }

    #[test]
    fn support_must_be_interior() {
        let psi = TestFunction::new(BumpProfile::Smooth, vec![0.5, 0.0, 0.0], 0.6).unwrap();
        assert!(matches!(
            weak_residual(
                &ball(),
                &Field::from_points(vec![vec![0.0; 3]], vec![1.0], vec![0.0]).unwrap(),
                &|_: &[f64], _| Ok(0.0),
                &[psi],
                0.1
            ),
            Err(Error::Input(_))
        ));
    }

    fn exact_field(h: f64, f: impl Fn(&[f64]) -> f64) -> Field<f64> {
        let g = ball().interior_grid(h).unwrap();
        let v = g.points.iter().map(|p| f(p)).collect();
        Field::from_grid(&g, v, vec![0.0; g.len()]).unwrap()
    }

    #[test]
    fn harmonic_field_residual_is_small_and_first_order() {
        let u = |x: &[f64]| x[0] * x[0] - x[1] * x[1] + 2.0 * x[2];
        let tests = standard_bumps(vec![0.07, 0.03, -0.05], 0.6);
        let coarse = weak_residual(&ball(), &exact_field(0.2, u), &|_: &[f64], _| Ok(0.0), &tests, 0.02).unwrap();
        let fine = weak_residual(&ball(), &exact_field(0.1, u), &|_: &[f64], _| Ok(0.0), &tests, 0.02).unwrap();
        for (c, f) in coarse.iter().zip(&fine) {
            assert!(c.pass && f.pass, "{c:?} {f:?}");
            assert!(f.interpolation_term < 0.6 * c.interpolation_term);
        }
    }

    #[test]
    fn green_potential_of_one_satisfies_weak_identity() {
        // G1 = (1 - |x|²)/3 solves ½Δu = -1
        let u = |x: &[f64]| (1.0 - x.iter().map(|c| c * c).sum::<f64>()) / 3.0;
        let tests = standard_bumps(vec![0.0; 3], 0.7);
        let r = weak_residual(&ball(), &exact_field(0.1, u), &|_: &[f64], _| Ok(-1.0), &tests, 0.025).unwrap();
        for w in &r {
            assert!(w.pass, "{w:?}");
        }
    }
}
