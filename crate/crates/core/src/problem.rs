//! Problem files: domain, nonlinearity `F(x, u)`, bound `U(x)`, boundary data
//! `phi`, the upper end `b` of the admissible range of `u`, and solver and
//! diagnostics settings.
//!
//! The file is TOML with a strict schema; unknown keys are rejected. A minimal file:
//!
//! ```toml
//! dimension = 3
//! F = "u^2"
//! U = "2"
//! phi = "1"
//! b = 2.0
//!
//! [domain]
//! shape = "ball"
//! radius = 1.0
//! ```

use std::path::Path;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::diagnostics::ControlPiece;
use crate::error::{Error, Result};
use crate::expr::{Expr, Role};
use crate::geometry::DomainGeometry;
use crate::nonlinear::{
    contraction_report, lambda_bounds, lipschitz_constant, ContractionReport, LambdaSpace, LipschitzEstimate,
};
use crate::real::Real;
use crate::sampling::{Purpose, Streams};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "shape", rename_all = "lowercase", deny_unknown_fields)]
pub enum DomainSpec {
    Ball {
        #[serde(default, skip_serializing_if = "Option::is_none")]
        center: Option<Vec<f64>>,
        #[serde(default = "one")]
        radius: f64,
    },
    Box {
        lo: Vec<f64>,
        hi: Vec<f64>,
    },
    Annulus {
        #[serde(default, skip_serializing_if = "Option::is_none")]
        center: Option<Vec<f64>>,
        r_in: f64,
        r_out: f64,
    },
    Implicit {
        /// Signed distance in `x1..xd`, negative inside.
        sdf: String,
        /// Radius of an origin-centred ball containing the domain.
        enclosing_radius: f64,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        tolerance: Option<f64>,
    },
}

fn one() -> f64 {
    1.0
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SolverSpec {
    /// Spacing of the interior evaluation grid.
    pub grid_h: f64,
    /// Paths per grid point in the first Picard iteration.
    pub paths: usize,
    /// Euler–Maruyama time step; `1e-4·R²` when absent.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub dt: Option<f64>,
    pub tol: f64,
    pub max_iter: usize,
    pub seed: u64,
    /// Factor applied to the path count after every iteration.
    pub growth: f64,
    /// Brownian-bridge exit test.
    pub bridge: bool,
    /// Relative widening of the sampled `[inf phi, sup phi]`.
    pub safety: f64,
    /// Quadrature spacing for the Green-tight norm of `U`; `R/20` when absent.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub norm_h: Option<f64>,
    pub audit_samples: usize,
    pub boundary_samples: usize,
}

impl Default for SolverSpec {
    fn default() -> Self {
        SolverSpec {
            grid_h: 0.5,
            paths: 1000,
            dt: None,
            tol: 1e-3,
            max_iter: 15,
            seed: 1,
            growth: 1.0,
            bridge: false,
            safety: 0.0,
            norm_h: None,
            audit_samples: 10_000,
            boundary_samples: 10_000,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Approach {
    /// Along the segment from the lattice centre to the boundary point.
    Radial,
    /// Along the inward normal.
    Normal,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SequenceSpec {
    pub terms: usize,
    pub decay: f64,
    /// First distance to the boundary, as a fraction of `R`.
    pub start: f64,
    pub approach: Approach,
    /// Boundary points to approach.
    pub targets: Vec<Vec<f64>>,
    /// Additional uniformly drawn boundary points.
    pub random: usize,
}

impl Default for SequenceSpec {
    fn default() -> Self {
        SequenceSpec {
            terms: 12,
            decay: 0.5,
            start: 0.5,
            approach: Approach::Radial,
            targets: Vec::new(),
            random: 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct DiagnosticsSpec {
    pub discontinuity_set: Vec<ControlPiece>,
    pub sequences: SequenceSpec,
    pub tolerance: f64,
    pub k_threshold: f64,
    pub control_exponent: f64,
    pub control_cap: f64,
    /// Walks per point for harmonic extensions along sequences.
    pub paths: usize,
    pub kato_alpha: f64,
    pub kato_levels: usize,
    /// Quadrature spacing for weak residuals; `grid_h/4` when absent.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub weak_h: Option<f64>,
}

impl Default for DiagnosticsSpec {
    fn default() -> Self {
        DiagnosticsSpec {
            discontinuity_set: Vec::new(),
            sequences: SequenceSpec::default(),
            tolerance: 0.05,
            k_threshold: 1e3,
            control_exponent: 1.0,
            control_cap: 1e6,
            paths: 4000,
            kato_alpha: 0.4,
            kato_levels: 4,
            weak_h: None,
        }
    }
}

/// Serialized form of a problem.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProblemFile {
    pub dimension: usize,
    pub domain: DomainSpec,
    #[serde(rename = "F")]
    pub f: String,
    #[serde(rename = "U")]
    pub u: String,
    pub phi: String,
    /// Upper end of the range of `u`; `+inf` when absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub b: Option<f64>,
    /// Known solution, for testing.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub reference: Option<String>,
    #[serde(default)]
    pub solver: SolverSpec,
    #[serde(default)]
    pub diagnostics: DiagnosticsSpec,
}

impl ProblemFile {
    pub fn from_toml(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| Error::input(format!("problem file: {}", e.to_string().trim_end())))
    }

    pub fn to_toml(&self) -> Result<String> {
        toml::to_string(self).map_err(|e| Error::input(format!("cannot serialize problem: {e}")))
    }
}

/// A fully constructed problem instance.
#[derive(Debug, Clone)]
pub struct ProblemSpec<S> {
    pub file: ProblemFile,
    pub domain: DomainGeometry<S>,
    pub f: Expr,
    pub u_bound: Expr,
    pub phi: Expr,
    pub b: f64,
    pub reference: Option<Expr>,
}

fn parse_expr(source: &str, role: Role, dim: usize, key: &str) -> Result<Expr> {
    Expr::parse(source, role, dim).map_err(|e| Error::from(e).context(format!("key `{key}`")))
}

fn lit_vec<S: Real>(v: &[f64]) -> Vec<S> {
    v.iter().map(|&c| S::lit(c)).collect()
}

fn check_len(v: &[f64], dim: usize, key: &str) -> Result<()> {
    if v.len() != dim {
        return Err(Error::input(format!(
            "key `{key}` has {} entries, expected {dim}",
            v.len()
        )));
    }
    Ok(())
}

impl<S: Real> ProblemSpec<S> {
    pub fn from_file(file: ProblemFile) -> Result<Self> {
        let d = file.dimension;
        if d < 3 {
            return Err(Error::input(format!("key `dimension`: need d >= 3, got {d}")));
        }
        let domain = match &file.domain {
            DomainSpec::Ball { center, radius } => {
                let c = center.clone().unwrap_or_else(|| vec![0.0; d]);
                check_len(&c, d, "domain.center")?;
                DomainGeometry::ball(lit_vec(&c), S::lit(*radius))?
            }
            DomainSpec::Box { lo, hi } => {
                check_len(lo, d, "domain.lo")?;
                check_len(hi, d, "domain.hi")?;
                DomainGeometry::cuboid(lit_vec(lo), lit_vec(hi))?
            }
            DomainSpec::Annulus { center, r_in, r_out } => {
                let c = center.clone().unwrap_or_else(|| vec![0.0; d]);
                check_len(&c, d, "domain.center")?;
                DomainGeometry::annulus(lit_vec(&c), S::lit(*r_in), S::lit(*r_out))?
            }
            DomainSpec::Implicit {
                sdf,
                enclosing_radius,
                tolerance,
            } => DomainGeometry::implicit(
                parse_expr(sdf, Role::Domain, d, "domain.sdf")?,
                Some(S::lit(*enclosing_radius)),
                tolerance.map(S::lit),
            )?,
        };
        let b = file.b.unwrap_or(f64::INFINITY);
        if !(b > 0.0) {
            return Err(Error::input("key `b` must be positive"));
        }
        let s = &file.solver;
        if !(s.grid_h > 0.0)
            || s.paths < 2
            || !(s.tol >= 0.0)
            || !(s.growth >= 1.0)
            || !(s.safety >= 0.0 && s.safety < 1.0)
        {
            return Err(Error::input(
                "solver settings: need grid_h > 0, paths >= 2, tol >= 0, growth >= 1, 0 <= safety < 1",
            ));
        }
        if s.dt.is_some_and(|dt| !(dt > 0.0)) {
            return Err(Error::input("key `solver.dt` must be positive"));
        }
        Ok(ProblemSpec {
            f: parse_expr(&file.f, Role::F, d, "F")?,
            u_bound: parse_expr(&file.u, Role::U, d, "U")?,
            phi: parse_expr(&file.phi, Role::Phi, d, "phi")?,
            reference: file
                .reference
                .as_deref()
                .map(|r| parse_expr(r, Role::U, d, "reference"))
                .transpose()?,
            domain,
            b,
            file,
        })
    }

    pub fn from_toml(text: &str) -> Result<Self> {
        Self::from_file(ProblemFile::from_toml(text)?)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text =
            std::fs::read_to_string(path).map_err(|e| Error::from(e).context(format!("reading {}", path.display())))?;
        Self::from_toml(&text).map_err(|e| e.context(path.display().to_string()))
    }

    /// Writes the canonical form (all defaults filled in).
    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        std::fs::write(path, self.file.to_toml()?)?;
        Ok(())
    }

    pub fn dim(&self) -> usize {
        self.file.dimension
    }

    pub fn eval_f(&self, x: &[S], u: S) -> Result<S> {
        Ok(self.f.eval_at(x, Some(u))?)
    }

    pub fn eval_u_bound(&self, x: &[S]) -> Result<S> {
        Ok(self.u_bound.eval_at(x, None)?)
    }

    pub fn eval_phi(&self, y: &[S]) -> Result<S> {
        Ok(self.phi.eval_at(y, None)?)
    }

    pub fn seed(&self) -> u64 {
        self.file.solver.seed
    }

    /// Euler–Maruyama step in effect.
    pub fn dt(&self) -> S {
        let r = self.domain.enclosing_ball();
        self.file.solver.dt.map(S::lit).unwrap_or(S::lit(1e-4) * r * r)
    }

    /// Quadrature spacing for the Green-tight norm of `U`.
    pub fn norm_spacing(&self) -> S {
        self.file
            .solver
            .norm_h
            .map(S::lit)
            .unwrap_or(self.domain.enclosing_ball() / S::lit(20.0))
    }

    /// Uniform point of `D` by rejection from the bounding box.
    pub fn sample_interior<R: Rng + ?Sized>(&self, rng: &mut R) -> Result<Vec<S>> {
        let (lo, hi) = self.domain.bounding_box();
        for _ in 0..1_000_000 {
            let p: Vec<S> = lo
                .iter()
                .zip(&hi)
                .map(|(a, b)| *a + (*b - *a) * S::unit_uniform(rng))
                .collect();
            if self.domain.contains(&p)? {
                return Ok(p);
            }
        }
        Err(Error::numerical("could not draw an interior point"))
    }

    /// Runs the hypothesis audits and the contraction gate.
    pub fn validate(&self) -> Result<ValidationReport> {
        validate(self)
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct Check {
    pub name: String,
    pub passed: bool,
    pub detail: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub witness: Option<Vec<f64>>,
}

impl Check {
    fn pass(name: &str, detail: String) -> Self {
        Check {
            name: name.into(),
            passed: true,
            detail,
            witness: None,
        }
    }

    fn fail(name: &str, detail: String, witness: Option<Vec<f64>>) -> Self {
        Check {
            name: name.into(),
            passed: false,
            detail,
            witness,
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct ValidationReport {
    pub passed: bool,
    pub audit_seed: u64,
    pub audit_samples: usize,
    pub boundary_samples: usize,
    pub checks: Vec<Check>,
    pub lambda: Option<LambdaSpace>,
    pub lipschitz: Option<LipschitzEstimate>,
    pub contraction: Option<ContractionReport>,
}

impl ValidationReport {
    /// Names of the failed checks.
    pub fn failures(&self) -> Vec<&str> {
        self.checks
            .iter()
            .filter(|c| !c.passed)
            .map(|c| c.name.as_str())
            .collect()
    }
}

fn to_f64s<S: Real>(p: &[S]) -> Vec<f64> {
    p.iter().map(|c| c.to_f64_lossy()).collect()
}

fn validate<S: Real>(p: &ProblemSpec<S>) -> Result<ValidationReport> {
    let seed = p.seed();
    let n_audit = p.file.solver.audit_samples;
    let n_boundary = p.file.solver.boundary_samples;
    let mut rng = Streams::new(seed, Purpose::Audit).replicate(0).rng();
    let mut checks = Vec::new();

    // boundary data: phi >= 0 and the range of u used for the F audit
    let mut phi_min: Option<(f64, Vec<f64>)> = None;
    let mut phi_max = 0.0f64;
    for _ in 0..n_boundary {
        let y = p.domain.sample_boundary(&mut rng)?;
        let v = p
            .eval_phi(&y)
            .map_err(|e| e.context(format!("phi at {:?}", to_f64s(&y))))?
            .to_f64_lossy();
        if !v.is_finite() {
            checks.push(Check::fail("phi bounded", format!("phi = {v}"), Some(to_f64s(&y))));
            break;
        }
        phi_max = phi_max.max(v.abs());
        if phi_min.as_ref().is_none_or(|(m, _)| v < *m) {
            phi_min = Some((v, to_f64s(&y)));
        }
    }
    match &phi_min {
        Some((m, w)) if *m < 0.0 => checks.push(Check::fail("phi >= 0", format!("phi = {m} < 0"), Some(w.clone()))),
        _ => checks.push(Check::pass("phi >= 0", format!("{n_boundary} boundary samples"))),
    }

    // U > 0 and 0 <= F(x, u) <= U(x) u on D × (0, b)
    let u_top = if p.b.is_finite() { p.b } else { (2.0 * phi_max).max(1.0) };
    let mut u_positive = None;
    let mut f_nonneg = None;
    let mut f_bounded = None;
    for _ in 0..n_audit {
        let x = p.sample_interior(&mut rng)?;
        let ux = p
            .eval_u_bound(&x)
            .map_err(|e| e.context(format!("U at {:?}", to_f64s(&x))))?;
        if u_positive.is_none() && !(ux > S::zero()) {
            u_positive = Some((format!("U = {ux}"), to_f64s(&x)));
        }
        // open interval (0, u_top)
        let t = S::unit_uniform(&mut rng).max(S::epsilon());
        let u = S::lit(u_top) * t;
        let f = p
            .eval_f(&x, u)
            .map_err(|e| e.context(format!("F at x = {:?}, u = {u}", to_f64s(&x))))?;
        let mut w = to_f64s(&x);
        w.push(u.to_f64_lossy());
        if f_nonneg.is_none() && !(f >= S::zero()) {
            f_nonneg = Some((format!("F = {f} at u = {u}"), w.clone()));
        }
        let bound = ux * u;
        let slack = S::lit(1e-12) * (S::one() + bound.abs());
        if f_bounded.is_none() && !(f <= bound + slack) {
            f_bounded = Some((format!("F = {f} > U·u = {bound}"), w));
        }
    }
    for (name, found) in [("U > 0", u_positive), ("F >= 0", f_nonneg), ("F <= U u", f_bounded)] {
        checks.push(match found {
            Some((detail, w)) => Check::fail(name, detail, Some(w)),
            None => Check::pass(name, format!("{n_audit} samples, u in (0, {u_top})")),
        });
    }

    let mut report = ValidationReport {
        passed: false,
        audit_seed: seed,
        audit_samples: n_audit,
        boundary_samples: n_boundary,
        checks,
        lambda: None,
        lipschitz: None,
        contraction: None,
    };
    let lambda = match lambda_bounds(p) {
        Ok(l) => l,
        Err(e) if matches!(e.root(), Error::Hypothesis(_)) => {
            report.checks.push(Check::fail("lambda space", e.to_string(), None));
            return Ok(report);
        }
        Err(e) => return Err(e),
    };
    report.checks.push(Check::pass(
        "lambda space",
        format!(
            "gamma0 = {}, sup phi = {}, beta = {}, m = {}",
            lambda.gamma0, lambda.m_tilde, lambda.beta, lambda.m
        ),
    ));
    let lip = lipschitz_constant(p, &lambda)?;
    let report_c = contraction_report(p, &lambda, lip.value);
    report.checks.push(if report_c.condition_ok {
        Check::pass("contraction", format!("C~ = sup phi·C·R²/d = {} < 1", report_c.c_tilde))
    } else {
        Check::fail(
            "contraction",
            format!(
                "sup phi < d/(R² C) fails: sup phi = {}, d/(R² C) = {}, C~ = {}",
                lambda.m_tilde,
                report_c.phi_limit(),
                report_c.c_tilde
            ),
            Some(lip.argmax.clone()),
        )
    });
    report.passed = report.checks.iter().all(|c| c.passed);
    report.lambda = Some(lambda);
    report.lipschitz = Some(lip);
    report.contraction = Some(report_c);
    Ok(report)
}
