//! Command-line driver.
//!
//! Exit codes: 0 success, 1 input or runtime error, 2 hypothesis failure,
//! 3 Picard iteration did not converge.

mod output;

use std::path::{Path, PathBuf};
use std::time::Instant;

use clap::{Args, Parser, Subcommand};
use serde::Serialize;

pub use output::{Header, OutDir};

use crate::diagnostics::{
    approach_sequence, controlled_convergence_check, default_sup_samples, green_tight_norm, harmonic_estimator,
    kato_profile, standard_bumps, strictly_decreasing, weak_residual, CcOptions, ControlFunction,
    ControlledConvergenceReport, KatoLevel, PotentialNorm, WeakResidual,
};
use crate::error::{Error, Result};
use crate::estimate::Estimate;
use crate::field::Field;
use crate::linear::{field_harmonic_extension, ExitSampler};
use crate::nonlinear::{picard_solve, solver_grid, Init, IterationTrace, Operator, PicardOptions};
use crate::problem::{ProblemFile, ProblemSpec, ValidationReport};
use crate::sampling::{EmConfig, Purpose, Streams};

pub const EXIT_OK: i32 = 0;
pub const EXIT_INPUT: i32 = 1;
pub const EXIT_HYPOTHESIS: i32 = 2;
pub const EXIT_NO_CONVERGENCE: i32 = 3;

/// Stream epoch of the fresh-seed fixed-point residual check.
const RESIDUAL_EPOCH: u64 = 1 << 40;

#[derive(Debug, Parser)]
#[command(
    name = "semilinear",
    version,
    about = "Monte Carlo solver for semilinear Dirichlet problems ½Δu = F(x, u)"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Audit the hypotheses of a problem file.
    Validate(RunArgs),
    /// Solve by Picard iteration; writes solution.csv, trace.jsonl, summary.jsonl.
    Solve(RunArgs),
    /// Harmonic extension of phi on the grid (F ignored); writes linear.csv.
    Linear(RunArgs),
    /// Boundary, weak-form and potential diagnostics.
    Diagnose {
        #[command(flatten)]
        run: RunArgs,
        /// Solution field CSV; solved on the fly when absent.
        #[arg(long)]
        field: Option<PathBuf>,
    },
}

#[derive(Debug, Clone, Args)]
pub struct RunArgs {
    #[arg(long)]
    pub problem: PathBuf,
    #[arg(long, default_value = ".")]
    pub out: PathBuf,
    #[arg(long)]
    pub seed: Option<u64>,
    /// Worker threads; does not affect results.
    #[arg(long)]
    pub threads: Option<usize>,
    #[arg(long)]
    pub grid_h: Option<f64>,
    #[arg(long)]
    pub paths: Option<usize>,
    #[arg(long)]
    pub dt: Option<f64>,
    #[arg(long)]
    pub tol: Option<f64>,
    #[arg(long)]
    pub max_iter: Option<usize>,
    /// Proceed even when hypotheses fail; results are marked outside the guarantee.
    #[arg(long)]
    pub force: bool,
}

impl RunArgs {
    fn apply(&self, file: &mut ProblemFile) {
        let s = &mut file.solver;
        if let Some(v) = self.seed {
            s.seed = v;
        }
        if let Some(v) = self.grid_h {
            s.grid_h = v;
        }
        if let Some(v) = self.paths {
            s.paths = v;
        }
        if let Some(v) = self.dt {
            s.dt = Some(v);
        }
        if let Some(v) = self.tol {
            s.tol = v;
        }
        if let Some(v) = self.max_iter {
            s.max_iter = v;
        }
    }
}

struct Context {
    problem: ProblemSpec<f64>,
    header_bytes: Vec<u8>,
    args: RunArgs,
    out: OutDir,
}

impl Context {
    fn load(args: &RunArgs) -> Result<Self> {
        let bytes = std::fs::read(&args.problem)
            .map_err(|e| Error::from(e).context(format!("reading {}", args.problem.display())))?;
        let text = String::from_utf8(bytes.clone()).map_err(|_| Error::input("problem file is not UTF-8"))?;
        let mut file = ProblemFile::from_toml(&text).map_err(|e| e.context(args.problem.display().to_string()))?;
        args.apply(&mut file);
        let problem = ProblemSpec::from_file(file)?;
        Ok(Context {
            problem,
            header_bytes: bytes,
            args: args.clone(),
            out: OutDir::create(&args.out)?,
        })
    }

    fn header(&self, command: &str) -> Header {
        Header::new(command, &self.header_bytes, &self.problem.file, self.args.force)
    }
}

/// Parses the process arguments, runs, and returns the exit code.
pub fn main() -> i32 {
    run(Cli::parse())
}

pub fn run(cli: Cli) -> i32 {
    let threads = match &cli.command {
        Command::Validate(a) | Command::Solve(a) | Command::Linear(a) => a.threads,
        Command::Diagnose { run, .. } => run.threads,
    };
    let pool = match rayon::ThreadPoolBuilder::new()
        .num_threads(threads.unwrap_or(0))
        .build()
    {
        Ok(p) => p,
        Err(e) => {
            eprintln!("error: cannot start worker pool: {e}");
            return EXIT_INPUT;
        }
    };
    let result = pool.install(|| match &cli.command {
        Command::Validate(a) => run_validate(a),
        Command::Solve(a) => run_solve(a),
        Command::Linear(a) => run_linear(a),
        Command::Diagnose { run, field } => run_diagnose(run, field.as_deref()),
    });
    match result {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            match e.root() {
                Error::Hypothesis(_) => EXIT_HYPOTHESIS,
                _ => EXIT_INPUT,
            }
        }
    }
}

#[derive(Serialize)]
#[serde(tag = "record", rename_all = "snake_case")]
enum ValidationRecord<'a> {
    Check(&'a crate::problem::Check),
    Summary {
        passed: bool,
        audit_seed: u64,
        audit_samples: usize,
        boundary_samples: usize,
        lambda: &'a Option<crate::nonlinear::LambdaSpace>,
        lipschitz: &'a Option<crate::nonlinear::LipschitzEstimate>,
        contraction: &'a Option<crate::nonlinear::ContractionReport>,
    },
}

fn write_validation(ctx: &Context, report: &ValidationReport) -> Result<()> {
    let mut records: Vec<ValidationRecord> = report.checks.iter().map(ValidationRecord::Check).collect();
    records.push(ValidationRecord::Summary {
        passed: report.passed,
        audit_seed: report.audit_seed,
        audit_samples: report.audit_samples,
        boundary_samples: report.boundary_samples,
        lambda: &report.lambda,
        lipschitz: &report.lipschitz,
        contraction: &report.contraction,
    });
    ctx.out
        .write_records("validation.jsonl", &ctx.header("validate"), &records)?;
    Ok(())
}

fn print_checks(report: &ValidationReport) {
    for c in &report.checks {
        let mark = if c.passed { "ok  " } else { "FAIL" };
        match &c.witness {
            Some(w) => println!("{mark} {}: {} (witness {w:?})", c.name, c.detail),
            None => println!("{mark} {}: {}", c.name, c.detail),
        }
    }
}

fn run_validate(args: &RunArgs) -> Result<i32> {
    let ctx = Context::load(args)?;
    let report = ctx.problem.validate()?;
    write_validation(&ctx, &report)?;
    print_checks(&report);
    Ok(if report.passed { EXIT_OK } else { EXIT_HYPOTHESIS })
}

/// Validation gate followed by Picard iteration.
struct Solved<'a> {
    operator: Operator<'a, f64>,
    field: Field<f64>,
    trace: IterationTrace,
}

fn gate(
    ctx: &Context,
) -> Result<
    Option<(
        ValidationReport,
        crate::nonlinear::LambdaSpace,
        crate::nonlinear::ContractionReport,
    )>,
> {
    let report = ctx.problem.validate()?;
    write_validation(ctx, &report)?;
    if !report.passed {
        print_checks(&report);
        if !ctx.args.force {
            eprintln!("error: hypotheses fail; rerun with --force to proceed outside the guarantee");
            return Ok(None);
        }
        eprintln!("WARNING: hypotheses fail; results are outside the convergence guarantee");
    }
    match (report.lambda.clone(), report.contraction.clone()) {
        (Some(l), Some(c)) => Ok(Some((report, l, c))),
        _ => Err(Error::hypothesis("the order interval could not be constructed")),
    }
}

fn solve<'a>(ctx: &'a Context) -> Result<Option<Solved<'a>>> {
    let Some((_, lambda, contraction)) = gate(ctx)? else {
        return Ok(None);
    };
    let p = &ctx.problem;
    let em = EmConfig::for_domain(&p.domain)
        .with_dt(p.dt())
        .with_bridge(p.file.solver.bridge);
    let operator = Operator::new(p, lambda, contraction, em, p.seed(), ctx.args.force)?;
    let grid = solver_grid(p)?;
    let (field, trace) = picard_solve(&operator, &grid, Init::Upper, &PicardOptions::from_problem(p))?;
    Ok(Some(Solved { operator, field, trace }))
}

#[derive(Serialize)]
struct SolveSummary {
    c_tilde: f64,
    m: f64,
    m_tilde: f64,
    grid_points: usize,
    iterations: usize,
    converged: bool,
    outside_guarantee: bool,
    final_sup_diff: Option<f64>,
    stopping_threshold: Option<f64>,
    /// `‖T u - u‖` on the grid with fresh streams.
    fixed_point_residual: f64,
    residual_threshold: f64,
    /// Grid-resolution continuity statistics; not a continuity certificate.
    continuity: crate::field::NeighbourJumps,
}

fn run_solve(args: &RunArgs) -> Result<i32> {
    let start = Instant::now();
    let ctx = Context::load(args)?;
    let Some(s) = solve(&ctx)? else {
        return Ok(EXIT_HYPOTHESIS);
    };
    let header = ctx.header("solve");
    ctx.out.write_field("solution.csv", &header, &s.field)?;
    ctx.out.write_records("trace.jsonl", &header, &s.trace.records)?;
    let n_last = s
        .trace
        .records
        .last()
        .map(|r| r.paths)
        .unwrap_or(ctx.problem.file.solver.paths);
    let check = s.operator.apply(&s.field, n_last, RESIDUAL_EPOCH)?;
    let summary = SolveSummary {
        c_tilde: s.operator.contraction.c_tilde,
        m: s.operator.lambda.m,
        m_tilde: s.operator.lambda.m_tilde,
        grid_points: s.field.len(),
        iterations: s.trace.iterations,
        converged: s.trace.converged,
        outside_guarantee: s.trace.outside_guarantee,
        final_sup_diff: s.trace.records.last().map(|r| r.sup_diff),
        stopping_threshold: s.trace.final_threshold(),
        fixed_point_residual: check.field.sup_diff(&s.field),
        residual_threshold: ctx
            .problem
            .file
            .solver
            .tol
            .max(3.0 * check.field.max_combined_stderr(&s.field)),
        continuity: s.field.neighbour_jumps(),
    };
    ctx.out.write_records("summary.jsonl", &header, &[&summary])?;
    println!(
        "{} after {} iterations (C~ = {:.4}, residual {:.3e}); wall time {:.2} s",
        if s.trace.converged {
            "converged"
        } else {
            "NOT converged"
        },
        s.trace.iterations,
        summary.c_tilde,
        summary.fixed_point_residual,
        start.elapsed().as_secs_f64()
    );
    Ok(if s.trace.converged {
        EXIT_OK
    } else {
        EXIT_NO_CONVERGENCE
    })
}

fn run_linear(args: &RunArgs) -> Result<i32> {
    let ctx = Context::load(args)?;
    let p = &ctx.problem;
    let grid = solver_grid(p)?;
    let phi = |y: &[f64]| p.eval_phi(y);
    let field = field_harmonic_extension(
        &p.domain,
        &phi,
        &grid.points,
        p.file.solver.paths,
        &ExitSampler::wos(&p.domain),
        &Streams::new(p.seed(), Purpose::ExitPoint),
    )?;
    ctx.out.write_field("linear.csv", &ctx.header("linear"), &field)?;
    println!("wrote {}", ctx.out.path("linear.csv").display());
    Ok(EXIT_OK)
}

#[derive(Serialize)]
#[serde(tag = "record", rename_all = "snake_case")]
enum PotentialRecord {
    GreenTightNorm(PotentialNorm),
    KatoProfile {
        levels: Vec<KatoLevel>,
        strictly_decreasing: bool,
    },
}

fn load_field(path: &Path) -> Result<Field<f64>> {
    let f = std::fs::File::open(path).map_err(|e| Error::input(format!("field file {}: {e}", path.display())))?;
    Field::read_csv(std::io::BufReader::new(f)).map_err(|e| e.context(path.display().to_string()))
}

fn run_diagnose(args: &RunArgs, field_path: Option<&Path>) -> Result<i32> {
    let ctx = Context::load(args)?;
    let p = &ctx.problem;
    let diag = &p.file.diagnostics;
    let header = ctx.header("diagnose");

    let (operator, u) = match field_path {
        Some(path) => {
            let u = load_field(path)?;
            let Some((_, lambda, contraction)) = gate(&ctx)? else {
                return Ok(EXIT_HYPOTHESIS);
            };
            let em = EmConfig::for_domain(&p.domain)
                .with_dt(p.dt())
                .with_bridge(p.file.solver.bridge);
            (Operator::new(p, lambda, contraction, em, p.seed(), ctx.args.force)?, u)
        }
        None => match solve(&ctx)? {
            Some(s) => (s.operator, s.field),
            None => return Ok(EXIT_HYPOTHESIS),
        },
    };

    // controlled convergence of u = Tu along approach sequences
    let mut targets = diag.sequences.targets.clone();
    let random = if targets.is_empty() && diag.sequences.random == 0 {
        8
    } else {
        diag.sequences.random
    };
    let mut rng = Streams::new(p.seed(), Purpose::Sequence).replicate(0).rng();
    for _ in 0..random {
        targets.push(p.domain.sample_boundary(&mut rng)?);
    }
    let sequences = targets
        .iter()
        .map(|y| approach_sequence(&p.domain, y, &diag.sequences))
        .collect::<Result<Vec<_>>>()?;
    let h = |x: &[f64], i: u64| -> Result<Estimate<f64>> {
        Ok(operator.estimate_at(&u, &[x.to_vec()], diag.paths, RESIDUAL_EPOCH + 1 + i)?[0])
    };
    let g = ControlFunction::new(
        diag.discontinuity_set.clone(),
        diag.control_exponent,
        diag.control_cap,
        p.dim(),
    )?;
    let gf = |y: &[f64]| Ok(g.eval(y));
    let k = harmonic_estimator(
        &p.domain,
        &gf,
        diag.paths,
        ExitSampler::wos(&p.domain),
        Streams::new(p.seed(), Purpose::Control),
    );
    let options = CcOptions {
        tolerance: diag.tolerance,
        k_threshold: diag.k_threshold,
        ..CcOptions::default()
    };
    let phi = |y: &[f64]| p.eval_phi(y);
    let reports: Vec<ControlledConvergenceReport> =
        controlled_convergence_check(&p.domain, &h, &k, &phi, &sequences, &options)?;
    ctx.out
        .write_records("controlled_convergence.jsonl", &header, &reports)?;

    // weak residuals against bumps around the centre
    let centre = p.domain.lattice_origin();
    let depth = -p.domain.signed_distance(&centre)?;
    let tests = standard_bumps(centre, 0.6 * depth);
    let weak_h = diag.weak_h.unwrap_or(p.file.solver.grid_h / 4.0);
    let source = |x: &[f64], v: f64| p.eval_f(x, v);
    let residuals: Vec<WeakResidual> = weak_residual(&p.domain, &u, &source, &tests, weak_h)?;
    ctx.out.write_records("weak_residuals.jsonl", &header, &residuals)?;

    // Green-tight norm and Kato profile of U
    let ub = |x: &[f64]| p.eval_u_bound(x);
    let samples = default_sup_samples(&p.domain)?;
    let norm = green_tight_norm(&p.domain, &ub, p.norm_spacing(), &samples)?;
    let levels = kato_profile(&p.domain, &ub, diag.kato_alpha, diag.kato_levels, &samples)?;
    let decreasing = strictly_decreasing(&levels);
    ctx.out.write_records(
        "potential.jsonl",
        &header,
        &[
            PotentialRecord::GreenTightNorm(norm),
            PotentialRecord::KatoProfile {
                levels,
                strictly_decreasing: decreasing,
            },
        ],
    )?;

    let passed = reports.iter().filter(|r| r.pass).count();
    println!("controlled convergence: {passed}/{} sequences pass", reports.len());
    for r in &reports {
        println!(
            "  {:?} {:?} tail error {:.3e} {}",
            r.boundary_point,
            r.classification,
            r.tail_error,
            if r.pass { "pass" } else { "FAIL" }
        );
    }
    for w in &residuals {
        println!(
            "weak residual {}: {:.3e} (budget {:.3e}) {}",
            w.test_function,
            w.residual,
            w.budget,
            if w.pass { "pass" } else { "FAIL" }
        );
    }
    println!("Kato profile strictly decreasing: {decreasing}");
    Ok(EXIT_OK)
}
