//! Monte Carlo solver for semilinear Dirichlet problems `½Δu = F(x, u)` in
//! bounded domains of `R^d`, `d >= 3`, with bounded, possibly discontinuous
//! boundary data.

// `!(a > b)` comparisons are deliberate: they reject NaN
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod cli;
pub mod diagnostics;
pub mod error;
pub mod estimate;
pub mod expr;
pub mod field;
pub mod geometry;
pub mod linear;
pub mod nonlinear;
pub mod problem;
pub mod real;
pub mod sampling;

pub use error::{Error, Result};
pub use estimate::{monte_carlo, monte_carlo_multi, Accumulator, Estimate};
pub use expr::{Bindings, Expr, ExprError, Role};
pub use field::Field;
pub use geometry::{DomainGeometry, Grid, Shape};
pub use linear::{
    field_harmonic_extension, green_kernel, green_potential, harmonic_extension, newtonian_kernel,
    schrodinger_solution, ExitSampler, GreenConstants,
};
pub use nonlinear::{
    contraction_report, lambda_bounds, lipschitz_constant, picard_solve, picard_solve_on, q_of, ContractionReport,
    Init, IterationTrace, LambdaSpace, Operator, PicardOptions,
};
pub use problem::{ProblemFile, ProblemSpec, ValidationReport};
pub use real::Real;
pub use sampling::{
    em_path, feynman_kac_weight, wos_exit, EmConfig, ExitSample, Integrands, PathSample, Purpose, RngStream, StreamKey,
    Streams, WosConfig,
};

pub type Domain = DomainGeometry<f64>;
pub type Domain32 = DomainGeometry<f32>;
pub type Grid64 = Grid<f64>;
pub type Field64 = Field<f64>;
pub type Field32 = Field<f32>;
pub type Estimate64 = Estimate<f64>;
pub type Problem = ProblemSpec<f64>;
pub type Problem32 = ProblemSpec<f32>;
