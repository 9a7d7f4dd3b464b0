//! Numerical checks of the analytic hypotheses and solution concepts: the
//! Green-tight norm and Kato modulus, controlled convergence at boundary
//! points, and weak-form residuals.

mod boundary;
mod potential;
mod weak;

pub use boundary::{
    approach_sequence, constant_estimator, control_function_heuristic, controlled_convergence_check, field_estimator,
    harmonic_estimator, ApproachSequence, CcOptions, Classification, Control, ControlFunction, ControlPiece,
    ControlledConvergenceReport, PointEstimator,
};
pub use potential::{
    default_sup_samples, green_tight_norm, kato_modulus, kato_profile, singular_ball_integral, strictly_decreasing,
    KatoLevel, PotentialNorm, CELL_WARNING_FRACTION,
};
pub use weak::{standard_bumps, weak_residual, BumpProfile, TestFunction, WeakResidual};
