//! A desk-scale laboratory for fixed-point iterations of non-expansive
//! operators that have no fixed point.
//!
//! Two concrete operators drive everything:
//!
//! * [`prox2d`] — the proximal map of `max{Phi(x), Psi(y)}` for a designed
//!   pair of piecewise-linear potentials. Its iterates walk a curve to
//!   infinity whose normalized directions keep alternating between two
//!   limits, so the normalized sequence never converges.
//! * [`seqspace`] — a coordinate-wise gradient operator with step sizes
//!   `1/i^2`. Every normalized coordinate decays while the normalized iterate
//!   keeps unit norm: the finite truncation of weak-but-not-strong
//!   convergence of the directions to zero.
//!
//! The [`engine`] module iterates any [`engine::Operator`] with checkpoint
//! schedules and extracts cosmic-direction data; [`theorems`] verifies the
//! operator properties and the positive results (separating hyperplane,
//! monotone inner products, pairwise non-negativity, cone inclusion)
//! numerically; [`piecewise`] supplies the exact piecewise-linear calculus
//! underneath.

pub mod engine;
pub mod piecewise;
pub mod prox2d;
pub mod seqspace;
pub mod theorems;

pub use engine::{
    ball_map, cluster_directions, cosmic_report, directions, iterate, iterate_with,
    min_displacement_estimates, CosmicReport, EngineError, Operator, Rotation2d, Schedule,
    Trajectory, Translation,
};
pub use piecewise::{antiderivative, PiecewiseError, PiecewiseLinearConvexFn, StepFunction};
pub use prox2d::{
    analytic_direction, xi, zeta, MaxSeparable2D, PaperParams, Prox2dError, Prox2dOperator,
};
pub use seqspace::{sandwich_bounds, univariate_step, SeqspaceError, TruncatedGradientOperator};
pub use theorems::{
    check_cone_inclusion_2d, check_firmly_nonexpansive, check_monotone_inner, check_nonexpansive,
    check_pairwise_nonneg, check_separating_hyperplane, CheckReport, SampleBox, TheoremsError,
};
