//! Generic fixed-point iteration driver: run `x^{k+1} = T(x^k)` for any
//! non-expansive operator, record scheduled snapshots, and extract the
//! cosmic-direction data (normalized iterates, direction clusters, minimal
//! displacement estimates) that describes how the iterates escape to
//! infinity.

mod cosmic;
mod schedule;
mod trajectory;

pub use cosmic::{
    cluster_directions, cosmic_report, directions, min_displacement_estimates, CosmicReport,
    DirectionCluster, DirectionSample, MinDisplacement, DEFAULT_EPS_ANGLE, DEFAULT_MIN_NORM,
};
pub use schedule::Schedule;
pub use trajectory::{iterate, iterate_with, Checkpoint, Trajectory};

use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum EngineError {
    #[error("operator expects dimension {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("at least one iteration is required")]
    ZeroIterations,
    #[error("starting point must be finite")]
    NonFiniteStart,
    #[error("invalid schedule: {0}")]
    InvalidSchedule(String),
    #[error("operator '{label}' exposes no level function; level-crossing schedule unavailable")]
    LevelUnsupported { label: String },
    #[error("starting level {level} already at or below the truncation guard {guard}")]
    StartBeyondGuard { level: f64, guard: f64 },
}

/// A total self-map of `R^d`, declared non-expansive by the caller (the
/// verification checks sample that claim; it is not checkable generically).
///
/// Operators backed by a truncated construction may expose a level function
/// and a guard level below which iterates are no longer trusted; the driver
/// stops there instead of producing garbage.
pub trait Operator {
    fn dimension(&self) -> usize;

    /// Writes `T(x)` into `out`. Both slices have length `dimension()`.
    fn apply(&self, x: &[f64], out: &mut [f64]);

    fn label(&self) -> &str;

    /// Optional scalar level (objective value) at `x`, for operators that
    /// minimize something.
    fn level(&self, _x: &[f64]) -> Option<f64> {
        None
    }

    /// Level at or below which iteration must stop (truncation guard).
    fn level_guard(&self) -> Option<f64> {
        None
    }
}

/// The translation `T(x) = x - v`: a fixed-point-free isometry whose
/// minimal displacement vector is `v` itself. The standard sanity operator:
/// iterates from 0 run along `-v` exactly.
#[derive(Debug, Clone)]
pub struct Translation {
    v: Vec<f64>,
    label: String,
}

impl Translation {
    pub fn new(v: Vec<f64>) -> Self {
        assert!(!v.is_empty() && v.iter().all(|c| c.is_finite()));
        Self {
            label: format!("translation(d={})", v.len()),
            v,
        }
    }

    pub fn displacement(&self) -> &[f64] {
        &self.v
    }
}

impl Operator for Translation {
    fn dimension(&self) -> usize {
        self.v.len()
    }

    fn apply(&self, x: &[f64], out: &mut [f64]) {
        for ((o, &xi), &vi) in out.iter_mut().zip(x).zip(&self.v) {
            *o = xi - vi;
        }
    }

    fn label(&self) -> &str {
        &self.label
    }
}

/// Planar rotation about the origin. Non-expansive (an isometry) but not
/// firmly non-expansive for angles away from 0; used as a control that the
/// firmness check has teeth.
#[derive(Debug, Clone)]
pub struct Rotation2d {
    cos: f64,
    sin: f64,
}

impl Rotation2d {
    pub fn new(angle: f64) -> Self {
        Self {
            cos: angle.cos(),
            sin: angle.sin(),
        }
    }
}

impl Operator for Rotation2d {
    fn dimension(&self) -> usize {
        2
    }

    fn apply(&self, x: &[f64], out: &mut [f64]) {
        out[0] = self.cos * x[0] - self.sin * x[1];
        out[1] = self.sin * x[0] + self.cos * x[1];
    }

    fn label(&self) -> &str {
        "rotation2d"
    }
}

/// Maps the whole space one-to-one into the open unit ball via
/// `x / (1 + ||x||)`; rays to infinity in direction `q` land on the unit
/// sphere at `q`. Used to plot trajectories with their points at infinity.
pub fn ball_map(x: &[f64]) -> Vec<f64> {
    let s = 1.0 / (1.0 + l2_norm(x));
    x.iter().map(|&c| c * s).collect()
}

pub(crate) fn l2_norm(x: &[f64]) -> f64 {
    x.iter().map(|&c| c * c).sum::<f64>().sqrt()
}

pub(crate) fn angle_between(u: &[f64], w: &[f64]) -> f64 {
    let dot: f64 = u.iter().zip(w).map(|(&a, &b)| a * b).sum();
    dot.clamp(-1.0, 1.0).acos()
}
