//! The sequence-space counter-example: coordinate-wise gradient descent on
//! `f(x) = sum_i (1/i^2) * phi(x_i)` with `phi(x) = 1 - x` for `x < 0` and
//! `e^{-x}` for `x >= 0`, truncated to finitely many coordinates.
//!
//! Each coordinate obeys the scalar recursion `x <- x + alpha * e^{-x}`
//! (or `x + alpha` on the negative branch), whose iterates from 0 are
//! sandwiched between `log(k+1) + log(alpha)` and `log(k+1) + log 2`. Driving
//! all coordinates at once makes the normalized iterate spread its mass over
//! ever more coordinates, which is the finite-dimensional footprint of the
//! normalized sequence converging to zero coordinate-wise while keeping unit
//! norm.

use serde::Serialize;
use thiserror::Error;

use crate::engine::Operator;

#[derive(Debug, Error, PartialEq)]
pub enum SeqspaceError {
    #[error("step size must lie in (0, 1], got {alpha}")]
    InvalidAlpha { alpha: f64 },
    #[error("operator has {expected} coordinates, input has {got}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("operator needs at least one coordinate")]
    Empty,
}

/// One gradient-descent step of the scalar potential: `x + alpha` for
/// `x < 0`, `x + alpha * e^{-x}` for `x >= 0`. Step sizes outside `(0, 1]`
/// are rejected; non-expansiveness needs them.
pub fn univariate_step(x: f64, alpha: f64) -> Result<f64, SeqspaceError> {
    if !(alpha > 0.0 && alpha <= 1.0) {
        return Err(SeqspaceError::InvalidAlpha { alpha });
    }
    Ok(step_raw(x, alpha))
}

#[inline]
fn step_raw(x: f64, alpha: f64) -> f64 {
    if x < 0.0 {
        x + alpha
    } else {
        // e^{-x} underflows to 0 for huge x; the step then stalls, which is
        // consistent with the asymptotics.
        x + alpha * (-x).exp()
    }
}

/// Sandwich bounds for the scalar recursion started at 0:
/// `log(k+1) + log(alpha) <= x_k <= log(k+1) + log 2`.
pub fn sandwich_bounds(k: u64, alpha: f64) -> (f64, f64) {
    debug_assert!(alpha > 0.0 && alpha <= 1.0);
    let base = ((k + 1) as f64).ln();
    (base + alpha.ln(), base + 2.0_f64.ln())
}

/// The `N`-coordinate truncation of the gradient operator, with step sizes
/// `alpha_i = 1/i^2`.
#[derive(Debug, Clone, Serialize)]
pub struct TruncatedGradientOperator {
    n_coords: usize,
    step_sizes: Vec<f64>,
    #[serde(skip)]
    label: String,
}

impl TruncatedGradientOperator {
    pub fn new(n_coords: usize) -> Result<Self, SeqspaceError> {
        if n_coords == 0 {
            return Err(SeqspaceError::Empty);
        }
        let step_sizes = (1..=n_coords).map(|i| 1.0 / (i * i) as f64).collect();
        Ok(Self {
            n_coords,
            step_sizes,
            label: format!("seqspace(n={n_coords})"),
        })
    }

    pub fn n_coords(&self) -> usize {
        self.n_coords
    }

    /// `alpha_i = 1/i^2`, strictly decreasing, all in `(0, 1]`.
    pub fn step_sizes(&self) -> &[f64] {
        &self.step_sizes
    }

    /// Coordinate-wise step; the output coordinate `i` depends only on input
    /// coordinate `i`.
    pub fn apply_vec(&self, x: &[f64]) -> Result<Vec<f64>, SeqspaceError> {
        if x.len() != self.n_coords {
            return Err(SeqspaceError::DimensionMismatch {
                expected: self.n_coords,
                got: x.len(),
            });
        }
        Ok(x.iter()
            .zip(&self.step_sizes)
            .map(|(&xi, &a)| step_raw(xi, a))
            .collect())
    }
}

impl Operator for TruncatedGradientOperator {
    fn dimension(&self) -> usize {
        self.n_coords
    }

    fn apply(&self, x: &[f64], out: &mut [f64]) {
        for ((o, &xi), &a) in out.iter_mut().zip(x).zip(&self.step_sizes) {
            *o = step_raw(xi, a);
        }
    }

    fn label(&self) -> &str {
        &self.label
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn univariate_step_matches_both_branches() {
        assert_eq!(univariate_step(0.0, 1.0).unwrap(), 1.0);
        let x1 = univariate_step(1.0, 1.0).unwrap();
        assert!((x1 - 1.3678794411714423).abs() < 1e-15); // 1 + e^{-1}
        assert_eq!(univariate_step(-2.0, 0.5).unwrap(), -1.5);
    }

    #[test]
    fn univariate_step_rejects_bad_alpha() {
        for alpha in [0.0, -0.5, 1.5, f64::NAN] {
            assert!(univariate_step(0.0, alpha).is_err(), "alpha = {alpha}");
        }
        assert!(univariate_step(0.0, 1.0).is_ok());
    }

    #[test]
    fn sandwich_bounds_bracket_the_first_iterates() {
        // k = 0: bounds (0, log 2), iterate 0.
        let (lo, hi) = sandwich_bounds(0, 1.0);
        assert_eq!(lo, 0.0);
        assert!((hi - std::f64::consts::LN_2).abs() < 1e-15);
        assert!(lo <= 0.0 && 0.0 <= hi);

        // k = 1: bounds (log 2, log 4), iterate 1.
        let (lo, hi) = sandwich_bounds(1, 1.0);
        assert!((lo - std::f64::consts::LN_2).abs() < 1e-15);
        assert!((hi - 2.0 * std::f64::consts::LN_2).abs() < 1e-15);
        assert!(lo <= 1.0 && 1.0 <= hi);

        // k = 9: bounds (log 10, log 20); x_9 = 2.4420220680493927 computed
        // independently at high precision.
        let mut x = 0.0;
        for _ in 0..9 {
            x = univariate_step(x, 1.0).unwrap();
        }
        assert!((x - 2.4420220680493927).abs() < 1e-14);
        let (lo, hi) = sandwich_bounds(9, 1.0);
        assert!((lo - std::f64::consts::LN_10).abs() < 1e-15);
        assert!((hi - (std::f64::consts::LN_10 + std::f64::consts::LN_2)).abs() < 1e-15);
        assert!(lo <= x && x <= hi);
    }

    #[test]
    fn apply_is_coordinatewise_with_squared_weights() {
        let op = TruncatedGradientOperator::new(3).unwrap();
        let out = op.apply_vec(&[0.0, 0.0, 0.0]).unwrap();
        assert_eq!(out, vec![1.0, 0.25, 1.0 / 9.0]);

        // Separability: perturbing one coordinate leaves the others alone.
        let out2 = op.apply_vec(&[0.0, 5.0, 0.0]).unwrap();
        assert_eq!(out2[0], out[0]);
        assert_eq!(out2[2], out[2]);
        assert_ne!(out2[1], out[1]);
    }

    #[test]
    fn two_steps_of_single_coordinate_compose() {
        let op = TruncatedGradientOperator::new(1).unwrap();
        let x1 = op.apply_vec(&[0.0]).unwrap();
        let x2 = op.apply_vec(&x1).unwrap();
        assert!((x2[0] - 1.3678794411714423).abs() < 1e-15);
    }

    #[test]
    fn apply_rejects_dimension_mismatch() {
        let op = TruncatedGradientOperator::new(4).unwrap();
        assert_eq!(
            op.apply_vec(&[0.0; 3]),
            Err(SeqspaceError::DimensionMismatch {
                expected: 4,
                got: 3
            })
        );
        assert!(TruncatedGradientOperator::new(0).is_err());
    }
}
