//! Exact calculus for piecewise-constant derivatives and their piecewise-linear
//! convex antiderivatives.
//!
//! A [`StepFunction`] is a nondecreasing step function with values in `[-1, 0)`;
//! its antiderivative (normalized so that `F(0) = 0`) is a strictly decreasing,
//! convex, 1-Lipschitz [`PiecewiseLinearConvexFn`]. Evaluation, inversion,
//! subgradients, and the one-dimensional proximal operator are all exact up to
//! floating-point rounding: every operation reduces to binary search over the
//! knot array followed by one affine formula.

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Relative tolerance for the knot-value/slope consistency invariant.
const CONSISTENCY_RTOL: f64 = 1e-12;

#[derive(Debug, Error, PartialEq)]
pub enum PiecewiseError {
    #[error("value list must be non-empty")]
    EmptyValues,
    #[error("expected {expected} values for {breakpoints} breakpoints, got {got}")]
    LengthMismatch {
        breakpoints: usize,
        expected: usize,
        got: usize,
    },
    #[error("breakpoints must be strictly ascending (violated at index {index})")]
    NotAscending { index: usize },
    #[error("value {value} at index {index} outside [-1, 0)")]
    ValueOutOfRange { index: usize, value: f64 },
    #[error("values must be nondecreasing (violated at index {index})")]
    NotMonotone { index: usize },
    #[error("all inputs must be finite")]
    NonFinite,
    #[error(
        "knot values inconsistent with slopes near knot {index}: expected {expected}, got {got}"
    )]
    InconsistentKnotValues {
        index: usize,
        expected: f64,
        got: f64,
    },
    #[error("target {t} outside represented range [{min}, {max}]")]
    OutOfRange { t: f64, min: f64, max: f64 },
}

/// A nondecreasing piecewise-constant function with values in `[-1, 0)`.
///
/// With breakpoints `b_1 < ... < b_m`, value `values[j]` applies on
/// `[b_j, b_{j+1})`, where `b_0 = -inf` and `b_{m+1} = +inf`. The value list
/// therefore has one more entry than the breakpoint list.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawStepFunction")]
pub struct StepFunction {
    breakpoints: Vec<f64>,
    values: Vec<f64>,
}

#[derive(Deserialize)]
struct RawStepFunction {
    breakpoints: Vec<f64>,
    values: Vec<f64>,
}

impl TryFrom<RawStepFunction> for StepFunction {
    type Error = PiecewiseError;
    fn try_from(raw: RawStepFunction) -> Result<Self, Self::Error> {
        StepFunction::new(raw.breakpoints, raw.values)
    }
}

impl StepFunction {
    /// Validates and builds a step function.
    pub fn new(breakpoints: Vec<f64>, values: Vec<f64>) -> Result<Self, PiecewiseError> {
        if values.is_empty() {
            return Err(PiecewiseError::EmptyValues);
        }
        if values.len() != breakpoints.len() + 1 {
            return Err(PiecewiseError::LengthMismatch {
                breakpoints: breakpoints.len(),
                expected: breakpoints.len() + 1,
                got: values.len(),
            });
        }
        if breakpoints
            .iter()
            .chain(values.iter())
            .any(|v| !v.is_finite())
        {
            return Err(PiecewiseError::NonFinite);
        }
        for (i, w) in breakpoints.windows(2).enumerate() {
            if w[0] >= w[1] {
                return Err(PiecewiseError::NotAscending { index: i + 1 });
            }
        }
        for (i, &v) in values.iter().enumerate() {
            if !(-1.0..0.0).contains(&v) {
                return Err(PiecewiseError::ValueOutOfRange { index: i, value: v });
            }
        }
        for (i, w) in values.windows(2).enumerate() {
            if w[0] > w[1] {
                return Err(PiecewiseError::NotMonotone { index: i + 1 });
            }
        }
        Ok(Self {
            breakpoints,
            values,
        })
    }

    pub fn breakpoints(&self) -> &[f64] {
        &self.breakpoints
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    /// Evaluates the step function; right-continuous at breakpoints.
    pub fn eval(&self, x: f64) -> f64 {
        let i = self.breakpoints.partition_point(|&b| b <= x);
        self.values[i]
    }
}

/// A strictly decreasing, convex, 1-Lipschitz piecewise-linear function.
///
/// `slopes[i]` applies on the `i`-th segment: segment `0` is `(-inf, knots[0])`,
/// segment `i` is `[knots[i-1], knots[i])`, and the last segment extends the
/// final slope to `+inf`. Knot values are stored redundantly so that evaluation
/// is one binary search plus one multiply-add; consistency with the slopes is a
/// constructor invariant, not trusted input.
///
/// Beyond the last knot the final slope is a truncation of an in-principle
/// longer construction; callers must not rely on values below the last knot's
/// level (see [`PiecewiseLinearConvexFn::invert`]).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawPwl")]
pub struct PiecewiseLinearConvexFn {
    knots: Vec<f64>,
    knot_values: Vec<f64>,
    slopes: Vec<f64>,
}

#[derive(Deserialize)]
struct RawPwl {
    knots: Vec<f64>,
    knot_values: Vec<f64>,
    slopes: Vec<f64>,
}

impl TryFrom<RawPwl> for PiecewiseLinearConvexFn {
    type Error = PiecewiseError;
    fn try_from(raw: RawPwl) -> Result<Self, Self::Error> {
        PiecewiseLinearConvexFn::new(raw.knots, raw.knot_values, raw.slopes)
    }
}

impl PiecewiseLinearConvexFn {
    /// Validates and builds a piecewise-linear convex function from knots,
    /// values at the knots, and per-segment slopes (one more slope than
    /// knots, covering the two unbounded segments).
    pub fn new(
        knots: Vec<f64>,
        knot_values: Vec<f64>,
        slopes: Vec<f64>,
    ) -> Result<Self, PiecewiseError> {
        if knots.is_empty() || slopes.is_empty() {
            return Err(PiecewiseError::EmptyValues);
        }
        if knot_values.len() != knots.len() || slopes.len() != knots.len() + 1 {
            return Err(PiecewiseError::LengthMismatch {
                breakpoints: knots.len(),
                expected: knots.len() + 1,
                got: slopes.len(),
            });
        }
        if knots
            .iter()
            .chain(knot_values.iter())
            .chain(slopes.iter())
            .any(|v| !v.is_finite())
        {
            return Err(PiecewiseError::NonFinite);
        }
        for (i, w) in knots.windows(2).enumerate() {
            if w[0] >= w[1] {
                return Err(PiecewiseError::NotAscending { index: i + 1 });
            }
        }
        for (i, &s) in slopes.iter().enumerate() {
            if !(-1.0..0.0).contains(&s) {
                return Err(PiecewiseError::ValueOutOfRange { index: i, value: s });
            }
        }
        for (i, w) in slopes.windows(2).enumerate() {
            if w[0] > w[1] {
                return Err(PiecewiseError::NotMonotone { index: i + 1 });
            }
        }
        for j in 0..knots.len() - 1 {
            let expected = knot_values[j] + slopes[j + 1] * (knots[j + 1] - knots[j]);
            let scale = 1.0_f64
                .max(knot_values[j].abs())
                .max(knot_values[j + 1].abs());
            if (expected - knot_values[j + 1]).abs() > CONSISTENCY_RTOL * scale {
                return Err(PiecewiseError::InconsistentKnotValues {
                    index: j + 1,
                    expected,
                    got: knot_values[j + 1],
                });
            }
        }
        Ok(Self {
            knots,
            knot_values,
            slopes,
        })
    }

    pub fn knots(&self) -> &[f64] {
        &self.knots
    }

    pub fn knot_values(&self) -> &[f64] {
        &self.knot_values
    }

    pub fn slopes(&self) -> &[f64] {
        &self.slopes
    }

    /// Index of the segment containing `x` under the `[knot, next)` convention.
    /// Segment `i` has slope `slopes[i]`; `0` and `knots.len()` are the
    /// unbounded end segments.
    pub(crate) fn segment_of(&self, x: f64) -> usize {
        self.knots.partition_point(|&k| k <= x)
    }

    /// Lower and upper knot of segment `i` (`-inf`/`+inf` on the end segments).
    pub(crate) fn segment_bounds(&self, i: usize) -> (f64, f64) {
        let lo = if i == 0 {
            f64::NEG_INFINITY
        } else {
            self.knots[i - 1]
        };
        let hi = if i == self.knots.len() {
            f64::INFINITY
        } else {
            self.knots[i]
        };
        (lo, hi)
    }

    /// Evaluates `F(x)` given that `x` lies in segment `i`.
    #[inline]
    pub(crate) fn eval_in_segment(&self, i: usize, x: f64) -> f64 {
        // Anchor at the nearest knot so the affine formula never extrapolates
        // across a knot.
        if i == 0 {
            self.knot_values[0] + self.slopes[0] * (x - self.knots[0])
        } else {
            self.knot_values[i - 1] + self.slopes[i] * (x - self.knots[i - 1])
        }
    }

    /// Exact piecewise-linear evaluation via binary search over the knots.
    pub fn eval(&self, x: f64) -> f64 {
        self.eval_in_segment(self.segment_of(x), x)
    }

    /// Solves `F(x) = t` for the unique `x`, exactly, by identifying the
    /// segment whose value range brackets `t`.
    ///
    /// The target must lie in the range attained over the represented knots,
    /// `[F(last knot), F(first knot)]`; values outside (in particular below
    /// the truncated tail's trusted level) are rejected.
    pub fn invert(&self, t: f64) -> Result<f64, PiecewiseError> {
        let max = self.knot_values[0];
        let min = *self.knot_values.last().unwrap();
        if !t.is_finite() || t > max || t < min {
            return Err(PiecewiseError::OutOfRange { t, min, max });
        }
        // Knot values are strictly decreasing; find the last knot with
        // value >= t.
        let j = self.knot_values.partition_point(|&v| v >= t) - 1;
        if self.knot_values[j] == t {
            return Ok(self.knots[j]);
        }
        Ok(self.knots[j] + (t - self.knot_values[j]) / self.slopes[j + 1])
    }

    /// Returns `[left slope, right slope]` of the subdifferential at `x`;
    /// a singleton (repeated slope) off the knots. Ties at knots return the
    /// closed interval.
    pub fn subgradient_interval(&self, x: f64) -> (f64, f64) {
        let i = self.segment_of(x);
        if i >= 1 && self.knots[i - 1] == x {
            (self.slopes[i - 1], self.slopes[i])
        } else {
            (self.slopes[i], self.slopes[i])
        }
    }

    /// The proximal operator of `lambda * F`: the unique minimizer of
    /// `lambda*F(z) + (z - xprime)^2 / 2`.
    ///
    /// The optimality condition `0 ∈ lambda*∂F(z) + z - xprime` is solved
    /// exactly: the map `z ↦ z + lambda*F'(z)` is strictly increasing and
    /// piecewise linear, so the solution segment (or knot) is found by binary
    /// search and the answer is one affine formula.
    ///
    /// # Panics
    ///
    /// Panics if `lambda` is negative or not finite.
    pub fn prox_1d(&self, lambda: f64, xprime: f64) -> f64 {
        assert!(
            lambda >= 0.0 && lambda.is_finite(),
            "prox_1d requires a finite lambda >= 0, got {lambda}"
        );
        // Count knots j with knots[j] + lambda*slopes[j] <= xprime; that
        // quantity is increasing in j, so binary search applies.
        let m = self.knots.len();
        let mut lo = 0usize;
        let mut hi = m;
        while lo < hi {
            let mid = (lo + hi) / 2;
            if self.knots[mid] + lambda * self.slopes[mid] <= xprime {
                lo = mid + 1;
            } else {
                hi = mid;
            }
        }
        if lo == 0 {
            // Left unbounded segment.
            return xprime - lambda * self.slopes[0];
        }
        let j = lo - 1;
        if xprime <= self.knots[j] + lambda * self.slopes[j + 1] {
            // xprime lands inside the knot's subgradient interval.
            self.knots[j]
        } else {
            // Interior of the segment to the right of knot j.
            xprime - lambda * self.slopes[j + 1]
        }
    }
}

/// Integrates a step function from 0, producing its piecewise-linear convex
/// antiderivative with `F(0) = 0`. Zero is inserted as a knot if not already a
/// breakpoint, so the normalization is exact.
pub fn antiderivative(s: &StepFunction) -> PiecewiseLinearConvexFn {
    let mut knots: Vec<f64> = s.breakpoints().to_vec();
    let zero_pos = knots.partition_point(|&b| b < 0.0);
    if knots.get(zero_pos) != Some(&0.0) {
        knots.insert(zero_pos, 0.0);
    }

    // Slopes per segment of the merged knot set; the step function is
    // right-continuous, so evaluating at the left knot gives the segment value.
    let m = knots.len();
    let mut slopes = Vec::with_capacity(m + 1);
    slopes.push(s.values()[0]);
    for &k in &knots {
        slopes.push(s.eval(k));
    }

    // Integrate outward from the zero knot.
    let z = knots.partition_point(|&k| k < 0.0);
    debug_assert_eq!(knots[z], 0.0);
    let mut knot_values = vec![0.0; m];
    for j in z + 1..m {
        knot_values[j] = knot_values[j - 1] + slopes[j] * (knots[j] - knots[j - 1]);
    }
    for j in (0..z).rev() {
        knot_values[j] = knot_values[j + 1] - slopes[j + 1] * (knots[j + 1] - knots[j]);
    }

    PiecewiseLinearConvexFn::new(knots, knot_values, slopes)
        .expect("antiderivative of a valid step function is always valid")
}
