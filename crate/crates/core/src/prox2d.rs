//! The planar counter-example operator: the proximal map of
//! `f(x, y) = max{Phi(x), Psi(y)}` for the designed pair of piecewise-linear
//! potentials whose level-matching curve escapes to infinity with two distinct
//! limiting directions.
//!
//! The construction uses breakpoints `xi_n = sum_{i<=n} i^i` and
//! `zeta_n = sum_{i<=n} 2/(3+(-1)^i) * i^i`, with derivative values `-1/n^n`
//! (and the matching alternating coefficient for the second coordinate), so
//! that `Phi(xi_n) = Psi(zeta_n) = -n` and the direction of `(xi_n, zeta_n)`
//! alternates between two limits. Iterating the prox from the origin walks the
//! level-matching curve in steps of norm at most one.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::engine::Operator;
use crate::piecewise::{antiderivative, PiecewiseError, PiecewiseLinearConvexFn, StepFunction};

/// Largest truncation index for which `n^n` stays within double range.
pub const MAX_INDEX: u32 = 100;

/// Maximum bisection iterations in the general prox path.
const MAX_BISECT: u32 = 50;

#[derive(Debug, Error, PartialEq)]
pub enum Prox2dError {
    #[error("index {n} out of range (must be <= {MAX_INDEX})")]
    IndexOutOfRange { n: u32 },
    #[error("n_max {n_max} out of range (must be in 2..=100)")]
    InvalidParams { n_max: u32 },
    #[error("prox tolerance must be positive, got {tol}")]
    NonPositiveTol { tol: f64 },
    #[error("{which} does not vanish at 0 (value {value})")]
    NotVanishingAtZero { which: &'static str, value: f64 },
    #[error(transparent)]
    Piecewise(#[from] PiecewiseError),
}

/// `xi_n = sum_{i=1}^n i^i`, with `xi_0 = 0`.
pub fn xi(n: u32) -> Result<f64, Prox2dError> {
    if n > MAX_INDEX {
        return Err(Prox2dError::IndexOutOfRange { n });
    }
    Ok((1..=n).map(pow_ii).sum())
}

/// `zeta_n = sum_{i=1}^n 2/(3+(-1)^i) * i^i`: coefficient 1 for odd `i`,
/// 1/2 for even `i`. `zeta_0 = 0`.
pub fn zeta(n: u32) -> Result<f64, Prox2dError> {
    if n > MAX_INDEX {
        return Err(Prox2dError::IndexOutOfRange { n });
    }
    Ok((1..=n).map(|i| zeta_coeff(i) * pow_ii(i)).sum())
}

#[inline]
fn pow_ii(i: u32) -> f64 {
    (i as f64).powi(i as i32)
}

#[inline]
fn zeta_coeff(i: u32) -> f64 {
    if i % 2 == 1 {
        1.0
    } else {
        0.5
    }
}

/// Unit vector in the direction of `(xi_n, zeta_n)`.
///
/// Along even `n` these converge to `(2/sqrt(5), 1/sqrt(5))`, along odd `n`
/// to `(1/sqrt(2), 1/sqrt(2))`.
pub fn analytic_direction(n: u32) -> Result<[f64; 2], Prox2dError> {
    if n == 0 || n > MAX_INDEX {
        return Err(Prox2dError::IndexOutOfRange { n });
    }
    let x = xi(n)?;
    let z = zeta(n)?;
    // hypot avoids overflow: x^2 exceeds double range for n >= 78.
    let r = x.hypot(z);
    Ok([x / r, z / r])
}

/// Truncation depth of the breakpoint construction.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "RawParams")]
pub struct PaperParams {
    n_max: u32,
}

#[derive(Deserialize)]
struct RawParams {
    n_max: u32,
}

impl TryFrom<RawParams> for PaperParams {
    type Error = Prox2dError;
    fn try_from(raw: RawParams) -> Result<Self, Self::Error> {
        PaperParams::new(raw.n_max)
    }
}

impl PaperParams {
    pub fn new(n_max: u32) -> Result<Self, Prox2dError> {
        if !(2..=MAX_INDEX).contains(&n_max) {
            return Err(Prox2dError::InvalidParams { n_max });
        }
        Ok(Self { n_max })
    }

    pub fn n_max(&self) -> u32 {
        self.n_max
    }
}

/// The operator data for the prox of `f(x, y) = max{Phi(x), Psi(y)}`:
/// two strictly decreasing convex 1-Lipschitz potentials, both vanishing at
/// the origin (so the origin lies on the level-matching curve).
///
/// `n_max` is present when the operator was built from [`PaperParams`] and
/// records the truncation depth; trajectories are trusted only while the
/// level stays above `-(n_max - 1)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawMaxSeparable2D")]
pub struct MaxSeparable2D {
    phi: PiecewiseLinearConvexFn,
    psi: PiecewiseLinearConvexFn,
    #[serde(skip_serializing_if = "Option::is_none")]
    n_max: Option<u32>,
}

#[derive(Deserialize)]
struct RawMaxSeparable2D {
    phi: PiecewiseLinearConvexFn,
    psi: PiecewiseLinearConvexFn,
    #[serde(default)]
    n_max: Option<u32>,
}

impl TryFrom<RawMaxSeparable2D> for MaxSeparable2D {
    type Error = Prox2dError;
    fn try_from(raw: RawMaxSeparable2D) -> Result<Self, Self::Error> {
        let op = MaxSeparable2D::new(raw.phi, raw.psi)?;
        match raw.n_max {
            None => Ok(op),
            Some(n) => {
                PaperParams::new(n)?;
                Ok(Self {
                    n_max: Some(n),
                    ..op
                })
            }
        }
    }
}

impl MaxSeparable2D {
    /// Packages two potentials. Both must vanish at 0; convexity, strict
    /// decrease and the slope range are already invariants of the component
    /// type.
    pub fn new(
        phi: PiecewiseLinearConvexFn,
        psi: PiecewiseLinearConvexFn,
    ) -> Result<Self, Prox2dError> {
        for (which, f) in [("phi", &phi), ("psi", &psi)] {
            let v = f.eval(0.0);
            if v != 0.0 {
                return Err(Prox2dError::NotVanishingAtZero { which, value: v });
            }
        }
        Ok(Self {
            phi,
            psi,
            n_max: None,
        })
    }

    /// Builds the designed operator truncated after `n_max` segments: the
    /// derivative of `Phi` is `-1` for `x < 0` and `-1/n^n` on
    /// `[xi_{n-1}, xi_n)`, with the last slope extended past `xi_{n_max}`;
    /// `Psi` uses the alternating coefficient `(3+(-1)^n)/2` on the `zeta`
    /// breakpoints.
    pub fn from_paper_params(params: PaperParams) -> Self {
        let n_max = params.n_max;
        let mut phi_breaks = Vec::with_capacity(n_max as usize);
        let mut psi_breaks = Vec::with_capacity(n_max as usize);
        let mut phi_values = vec![-1.0];
        let mut psi_values = vec![-1.0];
        let (mut xi_acc, mut zeta_acc) = (0.0, 0.0);
        for n in 1..=n_max {
            phi_breaks.push(xi_acc);
            psi_breaks.push(zeta_acc);
            let p = pow_ii(n);
            phi_values.push(-1.0 / p);
            psi_values.push(-(1.0 / zeta_coeff(n)) / p);
            xi_acc += p;
            zeta_acc += zeta_coeff(n) * p;
        }
        let phi_step = StepFunction::new(phi_breaks, phi_values)
            .expect("designed phi derivative is always a valid step function");
        let psi_step = StepFunction::new(psi_breaks, psi_values)
            .expect("designed psi derivative is always a valid step function");
        Self {
            phi: antiderivative(&phi_step),
            psi: antiderivative(&psi_step),
            n_max: Some(n_max),
        }
    }

    pub fn phi(&self) -> &PiecewiseLinearConvexFn {
        &self.phi
    }

    pub fn psi(&self) -> &PiecewiseLinearConvexFn {
        &self.psi
    }

    pub fn n_max(&self) -> Option<u32> {
        self.n_max
    }

    /// `f(x, y) = max{Phi(x), Psi(y)}`.
    pub fn level(&self, point: [f64; 2]) -> f64 {
        self.phi.eval(point[0]).max(self.psi.eval(point[1]))
    }

    /// Signed gap `Phi(x) - Psi(y)`; zero on the level-matching curve.
    pub fn edge_gap(&self, point: [f64; 2]) -> f64 {
        self.phi.eval(point[0]) - self.psi.eval(point[1])
    }

    /// The point `(x, y)` on the level-matching curve with
    /// `Phi(x) = Psi(y) = t`.
    pub fn gamma_point(&self, t: f64) -> Result<[f64; 2], Prox2dError> {
        Ok([self.phi.invert(t)?, self.psi.invert(t)?])
    }

    /// The proximal operator of `f`: the unique minimizer of
    /// `f(x, y) + ((x-x')^2 + (y-y')^2)/2`, to within `tol` per coordinate.
    ///
    /// Strategy: if a full-weight one-coordinate step leaves its potential
    /// strictly dominant, that step is the answer. Otherwise the max is
    /// active at the solution and `f = max_{theta in [0,1]}
    /// theta*Phi(x) + (1-theta)*Psi(y)`; for fixed `theta` the coordinates
    /// decouple into 1-D proxes, and `g(theta) = Phi(x(theta)) -
    /// Psi(y(theta))` is nonincreasing with a sign change on `[0, 1]`, so
    /// bisection converges. When both coordinates stay strictly inside one
    /// segment pair the active-max step is a single affine map and is taken
    /// directly (this is what makes multi-million-step runs cheap); it agrees
    /// with the bisection path to well below any practical `tol`.
    pub fn prox(&self, point: [f64; 2], tol: f64) -> Result<[f64; 2], Prox2dError> {
        if tol.is_nan() || tol <= 0.0 {
            return Err(Prox2dError::NonPositiveTol { tol });
        }
        if let Some(out) = self.prox_fast(point) {
            return Ok(out);
        }
        Ok(self.prox_general(point, tol))
    }

    /// The general path only (cases plus bisection), bypassing the affine
    /// fast path. Exposed so the two routes can be compared directly.
    pub fn prox_bisect(&self, point: [f64; 2], tol: f64) -> Result<[f64; 2], Prox2dError> {
        if tol.is_nan() || tol <= 0.0 {
            return Err(Prox2dError::NonPositiveTol { tol });
        }
        Ok(self.prox_general(point, tol))
    }

    /// Active-max step as one affine map, valid when the input and output
    /// both lie strictly inside the same segment pair and the implied weight
    /// is strictly interior. Returns `None` whenever any of that fails; the
    /// general path then decides.
    fn prox_fast(&self, [x, y]: [f64; 2]) -> Option<[f64; 2]> {
        let si = self.phi.segment_of(x);
        let sj = self.psi.segment_of(y);
        let (xlo, xhi) = self.phi.segment_bounds(si);
        let (ylo, yhi) = self.psi.segment_bounds(sj);
        if x <= xlo || y <= ylo {
            return None;
        }
        let a = -self.phi.slopes()[si];
        let b = -self.psi.slopes()[sj];
        let fx = self.phi.eval_in_segment(si, x);
        let gy = self.psi.eval_in_segment(sj, y);
        // Solve Phi(x + theta*a) = Psi(y + (1-theta)*b) in the locally
        // linear regime.
        let theta = (fx - gy + b * b) / (a * a + b * b);
        if !(theta > 0.0 && theta < 1.0) {
            return None;
        }
        let xn = x + theta * a;
        let yn = y + (1.0 - theta) * b;
        if xn <= xlo || xn >= xhi || yn <= ylo || yn >= yhi {
            return None;
        }
        Some([xn, yn])
    }

    fn prox_general(&self, [x, y]: [f64; 2], tol: f64) -> [f64; 2] {
        // Single-coordinate candidates fire only on strict dominance;
        // equality falls through to the bisection, whose endpoints reproduce
        // them.
        let xa = self.phi.prox_1d(1.0, x);
        if self.phi.eval(xa) > self.psi.eval(y) {
            return [xa, y];
        }
        let yb = self.psi.prox_1d(1.0, y);
        if self.psi.eval(yb) > self.phi.eval(x) {
            return [x, yb];
        }
        // Here g(0) >= 0 >= g(1). Both 1-D proxes are 1-Lipschitz in the
        // weight, so a theta bracket of width tol pins each coordinate to
        // within tol.
        let mut lo = 0.0_f64;
        let mut hi = 1.0_f64;
        for _ in 0..MAX_BISECT {
            let mid = 0.5 * (lo + hi);
            let xm = self.phi.prox_1d(mid, x);
            let ym = self.psi.prox_1d(1.0 - mid, y);
            let g = self.phi.eval(xm) - self.psi.eval(ym);
            if g == 0.0 {
                return [xm, ym];
            }
            if g > 0.0 {
                lo = mid;
            } else {
                hi = mid;
            }
            if hi - lo <= tol {
                break;
            }
        }
        let mid = 0.5 * (lo + hi);
        [self.phi.prox_1d(mid, x), self.psi.prox_1d(1.0 - mid, y)]
    }
}

/// [`MaxSeparable2D`] packaged as an iterable operator with a fixed prox
/// tolerance.
#[derive(Debug, Clone)]
pub struct Prox2dOperator {
    op: MaxSeparable2D,
    tol: f64,
    label: String,
}

impl Prox2dOperator {
    pub fn new(op: MaxSeparable2D, tol: f64) -> Result<Self, Prox2dError> {
        if tol.is_nan() || tol <= 0.0 {
            return Err(Prox2dError::NonPositiveTol { tol });
        }
        let label = match op.n_max() {
            Some(n) => format!("paper2d(n_max={n})"),
            None => "prox2d".to_owned(),
        };
        Ok(Self { op, tol, label })
    }

    pub fn inner(&self) -> &MaxSeparable2D {
        &self.op
    }

    pub fn tol(&self) -> f64 {
        self.tol
    }
}

impl Operator for Prox2dOperator {
    fn dimension(&self) -> usize {
        2
    }

    fn apply(&self, x: &[f64], out: &mut [f64]) {
        let p = self
            .op
            .prox([x[0], x[1]], self.tol)
            .expect("tolerance validated at construction");
        out[0] = p[0];
        out[1] = p[1];
    }

    fn label(&self) -> &str {
        &self.label
    }

    fn level(&self, x: &[f64]) -> Option<f64> {
        Some(self.op.level([x[0], x[1]]))
    }

    fn level_guard(&self) -> Option<f64> {
        // The truncated tail is not trusted below -(n_max - 1).
        self.op.n_max.map(|n| -((n - 1) as f64))
    }
}
