//! Shared test oracles, kept independent of the library's evaluation paths:
//! quadrature works directly on the step function, and the golden-section
//! minimizers touch only objective values.

#![allow(dead_code)]

use cosmiclab::piecewise::StepFunction;
use cosmiclab::prox2d::MaxSeparable2D;

/// Integral of a step function from 0 to `x` by midpoint quadrature on the
/// refinement grid. The midpoint rule is exact on intervals where the
/// integrand is constant, so refining at the jumps gives the exact integral
/// without consulting the antiderivative under test.
pub fn step_integral_oracle(s: &StepFunction, x: f64) -> f64 {
    let (a, b, sign) = if x >= 0.0 {
        (0.0, x, 1.0)
    } else {
        (x, 0.0, -1.0)
    };
    let mut cuts = vec![a];
    cuts.extend(s.breakpoints().iter().copied().filter(|&t| t > a && t < b));
    cuts.push(b);
    let mut acc = 0.0;
    for w in cuts.windows(2) {
        acc += s.eval(0.5 * (w[0] + w[1])) * (w[1] - w[0]);
    }
    sign * acc
}

/// Golden-section minimization of a unimodal function on `[lo, hi]`.
pub fn golden_min<F: Fn(f64) -> f64>(f: F, mut lo: f64, mut hi: f64, iters: u32) -> f64 {
    let inv_phi = 0.618_033_988_749_894_9_f64;
    let mut x1 = hi - inv_phi * (hi - lo);
    let mut x2 = lo + inv_phi * (hi - lo);
    let mut f1 = f(x1);
    let mut f2 = f(x2);
    for _ in 0..iters {
        if f1 <= f2 {
            hi = x2;
            x2 = x1;
            f2 = f1;
            x1 = hi - inv_phi * (hi - lo);
            f1 = f(x1);
        } else {
            lo = x1;
            x1 = x2;
            f1 = f2;
            x2 = lo + inv_phi * (hi - lo);
            f2 = f(x2);
        }
    }
    0.5 * (lo + hi)
}

/// Brute-force prox oracle: nested golden-section minimization of
/// `max{Phi(x), Psi(y)} + ((x-x')^2 + (y-y')^2)/2` over a box around the
/// input (the true prox displaces by at most 1). Touches only `level`.
pub fn prox_oracle_2d(op: &MaxSeparable2D, point: [f64; 2], iters: u32) -> [f64; 2] {
    let objective = |x: f64, y: f64| {
        op.level([x, y])
            + 0.5 * (x - point[0]) * (x - point[0])
            + 0.5 * (y - point[1]) * (y - point[1])
    };
    let inner_min = |x: f64| {
        let y = golden_min(|y| objective(x, y), point[1] - 2.0, point[1] + 2.0, iters);
        objective(x, y)
    };
    let x = golden_min(inner_min, point[0] - 2.0, point[0] + 2.0, iters);
    let y = golden_min(|y| objective(x, y), point[1] - 2.0, point[1] + 2.0, iters);
    [x, y]
}
