//! Sampling-based verification of operator properties and of the positive
//! results about cosmic accumulation directions: non-expansiveness, firm
//! non-expansiveness, the separating-hyperplane inequality
//! `<T(x) - x, q> >= 0`, monotone growth of `<x^k, q>`, pairwise
//! non-negativity of accumulation directions, and the planar cone-inclusion
//! evidence check.
//!
//! Checks report signed worst-case violations, never bare booleans, so the
//! pass/fail policy lives entirely in the configured tolerance. Every
//! sampling check is deterministic given its seed.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;
use thiserror::Error;

use crate::engine::{l2_norm, Operator, Trajectory};

/// Default half-width of sampling boxes. The hyperplane result quantifies
/// over the whole space, so samples must range far beyond any trajectory.
pub const DEFAULT_BOX_HALF_WIDTH: f64 = 1e6;

#[derive(Debug, Error, PartialEq)]
pub enum TheoremsError {
    #[error("degenerate sampling box at coordinate {index}")]
    DegenerateBox { index: usize },
    #[error("sampling box has {got} coordinates, operator needs {expected}")]
    BoxDimensionMismatch { expected: usize, got: usize },
    #[error("at least one sample is required")]
    TooFewSamples,
    #[error("q must be a unit vector (norm {norm})")]
    NotUnit { norm: f64 },
    #[error("trajectory carries fewer than two recorded states")]
    TooFewSnapshots,
    #[error("at least one center is required")]
    EmptyCenters,
    #[error("cone-inclusion check is only defined in dimension 2 (got {dim})")]
    NotTwoDimensional { dim: usize },
    #[error("no nonzero displacements sampled; angular span is empty")]
    EmptyAngularSpan,
}

/// Axis-aligned sampling region.
#[derive(Debug, Clone, Serialize)]
pub struct SampleBox {
    lo: Vec<f64>,
    hi: Vec<f64>,
}

impl SampleBox {
    pub fn new(lo: Vec<f64>, hi: Vec<f64>) -> Result<Self, TheoremsError> {
        if lo.is_empty() || lo.len() != hi.len() {
            return Err(TheoremsError::BoxDimensionMismatch {
                expected: lo.len().max(1),
                got: hi.len(),
            });
        }
        for (i, (&a, &b)) in lo.iter().zip(&hi).enumerate() {
            if !(a.is_finite() && b.is_finite() && a < b) {
                return Err(TheoremsError::DegenerateBox { index: i });
            }
        }
        Ok(Self { lo, hi })
    }

    /// `[-half_width, half_width]^dim`.
    pub fn symmetric(dim: usize, half_width: f64) -> Result<Self, TheoremsError> {
        Self::new(vec![-half_width; dim], vec![half_width; dim])
    }

    pub fn dim(&self) -> usize {
        self.lo.len()
    }

    fn fill(&self, rng: &mut ChaCha8Rng, out: &mut [f64]) {
        for (o, (&a, &b)) in out.iter_mut().zip(self.lo.iter().zip(&self.hi)) {
            *o = rng.random_range(a..b);
        }
    }
}

/// Outcome of one check: the signed worst-case violation over all samples,
/// the input that attained it, and the pass flag `violation <= tol`.
#[derive(Debug, Clone, Serialize)]
pub struct CheckReport {
    pub name: String,
    pub samples: u64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    pub tol: f64,
    pub worst_violation: f64,
    pub pass: bool,
    pub witness: Vec<Vec<f64>>,
    /// Last-minus-first growth of the monotone inner-product check.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub growth: Option<f64>,
}

impl CheckReport {
    fn new(
        name: &str,
        samples: u64,
        seed: Option<u64>,
        tol: f64,
        worst_violation: f64,
        witness: Vec<Vec<f64>>,
    ) -> Self {
        Self {
            name: name.to_owned(),
            samples,
            seed,
            tol,
            worst_violation,
            pass: worst_violation <= tol,
            witness,
            growth: None,
        }
    }
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(&x, &y)| x * y).sum()
}

fn check_box<O: Operator + ?Sized>(op: &O, bx: &SampleBox) -> Result<(), TheoremsError> {
    if bx.dim() != op.dimension() {
        return Err(TheoremsError::BoxDimensionMismatch {
            expected: op.dimension(),
            got: bx.dim(),
        });
    }
    Ok(())
}

fn check_unit(q: &[f64]) -> Result<(), TheoremsError> {
    let n = l2_norm(q);
    if (n - 1.0).abs() > 1e-9 {
        return Err(TheoremsError::NotUnit { norm: n });
    }
    Ok(())
}

/// Pair statistics shared by the two operator-property checks. Differences
/// are taken displacement-first (`T(u) - u` is formed before anything large
/// is mixed in) so the reported violations do not drown in cancellation at
/// box scale.
struct PairScratch {
    u: Vec<f64>,
    w: Vec<f64>,
    tu: Vec<f64>,
    tw: Vec<f64>,
}

impl PairScratch {
    fn new(dim: usize) -> Self {
        Self {
            u: vec![0.0; dim],
            w: vec![0.0; dim],
            tu: vec![0.0; dim],
            tw: vec![0.0; dim],
        }
    }

    fn draw<O: Operator + ?Sized>(&mut self, op: &O, bx: &SampleBox, rng: &mut ChaCha8Rng) {
        bx.fill(rng, &mut self.u);
        bx.fill(rng, &mut self.w);
        op.apply(&self.u, &mut self.tu);
        op.apply(&self.w, &mut self.tw);
    }

    /// `||Tu - Tw|| - ||u - w||`, evaluated as
    /// `<(du - dw), (Tu - Tw) + (u - w)> / (||Tu - Tw|| + ||u - w||)`.
    fn nonexpansive_violation(&self) -> f64 {
        let mut num = 0.0;
        let mut d2 = 0.0;
        let mut s2 = 0.0;
        for i in 0..self.u.len() {
            let diff = self.tu[i] - self.tw[i];
            let base = self.u[i] - self.w[i];
            let e = (self.tu[i] - self.u[i]) - (self.tw[i] - self.w[i]);
            num += e * (diff + base);
            d2 += diff * diff;
            s2 += base * base;
        }
        let denom = d2.sqrt() + s2.sqrt();
        if denom == 0.0 {
            0.0
        } else {
            num / denom
        }
    }

    /// `||Tu - Tw||^2 - <Tu - Tw, u - w>`, evaluated as
    /// `<Tu - Tw, (Tu - u) - (Tw - w)>`.
    fn firm_violation(&self) -> f64 {
        let mut acc = 0.0;
        for i in 0..self.u.len() {
            let diff = self.tu[i] - self.tw[i];
            let e = (self.tu[i] - self.u[i]) - (self.tw[i] - self.w[i]);
            acc += diff * e;
        }
        acc
    }
}

/// Non-expansiveness: worst `||Tu - Tw|| - ||u - w||` over sampled pairs.
pub fn check_nonexpansive<O: Operator + ?Sized>(
    op: &O,
    n_pairs: u64,
    bx: &SampleBox,
    tol: f64,
    seed: u64,
) -> Result<CheckReport, TheoremsError> {
    check_box(op, bx)?;
    if n_pairs == 0 {
        return Err(TheoremsError::TooFewSamples);
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut scratch = PairScratch::new(op.dimension());
    let mut worst = f64::NEG_INFINITY;
    let mut witness = Vec::new();
    for _ in 0..n_pairs {
        scratch.draw(op, bx, &mut rng);
        let v = scratch.nonexpansive_violation();
        if v > worst {
            worst = v;
            witness = vec![scratch.u.clone(), scratch.w.clone()];
        }
    }
    Ok(CheckReport::new(
        "nonexpansive",
        n_pairs,
        Some(seed),
        tol,
        worst,
        witness,
    ))
}

/// Firm non-expansiveness: worst `||Tu - Tw||^2 - <Tu - Tw, u - w>`.
pub fn check_firmly_nonexpansive<O: Operator + ?Sized>(
    op: &O,
    n_pairs: u64,
    bx: &SampleBox,
    tol: f64,
    seed: u64,
) -> Result<CheckReport, TheoremsError> {
    check_box(op, bx)?;
    if n_pairs == 0 {
        return Err(TheoremsError::TooFewSamples);
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut scratch = PairScratch::new(op.dimension());
    let mut worst = f64::NEG_INFINITY;
    let mut witness = Vec::new();
    for _ in 0..n_pairs {
        scratch.draw(op, bx, &mut rng);
        let v = scratch.firm_violation();
        if v > worst {
            worst = v;
            witness = vec![scratch.u.clone(), scratch.w.clone()];
        }
    }
    Ok(CheckReport::new(
        "firmly_nonexpansive",
        n_pairs,
        Some(seed),
        tol,
        worst,
        witness,
    ))
}

/// Separating hyperplane: a cosmic accumulation direction `q` must satisfy
/// `<T(x) - x, q> >= 0` for every `x`. Worst violation is
/// `max -<T(x) - x, q>` over the samples.
pub fn check_separating_hyperplane<O: Operator + ?Sized>(
    op: &O,
    q: &[f64],
    n_samples: u64,
    bx: &SampleBox,
    tol: f64,
    seed: u64,
) -> Result<CheckReport, TheoremsError> {
    check_box(op, bx)?;
    check_unit(q)?;
    if n_samples == 0 {
        return Err(TheoremsError::TooFewSamples);
    }
    let dim = op.dimension();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut x = vec![0.0; dim];
    let mut tx = vec![0.0; dim];
    let mut worst = f64::NEG_INFINITY;
    let mut witness = Vec::new();
    for _ in 0..n_samples {
        bx.fill(&mut rng, &mut x);
        op.apply(&x, &mut tx);
        let mut inner = 0.0;
        for i in 0..dim {
            inner += (tx[i] - x[i]) * q[i];
        }
        if -inner > worst {
            worst = -inner;
            witness = vec![x.clone()];
        }
    }
    Ok(CheckReport::new(
        "separating_hyperplane",
        n_samples,
        Some(seed),
        tol,
        worst,
        witness,
    ))
}

/// Monotone growth of `<x^k, q>` along a trajectory: checked between
/// consecutive recorded states (partial sums of per-step non-negative
/// increments stay non-negative) and exactly on the stored final pair.
/// Also reports the last-minus-first growth.
pub fn check_monotone_inner(
    traj: &Trajectory,
    q: &[f64],
    tol: f64,
) -> Result<CheckReport, TheoremsError> {
    check_unit(q)?;
    if traj.checkpoints.is_empty() {
        return Err(TheoremsError::TooFewSnapshots);
    }
    let mut worst = f64::NEG_INFINITY;
    let mut witness = Vec::new();
    let mut comparisons = 0u64;
    let mut prev_inner = dot(&traj.start, q);
    let first_inner = prev_inner;
    let mut prev_state: &[f64] = &traj.start;
    for c in &traj.checkpoints {
        let inner = dot(&c.state, q);
        comparisons += 1;
        if prev_inner - inner > worst {
            worst = prev_inner - inner;
            witness = vec![prev_state.to_vec(), c.state.clone()];
        }
        prev_inner = inner;
        prev_state = &c.state;
    }
    // One exact per-step comparison from the stored tail pair.
    let (pen, last) = traj.final_pair();
    let step_drop = dot(pen, q) - dot(last, q);
    comparisons += 1;
    if step_drop > worst {
        worst = step_drop;
        witness = vec![pen.to_vec(), last.to_vec()];
    }
    let mut report = CheckReport::new("monotone_inner", comparisons, None, tol, worst, witness);
    report.growth = Some(dot(&traj.final_state, q) - first_inner);
    Ok(report)
}

/// Pairwise non-negativity of accumulation directions:
/// worst `-<q_i, q_j>` over all pairs, self-pairs included.
pub fn check_pairwise_nonneg(centers: &[Vec<f64>], tol: f64) -> Result<CheckReport, TheoremsError> {
    if centers.is_empty() {
        return Err(TheoremsError::EmptyCenters);
    }
    let mut worst = f64::NEG_INFINITY;
    let mut witness = Vec::new();
    let mut pairs = 0u64;
    for i in 0..centers.len() {
        for j in i..centers.len() {
            pairs += 1;
            let v = -dot(&centers[i], &centers[j]);
            if v > worst {
                worst = v;
                witness = vec![centers[i].clone(), centers[j].clone()];
            }
        }
    }
    Ok(CheckReport::new(
        "pairwise_nonneg",
        pairs,
        None,
        tol,
        worst,
        witness,
    ))
}

/// Planar cone-inclusion evidence: the angular interval spanned by sampled
/// displacements `T(x) - x` approximates the cone generated by the range of
/// `T - I`; a cosmic direction must lie inside it. Violation is the angular
/// distance of `q` from the sampled interval (negative margin when inside).
/// Sampling evidence only, not a proof; the witness records the interval
/// `[start, start + span]` in radians.
pub fn check_cone_inclusion_2d<O: Operator + ?Sized>(
    q: &[f64],
    op: &O,
    n_samples: u64,
    bx: &SampleBox,
    tol: f64,
    seed: u64,
) -> Result<CheckReport, TheoremsError> {
    if op.dimension() != 2 {
        return Err(TheoremsError::NotTwoDimensional {
            dim: op.dimension(),
        });
    }
    check_box(op, bx)?;
    check_unit(q)?;
    if n_samples == 0 {
        return Err(TheoremsError::TooFewSamples);
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut x = vec![0.0; 2];
    let mut tx = vec![0.0; 2];
    let mut angles = Vec::with_capacity(n_samples as usize);
    for _ in 0..n_samples {
        bx.fill(&mut rng, &mut x);
        op.apply(&x, &mut tx);
        let (dx, dy) = (tx[0] - x[0], tx[1] - x[1]);
        if dx == 0.0 && dy == 0.0 {
            continue;
        }
        angles.push(dy.atan2(dx));
    }
    if angles.is_empty() {
        return Err(TheoremsError::EmptyAngularSpan);
    }
    // Minimal covering arc: the complement of the largest gap between
    // consecutive sampled angles on the circle.
    angles.sort_unstable_by(f64::total_cmp);
    let tau = std::f64::consts::TAU;
    let mut max_gap = angles[0] + tau - angles[angles.len() - 1];
    let mut start = angles[0];
    for w in angles.windows(2) {
        let gap = w[1] - w[0];
        if gap > max_gap {
            max_gap = gap;
            start = w[1];
        }
    }
    let span = tau - max_gap;
    let rel = (q[1].atan2(q[0]) - start).rem_euclid(tau);
    let violation = if rel <= span {
        // Inside: negative margin to the nearest edge.
        -rel.min(span - rel)
    } else {
        // Outside: circular distance to the interval.
        (rel - span).min(tau - rel)
    };
    let report = CheckReport::new(
        "cone_inclusion_2d",
        angles.len() as u64,
        Some(seed),
        tol,
        violation,
        vec![vec![start, start + span]],
    );
    Ok(report)
}
