//! Engine-level invariants: starting-point independence of the direction
//! clusters, bounded-gap direction agreement, divergence of the iterate
//! norms, guard stops, and the translation sanity results.

use cosmiclab::engine::{
    cosmic_report, iterate, min_displacement_estimates, EngineError, Schedule, Trajectory,
    Translation,
};
use cosmiclab::prox2d::{MaxSeparable2D, PaperParams, Prox2dOperator};
use cosmiclab::seqspace::TruncatedGradientOperator;

const PROX_TOL: f64 = 1e-12;

fn paper_handle(n_max: u32) -> Prox2dOperator {
    let op = MaxSeparable2D::from_paper_params(PaperParams::new(n_max).unwrap());
    Prox2dOperator::new(op, PROX_TOL).unwrap()
}

fn angle(u: &[f64], w: &[f64]) -> f64 {
    let dot: f64 = u.iter().zip(w).map(|(a, b)| a * b).sum();
    dot.clamp(-1.0, 1.0).acos()
}

fn norm(x: &[f64]) -> f64 {
    x.iter().map(|v| v * v).sum::<f64>().sqrt()
}

/// Two starts, one cluster set: the accumulation structure does not depend on
/// where the iteration begins.
#[test]
fn starting_point_independence_of_clusters() {
    let op = paper_handle(5);
    let run = |x0: [f64; 2]| -> Trajectory {
        iterate(&op, &x0, 100_000, &Schedule::LevelCrossing).unwrap()
    };
    let a = cosmic_report(&run([0.0, 0.0]), 4.0, 0.1);
    let b = cosmic_report(&run([10.0, -7.0]), 4.0, 0.1);
    assert_eq!(a.clusters.len(), 2, "expected both designed directions");
    assert_eq!(a.clusters.len(), b.clusters.len());
    for ca in &a.clusters {
        let best = b
            .clusters
            .iter()
            .map(|cb| angle(&ca.center, &cb.center))
            .fold(f64::INFINITY, f64::min);
        assert!(
            best <= 0.05,
            "unmatched cluster {:?} (angle {best})",
            ca.center
        );
    }
}

/// Non-expansiveness keeps two runs within their initial distance, which in
/// turn pins their normalized iterates together once the norms grow.
#[test]
fn bounded_gap_keeps_directions_together() {
    let op = paper_handle(5);
    let indices = vec![1, 10, 100, 1_000, 10_000, 50_000];
    let schedule = Schedule::Explicit {
        indices: indices.clone(),
    };
    let x0 = [0.0, 0.0];
    let y0 = [10.0, -7.0];
    let a = iterate(&op, &x0, 50_000, &schedule).unwrap();
    let b = iterate(&op, &y0, 50_000, &schedule).unwrap();
    let gap0 = norm(&[y0[0] - x0[0], y0[1] - x0[1]]);
    assert_eq!(a.checkpoints.len(), b.checkpoints.len());
    for (ca, cb) in a.checkpoints.iter().zip(&b.checkpoints) {
        assert_eq!(ca.k, cb.k);
        let gap = norm(&[ca.state[0] - cb.state[0], ca.state[1] - cb.state[1]]);
        assert!(gap <= gap0 * (1.0 + 1e-9), "gap {gap} at k {}", ca.k);
        if ca.norm >= 50.0 {
            let da: Vec<f64> = ca.state.iter().map(|v| v / ca.norm).collect();
            let db: Vec<f64> = cb.state.iter().map(|v| v / cb.norm).collect();
            let diff = norm(&[da[0] - db[0], da[1] - db[1]]);
            assert!(
                diff <= 2.0 * gap0 / ca.norm,
                "direction gap {diff} at k {}",
                ca.k
            );
        }
    }
}

/// Iterate norms are unbounded for both fixed-point-free operators.
#[test]
fn norms_diverge_along_snapshots() {
    let prox = paper_handle(5);
    let traj = iterate(
        &prox,
        &[0.0, 0.0],
        50_000,
        &Schedule::Geometric { rho: 2.0 },
    )
    .unwrap();
    for w in traj.checkpoints.windows(2) {
        assert!(w[1].norm > w[0].norm);
    }
    assert!(traj.checkpoints.last().unwrap().norm > 100.0);

    let grad = TruncatedGradientOperator::new(16).unwrap();
    let traj = iterate(&grad, &[0.0; 16], 10_000, &Schedule::Geometric { rho: 2.0 }).unwrap();
    for w in traj.checkpoints.windows(2) {
        assert!(w[1].norm > w[0].norm);
    }
    assert!(traj.checkpoints.last().unwrap().norm > 10.0);
}

/// Both displacement estimates shrink with run length for the prox operator
/// (its minimal displacement vector is zero).
#[test]
fn displacement_estimates_shrink_for_the_prox_operator() {
    let op = paper_handle(5);
    let schedule = Schedule::Geometric { rho: 4.0 };
    // 1000 steps sit inside the third breakpoint segment, 50000 inside the
    // fourth; the per-step displacement is constant within a segment, so the
    // comparison needs the two runs to end in different segments.
    let short = min_displacement_estimates(&iterate(&op, &[0.0, 0.0], 1_000, &schedule).unwrap());
    let long = min_displacement_estimates(&iterate(&op, &[0.0, 0.0], 50_000, &schedule).unwrap());
    assert!(norm(&long.baillon) < norm(&short.baillon));
    assert!(norm(&long.pazy) < norm(&short.pazy));
}

/// Translations: the normalized iterates equal the fixed direction from the
/// first step and the estimators recover the displacement.
#[test]
fn translation_direction_and_estimates() {
    let v = vec![0.6, -0.8];
    let op = Translation::new(v.clone());
    let traj = iterate(&op, &[0.0, 0.0], 1_000, &Schedule::Geometric { rho: 1.5 }).unwrap();
    for c in &traj.checkpoints {
        let dir: Vec<f64> = c.state.iter().map(|x| x / c.norm).collect();
        assert!((dir[0] + 0.6).abs() <= 1e-12 && (dir[1] - 0.8).abs() <= 1e-12);
    }
    // x^k = -k v in exact arithmetic; rounding stays near machine scale.
    assert!((traj.final_state[0] + 600.0).abs() <= 1e-10);
    assert!((traj.final_state[1] - 800.0).abs() <= 1e-10);

    // While k v is exactly representable the estimators are bit-exact.
    let short = iterate(&op, &[0.0, 0.0], 2, &Schedule::Geometric { rho: 2.0 }).unwrap();
    let est = min_displacement_estimates(&short);
    assert_eq!(est.baillon, v);
    assert_eq!(est.pazy, v);
}

/// Reaching the truncation guard stops the run and is reported as an
/// outcome; starting past it is an error.
#[test]
fn truncation_guard_stops_and_rejects() {
    let op = paper_handle(2); // guard level -1
    let traj = iterate(&op, &[0.0, 0.0], 100, &Schedule::LevelCrossing).unwrap();
    let stop = traj.guard_stop.expect("guard should have fired");
    assert_eq!(stop, traj.final_k);
    assert!(traj.final_k < 100);
    let final_level = op.inner().level([traj.final_state[0], traj.final_state[1]]);
    assert!(final_level <= -1.0);

    let err = iterate(&op, &[5.0, 3.0], 10, &Schedule::LevelCrossing);
    assert!(matches!(err, Err(EngineError::StartBeyondGuard { .. })));
}
