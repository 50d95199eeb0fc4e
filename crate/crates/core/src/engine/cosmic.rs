//! Cosmic-direction extraction: normalized iterates, greedy direction
//! clustering, and the two classical minimal-displacement estimators.

use serde::Serialize;

use super::{angle_between, l2_norm, Trajectory};

/// Default norm threshold below which snapshots are too close to the origin
/// to carry directional information.
pub const DEFAULT_MIN_NORM: f64 = 10.0;

/// Default angular tolerance (radians) for direction clustering.
pub const DEFAULT_EPS_ANGLE: f64 = 0.1;

#[derive(Debug, Clone, Serialize)]
pub struct DirectionSample {
    pub k: u64,
    pub direction: Vec<f64>,
}

#[derive(Debug, Clone, Serialize)]
pub struct DirectionCluster {
    pub center: Vec<f64>,
    pub count: usize,
}

/// The two displacement estimates read off a single trajectory:
/// `x^k = -k v + o(k)` suggests `-x^K / K`, and `x^{k+1} - x^k -> -v`
/// suggests the negated last step.
#[derive(Debug, Clone, Serialize)]
pub struct MinDisplacement {
    pub pazy: Vec<f64>,
    pub baillon: Vec<f64>,
}

/// Directions, normalized iterates, clusters and displacement estimates of
/// one trajectory, bundled for export.
#[derive(Debug, Clone, Serialize)]
pub struct CosmicReport {
    pub operator: String,
    pub min_norm: f64,
    pub eps_angle: f64,
    pub directions: Vec<DirectionSample>,
    pub clusters: Vec<DirectionCluster>,
    pub v_hat_pazy: Vec<f64>,
    pub v_hat_baillon: Vec<f64>,
}

/// Normalizes the recorded snapshots with `||x^k|| >= min_norm`; smaller ones
/// are skipped.
pub fn directions(traj: &Trajectory, min_norm: f64) -> Vec<DirectionSample> {
    assert!(min_norm > 0.0, "min_norm must be positive");
    traj.checkpoints
        .iter()
        .filter(|c| c.norm >= min_norm)
        .map(|c| DirectionSample {
            k: c.k,
            direction: c.state.iter().map(|&v| v / c.norm).collect(),
        })
        .collect()
}

/// Greedy angular clustering: each direction joins the first opened cluster
/// within `eps_angle` of its opening direction, otherwise it opens a new one.
/// After assignment every center is recomputed once as the normalized mean of
/// its members.
pub fn cluster_directions(dirs: &[Vec<f64>], eps_angle: f64) -> Vec<DirectionCluster> {
    assert!(
        eps_angle > 0.0 && eps_angle < std::f64::consts::FRAC_PI_2,
        "eps_angle must lie in (0, pi/2)"
    );
    if dirs.is_empty() {
        return Vec::new();
    }
    let dim = dirs[0].len();
    let mut openers: Vec<&[f64]> = Vec::new();
    let mut sums: Vec<Vec<f64>> = Vec::new();
    let mut counts: Vec<usize> = Vec::new();
    for d in dirs {
        match openers
            .iter()
            .position(|c| angle_between(c, d) <= eps_angle)
        {
            Some(i) => {
                for (s, &v) in sums[i].iter_mut().zip(d) {
                    *s += v;
                }
                counts[i] += 1;
            }
            None => {
                openers.push(d);
                sums.push(d.clone());
                counts.push(1);
            }
        }
    }
    sums.into_iter()
        .zip(counts)
        .map(|(mut s, count)| {
            let n = l2_norm(&s);
            debug_assert!(n > 0.0, "degenerate cluster mean");
            for v in &mut s {
                *v /= n;
            }
            debug_assert_eq!(s.len(), dim);
            DirectionCluster { center: s, count }
        })
        .collect()
}

/// Reads both displacement estimates off the trajectory tail.
pub fn min_displacement_estimates(traj: &Trajectory) -> MinDisplacement {
    let k = traj.final_k as f64;
    let pazy = traj.final_state.iter().map(|&v| -v / k).collect();
    let baillon = traj
        .final_state
        .iter()
        .zip(&traj.penultimate)
        .map(|(&last, &prev)| -(last - prev))
        .collect();
    MinDisplacement { pazy, baillon }
}

/// Builds the full report. Clustering uses only the tail half of the
/// retained directions; the early transient says nothing about accumulation.
pub fn cosmic_report(traj: &Trajectory, min_norm: f64, eps_angle: f64) -> CosmicReport {
    let directions = directions(traj, min_norm);
    let tail: Vec<Vec<f64>> = directions[directions.len() / 2..]
        .iter()
        .map(|d| d.direction.clone())
        .collect();
    let clusters = cluster_directions(&tail, eps_angle);
    let est = min_displacement_estimates(traj);
    CosmicReport {
        operator: traj.operator.clone(),
        min_norm,
        eps_angle,
        directions,
        clusters,
        v_hat_pazy: est.pazy,
        v_hat_baillon: est.baillon,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::engine::{iterate, Operator, Schedule, Translation};
    use crate::prox2d::analytic_direction;

    fn translation_run(v: Vec<f64>, k_max: u64) -> Trajectory {
        let op = Translation::new(v);
        let x0 = vec![0.0; op.dimension()];
        iterate(&op, &x0, k_max, &Schedule::Geometric { rho: 2.0 }).unwrap()
    }

    #[test]
    fn translation_directions_are_constant() {
        let traj = translation_run(vec![0.6, -0.8], 64);
        let dirs = directions(&traj, 1.0);
        assert!(!dirs.is_empty());
        for d in &dirs {
            assert!((d.direction[0] + 0.6).abs() <= 1e-12);
            assert!((d.direction[1] - 0.8).abs() <= 1e-12);
            assert!((l2_norm(&d.direction) - 1.0).abs() <= 1e-12);
        }
    }

    #[test]
    fn min_norm_filters_small_snapshots() {
        let traj = translation_run(vec![1.0], 100);
        // Snapshots at 1,2,4,...,100; norm equals k here.
        let dirs = directions(&traj, 10.0);
        assert!(dirs.iter().all(|d| d.k >= 10));
        assert!(dirs.len() < traj.checkpoints.len());
    }

    #[test]
    fn identical_directions_form_one_cluster() {
        let dirs = vec![vec![1.0, 0.0]; 7];
        let clusters = cluster_directions(&dirs, 0.1);
        assert_eq!(clusters.len(), 1);
        assert_eq!(clusters[0].count, 7);
        assert!((clusters[0].center[0] - 1.0).abs() <= 1e-15);
    }

    #[test]
    fn mutually_far_directions_each_open_a_cluster() {
        let dirs = vec![
            vec![1.0, 0.0],
            vec![0.0, 1.0],
            vec![-1.0, 0.0],
            vec![
                std::f64::consts::FRAC_1_SQRT_2,
                -std::f64::consts::FRAC_1_SQRT_2,
            ],
        ];
        let clusters = cluster_directions(&dirs, 0.3);
        assert_eq!(clusters.len(), dirs.len());
        assert!(clusters.iter().all(|c| c.count == 1));
    }

    #[test]
    fn alternating_breakpoint_directions_split_into_two_clusters() {
        // The designed sequence alternates between two limiting directions.
        let dirs: Vec<Vec<f64>> = (20..=40)
            .map(|n| analytic_direction(n).unwrap().to_vec())
            .collect();
        let clusters = cluster_directions(&dirs, 0.1);
        assert_eq!(clusters.len(), 2);
        let even_limit = [2.0 / 5.0_f64.sqrt(), 1.0 / 5.0_f64.sqrt()];
        let odd_limit = [std::f64::consts::FRAC_1_SQRT_2; 2];
        for c in &clusters {
            let to_even = angle_between(&c.center, &even_limit);
            let to_odd = angle_between(&c.center, &odd_limit);
            assert!(to_even.min(to_odd) < 0.05, "stray center {:?}", c.center);
        }
        let total: usize = clusters.iter().map(|c| c.count).sum();
        assert_eq!(total, dirs.len());
    }

    #[test]
    fn empty_input_clusters_to_nothing() {
        assert!(cluster_directions(&[], 0.1).is_empty());
    }

    #[test]
    fn translation_recovers_its_displacement_exactly_in_two_steps() {
        // x^1 = -v and x^2 = -2v are exactly representable, so both
        // estimators are bit-exact on this short run.
        let traj = translation_run(vec![0.6, -0.8], 2);
        let est = min_displacement_estimates(&traj);
        assert_eq!(est.baillon, vec![0.6, -0.8]);
        assert_eq!(est.pazy, vec![0.6, -0.8]);
    }

    #[test]
    fn report_invariants_hold() {
        let traj = translation_run(vec![0.6, -0.8], 256);
        let report = cosmic_report(&traj, 1.0, 0.1);
        for d in &report.directions {
            assert!((l2_norm(&d.direction) - 1.0).abs() <= 1e-12);
        }
        for c in &report.clusters {
            assert!((l2_norm(&c.center) - 1.0).abs() <= 1e-12);
        }
        let clustered: usize = report.clusters.iter().map(|c| c.count).sum();
        let tail = report.directions.len() - report.directions.len() / 2;
        assert_eq!(clustered, tail);
    }
}
