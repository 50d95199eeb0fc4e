//! Running the iteration and storing its checkpointed history.

use std::io::{self, Write};

use serde::Serialize;

use super::{l2_norm, EngineError, Operator, Schedule};

/// One recorded iterate.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Checkpoint {
    pub k: u64,
    pub state: Vec<f64>,
    pub norm: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub level: Option<f64>,
}

/// A checkpointed run of `x^{k+1} = T(x^k)`.
///
/// Snapshots sit at the scheduled indices (plus the last index); the final
/// consecutive pair is always kept so per-step displacement estimates work
/// even when no two snapshots are adjacent. Levels are recorded only for
/// operators that expose them.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Trajectory {
    pub operator: String,
    pub start: Vec<f64>,
    pub checkpoints: Vec<Checkpoint>,
    /// Number of applications actually performed.
    pub final_k: u64,
    /// `x^{K-1}`.
    pub penultimate: Vec<f64>,
    /// `x^K`.
    pub final_state: Vec<f64>,
    /// Set when the run stopped at the operator's truncation guard, with the
    /// step index at which it stopped. A guard stop is an outcome, not an
    /// error.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub guard_stop: Option<u64>,
}

impl Trajectory {
    /// The stored consecutive tail pair `(x^{K-1}, x^K)`.
    pub fn final_pair(&self) -> (&[f64], &[f64]) {
        (&self.penultimate, &self.final_state)
    }

    /// Writes `k, coord_1..coord_d, norm[, level]` rows. The level column is
    /// present only when every checkpoint carries one.
    pub fn write_csv<W: Write>(&self, mut w: W) -> io::Result<()> {
        let dim = self.start.len();
        let with_level = self.checkpoints.iter().all(|c| c.level.is_some());
        write!(w, "k")?;
        for i in 1..=dim {
            write!(w, ",coord_{i}")?;
        }
        write!(w, ",norm")?;
        if with_level {
            write!(w, ",level")?;
        }
        writeln!(w)?;
        for c in &self.checkpoints {
            write!(w, "{}", c.k)?;
            for v in &c.state {
                write!(w, ",{v}")?;
            }
            write!(w, ",{}", c.norm)?;
            if with_level {
                write!(w, ",{}", c.level.unwrap())?;
            }
            writeln!(w)?;
        }
        Ok(())
    }
}

/// Runs `k_max` applications of `op` from `x0`, recording snapshots per the
/// schedule (plus the final index). Stops early, reporting it in the result,
/// if the operator's truncation guard is reached.
pub fn iterate<O>(
    op: &O,
    x0: &[f64],
    k_max: u64,
    schedule: &Schedule,
) -> Result<Trajectory, EngineError>
where
    O: Operator + ?Sized,
{
    iterate_with(op, x0, k_max, schedule, |_, _, _| {})
}

/// [`iterate`] with a per-step observer called as
/// `observe(k, x^{k-1}, x^k)` after every application. Observers let audits
/// over every iterate (step norms, invariant residuals, distances to
/// targets) run on trajectories far too long to store.
pub fn iterate_with<O, F>(
    op: &O,
    x0: &[f64],
    k_max: u64,
    schedule: &Schedule,
    mut observe: F,
) -> Result<Trajectory, EngineError>
where
    O: Operator + ?Sized,
    F: FnMut(u64, &[f64], &[f64]),
{
    let dim = op.dimension();
    if x0.len() != dim {
        return Err(EngineError::DimensionMismatch {
            expected: dim,
            got: x0.len(),
        });
    }
    if k_max == 0 {
        return Err(EngineError::ZeroIterations);
    }
    if x0.iter().any(|c| !c.is_finite()) {
        return Err(EngineError::NonFiniteStart);
    }
    let start_level = op.level(x0);
    schedule.validate(start_level.is_some(), op.label())?;
    let guard = op.level_guard();
    if let (Some(g), Some(l0)) = (guard, start_level) {
        if l0 <= g {
            return Err(EngineError::StartBeyondGuard {
                level: l0,
                guard: g,
            });
        }
    }

    let mut recorder = schedule.recorder();
    let mut checkpoints: Vec<Checkpoint> = Vec::new();
    let mut cur = x0.to_vec();
    let mut next = vec![0.0; dim];
    let mut guard_stop = None;
    let mut k = 0u64;

    while k < k_max {
        op.apply(&cur, &mut next);
        let kn = k + 1;
        observe(kn, &cur, &next);

        // Level is evaluated once per step and shared by the schedule, the
        // checkpoint record, and the guard.
        let level = op.level(&next);
        if recorder.due(kn, level) {
            checkpoints.push(Checkpoint {
                k: kn,
                state: next.clone(),
                norm: l2_norm(&next),
                level,
            });
        }
        if let (Some(g), Some(l)) = (guard, level) {
            if l <= g {
                guard_stop = Some(kn);
                k = kn;
                break;
            }
        }
        std::mem::swap(&mut cur, &mut next);
        k = kn;
    }

    // After the loop `next` holds x^K and `cur` holds x^{K-1} on a guard
    // stop; otherwise the last swap leaves them reversed.
    let (penultimate, final_state) = if guard_stop.is_some() {
        (cur, next)
    } else {
        (next, cur)
    };

    Ok(Trajectory {
        operator: op.label().to_owned(),
        start: x0.to_vec(),
        checkpoints,
        final_k: k,
        penultimate,
        final_state,
        guard_stop,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::engine::Translation;

    #[test]
    fn translation_has_closed_form() {
        let op = Translation::new(vec![0.6, -0.8]);
        let traj = iterate(&op, &[0.0, 0.0], 10, &Schedule::Geometric { rho: 2.0 }).unwrap();
        assert_eq!(traj.final_k, 10);
        // x^10 = -10 v, up to accumulated rounding of repeated subtraction.
        assert!((traj.final_state[0] + 6.0).abs() < 1e-14);
        assert!((traj.final_state[1] - 8.0).abs() < 1e-14);
        // Final pair differs by exactly one application.
        let (prev, last) = traj.final_pair();
        let mut expect = vec![0.0; 2];
        op.apply(prev, &mut expect);
        assert_eq!(expect, last);
    }

    #[test]
    fn checkpoints_hold_only_scheduled_indices_in_order() {
        let op = Translation::new(vec![1.0]);
        let traj = iterate(&op, &[0.0], 100, &Schedule::Geometric { rho: 1.5 }).unwrap();
        for w in traj.checkpoints.windows(2) {
            assert!(w[0].k < w[1].k);
        }
        // ceil(1.5^j) never hits 100 exactly; the tail state lives in the
        // final pair, not in an extra checkpoint.
        assert!(traj.checkpoints.last().unwrap().k < 100);
        assert_eq!(traj.final_k, 100);
    }

    #[test]
    fn dimension_and_argument_errors() {
        let op = Translation::new(vec![1.0, 2.0]);
        assert_eq!(
            iterate(&op, &[0.0], 5, &Schedule::Geometric { rho: 2.0 }),
            Err(EngineError::DimensionMismatch {
                expected: 2,
                got: 1
            })
        );
        assert_eq!(
            iterate(&op, &[0.0, 0.0], 0, &Schedule::Geometric { rho: 2.0 }),
            Err(EngineError::ZeroIterations)
        );
        assert_eq!(
            iterate(&op, &[f64::NAN, 0.0], 5, &Schedule::Geometric { rho: 2.0 }),
            Err(EngineError::NonFiniteStart)
        );
        // Translation exposes no level: level-crossing schedule refused.
        assert!(matches!(
            iterate(&op, &[0.0, 0.0], 5, &Schedule::LevelCrossing),
            Err(EngineError::LevelUnsupported { .. })
        ));
    }

    #[test]
    fn observer_sees_every_step_in_order() {
        let op = Translation::new(vec![1.0]);
        let mut seen = Vec::new();
        iterate_with(
            &op,
            &[0.0],
            5,
            &Schedule::Explicit { indices: vec![5] },
            |k, prev, next| seen.push((k, prev[0], next[0])),
        )
        .unwrap();
        assert_eq!(seen.len(), 5);
        for (i, &(k, prev, next)) in seen.iter().enumerate() {
            assert_eq!(k, i as u64 + 1);
            assert_eq!(next, prev - 1.0);
        }
    }

    #[test]
    fn csv_export_round_trips_numbers() {
        let op = Translation::new(vec![0.1, 0.2]);
        let traj = iterate(&op, &[0.0, 0.0], 8, &Schedule::Geometric { rho: 2.0 }).unwrap();
        let mut buf = Vec::new();
        traj.write_csv(&mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let mut lines = text.lines();
        assert_eq!(lines.next().unwrap(), "k,coord_1,coord_2,norm");
        let first: Vec<&str> = lines.next().unwrap().split(',').collect();
        assert_eq!(first[0], "1");
        // Shortest round-trip float formatting: parsing restores the value.
        assert_eq!(
            first[1].parse::<f64>().unwrap(),
            traj.checkpoints[0].state[0]
        );
    }
}
