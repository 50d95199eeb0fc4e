//! Snapshot schedules: which iteration indices get recorded.

use serde::{Deserialize, Serialize};

use super::EngineError;

/// When to record a snapshot along a run. Long runs store only O(log k)
/// geometric checkpoints or the handful of level crossings, never the full
/// sequence.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Schedule {
    /// Record at `k = ceil(rho^j)` for `j = 0, 1, ...`; requires `rho > 1`.
    Geometric { rho: f64 },
    /// Record the first iterate whose level reaches each of `-1, -2, ...`.
    /// Only defined for operators exposing a level function.
    LevelCrossing,
    /// Record exactly the listed indices (sorted and deduplicated).
    Explicit { indices: Vec<u64> },
}

impl Schedule {
    pub(crate) fn validate(&self, has_level: bool, label: &str) -> Result<(), EngineError> {
        match self {
            Schedule::Geometric { rho } => {
                if !(rho.is_finite() && *rho > 1.0) {
                    return Err(EngineError::InvalidSchedule(format!(
                        "geometric ratio must be finite and > 1, got {rho}"
                    )));
                }
            }
            Schedule::LevelCrossing => {
                if !has_level {
                    return Err(EngineError::LevelUnsupported {
                        label: label.to_owned(),
                    });
                }
            }
            Schedule::Explicit { indices } => {
                if indices.contains(&0) {
                    return Err(EngineError::InvalidSchedule(
                        "explicit indices must be >= 1".to_owned(),
                    ));
                }
            }
        }
        Ok(())
    }

    pub(crate) fn recorder(&self) -> Recorder {
        match self {
            Schedule::Geometric { rho } => Recorder::Geometric {
                rho: *rho,
                power: 1.0,
                next: 1,
            },
            Schedule::LevelCrossing => Recorder::LevelCrossing { next_level: -1.0 },
            Schedule::Explicit { indices } => {
                let mut sorted = indices.clone();
                sorted.sort_unstable();
                sorted.dedup();
                Recorder::Explicit { sorted, pos: 0 }
            }
        }
    }
}

pub(crate) enum Recorder {
    Geometric { rho: f64, power: f64, next: u64 },
    LevelCrossing { next_level: f64 },
    Explicit { sorted: Vec<u64>, pos: usize },
}

impl Recorder {
    /// Whether iterate `k` (with optional level) should be recorded.
    pub(crate) fn due(&mut self, k: u64, level: Option<f64>) -> bool {
        match self {
            Recorder::Geometric { rho, power, next } => {
                if k < *next {
                    return false;
                }
                // Advance past k; repeated ceil(rho^j) values collapse into
                // one snapshot.
                while *next <= k {
                    *power *= *rho;
                    let t = power.ceil();
                    *next = if t > u64::MAX as f64 {
                        u64::MAX
                    } else {
                        t as u64
                    };
                }
                true
            }
            Recorder::LevelCrossing { next_level } => match level {
                Some(l) if l <= *next_level => {
                    // A single step can cross more than one integer level
                    // only if steps exceed unit size, but stay safe anyway.
                    while l <= *next_level {
                        *next_level -= 1.0;
                    }
                    true
                }
                _ => false,
            },
            Recorder::Explicit { sorted, pos } => {
                if *pos < sorted.len() && sorted[*pos] == k {
                    *pos += 1;
                    true
                } else {
                    false
                }
            }
        }
    }
}
