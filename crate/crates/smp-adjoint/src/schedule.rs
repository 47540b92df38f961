//! Thermo-mechanical loading schedule for the programming cycle.

use crate::error::{Error, Result};
use serde::{Deserialize, Serialize};

/// Named phase of the thermo-mechanical cycle (informational tag).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum PhaseTag {
    Load,
    Cool,
    Relax,
    Heat,
}

/// One time step of the schedule.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScheduleStep {
    /// Step duration (s).
    pub dt: f64,
    /// Temperature at the end of the step (K).
    pub temperature: f64,
    /// Multiplier of the reference external force.
    pub load_scale: f64,
    pub tag: PhaseTag,
}

/// Ordered step list plus the initial and reference temperatures.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Schedule {
    /// Temperature before the first step (K).
    pub t_initial: f64,
    /// Stress-free reference temperature for thermal strain (K).
    pub t_ref: f64,
    pub steps: Vec<ScheduleStep>,
}

impl Schedule {
    pub fn validate(&self) -> Result<()> {
        if self.steps.is_empty() {
            return Err(Error::Config("schedule has no steps".into()));
        }
        for (i, s) in self.steps.iter().enumerate() {
            if !(s.dt > 0.0) {
                return Err(Error::Config(format!(
                    "schedule step {} has non-positive dt = {}",
                    i + 1,
                    s.dt
                )));
            }
            if !s.temperature.is_finite() || !s.load_scale.is_finite() {
                return Err(Error::Config(format!("schedule step {} has non-finite data", i + 1)));
            }
        }
        Ok(())
    }

    pub fn len(&self) -> usize {
        self.steps.len()
    }

    pub fn is_empty(&self) -> bool {
        self.steps.is_empty()
    }

    /// Temperature at the end of step `i` (1-based); step 0 is the initial
    /// temperature.
    pub fn temperature_at(&self, i: usize) -> f64 {
        if i == 0 {
            self.t_initial
        } else {
            self.steps[i - 1].temperature
        }
    }

    /// Schedule truncated after step `m` (used by the FD oracle, which only
    /// needs the objective step).
    pub fn truncated(&self, m: usize) -> Schedule {
        Schedule {
            t_initial: self.t_initial,
            t_ref: self.t_ref,
            steps: self.steps[..m.min(self.steps.len())].to_vec(),
        }
    }
}
