//! Per-trial local weights `p_local^i` for mixture sources.
//!
//! A schedule declares a floor `p_local^min`. Construction rejects a schedule
//! whose attainable weights can dip below that floor, and every emitted
//! weight is audited again at generation time.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum ScheduleKind {
    Constant {
        q: f64,
    },
    /// Linear from `from` to `to` over the first `over` trials, then flat.
    Ramp {
        from: f64,
        to: f64,
        over: u64,
    },
    /// `base`, except `raised` right after `run_length` consecutive `T = 1`.
    OutcomeReactive {
        base: f64,
        raised: f64,
        run_length: u32,
    },
    /// Raised-cosine drift between `low` and `high` with a period in blocks.
    BlockPeriodic {
        low: f64,
        high: f64,
        period: u64,
    },
}

impl ScheduleKind {
    fn range(&self) -> (f64, f64) {
        match *self {
            ScheduleKind::Constant { q } => (q, q),
            ScheduleKind::Ramp { from, to, .. } => (from.min(to), from.max(to)),
            ScheduleKind::OutcomeReactive { base, raised, .. } => (base.min(raised), base.max(raised)),
            ScheduleKind::BlockPeriodic { low, high, .. } => (low.min(high), low.max(high)),
        }
    }
}

/// Where a stream currently is; the only input a schedule may consult.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct ScheduleState {
    pub trial: u64,
    pub block: u64,
    pub run_of_ones: u32,
}

impl ScheduleState {
    pub fn at(trial: u64, block: u64) -> Self {
        Self {
            trial,
            block,
            run_of_ones: 0,
        }
    }

    /// Records the `T` value of the trial just generated.
    pub fn observe(&mut self, t: u8) {
        if t == 1 {
            self.run_of_ones = self.run_of_ones.saturating_add(1);
        } else {
            self.run_of_ones = 0;
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LocalWeightSchedule {
    kind: ScheduleKind,
    declared_min: f64,
}

impl LocalWeightSchedule {
    pub fn new(kind: ScheduleKind, declared_min: f64) -> Result<Self> {
        if !(0.0..=1.0).contains(&declared_min) {
            return Err(Error::config(
                "schedule.declared_min",
                format!("must lie in [0, 1], got {declared_min}"),
            ));
        }
        let (lo, hi) = kind.range();
        if !(0.0..=1.0).contains(&lo) || !(0.0..=1.0).contains(&hi) {
            return Err(Error::config(
                "schedule",
                format!("weights must lie in [0, 1], got range [{lo}, {hi}]"),
            ));
        }
        if lo < declared_min {
            return Err(Error::config(
                "schedule.declared_min",
                format!("schedule can emit {lo}, below its declared minimum {declared_min}"),
            ));
        }
        match kind {
            ScheduleKind::Ramp { over: 0, .. } => {
                return Err(Error::config("schedule.over", "ramp length must be at least 1"))
            }
            ScheduleKind::OutcomeReactive { run_length: 0, .. } => {
                return Err(Error::config("schedule.run_length", "must be at least 1"))
            }
            ScheduleKind::BlockPeriodic { period: 0, .. } => {
                return Err(Error::config("schedule.period", "must be at least 1"))
            }
            _ => {}
        }
        Ok(Self { kind, declared_min })
    }

    pub fn constant(q: f64) -> Result<Self> {
        Self::new(ScheduleKind::Constant { q }, q)
    }

    pub fn ramp(from: f64, to: f64, over: u64, declared_min: f64) -> Result<Self> {
        Self::new(ScheduleKind::Ramp { from, to, over }, declared_min)
    }

    pub fn outcome_reactive(base: f64, raised: f64, run_length: u32) -> Result<Self> {
        Self::new(
            ScheduleKind::OutcomeReactive {
                base,
                raised,
                run_length,
            },
            base.min(raised),
        )
    }

    pub fn block_periodic(low: f64, high: f64, period: u64) -> Result<Self> {
        Self::new(ScheduleKind::BlockPeriodic { low, high, period }, low.min(high))
    }

    pub fn kind(&self) -> &ScheduleKind {
        &self.kind
    }

    pub fn declared_min(&self) -> f64 {
        self.declared_min
    }

    /// Whether the weight depends on earlier outcomes.
    pub fn is_history_dependent(&self) -> bool {
        matches!(self.kind, ScheduleKind::OutcomeReactive { .. })
    }

    pub fn weight(&self, state: &ScheduleState) -> f64 {
        match self.kind {
            ScheduleKind::Constant { q } => q,
            ScheduleKind::Ramp { from, to, over } => {
                let frac = state.trial.min(over) as f64 / over as f64;
                from + (to - from) * frac
            }
            ScheduleKind::OutcomeReactive {
                base,
                raised,
                run_length,
            } => {
                if state.run_of_ones >= run_length {
                    raised
                } else {
                    base
                }
            }
            ScheduleKind::BlockPeriodic { low, high, period } => {
                let phase = 2.0 * PI * (state.block % period) as f64 / period as f64;
                low + (high - low) * 0.5 * (1.0 - phase.cos())
            }
        }
    }

    /// [`weight`](Self::weight) with the floor enforced.
    pub fn emit(&self, state: &ScheduleState) -> Result<f64> {
        let w = self.weight(state);
        if w < self.declared_min || !(0.0..=1.0).contains(&w) {
            return Err(Error::ScheduleBelowMinimum {
                weight: w,
                declared_min: self.declared_min,
                trial: state.trial,
            });
        }
        Ok(w)
    }
}

/// Named reference schedules sharing the floor `p_min`; `horizon` sets the
/// ramp length in trials.
pub fn adversary_schedules(p_min: f64, horizon: u64) -> Result<Vec<(&'static str, LocalWeightSchedule)>> {
    Ok(vec![
        ("constant", LocalWeightSchedule::constant(p_min)?),
        ("ramp", LocalWeightSchedule::ramp(p_min, 1.0, horizon.max(1), p_min)?),
        (
            "outcome-reactive",
            LocalWeightSchedule::outcome_reactive(p_min, (p_min + 0.4).min(1.0), 3)?,
        ),
        ("block-periodic", LocalWeightSchedule::block_periodic(p_min, 1.0, 50)?),
    ])
}
