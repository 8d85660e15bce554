//! TOML run configuration.
//!
//! ```toml
//! seed = 2017
//!
//! [chain]
//! order = 6
//!
//! [source]
//! kind = "quantum"
//! state = "phi+"
//! noise = { detection_flip_a = 0.003, detection_flip_b = 0.003 }
//!
//! [protocol]        # defaults shown
//! blocks = 1398
//! block_size = 100
//! analyzed_index = 50
//! settings = "random"
//!
//! [herald]          # omit to disable heralding
//! window = 8
//! threshold = 20
//! bright_mean = 30.0
//! dark_mean = 2.0
//! readout_threshold = 6
//!
//! [collisions]
//! event_rate = 0.0
//! recovery = { kind = "transient", duration = 50 }
//! ```
//!
//! A mixture source replaces the `[source]` table:
//!
//! ```toml
//! [source]
//! kind = "mixture"
//! local = "cbi-saturating"
//! schedule = { kind = "outcome-reactive", base = 0.5, raised = 0.9, run_length = 3 }
//! ```

use std::path::Path;

use serde::Deserialize;

use super::log::LogHeader;
use crate::chain::{ChainParams, EstimatorMode};
use crate::error::{Error, Result};
use crate::mixture::{LocalModel, LocalPreset, MixtureModel, NonlocalBox};
use crate::quantum::{BellState, NoiseSpec};
use crate::rng::RNG_NAME;
use crate::schedule::{LocalWeightSchedule, ScheduleKind};
use crate::simulator::{CollisionSpec, HeraldSpec, ProtocolSpec, Simulation, SourceModel};

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Config {
    #[serde(default)]
    pub seed: u64,
    pub chain: ChainConfig,
    pub source: SourceConfig,
    #[serde(default)]
    pub protocol: ProtocolSpec,
    #[serde(default)]
    pub herald: Option<HeraldSpec>,
    #[serde(default)]
    pub collisions: CollisionSpec,
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ChainConfig {
    pub order: usize,
    #[serde(default = "default_alpha")]
    pub alpha: f64,
    /// Defaults to anticorrelation for phi- sources, correlation otherwise.
    #[serde(default)]
    pub mode: Option<EstimatorMode>,
}

fn default_alpha() -> f64 {
    0.05
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum SourceConfig {
    Quantum {
        #[serde(default)]
        state: BellState,
        #[serde(default)]
        noise: NoiseSpec,
    },
    Mixture {
        schedule: ScheduleKind,
        /// Defaults to the smallest weight the schedule can emit.
        #[serde(default)]
        declared_min: Option<f64>,
        #[serde(default)]
        local: LocalPreset,
    },
}

impl Config {
    pub fn from_toml(text: &str) -> Result<Self> {
        let config: Config = toml::from_str(text).map_err(|e| Error::Config {
            field: "config".into(),
            reason: e.to_string().trim_end().to_string(),
        })?;
        config.to_simulation()?;
        Ok(config)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        Self::from_toml(&text)
    }

    pub fn params(&self) -> Result<ChainParams> {
        ChainParams::new(self.chain.order, self.chain.alpha).map_err(|e| match e {
            Error::ChainOrder(_) => Error::config("chain.order", e.to_string()),
            Error::Alpha(_) => Error::config("chain.alpha", e.to_string()),
            other => other,
        })
    }

    pub fn mode(&self) -> EstimatorMode {
        self.chain.mode.unwrap_or(match self.source {
            SourceConfig::Quantum {
                state: BellState::PhiMinus,
                ..
            } => EstimatorMode::Anticorrelation,
            _ => EstimatorMode::Correlation,
        })
    }

    pub fn state_label(&self) -> String {
        match &self.source {
            SourceConfig::Quantum { state, .. } => state.label().to_string(),
            SourceConfig::Mixture { local, .. } => {
                let local = serde_json::to_value(local).ok().and_then(|v| v.as_str().map(String::from));
                format!("mixture/{}", local.unwrap_or_default())
            }
        }
    }

    pub fn source_model(&self) -> Result<SourceModel> {
        let params = self.params()?;
        match &self.source {
            SourceConfig::Quantum { state, noise } => {
                noise.validate()?;
                Ok(SourceModel::Quantum {
                    state: state.state(),
                    noise: *noise,
                })
            }
            SourceConfig::Mixture {
                schedule,
                declared_min,
                local,
            } => {
                let floor = declared_min.unwrap_or_else(|| schedule_floor(schedule));
                let schedule = LocalWeightSchedule::new(schedule.clone(), floor).map_err(|e| match e {
                    Error::Config { field, reason } => Error::config(format!("source.{field}"), reason),
                    other => other,
                })?;
                let model = MixtureModel::new(
                    params,
                    schedule,
                    LocalModel::preset(params.order(), *local),
                    NonlocalBox::ChainPr,
                )?;
                Ok(SourceModel::Mixture(model))
            }
        }
    }

    /// The fully validated simulation this config describes.
    pub fn to_simulation(&self) -> Result<Simulation> {
        let sim = Simulation {
            params: self.params()?,
            source: self.source_model()?,
            protocol: self.protocol.clone(),
            herald: self.herald,
            collisions: self.collisions,
            seed: self.seed,
        };
        sim.validate()?;
        Ok(sim)
    }

    pub fn log_header(&self, total_records: u64) -> LogHeader {
        let mut h = LogHeader::new(self.chain.order, self.mode(), total_records);
        h.state = Some(self.state_label());
        h.protocol = Some(self.protocol.clone());
        h.herald = self.herald;
        h.seed = Some(self.seed);
        h.rng = Some(RNG_NAME.to_string());
        h
    }
}

fn schedule_floor(kind: &ScheduleKind) -> f64 {
    match *kind {
        ScheduleKind::Constant { q } => q,
        ScheduleKind::Ramp { from, to, .. } => from.min(to),
        ScheduleKind::OutcomeReactive { base, raised, .. } => base.min(raised),
        ScheduleKind::BlockPeriodic { low, high, .. } => low.min(high),
    }
}
