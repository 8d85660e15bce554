//! Trial-stream generation under the randomized-block protocol.
//!
//! One setting pair is drawn per block and held for `block_size` trials.
//! Before every trial both ions get a fluorescence check; a trial is heralded
//! when the last `g` checks of its block (fewer at the start of a block)
//! exceed `g · H_thres` photons in total. Background-gas collisions darken
//! the ions and scramble outcomes until they recover.
//!
//! Randomness is split into independent streams (settings, collisions,
//! per-block outcomes, per-block counts), so history-free sources generate
//! blocks in parallel and still reproduce the sequential log exactly.

use rand::distr::weighted::WeightedIndex;
use rand::distr::Distribution;
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rand_distr::Poisson;
use serde::{Deserialize, Serialize};

use crate::chain::{joint_outcome, t_statistic, ChainParams, EstimatorMode, Outcome, SettingPair, TrialRecord};
use crate::error::{Error, Result};
use crate::exec::Execution;
use crate::mixture::MixtureModel;
use crate::quantum::{apply_noise, joint_probabilities, NoiseSpec, TwoQubitState};
use crate::rng::{fork, Stream};
use crate::schedule::ScheduleState;

/// Generative model for trial outcomes.
#[derive(Debug, Clone, PartialEq)]
pub enum SourceModel {
    Quantum { state: TwoQubitState, noise: NoiseSpec },
    Mixture(MixtureModel),
}

impl SourceModel {
    pub fn ideal(state: TwoQubitState) -> Self {
        SourceModel::Quantum {
            state,
            noise: NoiseSpec::default(),
        }
    }

    pub fn is_history_dependent(&self) -> bool {
        match self {
            SourceModel::Quantum { .. } => false,
            SourceModel::Mixture(m) => m.schedule().is_history_dependent(),
        }
    }

    fn prepare(&self, params: &ChainParams) -> Result<PreparedSource<'_>> {
        match self {
            SourceModel::Quantum { state, noise } => {
                noise.validate()?;
                let table = params
                    .settings_set()
                    .into_iter()
                    .map(|pair| Ok(apply_noise(&joint_probabilities(state, pair)?, noise)))
                    .collect::<Result<Vec<_>>>()?;
                Ok(PreparedSource::Table(table))
            }
            SourceModel::Mixture(m) => {
                if m.params().order() != params.order() {
                    return Err(Error::config(
                        "source",
                        format!(
                            "mixture built for N = {} but the protocol uses N = {}",
                            m.params().order(),
                            params.order()
                        ),
                    ));
                }
                Ok(PreparedSource::Mixture(m))
            }
        }
    }
}

enum PreparedSource<'a> {
    Table(Vec<[f64; 4]>),
    Mixture(&'a MixtureModel),
}

impl PreparedSource<'_> {
    fn probabilities(&self, pair: SettingPair, state: &ScheduleState) -> Result<[f64; 4]> {
        match self {
            PreparedSource::Table(t) => Ok(t[pair.position()]),
            PreparedSource::Mixture(m) => m.probabilities(pair, state),
        }
    }
}

/// How the setting pair of each block is chosen.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SettingsOrder {
    /// Drawn by the settings generator according to `pair_weights`.
    #[default]
    Random,
    /// Chain order, repeating; the non-randomized runs.
    Cyclic,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ProtocolSpec {
    pub blocks: u64,
    pub block_size: u32,
    /// 1-based position of the trial of each block used for certification.
    pub analyzed_index: u32,
    pub settings: SettingsOrder,
    /// Separate seed for the settings stream; the master seed when absent.
    pub settings_seed: Option<u64>,
    /// Probability per chain position; uniform when absent.
    pub pair_weights: Option<Vec<f64>>,
}

impl Default for ProtocolSpec {
    fn default() -> Self {
        Self {
            blocks: 1398,
            block_size: 100,
            analyzed_index: 50,
            settings: SettingsOrder::Random,
            settings_seed: None,
            pair_weights: None,
        }
    }
}

impl ProtocolSpec {
    pub fn validate(&self, params: &ChainParams) -> Result<()> {
        if self.block_size == 0 {
            return Err(Error::config("protocol.block_size", "must be at least 1"));
        }
        if self.analyzed_index == 0 || self.analyzed_index > self.block_size {
            return Err(Error::config(
                "protocol.analyzed_index",
                format!("must lie in 1..={}, got {}", self.block_size, self.analyzed_index),
            ));
        }
        if let Some(w) = &self.pair_weights {
            if w.len() != params.pair_count() {
                return Err(Error::config(
                    "protocol.pair_weights",
                    format!("expected {} weights, got {}", params.pair_count(), w.len()),
                ));
            }
            if w.iter().any(|x| !(*x >= 0.0)) || (w.iter().sum::<f64>() - 1.0).abs() > 1e-9 {
                return Err(Error::config(
                    "protocol.pair_weights",
                    "weights must be non-negative and sum to 1",
                ));
            }
        }
        Ok(())
    }

    pub fn total_trials(&self) -> u64 {
        self.blocks * self.block_size as u64
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct HeraldSpec {
    /// Number of preceding checks summed, `g`.
    pub window: u32,
    /// Per-check threshold `H_thres`.
    pub threshold: u32,
    /// Mean photon counts per ion during a check or readout.
    pub bright_mean: f64,
    pub dark_mean: f64,
    /// Readout discriminator: more than this many photons reads bright.
    pub readout_threshold: u32,
    /// Derive outcomes from simulated readout counts instead of sampling
    /// them directly.
    pub count_readout: bool,
}

impl Default for HeraldSpec {
    fn default() -> Self {
        Self {
            window: 8,
            threshold: 20,
            bright_mean: 30.0,
            dark_mean: 2.0,
            readout_threshold: 6,
            count_readout: false,
        }
    }
}

impl HeraldSpec {
    pub fn validate(&self) -> Result<()> {
        if self.window == 0 {
            return Err(Error::config("herald.window", "must be at least 1"));
        }
        if !(self.bright_mean > 0.0) {
            return Err(Error::config("herald.bright_mean", "must be positive"));
        }
        if !(self.dark_mean > 0.0) {
            return Err(Error::config("herald.dark_mean", "must be positive"));
        }
        Ok(())
    }

    /// Herald decision from the checks preceding a trial (at most `g`).
    pub fn is_heralded(&self, window: &[u32]) -> bool {
        if window.is_empty() {
            return false;
        }
        let total: u64 = window.iter().map(|&c| c as u64).sum();
        total > window.len() as u64 * self.threshold as u64
    }

    /// Herald flags for a block whose check `j` precedes trial `j`.
    pub fn flags(&self, checks: &[u32]) -> Vec<bool> {
        (0..checks.len())
            .map(|q| self.is_heralded(self.window_for(checks, q)))
            .collect()
    }

    fn window_for<'a>(&self, checks: &'a [u32], trial: usize) -> &'a [u32] {
        let g = self.window as usize;
        let start = (trial + 1).saturating_sub(g);
        &checks[start..=trial]
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase", deny_unknown_fields)]
pub enum Recovery {
    Permanent,
    Transient { duration: u64 },
}

impl Default for Recovery {
    fn default() -> Self {
        Recovery::Transient { duration: 50 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CollisionSpec {
    /// Probability per trial that a collision starts.
    pub event_rate: f64,
    pub recovery: Recovery,
}

impl CollisionSpec {
    pub fn validate(&self) -> Result<()> {
        if !(0.0..=1.0).contains(&self.event_rate) {
            return Err(Error::config(
                "collisions.event_rate",
                format!("must be a probability in [0, 1], got {}", self.event_rate),
            ));
        }
        if let Recovery::Transient { duration: 0 } = self.recovery {
            return Err(Error::config("collisions.recovery.duration", "must be at least 1"));
        }
        Ok(())
    }

    /// Whether the ions are compromised at each trial of the whole stream.
    fn timeline(&self, seed: u64, trials: u64) -> Vec<bool> {
        if self.event_rate == 0.0 {
            return Vec::new();
        }
        let mut rng = fork(seed, Stream::Collisions, 0);
        let mut remaining: u64 = 0;
        (0..trials)
            .map(|_| {
                if remaining == 0 && rng.random_bool(self.event_rate) {
                    remaining = match self.recovery {
                        Recovery::Permanent => u64::MAX,
                        Recovery::Transient { duration } => duration,
                    };
                }
                if remaining > 0 {
                    if remaining != u64::MAX {
                        remaining -= 1;
                    }
                    true
                } else {
                    false
                }
            })
            .collect()
    }
}

/// Everything needed to generate one log.
#[derive(Debug, Clone, PartialEq)]
pub struct Simulation {
    pub params: ChainParams,
    pub source: SourceModel,
    pub protocol: ProtocolSpec,
    /// `None` disables fluorescence checks; every trial is then heralded.
    pub herald: Option<HeraldSpec>,
    pub collisions: CollisionSpec,
    pub seed: u64,
}

impl Simulation {
    pub fn validate(&self) -> Result<()> {
        self.protocol.validate(&self.params)?;
        if let Some(h) = &self.herald {
            h.validate()?;
        }
        self.collisions.validate()?;
        self.source.prepare(&self.params).map(|_| ())
    }

    pub fn run(&self, exec: Execution) -> Result<Vec<TrialRecord>> {
        self.validate()?;
        let prepared = self.source.prepare(&self.params)?;
        let pairs = self.block_pairs()?;
        let compromised = self.collisions.timeline(self.seed, self.protocol.total_trials());
        let gen = BlockGenerator {
            sim: self,
            source: &prepared,
            compromised: &compromised,
            poisson: self.herald.map(|h| Counts::new(&h)).transpose()?,
        };

        let blocks = self.protocol.blocks as usize;
        let per_block: Vec<Vec<TrialRecord>> = if self.source.is_history_dependent() {
            // the schedule state threads through the whole stream
            let mut state = ScheduleState::default();
            let mut out = Vec::with_capacity(blocks);
            for (b, pair) in pairs.iter().enumerate() {
                out.push(gen.block(b as u64, *pair, &mut state)?);
            }
            out
        } else {
            exec.try_map_range(blocks, |b| {
                let mut state = ScheduleState::default();
                gen.block(b as u64, pairs[b], &mut state)
            })?
        };
        Ok(per_block.into_iter().flatten().collect())
    }

    fn block_pairs(&self) -> Result<Vec<SettingPair>> {
        let set = self.params.settings_set();
        let blocks = self.protocol.blocks as usize;
        match self.protocol.settings {
            SettingsOrder::Cyclic => Ok((0..blocks).map(|b| set[b % set.len()]).collect()),
            SettingsOrder::Random => {
                let weights = self
                    .protocol
                    .pair_weights
                    .clone()
                    .unwrap_or_else(|| vec![1.0; set.len()]);
                let dist = WeightedIndex::new(&weights)
                    .map_err(|e| Error::config("protocol.pair_weights", e.to_string()))?;
                let seed = self.protocol.settings_seed.unwrap_or(self.seed);
                let mut rng = fork(seed, Stream::Settings, 0);
                Ok((0..blocks).map(|_| set[dist.sample(&mut rng)]).collect())
            }
        }
    }
}

/// Free-function entry point mirroring [`Simulation::run`].
pub fn run_protocol(
    params: ChainParams,
    source: SourceModel,
    protocol: ProtocolSpec,
    herald: Option<HeraldSpec>,
    collisions: CollisionSpec,
    seed: u64,
) -> Result<Vec<TrialRecord>> {
    Simulation {
        params,
        source,
        protocol,
        herald,
        collisions,
        seed,
    }
    .run(Execution::default())
}

struct Counts {
    bright: Poisson<f64>,
    dark: Poisson<f64>,
}

impl Counts {
    fn new(h: &HeraldSpec) -> Result<Self> {
        let bright = Poisson::new(h.bright_mean).map_err(|e| Error::config("herald.bright_mean", e.to_string()))?;
        let dark = Poisson::new(h.dark_mean).map_err(|e| Error::config("herald.dark_mean", e.to_string()))?;
        Ok(Self { bright, dark })
    }

    fn ion(&self, bright: bool, rng: &mut ChaCha8Rng) -> u32 {
        let d = if bright { &self.bright } else { &self.dark };
        d.sample(rng) as u32
    }
}

struct BlockGenerator<'a> {
    sim: &'a Simulation,
    source: &'a PreparedSource<'a>,
    compromised: &'a [bool],
    poisson: Option<Counts>,
}

impl BlockGenerator<'_> {
    fn block(&self, block: u64, pair: SettingPair, state: &mut ScheduleState) -> Result<Vec<TrialRecord>> {
        let sim = self.sim;
        let size = sim.protocol.block_size as usize;
        let mut out_rng = fork(sim.seed, Stream::Outcomes, block);
        let mut count_rng = fork(sim.seed, Stream::Counts, block);
        let mut checks: Vec<u32> = Vec::with_capacity(size);
        let mut records = Vec::with_capacity(size);

        for i in 0..size {
            let trial_index = block * size as u64 + i as u64;
            let compromised = self.compromised.get(trial_index as usize).copied().unwrap_or(false);

            let (heralded, check_counts) = match (&sim.herald, &self.poisson) {
                (Some(h), Some(counts)) => {
                    let healthy = !compromised;
                    checks.push(counts.ion(healthy, &mut count_rng) + counts.ion(healthy, &mut count_rng));
                    let window = h.window_for(&checks, i);
                    (h.is_heralded(window), window.to_vec())
                }
                _ => (true, Vec::new()),
            };

            state.trial = trial_index;
            state.block = block;
            let (mut x, mut y) = if compromised {
                (random_outcome(&mut out_rng), random_outcome(&mut out_rng))
            } else {
                let probs = self.source.probabilities(pair, state)?;
                joint_outcome(sample_index(&probs, out_rng.random::<f64>()))
            };
            if let (Some(h), Some(counts)) = (&sim.herald, &self.poisson) {
                if h.count_readout {
                    x = readout(x, h, counts, &mut count_rng);
                    y = readout(y, h, counts, &mut count_rng);
                }
            }
            state.observe(t_statistic(pair, x, y, EstimatorMode::Correlation));

            records.push(TrialRecord {
                trial_index,
                block_index: block,
                pair,
                outcome_a: x,
                outcome_b: y,
                heralded,
                check_counts,
            });
        }
        Ok(records)
    }
}

fn random_outcome(rng: &mut ChaCha8Rng) -> Outcome {
    if rng.random_bool(0.5) {
        Outcome::Bright
    } else {
        Outcome::Dark
    }
}

fn readout(state: Outcome, h: &HeraldSpec, counts: &Counts, rng: &mut ChaCha8Rng) -> Outcome {
    let photons = counts.ion(state == Outcome::Bright, rng);
    if photons > h.readout_threshold {
        Outcome::Bright
    } else {
        Outcome::Dark
    }
}

/// Inverse-CDF draw from a 4-outcome distribution.
fn sample_index(probs: &[f64; 4], u: f64) -> usize {
    let mut acc = 0.0;
    for (i, p) in probs.iter().enumerate() {
        acc += p;
        if u < acc {
            return i;
        }
    }
    // rounding left u above the accumulated mass: take the last live outcome
    probs.iter().rposition(|p| *p > 0.0).unwrap_or(3)
}

/// Analyzed trials extracted from a randomized-block log.
#[derive(Debug, Clone, PartialEq)]
pub struct AnalysisSelection {
    pub trials: Vec<TrialRecord>,
    pub blocks: u64,
    /// Analyzed positions dropped because they were not heralded.
    pub unheralded: u64,
}

impl AnalysisSelection {
    pub fn is_empty(&self) -> bool {
        self.trials.is_empty()
    }

    pub fn n(&self) -> u64 {
        self.trials.len() as u64
    }

    /// `Σ T_i` over the selection.
    pub fn t_sum(&self, params: &ChainParams, mode: EstimatorMode) -> Result<u64> {
        self.trials
            .iter()
            .map(|r| r.t_value(params, mode).map(u64::from))
            .sum()
    }
}

/// The `analyzed_index`-th trial (1-based) of every block, heralded ones only.
/// Blocks are runs of consecutive records sharing a `block_index`.
pub fn extract_analysis_trials(log: &[TrialRecord], analyzed_index: u32) -> Result<AnalysisSelection> {
    if analyzed_index == 0 {
        return Err(Error::invalid("analyzed index is 1-based"));
    }
    let mut trials = Vec::new();
    let mut blocks = 0;
    let mut unheralded = 0;
    for block in log.chunk_by(|a, b| a.block_index == b.block_index) {
        blocks += 1;
        let Some(r) = block.get(analyzed_index as usize - 1) else {
            return Err(Error::ShortBlock {
                block: block[0].block_index,
                len: block.len(),
                index: analyzed_index,
            });
        };
        if r.heralded {
            trials.push(r.clone());
        } else {
            unheralded += 1;
        }
    }
    Ok(AnalysisSelection {
        trials,
        blocks,
        unheralded,
    })
}
