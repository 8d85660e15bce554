//! Settings geometry, per-trial statistics and the chained Bell estimators.
//!
//! Everything here is computed from a trial log alone; no model of the source
//! is needed. Setting pairs are keyed by their integer indices `(k, l)` and
//! angles are derived on demand.

use std::f64::consts::PI;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::exec::Execution;

/// Binary measurement outcome of one party.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Outcome {
    Bright,
    Dark,
}

impl Outcome {
    pub fn flipped(self) -> Self {
        match self {
            Outcome::Bright => Outcome::Dark,
            Outcome::Dark => Outcome::Bright,
        }
    }

    pub fn symbol(self) -> char {
        match self {
            Outcome::Bright => 'B',
            Outcome::Dark => 'D',
        }
    }

    pub fn from_symbol(c: char) -> Option<Self> {
        match c {
            'B' => Some(Outcome::Bright),
            'D' => Some(Outcome::Dark),
            _ => None,
        }
    }
}

/// Index of a joint outcome in the `[BB, BD, DB, DD]` ordering used for all
/// probability vectors and count tables.
pub fn joint_index(x: Outcome, y: Outcome) -> usize {
    match (x, y) {
        (Outcome::Bright, Outcome::Bright) => 0,
        (Outcome::Bright, Outcome::Dark) => 1,
        (Outcome::Dark, Outcome::Bright) => 2,
        (Outcome::Dark, Outcome::Dark) => 3,
    }
}

/// Inverse of [`joint_index`].
pub fn joint_outcome(index: usize) -> (Outcome, Outcome) {
    match index {
        0 => (Outcome::Bright, Outcome::Bright),
        1 => (Outcome::Bright, Outcome::Dark),
        2 => (Outcome::Dark, Outcome::Bright),
        3 => (Outcome::Dark, Outcome::Dark),
        _ => panic!("joint outcome index {index} out of range"),
    }
}

/// `1` when both parties saw the same outcome.
pub fn c_statistic(x: Outcome, y: Outcome) -> u8 {
    u8::from(x == y)
}

/// Whether the estimator works with correlations (prepared state Φ₊) or
/// anticorrelations (Φ₋). This is experiment metadata, never inferred.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum EstimatorMode {
    #[default]
    Correlation,
    Anticorrelation,
}

impl EstimatorMode {
    pub fn name(self) -> &'static str {
        match self {
            EstimatorMode::Correlation => "correlation",
            EstimatorMode::Anticorrelation => "anticorrelation",
        }
    }
}

impl std::str::FromStr for EstimatorMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "correlation" | "phi+" => Ok(EstimatorMode::Correlation),
            "anticorrelation" | "phi-" => Ok(EstimatorMode::Anticorrelation),
            other => Err(Error::invalid(format!(
                "unknown estimator mode '{other}' (expected correlation or anticorrelation)"
            ))),
        }
    }
}

/// Chain order `N` and significance level.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ChainParams {
    order: usize,
    alpha: f64,
}

impl ChainParams {
    pub const DEFAULT_ALPHA: f64 = 0.05;

    pub fn new(order: usize, alpha: f64) -> Result<Self> {
        if order < 2 {
            return Err(Error::ChainOrder(order));
        }
        if !(alpha > 0.0 && alpha < 1.0) {
            return Err(Error::Alpha(alpha));
        }
        Ok(Self { order, alpha })
    }

    pub fn with_order(order: usize) -> Result<Self> {
        Self::new(order, Self::DEFAULT_ALPHA)
    }

    pub fn order(&self) -> usize {
        self.order
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    /// Number of admissible setting pairs, `2N`.
    pub fn pair_count(&self) -> usize {
        2 * self.order
    }

    /// The admissible pairs in chain order `a1b1, a1b2, a2b2, ..., aNbN, aNb1`.
    pub fn settings_set(&self) -> Vec<SettingPair> {
        (0..self.pair_count())
            .map(|j| self.pair_at(j).expect("position within chain"))
            .collect()
    }

    /// Pair at chain position `position` (0-based).
    pub fn pair_at(&self, position: usize) -> Option<SettingPair> {
        if position >= self.pair_count() {
            return None;
        }
        let a = position / 2 + 1;
        let b = if position % 2 == 0 {
            a
        } else if a == self.order {
            1
        } else {
            a + 1
        };
        Some(SettingPair {
            order: self.order,
            a,
            b,
        })
    }

    /// Validates `(a, b)` against the chain and returns the pair.
    pub fn pair(&self, a: usize, b: usize) -> Result<SettingPair> {
        let n = self.order;
        let in_range = (1..=n).contains(&a) && (1..=n).contains(&b);
        let admissible = in_range && (b == a || b == a + 1 || (a == n && b == 1));
        if admissible {
            Ok(SettingPair { order: n, a, b })
        } else {
            Err(Error::InadmissiblePair { a, b, order: n })
        }
    }
}

/// Free-function form of [`ChainParams::settings_set`].
pub fn settings_set(params: &ChainParams) -> Vec<SettingPair> {
    params.settings_set()
}

/// One admissible setting pair `a_k b_l` of an order-`N` chain.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
pub struct SettingPair {
    order: usize,
    #[serde(rename = "a_index")]
    a: usize,
    #[serde(rename = "b_index")]
    b: usize,
}

impl SettingPair {
    pub fn order(&self) -> usize {
        self.order
    }

    pub fn a_index(&self) -> usize {
        self.a
    }

    pub fn b_index(&self) -> usize {
        self.b
    }

    /// `a_k = (2k - 1) π / 2N`
    pub fn angle_a(&self) -> f64 {
        (2 * self.a - 1) as f64 * PI / (2 * self.order) as f64
    }

    /// `b_l = -(l - 1) π / N`
    pub fn angle_b(&self) -> f64 {
        -((self.b - 1) as f64) * PI / self.order as f64
    }

    /// The pair `a_N b_1` that closes the chain.
    pub fn is_closing(&self) -> bool {
        self.a == self.order && self.b == 1
    }

    /// 0-based position in chain order.
    pub fn position(&self) -> usize {
        if self.is_closing() {
            2 * self.order - 1
        } else if self.a == self.b {
            2 * (self.a - 1)
        } else {
            2 * (self.a - 1) + 1
        }
    }
}

impl fmt::Display for SettingPair {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "a{}b{}", self.a, self.b)
    }
}

/// Per-trial score: for Φ₊ data `1` on a mismatch, except on the closing pair
/// where a match scores `1`. Anticorrelation mode flips every case.
pub fn t_statistic(pair: SettingPair, x: Outcome, y: Outcome, mode: EstimatorMode) -> u8 {
    let differ = x != y;
    let score = if pair.is_closing() { !differ } else { differ };
    match mode {
        EstimatorMode::Correlation => u8::from(score),
        EstimatorMode::Anticorrelation => u8::from(!score),
    }
}

/// One recorded trial.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TrialRecord {
    pub trial_index: u64,
    pub block_index: u64,
    pub pair: SettingPair,
    pub outcome_a: Outcome,
    pub outcome_b: Outcome,
    pub heralded: bool,
    /// Photon counts of the fluorescence checks that preceded this trial.
    pub check_counts: Vec<u32>,
}

impl TrialRecord {
    pub fn c_value(&self) -> u8 {
        c_statistic(self.outcome_a, self.outcome_b)
    }

    /// [`t_statistic`] after checking the pair belongs to `params`' chain.
    pub fn t_value(&self, params: &ChainParams, mode: EstimatorMode) -> Result<u8> {
        let pair = params.pair(self.pair.a, self.pair.b)?;
        if self.pair.order != params.order() {
            return Err(Error::InadmissiblePair {
                a: pair.a,
                b: pair.b,
                order: params.order(),
            });
        }
        Ok(t_statistic(pair, self.outcome_a, self.outcome_b, mode))
    }
}

/// Which trials enter the estimators.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum HeraldFilter {
    #[default]
    HeraldedOnly,
    All,
}

impl HeraldFilter {
    pub fn admits(self, record: &TrialRecord) -> bool {
        match self {
            HeraldFilter::HeraldedOnly => record.heralded,
            HeraldFilter::All => true,
        }
    }
}

/// Joint-outcome counts for every pair of a chain, in chain order. Tallies
/// from disjoint chunks of a log merge by addition.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ChainTally {
    order: usize,
    counts: Vec<[u64; 4]>,
}

impl ChainTally {
    pub fn new(params: &ChainParams) -> Self {
        Self {
            order: params.order(),
            counts: vec![[0; 4]; params.pair_count()],
        }
    }

    /// Builds a tally from per-pair `[BB, BD, DB, DD]` counts in chain order.
    pub fn from_counts(params: &ChainParams, counts: Vec<[u64; 4]>) -> Result<Self> {
        if counts.len() != params.pair_count() {
            return Err(Error::invalid(format!(
                "expected {} count rows for N = {}, got {}",
                params.pair_count(),
                params.order(),
                counts.len()
            )));
        }
        Ok(Self {
            order: params.order(),
            counts,
        })
    }

    pub fn from_records(
        records: &[TrialRecord],
        params: &ChainParams,
        filter: HeraldFilter,
        exec: Execution,
    ) -> Result<Self> {
        // Validate up front so the fold itself cannot fail.
        for r in records {
            if filter.admits(r) {
                r.t_value(params, EstimatorMode::Correlation)?;
            }
        }
        let empty = Self::new(params);
        Ok(exec.fold_chunks(
            records,
            16_384,
            empty,
            |mut tally, r| {
                if filter.admits(r) {
                    tally.add(r.pair, r.outcome_a, r.outcome_b);
                }
                tally
            },
            |mut a, b| {
                a.merge(&b);
                a
            },
        ))
    }

    pub fn order(&self) -> usize {
        self.order
    }

    pub fn add(&mut self, pair: SettingPair, x: Outcome, y: Outcome) {
        debug_assert_eq!(pair.order, self.order);
        self.counts[pair.position()][joint_index(x, y)] += 1;
    }

    pub fn merge(&mut self, other: &ChainTally) {
        assert_eq!(self.order, other.order, "tallies of different chain orders");
        for (a, b) in self.counts.iter_mut().zip(&other.counts) {
            for (x, y) in a.iter_mut().zip(b) {
                *x += y;
            }
        }
    }

    pub fn counts(&self) -> &[[u64; 4]] {
        &self.counts
    }

    pub fn total_at(&self, position: usize) -> u64 {
        self.counts[position].iter().sum()
    }

    /// `BB + DD` at a chain position.
    pub fn matches_at(&self, position: usize) -> u64 {
        self.counts[position][0] + self.counts[position][3]
    }

    pub fn total(&self) -> u64 {
        self.counts.iter().flatten().sum()
    }

    /// `Σ T_i` implied by the per-pair counts.
    pub fn t_sum(&self, mode: EstimatorMode) -> u64 {
        let last = self.counts.len() - 1;
        let correlation_t: u64 = (0..self.counts.len())
            .map(|j| {
                if j == last {
                    self.matches_at(j)
                } else {
                    self.total_at(j) - self.matches_at(j)
                }
            })
            .sum();
        match mode {
            EstimatorMode::Correlation => correlation_t,
            EstimatorMode::Anticorrelation => self.total() - correlation_t,
        }
    }

    pub fn summaries(&self) -> Vec<PairSummary> {
        (0..self.counts.len())
            .map(|j| {
                let count = self.total_at(j);
                let correlation = if count == 0 {
                    0.0
                } else {
                    self.matches_at(j) as f64 / count as f64
                };
                PairSummary { count, correlation }
            })
            .collect()
    }
}

/// Trial count and mean correlation `C̄` of one setting pair.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PairSummary {
    pub count: u64,
    pub correlation: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PairEstimate {
    pub pair: SettingPair,
    pub count: u64,
    /// Averaged correlation (or anticorrelation) `χ_j`.
    pub mean: f64,
    /// `ε_j = sqrt(χ_j (1 - χ_j) / (M_j - 1))`
    pub stderr: f64,
}

/// `Î_N` (or `Î^A_N`) with its i.i.d. propagated standard error.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ChainEstimate {
    pub order: usize,
    pub mode: EstimatorMode,
    pub value: f64,
    pub stderr: f64,
    pub per_pair: Vec<PairEstimate>,
}

impl ChainEstimate {
    /// Estimator from per-pair summaries given in chain order.
    pub fn from_summaries(
        params: &ChainParams,
        mode: EstimatorMode,
        summaries: &[PairSummary],
    ) -> Result<Self> {
        if summaries.len() != params.pair_count() {
            return Err(Error::invalid(format!(
                "expected {} pair summaries for N = {}, got {}",
                params.pair_count(),
                params.order(),
                summaries.len()
            )));
        }
        let last = summaries.len() - 1;
        let mut value = 0.0;
        let mut variance = 0.0;
        let mut per_pair = Vec::with_capacity(summaries.len());
        for (j, s) in summaries.iter().enumerate() {
            let pair = params.pair_at(j).expect("position within chain");
            if s.count == 0 {
                return Err(Error::MissingPair {
                    a: pair.a,
                    b: pair.b,
                });
            }
            if s.count < 2 {
                return Err(Error::TooFewTrials {
                    a: pair.a,
                    b: pair.b,
                    count: s.count,
                });
            }
            if !(0.0..=1.0).contains(&s.correlation) {
                return Err(Error::invalid(format!(
                    "mean correlation of {pair} is {} (outside [0, 1])",
                    s.correlation
                )));
            }
            let chi = match mode {
                EstimatorMode::Correlation => s.correlation,
                EstimatorMode::Anticorrelation => 1.0 - s.correlation,
            };
            let stderr = (chi * (1.0 - chi) / (s.count - 1) as f64).sqrt();
            value += if j == last { 1.0 - chi } else { chi };
            variance += stderr * stderr;
            per_pair.push(PairEstimate {
                pair,
                count: s.count,
                mean: chi,
                stderr,
            });
        }
        Ok(Self {
            order: params.order(),
            mode,
            value,
            stderr: variance.sqrt(),
            per_pair,
        })
    }

    pub fn from_tally(tally: &ChainTally, params: &ChainParams, mode: EstimatorMode) -> Result<Self> {
        if tally.order() != params.order() {
            return Err(Error::invalid("tally and parameters have different chain orders"));
        }
        Self::from_summaries(params, mode, &tally.summaries())
    }
}

/// `Î_N` over the heralded trials of a log.
pub fn chain_estimate(
    log: &[TrialRecord],
    params: &ChainParams,
    mode: EstimatorMode,
) -> Result<ChainEstimate> {
    chain_estimate_with(log, params, mode, HeraldFilter::HeraldedOnly, Execution::default())
}

pub fn chain_estimate_with(
    log: &[TrialRecord],
    params: &ChainParams,
    mode: EstimatorMode,
    filter: HeraldFilter,
    exec: Execution,
) -> Result<ChainEstimate> {
    let tally = ChainTally::from_records(log, params, filter, exec)?;
    ChainEstimate::from_tally(&tally, params, mode)
}

/// CHSH value `B = 2(1 - I_2) + 2` with its standard error.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ChshValue {
    pub value: f64,
    pub stderr: f64,
}

pub fn chsh_parameter(estimate: &ChainEstimate) -> Result<ChshValue> {
    if estimate.order != 2 {
        return Err(Error::invalid(format!(
            "the CHSH parameter needs an N = 2 estimate, got N = {}",
            estimate.order
        )));
    }
    Ok(chsh_from_i2(estimate.value, estimate.stderr))
}

pub fn chsh_from_i2(i2: f64, stderr: f64) -> ChshValue {
    ChshValue {
        value: 2.0 * (1.0 - i2) + 2.0,
        stderr: 2.0 * stderr,
    }
}

/// Minimum detection efficiency for a loophole-free violation of the order-N
/// chained inequality with a maximally entangled state.
pub fn min_detection_efficiency(order: usize) -> Result<f64> {
    if order < 2 {
        return Err(Error::ChainOrder(order));
    }
    let n = order as f64;
    Ok(2.0 / ((n / (n - 1.0)) * (PI / (2.0 * n)).cos() + 1.0))
}
