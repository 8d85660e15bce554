//! Local/nonlocal mixtures `P = p_local P^L + (1 - p_local) P^NL`.

use serde::{Deserialize, Serialize};

use crate::chain::{ChainParams, Outcome, SettingPair};
use crate::error::{Error, Result};
use crate::quantum::chain_value_of;
use crate::schedule::{LocalWeightSchedule, ScheduleState};

const NONSIGNALING_TOLERANCE: f64 = 1e-12;

/// Fixed outcome for every local setting of each party.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DeterministicStrategy {
    a: Vec<Outcome>,
    b: Vec<Outcome>,
}

impl DeterministicStrategy {
    pub fn new(a: Vec<Outcome>, b: Vec<Outcome>) -> Result<Self> {
        if a.len() != b.len() || a.len() < 2 {
            return Err(Error::invalid(
                "a deterministic strategy needs one outcome per setting for both parties",
            ));
        }
        Ok(Self { a, b })
    }

    pub fn constant(order: usize, x: Outcome, y: Outcome) -> Self {
        Self {
            a: vec![x; order],
            b: vec![y; order],
        }
    }

    pub fn order(&self) -> usize {
        self.a.len()
    }

    pub fn outcomes(&self, pair: SettingPair) -> (Outcome, Outcome) {
        (self.a[pair.a_index() - 1], self.b[pair.b_index() - 1])
    }
}

/// Named presets for the local part, used by config files.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum LocalPreset {
    /// Uniform over the four constant strategies; `I_N = N`.
    #[default]
    UniformConstant,
    /// Party a always bright, party b always dark; `I_N = 1` exactly.
    CbiSaturating,
}

/// A convex mixture of deterministic strategies (a point of the local
/// polytope).
#[derive(Debug, Clone, PartialEq)]
pub struct LocalModel {
    order: usize,
    strategies: Vec<(DeterministicStrategy, f64)>,
}

impl LocalModel {
    pub fn new(order: usize, strategies: Vec<(DeterministicStrategy, f64)>) -> Result<Self> {
        if strategies.is_empty() {
            return Err(Error::invalid("local model needs at least one strategy"));
        }
        if strategies.iter().any(|(s, w)| s.order() != order || !(*w >= 0.0)) {
            return Err(Error::invalid(
                "local strategies must match the chain order and carry non-negative weights",
            ));
        }
        let total: f64 = strategies.iter().map(|(_, w)| w).sum();
        if (total - 1.0).abs() > 1e-12 {
            return Err(Error::invalid(format!("local strategy weights sum to {total}, not 1")));
        }
        Ok(Self { order, strategies })
    }

    pub fn preset(order: usize, preset: LocalPreset) -> Self {
        match preset {
            LocalPreset::UniformConstant => Self::uniform_constant(order),
            LocalPreset::CbiSaturating => Self::cbi_saturating(order),
        }
    }

    pub fn uniform_constant(order: usize) -> Self {
        use Outcome::*;
        let strategies = [(Bright, Bright), (Bright, Dark), (Dark, Bright), (Dark, Dark)]
            .into_iter()
            .map(|(x, y)| (DeterministicStrategy::constant(order, x, y), 0.25))
            .collect();
        Self { order, strategies }
    }

    pub fn cbi_saturating(order: usize) -> Self {
        Self {
            order,
            strategies: vec![(
                DeterministicStrategy::constant(order, Outcome::Bright, Outcome::Dark),
                1.0,
            )],
        }
    }

    pub fn probabilities(&self, pair: SettingPair) -> [f64; 4] {
        let mut p = [0.0; 4];
        for (s, w) in &self.strategies {
            let (x, y) = s.outcomes(pair);
            p[crate::chain::joint_index(x, y)] += w;
        }
        p
    }

    pub fn chain_value(&self) -> f64 {
        let params = ChainParams::with_order(self.order).expect("order validated");
        chain_value_of(&params, |pair| Ok(self.probabilities(pair))).expect("infallible")
    }
}

/// The nonlocal part.
#[derive(Debug, Clone, PartialEq)]
pub enum NonlocalBox {
    /// Perfect anticorrelation on every chain pair except the closing one,
    /// which is perfectly correlated; uniform marginals, `I_N = 0`.
    ChainPr,
    /// Arbitrary per-pair `[BB, BD, DB, DD]` rows in chain order.
    Table(Vec<[f64; 4]>),
}

impl NonlocalBox {
    pub fn probabilities(&self, pair: SettingPair) -> [f64; 4] {
        match self {
            NonlocalBox::ChainPr => {
                if pair.is_closing() {
                    [0.5, 0.0, 0.0, 0.5]
                } else {
                    [0.0, 0.5, 0.5, 0.0]
                }
            }
            NonlocalBox::Table(rows) => rows[pair.position()],
        }
    }

    /// Checks normalization and that neither party's marginal depends on the
    /// other's setting.
    pub fn check_nonsignaling(&self, params: &ChainParams) -> Result<()> {
        if let NonlocalBox::Table(rows) = self {
            if rows.len() != params.pair_count() {
                return Err(Error::invalid(format!(
                    "nonlocal table has {} rows, expected {}",
                    rows.len(),
                    params.pair_count()
                )));
            }
            for row in rows {
                let sum: f64 = row.iter().sum();
                if row.iter().any(|p| *p < 0.0) || (sum - 1.0).abs() > NONSIGNALING_TOLERANCE {
                    return Err(Error::invalid("nonlocal table rows must be probability vectors"));
                }
            }
        }
        check_nonsignaling(params, |pair| self.probabilities(pair))
    }
}

/// Verifies that `P(x | a_k)` is the same for both pairs containing `a_k`
/// (and likewise for `b_l`).
pub fn check_nonsignaling<F>(params: &ChainParams, distribution: F) -> Result<()>
where
    F: Fn(SettingPair) -> [f64; 4],
{
    let n = params.order();
    for k in 1..=n {
        // a_k appears with b_k and with b_{k+1} (b_1 for k = N)
        let next = if k == n { 1 } else { k + 1 };
        let p1 = distribution(params.pair(k, k)?);
        let p2 = distribution(params.pair(k, next)?);
        if ((p1[0] + p1[1]) - (p2[0] + p2[1])).abs() > NONSIGNALING_TOLERANCE {
            return Err(Error::invalid(format!("marginal of a{k} depends on b's setting")));
        }
        // b_k appears with a_k and a_{k-1} (a_N for k = 1)
        let prev = if k == 1 { n } else { k - 1 };
        let q1 = distribution(params.pair(k, k)?);
        let q2 = distribution(params.pair(prev, k)?);
        if ((q1[0] + q1[2]) - (q2[0] + q2[2])).abs() > NONSIGNALING_TOLERANCE {
            return Err(Error::invalid(format!("marginal of b{k} depends on a's setting")));
        }
    }
    Ok(())
}

#[derive(Debug, Clone, PartialEq)]
pub struct MixtureModel {
    params: ChainParams,
    schedule: LocalWeightSchedule,
    local: LocalModel,
    nonlocal: NonlocalBox,
}

impl MixtureModel {
    pub fn new(
        params: ChainParams,
        schedule: LocalWeightSchedule,
        local: LocalModel,
        nonlocal: NonlocalBox,
    ) -> Result<Self> {
        if local.order != params.order() {
            return Err(Error::invalid("local model order differs from the chain order"));
        }
        if local.chain_value() < 1.0 - 1e-12 {
            return Err(Error::invalid("local model violates the chained inequality"));
        }
        nonlocal.check_nonsignaling(&params)?;
        Ok(Self {
            params,
            schedule,
            local,
            nonlocal,
        })
    }

    /// Default parts: uniform constant strategies and the chain PR box.
    pub fn with_schedule(params: ChainParams, schedule: LocalWeightSchedule) -> Result<Self> {
        let local = LocalModel::uniform_constant(params.order());
        Self::new(params, schedule, local, NonlocalBox::ChainPr)
    }

    pub fn params(&self) -> &ChainParams {
        &self.params
    }

    pub fn schedule(&self) -> &LocalWeightSchedule {
        &self.schedule
    }

    pub fn local(&self) -> &LocalModel {
        &self.local
    }

    pub fn nonlocal(&self) -> &NonlocalBox {
        &self.nonlocal
    }

    /// Mixture at an explicit local weight.
    pub fn probabilities_with_weight(&self, pair: SettingPair, p_local: f64) -> [f64; 4] {
        let l = self.local.probabilities(pair);
        let nl = self.nonlocal.probabilities(pair);
        std::array::from_fn(|i| p_local * l[i] + (1.0 - p_local) * nl[i])
    }

    /// Mixture at the weight the schedule emits for `state`.
    pub fn probabilities(&self, pair: SettingPair, state: &ScheduleState) -> Result<[f64; 4]> {
        let w = self.schedule.emit(state)?;
        Ok(self.probabilities_with_weight(pair, w))
    }

    /// Expected `I_N` at a fixed local weight.
    pub fn chain_value_at(&self, p_local: f64) -> f64 {
        chain_value_of(&self.params, |pair| Ok(self.probabilities_with_weight(pair, p_local)))
            .expect("infallible")
    }
}

/// Free-function form of [`MixtureModel::probabilities`].
pub fn mixture_probabilities(
    model: &MixtureModel,
    pair: SettingPair,
    history: &ScheduleState,
) -> Result<[f64; 4]> {
    model.probabilities(pair, history)
}
