//! Monte Carlo coverage of the local-content bound.
//!
//! Each run simulates `n` analyzed trials from a local/nonlocal mixture whose
//! local weight follows a schedule, computes `p_hat` and records whether the
//! interval `[0, p_hat]` contains the schedule's declared minimum. Runs use
//! independent forked seeds and are spread across threads.

use serde::{Deserialize, Serialize};

use super::bound::local_content_bound;
use crate::chain::{ChainParams, EstimatorMode};
use crate::error::Result;
use crate::exec::Execution;
use crate::mixture::{LocalModel, LocalPreset, MixtureModel, NonlocalBox};
use crate::rng::{child_seed, Stream};
use crate::schedule::LocalWeightSchedule;
use crate::simulator::{CollisionSpec, ProtocolSpec, Simulation, SourceModel};

#[derive(Debug, Clone, PartialEq)]
pub struct CoverageSpec {
    pub schedule: LocalWeightSchedule,
    /// Analyzed trials per simulated experiment.
    pub n: u64,
    pub order: usize,
    pub alpha: f64,
    pub runs: u64,
    pub local: LocalPreset,
    pub seed: u64,
}

impl CoverageSpec {
    /// Worst-case local part (`I_N = 1`), so the per-trial bound is tight.
    pub fn new(schedule: LocalWeightSchedule, n: u64, order: usize, alpha: f64, runs: u64) -> Self {
        Self {
            schedule,
            n,
            order,
            alpha,
            runs,
            local: LocalPreset::CbiSaturating,
            seed: 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CoverageReport {
    pub runs: u64,
    pub covered: u64,
    pub coverage: f64,
    pub declared_min: f64,
    pub alpha: f64,
    /// Binomial-proportion standard error at the nominal level `1 - alpha`.
    pub sigma: f64,
    pub mean_p_hat: f64,
}

impl CoverageReport {
    /// Coverage is at least `1 - alpha - 3 sigma`.
    pub fn meets_nominal(&self) -> bool {
        self.coverage >= (1.0 - self.alpha) - 3.0 * self.sigma
    }
}

pub fn coverage_monte_carlo(spec: &CoverageSpec, exec: Execution) -> Result<CoverageReport> {
    let params = ChainParams::new(spec.order, spec.alpha)?;
    let model = MixtureModel::new(
        params,
        spec.schedule.clone(),
        LocalModel::preset(spec.order, spec.local),
        NonlocalBox::ChainPr,
    )?;
    // every trial is analyzed: blocks of one, no heralding
    let protocol = ProtocolSpec {
        blocks: spec.n,
        block_size: 1,
        analyzed_index: 1,
        ..Default::default()
    };
    let declared_min = spec.schedule.declared_min();

    let p_hats = exec.try_map_range(spec.runs as usize, |run| -> Result<f64> {
        let sim = Simulation {
            params,
            source: SourceModel::Mixture(model.clone()),
            protocol: protocol.clone(),
            herald: None,
            collisions: CollisionSpec::default(),
            seed: child_seed(spec.seed, Stream::Coverage, run as u64),
        };
        // runs are already parallel; keep each one on its own thread
        let log = sim.run(Execution::Sequential)?;
        let mut t = 0;
        for r in &log {
            t += u64::from(r.t_value(&params, EstimatorMode::Correlation)?);
        }
        Ok(local_content_bound(t, log.len() as u64, spec.order, spec.alpha)?.p_hat)
    })?;

    let runs = p_hats.len() as u64;
    let covered = p_hats.iter().filter(|p| **p >= declared_min).count() as u64;
    let denom = runs.max(1) as f64;
    Ok(CoverageReport {
        runs,
        covered,
        coverage: covered as f64 / denom,
        declared_min,
        alpha: spec.alpha,
        sigma: (spec.alpha * (1.0 - spec.alpha) / denom).sqrt(),
        mean_p_hat: p_hats.iter().sum::<f64>() / denom,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn all_local_with_the_default_model_is_always_covered() {
        let mut spec = CoverageSpec::new(LocalWeightSchedule::constant(1.0).unwrap(), 200, 6, 0.05, 50);
        spec.local = LocalPreset::UniformConstant;
        let r = coverage_monte_carlo(&spec, Execution::Parallel).unwrap();
        assert_eq!(r.coverage, 1.0);
        assert!(r.meets_nominal());
    }

    #[test]
    fn small_constant_run_covers() {
        let spec = CoverageSpec::new(LocalWeightSchedule::constant(0.5).unwrap(), 300, 6, 0.05, 300);
        let r = coverage_monte_carlo(&spec, Execution::Parallel).unwrap();
        assert!(r.meets_nominal(), "{r:?}");
        assert!(r.mean_p_hat > 0.5);
    }

    #[test]
    fn parallel_and_sequential_agree() {
        let mut spec = CoverageSpec::new(LocalWeightSchedule::outcome_reactive(0.5, 0.9, 3).unwrap(), 100, 3, 0.05, 40);
        spec.seed = 9;
        let a = coverage_monte_carlo(&spec, Execution::Parallel).unwrap();
        let b = coverage_monte_carlo(&spec, Execution::Sequential).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn a_false_floor_is_detected() {
        // the data come from q = 0.2, but the bound is checked against 0.9:
        // a pure nonlocal-heavy source should exclude 0.9 most of the time
        let spec = CoverageSpec::new(LocalWeightSchedule::constant(0.2).unwrap(), 2000, 2, 0.05, 40);
        let r = coverage_monte_carlo(&spec, Execution::Parallel).unwrap();
        assert!(r.mean_p_hat < 0.9, "{r:?}");
    }
}
