//! Human-readable and structured (JSON) command reports.
//!
//! Field names of the structured form are a stable interface; any breaking
//! change bumps [`REPORT_VERSION`].

use std::fmt;

use serde::Serialize;

use crate::certify::LocalContentBound;
use crate::chain::{ChainEstimate, ChshValue, EstimatorMode};
use crate::error::Result;

pub const REPORT_VERSION: u32 = 1;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Status {
    Ok,
    NoData,
}

/// Serializes any report as pretty JSON with a trailing newline.
pub fn to_json<T: Serialize>(report: &T) -> Result<String> {
    Ok(serde_json::to_string_pretty(report)? + "\n")
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SimulateReport {
    pub report_version: u32,
    pub output: String,
    pub order: usize,
    pub seed: u64,
    pub blocks: u64,
    pub records: u64,
    pub heralded: u64,
    pub sha256: String,
}

impl fmt::Display for SimulateReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "wrote {} records ({} blocks, N = {}) to {}", self.records, self.blocks, self.order, self.output)?;
        writeln!(f, "heralded: {} of {}", self.heralded, self.records)?;
        writeln!(f, "seed: {}", self.seed)?;
        writeln!(f, "sha256: {}", self.sha256)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EstimateReport {
    pub report_version: u32,
    pub status: Status,
    pub source: String,
    pub order: usize,
    pub mode: EstimatorMode,
    /// Whether unheralded trials were dropped before estimating.
    pub herald_filter_applied: bool,
    pub records_total: u64,
    pub records_used: u64,
    pub estimate: Option<ChainEstimate>,
    pub chsh: Option<ChshValue>,
    pub ideal_value: f64,
    pub eta_min: f64,
}

impl fmt::Display for EstimateReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "source: {}", self.source)?;
        writeln!(f, "N = {}, mode = {}", self.order, self.mode.name())?;
        let filter = if self.herald_filter_applied { "heralded only" } else { "no herald filtering" };
        writeln!(f, "trials used: {} of {} ({filter})", self.records_used, self.records_total)?;
        let Some(est) = &self.estimate else {
            return writeln!(f, "status: no data");
        };
        writeln!(f, "{:<8} {:>10} {:>10} {:>10}", "pair", "count", "mean", "stderr")?;
        for p in &est.per_pair {
            writeln!(f, "{:<8} {:>10} {:>10.5} {:>10.5}", p.pair.to_string(), p.count, p.mean, p.stderr)?;
        }
        let sym = match self.mode {
            EstimatorMode::Correlation => "I",
            EstimatorMode::Anticorrelation => "I^A",
        };
        writeln!(f, "{sym}_{} = {:.5} +/- {:.5}", self.order, est.value, est.stderr)?;
        writeln!(f, "ideal quantum value: {:.5}", self.ideal_value)?;
        writeln!(f, "minimum detection efficiency: {:.4}", self.eta_min)?;
        if let Some(b) = &self.chsh {
            writeln!(f, "B_CHSH = {:.4} +/- {:.4}", b.value, b.stderr)?;
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CertifyReport {
    pub report_version: u32,
    pub status: Status,
    pub source: String,
    pub order: usize,
    pub mode: EstimatorMode,
    pub analyzed_index: Option<u32>,
    pub blocks: Option<u64>,
    /// Analyzed positions dropped by the herald.
    pub unheralded: Option<u64>,
    pub t: u64,
    pub n: u64,
    /// `n` was not fixed before the data were taken (e.g. set by heralding).
    pub n_data_dependent: bool,
    pub bounds: Vec<LocalContentBound>,
    /// Lowest upper bound on the local fraction attainable with CHSH.
    pub chsh_floor: f64,
}

impl fmt::Display for CertifyReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "source: {}", self.source)?;
        writeln!(f, "N = {}, mode = {}", self.order, self.mode.name())?;
        if let (Some(idx), Some(blocks)) = (self.analyzed_index, self.blocks) {
            writeln!(
                f,
                "analyzed trial {idx} of each block: {} blocks, {} unheralded",
                blocks,
                self.unheralded.unwrap_or(0)
            )?;
        }
        writeln!(f, "t = {}, n = {}", self.t, self.n)?;
        if self.status == Status::NoData {
            writeln!(f, "status: no data (no analyzed trials; nothing is excluded)")?;
        }
        for b in &self.bounds {
            writeln!(
                f,
                "alpha = {:<6} p_hat = {:.4}   {}% confidence interval for p_local^min: [0, {:.3}]",
                b.alpha,
                b.p_hat,
                (100_000.0 * (1.0 - b.alpha)).round() / 1000.0,
                b.p_hat
            )?;
        }
        writeln!(f, "lowest upper bound attainable with CHSH: {:.3}", self.chsh_floor)?;
        if self.n_data_dependent {
            writeln!(
                f,
                "note: n was not fixed in advance; the stated confidence levels assume it was"
            )?;
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FidelityReport {
    pub report_version: u32,
    pub b_chsh: f64,
    pub stderr: f64,
    pub f50: f64,
    pub f95: f64,
}

impl fmt::Display for FidelityReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "B_CHSH = {} +/- {}", self.b_chsh, self.stderr)?;
        writeln!(f, "fidelity lower bound (50%): {:.3}", self.f50)?;
        writeln!(f, "fidelity lower bound (95%): {:.3}", self.f95)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepRow {
    pub order: usize,
    pub ideal: f64,
    pub simulated: Option<f64>,
    pub simulated_stderr: Option<f64>,
    pub eta_min: f64,
}
