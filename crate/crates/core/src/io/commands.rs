//! Implementations of the `cbi` subcommands, callable without a process.

use std::io::Write;
use std::path::{Path, PathBuf};

use sha2::{Digest, Sha256};

use super::config::Config;
use super::fixtures::{chain_fixture, fixture, fixture_mode, ChainFixture};
use super::log::{read_log_file, write_log, TrialLog};
use super::report::{
    CertifyReport, EstimateReport, FidelityReport, SimulateReport, Status, SweepRow, REPORT_VERSION,
};
use crate::certify::{local_content_bound, CHSH_QUANTUM_FLOOR};
use crate::chain::{
    chsh_parameter, min_detection_efficiency, ChainEstimate, ChainParams, ChainTally, EstimatorMode,
    HeraldFilter,
};
use crate::error::{Error, Result};
use crate::exec::Execution;
use crate::quantum::{ideal_chain_value, self_test_fidelity, FidelityConfidence, NoiseSpec, TwoQubitState};
use crate::rng::{child_seed, Stream};
use crate::simulator::{
    extract_analysis_trials, CollisionSpec, ProtocolSpec, SettingsOrder, Simulation, SourceModel,
};

/// Where trial data come from.
#[derive(Debug, Clone, PartialEq)]
pub enum Input {
    Log(PathBuf),
    Fixture(String),
}

impl Input {
    fn label(&self) -> String {
        match self {
            Input::Log(p) => p.display().to_string(),
            Input::Fixture(name) => format!("fixture:{name}"),
        }
    }
}

/// Generates the log a config describes.
pub fn simulate_log(config: &Config, exec: Execution) -> Result<TrialLog> {
    let sim = config.to_simulation()?;
    let records = sim.run(exec)?;
    Ok(TrialLog {
        header: config.log_header(records.len() as u64),
        records,
    })
}

pub fn simulate(config: &Config, out: &Path, exec: Execution) -> Result<SimulateReport> {
    let log = simulate_log(config, exec)?;
    let mut bytes = Vec::new();
    write_log(&mut bytes, &log)?;
    std::fs::write(out, &bytes)?;
    Ok(SimulateReport {
        report_version: REPORT_VERSION,
        output: out.display().to_string(),
        order: config.chain.order,
        seed: config.seed,
        blocks: config.protocol.blocks,
        records: log.records.len() as u64,
        heralded: log.records.iter().filter(|r| r.heralded).count() as u64,
        sha256: hex::encode(Sha256::digest(&bytes)),
    })
}

#[derive(Debug, Clone, Copy, Default)]
pub struct EstimateOptions {
    pub filter: HeraldFilter,
    /// Overrides the mode recorded in the log or implied by the fixture.
    pub mode: Option<EstimatorMode>,
}

pub fn estimate(input: &Input, opts: EstimateOptions, exec: Execution) -> Result<EstimateReport> {
    match input {
        Input::Fixture(name) => {
            let mode = opts.mode.unwrap_or(fixture_mode(name)?);
            let (params, est) = match chain_fixture(name, mode)? {
                ChainFixture::Counts { params, tally } => {
                    let est = ChainEstimate::from_tally(&tally, &params, mode)?;
                    (params, est)
                }
                ChainFixture::Summaries { params, summaries } => {
                    let est = ChainEstimate::from_summaries(&params, mode, &summaries)?;
                    (params, est)
                }
            };
            let total: u64 = est.per_pair.iter().map(|p| p.count).sum();
            estimate_report(input.label(), &params, mode, false, total, total, Some(est))
        }
        Input::Log(path) => {
            let log = read_log_file(path)?;
            let params = log.params()?;
            let mode = opts.mode.unwrap_or(log.header.mode);
            let tally = ChainTally::from_records(&log.records, &params, opts.filter, exec)?;
            let applied = opts.filter == HeraldFilter::HeraldedOnly && log.header.herald.is_some();
            let used = tally.total();
            let est = if used == 0 {
                None
            } else {
                Some(ChainEstimate::from_tally(&tally, &params, mode)?)
            };
            estimate_report(input.label(), &params, mode, applied, log.records.len() as u64, used, est)
        }
    }
}

fn estimate_report(
    source: String,
    params: &ChainParams,
    mode: EstimatorMode,
    herald_filter_applied: bool,
    records_total: u64,
    records_used: u64,
    estimate: Option<ChainEstimate>,
) -> Result<EstimateReport> {
    let chsh = match &estimate {
        Some(e) if params.order() == 2 => Some(chsh_parameter(e)?),
        _ => None,
    };
    Ok(EstimateReport {
        report_version: REPORT_VERSION,
        status: if estimate.is_some() { Status::Ok } else { Status::NoData },
        source,
        order: params.order(),
        mode,
        herald_filter_applied,
        records_total,
        records_used,
        estimate,
        chsh,
        ideal_value: ideal_chain_value(params.order())?,
        eta_min: min_detection_efficiency(params.order())?,
    })
}

#[derive(Debug, Clone, Copy, Default)]
pub struct CertifyOptions {
    /// Overrides the analyzed index recorded in the log header.
    pub analyzed_index: Option<u32>,
    pub mode: Option<EstimatorMode>,
}

pub const DEFAULT_ALPHAS: [f64; 3] = [0.05, 0.01, 0.001];

pub fn certify(input: &Input, alphas: &[f64], opts: CertifyOptions) -> Result<CertifyReport> {
    if alphas.is_empty() {
        return Err(Error::invalid("at least one significance level is required"));
    }
    let (order, mode, t, n, blocks, unheralded, analyzed_index, n_data_dependent) = match input {
        Input::Fixture(name) => {
            // only the single-trial-per-block table satisfies the protocol
            if name != "table3-50th" {
                fixture(name)?;
                return Err(Error::invalid(format!(
                    "fixture {name} is not one-trial-per-block data; certification needs the randomized-block protocol"
                )));
            }
            let mode = opts.mode.unwrap_or(fixture_mode(name)?);
            let ChainFixture::Counts { params, tally } = chain_fixture(name, mode)? else {
                return Err(Error::MissingProtocol);
            };
            // heralding set n after the fact
            (params.order(), mode, tally.t_sum(mode), tally.total(), None, None, Some(50), true)
        }
        Input::Log(path) => {
            let log = read_log_file(path)?;
            let protocol = log.header.protocol.clone().ok_or(Error::MissingProtocol)?;
            let params = log.params()?;
            let mode = opts.mode.unwrap_or(log.header.mode);
            let index = opts.analyzed_index.unwrap_or(protocol.analyzed_index);
            let sel = extract_analysis_trials(&log.records, index)?;
            let t = sel.t_sum(&params, mode)?;
            let dependent = log.header.herald.is_some();
            (params.order(), mode, t, sel.n(), Some(sel.blocks), Some(sel.unheralded), Some(index), dependent)
        }
    };
    let bounds = alphas
        .iter()
        .map(|&a| local_content_bound(t, n, order, a))
        .collect::<Result<Vec<_>>>()?;
    Ok(CertifyReport {
        report_version: REPORT_VERSION,
        status: if n == 0 { Status::NoData } else { Status::Ok },
        source: input.label(),
        order,
        mode,
        analyzed_index,
        blocks,
        unheralded,
        t,
        n,
        n_data_dependent,
        bounds,
        chsh_floor: CHSH_QUANTUM_FLOOR,
    })
}

pub fn fidelity(b_chsh: f64, stderr: f64) -> Result<FidelityReport> {
    Ok(FidelityReport {
        report_version: REPORT_VERSION,
        b_chsh,
        stderr,
        f50: self_test_fidelity(b_chsh, stderr, FidelityConfidence::Median)?,
        f95: self_test_fidelity(b_chsh, stderr, FidelityConfidence::Ninety5)?,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepSpec {
    pub from: usize,
    pub to: usize,
    /// Simulated trials per setting pair; 0 skips simulation.
    pub trials_per_pair: u32,
    pub noise: NoiseSpec,
    pub seed: u64,
}

impl Default for SweepSpec {
    fn default() -> Self {
        Self {
            from: 2,
            to: 15,
            trials_per_pair: 10_000,
            noise: NoiseSpec::default(),
            seed: 0,
        }
    }
}

/// Ideal and simulated `I_N` over a range of chain orders. The simulated
/// column uses one block per pair in chain order, as in non-randomized runs.
pub fn sweep(spec: &SweepSpec, exec: Execution) -> Result<Vec<SweepRow>> {
    if spec.from < 2 && spec.from <= spec.to {
        return Err(Error::ChainOrder(spec.from));
    }
    spec.noise.validate()?;
    (spec.from..=spec.to)
        .map(|order| {
            let params = ChainParams::with_order(order)?;
            let (simulated, simulated_stderr) = if spec.trials_per_pair == 0 {
                (None, None)
            } else {
                let sim = Simulation {
                    params,
                    source: SourceModel::Quantum {
                        state: TwoQubitState::phi_plus(),
                        noise: spec.noise,
                    },
                    protocol: ProtocolSpec {
                        blocks: params.pair_count() as u64,
                        block_size: spec.trials_per_pair,
                        analyzed_index: 1,
                        settings: SettingsOrder::Cyclic,
                        ..Default::default()
                    },
                    herald: None,
                    collisions: CollisionSpec::default(),
                    seed: child_seed(spec.seed, Stream::Sweep, order as u64),
                };
                let log = sim.run(exec)?;
                let tally = ChainTally::from_records(&log, &params, HeraldFilter::All, exec)?;
                let est = ChainEstimate::from_tally(&tally, &params, EstimatorMode::Correlation)?;
                (Some(est.value), Some(est.stderr))
            };
            Ok(SweepRow {
                order,
                ideal: ideal_chain_value(order)?,
                simulated,
                simulated_stderr,
                eta_min: min_detection_efficiency(order)?,
            })
        })
        .collect()
}

pub const SWEEP_COLUMNS: [&str; 5] = ["N", "ideal_I", "simulated_I", "simulated_stderr", "eta_min"];

pub fn write_sweep<W: Write>(out: W, rows: &[SweepRow]) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    let io = |e: csv::Error| Error::invalid(e.to_string());
    w.write_record(SWEEP_COLUMNS).map_err(io)?;
    let opt = |v: Option<f64>| v.map(|x| format!("{x:.8}")).unwrap_or_default();
    for r in rows {
        w.write_record([
            r.order.to_string(),
            format!("{:.8}", r.ideal),
            opt(r.simulated),
            opt(r.simulated_stderr),
            format!("{:.8}", r.eta_min),
        ])
        .map_err(io)?;
    }
    w.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::io::log::{LogHeader, write_log_file};
    use crate::quantum::ideal_chain_closed_form;

    fn fx(name: &str) -> Input {
        Input::Fixture(name.into())
    }

    #[test]
    fn certify_reproduces_the_published_intervals() {
        let r = certify(&fx("table3-50th"), &DEFAULT_ALPHAS, CertifyOptions::default()).unwrap();
        assert_eq!((r.t, r.n), (1334, 1361));
        assert!(r.n_data_dependent);
        for (b, want) in r.bounds.iter().zip([0.327, 0.366, 0.413]) {
            assert!((b.p_hat - want).abs() <= 0.001, "{b:?}");
        }
        let text = r.to_string();
        assert!(text.contains("[0, 0.327]"));
        assert!(text.contains("0.586"));
        assert!(text.contains("99.9% confidence"));
    }

    #[test]
    fn certify_needs_the_randomized_protocol() {
        assert!(certify(&fx("table3-all"), &[0.05], CertifyOptions::default()).is_err());
        assert!(matches!(
            certify(&fx("nope"), &[0.05], CertifyOptions::default()),
            Err(Error::UnknownFixture(_))
        ));
    }

    #[test]
    fn estimates_from_fixtures() {
        let r = estimate(&fx("table3-all"), EstimateOptions::default(), Execution::Sequential).unwrap();
        let e = r.estimate.unwrap();
        assert!((e.value - 0.315).abs() < 0.001);
        assert!(!r.herald_filter_applied);
        let r = estimate(&fx("table1"), EstimateOptions::default(), Execution::Sequential).unwrap();
        assert_eq!(r.mode, EstimatorMode::Anticorrelation);
        assert!((r.estimate.unwrap().value - 0.4748).abs() < 0.0005);
        assert!(estimate(&fx("table4"), EstimateOptions::default(), Execution::Sequential).is_err());
    }

    #[test]
    fn empty_log_reports_no_data() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("empty.log");
        let mut header = LogHeader::new(6, EstimatorMode::Correlation, 0);
        header.protocol = Some(ProtocolSpec::default());
        write_log_file(&path, &TrialLog { header, records: vec![] }).unwrap();
        let r = estimate(&Input::Log(path.clone()), EstimateOptions::default(), Execution::Parallel).unwrap();
        assert_eq!(r.status, Status::NoData);
        assert!(r.to_string().contains("no data"));
        let c = certify(&Input::Log(path), &[0.05], CertifyOptions::default()).unwrap();
        assert_eq!(c.status, Status::NoData);
        assert_eq!(c.bounds[0].p_hat, 1.0);
    }

    #[test]
    fn fidelity_rows() {
        let r = fidelity(2.70, 0.02).unwrap();
        assert!((r.f50 - 0.911).abs() < 0.001 && (r.f95 - 0.888).abs() < 0.001);
        let r = fidelity(2.0 * 2f64.sqrt(), 0.0).unwrap();
        assert_eq!((r.f50, r.f95), (1.0, 1.0));
        assert!(fidelity(2.5, -0.1).is_err());
    }

    #[test]
    fn sweep_columns() {
        let spec = SweepSpec {
            from: 2,
            to: 5,
            trials_per_pair: 2000,
            ..Default::default()
        };
        let rows = sweep(&spec, Execution::Parallel).unwrap();
        assert_eq!(rows.len(), 4);
        for r in &rows {
            assert!((r.ideal - ideal_chain_closed_form(r.order)).abs() < 1e-12);
            let (s, e) = (r.simulated.unwrap(), r.simulated_stderr.unwrap());
            assert!((s - r.ideal).abs() < 5.0 * e + 1e-9, "N={}: {s}", r.order);
        }
        assert!((rows[0].eta_min - 0.8284).abs() < 1e-4);
        let mut buf = Vec::new();
        write_sweep(&mut buf, &rows).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert!(text.starts_with("N,ideal_I,simulated_I,simulated_stderr,eta_min\n2,"));

        let empty = sweep(&SweepSpec { from: 5, to: 4, ..Default::default() }, Execution::Parallel).unwrap();
        let mut buf = Vec::new();
        write_sweep(&mut buf, &empty).unwrap();
        assert_eq!(String::from_utf8(buf).unwrap().lines().count(), 1);
        assert!(sweep(&SweepSpec { from: 1, to: 3, ..Default::default() }, Execution::Parallel).is_err());
    }

    #[test]
    fn simulate_is_byte_deterministic() {
        let dir = tempfile::tempdir().unwrap();
        let config = Config::from_toml(
            "seed = 7\n[chain]\norder = 3\n[source]\nkind = \"quantum\"\n[protocol]\nblocks = 30\n[herald]\n",
        )
        .unwrap();
        let a = simulate(&config, &dir.path().join("a.log"), Execution::Parallel).unwrap();
        let b = simulate(&config, &dir.path().join("b.log"), Execution::Sequential).unwrap();
        assert_eq!(a.sha256, b.sha256);
        assert_eq!(
            std::fs::read(dir.path().join("a.log")).unwrap(),
            std::fs::read(dir.path().join("b.log")).unwrap()
        );
        assert_eq!(a.records, 3000);

        let r = certify(&Input::Log(dir.path().join("a.log")), &[0.05], CertifyOptions::default()).unwrap();
        assert_eq!(r.blocks, Some(30));
        assert_eq!(r.n + r.unheralded.unwrap(), 30);
        assert!(r.n_data_dependent);
    }
}
