//! Line-oriented trial logs.
//!
//! ```text
//! #cbi-trial-log v1
//! #header {"format_version":1,"order":6,...}
//! trial_index,block_index,a_index,b_index,outcome_a,outcome_b,heralded,check_counts
//! 0,0,1,1,B,D,1,57
//! 1,0,1,1,D,B,1,57;63
//! ```
//!
//! Settings are stored as indices only; angles are recomputed from
//! `(N, k, l)`. Check counts are `;`-separated.

use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Read, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::chain::{ChainParams, EstimatorMode, Outcome, TrialRecord};
use crate::error::{Error, Result};
use crate::simulator::{HeraldSpec, ProtocolSpec};

pub const LOG_MAGIC: &str = "#cbi-trial-log v1";
pub const LOG_FORMAT_VERSION: u32 = 1;
const HEADER_PREFIX: &str = "#header ";
const COLUMNS: [&str; 8] = [
    "trial_index",
    "block_index",
    "a_index",
    "b_index",
    "outcome_a",
    "outcome_b",
    "heralded",
    "check_counts",
];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LogHeader {
    pub format_version: u32,
    pub order: usize,
    pub mode: EstimatorMode,
    /// Free-form source label, e.g. "phi+".
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub state: Option<String>,
    /// Randomized-block metadata; required for certification.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub protocol: Option<ProtocolSpec>,
    /// Herald policy the flags were computed with, if any.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub herald: Option<HeraldSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub rng: Option<String>,
    pub total_records: u64,
}

impl LogHeader {
    pub fn new(order: usize, mode: EstimatorMode, total_records: u64) -> Self {
        Self {
            format_version: LOG_FORMAT_VERSION,
            order,
            mode,
            state: None,
            protocol: None,
            herald: None,
            seed: None,
            rng: None,
            total_records,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrialLog {
    pub header: LogHeader,
    pub records: Vec<TrialRecord>,
}

impl TrialLog {
    pub fn params(&self) -> Result<ChainParams> {
        ChainParams::with_order(self.header.order)
    }
}

pub fn write_log<W: Write>(out: W, log: &TrialLog) -> Result<()> {
    if log.header.total_records != log.records.len() as u64 {
        return Err(Error::invalid(format!(
            "header declares {} records but {} are present",
            log.header.total_records,
            log.records.len()
        )));
    }
    let mut out = BufWriter::new(out);
    writeln!(out, "{LOG_MAGIC}")?;
    writeln!(out, "{HEADER_PREFIX}{}", serde_json::to_string(&log.header)?)?;
    let mut w = csv::WriterBuilder::new().from_writer(out);
    w.write_record(COLUMNS).map_err(csv_io)?;
    let mut checks = String::new();
    for r in &log.records {
        checks.clear();
        for (i, c) in r.check_counts.iter().enumerate() {
            if i > 0 {
                checks.push(';');
            }
            checks.push_str(&c.to_string());
        }
        w.write_record([
            r.trial_index.to_string(),
            r.block_index.to_string(),
            r.pair.a_index().to_string(),
            r.pair.b_index().to_string(),
            r.outcome_a.symbol().to_string(),
            r.outcome_b.symbol().to_string(),
            if r.heralded { "1" } else { "0" }.to_string(),
            checks.clone(),
        ])
        .map_err(csv_io)?;
    }
    w.flush()?;
    Ok(())
}

pub fn write_log_file(path: &Path, log: &TrialLog) -> Result<()> {
    write_log(File::create(path)?, log)
}

fn csv_io(e: csv::Error) -> Error {
    match e.into_kind() {
        csv::ErrorKind::Io(io) => Error::Io(io),
        other => Error::invalid(format!("{other:?}")),
    }
}

pub fn read_log<R: Read>(input: R) -> Result<TrialLog> {
    let mut input = BufReader::new(input);
    let mut line = String::new();

    input.read_line(&mut line)?;
    if line.trim_end() != LOG_MAGIC {
        return Err(parse(1, format!("expected {LOG_MAGIC:?}, found {:?}", line.trim_end())));
    }
    line.clear();
    input.read_line(&mut line)?;
    let json = line
        .trim_end()
        .strip_prefix(HEADER_PREFIX)
        .ok_or_else(|| parse(2, "missing #header line"))?;
    let header: LogHeader =
        serde_json::from_str(json).map_err(|e| parse(2, format!("bad header: {e}")))?;
    if header.format_version != LOG_FORMAT_VERSION {
        return Err(parse(2, format!("unsupported format version {}", header.format_version)));
    }
    let params = ChainParams::with_order(header.order).map_err(|e| parse(2, e.to_string()))?;

    let mut reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .flexible(true)
        .from_reader(input);
    let columns = reader.headers().map_err(|e| parse(3, e.to_string()))?;
    if columns.iter().ne(COLUMNS) {
        return Err(parse(3, format!("unexpected columns {:?}", columns.iter().collect::<Vec<_>>())));
    }

    let mut records = Vec::with_capacity(header.total_records.min(1 << 24) as usize);
    for row in reader.records() {
        // csv lines are counted from the column row, which is file line 3
        let row = row.map_err(|e| {
            let line = e.position().map_or(0, |p| p.line() + 2);
            parse(line, e.to_string())
        })?;
        let line = row.position().map_or(0, |p| p.line() + 2);
        let record = parse_record(&row, &params).map_err(|reason| parse(line, reason))?;
        if let Some(h) = &header.herald {
            if record.heralded != h.is_heralded(&record.check_counts) {
                return Err(parse(line, "herald flag disagrees with the recorded checks and the header policy"));
            }
        }
        records.push(record);
    }
    if records.len() as u64 != header.total_records {
        return Err(parse(
            records.len() as u64 + 3,
            format!(
                "header declares {} records but the file holds {}",
                header.total_records,
                records.len()
            ),
        ));
    }
    Ok(TrialLog { header, records })
}

pub fn read_log_file(path: &Path) -> Result<TrialLog> {
    read_log(File::open(path)?)
}

fn parse_record(row: &csv::StringRecord, params: &ChainParams) -> std::result::Result<TrialRecord, String> {
    if row.len() != COLUMNS.len() {
        return Err(format!("expected {} fields, found {}", COLUMNS.len(), row.len()));
    }
    let int = |i: usize| -> std::result::Result<u64, String> {
        row[i]
            .parse::<u64>()
            .map_err(|_| format!("{}: not a non-negative integer: {:?}", COLUMNS[i], &row[i]))
    };
    let outcome = |i: usize| -> std::result::Result<Outcome, String> {
        let mut chars = row[i].chars();
        match (chars.next().and_then(Outcome::from_symbol), chars.next()) {
            (Some(o), None) => Ok(o),
            _ => Err(format!("{}: expected B or D, found {:?}", COLUMNS[i], &row[i])),
        }
    };
    let (a, b) = (int(2)? as usize, int(3)? as usize);
    let pair = params.pair(a, b).map_err(|e| e.to_string())?;
    let heralded = match &row[6] {
        "1" => true,
        "0" => false,
        other => return Err(format!("heralded: expected 0 or 1, found {other:?}")),
    };
    let check_counts = if row[7].is_empty() {
        Vec::new()
    } else {
        row[7]
            .split(';')
            .map(|c| c.parse::<u32>().map_err(|_| format!("check_counts: bad count {c:?}")))
            .collect::<std::result::Result<_, _>>()?
    };
    Ok(TrialRecord {
        trial_index: int(0)?,
        block_index: int(1)?,
        pair,
        outcome_a: outcome(4)?,
        outcome_b: outcome(5)?,
        heralded,
        check_counts,
    })
}

fn parse(line: u64, reason: impl Into<String>) -> Error {
    Error::Parse {
        line,
        reason: reason.into(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::exec::Execution;
    use crate::quantum::TwoQubitState;
    use crate::simulator::{CollisionSpec, Recovery, Simulation, SourceModel};
    use proptest::prelude::*;

    fn sample_log(order: usize, blocks: u64, seed: u64, herald: bool) -> TrialLog {
        let sim = Simulation {
            params: ChainParams::with_order(order).unwrap(),
            source: SourceModel::ideal(TwoQubitState::phi_plus()),
            protocol: ProtocolSpec {
                blocks,
                block_size: 10,
                analyzed_index: 5,
                ..Default::default()
            },
            herald: herald.then(HeraldSpec::default),
            collisions: CollisionSpec {
                event_rate: 0.02,
                recovery: Recovery::Transient { duration: 4 },
            },
            seed,
        };
        let records = sim.run(Execution::Parallel).unwrap();
        let mut header = LogHeader::new(order, EstimatorMode::Correlation, records.len() as u64);
        header.protocol = Some(sim.protocol.clone());
        header.herald = sim.herald;
        header.seed = Some(seed);
        TrialLog { header, records }
    }

    fn to_string(log: &TrialLog) -> String {
        let mut buf = Vec::new();
        write_log(&mut buf, log).unwrap();
        String::from_utf8(buf).unwrap()
    }

    #[test]
    fn layout() {
        let log = sample_log(2, 1, 3, true);
        let text = to_string(&log);
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines[0], LOG_MAGIC);
        assert!(lines[1].starts_with("#header {"));
        assert_eq!(lines[2], COLUMNS.join(","));
        assert_eq!(lines.len(), 3 + 10);
        assert!(lines[3].starts_with("0,0,"));
    }

    #[test]
    fn empty_log_round_trips() {
        let log = TrialLog {
            header: LogHeader::new(4, EstimatorMode::Correlation, 0),
            records: vec![],
        };
        let back = read_log(to_string(&log).as_bytes()).unwrap();
        assert_eq!(back, log);
    }

    fn corrupt(text: &str, line: usize, f: impl Fn(&str) -> String) -> String {
        text.lines()
            .enumerate()
            .map(|(i, l)| if i + 1 == line { f(l) } else { l.to_string() })
            .collect::<Vec<_>>()
            .join("\n")
    }

    fn err_line(text: &str) -> u64 {
        match read_log(text.as_bytes()) {
            Err(Error::Parse { line, .. }) => line,
            other => panic!("expected a parse error, got {other:?}"),
        }
    }

    #[test]
    fn malformed_lines_report_their_number() {
        let text = to_string(&sample_log(3, 2, 1, false));
        assert_eq!(err_line(&corrupt(&text, 7, |l| l.replacen(",B,", ",X,", 1).replacen(",D,", ",X,", 1))), 7);
        assert_eq!(err_line(&corrupt(&text, 9, |_| "1,2,3".into())), 9);
        assert_eq!(err_line(&corrupt(&text, 5, |l| {
            let mut f: Vec<String> = l.split(',').map(String::from).collect();
            f[2] = "1".into();
            f[3] = "3".into();
            f.join(",")
        })), 5);
        assert_eq!(err_line(&corrupt(&text, 1, |_| "garbage".into())), 1);
        assert_eq!(err_line(&corrupt(&text, 2, |l| l.replace("\"order\":3", "\"order\":1"))), 2);
        // truncated file
        let short: String = text.lines().take(10).collect::<Vec<_>>().join("\n");
        assert!(matches!(read_log(short.as_bytes()), Err(Error::Parse { .. })));
    }

    #[test]
    fn herald_flags_are_checked_against_the_policy() {
        let log = sample_log(2, 3, 4, true);
        let mut tampered = log.clone();
        tampered.records[15].heralded = !tampered.records[15].heralded;
        let text = to_string(&tampered);
        assert_eq!(err_line(&text), 19);
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(24))]
        #[test]
        fn round_trip(order in 2usize..9, blocks in 0u64..6, seed in any::<u64>(), herald in any::<bool>()) {
            let log = sample_log(order, blocks, seed, herald);
            let back = read_log(to_string(&log).as_bytes()).unwrap();
            prop_assert_eq!(back, log);
        }
    }
}
