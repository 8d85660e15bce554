//! Bundled reference tables.
//!
//! Each table is a CSV file kept exactly as printed (including thousands
//! separators and value(uncertainty) notation) and pinned by a SHA-256
//! checksum. Typed accessors parse the printed strings on demand; every
//! value is addressable by (table, row, column).

use serde::Serialize;
use sha2::{Digest, Sha256};

use crate::chain::{ChainParams, ChainTally, EstimatorMode, PairSummary};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct FixtureInfo {
    pub name: &'static str,
    pub file: &'static str,
    pub citation: &'static str,
    pub description: &'static str,
    pub sha256: &'static str,
    #[serde(skip)]
    pub contents: &'static str,
}

pub const FIXTURES: &[FixtureInfo] = &[
    FixtureInfo {
        name: "table1",
        file: "table1_n3_phi_minus.csv",
        citation: "Table I, columns BB, BD, DB, DD",
        description: "N = 3 outcome frequencies, phi- state, 2,500 trials per pair",
        sha256: "37a7543152e29cca467a8020a06e251672220402d4213b02ff957410f0989d6d",
        contents: include_str!("../../fixtures/table1_n3_phi_minus.csv"),
    },
    FixtureInfo {
        name: "table2",
        file: "table2_n8_phi_plus.csv",
        citation: "Table II, column C(a_k, b_l)",
        description: "N = 8 averaged correlations, phi+ state, 2,000 trials per pair",
        sha256: "83df08cafc84b3a87fb4d0c075c1e2b3c8abd76b86c75106b713c30927e0b8ec",
        contents: include_str!("../../fixtures/table2_n8_phi_plus.csv"),
    },
    FixtureInfo {
        name: "table3-50th",
        file: "table3_n6_50th_trial.csv",
        citation: "Table III, 50th-trial columns",
        description: "N = 6 randomized run, heralded 50th trial of each block",
        sha256: "36e1c2207ac89646a959fcefba592860b17606732b959ac57bde8971430feff2",
        contents: include_str!("../../fixtures/table3_n6_50th_trial.csv"),
    },
    FixtureInfo {
        name: "table3-all",
        file: "table3_n6_all_trials.csv",
        citation: "Table III, all-trials columns",
        description: "N = 6 randomized run, all heralded trials",
        sha256: "4a3b75bf046cde9535edd8274278735c8b161f0745b4f9e90f72e72e0f2c5806",
        contents: include_str!("../../fixtures/table3_n6_all_trials.csv"),
    },
    FixtureInfo {
        name: "table4",
        file: "table4_chsh_fidelity.csv",
        citation: "Table IV, columns B_CHSH, 50 %, 95 %",
        description: "CHSH values and self-testing fidelity bounds",
        sha256: "dc1cb896e4dcaf9e9c395cb2d5a5395078c6d6497f8ce6102bc0b4c5cf0056c9",
        contents: include_str!("../../fixtures/table4_chsh_fidelity.csv"),
    },
];

pub fn fixture(name: &str) -> Result<&'static FixtureInfo> {
    FIXTURES
        .iter()
        .find(|f| f.name == name)
        .ok_or_else(|| Error::UnknownFixture(name.to_string()))
}

impl FixtureInfo {
    pub fn computed_sha256(&self) -> String {
        hex::encode(Sha256::digest(self.contents.as_bytes()))
    }

    pub fn verify(&self) -> Result<()> {
        let got = self.computed_sha256();
        if got != self.sha256 {
            return Err(Error::invalid(format!(
                "fixture {} checksum mismatch: expected {}, got {got}",
                self.name, self.sha256
            )));
        }
        Ok(())
    }

    /// Raw rows as printed, header excluded.
    pub fn rows(&self) -> Result<Vec<csv::StringRecord>> {
        let mut reader = csv::ReaderBuilder::new()
            .comment(Some(b'#'))
            .from_reader(self.contents.as_bytes());
        reader
            .records()
            .map(|r| r.map_err(|e| self.parse_error(e.to_string())))
            .collect()
    }

    pub fn headers(&self) -> Result<Vec<String>> {
        let mut reader = csv::ReaderBuilder::new()
            .comment(Some(b'#'))
            .from_reader(self.contents.as_bytes());
        let h = reader.headers().map_err(|e| self.parse_error(e.to_string()))?;
        Ok(h.iter().map(str::to_string).collect())
    }

    /// The printed cell at (1-based row, column name).
    pub fn cell(&self, row: usize, column: &str) -> Result<String> {
        let col = self
            .headers()?
            .iter()
            .position(|h| h == column)
            .ok_or_else(|| self.parse_error(format!("no column {column}")))?;
        let rows = self.rows()?;
        let r = rows
            .get(row.wrapping_sub(1))
            .ok_or_else(|| self.parse_error(format!("no row {row}")))?;
        Ok(r[col].to_string())
    }

    fn parse_error(&self, reason: String) -> Error {
        Error::invalid(format!("fixture {}: {reason}", self.name))
    }
}

/// Parses a printed integer, allowing thousands separators ("11,650").
pub fn parse_count(s: &str) -> Result<u64> {
    s.replace(',', "")
        .parse()
        .map_err(|_| Error::invalid(format!("not a count: {s:?}")))
}

/// Splits "2.414(58)" into (2.414, 0.058): the parenthesised digits are an
/// uncertainty in units of the last printed decimal place.
pub fn parse_uncertain(s: &str) -> Result<(f64, f64)> {
    let bad = || Error::invalid(format!("not a value(uncertainty): {s:?}"));
    let (value, rest) = s.split_once('(').ok_or_else(bad)?;
    let digits = rest.strip_suffix(')').ok_or_else(bad)?;
    let v: f64 = value.parse().map_err(|_| bad())?;
    let u: f64 = digits.parse().map_err(|_| bad())?;
    let decimals = value.split_once('.').map_or(0, |(_, frac)| frac.len());
    Ok((v, u / 10f64.powi(decimals as i32)))
}

/// Parses a printed angle such as "-2pi/3", "pi/12" or "0".
pub fn parse_angle(s: &str) -> Result<f64> {
    let bad = || Error::invalid(format!("not an angle: {s:?}"));
    if s == "0" {
        return Ok(0.0);
    }
    let (sign, body) = match s.strip_prefix('-') {
        Some(b) => (-1.0, b),
        None => (1.0, s),
    };
    let (num, den) = body.split_once('/').ok_or_else(bad)?;
    let coeff = num.strip_suffix("pi").ok_or_else(bad)?;
    let coeff: f64 = if coeff.is_empty() { 1.0 } else { coeff.parse().map_err(|_| bad())? };
    let den: f64 = den.parse().map_err(|_| bad())?;
    Ok(sign * coeff * std::f64::consts::PI / den)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FidelityRow {
    pub row: usize,
    pub system: String,
    pub b_chsh: f64,
    pub sigma: f64,
    pub f50: f64,
    pub f95: f64,
}

pub fn fidelity_rows() -> Result<Vec<FidelityRow>> {
    let f = fixture("table4")?;
    f.rows()?
        .iter()
        .map(|r| {
            let (b_chsh, sigma) = parse_uncertain(&r[2])?;
            Ok(FidelityRow {
                row: parse_count(&r[0])? as usize,
                system: r[1].to_string(),
                b_chsh,
                sigma,
                f50: parse_float(&r[3])?,
                f95: parse_float(&r[4])?,
            })
        })
        .collect()
}

fn parse_float(s: &str) -> Result<f64> {
    s.parse().map_err(|_| Error::invalid(format!("not a number: {s:?}")))
}

/// Chain data a fixture provides to the estimators.
#[derive(Debug, Clone, PartialEq)]
pub enum ChainFixture {
    /// Integer outcome counts per pair.
    Counts { params: ChainParams, tally: ChainTally },
    /// Only per-pair means are printed.
    Summaries {
        params: ChainParams,
        summaries: Vec<PairSummary>,
    },
}

impl ChainFixture {
    pub fn params(&self) -> &ChainParams {
        match self {
            ChainFixture::Counts { params, .. } | ChainFixture::Summaries { params, .. } => params,
        }
    }
}

/// Natural estimator mode of a chain fixture (by the state it was taken with).
pub fn fixture_mode(name: &str) -> Result<EstimatorMode> {
    match name {
        "table1" => Ok(EstimatorMode::Anticorrelation),
        "table2" | "table3-50th" | "table3-all" => Ok(EstimatorMode::Correlation),
        other => Err(Error::invalid(format!("fixture {other} holds no chain data"))),
    }
}

/// Chain data of `name` as used under `mode`.
///
/// For frequency tables the scored outcomes are summed directly (BB + DD
/// when scoring correlations, BD + DB when scoring anticorrelations), since
/// printed rows need not sum to exactly one.
pub fn chain_fixture(name: &str, mode: EstimatorMode) -> Result<ChainFixture> {
    let f = fixture(name)?;
    let rows = f.rows()?;
    match name {
        "table1" => {
            let params = ChainParams::with_order(3)?;
            let summaries = rows
                .iter()
                .map(|r| {
                    let p: Vec<f64> = (3..7).map(|i| parse_float(&r[i])).collect::<Result<_>>()?;
                    let correlation = match mode {
                        EstimatorMode::Correlation => p[0] + p[3],
                        EstimatorMode::Anticorrelation => 1.0 - (p[1] + p[2]),
                    };
                    Ok(PairSummary {
                        count: 2500,
                        correlation,
                    })
                })
                .collect::<Result<_>>()?;
            Ok(ChainFixture::Summaries { params, summaries })
        }
        "table2" => {
            let params = ChainParams::with_order(8)?;
            let summaries = rows
                .iter()
                .map(|r| {
                    let (c, _) = parse_uncertain(&r[3])?;
                    Ok(PairSummary {
                        count: 2000,
                        correlation: c,
                    })
                })
                .collect::<Result<_>>()?;
            Ok(ChainFixture::Summaries { params, summaries })
        }
        "table3-50th" | "table3-all" => {
            let params = ChainParams::with_order(6)?;
            let counts = rows
                .iter()
                .map(|r| {
                    Ok([
                        parse_count(&r[4])?,
                        parse_count(&r[5])?,
                        parse_count(&r[6])?,
                        parse_count(&r[7])?,
                    ])
                })
                .collect::<Result<Vec<_>>>()?;
            let tally = ChainTally::from_counts(&params, counts)?;
            Ok(ChainFixture::Counts { params, tally })
        }
        other => Err(Error::invalid(format!("fixture {other} holds no chain data"))),
    }
}

/// Printed "No. of trials" column of a Table III fixture.
pub fn printed_trial_counts(name: &str) -> Result<Vec<u64>> {
    let f = fixture(name)?;
    if !name.starts_with("table3") {
        return Err(Error::invalid(format!("fixture {name} has no trial-count column")));
    }
    f.rows()?.iter().map(|r| parse_count(&r[3])).collect()
}
