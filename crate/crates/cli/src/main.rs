//! `cbi`: simulate, estimate and certify chained Bell inequality experiments.
//!
//! Exit status: 0 on success, 1 on usage errors, 2 on data errors.

use std::fs::File;
use std::io::{self, Write};
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use cbi_core::chain::{EstimatorMode, HeraldFilter};
use cbi_core::io::commands::{
    self, CertifyOptions, EstimateOptions, Input, SweepSpec, DEFAULT_ALPHAS,
};
use cbi_core::io::fixtures::{fixture, FIXTURES};
use cbi_core::io::report::to_json;
use cbi_core::io::Config;
use cbi_core::quantum::NoiseSpec;
use cbi_core::Execution;

#[derive(Parser)]
#[command(name = "cbi", version, about = "Chained Bell inequality simulation and certification")]
struct Cli {
    /// Run on a single thread (output is identical either way).
    #[arg(long, global = true)]
    sequential: bool,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a trial log from a TOML config.
    Simulate {
        #[arg(long, short)]
        config: PathBuf,
        #[arg(long, short)]
        out: PathBuf,
        #[arg(long)]
        json: bool,
    },
    /// Estimate the chained Bell parameter from a log or a bundled table.
    Estimate {
        #[command(flatten)]
        input: InputArgs,
        /// Include unheralded trials.
        #[arg(long)]
        all_trials: bool,
        /// correlation (phi+) or anticorrelation (phi-); defaults to the source's.
        #[arg(long)]
        mode: Option<EstimatorMode>,
        #[arg(long)]
        json: bool,
    },
    /// Upper confidence bounds on the minimum local fraction.
    Certify {
        #[command(flatten)]
        input: InputArgs,
        /// Significance level; repeat for several (default 0.05, 0.01, 0.001).
        #[arg(long = "alpha", value_parser = parse_alpha)]
        alphas: Vec<f64>,
        /// Trial of each block to analyze (1-based); defaults to the log header's.
        #[arg(long)]
        analyzed_index: Option<u32>,
        #[arg(long)]
        mode: Option<EstimatorMode>,
        #[arg(long)]
        json: bool,
    },
    /// Self-testing singlet-fidelity lower bounds from a CHSH value.
    Fidelity {
        #[arg(long, allow_negative_numbers = true)]
        b_chsh: f64,
        /// One standard deviation of B_CHSH.
        #[arg(long, allow_negative_numbers = true)]
        stderr: f64,
        #[arg(long)]
        json: bool,
    },
    /// Ideal and simulated I_N with the detection-efficiency threshold over a range of N.
    Sweep {
        #[arg(long, default_value_t = 2)]
        from: usize,
        #[arg(long, default_value_t = 15)]
        to: usize,
        /// Simulated trials per setting pair; 0 disables simulation.
        #[arg(long, default_value_t = 10_000)]
        trials_per_pair: u32,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value_t = 0.0)]
        flip_a: f64,
        #[arg(long, default_value_t = 0.0)]
        flip_b: f64,
        /// Weight of the maximally mixed state in the prepared state.
        #[arg(long, default_value_t = 0.0)]
        mix: f64,
        /// Output CSV path; stdout when omitted.
        #[arg(long, short)]
        out: Option<PathBuf>,
    },
    /// Bundled reference tables.
    Fixtures {
        #[command(subcommand)]
        action: FixtureAction,
    },
}

#[derive(Args)]
#[group(required = true, multiple = false)]
struct InputArgs {
    /// Trial log written by `cbi simulate` (or any conforming tool).
    #[arg(long)]
    log: Option<PathBuf>,
    /// Name of a bundled table (see `cbi fixtures list`).
    #[arg(long)]
    fixture: Option<String>,
}

impl InputArgs {
    fn input(&self) -> Input {
        match (&self.log, &self.fixture) {
            (Some(p), _) => Input::Log(p.clone()),
            (None, Some(f)) => Input::Fixture(f.clone()),
            (None, None) => unreachable!("clap enforces one input"),
        }
    }
}

#[derive(Subcommand)]
enum FixtureAction {
    /// List tables with citations and checksums.
    List {
        #[arg(long)]
        json: bool,
    },
    /// Print a table's CSV exactly as bundled.
    Export {
        name: String,
        #[arg(long, short)]
        out: Option<PathBuf>,
    },
    /// Recompute every checksum.
    Verify,
}

fn parse_alpha(s: &str) -> Result<f64, String> {
    let a: f64 = s.parse().map_err(|_| format!("not a number: {s}"))?;
    if a > 0.0 && a < 1.0 {
        Ok(a)
    } else {
        Err(format!("alpha must lie strictly between 0 and 1, got {a}"))
    }
}

fn emit<T: serde::Serialize + std::fmt::Display>(report: &T, json: bool) -> cbi_core::Result<()> {
    let text = if json { to_json(report)? } else { report.to_string() };
    io::stdout().write_all(text.as_bytes())?;
    Ok(())
}

fn run(cli: Cli) -> cbi_core::Result<()> {
    let exec = if cli.sequential { Execution::Sequential } else { Execution::default() };
    match cli.command {
        Command::Simulate { config, out, json } => {
            let config = Config::load(&config)?;
            emit(&commands::simulate(&config, &out, exec)?, json)
        }
        Command::Estimate {
            input,
            all_trials,
            mode,
            json,
        } => {
            let filter = if all_trials { HeraldFilter::All } else { HeraldFilter::HeraldedOnly };
            let report = commands::estimate(&input.input(), EstimateOptions { filter, mode }, exec)?;
            emit(&report, json)
        }
        Command::Certify {
            input,
            alphas,
            analyzed_index,
            mode,
            json,
        } => {
            let alphas = if alphas.is_empty() { DEFAULT_ALPHAS.to_vec() } else { alphas };
            let opts = CertifyOptions { analyzed_index, mode };
            emit(&commands::certify(&input.input(), &alphas, opts)?, json)
        }
        Command::Fidelity { b_chsh, stderr, json } => emit(&commands::fidelity(b_chsh, stderr)?, json),
        Command::Sweep {
            from,
            to,
            trials_per_pair,
            seed,
            flip_a,
            flip_b,
            mix,
            out,
        } => {
            let spec = SweepSpec {
                from,
                to,
                trials_per_pair,
                noise: NoiseSpec {
                    detection_flip_a: flip_a,
                    detection_flip_b: flip_b,
                    state_fidelity_mix: mix,
                },
                seed,
            };
            let rows = commands::sweep(&spec, exec)?;
            match out {
                Some(path) => commands::write_sweep(File::create(path)?, &rows),
                None => commands::write_sweep(io::stdout().lock(), &rows),
            }
        }
        Command::Fixtures { action } => match action {
            FixtureAction::List { json } => {
                let mut out = io::stdout().lock();
                if json {
                    out.write_all(to_json(&FIXTURES)?.as_bytes())?;
                } else {
                    for f in FIXTURES {
                        writeln!(out, "{:<12} {:<26} {}", f.name, f.file, f.description)?;
                        writeln!(out, "{:<12} cites {}; sha256 {}", "", f.citation, f.sha256)?;
                    }
                }
                Ok(())
            }
            FixtureAction::Export { name, out } => {
                let f = fixture(&name)?;
                match out {
                    Some(path) => std::fs::write(path, f.contents)?,
                    None => io::stdout().write_all(f.contents.as_bytes())?,
                }
                Ok(())
            }
            FixtureAction::Verify => {
                for f in FIXTURES {
                    f.verify()?;
                    println!("ok  {}  {}", f.sha256, f.file);
                }
                Ok(())
            }
        },
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            use clap::error::ErrorKind;
            let _ = e.print();
            return match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => ExitCode::SUCCESS,
                _ => ExitCode::from(1),
            };
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        // downstream closed the pipe (e.g. `| head`)
        Err(cbi_core::Error::Io(e)) if e.kind() == io::ErrorKind::BrokenPipe => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
    }
}
