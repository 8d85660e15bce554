//! Acceptance criteria. Prints one PASS/FAIL line per criterion and exits
//! non-zero if any fails.

use std::f64::consts::PI;
use std::time::{Duration, Instant};

use cbi_core::certify::{
    adaptive_tail, binomial_tail, coverage_monte_carlo, proposition_brute_force, CoverageSpec,
};
use cbi_core::chain::{chain_estimate, ChainParams, EstimatorMode};
use cbi_core::io::commands::{self, CertifyOptions, EstimateOptions, Input};
use cbi_core::io::fixtures::fidelity_rows;
use cbi_core::io::{read_log_file, Config};
use cbi_core::quantum::{ideal_chain_value, joint_probabilities_at, TwoQubitState};
use cbi_core::schedule::LocalWeightSchedule;
use cbi_core::simulator::{CollisionSpec, HeraldSpec, ProtocolSpec, Simulation, SourceModel};
use cbi_core::Execution;
use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, ToPrimitive, Zero};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

type Outcome = Result<String, String>;

fn ensure(cond: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg())
    }
}

fn e2s<E: std::fmt::Display>(e: E) -> String {
    e.to_string()
}

fn certification_golden() -> Outcome {
    let r = commands::certify(
        &Input::Fixture("table3-50th".into()),
        &[0.05, 0.01, 0.001],
        CertifyOptions::default(),
    )
    .map_err(e2s)?;
    ensure(r.t == 1334 && r.n == 1361, || format!("t = {}, n = {}", r.t, r.n))?;
    let mut got = Vec::new();
    for (b, want) in r.bounds.iter().zip([0.327, 0.366, 0.413]) {
        ensure((b.p_hat - want).abs() <= 0.001, || format!("alpha {}: p_hat {:.5}, want {want}", b.alpha, b.p_hat))?;
        got.push(format!("{:.4}", b.p_hat));
    }
    Ok(format!("p_hat = {}", got.join(", ")))
}

fn estimator_golden() -> Outcome {
    let mut out = Vec::new();
    for (name, want, tol) in [("table3-all", 0.315, 0.001), ("table1", 0.4748, 0.0005), ("table2", 0.2970, 0.001)] {
        let r = commands::estimate(&Input::Fixture(name.into()), EstimateOptions::default(), Execution::default())
            .map_err(e2s)?;
        let v = r.estimate.ok_or("no estimate")?.value;
        ensure((v - want).abs() <= tol, || format!("{name}: {v:.5}, want {want} +/- {tol}"))?;
        out.push(format!("{name} {v:.5}"));
    }
    Ok(out.join(", "))
}

fn fidelity_table() -> Outcome {
    let rows = fidelity_rows().map_err(e2s)?;
    for row in &rows {
        let r = commands::fidelity(row.b_chsh, row.sigma).map_err(e2s)?;
        ensure((r.f50 - row.f50).abs() <= 0.001 && (r.f95 - row.f95).abs() <= 0.001, || {
            format!("row {} ({}): got {:.4}/{:.4}, printed {}/{}", row.row, row.system, r.f50, r.f95, row.f50, row.f95)
        })?;
    }
    let own = commands::fidelity(2.80, 0.02).map_err(e2s)?;
    Ok(format!("{} rows; 2.80(2) -> {:.3} / {:.3}", rows.len(), own.f50, own.f95))
}

fn ideal_quantum_agreement() -> Outcome {
    let i2 = ideal_chain_value(2).map_err(e2s)?;
    ensure((i2 - 0.5858).abs() < 5e-5, || format!("I_2 closed form {i2}"))?;
    let mut out = Vec::new();
    for order in [2usize, 6, 9, 15] {
        let params = ChainParams::with_order(order).map_err(e2s)?;
        let sim = Simulation {
            params,
            source: SourceModel::ideal(TwoQubitState::phi_plus()),
            protocol: ProtocolSpec {
                blocks: 10_000,
                block_size: 100,
                analyzed_index: 50,
                ..Default::default()
            },
            herald: None,
            collisions: CollisionSpec::default(),
            seed: 1000 + order as u64,
        };
        let log = sim.run(Execution::default()).map_err(e2s)?;
        let est = chain_estimate(&log, &params, EstimatorMode::Correlation).map_err(e2s)?;
        let ideal = ideal_chain_value(order).map_err(e2s)?;
        let z = (est.value - ideal) / est.stderr;
        ensure(log.len() == 1_000_000 && z.abs() < 3.0, || {
            format!("N = {order}: {:.5} +/- {:.5} vs {ideal:.5} (z = {z:.2})", est.value, est.stderr)
        })?;
        out.push(format!("N={order} z={z:+.2}"));
    }
    Ok(out.join(", "))
}

fn proposition_suite() -> Outcome {
    let mut checked = 0;
    for n in 0..=10u32 {
        for y in 0..=n {
            for q in [0.1, 0.3, 0.5, 0.8, 11.0 / 12.0] {
                let tail = binomial_tail(y as u64, n as u64, q).map_err(e2s)?;
                let brute = proposition_brute_force(n, q, y).map_err(e2s)?;
                let constant = adaptive_tail(n, y, |_| q).map_err(e2s)?;
                ensure(brute <= tail + 1e-10, || format!("n={n} y={y} q={q}: brute {brute} > tail {tail}"))?;
                ensure((constant - tail).abs() <= 1e-10 && (brute - tail).abs() <= 1e-10, || {
                    format!("n={n} y={y} q={q}: constant {constant}, brute {brute}, tail {tail}")
                })?;
                checked += 1;
            }
        }
    }
    Ok(format!("{checked} (n, y, q) cases"))
}

fn coverage_suite() -> Outcome {
    let mut out = Vec::new();
    let schedules = [
        ("constant(0.5)", LocalWeightSchedule::constant(0.5).map_err(e2s)?),
        ("outcome-reactive(min 0.5)", LocalWeightSchedule::outcome_reactive(0.5, 0.9, 3).map_err(e2s)?),
    ];
    for (i, (name, schedule)) in schedules.into_iter().enumerate() {
        let mut spec = CoverageSpec::new(schedule, 500, 6, 0.05, 2000);
        spec.seed = 77 + i as u64;
        let r = coverage_monte_carlo(&spec, Execution::default()).map_err(e2s)?;
        let floor = 0.95 - 3.0 * r.sigma;
        ensure(r.meets_nominal(), || format!("{name}: coverage {:.4} < {floor:.4}", r.coverage))?;
        out.push(format!("{name} {:.4} (>= {floor:.4})", r.coverage));
    }
    Ok(out.join(", "))
}

fn exact_tail(y: u64, n: u64, num: i64, den: i64) -> f64 {
    let q = BigRational::new(BigInt::from(num), BigInt::from(den));
    let p = BigRational::one() - &q;
    let pow = |x: &BigRational, k: u64| (0..k).fold(BigRational::one(), |acc, _| acc * x);
    let mut total = BigRational::zero();
    let mut binom = BigInt::one();
    for k in 0..=n {
        if k > 0 {
            binom = binom * BigInt::from(n - k + 1) / BigInt::from(k);
        }
        if k >= y {
            total += BigRational::from(binom.clone()) * pow(&q, k) * pow(&p, n - k);
        }
    }
    total.to_f64().unwrap()
}

fn numerical_oracles() -> Outcome {
    let mut worst: f64 = 0.0;
    for n in 0..=30u64 {
        for y in 0..=n {
            for num in 1..=9 {
                let got = binomial_tail(y, n, num as f64 / 10.0).map_err(e2s)?;
                let want = exact_tail(y, n, num, 10);
                let rel = (got - want).abs() / want;
                worst = worst.max(rel);
                ensure(rel <= 1e-12, || format!("tail({y}, {n}, {}) = {got}, exact {want}", num as f64 / 10.0))?;
            }
        }
    }
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let phi = TwoQubitState::phi_plus();
    let mut worst_c: f64 = 0.0;
    for _ in 0..100 {
        let a = rng.random_range(-PI..PI);
        let b = rng.random_range(-PI..PI);
        let p = joint_probabilities_at(&phi, a, b).map_err(e2s)?;
        let err = (p[0] + p[3] - ((a + b) / 2.0).sin().powi(2)).abs();
        worst_c = worst_c.max(err);
        ensure(err <= 1e-10, || format!("C({a}, {b}) off by {err}"))?;
    }
    Ok(format!("tail max rel err {worst:.1e}; C max abs err {worst_c:.1e}"))
}

fn determinism() -> Outcome {
    let dir = tempfile::tempdir().map_err(e2s)?;
    let config = Config::from_toml(
        r#"
seed = 2017
[chain]
order = 6
[source]
kind = "quantum"
state = "phi+"
noise = { detection_flip_a = 0.003, detection_flip_b = 0.003 }
[protocol]
blocks = 1398
[herald]
[collisions]
event_rate = 0.0005
"#,
    )
    .map_err(e2s)?;
    let (pa, pb) = (dir.path().join("a.log"), dir.path().join("b.log"));
    let a = commands::simulate(&config, &pa, Execution::Parallel).map_err(e2s)?;
    let b = commands::simulate(&config, &pb, Execution::Sequential).map_err(e2s)?;
    let bytes_a = std::fs::read(&pa).map_err(e2s)?;
    let bytes_b = std::fs::read(&pb).map_err(e2s)?;
    ensure(bytes_a == bytes_b && a.sha256 == b.sha256, || "logs differ".into())?;
    ensure(a.records == 139_800, || format!("{} records", a.records))?;

    // herald flags from each check prefix equal the flags from the full block
    let log = read_log_file(&pa).map_err(e2s)?;
    let h = log.header.herald.unwrap_or_else(HeraldSpec::default);
    let mut blocks = 0;
    for block in log.records.chunk_by(|x, y| x.block_index == y.block_index) {
        let checks: Vec<u32> = block.iter().map(|r| *r.check_counts.last().unwrap()).collect();
        let full = h.flags(&checks);
        for k in 0..checks.len() {
            ensure(h.flags(&checks[..=k])[..] == full[..=k], || format!("block {} prefix {k}", block[0].block_index))?;
        }
        ensure(block.iter().zip(&full).all(|(r, f)| r.heralded == *f), || "recorded flags differ".into())?;
        blocks += 1;
    }
    Ok(format!("sha256 {}...; {blocks} blocks prefix-checked", &a.sha256[..12]))
}

fn main() {
    let criteria: [(&str, fn() -> Outcome, Duration); 8] = [
        ("certification golden test", certification_golden, Duration::from_secs(1)),
        ("estimator golden tests", estimator_golden, Duration::from_secs(1)),
        ("fidelity table reproduction", fidelity_table, Duration::from_secs(1)),
        ("ideal-quantum agreement", ideal_quantum_agreement, Duration::from_secs(60)),
        ("proposition property suite", proposition_suite, Duration::from_secs(120)),
        ("coverage property suite", coverage_suite, Duration::from_secs(600)),
        ("numerical oracle suite", numerical_oracles, Duration::from_secs(600)),
        ("determinism", determinism, Duration::from_secs(600)),
    ];
    let mut failed = 0;
    for (i, (name, run, limit)) in criteria.iter().enumerate() {
        let start = Instant::now();
        let result = run();
        let took = start.elapsed();
        let result = match result {
            Ok(d) if took > *limit => Err(format!("{d}; exceeded {:.0?} limit", limit)),
            other => other,
        };
        match result {
            Ok(detail) => println!("PASS {}. {name}: {detail} [{:.2}s]", i + 1, took.as_secs_f64()),
            Err(why) => {
                failed += 1;
                println!("FAIL {}. {name}: {why} [{:.2}s]", i + 1, took.as_secs_f64());
            }
        }
    }
    if failed > 0 {
        std::process::exit(1);
    }
}
