//! Exhaustive check of the adaptive-adversary tail bound for small `n`.
//!
//! An adversary picks the success probability of each trial from a grid in
//! `[0, q]`, possibly depending on the whole history of earlier outcomes. The
//! best such strategy is found by backward induction over the full binary
//! history tree and must never beat the binomial tail `B_tail(y, n, q)`.

use crate::error::{Error, Result};

pub const MAX_BRUTE_FORCE_N: u32 = 12;

/// Success probabilities available to the adversary: `{0, q/4, q/2, 3q/4, q}`.
pub fn strategy_grid(q: f64) -> [f64; 5] {
    [0.0, 0.25 * q, 0.5 * q, 0.75 * q, q]
}

/// Maximal `P(sum T_i >= y)` over history-dependent grid strategies.
pub fn proposition_brute_force(n: u32, q: f64, y: u32) -> Result<f64> {
    check(n, q, y)?;
    let grid = strategy_grid(q);
    Ok(best(n, y, &grid, 0, 0))
}

/// Value of the history node at depth `depth` with `ones` successes so far.
/// Recursing on every history (not just on the count) keeps the search
/// exhaustive over history-dependent strategies.
fn best(n: u32, y: u32, grid: &[f64], depth: u32, ones: u32) -> f64 {
    if ones >= y {
        return 1.0;
    }
    if ones + (n - depth) < y {
        return 0.0;
    }
    let hit = best(n, y, grid, depth + 1, ones + 1);
    let miss = best(n, y, grid, depth + 1, ones);
    grid.iter()
        .map(|p| p * hit + (1.0 - p) * miss)
        .fold(0.0, f64::max)
}

/// Exact `P(sum T_i >= y)` when trial `i` succeeds with probability
/// `strategy(history)`, `history` holding the outcomes of trials `0..i`.
pub fn adaptive_tail<F>(n: u32, y: u32, strategy: F) -> Result<f64>
where
    F: Fn(&[bool]) -> f64,
{
    check(n, 0.0, y)?;
    let mut history = Vec::with_capacity(n as usize);
    walk(n, y, &strategy, &mut history, 0)
}

fn walk<F>(n: u32, y: u32, strategy: &F, history: &mut Vec<bool>, ones: u32) -> Result<f64>
where
    F: Fn(&[bool]) -> f64,
{
    if ones >= y {
        return Ok(1.0);
    }
    let depth = history.len() as u32;
    if ones + (n - depth) < y {
        return Ok(0.0);
    }
    let p = strategy(history);
    if !(0.0..=1.0).contains(&p) {
        return Err(Error::invalid(format!("strategy returned {p} at depth {depth}")));
    }
    history.push(true);
    let hit = walk(n, y, strategy, history, ones + 1)?;
    history.pop();
    history.push(false);
    let miss = walk(n, y, strategy, history, ones)?;
    history.pop();
    Ok(p * hit + (1.0 - p) * miss)
}

fn check(n: u32, q: f64, y: u32) -> Result<()> {
    if n > MAX_BRUTE_FORCE_N {
        return Err(Error::invalid(format!(
            "brute force is limited to n <= {MAX_BRUTE_FORCE_N}, got {n}"
        )));
    }
    if y > n {
        return Err(Error::invalid(format!("y = {y} exceeds n = {n}")));
    }
    if !(0.0..=1.0).contains(&q) {
        return Err(Error::invalid(format!("q must lie in [0, 1], got {q}")));
    }
    Ok(())
}
