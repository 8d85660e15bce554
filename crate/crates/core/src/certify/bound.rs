//! Upper confidence bound on the minimum local weight.
//!
//! Under any memory model whose local weight never drops below `p`, each
//! trial has `P(T_i = 1 | past) <= (2N - p) / 2N`, so `t = sum T_i` is
//! stochastically dominated by `Bin(n, (2N - p)/2N)`. Inverting that test
//! gives `p_hat = max { x in [0,1] : B_tail(t, n, (2N - x)/2N) >= alpha }`.

use serde::{Deserialize, Serialize};

use super::binomial::binomial_tail;
use crate::chain::ChainParams;
use crate::error::{Error, Result};

/// Bisection stops once the bracket is narrower than this.
const TOLERANCE: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LocalContentBound {
    pub t: u64,
    pub n: u64,
    pub order: usize,
    pub alpha: f64,
    pub p_hat: f64,
}

impl LocalContentBound {
    /// Whether any local weight is excluded, i.e. `p_hat < 1`.
    pub fn excludes_local(&self) -> bool {
        self.p_hat < 1.0
    }
}

/// Per-trial success bound `(2N - x) / 2N` for local weight `x`.
pub fn success_bound(order: usize, x: f64) -> f64 {
    let two_n = 2.0 * order as f64;
    (two_n - x) / two_n
}

pub fn local_content_bound(t: u64, n: u64, order: usize, alpha: f64) -> Result<LocalContentBound> {
    // validates the order and alpha
    ChainParams::new(order, alpha)?;
    if t > n {
        return Err(Error::invalid(format!("t = {t} exceeds n = {n}")));
    }
    let tail = |x: f64| binomial_tail(t, n, success_bound(order, x));
    let p_hat = if t == 0 || tail(1.0)? >= alpha {
        1.0
    } else {
        // tail(0) = 1 >= alpha, tail(1) < alpha
        let (mut lo, mut hi) = (0.0f64, 1.0f64);
        while hi - lo > TOLERANCE {
            let mid = 0.5 * (lo + hi);
            if tail(mid)? >= alpha {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        lo
    };
    Ok(LocalContentBound {
        t,
        n,
        order,
        alpha,
        p_hat: p_hat.clamp(0.0, 1.0),
    })
}

/// `p_hat` when every analyzed trial scored `T = 1`.
pub fn all_ones_bound(n: u64, order: usize, alpha: f64) -> f64 {
    (2.0 * order as f64 * (1.0 - alpha.powf(1.0 / n as f64))).min(1.0)
}
