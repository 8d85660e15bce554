//! Memory-robust certification of the local fraction.
//!
//! * [`binomial_tail`]: the adversary-robust tail bound.
//! * [`local_content_bound`]: test inversion giving the interval `[0, p_hat]`.
//! * [`proposition_brute_force`] and [`coverage_monte_carlo`]: the machinery
//!   used to check that bound against adaptive adversaries.

mod binomial;
mod bound;
mod brute;
mod coverage;

pub use binomial::{binomial_pmf, binomial_tail};
pub use bound::{all_ones_bound, local_content_bound, success_bound, LocalContentBound};
pub use brute::{adaptive_tail, proposition_brute_force, strategy_grid, MAX_BRUTE_FORCE_N};
pub use coverage::{coverage_monte_carlo, CoverageReport, CoverageSpec};

/// `I_2` of an ideal CHSH experiment, `2 - sqrt(2)`: the lowest upper bound on
/// the local fraction that quantum mechanics allows at `N = 2`.
pub const CHSH_QUANTUM_FLOOR: f64 = 2.0 - std::f64::consts::SQRT_2;
