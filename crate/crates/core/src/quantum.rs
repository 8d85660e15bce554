//! Ideal and noisy two-qubit predictions.
//!
//! States live in the basis `{↑↑, ↑↓, ↓↑, ↓↓}`; after the setting rotations a
//! `↑` ion reads bright and a `↓` ion dark, so amplitudes map one-to-one onto
//! the `[BB, BD, DB, DD]` probability vectors used throughout the crate.

use std::f64::consts::{FRAC_1_SQRT_2, PI, SQRT_2};

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::chain::{ChainParams, SettingPair};
use crate::error::{Error, Result};

const NORM_TOLERANCE: f64 = 1e-12;

/// Pure two-qubit state.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TwoQubitState {
    amplitudes: [Complex64; 4],
}

impl TwoQubitState {
    pub fn new(amplitudes: [Complex64; 4]) -> Result<Self> {
        let norm: f64 = amplitudes.iter().map(|a| a.norm_sqr()).sum();
        if (norm - 1.0).abs() > NORM_TOLERANCE {
            return Err(Error::Unnormalized(norm));
        }
        Ok(Self { amplitudes })
    }

    /// `(|↑↑⟩ + |↓↓⟩)/√2`
    pub fn phi_plus() -> Self {
        let h = Complex64::new(FRAC_1_SQRT_2, 0.0);
        Self {
            amplitudes: [h, Complex64::ZERO, Complex64::ZERO, h],
        }
    }

    /// `(|↑↑⟩ - |↓↓⟩)/√2`
    pub fn phi_minus() -> Self {
        let h = Complex64::new(FRAC_1_SQRT_2, 0.0);
        Self {
            amplitudes: [h, Complex64::ZERO, Complex64::ZERO, -h],
        }
    }

    pub fn amplitudes(&self) -> &[Complex64; 4] {
        &self.amplitudes
    }
}

/// Which Bell state a simulated source prepares.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub enum BellState {
    #[default]
    #[serde(rename = "phi+")]
    PhiPlus,
    #[serde(rename = "phi-")]
    PhiMinus,
}

impl BellState {
    pub fn state(self) -> TwoQubitState {
        match self {
            BellState::PhiPlus => TwoQubitState::phi_plus(),
            BellState::PhiMinus => TwoQubitState::phi_minus(),
        }
    }

    pub fn label(self) -> &'static str {
        match self {
            BellState::PhiPlus => "phi+",
            BellState::PhiMinus => "phi-",
        }
    }
}

/// Single-qubit setting rotation with phase `phase`:
/// `|↑⟩ → (|↑⟩ - i e^{-iφ}|↓⟩)/√2`, `|↓⟩ → (|↓⟩ - i e^{iφ}|↑⟩)/√2`.
///
/// Returned as a row-major 2×2 matrix acting on `(↑, ↓)` amplitudes.
pub fn setting_rotation(phase: f64) -> [[Complex64; 2]; 2] {
    let s = FRAC_1_SQRT_2;
    let minus_i = Complex64::new(0.0, -1.0);
    let up_to_down = minus_i * Complex64::from_polar(1.0, -phase) * s;
    let down_to_up = minus_i * Complex64::from_polar(1.0, phase) * s;
    let diag = Complex64::new(s, 0.0);
    // column j is the image of basis state j
    [[diag, down_to_up], [up_to_down, diag]]
}

/// `P(xy | a_k b_l)` in `[BB, BD, DB, DD]` order, by explicit state-vector
/// evolution under the two setting rotations.
pub fn joint_probabilities(state: &TwoQubitState, pair: SettingPair) -> Result<[f64; 4]> {
    joint_probabilities_at(state, pair.angle_a(), pair.angle_b())
}

/// [`joint_probabilities`] for arbitrary rotation phases.
pub fn joint_probabilities_at(state: &TwoQubitState, angle_a: f64, angle_b: f64) -> Result<[f64; 4]> {
    let norm: f64 = state.amplitudes.iter().map(|a| a.norm_sqr()).sum();
    if (norm - 1.0).abs() > NORM_TOLERANCE {
        return Err(Error::Unnormalized(norm));
    }
    let ua = setting_rotation(angle_a);
    let ub = setting_rotation(angle_b);
    let psi = &state.amplitudes;
    let mut out = [Complex64::ZERO; 4];
    for ia in 0..2 {
        for ib in 0..2 {
            let mut acc = Complex64::ZERO;
            for ja in 0..2 {
                for jb in 0..2 {
                    acc += ua[ia][ja] * ub[ib][jb] * psi[2 * ja + jb];
                }
            }
            out[2 * ia + ib] = acc;
        }
    }
    Ok(out.map(|a| a.norm_sqr()))
}

/// `P(BB) + P(DD)`.
pub fn correlation(probabilities: &[f64; 4]) -> f64 {
    probabilities[0] + probabilities[3]
}

/// Chained parameter of an arbitrary per-pair distribution, `distribution`
/// returning `[BB, BD, DB, DD]` for each pair.
pub fn chain_value_of<F>(params: &ChainParams, mut distribution: F) -> Result<f64>
where
    F: FnMut(SettingPair) -> Result<[f64; 4]>,
{
    let mut total = 0.0;
    for pair in params.settings_set() {
        let c = correlation(&distribution(pair)?);
        total += if pair.is_closing() { 1.0 - c } else { c };
    }
    Ok(total)
}

/// Lowest `I_N` reachable by a noiseless Φ₊ experiment at the chain angles.
pub fn ideal_chain_value(order: usize) -> Result<f64> {
    let params = ChainParams::with_order(order)?;
    let state = TwoQubitState::phi_plus();
    chain_value_of(&params, |pair| joint_probabilities(&state, pair))
}

/// Abstract imperfections: depolarizing mix towards the maximally mixed state
/// followed by independent per-party readout flips.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct NoiseSpec {
    pub detection_flip_a: f64,
    pub detection_flip_b: f64,
    pub state_fidelity_mix: f64,
}

impl NoiseSpec {
    pub fn validate(&self) -> Result<()> {
        for (name, v) in [
            ("detection_flip_a", self.detection_flip_a),
            ("detection_flip_b", self.detection_flip_b),
            ("state_fidelity_mix", self.state_fidelity_mix),
        ] {
            if !(0.0..=1.0).contains(&v) {
                return Err(Error::config(
                    format!("noise.{name}"),
                    format!("must be a probability in [0, 1], got {v}"),
                ));
            }
        }
        Ok(())
    }

    pub fn is_noiseless(&self) -> bool {
        self.detection_flip_a == 0.0 && self.detection_flip_b == 0.0 && self.state_fidelity_mix == 0.0
    }
}

/// Mixes in the uniform distribution, then flips each party's outcome
/// independently.
pub fn apply_noise(probabilities: &[f64; 4], noise: &NoiseSpec) -> [f64; 4] {
    let m = noise.state_fidelity_mix;
    let mixed = probabilities.map(|p| (1.0 - m) * p + m * 0.25);
    let fa = noise.detection_flip_a;
    let fb = noise.detection_flip_b;
    let mut out = [0.0; 4];
    for (src, &p) in mixed.iter().enumerate() {
        let (xa, xb) = (src >> 1, src & 1);
        for (dst, slot) in out.iter_mut().enumerate() {
            let (ya, yb) = (dst >> 1, dst & 1);
            let ka = if xa == ya { 1.0 - fa } else { fa };
            let kb = if xb == yb { 1.0 - fb } else { fb };
            *slot += p * ka * kb;
        }
    }
    out
}

/// Confidence level of a self-testing fidelity bound.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum FidelityConfidence {
    /// Point estimate of `B_CHSH`.
    Median,
    /// One-sided 95 % normal lower bound on `B_CHSH`.
    Ninety5,
}

/// One-sided 95 % standard-normal quantile.
pub const NORMAL_Q95: f64 = 1.645;

/// `β_S = (16 + 14√2) / 17`
pub fn beta_s() -> f64 {
    (16.0 + 14.0 * SQRT_2) / 17.0
}

/// Singlet-fidelity lower bound `½(1 + (B - β_S)/(2√2 - β_S))`, clamped to
/// `[0, 1]`.
pub fn self_test_fidelity(b_chsh: f64, stderr: f64, confidence: FidelityConfidence) -> Result<f64> {
    if !(stderr >= 0.0) {
        return Err(Error::invalid(format!(
            "standard error must be non-negative, got {stderr}"
        )));
    }
    if !b_chsh.is_finite() {
        return Err(Error::invalid("CHSH value must be finite"));
    }
    let b = match confidence {
        FidelityConfidence::Median => b_chsh,
        FidelityConfidence::Ninety5 => b_chsh - NORMAL_Q95 * stderr,
    };
    let beta = beta_s();
    let f = 0.5 * (1.0 + (b - beta) / (2.0 * SQRT_2 - beta));
    Ok(f.clamp(0.0, 1.0))
}

/// `2N sin²(π/4N)`, the closed form of [`ideal_chain_value`].
pub fn ideal_chain_closed_form(order: usize) -> f64 {
    let n = order as f64;
    2.0 * n * (PI / (4.0 * n)).sin().powi(2)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::chain::Outcome;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn probabilities_at(state: &TwoQubitState, a: f64, b: f64) -> [f64; 4] {
        joint_probabilities_at(state, a, b).unwrap()
    }

    #[test]
    fn rotation_is_unitary() {
        for phase in [0.0, 0.3, PI / 7.0, -2.0, 5.5] {
            let u = setting_rotation(phase);
            for i in 0..2 {
                for j in 0..2 {
                    let dot: Complex64 = (0..2).map(|r| u[r][i].conj() * u[r][j]).sum();
                    let want = if i == j { 1.0 } else { 0.0 };
                    assert!((dot - Complex64::new(want, 0.0)).norm() < 1e-15);
                }
            }
        }
    }

    #[test]
    fn closed_form_correlation_on_random_angles() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let phi = TwoQubitState::phi_plus();
        for _ in 0..100 {
            let a: f64 = rng.random_range(-PI..PI);
            let b: f64 = rng.random_range(-PI..PI);
            let p = probabilities_at(&phi, a, b);
            let oracle = ((a + b) / 2.0).sin().powi(2);
            assert!((correlation(&p) - oracle).abs() < 1e-10);
            assert!((p.iter().sum::<f64>() - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn zero_angle_sum_gives_zero_correlation() {
        let p = probabilities_at(&TwoQubitState::phi_plus(), 0.4, -0.4);
        assert!(correlation(&p).abs() < 1e-15);
    }

    #[test]
    fn phi_minus_first_pair_anticorrelation() {
        let params = ChainParams::with_order(3).unwrap();
        let p = joint_probabilities(&TwoQubitState::phi_minus(), params.pair(1, 1).unwrap()).unwrap();
        let anti = p[1] + p[2];
        assert!((anti - (PI / 12.0).sin().powi(2)).abs() < 1e-12);
        assert!((anti - 0.0670).abs() < 5e-5);
        // printed frequencies for that row
        assert!((anti - (0.03296 + 0.03403)).abs() < 1e-3);
    }

    #[test]
    fn unnormalized_states_are_rejected() {
        let one = Complex64::new(1.0, 0.0);
        assert!(matches!(
            TwoQubitState::new([one, one, Complex64::ZERO, Complex64::ZERO]),
            Err(Error::Unnormalized(_))
        ));
        let bad = TwoQubitState {
            amplitudes: [one, one, one, one],
        };
        let pair = ChainParams::with_order(2).unwrap().pair(1, 1).unwrap();
        assert!(joint_probabilities(&bad, pair).is_err());
    }

    #[test]
    fn marginals_do_not_depend_on_remote_setting() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let noises = [
            NoiseSpec::default(),
            NoiseSpec {
                detection_flip_a: 0.01,
                detection_flip_b: 0.2,
                state_fidelity_mix: 0.1,
            },
        ];
        for _ in 0..20 {
            let re: Vec<f64> = (0..8).map(|_| rng.random_range(-1.0..1.0)).collect();
            let amps: Vec<Complex64> = (0..4).map(|i| Complex64::new(re[2 * i], re[2 * i + 1])).collect();
            let norm = amps.iter().map(|a| a.norm_sqr()).sum::<f64>().sqrt();
            let state =
                TwoQubitState::new([amps[0] / norm, amps[1] / norm, amps[2] / norm, amps[3] / norm]).unwrap();
            let a = rng.random_range(-PI..PI);
            let (b1, b2) = (rng.random_range(-PI..PI), rng.random_range(-PI..PI));
            for noise in &noises {
                let p1 = apply_noise(&probabilities_at(&state, a, b1), noise);
                let p2 = apply_noise(&probabilities_at(&state, a, b2), noise);
                assert!(((p1[0] + p1[1]) - (p2[0] + p2[1])).abs() < 1e-10);
                let q1 = apply_noise(&probabilities_at(&state, b1, a), noise);
                let q2 = apply_noise(&probabilities_at(&state, b2, a), noise);
                assert!(((q1[0] + q1[2]) - (q2[0] + q2[2])).abs() < 1e-10);
                assert!((p1.iter().sum::<f64>() - 1.0).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn ideal_chain_matches_closed_form() {
        for n in 2..=50 {
            let v = ideal_chain_value(n).unwrap();
            assert!((v - ideal_chain_closed_form(n)).abs() < 1e-12, "N = {n}");
        }
        assert!((ideal_chain_value(2).unwrap() - 0.5858).abs() < 5e-5);
        assert!((ideal_chain_value(9).unwrap() - 0.13673).abs() < 5e-5);
        let big = ideal_chain_value(1000).unwrap();
        let series = PI * PI / 8000.0;
        assert!(((big - series) / series).abs() < 1e-6);
    }

    #[test]
    fn noise_identity_and_full_mix() {
        let p = [0.1, 0.2, 0.3, 0.4];
        assert_eq!(apply_noise(&p, &NoiseSpec::default()), p);
        let full = NoiseSpec {
            state_fidelity_mix: 1.0,
            ..Default::default()
        };
        for v in apply_noise(&p, &full) {
            assert!((v - 0.25).abs() < 1e-15);
        }
    }

    #[test]
    fn small_flips_raise_correlation_towards_observed_scale() {
        let params = ChainParams::with_order(8).unwrap();
        let ideal = joint_probabilities(&TwoQubitState::phi_plus(), params.pair(1, 1).unwrap()).unwrap();
        let c0 = correlation(&ideal);
        assert!((c0 - 0.0096).abs() < 5e-5);
        let noise = NoiseSpec {
            detection_flip_a: 0.003,
            detection_flip_b: 0.003,
            state_fidelity_mix: 0.0,
        };
        let c1 = correlation(&apply_noise(&ideal, &noise));
        // flip-channel composition by hand
        let f = 0.003;
        let by_hand = c0 * ((1.0 - f) * (1.0 - f) + f * f) + (1.0 - c0) * 2.0 * f * (1.0 - f);
        assert!((c1 - by_hand).abs() < 1e-15);
        assert!(c1 > c0 && c1 < 0.0175 && c1 > 0.0175 / 3.0);
    }

    #[test]
    fn fidelity_examples() {
        use FidelityConfidence::*;
        let f50 = self_test_fidelity(2.80, 0.02, Median).unwrap();
        let f95 = self_test_fidelity(2.80, 0.02, Ninety5).unwrap();
        assert!((f50 - 0.980).abs() < 1e-3);
        assert!((f95 - 0.958).abs() < 1e-3);
        assert!((self_test_fidelity(2.25, 0.03, Median).unwrap() - 0.600).abs() < 1e-3);
        assert_eq!(self_test_fidelity(2.0 * SQRT_2, 0.0, Median).unwrap(), 1.0);
        assert!(self_test_fidelity(2.5, -0.1, Median).is_err());
        // at or below β_S the bound is at most one half, still returned
        assert!(self_test_fidelity(beta_s(), 0.0, Median).unwrap() <= 0.5 + 1e-15);
    }

    #[test]
    fn fidelity_is_strictly_increasing() {
        let grid: Vec<f64> = (0..=400).map(|i| 2.0 + i as f64 * (2.0 * SQRT_2 - 2.0) / 400.0).collect();
        let f: Vec<f64> = grid
            .iter()
            .map(|&b| self_test_fidelity(b, 0.0, FidelityConfidence::Median).unwrap())
            .collect();
        assert!(f.windows(2).all(|w| w[1] > w[0]));
    }

    #[test]
    fn outcome_ordering_matches_basis() {
        // |↑↑⟩ measured without rotation would be BB: index 0 ↔ (Bright, Bright)
        assert_eq!(crate::chain::joint_outcome(0), (Outcome::Bright, Outcome::Bright));
        assert_eq!(crate::chain::joint_outcome(3), (Outcome::Dark, Outcome::Dark));
    }
}
