//! Binomial upper tail `P(Bin(n, q) >= y)`.
//!
//! The tail equals the regularized incomplete beta `I_q(y, n - y + 1)`. Its
//! prefactor is a binomial probability, evaluated in saddle-point form
//! (Stirling-error table plus the deviance `bd0`) so that it keeps full
//! relative accuracy for large `n`. The remaining factor is a continued
//! fraction evaluated with the modified Lentz method.

use crate::error::{Error, Result};

const LN_2PI: f64 = 1.837_877_066_409_345_483_560_659;

/// `stirlerr(n) = ln n! - ((n + 1/2) ln n - n + ln(2 pi)/2)` for n = 0..=15.
const STIRLERR: [f64; 16] = [
    0.0,
    0.081_061_466_795_327_258_22,
    0.041_340_695_955_409_294_094,
    0.027_677_925_684_998_339_149,
    0.020_790_672_103_765_093_112,
    0.016_644_691_189_821_192_163,
    0.013_876_128_823_070_747_999,
    0.011_896_709_945_891_770_095,
    0.010_411_265_261_972_096_497,
    0.009_255_462_182_712_732_917_7,
    0.008_330_563_433_362_871_256_5,
    0.007_573_675_487_951_840_795,
    0.006_942_840_107_209_529_865_7,
    0.006_408_994_188_004_207_068_4,
    0.005_951_370_112_758_847_735_6,
    0.005_554_733_551_962_801_371,
];

fn stirlerr(n: u64) -> f64 {
    const S0: f64 = 1.0 / 12.0;
    const S1: f64 = 1.0 / 360.0;
    const S2: f64 = 1.0 / 1260.0;
    const S3: f64 = 1.0 / 1680.0;
    const S4: f64 = 1.0 / 1188.0;
    if n <= 15 {
        return STIRLERR[n as usize];
    }
    let n = n as f64;
    let nn = n * n;
    if n > 500.0 {
        (S0 - S1 / nn) / n
    } else if n > 80.0 {
        (S0 - (S1 - S2 / nn) / nn) / n
    } else if n > 35.0 {
        (S0 - (S1 - (S2 - S3 / nn) / nn) / nn) / n
    } else {
        (S0 - (S1 - (S2 - (S3 - S4 / nn) / nn) / nn) / nn) / n
    }
}

/// Deviance term `x ln(x / np) + np - x`, accurate when `x` is close to `np`.
fn bd0(x: f64, np: f64) -> f64 {
    if (x - np).abs() < 0.1 * (x + np) {
        let mut v = (x - np) / (x + np);
        let mut s = (x - np) * v;
        let mut ej = 2.0 * x * v;
        v *= v;
        for j in 1..1000 {
            ej *= v;
            let s1 = s + ej / (2 * j + 1) as f64;
            if s1 == s {
                return s1;
            }
            s = s1;
        }
        return s;
    }
    x * (x / np).ln() + np - x
}

/// `P(Bin(n, p) = k)` with `q = 1 - p` passed separately to avoid
/// cancellation.
fn pmf_raw(k: u64, n: u64, p: f64, q: f64) -> f64 {
    if p == 0.0 {
        return if k == 0 { 1.0 } else { 0.0 };
    }
    if q == 0.0 {
        return if k == n { 1.0 } else { 0.0 };
    }
    let nf = n as f64;
    if k == 0 {
        if n == 0 {
            return 1.0;
        }
        let lc = if p < 0.1 { -bd0(nf, nf * q) - nf * p } else { nf * q.ln() };
        return lc.exp();
    }
    if k == n {
        let lc = if q < 0.1 { -bd0(nf, nf * p) - nf * q } else { nf * p.ln() };
        return lc.exp();
    }
    let kf = k as f64;
    let lc = stirlerr(n) - stirlerr(k) - stirlerr(n - k) - bd0(kf, nf * p) - bd0(nf - kf, nf * q);
    let lf = LN_2PI + kf.ln() + (-kf / nf).ln_1p();
    (lc - 0.5 * lf).exp()
}

/// `P(Bin(n, q) = k)`.
pub fn binomial_pmf(k: u64, n: u64, q: f64) -> Result<f64> {
    check_probability(q)?;
    if k > n {
        return Ok(0.0);
    }
    Ok(pmf_raw(k, n, q, 1.0 - q))
}

/// Continued fraction of the incomplete beta `I_x(a, b)` (modified Lentz).
fn beta_cf(a: f64, b: f64, x: f64) -> f64 {
    const TINY: f64 = 1e-300;
    const EPS: f64 = f64::EPSILON;
    const MAX_ITER: u32 = 200_000;
    let qab = a + b;
    let qap = a + 1.0;
    let qam = a - 1.0;
    let guard = |v: f64| if v.abs() < TINY { TINY } else { v };
    let mut c = 1.0;
    let mut d = 1.0 / guard(1.0 - qab * x / qap);
    let mut h = d;
    for m in 1..=MAX_ITER {
        let m = m as f64;
        let m2 = 2.0 * m;
        let aa = m * (b - m) * x / ((qam + m2) * (a + m2));
        d = 1.0 / guard(1.0 + aa * d);
        c = guard(1.0 + aa / c);
        h *= d * c;
        let aa = -(a + m) * (qab + m) * x / ((a + m2) * (qap + m2));
        d = 1.0 / guard(1.0 + aa * d);
        c = guard(1.0 + aa / c);
        let del = d * c;
        h *= del;
        if (del - 1.0).abs() <= EPS {
            break;
        }
    }
    h
}

/// `B_tail(y, n, q) = P(Bin(n, q) >= y)`.
pub fn binomial_tail(y: u64, n: u64, q: f64) -> Result<f64> {
    check_probability(q)?;
    if y > n {
        return Err(Error::invalid(format!("tail threshold y = {y} exceeds n = {n}")));
    }
    if y == 0 || q == 1.0 {
        return Ok(1.0);
    }
    if q == 0.0 {
        return Ok(0.0);
    }
    // I_q(a, b) with a = y, b = n - y + 1
    let a = y as f64;
    let b = (n - y + 1) as f64;
    let p = 1.0 - q;
    if q < (a + 1.0) / (a + b + 2.0) {
        Ok(pmf_raw(y, n, q, p) * p * beta_cf(a, b, q))
    } else {
        let lower = pmf_raw(y - 1, n, q, p) * q * beta_cf(b, a, p);
        Ok((1.0 - lower).clamp(0.0, 1.0))
    }
}

fn check_probability(q: f64) -> Result<()> {
    if !(0.0..=1.0).contains(&q) {
        return Err(Error::invalid(format!("probability must lie in [0, 1], got {q}")));
    }
    Ok(())
}
