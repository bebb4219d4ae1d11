//! Mathematical constants and a few special functions.

use std::f64::consts::PI;

/// Euler–Mascheroni constant.
pub const EULER_GAMMA: f64 = 0.577_215_664_901_532_860_606_512_090_082;
/// Apéry's constant ζ(3).
pub const ZETA3: f64 = 1.202_056_903_159_594_285_399_738_161_511;
/// ζ(2) = π²/6.
pub const ZETA2: f64 = PI * PI / 6.0;

/// Dilogarithm Li₂(x) for x ≤ 1.
pub fn dilog(x: f64) -> f64 {
    assert!(x <= 1.0, "dilog argument {x} > 1");
    if x == 1.0 {
        return ZETA2;
    }
    if x < -1.0 {
        // Li2(x) = -π²/6 - ½ln²(-x) - Li2(1/x)
        let l = (-x).ln();
        return -ZETA2 - 0.5 * l * l - dilog(1.0 / x);
    }
    if x < 0.0 {
        // Li2(x) = -Li2(x/(x-1)) - ½ln²(1-x), argument lands in [0, ½)
        let l = (-x).ln_1p();
        return -dilog_series(x / (x - 1.0)) - 0.5 * l * l;
    }
    if x <= 0.5 {
        dilog_series(x)
    } else {
        ZETA2 - x.ln() * (-x).ln_1p() - dilog_series(1.0 - x)
    }
}

fn dilog_series(x: f64) -> f64 {
    debug_assert!((0.0..=0.5).contains(&x));
    let mut term = x;
    let mut sum = 0.0f64;
    let mut k = 1.0f64;
    while term.abs() > 1e-18 * sum.abs().max(f64::MIN_POSITIVE) {
        sum += term / (k * k);
        term *= x;
        k += 1.0;
        if k > 200.0 {
            break;
        }
    }
    sum
}

/// Riemann ζ(3) by direct summation with an integral tail correction.
pub fn zeta3_series() -> f64 {
    let n = 2000u32;
    let mut acc = NeumaierSum::default();
    for k in (1..=n).rev() {
        let k = f64::from(k);
        acc.add(1.0 / (k * k * k));
    }
    // Euler–Maclaurin tail: ∫_n^∞ x^-3 dx - ½n^-3 + (3/12) n^-4
    let nf = f64::from(n);
    acc.add(0.5 / (nf * nf) - 0.5 / (nf * nf * nf) + 0.25 / (nf * nf * nf * nf));
    acc.value()
}

/// Compensated summation.
#[derive(Debug, Clone, Copy, Default)]
pub struct NeumaierSum {
    sum: f64,
    comp: f64,
}

impl NeumaierSum {
    pub fn add(&mut self, x: f64) {
        let t = self.sum + x;
        if self.sum.abs() >= x.abs() {
            self.comp += (self.sum - t) + x;
        } else {
            self.comp += (x - t) + self.sum;
        }
        self.sum = t;
    }

    pub fn value(&self) -> f64 {
        self.sum + self.comp
    }

    pub fn merge(&mut self, other: &NeumaierSum) {
        self.add(other.sum);
        self.add(other.comp);
    }
}

impl std::iter::FromIterator<f64> for NeumaierSum {
    fn from_iter<I: IntoIterator<Item = f64>>(iter: I) -> Self {
        let mut s = NeumaierSum::default();
        for x in iter {
            s.add(x);
        }
        s
    }
}

/// ½·ln binom(n, j) for j = 0..=n, built from the ratio recurrence and mirrored.
pub fn half_log_binomials(n: usize) -> Vec<f64> {
    let mut out = vec![0.0; n + 1];
    let mut acc = 0.0;
    for (j, slot) in out.iter_mut().enumerate().take(n / 2 + 1).skip(1) {
        acc += ((n - j + 1) as f64 / j as f64).ln();
        *slot = 0.5 * acc;
    }
    for j in n / 2 + 1..=n {
        out[j] = out[n - j];
    }
    out
}

/// ln k! for k = 0..=m.
pub fn log_factorials(m: usize) -> Vec<f64> {
    let mut out = Vec::with_capacity(m + 1);
    let mut acc = 0.0;
    out.push(0.0);
    for k in 1..=m {
        acc += (k as f64).ln();
        out.push(acc);
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn dilog_known_values() {
        assert!((dilog(0.0)).abs() < 1e-300);
        assert!((dilog(1.0) - PI * PI / 6.0).abs() < 1e-15);
        // Li2(1/2) = π²/12 - ln²2/2
        let half = PI * PI / 12.0 - 0.5 * std::f64::consts::LN_2.powi(2);
        assert!((dilog(0.5) - half).abs() < 1e-15);
        // Li2(-1) = -π²/12
        assert!((dilog(-1.0) + PI * PI / 12.0).abs() < 1e-15);
    }

    #[test]
    fn dilog_matches_series_on_both_branches() {
        for &x in &[0.3f64, 0.6, 0.75, 0.9, 0.99] {
            let mut s = 0.0;
            for k in 1..200_000 {
                let k = k as f64;
                s += x.powf(k) / (k * k);
            }
            assert!((dilog(x) - s).abs() < 1e-12, "x={x}");
        }
    }

    #[test]
    fn zeta3_matches_constant() {
        assert!((zeta3_series() - ZETA3).abs() < 1e-14);
    }

    #[test]
    fn half_log_binomials_small() {
        let h = half_log_binomials(4);
        let exact = [1.0f64, 4.0, 6.0, 4.0, 1.0];
        for (a, b) in h.iter().zip(exact) {
            assert!((a - 0.5 * b.ln()).abs() < 1e-15);
        }
        assert_eq!(half_log_binomials(0), vec![0.0]);
    }

    #[test]
    fn neumaier_recovers_cancelled_terms() {
        let s: NeumaierSum = [1.0, 1e100, 1.0, -1e100].into_iter().collect();
        assert_eq!(s.value(), 2.0);
    }
}
