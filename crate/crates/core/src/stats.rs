//! Monte Carlo runs over random polynomials and the statistics applied to
//! them: k-statistics, a Kolmogorov–Smirnov normality test and tail
//! frequencies.

use std::time::Instant;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use statrs::distribution::{ContinuousCDF, Normal};
use thiserror::Error;

use crate::energy::{decomposition_check, pairwise_energy, EnergyBreakdown};
use crate::polymodel::EllipticPolynomial;
use crate::rng::ComplexGaussianStream;
use crate::roots::find_roots;
use crate::sphere::{ConfigSource, Isometry, SphericalConfiguration};

#[derive(Debug, Error)]
pub enum StatsError {
    #[error("{what} needs at least {needed} values, got {got}")]
    TooFewSamples {
        what: &'static str,
        needed: usize,
        got: usize,
    },
    #[error("run config field `{field}` out of range: {reason}")]
    Config { field: &'static str, reason: String },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunConfig {
    pub n: usize,
    pub samples: usize,
    pub master_seed: u64,
    /// Also measure `|E(τ·Z) − E(Z)|` for a random isometry `τ` per sample.
    pub invariance_checks: bool,
    /// Record per-sample wall time; off keeps output byte-reproducible.
    pub timing: bool,
}

impl RunConfig {
    pub fn new(n: usize, samples: usize, master_seed: u64) -> Self {
        Self {
            n,
            samples,
            master_seed,
            invariance_checks: false,
            timing: false,
        }
    }

    pub fn validate(&self) -> Result<(), StatsError> {
        if self.n < 2 {
            return Err(StatsError::Config {
                field: "n",
                reason: format!("degree must be at least 2, got {}", self.n),
            });
        }
        if self.samples < 2 {
            return Err(StatsError::Config {
                field: "samples",
                reason: format!("need at least 2 samples, got {}", self.samples),
            });
        }
        Ok(())
    }
}

/// One realization. A failed sample carries `NaN` energies and a message.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SampleRecord {
    pub sample_index: u64,
    pub e_n: f64,
    pub i_n: f64,
    pub s_n: f64,
    pub identity_residual: f64,
    pub root_residual_max: f64,
    pub wall_time_s: f64,
    #[serde(skip)]
    pub invariance_residual: Option<f64>,
    #[serde(skip)]
    pub failure: Option<String>,
}

impl SampleRecord {
    pub fn is_failed(&self) -> bool {
        !(self.e_n.is_finite() && self.i_n.is_finite() && self.s_n.is_finite())
    }

    fn failed(sample_index: u64, message: String, wall_time_s: f64) -> Self {
        Self {
            sample_index,
            e_n: f64::NAN,
            i_n: f64::NAN,
            s_n: f64::NAN,
            identity_residual: f64::NAN,
            root_residual_max: f64::NAN,
            wall_time_s,
            invariance_residual: None,
            failure: Some(message),
        }
    }
}

/// A single sample: polynomial, roots, energy and its split.
pub fn run_sample(cfg: &RunConfig, sample_index: u64) -> SampleRecord {
    let start = Instant::now();
    let stream = ComplexGaussianStream::new(cfg.master_seed, sample_index);
    let p = EllipticPolynomial::sample(cfg.n, &stream);
    let elapsed = |s: Instant| if cfg.timing { s.elapsed().as_secs_f64() } else { 0.0 };
    let rs = match find_roots(&p) {
        Ok(rs) => rs,
        Err(e) => return SampleRecord::failed(sample_index, e.to_string(), elapsed(start)),
    };
    let b: EnergyBreakdown = match decomposition_check(&p, &rs) {
        Ok(b) => b,
        Err(e) => return SampleRecord::failed(sample_index, e.to_string(), elapsed(start)),
    };
    let invariance_residual = if cfg.invariance_checks {
        let cfg0 = SphericalConfiguration::from_planar(rs.roots().iter().copied(), ConfigSource::Roots);
        let tau = Isometry::random(&stream);
        pairwise_energy(&cfg0.transformed(&tau)).ok().map(|e| (e - b.e_n).abs())
    } else {
        None
    };
    SampleRecord {
        sample_index,
        e_n: b.e_n,
        i_n: b.i_n,
        s_n: b.s_n,
        identity_residual: b.identity_residual,
        root_residual_max: rs.max_residual(),
        wall_time_s: elapsed(start),
        invariance_residual,
        failure: None,
    }
}

/// `cfg.samples` independent records in `sample_index` order. The result
/// depends only on the config, not on the number of worker threads.
pub fn run_monte_carlo(cfg: &RunConfig) -> Result<Vec<SampleRecord>, StatsError> {
    cfg.validate()?;
    Ok((0..cfg.samples as u64)
        .into_par_iter()
        .map(|k| run_sample(cfg, k))
        .collect())
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct KStatistics {
    pub count: usize,
    pub k1: f64,
    pub k2: f64,
    pub k3: f64,
    pub k4: f64,
    pub se_k1: f64,
    pub se_k2: f64,
    pub se_k3: f64,
    pub se_k4: f64,
}

impl KStatistics {
    /// `k₃/k₂^{3/2}`.
    pub fn skewness(&self) -> f64 {
        self.k3 / self.k2.powf(1.5)
    }

    /// `k₄/k₂²`.
    pub fn excess_kurtosis(&self) -> f64 {
        self.k4 / (self.k2 * self.k2)
    }
}

/// Unbiased k-statistics from power sums `S_r = Σ x^r`.
fn k_from_sums(n: f64, s1: f64, s2: f64, s3: f64, s4: f64) -> [f64; 4] {
    let k1 = s1 / n;
    let k2 = (n * s2 - s1 * s1) / (n * (n - 1.0));
    let k3 = (2.0 * s1.powi(3) - 3.0 * n * s1 * s2 + n * n * s3) / (n * (n - 1.0) * (n - 2.0));
    let k4 =
        (-6.0 * s1.powi(4) + 12.0 * n * s1 * s1 * s2 - 3.0 * n * (n - 1.0) * s2 * s2 - 4.0 * n * (n + 1.0) * s1 * s3
            + n * n * (n + 1.0) * s4)
            / (n * (n - 1.0) * (n - 2.0) * (n - 3.0));
    [k1, k2, k3, k4]
}

/// k-statistics `k₁..k₄` with delete-one jackknife standard errors.
///
/// Values are centred at their mean first; `k₂..k₄` are shift invariant.
pub fn k_statistics(values: &[f64]) -> Result<KStatistics, StatsError> {
    let m = values.len();
    if m < 5 {
        return Err(StatsError::TooFewSamples {
            what: "k-statistics with jackknife errors",
            needed: 5,
            got: m,
        });
    }
    let shift = values.iter().sum::<f64>() / m as f64;
    let x: Vec<f64> = values.iter().map(|v| v - shift).collect();
    let mut s = [0.0f64; 4];
    for &v in &x {
        let v2 = v * v;
        s[0] += v;
        s[1] += v2;
        s[2] += v2 * v;
        s[3] += v2 * v2;
    }
    let nf = m as f64;
    let full = k_from_sums(nf, s[0], s[1], s[2], s[3]);
    let mut jk_sum = [0.0f64; 4];
    let mut jk_sq = [0.0f64; 4];
    for &v in &x {
        let v2 = v * v;
        let k = k_from_sums(nf - 1.0, s[0] - v, s[1] - v2, s[2] - v2 * v, s[3] - v2 * v2);
        for r in 0..4 {
            jk_sum[r] += k[r];
            jk_sq[r] += k[r] * k[r];
        }
    }
    let se = |r: usize| {
        let mean = jk_sum[r] / nf;
        ((nf - 1.0) / nf * (jk_sq[r] - nf * mean * mean).max(0.0)).sqrt()
    };
    Ok(KStatistics {
        count: m,
        k1: full[0] + shift,
        k2: full[1].max(0.0),
        k3: full[2],
        k4: full[3],
        se_k1: se(0),
        se_k2: se(1),
        se_k3: se(2),
        se_k4: se(3),
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct KsResult {
    pub statistic: f64,
    pub p_value: f64,
    pub count: usize,
}

/// `Q_KS(λ) = 2 Σ_{k≥1} (−1)^{k−1} e^{−2k²λ²}`.
pub fn kolmogorov_q(lambda: f64) -> f64 {
    if lambda < 1e-3 {
        return 1.0;
    }
    let mut sum = 0.0;
    let mut sign = 1.0;
    for k in 1..=200 {
        let kf = k as f64;
        let term = sign * (-2.0 * kf * kf * lambda * lambda).exp();
        sum += term;
        if term.abs() < 1e-16 * sum.abs() {
            break;
        }
        sign = -sign;
    }
    (2.0 * sum).clamp(0.0, 1.0)
}

/// Kolmogorov–Smirnov test of standardized values against `N(0,1)`, with
/// the asymptotic p-value at `λ = (√M + 0.12 + 0.11/√M) D`.
pub fn normality_test(standardized: &[f64]) -> Result<KsResult, StatsError> {
    let m = standardized.len();
    if m < 100 {
        return Err(StatsError::TooFewSamples {
            what: "KS normality test",
            needed: 100,
            got: m,
        });
    }
    let normal = Normal::standard();
    let mut x = standardized.to_vec();
    x.sort_by(f64::total_cmp);
    let mf = m as f64;
    let d = x
        .iter()
        .enumerate()
        .map(|(i, &v)| {
            let f = normal.cdf(v);
            (f - i as f64 / mf).max((i + 1) as f64 / mf - f)
        })
        .fold(0.0, f64::max);
    let sm = mf.sqrt();
    Ok(KsResult {
        statistic: d,
        p_value: kolmogorov_q((sm + 0.12 + 0.11 / sm) * d),
        count: m,
    })
}

/// How values are centred and scaled before the normality test.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub enum Standardization {
    SampleMoments,
    Analytic { mean: f64, variance: f64 },
}

pub fn standardize(values: &[f64], mode: Standardization) -> Vec<f64> {
    let (mean, sd) = match mode {
        Standardization::SampleMoments => {
            let m = values.len() as f64;
            let mean = values.iter().sum::<f64>() / m;
            let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (m - 1.0);
            (mean, var.sqrt())
        }
        Standardization::Analytic { mean, variance } => (mean, variance.sqrt()),
    };
    values.iter().map(|v| (v - mean) / sd).collect()
}

/// Wilson score interval for `k` successes out of `m` at normal quantile `z`.
pub fn wilson_interval(k: usize, m: usize, z: f64) -> (f64, f64) {
    let (k, m) = (k as f64, m as f64);
    let p = k / m;
    let z2 = z * z;
    let centre = (p + z2 / (2.0 * m)) / (1.0 + z2 / m);
    let half = z / (1.0 + z2 / m) * (p * (1.0 - p) / m + z2 / (4.0 * m * m)).sqrt();
    ((centre - half).max(0.0), (centre + half).min(1.0))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TailRow {
    pub t: f64,
    pub threshold: f64,
    pub count: usize,
    pub fraction: f64,
    pub wilson_low: f64,
    pub wilson_high: f64,
    /// `2Φ̄(T/√c)` for the supplied variance constant `c`.
    pub gaussian: f64,
}

/// `P(|E_n − mean| ≥ T√n)` for each `T`, with Wilson intervals at quantile `z`.
pub fn concentration_check(values: &[f64], mean: f64, n: usize, t_grid: &[f64], c_var: f64, z: f64) -> Vec<TailRow> {
    let normal = Normal::standard();
    let sn = (n as f64).sqrt();
    t_grid
        .iter()
        .map(|&t| {
            let threshold = t * sn;
            let count = values.iter().filter(|v| (*v - mean).abs() >= threshold).count();
            let (lo, hi) = wilson_interval(count, values.len(), z);
            TailRow {
                t,
                threshold,
                count,
                fraction: count as f64 / values.len() as f64,
                wilson_low: lo,
                wilson_high: hi,
                gaussian: 2.0 * normal.sf(t / c_var.sqrt()),
            }
        })
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct MeanEstimate {
    pub mean: f64,
    pub standard_error: f64,
}

pub fn mean_estimate(values: &[f64]) -> MeanEstimate {
    let m = values.len() as f64;
    let mean = values.iter().sum::<f64>() / m;
    let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (m - 1.0);
    MeanEstimate {
        mean,
        standard_error: (var / m).sqrt(),
    }
}

/// Unbiased sample covariance.
pub fn covariance(x: &[f64], y: &[f64]) -> f64 {
    let m = x.len() as f64;
    let mx = x.iter().sum::<f64>() / m;
    let my = y.iter().sum::<f64>() / m;
    x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum::<f64>() / (m - 1.0)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SummaryStats {
    pub n: usize,
    pub samples: usize,
    pub failures: usize,
    pub energy: KStatistics,
    pub expected_energy: f64,
    pub k2_over_n: f64,
    /// `None` below the 100 values the test needs.
    pub ks_sample: Option<KsResult>,
    pub ks_analytic: Option<KsResult>,
    pub tails: Vec<TailRow>,
    pub i_over_n: MeanEstimate,
    pub s_over_n: MeanEstimate,
    pub var_i_over_n: f64,
    pub var_s_over_n: f64,
    pub cov_is_over_n: f64,
    pub max_identity_residual: f64,
    pub max_root_residual: f64,
}

/// Statistics of the successful records; `c_var` is the variance constant
/// used for the analytic standardization and the Gaussian tail column.
pub fn summarize(records: &[SampleRecord], n: usize, c_var: f64) -> Result<SummaryStats, StatsError> {
    let ok: Vec<&SampleRecord> = records.iter().filter(|r| !r.is_failed()).collect();
    let e: Vec<f64> = ok.iter().map(|r| r.e_n).collect();
    let i: Vec<f64> = ok.iter().map(|r| r.i_n).collect();
    let s: Vec<f64> = ok.iter().map(|r| r.s_n).collect();
    let nf = n as f64;
    let energy = k_statistics(&e)?;
    let expected = crate::energy::expected_energy(n);
    let ks_sample = normality_test(&standardize(&e, Standardization::SampleMoments)).ok();
    let ks_analytic = normality_test(&standardize(
        &e,
        Standardization::Analytic {
            mean: expected,
            variance: c_var * nf,
        },
    ))
    .ok();
    let i_scaled: Vec<f64> = i.iter().map(|v| v / nf).collect();
    let s_scaled: Vec<f64> = s.iter().map(|v| v / nf).collect();
    Ok(SummaryStats {
        n,
        samples: records.len(),
        failures: records.len() - ok.len(),
        energy,
        expected_energy: expected,
        k2_over_n: energy.k2 / nf,
        ks_sample,
        ks_analytic,
        tails: concentration_check(&e, energy.k1, n, &[0.0, 0.3, 0.6, 0.9, 1.2], c_var, 1.96),
        i_over_n: mean_estimate(&i_scaled),
        s_over_n: mean_estimate(&s_scaled),
        var_i_over_n: covariance(&i, &i) / nf,
        var_s_over_n: covariance(&s, &s) / nf,
        cov_is_over_n: covariance(&i, &s) / nf,
        max_identity_residual: ok.iter().map(|r| r.identity_residual.abs()).fold(0.0, f64::max),
        max_root_residual: ok.iter().map(|r| r.root_residual_max).fold(0.0, f64::max),
    })
}

/// Equal-width histogram: `(left edge, right edge, count)` per bin.
pub fn histogram(values: &[f64], bins: usize) -> Vec<(f64, f64, usize)> {
    let lo = values.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let width = if hi > lo { (hi - lo) / bins as f64 } else { 1.0 };
    let mut counts = vec![0usize; bins];
    for &v in values {
        let b = (((v - lo) / width) as usize).min(bins - 1);
        counts[b] += 1;
    }
    counts
        .into_iter()
        .enumerate()
        .map(|(b, c)| (lo + b as f64 * width, lo + (b + 1) as f64 * width, c))
        .collect()
}

/// Normal QQ pairs `(theoretical quantile, ordered value)`.
pub fn qq_pairs(standardized: &[f64]) -> Vec<(f64, f64)> {
    let normal = Normal::standard();
    let mut x = standardized.to_vec();
    x.sort_by(f64::total_cmp);
    let m = x.len() as f64;
    x.into_iter()
        .enumerate()
        .map(|(i, v)| (normal.inverse_cdf((i as f64 + 0.5) / m), v))
        .collect()
}
