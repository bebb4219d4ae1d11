//! One- and two-point intensities, `ρ_{ℓ,m,p}` by Monte Carlo, pair counts
//! and the clustering decay of `ρ₂ − ρ₁ρ₁`.

use nalgebra::DMatrix;
use num_complex::Complex64;
use rayon::prelude::*;
use serde::Serialize;

use super::gaussian::{conditioned_covariance, ConditionedGaussian, KernelModel, Variable};
use super::{DensityQuery, KacRiceError};
use crate::energy::sq_dist;
use crate::polymodel::EllipticPolynomial;
use crate::quadrature::{integrate, Tolerance};
use crate::rng::{ComplexGaussianStream, Purpose};
use crate::roots::find_roots;
use crate::sphere::{mu_density, planar_distance, ConfigSource, Isometry, SphereCoord, SphericalConfiguration};

/// `ρ₂` is refused when the spherical distance times `√n` is below this.
pub const DEGENERACY_THRESHOLD: f64 = 1e-3;

/// One-point intensity with respect to `μ`: the constant `n`.
pub fn rho_1(_z: Complex64, n: usize) -> f64 {
    n as f64
}

/// Pieces of the closed form at spherical distance `d`:
/// `(D, x, ln c², n)` with `c² = 1 − d²/4`, `D = 1 − c^{2n}`, `x = n d²/4`.
struct TwoPoint {
    d_cap: f64,
    x: f64,
    ln_c2: f64,
    n: f64,
}

impl TwoPoint {
    fn new(d: f64, n: usize) -> Self {
        let s = 0.5 * d;
        let ln_c2 = (-(s * s)).ln_1p();
        let n = n as f64;
        Self {
            d_cap: -(n * ln_c2).exp_m1(),
            x: n * s * s,
            ln_c2,
            n,
        }
    }

    /// `c^k` with `0⁰ = 1`.
    fn c_pow(&self, k: f64) -> f64 {
        if k == 0.0 {
            1.0
        } else {
            (0.5 * k * self.ln_c2).exp()
        }
    }

    fn sigma2(&self) -> f64 {
        1.0 - self.x * self.c_pow(2.0 * self.n - 2.0) / self.d_cap
    }

    fn sigma_xy(&self) -> f64 {
        self.c_pow(self.n - 2.0) * (1.0 - self.x / self.d_cap)
    }
}

/// `ρ₂` with respect to `μ⊗μ` as a function of the spherical distance.
pub fn rho_2_closed_form(d: f64, n: usize) -> f64 {
    if n < 2 {
        return 0.0;
    }
    let t = TwoPoint::new(d, n);
    let s2 = t.sigma2();
    let sxy = t.sigma_xy();
    t.n * t.n * (s2 * s2 + sxy * sxy) / t.d_cap
}

/// `ρ₂ − n²`, assembled so that no term cancels against `n²`.
pub fn rho_2_gap(d: f64, n: usize) -> f64 {
    if n < 2 {
        return -((n * n) as f64);
    }
    let t = TwoPoint::new(d, n);
    let xq = t.x * t.c_pow(2.0 * t.n - 2.0) / t.d_cap;
    let one_minus = 1.0 - t.x / t.d_cap;
    let p = t.c_pow(2.0 * t.n);
    t.n * t.n * (-2.0 * xq + xq * xq + t.c_pow(2.0 * t.n - 4.0) * one_minus * one_minus + p) / t.d_cap
}

fn check_separation(z: Complex64, w: Complex64, n: usize) -> Result<f64, KacRiceError> {
    let d = planar_distance(z, w);
    let separation = d * (n as f64).sqrt();
    if separation < DEGENERACY_THRESHOLD {
        return Err(KacRiceError::Degenerate { i: 0, j: 1, separation });
    }
    Ok(d)
}

/// Two-point intensity with respect to `μ⊗μ`, from the conditioned
/// covariance of `(Df̂(z), Df̂(w))` given `f̂(z) = f̂(w) = 0`:
/// `n² (σ_zz σ_ww + |σ_zw|²) / det Cov(f̂(z), f̂(w))`.
pub fn rho_2(z: Complex64, w: Complex64, n: usize) -> Result<f64, KacRiceError> {
    check_separation(z, w, n)?;
    if n < 2 {
        return Ok(0.0);
    }
    let q = DensityQuery::new(vec![], vec![z, w], vec![0, 0])?;
    let g = conditioned_covariance(&q, KernelModel::Elliptic(n))?;
    let nf = n as f64;
    Ok(nf * nf * wick(&g.conditioned_cov) / g.det_condition())
}

/// `E|X|²|Y|² = E|X|² E|Y|² + |E X Ȳ|²` for a centred complex Gaussian pair.
fn wick(c: &DMatrix<Complex64>) -> f64 {
    c[(0, 0)].re * c[(1, 1)].re + c[(0, 1)].norm_sqr()
}

/// Two-point intensity with respect to Lebesgue measure from the
/// unnormalized kernel `(1 + z w̄)^n`:
/// `E[|f′(z)|²|f′(w)|² | f(z)=f(w)=0] / (π² det Cov(f(z), f(w)))`.
pub fn rho_2_lebesgue(z: Complex64, w: Complex64, n: usize) -> Result<f64, KacRiceError> {
    check_separation(z, w, n)?;
    if n < 2 {
        return Ok(0.0);
    }
    let nf = n as f64;
    let one = Complex64::new(1.0, 0.0);
    let pw = |q: Complex64, k: usize| if k == 0 { one } else { q.powu(k as u32) };
    let cov = |a: Variable, b: Variable| -> Complex64 {
        let (x, y, dx, dy) = match (a, b) {
            (Variable::Value(x), Variable::Value(y)) => (x, y, false, false),
            (Variable::Value(x), Variable::Derivative(y)) => (x, y, false, true),
            (Variable::Derivative(x), Variable::Value(y)) => (x, y, true, false),
            (Variable::Derivative(x), Variable::Derivative(y)) => (x, y, true, true),
        };
        let k = one + x * y.conj();
        match (dx, dy) {
            (false, false) => pw(k, n),
            (true, false) => y.conj() * nf * pw(k, n - 1),
            (false, true) => x * nf * pw(k, n - 1),
            (true, true) => pw(k, n - 2) * (one + x * y.conj() * nf) * nf,
        }
    };
    let vars = [
        Variable::Value(z),
        Variable::Value(w),
        Variable::Derivative(z),
        Variable::Derivative(w),
    ];
    let full = DMatrix::from_fn(4, 4, |i, j| cov(vars[i], vars[j]));
    let s11 = full.view((0, 0), (2, 2)).into_owned();
    let s12 = full.view((0, 2), (2, 2)).into_owned();
    let s22 = full.view((2, 2), (2, 2)).into_owned();
    let det = (s11[(0, 0)] * s11[(1, 1)] - s11[(0, 1)] * s11[(1, 0)]).re;
    let inv = s11.try_inverse().ok_or(KacRiceError::Singular {
        min_eigenvalue: det,
        i: 0,
        j: 1,
    })?;
    let cond = s22 - s12.adjoint() * inv * s12;
    Ok(wick(&cond) / (std::f64::consts::PI.powi(2) * det))
}

/// `∫∫ ρ₂ dμ dμ`, which counts ordered pairs of distinct zeros.
///
/// By rotation invariance this is `∫₀² ρ₂(d) (d/2) dd`; the integrand is
/// written as `n² + (ρ₂ − n²)`.
pub fn rho_2_total_mass(n: usize, tol: Tolerance) -> Result<f64, KacRiceError> {
    let nf = n as f64;
    let d0 = DEGENERACY_THRESHOLD / nf.sqrt();
    let scale = 1.0 / nf.sqrt();
    let breaks: Vec<f64> = [1.0, 3.0, 10.0, 30.0]
        .iter()
        .map(|k| k * scale)
        .filter(|&b| b < 2.0)
        .collect();
    let gap = integrate(|d| rho_2_gap(d, n) * d / 2.0, d0, 2.0, &breaks, tol)?;
    // on [0, d0] the intensity is negligible: the gap integrates to −n²d0²/4
    Ok(nf * nf + gap.value - nf * nf * d0 * d0 / 4.0)
}

/// Expected number of ordered pairs of zeros at spherical distance in `[a, b)`.
pub fn annulus_expected_pairs(n: usize, a: f64, b: f64, tol: Tolerance) -> Result<f64, KacRiceError> {
    let nf = n as f64;
    let d0 = DEGENERACY_THRESHOLD / nf.sqrt();
    let lo = a.max(d0);
    if b <= lo {
        return Ok(0.0);
    }
    let scale = 1.0 / nf.sqrt();
    let breaks: Vec<f64> = [1.0, 3.0, 10.0]
        .iter()
        .map(|k| k * scale)
        .filter(|&x| x > lo && x < b)
        .collect();
    Ok(integrate(|d| rho_2_closed_form(d, n) * d / 2.0, lo, b, &breaks, tol)?.value)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PairCountComparison {
    pub n: usize,
    pub samples: usize,
    pub lower: f64,
    pub upper: f64,
    pub expected: f64,
    pub observed_mean: f64,
    pub observed_se: f64,
}

impl PairCountComparison {
    pub fn relative_difference(&self) -> f64 {
        (self.observed_mean - self.expected) / self.expected
    }
}

/// Mean number of ordered root pairs per annulus `[edges[k], edges[k+1])`
/// over `samples` polynomials, against the Kac-Rice expectation.
pub fn empirical_pair_counts(
    n: usize,
    samples: usize,
    edges: &[f64],
    master_seed: u64,
    tol: Tolerance,
) -> Result<Vec<PairCountComparison>, KacRiceError> {
    let bins = edges.len().saturating_sub(1);
    let per_sample: Vec<Vec<f64>> = (0..samples as u64)
        .into_par_iter()
        .map(|k| -> Result<Vec<f64>, KacRiceError> {
            let p = EllipticPolynomial::sample(n, &ComplexGaussianStream::new(master_seed, k));
            let rs = find_roots(&p)?;
            let cfg = SphericalConfiguration::from_planar(rs.roots().iter().copied(), ConfigSource::Roots);
            let x = cfg.cartesian();
            let mut counts = vec![0.0; bins];
            for i in 0..x.len() {
                for j in i + 1..x.len() {
                    let d = sq_dist(&x[i], &x[j]).sqrt();
                    if let Some(b) = (0..bins).find(|&b| d >= edges[b] && d < edges[b + 1]) {
                        counts[b] += 2.0;
                    }
                }
            }
            Ok(counts)
        })
        .collect::<Result<_, _>>()?;
    let m = samples as f64;
    (0..bins)
        .map(|b| {
            let mean = per_sample.iter().map(|c| c[b]).sum::<f64>() / m;
            let var = per_sample.iter().map(|c| (c[b] - mean).powi(2)).sum::<f64>() / (m - 1.0);
            Ok(PairCountComparison {
                n,
                samples,
                lower: edges[b],
                upper: edges[b + 1],
                expected: annulus_expected_pairs(n, edges[b], edges[b + 1], tol)?,
                observed_mean: mean,
                observed_se: (var / m).sqrt(),
            })
        })
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct DensityEstimate {
    /// `n^{ℓ+m} Λ / det Cov(f̂(z_j))`.
    pub value: f64,
    pub standard_error: f64,
    /// The conditional expectation `Λ`.
    pub lambda: f64,
    pub lambda_se: f64,
    pub det_condition: f64,
    pub samples: usize,
    /// Set when a requested standard error was not reached.
    pub flagged: bool,
}

/// `ρ_{ℓ,m,p}` by sampling the conditioned Gaussian vector
/// `(Df̂(z_j), f̂(w_t))` given `f̂(z_j) = 0`.
pub fn rho_lmp_mc(
    q: &DensityQuery,
    n: usize,
    samples: usize,
    stream: &ComplexGaussianStream,
    target_se: Option<f64>,
) -> Result<DensityEstimate, KacRiceError> {
    let (ell, m) = (q.ell(), q.m());
    if ell + m > 3 {
        return Err(KacRiceError::QuerySize { ell, m, max: 3 });
    }
    let g: ConditionedGaussian = conditioned_covariance(q, KernelModel::Elliptic(n))?;
    let factor = g.sampling_factor();
    let mut rng = stream.rng_for(Purpose::Auxiliary);
    let mut sum = 0.0;
    let mut sum2 = 0.0;
    for _ in 0..samples {
        let eta = g.sample_with(&factor, &mut rng);
        let mut v = 1.0;
        for j in 0..m {
            let a = eta[j].norm();
            v *= a * a * a.ln().powi(q.powers[j] as i32);
        }
        for t in 0..ell {
            v *= eta[m + t].norm().ln();
        }
        sum += v;
        sum2 += v * v;
    }
    let k = samples as f64;
    let lambda = sum / k;
    let lambda_se = ((sum2 / k - lambda * lambda).max(0.0) / (k - 1.0)).sqrt();
    let det = g.det_condition();
    let scale = (n as f64).powi((ell + m) as i32) / det;
    Ok(DensityEstimate {
        value: lambda * scale,
        standard_error: lambda_se * scale,
        lambda,
        lambda_se,
        det_condition: det,
        samples,
        flagged: target_se.is_some_and(|t| lambda_se * scale > t),
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ClusteringPoint {
    pub d: f64,
    pub n_d2: f64,
    /// Largest `|ρ₂ − ρ₁ρ₁|` over the sampled pairs at this distance.
    pub gap: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ClusteringFit {
    pub n: usize,
    pub points: Vec<ClusteringPoint>,
    /// Least-squares slope of `ln(gap/n²)` against `n d²`.
    pub slope: f64,
    pub intercept: f64,
}

/// Pairs at spherical distance `d`: `(0, t)` moved by random isometries.
fn pairs_at_distance(d: f64, count: usize, stream: &ComplexGaussianStream) -> Vec<(Complex64, Complex64)> {
    let s = 0.5 * d;
    let t = s / (1.0 - s * s).sqrt();
    (0..count as u64)
        .filter_map(|k| {
            let tau = Isometry::random(&stream.with_index(stream.stream_index.wrapping_add(k)));
            let a = tau.apply(SphereCoord::Finite(Complex64::new(0.0, 0.0))).finite()?;
            let b = tau.apply(SphereCoord::Finite(Complex64::new(t, 0.0))).finite()?;
            Some((a, b))
        })
        .collect()
}

/// `|ρ₂ − ρ₁ρ₁|` on a grid of `n d²` values spanning `d ∈ [5/√n, 50/√n]`
/// (capped below the antipodal distance), with a log-linear fit.
pub fn clustering_gap(
    n: usize,
    grid_points: usize,
    pairs_per_distance: usize,
    stream: &ComplexGaussianStream,
) -> ClusteringFit {
    let nf = n as f64;
    let d_lo = 5.0 / nf.sqrt();
    let d_hi = (50.0 / nf.sqrt()).min(1.9);
    let (x_lo, x_hi) = (nf * d_lo * d_lo, nf * d_hi * d_hi);
    let mut points = Vec::with_capacity(grid_points);
    for i in 0..grid_points {
        let x = x_lo + (x_hi - x_lo) * i as f64 / (grid_points - 1).max(1) as f64;
        let d = (x / nf).sqrt();
        let gap = pairs_at_distance(d, pairs_per_distance, &stream.with_index(i as u64 * 1_000_003))
            .into_iter()
            .map(|(a, b)| rho_2_gap(planar_distance(a, b), n).abs())
            .fold(0.0, f64::max);
        if gap > 0.0 && gap.is_finite() {
            points.push(ClusteringPoint { d, n_d2: x, gap });
        }
    }
    let k = points.len() as f64;
    let mx = points.iter().map(|p| p.n_d2).sum::<f64>() / k;
    let ys: Vec<f64> = points.iter().map(|p| (p.gap / (nf * nf)).ln()).collect();
    let my = ys.iter().sum::<f64>() / k;
    let sxy: f64 = points.iter().zip(&ys).map(|(p, y)| (p.n_d2 - mx) * (y - my)).sum();
    let sxx: f64 = points.iter().map(|p| (p.n_d2 - mx).powi(2)).sum();
    let slope = sxy / sxx;
    ClusteringFit {
        n,
        points,
        slope,
        intercept: my - slope * mx,
    }
}

/// `ρ₂` with respect to Lebesgue measure from the `μ⊗μ` density.
pub fn rho_2_lebesgue_from_mu(z: Complex64, w: Complex64, n: usize) -> Result<f64, KacRiceError> {
    Ok(rho_2(z, w, n)? * mu_density(z) * mu_density(w))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[test]
    fn three_routes_agree() {
        let n = 12;
        for &(z, w) in &[
            (c(0.0, 0.0), c(0.3, 0.0)),
            (c(0.2, -0.5), c(-0.7, 0.4)),
            (c(1.5, 0.2), c(-0.1, 2.0)),
        ] {
            let generic = rho_2(z, w, n).unwrap();
            let closed = rho_2_closed_form(planar_distance(z, w), n);
            assert!((generic - closed).abs() < 1e-10 * closed, "{generic} {closed}");
            let leb = rho_2_lebesgue(z, w, n).unwrap();
            let from_mu = rho_2_lebesgue_from_mu(z, w, n).unwrap();
            assert!((leb - from_mu).abs() < 1e-9 * leb, "{leb} {from_mu}");
        }
    }

    #[test]
    fn gap_matches_difference_where_resolvable() {
        let n = 30;
        for &d in &[0.05, 0.2, 0.4, 0.8] {
            let a = rho_2_closed_form(d, n) - (n * n) as f64;
            let b = rho_2_gap(d, n);
            assert!((a - b).abs() < 1e-9 * (n * n) as f64, "{d}: {a} {b}");
        }
    }

    #[test]
    fn symmetric_and_degenerate() {
        let (z, w) = (c(0.1, 0.4), c(-0.6, 0.2));
        assert_eq!(rho_2(z, w, 20).unwrap().to_bits(), rho_2(z, w, 20).unwrap().to_bits());
        let a = rho_2(z, w, 20).unwrap();
        let b = rho_2(w, z, 20).unwrap();
        assert!((a - b).abs() < 1e-12 * a);
        assert!(matches!(rho_2(z, z + 1e-6, 20), Err(KacRiceError::Degenerate { .. })));
    }

    #[test]
    fn antipodal_gap_is_zero() {
        assert!(rho_2_gap(2.0, 50).abs() < 1e-6 * 2500.0);
        assert!((rho_2_closed_form(2.0, 50) - 2500.0).abs() < 1e-9);
    }

    #[test]
    fn total_mass_small_n() {
        for &n in &[2usize, 5, 20, 50] {
            let m = rho_2_total_mass(n, Tolerance::new(1e-10, 1e-10)).unwrap();
            let target = (n * (n - 1)) as f64;
            assert!((m - target).abs() < 1e-6 * target, "n = {n}: {m}");
        }
    }

    #[test]
    fn one_point_constant() {
        assert_eq!(rho_1(c(0.3, 9.0), 17), 17.0);
    }
}
