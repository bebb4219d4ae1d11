//! Random elliptic polynomials and the truncated Gaussian entire function.
//!
//! An elliptic polynomial of degree `n` is `f(z) = Σ a_j √binom(n,j) z^j`
//! with i.i.d. standard complex Gaussian `a_j`. Evaluation always goes
//! through the normalized form `f̂(z) = f(z)/(1+|z|²)^{n/2}`: every term is
//! carried as `a_j · w_j · (z/|z|)^j` with `w_j = √binom(n,j)|z|^j/(1+|z|²)^{n/2} ≤ 1`,
//! generated outward from the largest weight by ratio recurrence. No
//! intermediate quantity exceeds one in modulus, whatever `n` and `|z|`.

use std::collections::HashMap;
use std::sync::{Arc, Mutex, OnceLock};

use num_complex::Complex64;
use thiserror::Error;

use crate::rng::{complex_gaussian, ComplexGaussianStream};
use crate::special::{half_log_binomials, log_factorials};
use crate::sphere::Isometry;

const ZERO: Complex64 = Complex64::new(0.0, 0.0);
/// Terms whose weight falls below this fraction of the largest are dropped.
const TERM_CUTOFF: f64 = 1e-22;
/// Below this modulus a point is treated as the origin.
const TINY_RADIUS: f64 = 1e-290;
const MIN_LEADING: f64 = 1e-300;
const MAX_GEF_ORDER: usize = 100_000;

#[derive(Debug, Error)]
pub enum PolyError {
    #[error("evaluation at non-finite point {0}")]
    NonFinitePoint(Complex64),
    #[error("numeric range fault evaluating degree {degree} polynomial at {z}")]
    NumericRange { degree: usize, z: Complex64 },
    #[error("leading coefficient is zero")]
    ZeroLeading,
    #[error("coefficient list is empty")]
    Empty,
    #[error("radius {radius} with tail tolerance {tol:e} needs truncation order {order} > {MAX_GEF_ORDER}")]
    GefOrderTooLarge { radius: f64, tol: f64, order: usize },
}

/// Binomial weight tables shared by all polynomials of one degree.
#[derive(Debug)]
pub struct BinomialTable {
    degree: usize,
    half_log: Vec<f64>,
    /// `up[j] = √((n−j)/(j+1))`, so `w_{j+1} = w_j · |z| · up[j]`.
    up: Vec<f64>,
}

impl BinomialTable {
    fn new(n: usize) -> Self {
        let up = (0..n).map(|j| ((n - j) as f64 / (j + 1) as f64).sqrt()).collect();
        Self {
            degree: n,
            half_log: half_log_binomials(n),
            up,
        }
    }

    pub fn shared(n: usize) -> Arc<BinomialTable> {
        static CACHE: OnceLock<Mutex<HashMap<usize, Arc<BinomialTable>>>> = OnceLock::new();
        let cache = CACHE.get_or_init(Default::default);
        let mut guard = cache.lock().expect("binomial cache poisoned");
        guard
            .entry(n)
            .or_insert_with(|| Arc::new(BinomialTable::new(n)))
            .clone()
    }

    pub fn degree(&self) -> usize {
        self.degree
    }

    pub fn half_log(&self) -> &[f64] {
        &self.half_log
    }
}

/// Value, normalized derivative and Newton correction at one point.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NormalizedEval {
    /// f̂(z)
    pub value: Complex64,
    /// Df̂(z) = f′(z)/(√n (1+|z|²)^{n/2−1})
    pub derivative: Complex64,
    /// f(z)/f′(z), `None` when f′(z) vanishes.
    pub newton: Option<Complex64>,
    /// Rounding bound on |f̂(z)|: a value below it is zero in working precision.
    pub value_error: f64,
}

#[derive(Debug, Clone)]
pub struct EllipticPolynomial {
    table: Arc<BinomialTable>,
    raw: Vec<Complex64>,
    weighted: Vec<Complex64>,
    origin: Option<ComplexGaussianStream>,
    resamples: u32,
}

impl EllipticPolynomial {
    /// Draws the coefficients from `stream`.
    ///
    /// A leading coefficient with modulus below 1e-300 is redrawn; the count
    /// of redraws is kept in [`EllipticPolynomial::resamples`].
    pub fn sample(n: usize, stream: &ComplexGaussianStream) -> Self {
        let mut rng = stream.rng();
        let mut raw: Vec<Complex64> = (0..=n).map(|_| complex_gaussian(&mut rng)).collect();
        let mut resamples = 0;
        while raw[n].norm() < MIN_LEADING {
            raw[n] = complex_gaussian(&mut rng);
            resamples += 1;
        }
        let mut p = Self::from_raw(raw).expect("nonempty with nonzero leading coefficient");
        p.origin = Some(*stream);
        p.resamples = resamples;
        p
    }

    /// Builds from the Gaussian coefficients `a_j`.
    pub fn from_raw(raw: Vec<Complex64>) -> Result<Self, PolyError> {
        if raw.is_empty() {
            return Err(PolyError::Empty);
        }
        let n = raw.len() - 1;
        if raw[n] == ZERO && n > 0 {
            return Err(PolyError::ZeroLeading);
        }
        let table = BinomialTable::shared(n);
        let weighted = raw.iter().zip(&table.half_log).map(|(a, h)| a * h.exp()).collect();
        Ok(Self {
            table,
            raw,
            weighted,
            origin: None,
            resamples: 0,
        })
    }

    /// Builds from monomial coefficients `c_j` of `f(z) = Σ c_j z^j`.
    pub fn from_weighted(weighted: Vec<Complex64>) -> Result<Self, PolyError> {
        if weighted.is_empty() {
            return Err(PolyError::Empty);
        }
        let n = weighted.len() - 1;
        if weighted[n] == ZERO && n > 0 {
            return Err(PolyError::ZeroLeading);
        }
        let table = BinomialTable::shared(n);
        let raw = weighted
            .iter()
            .zip(&table.half_log)
            .map(|(c, h)| c * (-h).exp())
            .collect();
        Ok(Self {
            table,
            raw,
            weighted,
            origin: None,
            resamples: 0,
        })
    }

    /// `leading · Π (z − ζ_k)` expanded into monomial coefficients.
    pub fn from_roots(leading: Complex64, roots: &[Complex64]) -> Result<Self, PolyError> {
        let mut c = vec![leading];
        for &r in roots {
            c.push(ZERO);
            for k in (1..c.len()).rev() {
                c[k] = c[k - 1] - r * c[k];
            }
            c[0] = -r * c[0];
        }
        Self::from_weighted(c)
    }

    pub fn degree(&self) -> usize {
        self.raw.len() - 1
    }

    pub fn raw_coeffs(&self) -> &[Complex64] {
        &self.raw
    }

    pub fn weighted_coeffs(&self) -> &[Complex64] {
        &self.weighted
    }

    /// ½·ln binom(n, j).
    pub fn log_binom(&self) -> &[f64] {
        &self.table.half_log
    }

    /// The leading coefficient `a_n` (raw and weighted agree).
    pub fn leading(&self) -> Complex64 {
        self.raw[self.degree()]
    }

    pub fn origin(&self) -> Option<ComplexGaussianStream> {
        self.origin
    }

    pub fn resamples(&self) -> u32 {
        self.resamples
    }

    /// f̂(z).
    pub fn eval_normalized(&self, z: Complex64) -> Result<Complex64, PolyError> {
        Ok(self.eval(z)?.value)
    }

    /// Df̂(z).
    pub fn eval_dnormalized(&self, z: Complex64) -> Result<Complex64, PolyError> {
        Ok(self.eval(z)?.derivative)
    }

    pub fn eval(&self, z: Complex64) -> Result<NormalizedEval, PolyError> {
        if !(z.re.is_finite() && z.im.is_finite()) {
            return Err(PolyError::NonFinitePoint(z));
        }
        let n = self.degree();
        let out = if n == 0 {
            NormalizedEval {
                value: self.raw[0],
                derivative: ZERO,
                newton: None,
                value_error: f64::EPSILON * self.raw[0].norm(),
            }
        } else if z.norm() < TINY_RADIUS {
            self.eval_at_origin()
        } else {
            self.eval_scaled(z)
        };
        let finite = |c: Complex64| c.re.is_finite() && c.im.is_finite();
        if !finite(out.value) || !finite(out.derivative) || out.newton.is_some_and(|c| !finite(c)) {
            return Err(PolyError::NumericRange { degree: n, z });
        }
        Ok(out)
    }

    fn eval_at_origin(&self) -> NormalizedEval {
        let n = self.degree() as f64;
        let a0 = self.raw[0];
        let a1 = self.raw[1];
        let fprime = a1 * n.sqrt();
        NormalizedEval {
            value: a0,
            derivative: a1,
            newton: (fprime != ZERO).then(|| a0 / fprime),
            value_error: f64::EPSILON * a0.norm(),
        }
    }

    fn eval_scaled(&self, z: Complex64) -> NormalizedEval {
        let n = self.degree();
        let nf = n as f64;
        let table = &*self.table;
        let r = z.norm();
        let u = z / r;
        let lnr = r.ln();
        // ln(1+r²) and r²/(1+r²) without overflow
        let (log1pr2, frac) = if r <= 1.0 {
            let r2 = r * r;
            (r2.ln_1p(), r2 / (1.0 + r2))
        } else {
            let v2 = (1.0 / r) * (1.0 / r);
            (2.0 * lnr + v2.ln_1p(), 1.0 / (1.0 + v2))
        };
        let mut peak = ((nf * frac).round() as usize).min(n);
        while peak < n && r * table.up[peak] > 1.0 {
            peak += 1;
        }
        while peak > 0 && r * table.up[peak - 1] < 1.0 {
            peak -= 1;
        }
        let w_peak = (table.half_log[peak] + peak as f64 * lnr - 0.5 * nf * log1pr2).exp();
        let phase_peak = Complex64::from_polar(1.0, peak as f64 * z.arg());
        // weight of term j in the derivative sum, relative to the value sum
        let dfac = if r <= 1.0 {
            (1.0 + r * r) / (nf.sqrt() * r)
        } else {
            (r + 1.0 / r) / nf.sqrt()
        };
        let dmag = |j: usize, w: f64| w * j as f64 * dfac;

        let mut s0 = ZERO;
        let mut s1 = ZERO;
        let mut abs0 = 0.0;
        let mut top = w_peak;
        let mut dtop = dmag(peak, w_peak);

        let t = self.raw[peak] * w_peak * phase_peak;
        s0 += t;
        s1 += t * peak as f64;
        abs0 += self.raw[peak].norm() * w_peak;

        let (mut w, mut ph) = (w_peak, phase_peak);
        for j in peak + 1..=n {
            w *= r * table.up[j - 1];
            ph *= u;
            let m = dmag(j, w);
            top = top.max(w);
            dtop = dtop.max(m);
            if w < TERM_CUTOFF * top && m < TERM_CUTOFF * dtop {
                break;
            }
            let t = self.raw[j] * w * ph;
            s0 += t;
            s1 += t * j as f64;
            abs0 += self.raw[j].norm() * w;
        }
        let (mut w, mut ph) = (w_peak, phase_peak);
        let uc = u.conj();
        for j in (0..peak).rev() {
            w /= r * table.up[j];
            ph *= uc;
            let m = dmag(j, w);
            top = top.max(w);
            dtop = dtop.max(m);
            if w < TERM_CUTOFF * top && m < TERM_CUTOFF * dtop {
                break;
            }
            let t = self.raw[j] * w * ph;
            s0 += t;
            s1 += t * j as f64;
            abs0 += self.raw[j].norm() * w;
        }

        // Df̂ = s1 (1+r²)/(√n z), split to avoid forming 1+r² for huge r
        let derivative = if r <= 1.0 {
            s1 * ((1.0 + r * r) / (nf.sqrt() * r)) * uc
        } else {
            s1 * ((r + 1.0 / r) / nf.sqrt()) * uc
        };
        // scaled so tiny |s1| does not underflow inside the complex division
        let s1n = s1.norm();
        NormalizedEval {
            value: s0,
            derivative,
            newton: (s1n > 0.0).then(|| (z / s1n) * s0 / (s1 / s1n)),
            value_error: 8.0 * f64::EPSILON * abs0 * (1.0 + (n as f64).sqrt() * 1e-2),
        }
    }

    /// Plain Horner evaluation of f(z) on the monomial coefficients.
    pub fn eval_unnormalized(&self, z: Complex64) -> Complex64 {
        self.weighted.iter().rev().fold(ZERO, |acc, c| acc * z + c)
    }

    /// Plain Horner evaluation of f′(z).
    pub fn eval_derivative_unnormalized(&self, z: Complex64) -> Complex64 {
        let n = self.degree();
        (1..=n).rev().fold(ZERO, |acc, j| acc * z + self.weighted[j] * j as f64)
    }

    /// The polynomial `(ᾱ − β̄z)^n f(τ(z))` for `τ(z) = (αz+β)/(ᾱ−β̄z)`.
    ///
    /// Its roots are the preimages under τ of the roots of `self`, and
    /// `|f̂^τ(z)| = |f̂(τ(z))|`.
    pub fn transformed(&self, t: &Isometry) -> Self {
        let n = self.degree();
        let c = &self.weighted;
        let a = [t.beta, t.alpha];
        let b = [t.alpha.conj(), -t.beta.conj()];
        // h_k = h_{k−1}·A + c_{n−k}·B^k
        let mut h = vec![c[n]];
        let mut bpow = vec![Complex64::new(1.0, 0.0)];
        for k in 1..=n {
            bpow = mul_linear(&bpow, b);
            let mut next = mul_linear(&h, a);
            for (x, y) in next.iter_mut().zip(&bpow) {
                *x += c[n - k] * y;
            }
            h = next;
        }
        let mut out = Self::from_weighted(h).expect("transformed polynomial keeps its degree");
        out.origin = self.origin;
        out
    }

    /// Coefficients reversed, `z^n f(1/z)`; the binomial weights are symmetric
    /// so this is again an elliptic polynomial.
    pub fn reversed(&self) -> Result<Self, PolyError> {
        let mut raw = self.raw.clone();
        raw.reverse();
        Self::from_raw(raw)
    }
}

fn mul_linear(p: &[Complex64], l: [Complex64; 2]) -> Vec<Complex64> {
    let mut out = vec![ZERO; p.len() + 1];
    for (k, &c) in p.iter().enumerate() {
        out[k] += c * l[0];
        out[k + 1] += c * l[1];
    }
    out
}

/// Degree-`n` covariance kernel `(1 + z·w̄)^n`.
///
/// Computed as `exp(n·Log(1+zw̄))`; the integer power makes the branch of the
/// logarithm irrelevant.
pub fn covariance_kernel(z: Complex64, w: Complex64, n: usize) -> Complex64 {
    let base = Complex64::new(1.0, 0.0) + z * w.conj();
    if n == 0 {
        return Complex64::new(1.0, 0.0);
    }
    if base == ZERO {
        return ZERO;
    }
    (base.ln() * n as f64).exp()
}

/// `ln |1 + z·w̄|^n`, finite for all finite inputs except `1 + zw̄ = 0`.
pub fn log_kernel_modulus(z: Complex64, w: Complex64, n: usize) -> f64 {
    n as f64 * (Complex64::new(1.0, 0.0) + z * w.conj()).norm().ln()
}

/// Gaussian entire function `g(z) = Σ a_j z^j/√(j!)` truncated at order `M`.
#[derive(Debug, Clone)]
pub struct GefTruncation {
    raw: Vec<Complex64>,
    half_log_fact: Vec<f64>,
    radius: f64,
    tail_tol: f64,
}

impl GefTruncation {
    /// Smallest `M` with `Σ_{j>M} R^{2j}/j! < tol`.
    pub fn min_order(radius: f64, tol: f64) -> Result<usize, PolyError> {
        let l = 2.0 * radius.max(f64::MIN_POSITIVE).ln();
        let mut ln_fact = 0.0;
        let mut terms = Vec::new();
        // log of R^{2j}/j! for j = 0, 1, ...; stop once decreasing and negligible
        let mut j = 0usize;
        loop {
            if j > 0 {
                ln_fact += (j as f64).ln();
            }
            let lt = j as f64 * l - ln_fact;
            terms.push(lt);
            if j as f64 > radius * radius + 1.0 && lt < tol.ln() - 40.0 {
                break;
            }
            j += 1;
            if j > MAX_GEF_ORDER + 10 {
                return Err(PolyError::GefOrderTooLarge { radius, tol, order: j });
            }
        }
        // tail sums from the end
        let mut tail = 0.0f64;
        let mut order = terms.len() - 1;
        for m in (0..terms.len()).rev() {
            // tail currently = Σ_{j>m} terms
            if tail >= tol {
                break;
            }
            order = m;
            tail += terms[m].exp();
        }
        if order > MAX_GEF_ORDER {
            return Err(PolyError::GefOrderTooLarge { radius, tol, order });
        }
        Ok(order)
    }

    /// Samples a truncation that is accurate to `tail_tol` in variance on
    /// `|z| ≤ radius`; `order` is raised if it is too small.
    pub fn sample(order: usize, radius: f64, tail_tol: f64, stream: &ComplexGaussianStream) -> Result<Self, PolyError> {
        let m = order.max(Self::min_order(radius, tail_tol)?);
        let mut rng = stream.rng();
        let raw: Vec<Complex64> = (0..=m).map(|_| complex_gaussian(&mut rng)).collect();
        let half_log_fact = log_factorials(m).into_iter().map(|x| 0.5 * x).collect();
        Ok(Self {
            raw,
            half_log_fact,
            radius,
            tail_tol,
        })
    }

    pub fn order(&self) -> usize {
        self.raw.len() - 1
    }

    pub fn raw_coeffs(&self) -> &[Complex64] {
        &self.raw
    }

    pub fn radius(&self) -> f64 {
        self.radius
    }

    pub fn tail_tolerance(&self) -> f64 {
        self.tail_tol
    }

    /// `(ĝ(z), Dĝ(z))` with `ĝ = g e^{−|z|²/2}` and `Dĝ = g′ e^{−|z|²/2}`.
    pub fn eval_normalized(&self, z: Complex64) -> (Complex64, Complex64) {
        let r = z.norm();
        if r < TINY_RADIUS {
            return (self.raw[0], self.raw.get(1).copied().unwrap_or(ZERO));
        }
        let lnr = r.ln();
        let u = z / r;
        let half_r2 = 0.5 * r * r;
        let mut val = ZERO;
        let mut der = ZERO;
        let mut ph = Complex64::new(1.0, 0.0);
        for (j, a) in self.raw.iter().enumerate() {
            let w = (j as f64 * lnr - self.half_log_fact[j] - half_r2).exp();
            let t = a * w * ph;
            val += t;
            der += t * j as f64;
            ph *= u;
        }
        (val, der / z)
    }

    /// g(z) itself.
    pub fn eval(&self, z: Complex64) -> Complex64 {
        let (v, _) = self.eval_normalized(z);
        v * (0.5 * z.norm_sqr()).exp()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::Purpose;
    use rand::Rng;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[test]
    fn degree_zero_is_constant() {
        let p = EllipticPolynomial::sample(0, &ComplexGaussianStream::new(1, 2));
        assert_eq!(p.degree(), 0);
        assert_eq!(p.weighted_coeffs()[0], p.raw_coeffs()[0]);
        let v = p.eval_normalized(c(3.0, -1.0)).unwrap();
        assert_eq!(v, p.raw_coeffs()[0]);
        assert_eq!(p.eval_dnormalized(c(0.5, 0.5)).unwrap(), ZERO);
    }

    #[test]
    fn degree_two_weights() {
        let p = EllipticPolynomial::from_raw(vec![c(1.0, 0.0); 3]).unwrap();
        let w: Vec<f64> = p.weighted_coeffs().iter().map(|z| z.re).collect();
        assert!((w[0] - 1.0).abs() < 1e-15);
        assert!((w[1] - 2f64.sqrt()).abs() < 1e-15);
        assert!((w[2] - 1.0).abs() < 1e-15);
    }

    #[test]
    fn hand_evaluations() {
        let p = EllipticPolynomial::from_raw(vec![c(1.0, 0.0), c(1.0, 0.0)]).unwrap();
        assert!((p.eval_normalized(c(1.0, 0.0)).unwrap() - c(2f64.sqrt(), 0.0)).norm() < 1e-15);
        let q = EllipticPolynomial::from_raw(vec![ZERO, c(1.0, 0.0)]).unwrap();
        assert!((q.eval_dnormalized(ZERO).unwrap() - c(1.0, 0.0)).norm() < 1e-15);
        let s = EllipticPolynomial::sample(7, &ComplexGaussianStream::new(3, 3));
        assert_eq!(s.eval_normalized(ZERO).unwrap(), s.raw_coeffs()[0]);
    }

    #[test]
    fn leading_raw_equals_leading_weighted() {
        let p = EllipticPolynomial::sample(40, &ComplexGaussianStream::new(9, 0));
        assert_eq!(p.leading(), p.weighted_coeffs()[40]);
    }

    #[test]
    fn matches_horner_on_moderate_inputs() {
        let p = EllipticPolynomial::sample(30, &ComplexGaussianStream::new(5, 1));
        for &z in &[c(0.3, 0.1), c(-1.2, 0.7), c(2.0, -1.5), c(0.01, 0.0)] {
            let h = (1.0 + z.norm_sqr()).powf(30.0 / 2.0);
            let direct = p.eval_unnormalized(z) / h;
            let ours = p.eval_normalized(z).unwrap();
            assert!((direct - ours).norm() < 1e-12 * (1.0 + direct.norm()), "z={z}");
            let dd = p.eval_derivative_unnormalized(z) / (30f64.sqrt() * (1.0 + z.norm_sqr()).powf(14.0));
            let ours_d = p.eval_dnormalized(z).unwrap();
            assert!((dd - ours_d).norm() < 1e-11 * (1.0 + dd.norm()), "z={z}");
        }
    }

    #[test]
    fn no_overflow_at_large_degree_and_radius() {
        let p = EllipticPolynomial::sample(10_000, &ComplexGaussianStream::new(1, 1));
        for &z in &[c(1e3, 0.0), c(0.0, -1e3), c(1e-3, 1e-3), c(0.7, 0.7), c(1e150, 1e150)] {
            let e = p.eval(z).unwrap();
            assert!(e.value.norm() < 1e3);
        }
    }

    #[test]
    fn small_radius_derivative_is_continuous() {
        let p = EllipticPolynomial::sample(50, &ComplexGaussianStream::new(2, 2));
        let at0 = p.eval_dnormalized(ZERO).unwrap();
        for &r in &[1e-280, 1e-100, 1e-30, 1e-12] {
            let d = p.eval_dnormalized(c(r, r)).unwrap();
            assert!((d - at0).norm() < 1e-9, "r={r}: {d} vs {at0}");
        }
    }

    #[test]
    fn non_finite_point_is_rejected() {
        let p = EllipticPolynomial::sample(3, &ComplexGaussianStream::new(2, 2));
        assert!(matches!(p.eval(c(f64::NAN, 0.0)), Err(PolyError::NonFinitePoint(_))));
    }

    #[test]
    fn kernel_values() {
        let w = c(0.3, -2.0);
        assert_eq!(covariance_kernel(ZERO, w, 17), c(1.0, 0.0));
        assert!((covariance_kernel(c(1.0, 0.0), c(1.0, 0.0), 2) - c(4.0, 0.0)).norm() < 1e-14);
        // antipodal pair
        let z = c(0.5, 0.5);
        let anti = -z / z.norm_sqr();
        assert_eq!(covariance_kernel(z, anti, 5), ZERO);
    }

    #[test]
    fn kernel_modulus_relative_accuracy() {
        let z = c(0.8, 0.1);
        let w = c(-0.2, 0.9);
        let n = 300;
        let base = c(1.0, 0.0) + z * w.conj();
        let mut prod = c(1.0, 0.0);
        for _ in 0..n {
            prod *= base;
        }
        let k = covariance_kernel(z, w, n);
        assert!((k.norm() / prod.norm() - 1.0).abs() < 1e-12);
        assert!((k - prod).norm() < 1e-11 * prod.norm());
    }

    #[test]
    fn kernel_tends_to_exponential() {
        let z = c(0.7, -0.4);
        let w = c(-1.1, 0.3);
        let target = (z * w.conj()).exp();
        let mut prev = f64::INFINITY;
        for &n in &[10usize, 100, 1000, 10_000] {
            let k = covariance_kernel(z / (n as f64).sqrt(), w / (n as f64).sqrt(), n);
            let err = (k - target).norm();
            assert!(err < prev);
            prev = err;
        }
        assert!(prev < 1e-3);
    }

    #[test]
    fn transformed_relation() {
        let s = ComplexGaussianStream::new(4, 4);
        let p = EllipticPolynomial::sample(9, &s);
        let t = Isometry::random(&s);
        let q = p.transformed(&t);
        let mut rng = s.rng_for(Purpose::Auxiliary);
        for _ in 0..20 {
            let z = c(rng.random_range(-2.0..2.0), rng.random_range(-2.0..2.0));
            let tz = t.apply_finite(z).unwrap();
            let lhs = q.eval_normalized(z).unwrap().norm();
            let rhs = p.eval_normalized(tz).unwrap().norm();
            assert!((lhs - rhs).abs() < 1e-11);
        }
    }

    #[test]
    fn from_roots_expands_product() {
        let p = EllipticPolynomial::from_roots(c(1.0, 0.0), &[c(1.0, 0.0), c(-1.0, 0.0)]).unwrap();
        let w = p.weighted_coeffs();
        assert_eq!(w, &[c(-1.0, 0.0), ZERO, c(1.0, 0.0)]);
    }

    #[test]
    fn gef_min_order_tail() {
        let m = GefTruncation::min_order(3.0, 1e-12).unwrap();
        // independent tail sum
        let tail = |m: usize| -> f64 {
            let mut s = 0.0;
            let mut lt = 0.0f64;
            for j in 1..400usize {
                lt += 9f64.ln() - (j as f64).ln();
                if j > m {
                    s += lt.exp();
                }
            }
            s
        };
        assert!(tail(m) < 1e-12);
        assert!(tail(m - 1) >= 1e-12);
        assert!(matches!(
            GefTruncation::min_order(400.0, 1e-12),
            Err(PolyError::GefOrderTooLarge { .. })
        ));
    }

    #[test]
    fn gef_normalized_matches_direct() {
        let g = GefTruncation::sample(10, 2.0, 1e-14, &ComplexGaussianStream::new(8, 1)).unwrap();
        let z = c(0.9, -0.6);
        let mut direct = ZERO;
        let mut fact = 1.0f64;
        let mut zp = c(1.0, 0.0);
        for (j, a) in g.raw_coeffs().iter().enumerate() {
            if j > 0 {
                fact *= j as f64;
                zp *= z;
            }
            direct += a * zp / fact.sqrt();
        }
        assert!((g.eval(z) - direct).norm() < 1e-12 * direct.norm().max(1.0));
        assert_eq!(g.eval_normalized(ZERO).0, g.raw_coeffs()[0]);
    }
}
