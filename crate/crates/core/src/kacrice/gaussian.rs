//! Joint covariances of `f̂`, `Df̂` at several points and conditioning on
//! zeros by Schur complement.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use rand::Rng;

use super::divided::dd_matrix;
use super::{DensityQuery, KacRiceError};
use crate::rng::complex_gaussian;
use crate::sphere::planar_distance;

const ZERO: Complex64 = Complex64::new(0.0, 0.0);
const ONE: Complex64 = Complex64::new(1.0, 0.0);

/// Which Gaussian field the covariances describe.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum KernelModel {
    /// Normalized elliptic polynomial of the given degree.
    Elliptic(usize),
    /// Normalized Gaussian entire function.
    Gef,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Variable {
    Value(Complex64),
    Derivative(Complex64),
}

/// `q^k` with `q⁰ = 1` also at `q = 0`.
fn cpow(q: Complex64, k: usize) -> Complex64 {
    if k == 0 {
        ONE
    } else if q == ZERO {
        ZERO
    } else {
        (q.ln() * k as f64).exp()
    }
}

impl KernelModel {
    /// `E[X · conj(Y)]`.
    pub fn covariance(&self, x: Variable, y: Variable) -> Complex64 {
        use Variable::*;
        let (a, da) = match x {
            Value(a) => (a, false),
            Derivative(a) => (a, true),
        };
        let (b, db) = match y {
            Value(b) => (b, false),
            Derivative(b) => (b, true),
        };
        let ab = a * b.conj();
        match *self {
            KernelModel::Elliptic(n) => {
                let ha = 1.0 + a.norm_sqr();
                let hb = 1.0 + b.norm_sqr();
                let q = (ONE + ab) / (ha * hb).sqrt();
                let sn = (n as f64).sqrt();
                match (da, db) {
                    (false, false) => cpow(q, n),
                    (true, false) if n == 0 => ZERO,
                    (false, true) if n == 0 => ZERO,
                    (true, false) => b.conj() * sn * cpow(q, n - 1) * (ha / hb).sqrt(),
                    (false, true) => a * sn * cpow(q, n - 1) * (hb / ha).sqrt(),
                    (true, true) => match n {
                        0 => ZERO,
                        1 => Complex64::new((ha * hb).sqrt(), 0.0),
                        _ => cpow(q, n - 2) * (ONE + ab * n as f64),
                    },
                }
            }
            KernelModel::Gef => {
                let k = (ab - 0.5 * a.norm_sqr() - 0.5 * b.norm_sqr()).exp();
                match (da, db) {
                    (false, false) => k,
                    (true, false) => k * b.conj(),
                    (false, true) => k * a,
                    (true, true) => k * (ONE + ab),
                }
            }
        }
    }

    pub fn covariance_matrix(&self, vars: &[Variable]) -> DMatrix<Complex64> {
        let m = vars.len();
        let mut c = DMatrix::from_fn(m, m, |i, j| self.covariance(vars[i], vars[j]));
        hermitize(&mut c);
        c
    }
}

fn hermitize(c: &mut DMatrix<Complex64>) {
    let m = c.nrows();
    for i in 0..m {
        c[(i, i)] = Complex64::new(c[(i, i)].re, 0.0);
        for j in i + 1..m {
            let v = (c[(i, j)] + c[(j, i)].conj()) * 0.5;
            c[(i, j)] = v;
            c[(j, i)] = v.conj();
        }
    }
}

fn hermitian_eigenvalues(c: &DMatrix<Complex64>) -> Vec<f64> {
    if c.nrows() == 0 {
        return Vec::new();
    }
    c.clone().symmetric_eigenvalues().iter().copied().collect()
}

/// A Gaussian vector split into a conditioning block (the first `k`
/// variables, all set to zero) and the remaining variables.
#[derive(Debug, Clone)]
pub struct ConditionedGaussian {
    pub variables: Vec<Variable>,
    pub conditioning: usize,
    pub full_cov: DMatrix<Complex64>,
    pub conditioned_cov: DMatrix<Complex64>,
    /// `log det` of the conditioning block.
    pub log_det_condition: f64,
    /// Condition number of the conditioning block.
    pub condition_number: f64,
}

impl ConditionedGaussian {
    pub fn new(model: KernelModel, variables: Vec<Variable>, conditioning: usize) -> Result<Self, KacRiceError> {
        let full = model.covariance_matrix(&variables);
        let k = conditioning;
        let total = variables.len();
        let s11 = full.view((0, 0), (k, k)).into_owned();
        let s12 = full.view((0, k), (k, total - k)).into_owned();
        let s22 = full.view((k, k), (total - k, total - k)).into_owned();
        let (log_det, cond, conditioned) = if k == 0 {
            (0.0, 1.0, s22)
        } else {
            let eig = hermitian_eigenvalues(&s11);
            let max = eig.iter().copied().fold(f64::MIN, f64::max);
            let min = eig.iter().copied().fold(f64::MAX, f64::min);
            let points: Vec<Complex64> = variables[..k]
                .iter()
                .map(|v| match v {
                    Variable::Value(z) | Variable::Derivative(z) => *z,
                })
                .collect();
            let singular = |min_eigenvalue: f64| {
                let (i, j) = closest_pair(&points);
                KacRiceError::Singular { min_eigenvalue, i, j }
            };
            if min <= 1e-13 * max {
                return Err(singular(min));
            }
            let chol = nalgebra::Cholesky::new(s11).ok_or_else(|| singular(min))?;
            let l = chol.l();
            let log_det = 2.0 * (0..k).map(|i| l[(i, i)].re.ln()).sum::<f64>();
            let a = l.solve_lower_triangular(&s12).ok_or_else(|| singular(min))?;
            let mut sc = s22 - a.adjoint() * a;
            hermitize(&mut sc);
            (log_det, max / min, sc)
        };
        Ok(Self {
            variables,
            conditioning: k,
            full_cov: full,
            conditioned_cov: conditioned,
            log_det_condition: log_det,
            condition_number: cond,
        })
    }

    pub fn det_condition(&self) -> f64 {
        self.log_det_condition.exp()
    }

    /// Square root factor `R` with `R R* = conditioned_cov`, from the
    /// Hermitian eigendecomposition with negative rounding clamped to zero.
    pub fn sampling_factor(&self) -> DMatrix<Complex64> {
        let m = self.conditioned_cov.nrows();
        if m == 0 {
            return DMatrix::zeros(0, 0);
        }
        let eig = self.conditioned_cov.clone().symmetric_eigen();
        let mut r = eig.eigenvectors.clone();
        for j in 0..m {
            let s = eig.eigenvalues[j].max(0.0).sqrt();
            for i in 0..m {
                r[(i, j)] *= s;
            }
        }
        r
    }

    /// One draw of the non-conditioning variables given the conditioning
    /// block is zero.
    pub fn sample_with<R: Rng + ?Sized>(&self, factor: &DMatrix<Complex64>, rng: &mut R) -> DVector<Complex64> {
        let m = factor.ncols();
        let xi = DVector::from_fn(m, |_, _| complex_gaussian(rng));
        factor * xi
    }

    /// Smallest eigenvalue of the conditioned covariance relative to its trace.
    pub fn psd_margin(&self) -> f64 {
        let eig = hermitian_eigenvalues(&self.conditioned_cov);
        let trace: f64 = (0..self.conditioned_cov.nrows())
            .map(|i| self.conditioned_cov[(i, i)].re)
            .sum();
        eig.iter().copied().fold(f64::INFINITY, f64::min) / trace.max(f64::MIN_POSITIVE)
    }
}

fn closest_pair(points: &[Complex64]) -> (usize, usize) {
    let mut best = (0, 0, f64::INFINITY);
    for i in 0..points.len() {
        for j in i + 1..points.len() {
            let d = planar_distance(points[i], points[j]);
            if d < best.2 {
                best = (i, j, d);
            }
        }
    }
    (best.0, best.1)
}

/// Law of `(Df̂(z_j), f̂(w_t))` given `f̂(z_1) = … = f̂(z_m) = 0`.
pub fn conditioned_covariance(q: &DensityQuery, model: KernelModel) -> Result<ConditionedGaussian, KacRiceError> {
    let mut vars: Vec<Variable> = q.z.iter().map(|&z| Variable::Value(z)).collect();
    vars.extend(q.z.iter().map(|&z| Variable::Derivative(z)));
    vars.extend(q.w.iter().map(|&w| Variable::Value(w)));
    ConditionedGaussian::new(model, vars, q.m())
}

/// `h_d(z_1..z_j)` for `j = 1..=m`, `d = 0..=max_d`.
fn complete_homogeneous(z: &[Complex64], max_d: usize) -> Vec<Vec<Complex64>> {
    let mut out = Vec::with_capacity(z.len());
    let mut prev = vec![ONE; 1];
    prev.resize(max_d + 1, ZERO);
    for (j, &zj) in z.iter().enumerate() {
        let mut cur = vec![ZERO; max_d + 1];
        for d in 0..=max_d {
            let below = if j == 0 {
                if d == 0 {
                    ONE
                } else {
                    ZERO
                }
            } else {
                prev[d]
            };
            cur[d] = below + if d > 0 { zj * cur[d - 1] } else { ZERO };
        }
        out.push(cur.clone());
        prev = cur;
    }
    out
}

/// `Cov(g[z_1..z_j], g[w_1..w_k])` for the unnormalized Gaussian entire
/// function, from `(ζ^p)[z_1..z_j] = h_{p−j+1}(z_1..z_j)`.
pub fn gef_dd_covariance(z: &[Complex64], w: &[Complex64]) -> DMatrix<Complex64> {
    const TERMS: usize = 160;
    let hz = complete_homogeneous(z, TERMS);
    let hw = complete_homogeneous(w, TERMS);
    let log_fact = crate::special::log_factorials(TERMS);
    DMatrix::from_fn(z.len(), w.len(), |j, k| {
        let mut acc = ZERO;
        for (p, lf) in log_fact.iter().enumerate() {
            if p < j || p < k {
                continue;
            }
            acc += hz[j][p - j] * hw[k][p - k].conj() * (-lf).exp();
        }
        acc
    })
}

/// Same covariance as [`gef_dd_covariance`] via `M⁻¹ K M⁻*` with
/// `K = (e^{z_i z̄_j})`.
pub fn gef_dd_covariance_by_matrix(z: &[Complex64]) -> Option<DMatrix<Complex64>> {
    let m = dd_matrix(z);
    let k = DMatrix::from_fn(z.len(), z.len(), |i, j| (z[i] * z[j].conj()).exp());
    let minv = m.try_inverse()?;
    Some(&minv * k * minv.adjoint())
}

/// Smallest eigenvalue of `Cov(g[z_1], …, g[z_1..z_m])` over `sets` random
/// point sets uniform in the disk of the given radius.
pub fn gef_dd_min_eigenvalue<R: Rng + ?Sized>(m: usize, sets: usize, radius: f64, rng: &mut R) -> f64 {
    let mut worst = f64::INFINITY;
    for _ in 0..sets {
        let pts: Vec<Complex64> = (0..m)
            .map(|_| {
                let r = radius * rng.random::<f64>().sqrt();
                Complex64::from_polar(r, 2.0 * std::f64::consts::PI * rng.random::<f64>())
            })
            .collect();
        let mut c = gef_dd_covariance(&pts, &pts);
        hermitize(&mut c);
        let min = hermitian_eigenvalues(&c).into_iter().fold(f64::INFINITY, f64::min);
        worst = worst.min(min);
    }
    worst
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::ComplexGaussianStream;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    fn max_mod(m: &DMatrix<Complex64>) -> f64 {
        m.iter().map(|v| v.norm()).fold(0.0, f64::max)
    }

    #[test]
    fn single_point_elliptic() {
        let n = 7;
        let z = c(0.4, -0.3);
        let q = DensityQuery::new(vec![], vec![z], vec![0]).unwrap();
        let g = conditioned_covariance(&q, KernelModel::Elliptic(n)).unwrap();
        let full = &g.full_cov;
        let sn = (n as f64).sqrt();
        assert!((full[(0, 0)] - ONE).norm() < 1e-14);
        assert!((full[(0, 1)] - z * sn).norm() < 1e-14);
        assert!((full[(1, 0)] - z.conj() * sn).norm() < 1e-14);
        assert!((full[(1, 1)].re - (1.0 + n as f64 * z.norm_sqr())).abs() < 1e-13);
        assert!((g.conditioned_cov[(0, 0)] - ONE).norm() < 1e-13);
    }

    #[test]
    fn gef_origin_is_independent() {
        let q = DensityQuery::new(vec![], vec![ZERO], vec![0]).unwrap();
        let g = conditioned_covariance(&q, KernelModel::Gef).unwrap();
        assert!((g.full_cov[(0, 1)]).norm() < 1e-15);
        assert!((g.full_cov[(1, 1)] - ONE).norm() < 1e-15);
    }

    #[test]
    fn gef_two_point_conditioning_matches_closed_forms() {
        let z = c(0.6, 0.8);
        let s: f64 = z.norm_sqr();
        let q = DensityQuery::new(vec![], vec![ZERO, z], vec![0, 0]).unwrap();
        let g = conditioned_covariance(&q, KernelModel::Gef).unwrap();
        let em = (-s).exp();
        let sigma2 = (1.0 - (1.0 + s) * em) / (1.0 - em);
        let off = (-s / 2.0).exp() * (1.0 - s - em) / (1.0 - em);
        let theta = (-s / 2.0).exp() * (1.0 - s - em) / (1.0 - (1.0 + s) * em);
        let cc = &g.conditioned_cov;
        assert!((cc[(0, 0)].re - sigma2).abs() < 1e-14);
        assert!((cc[(1, 1)].re - sigma2).abs() < 1e-14);
        assert!((cc[(0, 1)].norm() - off.abs()).abs() < 1e-14);
        assert!((cc[(0, 1)].norm() / sigma2 - theta.abs()).abs() < 1e-13);
        assert!((crate::constants::theta(s) - theta).abs() < 1e-14);
        assert!((crate::constants::sigma2(s) - sigma2).abs() < 1e-14);
    }

    #[test]
    fn elliptic_kernel_tends_to_gef() {
        let (a, b) = (c(0.3, 0.2), c(-0.5, 0.4));
        let gef = KernelModel::Gef;
        let mut last = f64::INFINITY;
        for &n in &[10usize, 100, 1000, 10000] {
            let s = 1.0 / (n as f64).sqrt();
            let e = KernelModel::Elliptic(n);
            let vars = [
                Variable::Value(a),
                Variable::Derivative(a),
                Variable::Value(b),
                Variable::Derivative(b),
            ];
            let scaled: Vec<Variable> = vars
                .iter()
                .map(|v| match v {
                    Variable::Value(z) => Variable::Value(z * s),
                    Variable::Derivative(z) => Variable::Derivative(z * s),
                })
                .collect();
            let m1 = e.covariance_matrix(&scaled);
            let m2 = gef.covariance_matrix(&vars);
            let diff = max_mod(&(m1 - m2));
            assert!(diff < last);
            last = diff;
        }
        assert!(last < 1e-3);
    }

    #[test]
    fn conditioned_is_psd_and_singular_is_reported() {
        let q = DensityQuery::new(vec![c(0.1, 0.9)], vec![c(0.2, 0.0), c(-0.3, 0.5)], vec![0, 1]).unwrap();
        let g = conditioned_covariance(&q, KernelModel::Elliptic(20)).unwrap();
        assert!(g.psd_margin() >= -1e-10);
        let q = DensityQuery::new(vec![], vec![c(0.2, 0.0), c(0.2 + 1e-9, 0.0)], vec![0, 0]).unwrap();
        match conditioned_covariance(&q, KernelModel::Elliptic(20)) {
            Err(KacRiceError::Singular { i: 0, j: 1, .. }) => {}
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn gef_dd_covariance_two_routes() {
        let mut rng = ComplexGaussianStream::new(4, 4).rng();
        for m in 1..=4 {
            for _ in 0..20 {
                let pts: Vec<Complex64> = (0..m)
                    .map(|_| c(rng.random::<f64>() * 2.0 - 1.0, rng.random::<f64>() * 2.0 - 1.0))
                    .collect();
                let a = gef_dd_covariance(&pts, &pts);
                let b = gef_dd_covariance_by_matrix(&pts).unwrap();
                let scale = max_mod(&a);
                assert!(max_mod(&(a - b)) < 1e-8 * scale, "m = {m}");
            }
        }
    }
}
