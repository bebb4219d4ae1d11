//! Divided differences with confluent points, the Newton-basis matrix and a
//! Cauchy-integral oracle.

use std::f64::consts::PI;

use nalgebra::DMatrix;
use num_complex::Complex64;

use super::KacRiceError;

const ZERO: Complex64 = Complex64::new(0.0, 0.0);
const ONE: Complex64 = Complex64::new(1.0, 0.0);

/// An entire function with access to Taylor coefficients.
pub trait Analytic {
    fn eval(&self, z: Complex64) -> Complex64;
    /// `f^{(j)}(z)/j!` for `j < k`.
    fn taylor(&self, z: Complex64, k: usize) -> Vec<Complex64>;
}

/// `Σ c_j z^j`.
#[derive(Debug, Clone, PartialEq)]
pub struct PolyFunction(pub Vec<Complex64>);

impl Analytic for PolyFunction {
    fn eval(&self, z: Complex64) -> Complex64 {
        self.0.iter().rev().fold(ZERO, |acc, c| acc * z + c)
    }

    fn taylor(&self, z: Complex64, k: usize) -> Vec<Complex64> {
        // repeated synthetic division by (x − z)
        let mut c = self.0.clone();
        let mut out = Vec::with_capacity(k);
        for _ in 0..k {
            if c.is_empty() {
                out.push(ZERO);
                continue;
            }
            let mut acc = ZERO;
            let mut quotient = vec![ZERO; c.len().saturating_sub(1)];
            for i in (0..c.len()).rev() {
                acc = acc * z + c[i];
                if i > 0 {
                    quotient[i - 1] = acc;
                }
            }
            out.push(acc);
            c = quotient;
        }
        out
    }
}

/// `c·Π(z − r_i)`, exactly zero at each `r_i`.
#[derive(Debug, Clone, PartialEq)]
pub struct ProductForm {
    pub scale: Complex64,
    pub roots: Vec<Complex64>,
}

impl Analytic for ProductForm {
    fn eval(&self, z: Complex64) -> Complex64 {
        self.roots.iter().fold(self.scale, |acc, r| acc * (z - r))
    }

    fn taylor(&self, z: Complex64, k: usize) -> Vec<Complex64> {
        // multiply out Π((z − r) + t) as a series in t, truncated to k terms
        let mut series = vec![ZERO; k];
        if k == 0 {
            return series;
        }
        series[0] = self.scale;
        for r in &self.roots {
            let a = z - r;
            for j in (0..k).rev() {
                let lower = if j > 0 { series[j - 1] } else { ZERO };
                series[j] = series[j] * a + lower;
            }
        }
        series
    }
}

/// `c·e^{a z}`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ExpFunction {
    pub scale: Complex64,
    pub rate: Complex64,
}

impl Analytic for ExpFunction {
    fn eval(&self, z: Complex64) -> Complex64 {
        self.scale * (self.rate * z).exp()
    }

    fn taylor(&self, z: Complex64, k: usize) -> Vec<Complex64> {
        let mut out = Vec::with_capacity(k);
        let mut t = self.eval(z);
        for j in 0..k {
            out.push(t);
            t = t * self.rate / (j + 1) as f64;
        }
        out
    }
}

/// Points grouped so equal values are adjacent, with the Newton table.
#[derive(Debug, Clone)]
pub struct DividedDiffContext {
    pub points: Vec<Complex64>,
    /// `table[k][i] = f[p_i, …, p_{i+k}]`.
    pub newton_table: Vec<Vec<Complex64>>,
    pub contour_center: Complex64,
    pub contour_radius: f64,
}

impl DividedDiffContext {
    pub fn new<F: Analytic + ?Sized>(f: &F, points: &[Complex64]) -> Result<Self, KacRiceError> {
        if points.is_empty() {
            return Err(KacRiceError::NoPoints);
        }
        let pts = group_equal(points);
        let m = pts.len();
        let mut table = vec![pts.iter().map(|&z| f.eval(z)).collect::<Vec<_>>()];
        // confluent entries need derivatives up to the largest multiplicity
        let mut taylor_cache: Vec<(Complex64, Vec<Complex64>)> = Vec::new();
        for k in 1..m {
            let prev = &table[k - 1];
            let mut row = Vec::with_capacity(m - k);
            for i in 0..m - k {
                let (a, b) = (pts[i], pts[i + k]);
                if a == b {
                    let coeffs = match taylor_cache.iter().find(|(z, c)| *z == a && c.len() > k) {
                        Some((_, c)) => c.clone(),
                        None => {
                            let c = f.taylor(a, m);
                            taylor_cache.push((a, c.clone()));
                            c
                        }
                    };
                    row.push(coeffs[k]);
                } else {
                    row.push((prev[i + 1] - prev[i]) / (b - a));
                }
            }
            table.push(row);
        }
        let (center, radius) = default_contour(&pts);
        Ok(Self {
            points: pts,
            newton_table: table,
            contour_center: center,
            contour_radius: radius,
        })
    }

    /// `f[p_1, …, p_m]`.
    pub fn value(&self) -> Complex64 {
        self.newton_table.last().unwrap()[0]
    }

    /// `f[p_1], f[p_1,p_2], …, f[p_1..p_m]`.
    pub fn leading_column(&self) -> Vec<Complex64> {
        self.newton_table.iter().map(|row| row[0]).collect()
    }
}

fn group_equal(points: &[Complex64]) -> Vec<Complex64> {
    let mut out: Vec<Complex64> = Vec::with_capacity(points.len());
    let mut used = vec![false; points.len()];
    for i in 0..points.len() {
        if used[i] {
            continue;
        }
        for j in i..points.len() {
            if !used[j] && points[j] == points[i] {
                used[j] = true;
                out.push(points[j]);
            }
        }
    }
    out
}

fn default_contour(points: &[Complex64]) -> (Complex64, f64) {
    let center = points.iter().sum::<Complex64>() / points.len() as f64;
    let spread = points.iter().map(|z| (z - center).norm()).fold(0.0, f64::max);
    (center, 1.5 * spread + 0.5)
}

/// `f[z_1, …, z_m]` by the Newton recurrence; repeated points use
/// `f^{(k)}(z)/k!`.
pub fn divided_difference<F: Analytic + ?Sized>(f: &F, points: &[Complex64]) -> Result<Complex64, KacRiceError> {
    Ok(DividedDiffContext::new(f, points)?.value())
}

/// `(1/2πi)∮ f(ζ)/Π(ζ − z_j) dζ` by the trapezoidal rule on a circle.
///
/// Starts at 256 nodes and doubles until two successive values agree to
/// 1e-10 relative to the larger of the value and the mean modulus of the
/// integrand, so an exactly vanishing difference also converges. The radius is enlarged if the circle passes within 1e-6
/// of a point.
pub fn contour_divided_difference<F: Analytic + ?Sized>(
    f: &F,
    points: &[Complex64],
    center: Complex64,
    radius: f64,
) -> Result<Complex64, KacRiceError> {
    if points.is_empty() {
        return Err(KacRiceError::NoPoints);
    }
    let mut radius = radius;
    while points
        .iter()
        .any(|z| ((z - center).norm() - radius).abs() < 1e-6 || (z - center).norm() > radius)
    {
        radius *= 1.25;
    }
    let trapezoid = |nodes: usize| -> (Complex64, f64) {
        let mut acc = ZERO;
        let mut size = 0.0;
        for k in 0..nodes {
            let e = Complex64::from_polar(1.0, 2.0 * PI * k as f64 / nodes as f64);
            let zeta = center + e * radius;
            let denom = points.iter().fold(ONE, |acc, z| acc * (zeta - z));
            let term = f.eval(zeta) * e * radius / denom;
            acc += term;
            size += term.norm();
        }
        (acc / nodes as f64, size / nodes as f64)
    };
    let mut nodes = 256;
    let (mut prev, _) = trapezoid(nodes);
    loop {
        nodes *= 2;
        let (cur, size) = trapezoid(nodes);
        let change = (cur - prev).norm();
        if change <= 1e-10 * cur.norm().max(size).max(1e-300) {
            return Ok(cur);
        }
        if nodes >= 1 << 16 {
            return Err(KacRiceError::ContourNotConverged { nodes, change });
        }
        prev = cur;
    }
}

/// Lower-triangular `M(z)` with `M[i][k] = Π_{j<k}(z_i − z_j)` for `k ≤ i`, so
/// that `(f(z_1), …, f(z_m))ᵀ = M(z)·(f[z_1], f[z_1,z_2], …, f[z_1..z_m])ᵀ`.
pub fn dd_matrix(points: &[Complex64]) -> DMatrix<Complex64> {
    let m = points.len();
    DMatrix::from_fn(m, m, |i, k| {
        if k > i {
            ZERO
        } else {
            (0..k).fold(ONE, |acc, j| acc * (points[i] - points[j]))
        }
    })
}
