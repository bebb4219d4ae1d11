//! Logarithmic energy of spherical configurations and its exact split for
//! zero sets of elliptic polynomials.
//!
//! For the roots `ζ_1..ζ_n` of `f`,
//!
//! ```text
//! E_n = (½ − ln2)n² − ½ n ln n + I_n − S_n + n ln2
//! I_n = n( ln|a_n| + Σ ½ln(1+|ζ_j|²) − n/2 )
//! S_n = Σ ln|Df̂(ζ_j)|
//! ```
//!
//! and [`decomposition_check`] reports how far a computed root set is from
//! satisfying it.

use std::f64::consts::{LN_2, PI};

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::polymodel::{EllipticPolynomial, PolyError};
use crate::quadrature::{integrate, QuadError, Tolerance};
use crate::roots::RootSet;
use crate::special::NeumaierSum;
use crate::sphere::{ConfigSource, SphericalConfiguration};

/// Points closer than this are treated as coincident.
pub const COINCIDENCE_THRESHOLD: f64 = 1e-14;
/// Bounds on the linear coefficient of the minimal energy.
pub const C_MIN_LOWER: f64 = -0.0569;
pub const C_MIN_UPPER: f64 = -0.055_605_304_943_393_1;

const ROW_BLOCK: usize = 32;

#[derive(Debug, Error)]
pub enum EnergyError {
    #[error("points {i} and {j} coincide (distance {distance:e})")]
    CoincidentPoints { i: usize, j: usize, distance: f64 },
    #[error("leading coefficient is zero")]
    ZeroLeading,
    #[error("normalized derivative vanishes at root {index} ({root})")]
    ZeroDerivative { index: usize, root: Complex64 },
    #[error("root set has {roots} roots for a degree {degree} polynomial")]
    DegreeMismatch { degree: usize, roots: usize },
    #[error(transparent)]
    Poly(#[from] PolyError),
    #[error(transparent)]
    Quadrature(#[from] QuadError),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EnergyBreakdown {
    pub n: usize,
    pub e_n: f64,
    pub i_n: f64,
    pub s_n: f64,
    pub identity_residual: f64,
}

/// `−Σ_{i≠j} ln d(x_i, x_j)` over ordered pairs.
pub fn pairwise_energy(cfg: &SphericalConfiguration) -> Result<f64, EnergyError> {
    pairwise_energy_cartesian(&cfg.cartesian())
}

/// [`pairwise_energy`] on unit vectors.
///
/// Rows are summed in fixed blocks and the block sums combined in order, so
/// the result does not depend on the number of worker threads.
pub fn pairwise_energy_cartesian(x: &[[f64; 3]]) -> Result<f64, EnergyError> {
    let n = x.len();
    let blocks: Vec<usize> = (0..n).step_by(ROW_BLOCK).collect();
    let partials: Vec<Result<NeumaierSum, EnergyError>> = blocks
        .par_iter()
        .map(|&start| {
            let mut acc = NeumaierSum::default();
            for i in start..(start + ROW_BLOCK).min(n) {
                let xi = x[i];
                for (j, xj) in x.iter().enumerate().skip(i + 1) {
                    let d2 = sq_dist(&xi, xj);
                    if d2 < COINCIDENCE_THRESHOLD * COINCIDENCE_THRESHOLD {
                        return Err(EnergyError::CoincidentPoints {
                            i,
                            j,
                            distance: d2.sqrt(),
                        });
                    }
                    // two ordered pairs: −2 ln d = −ln d²
                    acc.add(-d2.ln());
                }
            }
            Ok(acc)
        })
        .collect();
    let mut total = NeumaierSum::default();
    for p in partials {
        total.merge(&p?);
    }
    Ok(total.value())
}

#[inline]
pub(crate) fn sq_dist(a: &[f64; 3], b: &[f64; 3]) -> f64 {
    let d = [a[0] - b[0], a[1] - b[1], a[2] - b[2]];
    d[0] * d[0] + d[1] * d[1] + d[2] * d[2]
}

/// Mean energy of the zeros of a degree-`n` elliptic polynomial.
pub fn expected_energy(n: usize) -> f64 {
    let n = n as f64;
    let a = 0.5 - LN_2;
    if n == 0.0 {
        return 0.0;
    }
    a * n * n - 0.5 * n * n.ln() - a * n
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ReferenceCurves {
    pub min_lower: f64,
    pub min_upper: f64,
    pub uniform_mean: f64,
    pub elliptic_mean: f64,
}

/// Minimal-energy band and the means for uniform and elliptic points.
pub fn reference_curves(n: usize) -> ReferenceCurves {
    let nf = n as f64;
    let lead = (0.5 - LN_2) * nf * nf - 0.5 * nf * nf.ln();
    ReferenceCurves {
        min_lower: lead + C_MIN_LOWER * nf,
        min_upper: lead + C_MIN_UPPER * nf,
        uniform_mean: (0.5 - LN_2) * nf * nf - (0.5 - LN_2) * nf,
        elliptic_mean: expected_energy(n),
    }
}

/// Variance of the energy of `n` independent uniform points.
///
/// Each ordered-pair term is `−ln 2 − ½ ln U` with `U` uniform, and terms
/// sharing a point are independent by rotation invariance.
pub fn uniform_energy_variance(n: usize) -> f64 {
    let n = n as f64;
    n * (n - 1.0) / 2.0
}

fn check_degree(p: &EllipticPolynomial, rs: &RootSet) -> Result<(), EnergyError> {
    if rs.len() != p.degree() {
        return Err(EnergyError::DegreeMismatch {
            degree: p.degree(),
            roots: rs.len(),
        });
    }
    Ok(())
}

fn half_log1p_sq(z: Complex64) -> f64 {
    let r = z.norm();
    if r <= 1.0 {
        0.5 * (r * r).ln_1p()
    } else {
        let v = 1.0 / r;
        r.ln() + 0.5 * (v * v).ln_1p()
    }
}

/// `n·∫ ln|f̂| dμ`, evaluated exactly from the roots.
pub fn i_n_from_roots(p: &EllipticPolynomial, rs: &RootSet) -> Result<f64, EnergyError> {
    check_degree(p, rs)?;
    let lead = p.leading().norm();
    if lead == 0.0 {
        return Err(EnergyError::ZeroLeading);
    }
    let n = p.degree() as f64;
    let mut acc = NeumaierSum::default();
    acc.add(lead.ln());
    for &z in rs.roots() {
        acc.add(half_log1p_sq(z));
    }
    acc.add(-n / 2.0);
    Ok(n * acc.value())
}

/// `Σ ln|Df̂(ζ_j)|`.
pub fn s_n_from_roots(p: &EllipticPolynomial, rs: &RootSet) -> Result<f64, EnergyError> {
    check_degree(p, rs)?;
    let mut acc = NeumaierSum::default();
    for (index, &z) in rs.roots().iter().enumerate() {
        let d = p.eval_dnormalized(z)?.norm();
        if d == 0.0 {
            return Err(EnergyError::ZeroDerivative { index, root: z });
        }
        acc.add(d.ln());
    }
    Ok(acc.value())
}

/// Energy of the roots together with both sides of the exact split.
pub fn decomposition_check(p: &EllipticPolynomial, rs: &RootSet) -> Result<EnergyBreakdown, EnergyError> {
    let n = p.degree();
    let cfg = SphericalConfiguration::from_planar(rs.roots().iter().copied(), ConfigSource::Roots);
    let e_n = pairwise_energy(&cfg)?;
    let i_n = i_n_from_roots(p, rs)?;
    let s_n = s_n_from_roots(p, rs)?;
    let nf = n as f64;
    let rhs = if n == 0 {
        0.0
    } else {
        (0.5 - LN_2) * nf * nf - 0.5 * nf * nf.ln() + i_n - s_n + LN_2 * nf
    };
    Ok(EnergyBreakdown {
        n,
        e_n,
        i_n,
        s_n,
        identity_residual: e_n - rhs,
    })
}

/// `n·∫ ln|f̂| dμ` by nested adaptive quadrature over the sphere.
///
/// Coordinates are height `u ∈ (−1,1)` and longitude `φ`, with
/// `z = √((1+u)/(1−u)) e^{iφ}` and `dμ = du dφ/(4π)`. The heights and
/// longitudes of `roots` are passed as breakpoints.
pub fn i_n_by_quadrature(p: &EllipticPolynomial, roots: &[Complex64], tol: Tolerance) -> Result<f64, EnergyError> {
    let n = p.degree() as f64;
    let heights: Vec<f64> = roots
        .iter()
        .map(|z| {
            let r2 = z.norm_sqr();
            (r2 - 1.0) / (r2 + 1.0)
        })
        .collect();
    let longitudes: Vec<f64> = roots.iter().map(|z| z.arg().rem_euclid(2.0 * PI)).collect();
    let inner_tol = Tolerance {
        abs: tol.abs * 0.1,
        rel: tol.rel * 0.1,
        max_intervals: tol.max_intervals,
    };
    let mut failure: Option<EnergyError> = None;
    let outer = integrate(
        |u: f64| {
            if failure.is_some() {
                return 0.0;
            }
            let r = ((1.0 + u) / (1.0 - u)).sqrt();
            let inner = integrate(
                |phi: f64| match p.eval_normalized(Complex64::from_polar(r, phi)) {
                    Ok(v) => v.norm().ln(),
                    Err(_) => f64::NAN,
                },
                0.0,
                2.0 * PI,
                &longitudes,
                inner_tol,
            );
            match inner {
                Ok(q) => q.value,
                Err(e) => {
                    failure = Some(e.into());
                    0.0
                }
            }
        },
        -1.0,
        1.0,
        &heights,
        tol,
    );
    if let Some(e) = failure {
        return Err(e);
    }
    Ok(n * outer?.value / (4.0 * PI))
}
