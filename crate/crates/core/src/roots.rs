//! All roots of an elliptic polynomial.
//!
//! The solver is a Gauss–Seidel Aberth–Ehrlich iteration evaluated in the
//! normalized form, started from a Fibonacci lattice on the sphere pulled
//! back to the plane (the zeros are uniformly spread on the sphere in law).
//! A root is frozen once its correction is below `1e-14·max(1,|z|)` or its
//! value is below the rounding bound of the evaluation. If the sweep budget
//! runs out, degrees up to 500 restart from the eigenvalues of the balanced
//! companion matrix; larger degrees restart from a rotated lattice.

use nalgebra::DMatrix;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::polymodel::{EllipticPolynomial, PolyError};
use crate::rng::ComplexGaussianStream;

const ZERO: Complex64 = Complex64::new(0.0, 0.0);
const STEP_TOL: f64 = 1e-14;
const REFINE_MAX_STEPS: usize = 50;

#[derive(Debug, Error)]
pub enum RootError {
    #[error(
        "root iteration left {unconverged} of {degree} roots unconverged after {sweeps} sweeps{}",
        replay_hint(.seed)
    )]
    NoConvergence {
        degree: usize,
        unconverged: usize,
        sweeps: usize,
        seed: Option<ComplexGaussianStream>,
    },
    #[error("Newton refinement from {start} diverged after {steps} steps (last iterate {last})")]
    RefineDiverged {
        start: Complex64,
        last: Complex64,
        steps: usize,
    },
    #[error("companion eigenvalue fallback failed for degree {0}")]
    EigenFailed(usize),
    #[error(transparent)]
    Poly(#[from] PolyError),
}

fn replay_hint(seed: &Option<ComplexGaussianStream>) -> String {
    match seed {
        Some(s) => format!(
            "; replay with master_seed={} stream_index={}",
            s.master_seed, s.stream_index
        ),
        None => String::new(),
    }
}

/// How each root was obtained.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RootStatus {
    /// Aberth correction fell below the step tolerance.
    Converged,
    /// Value indistinguishable from zero in working precision.
    NoiseFloor,
    /// Converged after restarting from companion eigenvalues.
    FromEigen,
    /// Converged after restarting from a rotated lattice.
    Restarted,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RootSet {
    roots: Vec<Complex64>,
    residuals: Vec<f64>,
    flags: Vec<RootStatus>,
    sweeps: usize,
}

impl RootSet {
    pub fn roots(&self) -> &[Complex64] {
        &self.roots
    }

    /// |f̂(ζ_j)| per root.
    pub fn residuals(&self) -> &[f64] {
        &self.residuals
    }

    pub fn condition_flags(&self) -> &[RootStatus] {
        &self.flags
    }

    pub fn len(&self) -> usize {
        self.roots.len()
    }

    pub fn is_empty(&self) -> bool {
        self.roots.is_empty()
    }

    pub fn max_residual(&self) -> f64 {
        self.residuals.iter().copied().fold(0.0, f64::max)
    }

    /// Total Aberth sweeps spent, restarts included.
    pub fn sweeps(&self) -> usize {
        self.sweeps
    }

    /// Wraps externally computed roots, recomputing residuals.
    pub fn from_roots(p: &EllipticPolynomial, roots: Vec<Complex64>) -> Result<Self, RootError> {
        let n = roots.len();
        Self::assemble(p, roots, vec![RootStatus::Converged; n], 0)
    }

    fn assemble(
        p: &EllipticPolynomial,
        roots: Vec<Complex64>,
        flags: Vec<RootStatus>,
        sweeps: usize,
    ) -> Result<Self, RootError> {
        let mut order: Vec<usize> = (0..roots.len()).collect();
        order.sort_by(|&a, &b| {
            roots[a]
                .re
                .total_cmp(&roots[b].re)
                .then(roots[a].im.total_cmp(&roots[b].im))
        });
        let roots: Vec<Complex64> = order.iter().map(|&k| roots[k]).collect();
        let flags = order.iter().map(|&k| flags[k]).collect();
        let residuals = roots
            .iter()
            .map(|&z| p.eval_normalized(z).map(|v| v.norm()))
            .collect::<Result<_, _>>()?;
        Ok(Self {
            roots,
            residuals,
            flags,
            sweeps,
        })
    }
}

#[derive(Debug, Clone, Copy)]
pub struct RootOptions {
    /// Sweep budget of the first Aberth pass.
    pub max_sweeps: usize,
    /// Sweep budget of each restarted pass.
    pub restart_sweeps: usize,
    /// Largest degree that restarts from companion eigenvalues.
    pub eigen_fallback_max_degree: usize,
    /// Lattice restarts tried above that degree.
    pub lattice_restarts: usize,
}

impl Default for RootOptions {
    fn default() -> Self {
        Self {
            max_sweeps: 80,
            restart_sweeps: 200,
            eigen_fallback_max_degree: 500,
            lattice_restarts: 2,
        }
    }
}

pub fn find_roots(p: &EllipticPolynomial) -> Result<RootSet, RootError> {
    find_roots_with(p, &RootOptions::default())
}

pub fn find_roots_with(p: &EllipticPolynomial, opts: &RootOptions) -> Result<RootSet, RootError> {
    let n = p.degree();
    if n == 0 {
        return RootSet::assemble(p, Vec::new(), Vec::new(), 0);
    }
    let c = p.weighted_coeffs();
    if c[n] == ZERO {
        return Err(PolyError::ZeroLeading.into());
    }
    if n == 1 {
        return RootSet::assemble(p, vec![-c[0] / c[1]], vec![RootStatus::Converged], 0);
    }

    let mut z = lattice_guesses(n, 0.0);
    let (mut flags, mut sweeps) = aberth(p, &mut z, opts.max_sweeps)?;
    if flags.iter().all(Option::is_some) {
        let flags = flags.into_iter().map(Option::unwrap).collect();
        return RootSet::assemble(p, z, flags, sweeps);
    }

    let restarts: Vec<(Vec<Complex64>, RootStatus)> = if n <= opts.eigen_fallback_max_degree {
        vec![(companion_eigenvalues(p)?, RootStatus::FromEigen)]
    } else {
        (1..=opts.lattice_restarts)
            .map(|k| (lattice_guesses(n, 0.37 * k as f64), RootStatus::Restarted))
            .collect()
    };
    for (mut guess, tag) in restarts {
        let (f, s) = aberth(p, &mut guess, opts.restart_sweeps)?;
        sweeps += s;
        flags = f;
        if flags.iter().all(Option::is_some) {
            let flags = flags
                .into_iter()
                .map(|f| match f {
                    Some(RootStatus::Converged) => tag,
                    other => other.unwrap(),
                })
                .collect();
            return RootSet::assemble(p, guess, flags, sweeps);
        }
    }
    Err(RootError::NoConvergence {
        degree: n,
        unconverged: flags.iter().filter(|f| f.is_none()).count(),
        sweeps,
        seed: p.origin(),
    })
}

/// Fibonacci lattice on the sphere, unprojected.
fn lattice_guesses(n: usize, twist: f64) -> Vec<Complex64> {
    let golden = std::f64::consts::PI * (3.0 - 5f64.sqrt());
    (0..n)
        .map(|k| {
            let h = -1.0 + (2 * k + 1) as f64 / n as f64;
            let phi = k as f64 * golden + 0.4142 + twist;
            let r = ((1.0 + h) / (1.0 - h)).sqrt();
            Complex64::from_polar(r, phi)
        })
        .collect()
}

fn aberth(
    p: &EllipticPolynomial,
    z: &mut [Complex64],
    max_sweeps: usize,
) -> Result<(Vec<Option<RootStatus>>, usize), RootError> {
    let n = z.len();
    let mut status: Vec<Option<RootStatus>> = vec![None; n];
    let mut sweeps = 0;
    while sweeps < max_sweeps {
        sweeps += 1;
        let mut active = 0;
        for k in 0..n {
            if status[k].is_some() {
                continue;
            }
            active += 1;
            let zk = z[k];
            let e = p.eval(zk)?;
            if e.value.norm() <= e.value_error {
                status[k] = Some(RootStatus::NoiseFloor);
                continue;
            }
            let Some(ratio) = e.newton else {
                z[k] = zk * Complex64::new(1.0, 1e-7) + Complex64::new(1e-9, 0.0);
                continue;
            };
            let mut s = ZERO;
            let mut clash = false;
            for (j, &zj) in z.iter().enumerate() {
                if j != k {
                    let d = zk - zj;
                    let d2 = d.norm_sqr();
                    if d2 == 0.0 {
                        clash = true;
                        break;
                    }
                    s += d.conj() / d2;
                }
            }
            if clash {
                z[k] = zk * Complex64::new(1.0, 1e-7) + Complex64::new(1e-9, 0.0);
                continue;
            }
            let den = Complex64::new(1.0, 0.0) - ratio * s;
            let step = if den == ZERO { ratio } else { ratio / den };
            let next = zk - step;
            if !(next.re.is_finite() && next.im.is_finite()) {
                continue;
            }
            z[k] = next;
            if step.norm() <= STEP_TOL * next.norm().max(1.0) {
                status[k] = Some(RootStatus::Converged);
            }
        }
        if active == 0 {
            break;
        }
    }
    Ok((status, sweeps))
}

/// Eigenvalues of the companion matrix after diagonal balancing.
fn companion_eigenvalues(p: &EllipticPolynomial) -> Result<Vec<Complex64>, RootError> {
    let n = p.degree();
    let c = p.weighted_coeffs();
    let lead = c[n];
    let mut m = DMatrix::<Complex64>::zeros(n, n);
    for j in 0..n {
        m[(0, j)] = -c[n - 1 - j] / lead;
    }
    for i in 1..n {
        m[(i, i - 1)] = Complex64::new(1.0, 0.0);
    }
    balance(&mut m);
    let schur = nalgebra::linalg::Schur::try_new(m, 1e-14, 10_000).ok_or(RootError::EigenFailed(n))?;
    let t = schur.unpack().1;
    Ok((0..n).map(|i| t[(i, i)]).collect())
}

/// Parlett–Reinsch balancing with powers of two.
fn balance(m: &mut DMatrix<Complex64>) {
    let n = m.nrows();
    let radix = 2.0f64;
    loop {
        let mut done = true;
        for i in 0..n {
            let mut col = 0.0;
            let mut row = 0.0;
            for j in 0..n {
                if j != i {
                    col += m[(j, i)].norm();
                    row += m[(i, j)].norm();
                }
            }
            if col == 0.0 || row == 0.0 {
                continue;
            }
            let s = col + row;
            let mut f = 1.0;
            let mut cc = col;
            let mut rr = row;
            while cc < rr / radix {
                cc *= radix;
                rr /= radix;
                f *= radix;
            }
            while cc > rr * radix {
                cc /= radix;
                rr *= radix;
                f /= radix;
            }
            if (cc + rr) < 0.95 * s {
                done = false;
                for j in 0..n {
                    m[(i, j)] /= f;
                    m[(j, i)] *= f;
                }
            }
        }
        if done {
            break;
        }
    }
}

/// Newton iteration on the normalized polynomial.
///
/// Stops when the step is below `1e-14·max(1,|z|)` or the value is below its
/// rounding bound; fails after 50 steps.
pub fn refine_root(p: &EllipticPolynomial, z0: Complex64) -> Result<Complex64, RootError> {
    let mut z = z0;
    for step in 0..REFINE_MAX_STEPS {
        let e = p.eval(z)?;
        if e.value.norm() <= e.value_error {
            return Ok(z);
        }
        let Some(ratio) = e.newton else {
            return Err(RootError::RefineDiverged {
                start: z0,
                last: z,
                steps: step,
            });
        };
        let next = z - ratio;
        if ratio.norm() < STEP_TOL * next.norm().max(1.0) {
            return Ok(next);
        }
        z = next;
    }
    Err(RootError::RefineDiverged {
        start: z0,
        last: z,
        steps: REFINE_MAX_STEPS,
    })
}

/// Vieta and residual checks of a root set.
#[derive(Debug, Clone, Serialize)]
pub struct RootDiagnostics {
    pub count_ok: bool,
    /// |Σζ + c_{n−1}/c_n|
    pub sum_error: f64,
    pub sum_tolerance: f64,
    /// |Σ ln|ζ| − ln|c_0/c_n||
    pub log_modulus_error: f64,
    /// wrapped difference of arguments of Πζ and (−1)^n c_0/c_n
    pub argument_error: f64,
    pub product_tolerance: f64,
    pub max_residual: f64,
    pub residual_tolerance: f64,
    pub pass: bool,
}

pub fn validate_roots(p: &EllipticPolynomial, rs: &RootSet) -> RootDiagnostics {
    validate_roots_with(p, rs, 1e-10)
}

pub fn validate_roots_with(p: &EllipticPolynomial, rs: &RootSet, residual_tolerance: f64) -> RootDiagnostics {
    let n = p.degree();
    let c = p.weighted_coeffs();
    let count_ok = rs.len() == n;
    let (mut sum_error, mut sum_tolerance) = (0.0, 0.0);
    let (mut log_modulus_error, mut argument_error) = (0.0, 0.0);
    let product_tolerance = 1e-8 * n.max(1) as f64;
    if n >= 1 && count_ok {
        let lead = c[n];
        let sum: Complex64 = rs.roots().iter().sum();
        let abs_sum: f64 = rs.roots().iter().map(|z| z.norm()).sum();
        sum_error = (sum + c[n - 1] / lead).norm();
        sum_tolerance = 1e-8 * (1.0 + abs_sum);
        if c[0] != ZERO {
            let target = c[0] / lead * if n.is_multiple_of(2) { 1.0 } else { -1.0 };
            let log_mod: f64 = rs.roots().iter().map(|z| z.norm().ln()).sum();
            log_modulus_error = (log_mod - target.norm().ln()).abs();
            let arg: f64 = rs.roots().iter().map(|z| z.arg()).sum();
            let tau = 2.0 * std::f64::consts::PI;
            argument_error = (arg - target.arg()).rem_euclid(tau);
            argument_error = argument_error.min(tau - argument_error);
        }
    }
    let max_residual = rs.max_residual();
    let pass = count_ok
        && sum_error <= sum_tolerance
        && log_modulus_error <= product_tolerance
        && argument_error <= product_tolerance
        && max_residual <= residual_tolerance;
    RootDiagnostics {
        count_ok,
        sum_error,
        sum_tolerance,
        log_modulus_error,
        argument_error,
        product_tolerance,
        max_residual,
        residual_tolerance,
        pass,
    }
}
