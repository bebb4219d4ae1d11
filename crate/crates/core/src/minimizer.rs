//! Projected gradient descent on the logarithmic energy, started from the
//! zeros of a random elliptic polynomial.

use serde::Serialize;
use thiserror::Error;

use crate::energy::{pairwise_energy_cartesian, reference_curves, sq_dist, EnergyError, ReferenceCurves};
use crate::polymodel::{EllipticPolynomial, PolyError};
use crate::rng::ComplexGaussianStream;
use crate::roots::{find_roots, RootError};
use crate::special::NeumaierSum;
use crate::sphere::{ConfigSource, SphericalConfiguration};

#[derive(Debug, Error)]
pub enum DescentError {
    #[error("descent needs at least 2 points, got {0}")]
    TooFewPoints(usize),
    #[error(transparent)]
    Energy(#[from] EnergyError),
    #[error(transparent)]
    Poly(#[from] PolyError),
    #[error(transparent)]
    Roots(#[from] RootError),
}

#[derive(Debug, Clone)]
pub struct DescentState {
    pub config: SphericalConfiguration,
    pub energy: f64,
    pub grad_norm: f64,
    pub step: f64,
    pub iteration: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum DescentStatus {
    Converged,
    MaxIterations,
    /// No acceptable step was found even after it shrank below `1e-300`.
    Stagnated,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct DescentOptions {
    /// First trial step; `1/n` if unset.
    pub initial_step: Option<f64>,
    /// Stop once `grad_norm` falls below `tol_factor·n`.
    pub tol_factor: f64,
    pub max_iterations: usize,
}

impl Default for DescentOptions {
    fn default() -> Self {
        Self {
            initial_step: None,
            tol_factor: 1e-10,
            max_iterations: 20_000,
        }
    }
}

/// One row of the trajectory CSV.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TrajectoryPoint {
    pub iteration: usize,
    pub energy: f64,
    pub grad_norm: f64,
}

#[derive(Debug, Clone)]
pub struct DescentOutcome {
    pub status: DescentStatus,
    pub start_energy: f64,
    pub last: DescentState,
    pub trajectory: Vec<TrajectoryPoint>,
}

/// Tangent gradient of `E = −Σ_{i≠j} ln‖x_i − x_j‖`:
/// `−2 Σ_{j≠i} (x_i − x_j)/‖x_i − x_j‖²`, projected onto `x_i^⊥`.
pub fn energy_gradient(x: &[[f64; 3]]) -> Result<Vec<[f64; 3]>, EnergyError> {
    let n = x.len();
    let mut g = vec![[0.0f64; 3]; n];
    for i in 0..n {
        for j in i + 1..n {
            let d2 = sq_dist(&x[i], &x[j]);
            if d2 < crate::energy::COINCIDENCE_THRESHOLD * crate::energy::COINCIDENCE_THRESHOLD {
                return Err(EnergyError::CoincidentPoints {
                    i,
                    j,
                    distance: d2.sqrt(),
                });
            }
            for k in 0..3 {
                let c = 2.0 * (x[i][k] - x[j][k]) / d2;
                g[i][k] -= c;
                g[j][k] += c;
            }
        }
    }
    for (gi, xi) in g.iter_mut().zip(x) {
        let dot = gi[0] * xi[0] + gi[1] * xi[1] + gi[2] * xi[2];
        for k in 0..3 {
            gi[k] -= dot * xi[k];
        }
    }
    Ok(g)
}

fn norm(g: &[[f64; 3]]) -> f64 {
    g.iter()
        .map(|v| v[0] * v[0] + v[1] * v[1] + v[2] * v[2])
        .sum::<f64>()
        .sqrt()
}

fn step_along(x: &[[f64; 3]], g: &[[f64; 3]], t: f64) -> Vec<[f64; 3]> {
    x.iter()
        .zip(g)
        .map(|(xi, gi)| {
            let y = [xi[0] - t * gi[0], xi[1] - t * gi[1], xi[2] - t * gi[2]];
            let r = (y[0] * y[0] + y[1] * y[1] + y[2] * y[2]).sqrt();
            [y[0] / r, y[1] / r, y[2] / r]
        })
        .collect()
}

/// `E(y) − E(x)` computed pairwise from the displacements, accurate relative
/// to the change rather than to `E`, with a rounding floor
/// `8ε Σ 1/‖x_i − x_j‖` below which its sign is not meaningful.
pub fn energy_difference(x: &[[f64; 3]], y: &[[f64; 3]]) -> (f64, f64) {
    let delta: Vec<[f64; 3]> = x
        .iter()
        .zip(y)
        .map(|(a, b)| [b[0] - a[0], b[1] - a[1], b[2] - a[2]])
        .collect();
    let mut acc = NeumaierSum::default();
    let mut inv = 0.0;
    for i in 0..x.len() {
        for j in i + 1..x.len() {
            let a = [x[i][0] - x[j][0], x[i][1] - x[j][1], x[i][2] - x[j][2]];
            let e = [
                delta[i][0] - delta[j][0],
                delta[i][1] - delta[j][1],
                delta[i][2] - delta[j][2],
            ];
            let d2 = a[0] * a[0] + a[1] * a[1] + a[2] * a[2];
            let change = 2.0 * (a[0] * e[0] + a[1] * e[1] + a[2] * e[2]) + e[0] * e[0] + e[1] * e[1] + e[2] * e[2];
            acc.add(-(change / d2).ln_1p());
            inv += 1.0 / d2.sqrt();
        }
    }
    (acc.value(), 8.0 * f64::EPSILON * inv)
}

/// Backtracking descent: each iteration tries twice the last accepted step,
/// halving until the energy decreases.
///
/// Steps are judged by [`energy_difference`], and trajectory energies are
/// the start energy plus accepted differences, so they never increase. When
/// the difference sits inside its rounding floor a step is taken only if it
/// lowers the gradient norm, and the recorded energy is left as is. The
/// final state carries a freshly summed energy.
pub fn descend(start: &SphericalConfiguration, opts: &DescentOptions) -> Result<DescentOutcome, DescentError> {
    let n = start.len();
    if n < 2 {
        return Err(DescentError::TooFewPoints(n));
    }
    let tol = opts.tol_factor * n as f64;
    let mut x = start.cartesian();
    let start_energy = pairwise_energy_cartesian(&x)?;
    let mut energy = start_energy;
    let mut g = energy_gradient(&x)?;
    let mut gn = norm(&g);
    let mut step = opts.initial_step.unwrap_or(1.0 / n as f64);
    let mut trajectory = vec![TrajectoryPoint {
        iteration: 0,
        energy,
        grad_norm: gn,
    }];
    let mut iteration = 0;
    let status = loop {
        if gn < tol {
            break DescentStatus::Converged;
        }
        if iteration >= opts.max_iterations {
            break DescentStatus::MaxIterations;
        }
        let mut t = 2.0 * step;
        let accepted = loop {
            let y = step_along(&x, &g, t);
            let (de, floor) = energy_difference(&x, &y);
            if de < 0.0 {
                break Some((y, de));
            }
            if de <= floor && energy_gradient(&y).is_ok_and(|gy| norm(&gy) < gn) {
                break Some((y, 0.0));
            }
            t *= 0.5;
            if t < 1e-300 {
                break None;
            }
        };
        let Some((y, de)) = accepted else {
            break DescentStatus::Stagnated;
        };
        // a step that merges two points shows up as de = -inf
        if !de.is_finite() {
            pairwise_energy_cartesian(&y)?;
        }
        x = y;
        energy += de;
        step = t;
        g = energy_gradient(&x)?;
        gn = norm(&g);
        iteration += 1;
        trajectory.push(TrajectoryPoint {
            iteration,
            energy,
            grad_norm: gn,
        });
    };
    let energy = pairwise_energy_cartesian(&x)?;
    Ok(DescentOutcome {
        status,
        start_energy,
        last: DescentState {
            config: SphericalConfiguration::from_cartesian(&x, ConfigSource::Refined),
            energy,
            grad_norm: gn,
            step,
            iteration,
        },
        trajectory,
    })
}

#[derive(Debug, Clone, Serialize)]
pub struct PipelineReport {
    pub n: usize,
    pub seed: u64,
    pub start_energy: f64,
    pub end_energy: f64,
    pub iterations: usize,
    pub final_grad_norm: f64,
    pub status: DescentStatus,
    pub reference: ReferenceCurves,
    /// `(start − min_lower)/n`.
    pub start_excess_per_n: f64,
    /// `(end − min_lower)/n`.
    pub end_excess_per_n: f64,
}

/// Sample, find roots, project, descend.
pub fn pipeline(n: usize, seed: u64, opts: &DescentOptions) -> Result<(PipelineReport, DescentOutcome), DescentError> {
    let stream = ComplexGaussianStream::new(seed, 0);
    let p = EllipticPolynomial::sample(n, &stream);
    let rs = find_roots(&p)?;
    let cfg = SphericalConfiguration::from_planar(rs.roots().iter().copied(), ConfigSource::Roots);
    let out = descend(&cfg, opts)?;
    let reference = reference_curves(n);
    let nf = n as f64;
    let report = PipelineReport {
        n,
        seed,
        start_energy: out.start_energy,
        end_energy: out.last.energy,
        iterations: out.last.iteration,
        final_grad_norm: out.last.grad_norm,
        status: out.status,
        reference,
        start_excess_per_n: (out.start_energy - reference.min_lower) / nf,
        end_excess_per_n: (out.last.energy - reference.min_lower) / nf,
    };
    Ok((report, out))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::standard_normal;
    use crate::sphere::Isometry;

    fn random_tangent(x: &[[f64; 3]], seed: u64) -> Vec<[f64; 3]> {
        let mut rng = ComplexGaussianStream::new(seed, 0).rng();
        x.iter()
            .map(|xi| {
                let v = [
                    standard_normal(&mut rng),
                    standard_normal(&mut rng),
                    standard_normal(&mut rng),
                ];
                let dot = v[0] * xi[0] + v[1] * xi[1] + v[2] * xi[2];
                [v[0] - dot * xi[0], v[1] - dot * xi[1], v[2] - dot * xi[2]]
            })
            .collect()
    }

    #[test]
    fn antipodal_pair_is_critical() {
        let g = energy_gradient(&[[0.0, 0.0, 1.0], [0.0, 0.0, -1.0]]).unwrap();
        assert!(norm(&g) < 1e-15);
    }

    #[test]
    fn equilateral_great_circle_is_critical() {
        let s = 3f64.sqrt() / 2.0;
        let x = [[1.0, 0.0, 0.0], [-0.5, s, 0.0], [-0.5, -s, 0.0]];
        assert!(norm(&energy_gradient(&x).unwrap()) < 1e-14);
    }

    #[test]
    fn directional_derivative_second_order() {
        let x = SphericalConfiguration::uniform(7, &ComplexGaussianStream::new(5, 0)).cartesian();
        let v = random_tangent(&x, 6);
        let g = energy_gradient(&x).unwrap();
        let exact: f64 = g
            .iter()
            .zip(&v)
            .map(|(a, b)| a[0] * b[0] + a[1] * b[1] + a[2] * b[2])
            .sum();
        let fd = |h: f64| {
            let e = |t: f64| pairwise_energy_cartesian(&step_along(&x, &v, -t)).unwrap();
            (e(h) - e(-h)) / (2.0 * h)
        };
        let (e1, e2) = ((fd(1e-2) - exact).abs(), (fd(1e-3) - exact).abs());
        assert!((e1 / e2).log10() >= 1.9, "order {}", (e1 / e2).log10());
        assert!((fd(1e-4) - exact).abs() < 1e-6 * exact.abs().max(1.0));
    }

    #[test]
    fn difference_matches_direct() {
        let x = SphericalConfiguration::uniform(9, &ComplexGaussianStream::new(7, 0)).cartesian();
        let v = random_tangent(&x, 8);
        let y = step_along(&x, &v, 0.05);
        let direct = pairwise_energy_cartesian(&y).unwrap() - pairwise_energy_cartesian(&x).unwrap();
        assert!((energy_difference(&x, &y).0 - direct).abs() < 1e-12);
    }

    #[test]
    fn two_and_three_points() {
        let opts = DescentOptions::default();
        let s2 = SphericalConfiguration::uniform(2, &ComplexGaussianStream::new(11, 0));
        let o2 = descend(&s2, &opts).unwrap();
        assert!(
            (o2.last.energy + 2.0 * 2f64.ln()).abs() < 1e-8,
            "{:?} {} {}",
            o2.status,
            o2.last.energy + 2.0 * 2f64.ln(),
            o2.last.iteration
        );
        let s3 = SphericalConfiguration::uniform(3, &ComplexGaussianStream::new(12, 0));
        let o3 = descend(&s3, &opts).unwrap();
        assert!((o3.last.energy + 3.0 * 3f64.ln()).abs() < 1e-8);
        assert_eq!(
            o3.status,
            DescentStatus::Converged,
            "{} {}",
            o3.last.grad_norm,
            o3.last.iteration
        );
    }

    #[test]
    fn three_point_grid_oracle() {
        // x1 at the pole, x2 at polar angle a in the xz-plane, x3 at (b, φ)
        let m = 60;
        let mut best = f64::INFINITY;
        let pt = |th: f64, ph: f64| [th.sin() * ph.cos(), th.sin() * ph.sin(), th.cos()];
        for ia in 1..=m {
            let a = std::f64::consts::PI * ia as f64 / m as f64;
            for ib in 1..=m {
                let b = std::f64::consts::PI * ib as f64 / m as f64;
                for ip in 0..2 * m {
                    let ph = std::f64::consts::PI * ip as f64 / m as f64;
                    let x = [[0.0, 0.0, 1.0], pt(a, 0.0), pt(b, ph)];
                    if let Ok(e) = pairwise_energy_cartesian(&x) {
                        best = best.min(e);
                    }
                }
            }
        }
        assert!((best + 3.0 * 3f64.ln()).abs() < 1e-12);
    }

    #[test]
    fn trajectory_is_monotone_and_optimum_stable() {
        let s = SphericalConfiguration::uniform(8, &ComplexGaussianStream::new(13, 0));
        let out = descend(&s, &DescentOptions::default()).unwrap();
        assert!(out.trajectory.windows(2).all(|w| w[1].energy <= w[0].energy));
        assert!(out.last.config.is_valid());
        let x = out.last.config.cartesian();
        let v = random_tangent(&x, 14);
        let vn = norm(&v);
        let y = step_along(&x, &v, 1e-6 / vn);
        assert!(pairwise_energy_cartesian(&y).unwrap() > out.last.energy);
    }

    #[test]
    fn isometry_invariant_final_energy() {
        let s = SphericalConfiguration::uniform(6, &ComplexGaussianStream::new(15, 0));
        let tau = Isometry::random(&ComplexGaussianStream::new(16, 0));
        let a = descend(&s, &DescentOptions::default()).unwrap();
        let b = descend(&s.transformed(&tau), &DescentOptions::default()).unwrap();
        assert!((a.last.energy - b.last.energy).abs() < 1e-8);
    }

    #[test]
    fn pipeline_decreases_energy() {
        let (r, _) = pipeline(
            60,
            3,
            &DescentOptions {
                max_iterations: 2000,
                ..Default::default()
            },
        )
        .unwrap();
        assert!(r.end_energy < r.start_energy);
        assert!(r.end_energy >= r.reference.min_lower - 1.0);
        assert!(r.end_excess_per_n < r.start_excess_per_n);
    }
}
