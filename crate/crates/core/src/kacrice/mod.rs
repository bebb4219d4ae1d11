//! Kac-Rice intensities for the zeros, the Gaussian conditioning behind them,
//! and divided differences.

mod density;
mod divided;
mod gaussian;

pub use density::{
    annulus_expected_pairs, clustering_gap, empirical_pair_counts, rho_1, rho_2, rho_2_closed_form, rho_2_gap,
    rho_2_lebesgue, rho_2_lebesgue_from_mu, rho_2_total_mass, rho_lmp_mc, ClusteringFit, ClusteringPoint,
    DensityEstimate, PairCountComparison, DEGENERACY_THRESHOLD,
};
pub use divided::{
    contour_divided_difference, dd_matrix, divided_difference, Analytic, DividedDiffContext, ExpFunction, PolyFunction,
    ProductForm,
};
pub use gaussian::{
    conditioned_covariance, gef_dd_covariance, gef_dd_covariance_by_matrix, gef_dd_min_eigenvalue, ConditionedGaussian,
    KernelModel, Variable,
};

use num_complex::Complex64;
use thiserror::Error;

use crate::polymodel::PolyError;

#[derive(Debug, Error)]
pub enum KacRiceError {
    #[error("points {i} and {j} are too close (scaled separation {separation:e}); the two-point formula is degenerate there")]
    Degenerate { i: usize, j: usize, separation: f64 },
    #[error(
        "conditioning block is not positive definite (smallest eigenvalue {min_eigenvalue:e}); closest pair {i}, {j}"
    )]
    Singular { min_eigenvalue: f64, i: usize, j: usize },
    #[error("query needs ell + m in 1..={max}, got ell = {ell}, m = {m}")]
    QuerySize { ell: usize, m: usize, max: usize },
    #[error("{expected} exponents expected, got {got}")]
    PowerCount { expected: usize, got: usize },
    #[error("query points {i} and {j} coincide")]
    RepeatedPoint { i: usize, j: usize },
    #[error("divided difference needs at least one point")]
    NoPoints,
    #[error("contour oracle did not settle after {nodes} nodes (last change {change:e})")]
    ContourNotConverged { nodes: usize, change: f64 },
    #[error(transparent)]
    Poly(#[from] PolyError),
    #[error(transparent)]
    Roots(#[from] crate::roots::RootError),
    #[error(transparent)]
    Quadrature(#[from] crate::quadrature::QuadError),
}

/// Points and exponents selecting one density `ρ_{ℓ,m,p}`.
///
/// `w` are the `ℓ` points carrying a `log|f̂|` factor, `z` the `m` zeros
/// carrying `|Df̂|² log^{p_j}|Df̂|`.
#[derive(Debug, Clone, PartialEq)]
pub struct DensityQuery {
    pub w: Vec<Complex64>,
    pub z: Vec<Complex64>,
    pub powers: Vec<u32>,
}

impl DensityQuery {
    pub fn new(w: Vec<Complex64>, z: Vec<Complex64>, powers: Vec<u32>) -> Result<Self, KacRiceError> {
        if w.len() + z.len() == 0 {
            return Err(KacRiceError::QuerySize {
                ell: 0,
                m: 0,
                max: usize::MAX,
            });
        }
        if powers.len() != z.len() {
            return Err(KacRiceError::PowerCount {
                expected: z.len(),
                got: powers.len(),
            });
        }
        let all: Vec<Complex64> = z.iter().chain(w.iter()).copied().collect();
        for i in 0..all.len() {
            for j in i + 1..all.len() {
                if all[i] == all[j] {
                    return Err(KacRiceError::RepeatedPoint { i, j });
                }
            }
        }
        Ok(Self { w, z, powers })
    }

    pub fn ell(&self) -> usize {
        self.w.len()
    }

    pub fn m(&self) -> usize {
        self.z.len()
    }
}
