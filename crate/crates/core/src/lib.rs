//! Zeros of random elliptic (Kostlan) polynomials on the Riemann sphere.
//!
//! The crate samples degree-`n` polynomials with Gaussian coefficients and
//! binomial weights, finds all of their roots, and measures the spherical
//! logarithmic energy of the resulting point configuration. Around that core
//! sit the tools used to check the energy statistics: Kac-Rice intensities,
//! divided differences, limiting variance constants, a Monte Carlo engine and
//! a gradient descent toward low-energy configurations.
//!
//! Most entry points take an explicit [`ComplexGaussianStream`] so results are
//! reproducible independent of thread scheduling.

pub mod constants;
pub mod energy;
pub mod error;
pub mod harness;
pub mod kacrice;
pub mod minimizer;
pub mod polymodel;
pub mod quadrature;
pub mod rng;
pub mod roots;
pub mod special;
pub mod sphere;
pub mod stats;

pub use num_complex::Complex64;

pub use error::{Error, Result};
pub use polymodel::{EllipticPolynomial, GefTruncation};
pub use rng::ComplexGaussianStream;
pub use roots::{find_roots, RootSet};
pub use sphere::{Isometry, SphereCoord, SpherePoint, SphericalConfiguration};
