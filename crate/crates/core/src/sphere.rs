//! The Riemann sphere: stereographic projection, chordal metric, rotations
//! as Möbius maps and the uniform probability measure.
//!
//! Pole convention: `0 ↦ (0,0,−1)` and `∞ ↦ (0,0,1)`, so the chordal distance
//! to infinity is `2/√(1+|z|²)`. Whenever a modulus exceeds one the formulas
//! switch to `1/z`, which keeps every intermediate quantity of order one.

use std::f64::consts::PI;

use num_complex::Complex64;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::rng::{standard_normal, ComplexGaussianStream, Purpose};

/// A point of the extended plane.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum SphereCoord {
    Finite(Complex64),
    Infinity,
}

impl From<Complex64> for SphereCoord {
    fn from(z: Complex64) -> Self {
        SphereCoord::Finite(z)
    }
}

impl SphereCoord {
    pub fn finite(self) -> Option<Complex64> {
        match self {
            SphereCoord::Finite(z) => Some(z),
            SphereCoord::Infinity => None,
        }
    }

    pub fn is_infinite(self) -> bool {
        matches!(self, SphereCoord::Infinity)
    }
}

/// Chordal distance between two points of the extended plane, in `[0, 2]`.
pub fn spherical_distance(z: SphereCoord, w: SphereCoord) -> f64 {
    use SphereCoord::*;
    match (z, w) {
        (Infinity, Infinity) => 0.0,
        (Finite(z), Infinity) | (Infinity, Finite(z)) => distance_to_infinity(z),
        (Finite(z), Finite(w)) => planar_distance(z, w),
    }
}

fn distance_to_infinity(z: Complex64) -> f64 {
    let r = z.norm();
    if r <= 1.0 {
        2.0 / (1.0 + r * r).sqrt()
    } else {
        let v = 1.0 / r;
        2.0 * v / (1.0 + v * v).sqrt()
    }
}

/// Chordal distance between two finite points.
pub fn planar_distance(z: Complex64, w: Complex64) -> f64 {
    let (rz, rw) = (z.norm(), w.norm());
    let d = match (rz > 1.0, rw > 1.0) {
        (false, false) => 2.0 * (z - w).norm() / ((1.0 + rz * rz).sqrt() * (1.0 + rw * rw).sqrt()),
        (true, true) => {
            let (a, b) = (1.0 / z, 1.0 / w);
            let (ra, rb) = (1.0 / rz, 1.0 / rw);
            2.0 * (a - b).norm() / ((1.0 + ra * ra).sqrt() * (1.0 + rb * rb).sqrt())
        }
        (true, false) => mixed(z, rz, w, rw),
        (false, true) => mixed(w, rw, z, rz),
    };
    d.min(2.0)
}

// |big| > 1 ≥ |small|
fn mixed(big: Complex64, rbig: f64, small: Complex64, rsmall: f64) -> f64 {
    let inv = 1.0 / rbig;
    2.0 * (Complex64::new(1.0, 0.0) - small / big).norm() / ((1.0 + inv * inv).sqrt() * (1.0 + rsmall * rsmall).sqrt())
}

/// Unit vector for a point of the extended plane.
pub fn project(z: SphereCoord) -> [f64; 3] {
    match z {
        SphereCoord::Infinity => [0.0, 0.0, 1.0],
        SphereCoord::Finite(z) => {
            let r = z.norm();
            if r <= 1.0 {
                let r2 = r * r;
                let d = 1.0 + r2;
                [2.0 * z.re / d, 2.0 * z.im / d, (r2 - 1.0) / d]
            } else {
                let v = 1.0 / z.conj();
                let v2 = v.norm_sqr();
                let d = 1.0 + v2;
                [2.0 * v.re / d, 2.0 * v.im / d, (1.0 - v2) / d]
            }
        }
    }
}

/// Inverse of [`project`]; the input is normalized first.
pub fn unproject(x: [f64; 3]) -> SphereCoord {
    let norm = (x[0] * x[0] + x[1] * x[1] + x[2] * x[2]).sqrt();
    let [a, b, c] = [x[0] / norm, x[1] / norm, x[2] / norm];
    if c <= 0.0 {
        SphereCoord::Finite(Complex64::new(a, b) / (1.0 - c))
    } else {
        let q = Complex64::new(a, -b);
        if q == Complex64::new(0.0, 0.0) {
            SphereCoord::Infinity
        } else {
            SphereCoord::Finite((1.0 + c) / q)
        }
    }
}

/// A point stored both as a planar coordinate and as a unit vector.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SpherePoint {
    planar: SphereCoord,
    cartesian: [f64; 3],
}

impl SpherePoint {
    pub fn from_planar(z: impl Into<SphereCoord>) -> Self {
        let planar = z.into();
        Self {
            planar,
            cartesian: project(planar),
        }
    }

    pub fn from_cartesian(x: [f64; 3]) -> Self {
        let n = (x[0] * x[0] + x[1] * x[1] + x[2] * x[2]).sqrt();
        let cartesian = [x[0] / n, x[1] / n, x[2] / n];
        Self {
            planar: unproject(cartesian),
            cartesian,
        }
    }

    pub fn planar(&self) -> SphereCoord {
        self.planar
    }

    pub fn cartesian(&self) -> [f64; 3] {
        self.cartesian
    }

    pub fn distance(&self, other: &SpherePoint) -> f64 {
        spherical_distance(self.planar, other.planar)
    }
}

/// Rotation of the sphere, `τ(z) = (αz+β)/(ᾱ−β̄z)` with `|α|²+|β|² = 1`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Isometry {
    pub alpha: Complex64,
    pub beta: Complex64,
}

impl Isometry {
    pub const IDENTITY: Isometry = Isometry {
        alpha: Complex64::new(1.0, 0.0),
        beta: Complex64::new(0.0, 0.0),
    };

    /// Returns `None` unless `|α|²+|β|² = 1` to 1e-12.
    pub fn new(alpha: Complex64, beta: Complex64) -> Option<Self> {
        ((alpha.norm_sqr() + beta.norm_sqr() - 1.0).abs() <= 1e-12).then_some(Self { alpha, beta })
    }

    /// Scales `(α, β)` onto the unit sphere of C².
    pub fn normalized(alpha: Complex64, beta: Complex64) -> Self {
        let s = (alpha.norm_sqr() + beta.norm_sqr()).sqrt();
        Self {
            alpha: alpha / s,
            beta: beta / s,
        }
    }

    /// Uniform on the rotation group: `(α, β)` uniform on the unit 3-sphere.
    pub fn random(stream: &ComplexGaussianStream) -> Self {
        let mut rng = stream.rng_for(Purpose::Isometry);
        Self::random_with(&mut rng)
    }

    pub fn random_with<R: Rng + ?Sized>(rng: &mut R) -> Self {
        loop {
            let g: [f64; 4] = std::array::from_fn(|_| standard_normal(rng));
            let s = g.iter().map(|x| x * x).sum::<f64>();
            if s > 1e-20 {
                return Self::normalized(Complex64::new(g[0], g[1]), Complex64::new(g[2], g[3]));
            }
        }
    }

    /// Rotation taking `0` to `w`.
    pub fn recentering(w: SphereCoord) -> Self {
        match w {
            SphereCoord::Infinity => Self {
                alpha: Complex64::new(0.0, 0.0),
                beta: Complex64::new(1.0, 0.0),
            },
            SphereCoord::Finite(w) => Self::normalized(Complex64::new(1.0, 0.0), w),
        }
    }

    pub fn apply(&self, z: SphereCoord) -> SphereCoord {
        let (a, b) = (self.alpha, self.beta);
        match z {
            SphereCoord::Infinity => {
                if b == Complex64::new(0.0, 0.0) {
                    SphereCoord::Infinity
                } else {
                    SphereCoord::Finite(-a / b.conj())
                }
            }
            SphereCoord::Finite(z) => {
                if z.norm() <= 1.0 {
                    let den = a.conj() - b.conj() * z;
                    if den == Complex64::new(0.0, 0.0) {
                        SphereCoord::Infinity
                    } else {
                        SphereCoord::Finite((a * z + b) / den)
                    }
                } else {
                    let v = 1.0 / z;
                    let den = a.conj() * v - b.conj();
                    if den == Complex64::new(0.0, 0.0) {
                        SphereCoord::Infinity
                    } else {
                        SphereCoord::Finite((a + b * v) / den)
                    }
                }
            }
        }
    }

    /// [`Isometry::apply`] restricted to finite images.
    pub fn apply_finite(&self, z: Complex64) -> Option<Complex64> {
        self.apply(SphereCoord::Finite(z)).finite()
    }

    pub fn inverse(&self) -> Self {
        Self {
            alpha: self.alpha.conj(),
            beta: -self.beta,
        }
    }

    /// `self ∘ other`.
    pub fn compose(&self, other: &Isometry) -> Self {
        let (a1, b1) = (self.alpha, self.beta);
        let (a2, b2) = (other.alpha, other.beta);
        Self {
            alpha: a1 * a2 - b1 * b2.conj(),
            beta: a1 * b2 + b1 * a2.conj(),
        }
    }

    /// Unit factor `((ᾱ−β̄z)/|ᾱ−β̄z|)^n` relating `f̂^τ(z)` and `f̂(τ(z))`.
    pub fn phase_factor(&self, z: Complex64, n: usize) -> Complex64 {
        let d = self.alpha.conj() - self.beta.conj() * z;
        (Complex64::new(0.0, d.arg() * n as f64)).exp()
    }
}

/// Uniform point on the sphere, returned in planar coordinates.
pub fn sample_mu<R: Rng + ?Sized>(rng: &mut R) -> Complex64 {
    loop {
        let h: f64 = rng.random_range(-1.0..1.0);
        let phi: f64 = rng.random_range(0.0..2.0 * PI);
        if h < 1.0 {
            let r = ((1.0 + h) / (1.0 - h)).sqrt();
            return Complex64::from_polar(r, phi);
        }
    }
}

/// Uniform point on the sphere from a stream.
pub fn sample_mu_stream(stream: &ComplexGaussianStream) -> Complex64 {
    sample_mu(&mut stream.rng_for(Purpose::Points))
}

/// Density of the uniform measure with respect to Lebesgue measure on C.
pub fn mu_density(z: Complex64) -> f64 {
    let h = 1.0 + z.norm_sqr();
    1.0 / (PI * h * h)
}

/// μ-measure of a spherical cap of chordal radius `r`.
pub fn mu_cap(r: f64) -> f64 {
    let r = r.clamp(0.0, 2.0);
    r * r / 4.0
}

/// Where a configuration came from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ConfigSource {
    Roots,
    Uniform,
    Refined,
    Explicit,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SphericalConfiguration {
    points: Vec<SpherePoint>,
    source: ConfigSource,
}

impl SphericalConfiguration {
    pub fn from_planar<I>(points: I, source: ConfigSource) -> Self
    where
        I: IntoIterator,
        I::Item: Into<SphereCoord>,
    {
        Self {
            points: points.into_iter().map(SpherePoint::from_planar).collect(),
            source,
        }
    }

    pub fn from_cartesian(points: &[[f64; 3]], source: ConfigSource) -> Self {
        Self {
            points: points.iter().map(|&x| SpherePoint::from_cartesian(x)).collect(),
            source,
        }
    }

    /// `n` independent uniform points.
    pub fn uniform(n: usize, stream: &ComplexGaussianStream) -> Self {
        let mut rng = stream.rng_for(Purpose::Points);
        Self::from_planar((0..n).map(|_| sample_mu(&mut rng)), ConfigSource::Uniform)
    }

    pub fn points(&self) -> &[SpherePoint] {
        &self.points
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn source(&self) -> ConfigSource {
        self.source
    }

    pub fn cartesian(&self) -> Vec<[f64; 3]> {
        self.points.iter().map(SpherePoint::cartesian).collect()
    }

    pub fn with_source(mut self, source: ConfigSource) -> Self {
        self.source = source;
        self
    }

    pub fn transformed(&self, t: &Isometry) -> Self {
        Self {
            points: self
                .points
                .iter()
                .map(|p| SpherePoint::from_planar(t.apply(p.planar())))
                .collect(),
            source: self.source,
        }
    }

    /// No NaN coordinates and unit cartesian vectors to 1e-12.
    pub fn is_valid(&self) -> bool {
        self.points.iter().all(|p| {
            let c = p.cartesian();
            let n2 = c[0] * c[0] + c[1] * c[1] + c[2] * c[2];
            c.iter().all(|x| x.is_finite()) && (n2.sqrt() - 1.0).abs() < 1e-12
        })
    }
}

/// Explicit point lists as they appear in configuration files.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum ExplicitPoints {
    Planar(Vec<[f64; 2]>),
    Cartesian(Vec<[f64; 3]>),
}

impl ExplicitPoints {
    pub fn into_configuration(self) -> SphericalConfiguration {
        match self {
            ExplicitPoints::Planar(v) => SphericalConfiguration::from_planar(
                v.into_iter().map(|[re, im]| Complex64::new(re, im)),
                ConfigSource::Explicit,
            ),
            ExplicitPoints::Cartesian(v) => SphericalConfiguration::from_cartesian(&v, ConfigSource::Explicit),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }
    fn fin(re: f64, im: f64) -> SphereCoord {
        SphereCoord::Finite(c(re, im))
    }

    #[test]
    fn distance_examples() {
        assert_eq!(spherical_distance(fin(0.3, 0.4), fin(0.3, 0.4)), 0.0);
        assert_eq!(spherical_distance(fin(0.0, 0.0), SphereCoord::Infinity), 2.0);
        assert!((spherical_distance(fin(1.0, 0.0), fin(-1.0, 0.0)) - 2.0).abs() < 1e-15);
        assert_eq!(spherical_distance(SphereCoord::Infinity, SphereCoord::Infinity), 0.0);
    }

    #[test]
    fn poles() {
        assert_eq!(project(fin(0.0, 0.0)), [0.0, 0.0, -1.0]);
        assert_eq!(project(SphereCoord::Infinity), [0.0, 0.0, 1.0]);
        assert_eq!(unproject([0.0, 0.0, 1.0]), SphereCoord::Infinity);
        let a = project(fin(1.0, 0.0));
        let b = project(fin(-1.0, 0.0));
        let d = ((a[0] - b[0]).powi(2) + (a[1] - b[1]).powi(2) + (a[2] - b[2]).powi(2)).sqrt();
        assert!((d - 2.0).abs() < 1e-15);
    }

    #[test]
    fn round_trip_large_modulus() {
        for &r in &[1e-6, 0.5, 1.0, 3.0, 1e3, 1e6] {
            for k in 0..8 {
                let z = Complex64::from_polar(r, k as f64 * 0.8);
                let back = unproject(project(SphereCoord::Finite(z))).finite().unwrap();
                assert!((back - z).norm() <= 1e-12 * r.max(1.0), "r={r}");
            }
        }
    }

    #[test]
    fn isometry_examples() {
        let z = fin(0.7, -0.2);
        assert_eq!(Isometry::IDENTITY.apply(z), z);
        let t = Isometry::new(c(0.0, 0.0), c(1.0, 0.0)).unwrap();
        assert_eq!(t.apply(fin(1.0, 0.0)), fin(-1.0, 0.0));
        assert!(Isometry::new(c(1.0, 0.0), c(1.0, 0.0)).is_none());
        // the pole of the denominator goes to infinity
        let t = Isometry::normalized(c(1.0, 0.0), c(1.0, 0.0));
        assert_eq!(t.apply(fin(1.0, 0.0)), SphereCoord::Infinity);
    }

    #[test]
    fn recentering_moves_origin() {
        let w = fin(-0.4, 2.5);
        let t = Isometry::recentering(w);
        let img = t.apply(fin(0.0, 0.0)).finite().unwrap();
        assert!((img - w.finite().unwrap()).norm() < 1e-14);
        assert_eq!(
            Isometry::recentering(SphereCoord::Infinity).apply(fin(0.0, 0.0)),
            SphereCoord::Infinity
        );
    }

    #[test]
    fn inverse_and_composition() {
        let mut rng = ComplexGaussianStream::new(3, 3).rng();
        let s = Isometry::random_with(&mut rng);
        let t = Isometry::random_with(&mut rng);
        let z = fin(0.2, 1.7);
        let a = s.compose(&t).apply(z).finite().unwrap();
        let b = s.apply(t.apply(z)).finite().unwrap();
        assert!((a - b).norm() < 1e-12 * a.norm().max(1.0));
        let back = s.inverse().apply(s.apply(z)).finite().unwrap();
        assert!((back - z.finite().unwrap()).norm() < 1e-12);
    }

    #[test]
    fn mu_density_integrates_to_one_radially() {
        // ∫ dμ = ∫_0^∞ 2πr/(π(1+r²)²) dr, in r = tan(θ/2)
        let r = crate::quadrature::integrate(
            |t: f64| {
                let r = (t / 2.0).tan();
                let dr = 0.5 / (t / 2.0).cos().powi(2);
                2.0 * PI * r * mu_density(c(r, 0.0)) * dr
            },
            0.0,
            PI - 1e-9,
            &[],
            crate::quadrature::Tolerance::new(1e-13, 1e-13),
        )
        .unwrap();
        assert!((r.value - 1.0).abs() < 1e-8);
        assert_eq!(mu_cap(2.0), 1.0);
    }

    #[test]
    fn explicit_points_parse_both_forms() {
        #[derive(Deserialize)]
        struct Doc {
            points: ExplicitPoints,
        }
        let a: Doc = toml::from_str("points = [[0.0, 0.0], [1.0, 0.0]]").unwrap();
        let b: Doc = toml::from_str("points = [[0.0, 0.0, -2.0], [1.0, 0.0, 0.0]]").unwrap();
        let ca = a.points.into_configuration();
        let cb = b.points.into_configuration();
        for (p, q) in ca.points().iter().zip(cb.points()) {
            assert!(p.distance(q) < 1e-15);
        }
        assert!(cb.is_valid());
    }
}
