//! Rotations of the sphere acting on the extended plane.
use kostlan::sphere::spherical_distance;
use kostlan::{Complex64, ComplexGaussianStream, Isometry, SphereCoord};

fn main() {
    let t = Isometry::random(&ComplexGaussianStream::new(3, 0));
    let a = SphereCoord::Finite(Complex64::new(0.5, -1.0));
    let b = SphereCoord::Finite(Complex64::new(-2.0, 0.25));
    println!("alpha = {:.6}, beta = {:.6}", t.alpha, t.beta);
    println!("d(a, b)       = {:.15}", spherical_distance(a, b));
    println!("d(τa, τb)     = {:.15}", spherical_distance(t.apply(a), t.apply(b)));
    println!("τ(∞)          = {:?}", t.apply(SphereCoord::Infinity));
    let back = t.inverse().apply(t.apply(a));
    println!("τ⁻¹τa − a     = {:.3e}", spherical_distance(back, a));
    let flip = Isometry::new(Complex64::new(0.0, 0.0), Complex64::new(1.0, 0.0)).unwrap();
    println!(
        "z ↦ −1/z at 1 = {:?}",
        flip.apply(SphereCoord::Finite(Complex64::new(1.0, 0.0)))
    );
}
