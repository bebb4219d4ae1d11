//! Draw one random elliptic polynomial, find its roots and check them.
use kostlan::roots::validate_roots;
use kostlan::sphere::project;
use kostlan::{find_roots, ComplexGaussianStream, EllipticPolynomial, SphereCoord};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let n = 50;
    let p = EllipticPolynomial::sample(n, &ComplexGaussianStream::new(7, 0));
    let rs = find_roots(&p)?;
    let diag = validate_roots(&p, &rs);
    println!("degree {n}: {} roots after {} sweeps", rs.len(), rs.sweeps());
    println!(
        "max residual {:.3e}, Vieta sum error {:.3e}",
        diag.max_residual, diag.sum_error
    );
    for z in rs.roots().iter().take(5) {
        let x = project(SphereCoord::Finite(*z));
        println!("  {z:.6}  ->  ({:+.6}, {:+.6}, {:+.6})", x[0], x[1], x[2]);
    }
    Ok(())
}
