//! One- and two-point intensities of the zero set.
use kostlan::kacrice::{rho_2, rho_2_closed_form, rho_2_gap, rho_2_total_mass, rho_lmp_mc, DensityQuery};
use kostlan::quadrature::Tolerance;
use kostlan::{Complex64, ComplexGaussianStream};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let n = 50;
    println!(
        "∫∫ρ₂ = {:.6}  (n(n−1) = {})",
        rho_2_total_mass(n, Tolerance::new(1e-10, 1e-10))?,
        n * (n - 1)
    );
    for d in [0.05, 0.2, 0.5, 1.0, 1.9] {
        println!(
            "d={d:4}  ρ₂={:.8e}  ρ₂−n²={:+.6e}",
            rho_2_closed_form(d, n),
            rho_2_gap(d, n)
        );
    }
    let (z, w) = (Complex64::new(0.1, 0.2), Complex64::new(0.6, -0.3));
    println!("ρ₂ by conditioning at (z, w): {:.8e}", rho_2(z, w, n)?);

    let q = DensityQuery::new(vec![], vec![z], vec![1])?;
    let est = rho_lmp_mc(&q, n, 100_000, &ComplexGaussianStream::new(5, 0), None)?;
    println!(
        "Λ_(0,1,1) = {:.5} ± {:.5}  ((1−γ)/2 = 0.21139)",
        est.lambda, est.lambda_se
    );
    Ok(())
}
