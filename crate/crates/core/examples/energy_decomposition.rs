//! Logarithmic energy of the roots and its split into I_n and S_n.
use kostlan::energy::{decomposition_check, expected_energy, reference_curves};
use kostlan::{find_roots, ComplexGaussianStream, EllipticPolynomial};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    for n in [10, 100, 400] {
        let p = EllipticPolynomial::sample(n, &ComplexGaussianStream::new(11, n as u64));
        let b = decomposition_check(&p, &find_roots(&p)?)?;
        let r = reference_curves(n);
        println!(
            "n={n:4}  E={:14.6}  I={:12.6}  S={:12.6}  residual={:.2e}",
            b.e_n, b.i_n, b.s_n, b.identity_residual
        );
        println!(
            "        E[E]={:14.6}  min band [{:.3}, {:.3}]  uniform mean {:.3}",
            expected_energy(n),
            r.min_lower,
            r.min_upper,
            r.uniform_mean
        );
    }
    Ok(())
}
