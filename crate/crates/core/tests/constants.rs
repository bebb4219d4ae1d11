use kostlan::constants::{c1, c1_gef_monte_carlo, laguerre_orthogonality_check};
use kostlan::quadrature::Tolerance;
use kostlan::rng::ComplexGaussianStream;

#[test]
fn c1_from_gaussian_entire_function_samples() {
    let (series, _) = c1(Tolerance::default()).unwrap();
    let est = c1_gef_monte_carlo(150_000, 3.0, 17, 6, &ComplexGaussianStream::new(478, 0)).unwrap();
    let rel = (est.value - series.value).abs() / series.value;
    assert!(rel < 0.03, "{est:?} vs {}", series.value);
    assert!((est.value - series.value).abs() < 5.0 * est.error);
}

#[test]
fn laguerre_cells_follow_theta_powers() {
    let s = ComplexGaussianStream::new(523, 0);
    for theta in [0.0, 0.5, 0.9] {
        for cell in laguerre_orthogonality_check(theta, 3, 50_000, &s) {
            let want = if cell.m == cell.k {
                theta.powi(2 * cell.m as i32)
            } else {
                0.0
            };
            assert!(
                (cell.mean - want).abs() < 5.0 * cell.standard_error.max(1e-12),
                "θ={theta} {cell:?}"
            );
            assert_eq!(cell.expected, want);
        }
    }
}
