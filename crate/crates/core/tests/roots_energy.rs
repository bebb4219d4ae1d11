use kostlan::energy::{decomposition_check, i_n_by_quadrature, i_n_from_roots, pairwise_energy, s_n_from_roots};
use kostlan::quadrature::Tolerance;
use kostlan::rng::{complex_gaussian, ComplexGaussianStream};
use kostlan::roots::{refine_root, validate_roots};
use kostlan::sphere::{spherical_distance, ConfigSource};
use kostlan::{find_roots, Complex64, EllipticPolynomial, Isometry, SphereCoord, SphericalConfiguration};
use proptest::prelude::*;

fn sample(n: usize, seed: u64) -> EllipticPolynomial {
    EllipticPolynomial::sample(n, &ComplexGaussianStream::new(seed, n as u64))
}

#[test]
fn vieta_relations_at_degree_100() {
    for seed in 0..5 {
        let p = sample(100, seed);
        let rs = find_roots(&p).unwrap();
        let c = p.weighted_coeffs();
        let sum: Complex64 = rs.roots().iter().sum();
        let abs: f64 = rs.roots().iter().map(|z| z.norm()).sum();
        assert!((sum + c[99] / c[100]).norm() <= 1e-8 * (1.0 + abs));
        let log_prod: f64 = rs.roots().iter().map(|z| z.norm().ln()).sum();
        assert!((log_prod - (c[0] / c[100]).norm().ln()).abs() <= 1e-8 * 100.0);
        assert!(validate_roots(&p, &rs).pass);
    }
}

#[test]
fn perturbed_root_is_recovered() {
    let p = sample(100, 223);
    let rs = find_roots(&p).unwrap();
    for &z in rs.roots().iter().step_by(10) {
        let start = z + 1e-6;
        let before = p.eval_normalized(start).unwrap().norm();
        let refined = refine_root(&p, start).unwrap();
        let after = p.eval_normalized(refined).unwrap().norm();
        assert!(after * 1e3 <= before, "{before} -> {after}");
        let d = spherical_distance(SphereCoord::Finite(z), SphereCoord::Finite(refined));
        assert!(d < 1e-10);
    }
}

#[test]
fn log_integral_by_quadrature_at_degree_20() {
    for seed in [293, 294] {
        let p = sample(20, seed);
        let rs = find_roots(&p).unwrap();
        let exact = i_n_from_roots(&p, &rs).unwrap();
        let quad = i_n_by_quadrature(&p, rs.roots(), Tolerance::new(1e-8, 1e-7)).unwrap();
        assert!((quad - exact).abs() <= 1e-4 * exact.abs(), "{quad} vs {exact}");
    }
}

#[test]
fn hand_built_degree_one() {
    // f = z with a_1 = 1
    let p = EllipticPolynomial::from_raw(vec![Complex64::new(0.0, 0.0), Complex64::new(1.0, 0.0)]).unwrap();
    let rs = find_roots(&p).unwrap();
    assert!(rs.roots()[0].norm() < 1e-15);
    assert!((i_n_from_roots(&p, &rs).unwrap() + 0.5).abs() < 1e-15);
    assert!(s_n_from_roots(&p, &rs).unwrap().abs() < 1e-15);
}

fn random_roots(seed: u64, n: usize) -> Vec<Complex64> {
    let mut rng = ComplexGaussianStream::new(seed, 7).rng();
    (0..n).map(|_| complex_gaussian(&mut rng) * 1.5).collect()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn from_roots_round_trip(seed in any::<u64>(), n in 1usize..15) {
        let roots = random_roots(seed, n);
        let p = EllipticPolynomial::from_roots(Complex64::new(0.7, -0.2), &roots).unwrap();
        let found = find_roots(&p).unwrap();
        for r in &roots {
            let nearest = found
                .roots()
                .iter()
                .map(|z| spherical_distance(SphereCoord::Finite(*z), SphereCoord::Finite(*r)))
                .fold(f64::INFINITY, f64::min);
            prop_assert!(nearest < 1e-7, "root {} missed by {}", r, nearest);
        }
    }

    #[test]
    fn energy_is_isometry_invariant(seed in any::<u64>(), n in 2usize..40) {
        let s = ComplexGaussianStream::new(seed, 0);
        let cfg = SphericalConfiguration::uniform(n, &s);
        let t = Isometry::random(&s);
        let a = pairwise_energy(&cfg).unwrap();
        let b = pairwise_energy(&cfg.transformed(&t)).unwrap();
        prop_assert!((a - b).abs() < 1e-10 * (1.0 + a.abs()), "{} vs {}", a, b);
    }

    #[test]
    fn split_is_stable_under_isometry(seed in any::<u64>(), n in 2usize..40) {
        let s = ComplexGaussianStream::new(seed, 1);
        let p = EllipticPolynomial::sample(n, &s);
        let q = p.transformed(&Isometry::random(&s));
        let bp = decomposition_check(&p, &find_roots(&p).unwrap()).unwrap();
        let bq = decomposition_check(&q, &find_roots(&q).unwrap()).unwrap();
        let scale = 1.0 + bp.e_n.abs();
        prop_assert!(bp.identity_residual <= 1e-10 * scale);
        prop_assert!(bq.identity_residual <= 1e-10 * scale);
        prop_assert!((bp.e_n - bq.e_n).abs() <= 1e-8 * scale, "{} vs {}", bp.e_n, bq.e_n);
        prop_assert!((bp.i_n - bq.i_n).abs() <= 1e-8 * scale);
        prop_assert!((bp.s_n - bq.s_n).abs() <= 1e-8 * scale);
    }

    #[test]
    fn roots_as_configuration_match_breakdown(seed in any::<u64>(), n in 2usize..30) {
        let p = sample(n, seed);
        let rs = find_roots(&p).unwrap();
        let cfg = SphericalConfiguration::from_planar(rs.roots().iter().copied(), ConfigSource::Roots);
        let e = pairwise_energy(&cfg).unwrap();
        let b = decomposition_check(&p, &rs).unwrap();
        prop_assert!((b.e_n - e).abs() <= 1e-12 * (1.0 + e.abs()));
    }
}
