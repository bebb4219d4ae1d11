use kostlan::energy::{pairwise_energy, reference_curves};
use kostlan::minimizer::{energy_difference, energy_gradient, pipeline, DescentOptions};
use kostlan::rng::{standard_normal, ComplexGaussianStream};
use kostlan::stats::{concentration_check, k_statistics, normality_test, standardize, Standardization};
use kostlan::SphericalConfiguration;
use proptest::prelude::*;

fn normals(seed: u64, stream: u64, m: usize) -> Vec<f64> {
    let mut rng = ComplexGaussianStream::new(seed, stream).rng();
    (0..m).map(|_| standard_normal(&mut rng)).collect()
}

#[test]
fn ks_accepts_normal_data_at_the_nominal_rate() {
    let passed = (0..100)
        .filter(|&trial| {
            let x = normals(589, trial, 100_000);
            normality_test(&x).unwrap().p_value > 0.01
        })
        .count();
    assert!(passed >= 98, "{passed}/100");
}

#[test]
fn ks_p_values_look_uniform() {
    let p: Vec<f64> = (0..200)
        .map(|t| normality_test(&normals(590, t, 2000)).unwrap().p_value)
        .collect();
    let mean = p.iter().sum::<f64>() / p.len() as f64;
    // Var U = 1/12
    assert!(
        (mean - 0.5).abs() < 5.0 * (1.0 / 12.0 / p.len() as f64).sqrt(),
        "{mean}"
    );
}

#[test]
fn far_tail_is_empty() {
    let m = 10_000;
    let n = 100;
    let c = 0.09;
    let values: Vec<f64> = normals(599, 0, m).iter().map(|z| z * (c * n as f64).sqrt()).collect();
    let k = k_statistics(&values).unwrap();
    // 2Φ̄(T/√(k2/n)) < 1e-8 ≪ 1/M
    let t = 6.0 * (k.k2 / n as f64).sqrt();
    let rows = concentration_check(&values, k.k1, n, &[t], c, 2.576);
    assert_eq!(rows[0].count, 0);
    assert!(rows[0].gaussian < 1.0 / m as f64);
    assert!(rows[0].wilson_low == 0.0);
}

// (E(x+hv) − E(x−hv))/2h for the energy extended off the sphere, pair by
// pair from ln(|a+hw|²/|a−hw|²).
fn directional_fd(x: &[[f64; 3]], v: &[[f64; 3]], h: f64) -> f64 {
    let mut acc = 0.0;
    for i in 0..x.len() {
        for j in i + 1..x.len() {
            let a: [f64; 3] = std::array::from_fn(|k| x[i][k] - x[j][k]);
            let w: [f64; 3] = std::array::from_fn(|k| v[i][k] - v[j][k]);
            let a2 = a[0] * a[0] + a[1] * a[1] + a[2] * a[2];
            let aw = a[0] * w[0] + a[1] * w[1] + a[2] * w[2];
            let w2 = w[0] * w[0] + w[1] * w[1] + w[2] * w[2];
            let up = ((2.0 * h * aw + h * h * w2) / a2).ln_1p();
            let down = ((-2.0 * h * aw + h * h * w2) / a2).ln_1p();
            acc -= up - down;
        }
    }
    acc / (2.0 * h)
}

fn tangent(x: &[[f64; 3]], seed: u64) -> Vec<[f64; 3]> {
    let mut rng = ComplexGaussianStream::new(seed, 9).rng();
    x.iter()
        .map(|xi| {
            let v: [f64; 3] = std::array::from_fn(|_| standard_normal(&mut rng));
            let dot = v[0] * xi[0] + v[1] * xi[1] + v[2] * xi[2];
            [v[0] - dot * xi[0], v[1] - dot * xi[1], v[2] - dot * xi[2]]
        })
        .collect()
}

#[test]
fn descent_over_seeds_at_degree_200() {
    let opts = DescentOptions {
        max_iterations: 1500,
        ..Default::default()
    };
    for seed in 0..3 {
        let (r, _) = pipeline(200, 657 + seed, &opts).unwrap();
        assert!(r.end_excess_per_n >= 0.0, "{r:?}");
        assert!(r.end_excess_per_n < r.start_excess_per_n, "{r:?}");
        assert!(r.end_energy >= reference_curves(200).min_lower);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn gradient_matches_central_differences(seed in any::<u64>(), n in 3usize..16) {
        let cfg = SphericalConfiguration::uniform(n, &ComplexGaussianStream::new(seed, 0));
        let x = cfg.cartesian();
        let min_d = (0..n)
            .flat_map(|i| (i + 1..n).map(move |j| (i, j)))
            .map(|(i, j)| ((x[i][0] - x[j][0]).powi(2) + (x[i][1] - x[j][1]).powi(2) + (x[i][2] - x[j][2]).powi(2)).sqrt())
            .fold(f64::INFINITY, f64::min);
        prop_assume!(min_d > 0.05);
        let v = tangent(&x, seed);
        let g = energy_gradient(&x).unwrap();
        let exact: f64 = g.iter().zip(&v).map(|(a, b)| a[0] * b[0] + a[1] * b[1] + a[2] * b[2]).sum();
        let e4 = (directional_fd(&x, &v, 1e-4) - exact).abs();
        let e5 = (directional_fd(&x, &v, 1e-5) - exact).abs();
        prop_assert!(e5 <= 1e-6 * exact.abs().max(1.0), "{} {}", e4, e5);
        // below the rounding level the order is not observable
        if e5 > 1e-13 * exact.abs().max(1.0) {
            let order = (e4 / e5).log10();
            prop_assert!(order >= 1.9, "order {} ({} {})", order, e4, e5);
        }
    }

    #[test]
    fn difference_agrees_with_direct_energies(seed in any::<u64>(), n in 2usize..30) {
        let s = ComplexGaussianStream::new(seed, 0);
        let a = SphericalConfiguration::uniform(n, &s);
        let b = SphericalConfiguration::uniform(n, &s.with_index(1));
        let direct = pairwise_energy(&b).unwrap() - pairwise_energy(&a).unwrap();
        let (de, _) = energy_difference(&a.cartesian(), &b.cartesian());
        prop_assert!((de - direct).abs() <= 1e-10 * (1.0 + direct.abs()) * n as f64);
    }

    #[test]
    fn k_statistics_shift_and_scale(seed in any::<u64>(), shift in -50.0f64..50.0, scale in 0.1f64..10.0) {
        let x: Vec<f64> = normals(seed, 0, 200).iter().map(|z| z.exp()).collect();
        let y: Vec<f64> = x.iter().map(|v| scale * v + shift).collect();
        let kx = k_statistics(&x).unwrap();
        let ky = k_statistics(&y).unwrap();
        let tol = 1e-9;
        prop_assert!((ky.k1 - (scale * kx.k1 + shift)).abs() <= tol * (ky.k1.abs() + 1.0));
        prop_assert!((ky.k2 - scale.powi(2) * kx.k2).abs() <= tol * ky.k2.abs());
        prop_assert!((ky.k3 - scale.powi(3) * kx.k3).abs() <= tol * ky.k3.abs().max(scale.powi(3)));
        prop_assert!((ky.k4 - scale.powi(4) * kx.k4).abs() <= tol * ky.k4.abs().max(scale.powi(4)));
        prop_assert!((ky.skewness() - kx.skewness()).abs() <= 1e-8);
        prop_assert!((ky.se_k2 - scale.powi(2) * kx.se_k2).abs() <= 1e-8 * ky.se_k2);
    }

    #[test]
    fn standardized_data_has_zero_mean_unit_variance(seed in any::<u64>(), shift in -5.0f64..5.0) {
        let x: Vec<f64> = normals(seed, 1, 500).iter().map(|z| 3.0 * z + shift).collect();
        let z = standardize(&x, Standardization::SampleMoments);
        let k = k_statistics(&z).unwrap();
        prop_assert!(k.k1.abs() < 1e-12);
        prop_assert!((k.k2 - 1.0).abs() < 1e-12);
    }
}
