use num_complex::Complex64;
use serde::Serialize;

use super::config::{Cli, Command, ResolvedConfig};
use super::io::{
    format_f64, write_clustering, write_csv, write_histogram, write_json, write_qq, write_records, write_trajectory,
};
use super::manifest::ExperimentManifest;
use super::verify::{run_suite, CriterionResult, SuiteParams};
use super::HarnessError;
use crate::constants::{c2_and_cstar, ConstantsReport};
use crate::energy::{decomposition_check, EnergyBreakdown};
use crate::kacrice::{
    clustering_gap, empirical_pair_counts, rho_2_closed_form, rho_2_gap, rho_2_total_mass, rho_lmp_mc, DensityEstimate,
    DensityQuery, PairCountComparison, DEGENERACY_THRESHOLD,
};
use crate::minimizer::{pipeline, DescentOptions, PipelineReport};
use crate::polymodel::EllipticPolynomial;
use crate::quadrature::Tolerance;
use crate::rng::ComplexGaussianStream;
use crate::roots::{find_roots, validate_roots, RootDiagnostics};
use crate::sphere::{project, SphereCoord};
use crate::stats::{
    histogram, qq_pairs, run_monte_carlo, standardize, summarize, RunConfig, Standardization, SummaryStats,
};

/// Parses flags, runs the command and maps the outcome to an exit code:
/// 0 on success, 1 when verification fails, 2 on any other error.
pub fn run(cli: Cli) -> i32 {
    let cfg = match ResolvedConfig::from_cli(cli.command, &cli.flags) {
        Ok(cfg) => cfg,
        Err(e) => {
            eprintln!("error: {e}");
            return 2;
        }
    };
    print!("{}", cfg.echo());
    match run_command(&cfg) {
        Ok(m) => {
            println!("wrote {} files to {}", m.outputs.len() + 1, m.dir().display());
            0
        }
        Err(HarnessError::VerifyFailed { failed, total }) => {
            eprintln!("verification: {failed} of {total} criteria failed");
            1
        }
        Err(e) => {
            eprintln!("error: {e}");
            2
        }
    }
}

pub fn run_command(cfg: &ResolvedConfig) -> Result<ExperimentManifest, HarnessError> {
    if let Some(t) = cfg.threads {
        // a pool that already exists keeps its size
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(t).build_global() {
            if rayon::current_num_threads() != t {
                return Err(HarnessError::Threads(e.to_string()));
            }
        }
    }
    let mut manifest = ExperimentManifest::begin(cfg);
    std::fs::create_dir_all(manifest.dir()).map_err(|source| HarnessError::Io {
        path: manifest.dir().to_path_buf(),
        source,
    })?;
    let verdict = match cfg.command {
        Command::Sample => sample(cfg, &mut manifest),
        Command::Mc => mc(cfg, &mut manifest),
        Command::Constants => constants(cfg, &mut manifest),
        Command::Kacrice => kacrice(cfg, &mut manifest),
        Command::Minimize => minimize(cfg, &mut manifest),
        Command::Verify => verify(cfg, &mut manifest),
    };
    let manifest = manifest.finish()?;
    verdict.map(|()| manifest)
}

fn tolerance(cfg: &ResolvedConfig) -> Tolerance {
    Tolerance::new(cfg.quad_tol * 1e-2, cfg.quad_tol)
}

#[derive(Serialize)]
struct SampleSummary {
    n: usize,
    seed: u64,
    energy: EnergyBreakdown,
    diagnostics: RootDiagnostics,
}

fn sample(cfg: &ResolvedConfig, m: &mut ExperimentManifest) -> Result<(), HarnessError> {
    let p = EllipticPolynomial::sample(cfg.n, &ComplexGaussianStream::new(cfg.seed, 0));
    let rs = find_roots(&p)?;
    let energy = decomposition_check(&p, &rs)?;
    write_csv(
        &m.path("coefficients.csv"),
        &["j", "re", "im"],
        p.raw_coeffs()
            .iter()
            .enumerate()
            .map(|(j, c)| vec![j.to_string(), format_f64(c.re), format_f64(c.im)]),
    )?;
    m.record("coefficients.csv")?;
    write_csv(
        &m.path("roots.csv"),
        &["index", "re", "im", "x", "y", "z", "residual"],
        rs.roots().iter().zip(rs.residuals()).enumerate().map(|(k, (z, res))| {
            let x = project(SphereCoord::Finite(*z));
            vec![
                k.to_string(),
                format_f64(z.re),
                format_f64(z.im),
                format_f64(x[0]),
                format_f64(x[1]),
                format_f64(x[2]),
                format_f64(*res),
            ]
        }),
    )?;
    m.record("roots.csv")?;
    let summary = SampleSummary {
        n: cfg.n,
        seed: cfg.seed,
        energy,
        diagnostics: validate_roots(&p, &rs),
    };
    write_json(&m.path("sample.json"), &summary)?;
    m.record("sample.json")?;
    println!(
        "n = {}: E = {:.10}, I = {:.10}, S = {:.10}, identity residual {:.2e}",
        cfg.n, energy.e_n, energy.i_n, energy.s_n, energy.identity_residual
    );
    Ok(())
}

#[derive(Serialize)]
struct McSummary<'a> {
    c_star: f64,
    stats: &'a SummaryStats,
    failures: Vec<(u64, String)>,
    max_invariance_residual: Option<f64>,
}

fn mc(cfg: &ResolvedConfig, m: &mut ExperimentManifest) -> Result<(), HarnessError> {
    let run = RunConfig {
        n: cfg.n,
        samples: cfg.samples,
        master_seed: cfg.seed,
        invariance_checks: cfg.invariance_checks,
        timing: cfg.timing,
    };
    let records = run_monte_carlo(&run)?;
    write_records(&m.path("records.csv"), &records)?;
    m.record("records.csv")?;
    let (_, c_star) = c2_and_cstar(tolerance(cfg))?;
    let stats = summarize(&records, cfg.n, c_star.value)?;
    let e: Vec<f64> = records.iter().filter(|r| !r.is_failed()).map(|r| r.e_n).collect();
    write_histogram(&m.path("histogram.csv"), &histogram(&e, 40))?;
    m.record("histogram.csv")?;
    write_qq(
        &m.path("qq.csv"),
        &qq_pairs(&standardize(&e, Standardization::SampleMoments)),
    )?;
    m.record("qq.csv")?;
    write_csv(
        &m.path("tails.csv"),
        &[
            "t",
            "threshold",
            "count",
            "fraction",
            "wilson_low",
            "wilson_high",
            "gaussian",
        ],
        stats.tails.iter().map(|r| {
            vec![
                format_f64(r.t),
                format_f64(r.threshold),
                r.count.to_string(),
                format_f64(r.fraction),
                format_f64(r.wilson_low),
                format_f64(r.wilson_high),
                format_f64(r.gaussian),
            ]
        }),
    )?;
    m.record("tails.csv")?;
    let summary = McSummary {
        c_star: c_star.value,
        stats: &stats,
        failures: records
            .iter()
            .filter_map(|r| r.failure.clone().map(|f| (r.sample_index, f)))
            .collect(),
        max_invariance_residual: records.iter().filter_map(|r| r.invariance_residual).reduce(f64::max),
    };
    write_json(&m.path("summary.json"), &summary)?;
    m.record("summary.json")?;
    let k = stats.energy;
    println!("n = {}, M = {} ({} failed)", cfg.n, cfg.samples, stats.failures);
    println!(
        "mean E   {:.6} ± {:.6} (expected {:.6})",
        k.k1, k.se_k1, stats.expected_energy
    );
    println!(
        "k2/n     {:.6} ± {:.6} (c* = {:.6})",
        stats.k2_over_n,
        k.se_k2 / cfg.n as f64,
        c_star.value
    );
    println!(
        "skewness {:.4}, excess kurtosis {:.4}",
        k.skewness(),
        k.excess_kurtosis()
    );
    if let (Some(a), Some(b)) = (stats.ks_sample, stats.ks_analytic) {
        println!(
            "KS p     {:.4} (sample moments), {:.4} (analytic)",
            a.p_value, b.p_value
        );
    }
    Ok(())
}

fn constants(cfg: &ResolvedConfig, m: &mut ExperimentManifest) -> Result<(), HarnessError> {
    let report = ConstantsReport::compute(tolerance(cfg))?;
    write_json(&m.path("constants.json"), &report)?;
    m.record("constants.json")?;
    for (name, value, err) in report.table() {
        println!("{name:<14} {value:>20.15} ± {err:.1e}");
    }
    for c in &report.bounds.checks {
        println!("{} {}", if c.passed { "ok  " } else { "FAIL" }, c.name);
    }
    Ok(())
}

#[derive(Serialize)]
struct KacRiceSummary {
    n: usize,
    total_mass: f64,
    ordered_pairs: f64,
    pair_counts: Vec<PairCountComparison>,
    lambda_011: DensityEstimate,
    lambda_10: DensityEstimate,
    clustering_slope: f64,
    clustering_intercept: f64,
}

fn kacrice(cfg: &ResolvedConfig, m: &mut ExperimentManifest) -> Result<(), HarnessError> {
    let n = cfg.n;
    let nf = n as f64;
    let tol = tolerance(cfg);
    let d_min = 2.0 * DEGENERACY_THRESHOLD / nf.sqrt();
    let grid = 4 * cfg.grid_points;
    write_csv(
        &m.path("rho2_grid.csv"),
        &["d", "rho2_over_n2", "gap_over_n2"],
        (0..grid).map(|k| {
            let d = d_min + (2.0 - d_min) * k as f64 / (grid - 1) as f64;
            vec![
                format_f64(d),
                format_f64(rho_2_closed_form(d, n) / (nf * nf)),
                format_f64(rho_2_gap(d, n) / (nf * nf)),
            ]
        }),
    )?;
    m.record("rho2_grid.csv")?;
    let edges = [0.0, 0.1, 0.2, 0.3, 0.5, 1.0, 2.0];
    let pair_counts = empirical_pair_counts(n, cfg.samples, &edges, cfg.seed, tol)?;
    write_csv(
        &m.path("pair_counts.csv"),
        &["lower", "upper", "expected", "observed_mean", "observed_se"],
        pair_counts.iter().map(|r| {
            vec![
                format_f64(r.lower),
                format_f64(r.upper),
                format_f64(r.expected),
                format_f64(r.observed_mean),
                format_f64(r.observed_se),
            ]
        }),
    )?;
    m.record("pair_counts.csv")?;
    let fit = clustering_gap(
        n,
        cfg.grid_points,
        cfg.pairs_per_distance,
        &ComplexGaussianStream::new(cfg.seed, 1),
    );
    write_clustering(&m.path("clustering.csv"), &fit)?;
    m.record("clustering.csv")?;
    let z = Complex64::new(0.3, -0.2);
    let stream = ComplexGaussianStream::new(cfg.seed, 2);
    let lambda_011 = rho_lmp_mc(&DensityQuery::new(vec![], vec![z], vec![1])?, n, 100_000, &stream, None)?;
    let lambda_10 = rho_lmp_mc(
        &DensityQuery::new(vec![z], vec![], vec![])?,
        n,
        100_000,
        &stream.with_index(3),
        None,
    )?;
    let summary = KacRiceSummary {
        n,
        total_mass: rho_2_total_mass(n, tol)?,
        ordered_pairs: nf * (nf - 1.0),
        pair_counts,
        lambda_011,
        lambda_10,
        clustering_slope: fit.slope,
        clustering_intercept: fit.intercept,
    };
    write_json(&m.path("kacrice.json"), &summary)?;
    m.record("kacrice.json")?;
    println!(
        "total mass {:.6} (n(n-1) = {})",
        summary.total_mass, summary.ordered_pairs
    );
    for r in &summary.pair_counts {
        println!(
            "pairs [{:.2}, {:.2}): observed {:.3} ± {:.3}, expected {:.3}",
            r.lower, r.upper, r.observed_mean, r.observed_se, r.expected
        );
    }
    println!("Lambda_(0,1,1) {:.5} ± {:.5}", lambda_011.lambda, lambda_011.lambda_se);
    println!("Lambda_(1,0)   {:.5} ± {:.5}", lambda_10.lambda, lambda_10.lambda_se);
    println!("clustering slope {:.5}", fit.slope);
    Ok(())
}

fn minimize(cfg: &ResolvedConfig, m: &mut ExperimentManifest) -> Result<(), HarnessError> {
    let opts = DescentOptions {
        max_iterations: cfg.max_iterations,
        ..Default::default()
    };
    let (report, outcome): (PipelineReport, _) = pipeline(cfg.n, cfg.seed, &opts)?;
    write_trajectory(&m.path("trajectory.csv"), &outcome.trajectory)?;
    m.record("trajectory.csv")?;
    write_csv(
        &m.path("final_points.csv"),
        &["x", "y", "z"],
        outcome
            .last
            .config
            .cartesian()
            .iter()
            .map(|x| x.iter().map(|v| format_f64(*v)).collect()),
    )?;
    m.record("final_points.csv")?;
    write_json(&m.path("minimize.json"), &report)?;
    m.record("minimize.json")?;
    println!(
        "n = {}: start {:.6}, end {:.6} after {} steps ({:?}), min band [{:.6}, {:.6}]",
        report.n,
        report.start_energy,
        report.end_energy,
        report.iterations,
        report.status,
        report.reference.min_lower,
        report.reference.min_upper
    );
    Ok(())
}

fn verify(cfg: &ResolvedConfig, m: &mut ExperimentManifest) -> Result<(), HarnessError> {
    let params = SuiteParams {
        quick: cfg.quick,
        seed: cfg.seed,
    };
    let results: Vec<CriterionResult> = run_suite(params, &mut |r| println!("{}", r.line()));
    write_json(&m.path("verify.json"), &results)?;
    m.record("verify.json")?;
    let failed = results.iter().filter(|r| !r.passed).count();
    if failed > 0 {
        return Err(HarnessError::VerifyFailed {
            failed,
            total: results.len(),
        });
    }
    Ok(())
}
