//! Monte Carlo of the energy at fixed degree with normality diagnostics.
use kostlan::stats::{run_monte_carlo, summarize, RunConfig};

const C_STAR: f64 = 0.090745986;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let cfg = RunConfig::new(100, 1000, 17);
    let records = run_monte_carlo(&cfg)?;
    let s = summarize(&records, cfg.n, C_STAR)?;
    println!("n={} M={} failures={}", s.n, s.samples, s.failures);
    println!(
        "mean E = {:.4} ± {:.4}, expected {:.4}",
        s.energy.k1, s.energy.se_k1, s.expected_energy
    );
    println!("Var E / n = {:.5} (c* = {C_STAR})", s.k2_over_n);
    println!(
        "skewness {:+.4}, excess kurtosis {:+.4}",
        s.energy.skewness(),
        s.energy.excess_kurtosis()
    );
    if let Some(ks) = s.ks_sample {
        println!("KS D = {:.5}, p = {:.4}", ks.statistic, ks.p_value);
    }
    for row in &s.tails {
        println!(
            "T={:.1}: {:.4} in [{:.4}, {:.4}], gaussian {:.4}",
            row.t, row.fraction, row.wilson_low, row.wilson_high, row.gaussian
        );
    }
    Ok(())
}
