//! The limiting variance constant and its ingredients.
use kostlan::constants::ConstantsReport;
use kostlan::quadrature::Tolerance;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let report = ConstantsReport::compute(Tolerance::new(1e-12, 1e-11))?;
    for (name, value, error) in report.table() {
        println!("{name:>10} = {value:+.10}  ± {error:.1e}");
    }
    for check in &report.bounds.checks {
        println!("{:<40} {}", check.name, if check.passed { "ok" } else { "off" });
    }
    Ok(())
}
