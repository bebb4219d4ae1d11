//! Gradient descent on the energy, started from the roots.
use kostlan::minimizer::{pipeline, DescentOptions};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let opts = DescentOptions {
        max_iterations: 3000,
        ..Default::default()
    };
    let (report, outcome) = pipeline(100, 4, &opts)?;
    println!("status {:?} after {} iterations", report.status, report.iterations);
    println!("energy {:.6} -> {:.6}", report.start_energy, report.end_energy);
    println!(
        "excess over band per point {:.5} -> {:.5}",
        report.start_excess_per_n, report.end_excess_per_n
    );
    for t in outcome.trajectory.iter().step_by(outcome.trajectory.len() / 8 + 1) {
        println!("  {:5}  {:.8}  |g|={:.3e}", t.iteration, t.energy, t.grad_norm);
    }
    Ok(())
}
