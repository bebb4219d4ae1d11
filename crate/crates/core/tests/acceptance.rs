//! Full verification suite at the stated tolerances. One line per criterion;
//! the process exits non-zero if any criterion fails.

use kostlan::harness::verify::{run_suite, SuiteParams};

fn main() {
    let results = run_suite(SuiteParams::full(1), &mut |r| println!("{}", r.line()));
    let failed: Vec<&str> = results.iter().filter(|r| !r.passed).map(|r| r.id.as_str()).collect();
    println!(
        "acceptance: {} passed, {} failed{}",
        results.len() - failed.len(),
        failed.len(),
        if failed.is_empty() {
            String::new()
        } else {
            format!(" ({})", failed.join(", "))
        }
    );
    if !failed.is_empty() {
        std::process::exit(1);
    }
}
