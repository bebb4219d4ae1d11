use clap::Parser;
use kostlan::harness::{run, Cli};

fn main() {
    std::process::exit(run(Cli::parse()));
}
