use std::fmt;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use serde::{Deserialize, Serialize};

use super::HarnessError;

pub const ENV_OUT_DIR: &str = "KOSTLAN_OUT_DIR";
pub const ENV_THREADS: &str = "KOSTLAN_THREADS";

#[derive(Debug, Parser)]
#[command(
    name = "kostlan-lab",
    version,
    about = "Experiments on zeros of random elliptic polynomials"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
    #[command(flatten)]
    pub flags: Flags,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Subcommand, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Command {
    /// Sample one polynomial and dump its coefficients and roots
    Sample,
    /// Monte Carlo run of the energy and its split
    Mc,
    /// Variance constants and the integral bounds
    Constants,
    /// Kac-Rice intensities, pair counts and clustering decay
    Kacrice,
    /// Gradient descent from the zeros of a random polynomial
    Minimize,
    /// Run the verification suite
    Verify,
}

impl Command {
    pub fn name(self) -> &'static str {
        match self {
            Command::Sample => "sample",
            Command::Mc => "mc",
            Command::Constants => "constants",
            Command::Kacrice => "kacrice",
            Command::Minimize => "minimize",
            Command::Verify => "verify",
        }
    }
}

#[derive(Debug, Clone, Default, Args)]
pub struct Flags {
    /// TOML config file
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Polynomial degree
    #[arg(long, global = true, allow_negative_numbers = true)]
    pub n: Option<i64>,
    #[arg(long, global = true, allow_negative_numbers = true)]
    pub samples: Option<i64>,
    /// Output directory
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    #[arg(long, global = true, allow_negative_numbers = true)]
    pub threads: Option<i64>,
    /// Reduced verification parameters
    #[arg(long, global = true)]
    pub quick: bool,
}

/// Keys accepted in a config file. Unknown keys are an error.
#[derive(Debug, Clone, Default, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FileConfig {
    pub seed: Option<u64>,
    pub n: Option<i64>,
    pub samples: Option<i64>,
    pub out: Option<PathBuf>,
    pub threads: Option<i64>,
    pub quick: Option<bool>,
    pub timing: Option<bool>,
    pub invariance_checks: Option<bool>,
    pub quad_tol: Option<f64>,
    pub max_iterations: Option<i64>,
    pub grid_points: Option<i64>,
    pub pairs_per_distance: Option<i64>,
}

impl FileConfig {
    pub fn parse(text: &str, path: &Path) -> Result<Self, HarnessError> {
        toml::from_str(text).map_err(|source| HarnessError::ConfigParse {
            path: path.to_path_buf(),
            source,
        })
    }

    pub fn load(path: &Path) -> Result<Self, HarnessError> {
        let text = std::fs::read_to_string(path).map_err(|source| HarnessError::ConfigRead {
            path: path.to_path_buf(),
            source,
        })?;
        Self::parse(&text, path)
    }
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct EnvOverrides {
    pub out: Option<PathBuf>,
    pub threads: Option<String>,
}

impl EnvOverrides {
    pub fn from_env() -> Self {
        Self {
            out: std::env::var_os(ENV_OUT_DIR).map(PathBuf::from),
            threads: std::env::var(ENV_THREADS).ok(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Provenance {
    Default,
    File,
    Env,
    Flag,
}

impl fmt::Display for Provenance {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Provenance::Default => "default",
            Provenance::File => "file",
            Provenance::Env => "env",
            Provenance::Flag => "flag",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FieldSource {
    pub field: &'static str,
    pub value: String,
    pub source: Provenance,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ResolvedConfig {
    pub command: Command,
    pub seed: u64,
    pub n: usize,
    pub samples: usize,
    pub out_dir: PathBuf,
    /// `None` leaves the worker pool at its default size.
    pub threads: Option<usize>,
    pub quick: bool,
    pub timing: bool,
    pub invariance_checks: bool,
    pub quad_tol: f64,
    pub max_iterations: usize,
    pub grid_points: usize,
    pub pairs_per_distance: usize,
    pub provenance: Vec<FieldSource>,
}

struct Defaults {
    n: i64,
    samples: i64,
}

fn defaults(cmd: Command) -> Defaults {
    match cmd {
        Command::Sample => Defaults { n: 20, samples: 1 },
        Command::Mc => Defaults { n: 100, samples: 1000 },
        Command::Constants => Defaults { n: 100, samples: 1 },
        Command::Kacrice => Defaults { n: 100, samples: 2000 },
        Command::Minimize => Defaults { n: 200, samples: 1 },
        Command::Verify => Defaults { n: 100, samples: 1 },
    }
}

/// First present value by precedence flag > env > file > default.
fn pick<T: Clone>(flag: Option<T>, env: Option<T>, file: Option<T>, default: T) -> (T, Provenance) {
    if let Some(v) = flag {
        (v, Provenance::Flag)
    } else if let Some(v) = env {
        (v, Provenance::Env)
    } else if let Some(v) = file {
        (v, Provenance::File)
    } else {
        (default, Provenance::Default)
    }
}

fn at_least(field: &'static str, value: i64, min: i64) -> Result<usize, HarnessError> {
    if value < min {
        return Err(HarnessError::Config {
            field,
            reason: format!("must be at least {min}, got {value}"),
        });
    }
    Ok(value as usize)
}

impl ResolvedConfig {
    /// Merges the sources and checks ranges; errors name the offending field.
    pub fn resolve(
        command: Command,
        file: &FileConfig,
        env: &EnvOverrides,
        flags: &Flags,
    ) -> Result<Self, HarnessError> {
        let d = defaults(command);
        let mut provenance = Vec::new();
        let mut note = |field: &'static str, value: String, source: Provenance| {
            provenance.push(FieldSource { field, value, source });
        };

        let (seed, src) = pick(flags.seed, None, file.seed, 1);
        note("seed", seed.to_string(), src);

        let (n, src) = pick(flags.n, None, file.n, d.n);
        let n = at_least("n", n, 1)?;
        if command == Command::Mc && n < 2 {
            return Err(HarnessError::Config {
                field: "n",
                reason: format!("must be at least 2 for mc, got {n}"),
            });
        }
        note("n", n.to_string(), src);

        let (samples, src) = pick(flags.samples, None, file.samples, d.samples);
        let samples = at_least("samples", samples, 1)?;
        note("samples", samples.to_string(), src);

        let (out_dir, src) = pick(
            flags.out.clone(),
            env.out.clone(),
            file.out.clone(),
            PathBuf::from("results"),
        );
        note("out", out_dir.display().to_string(), src);

        let env_threads = match &env.threads {
            Some(s) => Some(s.trim().parse::<i64>().map_err(|_| HarnessError::Config {
                field: "threads",
                reason: format!("{ENV_THREADS}={s:?} is not an integer"),
            })?),
            None => None,
        };
        let (threads, src) = pick(
            flags.threads.map(Some),
            env_threads.map(Some),
            file.threads.map(Some),
            None,
        );
        let threads = threads.map(|t| at_least("threads", t, 1)).transpose()?;
        note(
            "threads",
            threads.map_or_else(|| "auto".to_string(), |t| t.to_string()),
            src,
        );

        let (quick, src) = pick(flags.quick.then_some(true), None, file.quick, false);
        note("quick", quick.to_string(), src);
        let (timing, src) = pick(None, None, file.timing, false);
        note("timing", timing.to_string(), src);
        let (invariance_checks, src) = pick(None, None, file.invariance_checks, false);
        note("invariance_checks", invariance_checks.to_string(), src);

        let (quad_tol, src) = pick(None, None, file.quad_tol, 1e-10);
        if !(quad_tol > 0.0 && quad_tol < 1.0) {
            return Err(HarnessError::Config {
                field: "quad_tol",
                reason: format!("must lie in (0, 1), got {quad_tol}"),
            });
        }
        note("quad_tol", format!("{quad_tol:e}"), src);

        let (max_iterations, src) = pick(None, None, file.max_iterations, 20_000);
        let max_iterations = at_least("max_iterations", max_iterations, 1)?;
        note("max_iterations", max_iterations.to_string(), src);
        let (grid_points, src) = pick(None, None, file.grid_points, 24);
        let grid_points = at_least("grid_points", grid_points, 3)?;
        note("grid_points", grid_points.to_string(), src);
        let (pairs_per_distance, src) = pick(None, None, file.pairs_per_distance, 16);
        let pairs_per_distance = at_least("pairs_per_distance", pairs_per_distance, 1)?;
        note("pairs_per_distance", pairs_per_distance.to_string(), src);

        Ok(Self {
            command,
            seed,
            n,
            samples,
            out_dir,
            threads,
            quick,
            timing,
            invariance_checks,
            quad_tol,
            max_iterations,
            grid_points,
            pairs_per_distance,
            provenance,
        })
    }

    /// Reads the config file named in `flags` (if any) and the environment.
    pub fn from_cli(command: Command, flags: &Flags) -> Result<Self, HarnessError> {
        let file = match &flags.config {
            Some(path) => FileConfig::load(path)?,
            None => FileConfig::default(),
        };
        Self::resolve(command, &file, &EnvOverrides::from_env(), flags)
    }

    /// `field = value  (source)` lines.
    pub fn echo(&self) -> String {
        let width = self.provenance.iter().map(|f| f.field.len()).max().unwrap_or(0);
        self.provenance
            .iter()
            .map(|f| format!("{:width$} = {}  ({})\n", f.field, f.value, f.source))
            .collect()
    }

    /// Directory for this command's artifacts.
    pub fn command_dir(&self) -> PathBuf {
        self.out_dir.join(self.command.name())
    }
}
