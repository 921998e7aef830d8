//! Command-line front end: `constants`, `verify`, `flow`, `tower` and `project`.
//!
//! Every command reads a flat `key = value` file (`--config`), applies overrides given
//! as `--key value`, `--key=value` or `--set key=value`, and writes its artifacts to
//! `--out`. Exit codes: 0 success, 1 failed checks, 2 configuration errors, 3 numerical
//! or I/O failures. `YMBUBBLE_WORKERS` sets the size of the worker pool.

pub mod commands;
pub mod config;
pub mod error;

use clap::{Args, Parser, Subcommand};
use config::{parse_overrides, Settings};
pub use error::CliError;
use std::path::{Path, PathBuf};

pub const WORKERS_ENV: &str = "YMBUBBLE_WORKERS";

#[derive(Debug, Parser)]
#[command(name = "ymbubble", version, about = "Yang-Mills heat flow bubbling laboratory")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Tabulate Omega, the cut-off Xi ladder and the tower constant.
    Constants(Common),
    /// Run the verification suite and write report.json.
    Verify(Common),
    /// Evolve a single bubble (or resume a checkpoint) and report the scale decay.
    Flow(Common),
    /// Build the two-bubble tower and tabulate the inner scale law.
    Tower(Common),
    /// Compare the routes to the dilation-mode projection over a (radius, cutoff) ladder.
    Project(Common),
}

#[derive(Debug, Args)]
pub struct Common {
    /// Flat key = value configuration file.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Output directory, created if missing.
    #[arg(long, default_value = "out")]
    pub out: PathBuf,
    /// Overrides: --key value, --key=value or --set key=value.
    #[arg(trailing_var_arg = true, allow_hyphen_values = true, value_name = "OVERRIDES")]
    pub overrides: Vec<String>,
}

/// Where a command writes its files. The directory is created on first write, so a
/// rejected configuration leaves nothing behind.
pub struct Output {
    dir: PathBuf,
}

impl Output {
    pub fn new(dir: &Path) -> Self {
        Self { dir: dir.to_path_buf() }
    }

    pub fn write(&self, name: &str, contents: &str) -> Result<PathBuf, CliError> {
        let dir = &self.dir;
        std::fs::create_dir_all(dir).map_err(|source| CliError::Io { path: dir.display().to_string(), source })?;
        let path = dir.join(name);
        std::fs::write(&path, contents).map_err(|source| CliError::Io { path: path.display().to_string(), source })?;
        Ok(path)
    }
}

fn configure_workers() -> Result<(), CliError> {
    let Ok(v) = std::env::var(WORKERS_ENV) else {
        return Ok(());
    };
    let n: usize = v.parse().map_err(|_| CliError::Config(format!("{WORKERS_ENV} must be a positive integer, got '{v}'")))?;
    if n == 0 {
        return Err(CliError::Config(format!("{WORKERS_ENV} must be positive")));
    }
    // A second call in the same process finds the pool already built, which is fine.
    let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
    Ok(())
}

pub fn run(cli: &Cli) -> Result<(), CliError> {
    configure_workers()?;
    let (common, exec): (&Common, fn(&Settings, &Output) -> Result<(), CliError>) = match &cli.command {
        Command::Constants(c) => (c, commands::constants::run),
        Command::Verify(c) => (c, commands::verify::run),
        Command::Flow(c) => (c, commands::flow::run),
        Command::Tower(c) => (c, commands::tower::run),
        Command::Project(c) => (c, commands::project::run),
    };
    // `--out` and `--config` may also appear among the trailing overrides.
    let mut overrides = parse_overrides(&common.overrides)?;
    let mut config = common.config.clone();
    let mut out_dir = common.out.clone();
    overrides.retain(|(k, v)| match k.as_str() {
        "out" => {
            out_dir = PathBuf::from(v);
            false
        }
        "config" => {
            config = Some(PathBuf::from(v));
            false
        }
        _ => true,
    });
    let settings = Settings::load(config.as_deref(), &overrides)?;
    let out = Output::new(&out_dir);
    exec(&settings, &out)
}
