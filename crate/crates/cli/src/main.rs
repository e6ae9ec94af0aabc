//! `stampede`: run crowd simulations, probability sweeps and filter studies
//! from the command line. Every output is a CSV with a header row.

mod convert;
mod kalman;
mod lists;
mod simulate;
mod sweep;

use std::fs;
use std::io::{self, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};
use stampede_core::scenario::Scenario;

#[derive(Parser)]
#[command(name = "stampede", version, about = "Crowd stampede simulation under GPS noise")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run a single trial and report whether a stampede was detected.
    Simulate(simulate::SimulateArgs),
    /// Estimate stampede probabilities over a (method, E, N) grid.
    Sweep(sweep::SweepArgs),
    /// Compare raw and Kalman-filtered position errors.
    Kalman(kalman::KalmanArgs),
    /// Convert geographic fixes to the venue frame, or back.
    Convert(convert::ConvertArgs),
}

/// Options shared by the commands that run the simulator.
#[derive(Args, Debug, Clone)]
pub struct ScenarioArgs {
    /// Scenario TOML file; the bundled bridge venue if omitted.
    #[arg(long)]
    pub scenario: Option<PathBuf>,
    /// Override the spawn grid spacing, metres.
    #[arg(long)]
    pub spacing: Option<f64>,
}

impl ScenarioArgs {
    pub fn load(&self) -> Result<Scenario> {
        let scenario = match &self.scenario {
            None => Scenario::jamarat(),
            Some(path) => {
                let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
                Scenario::from_toml(&text).with_context(|| format!("scenario {}", path.display()))?
            }
        };
        match self.spacing {
            None => Ok(scenario),
            Some(s) if s > 0.0 && s.is_finite() => Ok(scenario.with_spacing(s)),
            Some(s) => bail!("--spacing must be positive, got {s}"),
        }
    }
}

/// Master seed: `--seed`, else `ARES_SEED`, else 0.
#[derive(Args, Debug, Clone, Copy)]
pub struct SeedArg {
    #[arg(long, env = "ARES_SEED", default_value_t = 0)]
    pub seed: u64,
}

pub fn install_pool(jobs: Option<usize>) -> Result<()> {
    if let Some(j) = jobs {
        if j == 0 {
            bail!("--jobs must be at least 1");
        }
        rayon::ThreadPoolBuilder::new()
            .num_threads(j)
            .build_global()
            .context("configuring thread pool")?;
    }
    Ok(())
}

/// File at `path`, or stdout.
pub fn output(path: Option<&Path>) -> Result<Box<dyn Write>> {
    Ok(match path {
        Some(p) => Box::new(io::BufWriter::new(
            fs::File::create(p).with_context(|| format!("creating {}", p.display()))?,
        )),
        None => Box::new(io::BufWriter::new(io::stdout().lock())),
    })
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Simulate(a) => simulate::run(a),
        Command::Sweep(a) => sweep::run(a),
        Command::Kalman(a) => kalman::run(a),
        Command::Convert(a) => convert::run(a),
    };
    match result {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
