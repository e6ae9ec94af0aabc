use std::fs;
use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{Context, Result};
use clap::Args;
use stampede_core::filter::KalmanConfig;
use stampede_core::mc::{run_kf_experiment, write_curve, KfSpec};

use crate::lists::parse_f64_list;
use crate::{install_pool, output, ScenarioArgs, SeedArg};

#[derive(Args, Debug)]
pub struct KalmanArgs {
    #[command(flatten)]
    scenario: ScenarioArgs,
    /// Number of agents.
    #[arg(long = "N", default_value_t = 10240)]
    agents: usize,
    /// Simulated seconds.
    #[arg(long = "S", default_value_t = 150.0)]
    horizon: f64,
    /// Noise levels (each must be positive).
    #[arg(long = "E", default_value = "1..10")]
    e_list: String,
    /// White-noise acceleration spectral density, m^2/s^3.
    #[arg(long, default_value_t = KalmanConfig::DEFAULT_Q)]
    q: f64,
    /// Initial velocity variance, (m/s)^2.
    #[arg(long, default_value_t = KalmanConfig::DEFAULT_VEL_VAR)]
    vel_var: f64,
    #[command(flatten)]
    seed: SeedArg,
    #[arg(long)]
    jobs: Option<usize>,
    /// MAE table CSV; stdout if omitted.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Directory for per-E KDE curves and per-agent errors.
    #[arg(long)]
    out_dir: Option<PathBuf>,
}

pub fn run(args: KalmanArgs) -> Result<ExitCode> {
    install_pool(args.jobs)?;
    let scenario = args.scenario.load()?;
    let mut spec = KfSpec::new(args.agents, scenario.model.dt, args.seed.seed);
    spec.horizon = args.horizon;
    spec.e_list = parse_f64_list(&args.e_list)?;
    spec.kalman.q = args.q;
    spec.kalman.vel_var = args.vel_var;

    let result = run_kf_experiment(&scenario, &spec)?;
    result.write_table(output(args.out.as_deref())?)?;

    if let Some(dir) = &args.out_dir {
        fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
        for (i, c) in result.curves.iter().enumerate() {
            let e = c.rms_error;
            write_curve(&c.measured, output(Some(&dir.join(format!("kde_measured_E{e}.csv"))))?)?;
            write_curve(
                &c.estimated,
                output(Some(&dir.join(format!("kde_estimated_E{e}.csv"))))?,
            )?;
            result.write_errors(i, output(Some(&dir.join(format!("errors_E{e}.csv"))))?)?;
        }
    }
    Ok(ExitCode::SUCCESS)
}
