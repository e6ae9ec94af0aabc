use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{bail, Result};
use clap::Args;
use stampede_core::mc::{default_e_list, default_n_list, run_grid, write_results, GridSpec, DEFAULT_HORIZON};

use crate::lists::{parse_f64_list, parse_methods, parse_usize_list, DEFAULT_METHODS};
use crate::{install_pool, output, ScenarioArgs, SeedArg};

#[derive(Args, Debug)]
pub struct SweepArgs {
    #[command(flatten)]
    scenario: ScenarioArgs,
    /// Comma-separated `method[:R]` list.
    #[arg(long, default_value = DEFAULT_METHODS)]
    methods: String,
    /// Noise levels, e.g. `0..10` or `0,2.5,5`. Default 0..10.
    #[arg(long = "E")]
    e_list: Option<String>,
    /// Agent counts. Default 1,5,10,20,...,10240.
    #[arg(long = "N")]
    n_list: Option<String>,
    #[arg(long, default_value_t = 1000)]
    trials: usize,
    /// Simulated seconds per trial.
    #[arg(long, default_value_t = DEFAULT_HORIZON)]
    horizon: f64,
    /// Worker threads; all cores if omitted. Results do not depend on it.
    #[arg(long)]
    jobs: Option<usize>,
    #[command(flatten)]
    seed: SeedArg,
    /// Result CSV; stdout if omitted.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Fill the mean_runtime_ms column (makes output machine-dependent).
    #[arg(long)]
    timings: bool,
    /// Print an ALERT for every cell whose probability exceeds this.
    #[arg(long, default_value_t = 0.5)]
    alert_p: f64,
}

pub fn run(args: SweepArgs) -> Result<ExitCode> {
    if !(0.0..=1.0).contains(&args.alert_p) {
        bail!("--alert-p must lie in [0, 1], got {}", args.alert_p);
    }
    install_pool(args.jobs)?;
    let scenario = args.scenario.load()?;
    let mut spec = GridSpec::new(parse_methods(&args.methods)?, args.trials, args.seed.seed);
    spec.e_list = match &args.e_list {
        Some(s) => parse_f64_list(s)?,
        None => default_e_list(),
    };
    spec.n_list = match &args.n_list {
        Some(s) => parse_usize_list(s)?,
        None => default_n_list(),
    };
    spec.horizon = args.horizon;

    let cells = run_grid(&scenario, &spec)?;
    write_results(&cells, output(args.out.as_deref())?, args.timings)?;

    let mut failed = 0;
    for c in &cells {
        match &c.estimate {
            Ok(e) if e.p > args.alert_p => eprintln!(
                "ALERT {} E={} N={}: p={} (95% CI {}..{})",
                c.method.label(),
                c.rms_error,
                c.agents,
                e.p,
                e.ci_low,
                e.ci_high
            ),
            Ok(_) => {}
            Err(err) => {
                failed += 1;
                eprintln!(
                    "warning: {} E={} N={} skipped: {err}",
                    c.method.label(),
                    c.rms_error,
                    c.agents
                );
            }
        }
    }
    Ok(if failed > 0 {
        ExitCode::FAILURE
    } else {
        ExitCode::SUCCESS
    })
}
