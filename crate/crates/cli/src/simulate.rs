use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{Context, Result};
use clap::Args;
use stampede_core::assess::{AssessmentConfig, Method};
use stampede_core::mc::{run_trial_observed, TrialSpec, DEFAULT_HORIZON};
use stampede_core::World;

use crate::{output, ScenarioArgs, SeedArg};

pub const REPORT_HEADER: [&str; 14] = [
    "method",
    "R",
    "E",
    "N",
    "seed",
    "stampede",
    "step",
    "time_s",
    "max_value",
    "x",
    "y",
    "agent",
    "lat",
    "lon",
];
pub const TRAJECTORY_HEADER: [&str; 7] = ["step", "id", "x", "y", "vx", "vy", "phase"];

#[derive(Args, Debug)]
pub struct SimulateArgs {
    #[command(flatten)]
    scenario: ScenarioArgs,
    #[arg(long, default_value = "density")]
    method: Method,
    /// Measurement radius R, metres (ignored by `force`).
    #[arg(long = "radius", short = 'R', default_value_t = 1.0)]
    radius: f64,
    /// RMS horizontal GPS error, metres.
    #[arg(long = "E", default_value_t = 0.0)]
    rms_error: f64,
    /// Number of agents.
    #[arg(long = "N", default_value_t = 100)]
    agents: usize,
    #[command(flatten)]
    seed: SeedArg,
    /// Simulated seconds.
    #[arg(long, default_value_t = DEFAULT_HORIZON)]
    horizon: f64,
    /// Override the scenario time step, seconds.
    #[arg(long)]
    dt: Option<f64>,
    /// Keep simulating after the first detection.
    #[arg(long)]
    full_horizon: bool,
    /// Write every agent's state at every evaluated step.
    #[arg(long)]
    trajectory: Option<PathBuf>,
    /// Detection report CSV; stdout if omitted.
    #[arg(long)]
    report: Option<PathBuf>,
}

pub fn run(args: SimulateArgs) -> Result<ExitCode> {
    let scenario = args.scenario.load()?;
    let method = AssessmentConfig::new(args.method, args.radius);
    let spec = TrialSpec {
        horizon: args.horizon,
        dt: args.dt,
        full_horizon: args.full_horizon,
        ..TrialSpec::new(method, args.rms_error, args.agents, args.seed.seed)
    };

    let mut traj = match &args.trajectory {
        Some(p) => Some(csv::Writer::from_writer(output(Some(p))?)),
        None => None,
    };
    if let Some(w) = traj.as_mut() {
        w.write_record(TRAJECTORY_HEADER)?;
    }
    let mut write_err: Option<csv::Error> = None;
    let outcome = run_trial_observed(&scenario, &spec, |world: &World| {
        if let (Some(w), None) = (traj.as_mut(), write_err.as_ref()) {
            if let Err(e) = dump(w, world) {
                write_err = Some(e);
            }
        }
    })?;
    if let Some(e) = write_err {
        return Err(e).context("writing trajectory");
    }
    if let Some(mut w) = traj {
        w.flush().context("writing trajectory")?;
    }

    let dt = args.dt.unwrap_or(scenario.model.dt);
    let mut w = csv::Writer::from_writer(output(args.report.as_deref())?);
    w.write_record(REPORT_HEADER)?;
    let r_field = if method.method.uses_radius() {
        method.radius.to_string()
    } else {
        String::new()
    };
    let mut row = vec![
        method.method.label().to_string(),
        r_field,
        args.rms_error.to_string(),
        args.agents.to_string(),
        args.seed.seed.to_string(),
        u8::from(outcome.stampede).to_string(),
    ];
    let global = match (&outcome.report, &scenario.geo) {
        (Some(r), Some(g)) => Some(g.to_global(r.location)),
        _ => None,
    };
    match &outcome.report {
        Some(r) => row.extend([
            r.step.to_string(),
            (r.step as f64 * dt).to_string(),
            r.max_value.to_string(),
            r.location.x.to_string(),
            r.location.y.to_string(),
            r.agent.map(|a| a.to_string()).unwrap_or_default(),
        ]),
        None => row.extend(std::iter::repeat_n(String::new(), 6)),
    }
    match global {
        Some((lat, lon)) => row.extend([lat.to_string(), lon.to_string()]),
        None => row.extend([String::new(), String::new()]),
    }
    w.write_record(&row)?;
    w.flush()?;

    if !outcome.stampede {
        return Ok(ExitCode::SUCCESS);
    }
    let r = outcome.report.expect("a detection always carries a report");
    let mut line = format!(
        "ALERT stampede detected by {} at t={}s (step {}): value {:.4} at local ({:.2}, {:.2})",
        method.label(),
        r.step as f64 * dt,
        r.step,
        r.max_value,
        r.location.x,
        r.location.y,
    );
    if let Some((lat, lon)) = global {
        line.push_str(&format!(", lat {lat:.7}, lon {lon:.7}"));
    }
    eprintln!("{line}");
    Ok(ExitCode::from(2))
}

fn dump<W: std::io::Write>(w: &mut csv::Writer<W>, world: &World) -> csv::Result<()> {
    let step = world.step.to_string();
    for a in &world.agents {
        w.write_record([
            step.as_str(),
            &a.id.to_string(),
            &a.position.x.to_string(),
            &a.position.y.to_string(),
            &a.velocity.x.to_string(),
            &a.velocity.y.to_string(),
            a.behavior.label(),
        ])?;
    }
    Ok(())
}
