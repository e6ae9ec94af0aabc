use std::io::Write;

use rayon::prelude::*;

use crate::error::{invalid, Error, Result};
use crate::filter::{kde, mae, FilterBank, FilterError, KalmanConfig, TrackPoint};
use crate::pedmodel::World;
use crate::rng;
use crate::scenario::Scenario;

#[derive(Debug, Clone, PartialEq)]
pub struct KfSpec {
    pub agents: usize,
    /// Simulated seconds; tracks have `horizon / dt` points.
    pub horizon: f64,
    pub e_list: Vec<f64>,
    /// `posn_var` is replaced per `E`; `dt` is taken from the scenario.
    pub kalman: KalmanConfig,
    pub seed: u64,
}

impl KfSpec {
    pub fn new(agents: usize, dt: f64, seed: u64) -> Self {
        Self {
            agents,
            horizon: 150.0,
            e_list: (1..=10).map(f64::from).collect(),
            kalman: KalmanConfig::for_noise(dt, 1.0),
            seed,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MaeRow {
    pub rms_error: f64,
    pub estimated: f64,
    pub measured: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct KdeCurves {
    pub rms_error: f64,
    pub measured: Vec<(f64, f64)>,
    pub estimated: Vec<(f64, f64)>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct KfExperiment {
    pub table: Vec<MaeRow>,
    pub curves: Vec<KdeCurves>,
    /// Per-agent final-step errors, one list per `E`.
    pub errors: Vec<Vec<FilterError>>,
}

/// Runs one noise-free simulation of `agents` agents from the spawn grid and
/// hands the true state of every agent to `sink` after each step. Agents that
/// have left keep their final position with zero velocity.
pub fn simulate_tracks<F>(scenario: &Scenario, agents: usize, horizon: f64, seed: u64, mut sink: F) -> Result<()>
where
    F: FnMut(&[TrackPoint]) -> Result<()>,
{
    if agents == 0 {
        return Err(invalid("N", "need at least one agent"));
    }
    if !(horizon > 0.0 && horizon.is_finite()) {
        return Err(invalid("horizon", format!("must be positive, got {horizon}")));
    }
    let model = &scenario.model;
    let steps = (horizon / model.dt).round() as u64;
    let mut world = World::new(scenario.spawn_agents(agents)?, rng::derive_seed(&[seed, 3]));
    let mut row = Vec::with_capacity(agents);
    for _ in 0..steps {
        world.step(&scenario.map, model)?;
        row.clear();
        row.extend(world.agents.iter().map(|a| TrackPoint {
            position: a.position,
            velocity: a.velocity,
        }));
        sink(&row)?;
    }
    Ok(())
}

/// Filters one base simulation at every noise level. All levels reuse the
/// same per-agent uniforms (scaled by `E`), so differences between rows come
/// from `E` alone.
pub fn run_kf_experiment(scenario: &Scenario, spec: &KfSpec) -> Result<KfExperiment> {
    if spec.e_list.is_empty() {
        return Err(Error::Empty("E list"));
    }
    if let Some(&e) = spec.e_list.iter().find(|&&e| !(e > 0.0 && e.is_finite())) {
        return Err(invalid("E", format!("filter study needs positive E, got {e}")));
    }
    let base = KalmanConfig {
        dt: scenario.model.dt,
        ..spec.kalman
    };
    let noise_seed = rng::derive_seed(&[spec.seed, 4]);
    let mut banks = spec
        .e_list
        .iter()
        .map(|&e| FilterBank::new(e, base.with_noise(e), noise_seed))
        .collect::<Result<Vec<_>>>()?;
    simulate_tracks(scenario, spec.agents, spec.horizon, spec.seed, |row| {
        banks.par_iter_mut().try_for_each(|b| b.observe(row))
    })?;

    let errors = banks.iter().map(FilterBank::errors).collect::<Result<Vec<_>>>()?;
    let mut table = Vec::new();
    let mut curves = Vec::new();
    for (&e, errs) in spec.e_list.iter().zip(&errors) {
        let measured: Vec<f64> = errs.iter().map(|x| x.measured).collect();
        let estimated: Vec<f64> = errs.iter().map(|x| x.estimated).collect();
        table.push(MaeRow {
            rms_error: e,
            estimated: mae(&estimated)?,
            measured: mae(&measured)?,
        });
        curves.push(KdeCurves {
            rms_error: e,
            measured: kde(&measured, None)?,
            estimated: kde(&estimated, None)?,
        });
    }
    Ok(KfExperiment { table, curves, errors })
}

fn csv_err(e: csv::Error) -> Error {
    Error::Io(e.to_string())
}

fn finish<W: Write>(mut w: csv::Writer<W>) -> Result<()> {
    w.flush().map_err(|e| Error::Io(e.to_string()))
}

impl KfExperiment {
    /// `E,estimated,measured`.
    pub fn write_table<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["E", "estimated", "measured"]).map_err(csv_err)?;
        for r in &self.table {
            w.write_record([r.rms_error.to_string(), r.estimated.to_string(), r.measured.to_string()])
                .map_err(csv_err)?;
        }
        finish(w)
    }

    /// `agent_id,measured,estimated` for the `i`-th noise level.
    pub fn write_errors<W: Write>(&self, i: usize, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["agent_id", "measured", "estimated"]).map_err(csv_err)?;
        for e in &self.errors[i] {
            w.write_record([e.agent.to_string(), e.measured.to_string(), e.estimated.to_string()])
                .map_err(csv_err)?;
        }
        finish(w)
    }
}

/// Two-column `x,density` curve.
pub fn write_curve<W: Write>(curve: &[(f64, f64)], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["x", "density"]).map_err(csv_err)?;
    for (x, d) in curve {
        w.write_record([x.to_string(), d.to_string()]).map_err(csv_err)?;
    }
    finish(w)
}
