use std::io::Write;

use rayon::prelude::*;

use crate::assess::AssessmentConfig;
use crate::error::{invalid, Error, Result};
use crate::mc::estimate::{estimate, ProbabilityEstimate};
use crate::mc::trial::{run_trial, TrialSpec, DEFAULT_HORIZON};
use crate::rng::{derive_seed, hash_label};
use crate::scenario::Scenario;

pub const RESULT_HEADER: [&str; 9] = [
    "method",
    "R",
    "E",
    "N",
    "n",
    "p",
    "ci_low",
    "ci_high",
    "mean_runtime_ms",
];

/// `0, 1, ..., 10` m.
pub fn default_e_list() -> Vec<f64> {
    (0..=10).map(f64::from).collect()
}

/// `1, 5, 10, 20, ..., 10240`.
pub fn default_n_list() -> Vec<usize> {
    std::iter::once(1).chain((0..12).map(|k| 5 << k)).collect()
}

#[derive(Debug, Clone, PartialEq)]
pub struct GridSpec {
    pub methods: Vec<AssessmentConfig>,
    pub e_list: Vec<f64>,
    pub n_list: Vec<usize>,
    pub trials: usize,
    pub horizon: f64,
    pub master_seed: u64,
}

impl GridSpec {
    pub fn new(methods: Vec<AssessmentConfig>, trials: usize, master_seed: u64) -> Self {
        Self {
            methods,
            e_list: default_e_list(),
            n_list: default_n_list(),
            trials,
            horizon: DEFAULT_HORIZON,
            master_seed,
        }
    }

    pub fn cell_count(&self) -> usize {
        self.methods.len() * self.e_list.len() * self.n_list.len()
    }
}

/// Seed of one trial, a function of the cell and trial index only.
pub fn trial_seed(master: u64, method: &AssessmentConfig, e: f64, n: usize, trial: usize) -> u64 {
    derive_seed(&[master, hash_label(&method.label()), e.to_bits(), n as u64, trial as u64])
}

#[derive(Debug)]
pub struct CellResult {
    pub method: AssessmentConfig,
    pub rms_error: f64,
    pub agents: usize,
    pub estimate: Result<ProbabilityEstimate>,
    pub mean_runtime_ms: f64,
}

impl CellResult {
    /// One CSV record; `None` for failed cells. Runtimes are wall-clock and
    /// therefore only written when `timings` is set.
    pub fn record(&self, timings: bool) -> Option<Vec<String>> {
        let e = self.estimate.as_ref().ok()?;
        let r = if self.method.method.uses_radius() {
            self.method.radius.to_string()
        } else {
            String::new()
        };
        let runtime = if timings {
            format!("{:.3}", self.mean_runtime_ms)
        } else {
            String::new()
        };
        Some(vec![
            self.method.method.label().to_string(),
            r,
            self.rms_error.to_string(),
            self.agents.to_string(),
            e.n.to_string(),
            e.p.to_string(),
            e.ci_low.to_string(),
            e.ci_high.to_string(),
            runtime,
        ])
    }
}

/// Runs every (method, E, N) cell. Trials run on the current rayon pool;
/// results come back in cell order whatever the thread count. A failing cell
/// carries its error and does not stop the others.
pub fn run_grid(scenario: &Scenario, spec: &GridSpec) -> Result<Vec<CellResult>> {
    if spec.trials < 2 {
        return Err(invalid("trials", format!("need at least 2, got {}", spec.trials)));
    }
    let cells: Vec<(AssessmentConfig, f64, usize)> = spec
        .methods
        .iter()
        .flat_map(|m| {
            spec.e_list
                .iter()
                .flat_map(move |&e| spec.n_list.iter().map(move |&n| (*m, e, n)))
        })
        .collect();
    let tasks: Vec<(usize, usize)> = (0..cells.len())
        .flat_map(|c| (0..spec.trials).map(move |t| (c, t)))
        .collect();
    let outcomes: Vec<Result<(bool, f64)>> = tasks
        .par_iter()
        .map(|&(c, t)| {
            let (method, e, n) = &cells[c];
            let trial = TrialSpec {
                horizon: spec.horizon,
                ..TrialSpec::new(*method, *e, *n, trial_seed(spec.master_seed, method, *e, *n, t))
            };
            run_trial(scenario, &trial).map(|o| (o.stampede, o.runtime.as_secs_f64() * 1e3))
        })
        .collect();

    let mut outcomes = outcomes.into_iter();
    Ok(cells
        .into_iter()
        .map(|(method, rms_error, agents)| {
            let chunk: Vec<_> = outcomes.by_ref().take(spec.trials).collect();
            let collected: Result<Vec<(bool, f64)>> = chunk.into_iter().collect();
            let (estimate, mean_runtime_ms) = match collected {
                Ok(v) => {
                    let flags: Vec<bool> = v.iter().map(|x| x.0).collect();
                    let ms = v.iter().map(|x| x.1).sum::<f64>() / v.len() as f64;
                    (estimate(&flags), ms)
                }
                Err(e) => (Err(e), f64::NAN),
            };
            CellResult {
                method,
                rms_error,
                agents,
                estimate,
                mean_runtime_ms,
            }
        })
        .collect())
}

/// Writes the result table; failed cells are omitted.
pub fn write_results<W: Write>(cells: &[CellResult], out: W, timings: bool) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    let io = |e: csv::Error| Error::Io(e.to_string());
    w.write_record(RESULT_HEADER).map_err(io)?;
    for rec in cells.iter().filter_map(|c| c.record(timings)) {
        w.write_record(&rec).map_err(io)?;
    }
    w.flush().map_err(|e| Error::Io(e.to_string()))
}
