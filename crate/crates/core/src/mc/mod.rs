//! Seeded Monte Carlo trials, probability estimates with confidence
//! intervals, the (method, E, N) sweep, and the Kalman filter study.

mod estimate;
mod grid;
mod kf;
mod trial;

pub use estimate::{estimate, ProbabilityEstimate};
pub use grid::{
    default_e_list, default_n_list, run_grid, trial_seed, write_results, CellResult, GridSpec, RESULT_HEADER,
};
pub use kf::{run_kf_experiment, simulate_tracks, write_curve, KdeCurves, KfExperiment, KfSpec, MaeRow};
pub use trial::{run_trial, run_trial_observed, TrialOutcome, TrialSpec, DEFAULT_HORIZON};
