//! Constant-velocity Kalman tracking of noisy positions and the error
//! statistics used to judge it.

mod kalman;
mod stats;

pub use kalman::{
    evaluate_filter, kf_init, kf_step, FilterBank, FilterError, KalmanConfig, KalmanState, TrackPoint, MIN_VARIANCE,
};
pub use stats::{kde, mae, silverman_bandwidth, KDE_POINTS};
