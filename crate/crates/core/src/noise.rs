//! GPS horizontal position error: Rayleigh-distributed magnitude with a
//! uniformly distributed direction, equivalent to independent zero-mean
//! normal errors of variance `E^2 / 2` on each axis.

use std::f64::consts::TAU;

use rand::Rng;

use crate::agent::AgentState;
use crate::error::{invalid, Result};
use crate::geom::Vec2;

/// Root-mean-squared distance error `E` and the stream seed.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NoiseConfig {
    pub rms_error: f64,
    pub seed: u64,
}

/// `P(Z <= z) = 1 - exp(-z^2 / E^2)`.
pub fn rayleigh_cdf(z: f64, rms_error: f64) -> f64 {
    if z <= 0.0 {
        0.0
    } else {
        1.0 - (-(z * z) / (rms_error * rms_error)).exp()
    }
}

/// Inverse CDF at `u` in `[0, 1)`.
pub fn error_magnitude_from_uniform(rms_error: f64, u: f64) -> f64 {
    rms_error * (-(1.0 - u).ln()).sqrt()
}

pub fn sample_error_magnitude<R: Rng + ?Sized>(rms_error: f64, rng: &mut R) -> Result<f64> {
    if !(rms_error > 0.0 && rms_error.is_finite()) {
        return Err(invalid("E", format!("must be positive, got {rms_error}")));
    }
    let u: f64 = rng.random();
    Ok(error_magnitude_from_uniform(rms_error, u))
}

/// One horizontal error vector. `E = 0` yields the zero vector without
/// consuming randomness.
pub fn sample_displacement<R: Rng + ?Sized>(rms_error: f64, rng: &mut R) -> Result<Vec2> {
    if rms_error == 0.0 {
        return Ok(Vec2::ZERO);
    }
    let z = sample_error_magnitude(rms_error, rng)?;
    let theta = rng.random::<f64>() * TAU;
    Ok(Vec2::from_angle(theta) * z)
}

/// Displaces every agent's position in slice order. Velocities are left
/// untouched and displaced agents are not moved back onto the walkway.
pub fn perturb_positions<R: Rng + ?Sized>(agents: &mut [AgentState], rms_error: f64, rng: &mut R) -> Result<()> {
    if rms_error == 0.0 {
        return Ok(());
    }
    if !(rms_error > 0.0) {
        return Err(invalid("E", format!("must be non-negative, got {rms_error}")));
    }
    for a in agents.iter_mut() {
        a.position += sample_displacement(rms_error, rng)?;
    }
    Ok(())
}
