use nalgebra::{Matrix4, Vector4};
use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::geom::Vec2;
use crate::noise::sample_displacement;
use crate::rng::{self, SimRng};

/// Floor applied to measurement variances so that `E = 0` stays well posed.
pub const MIN_VARIANCE: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct KalmanConfig {
    pub dt: f64,
    /// Acceleration noise spectral density, m^2/s^3.
    pub q: f64,
    /// Position measurement variance per axis, m^2.
    pub posn_var: f64,
    /// Velocity measurement variance per axis, m^2/s^2.
    pub vel_var: f64,
}

impl KalmanConfig {
    pub const DEFAULT_Q: f64 = 1.0;
    pub const DEFAULT_VEL_VAR: f64 = 1e-4;

    /// Position variance matched to Rayleigh noise with RMS error `e`.
    pub fn for_noise(dt: f64, e: f64) -> Self {
        Self {
            dt,
            q: Self::DEFAULT_Q,
            posn_var: (e * e / 2.0).max(MIN_VARIANCE),
            vel_var: Self::DEFAULT_VEL_VAR,
        }
    }

    pub fn with_noise(mut self, e: f64) -> Self {
        self.posn_var = (e * e / 2.0).max(MIN_VARIANCE);
        self
    }

    pub fn validate(&self) -> Result<()> {
        for (name, v) in [
            ("dt", self.dt),
            ("q", self.q),
            ("posn_var", self.posn_var),
            ("vel_var", self.vel_var),
        ] {
            if !(v > 0.0 && v.is_finite()) {
                return Err(invalid(name, format!("must be positive and finite, got {v}")));
            }
        }
        Ok(())
    }

    fn transition(&self) -> Matrix4<f64> {
        let mut f = Matrix4::identity();
        f[(0, 2)] = self.dt;
        f[(1, 3)] = self.dt;
        f
    }

    /// Continuous white-noise acceleration integrated over one step.
    fn process_noise(&self) -> Matrix4<f64> {
        let dt = self.dt;
        let (pp, pv, vv) = (dt.powi(3) / 3.0, dt * dt / 2.0, dt);
        let mut q = Matrix4::zeros();
        for axis in 0..2 {
            let (p, v) = (axis, axis + 2);
            q[(p, p)] = pp;
            q[(p, v)] = pv;
            q[(v, p)] = pv;
            q[(v, v)] = vv;
        }
        q * self.q
    }

    fn measurement_noise(&self) -> Matrix4<f64> {
        Matrix4::from_diagonal(&Vector4::new(self.posn_var, self.posn_var, self.vel_var, self.vel_var))
    }
}

/// State `(x, y, vx, vy)` and its covariance.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct KalmanState {
    pub mean: Vector4<f64>,
    pub covariance: Matrix4<f64>,
}

impl KalmanState {
    pub fn position(&self) -> Vec2 {
        Vec2::new(self.mean[0], self.mean[1])
    }

    pub fn velocity(&self) -> Vec2 {
        Vec2::new(self.mean[2], self.mean[3])
    }
}

fn check_measurement(z: &Vector4<f64>) -> Result<()> {
    if z.iter().all(|v| v.is_finite()) {
        Ok(())
    } else {
        Err(Error::NonFinite("measurement"))
    }
}

pub fn kf_init(cfg: &KalmanConfig, z: Vector4<f64>) -> Result<KalmanState> {
    cfg.validate()?;
    check_measurement(&z)?;
    Ok(KalmanState {
        mean: z,
        covariance: cfg.measurement_noise(),
    })
}

/// Gain and posterior covariance for one cycle from prior covariance `p0`.
/// Neither depends on the measurement values.
fn gain(cfg: &KalmanConfig, p0: &Matrix4<f64>) -> Result<(Matrix4<f64>, Matrix4<f64>)> {
    let f = cfg.transition();
    let p = f * p0 * f.transpose() + cfg.process_noise();
    let r = cfg.measurement_noise();
    let s_inv = (p + r)
        .cholesky()
        .ok_or(Error::Degenerate("innovation covariance"))?
        .inverse();
    let k = p * s_inv;
    let i_k = Matrix4::identity() - k;
    let post = i_k * p * i_k.transpose() + k * r * k.transpose();
    Ok((k, (post + post.transpose()) * 0.5))
}

fn update_mean(cfg: &KalmanConfig, k: &Matrix4<f64>, mean: &Vector4<f64>, z: &Vector4<f64>) -> Vector4<f64> {
    let x = cfg.transition() * mean;
    x + k * (z - x)
}

/// One predict/update cycle against a full-state measurement.
pub fn kf_step(state: &KalmanState, cfg: &KalmanConfig, z: Vector4<f64>) -> Result<KalmanState> {
    check_measurement(&z)?;
    let (k, covariance) = gain(cfg, &state.covariance)?;
    Ok(KalmanState {
        mean: update_mean(cfg, &k, &state.mean, &z),
        covariance,
    })
}

/// True position and velocity of one agent at one step.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TrackPoint {
    pub position: Vec2,
    pub velocity: Vec2,
}

/// Final-step errors for one agent.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct FilterError {
    pub agent: u32,
    pub measured: f64,
    pub estimated: f64,
}

struct Tracker {
    rng: SimRng,
    mean: Vector4<f64>,
    noisy: Vec2,
    truth: Vec2,
}

/// One filter per agent, all started on the same step. Because every filter
/// shares one configuration and measurement schedule, their covariances and
/// gains coincide and are computed once per step. Each agent draws noise from
/// its own stream, so results do not depend on fleet size or thread count.
pub struct FilterBank {
    cfg: KalmanConfig,
    rms_error: f64,
    seed: u64,
    covariance: Option<Matrix4<f64>>,
    trackers: Vec<Tracker>,
}

impl FilterBank {
    pub fn new(rms_error: f64, cfg: KalmanConfig, seed: u64) -> Result<Self> {
        cfg.validate()?;
        if !(rms_error >= 0.0 && rms_error.is_finite()) {
            return Err(invalid("E", format!("must be non-negative, got {rms_error}")));
        }
        Ok(Self {
            cfg,
            rms_error,
            seed,
            covariance: None,
            trackers: Vec::new(),
        })
    }

    pub fn len(&self) -> usize {
        self.trackers.len()
    }

    pub fn is_empty(&self) -> bool {
        self.trackers.is_empty()
    }

    /// Current shared covariance, once the first step has been seen.
    pub fn covariance(&self) -> Option<&Matrix4<f64>> {
        self.covariance.as_ref()
    }

    /// Feeds the true state of every agent at one step. The first call fixes
    /// the fleet size.
    pub fn observe(&mut self, truth: &[TrackPoint]) -> Result<()> {
        let e = self.rms_error;
        let measure = |rng: &mut SimRng, p: &TrackPoint| -> Result<(Vec2, Vector4<f64>)> {
            let noisy = p.position + sample_displacement(e, rng)?;
            let z = Vector4::new(noisy.x, noisy.y, p.velocity.x, p.velocity.y);
            check_measurement(&z)?;
            Ok((noisy, z))
        };
        match self.covariance {
            None => {
                let seed = self.seed;
                self.trackers = truth
                    .iter()
                    .enumerate()
                    .map(|(i, p)| {
                        let mut rng = rng::stream(&[seed, i as u64]);
                        let (noisy, z) = measure(&mut rng, p)?;
                        Ok(Tracker {
                            rng,
                            mean: z,
                            noisy,
                            truth: p.position,
                        })
                    })
                    .collect::<Result<_>>()?;
                self.covariance = Some(self.cfg.measurement_noise());
            }
            Some(p0) => {
                if truth.len() != self.trackers.len() {
                    return Err(invalid(
                        "truth",
                        format!("expected {} agents, got {}", self.trackers.len(), truth.len()),
                    ));
                }
                let (k, post) = gain(&self.cfg, &p0)?;
                let cfg = &self.cfg;
                let update = |(t, p): (&mut Tracker, &TrackPoint)| -> Result<()> {
                    let (noisy, z) = measure(&mut t.rng, p)?;
                    t.mean = update_mean(cfg, &k, &t.mean, &z);
                    t.noisy = noisy;
                    t.truth = p.position;
                    Ok(())
                };
                if truth.len() >= 1024 {
                    self.trackers.par_iter_mut().zip(truth).try_for_each(update)?;
                } else {
                    self.trackers.iter_mut().zip(truth).try_for_each(update)?;
                }
                self.covariance = Some(post);
            }
        }
        Ok(())
    }

    /// Filter state of agent `i`.
    pub fn state(&self, i: usize) -> Option<KalmanState> {
        Some(KalmanState {
            mean: self.trackers.get(i)?.mean,
            covariance: self.covariance?,
        })
    }

    /// Errors at the most recent step.
    pub fn errors(&self) -> Result<Vec<FilterError>> {
        if self.covariance.is_none() {
            return Err(Error::Empty("trajectory"));
        }
        Ok(self
            .trackers
            .iter()
            .enumerate()
            .map(|(i, t)| FilterError {
                agent: i as u32,
                measured: t.noisy.distance(t.truth),
                estimated: Vec2::new(t.mean[0], t.mean[1]).distance(t.truth),
            })
            .collect())
    }
}

/// Filters every track under fresh noise of level `e` and reports the
/// final-step errors. Tracks must share one length.
pub fn evaluate_filter<R: Rng + ?Sized>(
    tracks: &[Vec<TrackPoint>],
    e: f64,
    cfg: &KalmanConfig,
    rng: &mut R,
) -> Result<Vec<FilterError>> {
    let steps = tracks.first().map_or(0, Vec::len);
    if steps == 0 {
        return Err(Error::Empty("trajectory"));
    }
    if tracks.iter().any(|t| t.len() != steps) {
        return Err(invalid("tracks", "trajectories differ in length"));
    }
    let mut bank = FilterBank::new(e, *cfg, rng.random())?;
    let mut row = Vec::with_capacity(tracks.len());
    for k in 0..steps {
        row.clear();
        row.extend(tracks.iter().map(|t| t[k]));
        bank.observe(&row)?;
    }
    bank.errors()
}
