//! Stampede assessment over a world snapshot: crowd pressure (Gaussian-weighted
//! density times local velocity variance), physical force from per-step
//! acceleration, and neighbour-count density.

use std::f64::consts::PI;
use std::fmt;
use std::str::FromStr;

use rand::Rng;
use rand_distr::{Distribution, Normal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::agent::{AgentId, AgentState};
use crate::error::{invalid, Error, Result};
use crate::geom::Vec2;
use crate::index::SpatialIndex;

pub const MASS_MEAN: f64 = 70.0;
pub const MASS_SD: f64 = 10.0;
pub const MASS_MIN: f64 = 50.0;
pub const MASS_MAX: f64 = 100.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Method {
    Pressure,
    Force,
    Density,
}

impl Method {
    pub fn label(&self) -> &'static str {
        match self {
            Method::Pressure => "pressure",
            Method::Force => "force",
            Method::Density => "density",
        }
    }

    pub fn uses_radius(&self) -> bool {
        !matches!(self, Method::Force)
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.label())
    }
}

impl FromStr for Method {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "pressure" => Ok(Method::Pressure),
            "force" => Ok(Method::Force),
            "density" => Ok(Method::Density),
            other => Err(invalid("method", format!("unknown method `{other}`"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AssessmentConfig {
    pub method: Method,
    /// Measurement radius R, metres.
    pub radius: f64,
    pub pressure_threshold: f64,
    pub turbulence_threshold: f64,
    pub force_threshold: f64,
    pub density_threshold: f64,
    /// Gaussian sums are truncated here; `None` means `3 * radius`.
    pub weight_cutoff_radius: Option<f64>,
}

impl AssessmentConfig {
    pub fn new(method: Method, radius: f64) -> Self {
        Self {
            method,
            radius,
            pressure_threshold: 0.04,
            turbulence_threshold: 0.02,
            force_threshold: 4500.0,
            density_threshold: 7.0,
            weight_cutoff_radius: None,
        }
    }

    pub fn pressure(radius: f64) -> Self {
        Self::new(Method::Pressure, radius)
    }

    pub fn force() -> Self {
        Self::new(Method::Force, 1.0)
    }

    pub fn density(radius: f64) -> Self {
        Self::new(Method::Density, radius)
    }

    pub fn cutoff(&self) -> f64 {
        self.weight_cutoff_radius.unwrap_or(3.0 * self.radius)
    }

    pub fn threshold(&self) -> f64 {
        match self.method {
            Method::Pressure => self.pressure_threshold,
            Method::Force => self.force_threshold,
            Method::Density => self.density_threshold,
        }
    }

    /// Stable label such as `pressure_R2` or `force`.
    pub fn label(&self) -> String {
        if self.method.uses_radius() {
            format!("{}_R{}", self.method, self.radius)
        } else {
            self.method.to_string()
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.radius > 0.0) {
            return Err(invalid("R", "measurement radius must be positive"));
        }
        for (name, v) in [
            ("pressure_threshold", self.pressure_threshold),
            ("turbulence_threshold", self.turbulence_threshold),
            ("force_threshold", self.force_threshold),
            ("density_threshold", self.density_threshold),
        ] {
            if !(v > 0.0) {
                return Err(invalid(name, "threshold must be positive"));
            }
        }
        if self.turbulence_threshold >= self.pressure_threshold {
            return Err(invalid("turbulence_threshold", "must be below the pressure threshold"));
        }
        if !(self.cutoff() > 0.0) {
            return Err(invalid("weight_cutoff_radius", "must be positive"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DetectionReport {
    pub stampede: bool,
    /// Pressure method only.
    pub turbulence: bool,
    pub max_value: f64,
    pub location: Vec2,
    pub agent: Option<AgentId>,
    pub step: u64,
}

/// `exp(-d^2 / R^2) / (pi R^2)`.
pub fn gauss_weight(d: f64, radius: f64) -> f64 {
    (-(d * d) / (radius * radius)).exp() / (PI * radius * radius)
}

/// Gaussian-weighted crowd statistics around one point.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LocalField {
    pub density: f64,
    pub velocity: Vec2,
    pub variance: f64,
}

impl LocalField {
    pub fn pressure(&self) -> f64 {
        self.density * self.variance
    }
}

/// Density, weighted mean velocity and weighted velocity variance at `r`,
/// summing over active agents within `cutoff`. `None` when no agent is in
/// range.
pub fn local_field(
    agents: &[AgentState],
    index: &SpatialIndex,
    r: Vec2,
    radius: f64,
    cutoff: f64,
) -> Option<LocalField> {
    let mut terms: Vec<(f64, Vec2)> = Vec::new();
    index.for_each_within(agents, r, cutoff, |j, d_sq| {
        terms.push((gauss_weight(d_sq.sqrt(), radius), agents[j].velocity));
    });
    field_from_terms(&terms)
}

fn field_from_terms(terms: &[(f64, Vec2)]) -> Option<LocalField> {
    let density: f64 = terms.iter().map(|t| t.0).sum();
    if terms.is_empty() || density <= 0.0 {
        return None;
    }
    let momentum = terms.iter().fold(Vec2::ZERO, |acc, &(f, v)| acc + v * f);
    let velocity = momentum / density;
    let variance = terms
        .iter()
        .map(|&(f, v)| f * (v - velocity).length_squared())
        .sum::<f64>()
        / density;
    Some(LocalField {
        density,
        velocity,
        variance,
    })
}

pub fn local_density(agents: &[AgentState], index: &SpatialIndex, r: Vec2, radius: f64, cutoff: f64) -> f64 {
    local_field(agents, index, r, radius, cutoff).map_or(0.0, |f| f.density)
}

pub fn local_velocity(agents: &[AgentState], index: &SpatialIndex, r: Vec2, radius: f64, cutoff: f64) -> Option<Vec2> {
    local_field(agents, index, r, radius, cutoff).map(|f| f.velocity)
}

pub fn velocity_variance(
    agents: &[AgentState],
    index: &SpatialIndex,
    r: Vec2,
    radius: f64,
    cutoff: f64,
) -> Option<f64> {
    local_field(agents, index, r, radius, cutoff).map(|f| f.variance)
}

pub fn crowd_pressure(agents: &[AgentState], index: &SpatialIndex, r: Vec2, radius: f64, cutoff: f64) -> Option<f64> {
    local_field(agents, index, r, radius, cutoff).map(|f| f.pressure())
}

/// `mass * |v_cur - v_prev| / dt`, newtons.
pub fn physical_force(mass: f64, v_prev: Vec2, v_cur: Vec2, dt: f64) -> Result<f64> {
    if !(dt > 0.0) {
        return Err(invalid("dt", format!("must be positive, got {dt}")));
    }
    Ok(mass * (v_cur - v_prev).length() / dt)
}

/// Body mass from N(70, 10) truncated to [50, 100] by rejection.
pub fn sample_mass<R: Rng + ?Sized>(rng: &mut R) -> f64 {
    let normal = Normal::new(MASS_MEAN, MASS_SD).expect("valid normal parameters");
    loop {
        let m = normal.sample(rng);
        if (MASS_MIN..=MASS_MAX).contains(&m) {
            return m;
        }
    }
}

/// `L / (pi R^2)`.
pub fn neighbor_density(count: usize, radius: f64) -> f64 {
    count as f64 / (PI * radius * radius)
}

/// Per-agent metric value for the configured method.
fn agent_value(i: usize, agents: &[AgentState], index: &SpatialIndex, cfg: &AssessmentConfig, dt: f64) -> Option<f64> {
    let a = &agents[i];
    if !a.behavior.is_active() {
        return None;
    }
    match cfg.method {
        Method::Pressure => local_field(agents, index, a.position, cfg.radius, cfg.cutoff()).map(|f| f.pressure()),
        Method::Force => physical_force(a.mass, a.prev_velocity, a.velocity, dt).ok(),
        Method::Density => {
            let mut count = 0usize;
            index.for_each_within(agents, a.position, cfg.radius, |j, _| {
                if j != i {
                    count += 1;
                }
            });
            Some(neighbor_density(count, cfg.radius))
        }
    }
}

/// Evaluates the configured method at every active agent. `index` must cover
/// the active agents of `agents`.
pub fn evaluate(
    agents: &[AgentState],
    index: &SpatialIndex,
    cfg: &AssessmentConfig,
    dt: f64,
    step: u64,
) -> DetectionReport {
    let value = |i| agent_value(i, agents, index, cfg, dt);
    let values: Vec<Option<f64>> = if agents.len() >= 256 {
        (0..agents.len()).into_par_iter().map(value).collect()
    } else {
        (0..agents.len()).map(value).collect()
    };

    let mut best: Option<(usize, f64)> = None;
    for (i, v) in values.into_iter().enumerate() {
        if let Some(v) = v {
            if best.is_none_or(|(_, b)| v > b) {
                best = Some((i, v));
            }
        }
    }
    let (max_value, location, agent) = match best {
        Some((i, v)) => (v, agents[i].position, Some(agents[i].id)),
        None => (0.0, Vec2::ZERO, None),
    };
    DetectionReport {
        stampede: max_value >= cfg.threshold(),
        turbulence: cfg.method == Method::Pressure && max_value >= cfg.turbulence_threshold,
        max_value,
        location,
        agent,
        step,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng;
    use approx::assert_relative_eq;

    fn agent(id: u32, x: f64, y: f64, vx: f64, vy: f64) -> AgentState {
        AgentState::new(id, Vec2::new(x, y)).with_velocity(Vec2::new(vx, vy))
    }

    fn indexed(agents: &[AgentState]) -> SpatialIndex {
        SpatialIndex::build(agents, 2.0).unwrap()
    }

    #[test]
    fn weight_values() {
        assert_relative_eq!(gauss_weight(0.0, 1.0), 1.0 / PI, epsilon = 1e-15);
        assert_relative_eq!(gauss_weight(1.0, 1.0), 0.117_099_663, epsilon = 1e-9);
        assert!(gauss_weight(3.0, 1.0) < 1.3e-4 * gauss_weight(0.0, 1.0));
        assert!(gauss_weight(6.0, 2.0) < 1.3e-4 * gauss_weight(0.0, 2.0));
    }

    #[test]
    fn density_single_and_pair() {
        let one = [agent(0, 0.0, 0.0, 0.0, 0.0)];
        assert_relative_eq!(
            local_density(&one, &indexed(&one), Vec2::ZERO, 1.0, 3.0),
            std::f64::consts::FRAC_1_PI,
            epsilon = 1e-9
        );
        let two = [agent(0, 0.0, 0.0, 0.0, 0.0), agent(1, 1.0, 0.0, 0.0, 0.0)];
        assert_relative_eq!(
            local_density(&two, &indexed(&two), Vec2::ZERO, 1.0, 3.0),
            0.435_409_549,
            epsilon = 1e-9
        );
    }

    #[test]
    fn velocity_and_variance() {
        let one = [agent(0, 0.3, 0.1, 1.0, 0.0)];
        let idx = indexed(&one);
        assert_eq!(
            local_velocity(&one, &idx, Vec2::ZERO, 1.0, 3.0),
            Some(Vec2::new(1.0, 0.0))
        );

        let pair = [agent(0, -0.5, 0.0, 1.0, 0.0), agent(1, 0.5, 0.0, -1.0, 0.0)];
        let idx = indexed(&pair);
        let v = local_velocity(&pair, &idx, Vec2::ZERO, 1.0, 3.0).unwrap();
        assert!(v.length() < 1e-15);
        assert_relative_eq!(
            velocity_variance(&pair, &idx, Vec2::ZERO, 1.0, 3.0).unwrap(),
            1.0,
            epsilon = 1e-12
        );
        let p = crowd_pressure(&pair, &idx, Vec2::ZERO, 1.0, 3.0).unwrap();
        assert_relative_eq!(p, 2.0 / PI * (-0.25f64).exp(), epsilon = 1e-12);
        assert_relative_eq!(p, 0.495_799_977, epsilon = 1e-9);
    }

    #[test]
    fn empty_neighbourhood_is_undefined() {
        let one = [agent(0, 50.0, 0.0, 1.0, 0.0)];
        let idx = indexed(&one);
        assert!(local_velocity(&one, &idx, Vec2::ZERO, 1.0, 3.0).is_none());
        assert!(crowd_pressure(&one, &idx, Vec2::ZERO, 1.0, 3.0).is_none());
    }

    #[test]
    fn variance_scales_quadratically() {
        let c = 2.5;
        let base = [
            agent(0, 0.0, 0.0, 0.3, 0.1),
            agent(1, 0.6, 0.2, -0.4, 0.9),
            agent(2, -0.3, 0.7, 1.1, -0.2),
        ];
        let scaled: Vec<_> = base.iter().map(|a| a.clone().with_velocity(a.velocity * c)).collect();
        let v1 = velocity_variance(&base, &indexed(&base), Vec2::ZERO, 1.0, 3.0).unwrap();
        let v2 = velocity_variance(&scaled, &indexed(&scaled), Vec2::ZERO, 1.0, 3.0).unwrap();
        assert_relative_eq!(v2, c * c * v1, max_relative = 1e-12);
    }

    #[test]
    fn force_values() {
        let dt = 0.1;
        assert_eq!(
            physical_force(70.0, Vec2::new(1.0, 1.0), Vec2::new(1.0, 1.0), dt).unwrap(),
            0.0
        );
        assert_relative_eq!(
            physical_force(70.0, Vec2::ZERO, Vec2::new(1.0, 0.0), dt).unwrap(),
            700.0,
            epsilon = 1e-9
        );
        let f = physical_force(90.0, Vec2::ZERO, Vec2::new(3.0, 4.0), dt).unwrap();
        assert_relative_eq!(f, 4500.0, epsilon = 1e-9);
        assert!(physical_force(70.0, Vec2::ZERO, Vec2::ZERO, 0.0).is_err());
    }

    #[test]
    fn force_boundary_counts() {
        let mut a = agent(0, 0.0, 0.0, 0.0, 0.0);
        a.mass = 90.0;
        a.prev_velocity = Vec2::new(-2.5, 0.0);
        a.velocity = Vec2::new(2.5, 0.0);
        let agents = [a];
        let r = evaluate(&agents, &indexed(&agents), &AssessmentConfig::force(), 0.1, 3);
        assert!((r.max_value - 4500.0).abs() < 1e-9);
        assert!(r.stampede);
        assert_eq!(r.step, 3);
    }

    #[test]
    fn neighbor_density_values() {
        assert_relative_eq!(neighbor_density(22, 1.0), 7.002_817, epsilon = 1e-6);
        assert_relative_eq!(neighbor_density(29, 1.0), 9.230_986_699, epsilon = 1e-9);
        assert_eq!(neighbor_density(0, 1.0), 0.0);
        for l in 0..100 {
            assert_eq!((neighbor_density(l, 1.5) * PI * 1.5 * 1.5).round() as usize, l);
        }
    }

    #[test]
    fn mass_sampling() {
        let mut r = rng::stream(&[42]);
        let n = 100_000;
        let draws: Vec<f64> = (0..n).map(|_| sample_mass(&mut r)).collect();
        let mean = draws.iter().sum::<f64>() / n as f64;
        // N(70, 10) cut at -2 and +3 sd: 70 + 10 (phi(-2) - phi(3)) / (Phi(3) - Phi(-2))
        let phi = |z: f64| (-0.5 * z * z).exp() / (2.0 * PI).sqrt();
        let truncated_mean = 70.0 + 10.0 * (phi(-2.0) - phi(3.0)) / (0.998_650_1 - 0.022_750_1);
        assert!((truncated_mean - 70.508).abs() < 1e-3);
        assert!((mean - truncated_mean).abs() < 0.2, "mean {mean}");
        assert!(draws.iter().all(|m| (MASS_MIN..=MASS_MAX).contains(m)));
    }

    #[test]
    fn single_agent_never_flags() {
        let mut a = agent(0, 3.0, 4.0, -1.04, 0.0);
        a.prev_velocity = Vec2::new(-0.54, 0.0);
        a.mass = 100.0;
        let agents = [a];
        let idx = indexed(&agents);
        for cfg in [
            AssessmentConfig::pressure(1.0),
            AssessmentConfig::force(),
            AssessmentConfig::density(1.0),
        ] {
            let r = evaluate(&agents, &idx, &cfg, 0.1, 0);
            assert!(!r.stampede, "{:?}", cfg.method);
        }
    }

    #[test]
    fn stationary_crowd_has_no_pressure() {
        let agents: Vec<_> = (0..25)
            .map(|i| agent(i, (i % 5) as f64 * 0.4, (i / 5) as f64 * 0.4, 0.0, 0.0))
            .collect();
        let r = evaluate(&agents, &indexed(&agents), &AssessmentConfig::pressure(1.0), 0.1, 0);
        assert!(!r.stampede && !r.turbulence);
        assert_eq!(r.max_value, 0.0);
    }

    #[test]
    fn turbulence_below_stampede() {
        // isolated agents carry no variance; a close pair does
        let pair = [agent(0, 0.0, 0.0, 0.3, 0.0), agent(1, 8.0, 0.0, 0.0, 0.0)];
        let mut cfg = AssessmentConfig::pressure(1.0);
        let single = evaluate(&pair, &indexed(&pair), &cfg, 0.1, 0);
        assert!(!single.turbulence);
        let close = [agent(0, 0.0, 0.0, 0.3, 0.0), agent(1, 0.4, 0.0, 0.0, 0.0)];
        let r = evaluate(&close, &indexed(&close), &cfg, 0.1, 0);
        assert!(r.max_value > 0.0);
        cfg.pressure_threshold = r.max_value * 2.0;
        cfg.turbulence_threshold = r.max_value * 0.5;
        let r = evaluate(&close, &indexed(&close), &cfg, 0.1, 0);
        assert!(r.turbulence && !r.stampede);
    }

    #[test]
    fn method_parsing() {
        assert_eq!("Pressure".parse::<Method>().unwrap(), Method::Pressure);
        assert!("speed".parse::<Method>().is_err());
        assert_eq!(AssessmentConfig::pressure(2.0).label(), "pressure_R2");
        assert_eq!(AssessmentConfig::density(1.5).label(), "density_R1.5");
        assert_eq!(AssessmentConfig::force().label(), "force");
    }
}
