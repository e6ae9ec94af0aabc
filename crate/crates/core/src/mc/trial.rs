use std::time::{Duration, Instant};

use crate::assess::{evaluate, sample_mass, AssessmentConfig, DetectionReport, Method};
use crate::error::{invalid, Result};
use crate::noise::perturb_positions;
use crate::pedmodel::World;
use crate::rng;
use crate::scenario::Scenario;

/// Simulated seconds per trial.
pub const DEFAULT_HORIZON: f64 = 150.0;

#[derive(Debug, Clone, PartialEq)]
pub struct TrialSpec {
    pub method: AssessmentConfig,
    /// RMS position error `E`, m.
    pub rms_error: f64,
    pub agents: usize,
    pub horizon: f64,
    /// Overrides the scenario's time step when set.
    pub dt: Option<f64>,
    pub seed: u64,
    /// Keep simulating after the first detection.
    pub full_horizon: bool,
}

impl TrialSpec {
    pub fn new(method: AssessmentConfig, rms_error: f64, agents: usize, seed: u64) -> Self {
        Self {
            method,
            rms_error,
            agents,
            horizon: DEFAULT_HORIZON,
            dt: None,
            seed,
            full_horizon: false,
        }
    }

    pub fn validate(&self) -> Result<()> {
        self.method.validate()?;
        if self.agents == 0 {
            return Err(invalid("N", "need at least one agent"));
        }
        if !(self.horizon > 0.0 && self.horizon.is_finite()) {
            return Err(invalid("horizon", format!("must be positive, got {}", self.horizon)));
        }
        if !(self.rms_error >= 0.0 && self.rms_error.is_finite()) {
            return Err(invalid("E", format!("must be non-negative, got {}", self.rms_error)));
        }
        if let Some(dt) = self.dt {
            if !(dt > 0.0 && dt.is_finite()) {
                return Err(invalid("dt", format!("must be positive, got {dt}")));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrialOutcome {
    pub stampede: bool,
    /// First detecting step if any; otherwise the step with the largest value.
    pub report: Option<DetectionReport>,
    pub steps: u64,
    pub runtime: Duration,
}

pub fn run_trial(scenario: &Scenario, spec: &TrialSpec) -> Result<TrialOutcome> {
    run_trial_observed(scenario, spec, |_| {})
}

/// As [`run_trial`], calling `observe` on the initial (noisy) state and after
/// every step.
pub fn run_trial_observed<F>(scenario: &Scenario, spec: &TrialSpec, mut observe: F) -> Result<TrialOutcome>
where
    F: FnMut(&World),
{
    let start = Instant::now();
    spec.validate()?;
    let mut model = scenario.model.clone();
    if let Some(dt) = spec.dt {
        model.dt = dt;
    }
    model.validate()?;

    let mut agents = scenario.spawn_agents(spec.agents)?;
    let mut mass_rng = rng::stream(&[spec.seed, 1]);
    for a in &mut agents {
        a.mass = sample_mass(&mut mass_rng);
    }
    perturb_positions(&mut agents, spec.rms_error, &mut rng::stream(&[spec.seed, 2]))?;
    let mut world = World::new(agents, rng::derive_seed(&[spec.seed, 3]));

    let cell = match spec.method.method {
        Method::Force => 1.0,
        _ => spec.method.cutoff(),
    };
    let steps = (spec.horizon / model.dt).round() as u64;
    let mut first: Option<DetectionReport> = None;
    let mut peak: Option<DetectionReport> = None;
    loop {
        observe(&world);
        let index = world.index(cell)?;
        let report = evaluate(&world.agents, &index, &spec.method, model.dt, world.step);
        if report.stampede && first.is_none() {
            first = Some(report);
        }
        if peak.is_none_or(|p| report.max_value > p.max_value) {
            peak = Some(report);
        }
        if world.step >= steps || (first.is_some() && !spec.full_horizon) {
            break;
        }
        world.step(&scenario.map, &model)?;
    }
    Ok(TrialOutcome {
        stampede: first.is_some(),
        report: first.or(peak),
        steps: world.step,
        runtime: start.elapsed(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn short(method: AssessmentConfig, e: f64, n: usize, seed: u64) -> TrialSpec {
        TrialSpec {
            horizon: 5.0,
            ..TrialSpec::new(method, e, n, seed)
        }
    }

    #[test]
    fn single_agent_never_flags() {
        let s = Scenario::jamarat();
        for m in [
            AssessmentConfig::pressure(1.0),
            AssessmentConfig::force(),
            AssessmentConfig::density(1.0),
        ] {
            for e in [0.0, 10.0] {
                let o = run_trial(&s, &short(m, e, 1, 3)).unwrap();
                assert!(!o.stampede, "{} E={e}", m.label());
                assert_eq!(o.steps, 50);
            }
        }
    }

    #[test]
    fn packed_start_flags_density() {
        let s = Scenario::jamarat().with_spacing(0.35);
        let o = run_trial(&s, &short(AssessmentConfig::density(1.0), 0.0, 400, 1)).unwrap();
        assert!(o.stampede);
        assert_eq!(o.steps, 0);
        assert!(o.report.unwrap().max_value >= 7.0);
    }

    #[test]
    fn deterministic() {
        let s = Scenario::jamarat();
        let spec = short(AssessmentConfig::pressure(2.0), 3.0, 60, 42);
        let a = run_trial(&s, &spec).unwrap();
        let b = run_trial(&s, &spec).unwrap();
        assert_eq!((a.stampede, a.report, a.steps), (b.stampede, b.report, b.steps));
    }

    #[test]
    fn rejects_bad_specs() {
        let s = Scenario::jamarat();
        assert!(run_trial(&s, &short(AssessmentConfig::force(), 0.0, 0, 1)).is_err());
        let mut spec = short(AssessmentConfig::force(), 0.0, 1, 1);
        spec.horizon = 0.0;
        assert!(run_trial(&s, &spec).is_err());
        let spec = short(AssessmentConfig::force(), 0.0, s.spawn_capacity() + 1, 1);
        assert!(matches!(run_trial(&s, &spec), Err(crate::Error::SpawnOverflow { .. })));
    }

    #[test]
    fn full_horizon_keeps_going() {
        let s = Scenario::jamarat().with_spacing(0.35);
        let mut spec = short(AssessmentConfig::density(1.0), 0.0, 400, 1);
        spec.horizon = 1.0;
        spec.full_horizon = true;
        let mut seen = 0;
        let o = run_trial_observed(&s, &spec, |_| seen += 1).unwrap();
        assert!(o.stampede);
        assert_eq!(o.report.unwrap().step, 0);
        assert_eq!((o.steps, seen), (10, 11));
    }
}
