//! Pedestrian model: preferred velocity from the itinerary, a stride-length
//! speed ceiling, and reciprocal velocity-obstacle avoidance solved as a small
//! linear program per agent.

mod lp;
mod orca;
mod stride;

pub use lp::{solve_velocity, weighted_distance_sq, HalfPlane};
pub use orca::{agent_halfplane, obstacle_halfplane, vo_halfplanes};
pub use stride::{free_distance, speed_for_clearance, stride_cap};

use rand::Rng;
use rand_distr::{Distribution, Exp};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::agent::{AgentState, BehaviorPhase};
use crate::error::{invalid, Result};
use crate::geom::{Segment, Vec2};
use crate::index::SpatialIndex;
use crate::rng;
use crate::venue::VenueMap;

/// Below this many agents a step runs serially.
const PARALLEL_THRESHOLD: usize = 128;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PedModelConfig {
    /// Stride length per unit speed.
    pub factor: f64,
    /// Stride buffer, in units of body radius.
    pub buffer: f64,
    pub tau: f64,
    pub tau_obst: f64,
    pub turning_bias: f64,
    pub density_aware: bool,
    pub dt: f64,
    pub pref_speed: f64,
    pub max_speed: f64,
    pub max_pref_accel: f64,
    pub neighbor_limit_radius: f64,
    pub max_neighbors: usize,
}

impl Default for PedModelConfig {
    fn default() -> Self {
        Self {
            factor: 1.57,
            buffer: 0.9,
            tau: 3.0,
            tau_obst: 0.1,
            turning_bias: 1.0,
            density_aware: false,
            dt: 0.1,
            pref_speed: 1.04,
            max_speed: 2.0,
            max_pref_accel: 5.0,
            neighbor_limit_radius: 5.0,
            max_neighbors: 10,
        }
    }
}

impl PedModelConfig {
    pub fn validate(&self) -> Result<()> {
        let positive = [
            ("factor", self.factor),
            ("tau", self.tau),
            ("tau_obst", self.tau_obst),
            ("turning_bias", self.turning_bias),
            ("dt", self.dt),
            ("pref_speed", self.pref_speed),
            ("max_speed", self.max_speed),
            ("max_pref_accel", self.max_pref_accel),
            ("neighbor_limit_radius", self.neighbor_limit_radius),
        ];
        for (name, v) in positive {
            if !(v > 0.0 && v.is_finite()) {
                return Err(invalid(name, format!("must be positive, got {v}")));
            }
        }
        if !(self.buffer >= 0.0) {
            return Err(invalid("buffer", "must be non-negative"));
        }
        if self.pref_speed > self.max_speed {
            return Err(invalid("pref_speed", "must not exceed max_speed"));
        }
        Ok(())
    }
}

/// Unclamped pursuit velocity for the agent's current phase.
fn pursuit_velocity(agent: &AgentState, map: &VenueMap, speed: f64) -> Vec2 {
    let target = match agent.behavior {
        BehaviorPhase::Waiting { .. } | BehaviorPhase::Done => return Vec2::ZERO,
        BehaviorPhase::Travelling { waypoint } => match map.waypoints.get(waypoint) {
            Some(w) => w.center,
            None => map.exit_line.closest_point(agent.position),
        },
        BehaviorPhase::Exiting => map.exit_line.closest_point(agent.position),
    };
    (target - agent.position).normalize_or_zero() * speed
}

/// Preferred velocity, with its change since the previous step limited to
/// `max_pref_accel * dt`.
pub fn preferred_velocity(agent: &AgentState, map: &VenueMap, cfg: &PedModelConfig) -> Vec2 {
    let goal = pursuit_velocity(agent, map, agent.pref_speed);
    let delta = (goal - agent.pref_velocity).clamp_length(cfg.max_pref_accel * cfg.dt);
    agent.pref_velocity + delta
}

/// Weidmann's fundamental diagram, used only when `density_aware` is set.
fn weidmann_factor(density: f64) -> f64 {
    const GAMMA: f64 = 1.913;
    const JAM_DENSITY: f64 = 5.4;
    if density <= 0.0 {
        return 1.0;
    }
    (1.0 - (-GAMMA * (1.0 / density - 1.0 / JAM_DENSITY)).exp()).clamp(0.0, 1.0)
}

/// Agents advanced together, with the step counter and master seed that key
/// every per-agent random draw.
#[derive(Debug, Clone, PartialEq)]
pub struct World {
    pub agents: Vec<AgentState>,
    pub step: u64,
    pub seed: u64,
}

/// Velocity decision for one agent, computed from the pre-step snapshot.
#[derive(Debug, Clone, Copy)]
struct Decision {
    pref: Vec2,
    velocity: Vec2,
}

impl World {
    pub fn new(agents: Vec<AgentState>, seed: u64) -> Self {
        Self { agents, step: 0, seed }
    }

    pub fn time(&self, dt: f64) -> f64 {
        self.step as f64 * dt
    }

    pub fn active_count(&self) -> usize {
        self.agents.iter().filter(|a| a.behavior.is_active()).count()
    }

    /// Index over active agents only.
    pub fn index(&self, cell_size: f64) -> Result<SpatialIndex> {
        SpatialIndex::build_filtered(&self.agents, cell_size, |a| a.behavior.is_active())
    }

    /// Advances every active agent by one time step.
    ///
    /// New velocities are computed from the current snapshot (in parallel for
    /// large crowds), then positions and behaviour phases are committed.
    pub fn step(&mut self, map: &VenueMap, cfg: &PedModelConfig) -> Result<()> {
        let index = self.index(cfg.neighbor_limit_radius * 0.5)?;
        let agents = &self.agents;
        let decide = |i: usize| decide(i, agents, &index, map, cfg);
        let decisions: Vec<Option<Decision>> = if agents.len() >= PARALLEL_THRESHOLD {
            (0..agents.len()).into_par_iter().map(decide).collect()
        } else {
            (0..agents.len()).map(decide).collect()
        };

        let step = self.step;
        let seed = self.seed;
        for (agent, decision) in self.agents.iter_mut().zip(decisions) {
            let Some(d) = decision else { continue };
            let old = agent.position;
            agent.prev_velocity = agent.velocity;
            agent.velocity = d.velocity;
            agent.pref_velocity = d.pref;
            agent.position += d.velocity * cfg.dt;
            advance_behavior(agent, old, map, cfg.dt, seed, step);
        }
        self.step += 1;
        Ok(())
    }
}

fn decide(
    i: usize,
    agents: &[AgentState],
    index: &SpatialIndex,
    map: &VenueMap,
    cfg: &PedModelConfig,
) -> Option<Decision> {
    let agent = &agents[i];
    if !agent.behavior.is_active() {
        return None;
    }
    let mut near: Vec<(f64, usize)> = Vec::new();
    index.for_each_within(agents, agent.position, cfg.neighbor_limit_radius, |j, d_sq| {
        if j != i {
            near.push((d_sq, j));
        }
    });
    if near.len() > cfg.max_neighbors {
        near.select_nth_unstable_by(cfg.max_neighbors, |a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
        near.truncate(cfg.max_neighbors);
    }
    near.sort_unstable_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
    let neighbors: Vec<&AgentState> = near.iter().map(|&(_, j)| &agents[j]).collect();

    let obstacles = nearby_obstacles(&map.obstacles, agent.position, cfg.neighbor_limit_radius);

    let mut pref = preferred_velocity(agent, map, cfg);
    if cfg.density_aware {
        let crowd = near.iter().filter(|(d_sq, _)| *d_sq <= 1.0).count() + 1;
        pref = pref * weidmann_factor(crowd as f64 / std::f64::consts::PI);
    }
    let cap = stride_cap(agent, &neighbors, &obstacles, pref, cfg);
    pref = pref.clamp_length(cap);

    let (planes, hard) = vo_halfplanes(agent, &neighbors, &obstacles, cfg);
    let velocity = solve_velocity(&planes, hard, pref, agent.max_speed, cfg.turning_bias).clamp_length(agent.max_speed);
    let velocity = if velocity.is_finite() { velocity } else { Vec2::ZERO };
    Some(Decision { pref, velocity })
}

fn nearby_obstacles(obstacles: &[Segment], p: Vec2, range: f64) -> Vec<Segment> {
    obstacles
        .iter()
        .filter(|s| s.distance_to(p) <= range)
        .copied()
        .collect()
}

/// Phase transitions after a move from `old` to the agent's new position.
fn advance_behavior(agent: &mut AgentState, old: Vec2, map: &VenueMap, dt: f64, seed: u64, step: u64) {
    agent.behavior = match agent.behavior {
        BehaviorPhase::Travelling { waypoint } => match map.waypoints.get(waypoint) {
            None => BehaviorPhase::Exiting,
            Some(w) if agent.position.distance(w.center) <= w.arrival_radius => {
                let mut r = rng::stream(&[seed, agent.id as u64, step]);
                let remaining = draw_wait(w.mean_wait, &mut r);
                if remaining > 0.0 {
                    BehaviorPhase::Waiting { remaining, waypoint }
                } else {
                    next_leg(waypoint, map)
                }
            }
            Some(_) => agent.behavior,
        },
        BehaviorPhase::Waiting { remaining, waypoint } => {
            let remaining = remaining - dt;
            if remaining > 0.0 {
                BehaviorPhase::Waiting { remaining, waypoint }
            } else {
                next_leg(waypoint, map)
            }
        }
        BehaviorPhase::Exiting => {
            let path = Segment::new(old, agent.position);
            if path.intersects(&map.exit_line) || map.exit_line.distance_to(agent.position) <= agent.radius {
                BehaviorPhase::Done
            } else {
                BehaviorPhase::Exiting
            }
        }
        BehaviorPhase::Done => BehaviorPhase::Done,
    };
    if agent.behavior == BehaviorPhase::Done {
        agent.prev_velocity = agent.velocity;
        agent.velocity = Vec2::ZERO;
        agent.pref_velocity = Vec2::ZERO;
    }
}

fn next_leg(waypoint: usize, map: &VenueMap) -> BehaviorPhase {
    if waypoint + 1 < map.waypoints.len() {
        BehaviorPhase::Travelling { waypoint: waypoint + 1 }
    } else {
        BehaviorPhase::Exiting
    }
}

/// Exponential dwell time with the given mean; zero mean means no stop.
pub fn draw_wait<R: Rng + ?Sized>(mean: f64, rng: &mut R) -> f64 {
    if mean <= 0.0 {
        return 0.0;
    }
    Exp::new(1.0 / mean).map(|d| d.sample(rng)).unwrap_or(mean)
}

/// Initial phase for a freshly spawned agent.
pub fn initial_phase(map: &VenueMap) -> BehaviorPhase {
    if map.waypoints.is_empty() {
        BehaviorPhase::Exiting
    } else {
        BehaviorPhase::Travelling { waypoint: 0 }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geom::Rect;
    use crate::venue::Waypoint;

    fn one_waypoint_map() -> VenueMap {
        VenueMap {
            obstacles: vec![],
            spawn_region: Rect::new(Vec2::new(5.0, -5.0), Vec2::new(20.0, 5.0)),
            waypoints: vec![Waypoint {
                center: Vec2::new(0.0, 0.0),
                arrival_radius: 2.0,
                mean_wait: 60.0,
            }],
            exit_line: Segment::new(Vec2::new(-100.0, -50.0), Vec2::new(-100.0, 50.0)),
            bounds: Rect::new(Vec2::new(-100.0, -50.0), Vec2::new(100.0, 50.0)),
        }
    }

    #[test]
    fn waiting_agent_prefers_rest() {
        let cfg = PedModelConfig::default();
        let a = AgentState::new(0, Vec2::new(1.0, 0.0)).with_behavior(BehaviorPhase::Waiting {
            remaining: 10.0,
            waypoint: 0,
        });
        assert_eq!(preferred_velocity(&a, &one_waypoint_map(), &cfg), Vec2::ZERO);
    }

    #[test]
    fn straight_pursuit() {
        let cfg = PedModelConfig::default();
        let a = AgentState::new(0, Vec2::new(10.0, 0.0)).with_velocity(Vec2::new(-1.04, 0.0));
        let v = preferred_velocity(&a, &one_waypoint_map(), &cfg);
        assert!((v - Vec2::new(-1.04, 0.0)).length() < 1e-12);
    }

    #[test]
    fn preferred_velocity_change_is_clamped() {
        let cfg = PedModelConfig::default();
        let a = AgentState::new(0, Vec2::new(10.0, 0.0)).with_velocity(Vec2::new(1.04, 0.0));
        let v = preferred_velocity(&a, &one_waypoint_map(), &cfg);
        assert!(((v - Vec2::new(1.04, 0.0)).length() - 0.5).abs() < 1e-12);
    }

    #[test]
    fn config_validation() {
        assert!(PedModelConfig::default().validate().is_ok());
        let bad = PedModelConfig {
            dt: 0.0,
            ..Default::default()
        };
        assert!(bad.validate().is_err());
        let bad = PedModelConfig {
            pref_speed: 3.0,
            ..Default::default()
        };
        assert!(bad.validate().is_err());
    }

    #[test]
    fn weidmann_is_monotone() {
        assert!(weidmann_factor(0.5) > weidmann_factor(2.0));
        assert_eq!(weidmann_factor(6.0), 0.0);
    }

    #[test]
    fn zero_mean_wait_skips() {
        let mut r = rng::stream(&[1]);
        assert_eq!(draw_wait(0.0, &mut r), 0.0);
        assert!(draw_wait(60.0, &mut r) > 0.0);
    }
}
