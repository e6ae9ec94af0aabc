//! Reciprocal velocity-obstacle constraints.

use super::lp::HalfPlane;
use super::PedModelConfig;
use crate::agent::AgentState;
use crate::geom::{Segment, Vec2};

/// Obstacle planes come first in the returned list; the count of them is the
/// second element.
pub fn vo_halfplanes(
    agent: &AgentState,
    neighbors: &[&AgentState],
    obstacles: &[Segment],
    cfg: &PedModelConfig,
) -> (Vec<HalfPlane>, usize) {
    let mut planes = Vec::with_capacity(neighbors.len() + 4);
    let horizon = cfg.tau_obst.max(cfg.dt);
    let reach = agent.radius + agent.max_speed * horizon * 2.0;
    for seg in obstacles {
        if let Some(p) = obstacle_halfplane(agent, seg, horizon, reach) {
            planes.push(p);
        }
    }
    let hard = planes.len();
    planes.extend(neighbors.iter().map(|n| agent_halfplane(agent, n, cfg.tau, cfg.dt)));
    (planes, hard)
}

/// Limits the approach speed toward the closest point of `seg` so the
/// agent's disc cannot reach the segment within `horizon`. Distance to a
/// segment is convex along any straight path, so the linearized bound holds
/// for the whole step.
pub fn obstacle_halfplane(agent: &AgentState, seg: &Segment, horizon: f64, reach: f64) -> Option<HalfPlane> {
    let closest = seg.closest_point(agent.position);
    let to_obstacle = closest - agent.position;
    let dist = to_obstacle.length();
    if dist > reach {
        return None;
    }
    let toward = if dist > 1e-12 {
        to_obstacle / dist
    } else {
        // centre on the segment itself: push out along the left normal
        -(seg.b - seg.a).perp().normalize_or_zero()
    };
    let limit = (dist - agent.radius) / horizon;
    Some(HalfPlane::new(toward * limit, -toward))
}

/// ORCA half-plane with half the avoidance responsibility.
pub fn agent_halfplane(agent: &AgentState, other: &AgentState, tau: f64, dt: f64) -> HalfPlane {
    let rel_pos = other.position - agent.position;
    let rel_vel = agent.velocity - other.velocity;
    let dist_sq = rel_pos.length_squared();
    let combined = agent.radius + other.radius;
    let combined_sq = combined * combined;

    let (direction, u);
    if dist_sq > combined_sq {
        let inv_tau = 1.0 / tau;
        // vector from cutoff-circle centre to relative velocity
        let w = rel_vel - rel_pos * inv_tau;
        let w_len_sq = w.length_squared();
        let dot1 = w.dot(rel_pos);
        if dot1 < 0.0 && dot1 * dot1 > combined_sq * w_len_sq {
            // project on the cutoff circle
            let w_len = w_len_sq.sqrt();
            let unit_w = w / w_len;
            direction = Vec2::new(unit_w.y, -unit_w.x);
            u = unit_w * (combined * inv_tau - w_len);
        } else {
            // project on a leg of the cone
            let leg = (dist_sq - combined_sq).sqrt();
            direction = if rel_pos.det(w) > 0.0 {
                Vec2::new(
                    rel_pos.x * leg - rel_pos.y * combined,
                    rel_pos.x * combined + rel_pos.y * leg,
                ) / dist_sq
            } else {
                -Vec2::new(
                    rel_pos.x * leg + rel_pos.y * combined,
                    -rel_pos.x * combined + rel_pos.y * leg,
                ) / dist_sq
            };
            u = direction * rel_vel.dot(direction) - rel_vel;
        }
    } else {
        // already overlapping: separate within one step
        let inv_dt = 1.0 / dt;
        let w = rel_vel - rel_pos * inv_dt;
        let w_len = w.length();
        let unit_w = if w_len > 1e-12 {
            w / w_len
        } else if agent.id < other.id {
            Vec2::new(-1.0, 0.0)
        } else {
            Vec2::new(1.0, 0.0)
        };
        direction = Vec2::new(unit_w.y, -unit_w.x);
        u = unit_w * (combined * inv_dt - w_len);
    }
    HalfPlane::new(agent.velocity + u * 0.5, direction.perp())
}
