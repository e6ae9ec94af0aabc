//! Stride-length speed ceiling: a walker needs room for one stride plus a
//! psychological buffer ahead of them, which yields the fundamental diagram.

use super::PedModelConfig;
use crate::agent::AgentState;
use crate::geom::{Segment, Vec2};

const CONE_HALF_ANGLE: f64 = std::f64::consts::FRAC_PI_4;

/// Speed ceiling from the clear distance ahead along `heading`.
pub fn stride_cap(
    agent: &AgentState,
    neighbors: &[&AgentState],
    obstacles: &[Segment],
    heading: Vec2,
    cfg: &PedModelConfig,
) -> f64 {
    let axis = heading.normalize_or_zero();
    if axis == Vec2::ZERO {
        return agent.max_speed;
    }
    match free_distance(agent, neighbors, obstacles, axis) {
        Some(d_free) => speed_for_clearance(d_free, agent.radius, cfg).min(agent.max_speed),
        None => agent.max_speed,
    }
}

/// `max(0, (d_free - buffer * radius) / factor)`.
pub fn speed_for_clearance(d_free: f64, radius: f64, cfg: &PedModelConfig) -> f64 {
    ((d_free - cfg.buffer * radius) / cfg.factor).max(0.0)
}

/// Clear distance to the nearest blocker inside the forward cone, if any.
pub fn free_distance(agent: &AgentState, neighbors: &[&AgentState], obstacles: &[Segment], axis: Vec2) -> Option<f64> {
    let cos_limit = CONE_HALF_ANGLE.cos();
    let mut best: Option<f64> = None;
    let mut consider = |d: f64| {
        let d = d.max(0.0);
        best = Some(best.map_or(d, |b: f64| b.min(d)));
    };
    for n in neighbors {
        let offset = n.position - agent.position;
        let dist = offset.length();
        if dist > 0.0 && offset.dot(axis) >= dist * cos_limit - 1e-12 {
            consider(dist - agent.radius - n.radius);
        }
    }
    for seg in obstacles {
        if let Some(clipped) = clip_to_cone(seg, agent.position, axis) {
            consider(clipped.distance_to(agent.position) - agent.radius);
        }
    }
    best
}

/// Part of `seg` inside the 90-degree wedge at `apex` around `axis`.
fn clip_to_cone(seg: &Segment, apex: Vec2, axis: Vec2) -> Option<Segment> {
    let left = axis.rotate(CONE_HALF_ANGLE);
    let right = axis.rotate(-CONE_HALF_ANGLE);
    let (mut t0, mut t1) = (0.0_f64, 1.0_f64);
    let d = seg.b - seg.a;
    // inside iff det(right, x - apex) >= 0 and det(x - apex, left) >= 0
    for (f0, df) in [
        (right.det(seg.a - apex), right.det(d)),
        ((seg.a - apex).det(left), d.det(left)),
    ] {
        if df.abs() < 1e-15 {
            if f0 < 0.0 {
                return None;
            }
            continue;
        }
        let t = -f0 / df;
        if df > 0.0 {
            t0 = t0.max(t);
        } else {
            t1 = t1.min(t);
        }
        if t0 > t1 {
            return None;
        }
    }
    Some(Segment::new(seg.a + d * t0, seg.a + d * t1))
}
