//! Two-dimensional incremental linear programming over velocity half-planes,
//! after the RVO2 solver, generalised to an anisotropic objective.
//!
//! The objective is the squared distance to the preferred velocity measured
//! with weights `1 : turning_bias` along and across the preferred direction.
//! Every per-line step is a one-dimensional quadratic, so the randomized
//! incremental argument still holds: if the optimum over the first `i`
//! constraints violates constraint `i + 1`, the new optimum lies on its line.

use crate::geom::Vec2;

const EPSILON: f64 = 1e-9;

/// Permitted velocities satisfy `(v - point) . normal >= 0`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HalfPlane {
    pub point: Vec2,
    pub normal: Vec2,
}

impl HalfPlane {
    /// Normalizes `normal`, which must be non-zero.
    pub fn new(point: Vec2, normal: Vec2) -> Self {
        Self {
            point,
            normal: normal.normalize_or_zero(),
        }
    }

    /// Boundary direction; the permitted side is on its left.
    pub fn direction(&self) -> Vec2 {
        Vec2::new(self.normal.y, -self.normal.x)
    }

    fn from_direction(point: Vec2, direction: Vec2) -> Self {
        Self {
            point,
            normal: direction.perp(),
        }
    }

    /// Signed amount by which `v` is outside the half-plane; `<= 0` inside.
    pub fn violation(&self, v: Vec2) -> f64 {
        -(v - self.point).dot(self.normal)
    }

    pub fn contains(&self, v: Vec2, tol: f64) -> bool {
        self.violation(v) <= tol
    }
}

/// Quadratic form with weight 1 along `axis` and `bias` across it.
#[derive(Debug, Clone, Copy)]
struct Metric {
    axis: Vec2,
    bias: f64,
}

impl Metric {
    fn new(v_pref: Vec2, turning_bias: f64) -> Self {
        let axis = v_pref.normalize_or_zero();
        if axis == Vec2::ZERO || turning_bias == 1.0 {
            Metric {
                axis: Vec2::new(1.0, 0.0),
                bias: 1.0,
            }
        } else {
            Metric {
                axis,
                bias: turning_bias,
            }
        }
    }

    fn inner(&self, a: Vec2, b: Vec2) -> f64 {
        let n = self.axis.perp();
        a.dot(self.axis) * b.dot(self.axis) + self.bias * a.dot(n) * b.dot(n)
    }
}

/// Weighted squared distance used as the objective.
pub fn weighted_distance_sq(v: Vec2, v_pref: Vec2, turning_bias: f64) -> f64 {
    let m = Metric::new(v_pref, turning_bias);
    let d = v - v_pref;
    m.inner(d, d)
}

/// Picks the velocity closest to `v_pref` that satisfies every half-plane and
/// `|v| <= max_speed`. The first `hard` planes (obstacles) are kept when the
/// problem is infeasible; the remainder are then relaxed by minimizing the
/// largest violation.
pub fn solve_velocity(planes: &[HalfPlane], hard: usize, v_pref: Vec2, max_speed: f64, turning_bias: f64) -> Vec2 {
    debug_assert!(max_speed > 0.0);
    debug_assert!(hard <= planes.len());
    let metric = Metric::new(v_pref, turning_bias);
    let mut result = Vec2::ZERO;
    let failed = program2(planes, max_speed, v_pref, false, &metric, &mut result);
    if failed < planes.len() {
        program3(planes, hard, failed, max_speed, &mut result);
    }
    result
}

fn program1(
    planes: &[HalfPlane],
    line_no: usize,
    radius: f64,
    opt: Vec2,
    direction_opt: bool,
    metric: &Metric,
) -> Option<Vec2> {
    let line = &planes[line_no];
    let dir = line.direction();
    let dot = line.point.dot(dir);
    let discriminant = dot * dot + radius * radius - line.point.length_squared();
    if discriminant < 0.0 {
        // the speed disc misses this line entirely
        return None;
    }
    let sqrt_disc = discriminant.sqrt();
    let mut t_left = -dot - sqrt_disc;
    let mut t_right = -dot + sqrt_disc;

    for other in &planes[..line_no] {
        let other_dir = other.direction();
        let denominator = dir.det(other_dir);
        let numerator = other_dir.det(line.point - other.point);
        if denominator.abs() <= EPSILON {
            // parallel lines
            if numerator < 0.0 {
                return None;
            }
            continue;
        }
        let t = numerator / denominator;
        if denominator >= 0.0 {
            t_right = t_right.min(t);
        } else {
            t_left = t_left.max(t);
        }
        if t_left > t_right {
            return None;
        }
    }

    let t = if direction_opt {
        if opt.dot(dir) > 0.0 {
            t_right
        } else {
            t_left
        }
    } else {
        let t = metric.inner(dir, opt - line.point) / metric.inner(dir, dir);
        t.clamp(t_left, t_right)
    };
    Some(line.point + dir * t)
}

/// Returns the index of the first plane that could not be satisfied, or
/// `planes.len()` on success.
fn program2(
    planes: &[HalfPlane],
    radius: f64,
    opt: Vec2,
    direction_opt: bool,
    metric: &Metric,
    result: &mut Vec2,
) -> usize {
    *result = if direction_opt {
        opt * radius
    } else if opt.length_squared() > radius * radius {
        // opt lies on the metric's principal axis, so radial scaling is the
        // weighted projection onto the disc
        opt.normalize_or_zero() * radius
    } else {
        opt
    };

    for i in 0..planes.len() {
        if planes[i].direction().det(planes[i].point - *result) > 0.0 {
            match program1(planes, i, radius, opt, direction_opt, metric) {
                Some(r) => *result = r,
                None => return i,
            }
        }
    }
    planes.len()
}

fn program3(planes: &[HalfPlane], hard: usize, begin: usize, radius: f64, result: &mut Vec2) {
    let iso = Metric {
        axis: Vec2::new(1.0, 0.0),
        bias: 1.0,
    };
    let mut distance = 0.0;
    for i in begin..planes.len() {
        let dir_i = planes[i].direction();
        if dir_i.det(planes[i].point - *result) <= distance {
            continue;
        }
        let mut projected: Vec<HalfPlane> = planes[..hard].to_vec();
        for j in hard..i {
            let dir_j = planes[j].direction();
            let determinant = dir_i.det(dir_j);
            let point = if determinant.abs() <= EPSILON {
                if dir_i.dot(dir_j) > 0.0 {
                    continue;
                }
                (planes[i].point + planes[j].point) * 0.5
            } else {
                planes[i].point + dir_i * (dir_j.det(planes[i].point - planes[j].point) / determinant)
            };
            let direction = (dir_j - dir_i).normalize_or_zero();
            projected.push(HalfPlane::from_direction(point, direction));
        }
        let previous = *result;
        let opt = Vec2::new(-dir_i.y, dir_i.x);
        if program2(&projected, radius, opt, true, &iso, result) < projected.len() {
            // only numerical error can get here; keep the last good answer
            *result = previous;
        }
        distance = dir_i.det(planes[i].point - *result);
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn unconstrained_returns_preference() {
        let v = Vec2::new(0.7, -0.4);
        assert_eq!(solve_velocity(&[], 0, v, 2.0, 1.0), v);
        assert_eq!(solve_velocity(&[], 0, v, 2.0, 3.0), v);
    }

    #[test]
    fn preference_outside_disc_is_scaled() {
        let v = solve_velocity(&[], 0, Vec2::new(3.0, 4.0), 2.0, 1.0);
        assert!((v - Vec2::new(1.2, 1.6)).length() < 1e-12);
    }

    #[test]
    fn single_constraint_orthogonal_projection() {
        // permitted: v.x <= 0.5
        let plane = HalfPlane::new(Vec2::new(0.5, 0.0), Vec2::new(-1.0, 0.0));
        let v = solve_velocity(&[plane], 0, Vec2::new(1.0, 0.3), 2.0, 1.0);
        assert!((v - Vec2::new(0.5, 0.3)).length() < 1e-12);
    }

    #[test]
    fn oblique_constraint_projection() {
        let n = Vec2::new(-1.0, -1.0).normalize_or_zero();
        let plane = HalfPlane::new(Vec2::new(0.5, 0.0), n);
        let pref = Vec2::new(1.0, 1.0);
        let v = solve_velocity(&[plane], 0, pref, 2.0, 1.0);
        // projection of (1,1) onto x + y = 0.5
        assert!((v - Vec2::new(0.25, 0.25)).length() < 1e-12);
        assert!(plane.contains(v, 1e-12));
    }

    #[test]
    fn turning_bias_prefers_slowing_over_turning() {
        // constraint line tilted so the optimum trades speed against heading
        let n = Vec2::new(-1.0, -0.5).normalize_or_zero();
        let plane = HalfPlane::new(Vec2::new(0.6, 0.0), n);
        let pref = Vec2::new(1.0, 0.0);
        let iso = solve_velocity(&[plane], 0, pref, 2.0, 1.0);
        let biased = solve_velocity(&[plane], 0, pref, 2.0, 10.0);
        assert!(biased.y.abs() < iso.y.abs());
        assert!(plane.contains(biased, 1e-12));
    }

    #[test]
    fn infeasible_falls_back_to_least_violation() {
        // v.x >= 1 and v.x <= -1 cannot both hold
        let a = HalfPlane::new(Vec2::new(1.0, 0.0), Vec2::new(1.0, 0.0));
        let b = HalfPlane::new(Vec2::new(-1.0, 0.0), Vec2::new(-1.0, 0.0));
        let v = solve_velocity(&[a, b], 0, Vec2::new(0.0, 1.0), 2.0, 1.0);
        assert!(v.is_finite());
        assert!(v.x.abs() < 1e-9);
        assert!((a.violation(v) - b.violation(v)).abs() < 1e-9);
    }

    #[test]
    fn hard_planes_survive_fallback() {
        let wall = HalfPlane::new(Vec2::new(0.0, 0.0), Vec2::new(0.0, 1.0)); // v.y >= 0
        let a = HalfPlane::new(Vec2::new(1.0, 0.0), Vec2::new(1.0, 0.0));
        let b = HalfPlane::new(Vec2::new(-1.0, 0.0), Vec2::new(-1.0, 0.0));
        let v = solve_velocity(&[wall, a, b], 1, Vec2::new(0.0, -1.0), 2.0, 1.0);
        assert!(wall.contains(v, 1e-9));
        assert!(v.length() <= 2.0 + 1e-9);
    }
}
