use crate::error::{invalid, Result};
use crate::geom::{Rect, Segment, Vec2};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Waypoint {
    pub center: Vec2,
    pub arrival_radius: f64,
    /// Mean of the exponential dwell time, seconds.
    pub mean_wait: f64,
}

/// Walkable world: walls and pillars as segments, an ordered itinerary of
/// waypoints, and the exit line agents leave through.
#[derive(Debug, Clone, PartialEq)]
pub struct VenueMap {
    pub obstacles: Vec<Segment>,
    pub spawn_region: Rect,
    pub waypoints: Vec<Waypoint>,
    pub exit_line: Segment,
    pub bounds: Rect,
}

impl VenueMap {
    pub fn validate(&self) -> Result<()> {
        for (i, s) in self.obstacles.iter().enumerate() {
            if !(s.a.is_finite() && s.b.is_finite()) {
                return Err(invalid("obstacles", format!("segment {i} is not finite")));
            }
            if s.length() <= 0.0 {
                return Err(invalid("obstacles", format!("segment {i} has zero length")));
            }
        }
        if self.exit_line.length() <= 0.0 {
            return Err(invalid("exit_line", "zero length"));
        }
        if self.spawn_region.width() <= 0.0 || self.spawn_region.height() <= 0.0 {
            return Err(invalid("spawn_region", "empty rectangle"));
        }
        for (i, w) in self.waypoints.iter().enumerate() {
            if !(w.arrival_radius > 0.0) {
                return Err(invalid(
                    "waypoints",
                    format!("waypoint {i}: arrival radius must be positive"),
                ));
            }
            if !(w.mean_wait >= 0.0) {
                return Err(invalid(
                    "waypoints",
                    format!("waypoint {i}: mean wait must be non-negative"),
                ));
            }
        }
        Ok(())
    }

    /// An empty corridor: no obstacles or waypoints, exit line at `x = exit_x`.
    pub fn open_field(exit_x: f64) -> Self {
        Self {
            obstacles: Vec::new(),
            spawn_region: Rect::new(Vec2::new(exit_x + 1.0, -10.0), Vec2::new(exit_x + 50.0, 10.0)),
            waypoints: Vec::new(),
            exit_line: Segment::new(Vec2::new(exit_x, -1.0e4), Vec2::new(exit_x, 1.0e4)),
            bounds: Rect::new(Vec2::new(exit_x, -1.0e4), Vec2::new(exit_x + 1.0e4, 1.0e4)),
        }
    }
}
