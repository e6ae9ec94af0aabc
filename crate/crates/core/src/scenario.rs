//! Scenario files: venue geometry, itinerary, spawn grid, model parameters
//! and an optional geographic anchor, stored as TOML.

use serde::{Deserialize, Serialize};

use crate::agent::{AgentState, DEFAULT_RADIUS};
use crate::error::{invalid, Error, Result};
use crate::geo::GeoOrigin;
use crate::geom::{Rect, Segment, Vec2};
use crate::pedmodel::{initial_phase, PedModelConfig};
use crate::venue::{VenueMap, Waypoint};

const JAMARAT: &str = include_str!("../scenarios/jamarat.toml");

type Point = [f64; 2];

fn pt(p: Point) -> Vec2 {
    Vec2::new(p[0], p[1])
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RectSpec {
    pub min: Point,
    pub max: Point,
}

impl RectSpec {
    fn to_rect(&self) -> Rect {
        Rect::new(pt(self.min), pt(self.max))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PillarSpec {
    pub center: Point,
    pub half_size: Point,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct VenueSpec {
    pub exit_line: [Point; 2],
    pub bounds: RectSpec,
    /// Open polylines; consecutive points form wall segments.
    #[serde(default)]
    pub walls: Vec<Vec<Point>>,
    /// Axis-aligned rectangular obstacles.
    #[serde(default)]
    pub pillars: Vec<PillarSpec>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct WaypointSpec {
    pub center: Point,
    pub arrival_radius: f64,
    pub mean_wait: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SpawnSpec {
    pub region: RectSpec,
    pub spacing: f64,
}

/// On-disk scenario document.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioFile {
    pub venue: VenueSpec,
    #[serde(default)]
    pub waypoints: Vec<WaypointSpec>,
    pub spawn: SpawnSpec,
    #[serde(default)]
    pub model: PedModelConfig,
    pub geo: Option<GeoOrigin>,
}

impl ScenarioFile {
    pub fn parse(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| Error::Scenario(e.to_string()))
    }

    pub fn to_toml(&self) -> Result<String> {
        toml::to_string(self).map_err(|e| Error::Scenario(e.to_string()))
    }

    pub fn build(&self) -> Result<Scenario> {
        let mut obstacles = Vec::new();
        for (w, chain) in self.venue.walls.iter().enumerate() {
            if chain.len() < 2 {
                return Err(invalid("venue.walls", format!("wall {w} needs at least two points")));
            }
            obstacles.extend(chain.windows(2).map(|p| Segment::new(pt(p[0]), pt(p[1]))));
        }
        for (i, p) in self.venue.pillars.iter().enumerate() {
            if !(p.half_size[0] > 0.0 && p.half_size[1] > 0.0) {
                return Err(invalid("venue.pillars", format!("pillar {i} must have positive size")));
            }
            let c = pt(p.center);
            let h = pt(p.half_size);
            obstacles.extend(Rect::new(c - h, c + h).edges());
        }
        let map = VenueMap {
            obstacles,
            spawn_region: self.spawn.region.to_rect(),
            waypoints: self
                .waypoints
                .iter()
                .map(|w| Waypoint {
                    center: pt(w.center),
                    arrival_radius: w.arrival_radius,
                    mean_wait: w.mean_wait,
                })
                .collect(),
            exit_line: Segment::new(pt(self.venue.exit_line[0]), pt(self.venue.exit_line[1])),
            bounds: self.venue.bounds.to_rect(),
        };
        map.validate()?;
        self.model.validate()?;
        if let Some(g) = &self.geo {
            g.validate()?;
        }
        if !(self.spawn.spacing > 0.0) {
            return Err(invalid("spawn.spacing", "must be positive"));
        }
        Ok(Scenario {
            map,
            spawn_spacing: self.spawn.spacing,
            model: self.model.clone(),
            geo: self.geo,
        })
    }
}

/// Validated scenario ready for simulation.
#[derive(Debug, Clone, PartialEq)]
pub struct Scenario {
    pub map: VenueMap,
    pub spawn_spacing: f64,
    pub model: PedModelConfig,
    pub geo: Option<GeoOrigin>,
}

impl Scenario {
    pub fn from_toml(text: &str) -> Result<Self> {
        ScenarioFile::parse(text)?.build()
    }

    /// The bundled three-pillar bridge venue.
    pub fn jamarat() -> Self {
        Self::from_toml(JAMARAT).expect("bundled scenario is valid")
    }

    pub fn jamarat_source() -> &'static str {
        JAMARAT
    }

    pub fn with_spacing(mut self, spacing: f64) -> Self {
        self.spawn_spacing = spacing;
        self
    }

    /// Number of grid slots in the spawn region.
    pub fn spawn_capacity(&self) -> usize {
        let (rows, cols) = self.grid_dims();
        rows * cols
    }

    fn grid_dims(&self) -> (usize, usize) {
        let r = &self.map.spawn_region;
        let s = self.spawn_spacing;
        ((r.height() / s).floor() as usize, (r.width() / s).floor() as usize)
    }

    /// Grid slots for `n` agents, filled one column across the ramp at a time
    /// starting at the bridge end. A partial column is centred on the ramp.
    pub fn spawn_positions(&self, n: usize) -> Result<Vec<Vec2>> {
        let (max_rows, max_cols) = self.grid_dims();
        let capacity = max_rows * max_cols;
        if n > capacity {
            return Err(Error::SpawnOverflow { requested: n, capacity });
        }
        if n == 0 {
            return Ok(Vec::new());
        }
        let s = self.spawn_spacing;
        let rows = n.min(max_rows);
        let region = &self.map.spawn_region;
        let x0 = region.min.x + s / 2.0;
        Ok((0..n)
            .map(|k| {
                let col = k / rows;
                let in_col = (n - col * rows).min(rows);
                let y0 = region.center().y - (in_col as f64 - 1.0) * s / 2.0;
                Vec2::new(x0 + col as f64 * s, y0 + (k % rows) as f64 * s)
            })
            .collect())
    }

    /// Stationary agents on the spawn grid with model defaults; mass is left
    /// at its default for the caller to sample.
    pub fn spawn_agents(&self, n: usize) -> Result<Vec<AgentState>> {
        let phase = initial_phase(&self.map);
        Ok(self
            .spawn_positions(n)?
            .into_iter()
            .enumerate()
            .map(|(i, p)| {
                let mut a = AgentState::new(i as u32, p).with_behavior(phase);
                a.radius = DEFAULT_RADIUS;
                a.pref_speed = self.model.pref_speed;
                a.max_speed = self.model.max_speed;
                a
            })
            .collect())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn bundled_scenario_loads() {
        let s = Scenario::jamarat();
        assert_eq!(s.map.waypoints.len(), 3);
        assert_eq!(s.map.waypoints[0].center, Vec2::new(-10.0, -6.0));
        assert_eq!(s.map.waypoints[1].center, Vec2::new(-30.0, -6.0));
        assert_eq!(s.model, PedModelConfig::default());
        // 11 outline segments + 3 pillars x 4 edges
        assert_eq!(s.map.obstacles.len(), 11 + 12);
        assert!(s.spawn_capacity() >= 10_240);
    }

    #[test]
    fn round_trip_is_lossless() {
        let f = ScenarioFile::parse(Scenario::jamarat_source()).unwrap();
        let text = f.to_toml().unwrap();
        assert_eq!(ScenarioFile::parse(&text).unwrap(), f);
    }

    #[test]
    fn unknown_key_reports_location() {
        let bad = Scenario::jamarat_source().replace("spacing = 0.55", "spacing = 0.55\ncolour = \"red\"");
        let err = ScenarioFile::parse(&bad).unwrap_err().to_string();
        assert!(err.contains("colour"), "{err}");
        assert!(err.contains("line"), "{err}");
    }

    #[test]
    fn spawn_grid_layout() {
        let s = Scenario::jamarat();
        let p = s.spawn_positions(20).unwrap();
        // a single column of 20, centred on the ramp axis
        assert!(p.iter().all(|v| v.x == p[0].x));
        assert!((p.iter().map(|v| v.y).sum::<f64>() / 20.0 - (-6.0)).abs() < 1e-12);
        let p = s.spawn_positions(50).unwrap();
        assert_eq!(p.iter().filter(|v| v.x == p[0].x).count(), 40);
        let rear: Vec<f64> = p[40..].iter().map(|v| v.y).collect();
        assert!((rear.iter().sum::<f64>() / 10.0 - (-6.0)).abs() < 1e-12);
        assert!((p[40].x - p[0].x - 0.55).abs() < 1e-12);
        for i in 0..p.len() {
            for j in 0..i {
                assert!(p[i].distance(p[j]) >= 0.55 - 1e-12);
            }
        }
        let big = s.spawn_positions(10_240).unwrap();
        assert!(big.iter().all(|v| s.map.spawn_region.contains(*v)));
    }

    #[test]
    fn spawn_overflow() {
        let s = Scenario::jamarat();
        let cap = s.spawn_capacity();
        assert!(matches!(s.spawn_positions(cap + 1), Err(Error::SpawnOverflow { .. })));
    }
}
