//! Conversion between geographic fixes and the venue-local metric frame.
//!
//! Equirectangular projection about a fixed origin on a spherical earth,
//! followed by a rotation into venue axes. Angles (`rotation` and velocity
//! headings) are counter-clockwise from east, in radians; with `rotation = 0`
//! local `x` points east and local `y` points north.

use crate::error::{invalid, Error, Result};
use crate::geom::Vec2;

pub const EARTH_RADIUS_M: f64 = 6_371_000.0;

#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GeoOrigin {
    pub lat0: f64,
    pub lon0: f64,
    #[serde(default)]
    pub rotation: f64,
    #[serde(default = "default_earth_radius")]
    pub earth_radius: f64,
}

fn default_earth_radius() -> f64 {
    EARTH_RADIUS_M
}

impl GeoOrigin {
    pub fn new(lat0: f64, lon0: f64, rotation: f64) -> Result<Self> {
        check_lat_lon(lat0, lon0)?;
        if !rotation.is_finite() {
            return Err(Error::NonFinite("rotation"));
        }
        Ok(Self {
            lat0,
            lon0,
            rotation,
            earth_radius: EARTH_RADIUS_M,
        })
    }

    pub fn validate(&self) -> Result<()> {
        check_lat_lon(self.lat0, self.lon0)?;
        if !(self.earth_radius > 0.0) || !self.rotation.is_finite() {
            return Err(invalid("geo", "rotation must be finite and earth_radius positive"));
        }
        Ok(())
    }

    pub fn to_local(&self, lat: f64, lon: f64) -> Result<Vec2> {
        check_lat_lon(lat, lon)?;
        let mut dlon = lon - self.lon0;
        // shortest way around the antimeridian
        if dlon > 180.0 {
            dlon -= 360.0;
        } else if dlon < -180.0 {
            dlon += 360.0;
        }
        let east = self.earth_radius * self.lat0.to_radians().cos() * dlon.to_radians();
        let north = self.earth_radius * (lat - self.lat0).to_radians();
        Ok(Vec2::new(east, north).rotate(-self.rotation))
    }

    /// Inverse of [`GeoOrigin::to_local`]; returns `(lat, lon)` in degrees.
    pub fn to_global(&self, p: Vec2) -> (f64, f64) {
        let en = p.rotate(self.rotation);
        let lat = self.lat0 + (en.y / self.earth_radius).to_degrees();
        let mut lon = self.lon0 + (en.x / (self.earth_radius * self.lat0.to_radians().cos())).to_degrees();
        if lon > 180.0 {
            lon -= 360.0;
        } else if lon < -180.0 {
            lon += 360.0;
        }
        (lat, lon)
    }

    /// Planar velocity of magnitude `speed` along `heading` (CCW from east),
    /// expressed in venue axes.
    pub fn velocity_to_local(&self, speed: f64, heading: f64) -> Result<Vec2> {
        if !(speed >= 0.0) || !heading.is_finite() {
            return Err(invalid("speed", format!("must be a non-negative number, got {speed}")));
        }
        Ok(Vec2::from_angle(heading - self.rotation) * speed)
    }
}

fn check_lat_lon(lat: f64, lon: f64) -> Result<()> {
    if !(-90.0..=90.0).contains(&lat) || !(-180.0..=180.0).contains(&lon) {
        return Err(Error::OutOfRange(format!("lat {lat}, lon {lon}")));
    }
    Ok(())
}

/// Haversine great-circle distance in metres.
pub fn great_circle_distance(lat1: f64, lon1: f64, lat2: f64, lon2: f64) -> f64 {
    let (p1, p2) = (lat1.to_radians(), lat2.to_radians());
    let dp = p2 - p1;
    let dl = (lon2 - lon1).to_radians();
    let a = (dp / 2.0).sin().powi(2) + p1.cos() * p2.cos() * (dl / 2.0).sin().powi(2);
    2.0 * EARTH_RADIUS_M * a.sqrt().asin()
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use std::f64::consts::{FRAC_PI_2, PI};

    #[test]
    fn origin_maps_to_origin() {
        let o = GeoOrigin::new(21.42, 39.87, 0.3).unwrap();
        let p = o.to_local(21.42, 39.87).unwrap();
        assert!(p.length() < 1e-12);
        assert_eq!(o.to_global(Vec2::ZERO), (21.42, 39.87));
    }

    #[test]
    fn one_degree_north() {
        let o = GeoOrigin::new(0.0, 0.0, 0.0).unwrap();
        let p = o.to_local(1.0, 0.0).unwrap();
        let expected = 6_371_000.0 * PI / 180.0;
        assert!((expected - 111_194.9).abs() < 0.1);
        assert!(p.x.abs() < 1e-9);
        assert!((p.y - expected).abs() < 0.1);
        let (lat, lon) = o.to_global(p);
        assert!((lat - 1.0).abs() < 1e-9 && lon.abs() < 1e-9);
    }

    #[test]
    fn rotation_consistency() {
        let d = 250.0;
        let rotated = GeoOrigin::new(10.0, 20.0, FRAC_PI_2).unwrap();
        let plain = GeoOrigin::new(10.0, 20.0, 0.0).unwrap();
        let (a_lat, a_lon) = rotated.to_global(Vec2::new(d, 0.0));
        let (b_lat, b_lon) = plain.to_global(Vec2::new(0.0, d));
        assert!((a_lat - b_lat).abs() < 1e-12 && (a_lon - b_lon).abs() < 1e-12);
    }

    #[test]
    fn rejects_out_of_range() {
        let o = GeoOrigin::new(0.0, 0.0, 0.0).unwrap();
        assert!(o.to_local(91.0, 0.0).is_err());
        assert!(o.to_local(0.0, -181.0).is_err());
        assert!(GeoOrigin::new(-95.0, 0.0, 0.0).is_err());
    }

    #[test]
    fn velocity_conversion() {
        let o = GeoOrigin::new(21.0, 39.0, 0.7).unwrap();
        assert_eq!(o.velocity_to_local(0.0, 1.3).unwrap(), Vec2::ZERO);
        let v = o.velocity_to_local(1.04, 0.7).unwrap();
        assert!((v.x - 1.04).abs() < 1e-12 && v.y.abs() < 1e-12);
        assert!(o.velocity_to_local(-1.0, 0.0).is_err());
    }

    proptest! {
        #[test]
        fn velocity_magnitude_preserved(speed in 0.0..5.0f64, heading in -PI..PI, rot in -PI..PI) {
            let o = GeoOrigin::new(45.0, 7.0, rot).unwrap();
            let v = o.velocity_to_local(speed, heading).unwrap();
            prop_assert!((v.length() - speed).abs() < 1e-12);
        }

        #[test]
        fn round_trip_within_ten_km(
            lat0 in -70.0..70.0f64, lon0 in -179.0..179.0f64, rot in -PI..PI,
            r in 0.0..10_000.0f64, theta in -PI..PI,
        ) {
            let o = GeoOrigin::new(lat0, lon0, rot).unwrap();
            let p = Vec2::from_angle(theta) * r;
            let (lat, lon) = o.to_global(p);
            let back = o.to_local(lat, lon).unwrap();
            prop_assert!((back - p).length() < 1e-6);
            let (lat2, lon2) = o.to_global(back);
            prop_assert!((lat2 - lat).abs() < 1e-9);
            prop_assert!((lon2 - lon).abs() < 1e-9);
        }

        #[test]
        fn distance_faithful_at_venue_scale(
            lat0 in -60.0..60.0f64, lon0 in -170.0..170.0f64,
            ax in -500.0..500.0f64, ay in -500.0..500.0f64,
            bx in -500.0..500.0f64, by in -500.0..500.0f64,
        ) {
            let o = GeoOrigin::new(lat0, lon0, 0.0).unwrap();
            let (a, b) = (Vec2::new(ax, ay), Vec2::new(bx, by));
            let planar = a.distance(b);
            prop_assume!(planar > 1.0);
            let (la, loa) = o.to_global(a);
            let (lb, lob) = o.to_global(b);
            let gc = great_circle_distance(la, loa, lb, lob);
            prop_assert!((planar - gc).abs() / gc < 1e-3);
        }
    }
}
