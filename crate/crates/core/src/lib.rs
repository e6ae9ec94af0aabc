//! Agent-based crowd simulation with stampede assessment under GPS position
//! noise.
//!
//! The crate covers the full experiment pipeline: a velocity-obstacle
//! pedestrian model ([`pedmodel`]), three threshold-based stampede detectors
//! ([`assess`]), a Rayleigh horizontal-error model ([`noise`]), seeded Monte
//! Carlo estimation of stampede probabilities ([`mc`]), and a Kalman-filter
//! noise-reduction study ([`filter`]).

// `!(x > 0.0)` is how NaN gets rejected along with non-positive values.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod agent;
pub mod assess;
pub mod error;
pub mod filter;
pub mod geo;
pub mod geom;
pub mod index;
pub mod mc;
pub mod noise;
pub mod pedmodel;
pub mod rng;
pub mod scenario;
pub mod venue;

pub use agent::{AgentId, AgentState, BehaviorPhase};
pub use error::{Error, Result};
pub use geom::{Rect, Segment, Vec2};
pub use index::SpatialIndex;
pub use pedmodel::{PedModelConfig, World};
pub use venue::{VenueMap, Waypoint};
