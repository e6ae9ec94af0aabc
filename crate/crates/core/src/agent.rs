use crate::geom::Vec2;

pub type AgentId = u32;

pub const DEFAULT_RADIUS: f64 = 0.19;
pub const DEFAULT_MASS: f64 = 70.0;

/// Where an agent is in its pillar-to-pillar itinerary.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum BehaviorPhase {
    Travelling { waypoint: usize },
    Waiting { remaining: f64, waypoint: usize },
    Exiting,
    Done,
}

impl BehaviorPhase {
    pub fn is_active(&self) -> bool {
        !matches!(self, BehaviorPhase::Done)
    }

    /// Short label used in trajectory dumps.
    pub fn label(&self) -> &'static str {
        match self {
            BehaviorPhase::Travelling { .. } => "travelling",
            BehaviorPhase::Waiting { .. } => "waiting",
            BehaviorPhase::Exiting => "exiting",
            BehaviorPhase::Done => "done",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct AgentState {
    pub id: AgentId,
    pub position: Vec2,
    pub velocity: Vec2,
    pub prev_velocity: Vec2,
    /// Preferred velocity chosen on the previous step; the acceleration clamp
    /// is measured against it.
    pub pref_velocity: Vec2,
    pub radius: f64,
    pub mass: f64,
    pub pref_speed: f64,
    pub max_speed: f64,
    pub behavior: BehaviorPhase,
}

impl AgentState {
    /// A stationary agent with default body parameters.
    pub fn new(id: AgentId, position: Vec2) -> Self {
        Self {
            id,
            position,
            velocity: Vec2::ZERO,
            prev_velocity: Vec2::ZERO,
            pref_velocity: Vec2::ZERO,
            radius: DEFAULT_RADIUS,
            mass: DEFAULT_MASS,
            pref_speed: 1.04,
            max_speed: 2.0,
            behavior: BehaviorPhase::Travelling { waypoint: 0 },
        }
    }

    pub fn with_velocity(mut self, velocity: Vec2) -> Self {
        self.velocity = velocity;
        self.prev_velocity = velocity;
        self.pref_velocity = velocity;
        self
    }

    pub fn with_behavior(mut self, behavior: BehaviorPhase) -> Self {
        self.behavior = behavior;
        self
    }
}
