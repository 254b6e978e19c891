//! Closed-loop UAV object-search benchmark: procedural worlds, a kinematic
//! 6-DoF flight model, tiered rule-based assistants, baseline policies,
//! episode evaluation with SR/OSR/SPL/NE, and trajectory data collection.
//!
//! Geometry and metric primitives are generic over [`num::Real`]; the
//! simulation layers run in `f64` through the aliases below.

pub mod geometry;
pub mod metrics;
pub mod num;
pub mod policies;
pub mod assistant;
pub mod collection;
pub mod episode;
pub mod flight;
pub mod world;

pub use num::Real;

pub type Vec3<T> = geometry::Vec3<T>;
pub type V3 = geometry::Vec3<f64>;
pub type Pose = geometry::Pose<f64>;
pub type Trajectory = geometry::Trajectory<f64>;
pub type TrajectoryPoint = geometry::TrajectoryPoint<f64>;
pub type Pose32 = geometry::Pose<f32>;
pub type Trajectory32 = geometry::Trajectory<f32>;
