//! Procedural scenes, ray casting, collision queries and the five-view sensor rig.

mod camera;
mod generate;
pub mod primitives;
mod scene;

use thiserror::Error;

pub use camera::{
    body_to_world, camera_axis, material_label, min_clearance, object_label, oracle_detect, pixel_ray, render_depth,
    render_frame, render_view, CameraConfig, DepthImage, SemanticImage, SensorFrame, View, LABEL_GROUND,
    LABEL_OBJECT_BASE, LABEL_SKY, LABEL_UNKNOWN_OBJECT, MIN_DEPTH,
};
pub use generate::{default_catalogue, generate_scene, place_object, ObjectClass, SceneConfig, PLACEMENT_ATTEMPTS};
pub use scene::{
    Aabb, Hit, Material, Obstacle, PlacedObject, Region, Scene, SceneStyle, Shape, Surface, SCENE_SCHEMA_VERSION,
};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum WorldError {
    #[error("scene configuration leaves no feasible placement area")]
    NoFeasibleArea,
    #[error("no region named {0:?}")]
    UnknownRegion(String),
    #[error("no collision-free placement found in region {0:?}")]
    PlacementFailed(String),
    #[error("{0} lies outside the scene bounds")]
    OutOfBounds(String),
    #[error("feasible region {0:?} overlaps another region")]
    OverlappingRegions(String),
    #[error("unsupported scene schema version {0}")]
    SchemaVersion(u32),
    #[error("scene document: {0}")]
    Parse(String),
}
