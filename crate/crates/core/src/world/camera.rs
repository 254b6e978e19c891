//! Five-view pinhole rig, depth/semantic rendering and the geometric target detector.

use serde::{Deserialize, Serialize};

use super::generate::default_catalogue;
use super::scene::{Material, PlacedObject, Scene, Surface};
use crate::{Pose, V3};

/// Depth stored for a ray that starts inside a solid, so every value stays positive.
pub const MIN_DEPTH: f32 = 1e-3;

pub const LABEL_SKY: u16 = 0;
pub const LABEL_GROUND: u16 = 1;
pub const LABEL_UNKNOWN_OBJECT: u16 = 15;
pub const LABEL_OBJECT_BASE: u16 = 16;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum View {
    Front,
    Left,
    Right,
    Rear,
    Down,
}

impl View {
    pub const ALL: [View; 5] = [View::Front, View::Left, View::Right, View::Rear, View::Down];

    pub fn index(self) -> usize {
        self as usize
    }

    pub fn name(self) -> &'static str {
        match self {
            View::Front => "front",
            View::Left => "left",
            View::Right => "right",
            View::Rear => "rear",
            View::Down => "down",
        }
    }

    /// Camera forward, image-right and image-up axes in the body frame (x forward, y left, z up).
    fn body_axes(self) -> (V3, V3, V3) {
        let v = V3::new;
        match self {
            View::Front => (v(1.0, 0.0, 0.0), v(0.0, -1.0, 0.0), v(0.0, 0.0, 1.0)),
            View::Left => (v(0.0, 1.0, 0.0), v(1.0, 0.0, 0.0), v(0.0, 0.0, 1.0)),
            View::Right => (v(0.0, -1.0, 0.0), v(-1.0, 0.0, 0.0), v(0.0, 0.0, 1.0)),
            View::Rear => (v(-1.0, 0.0, 0.0), v(0.0, 1.0, 0.0), v(0.0, 0.0, 1.0)),
            View::Down => (v(0.0, 0.0, -1.0), v(0.0, -1.0, 0.0), v(1.0, 0.0, 0.0)),
        }
    }
}

impl std::str::FromStr for View {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        View::ALL.into_iter().find(|v| v.name() == s).ok_or_else(|| format!("unknown view {s:?}"))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CameraConfig {
    pub width: usize,
    pub height: usize,
    /// Horizontal field of view, degrees.
    pub fov_deg: f64,
    pub max_range: f64,
}

impl Default for CameraConfig {
    fn default() -> Self {
        Self { width: 64, height: 64, fov_deg: 90.0, max_range: 100.0 }
    }
}

impl CameraConfig {
    pub fn with_resolution(self, res: usize) -> Self {
        Self { width: res, height: res, ..self }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DepthImage {
    pub view: View,
    pub width: usize,
    pub height: usize,
    pub fov: f64,
    pub max_range: f64,
    /// Row-major meters; `max_range` marks rays that hit nothing.
    pub values: Vec<f32>,
}

impl DepthImage {
    pub fn at(&self, row: usize, col: usize) -> f32 {
        self.values[row * self.width + col]
    }

    pub fn min(&self) -> f32 {
        self.values.iter().copied().fold(f32::INFINITY, f32::min)
    }

    pub fn mean(&self) -> f64 {
        if self.values.is_empty() {
            return 0.0;
        }
        self.values.iter().map(|v| *v as f64).sum::<f64>() / self.values.len() as f64
    }

    /// Mean over the top half of the rows.
    pub fn upper_mean(&self) -> f64 {
        let rows = (self.height / 2).max(1);
        let n = rows * self.width;
        self.values[..n].iter().map(|v| *v as f64).sum::<f64>() / n as f64
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SemanticImage {
    pub view: View,
    pub width: usize,
    pub height: usize,
    pub fov: f64,
    /// Row-major semantic ids; see the `LABEL_*` constants.
    pub labels: Vec<u16>,
}

/// Five depth and five semantic views in [`View::ALL`] order.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SensorFrame {
    pub depth: Vec<DepthImage>,
    pub semantic: Vec<SemanticImage>,
}

impl SensorFrame {
    pub fn depth(&self, view: View) -> &DepthImage {
        &self.depth[view.index()]
    }

    pub fn is_complete(&self) -> bool {
        self.depth.len() == 5
            && self.semantic.len() == 5
            && View::ALL.iter().all(|v| self.depth[v.index()].view == *v && self.semantic[v.index()].view == *v)
    }
}

pub fn material_label(m: Material) -> u16 {
    match m {
        Material::Building => 2,
        Material::Vegetation => 3,
        Material::Terrain => 4,
        Material::Rock => 5,
    }
}

pub fn object_label(category: &str) -> u16 {
    default_catalogue()
        .iter()
        .position(|c| c.category == category)
        .map_or(LABEL_UNKNOWN_OBJECT, |i| LABEL_OBJECT_BASE + i as u16)
}

/// Rotates a body-frame vector into the world frame (roll about x, then pitch, then yaw).
pub fn body_to_world(pose: &Pose, v: V3) -> V3 {
    let (sr, cr) = pose.roll.sin_cos();
    let (sp, cp) = pose.pitch.sin_cos();
    let (sy, cy) = pose.yaw.sin_cos();
    let v1 = V3::new(v.x, v.y * cr - v.z * sr, v.y * sr + v.z * cr);
    // positive pitch raises the nose: rotation about +y by -pitch
    let v2 = V3::new(v1.x * cp - v1.z * sp, v1.y, v1.x * sp + v1.z * cp);
    V3::new(v2.x * cy - v2.y * sy, v2.x * sy + v2.y * cy, v2.z)
}

/// World-frame forward axis of a camera.
pub fn camera_axis(pose: &Pose, view: View) -> V3 {
    body_to_world(pose, view.body_axes().0)
}

struct Rig {
    forward: V3,
    right: V3,
    up: V3,
    half_w: f64,
    half_h: f64,
    scale: f64,
}

impl Rig {
    fn new(pose: &Pose, view: View, cam: &CameraConfig) -> Self {
        let (f, r, u) = view.body_axes();
        Self {
            forward: body_to_world(pose, f),
            right: body_to_world(pose, r),
            up: body_to_world(pose, u),
            half_w: cam.width as f64 / 2.0,
            half_h: cam.height as f64 / 2.0,
            scale: (cam.fov_deg.to_radians() / 2.0).tan() / (cam.width as f64 / 2.0),
        }
    }

    /// Pixel `(row, col)` looks through image offset `(col - w/2, row - h/2)`,
    /// so pixel `(h/2, w/2)` lies exactly on the optical axis.
    fn ray(&self, row: usize, col: usize) -> V3 {
        let sx = (col as f64 - self.half_w) * self.scale;
        let sy = (row as f64 - self.half_h) * self.scale;
        if sx == 0.0 && sy == 0.0 {
            return self.forward;
        }
        (self.forward + self.right * sx - self.up * sy).normalized()
    }
}

/// Unit world-frame ray through a pixel.
pub fn pixel_ray(pose: &Pose, view: View, cam: &CameraConfig, row: usize, col: usize) -> V3 {
    Rig::new(pose, view, cam).ray(row, col)
}

fn label_of(scene: &Scene, surface: Surface) -> u16 {
    match surface {
        Surface::Ground => LABEL_GROUND,
        Surface::Obstacle(m) => material_label(m),
        Surface::Object(k) => object_label(&scene.objects()[k].category),
    }
}

/// Renders depth and semantics for one view with one ray per pixel.
pub fn render_view(scene: &Scene, pose: &Pose, view: View, cam: &CameraConfig) -> (DepthImage, SemanticImage) {
    let rig = Rig::new(pose, view, cam);
    let origin = pose.position();
    let n = cam.width * cam.height;
    let mut values = Vec::with_capacity(n);
    let mut labels = Vec::with_capacity(n);
    for row in 0..cam.height {
        for col in 0..cam.width {
            match scene.raycast(origin, rig.ray(row, col), cam.max_range) {
                Some(hit) => {
                    values.push((hit.distance as f32).clamp(MIN_DEPTH, cam.max_range as f32));
                    labels.push(label_of(scene, hit.surface));
                }
                None => {
                    values.push(cam.max_range as f32);
                    labels.push(LABEL_SKY);
                }
            }
        }
    }
    let depth = DepthImage {
        view,
        width: cam.width,
        height: cam.height,
        fov: cam.fov_deg,
        max_range: cam.max_range,
        values,
    };
    let semantic = SemanticImage { view, width: cam.width, height: cam.height, fov: cam.fov_deg, labels };
    (depth, semantic)
}

pub fn render_depth(scene: &Scene, pose: &Pose, view: View, cam: &CameraConfig) -> DepthImage {
    render_view(scene, pose, view, cam).0
}

/// Renders all five views at the pose's full attitude.
pub fn render_frame(scene: &Scene, pose: &Pose, cam: &CameraConfig) -> SensorFrame {
    let (depth, semantic) = View::ALL.iter().map(|v| render_view(scene, pose, *v, cam)).unzip();
    SensorFrame { depth, semantic }
}

/// Smallest depth over every pixel of every view.
pub fn min_clearance(frame: &SensorFrame) -> f64 {
    frame.depth.iter().map(|d| d.min() as f64).fold(f64::INFINITY, f64::min)
}

/// Geometric stand-in for an object detector: the target center must fall inside
/// some view frustum, within range, with an unobstructed line of sight.
pub fn oracle_detect(scene: &Scene, pose: &Pose, target: &PlacedObject, cam: &CameraConfig, detection_range: f64) -> bool {
    let origin = pose.position();
    let to_target = target.position - origin;
    let dist = to_target.norm();
    if dist > detection_range {
        return false;
    }
    if dist <= target.bounding_radius {
        return true;
    }
    let tan_h = (cam.fov_deg.to_radians() / 2.0).tan();
    let tan_v = tan_h * cam.height as f64 / cam.width as f64;
    let in_frustum = View::ALL.iter().any(|v| {
        let rig = Rig::new(pose, *v, cam);
        let f = to_target.dot(rig.forward);
        f > 0.0 && to_target.dot(rig.right).abs() <= tan_h * f && to_target.dot(rig.up).abs() <= tan_v * f
    });
    if !in_frustum {
        return false;
    }
    let dir = to_target * (1.0 / dist);
    match scene.raycast(origin, dir, dist) {
        None => true,
        Some(hit) => hit.distance >= dist - target.bounding_radius - 1e-6,
    }
}
