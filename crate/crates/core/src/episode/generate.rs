//! Episode sampling with a planned, flown and subsampled ground-truth path.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::{Difficulty, Episode, EpisodeError, GT_END_TOLERANCE};
use crate::collection::generate_description;
use crate::flight::{fly_to_waypoint, KinematicLimits, UavState};
use crate::world::{default_catalogue, place_object, ObjectClass, PlacedObject, Scene};
use crate::{Pose, Trajectory, TrajectoryPoint, V3};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EpisodeGenConfig {
    pub limits: KinematicLimits,
    pub record_dt: f64,
    pub start_altitude: f64,
    pub min_start_distance: f64,
    /// Horizontal distance from the straight route within which obstacles raise the cruise altitude.
    pub corridor_margin: f64,
    /// Height kept above the tallest obstacle along the route.
    pub altitude_margin: f64,
    pub min_cruise_altitude: f64,
    /// Final hover height above the target's center.
    pub hover_above_target: f64,
    pub attempts: usize,
    pub catalogue: Vec<ObjectClass>,
}

impl Default for EpisodeGenConfig {
    fn default() -> Self {
        Self {
            limits: KinematicLimits::default(),
            record_dt: 0.5,
            start_altitude: 5.0,
            min_start_distance: 50.0,
            corridor_margin: 6.0,
            altitude_margin: 6.0,
            min_cruise_altitude: 10.0,
            hover_above_target: 3.0,
            attempts: 60,
            catalogue: default_catalogue(),
        }
    }
}

fn point_rect_distance(px: f64, py: f64, min: V3, max: V3) -> f64 {
    let dx = (min.x - px).max(0.0).max(px - max.x);
    let dy = (min.y - py).max(0.0).max(py - max.y);
    dx.hypot(dy)
}

/// Tallest obstacle top near the straight horizontal route from `a` to `b`.
fn corridor_ceiling(scene: &Scene, a: V3, b: V3, margin: f64) -> f64 {
    let len = (b - a).horizontal_norm();
    let samples = (len / 1.0).ceil().max(1.0) as usize;
    let mut top = 0.0f64;
    for ob in scene.obstacles() {
        let bb = ob.aabb();
        let near = (0..=samples).any(|i| {
            let p = a.lerp(b, i as f64 / samples as f64);
            point_rect_distance(p.x, p.y, bb.min, bb.max) <= margin
        });
        if near {
            top = top.max(bb.max.z);
        }
    }
    top
}

/// Climb, cruise above the route's obstacles, then descend over the target.
/// The plan is flown through the flight model and sampled every `record_dt`.
pub fn plan_ground_truth(scene: &Scene, start: &Pose, target: &PlacedObject, cfg: &EpisodeGenConfig) -> Result<Trajectory, EpisodeError> {
    let a = start.position();
    let t = target.position;
    let yaw = (t.y - a.y).atan2(t.x - a.x);
    let cruise = (corridor_ceiling(scene, a, t, cfg.corridor_margin) + cfg.altitude_margin)
        .max(cfg.min_cruise_altitude)
        .max(a.z);
    if cruise > scene.bounds().max.z - cfg.limits.collision_radius {
        return Err(EpisodeError::Generation("route needs a cruise altitude above the scene ceiling".into()));
    }
    let plan = [
        Pose::at(a.x, a.y, cruise, yaw),
        Pose::at(t.x, t.y, cruise, yaw),
        Pose::at(t.x, t.y, t.z + cfg.hover_above_target, yaw),
    ];
    let mut states = vec![UavState::at_rest(*start, 0.0)];
    for wp in &plan {
        let flight = fly_to_waypoint(states.last().unwrap(), wp, &cfg.limits, scene);
        states.extend_from_slice(&flight.states[1..]);
        if flight.collision {
            return Err(EpisodeError::Generation("ground-truth flight collided".into()));
        }
        if !flight.reached {
            return Err(EpisodeError::Generation("ground-truth flight ran out of budget".into()));
        }
    }
    let stride = ((cfg.record_dt / cfg.limits.dt).round() as usize).max(1);
    let mut points: Vec<TrajectoryPoint> =
        states.iter().step_by(stride).map(|s| TrajectoryPoint { t: s.time, pose: s.pose }).collect();
    if (states.len() - 1) % stride != 0 {
        let s = states.last().unwrap();
        points.push(TrajectoryPoint { t: s.time, pose: s.pose });
    }
    let traj = Trajectory::from_points(points).map_err(|e| EpisodeError::Generation(e.to_string()))?;
    let end = (traj.last().unwrap().position() - t).norm();
    if end > GT_END_TOLERANCE {
        return Err(EpisodeError::GroundTruthTooFar(end));
    }
    Ok(traj)
}

fn episode_seed(seed: u64, k: usize) -> u64 {
    seed.wrapping_mul(0x2545_f491_4f6c_dd1d) ^ (k as u64).wrapping_mul(0x9e37_79b9_7f4a_7c15)
}

fn sample_episode(scene: &Scene, k: usize, rng: &mut ChaCha8Rng, cfg: &EpisodeGenConfig) -> Result<Episode, EpisodeError> {
    if cfg.catalogue.is_empty() || scene.feasible_regions().is_empty() {
        return Err(EpisodeError::Generation("nothing to place".into()));
    }
    let class = &cfg.catalogue[rng.gen_range(0..cfg.catalogue.len())];
    let region = &scene.feasible_regions()[rng.gen_range(0..scene.feasible_regions().len())];
    let mut target = place_object(scene, class, &region.name, rng.gen()).map_err(|e| EpisodeError::Generation(e.to_string()))?;
    target.is_target = true;
    let sr = scene.start_region();
    let x = rng.gen_range(sr.min_x..=sr.max_x);
    let y = rng.gen_range(sr.min_y..=sr.max_y);
    let yaw = rng.gen_range(-std::f64::consts::PI..std::f64::consts::PI);
    let start = Pose::at(x, y, cfg.start_altitude, yaw);
    if (target.position - start.position()).horizontal_norm() < cfg.min_start_distance {
        return Err(EpisodeError::Generation("start too close to target".into()));
    }
    let gt_traj = plan_ground_truth(scene, &start, &target, cfg)?;
    let difficulty = Difficulty::from_path_length(crate::geometry::path_length(&gt_traj));
    let episode = Episode {
        id: format!("{}-ep{k:04}", scene.id()),
        scene_id: scene.id().to_string(),
        start,
        description: generate_description(&start, &target, scene),
        gt_traj,
        target,
        difficulty,
    };
    episode.validate()?;
    Ok(episode)
}

/// `count` episodes cycling over `scenes`; a pure function of the inputs.
pub fn generate_episodes(scenes: &[Scene], count: usize, seed: u64, cfg: &EpisodeGenConfig) -> Result<Vec<Episode>, EpisodeError> {
    if scenes.is_empty() {
        return Err(EpisodeError::Generation("no scenes".into()));
    }
    let mut out = Vec::with_capacity(count);
    for k in 0..count {
        let scene = &scenes[k % scenes.len()];
        let mut rng = ChaCha8Rng::seed_from_u64(episode_seed(seed, k));
        let mut last_err = None;
        let mut made = None;
        for _ in 0..cfg.attempts {
            match sample_episode(scene, k, &mut rng, cfg) {
                Ok(e) => {
                    made = Some(e);
                    break;
                }
                Err(e) => last_err = Some(e),
            }
        }
        match made {
            Some(e) => out.push(e),
            None => {
                let why = last_err.map(|e| e.to_string()).unwrap_or_default();
                return Err(EpisodeError::Generation(format!("episode {k} in scene {}: {why}", scene.id())));
            }
        }
    }
    Ok(out)
}
