#![allow(dead_code)]

use std::path::Path;

use uavnh_core::episode::{generate_episodes, write_manifest, Difficulty, Episode, EpisodeGenConfig, HarnessConfig, TargetDescription};
use uavnh_core::geometry::path_length;
use uavnh_core::world::{generate_scene, Aabb, CameraConfig, Material, Obstacle, PlacedObject, Region, Scene, SceneConfig, SceneStyle};
use uavnh_core::{Pose, Trajectory, V3};
use uavnh_runner::store::SceneStore;

pub fn harness(res: usize) -> HarnessConfig {
    HarnessConfig { camera: CameraConfig::default().with_resolution(res), ..HarnessConfig::default() }
}

pub fn generated_world(n_scenes: u64, n_episodes: usize, seed: u64) -> (SceneStore, Vec<Episode>) {
    let styles = [SceneStyle::Urban, SceneStyle::Forest, SceneStyle::Open];
    let scenes: Vec<Scene> = (0..n_scenes)
        .map(|i| generate_scene(100 + i, &SceneConfig { style: styles[i as usize % 3], ..SceneConfig::default() }).unwrap())
        .collect();
    let eps = generate_episodes(&scenes, n_episodes, seed, &EpisodeGenConfig::default()).unwrap();
    (SceneStore::new(scenes), eps)
}

pub fn write_world(dir: &Path, store: &SceneStore, eps: &[Episode]) {
    store.save_dir(&dir.join("scenes")).unwrap();
    std::fs::write(dir.join("episodes.jsonl"), write_manifest(eps)).unwrap();
}

/// Open ground with one tall block at x 40..50 across the flight line.
pub fn wall_scene() -> Scene {
    let bounds = Aabb::new(V3::new(-100.0, -100.0, 0.0), V3::new(200.0, 100.0, 80.0));
    let wall = Obstacle::boxed(Material::Building, V3::new(40.0, -30.0, 0.0), V3::new(50.0, 30.0, 60.0));
    let start = Region::new("start", -10.0, -10.0, 10.0, 10.0);
    let goal = Region::new("goal", 90.0, -10.0, 110.0, 10.0);
    Scene::new("walled", 0, SceneStyle::Urban, bounds, start, vec![goal], vec![wall], vec![]).unwrap()
}

/// Straight episode along +x at `z`, with the target (a car) on the ground at `end_x`.
pub fn line_episode(scene: &Scene, z: f64, end_x: f64) -> Episode {
    let poses = (0..=((end_x / 5.0) as usize)).map(|i| Pose::at(5.0 * i as f64, 0.0, z, 0.0));
    let gt = Trajectory::from_poses(0.0, 0.5, poses.chain([Pose::at(end_x, 0.0, 5.5, 0.0)]));
    Episode {
        id: format!("{}-line", scene.id()),
        scene_id: scene.id().into(),
        start: Pose::at(0.0, 0.0, z, 0.0),
        description: TargetDescription {
            direction_text: "The target is to the east.".into(),
            object_text: "It is a car.".into(),
            environment_text: "It stands in an open area with nothing else nearby.".into(),
        },
        difficulty: Difficulty::from_path_length(path_length(&gt)),
        gt_traj: gt,
        target: PlacedObject { category: "car".into(), position: V3::new(end_x, 0.0, 2.5), bounding_radius: 2.5, is_target: true },
    }
}
