//! Independent reference implementations and small fixtures shared by integration tests.
#![allow(dead_code)]

pub mod oracle;

use uavnh_core::episode::{Difficulty, Episode, Observation, Policy, PolicyCommand, PolicyError, TargetDescription};
use uavnh_core::geometry::path_length;
use uavnh_core::world::{Aabb, Material, Obstacle, PlacedObject, Region, Scene, SceneStyle};
use uavnh_core::{Pose, Trajectory, V3};

pub fn open_scene(id: &str) -> Scene {
    let bounds = Aabb::new(V3::new(-100.0, -100.0, 0.0), V3::new(500.0, 500.0, 120.0));
    let start = Region::new("start", -10.0, -10.0, 10.0, 10.0);
    let goal = Region::new("goal", 280.0, -20.0, 320.0, 20.0);
    Scene::new(id, 0, SceneStyle::Open, bounds, start, vec![goal], vec![], vec![]).unwrap()
}

/// East-west corridor between two long walls, closed by a wall at x = 60.
pub fn corridor_scene() -> Scene {
    let bounds = Aabb::new(V3::new(-50.0, -50.0, 0.0), V3::new(150.0, 50.0, 60.0));
    let walls = vec![
        Obstacle::boxed(Material::Building, V3::new(-20.0, 8.0, 0.0), V3::new(100.0, 12.0, 40.0)),
        Obstacle::boxed(Material::Building, V3::new(-20.0, -12.0, 0.0), V3::new(100.0, -8.0, 40.0)),
        Obstacle::boxed(Material::Building, V3::new(60.0, -8.0, 0.0), V3::new(64.0, 8.0, 40.0)),
    ];
    let start = Region::new("start", -10.0, -4.0, 0.0, 4.0);
    let goal = Region::new("goal", 40.0, -4.0, 50.0, 4.0);
    Scene::new("corridor", 0, SceneStyle::Urban, bounds, start, vec![goal], walls, vec![]).unwrap()
}

/// Level flight along +x from `start` for `length` meters at altitude `z`,
/// sampled every `spacing` meters, then a drop to 3 m above the target.
pub fn straight_episode(scene: &Scene, start: V3, length: f64, spacing: f64) -> Episode {
    let n = (length / spacing).round() as usize;
    let end_x = start.x + spacing * n as f64;
    let level = (0..=n).map(|i| Pose::at(start.x + spacing * i as f64, start.y, start.z, 0.0));
    let gt = Trajectory::from_poses(0.0, 0.5, level.chain([Pose::at(end_x, start.y, 5.5, 0.0)]));
    let end = *gt.last().unwrap();
    let target = PlacedObject {
        category: "car".into(),
        position: V3::new(end.x, end.y, 2.5),
        bounding_radius: 2.5,
        is_target: true,
    };
    assert!((end.position() - target.position).norm() <= 5.0, "fixture GT must end near the target");
    Episode {
        id: format!("{}-straight", scene.id()),
        scene_id: scene.id().into(),
        start: Pose::at(start.x, start.y, start.z, 0.0),
        description: TargetDescription {
            direction_text: "The target is to the east.".into(),
            object_text: "It is a car.".into(),
            environment_text: "It stands in an open area with nothing else nearby.".into(),
        },
        difficulty: Difficulty::from_path_length(path_length(&gt)),
        gt_traj: gt,
        target,
    }
}

/// Replays a fixed list of responses, repeating the last one.
pub struct Scripted(pub Vec<Result<PolicyCommand, PolicyError>>, pub usize);

impl Policy for Scripted {
    fn name(&self) -> String {
        "scripted".into()
    }
    fn act(&mut self, _obs: &Observation) -> Result<PolicyCommand, PolicyError> {
        let i = self.1.min(self.0.len() - 1);
        self.1 += 1;
        self.0[i].clone()
    }
}

/// Always flies `step` meters along +x, never lands.
pub struct WallSeeker {
    pub step: f64,
}

impl Policy for WallSeeker {
    fn name(&self) -> String {
        "wall-seeker".into()
    }
    fn act(&mut self, obs: &Observation) -> Result<PolicyCommand, PolicyError> {
        let p = obs.state.pose;
        Ok(PolicyCommand::go_to(Pose::at(p.x + self.step, p.y, p.z, 0.0)))
    }
}
