mod common;

use common::oracle::{brute_nearest, brute_raycast};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use uavnh_core::geometry::nearest_gt_point;
use uavnh_core::world::{generate_scene, SceneConfig, SceneStyle};
use uavnh_core::{Pose, Trajectory, V3};

fn random_unit(rng: &mut ChaCha8Rng) -> V3 {
    loop {
        let v = V3::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0));
        let n = v.norm();
        if n > 1e-3 && n <= 1.0 {
            return v * (1.0 / n);
        }
    }
}

#[test]
fn raycast_matches_brute_force_in_every_style() {
    for (k, style) in [SceneStyle::Urban, SceneStyle::Forest, SceneStyle::Open].into_iter().enumerate() {
        let cfg = SceneConfig { size_x: 200.0, size_y: 200.0, obstacle_density: 0.01, style, ..SceneConfig::default() };
        let scene = generate_scene(100 + k as u64, &cfg).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(k as u64);
        for _ in 0..2000 {
            let o = V3::new(rng.gen_range(0.0..200.0), rng.gen_range(0.0..200.0), rng.gen_range(0.5..70.0));
            let d = random_unit(&mut rng);
            let fast = scene.raycast(o, d, 150.0).map(|h| h.distance);
            let slow = brute_raycast(&scene, o, d, 150.0);
            match (fast, slow) {
                (Some(a), Some(b)) => assert!((a - b).abs() < 1e-6, "{style:?} {o:?} {d:?}: {a} vs {b}"),
                (None, None) => {}
                other => panic!("{style:?} {o:?} {d:?}: {other:?}"),
            }
        }
    }
}

#[test]
fn nearest_matches_exhaustive_argmin() {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    for _ in 0..200 {
        let n = rng.gen_range(1..60);
        let pts: Vec<[f64; 3]> = (0..n)
            .map(|_| [rng.gen_range(-100.0..100.0), rng.gen_range(-100.0..100.0), rng.gen_range(0.0..50.0)])
            .collect();
        let traj = Trajectory::from_poses(0.0, 0.5, pts.iter().map(|p| Pose::at(p[0], p[1], p[2], 0.0)));
        let q = [rng.gen_range(-120.0..120.0), rng.gen_range(-120.0..120.0), rng.gen_range(0.0..60.0)];
        let (i, d) = nearest_gt_point(&traj, &Pose::at(q[0], q[1], q[2], 0.3)).unwrap();
        let (bi, bd) = brute_nearest(&pts, q);
        assert_eq!(i, bi);
        assert!((d - bd).abs() < 1e-12);
    }
}
