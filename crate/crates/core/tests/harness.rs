mod common;

use common::{corridor_scene, open_scene, straight_episode, Scripted, WallSeeker};
use uavnh_core::assistant::{ActionKind, AssistLevel, AssistantConfig};
use uavnh_core::episode::*;
use uavnh_core::flight::{KinematicLimits, UavState};
use uavnh_core::policies::TeacherPolicy;
use uavnh_core::world::{generate_scene, CameraConfig, PlacedObject, SceneConfig, SceneStyle, View};
use uavnh_core::{Pose, V3};

fn fast() -> HarnessConfig {
    HarnessConfig { camera: CameraConfig::default().with_resolution(16), ..HarnessConfig::default() }
}

fn target_at(x: f64, y: f64) -> PlacedObject {
    PlacedObject { category: "car".into(), position: V3::new(x, y, 0.0), bounding_radius: 1.0, is_target: true }
}

#[test]
fn success_radius_is_inclusive() {
    let t = target_at(0.0, 0.0);
    assert!(check_success(&Pose::at(19.0, 0.0, 0.0, 0.0), &t, 20.0));
    assert!(!check_success(&Pose::at(21.0, 0.0, 0.0, 0.0), &t, 20.0));
    assert!(check_success(&Pose::at(20.0, 0.0, 0.0, 0.0), &t, 20.0));
}

#[test]
fn teacher_succeeds_on_open_terrain() {
    let cfg = SceneConfig { style: SceneStyle::Open, ..SceneConfig::default() };
    let scene = generate_scene(11, &cfg).unwrap();
    let eps = generate_episodes(std::slice::from_ref(&scene), 5, 3, &EpisodeGenConfig::default()).unwrap();
    for ep in &eps {
        let r = run_episode(&scene, ep, &mut TeacherPolicy::default(), &AssistantConfig::default(), &fast()).unwrap();
        assert_eq!(r.outcome, Outcome::Success, "{}", ep.id);
        assert!(r.final_distance <= 20.0);
        assert!(r.assistant_calls.keys().all(|k| !k.is_avoidance()));
        assert_eq!(r.executed.first().unwrap(), &ep.start);
    }
}

#[test]
fn immediate_landing_far_away() {
    let scene = open_scene("open");
    let ep = straight_episode(&scene, V3::new(0.0, 0.0, 10.0), 300.0, 5.0);
    let mut p = Scripted(vec![Ok(PolicyCommand::land_at(ep.start))], 0);
    let r = run_episode(&scene, &ep, &mut p, &AssistantConfig::default(), &fast()).unwrap();
    assert_eq!(r.outcome, Outcome::LandedFar);
    assert_eq!(r.landing, Some(LandingTrigger::Policy));
    let touchdown = r.executed.last().unwrap();
    assert!((touchdown.z - KinematicLimits::default().collision_radius).abs() < 0.02);
    let start_dist = (V3::new(ep.start.x, ep.start.y, touchdown.z) - ep.target.position).norm();
    assert!((r.final_distance - start_dist).abs() < 1e-9);
    assert!((r.final_distance - 300.0).abs() < 0.1);
}

#[test]
fn invalid_commands_become_protocol_errors() {
    let scene = open_scene("open");
    let ep = straight_episode(&scene, V3::new(0.0, 0.0, 10.0), 100.0, 5.0);
    let ok = Ok(PolicyCommand::go_to(Pose::at(2.0, 0.0, 10.0, 0.0)));
    let nan = Ok(PolicyCommand::go_to(Pose { x: f64::NAN, ..ep.start }));
    let cases = [
        (vec![ok.clone(), ok.clone(), nan], 2),
        (vec![Ok(PolicyCommand { waypoints: vec![], declare_landing: false })], 0),
        (vec![ok.clone(), Ok(PolicyCommand { waypoints: vec![ep.start; 9], declare_landing: false })], 1),
        (vec![Err(PolicyError::Timeout)], 0),
    ];
    for (script, at) in cases {
        let r = run_episode(&scene, &ep, &mut Scripted(script, 0), &AssistantConfig::default(), &fast()).unwrap();
        assert_eq!(r.outcome, Outcome::ProtocolError);
        assert_eq!(r.fault.as_ref().unwrap().decision, at);
    }
}

#[test]
fn hovering_times_out_with_distance_from_last_state() {
    let scene = open_scene("open");
    let ep = straight_episode(&scene, V3::new(0.0, 0.0, 10.0), 100.0, 5.0);
    let cfg = HarnessConfig { max_decisions: 7, ..fast() };
    let mut p = Scripted(vec![Ok(PolicyCommand::go_to(ep.start))], 0);
    let r = run_episode(&scene, &ep, &mut p, &AssistantConfig::at_level(AssistLevel::None), &cfg).unwrap();
    assert_eq!(r.outcome, Outcome::Timeout);
    assert_eq!(r.decisions, 7);
    assert!((r.final_distance - (ep.start.position() - ep.target.position).norm()).abs() < 1e-9);
    assert!(r.assistant_calls.is_empty());
}

#[test]
fn wall_collision_ends_the_episode() {
    let scene = corridor_scene();
    let mut ep = straight_episode(&scene, V3::new(-5.0, 0.0, 10.0), 50.0, 5.0);
    ep.scene_id = scene.id().into();
    let r = run_episode(&scene, &ep, &mut WallSeeker { step: 10.0 }, &AssistantConfig::default(), &fast()).unwrap();
    assert_eq!(r.outcome, Outcome::Collision);
    assert!(!r.is_success());
    // stopped against the wall at x = 60 with a 1 m radius
    let last = r.executed.last().unwrap();
    assert!(last.x < 59.0 + 1e-9 && last.x > 58.9, "stopped at {}", last.x);
}

#[test]
fn executed_path_is_continuous() {
    let scene = corridor_scene();
    let mut ep = straight_episode(&scene, V3::new(-5.0, 0.0, 10.0), 50.0, 5.0);
    ep.scene_id = scene.id().into();
    let lim = KinematicLimits::default();
    let r = run_episode(&scene, &ep, &mut WallSeeker { step: 10.0 }, &AssistantConfig::default(), &fast()).unwrap();
    for w in r.executed.points().windows(2) {
        assert!((w[1].pose.position() - w[0].pose.position()).norm() <= lim.max_step_length() + 1e-9);
        assert!(w[1].t > w[0].t);
    }
}

#[test]
fn scene_mismatch_is_rejected() {
    let scene = open_scene("a");
    let ep = straight_episode(&open_scene("b"), V3::new(0.0, 0.0, 10.0), 100.0, 5.0);
    assert!(matches!(
        run_episode(&scene, &ep, &mut WallSeeker { step: 1.0 }, &AssistantConfig::default(), &fast()),
        Err(EpisodeError::SceneMismatch { .. })
    ));
}

#[test]
fn observation_text_follows_level() {
    let scene = open_scene("open");
    let ep = straight_episode(&scene, V3::new(0.0, 0.0, 10.0), 100.0, 5.0);
    let s = UavState::at_rest(ep.start, 0.0);
    let none = build_observation(&scene, &s, &ep, &AssistantConfig::at_level(AssistLevel::None), 0, &fast());
    assert_eq!(none.assistant_text, None);
    assert!(none.frame.is_complete());
    let l1 = build_observation(&scene, &s, &ep, &AssistantConfig::at_level(AssistLevel::L1), 0, &fast());
    assert_eq!(l1.assistant_text.as_deref(), Some("cruise forward"));
    assert_eq!(l1.task_text, ep.task_text());
}

#[test]
fn observation_depends_on_attitude() {
    let scene = open_scene("open");
    let ep = straight_episode(&scene, V3::new(0.0, 0.0, 10.0), 100.0, 5.0);
    let level = UavState::at_rest(ep.start, 0.0);
    let pitched = UavState::at_rest(Pose::new(0.0, 0.0, 10.0, (-20f64).to_radians(), 0.0, 0.0), 0.0);
    let cfg = HarnessConfig::default();
    let a = build_observation(&scene, &level, &ep, &AssistantConfig::default(), 0, &cfg);
    let b = build_observation(&scene, &pitched, &ep, &AssistantConfig::default(), 0, &cfg);
    assert_ne!(a.frame.depth(View::Front).values, b.frame.depth(View::Front).values);
}

#[test]
fn detector_lands_on_sight() {
    let scene = open_scene("open");
    let ep = straight_episode(&scene, V3::new(0.0, 0.0, 10.0), 300.0, 5.0);
    let cfg = HarnessConfig { detector_landing: true, ..fast() };
    let r = run_episode(&scene, &ep, &mut WallSeeker { step: 10.0 }, &AssistantConfig::default(), &cfg).unwrap();
    assert_eq!(r.landing, Some(LandingTrigger::Detector));
    assert_eq!(r.outcome, Outcome::Success);
    let off = HarnessConfig { max_decisions: 40, ..fast() };
    let r = run_episode(&scene, &ep, &mut WallSeeker { step: 10.0 }, &AssistantConfig::default(), &off).unwrap();
    assert_eq!(r.outcome, Outcome::Timeout);
}

#[test]
fn identical_runs_serialize_identically() {
    let scene = generate_scene(5, &SceneConfig::default()).unwrap();
    let eps = generate_episodes(std::slice::from_ref(&scene), 2, 9, &EpisodeGenConfig::default()).unwrap();
    for ep in &eps {
        let run = || {
            let mut p = uavnh_core::policies::RandomPolicy::new(4);
            p.begin_episode(ep).unwrap();
            run_episode(&scene, ep, &mut p, &AssistantConfig::default(), &fast()).unwrap().to_json()
        };
        assert_eq!(run(), run());
    }
}

#[test]
fn results_and_manifests_round_trip() {
    let scene = generate_scene(5, &SceneConfig::default()).unwrap();
    let eps = generate_episodes(std::slice::from_ref(&scene), 3, 2, &EpisodeGenConfig::default()).unwrap();
    assert_eq!(read_manifest(&write_manifest(&eps)).unwrap(), eps);
    let results: Vec<EpisodeResult> = eps
        .iter()
        .map(|ep| run_episode(&scene, ep, &mut TeacherPolicy::default(), &AssistantConfig::default(), &fast()).unwrap())
        .collect();
    let text = write_results(&results);
    assert_eq!(read_results(&text).unwrap(), results);
    assert_eq!(write_results(&read_results(&text).unwrap()), text);
    let calls: u32 = results[0].assistant_calls.values().sum();
    assert_eq!(calls as usize, results[0].decisions);
    assert!(results[0].assistant_calls.contains_key(&ActionKind::Land));
}

#[test]
fn generated_episodes_respect_collection_rules() {
    let scenes: Vec<_> = (0..3)
        .map(|i| {
            let style = [SceneStyle::Urban, SceneStyle::Forest, SceneStyle::Open][i];
            generate_scene(20 + i as u64, &SceneConfig { style, ..SceneConfig::default() }).unwrap()
        })
        .collect();
    let cfg = EpisodeGenConfig::default();
    let a = generate_episodes(&scenes, 12, 7, &cfg).unwrap();
    let b = generate_episodes(&scenes, 12, 7, &cfg).unwrap();
    assert_eq!(write_manifest(&a), write_manifest(&b));
    for ep in &a {
        ep.validate().unwrap();
        let end = ep.gt_traj.last().unwrap().position();
        assert!((end - ep.target.position).norm() <= GT_END_TOLERANCE);
        assert!((ep.target.position - ep.start.position()).horizontal_norm() >= cfg.min_start_distance);
        assert_eq!(ep.difficulty == Difficulty::Easy, ep.gt_length() < 250.0);
        let scene = scenes.iter().find(|s| s.id() == ep.scene_id).unwrap();
        for p in ep.gt_traj.poses() {
            assert!(!scene.collision_check(p.position(), cfg.limits.collision_radius));
        }
    }
}

#[test]
fn episode_validation_catches_bad_documents() {
    let scene = open_scene("open");
    let mut ep = straight_episode(&scene, V3::new(0.0, 0.0, 10.0), 100.0, 5.0);
    ep.validate().unwrap();
    ep.difficulty = Difficulty::Hard;
    assert!(matches!(ep.validate(), Err(EpisodeError::WrongDifficulty(_))));
    ep.difficulty = Difficulty::Easy;
    ep.description.object_text = " ".into();
    assert!(matches!(ep.validate(), Err(EpisodeError::EmptyDescription("object_text"))));
    ep.description.object_text = "It is a car.".into();
    ep.target.position.x += 10.0;
    assert!(matches!(ep.validate(), Err(EpisodeError::GroundTruthTooFar(_))));
    assert!(Episode::from_json("{").is_err());
}
