//! Rule-based guidance at three levels of involvement.
//!
//! * L1 speaks at every decision, steering toward the ground-truth path.
//! * L2 speaks only when clearance is low or the vehicle has drifted off the path.
//! * L3 speaks only when clearance is low, and only to avoid obstacles.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::flight::UavState;
use crate::geometry::{nearest_gt_point, relative_bearing};
use crate::world::{min_clearance, SensorFrame, View};
use crate::{Trajectory, V3};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ActionKind {
    Cruise,
    TurnLeft,
    TurnRight,
    Ascend,
    Descend,
    AvoidLeft,
    AvoidRight,
    AvoidUp,
    Land,
}

impl ActionKind {
    pub const ALL: [ActionKind; 9] = [
        ActionKind::Cruise,
        ActionKind::TurnLeft,
        ActionKind::TurnRight,
        ActionKind::Ascend,
        ActionKind::Descend,
        ActionKind::AvoidLeft,
        ActionKind::AvoidRight,
        ActionKind::AvoidUp,
        ActionKind::Land,
    ];

    pub fn has_magnitude(self) -> bool {
        matches!(self, ActionKind::TurnLeft | ActionKind::TurnRight | ActionKind::Ascend | ActionKind::Descend)
    }

    pub fn is_avoidance(self) -> bool {
        matches!(self, ActionKind::AvoidLeft | ActionKind::AvoidRight | ActionKind::AvoidUp)
    }
}

/// Guidance action; turns carry radians, climbs carry meters, others carry nothing.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GuidanceAction {
    kind: ActionKind,
    magnitude: Option<f64>,
}

impl GuidanceAction {
    /// Action without magnitude. Panics for turn/climb kinds.
    pub fn simple(kind: ActionKind) -> Self {
        assert!(!kind.has_magnitude(), "{kind:?} needs a magnitude");
        Self { kind, magnitude: None }
    }

    /// Action with magnitude. Panics for kinds that take none.
    pub fn with_magnitude(kind: ActionKind, magnitude: f64) -> Self {
        assert!(kind.has_magnitude(), "{kind:?} takes no magnitude");
        Self { kind, magnitude: Some(magnitude) }
    }

    pub fn kind(&self) -> ActionKind {
        self.kind
    }

    pub fn magnitude(&self) -> Option<f64> {
        self.magnitude
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum AssistLevel {
    L1,
    L2,
    L3,
    None,
}

impl std::str::FromStr for AssistLevel {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        match s.to_ascii_lowercase().as_str() {
            "l1" => Ok(AssistLevel::L1),
            "l2" => Ok(AssistLevel::L2),
            "l3" => Ok(AssistLevel::L3),
            "none" => Ok(AssistLevel::None),
            _ => Err(format!("unknown assistant level {s:?}")),
        }
    }
}

impl std::fmt::Display for AssistLevel {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            AssistLevel::L1 => "L1",
            AssistLevel::L2 => "L2",
            AssistLevel::L3 => "L3",
            AssistLevel::None => "none",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AssistantConfig {
    pub level: AssistLevel,
    pub yaw_tolerance: f64,
    pub vertical_tolerance: f64,
    pub deviation_threshold: f64,
    pub clearance_threshold: f64,
    pub landing_radius: f64,
    /// Samples past the nearest ground-truth point that L1 steers toward.
    pub lookahead: usize,
}

impl Default for AssistantConfig {
    fn default() -> Self {
        Self {
            level: AssistLevel::L1,
            yaw_tolerance: 15f64.to_radians(),
            vertical_tolerance: 3.0,
            deviation_threshold: 15.0,
            clearance_threshold: 8.0,
            landing_radius: 20.0,
            lookahead: 2,
        }
    }
}

impl AssistantConfig {
    pub fn at_level(level: AssistLevel) -> Self {
        Self { level, ..Self::default() }
    }
}

/// Priority rule: land, then fix altitude, then fix heading, else cruise.
pub fn classify_action(state: &UavState, goal: V3, goal_is_final: bool, cfg: &AssistantConfig) -> GuidanceAction {
    let b = relative_bearing(&state.pose, goal);
    if goal_is_final && b.horizontal_dist <= cfg.landing_radius {
        return GuidanceAction::simple(ActionKind::Land);
    }
    if b.vertical_offset.abs() > cfg.vertical_tolerance {
        let kind = if b.vertical_offset > 0.0 { ActionKind::Ascend } else { ActionKind::Descend };
        return GuidanceAction::with_magnitude(kind, b.vertical_offset.abs());
    }
    if b.yaw_offset.abs() > cfg.yaw_tolerance {
        let kind = if b.yaw_offset > 0.0 { ActionKind::TurnLeft } else { ActionKind::TurnRight };
        return GuidanceAction::with_magnitude(kind, b.yaw_offset.abs());
    }
    GuidanceAction::simple(ActionKind::Cruise)
}

/// Continuous path-following guidance. Panics on an empty trajectory.
pub fn l1_guidance(state: &UavState, gt: &Trajectory, cfg: &AssistantConfig) -> GuidanceAction {
    let (nearest, _) = nearest_gt_point(gt, &state.pose).expect("ground-truth trajectory is non-empty");
    let last = gt.len() - 1;
    let goal = (nearest + cfg.lookahead).min(last);
    classify_action(state, gt.pose(goal).position(), goal == last, cfg)
}

/// Correction issued only on low clearance or large deviation from the path.
pub fn l2_guidance(state: &UavState, gt: &Trajectory, frame: &SensorFrame, cfg: &AssistantConfig) -> Option<GuidanceAction> {
    if let Some(avoid) = l3_guidance(state, frame, cfg) {
        return Some(avoid);
    }
    let (nearest, dist) = nearest_gt_point(gt, &state.pose).expect("ground-truth trajectory is non-empty");
    if dist > cfg.deviation_threshold {
        let last = gt.len() - 1;
        return Some(classify_action(state, gt.pose(nearest).position(), nearest == last, cfg));
    }
    None
}

/// Obstacle avoidance from depth alone.
///
/// A threat seen by the downward camera always means climb. Otherwise the
/// escape with the most open space wins: the left view, the right view, or
/// the upper half of the front view. Ties prefer up, then left.
pub fn l3_guidance(_state: &UavState, frame: &SensorFrame, cfg: &AssistantConfig) -> Option<GuidanceAction> {
    let clearance = min_clearance(frame);
    if clearance >= cfg.clearance_threshold {
        return None;
    }
    let threat = frame
        .depth
        .iter()
        .min_by(|a, b| a.min().total_cmp(&b.min()))
        .map(|d| d.view)
        .unwrap_or(View::Front);
    if threat == View::Down {
        return Some(GuidanceAction::simple(ActionKind::AvoidUp));
    }
    let mut options = vec![(ActionKind::AvoidUp, frame.depth(View::Front).upper_mean())];
    if threat != View::Left {
        options.push((ActionKind::AvoidLeft, frame.depth(View::Left).mean()));
    }
    if threat != View::Right {
        options.push((ActionKind::AvoidRight, frame.depth(View::Right).mean()));
    }
    let mut best = options[0];
    for o in &options[1..] {
        if o.1 > best.1 {
            best = *o;
        }
    }
    Some(GuidanceAction::simple(best.0))
}

/// Guidance for the configured level; `None` means the assistant stays silent.
pub fn guidance(state: &UavState, gt: &Trajectory, frame: &SensorFrame, cfg: &AssistantConfig) -> Option<GuidanceAction> {
    match cfg.level {
        AssistLevel::L1 => Some(l1_guidance(state, gt, cfg)),
        AssistLevel::L2 => l2_guidance(state, gt, frame, cfg),
        AssistLevel::L3 => l3_guidance(state, frame, cfg),
        AssistLevel::None => None,
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("unrecognized instruction {0:?}")]
pub struct InstructionError(pub String);

const CRUISE: &str = "cruise forward";
const LAND: &str = "descend and land at the target";
const AVOID_LEFT: &str = "obstacle close, move left";
const AVOID_RIGHT: &str = "obstacle close, move right";
const AVOID_UP: &str = "obstacle close, climb up";

/// Fixed English template per action; magnitudes rounded to whole degrees or meters.
pub fn render_instruction(action: &GuidanceAction) -> String {
    let m = action.magnitude.unwrap_or(0.0);
    match action.kind {
        ActionKind::Cruise => CRUISE.to_string(),
        ActionKind::TurnLeft => format!("turn left about {} degrees", m.to_degrees().round() as i64),
        ActionKind::TurnRight => format!("turn right about {} degrees", m.to_degrees().round() as i64),
        ActionKind::Ascend => format!("ascend about {} meters", m.round() as i64),
        ActionKind::Descend => format!("descend about {} meters", m.round() as i64),
        ActionKind::AvoidLeft => AVOID_LEFT.to_string(),
        ActionKind::AvoidRight => AVOID_RIGHT.to_string(),
        ActionKind::AvoidUp => AVOID_UP.to_string(),
        ActionKind::Land => LAND.to_string(),
    }
}

/// Inverse of [`render_instruction`], up to the rounding of magnitudes.
pub fn parse_instruction(text: &str) -> Result<GuidanceAction, InstructionError> {
    let simple = [
        (CRUISE, ActionKind::Cruise),
        (LAND, ActionKind::Land),
        (AVOID_LEFT, ActionKind::AvoidLeft),
        (AVOID_RIGHT, ActionKind::AvoidRight),
        (AVOID_UP, ActionKind::AvoidUp),
    ];
    if let Some((_, kind)) = simple.iter().find(|(t, _)| *t == text) {
        return Ok(GuidanceAction::simple(*kind));
    }
    let measured = [
        ("turn left about ", " degrees", ActionKind::TurnLeft),
        ("turn right about ", " degrees", ActionKind::TurnRight),
        ("ascend about ", " meters", ActionKind::Ascend),
        ("descend about ", " meters", ActionKind::Descend),
    ];
    for (prefix, suffix, kind) in measured {
        if let Some(n) = text.strip_prefix(prefix).and_then(|r| r.strip_suffix(suffix)) {
            let value: u32 = n.parse().map_err(|_| InstructionError(text.to_string()))?;
            let magnitude = if suffix == " degrees" { (value as f64).to_radians() } else { value as f64 };
            return Ok(GuidanceAction::with_magnitude(kind, magnitude));
        }
    }
    Err(InstructionError(text.to_string()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::world::DepthImage;
    use crate::{Pose, Trajectory};
    use proptest::prelude::*;

    fn uav(x: f64, y: f64, z: f64, yaw: f64) -> UavState {
        UavState::at_rest(Pose::at(x, y, z, yaw), 0.0)
    }

    fn straight_path() -> Trajectory {
        Trajectory::from_poses(0.0, 0.5, (0..=30).map(|i| Pose::at(5.0 * i as f64, 0.0, 30.0, 0.0)))
    }

    fn frame(front: f32, left: f32, right: f32, rear: f32, down: f32) -> SensorFrame {
        let img = |view, v| DepthImage { view, width: 8, height: 8, fov: 90.0, max_range: 100.0, values: vec![v; 64] };
        let depth = vec![
            img(View::Front, front),
            img(View::Left, left),
            img(View::Right, right),
            img(View::Rear, rear),
            img(View::Down, down),
        ];
        let semantic = depth
            .iter()
            .map(|d| crate::world::SemanticImage { view: d.view, width: 8, height: 8, fov: 90.0, labels: vec![0; 64] })
            .collect();
        SensorFrame { depth, semantic }
    }

    fn open_frame() -> SensorFrame {
        frame(100.0, 100.0, 100.0, 100.0, 100.0)
    }

    #[test]
    fn classify_gates() {
        let cfg = AssistantConfig::default();
        let s = uav(0.0, 0.0, 30.0, 0.0);
        assert_eq!(classify_action(&s, V3::new(40.0, 0.0, 30.0), false, &cfg).kind(), ActionKind::Cruise);
        let up = classify_action(&s, V3::new(0.0, 0.0, 50.0), false, &cfg);
        assert_eq!((up.kind(), up.magnitude()), (ActionKind::Ascend, Some(20.0)));
        let a = 60f64.to_radians();
        let turn = classify_action(&s, V3::new(40.0 * a.cos(), 40.0 * a.sin(), 30.0), false, &cfg);
        assert_eq!(turn.kind(), ActionKind::TurnLeft);
        // bearing oracle: atan2 of the offset
        let oracle = (40.0 * a.sin()).atan2(40.0 * a.cos());
        assert!((turn.magnitude().unwrap() - oracle).abs() < 1e-12);
        assert_eq!(classify_action(&s, V3::new(10.0, 0.0, 0.0), true, &cfg).kind(), ActionKind::Land);
    }

    #[test]
    fn l1_cases() {
        let cfg = AssistantConfig::default();
        let gt = straight_path();
        let end = gt.last().unwrap();
        assert_eq!(l1_guidance(&uav(end.x, end.y, end.z, 0.0), &gt, &cfg).kind(), ActionKind::Land);
        assert_eq!(l1_guidance(&uav(20.0, 0.0, 30.0, 0.0), &gt, &cfg).kind(), ActionKind::Cruise);

        let off = uav(40.0, 10.0, 30.0, 0.0);
        let a = l1_guidance(&off, &gt, &cfg);
        assert_eq!(a.kind(), ActionKind::TurnRight);
        // nearest sample is (40, 0); lookahead two samples is (50, 0)
        let oracle = (-10.0f64).atan2(10.0).abs();
        assert!((a.magnitude().unwrap() - oracle).abs() < 1e-12);
    }

    #[test]
    fn l2_cases() {
        let cfg = AssistantConfig::default();
        let gt = straight_path();
        assert_eq!(l2_guidance(&uav(20.0, 0.0, 30.0, 0.0), &gt, &open_frame(), &cfg), None);

        let far = uav(50.0, 30.0, 30.0, 0.0);
        let a = l2_guidance(&far, &gt, &open_frame(), &cfg).unwrap();
        // back toward the nearest sample (50, 0): due south of a vehicle heading east
        assert_eq!(a.kind(), ActionKind::TurnRight);
        assert!((a.magnitude().unwrap() - std::f64::consts::FRAC_PI_2).abs() < 1e-12);

        let tight = frame(3.0, 100.0, 100.0, 100.0, 30.0);
        let a = l2_guidance(&uav(20.0, 0.0, 30.0, 0.0), &gt, &tight, &cfg).unwrap();
        assert!(a.kind().is_avoidance());
    }

    #[test]
    fn l3_cases() {
        let cfg = AssistantConfig::default();
        let s = uav(0.0, 0.0, 30.0, 0.0);
        assert_eq!(l3_guidance(&s, &open_frame(), &cfg), None);
        let wall = frame(4.0, 100.0, 6.0, 100.0, 30.0);
        assert_eq!(l3_guidance(&s, &wall, &cfg).unwrap().kind(), ActionKind::AvoidLeft);
        let ground = frame(100.0, 100.0, 100.0, 100.0, 5.0);
        assert_eq!(l3_guidance(&s, &ground, &cfg).unwrap().kind(), ActionKind::AvoidUp);
    }

    #[test]
    fn instruction_templates() {
        assert_eq!(render_instruction(&GuidanceAction::simple(ActionKind::Cruise)), "cruise forward");
        assert_eq!(
            render_instruction(&GuidanceAction::with_magnitude(ActionKind::TurnLeft, 0.52)),
            "turn left about 30 degrees"
        );
        assert_eq!(render_instruction(&GuidanceAction::simple(ActionKind::Land)), "descend and land at the target");
        assert_eq!(render_instruction(&GuidanceAction::with_magnitude(ActionKind::Descend, 7.4)), "descend about 7 meters");
        assert!(parse_instruction("fly to the moon").is_err());
        assert!(parse_instruction("turn left about many degrees").is_err());
    }

    #[test]
    fn golden_instruction_set() {
        let rendered: Vec<String> = [
            GuidanceAction::simple(ActionKind::Cruise),
            GuidanceAction::with_magnitude(ActionKind::TurnLeft, 45f64.to_radians()),
            GuidanceAction::with_magnitude(ActionKind::TurnRight, 90f64.to_radians()),
            GuidanceAction::with_magnitude(ActionKind::Ascend, 12.0),
            GuidanceAction::with_magnitude(ActionKind::Descend, 3.6),
            GuidanceAction::simple(ActionKind::AvoidLeft),
            GuidanceAction::simple(ActionKind::AvoidRight),
            GuidanceAction::simple(ActionKind::AvoidUp),
            GuidanceAction::simple(ActionKind::Land),
        ]
        .iter()
        .map(render_instruction)
        .collect();
        assert_eq!(rendered.join("\n"), include_str!("../tests/golden/instructions.txt").trim_end());
    }

    fn arb_action() -> impl Strategy<Value = GuidanceAction> {
        (0usize..9, 0.0..200.0f64).prop_map(|(k, m)| {
            let kind = ActionKind::ALL[k];
            if kind.has_magnitude() {
                let m = if matches!(kind, ActionKind::TurnLeft | ActionKind::TurnRight) { m.to_radians().min(3.14) } else { m };
                GuidanceAction::with_magnitude(kind, m)
            } else {
                GuidanceAction::simple(kind)
            }
        })
    }

    proptest! {
        #[test]
        fn render_parse_is_bijective_on_rounded_magnitudes(a in arb_action()) {
            let text = render_instruction(&a);
            let back = parse_instruction(&text).unwrap();
            prop_assert_eq!(back.kind(), a.kind());
            prop_assert_eq!(render_instruction(&back), text);
        }

        #[test]
        fn doubling_horizontal_distance_keeps_kind(yaw in -3.1..3.1f64, bearing in -3.1..3.1f64, dist in 1.0..150.0f64, dz in -40.0..40.0f64, is_final: bool) {
            let cfg = AssistantConfig::default();
            let s = uav(0.0, 0.0, 50.0, yaw);
            let goal = |d: f64| V3::new(d * bearing.cos(), d * bearing.sin(), 50.0 + dz);
            let near = classify_action(&s, goal(dist), is_final, &cfg).kind();
            let far = classify_action(&s, goal(2.0 * dist), is_final, &cfg).kind();
            if near == ActionKind::Land {
                prop_assert!(far == ActionKind::Land || !is_final || 2.0 * dist > cfg.landing_radius);
            } else {
                prop_assert_eq!(near, far);
            }
        }

        #[test]
        fn l2_speaks_whenever_l3_does(front in 1.0..100.0f32, left in 1.0..100.0f32, right in 1.0..100.0f32, down in 1.0..100.0f32, y in -40.0..40.0f64) {
            let cfg = AssistantConfig::default();
            let f = frame(front, left, right, 100.0, down);
            let s = uav(50.0, y, 30.0, 0.0);
            let gt = straight_path();
            let l3 = l3_guidance(&s, &f, &cfg);
            let l2 = l2_guidance(&s, &gt, &f, &cfg);
            if let Some(a) = l3 {
                prop_assert_eq!(l2, Some(a));
            }
            if y.abs() <= cfg.deviation_threshold && l3.is_none() {
                prop_assert_eq!(l2, None);
            }
        }
    }

    #[test]
    fn l1_replay_along_path_never_avoids() {
        let cfg = AssistantConfig::default();
        let gt = straight_path();
        for (i, p) in gt.poses().enumerate() {
            let a = l1_guidance(&UavState::at_rest(*p, 0.0), &gt, &cfg);
            assert!(!a.kind().is_avoidance());
            let last_x = gt.last().unwrap().x;
            if last_x - p.x <= cfg.landing_radius && i + cfg.lookahead >= gt.len() - 1 {
                assert_eq!(a.kind(), ActionKind::Land);
            } else {
                assert_ne!(a.kind(), ActionKind::Land);
            }
        }
    }
}
