use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use super::{Episode, EpisodeError, EpisodeResult, LandingTrigger, Observation, Outcome, PolicyCommand, ProtocolFault};
use crate::assistant::{guidance, render_instruction, AssistantConfig, GuidanceAction};
use crate::flight::{fly_to_waypoint, step, KinematicLimits, UavState, VelocityCommand};
use crate::world::{oracle_detect, render_frame, CameraConfig, PlacedObject, Scene};
use crate::{Pose, Trajectory, V3};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum PolicyError {
    #[error("policy did not answer in time")]
    Timeout,
    #[error("malformed response: {0}")]
    Malformed(String),
    #[error("wire version mismatch: expected {expected}, got {got}")]
    Version { expected: u32, got: u32 },
    #[error("invalid command: {0}")]
    InvalidCommand(String),
    #[error("unparseable instruction: {0}")]
    Instruction(String),
    #[error("transport failure: {0}")]
    Transport(String),
}

impl PolicyError {
    pub fn kind(&self) -> &'static str {
        match self {
            PolicyError::Timeout => "timeout",
            PolicyError::Malformed(_) => "malformed",
            PolicyError::Version { .. } => "version",
            PolicyError::InvalidCommand(_) => "invalid_command",
            PolicyError::Instruction(_) => "instruction",
            PolicyError::Transport(_) => "transport",
        }
    }
}

/// Anything that maps observations to waypoint commands.
pub trait Policy {
    fn name(&self) -> String;

    /// Called once before the first observation of every episode.
    fn begin_episode(&mut self, _episode: &Episode) -> Result<(), PolicyError> {
        Ok(())
    }

    fn act(&mut self, obs: &Observation) -> Result<PolicyCommand, PolicyError>;
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HarnessConfig {
    pub limits: KinematicLimits,
    pub camera: CameraConfig,
    pub max_decisions: usize,
    pub max_waypoints: usize,
    pub success_radius: f64,
    pub detection_range: f64,
    /// Start landing as soon as the target is visible, whatever the policy says.
    pub detector_landing: bool,
}

impl Default for HarnessConfig {
    fn default() -> Self {
        Self {
            limits: KinematicLimits::default(),
            camera: CameraConfig::default(),
            max_decisions: 300,
            max_waypoints: 8,
            success_radius: 20.0,
            detection_range: 50.0,
            detector_landing: false,
        }
    }
}

/// Inclusive success rule on the distance between the landed pose and the target.
pub fn check_success(final_pose: &Pose, target: &PlacedObject, success_radius: f64) -> bool {
    (final_pose.position() - target.position).norm() <= success_radius
}

/// Renders the rig at the current attitude and attaches the assistant's instruction.
pub fn build_observation(
    scene: &Scene,
    uav: &UavState,
    episode: &Episode,
    assistant: &AssistantConfig,
    step_index: usize,
    cfg: &HarnessConfig,
) -> Observation {
    observe(scene, uav, episode, assistant, step_index, cfg).0
}

fn observe(
    scene: &Scene,
    uav: &UavState,
    episode: &Episode,
    assistant: &AssistantConfig,
    step_index: usize,
    cfg: &HarnessConfig,
) -> (Observation, Option<GuidanceAction>) {
    let frame = render_frame(scene, &uav.pose, &cfg.camera);
    let action = guidance(uav, &episode.gt_traj, &frame, assistant);
    let obs = Observation {
        state: *uav,
        frame,
        task_text: episode.task_text(),
        assistant_text: action.as_ref().map(render_instruction),
        step_index,
    };
    (obs, action)
}

fn validate_command(cmd: &PolicyCommand, max_waypoints: usize) -> Result<(), PolicyError> {
    if cmd.waypoints.is_empty() {
        return Err(PolicyError::InvalidCommand("empty waypoint list".into()));
    }
    if cmd.waypoints.len() > max_waypoints {
        return Err(PolicyError::InvalidCommand(format!(
            "{} waypoints exceed the maximum of {max_waypoints}",
            cmd.waypoints.len()
        )));
    }
    if let Some(i) = cmd.waypoints.iter().position(|w| !w.is_finite()) {
        return Err(PolicyError::InvalidCommand(format!("waypoint {i} is not finite")));
    }
    Ok(())
}

/// Keeps commanded positions inside the scene volume.
fn geofence(scene: &Scene, wp: &Pose) -> Pose {
    wp.with_position(scene.bounds().clamp(wp.position()))
}

enum Descent {
    Touchdown,
    Collision,
}

/// Vertical descent until contact with whatever lies below.
fn descend(scene: &Scene, from: &UavState, limits: &KinematicLimits, out: &mut Vec<UavState>) -> Descent {
    let cmd = VelocityCommand::world(V3::new(0.0, 0.0, -limits.max_vertical_speed), 0.0);
    let budget = (from.pose.z / (limits.max_vertical_speed * limits.dt)).ceil() as usize * 4 + 100;
    let mut s = *from;
    for _ in 0..budget {
        let o = step(&s, &cmd, limits, scene);
        s = o.state;
        out.push(s);
        if o.collision {
            return Descent::Touchdown;
        }
    }
    // a descent that never touches down means the vehicle is stuck mid-air
    Descent::Collision
}

struct Loop<'a> {
    scene: &'a Scene,
    episode: &'a Episode,
    cfg: &'a HarnessConfig,
    states: Vec<UavState>,
    calls: BTreeMap<crate::assistant::ActionKind, u32>,
    decisions: usize,
}

impl Loop<'_> {
    fn current(&self) -> UavState {
        *self.states.last().expect("loop starts with a state")
    }

    fn distance(&self) -> f64 {
        (self.current().position() - self.episode.target.position).norm()
    }

    fn finish(self, outcome: Outcome, landing: Option<LandingTrigger>, fault: Option<ProtocolFault>) -> EpisodeResult {
        let final_distance = (self.current().position() - self.episode.target.position).norm();
        let executed = Trajectory::from_points(
            self.states.iter().map(|s| crate::TrajectoryPoint { t: s.time, pose: s.pose }).collect(),
        )
        .expect("flight states are time ordered");
        EpisodeResult {
            episode_id: self.episode.id.clone(),
            executed,
            outcome,
            final_distance,
            assistant_calls: self.calls,
            decisions: self.decisions,
            landing,
            fault,
        }
    }

    /// Flies to `wp`; false on collision.
    fn fly(&mut self, wp: &Pose) -> bool {
        let flight = fly_to_waypoint(&self.current(), wp, &self.cfg.limits, self.scene);
        self.states.extend_from_slice(&flight.states[1..]);
        !flight.collision
    }

    fn land(mut self, trigger: LandingTrigger) -> EpisodeResult {
        let from = self.current();
        match descend(self.scene, &from, &self.cfg.limits, &mut self.states) {
            Descent::Collision => self.finish(Outcome::Collision, Some(trigger), None),
            Descent::Touchdown => {
                let ok = check_success(&self.current().pose, &self.episode.target, self.cfg.success_radius);
                let outcome = if ok { Outcome::Success } else { Outcome::LandedFar };
                self.finish(outcome, Some(trigger), None)
            }
        }
    }
}

/// Runs one episode to termination. Policy failures end the episode with a
/// protocol-error outcome instead of propagating.
pub fn run_episode(
    scene: &Scene,
    episode: &Episode,
    policy: &mut dyn Policy,
    assistant: &AssistantConfig,
    cfg: &HarnessConfig,
) -> Result<EpisodeResult, EpisodeError> {
    if scene.id() != episode.scene_id {
        return Err(EpisodeError::SceneMismatch { expected: episode.scene_id.clone(), got: scene.id().to_string() });
    }
    let target = PlacedObject { is_target: true, ..episode.target.clone() };
    let scene = scene.with_objects([target]).map_err(|e| EpisodeError::Generation(e.to_string()))?;
    let mut lp = Loop {
        scene: &scene,
        episode,
        cfg,
        states: vec![UavState::at_rest(episode.start, 0.0)],
        calls: BTreeMap::new(),
        decisions: 0,
    };
    let fault = |decision, e: PolicyError| ProtocolFault { decision, kind: e.kind().into(), message: e.to_string() };
    if let Err(e) = policy.begin_episode(episode) {
        return Ok(lp.finish(Outcome::ProtocolError, None, Some(fault(0, e))));
    }

    for decision in 0..cfg.max_decisions {
        let (obs, action) = observe(&scene, &lp.current(), episode, assistant, decision, cfg);
        if let Some(a) = action {
            *lp.calls.entry(a.kind()).or_insert(0) += 1;
        }
        let here = lp.current().pose;
        if cfg.detector_landing && oracle_detect(&scene, &here, &episode.target, &cfg.camera, cfg.detection_range) {
            let above = Pose::at(episode.target.position.x, episode.target.position.y, here.z, here.yaw);
            if !lp.fly(&geofence(&scene, &above)) {
                return Ok(lp.finish(Outcome::Collision, Some(LandingTrigger::Detector), None));
            }
            return Ok(lp.land(LandingTrigger::Detector));
        }

        lp.decisions += 1;
        let cmd = match policy.act(&obs).and_then(|c| validate_command(&c, cfg.max_waypoints).map(|_| c)) {
            Ok(c) => c,
            Err(e) => return Ok(lp.finish(Outcome::ProtocolError, None, Some(fault(decision, e)))),
        };
        for wp in &cmd.waypoints {
            if !lp.fly(&geofence(&scene, wp)) {
                return Ok(lp.finish(Outcome::Collision, None, None));
            }
        }
        if cmd.declare_landing {
            return Ok(lp.land(LandingTrigger::Policy));
        }
    }
    debug_assert!(lp.distance().is_finite());
    Ok(lp.finish(Outcome::Timeout, None, None))
}
