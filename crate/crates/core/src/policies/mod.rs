//! Baseline policies and the external policy bridge.

mod bridge;
pub mod wire;

use std::time::Duration;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::assistant::{parse_instruction, ActionKind, GuidanceAction};
use crate::episode::{Episode, Observation, Policy, PolicyCommand, PolicyError};
use crate::geometry::nearest_gt_point;
use crate::{Pose, Trajectory};

pub use bridge::{BridgePolicy, DEFAULT_TIMEOUT};

/// FNV-1a, used to derive per-episode seeds that do not depend on run order.
pub fn stable_hash(text: &str) -> u64 {
    text.bytes().fold(0xcbf2_9ce4_8422_2325u64, |h, b| (h ^ b as u64).wrapping_mul(0x0100_0000_01b3))
}

pub struct RandomPolicy {
    seed: u64,
    pub step_box: f64,
    pub p_land: f64,
    rng: ChaCha8Rng,
}

impl RandomPolicy {
    pub fn new(seed: u64) -> Self {
        Self { seed, step_box: 10.0, p_land: 0.01, rng: ChaCha8Rng::seed_from_u64(seed) }
    }

    pub fn with_p_land(mut self, p_land: f64) -> Self {
        self.p_land = p_land;
        self
    }
}

impl Policy for RandomPolicy {
    fn name(&self) -> String {
        "random".into()
    }

    fn begin_episode(&mut self, episode: &Episode) -> Result<(), PolicyError> {
        self.rng = ChaCha8Rng::seed_from_u64(self.seed ^ stable_hash(&episode.id));
        Ok(())
    }

    fn act(&mut self, obs: &Observation) -> Result<PolicyCommand, PolicyError> {
        let b = self.step_box;
        let p = obs.state.pose;
        let wp = Pose::at(
            p.x + self.rng.gen_range(-b..=b),
            p.y + self.rng.gen_range(-b..=b),
            p.z + self.rng.gen_range(-b..=b),
            self.rng.gen_range(-std::f64::consts::PI..=std::f64::consts::PI),
        );
        let land = self.rng.gen_bool(self.p_land);
        Ok(PolicyCommand { waypoints: vec![wp], declare_landing: land })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FixedActionConfig {
    pub forward_step: f64,
    pub turn_angle: f64,
    pub vertical_step: f64,
    pub escape_step: f64,
}

impl Default for FixedActionConfig {
    fn default() -> Self {
        Self { forward_step: 5.0, turn_angle: 30f64.to_radians(), vertical_step: 5.0, escape_step: 5.0 }
    }
}

/// Maps each instruction to one predefined maneuver.
#[derive(Debug, Clone, Default)]
pub struct FixedPolicy {
    pub cfg: FixedActionConfig,
}

impl FixedPolicy {
    pub fn command_for(&self, action: &GuidanceAction, at: &Pose) -> PolicyCommand {
        let c = &self.cfg;
        let along = |yaw: f64, d: f64| Pose::at(at.x + d * yaw.cos(), at.y + d * yaw.sin(), at.z, yaw);
        let half_pi = std::f64::consts::FRAC_PI_2;
        match action.kind() {
            ActionKind::Cruise => PolicyCommand::go_to(along(at.yaw, c.forward_step)),
            ActionKind::TurnLeft => PolicyCommand::go_to(along(at.yaw + c.turn_angle, c.forward_step)),
            ActionKind::TurnRight => PolicyCommand::go_to(along(at.yaw - c.turn_angle, c.forward_step)),
            ActionKind::Ascend => PolicyCommand::go_to(Pose::at(at.x, at.y, at.z + c.vertical_step, at.yaw)),
            ActionKind::Descend => PolicyCommand::go_to(Pose::at(at.x, at.y, at.z - c.vertical_step, at.yaw)),
            ActionKind::AvoidLeft => {
                let d = at.yaw + half_pi;
                PolicyCommand::go_to(Pose::at(at.x + c.escape_step * d.cos(), at.y + c.escape_step * d.sin(), at.z, at.yaw))
            }
            ActionKind::AvoidRight => {
                let d = at.yaw - half_pi;
                PolicyCommand::go_to(Pose::at(at.x + c.escape_step * d.cos(), at.y + c.escape_step * d.sin(), at.z, at.yaw))
            }
            ActionKind::AvoidUp => PolicyCommand::go_to(Pose::at(at.x, at.y, at.z + c.escape_step, at.yaw)),
            ActionKind::Land => PolicyCommand::land_at(Pose::at(at.x, at.y, at.z, at.yaw)),
        }
    }
}

impl Policy for FixedPolicy {
    fn name(&self) -> String {
        "fixed".into()
    }

    fn act(&mut self, obs: &Observation) -> Result<PolicyCommand, PolicyError> {
        let action = match &obs.assistant_text {
            Some(text) => parse_instruction(text).map_err(|e| PolicyError::Instruction(e.0))?,
            None => GuidanceAction::simple(ActionKind::Cruise),
        };
        Ok(self.command_for(&action, &obs.state.pose))
    }
}

/// Privileged policy that walks the ground-truth path.
#[derive(Debug, Clone)]
pub struct TeacherPolicy {
    /// Ground-truth samples to skip past the nearest one.
    pub advance_min: usize,
    /// Distance to the final sample that counts as having arrived.
    pub arrival_tolerance: f64,
    gt: Option<Trajectory>,
}

impl Default for TeacherPolicy {
    fn default() -> Self {
        Self { advance_min: 4, arrival_tolerance: 1.0, gt: None }
    }
}

impl TeacherPolicy {
    pub fn for_episode(episode: &Episode) -> Self {
        Self { gt: Some(episode.gt_traj.clone()), ..Self::default() }
    }

    pub fn command_at(&self, pose: &Pose) -> Result<PolicyCommand, PolicyError> {
        let gt = self.gt.as_ref().ok_or_else(|| PolicyError::InvalidCommand("teacher has no episode".into()))?;
        let (idx, _) = nearest_gt_point(gt, pose).map_err(|e| PolicyError::InvalidCommand(e.to_string()))?;
        let last = gt.len() - 1;
        let next = (idx + self.advance_min).min(last);
        // samples bunch up at the end of the descent, so arriving at the last one
        // does not always make it the nearest
        let arrived = next == last && (gt.pose(last).position() - pose.position()).norm() <= self.arrival_tolerance;
        if idx == last || arrived {
            return Ok(PolicyCommand::land_at(*gt.pose(last)));
        }
        Ok(PolicyCommand::go_to(*gt.pose(next)))
    }
}

impl Policy for TeacherPolicy {
    fn name(&self) -> String {
        "teacher".into()
    }

    fn begin_episode(&mut self, episode: &Episode) -> Result<(), PolicyError> {
        self.gt = Some(episode.gt_traj.clone());
        Ok(())
    }

    fn act(&mut self, obs: &Observation) -> Result<PolicyCommand, PolicyError> {
        self.command_at(&obs.state.pose)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PolicyKind {
    Random,
    Fixed,
    Teacher,
    External,
}

impl std::str::FromStr for PolicyKind {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        match s.to_ascii_lowercase().as_str() {
            "random" => Ok(PolicyKind::Random),
            "fixed" => Ok(PolicyKind::Fixed),
            "teacher" => Ok(PolicyKind::Teacher),
            "external" => Ok(PolicyKind::External),
            _ => Err(format!("unknown policy {s:?}")),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PolicySpec {
    pub kind: PolicyKind,
    pub seed: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub bridge_endpoint: Option<String>,
}

impl PolicySpec {
    pub fn new(kind: PolicyKind, seed: u64) -> Self {
        Self { kind, seed, bridge_endpoint: None }
    }

    pub fn external(endpoint: impl Into<String>) -> Self {
        Self { kind: PolicyKind::External, seed: 0, bridge_endpoint: Some(endpoint.into()) }
    }

    pub fn validate(&self) -> Result<(), PolicyError> {
        match (self.kind, &self.bridge_endpoint) {
            (PolicyKind::External, None) => Err(PolicyError::InvalidCommand("external policy needs a bridge endpoint".into())),
            (PolicyKind::External, Some(_)) | (_, None) => Ok(()),
            (_, Some(_)) => Err(PolicyError::InvalidCommand("bridge endpoint given for a built-in policy".into())),
        }
    }

    pub fn build(&self, max_waypoints: usize, timeout: Duration) -> Result<Box<dyn Policy + Send>, PolicyError> {
        self.validate()?;
        Ok(match self.kind {
            PolicyKind::Random => Box::new(RandomPolicy::new(self.seed)),
            PolicyKind::Fixed => Box::new(FixedPolicy::default()),
            PolicyKind::Teacher => Box::new(TeacherPolicy::default()),
            PolicyKind::External => {
                Box::new(BridgePolicy::connect(self.bridge_endpoint.as_deref().unwrap_or_default(), timeout, max_waypoints)?)
            }
        })
    }
}
