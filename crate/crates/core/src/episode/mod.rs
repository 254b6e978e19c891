//! Episodes, observations, policy commands and the closed evaluation loop.

mod generate;
mod harness;

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::assistant::ActionKind;
use crate::flight::UavState;
use crate::geometry::path_length;
use crate::world::{PlacedObject, SensorFrame};
use crate::{Pose, Trajectory};

pub use generate::{generate_episodes, plan_ground_truth, EpisodeGenConfig};
pub use harness::{build_observation, check_success, run_episode, HarnessConfig, Policy, PolicyError};

/// Paths strictly shorter than this are easy.
pub const EASY_PATH_LIMIT: f64 = 250.0;
/// Ground-truth paths end at most this far from the target.
pub const GT_END_TOLERANCE: f64 = 5.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Difficulty {
    Easy,
    Hard,
}

impl Difficulty {
    pub fn from_path_length(length: f64) -> Self {
        if length < EASY_PATH_LIMIT {
            Difficulty::Easy
        } else {
            Difficulty::Hard
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TargetDescription {
    pub direction_text: String,
    pub object_text: String,
    pub environment_text: String,
}

impl TargetDescription {
    /// Task text handed to the policy.
    pub fn task_text(&self) -> String {
        format!("{} {} {}", self.direction_text, self.object_text, self.environment_text)
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum EpisodeError {
    #[error("ground-truth trajectory is empty")]
    EmptyGroundTruth,
    #[error("ground truth ends {0:.2} m from the target")]
    GroundTruthTooFar(f64),
    #[error("difficulty label disagrees with path length {0:.2} m")]
    WrongDifficulty(f64),
    #[error("description field {0} is empty")]
    EmptyDescription(&'static str),
    #[error("episode targets scene {expected}, got {got}")]
    SceneMismatch { expected: String, got: String },
    #[error("could not generate episode: {0}")]
    Generation(String),
    #[error("malformed episode document: {0}")]
    Parse(String),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Episode {
    pub id: String,
    pub scene_id: String,
    pub start: Pose,
    pub description: TargetDescription,
    pub gt_traj: Trajectory,
    pub target: PlacedObject,
    pub difficulty: Difficulty,
}

impl Episode {
    pub fn validate(&self) -> Result<(), EpisodeError> {
        let last = self.gt_traj.last().ok_or(EpisodeError::EmptyGroundTruth)?;
        let end = (last.position() - self.target.position).norm();
        if end > GT_END_TOLERANCE {
            return Err(EpisodeError::GroundTruthTooFar(end));
        }
        let len = path_length(&self.gt_traj);
        if Difficulty::from_path_length(len) != self.difficulty {
            return Err(EpisodeError::WrongDifficulty(len));
        }
        for (name, text) in [
            ("direction_text", &self.description.direction_text),
            ("object_text", &self.description.object_text),
            ("environment_text", &self.description.environment_text),
        ] {
            if text.trim().is_empty() {
                return Err(EpisodeError::EmptyDescription(name));
            }
        }
        Ok(())
    }

    pub fn gt_length(&self) -> f64 {
        path_length(&self.gt_traj)
    }

    pub fn task_text(&self) -> String {
        self.description.task_text()
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("episode serializes")
    }

    pub fn from_json(text: &str) -> Result<Self, EpisodeError> {
        let ep: Episode = serde_json::from_str(text).map_err(|e| EpisodeError::Parse(e.to_string()))?;
        ep.validate()?;
        Ok(ep)
    }
}

/// Reads a JSONL manifest, one episode per line.
pub fn read_manifest(text: &str) -> Result<Vec<Episode>, EpisodeError> {
    text.lines().filter(|l| !l.trim().is_empty()).map(Episode::from_json).collect()
}

pub fn write_manifest(episodes: &[Episode]) -> String {
    episodes.iter().map(|e| e.to_json() + "\n").collect()
}

#[derive(Debug, Clone, PartialEq)]
pub struct Observation {
    pub state: UavState,
    pub frame: SensorFrame,
    pub task_text: String,
    pub assistant_text: Option<String>,
    pub step_index: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PolicyCommand {
    pub waypoints: Vec<Pose>,
    pub declare_landing: bool,
}

impl PolicyCommand {
    pub fn go_to(pose: Pose) -> Self {
        Self { waypoints: vec![pose], declare_landing: false }
    }

    pub fn land_at(pose: Pose) -> Self {
        Self { waypoints: vec![pose], declare_landing: true }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Outcome {
    Success,
    Collision,
    Timeout,
    LandedFar,
    ProtocolError,
    /// The run infrastructure failed; no trajectory was produced.
    Errored,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LandingTrigger {
    Policy,
    Detector,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProtocolFault {
    pub decision: usize,
    pub kind: String,
    pub message: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EpisodeResult {
    pub episode_id: String,
    pub executed: Trajectory,
    pub outcome: Outcome,
    pub final_distance: f64,
    pub assistant_calls: BTreeMap<ActionKind, u32>,
    pub decisions: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub landing: Option<LandingTrigger>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub fault: Option<ProtocolFault>,
}

impl EpisodeResult {
    pub fn errored(episode_id: &str, message: impl Into<String>) -> Self {
        Self {
            episode_id: episode_id.to_string(),
            executed: Trajectory::new(),
            outcome: Outcome::Errored,
            final_distance: 0.0,
            assistant_calls: BTreeMap::new(),
            decisions: 0,
            landing: None,
            fault: Some(ProtocolFault { decision: 0, kind: "worker".into(), message: message.into() }),
        }
    }

    pub fn is_success(&self) -> bool {
        self.outcome == Outcome::Success
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("result serializes")
    }

    pub fn from_json(text: &str) -> Result<Self, EpisodeError> {
        serde_json::from_str(text).map_err(|e| EpisodeError::Parse(e.to_string()))
    }
}

pub fn write_results(results: &[EpisodeResult]) -> String {
    results.iter().map(|r| r.to_json() + "\n").collect()
}

pub fn read_results(text: &str) -> Result<Vec<EpisodeResult>, EpisodeError> {
    text.lines().filter(|l| !l.trim().is_empty()).map(EpisodeResult::from_json).collect()
}
