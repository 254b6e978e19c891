//! Mixed student/teacher rollouts that rewind on collision.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::record::{record_flight, RecordSource, TrajectoryRecord};
use super::CollectionError;
use crate::assistant::AssistantConfig;
use crate::episode::{build_observation, check_success, Episode, HarnessConfig, Outcome, Policy, PolicyCommand};
use crate::flight::{step, waypoint_command, UavState, VelocityCommand};
use crate::world::{PlacedObject, Scene};
use crate::V3;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DaggerConfig {
    /// Probability that a decision uses the student's command.
    pub beta: f64,
    /// Control frames to rewind from the colliding one.
    pub backtrack_frames: usize,
    /// Past this many rewinds within one decision the rollout ends as a collision.
    pub max_consecutive_backtracks: usize,
    pub record_dt: f64,
    pub seed: u64,
    pub harness: HarnessConfig,
    pub assistant: AssistantConfig,
}

impl Default for DaggerConfig {
    fn default() -> Self {
        Self {
            beta: 0.7,
            backtrack_frames: 2,
            max_consecutive_backtracks: 5,
            record_dt: 0.5,
            seed: 0,
            harness: HarnessConfig::default(),
            assistant: AssistantConfig::default(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DaggerEventKind {
    ModelAction,
    TeacherAction,
    CollisionBacktrack,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DaggerEvent {
    /// Decision index the event belongs to.
    pub step: usize,
    pub kind: DaggerEventKind,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub collision_index: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub reverted_index: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub reverted_to: Option<UavState>,
}

/// One control frame; `parent` is the frame the vehicle was in just before.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LoggedFrame {
    pub state: UavState,
    pub parent: Option<usize>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct DaggerRollout {
    pub record: TrajectoryRecord,
    pub events: Vec<DaggerEvent>,
    /// Every frame ever simulated, including colliding and abandoned ones.
    pub control_log: Vec<LoggedFrame>,
    pub outcome: Outcome,
}

enum Exec {
    Done,
    Collided(usize),
}

struct Rollout<'a> {
    scene: &'a Scene,
    cfg: &'a DaggerConfig,
    log: Vec<LoggedFrame>,
    /// Log indices of the vehicle's current history.
    path: Vec<usize>,
}

impl Rollout<'_> {
    fn current(&self) -> UavState {
        self.log[*self.path.last().expect("path is never empty")].state
    }

    fn push(&mut self, state: UavState, on_path: bool) -> usize {
        let idx = self.log.len();
        self.log.push(LoggedFrame { state, parent: self.path.last().copied() });
        if on_path {
            self.path.push(idx);
        }
        idx
    }

    fn advance(&mut self, cmd: &VelocityCommand) -> Option<usize> {
        let out = step(&self.current(), cmd, &self.cfg.harness.limits, self.scene);
        if out.collision {
            Some(self.push(out.state, false))
        } else {
            self.push(out.state, true);
            None
        }
    }

    fn execute(&mut self, cmd: &PolicyCommand) -> Exec {
        let limits = self.cfg.harness.limits;
        for wp in &cmd.waypoints {
            let wp = wp.with_position(self.scene.bounds().clamp(wp.position()));
            for _ in 0..limits.waypoint_step_budget {
                if (wp.position() - self.current().position()).norm() <= limits.reach_tolerance {
                    break;
                }
                let c = waypoint_command(&self.current(), &wp, &limits);
                if let Some(hit) = self.advance(&c) {
                    return Exec::Collided(hit);
                }
            }
        }
        Exec::Done
    }

    /// Descends to touchdown; the contact frame is a landing, not a collision.
    fn land(&mut self, target: &PlacedObject) -> Outcome {
        let limits = self.cfg.harness.limits;
        let cmd = VelocityCommand::world(V3::new(0.0, 0.0, -limits.max_vertical_speed), 0.0);
        let budget = (self.current().pose.z / (limits.max_vertical_speed * limits.dt)).ceil() as usize * 4 + 100;
        for _ in 0..budget {
            let out = step(&self.current(), &cmd, &limits, self.scene);
            self.push(out.state, true);
            if out.collision {
                return if check_success(&out.state.pose, target, self.cfg.harness.success_radius) {
                    Outcome::Success
                } else {
                    Outcome::LandedFar
                };
            }
        }
        Outcome::Timeout
    }
}

/// Runs one episode mixing student and teacher commands, rewinding
/// `backtrack_frames` control frames and handing control to the teacher
/// whenever a command collides.
pub fn collect_with_backtracking(
    scene: &Scene,
    episode: &Episode,
    student: &mut dyn Policy,
    teacher: &mut dyn Policy,
    cfg: &DaggerConfig,
) -> Result<DaggerRollout, CollectionError> {
    let target = PlacedObject { is_target: true, ..episode.target.clone() };
    let scene = scene.with_objects([target.clone()]).map_err(|e| CollectionError::Format(e.to_string()))?;
    let policy_err = |e: crate::episode::PolicyError| CollectionError::Policy(e.to_string());
    student.begin_episode(episode).map_err(policy_err)?;
    teacher.begin_episode(episode).map_err(policy_err)?;
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed ^ crate::policies::stable_hash(&episode.id));
    let mut ro = Rollout { scene: &scene, cfg, log: Vec::new(), path: Vec::new() };
    ro.push(UavState::at_rest(episode.start, 0.0), true);
    let mut events = Vec::new();
    let mut outcome = Outcome::Timeout;

    'decisions: for decision in 0..cfg.harness.max_decisions {
        let obs = build_observation(&scene, &ro.current(), episode, &cfg.assistant, decision, &cfg.harness);
        let use_student = rng.gen_bool(cfg.beta.clamp(0.0, 1.0));
        let (kind, mut cmd) = if use_student {
            (DaggerEventKind::ModelAction, student.act(&obs).map_err(policy_err)?)
        } else {
            (DaggerEventKind::TeacherAction, teacher.act(&obs).map_err(policy_err)?)
        };
        events.push(DaggerEvent { step: decision, kind, collision_index: None, reverted_index: None, reverted_to: None });
        let mut backtracks = 0;
        while let Exec::Collided(hit) = ro.execute(&cmd) {
            backtracks += 1;
            let c = ro.path.len();
            if c < cfg.backtrack_frames {
                return Err(CollectionError::BacktrackImpossible { step: decision });
            }
            if backtracks > cfg.max_consecutive_backtracks {
                outcome = Outcome::Collision;
                break 'decisions;
            }
            let revert = c - cfg.backtrack_frames;
            ro.path.truncate(revert + 1);
            let reverted_index = ro.path[revert];
            events.push(DaggerEvent {
                step: decision,
                kind: DaggerEventKind::CollisionBacktrack,
                collision_index: Some(hit),
                reverted_index: Some(reverted_index),
                reverted_to: Some(ro.log[reverted_index].state),
            });
            let obs = build_observation(&scene, &ro.current(), episode, &cfg.assistant, decision, &cfg.harness);
            cmd = teacher.act(&obs).map_err(policy_err)?;
            events.push(DaggerEvent {
                step: decision,
                kind: DaggerEventKind::TeacherAction,
                collision_index: None,
                reverted_index: None,
                reverted_to: None,
            });
        }
        if cmd.declare_landing {
            outcome = ro.land(&target);
            break 'decisions;
        }
    }

    let states: Vec<UavState> = ro.path.iter().map(|i| ro.log[*i].state).collect();
    let mut record = record_flight(states, cfg.harness.limits.dt, cfg.record_dt, &episode.id, RecordSource::Dagger)?;
    if outcome == Outcome::Collision {
        record.discard("teacher could not recover from a collision");
    }
    Ok(DaggerRollout { record, events, control_log: ro.log, outcome })
}
