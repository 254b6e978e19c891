use std::io;
use std::path::PathBuf;
use std::time::{Duration, Instant};

use uavnh_core::assistant::{AssistLevel, AssistantConfig};
use uavnh_core::collection::dataset::write_episode_dir;
use uavnh_core::collection::{backfill_sensors, record_flight, RecordSource, TrajectoryRecord};
use uavnh_core::episode::{build_observation, check_success, run_episode, Episode, HarnessConfig, Observation, Policy, PolicyCommand, PolicyError};
use uavnh_core::flight::{step, waypoint_command, UavState, VelocityCommand};
use uavnh_core::geometry::path_length;
use uavnh_core::policies::wire::{decode_response, encode_observation};
use uavnh_core::world::{PlacedObject, Scene};
use uavnh_core::{Trajectory, V3};

use super::protocol::{ClientMessage, Control, EventKind, ServerMessage, SessionMode, Transport};
use super::Shared;

const IDLE_WAIT: Duration = Duration::from_secs(3600);

enum Flow {
    Lobby,
    Leave,
}

pub(super) fn run(shared: &Shared, t: &mut dyn Transport, id: &str, mode: SessionMode, level: AssistLevel) -> io::Result<()> {
    let mut saves = 0usize;
    loop {
        let Some(bytes) = t.recv(IDLE_WAIT)? else { continue };
        let msg = match serde_json::from_slice::<ClientMessage>(&bytes) {
            Ok(m) => m,
            Err(e) => {
                t.send(&ServerMessage::error("malformed", e.to_string()).to_bytes())?;
                continue;
            }
        };
        let episode_id = match msg {
            ClientMessage::Start { episode_id } => episode_id,
            ClientMessage::Bye => return Ok(()),
            ClientMessage::Hello { .. } => {
                t.send(&ServerMessage::error("controller_taken", "this connection already controls a session").to_bytes())?;
                continue;
            }
            _ => {
                t.send(&ServerMessage::error("no_episode", "start an episode first").to_bytes())?;
                continue;
            }
        };
        let Some(episode) = shared.data.episodes.get(&episode_id) else {
            t.send(&ServerMessage::error("unknown_episode", format!("no episode {episode_id}")).to_bytes())?;
            continue;
        };
        let Some(scene) = shared.data.scenes.get(&episode.scene_id) else {
            t.send(&ServerMessage::error("unknown_scene", format!("no scene {}", episode.scene_id)).to_bytes())?;
            continue;
        };
        t.send(&ServerMessage::EpisodeStart { episode: Box::new(episode.clone()) }.to_bytes())?;
        let assistant = AssistantConfig::at_level(level);
        let flow = match mode {
            SessionMode::Teleop => {
                let mut tel = Teleop::new(shared, scene, episode, assistant, id, saves);
                let flow = tel.run(t)?;
                saves = tel.saves;
                flow
            }
            SessionMode::Bridge => bridge(shared, t, scene, episode, &assistant)?,
        };
        if let Flow::Leave = flow {
            return Ok(());
        }
    }
}

/// The connected client acts as the policy.
struct ConnPolicy<'a> {
    t: &'a mut dyn Transport,
    timeout: Duration,
    max_waypoints: usize,
    episode_id: String,
    dead: bool,
}

impl Policy for ConnPolicy<'_> {
    fn name(&self) -> String {
        "session".into()
    }

    fn act(&mut self, obs: &Observation) -> Result<PolicyCommand, PolicyError> {
        let req = serde_json::to_vec(&encode_observation(obs, &self.episode_id)).expect("request serializes");
        self.t.send(&req).map_err(|e| PolicyError::Transport(e.to_string()))?;
        let r = match self.t.recv(self.timeout) {
            Ok(Some(bytes)) => decode_response(&bytes, self.max_waypoints),
            Ok(None) => Err(PolicyError::Timeout),
            Err(e) => Err(PolicyError::Transport(e.to_string())),
        };
        if matches!(r, Err(PolicyError::Timeout | PolicyError::Transport(_))) {
            self.dead = true;
        }
        r
    }
}

fn bridge(shared: &Shared, t: &mut dyn Transport, scene: &Scene, episode: &Episode, assistant: &AssistantConfig) -> io::Result<Flow> {
    let cfg = &shared.cfg.harness;
    let mut p =
        ConnPolicy { t, timeout: shared.cfg.bridge_timeout, max_waypoints: cfg.max_waypoints, episode_id: episode.id.clone(), dead: false };
    let result = run_episode(scene, episode, &mut p, assistant, cfg).map_err(|e| io::Error::other(e.to_string()))?;
    let dead = p.dead;
    let sent = t.send(&ServerMessage::Result { result: Box::new(result) }.to_bytes());
    // a late reply would be read as the next message
    if dead {
        return Ok(Flow::Leave);
    }
    sent.map(|_| Flow::Lobby)
}

#[derive(Debug, Clone, Copy, PartialEq)]
enum Mode {
    Velocity(VelocityCommand),
    Position(uavnh_core::Pose),
    Landing,
}

#[derive(Debug, Clone, Copy, PartialEq)]
enum Status {
    Flying,
    Landed,
    Crashed,
}

struct Teleop<'a> {
    shared: &'a Shared,
    scene: Scene,
    episode: &'a Episode,
    assistant: AssistantConfig,
    session: &'a str,
    stream_cfg: HarnessConfig,
    states: Vec<UavState>,
    mode: Mode,
    status: Status,
    arrived: bool,
    gate_open: bool,
    guidance: Option<String>,
    ticks: usize,
    saves: usize,
}

impl<'a> Teleop<'a> {
    fn new(shared: &'a Shared, scene: &Scene, episode: &'a Episode, assistant: AssistantConfig, session: &'a str, saves: usize) -> Self {
        let target = PlacedObject { is_target: true, ..episode.target.clone() };
        let scene = scene.with_objects([target]).unwrap_or_else(|_| scene.clone());
        let mut stream_cfg = shared.cfg.harness;
        stream_cfg.camera = stream_cfg.camera.with_resolution(shared.cfg.teleop_resolution);
        Self {
            shared,
            scene,
            episode,
            assistant,
            session,
            stream_cfg,
            states: vec![UavState::at_rest(episode.start, 0.0)],
            mode: Mode::Velocity(VelocityCommand::hover()),
            status: Status::Flying,
            arrived: true,
            gate_open: false,
            guidance: None,
            ticks: 0,
            saves,
        }
    }

    fn current(&self) -> UavState {
        *self.states.last().expect("states start non-empty")
    }

    fn event(&self, t: &mut dyn Transport, event: EventKind, text: Option<String>) -> io::Result<()> {
        t.send(&ServerMessage::Event { event, time: self.current().time, text }.to_bytes())
    }

    fn run(&mut self, t: &mut dyn Transport) -> io::Result<Flow> {
        let tick = self.shared.cfg.tick_interval();
        self.send_obs(t)?;
        loop {
            let deadline = Instant::now() + tick;
            loop {
                let left = deadline.saturating_duration_since(Instant::now());
                let Some(bytes) = t.recv(left)? else { break };
                if let Some(flow) = self.handle(t, &bytes)? {
                    return Ok(flow);
                }
                if left.is_zero() {
                    break;
                }
            }
            self.advance(t)?;
            self.send_obs(t)?;
        }
    }

    fn handle(&mut self, t: &mut dyn Transport, bytes: &[u8]) -> io::Result<Option<Flow>> {
        let msg = match serde_json::from_slice::<ClientMessage>(bytes) {
            Ok(m) => m,
            Err(e) => {
                t.send(&ServerMessage::error("malformed", e.to_string()).to_bytes())?;
                return Ok(None);
            }
        };
        match msg {
            ClientMessage::Control(c) => self.control(t, c)?,
            ClientMessage::Save => {
                if self.status == Status::Crashed {
                    t.send(&ServerMessage::error("discarded", "recording was discarded after a collision").to_bytes())?;
                } else if !self.gate_open {
                    let msg = format!("saving unlocks within {} m of the target", self.shared.cfg.save_radius);
                    t.send(&ServerMessage::error("save_gated", msg).to_bytes())?;
                } else {
                    let (path, record) = self.persist(None)?;
                    let poses = record.states.iter().map(|s| s.pose);
                    let len = path_length(&Trajectory::from_poses(0.0, record.record_dt, poses));
                    let msg = ServerMessage::Saved { path: path.display().to_string(), states: record.states.len(), path_length: len };
                    t.send(&msg.to_bytes())?;
                    return Ok(Some(Flow::Lobby));
                }
            }
            ClientMessage::Discard => {
                self.event(t, EventKind::Discarded, Some("discarded by operator".into()))?;
                return Ok(Some(Flow::Lobby));
            }
            ClientMessage::Bye => return Ok(Some(Flow::Leave)),
            ClientMessage::Start { .. } => t.send(&ServerMessage::error("episode_in_progress", "save or discard first").to_bytes())?,
            ClientMessage::Hello { .. } => {
                t.send(&ServerMessage::error("controller_taken", "this connection already controls a session").to_bytes())?
            }
        }
        Ok(None)
    }

    fn control(&mut self, t: &mut dyn Transport, c: Control) -> io::Result<()> {
        if self.status != Status::Flying {
            return t.send(&ServerMessage::error("not_flying", "the vehicle is no longer flying").to_bytes());
        }
        match c {
            Control::Manual { command } if command.is_finite() => self.mode = Mode::Velocity(command),
            Control::Position { target } if target.is_finite() && self.scene.bounds().contains(target.position()) => {
                self.mode = Mode::Position(target);
                self.arrived = false;
            }
            Control::Land => self.mode = Mode::Landing,
            Control::Manual { .. } => return t.send(&ServerMessage::error("invalid_command", "non-finite velocity").to_bytes()),
            Control::Position { .. } => {
                return t.send(&ServerMessage::error("out_of_bounds", "target lies outside the scene").to_bytes())
            }
        }
        Ok(())
    }

    fn advance(&mut self, t: &mut dyn Transport) -> io::Result<()> {
        if self.status != Status::Flying {
            return Ok(());
        }
        let limits = self.shared.cfg.harness.limits;
        for _ in 0..self.shared.cfg.steps_per_tick() {
            let cur = self.current();
            let cmd = match self.mode {
                Mode::Velocity(c) => c,
                Mode::Position(p) => waypoint_command(&cur, &p, &limits),
                Mode::Landing => VelocityCommand::world(V3::new(0.0, 0.0, -limits.max_vertical_speed), 0.0),
            };
            let out = step(&cur, &cmd, &limits, &self.scene);
            self.states.push(out.state);
            if out.collision {
                if self.mode == Mode::Landing {
                    self.status = Status::Landed;
                    let ok = check_success(&out.state.pose, &self.episode.target, self.shared.cfg.harness.success_radius);
                    self.event(t, EventKind::Landed, Some(if ok { "success" } else { "landed_far" }.into()))?;
                } else {
                    self.status = Status::Crashed;
                    // the colliding state is not part of the recording
                    self.states.pop();
                    self.event(t, EventKind::Collision, None)?;
                    let (path, _) = self.persist(Some("collision"))?;
                    self.event(t, EventKind::Discarded, Some(path.display().to_string()))?;
                }
                break;
            }
            if let Mode::Position(p) = self.mode {
                if !self.arrived && (p.position() - out.state.position()).norm() <= limits.reach_tolerance {
                    self.arrived = true;
                    self.event(t, EventKind::Arrived, None)?;
                }
            }
            if !self.gate_open && (self.episode.target.position - out.state.position()).norm() <= self.shared.cfg.save_radius {
                self.gate_open = true;
                self.event(t, EventKind::NearTarget, None)?;
            }
        }
        Ok(())
    }

    fn send_obs(&mut self, t: &mut dyn Transport) -> io::Result<()> {
        let obs = build_observation(&self.scene, &self.current(), self.episode, &self.assistant, self.ticks, &self.stream_cfg);
        self.ticks += 1;
        if obs.assistant_text != self.guidance {
            self.guidance = obs.assistant_text.clone();
            if self.guidance.is_some() {
                self.event(t, EventKind::Guidance, self.guidance.clone())?;
            }
        }
        let mut req = encode_observation(&obs, &self.episode.id);
        req.downsampled = true;
        t.send(&ServerMessage::Obs { obs: Box::new(req) }.to_bytes())
    }

    /// Records at `record_dt`, backfills full-resolution frames and writes the
    /// episode directory.
    fn persist(&mut self, discard: Option<&str>) -> io::Result<(PathBuf, TrajectoryRecord)> {
        let cfg = &self.shared.cfg;
        let dt = cfg.harness.limits.dt;
        let mut record = record_flight(self.states.clone(), dt, cfg.record_dt, &self.episode.id, RecordSource::Human)
            .map_err(|e| io::Error::other(e.to_string()))?;
        record = backfill_sensors(&record, &self.scene, &cfg.harness.camera);
        let mut dir = cfg.output_dir.clone();
        if let Some(reason) = discard {
            record.discard(reason);
            dir.push("discarded");
        }
        self.saves += 1;
        dir.push(format!("{}-{}-{}", self.episode.id, self.session, self.saves));
        write_episode_dir(&dir, self.episode, &record, &[]).map_err(|e| io::Error::other(e.to_string()))?;
        Ok((dir, record))
    }
}
