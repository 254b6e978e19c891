//! Kinematic 6-DoF flight model.
//!
//! The vehicle is a point mass whose velocity slews toward the commanded
//! velocity under an acceleration bound. Pitch and roll are not integrated;
//! they are prescribed from the horizontal acceleration, the way a multirotor
//! tilts into the direction it accelerates.

use serde::{Deserialize, Serialize};

use crate::geometry::normalize_angle;
use crate::world::Scene;
use crate::{Pose, V3};

pub const GRAVITY: f64 = 9.81;
/// Proportional gain (1/s) of the final waypoint approach.
const APPROACH_GAIN: f64 = 2.0;
/// Granularity of the collision search inside a step, meters.
const COLLISION_RESOLUTION: f64 = 0.01;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct KinematicLimits {
    pub max_horizontal_speed: f64,
    pub max_vertical_speed: f64,
    pub max_yaw_rate: f64,
    pub max_accel: f64,
    pub max_tilt: f64,
    pub collision_radius: f64,
    pub dt: f64,
    pub reach_tolerance: f64,
    /// Control ticks allowed for a single waypoint.
    pub waypoint_step_budget: usize,
}

impl Default for KinematicLimits {
    fn default() -> Self {
        Self {
            max_horizontal_speed: 10.0,
            max_vertical_speed: 5.0,
            max_yaw_rate: 60f64.to_radians(),
            max_accel: 4.0,
            max_tilt: 25f64.to_radians(),
            collision_radius: 1.0,
            dt: 0.1,
            reach_tolerance: 0.5,
            waypoint_step_budget: 600,
        }
    }
}

impl KinematicLimits {
    /// Upper bound on distance covered in one control tick.
    pub fn max_step_length(&self) -> f64 {
        self.max_horizontal_speed.hypot(self.max_vertical_speed) * self.dt
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct UavState {
    pub pose: Pose,
    pub velocity: V3,
    pub yaw_rate: f64,
    pub time: f64,
}

impl UavState {
    /// Hovering at a pose.
    pub fn at_rest(pose: Pose, time: f64) -> Self {
        Self { pose, velocity: V3::zero(), yaw_rate: 0.0, time }
    }

    pub fn position(&self) -> V3 {
        self.pose.position()
    }

    pub fn speed(&self) -> f64 {
        self.velocity.norm()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CommandFrame {
    #[default]
    World,
    /// x forward, y left, z up, rotated by the current heading only.
    Body,
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct VelocityCommand {
    pub velocity: V3,
    pub yaw_rate: f64,
    #[serde(default)]
    pub frame: CommandFrame,
}

impl VelocityCommand {
    pub fn hover() -> Self {
        Self::default()
    }

    pub fn world(velocity: V3, yaw_rate: f64) -> Self {
        Self { velocity, yaw_rate, frame: CommandFrame::World }
    }

    pub fn body(velocity: V3, yaw_rate: f64) -> Self {
        Self { velocity, yaw_rate, frame: CommandFrame::Body }
    }

    pub fn is_finite(&self) -> bool {
        self.velocity.is_finite() && self.yaw_rate.is_finite()
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StepOutcome {
    pub state: UavState,
    pub collision: bool,
}

/// Tilt that produces a horizontal acceleration: nose down to speed up, right wing down to go right.
pub fn attitude_from_accel(ax: f64, ay: f64, yaw: f64, limits: &KinematicLimits) -> (f64, f64) {
    let (s, c) = yaw.sin_cos();
    let forward = ax * c + ay * s;
    let rightward = ax * s - ay * c;
    let tilt = |a: f64| (a / GRAVITY).atan().clamp(-limits.max_tilt, limits.max_tilt);
    (-tilt(forward) + 0.0, tilt(rightward) + 0.0)
}

fn clamp_velocity(v: V3, limits: &KinematicLimits) -> V3 {
    let h = v.horizontal_norm();
    let scale = if h > limits.max_horizontal_speed { limits.max_horizontal_speed / h } else { 1.0 };
    V3::new(
        v.x * scale,
        v.y * scale,
        v.z.clamp(-limits.max_vertical_speed, limits.max_vertical_speed),
    )
}

/// Advances the vehicle by one control tick.
///
/// A collision leaves the vehicle at the last collision-free point of the
/// step (searched at centimeter resolution) with zero velocity.
pub fn step(state: &UavState, cmd: &VelocityCommand, limits: &KinematicLimits, scene: &Scene) -> StepOutcome {
    let dt = limits.dt;
    let requested = match cmd.frame {
        CommandFrame::World => cmd.velocity,
        CommandFrame::Body => {
            let (s, c) = state.pose.yaw.sin_cos();
            let v = cmd.velocity;
            V3::new(v.x * c - v.y * s, v.x * s + v.y * c, v.z)
        }
    };
    let desired = clamp_velocity(requested, limits);
    let dv = desired - state.velocity;
    let max_dv = limits.max_accel * dt;
    let dv = if dv.norm() > max_dv { dv * (max_dv / dv.norm()) } else { dv };
    let velocity = clamp_velocity(state.velocity + dv, limits);
    let applied = velocity - state.velocity;

    let yaw_rate = cmd.yaw_rate.clamp(-limits.max_yaw_rate, limits.max_yaw_rate);
    let yaw = normalize_angle(state.pose.yaw + yaw_rate * dt);
    let (pitch, roll) = attitude_from_accel(applied.x / dt, applied.y / dt, yaw, limits);

    let from = state.position();
    let to = from + velocity * dt;
    let r = limits.collision_radius;
    let mut next = UavState {
        pose: Pose::new(to.x, to.y, to.z, pitch, roll, yaw),
        velocity,
        yaw_rate,
        time: state.time + dt,
    };
    if !scene.collision_check(to, r) {
        return StepOutcome { state: next, collision: false };
    }

    let seg = (to - from).norm();
    let free = if scene.collision_check(from, r) {
        from
    } else {
        let (mut lo, mut hi) = (0.0f64, 1.0f64);
        while (hi - lo) * seg > COLLISION_RESOLUTION {
            let mid = 0.5 * (lo + hi);
            if scene.collision_check(from.lerp(to, mid), r) {
                hi = mid;
            } else {
                lo = mid;
            }
        }
        from.lerp(to, lo)
    };
    next.pose = next.pose.with_position(free);
    next.velocity = V3::zero();
    StepOutcome { state: next, collision: true }
}

#[derive(Debug, Clone, PartialEq)]
pub struct WaypointFlight {
    /// Every control tick, starting with the initial state.
    pub states: Vec<UavState>,
    pub reached: bool,
    pub collision: bool,
}

impl WaypointFlight {
    pub fn last(&self) -> &UavState {
        self.states.last().expect("flight has an initial state")
    }
}

/// Velocity command that brings the vehicle toward a pose without overshooting the stop point.
pub fn waypoint_command(state: &UavState, target: &Pose, limits: &KinematicLimits) -> VelocityCommand {
    let err = target.position() - state.position();
    let d = err.norm();
    // fastest speed that still stops within d under per-tick velocity updates
    let a_dt = limits.max_accel * limits.dt;
    let braking = a_dt * ((0.25 + 2.0 * d / (a_dt * limits.dt)).sqrt() - 0.5);
    let speed = braking.min(APPROACH_GAIN * d);
    let mut v = if d > 0.0 { err * (speed / d) } else { V3::zero() };
    // scale uniformly so the direction survives the per-axis limits
    let h = v.horizontal_norm();
    let mut s = 1.0f64;
    if h > limits.max_horizontal_speed {
        s = s.min(limits.max_horizontal_speed / h);
    }
    if v.z.abs() > limits.max_vertical_speed {
        s = s.min(limits.max_vertical_speed / v.z.abs());
    }
    v = v * s;
    let yaw_err = normalize_angle(target.yaw - state.pose.yaw);
    VelocityCommand::world(v, 2.0 * yaw_err)
}

/// Closed-loop flight to a waypoint; stops on arrival, collision or budget exhaustion.
pub fn fly_to_waypoint(state: &UavState, target: &Pose, limits: &KinematicLimits, scene: &Scene) -> WaypointFlight {
    let mut states = vec![*state];
    let mut current = *state;
    for _ in 0..=limits.waypoint_step_budget {
        if (target.position() - current.position()).norm() <= limits.reach_tolerance {
            return WaypointFlight { states, reached: true, collision: false };
        }
        if states.len() > limits.waypoint_step_budget {
            break;
        }
        let cmd = waypoint_command(&current, target, limits);
        let out = step(&current, &cmd, limits, scene);
        current = out.state;
        states.push(current);
        if out.collision {
            return WaypointFlight { states, reached: false, collision: true };
        }
    }
    WaypointFlight { states, reached: false, collision: false }
}
