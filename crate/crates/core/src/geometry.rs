//! Pose algebra and trajectory geometry.
//!
//! World frame is right-handed with z up. Yaw is measured counter-clockwise
//! from +x, so a positive yaw offset means the target lies to the left.
//! Pitch is positive nose-up and roll is positive right-wing-down.

use std::ops::{Add, Mul, Neg, Sub};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::num::Real;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum GeometryError {
    #[error("trajectory is empty")]
    EmptyTrajectory,
    #[error("trajectory timestamps not strictly increasing at index {0}")]
    NonMonotoneTimestamps(usize),
    #[error("non-finite pose component")]
    NonFinite,
}

/// Wraps an angle into `(-pi, pi]`.
pub fn normalize_angle<T: Real>(angle: T) -> T {
    let pi = T::PI();
    let two_pi = pi + pi;
    let mut r = angle % two_pi;
    if r > pi {
        r = r - two_pi;
    } else if r <= -pi {
        r = r + two_pi;
    }
    // rounding at the lower boundary
    if r <= -pi {
        r = pi;
    }
    r
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct Vec3<T> {
    pub x: T,
    pub y: T,
    pub z: T,
}

impl<T: Real> Vec3<T> {
    pub fn new(x: T, y: T, z: T) -> Self {
        Self { x, y, z }
    }

    pub fn zero() -> Self {
        Self::new(T::zero(), T::zero(), T::zero())
    }

    pub fn dot(self, other: Self) -> T {
        self.x * other.x + self.y * other.y + self.z * other.z
    }

    pub fn cross(self, o: Self) -> Self {
        Self::new(
            self.y * o.z - self.z * o.y,
            self.z * o.x - self.x * o.z,
            self.x * o.y - self.y * o.x,
        )
    }

    pub fn norm(self) -> T {
        self.dot(self).sqrt()
    }

    pub fn horizontal_norm(self) -> T {
        self.x.hypot(self.y)
    }

    /// Unit vector in the same direction; the zero vector stays zero.
    pub fn normalized(self) -> Self {
        let n = self.norm();
        if n > T::zero() {
            self * (T::one() / n)
        } else {
            self
        }
    }

    pub fn is_finite(self) -> bool {
        self.x.is_finite() && self.y.is_finite() && self.z.is_finite()
    }

    pub fn lerp(self, other: Self, t: T) -> Self {
        self + (other - self) * t
    }

    pub fn to_array(self) -> [T; 3] {
        [self.x, self.y, self.z]
    }
}

impl<T: Real> Add for Vec3<T> {
    type Output = Self;
    fn add(self, o: Self) -> Self {
        Self::new(self.x + o.x, self.y + o.y, self.z + o.z)
    }
}

impl<T: Real> Sub for Vec3<T> {
    type Output = Self;
    fn sub(self, o: Self) -> Self {
        Self::new(self.x - o.x, self.y - o.y, self.z - o.z)
    }
}

impl<T: Real> Mul<T> for Vec3<T> {
    type Output = Self;
    fn mul(self, s: T) -> Self {
        Self::new(self.x * s, self.y * s, self.z * s)
    }
}

impl<T: Real> Neg for Vec3<T> {
    type Output = Self;
    fn neg(self) -> Self {
        Self::new(-self.x, -self.y, -self.z)
    }
}

/// 6-DoF pose: position in meters and attitude in radians.
///
/// Angles are kept in `(-pi, pi]`; every constructor normalizes them.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct Pose<T> {
    pub x: T,
    pub y: T,
    pub z: T,
    pub pitch: T,
    pub roll: T,
    pub yaw: T,
}

impl<T: Real> Pose<T> {
    pub fn new(x: T, y: T, z: T, pitch: T, roll: T, yaw: T) -> Self {
        Self {
            x,
            y,
            z,
            pitch: normalize_angle(pitch),
            roll: normalize_angle(roll),
            yaw: normalize_angle(yaw),
        }
    }

    /// Like [`Pose::new`] but rejects NaN or infinite components.
    pub fn try_new(x: T, y: T, z: T, pitch: T, roll: T, yaw: T) -> Result<Self, GeometryError> {
        let all = [x, y, z, pitch, roll, yaw];
        if all.iter().any(|v| !v.is_finite()) {
            return Err(GeometryError::NonFinite);
        }
        Ok(Self::new(x, y, z, pitch, roll, yaw))
    }

    /// Level pose at a position with the given heading.
    pub fn at(x: T, y: T, z: T, yaw: T) -> Self {
        Self::new(x, y, z, T::zero(), T::zero(), yaw)
    }

    pub fn from_position(p: Vec3<T>, yaw: T) -> Self {
        Self::at(p.x, p.y, p.z, yaw)
    }

    pub fn position(&self) -> Vec3<T> {
        Vec3::new(self.x, self.y, self.z)
    }

    pub fn is_finite(&self) -> bool {
        [self.x, self.y, self.z, self.pitch, self.roll, self.yaw]
            .iter()
            .all(|v| v.is_finite())
    }

    /// Same attitude, new position.
    pub fn with_position(&self, p: Vec3<T>) -> Self {
        Self { x: p.x, y: p.y, z: p.z, ..*self }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TrajectoryPoint<T> {
    pub t: T,
    pub pose: Pose<T>,
}

/// Time-stamped pose sequence with strictly increasing timestamps.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<TrajectoryPoint<T>>", into = "Vec<TrajectoryPoint<T>>")]
#[serde(bound(
    serialize = "T: Real + Serialize",
    deserialize = "T: Real + Deserialize<'de>"
))]
pub struct Trajectory<T> {
    points: Vec<TrajectoryPoint<T>>,
}

impl<T: Real> Default for Trajectory<T> {
    fn default() -> Self {
        Self { points: Vec::new() }
    }
}

impl<T: Real> Trajectory<T> {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn from_points(points: Vec<TrajectoryPoint<T>>) -> Result<Self, GeometryError> {
        for (i, w) in points.windows(2).enumerate() {
            if !(w[1].t > w[0].t) {
                return Err(GeometryError::NonMonotoneTimestamps(i + 1));
            }
        }
        Ok(Self { points })
    }

    /// Samples poses at a fixed interval starting at `t0`.
    pub fn from_poses(t0: T, dt: T, poses: impl IntoIterator<Item = Pose<T>>) -> Self {
        let points = poses
            .into_iter()
            .enumerate()
            .map(|(i, pose)| TrajectoryPoint { t: t0 + dt * T::from_usize(i).unwrap(), pose })
            .collect();
        Self { points }
    }

    pub fn push(&mut self, t: T, pose: Pose<T>) -> Result<(), GeometryError> {
        if let Some(last) = self.points.last() {
            if !(t > last.t) {
                return Err(GeometryError::NonMonotoneTimestamps(self.points.len()));
            }
        }
        self.points.push(TrajectoryPoint { t, pose });
        Ok(())
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn points(&self) -> &[TrajectoryPoint<T>] {
        &self.points
    }

    pub fn poses(&self) -> impl Iterator<Item = &Pose<T>> + '_ {
        self.points.iter().map(|p| &p.pose)
    }

    pub fn pose(&self, index: usize) -> &Pose<T> {
        &self.points[index].pose
    }

    pub fn first(&self) -> Option<&Pose<T>> {
        self.points.first().map(|p| &p.pose)
    }

    pub fn last(&self) -> Option<&Pose<T>> {
        self.points.last().map(|p| &p.pose)
    }
}

impl<T: Real> TryFrom<Vec<TrajectoryPoint<T>>> for Trajectory<T> {
    type Error = GeometryError;
    fn try_from(points: Vec<TrajectoryPoint<T>>) -> Result<Self, Self::Error> {
        Self::from_points(points)
    }
}

impl<T: Real> From<Trajectory<T>> for Vec<TrajectoryPoint<T>> {
    fn from(t: Trajectory<T>) -> Self {
        t.points
    }
}

/// Euclidean distance between the positions of two poses.
pub fn distance<T: Real>(a: &Pose<T>, b: &Pose<T>) -> T {
    (a.position() - b.position()).norm()
}

/// Index of the trajectory sample closest to `p`; ties go to the lowest index.
pub fn nearest_gt_point<T: Real>(traj: &Trajectory<T>, p: &Pose<T>) -> Result<(usize, T), GeometryError> {
    let mut best: Option<(usize, T)> = None;
    for (i, pt) in traj.points.iter().enumerate() {
        let d = distance(&pt.pose, p);
        match best {
            Some((_, bd)) if !(d < bd) => {}
            _ => best = Some((i, d)),
        }
    }
    best.ok_or(GeometryError::EmptyTrajectory)
}

/// Sum of segment lengths; zero for a single point or an empty trajectory.
pub fn path_length<T: Real>(traj: &Trajectory<T>) -> T {
    traj.points
        .windows(2)
        .fold(T::zero(), |acc, w| acc + distance(&w[0].pose, &w[1].pose))
}

/// Position of a target relative to a vehicle heading.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Bearing<T> {
    /// Signed smallest angle from the heading to the target, positive to the left.
    pub yaw_offset: T,
    /// Target altitude minus vehicle altitude.
    pub vertical_offset: T,
    pub horizontal_dist: T,
}

pub fn relative_bearing<T: Real>(from: &Pose<T>, to_point: Vec3<T>) -> Bearing<T> {
    let dx = to_point.x - from.x;
    let dy = to_point.y - from.y;
    let horizontal_dist = dx.hypot(dy);
    let yaw_offset = if horizontal_dist > T::zero() {
        normalize_angle(dy.atan2(dx) - from.yaw)
    } else {
        T::zero()
    };
    Bearing { yaw_offset, vertical_offset: to_point.z - from.z, horizontal_dist }
}
