use serde::{Deserialize, Serialize};

use super::CollectionError;
use crate::flight::UavState;
use crate::world::{render_frame, CameraConfig, Scene, SensorFrame};

const TIME_TOLERANCE: f64 = 1e-6;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RecordSource {
    Human,
    Teacher,
    Dagger,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TimedFrame {
    pub time: f64,
    pub frame: SensorFrame,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrajectoryRecord {
    pub episode_id: String,
    pub record_dt: f64,
    pub states: Vec<UavState>,
    #[serde(default, skip_serializing)]
    pub sensor_frames: Vec<TimedFrame>,
    pub source: RecordSource,
    pub discarded: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub discard_reason: Option<String>,
}

impl TrajectoryRecord {
    pub fn discard(&mut self, reason: impl Into<String>) {
        self.discarded = true;
        self.discard_reason = Some(reason.into());
    }
}

/// Keeps every `record_dt / control_dt`-th state of a control-rate stream.
///
/// The stream is consumed as it arrives; nothing here renders or blocks.
pub fn record_flight(
    stream: impl IntoIterator<Item = UavState>,
    control_dt: f64,
    record_dt: f64,
    episode_id: &str,
    source: RecordSource,
) -> Result<TrajectoryRecord, CollectionError> {
    let ratio = record_dt / control_dt;
    let stride = ratio.round();
    if stride < 1.0 || (ratio - stride).abs() > 1e-9 {
        return Err(CollectionError::NotMultiple { record_dt, control_dt });
    }
    let stride = stride as usize;
    let mut states = Vec::new();
    let mut prev: Option<f64> = None;
    for (i, s) in stream.into_iter().enumerate() {
        if let Some(p) = prev {
            if ((s.time - p) - control_dt).abs() > TIME_TOLERANCE {
                return Err(CollectionError::Jitter { index: i });
            }
        }
        prev = Some(s.time);
        if i % stride == 0 {
            states.push(s);
        }
    }
    Ok(TrajectoryRecord {
        episode_id: episode_id.to_string(),
        record_dt,
        states,
        sensor_frames: Vec::new(),
        source,
        discarded: false,
        discard_reason: None,
    })
}

/// Renders every recorded state after the fact. Rendering is a pure function
/// of scene and pose, so the frames equal what a live renderer would produce.
pub fn backfill_sensors(record: &TrajectoryRecord, scene: &Scene, cam: &CameraConfig) -> TrajectoryRecord {
    let sensor_frames = record
        .states
        .iter()
        .map(|s| TimedFrame { time: s.time, frame: render_frame(scene, &s.pose, cam) })
        .collect();
    TrajectoryRecord { sensor_frames, ..record.clone() }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::Pose;

    fn stream(n: usize, dt: f64) -> Vec<UavState> {
        let mut t = 0.0;
        (0..n)
            .map(|i| {
                let s = UavState::at_rest(Pose::at(i as f64, 0.0, 10.0, 0.0), t);
                t += dt;
                s
            })
            .collect()
    }

    #[test]
    fn ten_seconds_at_half_second() {
        let r = record_flight(stream(101, 0.1), 0.1, 0.5, "e", RecordSource::Teacher).unwrap();
        assert_eq!(r.states.len(), 21);
        assert!(r.sensor_frames.is_empty());
        for w in r.states.windows(2) {
            assert!((w[1].time - w[0].time - 0.5).abs() < 1e-6);
        }
    }

    #[test]
    fn record_dt_equal_to_control_dt_keeps_everything() {
        let s = stream(37, 0.1);
        let r = record_flight(s.clone(), 0.1, 0.1, "e", RecordSource::Human).unwrap();
        assert_eq!(r.states, s);
    }

    #[test]
    fn rejects_jitter_and_bad_ratio() {
        let mut s = stream(20, 0.1);
        s[7].time += 0.03;
        assert_eq!(record_flight(s, 0.1, 0.5, "e", RecordSource::Human), Err(CollectionError::Jitter { index: 7 }));
        assert!(matches!(record_flight(stream(5, 0.1), 0.1, 0.25, "e", RecordSource::Human), Err(CollectionError::NotMultiple { .. })));
    }

    #[test]
    fn empty_record_backfills_to_nothing() {
        let r = record_flight(Vec::new(), 0.1, 0.5, "e", RecordSource::Human).unwrap();
        let scene = Scene::open_ground("s", crate::world::Aabb::new(crate::V3::zero(), crate::V3::new(10.0, 10.0, 10.0)));
        assert!(backfill_sensors(&r, &scene, &CameraConfig::default()).sensor_frames.is_empty());
    }
}
