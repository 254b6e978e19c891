//! Trajectory recording, backtracking data aggregation, descriptions and splits.

mod dagger;
pub mod dataset;
mod description;
mod record;
mod split;

use thiserror::Error;

pub use dagger::{collect_with_backtracking, DaggerConfig, DaggerEvent, DaggerEventKind, DaggerRollout, LoggedFrame};
pub use description::{compass_sector, generate_description, NEIGHBOR_RADIUS};
pub use record::{backfill_sensors, record_flight, RecordSource, TimedFrame, TrajectoryRecord};
pub use split::{split_dataset, DatasetSplits, SplitName};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum CollectionError {
    #[error("record interval {record_dt} is not a multiple of the control interval {control_dt}")]
    NotMultiple { record_dt: f64, control_dt: f64 },
    #[error("state stream interval is irregular at index {index}")]
    Jitter { index: usize },
    #[error("collision at decision {step} cannot be backtracked")]
    BacktrackImpossible { step: usize },
    #[error("split {0} is empty")]
    EmptySplit(String),
    #[error("{0:?} is held out both as a scene and as a category")]
    OverlappingHoldouts(String),
    #[error("policy failed: {0}")]
    Policy(String),
    #[error("i/o error: {0}")]
    Io(String),
    #[error("malformed data: {0}")]
    Format(String),
}
