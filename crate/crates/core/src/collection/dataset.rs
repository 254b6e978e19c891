//! On-disk dataset layout.
//!
//! ```text
//! <episode dir>/
//!   episode.json        the Episode
//!   record.json         record metadata (source, record_dt, discard flag)
//!   trajectory.jsonl    one UavState per line
//!   events.jsonl        one DaggerEvent per line
//!   frames/NNNNN_<view>_depth.bin
//!   frames/NNNNN_<view>_semantic.bin
//! ```
//!
//! A frame file is the 4 magic bytes `UVNF`, a little-endian `u32` header
//! length, a JSON header `{view, w, h, fov, dtype, time, max_range}` and the
//! row-major little-endian payload (`f32` depth or `u16` labels).

use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::dagger::DaggerEvent;
use super::record::{RecordSource, TimedFrame, TrajectoryRecord};
use super::CollectionError;
use crate::episode::Episode;
use crate::flight::UavState;
use crate::world::{DepthImage, SemanticImage, SensorFrame, View};

const MAGIC: &[u8; 4] = b"UVNF";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FrameHeader {
    pub view: View,
    pub w: usize,
    pub h: usize,
    pub fov: f64,
    pub dtype: String,
    pub time: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub max_range: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
struct RecordMeta {
    episode_id: String,
    record_dt: f64,
    source: RecordSource,
    discarded: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    discard_reason: Option<String>,
}

fn io(e: std::io::Error) -> CollectionError {
    CollectionError::Io(e.to_string())
}

fn format_err(e: impl std::fmt::Display) -> CollectionError {
    CollectionError::Format(e.to_string())
}

fn encode(header: &FrameHeader, payload: Vec<u8>) -> Vec<u8> {
    let h = serde_json::to_vec(header).expect("header serializes");
    let mut out = Vec::with_capacity(8 + h.len() + payload.len());
    out.extend_from_slice(MAGIC);
    out.extend_from_slice(&(h.len() as u32).to_le_bytes());
    out.extend_from_slice(&h);
    out.extend_from_slice(&payload);
    out
}

pub fn encode_depth_file(img: &DepthImage, time: f64) -> Vec<u8> {
    let header = FrameHeader {
        view: img.view,
        w: img.width,
        h: img.height,
        fov: img.fov,
        dtype: "f32le".into(),
        time,
        max_range: Some(img.max_range),
    };
    encode(&header, img.values.iter().flat_map(|v| v.to_le_bytes()).collect())
}

pub fn encode_semantic_file(img: &SemanticImage, time: f64) -> Vec<u8> {
    let header = FrameHeader { view: img.view, w: img.width, h: img.height, fov: img.fov, dtype: "u16le".into(), time, max_range: None };
    encode(&header, img.labels.iter().flat_map(|v| v.to_le_bytes()).collect())
}

fn split_file(bytes: &[u8]) -> Result<(FrameHeader, &[u8]), CollectionError> {
    if bytes.len() < 8 || &bytes[..4] != MAGIC {
        return Err(format_err("not a frame file"));
    }
    let hl = u32::from_le_bytes([bytes[4], bytes[5], bytes[6], bytes[7]]) as usize;
    let body = bytes.get(8..8 + hl).ok_or_else(|| format_err("truncated header"))?;
    let header: FrameHeader = serde_json::from_slice(body).map_err(format_err)?;
    Ok((header, &bytes[8 + hl..]))
}

pub fn decode_depth_file(bytes: &[u8]) -> Result<(DepthImage, f64), CollectionError> {
    let (h, payload) = split_file(bytes)?;
    if h.dtype != "f32le" || payload.len() != h.w * h.h * 4 {
        return Err(format_err("depth payload does not match header"));
    }
    let values = payload.chunks_exact(4).map(|c| f32::from_le_bytes([c[0], c[1], c[2], c[3]])).collect();
    let img = DepthImage { view: h.view, width: h.w, height: h.h, fov: h.fov, max_range: h.max_range.unwrap_or(f64::INFINITY), values };
    Ok((img, h.time))
}

pub fn decode_semantic_file(bytes: &[u8]) -> Result<(SemanticImage, f64), CollectionError> {
    let (h, payload) = split_file(bytes)?;
    if h.dtype != "u16le" || payload.len() != h.w * h.h * 2 {
        return Err(format_err("semantic payload does not match header"));
    }
    let labels = payload.chunks_exact(2).map(|c| u16::from_le_bytes([c[0], c[1]])).collect();
    Ok((SemanticImage { view: h.view, width: h.w, height: h.h, fov: h.fov, labels }, h.time))
}

fn jsonl<T: Serialize>(items: &[T]) -> String {
    items.iter().map(|i| serde_json::to_string(i).expect("serializes") + "\n").collect()
}

fn parse_jsonl<T: for<'de> Deserialize<'de>>(text: &str) -> Result<Vec<T>, CollectionError> {
    text.lines().filter(|l| !l.trim().is_empty()).map(|l| serde_json::from_str(l).map_err(format_err)).collect()
}

/// Writes one episode directory, replacing files already there.
pub fn write_episode_dir(dir: &Path, episode: &Episode, record: &TrajectoryRecord, events: &[DaggerEvent]) -> Result<(), CollectionError> {
    let frames = dir.join("frames");
    fs::create_dir_all(&frames).map_err(io)?;
    fs::write(dir.join("episode.json"), serde_json::to_string_pretty(episode).map_err(format_err)?).map_err(io)?;
    let meta = RecordMeta {
        episode_id: record.episode_id.clone(),
        record_dt: record.record_dt,
        source: record.source,
        discarded: record.discarded,
        discard_reason: record.discard_reason.clone(),
    };
    fs::write(dir.join("record.json"), serde_json::to_string_pretty(&meta).map_err(format_err)?).map_err(io)?;
    fs::write(dir.join("trajectory.jsonl"), jsonl(&record.states)).map_err(io)?;
    fs::write(dir.join("events.jsonl"), jsonl(events)).map_err(io)?;
    for (i, tf) in record.sensor_frames.iter().enumerate() {
        for d in &tf.frame.depth {
            fs::write(frames.join(format!("{i:05}_{}_depth.bin", d.view.name())), encode_depth_file(d, tf.time)).map_err(io)?;
        }
        for s in &tf.frame.semantic {
            fs::write(frames.join(format!("{i:05}_{}_semantic.bin", s.view.name())), encode_semantic_file(s, tf.time)).map_err(io)?;
        }
    }
    Ok(())
}

#[derive(Debug, Clone, PartialEq)]
pub struct StoredEpisode {
    pub episode: Episode,
    pub record: TrajectoryRecord,
    pub events: Vec<DaggerEvent>,
}

pub fn read_episode_dir(dir: &Path) -> Result<StoredEpisode, CollectionError> {
    let read = |name: &str| fs::read_to_string(dir.join(name)).map_err(io);
    let episode: Episode = serde_json::from_str(&read("episode.json")?).map_err(format_err)?;
    let meta: RecordMeta = serde_json::from_str(&read("record.json")?).map_err(format_err)?;
    let states: Vec<UavState> = parse_jsonl(&read("trajectory.jsonl")?)?;
    let events: Vec<DaggerEvent> = parse_jsonl(&read("events.jsonl")?)?;

    let mut sensor_frames = Vec::new();
    let frames = dir.join("frames");
    for i in 0.. {
        let first = frames.join(format!("{i:05}_{}_depth.bin", View::ALL[0].name()));
        if !first.exists() {
            break;
        }
        let mut depth = Vec::new();
        let mut semantic = Vec::new();
        let mut time = 0.0;
        for v in View::ALL {
            let (d, t) = decode_depth_file(&fs::read(frames.join(format!("{i:05}_{}_depth.bin", v.name()))).map_err(io)?)?;
            let (s, _) = decode_semantic_file(&fs::read(frames.join(format!("{i:05}_{}_semantic.bin", v.name()))).map_err(io)?)?;
            time = t;
            depth.push(d);
            semantic.push(s);
        }
        sensor_frames.push(TimedFrame { time, frame: SensorFrame { depth, semantic } });
    }
    let record = TrajectoryRecord {
        episode_id: meta.episode_id,
        record_dt: meta.record_dt,
        states,
        sensor_frames,
        source: meta.source,
        discarded: meta.discarded,
        discard_reason: meta.discard_reason,
    };
    Ok(StoredEpisode { episode, record, events })
}
