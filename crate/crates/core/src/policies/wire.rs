//! Versioned bridge documents and length-prefixed framing.
//!
//! A frame is a 4-byte big-endian payload length followed by a UTF-8 JSON
//! document. Depth grids travel as little-endian `f32`, semantic grids as
//! little-endian `u16` class ids, both row-major and base64 encoded.

use std::io::{self, Read, Write};

use base64::engine::general_purpose::STANDARD;
use base64::Engine;
use serde::{Deserialize, Serialize};

use crate::episode::{Observation, PolicyCommand, PolicyError};
use crate::world::{DepthImage, SemanticImage, SensorFrame, View};
use crate::{Pose, V3};

pub const WIRE_VERSION: u32 = 1;
/// Frames larger than this are refused before allocation.
pub const MAX_FRAME_BYTES: usize = 64 << 20;
pub const DEPTH_DTYPE: &str = "f32le";
pub const SEMANTIC_DTYPE: &str = "u16le";

pub fn write_frame<W: Write>(w: &mut W, payload: &[u8]) -> io::Result<()> {
    let len = u32::try_from(payload.len()).map_err(|_| io::Error::new(io::ErrorKind::InvalidInput, "frame too large"))?;
    w.write_all(&len.to_be_bytes())?;
    w.write_all(payload)?;
    w.flush()
}

pub fn read_frame<R: Read>(r: &mut R) -> io::Result<Vec<u8>> {
    let mut len = [0u8; 4];
    r.read_exact(&mut len)?;
    let len = u32::from_be_bytes(len) as usize;
    if len > MAX_FRAME_BYTES {
        return Err(io::Error::new(io::ErrorKind::InvalidData, format!("frame of {len} bytes exceeds limit")));
    }
    let mut buf = vec![0u8; len];
    r.read_exact(&mut buf)?;
    Ok(buf)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WireState {
    pub pose: Pose,
    pub velocity: V3,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WireImage {
    pub view: View,
    pub w: usize,
    pub h: usize,
    pub fov: f64,
    pub dtype: String,
    pub data_b64: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WireRequest {
    pub v: u32,
    pub episode_id: String,
    pub step: usize,
    pub state: WireState,
    pub task_text: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub assistant_text: Option<String>,
    pub depth: Vec<WireImage>,
    pub semantic: Vec<WireImage>,
    /// Set when the grids were reduced for streaming.
    #[serde(default, skip_serializing_if = "std::ops::Not::not")]
    pub downsampled: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WireResponse {
    pub v: u32,
    pub waypoints: Vec<Pose>,
    pub declare_landing: bool,
}

pub fn encode_depth(img: &DepthImage) -> WireImage {
    let bytes: Vec<u8> = img.values.iter().flat_map(|v| v.to_le_bytes()).collect();
    WireImage { view: img.view, w: img.width, h: img.height, fov: img.fov, dtype: DEPTH_DTYPE.into(), data_b64: STANDARD.encode(bytes) }
}

pub fn encode_semantic(img: &SemanticImage) -> WireImage {
    let bytes: Vec<u8> = img.labels.iter().flat_map(|v| v.to_le_bytes()).collect();
    WireImage { view: img.view, w: img.width, h: img.height, fov: img.fov, dtype: SEMANTIC_DTYPE.into(), data_b64: STANDARD.encode(bytes) }
}

fn payload(img: &WireImage, dtype: &str, width: usize) -> Result<Vec<u8>, PolicyError> {
    if img.dtype != dtype {
        return Err(PolicyError::Malformed(format!("expected dtype {dtype}, got {}", img.dtype)));
    }
    let bytes = STANDARD.decode(&img.data_b64).map_err(|e| PolicyError::Malformed(e.to_string()))?;
    if bytes.len() != img.w * img.h * width {
        return Err(PolicyError::Malformed(format!("{} view carries {} bytes for {}x{}", img.view.name(), bytes.len(), img.w, img.h)));
    }
    Ok(bytes)
}

pub fn decode_depth(img: &WireImage, max_range: f64) -> Result<DepthImage, PolicyError> {
    let bytes = payload(img, DEPTH_DTYPE, 4)?;
    let values = bytes.chunks_exact(4).map(|c| f32::from_le_bytes([c[0], c[1], c[2], c[3]])).collect();
    Ok(DepthImage { view: img.view, width: img.w, height: img.h, fov: img.fov, max_range, values })
}

pub fn decode_semantic(img: &WireImage) -> Result<SemanticImage, PolicyError> {
    let bytes = payload(img, SEMANTIC_DTYPE, 2)?;
    let labels = bytes.chunks_exact(2).map(|c| u16::from_le_bytes([c[0], c[1]])).collect();
    Ok(SemanticImage { view: img.view, width: img.w, height: img.h, fov: img.fov, labels })
}

pub fn encode_observation(obs: &Observation, episode_id: &str) -> WireRequest {
    WireRequest {
        v: WIRE_VERSION,
        episode_id: episode_id.to_string(),
        step: obs.step_index,
        state: WireState { pose: obs.state.pose, velocity: obs.state.velocity },
        task_text: obs.task_text.clone(),
        assistant_text: obs.assistant_text.clone(),
        depth: obs.frame.depth.iter().map(encode_depth).collect(),
        semantic: obs.frame.semantic.iter().map(encode_semantic).collect(),
        downsampled: false,
    }
}

/// Rebuilds the sensor frame carried by a request.
pub fn decode_frame(req: &WireRequest, max_range: f64) -> Result<SensorFrame, PolicyError> {
    let depth = req.depth.iter().map(|d| decode_depth(d, max_range)).collect::<Result<Vec<_>, _>>()?;
    let semantic = req.semantic.iter().map(decode_semantic).collect::<Result<Vec<_>, _>>()?;
    let frame = SensorFrame { depth, semantic };
    if !frame.is_complete() {
        return Err(PolicyError::Malformed("request does not carry all five views".into()));
    }
    Ok(frame)
}

fn version_of(doc: &serde_json::Value) -> Result<u32, PolicyError> {
    doc.get("v")
        .and_then(|v| v.as_u64())
        .map(|v| v as u32)
        .ok_or_else(|| PolicyError::Malformed("missing version field".into()))
}

/// Parses and validates a policy response document.
pub fn decode_response(bytes: &[u8], max_waypoints: usize) -> Result<PolicyCommand, PolicyError> {
    let doc: serde_json::Value = serde_json::from_slice(bytes).map_err(|e| PolicyError::Malformed(e.to_string()))?;
    let v = version_of(&doc)?;
    if v != WIRE_VERSION {
        return Err(PolicyError::Version { expected: WIRE_VERSION, got: v });
    }
    let resp: WireResponse = serde_json::from_value(doc).map_err(|e| PolicyError::Malformed(e.to_string()))?;
    if resp.waypoints.is_empty() {
        return Err(PolicyError::InvalidCommand("empty waypoint list".into()));
    }
    if resp.waypoints.len() > max_waypoints {
        return Err(PolicyError::InvalidCommand(format!(
            "{} waypoints exceed the maximum of {max_waypoints}",
            resp.waypoints.len()
        )));
    }
    if resp.waypoints.iter().any(|w| !w.is_finite()) {
        return Err(PolicyError::InvalidCommand("non-finite waypoint".into()));
    }
    Ok(PolicyCommand { waypoints: resp.waypoints, declare_landing: resp.declare_landing })
}

pub fn encode_response(cmd: &PolicyCommand) -> Vec<u8> {
    let resp = WireResponse { v: WIRE_VERSION, waypoints: cmd.waypoints.clone(), declare_landing: cmd.declare_landing };
    serde_json::to_vec(&resp).expect("response serializes")
}

pub fn decode_request(bytes: &[u8]) -> Result<WireRequest, PolicyError> {
    let doc: serde_json::Value = serde_json::from_slice(bytes).map_err(|e| PolicyError::Malformed(e.to_string()))?;
    let v = version_of(&doc)?;
    if v != WIRE_VERSION {
        return Err(PolicyError::Version { expected: WIRE_VERSION, got: v });
    }
    serde_json::from_value(doc).map_err(|e| PolicyError::Malformed(e.to_string()))
}
