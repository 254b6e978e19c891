//! Session messages and the two transports that carry them.
//!
//! Plain TCP connections use the length-prefixed frames of the policy bridge.
//! Browser clients upgrade to a websocket and send one JSON payload per message.

use std::io::{self, ErrorKind};
use std::net::TcpStream;
use std::sync::mpsc::{self, Receiver, RecvTimeoutError};
use std::thread;
use std::time::Duration;

use serde::{Deserialize, Serialize};
use tungstenite::{Message, WebSocket};
use uavnh_core::assistant::AssistLevel;
use uavnh_core::episode::{Episode, EpisodeResult};
use uavnh_core::flight::VelocityCommand;
use uavnh_core::policies::wire::{read_frame, write_frame, WireRequest};
use uavnh_core::Pose;

pub use uavnh_core::policies::wire::WIRE_VERSION;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SessionMode {
    Teleop,
    Bridge,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "mode", rename_all = "snake_case")]
pub enum Control {
    /// Held until replaced.
    Manual { command: VelocityCommand },
    Position { target: Pose },
    Land,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum ClientMessage {
    Hello {
        v: u32,
        mode: SessionMode,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        session_id: Option<String>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        level: Option<AssistLevel>,
    },
    Start {
        episode_id: String,
    },
    Control(Control),
    Save,
    Discard,
    Bye,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EventKind {
    Collision,
    Landed,
    Discarded,
    Guidance,
    NearTarget,
    Arrived,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum ServerMessage {
    Welcome {
        v: u32,
        session_id: String,
        mode: SessionMode,
        stream_hz: f64,
    },
    EpisodeStart {
        episode: Box<Episode>,
    },
    Obs {
        obs: Box<WireRequest>,
    },
    Event {
        event: EventKind,
        time: f64,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        text: Option<String>,
    },
    Saved {
        path: String,
        states: usize,
        path_length: f64,
    },
    Result {
        result: Box<EpisodeResult>,
    },
    Error {
        code: String,
        message: String,
    },
}

impl ServerMessage {
    pub fn error(code: &str, message: impl Into<String>) -> Self {
        ServerMessage::Error { code: code.into(), message: message.into() }
    }

    pub fn to_bytes(&self) -> Vec<u8> {
        serde_json::to_vec(self).expect("server message serializes")
    }
}

pub trait Transport: Send {
    fn send(&mut self, payload: &[u8]) -> io::Result<()>;
    /// `Ok(None)` when nothing arrived within `timeout`; an error once the peer is gone.
    fn recv(&mut self, timeout: Duration) -> io::Result<Option<Vec<u8>>>;
}

pub struct FramedTransport {
    writer: TcpStream,
    rx: Receiver<io::Result<Vec<u8>>>,
}

impl FramedTransport {
    pub fn new(stream: TcpStream) -> io::Result<Self> {
        let mut reader = stream.try_clone()?;
        let (tx, rx) = mpsc::channel();
        thread::spawn(move || loop {
            let r = read_frame(&mut reader);
            let stop = r.is_err();
            if tx.send(r).is_err() || stop {
                break;
            }
        });
        Ok(Self { writer: stream, rx })
    }
}

impl Transport for FramedTransport {
    fn send(&mut self, payload: &[u8]) -> io::Result<()> {
        write_frame(&mut self.writer, payload)
    }

    fn recv(&mut self, timeout: Duration) -> io::Result<Option<Vec<u8>>> {
        match self.rx.recv_timeout(timeout) {
            Ok(r) => r.map(Some),
            Err(RecvTimeoutError::Timeout) => Ok(None),
            Err(RecvTimeoutError::Disconnected) => Err(io::Error::new(ErrorKind::ConnectionAborted, "reader stopped")),
        }
    }
}

impl Drop for FramedTransport {
    fn drop(&mut self) {
        let _ = self.writer.shutdown(std::net::Shutdown::Both);
    }
}

pub struct WsTransport {
    ws: WebSocket<TcpStream>,
}

impl WsTransport {
    pub fn new(ws: WebSocket<TcpStream>) -> Self {
        Self { ws }
    }
}

fn ws_err(e: tungstenite::Error) -> io::Error {
    match e {
        tungstenite::Error::Io(e) => e,
        other => io::Error::new(ErrorKind::ConnectionAborted, other.to_string()),
    }
}

impl Transport for WsTransport {
    fn send(&mut self, payload: &[u8]) -> io::Result<()> {
        let text = String::from_utf8(payload.to_vec()).map_err(|e| io::Error::new(ErrorKind::InvalidData, e))?;
        self.ws.send(Message::text(text)).map_err(ws_err)
    }

    fn recv(&mut self, timeout: Duration) -> io::Result<Option<Vec<u8>>> {
        self.ws.get_mut().set_read_timeout(Some(timeout.max(Duration::from_millis(1))))?;
        loop {
            match self.ws.read() {
                Ok(Message::Text(t)) => return Ok(Some(t.as_bytes().to_vec())),
                Ok(Message::Binary(b)) => return Ok(Some(b.to_vec())),
                Ok(Message::Close(_)) => return Err(io::Error::new(ErrorKind::ConnectionAborted, "closed by peer")),
                Ok(_) => continue,
                Err(tungstenite::Error::Io(e)) if matches!(e.kind(), ErrorKind::WouldBlock | ErrorKind::TimedOut) => {
                    return Ok(None)
                }
                Err(e) => return Err(ws_err(e)),
            }
        }
    }
}

/// Client side of the framed transport, for scripted sessions and tests.
pub struct Client {
    inner: FramedTransport,
}

impl Client {
    pub fn connect(addr: &str) -> io::Result<Self> {
        let s = TcpStream::connect(addr)?;
        s.set_nodelay(true)?;
        Ok(Self { inner: FramedTransport::new(s)? })
    }

    pub fn send(&mut self, msg: &ClientMessage) -> io::Result<()> {
        self.inner.send(&serde_json::to_vec(msg).expect("client message serializes"))
    }

    pub fn send_raw(&mut self, payload: &[u8]) -> io::Result<()> {
        self.inner.send(payload)
    }

    pub fn recv_raw(&mut self, timeout: Duration) -> io::Result<Option<Vec<u8>>> {
        self.inner.recv(timeout)
    }

    pub fn recv(&mut self, timeout: Duration) -> io::Result<ServerMessage> {
        let bytes = self.inner.recv(timeout)?.ok_or_else(|| io::Error::new(ErrorKind::TimedOut, "no message"))?;
        serde_json::from_slice(&bytes).map_err(|e| io::Error::new(ErrorKind::InvalidData, e))
    }
}
