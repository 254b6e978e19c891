//! Session server hosting teleoperation and policy-bridge sessions on one port.

pub mod protocol;
mod session;

use std::collections::{BTreeMap, BTreeSet};
use std::io;
use std::net::{SocketAddr, TcpListener, TcpStream};
use std::path::PathBuf;
use std::sync::atomic::{AtomicBool, AtomicU64, Ordering};
use std::sync::{Arc, Mutex};
use std::thread::{self, JoinHandle};
use std::time::Duration;

use uavnh_core::assistant::AssistLevel;
use uavnh_core::episode::{Episode, HarnessConfig};

use crate::store::SceneStore;
use protocol::{ClientMessage, FramedTransport, ServerMessage, Transport, WsTransport, WIRE_VERSION};

pub const BIND_ENV: &str = "UAVNH_BIND";
pub const DEFAULT_BIND: &str = "127.0.0.1:8765";

pub fn bind_address_from_env() -> String {
    std::env::var(BIND_ENV).ok().filter(|s| !s.trim().is_empty()).unwrap_or_else(|| DEFAULT_BIND.to_string())
}

#[derive(Debug, Clone)]
pub struct ServerConfig {
    pub stream_hz: f64,
    /// Wall-clock time per stream tick; `None` runs in real time at `stream_hz`.
    pub tick: Option<Duration>,
    /// Side length of the streamed teleop images; saves backfill at full resolution.
    pub teleop_resolution: usize,
    pub harness: HarnessConfig,
    pub default_level: AssistLevel,
    pub record_dt: f64,
    /// Distance to the target that unlocks saving.
    pub save_radius: f64,
    pub output_dir: PathBuf,
    pub hello_timeout: Duration,
    pub bridge_timeout: Duration,
}

impl ServerConfig {
    pub fn new(output_dir: PathBuf) -> Self {
        Self {
            stream_hz: 10.0,
            tick: None,
            teleop_resolution: 32,
            harness: HarnessConfig::default(),
            default_level: AssistLevel::L1,
            record_dt: 0.5,
            save_radius: 5.0,
            output_dir,
            hello_timeout: Duration::from_secs(10),
            bridge_timeout: Duration::from_secs(30),
        }
    }

    pub fn tick_interval(&self) -> Duration {
        self.tick.unwrap_or_else(|| Duration::from_secs_f64(1.0 / self.stream_hz))
    }

    pub fn steps_per_tick(&self) -> usize {
        ((1.0 / (self.stream_hz * self.harness.limits.dt)).round() as usize).max(1)
    }
}

pub struct ServerData {
    pub scenes: SceneStore,
    pub episodes: BTreeMap<String, Episode>,
}

impl ServerData {
    pub fn new(scenes: SceneStore, episodes: Vec<Episode>) -> Self {
        Self { scenes, episodes: episodes.into_iter().map(|e| (e.id.clone(), e)).collect() }
    }
}

struct Shared {
    data: ServerData,
    cfg: ServerConfig,
    sessions: Mutex<BTreeSet<String>>,
    counter: AtomicU64,
    stop: AtomicBool,
}

/// Removes the session from the registry when its connection ends.
struct SessionGuard<'a> {
    shared: &'a Shared,
    id: String,
}

impl Drop for SessionGuard<'_> {
    fn drop(&mut self) {
        self.shared.sessions.lock().unwrap_or_else(|p| p.into_inner()).remove(&self.id);
    }
}

pub struct ServerHandle {
    addr: SocketAddr,
    shared: Arc<Shared>,
    accept: Option<JoinHandle<()>>,
}

impl ServerHandle {
    pub fn addr(&self) -> SocketAddr {
        self.addr
    }

    pub fn active_sessions(&self) -> usize {
        self.shared.sessions.lock().unwrap_or_else(|p| p.into_inner()).len()
    }

    pub fn shutdown(mut self) {
        self.stop();
    }

    /// Blocks until the accept loop ends.
    pub fn join(mut self) {
        if let Some(h) = self.accept.take() {
            let _ = h.join();
        }
    }

    fn stop(&mut self) {
        self.shared.stop.store(true, Ordering::SeqCst);
        let _ = TcpStream::connect(self.addr);
        if let Some(h) = self.accept.take() {
            let _ = h.join();
        }
    }
}

impl Drop for ServerHandle {
    fn drop(&mut self) {
        if self.accept.is_some() {
            self.stop();
        }
    }
}

/// Binds `addr` and serves sessions on background threads.
pub fn serve(addr: &str, data: ServerData, cfg: ServerConfig) -> io::Result<ServerHandle> {
    let listener = TcpListener::bind(addr)?;
    let addr = listener.local_addr()?;
    let shared =
        Arc::new(Shared { data, cfg, sessions: Mutex::new(BTreeSet::new()), counter: AtomicU64::new(0), stop: AtomicBool::new(false) });
    let sh = shared.clone();
    let accept = thread::spawn(move || {
        for stream in listener.incoming() {
            if sh.stop.load(Ordering::SeqCst) {
                break;
            }
            let Ok(stream) = stream else { continue };
            let sh = sh.clone();
            thread::spawn(move || {
                let _ = handle_connection(&sh, stream);
            });
        }
    });
    Ok(ServerHandle { addr, shared, accept: Some(accept) })
}

fn handle_connection(shared: &Shared, stream: TcpStream) -> io::Result<()> {
    stream.set_nodelay(true)?;
    let mut head = [0u8; 4];
    stream.set_read_timeout(Some(shared.cfg.hello_timeout))?;
    let n = stream.peek(&mut head)?;
    stream.set_read_timeout(None)?;
    let mut transport: Box<dyn Transport> = if n == 4 && &head == b"GET " {
        let ws = tungstenite::accept(stream).map_err(|e| io::Error::new(io::ErrorKind::InvalidData, e.to_string()))?;
        Box::new(WsTransport::new(ws))
    } else {
        Box::new(FramedTransport::new(stream)?)
    };
    let t = transport.as_mut();

    let Some(bytes) = t.recv(shared.cfg.hello_timeout)? else {
        return t.send(&ServerMessage::error("timeout", "no hello received").to_bytes());
    };
    let (mode, requested, level) = match serde_json::from_slice::<ClientMessage>(&bytes) {
        Ok(ClientMessage::Hello { v, mode, session_id, level }) => {
            if v != WIRE_VERSION {
                let msg = format!("protocol version {v} not supported, expected {WIRE_VERSION}");
                return t.send(&ServerMessage::error("version", msg).to_bytes());
            }
            (mode, session_id, level.unwrap_or(shared.cfg.default_level))
        }
        Ok(_) => return t.send(&ServerMessage::error("protocol", "expected hello").to_bytes()),
        Err(e) => return t.send(&ServerMessage::error("malformed", e.to_string()).to_bytes()),
    };

    let id = {
        let mut sessions = shared.sessions.lock().unwrap_or_else(|p| p.into_inner());
        let id = requested.unwrap_or_else(|| format!("s{}", shared.counter.fetch_add(1, Ordering::SeqCst)));
        if !sessions.insert(id.clone()) {
            drop(sessions);
            return t.send(&ServerMessage::error("controller_taken", format!("session {id} already has a controller")).to_bytes());
        }
        id
    };
    let _guard = SessionGuard { shared, id: id.clone() };
    t.send(&ServerMessage::Welcome { v: WIRE_VERSION, session_id: id.clone(), mode, stream_hz: shared.cfg.stream_hz }.to_bytes())?;
    session::run(shared, t, &id, mode, level)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn env_bind_address() {
        std::env::remove_var(BIND_ENV);
        assert_eq!(bind_address_from_env(), DEFAULT_BIND);
        std::env::set_var(BIND_ENV, "0.0.0.0:9000");
        assert_eq!(bind_address_from_env(), "0.0.0.0:9000");
        std::env::remove_var(BIND_ENV);
    }

    #[test]
    fn tick_rates() {
        let cfg = ServerConfig::new(PathBuf::from("out"));
        assert_eq!(cfg.steps_per_tick(), 1);
        assert_eq!(cfg.tick_interval(), Duration::from_millis(100));
        let slow = ServerConfig { stream_hz: 2.0, ..cfg };
        assert_eq!(slow.steps_per_tick(), 5);
    }
}
