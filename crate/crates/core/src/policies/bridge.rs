//! Client side of the external policy bridge.

use std::io::{self, BufReader, BufWriter};
use std::net::{TcpStream, ToSocketAddrs};
use std::time::Duration;

use super::wire::{decode_response, encode_observation, read_frame, write_frame};
use crate::episode::{Episode, Observation, Policy, PolicyCommand, PolicyError};

pub const DEFAULT_TIMEOUT: Duration = Duration::from_secs(30);

fn io_error(e: io::Error) -> PolicyError {
    match e.kind() {
        io::ErrorKind::WouldBlock | io::ErrorKind::TimedOut => PolicyError::Timeout,
        io::ErrorKind::InvalidData => PolicyError::Malformed(e.to_string()),
        _ => PolicyError::Transport(e.to_string()),
    }
}

struct Connection {
    reader: BufReader<TcpStream>,
    writer: BufWriter<TcpStream>,
}

/// One persistent connection, one outstanding request at a time.
pub struct BridgePolicy {
    endpoint: String,
    timeout: Duration,
    max_waypoints: usize,
    conn: Option<Connection>,
    episode_id: String,
}

impl BridgePolicy {
    pub fn connect(endpoint: &str, timeout: Duration, max_waypoints: usize) -> Result<Self, PolicyError> {
        let mut p = Self { endpoint: endpoint.to_string(), timeout, max_waypoints, conn: None, episode_id: String::new() };
        p.reconnect()?;
        Ok(p)
    }

    fn reconnect(&mut self) -> Result<(), PolicyError> {
        let addr = self
            .endpoint
            .to_socket_addrs()
            .map_err(io_error)?
            .next()
            .ok_or_else(|| PolicyError::Transport(format!("cannot resolve {}", self.endpoint)))?;
        let stream = TcpStream::connect_timeout(&addr, self.timeout).map_err(io_error)?;
        stream.set_read_timeout(Some(self.timeout)).map_err(io_error)?;
        stream.set_write_timeout(Some(self.timeout)).map_err(io_error)?;
        stream.set_nodelay(true).map_err(io_error)?;
        let reader = BufReader::new(stream.try_clone().map_err(io_error)?);
        self.conn = Some(Connection { reader, writer: BufWriter::new(stream) });
        Ok(())
    }

    fn exchange(&mut self, payload: &[u8]) -> Result<Vec<u8>, PolicyError> {
        let conn = self.conn.as_mut().ok_or_else(|| PolicyError::Transport("not connected".into()))?;
        write_frame(&mut conn.writer, payload).map_err(io_error)?;
        read_frame(&mut conn.reader).map_err(io_error)
    }
}

impl Policy for BridgePolicy {
    fn name(&self) -> String {
        format!("external({})", self.endpoint)
    }

    fn begin_episode(&mut self, episode: &Episode) -> Result<(), PolicyError> {
        self.episode_id = episode.id.clone();
        if self.conn.is_none() {
            self.reconnect()?;
        }
        Ok(())
    }

    fn act(&mut self, obs: &Observation) -> Result<PolicyCommand, PolicyError> {
        let req = encode_observation(obs, &self.episode_id);
        let payload = serde_json::to_vec(&req).expect("request serializes");
        let result = self.exchange(&payload).and_then(|bytes| decode_response(&bytes, self.max_waypoints));
        if matches!(result, Err(PolicyError::Timeout | PolicyError::Transport(_))) {
            // a late reply would otherwise be read as the answer to the next request
            self.conn = None;
        }
        result
    }
}
