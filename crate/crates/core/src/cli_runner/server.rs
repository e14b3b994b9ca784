use std::io::{self, ErrorKind};
use std::net::{SocketAddr, TcpListener, TcpStream};
use std::sync::mpsc::{channel, Receiver, Sender};
use std::sync::{Arc, Mutex};
use std::thread;
use std::time::Duration;

use nalgebra::Vector2;
use serde::Deserialize;
use serde_json::json;
use tungstenite::{Error as WsError, Message};

use super::pipeline::ExternalCommand;

/// Poll interval of each client thread.
const POLL: Duration = Duration::from_millis(5);

#[derive(Debug, Deserialize)]
#[serde(tag = "type", rename_all = "lowercase", deny_unknown_fields)]
enum ClientMessage {
    Steer { vx: f64, vy: f64 },
    Mode { value: String },
}

/// Parses one client text frame.
pub fn parse_client_message(text: &str) -> Result<ExternalCommand, String> {
    match serde_json::from_str::<ClientMessage>(text).map_err(|e| format!("malformed message: {e}"))? {
        ClientMessage::Steer { vx, vy } => Ok(ExternalCommand::Steer(Vector2::new(vx, vy))),
        ClientMessage::Mode { value } => match value.as_str() {
            "interactive" => Ok(ExternalCommand::Interactive),
            "scripted" => Ok(ExternalCommand::Scripted),
            other => Err(format!("unknown mode \"{other}\"")),
        },
    }
}

pub fn error_message(message: &str) -> String {
    json!({"type": "error", "version": super::PROTOCOL_VERSION, "message": message}).to_string()
}

/// Parsed command plus the channel that reaches the client that sent it.
pub type Incoming = (Result<ExternalCommand, String>, Sender<String>);

/// WebSocket endpoint. Clients' commands are queued for the simulation
/// loop; state is fanned out to every connected client.
pub struct SteeringServer {
    addr: SocketAddr,
    clients: Arc<Mutex<Vec<Sender<String>>>>,
    commands: Receiver<Incoming>,
}

impl SteeringServer {
    pub fn bind(addr: &str) -> io::Result<Self> {
        let listener = TcpListener::bind(addr)?;
        let addr = listener.local_addr()?;
        let clients: Arc<Mutex<Vec<Sender<String>>>> = Arc::new(Mutex::new(Vec::new()));
        let (cmd_tx, commands) = channel();
        let registry = Arc::clone(&clients);
        thread::spawn(move || {
            for stream in listener.incoming() {
                let Ok(stream) = stream else { continue };
                let (out_tx, out_rx) = channel();
                registry.lock().expect("client registry").push(out_tx.clone());
                let cmd_tx = cmd_tx.clone();
                thread::spawn(move || {
                    if let Err(e) = serve_client(stream, cmd_tx, out_tx, out_rx) {
                        log::debug!("client closed: {e}");
                    }
                });
            }
        });
        log::info!("steering endpoint listening on ws://{addr}");
        Ok(Self { addr, clients, commands })
    }

    pub fn local_addr(&self) -> SocketAddr {
        self.addr
    }

    pub fn client_count(&self) -> usize {
        self.clients.lock().expect("client registry").len()
    }

    /// Sends `text` to every client, forgetting disconnected ones.
    pub fn broadcast(&self, text: &str) {
        self.clients.lock().expect("client registry").retain(|c| c.send(text.to_string()).is_ok());
    }

    /// Commands received since the last call, in arrival order.
    pub fn drain(&self) -> Vec<Incoming> {
        self.commands.try_iter().collect()
    }
}

fn serve_client(stream: TcpStream, commands: Sender<Incoming>, reply: Sender<String>, outgoing: Receiver<String>) -> Result<(), WsError> {
    stream.set_nodelay(true)?;
    let mut ws = tungstenite::accept(stream).map_err(|e| match e {
        tungstenite::HandshakeError::Failure(e) => e,
        tungstenite::HandshakeError::Interrupted(_) => WsError::Io(io::Error::from(ErrorKind::WouldBlock)),
    })?;
    ws.get_mut().set_read_timeout(Some(POLL))?;
    loop {
        match ws.read() {
            Ok(Message::Text(text)) => {
                if commands.send((parse_client_message(text.as_str()), reply.clone())).is_err() {
                    return Ok(());
                }
            }
            Ok(Message::Close(_)) => return Ok(()),
            Ok(_) => {}
            Err(WsError::Io(e)) if matches!(e.kind(), ErrorKind::WouldBlock | ErrorKind::TimedOut) => {}
            Err(WsError::ConnectionClosed | WsError::AlreadyClosed) => return Ok(()),
            Err(e) => return Err(e),
        }
        for text in outgoing.try_iter() {
            ws.send(Message::text(text))?;
        }
    }
}
