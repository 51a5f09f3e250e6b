//! One client session, either with an in-process service or over a
//! WebSocket.

use std::io::ErrorKind;
use std::net::TcpStream;
use std::sync::mpsc::{self, RecvTimeoutError};
use std::sync::Arc;
use std::time::{Duration, Instant};

use tungstenite::stream::MaybeTlsStream;
use tungstenite::{Message, WebSocket};
use vizketch_server::{ClientMessage, Envelope, ServerMessage, Service, Session, PROTOCOL_VERSION};

use crate::error::{CliError, Result};

pub trait Transport {
    fn send(&mut self, m: ClientMessage) -> Result<()>;
    /// The next message, or `None` once `deadline` passes.
    fn recv(&mut self, deadline: Option<Instant>) -> Result<Option<ServerMessage>>;
}

pub struct InProcess {
    pub service: Arc<Service>,
    session: Session,
    rx: mpsc::Receiver<ServerMessage>,
}

impl InProcess {
    pub fn new(service: Arc<Service>) -> InProcess {
        let (tx, mut async_rx) = tokio::sync::mpsc::unbounded_channel();
        let (sync_tx, rx) = mpsc::channel();
        std::thread::spawn(move || {
            while let Some(m) = async_rx.blocking_recv() {
                if sync_tx.send(m).is_err() {
                    break;
                }
            }
        });
        InProcess { session: Session::new(service.clone(), tx), service, rx }
    }
}

impl Transport for InProcess {
    fn send(&mut self, m: ClientMessage) -> Result<()> {
        self.session.handle(m);
        Ok(())
    }

    fn recv(&mut self, deadline: Option<Instant>) -> Result<Option<ServerMessage>> {
        let closed = || CliError::Protocol("session closed".into());
        match deadline {
            None => self.rx.recv().map(Some).map_err(|_| closed()),
            Some(d) => match self.rx.recv_timeout(d.saturating_duration_since(Instant::now())) {
                Ok(m) => Ok(Some(m)),
                Err(RecvTimeoutError::Timeout) => Ok(None),
                Err(RecvTimeoutError::Disconnected) => Err(closed()),
            },
        }
    }
}

impl Drop for InProcess {
    fn drop(&mut self) {
        self.session.close();
    }
}

pub struct Remote {
    socket: WebSocket<MaybeTlsStream<TcpStream>>,
}

fn transport(e: impl std::fmt::Display) -> CliError {
    CliError::Protocol(e.to_string())
}

impl Remote {
    pub fn connect(url: &str) -> Result<Remote> {
        let (socket, _) = tungstenite::connect(url).map_err(|e| transport(format!("cannot connect to {url}: {e}")))?;
        Ok(Remote { socket })
    }

    fn set_timeout(&mut self, t: Option<Duration>) -> Result<()> {
        if let MaybeTlsStream::Plain(s) = self.socket.get_mut() {
            s.set_read_timeout(t)?;
        }
        Ok(())
    }
}

impl Transport for Remote {
    fn send(&mut self, message: ClientMessage) -> Result<()> {
        let text = serde_json::to_string(&Envelope { protocol_version: PROTOCOL_VERSION, message }).map_err(transport)?;
        self.socket.send(Message::text(text)).map_err(transport)
    }

    fn recv(&mut self, deadline: Option<Instant>) -> Result<Option<ServerMessage>> {
        loop {
            let timeout = match deadline {
                None => None,
                Some(d) => {
                    let left = d.saturating_duration_since(Instant::now());
                    if left.is_zero() {
                        return Ok(None);
                    }
                    Some(left)
                }
            };
            self.set_timeout(timeout)?;
            match self.socket.read() {
                Ok(Message::Text(text)) => {
                    let env: Envelope<ServerMessage> = serde_json::from_str(text.as_str()).map_err(transport)?;
                    if env.protocol_version != PROTOCOL_VERSION {
                        return Err(transport(format!("server speaks protocol version {}", env.protocol_version)));
                    }
                    return Ok(Some(env.message));
                }
                Ok(Message::Close(_)) => return Err(transport("server closed the connection")),
                Ok(_) => {}
                Err(tungstenite::Error::Io(e)) if matches!(e.kind(), ErrorKind::WouldBlock | ErrorKind::TimedOut) => {
                    return Ok(None)
                }
                Err(e) => return Err(transport(e)),
            }
        }
    }
}
