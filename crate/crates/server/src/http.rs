use std::net::SocketAddr;
use std::sync::Arc;
use std::thread::JoinHandle;

use axum::extract::ws::{Message, WebSocket, WebSocketUpgrade};
use axum::extract::State;
use axum::http::header;
use axum::response::IntoResponse;
use axum::routing::{get, post};
use axum::Router;
use futures::{SinkExt, StreamExt};
use tokio::sync::{mpsc, oneshot};

use crate::protocol::{decode, encode, ServerMessage};
use crate::session::{Service, Session};

pub fn router(service: Arc<Service>) -> Router {
    Router::new()
        .route("/ws", get(upgrade))
        .route("/api", post(one_shot))
        .route("/health", get(|| async { "ok" }))
        .with_state(service)
}

async fn upgrade(ws: WebSocketUpgrade, State(service): State<Arc<Service>>) -> impl IntoResponse {
    ws.on_upgrade(move |socket| session_loop(socket, service))
}

async fn session_loop(socket: WebSocket, service: Arc<Service>) {
    let (mut sink, mut stream) = socket.split();
    let (tx, mut rx) = mpsc::unbounded_channel();
    let session = Arc::new(Session::new(service, tx.clone()));
    let writer = tokio::spawn(async move {
        while let Some(m) = rx.recv().await {
            if sink.send(Message::Text(encode(&m).into())).await.is_err() {
                break;
            }
        }
    });
    while let Some(Ok(msg)) = stream.next().await {
        match msg {
            Message::Text(text) => match decode(&text) {
                // One message at a time, so a cancel never overtakes its query.
                Ok(m) => {
                    let s = session.clone();
                    let _ = tokio::task::spawn_blocking(move || s.handle(m)).await;
                }
                Err(e) => {
                    let _ = tx.send(ServerMessage::error(None, None, &e));
                }
            },
            Message::Binary(_) => {
                let e = vizketch_engine::EngineError::Protocol("binary frames are not supported".into());
                let _ = tx.send(ServerMessage::error(None, None, &e));
            }
            Message::Close(_) => break,
            _ => {}
        }
    }
    session.close();
    writer.abort();
}

/// Runs one message to completion and returns every reply as a JSON array.
async fn one_shot(State(service): State<Arc<Service>>, body: String) -> impl IntoResponse {
    let (tx, mut rx) = mpsc::unbounded_channel();
    let replies = match decode(&body) {
        Err(e) => vec![ServerMessage::error(None, None, &e)],
        Ok(m) => {
            let session = Session::new(service, tx);
            let _ = tokio::task::spawn_blocking(move || session.handle(m)).await;
            let mut replies = Vec::new();
            while let Some(m) = rx.recv().await {
                let streaming = matches!(m, ServerMessage::Started { .. })
                    || (replies.first().is_some_and(|f| matches!(f, ServerMessage::Started { .. })) && !m.is_terminal());
                replies.push(m);
                if !streaming {
                    break;
                }
            }
            replies
        }
    };
    let body = format!("[{}]", replies.iter().map(encode).collect::<Vec<_>>().join(","));
    ([(header::CONTENT_TYPE, "application/json")], body)
}

/// A server running on its own runtime thread.
pub struct ServerHandle {
    addr: SocketAddr,
    stop: Option<oneshot::Sender<()>>,
    thread: Option<JoinHandle<()>>,
}

impl ServerHandle {
    pub fn addr(&self) -> SocketAddr {
        self.addr
    }

    pub fn stop(mut self) {
        self.shut();
    }

    /// Blocks until the server exits.
    pub fn wait(mut self) {
        if let Some(t) = self.thread.take() {
            let _ = t.join();
        }
    }

    fn shut(&mut self) {
        if let Some(s) = self.stop.take() {
            let _ = s.send(());
        }
        if let Some(t) = self.thread.take() {
            let _ = t.join();
        }
    }
}

impl Drop for ServerHandle {
    fn drop(&mut self) {
        self.shut();
    }
}

/// Binds `bind` and serves until the handle is stopped or dropped.
pub fn serve(service: Arc<Service>, bind: &str) -> std::io::Result<ServerHandle> {
    let listener = std::net::TcpListener::bind(bind)?;
    listener.set_nonblocking(true)?;
    let addr = listener.local_addr()?;
    let runtime = tokio::runtime::Builder::new_multi_thread().enable_all().build()?;
    let (stop, stopped) = oneshot::channel::<()>();
    let thread = std::thread::Builder::new().name("vizketch-http".into()).spawn(move || {
        runtime.block_on(async move {
            let listener = match tokio::net::TcpListener::from_std(listener) {
                Ok(l) => l,
                Err(e) => return log::error!("cannot serve on {addr}: {e}"),
            };
            let app = router(service);
            let result = axum::serve(listener, app)
                .with_graceful_shutdown(async {
                    let _ = stopped.await;
                })
                .await;
            if let Err(e) = result {
                log::error!("server stopped: {e}");
            }
        });
        runtime.shutdown_background();
    })?;
    log::info!("serving on http://{addr} (WebSocket at /ws)");
    Ok(ServerHandle { addr, stop: Some(stop), thread: Some(thread) })
}
