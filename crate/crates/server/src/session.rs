use std::collections::HashSet;
use std::sync::Arc;
use std::time::Duration;

use parking_lot::Mutex;
use tokio::sync::mpsc::UnboundedSender;
use uuid::Uuid;
use vizketch_engine::{EngineError, Event, PartialResult, Root};

use crate::protocol::{ClientMessage, ServerMessage};
use crate::render::render_payload;

/// Shared by every session of one server.
pub struct Service {
    pub root: Root,
    /// How long executions of a disconnected session keep running.
    pub orphan_timeout: Duration,
}

impl Service {
    pub fn new(root: Root) -> Arc<Service> {
        let orphan_timeout = Duration::from_secs(root.config().orphan_timeout_secs);
        Arc::new(Service { root, orphan_timeout })
    }
}

#[derive(Default)]
struct Owned {
    started: HashSet<Uuid>,
    running: HashSet<Uuid>,
}

/// One client connection. Replies go to `out` in the order they are
/// produced; messages of different executions may interleave.
pub struct Session {
    service: Arc<Service>,
    out: UnboundedSender<ServerMessage>,
    owned: Arc<Mutex<Owned>>,
}

impl Session {
    pub fn new(service: Arc<Service>, out: UnboundedSender<ServerMessage>) -> Session {
        Session { service, out, owned: Arc::default() }
    }

    fn send(&self, m: ServerMessage) {
        let _ = self.out.send(m);
    }

    /// Handles one message. Blocks for registration and schema lookups;
    /// queries run on their own thread.
    pub fn handle(&self, msg: ClientMessage) {
        let root = &self.service.root;
        match msg {
            ClientMessage::Register { source } => match root.register(source) {
                Ok(dataset) => self.send(ServerMessage::Registered { dataset }),
                Err(e) => self.send(ServerMessage::error(None, None, &e)),
            },
            ClientMessage::Derive { op, seed } => match root.derive(op, seed) {
                Ok(dataset) => self.send(ServerMessage::Registered { dataset }),
                Err(e) => self.send(ServerMessage::error(None, None, &e)),
            },
            ClientMessage::ListSchema { dataset } => match root.schema(&dataset) {
                Ok(schema) => self.send(ServerMessage::Schema { dataset, columns: schema.0 }),
                Err(e) => self.send(ServerMessage::error(None, None, &e)),
            },
            ClientMessage::Cancel { execution } => {
                if self.owned.lock().started.contains(&execution) {
                    root.cancel(execution);
                } else {
                    let e = EngineError::BadRequest(format!("execution {execution} does not belong to this session"));
                    self.send(ServerMessage::error(None, None, &e));
                }
            }
            ClientMessage::Query { tag, dataset, request } => {
                let seed = request.seed;
                let exec = match root.query(&dataset, request) {
                    Ok(e) => e,
                    Err(e) => return self.send(ServerMessage::error(None, tag, &e)),
                };
                let id = exec.id.id;
                {
                    let mut o = self.owned.lock();
                    o.started.insert(id);
                    o.running.insert(id);
                }
                self.send(ServerMessage::Started { tag: tag.clone(), execution: id, seed });
                let out = self.out.clone();
                let owned = self.owned.clone();
                std::thread::spawn(move || {
                    for event in exec.events().iter() {
                        let terminal = event.is_terminal();
                        for m in translate(id, &tag, event) {
                            let _ = out.send(m);
                        }
                        if terminal {
                            break;
                        }
                    }
                    owned.lock().running.remove(&id);
                });
            }
        }
    }

    /// Executions started here that have not finished.
    pub fn running(&self) -> Vec<Uuid> {
        self.owned.lock().running.iter().copied().collect()
    }

    /// Called when the client goes away: its executions are cancelled
    /// once they have run unobserved for the orphan timeout.
    pub fn close(&self) {
        let running = self.running();
        if running.is_empty() {
            return;
        }
        let root = self.service.root.clone();
        let timeout = self.service.orphan_timeout;
        let owned = self.owned.clone();
        std::thread::spawn(move || {
            std::thread::sleep(timeout);
            for id in running {
                if owned.lock().running.contains(&id) {
                    log::info!("cancelling orphaned execution {id}");
                    root.cancel(id);
                }
            }
        });
    }
}

fn partial(id: Uuid, p: &PartialResult) -> ServerMessage {
    match render_payload(&p.summary, &p.request) {
        Ok(payload) => ServerMessage::Partial {
            execution: id,
            payload,
            progress: p.progress(),
            leaves_done: p.leaves_done,
            leaves_total: p.leaves_total,
        },
        Err(e) => ServerMessage::error(Some(id), None, &EngineError::BadRequest(e.to_string())),
    }
}

/// The final result goes out as a last partial, then `done`.
fn translate(id: Uuid, tag: &Option<String>, event: Event) -> Vec<ServerMessage> {
    match event {
        Event::Partial(p) => vec![partial(id, &p)],
        Event::Complete(p) => {
            let last = partial(id, &p);
            if last.is_terminal() {
                vec![last]
            } else {
                vec![last, ServerMessage::Done { execution: id }]
            }
        }
        Event::Cancelled(_) => vec![ServerMessage::Cancelled { execution: id }],
        Event::Failed(_, e) => vec![ServerMessage::error(Some(id), tag.clone(), &e)],
    }
}
