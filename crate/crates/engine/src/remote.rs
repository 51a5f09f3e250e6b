//! TCP links between the root and worker daemons.

use std::collections::HashSet;
use std::io::{BufReader, BufWriter};
use std::net::{Shutdown, SocketAddr, TcpListener, TcpStream};
use std::sync::atomic::{AtomicBool, Ordering};
use std::sync::Arc;
use std::thread::JoinHandle;
use std::time::Duration;

use parking_lot::Mutex;

use crate::error::{EngineError, Result};
use crate::lineage::Lineage;
use crate::local::LocalWorker;
use crate::node::{Description, ExecutionId, Job, Node, Update};
use crate::wire::{read_frame, write_frame, Message};

/// A worker daemon reached over TCP. Transport failures are retried with
/// exponential backoff; logical errors from the worker are not.
pub struct RemoteNode {
    addr: String,
    retries: u32,
    backoff: Duration,
    cancelled: Mutex<HashSet<u128>>,
}

enum Attempt<T> {
    Done(T),
    /// The link broke; worth another try.
    Transport(String),
    Failed(EngineError),
}

impl RemoteNode {
    pub fn new(addr: impl Into<String>, retries: u32, backoff: Duration) -> RemoteNode {
        RemoteNode { addr: addr.into(), retries, backoff, cancelled: Mutex::new(HashSet::new()) }
    }

    pub fn addr(&self) -> &str {
        &self.addr
    }

    fn connect(&self) -> std::io::Result<TcpStream> {
        let addr: SocketAddr = self
            .addr
            .parse()
            .or_else(|_| std::net::ToSocketAddrs::to_socket_addrs(&self.addr).and_then(|mut a| {
                a.next().ok_or_else(|| std::io::Error::other("no address"))
            }))?;
        let s = TcpStream::connect_timeout(&addr, Duration::from_secs(5))?;
        s.set_nodelay(true)?;
        Ok(s)
    }

    fn with_retries<T>(&self, mut attempt: impl FnMut() -> Attempt<T>) -> Result<T> {
        let mut last = String::new();
        for i in 0..=self.retries {
            if i > 0 {
                std::thread::sleep(self.backoff * 2u32.pow(i - 1));
            }
            match attempt() {
                Attempt::Done(v) => return Ok(v),
                Attempt::Failed(e) => return Err(e),
                Attempt::Transport(e) => last = e,
            }
        }
        Err(EngineError::WorkerLost(format!("{}: {last}", self.addr)))
    }

    fn call(&self, msg: &Message) -> Result<Message> {
        self.with_retries(|| {
            let stream = match self.connect() {
                Ok(s) => s,
                Err(e) => return Attempt::Transport(e.to_string()),
            };
            let mut w = BufWriter::new(&stream);
            if let Err(e) = write_frame(&mut w, msg) {
                return Attempt::Transport(e.to_string());
            }
            drop(w);
            match read_frame(&mut BufReader::new(&stream)) {
                Ok(Message::Error { code, reason, .. }) => Attempt::Failed(EngineError::from_code(&code, reason)),
                Ok(m) => Attempt::Done(m),
                Err(e) => Attempt::Transport(e.to_string()),
            }
        })
    }
}

impl Node for RemoteNode {
    fn execute(&self, job: &Job, sink: &mut dyn FnMut(Update)) -> Result<()> {
        let key = job.execution.key();
        // A retried stream starts over; only forward updates that move
        // progress forward so the parent never sees it go backwards.
        let mut forwarded: Option<u64> = None;
        self.with_retries(|| {
            if self.cancelled.lock().contains(&key) {
                return Attempt::Failed(EngineError::Cancelled);
            }
            let stream = match self.connect() {
                Ok(s) => s,
                Err(e) => return Attempt::Transport(e.to_string()),
            };
            let mut w = BufWriter::new(&stream);
            if let Err(e) = write_frame(&mut w, &Message::Request { job: Box::new(job.clone()) }) {
                return Attempt::Transport(e.to_string());
            }
            drop(w);
            let mut r = BufReader::new(&stream);
            loop {
                match read_frame(&mut r) {
                    Ok(Message::Partial { update, .. }) => {
                        if forwarded.is_none_or(|f| update.leaves_done >= f) {
                            forwarded = Some(update.leaves_done);
                            sink(*update);
                        }
                    }
                    Ok(Message::Done { .. }) => return Attempt::Done(()),
                    Ok(Message::Error { code, reason, .. }) => {
                        return Attempt::Failed(EngineError::from_code(&code, reason))
                    }
                    Ok(other) => {
                        return Attempt::Failed(EngineError::Protocol(format!("unexpected {other:?}")))
                    }
                    Err(e) => return Attempt::Transport(e.to_string()),
                }
            }
        })
    }

    fn cancel(&self, execution: ExecutionId) {
        self.cancelled.lock().insert(execution.key());
        // Best effort and on its own connection, so it bypasses queued work.
        if let Ok(stream) = self.connect() {
            let mut w = BufWriter::new(&stream);
            if write_frame(&mut w, &Message::Cancel { execution }).is_ok() {
                drop(w);
                let _ = read_frame(&mut BufReader::new(&stream));
            }
        }
    }

    fn describe(&self, lineage: &Lineage, materialize: bool) -> Result<Description> {
        match self.call(&Message::Describe { lineage: lineage.clone(), materialize })? {
            Message::Described { description } => Ok(description),
            other => Err(EngineError::Protocol(format!("unexpected {other:?}"))),
        }
    }

    fn reset(&self) -> Result<()> {
        match self.call(&Message::Reset)? {
            Message::Ack => Ok(()),
            other => Err(EngineError::Protocol(format!("unexpected {other:?}"))),
        }
    }
}

/// Serves a `LocalWorker` over TCP, one thread per connection.
pub struct WorkerServer {
    addr: SocketAddr,
    stop: Arc<AtomicBool>,
    connections: Arc<Mutex<Vec<TcpStream>>>,
    accept: Option<JoinHandle<()>>,
    worker: Arc<LocalWorker>,
}

impl WorkerServer {
    pub fn start(worker: Arc<LocalWorker>, bind: &str) -> std::io::Result<WorkerServer> {
        let listener = TcpListener::bind(bind)?;
        let addr = listener.local_addr()?;
        let stop = Arc::new(AtomicBool::new(false));
        let connections = Arc::new(Mutex::new(Vec::new()));
        let accept = {
            let stop = stop.clone();
            let connections = connections.clone();
            let worker = worker.clone();
            std::thread::Builder::new().name(format!("worker-accept-{addr}")).spawn(move || {
                for stream in listener.incoming() {
                    if stop.load(Ordering::SeqCst) {
                        break;
                    }
                    let Ok(stream) = stream else { continue };
                    let _ = stream.set_nodelay(true);
                    if let Ok(c) = stream.try_clone() {
                        connections.lock().push(c);
                    }
                    let worker = worker.clone();
                    std::thread::spawn(move || serve_connection(&worker, stream));
                }
            })?
        };
        Ok(WorkerServer { addr, stop, connections, accept: Some(accept), worker })
    }

    pub fn addr(&self) -> SocketAddr {
        self.addr
    }

    pub fn worker(&self) -> &Arc<LocalWorker> {
        &self.worker
    }

    /// Stops accepting and cuts every open connection, like a crash.
    pub fn shutdown(mut self) {
        self.stop_now();
    }

    fn stop_now(&mut self) {
        self.stop.store(true, Ordering::SeqCst);
        let _ = TcpStream::connect(self.addr);
        if let Some(h) = self.accept.take() {
            let _ = h.join();
        }
        for c in self.connections.lock().drain(..) {
            let _ = c.shutdown(Shutdown::Both);
        }
    }

    /// Blocks until the accept loop ends.
    pub fn join(mut self) {
        if let Some(h) = self.accept.take() {
            let _ = h.join();
        }
    }
}

impl Drop for WorkerServer {
    fn drop(&mut self) {
        if self.accept.is_some() {
            self.stop_now();
        }
    }
}

fn error_message(execution: Option<uuid::Uuid>, e: &EngineError) -> Message {
    Message::Error { execution, code: e.code().into(), reason: e.detail() }
}

fn serve_connection(worker: &LocalWorker, stream: TcpStream) {
    let mut r = BufReader::new(&stream);
    let mut w = BufWriter::new(&stream);
    while let Ok(msg) = read_frame(&mut r) {
        let reply = match msg {
            Message::Request { job } => {
                let id = job.execution;
                let mut broken = false;
                let result = worker.execute(&job, &mut |u| {
                    if broken {
                        return;
                    }
                    let m = Message::Partial { execution: id.id, update: Box::new(u) };
                    if write_frame(&mut w, &m).is_err() {
                        // Nobody is listening any more.
                        broken = true;
                        worker.cancel(id);
                    }
                });
                match result {
                    Ok(()) => Message::Done { execution: id.id },
                    Err(e) => error_message(Some(id.id), &e),
                }
            }
            Message::Cancel { execution } => {
                worker.cancel(execution);
                Message::Ack
            }
            Message::Describe { lineage, materialize } => match worker.describe(&lineage, materialize) {
                Ok(description) => Message::Described { description },
                Err(e) => error_message(None, &e),
            },
            Message::Reset => match worker.reset() {
                Ok(()) => Message::Ack,
                Err(e) => error_message(None, &e),
            },
            other => error_message(None, &EngineError::Protocol(format!("unexpected {other:?}"))),
        };
        if write_frame(&mut w, &reply).is_err() {
            break;
        }
    }
}
