//! The `vizketch` command line. [`run`] takes the arguments and two output
//! streams so tests can drive it without spawning processes.

pub mod args;
pub mod client;
pub mod error;
pub mod request;

use std::io::Write;
use std::sync::Arc;
use std::time::{Duration, Instant};

use clap::Parser;
use vizketch_core::{SketchKind, SketchRequest};
use vizketch_engine::remote::WorkerServer;
use vizketch_engine::{EngineConfig, LocalWorker, Root};
use vizketch_server::protocol::encode;
use vizketch_server::{ClientMessage, ServerMessage, Service};

use args::{BenchArgs, BenchSketch, Cli, Command, QueryArgs, VerifyArgs};
use client::{InProcess, Remote, Transport};
pub use error::{CliError, Result};

/// Runs one invocation and returns the process exit code.
pub fn run(argv: &[String], out: &mut dyn Write, err: &mut dyn Write) -> i32 {
    let cli = match Cli::try_parse_from(argv) {
        Ok(c) => c,
        Err(e) => {
            // Help and version requests are not errors.
            if e.use_stderr() {
                let _ = write!(err, "{e}");
                return 2;
            }
            let _ = write!(out, "{e}");
            return 0;
        }
    };
    match execute(cli, out, err) {
        Ok(()) => 0,
        Err(e) => {
            let _ = writeln!(err, "error: {e}");
            e.exit_code()
        }
    }
}

fn config(cli: &Cli) -> Result<EngineConfig> {
    let mut cfg = match &cli.config {
        Some(path) => EngineConfig::load(path)?,
        None => EngineConfig::default(),
    }
    .with_env();
    if cli.redo_log.is_some() {
        cfg.redo_log = cli.redo_log.clone();
    }
    Ok(cfg)
}

fn root(cfg: EngineConfig) -> Result<Root> {
    Ok(if cfg.workers.is_empty() { Root::in_process(cfg)?.root } else { Root::connect(cfg)? })
}

fn execute(cli: Cli, out: &mut dyn Write, err: &mut dyn Write) -> Result<()> {
    match &cli.command {
        Command::Bench(b) => return bench(b, out),
        Command::Verify(v) => return verify(v, out, err),
        Command::Serve { bind, workers } => {
            let mut cfg = config(&cli)?;
            if !workers.is_empty() {
                cfg.workers = workers.clone();
            }
            let bind = bind.clone().unwrap_or_else(|| cfg.bind.clone());
            let handle = vizketch_server::serve(Service::new(root(cfg)?), &bind)?;
            let addr = handle.addr();
            writeln!(out, "{}", serde_json::json!({ "listening": format!("http://{addr}"), "ws": format!("ws://{addr}/ws") }))?;
            out.flush()?;
            handle.wait();
            return Ok(());
        }
        Command::Workers { bind, first, of } => {
            let cfg = config(&cli)?;
            let total = of.unwrap_or(first + bind.len());
            let mut servers = Vec::new();
            for (i, b) in bind.iter().enumerate() {
                let s = WorkerServer::start(Arc::new(LocalWorker::new(first + i, total, &cfg)), b)?;
                writeln!(out, "{}", serde_json::json!({ "worker": first + i, "addr": s.addr().to_string() }))?;
                servers.push(s);
            }
            out.flush()?;
            for s in servers {
                s.join();
            }
            return Ok(());
        }
        _ => {}
    }

    let service = match &cli.server {
        Some(_) => None,
        None => Some(Service::new(root(config(&cli)?)?)),
    };
    let mut t: Box<dyn Transport> = match (&cli.server, &service) {
        (Some(url), _) => Box::new(Remote::connect(url)?),
        (None, Some(s)) => Box::new(InProcess::new(s.clone())),
        (None, None) => unreachable!(),
    };
    let mut c = Client { t: t.as_mut(), out, err, progress: cli.progress };
    match &cli.command {
        Command::Load(a) => {
            let dataset = c.registered(ClientMessage::Register { source: request::source(a) })?;
            c.reply(ClientMessage::ListSchema { dataset })?;
        }
        Command::Schema(a) => {
            c.reply(ClientMessage::ListSchema { dataset: a.dataset.clone() })?;
        }
        Command::Derive(a) => {
            c.registered(request::derive(a)?)?;
        }
        command => {
            let (kind, q) = request::kind(command)?.expect("query subcommand");
            let req = request::request(kind, q)?;
            let dataset = match (&q.dataset, &q.source) {
                (Some(d), _) => d.clone(),
                (None, Some(glob)) => c.registered(ClientMessage::Register { source: vizketch_engine::Source::new(glob.clone()) })?,
                (None, None) => return Err(CliError::Usage("give --dataset or --source".into())),
            };
            if q.raw {
                let service = service.as_ref().ok_or_else(|| CliError::Usage("--raw needs the in-process service".into()))?;
                return raw(service, &dataset, req, c.out);
            }
            c.query(dataset, req, q)?;
        }
    }
    Ok(())
}

struct Client<'a> {
    t: &'a mut dyn Transport,
    out: &'a mut dyn Write,
    err: &'a mut dyn Write,
    progress: bool,
}

impl Client<'_> {
    fn print(&mut self, m: &ServerMessage) -> Result<()> {
        writeln!(self.out, "{}", encode(m))?;
        Ok(())
    }

    fn fail(m: &ServerMessage) -> Result<()> {
        match m {
            ServerMessage::Error { code, detail, .. } => Err(CliError::from_reply(code, detail)),
            _ => Ok(()),
        }
    }

    /// Sends a message answered by exactly one reply and prints it.
    fn reply(&mut self, m: ClientMessage) -> Result<ServerMessage> {
        self.t.send(m)?;
        let r = self.t.recv(None)?.expect("no deadline");
        self.print(&r)?;
        Self::fail(&r)?;
        Ok(r)
    }

    fn registered(&mut self, m: ClientMessage) -> Result<String> {
        match self.reply(m)? {
            ServerMessage::Registered { dataset } => Ok(dataset.id),
            other => Err(CliError::Protocol(format!("expected registered, got {}", encode(&other)))),
        }
    }

    /// Streams one execution. The final payload and the terminal message go
    /// to standard output; earlier partials to standard error with
    /// `--progress`.
    fn query(&mut self, dataset: String, request: SketchRequest, q: &QueryArgs) -> Result<()> {
        self.t.send(ClientMessage::Query { tag: Some("cli".into()), dataset, request })?;
        let mut deadline = None;
        let mut execution = None;
        let mut last: Option<ServerMessage> = None;
        loop {
            let Some(m) = self.t.recv(deadline)? else {
                if let Some(id) = execution {
                    self.t.send(ClientMessage::Cancel { execution: id })?;
                }
                deadline = None;
                continue;
            };
            match &m {
                ServerMessage::Started { execution: id, .. } => {
                    execution = Some(*id);
                    deadline = q.cancel_after.map(|ms| Instant::now() + Duration::from_millis(ms));
                    self.print(&m)?;
                }
                ServerMessage::Partial { .. } => {
                    if let (true, Some(prev)) = (self.progress, last.take()) {
                        writeln!(self.err, "{}", encode(&prev))?;
                    }
                    last = Some(m);
                }
                ServerMessage::Done { .. } => {
                    if let Some(p) = last.take() {
                        self.print(&p)?;
                    }
                    return self.print(&m);
                }
                ServerMessage::Cancelled { .. } | ServerMessage::Error { .. } => {
                    if let (true, Some(prev)) = (self.progress, last.take()) {
                        writeln!(self.err, "{}", encode(&prev))?;
                    }
                    self.print(&m)?;
                    return Self::fail(&m);
                }
                _ => {}
            }
        }
    }
}

/// Runs the request on the in-process root and prints the merged summary.
fn raw(service: &Service, dataset: &str, req: SketchRequest, out: &mut dyn Write) -> Result<()> {
    let result = service.root.query(dataset, req)?.wait()?;
    let json = serde_json::json!({
        "execution": result.execution.id,
        "seed": result.execution.seed,
        "request": &*result.request,
        "summary": result.summary,
    });
    writeln!(out, "{json}")?;
    Ok(())
}

fn thread_counts(text: &str) -> Result<Vec<usize>> {
    let bad = || CliError::Usage(format!("--threads expects `A..B` or a list, got `{text}`"));
    let counts: Vec<usize> = match text.split_once("..") {
        Some((a, b)) => (a.parse().map_err(|_| bad())?..=b.parse().map_err(|_| bad())?).collect(),
        None => text.split(',').map(|t| t.trim().parse().map_err(|_| bad())).collect::<Result<_>>()?,
    };
    if counts.is_empty() || counts.contains(&0) {
        return Err(bad());
    }
    Ok(counts)
}

fn bench(b: &BenchArgs, out: &mut dyn Write) -> Result<()> {
    let kind = match b.sketch {
        BenchSketch::HistExact => SketchKind::HistogramExact,
        BenchSketch::Hist => SketchKind::Histogram,
    };
    let mut first = None;
    for threads in thread_counts(&b.threads)? {
        let ms = vizketch_verify::system::scaled_latency(threads, b.rows, kind, b.seed).as_secs_f64() * 1e3;
        let base = *first.get_or_insert(ms);
        writeln!(
            out,
            "{}",
            serde_json::json!({
                "sketch": kind.name(),
                "threads": threads,
                "rows": threads * b.rows,
                "median_ms": ms,
                "relative": ms / base,
            })
        )?;
        out.flush()?;
    }
    Ok(())
}

fn verify(v: &VerifyArgs, out: &mut dyn Write, err: &mut dyn Write) -> Result<()> {
    let known: Vec<&str> = vizketch_verify::criteria().iter().map(|c| c.suite).collect();
    if let Some(s) = &v.suite {
        if !known.contains(&s.as_str()) {
            return Err(CliError::Usage(format!("unknown suite `{s}`; one of {}", known.join(", "))));
        }
    }
    let outcomes = vizketch_verify::run(v.seed, v.suite.as_deref(), v.trials, |_| {});
    for o in &outcomes {
        writeln!(out, "{}", serde_json::to_string(o).expect("outcomes serialize"))?;
        writeln!(err, "{o}")?;
    }
    match outcomes.iter().filter(|o| !o.passed).count() {
        0 => Ok(()),
        n => Err(CliError::Failed(n)),
    }
}
