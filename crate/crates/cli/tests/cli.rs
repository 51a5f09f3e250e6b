use std::fmt::Write as _;
use std::path::Path;

use clap::Parser;
use serde_json::Value;
use vizketch_cli::args::Cli;
use vizketch_core::SketchKind;
use vizketch_engine::{EngineConfig, LineageOp, Root, Source};
use vizketch_server::{ClientMessage, Service};

struct Output {
    code: i32,
    lines: Vec<Value>,
    stderr: String,
}

fn vizketch(args: &[&str]) -> Output {
    let argv: Vec<String> = std::iter::once("vizketch").chain(args.iter().copied()).map(String::from).collect();
    let (mut out, mut err) = (Vec::new(), Vec::new());
    let code = vizketch_cli::run(&argv, &mut out, &mut err);
    let lines = String::from_utf8(out)
        .unwrap()
        .lines()
        .map(|l| serde_json::from_str(l).unwrap_or_else(|_| Value::String(l.to_owned())))
        .collect();
    Output { code, lines, stderr: String::from_utf8(err).unwrap() }
}

fn types(o: &Output) -> Vec<&str> {
    o.lines.iter().map(|l| l["type"].as_str().unwrap_or("")).collect()
}

fn write_data(dir: &Path, rows: usize) -> String {
    for s in 0..2 {
        let mut text = String::from("delay,carrier\n");
        for i in 0..rows {
            let v = (i * 37 + s * 11) % 1000;
            writeln!(text, "{}.5,{}", v, ["AA", "UA", "DL"][(i + s) % 3]).unwrap();
        }
        std::fs::write(dir.join(format!("part-{s}.csv")), text).unwrap();
    }
    format!("{}/*.csv", dir.display())
}

/// A command line that produces each client message.
fn command_for(m: &ClientMessage) -> Vec<&'static str> {
    match m {
        ClientMessage::Register { .. } => vec!["load", "GLOB"],
        ClientMessage::Derive { .. } => vec!["derive", "--dataset", "d1", "--filter", "delay > 10"],
        ClientMessage::Query { .. } => vec!["moments", "--dataset", "d1", "--col", "delay"],
        ClientMessage::Cancel { .. } => vec!["hist", "--dataset", "d1", "--col", "delay", "--cancel-after", "0"],
        ClientMessage::ListSchema { .. } => vec!["schema", "--dataset", "d1"],
    }
}

/// A command line that queries each sketch kind.
fn command_for_kind(k: SketchKind) -> Vec<&'static str> {
    let mut argv = match k {
        SketchKind::Moments => vec!["moments"],
        SketchKind::Cdf => vec!["cdf"],
        SketchKind::Histogram => vec!["hist"],
        SketchKind::HistogramExact => vec!["hist", "--exact"],
        SketchKind::Stacked => vec!["stacked"],
        SketchKind::NormalizedStacked => vec!["stacked", "--normalized"],
        SketchKind::Heatmap => vec!["heatmap"],
        SketchKind::Trellis => vec!["trellis"],
        SketchKind::NextItems => vec!["tail"],
        SketchKind::Quantile => vec!["scroll"],
        SketchKind::FindText => vec!["find"],
        SketchKind::HeavyHittersMg => vec!["heavy", "--mg"],
        SketchKind::HeavyHittersSampled => vec!["heavy"],
        SketchKind::DistinctCount => vec!["distinct"],
        SketchKind::StringQuantiles => vec!["query", "--kind", "string_quantiles"],
        SketchKind::Pca => vec!["pca"],
        SketchKind::SaveTable => vec!["save"],
    };
    argv.extend(["--dataset", "d1"]);
    argv
}

#[test]
fn every_sketch_kind_has_a_command() {
    for k in SketchKind::ALL {
        let argv = std::iter::once("vizketch").chain(command_for_kind(k));
        let cli = Cli::try_parse_from(argv).unwrap();
        let (kind, _) = vizketch_cli::request::kind(&cli.command).unwrap().unwrap();
        assert_eq!(kind, k);
    }
}

#[test]
fn every_client_message_is_reachable() {
    let dir = tempfile::tempdir().unwrap();
    let glob = write_data(dir.path(), 2_000);
    let log = dir.path().join("redo.log");
    let config = dir.path().join("config.json");
    // Small micropartitions so a cancelled histogram is still running.
    std::fs::write(&config, r#"{"micropartition_rows": 5, "threads": 1}"#).unwrap();
    let messages = [
        ClientMessage::Register { source: Source::new("") },
        ClientMessage::ListSchema { dataset: String::new() },
        ClientMessage::Derive { op: LineageOp::Filter { parent: String::new(), predicate: String::new() }, seed: 0 },
        ClientMessage::Query { tag: None, dataset: String::new(), request: Default::default() },
        ClientMessage::Cancel { execution: uuid::Uuid::nil() },
    ];
    let expected = [
        vec!["registered", "schema"],
        vec!["schema"],
        vec!["registered"],
        vec!["started", "partial", "done"],
        vec!["started", "cancelled"],
    ];
    for (m, want) in messages.iter().zip(expected) {
        let mut argv = vec!["--redo-log", log.to_str().unwrap(), "--config", config.to_str().unwrap()];
        argv.extend(command_for(m).into_iter().map(|a| if a == "GLOB" { glob.as_str() } else { a }));
        let o = vizketch(&argv);
        assert_eq!(o.code, 0, "{argv:?}: {}", o.stderr);
        assert_eq!(types(&o), want, "{argv:?}");
    }
}

#[test]
fn histogram_prints_the_rendered_payload() {
    let dir = tempfile::tempdir().unwrap();
    let glob = write_data(dir.path(), 500);
    let o = vizketch(&[
        "hist", "--source", &glob, "--col", "delay", "--buckets", "10", "--pixels", "200x100", "--delta", "0.05",
        "--x-range", "0:1000", "--seed", "5",
    ]);
    assert_eq!(o.code, 0, "{}", o.stderr);
    assert_eq!(types(&o), ["registered", "started", "partial", "done"]);
    assert_eq!(o.lines[1]["seed"], 5);
    let payload = &o.lines[2]["payload"];
    assert_eq!(payload["chart"], "histogram");
    let counts: Vec<u64> = payload["counts"].as_array().unwrap().iter().map(|c| c.as_u64().unwrap()).collect();
    let mut expected = vec![0u64; 10];
    for s in 0..2 {
        for i in 0..500 {
            expected[(i * 37 + s * 11) % 1000 / 100] += 1;
        }
    }
    assert_eq!(counts, expected);
    let max = *expected.iter().max().unwrap() as f64;
    let bars: Vec<u64> = payload["bars"].as_array().unwrap().iter().map(|b| b.as_u64().unwrap()).collect();
    assert_eq!(bars, expected.iter().map(|&c| (c as f64 * 100.0 / max).round() as u64).collect::<Vec<_>>());
}

#[test]
fn missing_seed_is_drawn_and_reported() {
    let dir = tempfile::tempdir().unwrap();
    let glob = write_data(dir.path(), 50);
    let a = vizketch(&["cdf", "--source", &glob, "--col", "delay"]);
    let b = vizketch(&["cdf", "--source", &glob, "--col", "delay"]);
    assert_eq!(a.code, 0);
    assert_ne!(a.lines[1]["seed"], b.lines[1]["seed"]);
}

#[test]
fn progress_goes_to_standard_error() {
    let dir = tempfile::tempdir().unwrap();
    let glob = write_data(dir.path(), 3_000);
    let config = dir.path().join("config.json");
    std::fs::write(&config, r#"{"micropartition_rows": 100, "threads": 1, "batch_interval_ms": 0}"#).unwrap();
    let o = vizketch(&["--progress", "--config", config.to_str().unwrap(), "hist", "--exact", "--source", &glob, "--col", "delay"]);
    assert_eq!(o.code, 0);
    assert_eq!(types(&o), ["registered", "started", "partial", "done"]);
    let partials: Vec<Value> = o.stderr.lines().map(|l| serde_json::from_str(l).unwrap()).collect();
    assert!(!partials.is_empty());
    assert!(partials.iter().all(|p| p["type"] == "partial" && p["progress"].as_f64().unwrap() < 1.0));
}

#[test]
fn exit_codes_distinguish_failures() {
    assert_eq!(vizketch(&["hist", "--no-such-flag"]).code, 2);
    assert_eq!(vizketch(&["frobnicate"]).code, 2);
    assert_eq!(vizketch(&["hist", "--dataset", "d1", "--pixels", "wide"]).code, 2);
    assert_eq!(vizketch(&["--help"]).code, 0);

    let o = vizketch(&["moments", "--dataset", "d9", "--col", "x"]);
    assert_eq!(o.code, 3);
    assert_eq!(o.lines[0]["code"], "UNKNOWN_DATASET");

    let dir = tempfile::tempdir().unwrap();
    let glob = write_data(dir.path(), 10);
    assert_eq!(vizketch(&["moments", "--source", &glob, "--col", "nope"]).code, 3);
    // Nothing listens on port 9 of localhost.
    assert_eq!(vizketch(&["--server", "ws://127.0.0.1:9/ws", "schema", "--dataset", "d1"]).code, 4);
    assert_eq!(vizketch(&["verify", "--suite", "nonsense"]).code, 2);
}

#[test]
fn server_mode_matches_in_process_mode() {
    let dir = tempfile::tempdir().unwrap();
    let glob = write_data(dir.path(), 400);
    let service = Service::new(Root::in_process(EngineConfig::default()).unwrap().root);
    let server = vizketch_server::serve(service, "127.0.0.1:0").unwrap();
    let url = format!("ws://{}/ws", server.addr());
    let args = ["stacked", "--source", glob.as_str(), "--col", "delay,carrier", "--seed", "8", "--sample-size", "300"];
    let remote = vizketch(&[&["--server", url.as_str()][..], &args[..]].concat());
    let local = vizketch(&args);
    assert_eq!(remote.code, 0, "{}", remote.stderr);
    assert_eq!(types(&remote), types(&local));
    assert_eq!(remote.lines[2]["payload"], local.lines[2]["payload"]);
    assert_eq!(
        vizketch(&["--server", url.as_str(), "moments", "--dataset", "d1", "--col", "delay", "--raw"]).code,
        2
    );
}

#[test]
fn raw_prints_the_merged_summary() {
    let dir = tempfile::tempdir().unwrap();
    let glob = write_data(dir.path(), 100);
    let o = vizketch(&["distinct", "--source", &glob, "--col", "carrier", "--raw"]);
    assert_eq!(o.code, 0, "{}", o.stderr);
    assert!(o.lines[1]["summary"].is_object());
    assert_eq!(o.lines[1]["request"]["kind"], "distinct_count");
}

#[test]
fn flags_override_a_request_given_as_json() {
    let cli = Cli::try_parse_from([
        "vizketch",
        "heatmap",
        "--dataset",
        "d1",
        "--request",
        r#"{"columns": ["a", "b"], "colors": 7, "seed": 3}"#,
        "--colors",
        "9",
        "--y-strings",
        "m,n",
        "--sort",
        "a:desc",
    ])
    .unwrap();
    let (kind, q) = vizketch_cli::request::kind(&cli.command).unwrap().unwrap();
    let r = vizketch_cli::request::request(kind, q).unwrap();
    assert_eq!(r.kind, SketchKind::Heatmap);
    assert_eq!(r.columns, ["a", "b"]);
    assert_eq!((r.colors, r.seed), (9, 3));
    assert_eq!(r.y.unwrap().count(), 2);
    assert!(!r.sort_order[0].ascending);
}

#[test]
fn verify_reports_each_criterion_as_json() {
    let o = vizketch(&["verify", "--suite", "distinct", "--seed", "4"]);
    assert_eq!(o.code, 0, "{}", o.stderr);
    assert_eq!(o.lines.len(), 1);
    assert_eq!(o.lines[0]["criterion"], "distinct count");
    assert_eq!(o.lines[0]["passed"], true);
}

#[test]
fn bench_prints_one_row_per_thread_count() {
    let o = vizketch(&["bench", "--sketch", "hist-exact", "--threads", "1..2", "--rows", "2000"]);
    assert_eq!(o.code, 0, "{}", o.stderr);
    let threads: Vec<u64> = o.lines.iter().map(|l| l["threads"].as_u64().unwrap()).collect();
    assert_eq!(threads, [1, 2]);
    assert_eq!(o.lines[0]["relative"], 1.0);
}
