use std::io::{Read, Write};
use std::net::TcpStream;
use std::path::Path;
use std::process::{Child, Command, Output, Stdio};
use std::time::{Duration, Instant};

use evnet_core::netmodel::parse_json;

fn evnet(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_evnet"))
        .current_dir(dir)
        .args(args)
        .output()
        .unwrap()
}

fn ok(out: Output) -> String {
    assert!(
        out.status.success(),
        "exit {:?}\nstderr: {}",
        out.status,
        String::from_utf8_lossy(&out.stderr)
    );
    String::from_utf8(out.stdout).unwrap()
}

fn synth_and_run(dir: &Path) -> serde_json::Value {
    ok(evnet(dir, &["synth", "--dir", "data", "--docs", "120", "--seed", "3"]));
    let summary = ok(evnet(dir, &["--config", "data/pipeline.conf", "run"]));
    serde_json::from_str(&summary).unwrap()
}

#[test]
fn synth_run_analyze_export() {
    let tmp = tempfile::tempdir().unwrap();
    let dir = tmp.path();
    let summary = synth_and_run(dir);
    assert_eq!(summary["documents"], 120);
    assert!(dir.join("data/out/state.json").is_file());

    let conf = ["--config", "data/pipeline.conf"];
    let artifacts = evnet_core::pipeline::Artifacts::new(dir.join("data/out"));
    let slices: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(artifacts.events(0)).unwrap()).unwrap();
    let id = slices[0]["id"].as_str().unwrap().to_string();
    let compact = id.replace('/', "");

    let json = ok(evnet(dir, &[&conf[..], &["export", "--event", &compact]].concat()));
    let net = parse_json(&json).unwrap();
    assert_eq!(net.event_id, id);
    assert_eq!(json, std::fs::read_to_string(artifacts.network(&id)).unwrap());

    let pajek = ok(evnet(dir, &[&conf[..], &["export", "--event", &id, "--format", "pajek"]].concat()));
    assert!(pajek.starts_with(&format!("*Vertices {}", net.vertices.len())), "{pajek}");
    let dot = ok(evnet(dir, &[&conf[..], &["export", "--event", &id, "--format", "dot"]].concat()));
    assert!(dot.trim_start().starts_with("graph") || dot.trim_start().starts_with("strict graph"), "{dot}");
    ok(evnet(dir, &[&conf[..], &["export", "--event", &id, "--format", "graphml", "--out", "net.graphml"]].concat()));
    let graphml = std::fs::read_to_string(dir.join("net.graphml")).unwrap();
    assert!(graphml.contains("<graphml"));

    let filtered = ok(evnet(dir, &[&conf[..], &["analyze", "filter", "--event", &id, "--vtype", "PER"]].concat()));
    let f = parse_json(&filtered).unwrap();
    assert!(f.vertices.iter().all(|v| v.vtype.to_string() == "PER"));
    assert_eq!(f.params["analysis"], "filter");

    let out = evnet(dir, &[&conf[..], &["analyze", "ego", "--event", "t42/e00", "--center", "x"]].concat());
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).starts_with("error:"));
}

#[test]
fn resumed_run_reuses_stages() {
    let tmp = tempfile::tempdir().unwrap();
    let dir = tmp.path();
    synth_and_run(dir);
    let again: serde_json::Value =
        serde_json::from_str(&ok(evnet(dir, &["--config", "data/pipeline.conf", "run"]))).unwrap();
    assert_eq!(again["executed"], serde_json::json!(["ingest"]));
    let fresh: serde_json::Value =
        serde_json::from_str(&ok(evnet(dir, &["--config", "data/pipeline.conf", "--fresh", "run"]))).unwrap();
    assert_eq!(fresh["executed"].as_array().unwrap().len(), 6);
}

#[test]
fn invalid_configuration_creates_nothing() {
    let tmp = tempfile::tempdir().unwrap();
    let dir = tmp.path();
    ok(evnet(dir, &["synth", "--dir", "data", "--docs", "20"]));
    std::fs::remove_dir_all(dir.join("data/out")).ok();
    let out = evnet(dir, &["--config", "data/pipeline.conf", "--set", "step_months=0", "run"]);
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("step_months"));
    assert!(!dir.join("data/out").exists());

    let out = evnet(dir, &["--config", "data/pipeline.conf", "--set", "nonsense", "run"]);
    assert_eq!(out.status.code(), Some(1));
    assert!(!dir.join("data/out").exists());
}

struct Server(Child);

impl Drop for Server {
    fn drop(&mut self) {
        let _ = self.0.kill();
        let _ = self.0.wait();
    }
}

fn free_port() -> u16 {
    std::net::TcpListener::bind("127.0.0.1:0").unwrap().local_addr().unwrap().port()
}

fn raw_get(port: u16, path: &str) -> Option<String> {
    let mut s = TcpStream::connect(("127.0.0.1", port)).ok()?;
    s.set_read_timeout(Some(Duration::from_secs(10))).ok()?;
    write!(s, "GET {path} HTTP/1.1\r\nHost: localhost\r\nConnection: close\r\n\r\n").ok()?;
    let mut buf = String::new();
    s.read_to_string(&mut buf).ok()?;
    Some(buf)
}

#[test]
fn serve_reads_port_from_environment() {
    let tmp = tempfile::tempdir().unwrap();
    let dir = tmp.path();
    synth_and_run(dir);
    let port = free_port();
    let _server = Server(
        Command::new(env!("CARGO_BIN_EXE_evnet"))
            .current_dir(dir)
            .args(["--output", "data/out", "serve"])
            .env(evnet::cli::PORT_VAR, port.to_string())
            .stdout(Stdio::null())
            .stderr(Stdio::null())
            .spawn()
            .unwrap(),
    );
    let deadline = Instant::now() + Duration::from_secs(30);
    let reply = loop {
        if let Some(r) = raw_get(port, "/slices") {
            break r;
        }
        assert!(Instant::now() < deadline, "server did not come up on {port}");
        std::thread::sleep(Duration::from_millis(100));
    };
    assert!(reply.starts_with("HTTP/1.1 200"), "{reply}");
    assert!(reply.contains("\"documents\""));
    let missing = raw_get(port, "/events/t9e9/network").unwrap();
    assert!(missing.starts_with("HTTP/1.1 404"), "{missing}");
    assert!(missing.contains("\"not_found\""));
}

#[test]
fn port_precedence() {
    // The only test in this binary that touches the variable.
    std::env::remove_var(evnet::cli::PORT_VAR);
    assert_eq!(evnet::cli::port_from_env(None).unwrap(), 8080);
    std::env::set_var(evnet::cli::PORT_VAR, "9123");
    assert_eq!(evnet::cli::port_from_env(None).unwrap(), 9123);
    assert_eq!(evnet::cli::port_from_env(Some(7000)).unwrap(), 7000);
    std::env::set_var(evnet::cli::PORT_VAR, "http");
    assert!(evnet::cli::port_from_env(None).is_err());
    std::env::remove_var(evnet::cli::PORT_VAR);
}
