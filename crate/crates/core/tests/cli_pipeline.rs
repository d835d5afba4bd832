use std::fs;
use std::io::{Read, Write};
use std::net::{TcpListener, TcpStream};
use std::path::Path;
use std::process::{Command, Output, Stdio};
use std::thread::sleep;
use std::time::{Duration, Instant};

use serde_json::Value;

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_honeysheets"))
}

fn run_in(dir: &Path, args: &[&str]) -> Output {
    let out = bin().current_dir(dir).args(args).output().unwrap();
    assert!(
        out.status.success(),
        "{args:?} failed with {:?}\nstderr: {}",
        out.status.code(),
        String::from_utf8_lossy(&out.stderr)
    );
    out
}

fn read_json(path: &Path) -> Value {
    serde_json::from_str(&fs::read_to_string(path).unwrap()).unwrap()
}

const COUNTRIES: &[&str] = &[
    "AR", "AT", "AU", "BE", "BG", "BR", "CA", "CH", "CL", "CN", "CO", "CZ", "DE", "DK", "EG", "ES", "FI", "FR", "GB", "GR",
    "HK", "HU", "ID", "IE", "IL", "IN", "IT", "JP", "KR", "MX", "MY", "NG", "NL", "NO", "NZ", "PH", "PL", "PT", "RO", "RU",
];

#[test]
fn full_pipeline() {
    let tmp = tempfile::tempdir().unwrap();
    let dir = tmp.path();
    let mut geo = String::from("cidr,country\n");
    for (i, c) in COUNTRIES.iter().enumerate() {
        geo.push_str(&format!("{}.{}.0.0/16,{c}\n", 30 + i, i));
    }
    fs::write(dir.join("geo.csv"), geo).unwrap();
    fs::write(
        dir.join("config.json"),
        r#"{"controlled_domain": "pay.example.net", "mailbox_dir": "mailbox", "log_path": "access.log",
            "geo_table_path": "geo.csv", "seed": 42}"#,
    )
    .unwrap();
    fs::write(
        dir.join("targets.json"),
        r#"{"opens": 165, "modifications": 28, "clicks": 174, "controlled_visits": 44, "unique_ips": 39, "countries": 35,
            "phases": [
              {"name": "hacker", "start": "2016-01-23T00:00:00.000Z", "end": "2016-03-09T00:00:00.000Z", "opens": 112, "modifications": 17},
              {"name": "naive", "start": "2016-03-09T00:00:00.000Z", "end": "2016-04-04T00:00:00.000Z", "opens": 53, "modifications": 11}]}"#,
    )
    .unwrap();
    fs::write(
        dir.join("bounds.json"),
        r#"[{"name": "hacker", "start": "2016-01-23T00:00:00.000Z", "end": "2016-03-09T00:00:00.000Z"},
            {"name": "naive", "start": "2016-03-09T00:00:00.000Z", "end": "2016-04-04T00:00:00.000Z"}]"#,
    )
    .unwrap();

    let cfg = ["--config", "config.json"];
    let with = |args: &[&str]| -> Vec<String> { cfg.iter().chain(args).map(|s| s.to_string()).collect() };
    let go = |args: &[&str]| {
        let v = with(args);
        run_in(dir, &v.iter().map(String::as_str).collect::<Vec<_>>())
    };

    let gen = go(&["gen", "--count", "5", "--registry", "registry.json", "--out", "sheets.json"]);
    assert!(gen.stdout.is_empty(), "gen writes data to files only");
    assert_eq!(read_json(&dir.join("sheets.json")).as_array().unwrap().len(), 5);
    assert_eq!(read_json(&dir.join("registry.json"))["links"].as_array().unwrap().len(), 45);

    go(&["simulate", "--sheets", "sheets.json", "--registry", "registry.json", "--targets", "targets.json", "--days", "72",
         "--out", "trace.json", "--truth", "truth.json"]);
    go(&["replay", "--trace", "trace.json", "--sheets", "sheets.json", "--registry", "registry.json", "--sheets-out", "after.json"]);
    go(&["ingest", "--out", "timeline.json"]);
    go(&["report", "--timeline", "timeline.json", "--bounds", "bounds.json", "--registry", "registry.json",
         "--truth", "truth.json", "--out", "out"]);

    let report = read_json(&dir.join("out/report.json"));
    let total = &report["total"];
    assert_eq!(total["open_count"], 165);
    assert_eq!(total["modification_count"], 28);
    assert_eq!(total["click_count"], 174);
    assert_eq!(total["controlled_link_visit_count"], 44);
    assert_eq!(total["unique_ip_count"], 39);
    assert_eq!(total["distinct_country_count"], 35);
    assert_eq!(report["experiments"][0]["open_count"], 112);
    assert_eq!(report["experiments"][1]["modification_count"], 11);
    assert_eq!(report["ground_truth"]["visits"], 165);
    let csv = fs::read_to_string(dir.join("out/countries.csv")).unwrap();
    assert_eq!(csv.lines().next(), Some("country,count"));
    assert_eq!(csv.lines().count(), 36);

    go(&["leak", "--theme", "hacker", "--days", "46", "--sheets", "sheets.json", "--out", "posts"]);
    let posts = fs::read_dir(dir.join("posts")).unwrap().filter(|e| e.as_ref().unwrap().path().extension().unwrap() == "txt").count();
    assert_eq!(posts, 92);
    assert_eq!(read_json(&dir.join("posts/schedule.json")).as_array().unwrap().len(), 92);

    let sheets = read_json(&dir.join("sheets.json"));
    let mut before = sheets[0].clone();
    fs::write(dir.join("before.json"), before.to_string()).unwrap();
    before["column_widths"][0] = Value::from(321);
    fs::write(dir.join("wider.json"), before.to_string()).unwrap();
    let out = go(&["diff", "--before", "before.json", "--after", "wider.json", "--out", "cs.json"]);
    assert_eq!(String::from_utf8_lossy(&out.stdout).trim(), "layout_only");
    assert_eq!(read_json(&dir.join("cs.json"))["layout_changes"][0]["new_width"], 321);
}

#[test]
fn exit_codes() {
    let tmp = tempfile::tempdir().unwrap();
    let code = |args: &[&str]| bin().current_dir(tmp.path()).args(args).output().unwrap().status.code();
    assert_eq!(code(&["report", "--help"]), Some(0));
    assert_eq!(code(&["nosuch"]), Some(1));
    assert_eq!(code(&["gen"]), Some(1));
    assert_eq!(code(&["ingest", "--mailbox", "m", "--out", "t.json", "--config", "missing.json"]), Some(2));
    assert_eq!(code(&["gen", "--links", "3", "--controlled", "4", "--out", "s.json"]), Some(1), "more controlled slots than links");
    let out = bin().current_dir(tmp.path()).args(["diff", "--before", "a", "--after", "b", "--out", "c"]).output().unwrap();
    assert_eq!(out.status.code(), Some(2));
    assert!(out.stdout.is_empty());
    assert!(!out.stderr.is_empty());
}

#[test]
fn serve_redirects_and_logs() {
    let tmp = tempfile::tempdir().unwrap();
    let dir = tmp.path();
    run_in(dir, &["gen", "--registry", "registry.json", "--out", "sheet.json"]);
    let token = read_json(&dir.join("registry.json"))["links"][0]["token"].as_str().unwrap().to_string();
    let port = TcpListener::bind("127.0.0.1:0").unwrap().local_addr().unwrap().port();
    let bind = format!("127.0.0.1:{port}");
    let mut child = bin()
        .current_dir(dir)
        .args(["serve", "--registry", "registry.json", "--log", "access.log", "--redirect", "https://example.org/", "--bind", &bind])
        .stdout(Stdio::null())
        .stderr(Stdio::null())
        .spawn()
        .unwrap();
    let deadline = Instant::now() + Duration::from_secs(10);
    let mut stream = loop {
        match TcpStream::connect(&bind) {
            Ok(s) => break s,
            Err(_) if Instant::now() < deadline => sleep(Duration::from_millis(50)),
            Err(e) => panic!("server never came up: {e}"),
        }
    };
    write!(stream, "GET /t/{token} HTTP/1.1\r\nHost: x\r\nConnection: close\r\n\r\n").unwrap();
    let mut response = String::new();
    stream.read_to_string(&mut response).unwrap();
    child.kill().unwrap();
    child.wait().unwrap();
    assert!(response.starts_with("HTTP/1.1 302"), "{response}");
    assert!(response.to_ascii_lowercase().contains("location: https://example.org/"));
    let log = fs::read_to_string(dir.join("access.log")).unwrap();
    assert_eq!(log.lines().count(), 1);
    assert!(log.contains(&token));
}
