use std::net::{TcpListener, TcpStream};
use std::path::{Path, PathBuf};
use std::process::{Child, Command, Output};
use std::time::{Duration, Instant};

use serde_json::{json, Value};

fn demo(file: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../data/demo").join(file)
}

fn semscope(workspace: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_semscope"))
        .arg("--workspace")
        .arg(workspace)
        .args(args)
        .env("RUST_LOG", "warn")
        .output()
        .unwrap()
}

fn stdout(o: &Output) -> String {
    assert!(o.status.success(), "stderr: {}", String::from_utf8_lossy(&o.stderr));
    String::from_utf8(o.stdout.clone()).unwrap()
}

struct Serve(Child);

impl Drop for Serve {
    fn drop(&mut self) {
        let _ = self.0.kill();
        let _ = self.0.wait();
    }
}

fn serve(workspace: &Path) -> (Serve, String) {
    let port = TcpListener::bind("127.0.0.1:0").unwrap().local_addr().unwrap().port();
    let addr = format!("127.0.0.1:{port}");
    let child = Command::new(env!("CARGO_BIN_EXE_semscope"))
        .arg("--workspace")
        .arg(workspace)
        .args(["serve", "--addr", &addr])
        .env("RUST_LOG", "warn")
        .spawn()
        .unwrap();
    let guard = Serve(child);
    let start = Instant::now();
    while TcpStream::connect(&addr).is_err() {
        assert!(start.elapsed() < Duration::from_secs(20), "service did not start");
        std::thread::sleep(Duration::from_millis(50));
    }
    (guard, format!("http://{addr}"))
}

#[test]
fn ingest_stores_a_corpus() {
    let dir = tempfile::tempdir().unwrap();
    let out = semscope(
        dir.path(),
        &["ingest", "--articles", demo("articles.csv").to_str().unwrap(), "--citations", demo("citations.csv").to_str().unwrap()],
    );
    let text = stdout(&out);
    assert!(text.starts_with("articles: 60 articles, 342 citation records"), "{text}");
    let stored: Value = serde_json::from_slice(&std::fs::read(dir.path().join("corpora/articles.json")).unwrap()).unwrap();
    assert_eq!(stored["articles"].as_object().unwrap().len(), 60);
}

#[test]
fn ingest_rejects_bad_input() {
    let dir = tempfile::tempdir().unwrap();
    let bad = dir.path().join("bad.csv");
    std::fs::write(
        &bad,
        "id,year,language,keywords,authoring_countries,studied_countries,abstract,fulltext_ref\nx,20xx,fr,a,FR,,,\n",
    )
    .unwrap();
    let out = semscope(dir.path(), &["ingest", "--articles", bad.to_str().unwrap()]);
    assert!(!out.status.success());
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(err.contains("year"), "{err}");
}

#[test]
fn run_list_and_export_through_the_service() {
    let dir = tempfile::tempdir().unwrap();
    let ws = dir.path();
    stdout(&semscope(
        ws,
        &["ingest", "--name", "demo", "--articles", demo("articles.csv").to_str().unwrap(), "--citations", demo("citations.csv").to_str().unwrap()],
    ));
    let config = ws.join("fast.json");
    let fast = json!({
        "topics": {"candidates": [2, 3], "replications": 2, "lda": {"iterations": 80, "burn_in": 40, "thin": 10}},
        "complementarity": {"bootstrap_reps": 100, "threshold_count": 6}
    });
    std::fs::write(&config, fast.to_string()).unwrap();
    let (_server, url) = serve(ws);

    let run = |seed: &str| semscope(ws, &["--server", &url, "--config", config.to_str().unwrap(), "--seed", seed, "run", "demo"]);
    let sid = stdout(&run("7")).trim().to_string();
    assert_eq!(sid.len(), 64);
    assert_eq!(stdout(&run("7")).trim(), sid);
    let other = stdout(&run("8")).trim().to_string();
    assert_ne!(other, sid);

    let listed = stdout(&semscope(ws, &["--server", &url, "list-snapshots"]));
    assert!(listed.contains(&sid) && listed.contains(&other), "{listed}");

    let file = ws.join("stats.json");
    stdout(&semscope(ws, &["--server", &url, "export", &sid, "corpus/stats", "-o", file.to_str().unwrap()]));
    let stats: Value = serde_json::from_slice(&std::fs::read(&file).unwrap()).unwrap();
    assert_eq!(stats["data"]["article_count"], 60);
    assert_eq!(stats["config"]["seed"], 7);

    let clusters = stdout(&semscope(
        ws,
        &["--server", &url, "export", &sid, "countries/clusters", "-p", "method=topics", "-p", "k=3"],
    ));
    let clusters: Value = serde_json::from_str(&clusters).unwrap();
    assert_eq!(clusters["data"]["k"], 3);

    let bad = semscope(ws, &["--server", &url, "export", &sid, "countries/clusters", "-p", "method"]);
    assert!(!bad.status.success());
    let missing = semscope(ws, &["--server", &url, "export", "0000", "corpus/stats"]);
    assert!(!missing.status.success());
    assert!(String::from_utf8_lossy(&missing.stderr).contains("404"));
}
