use std::collections::BTreeMap;
use std::path::PathBuf;
use std::sync::OnceLock;

use reqwest::StatusCode;
use semscope_core::corpus::load_corpus;
use semscope_core::store::Workspace;
use semscope_core::{Article, Corpus, PipelineConfig};
use serde_json::{json, Value};

struct Server {
    base: String,
    demo_sid: String,
    keywords_only_sid: String,
}

fn demo_corpus() -> Corpus {
    let dir = PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../data/demo");
    load_corpus(&dir.join("articles.csv"), Some(&dir.join("citations.csv"))).unwrap()
}

fn fast_config() -> PipelineConfig {
    let mut config = PipelineConfig::default();
    config.topics.candidates = vec![2, 3, 4];
    config.topics.replications = 2;
    config.topics.lda.iterations = 120;
    config.topics.lda.burn_in = 60;
    config.topics.lda.thin = 10;
    config.complementarity.bootstrap_reps = 200;
    config.complementarity.threshold_count = 8;
    config
}

fn keywords_only() -> Value {
    let article = |id: &str, keywords: &[&str], country: &str| Article {
        id: id.into(),
        year: 2001,
        language: "en".into(),
        keywords: keywords.iter().map(|k| k.to_string()).collect(),
        authoring_countries: vec![country.into()],
        studied_countries: vec![country.into()],
        abstract_text: None,
        fulltext_ref: None,
    };
    let articles = vec![
        article("a", &["city", "growth"], "FR"),
        article("b", &["city", "network"], "DE"),
        article("c", &["growth", "network"], "FR"),
    ];
    serde_json::to_value(Corpus::new(articles, vec![], BTreeMap::new(), Default::default()).unwrap()).unwrap()
}

/// One server per test binary, on an ephemeral port, with two snapshots:
/// the demo corpus and a keywords-only corpus.
fn server() -> &'static Server {
    static SERVER: OnceLock<Server> = OnceLock::new();
    SERVER.get_or_init(|| {
        let root = tempfile::tempdir().unwrap().keep();
        let ws = Workspace::open(&root).unwrap();
        ws.save_corpus("demo", &demo_corpus()).unwrap();
        let (tx, rx) = std::sync::mpsc::channel();
        std::thread::spawn(move || {
            let rt = tokio::runtime::Runtime::new().unwrap();
            rt.block_on(async move {
                let listener = tokio::net::TcpListener::bind("127.0.0.1:0").await.unwrap();
                let base = format!("http://{}", listener.local_addr().unwrap());
                let server = tokio::spawn(semscope_service::serve(listener, ws, std::future::pending()));
                let http = reqwest::Client::new();
                let mut sids = Vec::new();
                for body in [
                    json!({"corpus_name": "demo", "config": fast_config()}),
                    json!({"corpus": keywords_only(), "config": fast_config()}),
                ] {
                    let response = http.post(format!("{base}/runs")).json(&body).send().await.unwrap();
                    assert_eq!(response.status(), StatusCode::CREATED);
                    let created: Value = response.json().await.unwrap();
                    sids.push(created["snapshot_id"].as_str().unwrap().to_string());
                }
                tx.send((base, sids)).unwrap();
                server.await.unwrap().unwrap();
            });
        });
        let (base, sids) = rx.recv().unwrap();
        let [demo_sid, keywords_only_sid]: [String; 2] = sids.try_into().unwrap();
        Server {
            base,
            demo_sid,
            keywords_only_sid,
        }
    })
}

async fn get(path: &str) -> (StatusCode, Value) {
    let response = reqwest::get(format!("{}{path}", server().base)).await.unwrap();
    let status = response.status();
    (status, response.json().await.unwrap())
}

async fn post(body: Value) -> (StatusCode, Value) {
    let response = reqwest::Client::new()
        .post(format!("{}/runs", server().base))
        .json(&body)
        .send()
        .await
        .unwrap();
    let status = response.status();
    (status, response.json().await.unwrap())
}

#[tokio::test]
async fn health() {
    let (status, body) = get("/health").await;
    assert_eq!(status, StatusCode::OK);
    assert_eq!(body["status"], "ok");
}

#[tokio::test]
async fn snapshots_are_listed() {
    let s = server();
    let (status, body) = get("/snapshots").await;
    assert_eq!(status, StatusCode::OK);
    let ids: Vec<&str> = body["snapshots"].as_array().unwrap().iter().map(|m| m["snapshot_id"].as_str().unwrap()).collect();
    assert!(ids.contains(&s.demo_sid.as_str()));
    assert!(ids.contains(&s.keywords_only_sid.as_str()));
}

#[tokio::test]
async fn repeated_run_is_not_recomputed() {
    let s = server();
    let (status, body) = post(json!({"corpus_name": "demo", "config": fast_config()})).await;
    assert_eq!(status, StatusCode::OK);
    assert_eq!(body["created"], false);
    assert_eq!(body["snapshot_id"], s.demo_sid.as_str());
}

#[tokio::test]
async fn new_run_is_created() {
    let mut config = fast_config();
    config.seed = 99;
    let (status, body) = post(json!({"corpus": keywords_only(), "config": config})).await;
    assert_eq!(status, StatusCode::CREATED);
    assert_eq!(body["created"], true);
    assert_eq!(body["meta"]["modules"]["citations"].as_str().unwrap().split(':').next(), Some("skipped"));
}

#[tokio::test]
async fn run_request_errors() {
    let mut empty = keywords_only();
    empty["articles"] = json!({});
    let cases = [
        (json!({}), StatusCode::BAD_REQUEST),
        (json!({"corpus": keywords_only(), "corpus_name": "demo"}), StatusCode::BAD_REQUEST),
        (json!({"corpus_name": "../etc"}), StatusCode::BAD_REQUEST),
        (json!({"corpus_name": "absent"}), StatusCode::NOT_FOUND),
        (json!({"corpus": {"articles": []}}), StatusCode::UNPROCESSABLE_ENTITY),
        (json!({"corpus": empty}), StatusCode::UNPROCESSABLE_ENTITY),
        (json!({"corpus": keywords_only(), "config": {"complementarity": {"shuffle_fraction": 2.0}}}), StatusCode::BAD_REQUEST),
    ];
    for (body, expected) in cases {
        let (status, response) = post(body.clone()).await;
        assert_eq!(status, expected, "{body} -> {response}");
        assert!(response["error"].is_string());
    }
}

#[tokio::test]
async fn every_resource_answers() {
    let s = server();
    let sid = &s.demo_sid;
    let (_, wordclouds) = get(&format!("/{sid}/networks/citations")).await;
    assert_eq!(wordclouds["status"], "ok");
    let (_, keywords) = get(&format!("/{sid}/networks/keywords")).await;
    let keyword = keywords["data"]["nodes"][0]["keyword"].as_str().unwrap().to_string();
    let (_, corpus) = get(&format!("/{sid}/corpus/stats")).await;
    assert_eq!(corpus["data"]["article_count"], 60);
    let paths = [
        "corpus/stats".to_string(),
        "geo/flows".into(),
        "networks/keywords".into(),
        format!("networks/keywords/field/{keyword}"),
        "networks/citations".into(),
        "topics".into(),
        "topics/evolution".into(),
        "topics/evolution?threshold=0.4".into(),
        "countries/clusters?method=keywords".into(),
        "countries/clusters?method=citations&allocation=authoring&k=2".into(),
        "complementarity/flows?a=keywords&b=topics".into(),
        "complementarity/correlations?a=topics&b=citations".into(),
        "complementarity/modularity?a=citations&b=keywords".into(),
    ];
    for path in paths {
        let (status, body) = get(&format!("/{sid}/{path}")).await;
        assert_eq!(status, StatusCode::OK, "{path}: {body}");
        assert_eq!(body["status"], "ok", "{path}");
        assert_eq!(body["snapshot_id"], sid.as_str());
        assert!(body["config"].is_object());
        assert!(!body["data"].is_null(), "{path}");
    }
    let mut clouds = 0;
    for i in 0..60 {
        let (status, body) = get(&format!("/{sid}/articles/cg{i:03}/wordcloud")).await;
        if status == StatusCode::OK {
            clouds += 1;
            assert!(body["data"]["words"].is_array());
        } else {
            assert_eq!(body["kind"], "unknown_resource");
        }
    }
    assert!(clouds > 0);
}

#[tokio::test]
async fn skipped_modules_are_not_computed() {
    let sid = &server().keywords_only_sid;
    for path in [
        "networks/citations",
        "topics",
        "topics/evolution?threshold=0.2",
        "countries/clusters?method=topics",
        "complementarity/flows?a=keywords&b=citations",
        "articles/a/wordcloud",
    ] {
        let (status, body) = get(&format!("/{sid}/{path}")).await;
        assert_eq!(status, StatusCode::OK, "{path}");
        assert_eq!(body["status"], "not_computed", "{path}");
        assert!(body["reason"].is_string());
    }
    let (_, body) = get(&format!("/{sid}/networks/keywords")).await;
    assert_eq!(body["status"], "ok");
}

#[tokio::test]
async fn error_statuses() {
    let sid = &server().demo_sid;
    let cases = [
        ("/0123abcd/corpus/stats".to_string(), StatusCode::NOT_FOUND, "snapshot_not_found"),
        (format!("/{sid}/nothing/here"), StatusCode::NOT_FOUND, "unknown_resource"),
        (format!("/{sid}/articles/zzz/wordcloud"), StatusCode::NOT_FOUND, "unknown_resource"),
        (format!("/{sid}/networks/keywords/field/qqqq"), StatusCode::NOT_FOUND, "unknown_keyword"),
        (format!("/{sid}/topics/evolution?threshold=7"), StatusCode::BAD_REQUEST, "invalid_parameter"),
        (format!("/{sid}/countries/clusters?method=keywords&k=0"), StatusCode::BAD_REQUEST, "invalid_parameter"),
        (format!("/{sid}/complementarity/flows?a=keywords"), StatusCode::BAD_REQUEST, "invalid_parameter"),
        ("/nothing".to_string(), StatusCode::NOT_FOUND, "unknown_resource"),
    ];
    for (path, status, kind) in cases {
        let (got, body) = get(&path).await;
        assert_eq!(got, status, "{path}: {body}");
        assert_eq!(body["kind"], kind, "{path}");
    }
    let (_, body) = get(&format!("/{sid}/networks/keywords/field/urbn")).await;
    assert!(body["suggestions"].is_array());
}
