//! Thin HTTP client for the semscope service.

use std::collections::BTreeMap;

use reqwest::StatusCode;
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};
use url::Url;

use semscope_core::store::SnapshotMeta;
use semscope_core::{Corpus, PipelineConfig};

#[derive(Debug, thiserror::Error)]
pub enum ClientError {
    #[error("invalid service url: {0}")]
    Url(#[from] url::ParseError),
    #[error("request failed: {0}")]
    Transport(#[from] reqwest::Error),
    #[error("service answered {status}: {message}")]
    Api {
        status: StatusCode,
        message: String,
        body: Value,
    },
    #[error("unexpected response: {0}")]
    Decode(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, ClientError>;

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RunResponse {
    pub snapshot_id: String,
    pub created: bool,
    pub meta: SnapshotMeta,
}

#[derive(Debug, Clone)]
pub struct Client {
    base: Url,
    http: reqwest::Client,
}

impl Client {
    pub fn new(base: &str) -> Result<Self> {
        let mut base = Url::parse(base)?;
        if !base.path().ends_with('/') {
            let path = format!("{}/", base.path());
            base.set_path(&path);
        }
        Ok(Self {
            base,
            http: reqwest::Client::new(),
        })
    }

    pub fn base_url(&self) -> &Url {
        &self.base
    }

    fn url(&self, path: &str) -> Result<Url> {
        Ok(self.base.join(path.trim_start_matches('/'))?)
    }

    async fn decode<T: DeserializeOwned>(response: reqwest::Response) -> Result<T> {
        let status = response.status();
        let bytes = response.bytes().await?;
        if !status.is_success() {
            let body: Value = serde_json::from_slice(&bytes).unwrap_or_else(|_| json!(String::from_utf8_lossy(&bytes)));
            let message = body
                .get("error")
                .and_then(Value::as_str)
                .map(str::to_string)
                .unwrap_or_else(|| body.to_string());
            return Err(ClientError::Api { status, message, body });
        }
        Ok(serde_json::from_slice(&bytes)?)
    }

    pub async fn health(&self) -> Result<Value> {
        Self::decode(self.http.get(self.url("health")?).send().await?).await
    }

    pub async fn list_snapshots(&self) -> Result<Vec<SnapshotMeta>> {
        #[derive(Deserialize)]
        struct List {
            snapshots: Vec<SnapshotMeta>,
        }
        let list: List = Self::decode(self.http.get(self.url("snapshots")?).send().await?).await?;
        Ok(list.snapshots)
    }

    pub async fn run(&self, corpus: &Corpus, config: &PipelineConfig) -> Result<RunResponse> {
        let body = json!({"corpus": corpus, "config": config});
        Self::decode(self.http.post(self.url("runs")?).json(&body).send().await?).await
    }

    pub async fn run_named(&self, corpus_name: &str, config: &PipelineConfig) -> Result<RunResponse> {
        let body = json!({"corpus_name": corpus_name, "config": config});
        Self::decode(self.http.post(self.url("runs")?).json(&body).send().await?).await
    }

    /// Raw response envelope `{snapshot_id, config, status, data}` of one
    /// snapshot resource, e.g. `networks/keywords` or `countries/clusters`.
    pub async fn get(&self, snapshot_id: &str, resource: &str, query: &BTreeMap<String, String>) -> Result<Value> {
        let mut url = self.url(&format!("{snapshot_id}/{}", resource.trim_start_matches('/')))?;
        if !query.is_empty() {
            url.query_pairs_mut().extend_pairs(query.iter());
        }
        Self::decode(self.http.get(url).send().await?).await
    }

    async fn get_plain(&self, snapshot_id: &str, resource: &str) -> Result<Value> {
        self.get(snapshot_id, resource, &BTreeMap::new()).await
    }

    pub async fn corpus_stats(&self, sid: &str) -> Result<Value> {
        self.get_plain(sid, "corpus/stats").await
    }

    pub async fn geo_flows(&self, sid: &str) -> Result<Value> {
        self.get_plain(sid, "geo/flows").await
    }

    pub async fn keyword_network(&self, sid: &str) -> Result<Value> {
        self.get_plain(sid, "networks/keywords").await
    }

    pub async fn semantic_field(&self, sid: &str, keyword: &str) -> Result<Value> {
        let mut url = self.url(&format!("{sid}/networks/keywords/field/"))?;
        url.path_segments_mut()
            .map_err(|_| url::ParseError::RelativeUrlWithCannotBeABaseBase)?
            .pop_if_empty()
            .push(keyword);
        Self::decode(self.http.get(url).send().await?).await
    }

    pub async fn citation_network(&self, sid: &str) -> Result<Value> {
        self.get_plain(sid, "networks/citations").await
    }

    pub async fn wordcloud(&self, sid: &str, article_id: &str) -> Result<Value> {
        let mut url = self.url(&format!("{sid}/articles/"))?;
        url.path_segments_mut()
            .map_err(|_| url::ParseError::RelativeUrlWithCannotBeABaseBase)?
            .pop_if_empty()
            .push(article_id)
            .push("wordcloud");
        Self::decode(self.http.get(url).send().await?).await
    }

    pub async fn topics(&self, sid: &str) -> Result<Value> {
        self.get_plain(sid, "topics").await
    }

    pub async fn topic_evolution(&self, sid: &str, threshold: Option<f64>) -> Result<Value> {
        let query = threshold
            .map(|t| BTreeMap::from([("threshold".to_string(), t.to_string())]))
            .unwrap_or_default();
        self.get(sid, "topics/evolution", &query).await
    }

    pub async fn country_clusters(&self, sid: &str, method: &str, allocation: &str, k: Option<usize>) -> Result<Value> {
        let mut query = BTreeMap::from([
            ("method".to_string(), method.to_string()),
            ("allocation".to_string(), allocation.to_string()),
        ]);
        if let Some(k) = k {
            query.insert("k".into(), k.to_string());
        }
        self.get(sid, "countries/clusters", &query).await
    }

    /// `kind` is one of `flows`, `correlations`, `modularity`.
    pub async fn complementarity(&self, sid: &str, kind: &str, a: &str, b: &str) -> Result<Value> {
        let query = BTreeMap::from([("a".to_string(), a.to_string()), ("b".to_string(), b.to_string())]);
        self.get(sid, &format!("complementarity/{kind}"), &query).await
    }
}
