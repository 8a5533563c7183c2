//! Workspace directory holding ingested corpora and immutable snapshots.
//!
//! ```text
//! <root>/corpora/<name>.json
//! <root>/snapshots/<snapshot_id>/meta.json
//!                               /config.json
//!                               /corpus/stats.json
//!                               ...
//! ```
//!
//! A snapshot directory is assembled under a temporary name and renamed into
//! place, so readers never observe a partial snapshot.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use crate::classification::Method;
use crate::complementarity::{CorrelationReport, FlowMatrix, ModularityCurve};
use crate::config::PipelineConfig;
use crate::corpus::Corpus;
use crate::error::{Error, Result};
use crate::geo::{recut, Allocation};
use crate::keywords::{semantic_field, SemanticNetwork};
use crate::pipeline::{AnalysisSnapshot, CountryResults, Outcome};
use crate::topics::TopicEvolution;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SnapshotMeta {
    pub snapshot_id: String,
    pub corpus_digest: String,
    pub created_at: String,
    /// Module name → "computed" or the skip reason.
    pub modules: BTreeMap<String, String>,
    pub log: Vec<String>,
}

#[derive(Debug, Clone)]
pub struct Workspace {
    root: PathBuf,
}

fn read_json<T: DeserializeOwned>(path: &Path) -> Result<T> {
    let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
    Ok(serde_json::from_slice(&bytes)?)
}

fn to_bytes<T: Serialize>(value: &T) -> Result<Vec<u8>> {
    let mut bytes = serde_json::to_vec_pretty(value)?;
    bytes.push(b'\n');
    Ok(bytes)
}

fn status<T>(outcome: &Outcome<T>) -> String {
    match outcome {
        Outcome::Computed(_) => "computed".into(),
        Outcome::Skipped(reason) => format!("skipped: {reason}"),
    }
}

fn pair_name(a: Method, b: Method) -> String {
    format!("{a}_{b}")
}

/// Stored snapshot files other than `meta.json`, as (relative path, bytes).
/// Everything here is a pure function of corpus and config.
pub fn snapshot_exports(snapshot: &AnalysisSnapshot) -> Result<Vec<(String, Vec<u8>)>> {
    let r = &snapshot.results;
    let mut out = vec![
        ("config.json".to_string(), to_bytes(&snapshot.config)?),
        ("corpus/stats.json".into(), to_bytes(&r.corpus_stats)?),
        ("geo/flows.json".into(), to_bytes(&r.geo_flows)?),
    ];
    let keywords = match &r.keywords {
        Outcome::Computed(k) => Outcome::Computed(&k.network),
        Outcome::Skipped(s) => Outcome::Skipped(s.clone()),
    };
    out.push(("networks/keywords.json".into(), to_bytes(&keywords)?));
    let citations = match &r.citations {
        Outcome::Computed(c) => Outcome::Computed(json!({
            "neighborhood": c.neighborhood,
            "relevance_notice": c.relevance_notice,
            "theta_w": c.network.theta_w,
            "k_max": c.network.k_max,
            "grid": c.network.grid,
            "selected": c.network.selected,
            "network": c.network.network,
        })),
        Outcome::Skipped(s) => Outcome::Skipped(s.clone()),
    };
    out.push(("networks/citations.json".into(), to_bytes(&citations)?));
    if let Outcome::Computed(c) = &r.citations {
        out.push(("citations/relevant_keywords.csv".into(), c.relevant_keywords_csv.clone().into_bytes()));
        out.push(("citations/wordclouds.json".into(), to_bytes(&c.wordclouds)?));
    }
    let topics = match &r.topics {
        Outcome::Computed(t) => {
            let theta: BTreeMap<&String, &Vec<f64>> = t.model.doc_ids.iter().zip(&t.model.theta).collect();
            let years: BTreeMap<&String, Option<i32>> =
                t.model.doc_ids.iter().zip(t.document_years.iter().copied()).collect();
            Outcome::Computed(json!({
                "language": t.language,
                "dictionary_size": t.dictionary_size,
                "excluded_documents": t.excluded_documents,
                "selection": t.selection,
                "k": t.model.k,
                "alpha": t.model.alpha,
                "eta": t.model.eta,
                "epsilon": t.model.epsilon,
                "seed": t.model.seed,
                "iterations": t.model.iterations,
                "burn_in": t.model.burn_in,
                "thin": t.model.thin,
                "samples": t.model.samples,
                "labels": t.classification.categories,
                "top_words": t.top_words,
                "theta": theta,
                "years": years,
            }))
        }
        Outcome::Skipped(s) => Outcome::Skipped(s.clone()),
    };
    out.push(("topics/model.json".into(), to_bytes(&topics)?));
    let evolution = match &r.topics {
        Outcome::Computed(t) => Outcome::Computed(&t.evolution),
        Outcome::Skipped(s) => Outcome::Skipped(s.clone()),
    };
    out.push(("topics/evolution.json".into(), to_bytes(&evolution)?));
    for method in Method::ALL {
        if let Some(c) = snapshot.classification(method) {
            out.push((format!("classifications/{method}.json"), to_bytes(c)?));
        }
    }
    for c in &r.countries {
        out.push((format!("countries/{}_{}.json", c.method, c.allocation), to_bytes(c)?));
    }
    for p in &r.pairs {
        let name = pair_name(p.a, p.b);
        out.push((format!("complementarity/{name}.flows.json"), to_bytes(&json!({
            "matrix": p.flows,
            "sankey": p.flows.sankey(),
        }))?));
        let correlations = match &p.correlations {
            Some(c) => Outcome::Computed(c),
            None => Outcome::Skipped(p.notice.clone().unwrap_or_default()),
        };
        out.push((format!("complementarity/{name}.correlations.json"), to_bytes(&correlations)?));
        if let Some(c) = &p.correlations {
            out.push((format!("complementarity/{name}.correlations.csv"), c.to_csv().into_bytes()));
        }
    }
    for m in &r.modularity {
        out.push((format!("complementarity/{}.modularity.json", pair_name(m.method_a, m.method_b)), to_bytes(m)?));
    }
    Ok(out)
}

fn meta_of(snapshot: &AnalysisSnapshot) -> SnapshotMeta {
    let r = &snapshot.results;
    SnapshotMeta {
        snapshot_id: snapshot.snapshot_id.clone(),
        corpus_digest: snapshot.corpus_digest.clone(),
        created_at: snapshot.created_at.clone(),
        modules: BTreeMap::from([
            ("keywords".to_string(), status(&r.keywords)),
            ("citations".to_string(), status(&r.citations)),
            ("topics".to_string(), status(&r.topics)),
        ]),
        log: snapshot.log.clone(),
    }
}

fn query_map(query: &BTreeMap<String, String>, key: &str) -> Option<String> {
    query.get(key).filter(|v| !v.is_empty()).cloned()
}

fn parse_method(query: &BTreeMap<String, String>, key: &str) -> Result<Method> {
    query_map(query, key)
        .ok_or_else(|| Error::InvalidParameter(format!("missing query parameter `{key}`")))?
        .parse()
}

impl Workspace {
    pub fn open(root: impl Into<PathBuf>) -> Result<Self> {
        let root = root.into();
        for dir in [root.join("corpora"), root.join("snapshots")] {
            fs::create_dir_all(&dir).map_err(|e| Error::io(&dir, e))?;
        }
        Ok(Self { root })
    }

    pub fn root(&self) -> &Path {
        &self.root
    }

    fn snapshot_dir(&self, sid: &str) -> Result<PathBuf> {
        let valid = !sid.is_empty() && sid.chars().all(|c| c.is_ascii_hexdigit());
        let dir = self.root.join("snapshots").join(sid);
        if !valid || !dir.join("meta.json").is_file() {
            return Err(Error::SnapshotNotFound(sid.to_string()));
        }
        Ok(dir)
    }

    pub fn corpus_path(&self, name: &str) -> PathBuf {
        self.root.join("corpora").join(format!("{name}.json"))
    }

    pub fn save_corpus(&self, name: &str, corpus: &Corpus) -> Result<PathBuf> {
        let path = self.corpus_path(name);
        fs::write(&path, corpus.to_json()?).map_err(|e| Error::io(&path, e))?;
        Ok(path)
    }

    pub fn load_corpus(&self, name: &str) -> Result<Corpus> {
        let path = self.corpus_path(name);
        let text = fs::read_to_string(&path).map_err(|e| Error::io(&path, e))?;
        Corpus::from_json(&text)
    }

    pub fn has_snapshot(&self, sid: &str) -> bool {
        self.snapshot_dir(sid).is_ok()
    }

    /// Persists the snapshot unless one with the same id already exists, in
    /// which case the stored one is kept and its metadata returned.
    pub fn write_snapshot(&self, snapshot: &AnalysisSnapshot) -> Result<SnapshotMeta> {
        if let Ok(dir) = self.snapshot_dir(&snapshot.snapshot_id) {
            return read_json(&dir.join("meta.json"));
        }
        let base = self.root.join("snapshots");
        let tmp = tempfile::Builder::new()
            .prefix(".tmp-")
            .tempdir_in(&base)
            .map_err(|e| Error::io(&base, e))?;
        let meta = meta_of(snapshot);
        let mut files = snapshot_exports(snapshot)?;
        files.push(("meta.json".into(), to_bytes(&meta)?));
        for (rel, bytes) in files {
            let path = tmp.path().join(rel);
            if let Some(parent) = path.parent() {
                fs::create_dir_all(parent).map_err(|e| Error::io(parent, e))?;
            }
            fs::write(&path, bytes).map_err(|e| Error::io(&path, e))?;
        }
        let target = base.join(&snapshot.snapshot_id);
        let staged = tmp.keep();
        if let Err(e) = fs::rename(&staged, &target) {
            let _ = fs::remove_dir_all(&staged);
            if self.has_snapshot(&snapshot.snapshot_id) {
                return read_json(&target.join("meta.json"));
            }
            return Err(Error::io(&target, e));
        }
        Ok(meta)
    }

    /// Snapshots sorted by creation time, then id.
    pub fn list_snapshots(&self) -> Result<Vec<SnapshotMeta>> {
        let base = self.root.join("snapshots");
        let mut out = Vec::new();
        for entry in fs::read_dir(&base).map_err(|e| Error::io(&base, e))? {
            let entry = entry.map_err(|e| Error::io(&base, e))?;
            let meta = entry.path().join("meta.json");
            if entry.file_name().to_string_lossy().starts_with('.') || !meta.is_file() {
                continue;
            }
            out.push(read_json::<SnapshotMeta>(&meta)?);
        }
        out.sort_by(|a, b| a.created_at.cmp(&b.created_at).then_with(|| a.snapshot_id.cmp(&b.snapshot_id)));
        Ok(out)
    }

    pub fn config(&self, sid: &str) -> Result<PipelineConfig> {
        read_json(&self.snapshot_dir(sid)?.join("config.json"))
    }

    pub fn meta(&self, sid: &str) -> Result<SnapshotMeta> {
        read_json(&self.snapshot_dir(sid)?.join("meta.json"))
    }

    /// Reads one resource of a snapshot. The response always carries the
    /// snapshot id and its config; skipped resources come back with
    /// `"status": "not_computed"` and the reason.
    pub fn query(&self, sid: &str, resource: &str, query: &BTreeMap<String, String>) -> Result<Value> {
        let dir = self.snapshot_dir(sid)?;
        let config: Value = read_json(&dir.join("config.json"))?;
        let data = self.resolve(&dir, resource, query)?;
        let mut response = json!({"snapshot_id": sid, "config": config});
        match data {
            Outcome::Computed(data) => {
                response["status"] = json!("ok");
                response["data"] = data;
            }
            Outcome::Skipped(reason) => {
                response["status"] = json!("not_computed");
                response["reason"] = json!(reason);
                response["data"] = Value::Null;
            }
        }
        Ok(response)
    }

    fn resolve(&self, dir: &Path, resource: &str, query: &BTreeMap<String, String>) -> Result<Outcome<Value>> {
        let unknown = || Error::UnknownResource(resource.to_string());
        let segments: Vec<&str> = resource.trim_matches('/').split('/').collect();
        let computed = |path: &str| -> Result<Outcome<Value>> { Ok(Outcome::Computed(read_json(&dir.join(path))?)) };
        match segments.as_slice() {
            ["corpus", "stats"] => computed("corpus/stats.json"),
            ["geo", "flows"] => computed("geo/flows.json"),
            ["networks", "keywords"] => read_json(&dir.join("networks/keywords.json")),
            ["networks", "keywords", "field", keyword] => {
                let network: Outcome<SemanticNetwork> = read_json(&dir.join("networks/keywords.json"))?;
                match network {
                    Outcome::Computed(net) => {
                        let keyword = keyword.to_lowercase();
                        Ok(Outcome::Computed(serde_json::to_value(semantic_field(&net, &keyword)?)?))
                    }
                    Outcome::Skipped(reason) => Ok(Outcome::Skipped(reason)),
                }
            }
            ["networks", "citations"] => read_json(&dir.join("networks/citations.json")),
            ["articles", id, "wordcloud"] => {
                let path = dir.join("citations/wordclouds.json");
                if !path.is_file() {
                    let network: Outcome<Value> = read_json(&dir.join("networks/citations.json"))?;
                    return match network {
                        Outcome::Skipped(reason) => Ok(Outcome::Skipped(reason)),
                        Outcome::Computed(_) => Err(unknown()),
                    };
                }
                let mut clouds: BTreeMap<String, Value> = read_json(&path)?;
                clouds.remove(*id).map(Outcome::Computed).ok_or_else(unknown)
            }
            ["topics"] => read_json(&dir.join("topics/model.json")),
            ["topics", "evolution"] => self.evolution(dir, query),
            ["countries", "clusters"] => self.clusters(dir, query),
            ["complementarity", kind @ ("flows" | "correlations" | "modularity")] => {
                self.complementarity(dir, kind, query)
            }
            _ => Err(unknown()),
        }
    }

    fn evolution(&self, dir: &Path, query: &BTreeMap<String, String>) -> Result<Outcome<Value>> {
        let Some(threshold) = query_map(query, "threshold") else {
            return read_json(&dir.join("topics/evolution.json"));
        };
        let threshold: f64 = threshold
            .parse()
            .map_err(|_| Error::InvalidParameter(format!("threshold `{threshold}` is not a number")))?;
        if !(0.0..=1.0).contains(&threshold) {
            return Err(Error::InvalidParameter("threshold must lie in [0, 1]".into()));
        }
        let model: Outcome<Value> = read_json(&dir.join("topics/model.json"))?;
        let model = match model {
            Outcome::Computed(m) => m,
            Outcome::Skipped(reason) => return Ok(Outcome::Skipped(reason)),
        };
        let k = model["k"].as_u64().unwrap_or(0) as usize;
        let theta: BTreeMap<String, Vec<f64>> = serde_json::from_value(model["theta"].clone())?;
        let years: BTreeMap<String, Option<i32>> = serde_json::from_value(model["years"].clone())?;
        let mut counts: BTreeMap<i32, Vec<usize>> = BTreeMap::new();
        let mut documents_per_year = BTreeMap::new();
        for (id, row) in &theta {
            let Some(Some(year)) = years.get(id) else {
                continue;
            };
            *documents_per_year.entry(*year).or_insert(0) += 1;
            let entry = counts.entry(*year).or_insert_with(|| vec![0; k]);
            for (c, &share) in row.iter().enumerate() {
                if share >= threshold {
                    entry[c] += 1;
                }
            }
        }
        Ok(Outcome::Computed(serde_json::to_value(TopicEvolution {
            threshold,
            topics: k,
            counts,
            documents_per_year,
        })?))
    }

    fn clusters(&self, dir: &Path, query: &BTreeMap<String, String>) -> Result<Outcome<Value>> {
        let method = parse_method(query, "method")?;
        let allocation: Allocation = query_map(query, "allocation").as_deref().unwrap_or("studied").parse()?;
        let path = dir.join(format!("countries/{method}_{allocation}.json"));
        if !path.is_file() {
            return Ok(Outcome::Skipped(format!("{method} classification not computed")));
        }
        let stored: CountryResults = read_json(&path)?;
        let Some(clustering) = stored.clustering else {
            return Ok(Outcome::Skipped(stored.notice.unwrap_or_default()));
        };
        let clustering = match query_map(query, "k") {
            None => clustering,
            Some(k) => {
                let k: usize = k
                    .parse()
                    .map_err(|_| Error::InvalidParameter(format!("k `{k}` is not a positive integer")))?;
                if k == clustering.k {
                    clustering
                } else {
                    if k < 1 || k > clustering.dendrogram.leaves.len() {
                        return Err(Error::InvalidParameter(format!(
                            "k = {k} outside 1..={}",
                            clustering.dendrogram.leaves.len()
                        )));
                    }
                    recut(method, allocation, clustering.dendrogram, clustering.profiles, k)?
                }
            }
        };
        Ok(Outcome::Computed(serde_json::to_value(clustering)?))
    }

    fn complementarity(&self, dir: &Path, kind: &str, query: &BTreeMap<String, String>) -> Result<Outcome<Value>> {
        let a = parse_method(query, "a")?;
        let b = parse_method(query, "b")?;
        let base = dir.join("complementarity");
        let classified = |m: Method| dir.join(format!("classifications/{m}.json")).is_file();
        for m in [a, b] {
            if !classified(m) {
                return Ok(Outcome::Skipped(format!("{m} classification not computed")));
            }
        }
        if kind == "modularity" {
            let path = base.join(format!("{}.modularity.json", pair_name(a, b)));
            if !path.is_file() {
                return Ok(Outcome::Skipped(format!(
                    "no nonempty document network for {a} against {b}"
                )));
            }
            let curve: ModularityCurve = read_json(&path)?;
            return Ok(Outcome::Computed(serde_json::to_value(curve)?));
        }
        let (first, second, reversed) = if a <= b { (a, b, false) } else { (b, a, true) };
        let name = pair_name(first, second);
        if kind == "flows" {
            let stored: Value = read_json(&base.join(format!("{name}.flows.json")))?;
            if !reversed {
                return Ok(Outcome::Computed(stored));
            }
            let matrix: FlowMatrix = serde_json::from_value(stored["matrix"].clone())?;
            let t = matrix.transpose();
            return Ok(Outcome::Computed(json!({"matrix": t, "sankey": t.sankey()})));
        }
        let stored: Outcome<CorrelationReport> = read_json(&base.join(format!("{name}.correlations.json")))?;
        Ok(match stored {
            Outcome::Computed(r) => {
                let r = if reversed { r.transpose() } else { r };
                Outcome::Computed(serde_json::to_value(r)?)
            }
            Outcome::Skipped(reason) => Outcome::Skipped(reason),
        })
    }
}
