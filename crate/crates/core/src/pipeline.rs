//! End-to-end analysis run composing every module into one snapshot.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::citations::{
    build_cooccurrence_network, build_neighborhood, classify_articles_by_citation, extract_relevant_keywords,
    filter_and_select, relevant_keywords_csv, CitationSemanticNetwork, NeighborhoodSummary, RelevantKeyword,
    Wordcloud,
};
use crate::classification::{Classification, Method};
use crate::complementarity::{
    correlation_report, default_thresholds, flow_matrix, modularity_curve, CorrelationReport, FlowMatrix,
    ModularityCurve,
};
use crate::config::PipelineConfig;
use crate::corpus::{corpus_stats, geo_flow_matrix, Corpus, CorpusStats, GeoFlowMatrix};
use crate::error::{Error, Result};
use crate::geo::{cluster_countries, country_profiles, Allocation, CountryClustering, CountryProfile};
use crate::keywords::{classify_articles_by_keywords, detect_communities, edge_statistics, project_keyword_network, SemanticNetwork};
use crate::rng::derive_seed;
use crate::topics::{
    classify_articles_by_topics, document_years, fit_lda, language_subcorpus, preprocess, select_topic_count,
    topic_evolution, LdaConfig, ModelSelectionReport, TopicEvolution, TopicModel,
};

/// Result of one module: computed, or skipped for lack of input.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "status", content = "value", rename_all = "snake_case")]
pub enum Outcome<T> {
    Computed(T),
    Skipped(String),
}

impl<T> Outcome<T> {
    pub fn computed(&self) -> Option<&T> {
        match self {
            Outcome::Computed(v) => Some(v),
            Outcome::Skipped(_) => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KeywordResults {
    pub network: SemanticNetwork,
    pub classification: Classification,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CitationResults {
    pub neighborhood: NeighborhoodSummary,
    pub relevant_keywords: Vec<RelevantKeyword>,
    pub relevance_notice: Option<String>,
    pub relevant_keywords_csv: String,
    pub network: CitationSemanticNetwork,
    pub classification: Classification,
    pub wordclouds: BTreeMap<String, Wordcloud>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TopicWord {
    pub word: String,
    pub probability: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TopicResults {
    pub language: String,
    pub dictionary_size: usize,
    pub excluded_documents: Vec<String>,
    pub selection: ModelSelectionReport,
    pub model: TopicModel,
    pub top_words: Vec<Vec<TopicWord>>,
    /// Publication year per modelled document, aligned with `model.doc_ids`.
    pub document_years: Vec<Option<i32>>,
    pub evolution: TopicEvolution,
    pub classification: Classification,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CountryResults {
    pub method: Method,
    pub allocation: Allocation,
    pub profiles: Vec<CountryProfile>,
    pub clustering: Option<CountryClustering>,
    pub notice: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PairResults {
    pub a: Method,
    pub b: Method,
    pub flows: FlowMatrix,
    pub correlations: Option<CorrelationReport>,
    pub notice: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Results {
    pub corpus_stats: CorpusStats,
    pub geo_flows: GeoFlowMatrix,
    pub keywords: Outcome<KeywordResults>,
    pub citations: Outcome<CitationResults>,
    pub topics: Outcome<TopicResults>,
    pub countries: Vec<CountryResults>,
    /// Unordered method pairs, self pairs included.
    pub pairs: Vec<PairResults>,
    /// Ordered method pairs.
    pub modularity: Vec<ModularityCurve>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AnalysisSnapshot {
    pub snapshot_id: String,
    pub config: PipelineConfig,
    pub corpus_digest: String,
    pub created_at: String,
    pub log: Vec<String>,
    pub results: Results,
}

impl AnalysisSnapshot {
    pub fn classification(&self, method: Method) -> Option<&Classification> {
        match method {
            Method::Keywords => self.results.keywords.computed().map(|r| &r.classification),
            Method::Citations => self.results.citations.computed().map(|r| &r.classification),
            Method::Topics => self.results.topics.computed().map(|r| &r.classification),
        }
    }
}

/// Digest of the canonical config and the corpus content.
pub fn snapshot_id(corpus: &Corpus, config: &PipelineConfig) -> String {
    let mut hasher = Sha256::new();
    hasher.update(config.canonical_json().as_bytes());
    hasher.update([0u8]);
    hasher.update(corpus.content_digest().as_bytes());
    hex::encode(hasher.finalize())
}

pub fn run_pipeline(corpus: &Corpus, config: &PipelineConfig) -> Result<AnalysisSnapshot> {
    run_pipeline_logged(corpus, config, &mut Vec::new())
}

/// As [`run_pipeline`], appending progress to `log`; on failure the log keeps
/// every step completed before the error.
pub fn run_pipeline_logged(corpus: &Corpus, config: &PipelineConfig, log: &mut Vec<String>) -> Result<AnalysisSnapshot> {
    config.validate()?;
    let seed = config.seed;
    log.push(format!("corpus: {} articles", corpus.articles.len()));

    let keywords = run_keywords(corpus, config, seed).map_err(|e| e.in_module("keywords"))?;
    note(log, "keywords", &keywords);
    let citations = run_citations(corpus, config, seed).map_err(|e| e.in_module("citations"))?;
    note(log, "citations", &citations);
    let topics = run_topics(corpus, config, seed, log).map_err(|e| e.in_module("topics"))?;
    note(log, "topics", &topics);

    let classifications: Vec<&Classification> = [
        keywords.computed().map(|r| &r.classification),
        citations.computed().map(|r| &r.classification),
        topics.computed().map(|r| &r.classification),
    ]
    .into_iter()
    .flatten()
    .collect();

    let mut countries = Vec::new();
    for c in &classifications {
        for allocation in Allocation::ALL {
            countries.push(run_geo(c, corpus, allocation, config.geo.k).map_err(|e| e.in_module("geo"))?);
        }
    }
    log.push(format!("geo: {} clusterings", countries.iter().filter(|c| c.clustering.is_some()).count()));

    let mut pairs = Vec::new();
    let mut modularity = Vec::new();
    for (i, a) in classifications.iter().enumerate() {
        for b in &classifications[i..] {
            let pair_seed = derive_seed(seed, &[0xc0_4e, a.method as u64, b.method as u64]);
            pairs.push(run_pair(a, b, config, pair_seed).map_err(|e| e.in_module("complementarity"))?);
        }
        for b in &classifications {
            if let Some(curve) = run_curve(a, b, config).map_err(|e| e.in_module("complementarity"))? {
                modularity.push(curve);
            }
        }
    }
    log.push(format!("complementarity: {} pairs, {} curves", pairs.len(), modularity.len()));

    Ok(AnalysisSnapshot {
        snapshot_id: snapshot_id(corpus, config),
        config: config.clone(),
        corpus_digest: corpus.content_digest(),
        created_at: chrono::Utc::now().to_rfc3339_opts(chrono::SecondsFormat::Secs, true),
        log: log.clone(),
        results: Results {
            corpus_stats: corpus_stats(corpus),
            geo_flows: geo_flow_matrix(corpus),
            keywords,
            citations,
            topics,
            countries,
            pairs,
            modularity,
        },
    })
}

fn note<T>(log: &mut Vec<String>, module: &str, outcome: &Outcome<T>) {
    match outcome {
        Outcome::Computed(_) => log.push(format!("{module}: computed")),
        Outcome::Skipped(reason) => log.push(format!("{module}: skipped ({reason})")),
    }
}

fn run_keywords(corpus: &Corpus, config: &PipelineConfig, seed: u64) -> Result<Outcome<KeywordResults>> {
    let network = match project_keyword_network(corpus) {
        Ok(n) => n,
        Err(Error::EmptyProjection) => {
            return Ok(Outcome::Skipped("missing input: no article declares two keywords".into()))
        }
        Err(e) => return Err(e),
    };
    let network = detect_communities(edge_statistics(network), derive_seed(seed, &[1]))?;
    let classification = classify_articles_by_keywords(corpus, &network, &config.keywords.labels)?;
    Ok(Outcome::Computed(KeywordResults {
        network,
        classification,
    }))
}

fn run_citations(corpus: &Corpus, config: &PipelineConfig, seed: u64) -> Result<Outcome<CitationResults>> {
    if corpus.citations.is_empty() {
        return Ok(Outcome::Skipped("missing input: no citation records".into()));
    }
    let cfg = &config.citations;
    let neighborhood = build_neighborhood(corpus)?;
    let abstracts: Vec<String> = neighborhood.abstracts.values().cloned().collect();
    if abstracts.is_empty() {
        return Ok(Outcome::Skipped("missing input: no abstract in the citation neighborhood".into()));
    }
    let relevance = extract_relevant_keywords(&abstracts, &cfg.relevance)?;
    let full = build_cooccurrence_network(&relevance.keywords, &abstracts, &cfg.relevance);
    let network = filter_and_select(&full, &cfg.grid(), derive_seed(seed, &[2]), cfg.choice)?;
    let classified = classify_articles_by_citation(
        corpus,
        &neighborhood,
        &network,
        &cfg.relevance,
        cfg.include_control_group,
        &cfg.labels,
    )?;
    Ok(Outcome::Computed(CitationResults {
        neighborhood: neighborhood.summary(),
        relevant_keywords_csv: relevant_keywords_csv(&relevance.keywords, &network.network)?,
        relevant_keywords: relevance.keywords,
        relevance_notice: relevance.notice,
        network,
        classification: classified.classification,
        wordclouds: classified.wordclouds,
    }))
}

fn run_topics(corpus: &Corpus, config: &PipelineConfig, seed: u64, log: &mut Vec<String>) -> Result<Outcome<TopicResults>> {
    let cfg = &config.topics;
    let streams = language_subcorpus(corpus, &cfg.language);
    if streams.is_empty() {
        return Ok(Outcome::Skipped(format!(
            "missing input: no full text in language `{}`",
            cfg.language
        )));
    }
    let counts = preprocess(&streams, &cfg.preprocess)?;
    let vocabulary = counts.term_count();
    let candidates: Vec<usize> = cfg.candidates.iter().copied().filter(|&k| k <= vocabulary).collect();
    if candidates.len() < cfg.candidates.len() {
        log.push(format!(
            "topics: candidates above the dictionary size ({vocabulary}) dropped"
        ));
    }
    if candidates.is_empty() {
        return Err(Error::InvalidParameter(format!(
            "every topic candidate exceeds the dictionary size {vocabulary}"
        )));
    }
    let selection = select_topic_count(
        &counts,
        &candidates,
        cfg.replications,
        &cfg.lda,
        cfg.holdout_fraction,
        derive_seed(seed, &[3]),
    )?;
    let model = fit_lda(
        &counts,
        &LdaConfig {
            k: selection.chosen_k,
            seed: derive_seed(seed, &[4]),
            ..cfg.lda.clone()
        },
    )?;
    let top_words = (0..model.k)
        .map(|k| {
            model
                .top_words(k, cfg.top_words)
                .into_iter()
                .map(|(word, probability)| TopicWord { word, probability })
                .collect()
        })
        .collect();
    let evolution = topic_evolution(&model, corpus, cfg.evolution_threshold);
    let classification = classify_articles_by_topics(&model)?;
    Ok(Outcome::Computed(TopicResults {
        language: cfg.language.clone(),
        dictionary_size: vocabulary,
        excluded_documents: counts.excluded.clone(),
        selection,
        document_years: document_years(&model, corpus),
        top_words,
        evolution,
        classification,
        model,
    }))
}

fn run_geo(classification: &Classification, corpus: &Corpus, allocation: Allocation, k: usize) -> Result<CountryResults> {
    let profiles = country_profiles(classification, corpus, allocation);
    let (clustering, notice) = if profiles.is_empty() {
        (None, Some("no country carries a classified article".to_string()))
    } else if profiles.len() < k {
        let n = profiles.len();
        (
            Some(cluster_countries(&profiles, n)?),
            Some(format!("only {n} countries; cut at {n} instead of {k}")),
        )
    } else {
        (Some(cluster_countries(&profiles, k)?), None)
    };
    Ok(CountryResults {
        method: classification.method,
        allocation,
        profiles,
        clustering,
        notice,
    })
}

fn run_pair(a: &Classification, b: &Classification, config: &PipelineConfig, seed: u64) -> Result<PairResults> {
    let cfg = &config.complementarity;
    let flows = flow_matrix(a, b)?;
    let (correlations, notice) = if flows.shared_articles < 3 {
        (None, Some("fewer than 3 shared articles; correlations not computed".to_string()))
    } else {
        match correlation_report(a, b, cfg.bootstrap_reps, cfg.shuffle_fraction, seed) {
            Ok(r) => (Some(r), None),
            Err(Error::InvalidParameter(msg)) => (None, Some(msg)),
            Err(e) => return Err(e),
        }
    };
    Ok(PairResults {
        a: a.method,
        b: b.method,
        flows,
        correlations,
        notice,
    })
}

fn run_curve(a: &Classification, b: &Classification, config: &PipelineConfig) -> Result<Option<ModularityCurve>> {
    let cfg = &config.complementarity;
    let thresholds = match &cfg.thresholds {
        Some(t) => t.clone(),
        None => match default_thresholds(a, b, cfg.threshold_count) {
            Ok(t) => t,
            Err(Error::InvalidParameter(_) | Error::EmptyIntersection) => return Ok(None),
            Err(e) => return Err(e),
        },
    };
    match modularity_curve(a, b, &thresholds) {
        Ok(c) => Ok(Some(c)),
        Err(Error::AllNetworksEmpty | Error::EmptyIntersection) => Ok(None),
        Err(e) => Err(e),
    }
}
