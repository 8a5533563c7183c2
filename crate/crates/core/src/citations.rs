//! External semantic network built from the abstracts of the depth-2 citation
//! neighborhood of the corpus.

use std::cmp::Reverse;
use std::collections::{BTreeMap, BTreeSet, VecDeque};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::classification::{Classification, Method};
use crate::corpus::{CitationRecord, Corpus};
use crate::error::{Error, Result};
use crate::keywords::{community_labels, detect_communities_by, EdgeWeight, SemanticNetwork};
use crate::text::{clean_tokens, count_vocabulary, ngram_counts, stopwords};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct RelevanceConfig {
    pub ngram_max: usize,
    pub n_k: usize,
    pub theta_w: f64,
    pub k_max: usize,
    /// Stop-word list used when cleaning abstracts.
    pub language: String,
}

impl Default for RelevanceConfig {
    fn default() -> Self {
        Self {
            ngram_max: 3,
            n_k: 50_000,
            theta_w: 1.0,
            k_max: 500,
            language: "en".into(),
        }
    }
}

impl RelevanceConfig {
    pub fn validate(&self) -> Result<()> {
        if self.ngram_max < 1 || self.n_k < 1 || !(self.theta_w > 0.0) || self.k_max < 1 {
            return Err(Error::InvalidParameter(format!(
                "relevance config requires ngram_max ≥ 1, n_k ≥ 1, theta_w > 0, k_max ≥ 1 (got {self:?})"
            )));
        }
        Ok(())
    }
}

/// Citation records relabelled with their hop depth from the seed corpus.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct Neighborhood {
    pub by_depth: BTreeMap<u8, Vec<CitationRecord>>,
    /// Hop distance of every publication within two hops of a seed.
    pub hops: BTreeMap<String, u8>,
    adjacency: BTreeMap<String, BTreeSet<String>>,
    /// Abstract per non-seed publication, taken from the records it cites with.
    pub abstracts: BTreeMap<String, String>,
    pub missing_abstracts: Vec<(String, String)>,
    pub declared_depth_mismatches: usize,
    pub out_of_range: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NeighborhoodSummary {
    pub counts_by_depth: BTreeMap<u8, usize>,
    pub publications: usize,
    pub with_abstract: usize,
    pub records_missing_abstract: usize,
    pub declared_depth_mismatches: usize,
    pub out_of_range: usize,
}

impl Neighborhood {
    pub fn summary(&self) -> NeighborhoodSummary {
        NeighborhoodSummary {
            counts_by_depth: self.by_depth.iter().map(|(d, r)| (*d, r.len())).collect(),
            publications: self.hops.len(),
            with_abstract: self.abstracts.len(),
            records_missing_abstract: self.missing_abstracts.len(),
            declared_depth_mismatches: self.declared_depth_mismatches,
            out_of_range: self.out_of_range,
        }
    }

    /// Publications other than `id` within `max_hops` undirected citation hops.
    pub fn around(&self, id: &str, max_hops: u8) -> Vec<String> {
        let mut seen = BTreeMap::from([(id.to_string(), 0u8)]);
        let mut queue = VecDeque::from([id.to_string()]);
        while let Some(node) = queue.pop_front() {
            let d = seen[&node];
            if d == max_hops {
                continue;
            }
            for next in self.adjacency.get(&node).into_iter().flatten() {
                if !seen.contains_key(next) {
                    seen.insert(next.clone(), d + 1);
                    queue.push_back(next.clone());
                }
            }
        }
        seen.remove(id);
        seen.into_keys().collect()
    }
}

/// Labels every record with the hop depth of its farther endpoint, measured by
/// breadth-first search from the seed articles over undirected citation links.
/// Records beyond two hops are counted in `out_of_range` and dropped.
pub fn build_neighborhood(corpus: &Corpus) -> Result<Neighborhood> {
    if corpus.citations.is_empty() {
        return Err(Error::EmptyNeighborhood);
    }
    let mut adjacency: BTreeMap<String, BTreeSet<String>> = BTreeMap::new();
    for c in &corpus.citations {
        adjacency.entry(c.citing_id.clone()).or_default().insert(c.cited_id.clone());
        adjacency.entry(c.cited_id.clone()).or_default().insert(c.citing_id.clone());
    }
    let mut hops: BTreeMap<String, u8> = BTreeMap::new();
    let mut queue = VecDeque::new();
    for id in corpus.articles.keys() {
        hops.insert(id.clone(), 0);
        queue.push_back(id.clone());
    }
    while let Some(node) = queue.pop_front() {
        let d = hops[&node];
        if d == 2 {
            continue;
        }
        for next in adjacency.get(&node).into_iter().flatten() {
            if !hops.contains_key(next) {
                hops.insert(next.clone(), d + 1);
                queue.push_back(next.clone());
            }
        }
    }

    let mut n = Neighborhood::default();
    for c in &corpus.citations {
        let depth = match (hops.get(&c.citing_id), hops.get(&c.cited_id)) {
            (Some(a), Some(b)) => (*a).max(*b),
            _ => {
                n.out_of_range += 1;
                continue;
            }
        };
        if depth == 0 {
            // citation between two seed articles: first hop by convention
            n.by_depth.entry(1).or_default().push(CitationRecord { depth: 1, ..c.clone() });
            continue;
        }
        if depth != c.depth {
            n.declared_depth_mismatches += 1;
        }
        match &c.abstract_text {
            Some(text) if !corpus.is_seed(&c.citing_id) => {
                n.abstracts.entry(c.citing_id.clone()).or_insert_with(|| text.clone());
            }
            Some(_) => {}
            None => n.missing_abstracts.push((c.citing_id.clone(), c.cited_id.clone())),
        }
        n.by_depth.entry(depth).or_default().push(CitationRecord { depth, ..c.clone() });
    }
    n.by_depth.entry(1).or_default();
    n.by_depth.entry(2).or_default();
    n.hops = hops;
    n.adjacency = adjacency;
    Ok(n)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RelevantKeyword {
    pub ngram: String,
    pub relevance: f64,
    pub document_frequency: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RelevanceResult {
    pub keywords: Vec<RelevantKeyword>,
    pub documents: usize,
    pub notice: Option<String>,
}

/// Scores every n-gram by the chi-squared statistic of its per-document counts
/// against a uniform spread over the documents that have at least one token.
///
/// With `D` such documents, total count `T` and per-document counts `O_d`,
/// `Σ (O_d − T/D)² / (T/D) = D·ΣO_d² / T − T`; the right-hand form is used
/// because its integer sums make the score independent of document order.
pub fn extract_relevant_keywords(abstracts: &[String], config: &RelevanceConfig) -> Result<RelevanceResult> {
    config.validate()?;
    if abstracts.is_empty() {
        return Err(Error::InvalidParameter("no abstracts to extract keywords from".into()));
    }
    let stop = stopwords(&config.language);
    let per_doc: Vec<BTreeMap<String, u64>> = abstracts
        .par_iter()
        .map(|text| ngram_counts(&clean_tokens(text, &stop), config.ngram_max))
        .filter(|c| !c.is_empty())
        .collect();
    let documents = per_doc.len();
    // (total, sum of squares, document frequency)
    let mut tallies: BTreeMap<&str, (u64, u64, usize)> = BTreeMap::new();
    for counts in &per_doc {
        for (g, &o) in counts {
            let t = tallies.entry(g.as_str()).or_insert((0, 0, 0));
            t.0 += o;
            t.1 += o * o;
            t.2 += 1;
        }
    }
    let d = documents as f64;
    let mut keywords: Vec<RelevantKeyword> = tallies
        .into_iter()
        .map(|(g, (total, squares, df))| {
            let t = total as f64;
            RelevantKeyword {
                ngram: g.to_string(),
                relevance: (d * squares as f64 / t - t).max(0.0),
                document_frequency: df,
            }
        })
        .collect();
    keywords.sort_by(|a, b| {
        b.relevance
            .total_cmp(&a.relevance)
            .then(b.document_frequency.cmp(&a.document_frequency))
            .then_with(|| a.ngram.cmp(&b.ngram))
    });
    let notice = (keywords.len() < config.n_k).then(|| {
        format!(
            "only {} candidate n-grams for N_k = {}; all retained",
            keywords.len(),
            config.n_k
        )
    });
    keywords.truncate(config.n_k);
    Ok(RelevanceResult {
        keywords,
        documents,
        notice,
    })
}

/// Weighted co-occurrence network between relevant keywords: the weight of an
/// edge is the number of abstracts containing both n-grams. Node frequency is
/// the number of abstracts containing the n-gram.
pub fn build_cooccurrence_network(
    keywords: &[RelevantKeyword],
    abstracts: &[String],
    config: &RelevanceConfig,
) -> SemanticNetwork {
    let vocabulary: BTreeSet<String> = keywords.iter().map(|k| k.ngram.clone()).collect();
    let stop = stopwords(&config.language);
    let present: Vec<Vec<String>> = abstracts
        .par_iter()
        .map(|text| {
            count_vocabulary(&clean_tokens(text, &stop), config.ngram_max, &vocabulary)
                .into_keys()
                .collect()
        })
        .collect();
    let mut frequency: BTreeMap<String, usize> = vocabulary.iter().map(|k| (k.clone(), 0)).collect();
    let mut pairs: BTreeMap<(String, String), u64> = BTreeMap::new();
    for grams in &present {
        for (i, a) in grams.iter().enumerate() {
            *frequency.get_mut(a).expect("vocabulary term") += 1;
            for b in &grams[i + 1..] {
                *pairs.entry((a.clone(), b.clone())).or_insert(0) += 1;
            }
        }
    }
    SemanticNetwork::from_counts(frequency, pairs)
}

/// Drops edges lighter than `theta_w`, then removes nodes in descending degree
/// order (lexicographic tie-break) until every degree is at most `k_max`, and
/// finally drops isolated nodes.
pub fn filter_network(network: &SemanticNetwork, theta_w: f64, k_max: usize) -> SemanticNetwork {
    let edges: Vec<(&str, &str)> = network
        .edges
        .iter()
        .filter(|e| e.w_obs as f64 >= theta_w)
        .map(|e| (e.source.as_str(), e.target.as_str()))
        .collect();
    let mut adjacency: BTreeMap<&str, BTreeSet<&str>> = BTreeMap::new();
    for (a, b) in &edges {
        adjacency.entry(a).or_default().insert(b);
        adjacency.entry(b).or_default().insert(a);
    }
    let mut queue: BTreeSet<(Reverse<usize>, &str)> =
        adjacency.iter().map(|(k, n)| (Reverse(n.len()), *k)).collect();
    while let Some(&(Reverse(degree), node)) = queue.first() {
        if degree <= k_max {
            break;
        }
        queue.pop_first();
        let neighbors = adjacency.remove(node).unwrap_or_default();
        for other in neighbors {
            if let Some(set) = adjacency.get_mut(other) {
                queue.remove(&(Reverse(set.len()), other));
                set.remove(node);
                queue.insert((Reverse(set.len()), other));
            }
        }
    }
    let keep: BTreeSet<String> = adjacency
        .iter()
        .filter(|(_, n)| !n.is_empty())
        .map(|(k, _)| k.to_string())
        .collect();
    let mut filtered = network.induced(&keep);
    filtered.edges.retain(|e| e.w_obs as f64 >= theta_w);
    // recompute degrees after dropping light edges
    let pairs = filtered
        .edges
        .iter()
        .map(|e| ((e.source.clone(), e.target.clone()), e.w_obs))
        .collect();
    let freq = filtered.nodes.iter().map(|n| (n.keyword.clone(), n.frequency)).collect();
    SemanticNetwork::from_counts(freq, pairs)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridPoint {
    pub theta_w: f64,
    pub k_max: usize,
    pub modularity: Option<f64>,
    pub node_count: usize,
    pub edge_count: usize,
    pub communities: usize,
    pub on_front: bool,
}

impl GridPoint {
    /// Scalarized compromise between modularity and size.
    pub fn score(&self) -> Option<f64> {
        self.modularity.map(|q| q * (1.0 + self.node_count as f64).ln())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CitationSemanticNetwork {
    pub network: SemanticNetwork,
    pub theta_w: f64,
    pub k_max: usize,
    pub grid: Vec<GridPoint>,
    pub selected: usize,
}

/// Indices of the points not dominated on (modularity, node count).
pub fn pareto_front(points: &[GridPoint]) -> Vec<usize> {
    let valid: Vec<(usize, f64, usize)> = points
        .iter()
        .enumerate()
        .filter_map(|(i, p)| p.modularity.map(|q| (i, q, p.node_count)))
        .collect();
    valid
        .iter()
        .filter(|(_, q, n)| {
            !valid
                .iter()
                .any(|(_, q2, n2)| q2 >= q && n2 >= n && (q2 > q || n2 > n))
        })
        .map(|(i, _, _)| *i)
        .collect()
}

/// Runs the filter and community detection for every `(theta_w, k_max)` grid
/// point, marks the Pareto front of (modularity, node count), and selects
/// either `choice` or the front point maximizing `modularity · ln(1 + nodes)`.
pub fn filter_and_select(
    network: &SemanticNetwork,
    grid: &[(f64, usize)],
    seed: u64,
    choice: Option<(f64, usize)>,
) -> Result<CitationSemanticNetwork> {
    if grid.is_empty() {
        return Err(Error::InvalidParameter("empty filtering grid".into()));
    }
    for &(theta_w, k_max) in grid {
        if !(theta_w > 0.0) || k_max < 1 {
            return Err(Error::InvalidParameter(format!(
                "grid point ({theta_w}, {k_max}) requires theta_w > 0 and k_max ≥ 1"
            )));
        }
    }
    let runs: Vec<(GridPoint, Option<SemanticNetwork>)> = grid
        .par_iter()
        .map(|&(theta_w, k_max)| {
            let filtered = filter_network(network, theta_w, k_max);
            let node_count = filtered.nodes.len();
            let edge_count = filtered.edges.len();
            match detect_communities_by(filtered, seed, EdgeWeight::Observed) {
                Ok(net) => (
                    GridPoint {
                        theta_w,
                        k_max,
                        modularity: net.modularity,
                        node_count,
                        edge_count,
                        communities: net.community_count(),
                        on_front: false,
                    },
                    Some(net),
                ),
                Err(_) => (
                    GridPoint {
                        theta_w,
                        k_max,
                        modularity: None,
                        node_count,
                        edge_count,
                        communities: 0,
                        on_front: false,
                    },
                    None,
                ),
            }
        })
        .collect();
    let (mut points, networks): (Vec<GridPoint>, Vec<Option<SemanticNetwork>>) = runs.into_iter().unzip();
    let front = pareto_front(&points);
    for &i in &front {
        points[i].on_front = true;
    }
    let selected = match choice {
        Some((theta_w, k_max)) => points
            .iter()
            .position(|p| p.theta_w == theta_w && p.k_max == k_max && p.modularity.is_some())
            .ok_or_else(|| {
                Error::InvalidParameter(format!(
                    "chosen grid point ({theta_w}, {k_max}) is absent or yields an empty network"
                ))
            })?,
        None => {
            let mut best: Option<(usize, f64)> = None;
            for &i in &front {
                let s = points[i].score().unwrap_or(f64::NEG_INFINITY);
                if best.is_none_or(|(_, b)| s > b) {
                    best = Some((i, s));
                }
            }
            best.map(|(i, _)| i).ok_or(Error::EmptyNetwork)?
        }
    };
    let network = networks[selected].clone().ok_or(Error::EmptyNetwork)?;
    Ok(CitationSemanticNetwork {
        network,
        theta_w: points[selected].theta_w,
        k_max: points[selected].k_max,
        grid: points,
        selected,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WordcloudEntry {
    pub ngram: String,
    pub count: u64,
    pub community: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Wordcloud {
    pub article_id: String,
    pub words: Vec<WordcloudEntry>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CitationClassification {
    pub classification: Classification,
    pub wordclouds: BTreeMap<String, Wordcloud>,
}

/// For every seed article, tallies occurrences of community keywords in the
/// abstracts of its citation neighborhood (one hop, or two when
/// `include_control_group`); the share of community `c` is its fraction of the
/// tally. Articles with no neighborhood or no occurrence get a flagged uniform
/// row.
pub fn classify_articles_by_citation(
    corpus: &Corpus,
    neighborhood: &Neighborhood,
    network: &CitationSemanticNetwork,
    config: &RelevanceConfig,
    include_control_group: bool,
    labels: &BTreeMap<usize, String>,
) -> Result<CitationClassification> {
    let net = &network.network;
    let m = net.community_count();
    if m == 0 {
        return Err(Error::InvalidParameter("citation network has no communities".into()));
    }
    let vocabulary: BTreeSet<String> = net
        .nodes
        .iter()
        .filter(|n| n.community.is_some())
        .map(|n| n.keyword.clone())
        .collect();
    let stop = stopwords(&config.language);
    let per_publication: BTreeMap<&String, BTreeMap<String, u64>> = neighborhood
        .abstracts
        .par_iter()
        .map(|(id, text)| (id, count_vocabulary(&clean_tokens(text, &stop), config.ngram_max, &vocabulary)))
        .collect();
    let max_hops = if include_control_group { 2 } else { 1 };

    let mut rows = BTreeMap::new();
    let mut unclassified = BTreeSet::new();
    let mut wordclouds = BTreeMap::new();
    for id in corpus.articles.keys() {
        let mut tally: BTreeMap<&str, u64> = BTreeMap::new();
        for other in neighborhood.around(id, max_hops) {
            if let Some(counts) = per_publication.get(&other) {
                for (g, c) in counts {
                    *tally.entry(g.as_str()).or_insert(0) += c;
                }
            }
        }
        let mut shares = vec![0.0; m];
        let mut words = Vec::new();
        for (g, &count) in &tally {
            let community = net.community_of(g).expect("vocabulary has communities");
            shares[community] += count as f64;
            words.push(WordcloudEntry {
                ngram: g.to_string(),
                count,
                community,
            });
        }
        let total: f64 = shares.iter().sum();
        if total > 0.0 {
            shares.iter_mut().for_each(|s| *s /= total);
            rows.insert(id.clone(), shares);
        } else {
            rows.insert(id.clone(), Classification::uniform_row(m));
            unclassified.insert(id.clone());
        }
        words.sort_by(|a, b| b.count.cmp(&a.count).then_with(|| a.ngram.cmp(&b.ngram)));
        wordclouds.insert(
            id.clone(),
            Wordcloud {
                article_id: id.clone(),
                words,
            },
        );
    }
    let classification = Classification::new(Method::Citations, community_labels(m, labels), rows, unclassified)?;
    Ok(CitationClassification {
        classification,
        wordclouds,
    })
}

/// CSV `ngram,relevance,document_frequency,community` (community empty when the
/// n-gram did not survive filtering).
pub fn relevant_keywords_csv(keywords: &[RelevantKeyword], network: &SemanticNetwork) -> Result<String> {
    let mut writer = csv::Writer::from_writer(Vec::new());
    writer
        .write_record(["ngram", "relevance", "document_frequency", "community"])
        .map_err(|e| Error::InvalidParameter(e.to_string()))?;
    for k in keywords {
        let community = network.community_of(&k.ngram).map(|c| c.to_string()).unwrap_or_default();
        writer
            .write_record([
                k.ngram.clone(),
                k.relevance.to_string(),
                k.document_frequency.to_string(),
                community,
            ])
            .map_err(|e| Error::InvalidParameter(e.to_string()))?;
    }
    let bytes = writer.into_inner().map_err(|e| Error::InvalidParameter(e.to_string()))?;
    Ok(String::from_utf8(bytes).expect("csv output is utf-8"))
}
