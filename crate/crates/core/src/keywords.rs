//! Internal semantic network: the keyword projection of the article–keyword
//! bipartite graph, modal-weight edge statistics, communities and semantic
//! fields.

use std::collections::{BTreeMap, BTreeSet};
use std::f64::consts::TAU;

use serde::{Deserialize, Serialize};

use crate::classification::{Classification, Method};
use crate::corpus::Corpus;
use crate::error::{Error, Result};
use crate::louvain::{louvain, WeightedGraph};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KeywordNode {
    pub keyword: String,
    /// Number of articles using the keyword.
    pub frequency: usize,
    /// Number of incident edges.
    pub degree: usize,
    pub community: Option<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KeywordEdge {
    /// Lexicographically smaller endpoint.
    pub source: String,
    pub target: String,
    pub w_obs: u64,
    pub w_e: Option<f64>,
    pub mw: Option<f64>,
    /// Marginal weight sums of the endpoints and total weight, once computed.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub marginals: Option<EdgeMarginals>,
    #[serde(default, skip_serializing_if = "std::ops::Not::not")]
    pub degenerate: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EdgeMarginals {
    pub w_source: f64,
    pub w_target: f64,
    pub w_total: f64,
}

/// Weighted undirected keyword graph. Nodes are sorted by keyword and edges by
/// `(source, target)`, which fixes the iteration order used by community
/// detection.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SemanticNetwork {
    pub nodes: Vec<KeywordNode>,
    pub edges: Vec<KeywordEdge>,
    pub modularity: Option<f64>,
}

/// Which edge attribute drives community detection.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EdgeWeight {
    Modal,
    Observed,
}

impl SemanticNetwork {
    /// Builds a network from co-occurrence counts keyed by sorted keyword pairs.
    /// Zero-weight pairs are dropped.
    pub fn from_counts(frequency: BTreeMap<String, usize>, pairs: BTreeMap<(String, String), u64>) -> Self {
        let mut degree: BTreeMap<&str, usize> = BTreeMap::new();
        let edges: Vec<KeywordEdge> = pairs
            .into_iter()
            .filter(|(_, w)| *w > 0)
            .map(|((a, b), w)| {
                let (source, target) = if a <= b { (a, b) } else { (b, a) };
                KeywordEdge {
                    source,
                    target,
                    w_obs: w,
                    w_e: None,
                    mw: None,
                    marginals: None,
                    degenerate: false,
                }
            })
            .collect();
        for e in &edges {
            *degree.entry(e.source.as_str()).or_insert(0) += 1;
            *degree.entry(e.target.as_str()).or_insert(0) += 1;
        }
        let nodes = frequency
            .iter()
            .map(|(k, &f)| KeywordNode {
                keyword: k.clone(),
                frequency: f,
                degree: degree.get(k.as_str()).copied().unwrap_or(0),
                community: None,
            })
            .collect();
        let mut edges = edges;
        edges.sort_by(|x, y| (&x.source, &x.target).cmp(&(&y.source, &y.target)));
        Self {
            nodes,
            edges,
            modularity: None,
        }
    }

    pub fn node_index(&self, keyword: &str) -> Option<usize> {
        self.nodes
            .binary_search_by(|n| n.keyword.as_str().cmp(keyword))
            .ok()
    }

    pub fn edge(&self, a: &str, b: &str) -> Option<&KeywordEdge> {
        let (s, t) = if a <= b { (a, b) } else { (b, a) };
        self.edges
            .binary_search_by(|e| (e.source.as_str(), e.target.as_str()).cmp(&(s, t)))
            .ok()
            .map(|i| &self.edges[i])
    }

    pub fn community_count(&self) -> usize {
        self.nodes
            .iter()
            .filter_map(|n| n.community)
            .max()
            .map_or(0, |m| m + 1)
    }

    pub fn community_of(&self, keyword: &str) -> Option<usize> {
        self.node_index(keyword).and_then(|i| self.nodes[i].community)
    }

    /// Weighted degree (sum of observed weights) per node.
    pub fn marginal_weights(&self) -> Vec<f64> {
        let mut w = vec![0.0; self.nodes.len()];
        for e in &self.edges {
            let (Some(i), Some(j)) = (self.node_index(&e.source), self.node_index(&e.target)) else {
                continue;
            };
            w[i] += e.w_obs as f64;
            w[j] += e.w_obs as f64;
        }
        w
    }

    /// Restricts the network to `keep` (node indices), recomputing degrees.
    pub fn induced(&self, keep: &BTreeSet<String>) -> SemanticNetwork {
        let nodes_freq = self
            .nodes
            .iter()
            .filter(|n| keep.contains(&n.keyword))
            .map(|n| (n.keyword.clone(), n.frequency))
            .collect();
        let pairs = self
            .edges
            .iter()
            .filter(|e| keep.contains(&e.source) && keep.contains(&e.target))
            .map(|e| ((e.source.clone(), e.target.clone()), e.w_obs))
            .collect();
        SemanticNetwork::from_counts(nodes_freq, pairs)
    }

    fn to_graph(&self, weight: EdgeWeight) -> WeightedGraph {
        let edges = self.edges.iter().filter_map(|e| {
            let w = match weight {
                EdgeWeight::Modal => e.mw?,
                EdgeWeight::Observed => e.w_obs as f64,
            };
            Some((self.node_index(&e.source)?, self.node_index(&e.target)?, w))
        });
        WeightedGraph::from_edges(self.nodes.len(), edges)
    }
}

/// Projects the article–keyword bipartite network onto keywords.
pub fn project_keyword_network(corpus: &Corpus) -> Result<SemanticNetwork> {
    let mut frequency: BTreeMap<String, usize> = BTreeMap::new();
    let mut pairs: BTreeMap<(String, String), u64> = BTreeMap::new();
    for article in corpus.articles.values() {
        let distinct: BTreeSet<&String> = article.keywords.iter().collect();
        for k in &distinct {
            *frequency.entry((*k).clone()).or_insert(0) += 1;
        }
        let list: Vec<&String> = distinct.into_iter().collect();
        for (x, a) in list.iter().enumerate() {
            for b in &list[x + 1..] {
                *pairs.entry(((*a).clone(), (*b).clone())).or_insert(0) += 1;
            }
        }
    }
    if pairs.is_empty() {
        return Err(Error::EmptyProjection);
    }
    Ok(SemanticNetwork::from_counts(frequency, pairs))
}

/// Fills expected and modal weights on every edge.
///
/// With `w_i`, `w_j` the endpoint weighted degrees and `w` their sum over all
/// nodes: `P(i→j) = w_i w_j / (w (w − w_i))`, `P(j→i)` symmetric,
/// `P(i↔j) = P(i→j) + P(j→i) − P(i→j) P(j→i)`, `w_e = (w / 2) P(i↔j)` and
/// `mw = w_obs / √w_e`. Edges where an endpoint carries the whole weight are
/// flagged degenerate and keep `mw` unset.
pub fn edge_statistics(mut network: SemanticNetwork) -> SemanticNetwork {
    let marginals = network.marginal_weights();
    let total: f64 = marginals.iter().sum();
    let index: BTreeMap<String, usize> = network
        .nodes
        .iter()
        .enumerate()
        .map(|(i, n)| (n.keyword.clone(), i))
        .collect();
    for e in &mut network.edges {
        let wi = marginals[index[&e.source]];
        let wj = marginals[index[&e.target]];
        e.marginals = Some(EdgeMarginals {
            w_source: wi,
            w_target: wj,
            w_total: total,
        });
        if total - wi <= 0.0 || total - wj <= 0.0 {
            e.degenerate = true;
            e.w_e = None;
            e.mw = None;
            continue;
        }
        let p_ij = wi * wj / (total * (total - wi));
        let p_ji = wi * wj / (total * (total - wj));
        let p_union = p_ij + p_ji - p_ij * p_ji;
        let w_e = total / 2.0 * p_union;
        e.degenerate = false;
        e.w_e = Some(w_e);
        e.mw = (w_e > 0.0).then(|| e.w_obs as f64 / w_e.sqrt());
    }
    network
}

/// Seeded Louvain over `weight`; community ids are contiguous and numbered by
/// first appearance in keyword order. Nodes without usable edges stay
/// singletons.
pub fn detect_communities_by(
    mut network: SemanticNetwork,
    seed: u64,
    weight: EdgeWeight,
) -> Result<SemanticNetwork> {
    if network.nodes.is_empty() || network.edges.is_empty() {
        return Err(Error::EmptyNetwork);
    }
    let graph = network.to_graph(weight);
    let partition = louvain(&graph, seed)?;
    // isolated nodes get no community; the rest are renumbered contiguously
    let mut renumbered: BTreeMap<usize, usize> = BTreeMap::new();
    for (i, &c) in partition.membership.iter().enumerate() {
        if graph.degree(i) > 0.0 && !renumbered.contains_key(&c) {
            let next = renumbered.len();
            renumbered.insert(c, next);
        }
    }
    for (i, (node, c)) in network.nodes.iter_mut().zip(&partition.membership).enumerate() {
        node.community = (graph.degree(i) > 0.0).then(|| renumbered[c]);
    }
    network.modularity = Some(partition.modularity);
    Ok(network)
}

/// Communities over modal weights.
pub fn detect_communities(network: SemanticNetwork, seed: u64) -> Result<SemanticNetwork> {
    detect_communities_by(network, seed, EdgeWeight::Modal)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FieldPoint {
    pub keyword: String,
    pub distance: f64,
    pub angle_radians: f64,
    pub community: Option<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SemanticField {
    pub center: String,
    pub points: Vec<FieldPoint>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub notice: Option<String>,
}

fn levenshtein(a: &str, b: &str) -> usize {
    let b: Vec<char> = b.chars().collect();
    let mut prev: Vec<usize> = (0..=b.len()).collect();
    for (i, ca) in a.chars().enumerate() {
        let mut cur = vec![i + 1; b.len() + 1];
        for (j, cb) in b.iter().enumerate() {
            let cost = usize::from(ca != *cb);
            cur[j + 1] = (prev[j] + cost).min(prev[j + 1] + 1).min(cur[j] + 1);
        }
        prev = cur;
    }
    prev[b.len()]
}

/// Radial layout around `center`: each neighbor sits at `1 / mw`, so the unit
/// circle marks `mw = 1`. Neighbors are grouped by community into contiguous
/// angular sectors sized by group, ordered by community id (unassigned last),
/// evenly spaced and keyword-ordered within a sector.
pub fn semantic_field(network: &SemanticNetwork, center: &str) -> Result<SemanticField> {
    let Some(_) = network.node_index(center) else {
        let mut scored: Vec<(usize, &str)> = network
            .nodes
            .iter()
            .map(|n| (levenshtein(center, &n.keyword), n.keyword.as_str()))
            .collect();
        scored.sort();
        return Err(Error::UnknownKeyword {
            keyword: center.to_string(),
            suggestions: scored.iter().take(5).map(|(_, k)| k.to_string()).collect(),
        });
    };
    let mut neighbors: Vec<(Option<usize>, String, f64)> = network
        .edges
        .iter()
        .filter_map(|e| {
            let other = if e.source == center {
                &e.target
            } else if e.target == center {
                &e.source
            } else {
                return None;
            };
            let mw = e.mw.filter(|&m| m > 0.0)?;
            Some((network.community_of(other), other.clone(), mw))
        })
        .collect();
    if neighbors.is_empty() {
        return Ok(SemanticField {
            center: center.to_string(),
            points: Vec::new(),
            notice: Some(format!("`{center}` has no neighbor with a defined modal weight")),
        });
    }
    neighbors.sort_by(|a, b| {
        let ka = a.0.unwrap_or(usize::MAX);
        let kb = b.0.unwrap_or(usize::MAX);
        (ka, &a.1).cmp(&(kb, &b.1))
    });
    let n = neighbors.len() as f64;
    let mut points: Vec<FieldPoint> = neighbors
        .into_iter()
        .enumerate()
        .map(|(slot, (community, keyword, mw))| FieldPoint {
            keyword,
            distance: 1.0 / mw,
            angle_radians: TAU * (slot as f64 + 0.5) / n,
            community,
        })
        .collect();
    points.sort_by(|a, b| {
        a.distance
            .total_cmp(&b.distance)
            .then_with(|| a.keyword.cmp(&b.keyword))
    });
    Ok(SemanticField {
        center: center.to_string(),
        points,
        notice: None,
    })
}

/// Keyword-method classification: an article's share of community `c` is the
/// fraction of its networked keywords that belong to `c`.
pub fn classify_articles_by_keywords(
    corpus: &Corpus,
    network: &SemanticNetwork,
    labels: &BTreeMap<usize, String>,
) -> Result<Classification> {
    let m = network.community_count();
    if m == 0 {
        return Err(Error::InvalidParameter("keyword network has no communities".into()));
    }
    let categories = community_labels(m, labels);
    let mut rows = BTreeMap::new();
    let mut unclassified = BTreeSet::new();
    for article in corpus.articles.values() {
        let mut counts = vec![0.0; m];
        for kw in article.keywords.iter().collect::<BTreeSet<_>>() {
            if let Some(c) = network.community_of(kw) {
                counts[c] += 1.0;
            }
        }
        let total: f64 = counts.iter().sum();
        if total > 0.0 {
            rows.insert(article.id.clone(), counts.iter().map(|c| c / total).collect());
        } else {
            rows.insert(article.id.clone(), Classification::uniform_row(m));
            unclassified.insert(article.id.clone());
        }
    }
    Classification::new(Method::Keywords, categories, rows, unclassified)
}

pub(crate) fn community_labels(count: usize, labels: &BTreeMap<usize, String>) -> Vec<String> {
    (0..count)
        .map(|c| labels.get(&c).cloned().unwrap_or_else(|| format!("community {c}")))
        .collect()
}
