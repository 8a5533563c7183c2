//! Synthetic fixtures shared by the integration tests.
#![allow(dead_code)]

use std::collections::{BTreeMap, BTreeSet};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use semscope_core::topics::DocTermMatrix;
use semscope_core::{Classification, Method};

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Gamma(shape, 1) sample (Marsaglia–Tsang, with boosting for shape < 1).
pub fn gamma(shape: f64, rng: &mut impl Rng) -> f64 {
    if shape < 1.0 {
        let u: f64 = rng.gen();
        return gamma(shape + 1.0, rng) * u.powf(1.0 / shape);
    }
    let d = shape - 1.0 / 3.0;
    let c = 1.0 / (9.0 * d).sqrt();
    loop {
        let (x, v) = loop {
            let u1: f64 = rng.gen();
            let u2: f64 = rng.gen();
            let x = (-2.0 * u1.max(1e-300).ln()).sqrt() * (std::f64::consts::TAU * u2).cos();
            let v = (1.0 + c * x).powi(3);
            if v > 0.0 {
                break (x, v);
            }
        };
        let u: f64 = rng.gen();
        if u.ln() < 0.5 * x * x + d - d * v - d * v.ln() {
            return d * v;
        }
    }
}

pub fn dirichlet(alpha: &[f64], rng: &mut impl Rng) -> Vec<f64> {
    let g: Vec<f64> = alpha.iter().map(|&a| gamma(a, rng)).collect();
    let s: f64 = g.iter().sum();
    g.into_iter().map(|x| x / s).collect()
}

pub fn categorical(p: &[f64], rng: &mut impl Rng) -> usize {
    let mut u: f64 = rng.gen();
    for (i, &x) in p.iter().enumerate() {
        if u < x {
            return i;
        }
        u -= x;
    }
    p.len() - 1
}

/// Documents drawn from `topics` planted topics over disjoint vocabularies of
/// `words_per_topic` words each (Zipf-shaped within a topic). Word `w` of
/// topic `t` is named `t{t}w{w}`.
pub struct PlantedCorpus {
    pub matrix: DocTermMatrix,
    pub beta: Vec<Vec<f64>>,
    pub theta: Vec<Vec<f64>>,
    pub words_per_topic: usize,
}

pub fn planted_corpus(docs: usize, topics: usize, words_per_topic: usize, doc_len: usize, seed: u64) -> PlantedCorpus {
    let mut r = rng(seed);
    let v = topics * words_per_topic;
    let zipf: Vec<f64> = (1..=words_per_topic).map(|i| 1.0 / i as f64).collect();
    let z: f64 = zipf.iter().sum();
    let beta: Vec<Vec<f64>> = (0..topics)
        .map(|t| {
            let mut row = vec![0.0; v];
            for (w, p) in zipf.iter().enumerate() {
                row[t * words_per_topic + w] = p / z;
            }
            row
        })
        .collect();
    // vocabulary sorted lexicographically must match term indices
    let mut names: Vec<(String, usize)> = (0..v)
        .map(|i| (format!("t{}w{:03}", i / words_per_topic, i % words_per_topic), i))
        .collect();
    names.sort();
    let position: Vec<usize> = {
        let mut p = vec![0; v];
        for (pos, (_, i)) in names.iter().enumerate() {
            p[*i] = pos;
        }
        p
    };
    let mut theta = Vec::new();
    let mut rows = Vec::new();
    for _ in 0..docs {
        let th = dirichlet(&vec![0.1; topics], &mut r);
        let mut counts: BTreeMap<usize, u32> = BTreeMap::new();
        for _ in 0..doc_len {
            let t = categorical(&th, &mut r);
            let w = categorical(&beta[t], &mut r);
            *counts.entry(position[w]).or_insert(0) += 1;
        }
        rows.push(counts.into_iter().collect());
        theta.push(th);
    }
    let mut sorted_beta = vec![vec![0.0; v]; topics];
    for t in 0..topics {
        for i in 0..v {
            sorted_beta[t][position[i]] = beta[t][i];
        }
    }
    PlantedCorpus {
        matrix: DocTermMatrix {
            doc_ids: (0..docs).map(|d| format!("d{d:04}")).collect(),
            vocabulary: names.into_iter().map(|(n, _)| n).collect(),
            rows,
            excluded: vec![],
        },
        beta: sorted_beta,
        theta,
        words_per_topic,
    }
}

/// Random stochastic classification over `rows` articles named `a0000..`.
pub fn random_classification(method: Method, rows: usize, categories: usize, seed: u64) -> Classification {
    let mut r = rng(seed);
    let rows: BTreeMap<String, Vec<f64>> = (0..rows)
        .map(|i| {
            let raw: Vec<f64> = (0..categories).map(|_| r.gen::<f64>()).collect();
            let s: f64 = raw.iter().sum();
            (format!("a{i:04}"), raw.into_iter().map(|x| x / s).collect())
        })
        .collect();
    Classification::new(
        method,
        (0..categories).map(|c| format!("c{c}")).collect(),
        rows,
        BTreeSet::new(),
    )
    .unwrap()
}

pub fn demo_dir() -> std::path::PathBuf {
    std::path::Path::new(env!("CARGO_MANIFEST_DIR")).join("../../data/demo")
}

/// The bundled demo corpus: 60 articles over three themes with citations and
/// French full texts.
pub fn demo_corpus() -> semscope_core::Corpus {
    let dir = demo_dir();
    semscope_core::corpus::load_corpus(&dir.join("articles.csv"), Some(&dir.join("citations.csv"))).unwrap()
}

/// Short sampler and bootstrap settings for end-to-end runs.
pub fn fast_config() -> semscope_core::PipelineConfig {
    let mut config = semscope_core::PipelineConfig::default();
    config.topics.candidates = vec![2, 3, 4];
    config.topics.replications = 2;
    config.topics.lda.iterations = 120;
    config.topics.lda.burn_in = 60;
    config.topics.lda.thin = 10;
    config.complementarity.bootstrap_reps = 200;
    config.complementarity.threshold_count = 8;
    config
}

pub fn article(id: &str, year: i32, keywords: &[&str], authoring: &[&str], studied: &[&str]) -> semscope_core::Article {
    let owned = |xs: &[&str]| xs.iter().map(|s| s.to_string()).collect();
    semscope_core::Article {
        id: id.into(),
        year,
        language: "en".into(),
        keywords: owned(keywords),
        authoring_countries: owned(authoring),
        studied_countries: owned(studied),
        abstract_text: None,
        fulltext_ref: None,
    }
}

pub fn cite(citing: &str, cited: &str, depth: u8, text: Option<&str>) -> semscope_core::CitationRecord {
    semscope_core::CitationRecord {
        citing_id: citing.into(),
        cited_id: cited.into(),
        depth,
        abstract_text: text.map(str::to_string),
    }
}

pub fn corpus(articles: Vec<semscope_core::Article>, citations: Vec<semscope_core::CitationRecord>) -> semscope_core::Corpus {
    semscope_core::Corpus::new(articles, citations, BTreeMap::new(), Default::default()).unwrap()
}

/// Articles whose keywords are random draws from `vocabulary` keywords named
/// `k00..`.
pub fn random_keyword_corpus(articles: usize, vocabulary: usize, max_keywords: usize, seed: u64) -> semscope_core::Corpus {
    let mut r = rng(seed);
    let names: Vec<String> = (0..vocabulary).map(|k| format!("k{k:02}")).collect();
    let list = (0..articles)
        .map(|i| {
            let count = r.gen_range(1..=max_keywords);
            let kws: Vec<&str> = (0..count).map(|_| names[r.gen_range(0..vocabulary)].as_str()).collect();
            article(&format!("a{i:03}"), 2010, &kws, &["FR"], &["FR"])
        })
        .collect();
    corpus(list, vec![])
}

/// Normalized mutual information (arithmetic-mean normalization) between two
/// hard labelings.
pub fn nmi(x: &[usize], y: &[usize]) -> f64 {
    let n = x.len() as f64;
    let mut joint: BTreeMap<(usize, usize), f64> = BTreeMap::new();
    let mut px: BTreeMap<usize, f64> = BTreeMap::new();
    let mut py: BTreeMap<usize, f64> = BTreeMap::new();
    for (&a, &b) in x.iter().zip(y) {
        *joint.entry((a, b)).or_insert(0.0) += 1.0 / n;
        *px.entry(a).or_insert(0.0) += 1.0 / n;
        *py.entry(b).or_insert(0.0) += 1.0 / n;
    }
    let h = |p: &BTreeMap<usize, f64>| -p.values().map(|v| v * v.ln()).sum::<f64>();
    let mi: f64 = joint.iter().map(|((a, b), p)| p * (p / (px[a] * py[b])).ln()).sum();
    let (hx, hy) = (h(&px), h(&py));
    if hx + hy == 0.0 {
        return 1.0;
    }
    2.0 * mi / (hx + hy)
}

/// Planted-partition graph: `blocks` equal blocks over `n` nodes.
pub fn planted_partition(n: usize, blocks: usize, p_in: f64, p_out: f64, seed: u64) -> (semscope_core::louvain::WeightedGraph, Vec<usize>) {
    let mut r = rng(seed);
    let truth: Vec<usize> = (0..n).map(|i| i * blocks / n).collect();
    let mut edges = Vec::new();
    for i in 0..n {
        for j in i + 1..n {
            let p = if truth[i] == truth[j] { p_in } else { p_out };
            if r.gen::<f64>() < p {
                edges.push((i, j, 1.0));
            }
        }
    }
    (semscope_core::louvain::WeightedGraph::from_edges(n, edges), truth)
}

/// Fraction of each fitted topic's top-10 words that belong to its majority
/// planted topic, pooled over topics.
pub fn purity(model: &semscope_core::topics::TopicModel) -> (f64, Vec<usize>) {
    let mut hits = 0;
    let mut majority = Vec::new();
    for k in 0..model.k {
        let mut votes: BTreeMap<String, usize> = BTreeMap::new();
        for (word, _) in model.top_words(k, 10) {
            *votes.entry(word[..2].to_string()).or_insert(0) += 1;
        }
        let (best, n) = votes.iter().max_by_key(|(_, n)| **n).unwrap();
        hits += n;
        majority.push(best[1..].parse().unwrap());
    }
    (hits as f64 / (10 * model.k) as f64, majority)
}

pub fn pearson(x: &[f64], y: &[f64]) -> f64 {
    let n = x.len() as f64;
    let (mx, my) = (x.iter().sum::<f64>() / n, y.iter().sum::<f64>() / n);
    let cov: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let vx: f64 = x.iter().map(|a| (a - mx).powi(2)).sum();
    let vy: f64 = y.iter().map(|b| (b - my).powi(2)).sum();
    cov / (vx * vy).sqrt()
}

pub fn random_rows(n: usize, m: usize, r: &mut impl Rng) -> Vec<Vec<f64>> {
    (0..n)
        .map(|_| {
            let raw: Vec<f64> = (0..m).map(|_| r.gen::<f64>()).collect();
            let s: f64 = raw.iter().sum();
            raw.into_iter().map(|x| x / s).collect()
        })
        .collect()
}

/// Mean |ρ| over all column pairs of two independent random stochastic
/// matrices, repeated `reps` times.
pub fn monte_carlo_mean_abs(n: usize, ma: usize, mb: usize, reps: usize, seed: u64) -> (f64, f64) {
    let mut r = rng(seed);
    let values: Vec<f64> = (0..reps)
        .map(|_| {
            let a = random_rows(n, ma, &mut r);
            let b = random_rows(n, mb, &mut r);
            let mut total = 0.0;
            for i in 0..ma {
                let x: Vec<f64> = a.iter().map(|row| row[i]).collect();
                for j in 0..mb {
                    let y: Vec<f64> = b.iter().map(|row| row[j]).collect();
                    total += pearson(&x, &y).abs();
                }
            }
            total / (ma * mb) as f64
        })
        .collect();
    let mean = values.iter().sum::<f64>() / reps as f64;
    let sd = (values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (reps - 1) as f64).sqrt();
    (mean, sd)
}

/// Two planted blocks of 15 documents with noisy memberships.
pub fn two_blocks(seed: u64) -> (Classification, Classification) {
    let mut r = rng(seed);
    let mut rows_a = BTreeMap::new();
    let mut rows_b = BTreeMap::new();
    for i in 0..30 {
        let block = i / 15;
        let p: f64 = 0.7 + 0.3 * r.gen::<f64>();
        let mut a = vec![1.0 - p, 1.0 - p];
        a[block] = p;
        let q: f64 = 0.6 + 0.4 * r.gen::<f64>();
        let mut b = vec![(1.0 - q) / 2.0; 3];
        b[block] = q;
        rows_a.insert(format!("d{i:02}"), a);
        rows_b.insert(format!("d{i:02}"), b);
    }
    let a = Classification::new(Method::Keywords, vec!["x".into(), "y".into()], rows_a, BTreeSet::new()).unwrap();
    let b = Classification::new(
        Method::Topics,
        vec!["p".into(), "q".into(), "r".into()],
        rows_b,
        BTreeSet::new(),
    )
    .unwrap();
    (a, b)
}

pub fn dist(x: &[f64], y: &[f64]) -> f64 {
    x.iter().zip(y).map(|(a, b)| (a - b).powi(2)).sum::<f64>().sqrt()
}

/// Dense double sum over every ordered pair of documents.
pub fn direct_modularity(adj: &[Vec<f64>], alpha: &[Vec<f64>]) -> Option<f64> {
    let n = adj.len();
    let k: Vec<f64> = adj.iter().map(|row| row.iter().sum()).collect();
    let two_m: f64 = k.iter().sum();
    if two_m == 0.0 {
        return None;
    }
    let mut q = 0.0;
    for i in 0..n {
        for j in 0..n {
            let overlap: f64 = alpha[i].iter().zip(&alpha[j]).map(|(x, y)| x * y).sum();
            q += (adj[i][j] - k[i] * k[j] / two_m) * overlap;
        }
    }
    Some(q / two_m)
}
