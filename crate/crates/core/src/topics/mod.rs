//! Full-text topic allocation: part-of-speech filtering into bags of lemmas,
//! tfidf weighting, collapsed Gibbs LDA, topic-count selection and yearly
//! topic evolution.

pub mod lda;
pub mod selection;
pub mod tokens;

use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

use crate::classification::{Classification, Method};
use crate::corpus::Corpus;
use crate::error::{Error, Result};

pub use lda::{fit_lda, LdaConfig, TopicModel};
pub use selection::{select_topic_count, ModelSelectionReport};
pub use tokens::{Pos, Token, TokenStream};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct PreprocessOptions {
    /// Keep determiners alongside nouns and verbs.
    pub keep_determiners: bool,
}

impl Default for PreprocessOptions {
    fn default() -> Self {
        Self {
            keep_determiners: true,
        }
    }
}

impl PreprocessOptions {
    pub fn keeps(&self, pos: Pos) -> bool {
        match pos {
            Pos::Noun | Pos::Propn | Pos::Verb => true,
            Pos::Det => self.keep_determiners,
            _ => false,
        }
    }
}

/// Sparse document-term counts over a sorted dictionary.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DocTermMatrix {
    pub doc_ids: Vec<String>,
    pub vocabulary: Vec<String>,
    /// Per document, `(term index, count)` sorted by term index.
    pub rows: Vec<Vec<(usize, u32)>>,
    /// Documents dropped for having no retained token.
    #[serde(default)]
    pub excluded: Vec<String>,
}

impl DocTermMatrix {
    pub fn document_count(&self) -> usize {
        self.rows.len()
    }

    pub fn term_count(&self) -> usize {
        self.vocabulary.len()
    }

    pub fn document_frequency(&self) -> Vec<usize> {
        let mut df = vec![0; self.vocabulary.len()];
        for row in &self.rows {
            for &(t, _) in row {
                df[t] += 1;
            }
        }
        df
    }

    pub fn count(&self, doc: usize, term: usize) -> u32 {
        self.rows[doc]
            .binary_search_by_key(&term, |&(t, _)| t)
            .map(|i| self.rows[doc][i].1)
            .unwrap_or(0)
    }

    /// Keeps only the listed documents (by position), preserving the dictionary.
    pub fn select(&self, docs: &[usize]) -> DocTermMatrix {
        DocTermMatrix {
            doc_ids: docs.iter().map(|&d| self.doc_ids[d].clone()).collect(),
            vocabulary: self.vocabulary.clone(),
            rows: docs.iter().map(|&d| self.rows[d].clone()).collect(),
            excluded: Vec::new(),
        }
    }
}

/// Token streams of the articles written in `language`.
pub fn language_subcorpus(corpus: &Corpus, language: &str) -> Vec<TokenStream> {
    corpus
        .fulltexts
        .iter()
        .filter(|(id, _)| corpus.articles.get(*id).is_some_and(|a| a.language == language))
        .map(|(_, s)| s.clone())
        .collect()
}

/// Counts retained lemmas per document. Documents left without any retained
/// token are listed in `excluded`.
pub fn preprocess(streams: &[TokenStream], options: &PreprocessOptions) -> Result<DocTermMatrix> {
    let mut per_doc: Vec<(String, BTreeMap<&str, u32>)> = Vec::new();
    let mut excluded = Vec::new();
    let mut dictionary = BTreeSet::new();
    for stream in streams {
        let mut counts: BTreeMap<&str, u32> = BTreeMap::new();
        for token in stream.tokens.iter().filter(|t| options.keeps(t.pos)) {
            *counts.entry(token.lemma.as_str()).or_insert(0) += 1;
        }
        if counts.is_empty() {
            excluded.push(stream.article_id.clone());
            continue;
        }
        dictionary.extend(counts.keys().copied());
        per_doc.push((stream.article_id.clone(), counts));
    }
    if per_doc.is_empty() {
        return Err(Error::InvalidParameter("no document retains any token".into()));
    }
    let vocabulary: Vec<String> = dictionary.iter().map(|s| s.to_string()).collect();
    let index: BTreeMap<&str, usize> = dictionary.iter().enumerate().map(|(i, s)| (*s, i)).collect();
    let (doc_ids, rows) = per_doc
        .into_iter()
        .map(|(id, counts)| (id, counts.into_iter().map(|(l, c)| (index[l], c)).collect()))
        .unzip();
    Ok(DocTermMatrix {
        doc_ids,
        vocabulary,
        rows,
        excluded,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TfidfMatrix {
    pub doc_ids: Vec<String>,
    pub vocabulary: Vec<String>,
    pub rows: Vec<Vec<(usize, f64)>>,
}

impl TfidfMatrix {
    pub fn weight(&self, doc: usize, term: usize) -> f64 {
        self.rows[doc]
            .binary_search_by_key(&term, |&(t, _)| t)
            .map(|i| self.rows[doc][i].1)
            .unwrap_or(0.0)
    }
}

/// `f(t,d) · ln(N / df(t))`.
pub fn tfidf(counts: &DocTermMatrix) -> Result<TfidfMatrix> {
    if counts.rows.is_empty() {
        return Err(Error::InvalidParameter("empty document-term matrix".into()));
    }
    let n = counts.document_count() as f64;
    let idf: Vec<f64> = counts
        .document_frequency()
        .into_iter()
        .map(|df| if df == 0 { 0.0 } else { (n / df as f64).ln() })
        .collect();
    let rows = counts
        .rows
        .iter()
        .map(|row| row.iter().map(|&(t, f)| (t, f64::from(f) * idf[t])).collect())
        .collect();
    Ok(TfidfMatrix {
        doc_ids: counts.doc_ids.clone(),
        vocabulary: counts.vocabulary.clone(),
        rows,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TopicEvolution {
    pub threshold: f64,
    pub topics: usize,
    /// Per year, number of documents addressing each topic.
    pub counts: BTreeMap<i32, Vec<usize>>,
    pub documents_per_year: BTreeMap<i32, usize>,
}

/// A document addresses topic `k` when its share of `k` is at least
/// `threshold`.
pub fn topic_evolution(model: &TopicModel, corpus: &Corpus, threshold: f64) -> TopicEvolution {
    let mut counts: BTreeMap<i32, Vec<usize>> = BTreeMap::new();
    let mut documents_per_year = BTreeMap::new();
    for (doc, id) in model.doc_ids.iter().enumerate() {
        let Some(article) = corpus.articles.get(id) else {
            continue;
        };
        *documents_per_year.entry(article.year).or_insert(0) += 1;
        let row = counts.entry(article.year).or_insert_with(|| vec![0; model.k]);
        for (k, &share) in model.theta[doc].iter().enumerate() {
            if share >= threshold {
                row[k] += 1;
            }
        }
    }
    TopicEvolution {
        threshold,
        topics: model.k,
        counts,
        documents_per_year,
    }
}

/// Years of the modelled documents, in model order; used to recompute the
/// evolution table without the corpus.
pub fn document_years(model: &TopicModel, corpus: &Corpus) -> Vec<Option<i32>> {
    model
        .doc_ids
        .iter()
        .map(|id| corpus.articles.get(id).map(|a| a.year))
        .collect()
}

pub fn topic_labels(k: usize) -> Vec<String> {
    (1..=k).map(|i| format!("topic {i}")).collect()
}

/// Topic-method classification: each modelled article's row is its theta row.
pub fn classify_articles_by_topics(model: &TopicModel) -> Result<Classification> {
    let rows = model
        .doc_ids
        .iter()
        .cloned()
        .zip(model.theta.iter().cloned())
        .collect();
    Classification::new(Method::Topics, topic_labels(model.k), rows, BTreeSet::new())
}
