//! Text cleaning and n-gram extraction for abstracts.

use std::collections::{BTreeMap, BTreeSet, HashSet};

const STOPWORDS_EN: &str = include_str!("stopwords/en.txt");
const STOPWORDS_FR: &str = include_str!("stopwords/fr.txt");

/// Bundled stop-word list; unknown languages get an empty list.
pub fn stopwords(language: &str) -> HashSet<&'static str> {
    let source = match language {
        "en" => STOPWORDS_EN,
        "fr" => STOPWORDS_FR,
        _ => "",
    };
    source.split_whitespace().collect()
}

/// Lowercases, replaces every non-alphanumeric character (except inner
/// hyphens) by a space, splits on whitespace and drops stop-words and
/// purely numeric tokens.
pub fn clean_tokens(text: &str, stopwords: &HashSet<&str>) -> Vec<String> {
    let lowered = text.to_lowercase();
    let spaced: String = lowered
        .chars()
        .map(|c| if c.is_alphanumeric() || c == '-' { c } else { ' ' })
        .collect();
    spaced
        .split_whitespace()
        .map(|t| t.trim_matches('-'))
        .filter(|t| !t.is_empty())
        .filter(|t| !t.chars().all(|c| c.is_numeric() || c == '-'))
        .filter(|t| !stopwords.contains(t))
        .map(str::to_string)
        .collect()
}

/// Counts every contiguous n-gram of length `1..=max_len`, joined by a single
/// space.
pub fn ngram_counts(tokens: &[String], max_len: usize) -> BTreeMap<String, u64> {
    let mut counts = BTreeMap::new();
    for n in 1..=max_len.max(1) {
        for window in tokens.windows(n) {
            *counts.entry(window.join(" ")).or_insert(0) += 1;
        }
    }
    counts
}

/// Counts only the n-grams in `vocabulary`.
pub fn count_vocabulary(
    tokens: &[String],
    max_len: usize,
    vocabulary: &BTreeSet<String>,
) -> BTreeMap<String, u64> {
    let mut counts = ngram_counts(tokens, max_len);
    counts.retain(|k, _| vocabulary.contains(k));
    counts
}
