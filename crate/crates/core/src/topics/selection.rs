//! Topic-count selection by held-out perplexity, with theta entropy reported.

use rand::seq::SliceRandom;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::lda::{fit_lda, LdaConfig};
use super::DocTermMatrix;
use crate::error::{Error, Result};
use crate::rng::{derive_seed, rng_for};

/// Fold-in sweeps used when scoring held-out documents.
const FOLD_IN_SWEEPS: usize = 200;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelSelectionReport {
    pub candidate_ks: Vec<usize>,
    /// Mean per-document theta entropy (nats) per candidate.
    pub entropy: Vec<f64>,
    /// Mean held-out perplexity per candidate.
    pub perplexity: Vec<f64>,
    pub replications: usize,
    pub chosen_k: usize,
    pub holdout_fraction: f64,
    pub entropy_definition: String,
    pub perplexity_definition: String,
}

/// Splits document positions into (train, held-out) for one replication.
fn split(n: usize, fraction: f64, seed: u64) -> (Vec<usize>, Vec<usize>) {
    let mut order: Vec<usize> = (0..n).collect();
    order.shuffle(&mut rng_for(seed, &[0x5350_4c54]));
    let held = ((n as f64 * fraction).round() as usize).clamp(usize::from(n > 1), n.saturating_sub(1));
    let mut test = order[..held].to_vec();
    let mut train = order[held..].to_vec();
    test.sort_unstable();
    train.sort_unstable();
    (train, test)
}

/// For every candidate K and replication, fits LDA on a random
/// `1 - holdout_fraction` share of the documents and scores the rest.
/// The chosen K minimizes mean perplexity; ties go to the smaller K.
pub fn select_topic_count(
    counts: &DocTermMatrix,
    candidates: &[usize],
    replications: usize,
    base: &LdaConfig,
    holdout_fraction: f64,
    seed: u64,
) -> Result<ModelSelectionReport> {
    if candidates.is_empty() {
        return Err(Error::InvalidParameter("no candidate topic count".into()));
    }
    if replications < 1 {
        return Err(Error::InvalidParameter("replications must be at least 1".into()));
    }
    if !(0.0..1.0).contains(&holdout_fraction) {
        return Err(Error::InvalidParameter("holdout fraction must lie in [0, 1)".into()));
    }
    let jobs: Vec<(usize, usize)> = (0..candidates.len())
        .flat_map(|c| (0..replications).map(move |r| (c, r)))
        .collect();
    let results: Vec<Result<(f64, f64)>> = jobs
        .par_iter()
        .map(|&(c, r)| {
            let split_seed = derive_seed(seed, &[r as u64]);
            let (train, test) = split(counts.document_count(), holdout_fraction, split_seed);
            let config = LdaConfig {
                k: candidates[c],
                seed: derive_seed(seed, &[r as u64, candidates[c] as u64]),
                ..base.clone()
            };
            let model = fit_lda(&counts.select(&train), &config)?;
            let scored = if test.is_empty() { counts.clone() } else { counts.select(&test) };
            let perplexity = model.completion_perplexity(&scored, FOLD_IN_SWEEPS, split_seed, config.seed);
            Ok((model.mean_theta_entropy(), perplexity))
        })
        .collect();
    let mut entropy = vec![0.0; candidates.len()];
    let mut perplexity = vec![0.0; candidates.len()];
    for (&(c, _), result) in jobs.iter().zip(results) {
        let (e, p) = result?;
        entropy[c] += e / replications as f64;
        perplexity[c] += p / replications as f64;
    }
    let mut chosen = 0;
    for c in 1..candidates.len() {
        let better = perplexity[c] < perplexity[chosen]
            || (perplexity[c] == perplexity[chosen] && candidates[c] < candidates[chosen]);
        if better || perplexity[chosen].is_nan() {
            chosen = c;
        }
    }
    Ok(ModelSelectionReport {
        candidate_ks: candidates.to_vec(),
        entropy,
        perplexity,
        replications,
        chosen_k: candidates[chosen],
        holdout_fraction,
        entropy_definition: "mean Shannon entropy (nats) of per-document topic shares".into(),
        perplexity_definition: "document completion on held-out documents: topic shares folded in on a random half of each document's tokens, the other half scored".into(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn single_candidate_is_chosen() {
        let m = DocTermMatrix {
            doc_ids: (0..10).map(|i| i.to_string()).collect(),
            vocabulary: vec!["a".into(), "b".into(), "c".into()],
            rows: (0..10).map(|i| vec![(i % 3, 4), ((i + 1) % 3, 2)].into_iter().collect::<std::collections::BTreeMap<_, _>>().into_iter().collect()).collect(),
            excluded: vec![],
        };
        let base = LdaConfig {
            iterations: 30,
            burn_in: 10,
            thin: 5,
            ..Default::default()
        };
        let r = select_topic_count(&m, &[2], 2, &base, 0.1, 3).unwrap();
        assert_eq!(r.chosen_k, 2);
        assert_eq!(r.entropy.len(), 1);
        assert!(r.perplexity[0].is_finite());
    }

    #[test]
    fn split_sizes() {
        let (train, test) = split(100, 0.1, 7);
        assert_eq!(test.len(), 10);
        assert_eq!(train.len(), 90);
        let (train, test) = split(5, 0.0, 7);
        assert_eq!((train.len(), test.len()), (4, 1));
    }
}
