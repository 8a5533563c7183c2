//! Latent Dirichlet allocation estimated by collapsed Gibbs sampling.

use rand::seq::SliceRandom;
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::DocTermMatrix;
use crate::error::{Error, Result};
use crate::rng::rng_for;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct LdaConfig {
    pub k: usize,
    /// Symmetric document-topic prior; `None` means `50 / k`.
    pub alpha: Option<f64>,
    /// Symmetric topic-word prior.
    pub eta: f64,
    pub iterations: usize,
    pub burn_in: usize,
    pub thin: usize,
    pub seed: u64,
}

impl Default for LdaConfig {
    fn default() -> Self {
        Self {
            k: 20,
            alpha: None,
            eta: 0.01,
            iterations: 1000,
            burn_in: 200,
            thin: 10,
            seed: 0,
        }
    }
}

impl LdaConfig {
    pub fn alpha_value(&self) -> f64 {
        self.alpha.unwrap_or(50.0 / self.k as f64)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TopicModel {
    pub k: usize,
    pub alpha: Vec<f64>,
    pub eta: f64,
    /// Mean document length; the Poisson length parameter of the generative
    /// model, not used by the sampler.
    pub epsilon: f64,
    pub doc_ids: Vec<String>,
    pub vocabulary: Vec<String>,
    /// K × V word probabilities per topic.
    pub beta: Vec<Vec<f64>>,
    /// D × K topic shares per document.
    pub theta: Vec<Vec<f64>>,
    /// Final topic assignment of every token, tokens ordered by term index.
    pub z_assignments: Vec<Vec<u32>>,
    pub seed: u64,
    pub iterations: usize,
    pub burn_in: usize,
    pub thin: usize,
    pub samples: usize,
}

impl TopicModel {
    pub fn from_parts(
        doc_ids: Vec<String>,
        vocabulary: Vec<String>,
        beta: Vec<Vec<f64>>,
        theta: Vec<Vec<f64>>,
    ) -> Self {
        let k = beta.len();
        Self {
            k,
            alpha: vec![50.0 / k.max(1) as f64; k],
            eta: 0.01,
            epsilon: 0.0,
            doc_ids,
            vocabulary,
            beta,
            theta,
            z_assignments: Vec::new(),
            seed: 0,
            iterations: 0,
            burn_in: 0,
            thin: 1,
            samples: 0,
        }
    }

    /// Highest-probability words of topic `k`.
    pub fn top_words(&self, k: usize, m: usize) -> Vec<(String, f64)> {
        let mut words: Vec<(usize, f64)> = self.beta[k].iter().copied().enumerate().collect();
        words.sort_by(|a, b| b.1.total_cmp(&a.1).then(a.0.cmp(&b.0)));
        words
            .into_iter()
            .take(m)
            .map(|(w, p)| (self.vocabulary[w].clone(), p))
            .collect()
    }

    /// Mean Shannon entropy (nats) of the document topic shares.
    pub fn mean_theta_entropy(&self) -> f64 {
        if self.theta.is_empty() {
            return 0.0;
        }
        let total: f64 = self
            .theta
            .iter()
            .map(|row| -row.iter().filter(|&&p| p > 0.0).map(|p| p * p.ln()).sum::<f64>())
            .sum();
        total / self.theta.len() as f64
    }

    /// Held-out perplexity by document completion: the tokens of each document
    /// are split at random into halves; the first half estimates its topic
    /// shares by Gibbs fold-in with `beta` fixed and the second is scored.
    /// The split depends on `split_seed` only, so models compared on the same
    /// documents score the same held-out tokens.
    pub fn completion_perplexity(&self, docs: &DocTermMatrix, sweeps: usize, split_seed: u64, seed: u64) -> f64 {
        let alpha = self.alpha.first().copied().unwrap_or(0.1);
        let mut split_rng = rng_for(split_seed, &[0x53_50_4c]);
        let mut rng = rng_for(seed, &[0x50_45_52]);
        let mut log_likelihood = 0.0;
        let mut scored = 0usize;
        let mut weights = vec![0.0; self.k];
        for row in &docs.rows {
            let mut tokens = expand(row);
            tokens.shuffle(&mut split_rng);
            let half = tokens.len().div_ceil(2);
            let (observed, held) = tokens.split_at(half);
            if held.is_empty() {
                continue;
            }
            let mut counts = vec![0.0; self.k];
            let mut z: Vec<usize> = observed
                .iter()
                .map(|_| {
                    let k = rng.gen_range(0..self.k);
                    counts[k] += 1.0;
                    k
                })
                .collect();
            let mut theta_sum = vec![0.0; self.k];
            let mut kept = 0;
            for sweep in 0..sweeps.max(1) {
                for (i, &w) in observed.iter().enumerate() {
                    counts[z[i]] -= 1.0;
                    for k in 0..self.k {
                        weights[k] = (counts[k] + alpha) * self.beta[k][w];
                    }
                    let k = draw(&weights, &mut rng);
                    counts[k] += 1.0;
                    z[i] = k;
                }
                if sweep >= sweeps / 2 {
                    let norm = observed.len() as f64 + alpha * self.k as f64;
                    for k in 0..self.k {
                        theta_sum[k] += (counts[k] + alpha) / norm;
                    }
                    kept += 1;
                }
            }
            let theta: Vec<f64> = theta_sum.iter().map(|t| t / kept as f64).collect();
            for &w in held {
                let p: f64 = (0..self.k).map(|k| theta[k] * self.beta[k][w]).sum();
                log_likelihood += p.ln();
                scored += 1;
            }
        }
        if scored == 0 {
            return f64::NAN;
        }
        (-log_likelihood / scored as f64).exp()
    }
}

fn expand(row: &[(usize, u32)]) -> Vec<usize> {
    row.iter()
        .flat_map(|&(t, c)| std::iter::repeat_n(t, c as usize))
        .collect()
}

fn draw(weights: &[f64], rng: &mut ChaCha8Rng) -> usize {
    let total: f64 = weights.iter().sum();
    let mut u = rng.gen::<f64>() * total;
    for (k, &w) in weights.iter().enumerate() {
        if u < w {
            return k;
        }
        u -= w;
    }
    weights.len() - 1
}

fn normalize(row: &mut [f64]) {
    let sum: f64 = row.iter().sum();
    if sum > 0.0 {
        row.iter_mut().for_each(|x| *x /= sum);
    }
}

/// Collapsed Gibbs sampling over token topic assignments. `beta` and `theta`
/// are averaged over the samples taken every `thin` sweeps after `burn_in`
/// (the final sweep when none falls in that window).
pub fn fit_lda(counts: &DocTermMatrix, config: &LdaConfig) -> Result<TopicModel> {
    let k = config.k;
    let v = counts.term_count();
    if k < 1 {
        return Err(Error::InvalidParameter("topic count must be at least 1".into()));
    }
    if counts.rows.is_empty() || v == 0 {
        return Err(Error::InvalidParameter("empty document-term matrix".into()));
    }
    if k > v {
        return Err(Error::InvalidParameter(format!(
            "topic count {k} exceeds dictionary size {v}"
        )));
    }
    if config.iterations < config.burn_in {
        return Err(Error::InvalidParameter(format!(
            "iterations ({}) below burn-in ({})",
            config.iterations, config.burn_in
        )));
    }
    if config.iterations == 0 || config.thin == 0 {
        return Err(Error::InvalidParameter("iterations and thin must be positive".into()));
    }
    let alpha = config.alpha_value();
    let eta = config.eta;
    if !(alpha > 0.0) || !(eta > 0.0) {
        return Err(Error::InvalidParameter("priors must be positive".into()));
    }
    let d_count = counts.rows.len();
    let docs: Vec<Vec<usize>> = counts.rows.iter().map(|r| expand(r)).collect();
    let mut rng = rng_for(config.seed, &[0x004c_4441]);

    let mut n_dk = vec![vec![0.0f64; k]; d_count];
    let mut n_kw = vec![0.0f64; k * v];
    let mut n_k = vec![0.0f64; k];
    let mut z: Vec<Vec<u32>> = docs
        .iter()
        .enumerate()
        .map(|(d, tokens)| {
            tokens
                .iter()
                .map(|&w| {
                    let t = rng.gen_range(0..k);
                    n_dk[d][t] += 1.0;
                    n_kw[t * v + w] += 1.0;
                    n_k[t] += 1.0;
                    t as u32
                })
                .collect()
        })
        .collect();

    let v_eta = v as f64 * eta;
    let mut weights = vec![0.0; k];
    let mut beta_sum = vec![vec![0.0; v]; k];
    let mut theta_sum = vec![vec![0.0; k]; d_count];
    let mut samples = 0usize;
    let mut accumulate = |n_dk: &[Vec<f64>], n_kw: &[f64], n_k: &[f64], samples: &mut usize| {
        for t in 0..k {
            let denom = n_k[t] + v_eta;
            for w in 0..v {
                beta_sum[t][w] += (n_kw[t * v + w] + eta) / denom;
            }
        }
        for (d, row) in n_dk.iter().enumerate() {
            let denom = docs[d].len() as f64 + alpha * k as f64;
            for t in 0..k {
                theta_sum[d][t] += (row[t] + alpha) / denom;
            }
        }
        *samples += 1;
    };

    for sweep in 1..=config.iterations {
        for (d, tokens) in docs.iter().enumerate() {
            let row = &mut n_dk[d];
            for (i, &w) in tokens.iter().enumerate() {
                let old = z[d][i] as usize;
                row[old] -= 1.0;
                n_kw[old * v + w] -= 1.0;
                n_k[old] -= 1.0;
                for t in 0..k {
                    weights[t] = (row[t] + alpha) * (n_kw[t * v + w] + eta) / (n_k[t] + v_eta);
                }
                let new = draw(&weights, &mut rng);
                row[new] += 1.0;
                n_kw[new * v + w] += 1.0;
                n_k[new] += 1.0;
                z[d][i] = new as u32;
            }
        }
        if sweep > config.burn_in && (sweep - config.burn_in).is_multiple_of(config.thin) {
            accumulate(&n_dk, &n_kw, &n_k, &mut samples);
        }
    }
    if samples == 0 {
        accumulate(&n_dk, &n_kw, &n_k, &mut samples);
    }
    for row in beta_sum.iter_mut().chain(theta_sum.iter_mut()) {
        normalize(row);
    }
    let total_tokens: usize = docs.iter().map(Vec::len).sum();
    Ok(TopicModel {
        k,
        alpha: vec![alpha; k],
        eta,
        epsilon: total_tokens as f64 / d_count as f64,
        doc_ids: counts.doc_ids.clone(),
        vocabulary: counts.vocabulary.clone(),
        beta: beta_sum,
        theta: theta_sum,
        z_assignments: z,
        seed: config.seed,
        iterations: config.iterations,
        burn_in: config.burn_in,
        thin: config.thin,
        samples,
    })
}
