//! Pairwise comparison of classifications: flow matrices, column correlations
//! against two bootstrap null models, and cross-induced multi-class
//! modularity on distance-threshold document networks.

use rand::seq::SliceRandom;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::classification::{Classification, Method};
use crate::error::{Error, Result};
use crate::rng::rng_for;

/// Shared article ids with the matching rows of each classification.
type SharedRows<'a> = (Vec<String>, Vec<&'a [f64]>, Vec<&'a [f64]>);

/// Rows of both classifications over their shared classified articles.
fn shared_rows<'a>(a: &'a Classification, b: &'a Classification) -> Result<SharedRows<'a>> {
    let ids = a.shared_ids(b);
    if ids.is_empty() {
        return Err(Error::EmptyIntersection);
    }
    let ra = ids.iter().map(|id| a.row(id).expect("shared")).collect();
    let rb = ids.iter().map(|id| b.row(id).expect("shared")).collect();
    Ok((ids, ra, rb))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FlowMatrix {
    pub method_a: Method,
    pub method_b: Method,
    pub categories_a: Vec<String>,
    pub categories_b: Vec<String>,
    /// `flows[i][j]`: summed co-membership of category `i` of `a` and `j` of `b`.
    pub flows: Vec<Vec<f64>>,
    pub shared_articles: usize,
    pub only_a: usize,
    pub only_b: usize,
}

impl FlowMatrix {
    pub fn total(&self) -> f64 {
        self.flows.iter().flatten().sum()
    }

    pub fn transpose(&self) -> FlowMatrix {
        let n = self.categories_b.len();
        FlowMatrix {
            method_a: self.method_b,
            method_b: self.method_a,
            categories_a: self.categories_b.clone(),
            categories_b: self.categories_a.clone(),
            flows: (0..n).map(|j| self.flows.iter().map(|row| row[j]).collect()).collect(),
            shared_articles: self.shared_articles,
            only_a: self.only_b,
            only_b: self.only_a,
        }
    }

    /// Node/link form for alluvial rendering. Node indices list `a`'s
    /// categories first, then `b`'s.
    pub fn sankey(&self) -> Sankey {
        let n = self.categories_a.len();
        let mut nodes: Vec<SankeyNode> = self
            .categories_a
            .iter()
            .enumerate()
            .map(|(i, c)| SankeyNode {
                method: self.method_a,
                category: c.clone(),
                size: self.flows[i].iter().sum(),
            })
            .collect();
        nodes.extend(self.categories_b.iter().enumerate().map(|(j, c)| SankeyNode {
            method: self.method_b,
            category: c.clone(),
            size: self.flows.iter().map(|row| row[j]).sum(),
        }));
        let mut links = Vec::new();
        for (i, row) in self.flows.iter().enumerate() {
            for (j, &value) in row.iter().enumerate() {
                if value > 0.0 {
                    links.push(SankeyLink {
                        source: i,
                        target: n + j,
                        value,
                    });
                }
            }
        }
        Sankey { nodes, links }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SankeyNode {
    pub method: Method,
    pub category: String,
    pub size: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SankeyLink {
    pub source: usize,
    pub target: usize,
    pub value: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Sankey {
    pub nodes: Vec<SankeyNode>,
    pub links: Vec<SankeyLink>,
}

/// Sum over shared articles of the outer product of their two rows.
pub fn flow_matrix(a: &Classification, b: &Classification) -> Result<FlowMatrix> {
    let (ids, ra, rb) = shared_rows(a, b)?;
    let mut flows = vec![vec![0.0; b.category_count()]; a.category_count()];
    for (pa, pb) in ra.iter().zip(&rb) {
        for (i, &x) in pa.iter().enumerate() {
            if x == 0.0 {
                continue;
            }
            for (j, &y) in pb.iter().enumerate() {
                flows[i][j] += x * y;
            }
        }
    }
    Ok(FlowMatrix {
        method_a: a.method,
        method_b: b.method,
        categories_a: a.categories.clone(),
        categories_b: b.categories.clone(),
        flows,
        shared_articles: ids.len(),
        only_a: a.classified().count() - ids.len(),
        only_b: b.classified().count() - ids.len(),
    })
}

/// Standardized columns (zero mean, unit population variance); `None` for
/// constant columns.
fn standardize(rows: &[&[f64]], m: usize) -> Vec<Option<Vec<f64>>> {
    let n = rows.len() as f64;
    (0..m)
        .map(|c| {
            let mean = rows.iter().map(|r| r[c]).sum::<f64>() / n;
            let var = rows.iter().map(|r| (r[c] - mean).powi(2)).sum::<f64>() / n;
            let sd = var.sqrt();
            if !(sd > 1e-12 * mean.abs().max(1.0)) {
                return None;
            }
            Some(rows.iter().map(|r| (r[c] - mean) / sd).collect())
        })
        .collect()
}

/// Pearson correlations between the columns of `za` and `zb`, with the rows
/// of `zb` read through `perm`.
fn correlate(za: &[Option<Vec<f64>>], zb: &[Option<Vec<f64>>], perm: Option<&[usize]>) -> Vec<Vec<Option<f64>>> {
    za.iter()
        .map(|ca| {
            zb.iter()
                .map(|cb| {
                    let (ca, cb) = (ca.as_ref()?, cb.as_ref()?);
                    let n = ca.len();
                    let s: f64 = match perm {
                        None => ca.iter().zip(cb).map(|(x, y)| x * y).sum(),
                        Some(p) => ca.iter().zip(p).map(|(x, &r)| x * cb[r]).sum(),
                    };
                    Some((s / n as f64).clamp(-1.0, 1.0))
                })
                .collect()
        })
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct Aggregates {
    pub min: f64,
    pub max: f64,
    pub mean_abs: f64,
}

fn aggregates(rho: &[Vec<Option<f64>>]) -> Option<Aggregates> {
    let values: Vec<f64> = rho.iter().flatten().flatten().copied().collect();
    if values.is_empty() {
        return None;
    }
    Some(Aggregates {
        min: values.iter().copied().fold(f64::INFINITY, f64::min),
        max: values.iter().copied().fold(f64::NEG_INFINITY, f64::max),
        mean_abs: values.iter().map(|v| v.abs()).sum::<f64>() / values.len() as f64,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct NullBand {
    pub mean: Aggregates,
    pub sd: Aggregates,
    pub samples: usize,
}

fn band(samples: &[Aggregates]) -> NullBand {
    let n = samples.len() as f64;
    let stat = |f: fn(&Aggregates) -> f64| {
        let mean = samples.iter().map(f).sum::<f64>() / n;
        let var = if samples.len() > 1 {
            samples.iter().map(|s| (f(s) - mean).powi(2)).sum::<f64>() / (n - 1.0)
        } else {
            0.0
        };
        (mean, var.sqrt())
    };
    let (min, min_sd) = stat(|s| s.min);
    let (max, max_sd) = stat(|s| s.max);
    let (mean_abs, mean_abs_sd) = stat(|s| s.mean_abs);
    NullBand {
        mean: Aggregates { min, max, mean_abs },
        sd: Aggregates {
            min: min_sd,
            max: max_sd,
            mean_abs: mean_abs_sd,
        },
        samples: samples.len(),
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CorrelationReport {
    pub method_a: Method,
    pub method_b: Method,
    pub categories_a: Vec<String>,
    pub categories_b: Vec<String>,
    /// `rho[i][j]`, `None` where a column is constant.
    pub rho: Vec<Vec<Option<f64>>>,
    pub min_rho: f64,
    pub max_rho: f64,
    pub mean_abs_rho: f64,
    /// Full row shuffle of one matrix, alternating which one across repetitions.
    pub null_lower: NullBand,
    /// Each matrix against a copy with a fraction of its rows shuffled; both
    /// matrices every repetition, pooled, so `2 b` samples.
    pub null_upper: NullBand,
    pub b: usize,
    pub shuffle_fraction: f64,
    pub shared_articles: usize,
    pub undefined_correlations: usize,
    #[serde(default)]
    pub notice: Option<String>,
}

impl CorrelationReport {
    pub fn transpose(&self) -> CorrelationReport {
        let m = self.categories_b.len();
        CorrelationReport {
            method_a: self.method_b,
            method_b: self.method_a,
            categories_a: self.categories_b.clone(),
            categories_b: self.categories_a.clone(),
            rho: (0..m).map(|j| self.rho.iter().map(|row| row[j]).collect()).collect(),
            ..self.clone()
        }
    }

    /// Correlation matrix as CSV, `b`'s categories as columns; undefined
    /// cells left empty.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("category");
        for c in &self.categories_b {
            out.push(',');
            out.push_str(&csv_field(c));
        }
        out.push('\n');
        for (c, row) in self.categories_a.iter().zip(&self.rho) {
            out.push_str(&csv_field(c));
            for v in row {
                out.push(',');
                if let Some(v) = v {
                    out.push_str(&v.to_string());
                }
            }
            out.push('\n');
        }
        out
    }
}

fn csv_field(s: &str) -> String {
    if s.contains([',', '"', '\n']) {
        format!("\"{}\"", s.replace('"', "\"\""))
    } else {
        s.to_string()
    }
}

/// A permutation moving only a random `fraction` of positions.
fn partial_shuffle(n: usize, fraction: f64, rng: &mut impl rand::Rng) -> Vec<usize> {
    let mut perm: Vec<usize> = (0..n).collect();
    let count = (n as f64 * fraction).round() as usize;
    let mut chosen: Vec<usize> = (0..n).collect();
    chosen.shuffle(rng);
    chosen.truncate(count.min(n));
    let mut targets = chosen.clone();
    targets.shuffle(rng);
    for (&from, &to) in chosen.iter().zip(&targets) {
        perm[from] = to;
    }
    perm
}

pub fn correlation_report(
    a: &Classification,
    b: &Classification,
    b_reps: usize,
    shuffle_fraction: f64,
    seed: u64,
) -> Result<CorrelationReport> {
    if b_reps < 1 {
        return Err(Error::InvalidParameter("bootstrap repetitions must be at least 1".into()));
    }
    if !(0.0..=1.0).contains(&shuffle_fraction) {
        return Err(Error::InvalidParameter("shuffle fraction must lie in [0, 1]".into()));
    }
    let (ids, ra, rb) = shared_rows(a, b)?;
    if ids.len() < 3 {
        return Err(Error::InvalidParameter(format!(
            "{} shared articles; correlations need at least 3",
            ids.len()
        )));
    }
    let n = ids.len();
    let za = standardize(&ra, a.category_count());
    let zb = standardize(&rb, b.category_count());
    let rho = correlate(&za, &zb, None);
    let undefined = rho.iter().flatten().filter(|v| v.is_none()).count();
    let observed = aggregates(&rho).ok_or_else(|| {
        Error::InvalidParameter("every column pair is undefined (constant columns)".into())
    })?;

    let reps: Vec<(Aggregates, Aggregates, Aggregates)> = (0..b_reps)
        .into_par_iter()
        .map(|r| {
            let mut rng = rng_for(seed, &[0x4e55_4c4c, r as u64]);
            let mut full: Vec<usize> = (0..n).collect();
            full.shuffle(&mut rng);
            let lower = if r % 2 == 0 {
                correlate(&zb, &za, Some(&full))
            } else {
                correlate(&za, &zb, Some(&full))
            };
            let pa = partial_shuffle(n, shuffle_fraction, &mut rng);
            let pb = partial_shuffle(n, shuffle_fraction, &mut rng);
            let upper_a = correlate(&za, &za, Some(&pa));
            let upper_b = correlate(&zb, &zb, Some(&pb));
            let agg = |m: &[Vec<Option<f64>>]| aggregates(m).unwrap_or_default();
            (agg(&lower), agg(&upper_a), agg(&upper_b))
        })
        .collect();
    let lower: Vec<Aggregates> = reps.iter().map(|r| r.0).collect();
    let upper: Vec<Aggregates> = reps.iter().flat_map(|r| [r.1, r.2]).collect();
    Ok(CorrelationReport {
        method_a: a.method,
        method_b: b.method,
        categories_a: a.categories.clone(),
        categories_b: b.categories.clone(),
        rho,
        min_rho: observed.min,
        max_rho: observed.max,
        mean_abs_rho: observed.mean_abs,
        null_lower: band(&lower),
        null_upper: band(&upper),
        b: b_reps,
        shuffle_fraction,
        shared_articles: n,
        undefined_correlations: undefined,
        notice: (undefined > 0).then(|| {
            format!("{undefined} correlations undefined (constant columns) and excluded")
        }),
    })
}

/// Multi-class modularity with product belonging coefficients:
/// `(1/2m) Σ_c [Σ_ij A_ij α_ic α_jc − (Σ_i k_i α_ic)² / 2m]` on an unweighted
/// edge list.
pub fn multiclass_modularity(n: usize, edges: &[(usize, usize)], alpha: &[&[f64]]) -> Option<f64> {
    if edges.is_empty() {
        return None;
    }
    let m = alpha.first().map_or(0, |r| r.len());
    let two_m = 2.0 * edges.len() as f64;
    let mut degree = vec![0.0; n];
    let mut inside = vec![0.0; m];
    for &(i, j) in edges {
        degree[i] += 1.0;
        degree[j] += 1.0;
        for c in 0..m {
            inside[c] += 2.0 * alpha[i][c] * alpha[j][c];
        }
    }
    let q = (0..m)
        .map(|c| {
            let k: f64 = (0..n).map(|i| degree[i] * alpha[i][c]).sum();
            inside[c] - k * k / two_m
        })
        .sum::<f64>();
    Some(q / two_m)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModularityCurve {
    pub method_a: Method,
    pub method_b: Method,
    pub thresholds: Vec<f64>,
    /// `Q_a / Q_b` per threshold; `None` where the network is empty or
    /// `Q_b` is not positive.
    pub relative_modularity: Vec<Option<f64>>,
    pub modularity_a: Vec<Option<f64>>,
    pub modularity_b: Vec<Option<f64>>,
    pub edge_counts: Vec<usize>,
    pub shared_articles: usize,
}

fn pairwise_distances(rows: &[&[f64]]) -> Vec<(f64, usize, usize)> {
    let mut out = Vec::with_capacity(rows.len() * rows.len().saturating_sub(1) / 2);
    for i in 0..rows.len() {
        for j in i + 1..rows.len() {
            let d = rows[i].iter().zip(rows[j]).map(|(x, y)| (x - y).powi(2)).sum::<f64>().sqrt();
            out.push((d, i, j));
        }
    }
    out.sort_by(|a, b| a.0.total_cmp(&b.0));
    out
}

fn percentile(sorted: &[f64], q: f64) -> f64 {
    let pos = q * (sorted.len() - 1) as f64;
    let lo = pos.floor() as usize;
    let hi = pos.ceil() as usize;
    sorted[lo] + (sorted[hi] - sorted[lo]) * (pos - lo as f64)
}

/// Evenly spaced thresholds between the 1st and 99th percentile of the
/// pairwise distances between `b`'s rows over articles shared with `a`.
pub fn default_thresholds(a: &Classification, b: &Classification, count: usize) -> Result<Vec<f64>> {
    let (_, _, rb) = shared_rows(a, b)?;
    let distances: Vec<f64> = pairwise_distances(&rb).into_iter().map(|d| d.0).collect();
    if distances.is_empty() || count == 0 {
        return Err(Error::InvalidParameter("too few shared articles for thresholds".into()));
    }
    let lo = percentile(&distances, 0.01);
    let hi = percentile(&distances, 0.99);
    let mut out: Vec<f64> = if count == 1 {
        vec![hi]
    } else {
        (0..count)
            .map(|i| lo + (hi - lo) * i as f64 / (count - 1) as f64)
            .collect()
    };
    out.retain(|&t| t > 0.0);
    out.dedup();
    if out.is_empty() {
        return Err(Error::InvalidParameter("all pairwise distances are zero".into()));
    }
    Ok(out)
}

/// For every θ, links shared articles whose `b` rows lie closer than θ and
/// compares the multi-class modularity of `a`'s memberships with that of
/// `b`'s.
pub fn modularity_curve(a: &Classification, b: &Classification, thresholds: &[f64]) -> Result<ModularityCurve> {
    if thresholds.is_empty() {
        return Err(Error::InvalidParameter("no threshold".into()));
    }
    if thresholds.iter().any(|&t| !(t > 0.0)) || thresholds.windows(2).any(|w| w[0] >= w[1]) {
        return Err(Error::InvalidParameter(
            "thresholds must be positive and strictly ascending".into(),
        ));
    }
    let (ids, ra, rb) = shared_rows(a, b)?;
    let n = ids.len();
    let distances = pairwise_distances(&rb);
    let mut relative = Vec::with_capacity(thresholds.len());
    let mut q_a = Vec::with_capacity(thresholds.len());
    let mut q_b = Vec::with_capacity(thresholds.len());
    let mut edge_counts = Vec::with_capacity(thresholds.len());
    for &theta in thresholds {
        let cut = distances.partition_point(|d| d.0 < theta);
        let edges: Vec<(usize, usize)> = distances[..cut].iter().map(|&(_, i, j)| (i, j)).collect();
        let qa = multiclass_modularity(n, &edges, &ra);
        let qb = multiclass_modularity(n, &edges, &rb);
        relative.push(match (qa, qb) {
            (Some(x), Some(y)) if y > 1e-12 => Some(x / y),
            _ => None,
        });
        q_a.push(qa);
        q_b.push(qb);
        edge_counts.push(edges.len());
    }
    if edge_counts.iter().all(|&e| e == 0) {
        return Err(Error::AllNetworksEmpty);
    }
    Ok(ModularityCurve {
        method_a: a.method,
        method_b: b.method,
        thresholds: thresholds.to_vec(),
        relative_modularity: relative,
        modularity_a: q_a,
        modularity_b: q_b,
        edge_counts,
        shared_articles: n,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::collections::{BTreeMap, BTreeSet};

    fn classification(method: Method, rows: &[(&str, Vec<f64>)]) -> Classification {
        let m = rows[0].1.len();
        Classification::new(
            method,
            (0..m).map(|c| format!("c{c}")).collect(),
            rows.iter().map(|(id, r)| (id.to_string(), r.clone())).collect::<BTreeMap<_, _>>(),
            BTreeSet::new(),
        )
        .unwrap()
    }

    #[test]
    fn single_article_outer_product() {
        let a = classification(Method::Keywords, &[("x", vec![0.5, 0.5])]);
        let b = classification(Method::Topics, &[("x", vec![1.0, 0.0])]);
        let f = flow_matrix(&a, &b).unwrap();
        assert_eq!(f.flows, vec![vec![0.5, 0.0], vec![0.5, 0.0]]);
        assert_eq!(f.transpose().flows, flow_matrix(&b, &a).unwrap().flows);
    }

    #[test]
    fn identical_hard_classifications_are_diagonal() {
        let rows = [("a", vec![1.0, 0.0]), ("b", vec![0.0, 1.0]), ("c", vec![1.0, 0.0])];
        let a = classification(Method::Keywords, &rows);
        let f = flow_matrix(&a, &a).unwrap();
        assert_eq!(f.flows, vec![vec![2.0, 0.0], vec![0.0, 1.0]]);
        assert_eq!(f.total(), 3.0);
    }

    #[test]
    fn disjoint_classifications_error() {
        let a = classification(Method::Keywords, &[("a", vec![1.0])]);
        let b = classification(Method::Topics, &[("b", vec![1.0])]);
        assert!(matches!(flow_matrix(&a, &b), Err(Error::EmptyIntersection)));
    }

    #[test]
    fn self_correlation_diagonal_and_constant_columns() {
        let rows = [
            ("a", vec![0.2, 0.8, 0.0]),
            ("b", vec![0.6, 0.4, 0.0]),
            ("c", vec![0.9, 0.1, 0.0]),
            ("d", vec![0.3, 0.7, 0.0]),
        ];
        let a = classification(Method::Keywords, &rows);
        let r = correlation_report(&a, &a, 20, 0.5, 1).unwrap();
        assert!((r.max_rho - 1.0).abs() < 1e-12);
        assert!((r.rho[0][0].unwrap() - 1.0).abs() < 1e-12);
        assert!((r.rho[0][1].unwrap() + 1.0).abs() < 1e-12);
        assert!(r.rho[2][2].is_none());
        assert_eq!(r.undefined_correlations, 5);
        assert_eq!(r.null_upper.samples, 40);
        assert_eq!(r, correlation_report(&a, &a, 20, 0.5, 1).unwrap());
    }

    #[test]
    fn partial_shuffle_moves_at_most_fraction() {
        let mut rng = rng_for(3, &[]);
        let p = partial_shuffle(100, 0.5, &mut rng);
        let mut sorted = p.clone();
        sorted.sort_unstable();
        assert_eq!(sorted, (0..100).collect::<Vec<_>>());
        assert!(p.iter().enumerate().filter(|(i, &j)| *i != j).count() <= 50);
    }

    #[test]
    fn modularity_of_hard_two_blocks() {
        // two disjoint edges, hard memberships matching them: Q = 1/2
        let alpha: Vec<&[f64]> = vec![&[1.0, 0.0], &[1.0, 0.0], &[0.0, 1.0], &[0.0, 1.0]];
        let q = multiclass_modularity(4, &[(0, 1), (2, 3)], &alpha).unwrap();
        assert!((q - 0.5).abs() < 1e-12);
        assert!(multiclass_modularity(4, &[], &alpha).is_none());
    }

    #[test]
    fn self_comparison_is_one_and_large_theta_unset() {
        let rows = [
            ("a", vec![0.9, 0.1]),
            ("b", vec![0.8, 0.2]),
            ("c", vec![0.1, 0.9]),
            ("d", vec![0.2, 0.8]),
        ];
        let a = classification(Method::Keywords, &rows);
        let curve = modularity_curve(&a, &a, &[0.5, 5.0]).unwrap();
        assert!((curve.relative_modularity[0].unwrap() - 1.0).abs() < 1e-12);
        assert!(curve.relative_modularity[1].is_none());
        assert!(matches!(modularity_curve(&a, &a, &[0.01]), Err(Error::AllNetworksEmpty)));
        assert!(modularity_curve(&a, &a, &[0.5, 0.4]).is_err());
    }
}
