//! Country semantic profiles, Ward clustering and GeoJSON export.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use crate::classification::{Classification, Method};
use crate::corpus::Corpus;
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Allocation {
    Authoring,
    Studied,
}

impl Allocation {
    pub const ALL: [Allocation; 2] = [Allocation::Authoring, Allocation::Studied];

    pub fn as_str(self) -> &'static str {
        match self {
            Allocation::Authoring => "authoring",
            Allocation::Studied => "studied",
        }
    }
}

impl fmt::Display for Allocation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Allocation {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "authoring" => Ok(Allocation::Authoring),
            "studied" => Ok(Allocation::Studied),
            _ => Err(Error::InvalidParameter(format!(
                "unknown allocation `{s}` (expected authoring or studied)"
            ))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CountryProfile {
    pub country: String,
    pub allocation: Allocation,
    pub method: Method,
    pub shares: Vec<f64>,
    pub article_count: usize,
}

/// Mean classification row over the classified articles tagged with each
/// country. An article tagged with several countries counts fully for each.
pub fn country_profiles(
    classification: &Classification,
    corpus: &Corpus,
    allocation: Allocation,
) -> Vec<CountryProfile> {
    let m = classification.category_count();
    let mut sums: BTreeMap<&str, (Vec<f64>, usize)> = BTreeMap::new();
    for article in corpus.articles.values() {
        let Some(row) = classification.row(&article.id) else {
            continue;
        };
        let countries = match allocation {
            Allocation::Authoring => &article.authoring_countries,
            Allocation::Studied => &article.studied_countries,
        };
        for country in countries {
            let entry = sums.entry(country).or_insert_with(|| (vec![0.0; m], 0));
            for (s, p) in entry.0.iter_mut().zip(row) {
                *s += p;
            }
            entry.1 += 1;
        }
    }
    sums.into_iter()
        .map(|(country, (sum, n))| CountryProfile {
            country: country.to_string(),
            allocation,
            method: classification.method,
            shares: sum.into_iter().map(|s| s / n as f64).collect(),
            article_count: n,
        })
        .collect()
}

/// One agglomeration step. Leaves are numbered `0..n` in country-code order,
/// the cluster formed at step `i` is `n + i`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Merge {
    pub left: usize,
    pub right: usize,
    pub height: f64,
    pub size: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Dendrogram {
    pub leaves: Vec<String>,
    pub merges: Vec<Merge>,
}

fn distance(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).powi(2)).sum::<f64>().sqrt()
}

/// Ward agglomeration via the Lance–Williams recurrence. Heights follow the
/// usual convention `sqrt(2 n_a n_b / (n_a + n_b)) · ‖c_a − c_b‖`. Exact ties
/// are resolved towards the pair whose smallest member codes come first.
pub fn ward_linkage(leaves: Vec<String>, points: &[Vec<f64>]) -> Dendrogram {
    let n = points.len();
    let mut d = vec![vec![0.0; n]; n];
    for i in 0..n {
        for j in i + 1..n {
            let v = distance(&points[i], &points[j]);
            d[i][j] = v;
            d[j][i] = v;
        }
    }
    let mut active: Vec<usize> = (0..n).collect();
    // slot → (cluster id, size, smallest leaf)
    let mut id: Vec<usize> = (0..n).collect();
    let mut size = vec![1usize; n];
    let mut first = (0..n).collect::<Vec<_>>();
    let mut merges = Vec::with_capacity(n.saturating_sub(1));
    while active.len() > 1 {
        let mut best: Option<(f64, usize, usize)> = None;
        for (x, &a) in active.iter().enumerate() {
            for &b in &active[x + 1..] {
                let key = (d[a][b], first[a].min(first[b]), first[a].max(first[b]));
                let better = match best {
                    None => true,
                    Some((h, sa, sb)) => {
                        let (ka, kb) = (first[sa].min(first[sb]), first[sa].max(first[sb]));
                        key.0 < h || (key.0 == h && (key.1, key.2) < (ka, kb))
                    }
                };
                if better {
                    best = Some((d[a][b], a, b));
                }
            }
        }
        let (height, a, b) = best.expect("two active clusters");
        let (na, nb) = (size[a] as f64, size[b] as f64);
        for &c in &active {
            if c == a || c == b {
                continue;
            }
            let nc = size[c] as f64;
            let v = (((na + nc) * d[a][c].powi(2) + (nb + nc) * d[b][c].powi(2) - nc * height.powi(2))
                / (na + nb + nc))
                .max(0.0)
                .sqrt();
            d[a][c] = v;
            d[c][a] = v;
        }
        let (left, right) = if id[a] < id[b] { (id[a], id[b]) } else { (id[b], id[a]) };
        size[a] += size[b];
        first[a] = first[a].min(first[b]);
        id[a] = n + merges.len();
        merges.push(Merge {
            left,
            right,
            height,
            size: size[a],
        });
        active.retain(|&c| c != b);
    }
    Dendrogram { leaves, merges }
}

impl Dendrogram {
    /// Leaf → cluster label after applying the first `n - k` merges. Labels
    /// are numbered by order of first appearance over the leaves.
    pub fn cut(&self, k: usize) -> Result<Vec<usize>> {
        let n = self.leaves.len();
        if k < 1 || k > n {
            return Err(Error::InvalidParameter(format!(
                "cluster count {k} outside 1..={n}"
            )));
        }
        let mut parent: Vec<usize> = (0..2 * n).collect();
        for (step, merge) in self.merges.iter().take(n - k).enumerate() {
            parent[merge.left] = n + step;
            parent[merge.right] = n + step;
        }
        let root = |mut x: usize| {
            while parent[x] != x {
                x = parent[x];
            }
            x
        };
        let mut labels: BTreeMap<usize, usize> = BTreeMap::new();
        let mut out = Vec::with_capacity(n);
        for leaf in 0..n {
            let r = root(leaf);
            let next = labels.len();
            out.push(*labels.entry(r).or_insert(next));
        }
        Ok(out)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CountryClustering {
    pub method: Method,
    pub allocation: Allocation,
    pub k: usize,
    pub inertia_share: f64,
    pub assignment: BTreeMap<String, usize>,
    pub cluster_mean_profiles: Vec<Vec<f64>>,
    pub profiles: BTreeMap<String, Vec<f64>>,
    pub dendrogram: Dendrogram,
    /// Set on authoring-country clusterings, whose input is dominated by a few
    /// emitting countries.
    #[serde(default)]
    pub advisory: Option<String>,
}

fn check_profiles(profiles: &[CountryProfile]) -> Result<()> {
    if profiles.is_empty() {
        return Err(Error::InvalidParameter("no country profiles".into()));
    }
    let (method, allocation) = (profiles[0].method, profiles[0].allocation);
    if profiles.iter().any(|p| p.method != method || p.allocation != allocation) {
        return Err(Error::InvalidParameter(
            "profiles mix methods or allocations".into(),
        ));
    }
    Ok(())
}

/// Ward clustering of country profiles, cut at `k` clusters.
pub fn cluster_countries(profiles: &[CountryProfile], k: usize) -> Result<CountryClustering> {
    check_profiles(profiles)?;
    if k > profiles.len() {
        return Err(Error::InvalidParameter(format!(
            "cluster count {k} exceeds the {} profiles",
            profiles.len()
        )));
    }
    let mut sorted: Vec<&CountryProfile> = profiles.iter().collect();
    sorted.sort_by(|a, b| a.country.cmp(&b.country));
    let leaves: Vec<String> = sorted.iter().map(|p| p.country.clone()).collect();
    let points: Vec<Vec<f64>> = sorted.iter().map(|p| p.shares.clone()).collect();
    let dendrogram = ward_linkage(leaves, &points);
    let profiles: BTreeMap<String, Vec<f64>> = sorted
        .iter()
        .map(|p| (p.country.clone(), p.shares.clone()))
        .collect();
    recut(sorted[0].method, sorted[0].allocation, dendrogram, profiles, k)
}

/// Cuts a stored dendrogram at a new `k` without re-running the agglomeration.
pub fn recut(
    method: Method,
    allocation: Allocation,
    dendrogram: Dendrogram,
    profiles: BTreeMap<String, Vec<f64>>,
    k: usize,
) -> Result<CountryClustering> {
    let labels = dendrogram.cut(k)?;
    let points: Vec<&Vec<f64>> = dendrogram
        .leaves
        .iter()
        .map(|c| {
            profiles
                .get(c)
                .ok_or_else(|| Error::InvalidParameter(format!("no profile for {c}")))
        })
        .collect::<Result<_>>()?;
    let m = points.first().map_or(0, |p| p.len());
    let mut means = vec![vec![0.0; m]; k];
    let mut sizes = vec![0usize; k];
    for (p, &l) in points.iter().zip(&labels) {
        sizes[l] += 1;
        for (s, x) in means[l].iter_mut().zip(p.iter()) {
            *s += x;
        }
    }
    for (mean, &n) in means.iter_mut().zip(&sizes) {
        mean.iter_mut().for_each(|s| *s /= n as f64);
    }
    let mut overall = vec![0.0; m];
    for p in &points {
        for (s, x) in overall.iter_mut().zip(p.iter()) {
            *s += x;
        }
    }
    overall.iter_mut().for_each(|s| *s /= points.len() as f64);
    let sq = |a: &[f64], b: &[f64]| a.iter().zip(b).map(|(x, y)| (x - y).powi(2)).sum::<f64>();
    let total: f64 = points.iter().map(|p| sq(p, &overall)).sum();
    let within: f64 = points.iter().zip(&labels).map(|(p, &l)| sq(p, &means[l])).sum();
    let inertia_share = if k == points.len() || total <= 0.0 {
        1.0
    } else {
        (1.0 - within / total).clamp(0.0, 1.0)
    };
    let assignment = dendrogram.leaves.iter().cloned().zip(labels).collect();
    Ok(CountryClustering {
        method,
        allocation,
        k,
        inertia_share,
        assignment,
        cluster_mean_profiles: means,
        profiles,
        dendrogram,
        advisory: (allocation == Allocation::Authoring).then(|| {
            "authoring allocation: profiles are dominated by a few highly emitting countries".into()
        }),
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MapExport {
    pub geojson: Value,
    /// Clustered countries absent from the geometry.
    pub missing_geometry: Vec<String>,
}

pub fn load_geometry(path: &Path) -> Result<Value> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    Ok(serde_json::from_str(&text)?)
}

/// Decorates every geometry feature with `country`, `cluster` and `profile`
/// properties, joining on the feature's `iso_a2` property.
pub fn export_map(clustering: &CountryClustering, geometry: &Value) -> Result<MapExport> {
    let features = geometry
        .get("features")
        .and_then(Value::as_array)
        .ok_or_else(|| Error::InvalidParameter("geometry is not a FeatureCollection".into()))?;
    let mut seen = BTreeSet::new();
    let mut out = Vec::with_capacity(features.len());
    for feature in features {
        let code = feature
            .pointer("/properties/iso_a2")
            .and_then(Value::as_str)
            .map(|c| c.to_ascii_uppercase());
        let mut feature = feature.clone();
        if !feature.get("properties").is_some_and(Value::is_object) {
            feature["properties"] = json!({});
        }
        let props = feature["properties"].as_object_mut().expect("object");
        props.insert("country".into(), json!(code));
        let cluster = code.as_deref().and_then(|c| clustering.assignment.get(c));
        props.insert("cluster".into(), json!(cluster));
        let profile = code.as_deref().and_then(|c| clustering.profiles.get(c));
        props.insert("profile".into(), json!(profile));
        if let Some(c) = code {
            seen.insert(c);
        }
        out.push(feature);
    }
    let missing_geometry = clustering
        .assignment
        .keys()
        .filter(|c| !seen.contains(*c))
        .cloned()
        .collect();
    Ok(MapExport {
        geojson: json!({"type": "FeatureCollection", "features": out}),
        missing_geometry,
    })
}
