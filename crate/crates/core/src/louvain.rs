//! Seeded Louvain modularity maximization on weighted undirected graphs.
//!
//! Nodes are visited in index order on every pass; the random generator is only
//! consulted to break exact ties between candidate communities, so the output
//! is a pure function of the graph, the node order and the seed.

use rand::seq::SliceRandom;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rng::rng_for;

const MAX_PASSES: usize = 1_000;

#[derive(Debug, Clone, PartialEq)]
pub struct WeightedGraph {
    /// Neighbors excluding self-loops; every undirected edge appears twice.
    adj: Vec<Vec<(usize, f64)>>,
    self_loops: Vec<f64>,
}

impl WeightedGraph {
    pub fn new(node_count: usize) -> Self {
        Self {
            adj: vec![Vec::new(); node_count],
            self_loops: vec![0.0; node_count],
        }
    }

    /// Builds a graph from undirected edges; parallel edges are summed.
    pub fn from_edges(node_count: usize, edges: impl IntoIterator<Item = (usize, usize, f64)>) -> Self {
        let mut g = Self::new(node_count);
        for (i, j, w) in edges {
            g.add_edge(i, j, w);
        }
        g
    }

    pub fn add_edge(&mut self, i: usize, j: usize, w: f64) {
        if i == j {
            self.self_loops[i] += w;
            return;
        }
        match self.adj[i].iter_mut().find(|(n, _)| *n == j) {
            Some(entry) => {
                entry.1 += w;
                if let Some(back) = self.adj[j].iter_mut().find(|(n, _)| *n == i) {
                    back.1 += w;
                }
            }
            None => {
                self.adj[i].push((j, w));
                self.adj[j].push((i, w));
            }
        }
    }

    pub fn node_count(&self) -> usize {
        self.adj.len()
    }

    pub fn neighbors(&self, i: usize) -> &[(usize, f64)] {
        &self.adj[i]
    }

    /// Weighted degree; a self-loop counts twice.
    pub fn degree(&self, i: usize) -> f64 {
        self.adj[i].iter().map(|(_, w)| w).sum::<f64>() + 2.0 * self.self_loops[i]
    }

    /// Twice the total edge weight.
    pub fn two_m(&self) -> f64 {
        (0..self.node_count()).map(|i| self.degree(i)).sum()
    }
}

/// Newman modularity of a hard partition.
pub fn modularity(graph: &WeightedGraph, membership: &[usize]) -> f64 {
    let two_m = graph.two_m();
    if two_m <= 0.0 {
        return 0.0;
    }
    let communities = membership.iter().copied().max().map_or(0, |m| m + 1);
    let mut internal = vec![0.0; communities];
    let mut total = vec![0.0; communities];
    for i in 0..graph.node_count() {
        let c = membership[i];
        total[c] += graph.degree(i);
        internal[c] += 2.0 * graph.self_loops[i];
        for &(j, w) in graph.neighbors(i) {
            if membership[j] == c {
                internal[c] += w;
            }
        }
    }
    internal
        .iter()
        .zip(&total)
        .map(|(&inside, &tot)| inside / two_m - (tot / two_m).powi(2))
        .sum()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Partition {
    /// Community id per node, contiguous from 0 in order of first appearance.
    pub membership: Vec<usize>,
    pub community_count: usize,
    pub modularity: f64,
    pub levels: usize,
}

fn renumber(membership: &mut [usize]) -> usize {
    let mut map = std::collections::HashMap::new();
    for c in membership.iter_mut() {
        let next = map.len();
        *c = *map.entry(*c).or_insert(next);
    }
    map.len()
}

/// One local-moving phase. Returns the node-to-community map (renumbered) and
/// whether any node changed community.
fn local_moves(graph: &WeightedGraph, rng: &mut ChaCha8Rng) -> (Vec<usize>, bool) {
    let n = graph.node_count();
    let two_m = graph.two_m();
    let degrees: Vec<f64> = (0..n).map(|i| graph.degree(i)).collect();
    let mut community: Vec<usize> = (0..n).collect();
    let mut total = degrees.clone();
    let mut link = vec![0.0; n];
    let mut touched: Vec<usize> = Vec::new();
    let mut seen = vec![false; n];
    let mut moved_any = false;

    for _ in 0..MAX_PASSES {
        let mut moved = false;
        for i in 0..n {
            let k_i = degrees[i];
            if k_i == 0.0 {
                continue;
            }
            let old = community[i];
            for &(j, w) in graph.neighbors(i) {
                let c = community[j];
                if !seen[c] {
                    seen[c] = true;
                    touched.push(c);
                }
                link[c] += w;
            }
            total[old] -= k_i;

            let gain = |c: usize, link: &[f64], total: &[f64]| link[c] - total[c] * k_i / two_m;
            let stay = gain(old, &link, &total);
            let mut best = stay;
            let mut candidates: Vec<usize> = Vec::new();
            touched.sort_unstable();
            for &c in &touched {
                if c == old {
                    continue;
                }
                let g = gain(c, &link, &total);
                let eps = 1e-12 * best.abs().max(1.0);
                if g > best + eps {
                    best = g;
                    candidates.clear();
                    candidates.push(c);
                } else if (g - best).abs() <= eps && best > stay + 1e-12 * stay.abs().max(1.0) {
                    candidates.push(c);
                }
            }
            let target = match candidates.len() {
                0 => old,
                1 => candidates[0],
                _ => *candidates.choose(rng).expect("nonempty"),
            };
            total[target] += k_i;
            if target != old {
                community[i] = target;
                moved = true;
                moved_any = true;
            }
            for &c in &touched {
                link[c] = 0.0;
                seen[c] = false;
            }
            touched.clear();
        }
        if !moved {
            break;
        }
    }
    renumber(&mut community);
    (community, moved_any)
}

fn aggregate(graph: &WeightedGraph, community: &[usize], count: usize) -> WeightedGraph {
    let mut next = WeightedGraph::new(count);
    let mut between = std::collections::BTreeMap::new();
    for i in 0..graph.node_count() {
        let ci = community[i];
        next.self_loops[ci] += graph.self_loops[i];
        for &(j, w) in graph.neighbors(i) {
            if j < i {
                continue;
            }
            let cj = community[j];
            if ci == cj {
                next.self_loops[ci] += w;
            } else {
                *between.entry((ci.min(cj), ci.max(cj))).or_insert(0.0) += w;
            }
        }
    }
    for ((a, b), w) in between {
        next.adj[a].push((b, w));
        next.adj[b].push((a, w));
    }
    next
}

/// Multi-level Louvain. Errors on a graph without any edge weight.
pub fn louvain(graph: &WeightedGraph, seed: u64) -> Result<Partition> {
    if graph.node_count() == 0 || graph.two_m() <= 0.0 {
        return Err(Error::EmptyNetwork);
    }
    let mut rng = rng_for(seed, &[0x4c4f_5556]);
    let mut membership: Vec<usize> = (0..graph.node_count()).collect();
    let mut current = graph.clone();
    let mut levels = 0;
    loop {
        let (community, moved) = local_moves(&current, &mut rng);
        if !moved {
            break;
        }
        levels += 1;
        let count = community.iter().max().map_or(0, |m| m + 1);
        for m in membership.iter_mut() {
            *m = community[*m];
        }
        if count == current.node_count() {
            break;
        }
        current = aggregate(&current, &community, count);
    }
    let community_count = renumber(&mut membership);
    let q = modularity(graph, &membership);
    Ok(Partition {
        membership,
        community_count,
        modularity: q,
        levels,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn clique_edges(offset: usize, size: usize) -> Vec<(usize, usize, f64)> {
        let mut e = Vec::new();
        for i in 0..size {
            for j in i + 1..size {
                e.push((offset + i, offset + j, 1.0));
            }
        }
        e
    }

    /// Exhaustive search over all set partitions (restricted growth strings).
    fn best_partition(graph: &WeightedGraph) -> (Vec<usize>, f64) {
        let n = graph.node_count();
        let mut rgs = vec![0usize; n];
        let mut best = (rgs.clone(), f64::NEG_INFINITY);
        loop {
            let q = modularity(graph, &rgs);
            if q > best.1 + 1e-12 {
                best = (rgs.clone(), q);
            }
            // next restricted growth string
            let mut i = n - 1;
            loop {
                let max_prev = rgs[..i].iter().copied().max().unwrap_or(0);
                if i > 0 && rgs[i] <= max_prev {
                    rgs[i] += 1;
                    for r in rgs.iter_mut().skip(i + 1) {
                        *r = 0;
                    }
                    break;
                }
                if i == 0 {
                    return best;
                }
                i -= 1;
            }
        }
    }

    #[test]
    fn two_disjoint_cliques() {
        let mut edges = clique_edges(0, 4);
        edges.extend(clique_edges(4, 4));
        let g = WeightedGraph::from_edges(8, edges);
        let (oracle, q_best) = best_partition(&g);
        assert!((q_best - 0.5).abs() < 1e-12);
        let p = louvain(&g, 1).unwrap();
        assert_eq!(p.community_count, 2);
        assert_eq!(p.membership, oracle);
        assert!((p.modularity - 0.5).abs() < 1e-12);
    }

    #[test]
    fn single_edge_is_one_community_with_zero_modularity() {
        let g = WeightedGraph::from_edges(2, [(0, 1, 1.0)]);
        assert!(modularity(&g, &[0, 0]).abs() < 1e-15);
        let p = louvain(&g, 3).unwrap();
        assert_eq!(p.membership, vec![0, 0]);
        assert!(p.modularity.abs() < 1e-15);
    }

    #[test]
    fn empty_graph_errors() {
        assert!(matches!(louvain(&WeightedGraph::new(3), 0), Err(Error::EmptyNetwork)));
        assert!(matches!(louvain(&WeightedGraph::new(0), 0), Err(Error::EmptyNetwork)));
    }

    #[test]
    fn matches_exhaustive_optimum_on_small_graphs() {
        // two triangles joined by a bridge, plus a pendant
        let mut edges = clique_edges(0, 3);
        edges.extend(clique_edges(3, 3));
        edges.push((2, 3, 1.0));
        edges.push((5, 6, 1.0));
        let g = WeightedGraph::from_edges(7, edges);
        let (_, q_best) = best_partition(&g);
        let p = louvain(&g, 11).unwrap();
        assert!((p.modularity - q_best).abs() < 1e-9, "{} vs {q_best}", p.modularity);
    }

    #[test]
    fn self_loops_count_twice_in_degree() {
        let mut g = WeightedGraph::new(2);
        g.add_edge(0, 0, 2.0);
        g.add_edge(0, 1, 1.0);
        assert_eq!(g.degree(0), 5.0);
        assert_eq!(g.two_m(), 6.0);
        // aggregated clique keeps the same modularity
        let mut edges = clique_edges(0, 4);
        edges.extend(clique_edges(4, 4));
        edges.push((3, 4, 1.0));
        let fine = WeightedGraph::from_edges(8, edges);
        let membership = [0, 0, 0, 0, 1, 1, 1, 1];
        let coarse = aggregate(&fine, &membership, 2);
        assert!((modularity(&fine, &membership) - modularity(&coarse, &[0, 1])).abs() < 1e-12);
    }

    #[test]
    fn deterministic_per_seed() {
        let mut edges = Vec::new();
        for i in 0..30 {
            edges.push((i, (i + 1) % 30, 1.0));
            edges.push((i, (i + 7) % 30, 0.5));
        }
        let g = WeightedGraph::from_edges(30, edges);
        assert_eq!(louvain(&g, 5).unwrap(), louvain(&g, 5).unwrap());
    }
}
