//! Betweenness centrality over the bipartite block graph and rank-based
//! importance stratification.
//!
//! Node and edge betweenness use Brandes' dependency accumulation with BFS
//! (all edges unit weight). Scores count each unordered source-target pair
//! once: the directed accumulation visits every pair twice, so totals are
//! halved at the end.

use std::collections::VecDeque;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::InteractionGraph;

/// Betweenness scores for one graph: `node[v]` is indexed by block-graph
/// node id, `edge[k]` follows the order of `InteractionGraph::edges()`.
#[derive(Debug, Clone)]
pub struct CentralityScores {
    pub node: Vec<f64>,
    pub edge: Vec<f64>,
}

/// Flattened adjacency over the `m + n` node ids, with the position of each
/// edge in the parent's edge list so edge scores can be accumulated in place.
struct BlockAdjacency {
    neighbors: Vec<Vec<(u32, u32)>>, // (neighbor node id, edge index)
}

impl BlockAdjacency {
    fn new(g: &InteractionGraph) -> Self {
        let m = g.num_users();
        let mut neighbors = vec![Vec::new(); g.num_nodes()];
        for (k, &(u, i)) in g.edges().iter().enumerate() {
            let a = u as usize;
            let b = m + i as usize;
            neighbors[a].push((b as u32, k as u32));
            neighbors[b].push((a as u32, k as u32));
        }
        for l in &mut neighbors {
            l.sort_unstable();
        }
        BlockAdjacency { neighbors }
    }
}

/// One Brandes source sweep: BFS shortest-path counting followed by reverse
/// dependency accumulation onto nodes and edges.
fn accumulate_source(adj: &BlockAdjacency, s: usize, node_acc: &mut [f64], edge_acc: &mut [f64]) {
    let n = adj.neighbors.len();
    let mut sigma = vec![0.0f64; n];
    let mut dist = vec![-1i64; n];
    let mut preds: Vec<Vec<(u32, u32)>> = vec![Vec::new(); n];
    let mut order: Vec<u32> = Vec::with_capacity(n);
    let mut queue = VecDeque::new();

    sigma[s] = 1.0;
    dist[s] = 0;
    queue.push_back(s as u32);
    while let Some(v) = queue.pop_front() {
        order.push(v);
        let dv = dist[v as usize];
        for &(w, k) in &adj.neighbors[v as usize] {
            let wi = w as usize;
            if dist[wi] < 0 {
                dist[wi] = dv + 1;
                queue.push_back(w);
            }
            if dist[wi] == dv + 1 {
                sigma[wi] += sigma[v as usize];
                preds[wi].push((v, k));
            }
        }
    }

    let mut delta = vec![0.0f64; n];
    for &w in order.iter().rev() {
        let wi = w as usize;
        for &(v, k) in &preds[wi] {
            let vi = v as usize;
            // sigma[w] > 0 whenever w was reached, but guard anyway.
            if sigma[wi] > 0.0 {
                let share = sigma[vi] / sigma[wi] * (1.0 + delta[wi]);
                delta[vi] += share;
                edge_acc[k as usize] += share;
            }
        }
        if wi != s {
            node_acc[wi] += delta[wi];
        }
    }
}

fn brandes(g: &InteractionGraph) -> CentralityScores {
    let adj = BlockAdjacency::new(g);
    let n = g.num_nodes();
    let ne = g.num_edges();

    // Per-chunk partials are reduced in fixed chunk order so results do not
    // depend on thread scheduling.
    let chunk = 64;
    let sources: Vec<usize> = (0..n).collect();
    let partials: Vec<(Vec<f64>, Vec<f64>)> = sources
        .par_chunks(chunk)
        .map(|srcs| {
            let mut node_acc = vec![0.0; n];
            let mut edge_acc = vec![0.0; ne];
            for &s in srcs {
                accumulate_source(&adj, s, &mut node_acc, &mut edge_acc);
            }
            (node_acc, edge_acc)
        })
        .collect();

    let mut node = vec![0.0; n];
    let mut edge = vec![0.0; ne];
    for (na, ea) in partials {
        for (t, v) in node.iter_mut().zip(na) {
            *t += v;
        }
        for (t, v) in edge.iter_mut().zip(ea) {
            *t += v;
        }
    }
    // Each unordered pair was visited from both endpoints.
    for v in &mut node {
        *v *= 0.5;
    }
    for v in &mut edge {
        *v *= 0.5;
    }
    CentralityScores { node, edge }
}

/// Node betweenness for every block-graph node, unordered pairs counted once.
pub fn brandes_node_betweenness(g: &InteractionGraph) -> Vec<f64> {
    brandes(g).node
}

/// Edge betweenness aligned with `g.edges()`, unordered pairs counted once.
pub fn brandes_edge_betweenness(g: &InteractionGraph) -> Vec<f64> {
    brandes(g).edge
}

/// Node and edge betweenness in one pass.
pub fn betweenness(g: &InteractionGraph) -> CentralityScores {
    brandes(g)
}

/// Importance level by descending-score rank.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum StratumLevel {
    Highest,
    High,
    Middle,
    Low,
}

impl StratumLevel {
    pub const ALL: [StratumLevel; 4] = [
        StratumLevel::Highest,
        StratumLevel::High,
        StratumLevel::Middle,
        StratumLevel::Low,
    ];

    pub fn name(&self) -> &'static str {
        match self {
            StratumLevel::Highest => "highest",
            StratumLevel::High => "high",
            StratumLevel::Middle => "middle",
            StratumLevel::Low => "low",
        }
    }
}

impl std::str::FromStr for StratumLevel {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "highest" => Ok(StratumLevel::Highest),
            "high" => Ok(StratumLevel::High),
            "middle" => Ok(StratumLevel::Middle),
            "low" => Ok(StratumLevel::Low),
            other => Err(Error::InvalidConfig(format!("unknown stratum {other:?}"))),
        }
    }
}

/// Stratum assignment per element, plus the rank cutoffs used.
#[derive(Debug, Clone)]
pub struct ImportanceStrata {
    pub levels: Vec<StratumLevel>,
    /// Rank counts for (Highest, Highest+High, Highest+High+Middle).
    pub cuts: [usize; 3],
}

impl ImportanceStrata {
    /// Indices of elements assigned to `level`, ascending.
    pub fn members(&self, level: StratumLevel) -> Vec<usize> {
        self.levels
            .iter()
            .enumerate()
            .filter(|(_, &l)| l == level)
            .map(|(k, _)| k)
            .collect()
    }

    pub fn count(&self, level: StratumLevel) -> usize {
        self.levels.iter().filter(|&&l| l == level).count()
    }
}

/// Partitions elements into Highest / High / Middle / Low by descending
/// score. `fractions` are cumulative rank fractions, default (0.01, 0.04,
/// 0.10); cut sizes are `ceil(fraction * N)`. Ties are broken by element
/// index, lower index ranking first.
pub fn stratify(scores: &[f64], fractions: (f64, f64, f64)) -> Result<ImportanceStrata> {
    if scores.is_empty() {
        return Err(Error::InvalidConfig("cannot stratify zero elements".into()));
    }
    if scores.iter().any(|v| !v.is_finite()) {
        return Err(Error::NonFinite("stratification scores".into()));
    }
    let (f1, f2, f3) = fractions;
    if !(0.0 < f1 && f1 < f2 && f2 < f3 && f3 < 1.0) {
        return Err(Error::InvalidConfig(format!(
            "fractions must satisfy 0 < f1 < f2 < f3 < 1, got ({f1}, {f2}, {f3})"
        )));
    }
    let n = scores.len();
    let mut ranked: Vec<usize> = (0..n).collect();
    ranked.sort_by(|&a, &b| {
        scores[b]
            .partial_cmp(&scores[a])
            .expect("scores checked finite")
            .then(a.cmp(&b))
    });
    let c1 = (f1 * n as f64).ceil() as usize;
    let c2 = (f2 * n as f64).ceil() as usize;
    let c3 = (f3 * n as f64).ceil() as usize;
    let mut levels = vec![StratumLevel::Low; n];
    for (rank, &idx) in ranked.iter().enumerate() {
        levels[idx] = if rank < c1 {
            StratumLevel::Highest
        } else if rank < c2 {
            StratumLevel::High
        } else if rank < c3 {
            StratumLevel::Middle
        } else {
            StratumLevel::Low
        };
    }
    Ok(ImportanceStrata {
        levels,
        cuts: [c1, c2, c3],
    })
}

/// Default cumulative fractions: top 1% / to 4% / to 10% / remainder.
pub const DEFAULT_FRACTIONS: (f64, f64, f64) = (0.01, 0.04, 0.10);

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn path_graph_center_betweenness() {
        // u0 - i0 - u1: node i0 sits on the single shortest path u0..u1.
        let g = InteractionGraph::from_edges(2, 1, &[(0, 0), (1, 0)]).unwrap();
        let node = brandes_node_betweenness(&g);
        assert_eq!(node.len(), 3);
        assert!((node[2] - 1.0).abs() < 1e-12);
        assert!(node[0].abs() < 1e-12);
        assert!(node[1].abs() < 1e-12);
    }

    #[test]
    fn path_graph_edge_betweenness() {
        // Path u0 - i0 - u1: edge (u0,i0) carries pairs {u0,i0} and {u0,u1}.
        let g = InteractionGraph::from_edges(2, 1, &[(0, 0), (1, 0)]).unwrap();
        let edge = brandes_edge_betweenness(&g);
        assert_eq!(edge.len(), 2);
        assert!((edge[0] - 2.0).abs() < 1e-12);
        assert!((edge[1] - 2.0).abs() < 1e-12);
    }

    #[test]
    fn four_cycle_splits_pairs() {
        // Cycle u0-i0-u1-i1-u0: opposite corners have two shortest paths.
        let g = InteractionGraph::from_edges(2, 2, &[(0, 0), (1, 0), (1, 1), (0, 1)]).unwrap();
        let node = brandes_node_betweenness(&g);
        // Each node carries half of the one opposite pair's two paths: 0.5.
        for v in node {
            assert!((v - 0.5).abs() < 1e-12, "got {v}");
        }
        let edge = brandes_edge_betweenness(&g);
        // Per edge: adjacent pair (1) + two opposite pairs with share 0.5 each.
        for e in edge {
            assert!((e - 2.0).abs() < 1e-12, "got {e}");
        }
    }

    #[test]
    fn disconnected_components_stay_zero_across() {
        let g = InteractionGraph::from_edges(2, 2, &[(0, 0), (1, 1)]).unwrap();
        let node = brandes_node_betweenness(&g);
        for v in node {
            assert_eq!(v, 0.0);
        }
    }

    #[test]
    fn stratify_thousand_elements() {
        let scores: Vec<f64> = (0..1000).map(|k| 1000.0 - k as f64).collect();
        let strata = stratify(&scores, DEFAULT_FRACTIONS).unwrap();
        assert_eq!(strata.cuts, [10, 40, 100]);
        assert_eq!(strata.count(StratumLevel::Highest), 10);
        assert_eq!(strata.count(StratumLevel::High), 30);
        assert_eq!(strata.count(StratumLevel::Middle), 60);
        assert_eq!(strata.count(StratumLevel::Low), 900);
        assert_eq!(strata.levels[0], StratumLevel::Highest);
        assert_eq!(strata.levels[999], StratumLevel::Low);
    }

    #[test]
    fn stratify_small_input_gets_single_highest() {
        let scores: Vec<f64> = (0..100).map(|k| k as f64).collect();
        let strata = stratify(&scores, DEFAULT_FRACTIONS).unwrap();
        assert_eq!(strata.count(StratumLevel::Highest), 1);
        assert_eq!(strata.levels[99], StratumLevel::Highest);
    }

    #[test]
    fn stratify_ties_break_by_index() {
        let scores = vec![1.0; 100];
        let strata = stratify(&scores, DEFAULT_FRACTIONS).unwrap();
        assert_eq!(strata.levels[0], StratumLevel::Highest);
        assert_eq!(strata.levels[1], StratumLevel::High);
        assert_eq!(strata.count(StratumLevel::Highest), 1);
    }

    #[test]
    fn stratify_rejects_bad_input() {
        assert!(stratify(&[], DEFAULT_FRACTIONS).is_err());
        assert!(stratify(&[1.0, f64::NAN], DEFAULT_FRACTIONS).is_err());
        assert!(stratify(&[1.0, 2.0], (0.04, 0.01, 0.10)).is_err());
        assert!(stratify(&[1.0, 2.0], (0.0, 0.5, 0.9)).is_err());
    }
}
