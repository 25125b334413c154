//! Helpers shared by the integration suites: finite-difference gradient
//! checking and an exact betweenness oracle by shortest-path enumeration.

#![allow(dead_code)]

use std::collections::{HashMap, VecDeque};

use rand::Rng;

use sgcl_core::encoder::EmbeddingTable;
use sgcl_core::graph::InteractionGraph;
use sgcl_core::losses::{scl_pair_scores, NodeClass, PairGrads, PairScores, SCL_CLAMP_EPS};

pub const H: f64 = 1e-6;

/// Relative error with a floored denominator, |a - f| / max(|a|, |f|, 1e-4),
/// so near-zero coordinates are effectively held to an absolute 1e-8, above
/// the ~1e-9 cancellation noise of central differences at h = 1e-6.
pub fn rel_err(a: f64, f: f64) -> f64 {
    (a - f).abs() / a.abs().max(f.abs()).max(1e-4)
}

/// Worst coordinate found by a finite-difference sweep.
pub struct FdReport {
    pub max_rel_err: f64,
    pub worst: String,
}

/// Central difference of a scalar function of an embedding table, one
/// coordinate at a time, against the analytic gradient table.
pub fn fd_table<F>(theta: &EmbeddingTable, analytic: &EmbeddingTable, mut f: F) -> FdReport
where
    F: FnMut(&EmbeddingTable) -> f64,
{
    let mut report = FdReport {
        max_rel_err: 0.0,
        worst: String::new(),
    };
    for r in 0..theta.matrix().rows() {
        for c in 0..theta.dim() {
            let mut plus = theta.clone();
            plus.matrix_mut().set(r, c, theta.matrix().get(r, c) + H);
            let mut minus = theta.clone();
            minus.matrix_mut().set(r, c, theta.matrix().get(r, c) - H);
            let fd = (f(&plus) - f(&minus)) / (2.0 * H);
            let a = analytic.matrix().get(r, c);
            let err = rel_err(a, fd);
            if err > report.max_rel_err {
                report.max_rel_err = err;
                report.worst = format!("coord ({r}, {c}): analytic {a} vs fd {fd}");
            }
        }
    }
    report
}

/// Central difference over every entry of a [`PairScores`] against the
/// analytic per-score gradients.
pub fn fd_pair_scores<F>(scores: &PairScores, grads: &PairGrads, mut f: F) -> FdReport
where
    F: FnMut(&PairScores) -> f64,
{
    let mut report = FdReport {
        max_rel_err: 0.0,
        worst: String::new(),
    };
    let record = |a: f64, fd: f64, what: String, report: &mut FdReport| {
        let err = rel_err(a, fd);
        if err > report.max_rel_err {
            report.max_rel_err = err;
            report.worst = format!("{what}: analytic {a} vs fd {fd}");
        }
    };
    for k in 0..scores.num_anchors() {
        let mut plus = scores.clone();
        plus.s_plus[k] += H;
        let mut minus = scores.clone();
        minus.s_plus[k] -= H;
        let fd = (f(&plus) - f(&minus)) / (2.0 * H);
        record(grads.d_plus[k], fd, format!("d_plus[{k}]"), &mut report);
        for j in 0..scores.s_neg[k].len() {
            let mut plus = scores.clone();
            plus.s_neg[k][j] += H;
            let mut minus = scores.clone();
            minus.s_neg[k][j] -= H;
            let fd = (f(&plus) - f(&minus)) / (2.0 * H);
            record(
                grads.d_neg[k][j],
                fd,
                format!("d_neg[{k}][{j}]"),
                &mut report,
            );
        }
    }
    report
}

/// 6 users x 6 items, fixed pattern with varied degrees, connected.
pub fn toy_graph_6x6() -> InteractionGraph {
    let pairs = [
        (0, 0),
        (0, 1),
        (0, 2),
        (1, 0),
        (1, 3),
        (2, 1),
        (2, 4),
        (3, 2),
        (3, 5),
        (4, 3),
        (4, 4),
        (5, 5),
        (5, 0),
        (2, 3),
    ];
    InteractionGraph::from_edges(6, 6, &pairs).unwrap()
}

/// Draws contrastive scores via embedding tables so they respect the
/// cosine bound |s| <= 1/tau.
pub fn random_scores(seed: u64, anchors: usize, tau: f64) -> PairScores {
    let z1 = sgcl_core::encoder::init_embeddings(anchors, 0, 8, seed);
    let z2 = sgcl_core::encoder::init_embeddings(anchors, 0, 8, seed + 1);
    scl_pair_scores(
        &z1,
        &z2,
        &(0..anchors as u32).collect::<Vec<_>>(),
        NodeClass::User,
        tau,
    )
    .unwrap_or_else(|e| panic!("score construction failed: {e}"))
}

/// Finite differences straddle the clamp kink; reject draws too close to it.
pub fn assert_clamp_margin(scores: &PairScores) {
    for (sp, negs) in scores.s_plus.iter().zip(&scores.s_neg) {
        let base = -sp.exp() + negs.iter().map(|s| s.exp()).sum::<f64>();
        assert!(
            (base - SCL_CLAMP_EPS).abs() > 1e-3,
            "score draw too close to the clamp boundary for finite differences"
        );
    }
}

/// Rank of item `i` (1-based) under descending score with index ties:
/// one plus the number of items that sort strictly ahead of it.
pub fn brute_rank(scores: &[f64], exclude: &std::collections::HashSet<u32>, i: u32) -> usize {
    assert!(!exclude.contains(&i));
    let si = scores[i as usize];
    let ahead = (0..scores.len() as u32)
        .filter(|j| !exclude.contains(j) && *j != i)
        .filter(|&j| {
            let sj = scores[j as usize];
            sj > si || (sj == si && j < i)
        })
        .count();
    ahead + 1
}

/// Precision, recall, and NDCG at K computed from first principles: find
/// each relevant item's full rank, then apply the metric definitions.
pub fn brute_metrics(
    scores: &[f64],
    exclude: &std::collections::HashSet<u32>,
    test: &std::collections::HashSet<u32>,
    k: usize,
) -> (f64, f64, f64) {
    let ranks: Vec<usize> = test
        .iter()
        .filter(|i| !exclude.contains(i))
        .map(|&i| brute_rank(scores, exclude, i))
        .collect();
    let hits = ranks.iter().filter(|&&r| r <= k).count();
    let precision = hits as f64 / k as f64;
    let recall = if test.is_empty() {
        0.0
    } else {
        hits as f64 / test.len() as f64
    };
    let dcg: f64 = ranks
        .iter()
        .filter(|&&r| r <= k)
        .map(|&r| 1.0 / ((r + 1) as f64).log2())
        .sum();
    let idcg: f64 = (1..=k.min(test.len()))
        .map(|r| 1.0 / ((r + 1) as f64).log2())
        .sum();
    let ndcg = if test.is_empty() { 0.0 } else { dcg / idcg };
    (precision, recall, ndcg)
}

/// Exact betweenness by explicit shortest-path enumeration: BFS labels
/// distances from every source, then a depth-first walk over the
/// predecessor structure visits every shortest path of every unordered
/// pair, crediting interior nodes and traversed edges with
/// `1 / (number of shortest paths)`. Exponential in the worst case but
/// exact; run it only on graphs with at most ~12 nodes.
pub struct BetweennessOracle {
    pub node: Vec<f64>,
    /// Keyed by sorted node-id pair.
    pub edge: HashMap<(usize, usize), f64>,
}

pub fn undirected_adjacency(g: &InteractionGraph) -> Vec<Vec<usize>> {
    let m = g.num_users();
    let mut adj = vec![Vec::new(); g.num_nodes()];
    for &(u, i) in g.edges() {
        adj[u as usize].push(m + i as usize);
        adj[m + i as usize].push(u as usize);
    }
    adj
}

fn enumerate_paths(
    adj: &[Vec<usize>],
    dist: &[i64],
    current: usize,
    source: usize,
    path: &mut Vec<usize>,
    out: &mut Vec<Vec<usize>>,
) {
    if current == source {
        let mut p = path.clone();
        p.reverse();
        out.push(p);
        return;
    }
    for &prev in &adj[current] {
        if dist[prev] == dist[current] - 1 {
            path.push(prev);
            enumerate_paths(adj, dist, prev, source, path, out);
            path.pop();
        }
    }
}

pub fn brute_force_betweenness(g: &InteractionGraph) -> BetweennessOracle {
    let n = g.num_nodes();
    let adj = undirected_adjacency(g);
    let mut node = vec![0.0; n];
    let mut edge: HashMap<(usize, usize), f64> = HashMap::new();

    for s in 0..n {
        let mut dist = vec![-1i64; n];
        dist[s] = 0;
        let mut queue = VecDeque::from([s]);
        while let Some(v) = queue.pop_front() {
            for &w in &adj[v] {
                if dist[w] < 0 {
                    dist[w] = dist[v] + 1;
                    queue.push_back(w);
                }
            }
        }
        for t in (s + 1)..n {
            if dist[t] < 0 {
                continue;
            }
            let mut paths = Vec::new();
            enumerate_paths(&adj, &dist, t, s, &mut vec![t], &mut paths);
            let share = 1.0 / paths.len() as f64;
            for p in &paths {
                for &v in &p[1..p.len() - 1] {
                    node[v] += share;
                }
                for w in p.windows(2) {
                    let key = (w[0].min(w[1]), w[0].max(w[1]));
                    *edge.entry(key).or_insert(0.0) += share;
                }
            }
        }
    }
    BetweennessOracle { node, edge }
}

pub fn is_connected(g: &InteractionGraph) -> bool {
    let adj = undirected_adjacency(g);
    let n = g.num_nodes();
    let mut seen = vec![false; n];
    let mut queue = VecDeque::from([0usize]);
    seen[0] = true;
    let mut count = 1;
    while let Some(v) = queue.pop_front() {
        for &w in &adj[v] {
            if !seen[w] {
                seen[w] = true;
                count += 1;
                queue.push_back(w);
            }
        }
    }
    count == n
}

/// Random connected bipartite graph with at most 12 nodes.
pub fn random_connected_bipartite(rng: &mut impl Rng) -> InteractionGraph {
    loop {
        let m = rng.random_range(2..=6usize);
        let n = rng.random_range(2..=(12 - m).min(6));
        let p = rng.random_range(0.25..0.8);
        let mut pairs = Vec::new();
        for u in 0..m as u32 {
            for i in 0..n as u32 {
                if rng.random_bool(p) {
                    pairs.push((u, i));
                }
            }
        }
        if pairs.is_empty() {
            continue;
        }
        let g = InteractionGraph::from_edges(m, n, &pairs).unwrap();
        if is_connected(&g) {
            return g;
        }
    }
}
