//! Bipartite interaction graph, interaction-file parsing, train/test
//! splitting, and the symmetrically normalized adjacency operator.
//!
//! Users and items live in one index space of size `m + n`: user `u` maps to
//! row `u`, item `i` to row `m + i`. The normalized adjacency is
//! `D^{-1/2} A D^{-1/2}` over that block structure, stored in CSR form.

use std::collections::{HashMap, HashSet};
use std::io::BufRead;

use rand::seq::SliceRandom;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::matrix::DenseMatrix;
use crate::rng::{hash_seeds, rng_from_seed};

/// Bijection between raw string identifiers and dense `u32` indices,
/// assigned in order of first appearance.
#[derive(Debug, Clone, Default)]
pub struct IdMap {
    to_index: HashMap<String, u32>,
    to_raw: Vec<String>,
}

impl IdMap {
    pub fn intern(&mut self, raw: &str) -> u32 {
        if let Some(&idx) = self.to_index.get(raw) {
            return idx;
        }
        let idx = self.to_raw.len() as u32;
        self.to_index.insert(raw.to_string(), idx);
        self.to_raw.push(raw.to_string());
        idx
    }

    pub fn index_of(&self, raw: &str) -> Option<u32> {
        self.to_index.get(raw).copied()
    }

    pub fn raw_of(&self, idx: u32) -> Option<&str> {
        self.to_raw.get(idx as usize).map(|s| s.as_str())
    }

    pub fn len(&self) -> usize {
        self.to_raw.len()
    }

    pub fn is_empty(&self) -> bool {
        self.to_raw.is_empty()
    }
}

/// Undirected bipartite user-item graph with deduplicated edges.
#[derive(Debug, Clone)]
pub struct InteractionGraph {
    users: IdMap,
    items: IdMap,
    edges: Vec<(u32, u32)>,
    edge_set: HashSet<(u32, u32)>,
    user_adj: Vec<Vec<u32>>,
    item_adj: Vec<Vec<u32>>,
}

impl InteractionGraph {
    /// Builds a graph over `m` users and `n` items from (user, item) index
    /// pairs. Duplicate pairs collapse to one edge; order of first
    /// appearance is kept. Raw ids default to the decimal indices.
    pub fn from_edges(m: usize, n: usize, pairs: &[(u32, u32)]) -> Result<Self> {
        let mut users = IdMap::default();
        for u in 0..m {
            users.intern(&u.to_string());
        }
        let mut items = IdMap::default();
        for i in 0..n {
            items.intern(&i.to_string());
        }
        Self::with_id_maps(users, items, pairs)
    }

    fn with_id_maps(users: IdMap, items: IdMap, pairs: &[(u32, u32)]) -> Result<Self> {
        let m = users.len();
        let n = items.len();
        let mut edges = Vec::with_capacity(pairs.len());
        let mut edge_set = HashSet::with_capacity(pairs.len());
        for &(u, i) in pairs {
            if (u as usize) >= m {
                return Err(Error::IndexOutOfRange(format!("user {u} >= {m}")));
            }
            if (i as usize) >= n {
                return Err(Error::IndexOutOfRange(format!("item {i} >= {n}")));
            }
            if edge_set.insert((u, i)) {
                edges.push((u, i));
            }
        }
        let mut user_adj = vec![Vec::new(); m];
        let mut item_adj = vec![Vec::new(); n];
        for &(u, i) in &edges {
            user_adj[u as usize].push(i);
            item_adj[i as usize].push(u);
        }
        for l in &mut user_adj {
            l.sort_unstable();
        }
        for l in &mut item_adj {
            l.sort_unstable();
        }
        Ok(InteractionGraph {
            users,
            items,
            edges,
            edge_set,
            user_adj,
            item_adj,
        })
    }

    pub fn num_users(&self) -> usize {
        self.user_adj.len()
    }

    pub fn num_items(&self) -> usize {
        self.item_adj.len()
    }

    /// Total node count `m + n` of the block graph.
    pub fn num_nodes(&self) -> usize {
        self.num_users() + self.num_items()
    }

    pub fn num_edges(&self) -> usize {
        self.edges.len()
    }

    /// Edges in first-appearance order.
    pub fn edges(&self) -> &[(u32, u32)] {
        &self.edges
    }

    pub fn has_edge(&self, u: u32, i: u32) -> bool {
        self.edge_set.contains(&(u, i))
    }

    /// Items interacted with by user `u`, ascending.
    pub fn user_items(&self, u: u32) -> &[u32] {
        &self.user_adj[u as usize]
    }

    /// Users that interacted with item `i`, ascending.
    pub fn item_users(&self, i: u32) -> &[u32] {
        &self.item_adj[i as usize]
    }

    pub fn user_degree(&self, u: u32) -> usize {
        self.user_adj[u as usize].len()
    }

    pub fn item_degree(&self, i: u32) -> usize {
        self.item_adj[i as usize].len()
    }

    pub fn user_ids(&self) -> &IdMap {
        &self.users
    }

    pub fn item_ids(&self) -> &IdMap {
        &self.items
    }

    /// Graph with the same node set and id maps but a different edge list.
    pub fn with_edges(&self, pairs: &[(u32, u32)]) -> Result<Self> {
        Self::with_id_maps(self.users.clone(), self.items.clone(), pairs)
    }

    /// Order-insensitive fingerprint of the node counts and edge set; used
    /// to tie derived artifacts (views, splits) back to their parent.
    pub fn fingerprint(&self) -> u64 {
        let mut edge_acc = 0u64;
        for &(u, i) in &self.edges {
            edge_acc ^= hash_seeds(&[u as u64, i as u64]);
        }
        hash_seeds(&[self.num_users() as u64, self.num_items() as u64, edge_acc])
    }
}

/// Field separator for interaction files.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Separator {
    /// Any run of ASCII whitespace (covers tab- and space-separated files).
    Whitespace,
    /// A single specific character, e.g. ','.
    Char(char),
}

/// Options for [`parse_interactions`].
#[derive(Debug, Clone)]
pub struct ParseConfig {
    pub separator: Separator,
    /// When set, lines must carry a numeric third column; interactions with
    /// rating strictly below the threshold are dropped.
    pub rating_threshold: Option<f64>,
}

impl Default for ParseConfig {
    fn default() -> Self {
        ParseConfig {
            separator: Separator::Whitespace,
            rating_threshold: None,
        }
    }
}

/// Parses `user <sep> item [<sep> rating [<sep> ...]]` lines into a graph.
///
/// Blank lines and lines starting with `#` are skipped. Duplicate pairs
/// collapse to a single edge. Raw ids are interned in order of first
/// appearance; extra trailing columns (e.g. timestamps) are ignored.
pub fn parse_interactions<R: BufRead>(reader: R, cfg: &ParseConfig) -> Result<InteractionGraph> {
    let mut users = IdMap::default();
    let mut items = IdMap::default();
    let mut pairs: Vec<(u32, u32)> = Vec::new();
    for (lineno, line) in reader.lines().enumerate() {
        let lineno = lineno + 1;
        let line = line.map_err(|e| Error::Parse {
            line: lineno,
            msg: e.to_string(),
        })?;
        let trimmed = line.trim();
        if trimmed.is_empty() || trimmed.starts_with('#') {
            continue;
        }
        let fields: Vec<&str> = match cfg.separator {
            Separator::Whitespace => trimmed.split_whitespace().collect(),
            Separator::Char(c) => trimmed.split(c).map(str::trim).collect(),
        };
        if fields.len() < 2 {
            return Err(Error::Parse {
                line: lineno,
                msg: format!("expected at least 2 fields, got {}", fields.len()),
            });
        }
        if let Some(threshold) = cfg.rating_threshold {
            if fields.len() < 3 {
                return Err(Error::Parse {
                    line: lineno,
                    msg: "rating threshold set but no rating column".to_string(),
                });
            }
            let rating: f64 = fields[2].parse().map_err(|_| Error::Parse {
                line: lineno,
                msg: format!("invalid rating {:?}", fields[2]),
            })?;
            if rating < threshold {
                continue;
            }
        }
        let u = users.intern(fields[0]);
        let i = items.intern(fields[1]);
        pairs.push((u, i));
    }
    if pairs.is_empty() {
        return Err(Error::NoInteractions);
    }
    InteractionGraph::with_id_maps(users, items, &pairs)
}

/// Splits edges per user: `ceil(test_ratio * degree)` of each user's edges
/// go to test, except degree-1 users whose single edge stays in train.
///
/// Both halves keep the parent's full node set and id maps, so indices stay
/// comparable across the split. The same seed reproduces the same split.
pub fn split_train_test(
    g: &InteractionGraph,
    test_ratio: f64,
    seed: u64,
) -> Result<(InteractionGraph, InteractionGraph)> {
    if !(0.0..1.0).contains(&test_ratio) {
        return Err(Error::InvalidConfig(format!(
            "test_ratio must be in [0, 1), got {test_ratio}"
        )));
    }
    let mut train: Vec<(u32, u32)> = Vec::with_capacity(g.num_edges());
    let mut test: Vec<(u32, u32)> = Vec::new();
    for u in 0..g.num_users() as u32 {
        let items = g.user_items(u);
        if items.is_empty() {
            continue;
        }
        if items.len() == 1 || test_ratio == 0.0 {
            train.push((u, items[0]));
            train.extend(items.iter().skip(1).map(|&i| (u, i)));
            continue;
        }
        let mut shuffled: Vec<u32> = items.to_vec();
        let mut rng = rng_from_seed(hash_seeds(&[seed, u as u64]));
        shuffled.shuffle(&mut rng);
        let n_test = ((test_ratio * items.len() as f64).ceil() as usize).min(items.len() - 1);
        for (k, &i) in shuffled.iter().enumerate() {
            if k < n_test {
                test.push((u, i));
            } else {
                train.push((u, i));
            }
        }
    }
    Ok((g.with_edges(&train)?, g.with_edges(&test)?))
}

/// `D^{-1/2} A D^{-1/2}` over the `(m + n)`-node block graph, in CSR form.
/// Rows of degree-0 nodes are empty. The matrix is symmetric; both
/// orientations of each edge are stored.
#[derive(Debug, Clone)]
pub struct NormalizedAdjacency {
    dim: usize,
    row_ptr: Vec<usize>,
    col_idx: Vec<u32>,
    values: Vec<f64>,
}

impl NormalizedAdjacency {
    pub fn from_graph(g: &InteractionGraph) -> Self {
        Self::from_biadjacency(g.num_users(), g.num_items(), g.edges())
    }

    /// Builds the operator from an explicit edge list over `m` users and
    /// `n` items. Degrees are those of the given edge list, so perturbed
    /// views get their own normalization.
    pub fn from_biadjacency(m: usize, n: usize, edges: &[(u32, u32)]) -> Self {
        let dim = m + n;
        let mut degree = vec![0usize; dim];
        for &(u, i) in edges {
            degree[u as usize] += 1;
            degree[m + i as usize] += 1;
        }
        let inv_sqrt: Vec<f64> = degree
            .iter()
            .map(|&d| if d == 0 { 0.0 } else { 1.0 / (d as f64).sqrt() })
            .collect();

        // Column-sorted CSR: per-row neighbor lists built then sorted.
        let mut rows: Vec<Vec<(u32, f64)>> = vec![Vec::new(); dim];
        for &(u, i) in edges {
            let (ru, ri) = (u as usize, m + i as usize);
            let w = inv_sqrt[ru] * inv_sqrt[ri];
            rows[ru].push((ri as u32, w));
            rows[ri].push((ru as u32, w));
        }
        let mut row_ptr = Vec::with_capacity(dim + 1);
        let mut col_idx = Vec::with_capacity(2 * edges.len());
        let mut values = Vec::with_capacity(2 * edges.len());
        row_ptr.push(0);
        for r in &mut rows {
            r.sort_unstable_by_key(|&(c, _)| c);
            for &(c, w) in r.iter() {
                col_idx.push(c);
                values.push(w);
            }
            row_ptr.push(col_idx.len());
        }
        NormalizedAdjacency {
            dim,
            row_ptr,
            col_idx,
            values,
        }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    /// Stored entries (twice the edge count).
    pub fn nnz(&self) -> usize {
        self.col_idx.len()
    }

    /// Value at (r, c), or `None` when the entry is structurally zero.
    pub fn lookup(&self, r: usize, c: usize) -> Option<f64> {
        let lo = self.row_ptr[r];
        let hi = self.row_ptr[r + 1];
        let cols = &self.col_idx[lo..hi];
        cols.binary_search(&(c as u32))
            .ok()
            .map(|k| self.values[lo + k])
    }

    /// Sparse-times-dense product `self * x`; rows are independent, so the
    /// computation is row-parallel and bitwise deterministic.
    pub fn spmm(&self, x: &DenseMatrix) -> Result<DenseMatrix> {
        if x.rows() != self.dim {
            return Err(Error::DimensionMismatch {
                expected: format!("{} rows", self.dim),
                got: format!("{}", x.rows()),
            });
        }
        let cols = x.cols();
        let mut out = DenseMatrix::zeros(self.dim, cols);
        let row_ptr = &self.row_ptr;
        let col_idx = &self.col_idx;
        let values = &self.values;
        out.data_mut()
            .par_chunks_mut(cols)
            .enumerate()
            .for_each(|(r, out_row)| {
                for k in row_ptr[r]..row_ptr[r + 1] {
                    let src = x.row(col_idx[k] as usize);
                    let w = values[k];
                    for (o, s) in out_row.iter_mut().zip(src) {
                        *o += w * s;
                    }
                }
            });
        Ok(out)
    }

    /// Dense copy of the operator; oracle and debugging aid for small graphs.
    pub fn to_dense(&self) -> DenseMatrix {
        let mut d = DenseMatrix::zeros(self.dim, self.dim);
        for r in 0..self.dim {
            for k in self.row_ptr[r]..self.row_ptr[r + 1] {
                d.set(r, self.col_idx[k] as usize, self.values[k]);
            }
        }
        d
    }
}
