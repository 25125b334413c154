//! Post-hoc diagnostics: per-node agreement between the clean graph and an
//! augmented view, suspicious-node flagging, controlled graph corruption
//! (fake-edge injection, sparsification), and embedding export.

use std::collections::HashSet;
use std::path::Path;

use rand::seq::SliceRandom;
use rand::Rng;

use crate::augmentation::ViewGraph;
use crate::encoder::{propagate, propagate_view, EmbeddingTable};
use crate::error::{Error, Result};
use crate::graph::{InteractionGraph, NormalizedAdjacency};
use crate::losses::cosine_checked;
use crate::matrix::DenseMatrix;
use crate::rng::rng_from_seed;

/// Attempts per fake edge before concluding the complement is unreachable.
pub const FAKE_EDGE_REJECTION_CAP: usize = 1000;

/// Per-node cosine similarity between embeddings propagated through the
/// clean graph and through a view, from the same parameter table. Nodes are
/// ordered users first, then items. Degenerate (zero) embeddings get 0.
pub fn view_similarity(
    theta: &EmbeddingTable,
    adj: &NormalizedAdjacency,
    view: &ViewGraph,
    layers: usize,
) -> Result<Vec<f64>> {
    let clean = propagate(adj, theta, layers)?;
    let viewed = propagate_view(view, theta, layers)?;
    let rows = clean.matrix().rows();
    Ok((0..rows)
        .map(|r| cosine_checked(clean.matrix().row(r), viewed.matrix().row(r)).0)
        .collect())
}

/// Thresholds for flagging nodes whose view embedding disagrees with the
/// clean one: the node must sit in the lowest `rank_fraction` of cosines
/// and fall below `cosine_threshold` absolutely.
#[derive(Debug, Clone, Copy)]
pub struct FlagConfig {
    pub rank_fraction: f64,
    pub cosine_threshold: f64,
}

impl Default for FlagConfig {
    fn default() -> Self {
        Self {
            rank_fraction: 0.2,
            cosine_threshold: 0.1,
        }
    }
}

impl FlagConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.rank_fraction.is_finite()
            && (0.0..=1.0).contains(&self.rank_fraction)
            && self.cosine_threshold.is_finite())
        {
            return Err(Error::InvalidConfig(format!(
                "flag config out of range: rank_fraction {}, cosine_threshold {}",
                self.rank_fraction, self.cosine_threshold
            )));
        }
        Ok(())
    }
}

/// Flags nodes that are both in the lowest `rank_fraction` of the cosine
/// distribution (ascending, ties by node index) and below the absolute
/// threshold. Both conditions must hold.
pub fn flag_suspicious(cosines: &[f64], cfg: &FlagConfig) -> Result<Vec<bool>> {
    cfg.validate()?;
    if cosines.is_empty() {
        return Err(Error::InvalidConfig("no cosines to flag".into()));
    }
    if cosines.iter().any(|c| !c.is_finite()) {
        return Err(Error::NonFinite("view cosines".into()));
    }
    let n = cosines.len();
    let cutoff = ((cfg.rank_fraction * n as f64).floor() as usize).min(n);
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| {
        cosines[a]
            .partial_cmp(&cosines[b])
            .expect("checked finite")
            .then(a.cmp(&b))
    });
    let mut flags = vec![false; n];
    for &i in order.iter().take(cutoff) {
        flags[i] = cosines[i] < cfg.cosine_threshold;
    }
    Ok(flags)
}

/// A corrupted graph together with exactly what changed.
#[derive(Debug, Clone)]
pub struct Perturbation {
    pub graph: InteractionGraph,
    pub removed: Vec<(u32, u32)>,
    pub added: Vec<(u32, u32)>,
}

/// Replaces `floor(ratio * |E|)` uniformly chosen interactions with fake
/// ones drawn uniformly from the complement of the original edge set. The
/// interaction count is preserved; added edges are distinct and never
/// coincide with any original edge.
pub fn inject_fake_edges(g: &InteractionGraph, ratio: f64, seed: u64) -> Result<Perturbation> {
    if !(ratio.is_finite() && (0.0..=1.0).contains(&ratio)) {
        return Err(Error::InvalidConfig(format!(
            "fake-edge ratio must lie in [0, 1], got {ratio}"
        )));
    }
    let edges = g.edges();
    let n_fake = (ratio * edges.len() as f64).floor() as usize;
    let mut rng = rng_from_seed(seed);

    let mut indices: Vec<usize> = (0..edges.len()).collect();
    indices.shuffle(&mut rng);
    let removed_set: HashSet<usize> = indices.iter().take(n_fake).copied().collect();
    let removed: Vec<(u32, u32)> = indices.iter().take(n_fake).map(|&i| edges[i]).collect();

    let (m, n) = (g.num_users() as u32, g.num_items() as u32);
    let mut added = Vec::with_capacity(n_fake);
    let mut added_set: HashSet<(u32, u32)> = HashSet::with_capacity(n_fake);
    for _ in 0..n_fake {
        let mut pick = None;
        for _ in 0..FAKE_EDGE_REJECTION_CAP {
            let cand = (rng.random_range(0..m), rng.random_range(0..n));
            if !g.has_edge(cand.0, cand.1) && !added_set.contains(&cand) {
                pick = Some(cand);
                break;
            }
        }
        let cand = pick.ok_or(Error::RejectionCapExceeded {
            cap: FAKE_EDGE_REJECTION_CAP,
        })?;
        added_set.insert(cand);
        added.push(cand);
    }

    let mut new_edges: Vec<(u32, u32)> = edges
        .iter()
        .enumerate()
        .filter(|(i, _)| !removed_set.contains(i))
        .map(|(_, &e)| e)
        .collect();
    new_edges.extend(&added);
    Ok(Perturbation {
        graph: g.with_edges(&new_edges)?,
        removed,
        added,
    })
}

/// Keeps a seeded-random `floor(keep_fraction * |E|)`-edge subset. The kept
/// set is the prefix of one fixed permutation, so for the same seed a
/// smaller fraction always yields a subset of a larger one.
pub fn sparsify(g: &InteractionGraph, keep_fraction: f64, seed: u64) -> Result<InteractionGraph> {
    if !(keep_fraction.is_finite() && keep_fraction > 0.0 && keep_fraction <= 1.0) {
        return Err(Error::InvalidConfig(format!(
            "keep fraction must lie in (0, 1], got {keep_fraction}"
        )));
    }
    let mut edges: Vec<(u32, u32)> = g.edges().to_vec();
    let mut rng = rng_from_seed(seed);
    edges.shuffle(&mut rng);
    let kept = (keep_fraction * edges.len() as f64).floor() as usize;
    if kept == 0 {
        return Err(Error::InvalidConfig(format!(
            "keep fraction {keep_fraction} leaves no interactions"
        )));
    }
    edges.truncate(kept);
    g.with_edges(&edges)
}

/// Embeddings as CSV: header `kind,id,d0..`, then one row per user and per
/// item. Floats print with Rust's shortest-round-trip formatting, so parsing
/// the file back recovers bit-identical values.
pub fn embeddings_csv(theta: &EmbeddingTable) -> String {
    let dim = theta.dim();
    let mut out = String::from("kind,id");
    for d in 0..dim {
        out.push_str(&format!(",d{d}"));
    }
    out.push('\n');
    let mut push_row = |kind: &str, id: usize, row: &[f64]| {
        out.push_str(kind);
        out.push(',');
        out.push_str(&id.to_string());
        for v in row {
            out.push(',');
            out.push_str(&v.to_string());
        }
        out.push('\n');
    };
    for u in 0..theta.num_users() {
        push_row("user", u, theta.user_row(u as u32));
    }
    for i in 0..theta.num_items() {
        push_row("item", i, theta.item_row(i as u32));
    }
    out
}

pub fn export_embeddings(theta: &EmbeddingTable, path: &Path) -> Result<()> {
    std::fs::write(path, embeddings_csv(theta))?;
    Ok(())
}

/// Parses the CSV produced by [`embeddings_csv`]. Expects all user rows
/// first, then all item rows, ids consecutive from zero within each kind.
pub fn parse_embeddings_csv(text: &str) -> Result<EmbeddingTable> {
    let mut lines = text.lines().enumerate();
    let (_, header) = lines.next().ok_or_else(|| Error::Parse {
        line: 1,
        msg: "empty embeddings file".into(),
    })?;
    let dim = header.split(',').count().saturating_sub(2);
    if !header.starts_with("kind,id") || dim == 0 {
        return Err(Error::Parse {
            line: 1,
            msg: format!("bad header: {header}"),
        });
    }
    let mut users: Vec<Vec<f64>> = Vec::new();
    let mut items: Vec<Vec<f64>> = Vec::new();
    for (idx, line) in lines {
        let line_no = idx + 1;
        if line.trim().is_empty() {
            continue;
        }
        let mut fields = line.split(',');
        let kind = fields.next().unwrap_or_default();
        let id: usize = fields
            .next()
            .and_then(|f| f.parse().ok())
            .ok_or_else(|| Error::Parse {
                line: line_no,
                msg: "missing or invalid id".into(),
            })?;
        let values: Vec<f64> = fields
            .map(|f| {
                f.parse().map_err(|_| Error::Parse {
                    line: line_no,
                    msg: format!("bad float: {f}"),
                })
            })
            .collect::<Result<_>>()?;
        if values.len() != dim {
            return Err(Error::Parse {
                line: line_no,
                msg: format!("expected {dim} values, got {}", values.len()),
            });
        }
        let bucket = match kind {
            "user" => &mut users,
            "item" => &mut items,
            other => {
                return Err(Error::Parse {
                    line: line_no,
                    msg: format!("unknown kind: {other}"),
                })
            }
        };
        if id != bucket.len() {
            return Err(Error::Parse {
                line: line_no,
                msg: format!(
                    "ids must be consecutive; expected {}, got {id}",
                    bucket.len()
                ),
            });
        }
        bucket.push(values);
    }
    if users.is_empty() || items.is_empty() {
        return Err(Error::Parse {
            line: 1,
            msg: "need at least one user and one item row".into(),
        });
    }
    let rows = users.len() + items.len();
    let mut data = Vec::with_capacity(rows * dim);
    for row in users.iter().chain(&items) {
        data.extend_from_slice(row);
    }
    let mat = DenseMatrix::from_vec(rows, dim, data)?;
    EmbeddingTable::from_matrix(users.len(), items.len(), mat)
}
