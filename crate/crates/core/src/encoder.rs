//! Linear graph propagation encoder.
//!
//! Layer-0 embeddings are the only parameters. Propagation applies the
//! normalized adjacency repeatedly, `E^(l+1) = A_hat * E^(l)`, and reads out
//! the uniform mean over layers 0..=L. Because readout is linear and `A_hat`
//! is symmetric, the gradient of any loss with respect to the layer-0 table
//! is the same operator applied to the readout gradient; the backward pass
//! reuses the forward code path.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::NormalizedAdjacency;
use crate::matrix::{dot, DenseMatrix};
use crate::rng::rng_from_seed;

/// Embedding width and propagation depth.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
#[serde(default)]
pub struct EncoderConfig {
    pub dim: usize,
    pub layers: usize,
}

impl Default for EncoderConfig {
    fn default() -> Self {
        EncoderConfig { dim: 64, layers: 2 }
    }
}

impl EncoderConfig {
    pub fn validate(&self) -> Result<()> {
        if self.dim == 0 {
            return Err(Error::InvalidConfig("embedding dim must be >= 1".into()));
        }
        Ok(())
    }
}

/// `(m + n) x d` embedding matrix: rows `[0, m)` are users, rows
/// `[m, m + n)` are items.
#[derive(Debug, Clone, PartialEq)]
pub struct EmbeddingTable {
    num_users: usize,
    num_items: usize,
    mat: DenseMatrix,
}

impl EmbeddingTable {
    pub fn from_matrix(num_users: usize, num_items: usize, mat: DenseMatrix) -> Result<Self> {
        if mat.rows() != num_users + num_items {
            return Err(Error::DimensionMismatch {
                expected: format!("{} rows", num_users + num_items),
                got: format!("{}", mat.rows()),
            });
        }
        Ok(EmbeddingTable {
            num_users,
            num_items,
            mat,
        })
    }

    pub fn zeros(num_users: usize, num_items: usize, dim: usize) -> Self {
        EmbeddingTable {
            num_users,
            num_items,
            mat: DenseMatrix::zeros(num_users + num_items, dim),
        }
    }

    pub fn num_users(&self) -> usize {
        self.num_users
    }

    pub fn num_items(&self) -> usize {
        self.num_items
    }

    pub fn dim(&self) -> usize {
        self.mat.cols()
    }

    pub fn matrix(&self) -> &DenseMatrix {
        &self.mat
    }

    pub fn matrix_mut(&mut self) -> &mut DenseMatrix {
        &mut self.mat
    }

    pub fn user_row(&self, u: u32) -> &[f64] {
        self.mat.row(u as usize)
    }

    pub fn item_row(&self, i: u32) -> &[f64] {
        self.mat.row(self.num_users + i as usize)
    }

    /// Block-graph row index of item `i`.
    pub fn item_node(&self, i: u32) -> usize {
        self.num_users + i as usize
    }
}

/// Xavier-uniform initialization: entries drawn from
/// `U[-sqrt(6 / (2 d)), +sqrt(6 / (2 d))]`, both fan sides equal to `d`.
pub fn init_embeddings(
    num_users: usize,
    num_items: usize,
    dim: usize,
    seed: u64,
) -> EmbeddingTable {
    let bound = (6.0 / (2.0 * dim as f64)).sqrt();
    let mut rng = rng_from_seed(seed);
    let mut table = EmbeddingTable::zeros(num_users, num_items, dim);
    for v in table.mat.data_mut() {
        *v = rng.random_range(-bound..=bound);
    }
    table
}

fn check_adj(adj: &NormalizedAdjacency, table: &EmbeddingTable) -> Result<()> {
    if adj.dim() != table.mat.rows() {
        return Err(Error::DimensionMismatch {
            expected: format!("adjacency dim {}", table.mat.rows()),
            got: format!("{}", adj.dim()),
        });
    }
    Ok(())
}

/// Multi-layer propagation with mean readout over layers 0..=L, one shared
/// adjacency for every step.
pub fn propagate(
    adj: &NormalizedAdjacency,
    e0: &EmbeddingTable,
    layers: usize,
) -> Result<EmbeddingTable> {
    propagate_with(|_| adj, e0, layers)
}

/// Propagation with a (possibly) different adjacency per step: step `l`
/// applies `adjs[l]`. Readout is the mean of layer outputs 0..=L where
/// `L = adjs.len()`.
pub fn propagate_layers(
    adjs: &[&NormalizedAdjacency],
    e0: &EmbeddingTable,
) -> Result<EmbeddingTable> {
    propagate_with(|l| adjs[l], e0, adjs.len())
}

fn propagate_with<'a, F>(adj_at: F, e0: &EmbeddingTable, layers: usize) -> Result<EmbeddingTable>
where
    F: Fn(usize) -> &'a NormalizedAdjacency,
{
    let mut sum = e0.mat.clone();
    let mut current = e0.mat.clone();
    for l in 0..layers {
        let adj = adj_at(l);
        check_adj(adj, e0)?;
        current = adj.spmm(&current)?;
        sum.add_scaled(&current, 1.0)?;
    }
    sum.scale(1.0 / (layers as f64 + 1.0));
    EmbeddingTable::from_matrix(e0.num_users, e0.num_items, sum)
}

/// Adjoint of [`propagate`]: maps a gradient with respect to the readout to
/// the gradient with respect to the layer-0 table. With a symmetric shared
/// adjacency this equals the forward map itself.
pub fn backward_propagate(
    adj: &NormalizedAdjacency,
    grad_out: &EmbeddingTable,
    layers: usize,
) -> Result<EmbeddingTable> {
    backward_with(|_| adj, grad_out, layers)
}

/// Adjoint of [`propagate_layers`].
pub fn backward_propagate_layers(
    adjs: &[&NormalizedAdjacency],
    grad_out: &EmbeddingTable,
) -> Result<EmbeddingTable> {
    backward_with(|l| adjs[l], grad_out, adjs.len())
}

fn backward_with<'a, F>(
    adj_at: F,
    grad_out: &EmbeddingTable,
    layers: usize,
) -> Result<EmbeddingTable>
where
    F: Fn(usize) -> &'a NormalizedAdjacency,
{
    // Reverse sweep of the readout mean: with G the readout gradient,
    //   grad_{E^(L)} = G / (L + 1)
    //   grad_{E^(l)} = G / (L + 1) + A_l^T grad_{E^(l+1)}   (A symmetric)
    // and the result is grad_{E^(0)}.
    let scale = 1.0 / (layers as f64 + 1.0);
    let mut grad = grad_out.mat.clone();
    grad.scale(scale);
    for l in (0..layers).rev() {
        let adj = adj_at(l);
        check_adj(adj, grad_out)?;
        let mut lower = adj.spmm(&grad)?;
        lower.add_scaled(&grad_out.mat, scale)?;
        grad = lower;
    }
    EmbeddingTable::from_matrix(grad_out.num_users, grad_out.num_items, grad)
}

/// Propagation through a view. Shared views reuse their one adjacency for
/// every step; per-layer (random-walk) views must match `layers` exactly.
pub fn propagate_view(
    view: &crate::augmentation::ViewGraph,
    e0: &EmbeddingTable,
    layers: usize,
) -> Result<EmbeddingTable> {
    if !view.supports_layers(layers) {
        return Err(Error::DimensionMismatch {
            expected: format!("{layers} per-layer edge sets"),
            got: format!("{}", view.num_layer_sets()),
        });
    }
    propagate_with(|l| view.adjacency_at(l), e0, layers)
}

/// Adjoint of [`propagate_view`].
pub fn backward_propagate_view(
    view: &crate::augmentation::ViewGraph,
    grad_out: &EmbeddingTable,
    layers: usize,
) -> Result<EmbeddingTable> {
    if !view.supports_layers(layers) {
        return Err(Error::DimensionMismatch {
            expected: format!("{layers} per-layer edge sets"),
            got: format!("{}", view.num_layer_sets()),
        });
    }
    backward_with(|l| view.adjacency_at(l), grad_out, layers)
}

/// Preference score: inner product of the propagated user and item rows.
pub fn score(e: &EmbeddingTable, user: u32, item: u32) -> f64 {
    dot(e.user_row(user), e.item_row(item))
}

/// Scores for every item not in `exclude`, as (item, score) pairs in
/// ascending item order.
pub fn score_all_items(e: &EmbeddingTable, user: u32, exclude: &[u32]) -> Vec<(u32, f64)> {
    let excluded: std::collections::HashSet<u32> = exclude.iter().copied().collect();
    (0..e.num_items() as u32)
        .filter(|i| !excluded.contains(i))
        .map(|i| (i, score(e, user, i)))
        .collect()
}
