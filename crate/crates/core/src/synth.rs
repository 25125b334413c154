//! Synthetic interaction graphs with planted cluster structure: users and
//! items are split into aligned contiguous blocks, and within-block pairs
//! interact much more densely than cross-block pairs.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::InteractionGraph;
use crate::rng::rng_from_seed;

/// Block-model parameters. Cross-block pairs interact with probability
/// `within_density * cross_scale`.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default)]
pub struct SynthConfig {
    pub num_users: usize,
    pub num_items: usize,
    pub clusters: usize,
    pub within_density: f64,
    pub cross_scale: f64,
    pub seed: u64,
}

impl Default for SynthConfig {
    fn default() -> Self {
        Self {
            num_users: 60,
            num_items: 100,
            clusters: 2,
            within_density: 0.3,
            cross_scale: 0.1,
            seed: 7,
        }
    }
}

impl SynthConfig {
    pub fn validate(&self) -> Result<()> {
        if self.clusters == 0 || self.num_users < self.clusters || self.num_items < self.clusters {
            return Err(Error::InvalidConfig(format!(
                "need at least one user and item per cluster: {} users, {} items, {} clusters",
                self.num_users, self.num_items, self.clusters
            )));
        }
        if !(self.within_density.is_finite()
            && self.within_density > 0.0
            && self.within_density <= 1.0)
        {
            return Err(Error::InvalidConfig(format!(
                "within-cluster density must lie in (0, 1], got {}",
                self.within_density
            )));
        }
        if !(self.cross_scale.is_finite() && (0.0..=1.0).contains(&self.cross_scale)) {
            return Err(Error::InvalidConfig(format!(
                "cross-cluster scale must lie in [0, 1], got {}",
                self.cross_scale
            )));
        }
        Ok(())
    }

    pub fn cross_density(&self) -> f64 {
        self.within_density * self.cross_scale
    }
}

/// Contiguous block index of position `idx` when `total` positions are split
/// into `clusters` near-equal blocks (earlier blocks take the remainder).
fn block_of(idx: usize, total: usize, clusters: usize) -> usize {
    let base = total / clusters;
    let rem = total % clusters;
    let boundary = rem * (base + 1);
    if idx < boundary {
        idx / (base + 1)
    } else {
        rem + (idx - boundary) / base
    }
}

/// Cluster of a user under `cfg`.
pub fn user_cluster(cfg: &SynthConfig, user: u32) -> usize {
    block_of(user as usize, cfg.num_users, cfg.clusters)
}

/// Cluster of an item under `cfg`.
pub fn item_cluster(cfg: &SynthConfig, item: u32) -> usize {
    block_of(item as usize, cfg.num_items, cfg.clusters)
}

/// Samples a block-model interaction graph. Every user and item is
/// guaranteed at least one interaction: isolated nodes get a single edge to
/// a uniformly random partner inside their own cluster.
pub fn generate_block_graph(cfg: &SynthConfig) -> Result<InteractionGraph> {
    cfg.validate()?;
    let mut rng = rng_from_seed(cfg.seed);
    let cross = cfg.cross_density();
    let mut edges: Vec<(u32, u32)> = Vec::new();
    let mut user_deg = vec![0usize; cfg.num_users];
    let mut item_deg = vec![0usize; cfg.num_items];
    for u in 0..cfg.num_users as u32 {
        let uc = user_cluster(cfg, u);
        for i in 0..cfg.num_items as u32 {
            let p = if uc == item_cluster(cfg, i) {
                cfg.within_density
            } else {
                cross
            };
            if p > 0.0 && rng.random_bool(p) {
                edges.push((u, i));
                user_deg[u as usize] += 1;
                item_deg[i as usize] += 1;
            }
        }
    }

    // Patch isolated nodes with one within-cluster partner each so the
    // graph covers the declared node sets.
    let items_in_cluster = |c: usize| -> Vec<u32> {
        (0..cfg.num_items as u32)
            .filter(|&i| item_cluster(cfg, i) == c)
            .collect()
    };
    let users_in_cluster = |c: usize| -> Vec<u32> {
        (0..cfg.num_users as u32)
            .filter(|&u| user_cluster(cfg, u) == c)
            .collect()
    };
    for u in 0..cfg.num_users as u32 {
        if user_deg[u as usize] == 0 {
            let pool = items_in_cluster(user_cluster(cfg, u));
            let i = pool[rng.random_range(0..pool.len())];
            edges.push((u, i));
            user_deg[u as usize] += 1;
            item_deg[i as usize] += 1;
        }
    }
    for i in 0..cfg.num_items as u32 {
        if item_deg[i as usize] == 0 {
            let pool = users_in_cluster(item_cluster(cfg, i));
            let u = pool[rng.random_range(0..pool.len())];
            edges.push((u, i));
            item_deg[i as usize] += 1;
            user_deg[u as usize] += 1;
        }
    }

    InteractionGraph::from_edges(cfg.num_users, cfg.num_items, &edges)
}
