//! Stochastic graph augmentation: the two perturbed views contrasted during
//! training, plus the importance-stratified dropout used for noise probes.
//!
//! Every view keeps the parent's full node set and recomputes degree
//! normalization from its own surviving edges. Views record provenance
//! (kind, rate, seed, parent fingerprint) so any artifact derived from them
//! can be traced back to the exact draw.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::centrality::{ImportanceStrata, StratumLevel};
use crate::error::{Error, Result};
use crate::graph::{InteractionGraph, NormalizedAdjacency};
use crate::rng::{hash_seeds, rng_from_seed};

/// Which structural perturbation generates a view.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AugmentationKind {
    EdgeDropout,
    NodeDropout,
    RandomWalk,
}

impl std::str::FromStr for AugmentationKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().replace('-', "_").as_str() {
            "edge_dropout" | "edge" => Ok(AugmentationKind::EdgeDropout),
            "node_dropout" | "node" => Ok(AugmentationKind::NodeDropout),
            "random_walk" | "walk" => Ok(AugmentationKind::RandomWalk),
            other => Err(Error::InvalidConfig(format!(
                "unknown augmentation kind {other:?}"
            ))),
        }
    }
}

/// Augmentation settings carried by the trainer.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
#[serde(default)]
pub struct AugmentationConfig {
    pub kind: AugmentationKind,
    /// Dropout rate in [0, 1].
    pub rate: f64,
}

impl Default for AugmentationConfig {
    fn default() -> Self {
        AugmentationConfig {
            kind: AugmentationKind::EdgeDropout,
            rate: 0.1,
        }
    }
}

impl AugmentationConfig {
    pub fn validate(&self) -> Result<()> {
        if !(0.0..=1.0).contains(&self.rate) || !self.rate.is_finite() {
            return Err(Error::InvalidConfig(format!(
                "augmentation rate must be in [0, 1], got {}",
                self.rate
            )));
        }
        Ok(())
    }
}

/// How a view was drawn.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Provenance {
    pub kind: AugmentationKind,
    pub rate: f64,
    pub seed: u64,
    pub parent_fingerprint: u64,
    /// Set when the view came from stratified dropout.
    pub stratum: Option<StratumLevel>,
}

/// One kept-edge set together with its recomputed normalized adjacency.
#[derive(Debug, Clone)]
pub struct ViewLayer {
    pub graph: InteractionGraph,
    pub adjacency: NormalizedAdjacency,
}

impl ViewLayer {
    fn from_edges(parent: &InteractionGraph, edges: &[(u32, u32)]) -> Result<Self> {
        let graph = parent.with_edges(edges)?;
        let adjacency = NormalizedAdjacency::from_graph(&graph);
        Ok(ViewLayer { graph, adjacency })
    }
}

/// A perturbed copy of the interaction graph. Edge- and node-dropout views
/// have one shared layer; random-walk views hold one independent layer per
/// propagation step.
#[derive(Debug, Clone)]
pub struct ViewGraph {
    layers: Vec<ViewLayer>,
    pub provenance: Provenance,
}

impl ViewGraph {
    /// The single shared layer; errors if this is a per-layer view.
    pub fn shared(&self) -> Result<&ViewLayer> {
        if self.layers.len() == 1 {
            Ok(&self.layers[0])
        } else {
            Err(Error::InvalidConfig(format!(
                "view has {} per-layer edge sets, no shared layer",
                self.layers.len()
            )))
        }
    }

    /// Adjacency used at propagation step `l`.
    pub fn adjacency_at(&self, l: usize) -> &NormalizedAdjacency {
        if self.layers.len() == 1 {
            &self.layers[0].adjacency
        } else {
            &self.layers[l].adjacency
        }
    }

    /// Kept-edge graph at propagation step `l`.
    pub fn graph_at(&self, l: usize) -> &InteractionGraph {
        if self.layers.len() == 1 {
            &self.layers[0].graph
        } else {
            &self.layers[l].graph
        }
    }

    pub fn num_layer_sets(&self) -> usize {
        self.layers.len()
    }

    /// Number of propagation steps this view supports: per-layer views are
    /// pinned to their layer count, shared views work for any depth.
    pub fn supports_layers(&self, layers: usize) -> bool {
        self.layers.len() == 1 || self.layers.len() == layers
    }
}

fn bernoulli_keep(edges: &[(u32, u32)], drop_rate: f64, rng: &mut impl Rng) -> Vec<(u32, u32)> {
    edges
        .iter()
        .copied()
        .filter(|_| !rng.random_bool(drop_rate))
        .collect()
}

fn check_rate(rate: f64) -> Result<()> {
    if !(0.0..=1.0).contains(&rate) || !rate.is_finite() {
        return Err(Error::InvalidConfig(format!(
            "dropout rate must be in [0, 1], got {rate}"
        )));
    }
    Ok(())
}

/// Removes each edge independently with probability `rate`.
pub fn edge_dropout(g: &InteractionGraph, rate: f64, seed: u64) -> Result<ViewGraph> {
    check_rate(rate)?;
    let mut rng = rng_from_seed(seed);
    let kept = bernoulli_keep(g.edges(), rate, &mut rng);
    Ok(ViewGraph {
        layers: vec![ViewLayer::from_edges(g, &kept)?],
        provenance: Provenance {
            kind: AugmentationKind::EdgeDropout,
            rate,
            seed,
            parent_fingerprint: g.fingerprint(),
            stratum: None,
        },
    })
}

/// Removes each node (user or item) independently with probability `rate`,
/// dropping all incident edges. The node set itself is kept so embedding
/// indices stay aligned; dropped nodes become degree-0.
pub fn node_dropout(g: &InteractionGraph, rate: f64, seed: u64) -> Result<ViewGraph> {
    check_rate(rate)?;
    let mut rng = rng_from_seed(seed);
    let drop_user: Vec<bool> = (0..g.num_users()).map(|_| rng.random_bool(rate)).collect();
    let drop_item: Vec<bool> = (0..g.num_items()).map(|_| rng.random_bool(rate)).collect();
    let kept: Vec<(u32, u32)> = g
        .edges()
        .iter()
        .copied()
        .filter(|&(u, i)| !drop_user[u as usize] && !drop_item[i as usize])
        .collect();
    Ok(ViewGraph {
        layers: vec![ViewLayer::from_edges(g, &kept)?],
        provenance: Provenance {
            kind: AugmentationKind::NodeDropout,
            rate,
            seed,
            parent_fingerprint: g.fingerprint(),
            stratum: None,
        },
    })
}

/// Draws `layers` independent edge-dropout graphs, one per propagation step.
pub fn random_walk_views(
    g: &InteractionGraph,
    rate: f64,
    layers: usize,
    seed: u64,
) -> Result<ViewGraph> {
    check_rate(rate)?;
    if layers == 0 {
        return Err(Error::InvalidConfig(
            "random-walk views need at least one layer".into(),
        ));
    }
    let mut view_layers = Vec::with_capacity(layers);
    for l in 0..layers {
        let mut rng = rng_from_seed(hash_seeds(&[seed, l as u64]));
        let kept = bernoulli_keep(g.edges(), rate, &mut rng);
        view_layers.push(ViewLayer::from_edges(g, &kept)?);
    }
    Ok(ViewGraph {
        layers: view_layers,
        provenance: Provenance {
            kind: AugmentationKind::RandomWalk,
            rate,
            seed,
            parent_fingerprint: g.fingerprint(),
            stratum: None,
        },
    })
}

/// Removes edges only within one importance stratum, each with probability
/// `rate`; edges in other strata are always kept. `strata` must be aligned
/// with `g.edges()`.
pub fn stratified_edge_dropout(
    g: &InteractionGraph,
    strata: &ImportanceStrata,
    level: StratumLevel,
    rate: f64,
    seed: u64,
) -> Result<ViewGraph> {
    check_rate(rate)?;
    if strata.levels.len() != g.num_edges() {
        return Err(Error::DimensionMismatch {
            expected: format!("{} stratum assignments", g.num_edges()),
            got: format!("{}", strata.levels.len()),
        });
    }
    if strata.count(level) == 0 {
        return Err(Error::EmptyStratum(level.name().into()));
    }
    let mut rng = rng_from_seed(seed);
    let kept: Vec<(u32, u32)> = g
        .edges()
        .iter()
        .zip(strata.levels.iter())
        .filter_map(|(&e, &l)| {
            let dropped = l == level && rng.random_bool(rate);
            (!dropped).then_some(e)
        })
        .collect();
    Ok(ViewGraph {
        layers: vec![ViewLayer::from_edges(g, &kept)?],
        provenance: Provenance {
            kind: AugmentationKind::EdgeDropout,
            rate,
            seed,
            parent_fingerprint: g.fingerprint(),
            stratum: Some(level),
        },
    })
}

/// Draws one view of the configured kind. `layers` is only consulted for
/// random-walk views.
pub fn make_view(
    g: &InteractionGraph,
    cfg: &AugmentationConfig,
    layers: usize,
    seed: u64,
) -> Result<ViewGraph> {
    match cfg.kind {
        AugmentationKind::EdgeDropout => edge_dropout(g, cfg.rate, seed),
        AugmentationKind::NodeDropout => node_dropout(g, cfg.rate, seed),
        AugmentationKind::RandomWalk => random_walk_views(g, cfg.rate, layers, seed),
    }
}
