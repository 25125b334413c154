//! Training loop: Adam over the embedding table, uniform interaction
//! batches with rejection-sampled negatives, per-epoch view regeneration,
//! checkpoint serialization, and loss-history export.

use std::io::{Read, Write};
use std::path::Path;

use rand::Rng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::augmentation::{make_view, AugmentationConfig, ViewGraph};
use crate::encoder::{init_embeddings, EmbeddingTable, EncoderConfig};
use crate::error::{Error, Result};
use crate::evaluation::{evaluate_all, EmbeddingScorer, EvalReport};
use crate::graph::{InteractionGraph, NormalizedAdjacency};
use crate::losses::{
    combined_objective, BprTriple, ContrastBatch, ContrastiveObjective, LossBreakdown, LossConfig,
    ObjectiveInputs,
};
use crate::matrix::DenseMatrix;
use crate::rng::{hash_seeds, rng_from_seed, view_seed};

/// Attempts per negative draw before giving up on a user whose
/// non-interacted item pool cannot be hit.
pub const NEGATIVE_REJECTION_CAP: usize = 1000;

/// Full training configuration.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default)]
pub struct TrainConfig {
    pub lr: f64,
    pub batch_size: usize,
    pub epochs: usize,
    pub seed: u64,
    pub encoder: EncoderConfig,
    pub loss: LossConfig,
    pub augment: AugmentationConfig,
    /// Evaluate on the test split every this many epochs; 0 disables.
    pub eval_every: usize,
    /// Cutoffs used for periodic evaluation.
    pub eval_ks: Vec<usize>,
    /// Stop after this many consecutive evaluations without improving
    /// recall at the largest cutoff. `None` disables early stopping.
    pub patience: Option<usize>,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            lr: 1e-3,
            batch_size: 4096,
            epochs: 100,
            seed: 42,
            encoder: EncoderConfig::default(),
            loss: LossConfig::default(),
            augment: AugmentationConfig::default(),
            eval_every: 0,
            eval_ks: vec![10, 20],
            patience: None,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.lr.is_finite() && self.lr > 0.0) {
            return Err(Error::InvalidConfig(format!(
                "learning rate must be finite and > 0, got {}",
                self.lr
            )));
        }
        if self.batch_size < 2 {
            return Err(Error::InvalidConfig(format!(
                "batch size must be >= 2, got {}",
                self.batch_size
            )));
        }
        if self.epochs == 0 {
            return Err(Error::InvalidConfig("epochs must be >= 1".into()));
        }
        if self.eval_every > 0 && (self.eval_ks.is_empty() || self.eval_ks.contains(&0)) {
            return Err(Error::InvalidConfig(
                "periodic evaluation needs nonempty positive cutoffs".into(),
            ));
        }
        self.encoder.validate()?;
        self.loss.validate()?;
        self.augment.validate()?;
        Ok(())
    }
}

/// Adam first and second moment estimates for one parameter matrix.
#[derive(Debug, Clone)]
pub struct AdamState {
    m: DenseMatrix,
    v: DenseMatrix,
    t: u64,
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
}

impl AdamState {
    pub fn new(rows: usize, cols: usize) -> Self {
        Self {
            m: DenseMatrix::zeros(rows, cols),
            v: DenseMatrix::zeros(rows, cols),
            t: 0,
            beta1: 0.9,
            beta2: 0.999,
            eps: 1e-8,
        }
    }

    pub fn step_count(&self) -> u64 {
        self.t
    }
}

/// One bias-corrected Adam update of `theta` in place.
pub fn adam_step(
    theta: &mut EmbeddingTable,
    grad: &DenseMatrix,
    state: &mut AdamState,
    lr: f64,
) -> Result<()> {
    let mat = theta.matrix_mut();
    if grad.rows() != mat.rows() || grad.cols() != mat.cols() {
        return Err(Error::DimensionMismatch {
            expected: format!("{}x{} gradient", mat.rows(), mat.cols()),
            got: format!("{}x{}", grad.rows(), grad.cols()),
        });
    }
    if !grad.is_finite() {
        return Err(Error::NonFinite("gradient passed to optimizer".into()));
    }
    state.t += 1;
    let bc1 = 1.0 - state.beta1.powi(state.t as i32);
    let bc2 = 1.0 - state.beta2.powi(state.t as i32);
    let (b1, b2, eps) = (state.beta1, state.beta2, state.eps);
    for ((p, g), (m, v)) in mat
        .data_mut()
        .iter_mut()
        .zip(grad.data())
        .zip(state.m.data_mut().iter_mut().zip(state.v.data_mut()))
    {
        *m = b1 * *m + (1.0 - b1) * g;
        *v = b2 * *v + (1.0 - b2) * g * g;
        let m_hat = *m / bc1;
        let v_hat = *v / bc2;
        *p -= lr * m_hat / (v_hat.sqrt() + eps);
    }
    Ok(())
}

/// Draws `batch_size` training triples: a uniformly random observed
/// interaction (with replacement) plus a rejection-sampled item the user has
/// not interacted with.
pub fn sample_bpr_batch(
    train: &InteractionGraph,
    batch_size: usize,
    rng: &mut ChaCha8Rng,
) -> Result<Vec<BprTriple>> {
    if train.num_edges() == 0 {
        return Err(Error::NoInteractions);
    }
    let edges = train.edges();
    let n_items = train.num_items() as u32;
    let mut batch = Vec::with_capacity(batch_size);
    for _ in 0..batch_size {
        let (user, pos_item) = edges[rng.random_range(0..edges.len())];
        let mut neg_item = None;
        for _ in 0..NEGATIVE_REJECTION_CAP {
            let cand = rng.random_range(0..n_items);
            if !train.has_edge(user, cand) {
                neg_item = Some(cand);
                break;
            }
        }
        let neg_item = neg_item.ok_or(Error::RejectionCapExceeded {
            cap: NEGATIVE_REJECTION_CAP,
        })?;
        batch.push(BprTriple {
            user,
            pos_item,
            neg_item,
        });
    }
    Ok(batch)
}

/// Mean per-batch losses for one epoch.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct EpochStats {
    pub epoch: usize,
    pub total: f64,
    pub bpr: f64,
    pub contrast_user: f64,
    pub contrast_item: f64,
}

/// Mutable training state threaded through epochs.
pub struct Trainer<'a> {
    pub train: &'a InteractionGraph,
    pub adj: NormalizedAdjacency,
    pub theta: EmbeddingTable,
    pub adam: AdamState,
    pub batch_rng: ChaCha8Rng,
    pub config: TrainConfig,
}

impl<'a> Trainer<'a> {
    pub fn new(train: &'a InteractionGraph, config: TrainConfig) -> Result<Self> {
        config.validate()?;
        if train.num_edges() == 0 {
            return Err(Error::NoInteractions);
        }
        let theta = init_embeddings(
            train.num_users(),
            train.num_items(),
            config.encoder.dim,
            config.seed,
        );
        let adam = AdamState::new(theta.matrix().rows(), theta.matrix().cols());
        // Batch draws get their own stream so view seeds stay independent.
        let batch_rng = rng_from_seed(hash_seeds(&[config.seed, 0x0062_6174_6368]));
        Ok(Self {
            train,
            adj: NormalizedAdjacency::from_graph(train),
            theta,
            adam,
            batch_rng,
            config,
        })
    }

    fn uses_contrast(&self) -> bool {
        self.config.loss.objective != ContrastiveObjective::None && self.config.loss.beta > 0.0
    }

    /// Runs one epoch: fresh view pair, `ceil(|E| / batch)` optimizer steps.
    pub fn train_epoch(&mut self, epoch: usize) -> Result<EpochStats> {
        let views: Option<(ViewGraph, ViewGraph)> = if self.uses_contrast() {
            let layers = self.config.encoder.layers;
            let s1 = view_seed(epoch as u64, self.config.seed, 1);
            let s2 = view_seed(epoch as u64, self.config.seed, 2);
            Some((
                make_view(self.train, &self.config.augment, layers, s1)?,
                make_view(self.train, &self.config.augment, layers, s2)?,
            ))
        } else {
            None
        };

        let num_batches = self.train.num_edges().div_ceil(self.config.batch_size);
        let mut sums = LossBreakdown {
            total: 0.0,
            bpr: 0.0,
            contrast_user: 0.0,
            contrast_item: 0.0,
        };
        for _ in 0..num_batches {
            let batch = sample_bpr_batch(self.train, self.config.batch_size, &mut self.batch_rng)?;
            let contrast = if views.is_some() {
                let mut users: Vec<u32> = batch.iter().map(|t| t.user).collect();
                let mut items: Vec<u32> = batch.iter().map(|t| t.pos_item).collect();
                users.sort_unstable();
                users.dedup();
                items.sort_unstable();
                items.dedup();
                Some(ContrastBatch { users, items })
            } else {
                None
            };
            let inputs = ObjectiveInputs {
                theta: &self.theta,
                main_adj: &self.adj,
                views: views.as_ref().map(|(a, b)| (a, b)),
                layers: self.config.encoder.layers,
            };
            let (breakdown, grad) =
                combined_objective(&inputs, &batch, contrast.as_ref(), &self.config.loss)?;
            adam_step(
                &mut self.theta,
                grad.matrix(),
                &mut self.adam,
                self.config.lr,
            )?;
            sums.total += breakdown.total;
            sums.bpr += breakdown.bpr;
            sums.contrast_user += breakdown.contrast_user;
            sums.contrast_item += breakdown.contrast_item;
        }
        let nb = num_batches as f64;
        Ok(EpochStats {
            epoch,
            total: sums.total / nb,
            bpr: sums.bpr / nb,
            contrast_user: sums.contrast_user / nb,
            contrast_item: sums.contrast_item / nb,
        })
    }
}

/// A periodic evaluation snapshot taken during training.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct EpochEval {
    pub epoch: usize,
    pub report: EvalReport,
}

/// Final state of a training run.
pub struct FitResult {
    pub theta: EmbeddingTable,
    pub history: Vec<EpochStats>,
    pub evals: Vec<EpochEval>,
    /// Set when early stopping fired before the epoch budget.
    pub stopped_early: bool,
}

/// Trains for `config.epochs` epochs. When `eval_every > 0` and a test split
/// is provided, evaluates periodically; with `patience` set, stops after that
/// many non-improving evaluations and restores the best embeddings seen.
pub fn fit(
    train: &InteractionGraph,
    test: Option<&InteractionGraph>,
    config: &TrainConfig,
) -> Result<FitResult> {
    let mut trainer = Trainer::new(train, config.clone())?;
    let mut history = Vec::with_capacity(config.epochs);
    let mut evals = Vec::new();
    let mut best: Option<(f64, EmbeddingTable)> = None;
    let mut stale = 0usize;
    let mut stopped_early = false;

    for epoch in 0..config.epochs {
        history.push(trainer.train_epoch(epoch)?);
        let due = config.eval_every > 0 && (epoch + 1) % config.eval_every == 0;
        if let (true, Some(test)) = (due, test) {
            let scorer = EmbeddingScorer {
                embeddings: &trainer.theta,
            };
            let report = evaluate_all(&scorer, train, test, &config.eval_ks)?;
            let watch_k = *config.eval_ks.iter().max().expect("validated nonempty");
            let current = report.recall_at(watch_k).expect("cutoff present");
            evals.push(EpochEval { epoch, report });
            if let Some(patience) = config.patience {
                let improved = best.as_ref().is_none_or(|(b, _)| current > *b);
                if improved {
                    best = Some((current, trainer.theta.clone()));
                    stale = 0;
                } else {
                    stale += 1;
                    if stale >= patience {
                        stopped_early = true;
                        break;
                    }
                }
            }
        }
    }

    let theta = match best {
        Some((_, best_theta)) if config.patience.is_some() => best_theta,
        _ => trainer.theta,
    };
    Ok(FitResult {
        theta,
        history,
        evals,
        stopped_early,
    })
}

/// Loss history as CSV with a fixed header.
pub fn history_csv(history: &[EpochStats]) -> String {
    let mut out = String::from("epoch,loss_total,loss_bpr,loss_scl_user,loss_scl_item\n");
    for row in history {
        out.push_str(&format!(
            "{},{},{},{},{}\n",
            row.epoch, row.total, row.bpr, row.contrast_user, row.contrast_item
        ));
    }
    out
}

pub fn write_history_csv(history: &[EpochStats], path: &Path) -> Result<()> {
    std::fs::write(path, history_csv(history))?;
    Ok(())
}

const CHECKPOINT_MAGIC: &[u8; 8] = b"SGCLCKPT";
const CHECKPOINT_VERSION: u32 = 1;

fn fnv1a64(bytes: &[u8]) -> u64 {
    let mut hash = 0xcbf2_9ce4_8422_2325u64;
    for &b in bytes {
        hash ^= b as u64;
        hash = hash.wrapping_mul(0x0000_0100_0000_01b3);
    }
    hash
}

/// Serializes embeddings as f32 with a payload checksum. Layout: magic,
/// version, num_users u64, num_items u64, dim u32, row-major f32
/// little-endian payload, FNV-1a 64 checksum of the payload bytes.
pub fn save_checkpoint_to(theta: &EmbeddingTable, mut writer: impl Write) -> Result<()> {
    writer.write_all(CHECKPOINT_MAGIC)?;
    writer.write_all(&CHECKPOINT_VERSION.to_le_bytes())?;
    writer.write_all(&(theta.num_users() as u64).to_le_bytes())?;
    writer.write_all(&(theta.num_items() as u64).to_le_bytes())?;
    writer.write_all(&(theta.dim() as u32).to_le_bytes())?;
    let mut payload = Vec::with_capacity(theta.matrix().data().len() * 4);
    for &x in theta.matrix().data() {
        payload.extend_from_slice(&(x as f32).to_le_bytes());
    }
    writer.write_all(&payload)?;
    writer.write_all(&fnv1a64(&payload).to_le_bytes())?;
    Ok(())
}

pub fn save_checkpoint(theta: &EmbeddingTable, path: &Path) -> Result<()> {
    let file = std::fs::File::create(path)?;
    let mut buf = std::io::BufWriter::new(file);
    save_checkpoint_to(theta, &mut buf)?;
    buf.into_inner()
        .map_err(|e| Error::Checkpoint(e.to_string()))?;
    Ok(())
}

fn read_exact_checked(reader: &mut impl Read, buf: &mut [u8], what: &str) -> Result<()> {
    reader
        .read_exact(buf)
        .map_err(|_| Error::Checkpoint(format!("truncated while reading {what}")))
}

/// Reads a checkpoint, verifying magic, version, dimensions, and checksum.
pub fn load_checkpoint_from(mut reader: impl Read) -> Result<EmbeddingTable> {
    let mut magic = [0u8; 8];
    read_exact_checked(&mut reader, &mut magic, "magic")?;
    if &magic != CHECKPOINT_MAGIC {
        return Err(Error::Checkpoint("bad magic bytes".into()));
    }
    let mut u32buf = [0u8; 4];
    let mut u64buf = [0u8; 8];
    read_exact_checked(&mut reader, &mut u32buf, "version")?;
    let version = u32::from_le_bytes(u32buf);
    if version != CHECKPOINT_VERSION {
        return Err(Error::Checkpoint(format!(
            "unsupported version {version}, expected {CHECKPOINT_VERSION}"
        )));
    }
    read_exact_checked(&mut reader, &mut u64buf, "user count")?;
    let num_users = u64::from_le_bytes(u64buf) as usize;
    read_exact_checked(&mut reader, &mut u64buf, "item count")?;
    let num_items = u64::from_le_bytes(u64buf) as usize;
    read_exact_checked(&mut reader, &mut u32buf, "dimension")?;
    let dim = u32::from_le_bytes(u32buf) as usize;
    let rows = num_users
        .checked_add(num_items)
        .ok_or_else(|| Error::Checkpoint("node count overflow".into()))?;
    let count = rows
        .checked_mul(dim)
        .ok_or_else(|| Error::Checkpoint("payload size overflow".into()))?;
    if rows == 0 || dim == 0 {
        return Err(Error::Checkpoint("empty embedding table".into()));
    }
    let mut payload = vec![0u8; count * 4];
    read_exact_checked(&mut reader, &mut payload, "payload")?;
    read_exact_checked(&mut reader, &mut u64buf, "checksum")?;
    let expected = u64::from_le_bytes(u64buf);
    let actual = fnv1a64(&payload);
    if expected != actual {
        return Err(Error::Checkpoint(format!(
            "checksum mismatch: stored {expected:#018x}, computed {actual:#018x}"
        )));
    }
    let mut trailer = [0u8; 1];
    if reader.read(&mut trailer)? != 0 {
        return Err(Error::Checkpoint("trailing bytes after checksum".into()));
    }
    let data: Vec<f64> = payload
        .chunks_exact(4)
        .map(|c| f32::from_le_bytes([c[0], c[1], c[2], c[3]]) as f64)
        .collect();
    let mat = DenseMatrix::from_vec(rows, dim, data)?;
    EmbeddingTable::from_matrix(num_users, num_items, mat)
}

pub fn load_checkpoint(path: &Path) -> Result<EmbeddingTable> {
    let file = std::fs::File::open(path)?;
    load_checkpoint_from(std::io::BufReader::new(file))
}

/// Rounds every entry through f32, matching checkpoint storage precision, so
/// metrics computed now and after a save/load round trip agree bit for bit.
pub fn quantize_to_checkpoint_precision(theta: &mut EmbeddingTable) {
    for x in theta.matrix_mut().data_mut() {
        *x = *x as f32 as f64;
    }
}
