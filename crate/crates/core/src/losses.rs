//! Training objectives: BPR ranking loss, the symmetric contrastive loss,
//! the noise-sensitive softmax contrastive baseline, and the combined
//! multi-task objective with analytic gradients.
//!
//! Contrastive scores are temperature-scaled cosines, `s = cos(z', z'') / tau`,
//! so every score is bounded by `1 / tau` in magnitude. For a batch of
//! anchors, the positive pairs the two views of the same node and the
//! negatives are the second views of the other batch anchors (K = batch - 1).
//!
//! The symmetric loss on a per-anchor score set (s+, s-_1..s-_K) is
//!
//!   L = -exp(p s+) / p + lambda * max(-exp(s+) + sum_j exp(s-_j), eps)^p / p
//!
//! with p, lambda in (0, 1] and eps = 1e-12 guarding the fractional power.
//! When the clamp is active the second term is locally constant, so its
//! gradient contribution is zero there.

use serde::{Deserialize, Serialize};

use crate::augmentation::ViewGraph;
use crate::encoder::{
    backward_propagate, backward_propagate_view, propagate, propagate_view, EmbeddingTable,
};
use crate::error::{Error, Result};
use crate::graph::NormalizedAdjacency;
use crate::matrix::{dot, norm, DenseMatrix};

/// Clamp floor for the fractional-power base of the symmetric loss.
pub const SCL_CLAMP_EPS: f64 = 1e-12;

/// Which contrastive term the combined objective uses.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ContrastiveObjective {
    /// Pure BPR training.
    None,
    /// Softmax contrastive term (noise-sensitive baseline).
    InfoNce,
    /// Symmetric contrastive loss.
    Scl,
}

impl std::str::FromStr for ContrastiveObjective {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "none" | "bpr" => Ok(ContrastiveObjective::None),
            "infonce" | "info_nce" => Ok(ContrastiveObjective::InfoNce),
            "scl" => Ok(ContrastiveObjective::Scl),
            other => Err(Error::InvalidConfig(format!("unknown objective {other:?}"))),
        }
    }
}

/// Hyperparameters of the combined objective.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
#[serde(default)]
pub struct LossConfig {
    /// Softmax temperature for contrastive scores; must be positive.
    pub tau: f64,
    /// Weight of the negative-set term inside the symmetric loss, in (0, 1].
    pub lambda: f64,
    /// Power of the symmetric loss, in (0, 1].
    pub p: f64,
    /// Weight of the contrastive term in the multi-task objective.
    pub beta: f64,
    /// L2 regularization strength on the layer-0 embeddings.
    pub alpha: f64,
    pub objective: ContrastiveObjective,
}

impl Default for LossConfig {
    fn default() -> Self {
        LossConfig {
            tau: 0.2,
            lambda: 0.01,
            p: 0.01,
            beta: 0.01,
            alpha: 1e-4,
            objective: ContrastiveObjective::Scl,
        }
    }
}

impl LossConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.tau.is_finite() && self.tau > 0.0) {
            return Err(Error::InvalidConfig(format!(
                "tau must be > 0, got {}",
                self.tau
            )));
        }
        if !(self.lambda.is_finite() && 0.0 < self.lambda && self.lambda <= 1.0) {
            return Err(Error::InvalidConfig(format!(
                "lambda must be in (0, 1], got {}",
                self.lambda
            )));
        }
        if !(self.p.is_finite() && 0.0 < self.p && self.p <= 1.0) {
            return Err(Error::InvalidConfig(format!(
                "p must be in (0, 1], got {}",
                self.p
            )));
        }
        if !(self.beta.is_finite() && self.beta >= 0.0) {
            return Err(Error::InvalidConfig(format!(
                "beta must be >= 0, got {}",
                self.beta
            )));
        }
        if !(self.alpha.is_finite() && self.alpha >= 0.0) {
            return Err(Error::InvalidConfig(format!(
                "alpha must be >= 0, got {}",
                self.alpha
            )));
        }
        Ok(())
    }
}

/// Cosine similarity; zero vectors yield 0.
pub fn cosine(a: &[f64], b: &[f64]) -> f64 {
    cosine_checked(a, b).0
}

/// Cosine similarity plus a degeneracy flag set when either vector has zero
/// norm (the similarity is then defined as 0).
pub fn cosine_checked(a: &[f64], b: &[f64]) -> (f64, bool) {
    let na = norm(a);
    let nb = norm(b);
    if na == 0.0 || nb == 0.0 {
        return (0.0, true);
    }
    (dot(a, b) / (na * nb), false)
}

/// Accumulates `coef * d cos(a, b) / da` into `out`.
fn add_cosine_grad_wrt_a(a: &[f64], b: &[f64], coef: f64, out: &mut [f64]) {
    let na = norm(a);
    let nb = norm(b);
    if na == 0.0 || nb == 0.0 {
        return; // similarity constant 0 around degenerate inputs
    }
    let c = dot(a, b) / (na * nb);
    let inv_na_nb = 1.0 / (na * nb);
    let inv_na_sq = 1.0 / (na * na);
    for k in 0..a.len() {
        out[k] += coef * (b[k] * inv_na_nb - c * a[k] * inv_na_sq);
    }
}

/// Exponential pairwise loss `y * exp(s)`; the positive-pair label is -1,
/// the negative-pair label +1, making the two-label sum identically zero.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PairLabel {
    /// The pair comes from the same underlying point (two views of it).
    Positive,
    /// The pair mixes two different points.
    Negative,
}

impl PairLabel {
    pub fn sign(&self) -> f64 {
        match self {
            PairLabel::Positive => -1.0,
            PairLabel::Negative => 1.0,
        }
    }

    pub fn flipped(&self) -> Self {
        match self {
            PairLabel::Positive => PairLabel::Negative,
            PairLabel::Negative => PairLabel::Positive,
        }
    }
}

/// `L(s, y) = y * exp(s)` with the label encoding of [`PairLabel`].
pub fn pairwise_exponential_loss(s: f64, label: PairLabel) -> f64 {
    label.sign() * s.exp()
}

/// Per-anchor contrastive scores for one batch: `s_plus[k]` is the positive
/// score of anchor k, `s_neg[k][j]` its j-th negative (the other anchors in
/// batch order, skipping k itself).
#[derive(Debug, Clone)]
pub struct PairScores {
    pub s_plus: Vec<f64>,
    pub s_neg: Vec<Vec<f64>>,
    pub tau: f64,
}

impl PairScores {
    pub fn new(s_plus: Vec<f64>, s_neg: Vec<Vec<f64>>, tau: f64) -> Result<Self> {
        if s_plus.len() != s_neg.len() {
            return Err(Error::DimensionMismatch {
                expected: format!("{} negative rows", s_plus.len()),
                got: format!("{}", s_neg.len()),
            });
        }
        let bound = 1.0 / tau + 1e-9;
        let in_bound = |v: &f64| v.is_finite() && v.abs() <= bound;
        if !s_plus.iter().all(in_bound) || !s_neg.iter().flatten().all(in_bound) {
            return Err(Error::NonFinite(format!(
                "contrastive score outside [-1/tau, 1/tau] (tau = {tau})"
            )));
        }
        Ok(PairScores { s_plus, s_neg, tau })
    }

    pub fn num_anchors(&self) -> usize {
        self.s_plus.len()
    }
}

/// Gradients mirroring the shape of [`PairScores`].
#[derive(Debug, Clone)]
pub struct PairGrads {
    pub d_plus: Vec<f64>,
    pub d_neg: Vec<Vec<f64>>,
}

/// Whether contrastive anchors index user rows or item rows.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum NodeClass {
    User,
    Item,
}

fn anchor_row(table: &EmbeddingTable, class: NodeClass, idx: u32) -> Result<usize> {
    match class {
        NodeClass::User => {
            if (idx as usize) < table.num_users() {
                Ok(idx as usize)
            } else {
                Err(Error::IndexOutOfRange(format!(
                    "user anchor {idx} >= {}",
                    table.num_users()
                )))
            }
        }
        NodeClass::Item => {
            if (idx as usize) < table.num_items() {
                Ok(table.item_node(idx))
            } else {
                Err(Error::IndexOutOfRange(format!(
                    "item anchor {idx} >= {}",
                    table.num_items()
                )))
            }
        }
    }
}

/// Temperature-scaled cosine scores for a batch of anchors across two view
/// embeddings. Positives pair the same anchor's rows; negatives pair each
/// anchor's first-view row with every other anchor's second-view row.
pub fn scl_pair_scores(
    z1: &EmbeddingTable,
    z2: &EmbeddingTable,
    anchors: &[u32],
    class: NodeClass,
    tau: f64,
) -> Result<PairScores> {
    if anchors.len() < 2 {
        return Err(Error::BatchTooSmall {
            min: 2,
            got: anchors.len(),
        });
    }
    if !(tau.is_finite() && tau > 0.0) {
        return Err(Error::InvalidConfig(format!("tau must be > 0, got {tau}")));
    }
    let rows: Vec<usize> = anchors
        .iter()
        .map(|&a| anchor_row(z1, class, a))
        .collect::<Result<_>>()?;
    let mut s_plus = Vec::with_capacity(anchors.len());
    let mut s_neg = Vec::with_capacity(anchors.len());
    for (k, &r) in rows.iter().enumerate() {
        let a_row = z1.matrix().row(r);
        s_plus.push(cosine(a_row, z2.matrix().row(r)) / tau);
        let mut negs = Vec::with_capacity(rows.len() - 1);
        for (j, &rb) in rows.iter().enumerate() {
            if j != k {
                negs.push(cosine(a_row, z2.matrix().row(rb)) / tau);
            }
        }
        s_neg.push(negs);
    }
    PairScores::new(s_plus, s_neg, tau)
}

/// Softmax contrastive loss, batch-averaged, with log-sum-exp stabilization.
/// Returns the loss and its gradient with respect to every score.
pub fn infonce_loss(scores: &PairScores) -> (f64, PairGrads) {
    let batch = scores.num_anchors() as f64;
    let mut total = 0.0;
    let mut d_plus = vec![0.0; scores.num_anchors()];
    let mut d_neg: Vec<Vec<f64>> = Vec::with_capacity(scores.num_anchors());
    for (k, (&sp, negs)) in scores.s_plus.iter().zip(&scores.s_neg).enumerate() {
        let max = negs.iter().copied().fold(sp, f64::max);
        let zp = (sp - max).exp();
        let zsum = zp + negs.iter().map(|&s| (s - max).exp()).sum::<f64>();
        total += -(sp - max) + zsum.ln();
        d_plus[k] = (zp / zsum - 1.0) / batch;
        d_neg.push(
            negs.iter()
                .map(|&s| ((s - max).exp() / zsum) / batch)
                .collect(),
        );
    }
    (total / batch, PairGrads { d_plus, d_neg })
}

/// Symmetric contrastive loss, batch-averaged.
///
/// Per anchor: `-exp(p s+) / p + lambda * B^p / p` with
/// `B = max(-exp(s+) + sum_j exp(s-_j), eps)`. Gradients:
/// `d/ds+ = -exp(p s+) - lambda B^(p-1) exp(s+)` and
/// `d/ds-_j = lambda B^(p-1) exp(s-_j)`, the `lambda` parts vanishing where
/// the clamp is active.
pub fn scl_loss(scores: &PairScores, lambda: f64, p: f64) -> Result<(f64, PairGrads)> {
    if !(lambda.is_finite() && 0.0 < lambda && lambda <= 1.0) {
        return Err(Error::InvalidConfig(format!(
            "lambda must be in (0, 1], got {lambda}"
        )));
    }
    if !(p.is_finite() && 0.0 < p && p <= 1.0) {
        return Err(Error::InvalidConfig(format!(
            "p must be in (0, 1], got {p}"
        )));
    }
    let batch = scores.num_anchors() as f64;
    let mut total = 0.0;
    let mut d_plus = vec![0.0; scores.num_anchors()];
    let mut d_neg: Vec<Vec<f64>> = Vec::with_capacity(scores.num_anchors());
    for (k, (&sp, negs)) in scores.s_plus.iter().zip(&scores.s_neg).enumerate() {
        let ep = sp.exp();
        let base_raw = -ep + negs.iter().map(|&s| s.exp()).sum::<f64>();
        let clamped = base_raw < SCL_CLAMP_EPS;
        let base = if clamped { SCL_CLAMP_EPS } else { base_raw };
        total += -(p * sp).exp() / p + lambda * base.powf(p) / p;

        let mut dp = -(p * sp).exp();
        if !clamped {
            let coef = lambda * base.powf(p - 1.0);
            dp += -coef * ep;
            d_neg.push(negs.iter().map(|&s| coef * s.exp() / batch).collect());
        } else {
            d_neg.push(vec![0.0; negs.len()]);
        }
        d_plus[k] = dp / batch;
    }
    let loss = total / batch;
    if !loss.is_finite() {
        return Err(Error::NonFinite("symmetric contrastive loss".into()));
    }
    Ok((loss, PairGrads { d_plus, d_neg }))
}

/// One BPR training triple: observed (user, pos_item) against an unobserved
/// neg_item.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct BprTriple {
    pub user: u32,
    pub pos_item: u32,
    pub neg_item: u32,
}

fn softplus(x: f64) -> f64 {
    if x > 0.0 {
        x + (-x).exp().ln_1p()
    } else {
        x.exp().ln_1p()
    }
}

/// BPR ranking loss over propagated embeddings plus L2 on the layer-0 table:
/// `mean(-log sigmoid(s_ui - s_uj)) + alpha * ||theta||^2`.
///
/// Returns (loss, gradient wrt `e`, gradient wrt `theta` from the L2 term).
pub fn bpr_loss_and_grad(
    e: &EmbeddingTable,
    batch: &[BprTriple],
    alpha: f64,
    theta: &EmbeddingTable,
) -> Result<(f64, DenseMatrix, DenseMatrix)> {
    if batch.is_empty() {
        return Err(Error::BatchTooSmall { min: 1, got: 0 });
    }
    let m = e.num_users();
    let n = e.num_items();
    let d = e.dim();
    let inv_b = 1.0 / batch.len() as f64;
    let mut loss = 0.0;
    let mut grad_e = DenseMatrix::zeros(m + n, d);
    for t in batch {
        if t.user as usize >= m || t.pos_item as usize >= n || t.neg_item as usize >= n {
            return Err(Error::IndexOutOfRange(format!(
                "triple ({}, {}, {}) outside {m} users / {n} items",
                t.user, t.pos_item, t.neg_item
            )));
        }
        let u = t.user as usize;
        let i = m + t.pos_item as usize;
        let j = m + t.neg_item as usize;
        let x =
            dot(e.matrix().row(u), e.matrix().row(i)) - dot(e.matrix().row(u), e.matrix().row(j));
        loss += softplus(-x) * inv_b;
        // d softplus(-x) / dx = -sigmoid(-x)
        let g = -inv_b / (1.0 + x.exp());
        for k in 0..d {
            let eu = e.matrix().get(u, k);
            let ei = e.matrix().get(i, k);
            let ej = e.matrix().get(j, k);
            *grad_e.row_mut(u).get_mut(k).unwrap() += g * (ei - ej);
            *grad_e.row_mut(i).get_mut(k).unwrap() += g * eu;
            *grad_e.row_mut(j).get_mut(k).unwrap() -= g * eu;
        }
    }
    loss += alpha * theta.matrix().frobenius_sq();
    let mut grad_theta = theta.matrix().clone();
    grad_theta.scale(2.0 * alpha);
    Ok((loss, grad_e, grad_theta))
}

/// Routes per-score gradients back to the two view-embedding tables through
/// the temperature-scaled cosine.
#[allow(clippy::too_many_arguments)]
pub fn accumulate_pair_score_grads(
    z1: &EmbeddingTable,
    z2: &EmbeddingTable,
    anchors: &[u32],
    class: NodeClass,
    tau: f64,
    grads: &PairGrads,
    scale: f64,
    gz1: &mut DenseMatrix,
    gz2: &mut DenseMatrix,
) -> Result<()> {
    let rows: Vec<usize> = anchors
        .iter()
        .map(|&a| anchor_row(z1, class, a))
        .collect::<Result<_>>()?;
    let inv_tau = 1.0 / tau;
    for (k, &r) in rows.iter().enumerate() {
        let a_row = z1.matrix().row(r);
        // positive: s+ = cos(z1[r], z2[r]) / tau
        let coef = grads.d_plus[k] * inv_tau * scale;
        add_cosine_grad_wrt_a(a_row, z2.matrix().row(r), coef, gz1.row_mut(r));
        add_cosine_grad_wrt_a(z2.matrix().row(r), a_row, coef, gz2.row_mut(r));
        // negatives: s-_j = cos(z1[r], z2[r_b]) / tau over other anchors b
        let mut j = 0;
        for (b, &rb) in rows.iter().enumerate() {
            if b == k {
                continue;
            }
            let coef = grads.d_neg[k][j] * inv_tau * scale;
            add_cosine_grad_wrt_a(a_row, z2.matrix().row(rb), coef, gz1.row_mut(r));
            add_cosine_grad_wrt_a(z2.matrix().row(rb), a_row, coef, gz2.row_mut(rb));
            j += 1;
        }
    }
    Ok(())
}

/// Everything the combined objective needs to run the three propagation
/// branches of one training step. `views` may be `None` only when the
/// contrastive term is disabled (objective `None` or zero weight).
pub struct ObjectiveInputs<'a> {
    pub theta: &'a EmbeddingTable,
    pub main_adj: &'a NormalizedAdjacency,
    pub views: Option<(&'a ViewGraph, &'a ViewGraph)>,
    pub layers: usize,
}

/// Contrastive anchor sets for one batch.
#[derive(Debug, Clone, Default)]
pub struct ContrastBatch {
    pub users: Vec<u32>,
    pub items: Vec<u32>,
}

/// Loss components of one step; `total = bpr + beta * (user + item)` where
/// the bpr term already includes the L2 penalty.
#[derive(Debug, Clone, Copy)]
pub struct LossBreakdown {
    pub total: f64,
    pub bpr: f64,
    pub contrast_user: f64,
    pub contrast_item: f64,
}

/// Multi-task objective of one training step: BPR on the clean graph plus
/// the configured contrastive term over two augmented views, both classes
/// of anchors. Returns the loss breakdown and the full gradient with
/// respect to the layer-0 table.
pub fn combined_objective(
    inputs: &ObjectiveInputs,
    bpr_batch: &[BprTriple],
    contrast: Option<&ContrastBatch>,
    cfg: &LossConfig,
) -> Result<(LossBreakdown, EmbeddingTable)> {
    cfg.validate()?;
    let theta = inputs.theta;
    let e_main = propagate(inputs.main_adj, theta, inputs.layers)?;
    let (bpr, grad_e, mut grad_theta) = bpr_loss_and_grad(&e_main, bpr_batch, cfg.alpha, theta)?;
    let grad_e = EmbeddingTable::from_matrix(theta.num_users(), theta.num_items(), grad_e)?;
    let back_main = backward_propagate(inputs.main_adj, &grad_e, inputs.layers)?;
    grad_theta.add_scaled(back_main.matrix(), 1.0)?;

    let mut contrast_user = 0.0;
    let mut contrast_item = 0.0;
    let use_contrast = cfg.objective != ContrastiveObjective::None && cfg.beta > 0.0;
    if use_contrast {
        let (view1, view2) = inputs.views.ok_or_else(|| {
            Error::InvalidConfig("contrastive objective enabled but no views supplied".into())
        })?;
        let contrast = contrast.ok_or_else(|| {
            Error::InvalidConfig("contrastive objective enabled but no anchor batch".into())
        })?;
        let z1 = propagate_view(view1, theta, inputs.layers)?;
        let z2 = propagate_view(view2, theta, inputs.layers)?;
        let mut gz1 = DenseMatrix::zeros(theta.matrix().rows(), theta.dim());
        let mut gz2 = DenseMatrix::zeros(theta.matrix().rows(), theta.dim());
        for (class, anchors, slot) in [
            (NodeClass::User, &contrast.users, &mut contrast_user),
            (NodeClass::Item, &contrast.items, &mut contrast_item),
        ] {
            let scores = scl_pair_scores(&z1, &z2, anchors, class, cfg.tau)?;
            let (loss, grads) = match cfg.objective {
                ContrastiveObjective::Scl => scl_loss(&scores, cfg.lambda, cfg.p)?,
                ContrastiveObjective::InfoNce => infonce_loss(&scores),
                ContrastiveObjective::None => unreachable!(),
            };
            *slot = loss;
            accumulate_pair_score_grads(
                &z1, &z2, anchors, class, cfg.tau, &grads, cfg.beta, &mut gz1, &mut gz2,
            )?;
        }
        let gz1 = EmbeddingTable::from_matrix(theta.num_users(), theta.num_items(), gz1)?;
        let gz2 = EmbeddingTable::from_matrix(theta.num_users(), theta.num_items(), gz2)?;
        let b1 = backward_propagate_view(view1, &gz1, inputs.layers)?;
        let b2 = backward_propagate_view(view2, &gz2, inputs.layers)?;
        grad_theta.add_scaled(b1.matrix(), 1.0)?;
        grad_theta.add_scaled(b2.matrix(), 1.0)?;
    }

    let total = bpr + cfg.beta * (contrast_user + contrast_item);
    if !total.is_finite() || !grad_theta.is_finite() {
        return Err(Error::NonFinite("combined objective".into()));
    }
    Ok((
        LossBreakdown {
            total,
            bpr,
            contrast_user,
            contrast_item,
        },
        EmbeddingTable::from_matrix(theta.num_users(), theta.num_items(), grad_theta)?,
    ))
}
