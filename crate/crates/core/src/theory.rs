//! Executable checks of the noise-tolerance theory behind the pairwise
//! exponential loss: label-sum symmetry, exact noisy-risk identities under
//! label flips, minimizer invariance, and a gradient-symmetry probe that
//! separates the exponential loss from a softmax-normalized one.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::losses::PairLabel;
use crate::rng::rng_from_seed;

/// Label-flip model. `Binary` flips the pair label with probability `eta`;
/// `Uniform` moves a k-class label to each other class with probability
/// `eta / (k - 1)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum NoiseModel {
    Binary { eta: f64 },
    Uniform { eta: f64, k: usize },
}

impl NoiseModel {
    /// Largest flip rate under which the clean minimizer is recoverable.
    pub fn max_eta(&self) -> f64 {
        match *self {
            NoiseModel::Binary { .. } => 0.5,
            NoiseModel::Uniform { k, .. } => (k as f64 - 1.0) / k as f64,
        }
    }

    pub fn eta(&self) -> f64 {
        match *self {
            NoiseModel::Binary { eta } | NoiseModel::Uniform { eta, .. } => eta,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if let NoiseModel::Uniform { k, .. } = *self {
            if k < 2 {
                return Err(Error::InvalidConfig(format!(
                    "uniform noise needs k >= 2 classes, got {k}"
                )));
            }
        }
        let eta = self.eta();
        if !eta.is_finite() || eta < 0.0 || eta >= self.max_eta() {
            return Err(Error::InvalidConfig(format!(
                "flip rate must lie in [0, {}), got {eta}",
                self.max_eta()
            )));
        }
        Ok(())
    }
}

/// A loss over k-class score vectors.
pub trait MulticlassLoss {
    fn loss(&self, scores: &[f64], label: usize) -> f64;
    fn name(&self) -> &'static str;
    /// The label-sum constant when the loss is symmetric, `None` otherwise.
    fn symmetry_constant(&self, k: usize) -> Option<f64>;
}

fn softmax(scores: &[f64]) -> Vec<f64> {
    let max = scores.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let exps: Vec<f64> = scores.iter().map(|s| (s - max).exp()).collect();
    let z: f64 = exps.iter().sum();
    exps.into_iter().map(|e| e / z).collect()
}

/// L1 distance between the one-hot target and the softmax of the scores:
/// `2 * (1 - p_label)`. Its label sum is the constant `2 * (k - 1)`.
pub struct MaeLoss;

impl MulticlassLoss for MaeLoss {
    fn loss(&self, scores: &[f64], label: usize) -> f64 {
        2.0 * (1.0 - softmax(scores)[label])
    }

    fn name(&self) -> &'static str {
        "mae"
    }

    fn symmetry_constant(&self, k: usize) -> Option<f64> {
        Some(2.0 * (k as f64 - 1.0))
    }
}

/// Softmax cross-entropy `-log p_label`. Not symmetric: its label sum
/// depends on the scores, which is what breaks noise tolerance.
pub struct CrossEntropyLoss;

impl MulticlassLoss for CrossEntropyLoss {
    fn loss(&self, scores: &[f64], label: usize) -> f64 {
        -softmax(scores)[label].ln()
    }

    fn name(&self) -> &'static str {
        "cross_entropy"
    }

    fn symmetry_constant(&self, _k: usize) -> Option<f64> {
        None
    }
}

/// Result of summing a loss over every label at each probe.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SymmetrySum {
    /// Mean of the per-probe label sums.
    pub mean_sum: f64,
    /// Max minus min of the per-probe label sums; ~0 iff symmetric.
    pub range: f64,
}

/// Sums `loss` over all k labels at each probe score vector and reports how
/// much that sum moves across probes.
pub fn symmetry_sum(
    loss: &dyn MulticlassLoss,
    k: usize,
    probes: &[Vec<f64>],
) -> Result<SymmetrySum> {
    if k < 2 {
        return Err(Error::InvalidConfig(format!(
            "need k >= 2 classes, got {k}"
        )));
    }
    if probes.is_empty() {
        return Err(Error::InvalidConfig("need at least one probe".into()));
    }
    let mut lo = f64::INFINITY;
    let mut hi = f64::NEG_INFINITY;
    let mut total = 0.0;
    for probe in probes {
        if probe.len() != k {
            return Err(Error::DimensionMismatch {
                expected: format!("{k} scores per probe"),
                got: format!("{}", probe.len()),
            });
        }
        if probe.iter().any(|s| !s.is_finite()) {
            return Err(Error::NonFinite("probe scores".into()));
        }
        let sum: f64 = (0..k).map(|y| loss.loss(probe, y)).sum();
        lo = lo.min(sum);
        hi = hi.max(sum);
        total += sum;
    }
    Ok(SymmetrySum {
        mean_sum: total / probes.len() as f64,
        range: hi - lo,
    })
}

/// Label sum of a pairwise margin loss at each probe margin.
pub fn pair_symmetry_sum(
    loss: impl Fn(f64, PairLabel) -> f64,
    probes: &[f64],
) -> Result<SymmetrySum> {
    if probes.is_empty() {
        return Err(Error::InvalidConfig("need at least one probe".into()));
    }
    if probes.iter().any(|s| !s.is_finite()) {
        return Err(Error::NonFinite("probe margins".into()));
    }
    let sums: Vec<f64> = probes
        .iter()
        .map(|&s| loss(s, PairLabel::Positive) + loss(s, PairLabel::Negative))
        .collect();
    let lo = sums.iter().cloned().fold(f64::INFINITY, f64::min);
    let hi = sums.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    Ok(SymmetrySum {
        mean_sum: sums.iter().sum::<f64>() / sums.len() as f64,
        range: hi - lo,
    })
}

/// Clean risk, exactly computed noisy risk, and the affine prediction
/// `noisy = coefficient * clean + additive` from the symmetry constant.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RiskReport {
    pub eta: f64,
    pub clean: f64,
    pub noisy: f64,
    pub predicted: f64,
    pub coefficient: f64,
    pub additive: f64,
    /// `|noisy - predicted|`.
    pub deviation: f64,
}

/// Exact noisy risk of a pairwise margin loss under binary label flips.
/// The expectation over the flip distribution is evaluated in closed form:
/// each sample contributes `(1 - eta) * loss(s, y) + eta * loss(s, -y)`.
/// The prediction uses the loss's label-sum constant:
/// `noisy = (1 - 2 eta) * clean + eta * constant`.
pub fn exact_noisy_risk_binary(
    margins: &[f64],
    labels: &[PairLabel],
    eta: f64,
    loss: impl Fn(f64, PairLabel) -> f64,
    constant: f64,
) -> Result<RiskReport> {
    NoiseModel::Binary { eta }.validate()?;
    if margins.len() != labels.len() || margins.is_empty() {
        return Err(Error::DimensionMismatch {
            expected: "equal nonempty margins and labels".into(),
            got: format!("{} margins, {} labels", margins.len(), labels.len()),
        });
    }
    if margins.iter().any(|s| !s.is_finite()) {
        return Err(Error::NonFinite("margins".into()));
    }
    let n = margins.len() as f64;
    let mut clean = 0.0;
    let mut noisy = 0.0;
    for (&s, &y) in margins.iter().zip(labels) {
        let keep = loss(s, y);
        let flip = loss(s, y.flipped());
        clean += keep;
        noisy += (1.0 - eta) * keep + eta * flip;
    }
    clean /= n;
    noisy /= n;
    let coefficient = 1.0 - 2.0 * eta;
    let additive = eta * constant;
    let predicted = coefficient * clean + additive;
    Ok(RiskReport {
        eta,
        clean,
        noisy,
        predicted,
        coefficient,
        additive,
        deviation: (noisy - predicted).abs(),
    })
}

/// Exact noisy risk of a k-class loss under uniform label flips. Each sample
/// contributes `(1 - eta) * loss(s, y) + eta / (k - 1) * sum_{y' != y}
/// loss(s, y')`. The prediction from the symmetry constant `C` is
/// `noisy = (1 - eta k / (k - 1)) * clean + C * eta / (k - 1)`.
pub fn exact_noisy_risk_multiclass(
    scores: &[Vec<f64>],
    labels: &[usize],
    k: usize,
    eta: f64,
    loss: &dyn MulticlassLoss,
    constant: f64,
) -> Result<RiskReport> {
    NoiseModel::Uniform { eta, k }.validate()?;
    if scores.len() != labels.len() || scores.is_empty() {
        return Err(Error::DimensionMismatch {
            expected: "equal nonempty scores and labels".into(),
            got: format!("{} scores, {} labels", scores.len(), labels.len()),
        });
    }
    let km1 = (k - 1) as f64;
    let mut clean = 0.0;
    let mut noisy = 0.0;
    for (s, &y) in scores.iter().zip(labels) {
        if s.len() != k {
            return Err(Error::DimensionMismatch {
                expected: format!("{k} scores per sample"),
                got: format!("{}", s.len()),
            });
        }
        if y >= k {
            return Err(Error::IndexOutOfRange(format!("label {y} >= k = {k}")));
        }
        let keep = loss.loss(s, y);
        let others: f64 = (0..k).filter(|&c| c != y).map(|c| loss.loss(s, c)).sum();
        clean += keep;
        noisy += (1.0 - eta) * keep + eta / km1 * others;
    }
    let n = scores.len() as f64;
    clean /= n;
    noisy /= n;
    let coefficient = 1.0 - eta * k as f64 / km1;
    let additive = constant * eta / km1;
    let predicted = coefficient * clean + additive;
    Ok(RiskReport {
        eta,
        clean,
        noisy,
        predicted,
        coefficient,
        additive,
        deviation: (noisy - predicted).abs(),
    })
}

/// Which candidate minimizes the clean risk and each noisy risk.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct MinimizerReport {
    pub etas: Vec<f64>,
    pub clean_argmin: usize,
    pub noisy_argmins: Vec<usize>,
    /// True when every noisy argmin equals the clean one.
    pub invariant: bool,
}

fn argmin(values: &[f64]) -> usize {
    let mut best = 0;
    for (i, &v) in values.iter().enumerate().skip(1) {
        if v < values[best] {
            best = i;
        }
    }
    best
}

/// Ranks candidate margin predictors by clean and exactly-computed noisy
/// risk at each flip rate. For a symmetric loss the argmin never moves.
pub fn minimizer_invariance_binary(
    candidates: &[Vec<f64>],
    labels: &[PairLabel],
    etas: &[f64],
    loss: impl Fn(f64, PairLabel) -> f64 + Copy,
) -> Result<MinimizerReport> {
    if candidates.len() < 2 {
        return Err(Error::InvalidConfig(
            "need at least two candidate predictors".into(),
        ));
    }
    let clean: Vec<f64> = candidates
        .iter()
        .map(|margins| exact_noisy_risk_binary(margins, labels, 0.0, loss, 0.0).map(|r| r.clean))
        .collect::<Result<_>>()?;
    let clean_argmin = argmin(&clean);
    let mut noisy_argmins = Vec::with_capacity(etas.len());
    for &eta in etas {
        let noisy: Vec<f64> = candidates
            .iter()
            .map(|margins| {
                exact_noisy_risk_binary(margins, labels, eta, loss, 0.0).map(|r| r.noisy)
            })
            .collect::<Result<_>>()?;
        noisy_argmins.push(argmin(&noisy));
    }
    let invariant = noisy_argmins.iter().all(|&a| a == clean_argmin);
    Ok(MinimizerReport {
        etas: etas.to_vec(),
        clean_argmin,
        noisy_argmins,
        invariant,
    })
}

/// Multiclass analog of [`minimizer_invariance_binary`]; candidates are
/// per-sample k-class score vectors.
pub fn minimizer_invariance_multiclass(
    candidates: &[Vec<Vec<f64>>],
    labels: &[usize],
    k: usize,
    etas: &[f64],
    loss: &dyn MulticlassLoss,
) -> Result<MinimizerReport> {
    if candidates.len() < 2 {
        return Err(Error::InvalidConfig(
            "need at least two candidate predictors".into(),
        ));
    }
    let risk = |scores: &Vec<Vec<f64>>, eta: f64| -> Result<f64> {
        // eta = 0 is outside NoiseModel validity only in the degenerate
        // sense; compute the clean mean directly instead.
        if eta == 0.0 {
            let mut total = 0.0;
            for (s, &y) in scores.iter().zip(labels) {
                total += loss.loss(s, y);
            }
            return Ok(total / scores.len() as f64);
        }
        exact_noisy_risk_multiclass(scores, labels, k, eta, loss, 0.0).map(|r| r.noisy)
    };
    let clean: Vec<f64> = candidates
        .iter()
        .map(|c| risk(c, 0.0))
        .collect::<Result<_>>()?;
    let clean_argmin = argmin(&clean);
    let mut noisy_argmins = Vec::with_capacity(etas.len());
    for &eta in etas {
        let noisy: Vec<f64> = candidates
            .iter()
            .map(|c| risk(c, eta))
            .collect::<Result<_>>()?;
        noisy_argmins.push(argmin(&noisy));
    }
    let invariant = noisy_argmins.iter().all(|&a| a == clean_argmin);
    Ok(MinimizerReport {
        etas: etas.to_vec(),
        clean_argmin,
        noisy_argmins,
        invariant,
    })
}

/// How much the summed positive-role plus negative-role gradient of a
/// contrastive loss moves across random score configurations.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct GradientSymmetryReport {
    /// Range of the label-sum gradient for the softmax-contrastive loss.
    pub softmax_contrastive_range: f64,
    /// Range for the pairwise exponential loss under the same probes.
    pub exponential_range: f64,
    pub configs: usize,
}

/// Derivative of the softmax-contrastive loss w.r.t. a probe score used as
/// the positive: `-sum_j e^{s_j} / (e^s + sum_j e^{s_j})`.
fn softmax_contrastive_grad_positive(s: f64, neg_scores: &[f64]) -> f64 {
    let neg_sum: f64 = neg_scores.iter().map(|x| x.exp()).sum();
    -neg_sum / (s.exp() + neg_sum)
}

/// Derivative w.r.t. a probe score used as one of the negatives:
/// `e^s / (e^{s_plus} + e^s + sum_j e^{s_j})`.
fn softmax_contrastive_grad_negative(s: f64, s_plus: f64, other_negs: &[f64]) -> f64 {
    let rest: f64 = other_negs.iter().map(|x| x.exp()).sum();
    s.exp() / (s_plus.exp() + s.exp() + rest)
}

/// Probes whether a contrastive loss treats a score symmetrically across
/// label roles. For each random configuration (a probe score, a positive
/// score, and a pool of negatives) it sums the loss gradient with the probe
/// in the positive role and in a negative role. The pairwise exponential
/// loss cancels exactly; softmax normalization couples the roles and the
/// sum varies with the configuration.
pub fn gradient_symmetry_probe(configs: usize, seed: u64) -> Result<GradientSymmetryReport> {
    if configs < 2 {
        return Err(Error::InvalidConfig("need at least two configs".into()));
    }
    let mut rng = rng_from_seed(seed);
    let mut nce_lo = f64::INFINITY;
    let mut nce_hi = f64::NEG_INFINITY;
    let mut exp_lo = f64::INFINITY;
    let mut exp_hi = f64::NEG_INFINITY;
    for _ in 0..configs {
        let s: f64 = rng.random_range(-2.0..2.0);
        let s_plus: f64 = rng.random_range(-2.0..2.0);
        let n_negs = rng.random_range(2..=8usize);
        let negs: Vec<f64> = (0..n_negs).map(|_| rng.random_range(-2.0..2.0)).collect();

        let nce = softmax_contrastive_grad_positive(s, &negs)
            + softmax_contrastive_grad_negative(s, s_plus, &negs);
        nce_lo = nce_lo.min(nce);
        nce_hi = nce_hi.max(nce);

        // d/ds [loss(s, positive) + loss(s, negative)] = -e^s + e^s = 0.
        let exp_grad = -s.exp() + s.exp();
        exp_lo = exp_lo.min(exp_grad);
        exp_hi = exp_hi.max(exp_grad);
    }
    Ok(GradientSymmetryReport {
        softmax_contrastive_range: nce_hi - nce_lo,
        exponential_range: exp_hi - exp_lo,
        configs,
    })
}

/// Convenience: random probe margins in `[-bound, bound]`.
pub fn random_margins(count: usize, bound: f64, seed: u64) -> Vec<f64> {
    let mut rng = rng_from_seed(seed);
    (0..count)
        .map(|_| rng.random_range(-bound..bound))
        .collect()
}

/// Convenience: random k-class score vectors in `[-bound, bound]^k`.
pub fn random_score_vectors(count: usize, k: usize, bound: f64, seed: u64) -> Vec<Vec<f64>> {
    let mut rng = rng_from_seed(seed);
    (0..count)
        .map(|_| (0..k).map(|_| rng.random_range(-bound..bound)).collect())
        .collect()
}

/// Convenience: random labels in `0..k`.
pub fn random_labels(count: usize, k: usize, seed: u64) -> Vec<usize> {
    let mut rng = rng_from_seed(seed);
    (0..count).map(|_| rng.random_range(0..k)).collect()
}

/// Convenience: random pair labels.
pub fn random_pair_labels(count: usize, seed: u64) -> Vec<PairLabel> {
    let mut rng = rng_from_seed(seed);
    (0..count)
        .map(|_| {
            if rng.random_bool(0.5) {
                PairLabel::Positive
            } else {
                PairLabel::Negative
            }
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::losses::pairwise_exponential_loss;

    #[test]
    fn noise_model_bounds() {
        assert!(NoiseModel::Binary { eta: 0.49 }.validate().is_ok());
        assert!(NoiseModel::Binary { eta: 0.5 }.validate().is_err());
        assert!(NoiseModel::Binary { eta: -0.1 }.validate().is_err());
        assert!(NoiseModel::Uniform { eta: 0.6, k: 3 }.validate().is_ok());
        assert!(NoiseModel::Uniform {
            eta: 2.0 / 3.0,
            k: 3
        }
        .validate()
        .is_err());
        assert!(NoiseModel::Uniform { eta: 0.1, k: 1 }.validate().is_err());
        assert!((NoiseModel::Uniform { eta: 0.1, k: 5 }.max_eta() - 0.8).abs() < 1e-15);
    }

    #[test]
    fn exponential_label_sum_is_exactly_zero() {
        let probes = random_margins(200, 3.0, 11);
        let check = pair_symmetry_sum(pairwise_exponential_loss, &probes).unwrap();
        assert_eq!(check.range, 0.0);
        assert_eq!(check.mean_sum, 0.0);
    }

    #[test]
    fn mae_label_sum_is_constant_two_k_minus_one() {
        for k in [2, 3, 5] {
            let probes = random_score_vectors(100, k, 3.0, 13);
            let check = symmetry_sum(&MaeLoss, k, &probes).unwrap();
            let expected = 2.0 * (k as f64 - 1.0);
            assert!(check.range <= 1e-12, "k={k} range {}", check.range);
            assert!((check.mean_sum - expected).abs() <= 1e-12);
            assert_eq!(MaeLoss.symmetry_constant(k), Some(expected));
        }
    }

    #[test]
    fn cross_entropy_label_sum_moves() {
        let probes = random_score_vectors(100, 4, 3.0, 17);
        let check = symmetry_sum(&CrossEntropyLoss, 4, &probes).unwrap();
        assert!(check.range > 0.1, "range {}", check.range);
        assert_eq!(CrossEntropyLoss.symmetry_constant(4), None);
    }

    #[test]
    fn symmetry_sum_validates_input() {
        assert!(symmetry_sum(&MaeLoss, 1, &[vec![0.0]]).is_err());
        assert!(symmetry_sum(&MaeLoss, 3, &[]).is_err());
        assert!(symmetry_sum(&MaeLoss, 3, &[vec![0.0, 1.0]]).is_err());
        assert!(symmetry_sum(&MaeLoss, 2, &[vec![f64::NAN, 0.0]]).is_err());
        assert!(pair_symmetry_sum(pairwise_exponential_loss, &[]).is_err());
    }

    #[test]
    fn binary_noisy_risk_identity_is_exact() {
        let margins = random_margins(500, 3.0, 19);
        let labels = random_pair_labels(500, 23);
        for eta in [0.0, 0.1, 0.25, 0.4, 0.49] {
            let report =
                exact_noisy_risk_binary(&margins, &labels, eta, pairwise_exponential_loss, 0.0)
                    .unwrap();
            assert!(
                report.deviation <= 1e-12,
                "eta {eta}: deviation {}",
                report.deviation
            );
            assert!((report.coefficient - (1.0 - 2.0 * eta)).abs() < 1e-15);
        }
    }

    #[test]
    fn multiclass_noisy_risk_identity_is_exact_for_mae() {
        for k in [3, 5] {
            let scores = random_score_vectors(300, k, 3.0, 29);
            let labels = random_labels(300, k, 31);
            let constant = MaeLoss.symmetry_constant(k).unwrap();
            for eta in [0.05, 0.2, 0.5] {
                let report =
                    exact_noisy_risk_multiclass(&scores, &labels, k, eta, &MaeLoss, constant)
                        .unwrap();
                assert!(
                    report.deviation <= 1e-12,
                    "k {k} eta {eta}: deviation {}",
                    report.deviation
                );
                let alpha = 1.0 - eta * k as f64 / (k as f64 - 1.0);
                assert!((report.coefficient - alpha).abs() < 1e-15);
            }
        }
    }

    #[test]
    fn cross_entropy_breaks_the_constant_prediction() {
        // Using any fixed constant, the affine prediction fails for CE on
        // generic data because its label sum is score-dependent.
        let scores = random_score_vectors(300, 4, 3.0, 37);
        let labels = random_labels(300, 4, 41);
        let report =
            exact_noisy_risk_multiclass(&scores, &labels, 4, 0.3, &CrossEntropyLoss, 0.0).unwrap();
        assert!(report.deviation > 0.1, "deviation {}", report.deviation);
    }

    #[test]
    fn binary_minimizer_never_moves_for_exponential_loss() {
        let labels = random_pair_labels(200, 43);
        let candidates: Vec<Vec<f64>> = (0..6)
            .map(|i| random_margins(200, 3.0, 100 + i as u64))
            .collect();
        let report = minimizer_invariance_binary(
            &candidates,
            &labels,
            &[0.05, 0.15, 0.3, 0.45, 0.49],
            pairwise_exponential_loss,
        )
        .unwrap();
        assert!(report.invariant, "argmins {:?}", report.noisy_argmins);
    }

    #[test]
    fn multiclass_minimizer_never_moves_for_mae() {
        let k = 4;
        let labels = random_labels(150, k, 47);
        let candidates: Vec<Vec<Vec<f64>>> = (0..5)
            .map(|i| random_score_vectors(150, k, 3.0, 200 + i as u64))
            .collect();
        let report = minimizer_invariance_multiclass(
            &candidates,
            &labels,
            k,
            &[0.1, 0.3, 0.5, 0.7],
            &MaeLoss,
        )
        .unwrap();
        assert!(report.invariant, "argmins {:?}", report.noisy_argmins);
    }

    #[test]
    fn gradient_probe_separates_the_losses() {
        let report = gradient_symmetry_probe(200, 53).unwrap();
        assert!(
            report.softmax_contrastive_range > 1e-3,
            "softmax range {}",
            report.softmax_contrastive_range
        );
        assert!(report.exponential_range <= 1e-12);
        assert!(gradient_symmetry_probe(1, 1).is_err());
    }

    #[test]
    fn softmax_contrastive_grads_match_finite_differences() {
        let negs = [0.3f64, -1.2, 0.9];
        let (s, s_plus, h) = (0.4f64, -0.7f64, 1e-6);
        let loss_pos = |x: f64| {
            let neg_sum: f64 = negs.iter().map(|v| v.exp()).sum();
            -x + (x.exp() + neg_sum).ln()
        };
        let fd_pos = (loss_pos(s + h) - loss_pos(s - h)) / (2.0 * h);
        assert!((softmax_contrastive_grad_positive(s, &negs) - fd_pos).abs() < 1e-8);

        let loss_neg = |x: f64| {
            let rest: f64 = negs.iter().map(|v| v.exp()).sum();
            -s_plus + (s_plus.exp() + x.exp() + rest).ln()
        };
        let fd_neg = (loss_neg(s + h) - loss_neg(s - h)) / (2.0 * h);
        assert!((softmax_contrastive_grad_negative(s, s_plus, &negs) - fd_neg).abs() < 1e-8);
    }
}
