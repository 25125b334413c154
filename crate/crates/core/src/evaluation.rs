//! Top-K ranking evaluation: Precision/Recall/NDCG over full item rankings,
//! with train-item exclusion and deterministic tie-breaking, plus the
//! random- and popularity-scorer baselines.

use std::collections::HashSet;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::encoder::{score, EmbeddingTable};
use crate::error::{Error, Result};
use crate::graph::InteractionGraph;
use crate::rng::{hash_seeds, rng_from_seed};
use rand::Rng;

/// Anything that can score every item for a user. `score_items(u)` returns a
/// dense vector indexed by item.
pub trait Scorer: Sync {
    fn score_items(&self, user: u32) -> Vec<f64>;
    fn num_items(&self) -> usize;
}

/// Inner-product scorer over propagated embeddings.
pub struct EmbeddingScorer<'a> {
    pub embeddings: &'a EmbeddingTable,
}

impl Scorer for EmbeddingScorer<'_> {
    fn score_items(&self, user: u32) -> Vec<f64> {
        (0..self.embeddings.num_items() as u32)
            .map(|i| score(self.embeddings, user, i))
            .collect()
    }

    fn num_items(&self) -> usize {
        self.embeddings.num_items()
    }
}

/// Baseline scorer kinds.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BaselineKind {
    /// Seeded uniform scores per (user, item).
    Random,
    /// Item train-degree, identical ranking for every user.
    Popularity,
}

/// A baseline scorer; see [`BaselineKind`].
pub struct BaselineScorer {
    kind: BaselineKind,
    seed: u64,
    degrees: Vec<f64>,
}

/// Builds a baseline scorer from the training graph.
pub fn baseline_scores(kind: BaselineKind, train: &InteractionGraph, seed: u64) -> BaselineScorer {
    let degrees = (0..train.num_items() as u32)
        .map(|i| train.item_degree(i) as f64)
        .collect();
    BaselineScorer {
        kind,
        seed,
        degrees,
    }
}

impl Scorer for BaselineScorer {
    fn score_items(&self, user: u32) -> Vec<f64> {
        match self.kind {
            BaselineKind::Random => {
                let mut rng = rng_from_seed(hash_seeds(&[self.seed, user as u64]));
                (0..self.degrees.len())
                    .map(|_| rng.random::<f64>())
                    .collect()
            }
            BaselineKind::Popularity => self.degrees.clone(),
        }
    }

    fn num_items(&self) -> usize {
        self.degrees.len()
    }
}

/// Top-K selection result; `truncated` is set when fewer than K candidates
/// existed and all of them were returned.
#[derive(Debug, Clone)]
pub struct TopK {
    pub items: Vec<u32>,
    pub truncated: bool,
}

/// K highest-scoring items not in `exclude`, descending score, score ties
/// broken by ascending item index.
pub fn topk(scores: &[f64], k: usize, exclude: &HashSet<u32>) -> Result<TopK> {
    if scores.iter().any(|s| !s.is_finite()) {
        return Err(Error::NonFinite("ranking scores".into()));
    }
    let mut candidates: Vec<u32> = (0..scores.len() as u32)
        .filter(|i| !exclude.contains(i))
        .collect();
    candidates.sort_by(|&a, &b| {
        scores[b as usize]
            .partial_cmp(&scores[a as usize])
            .expect("scores checked finite")
            .then(a.cmp(&b))
    });
    let truncated = candidates.len() < k;
    candidates.truncate(k);
    Ok(TopK {
        items: candidates,
        truncated,
    })
}

/// Fraction of the top-K that are relevant: `hits / K`.
pub fn precision_at_k(ranked: &[u32], test_items: &HashSet<u32>, k: usize) -> f64 {
    if k == 0 {
        return 0.0;
    }
    let hits = ranked
        .iter()
        .take(k)
        .filter(|i| test_items.contains(i))
        .count();
    hits as f64 / k as f64
}

/// Fraction of relevant items recovered in the top-K: `hits / |test|`.
pub fn recall_at_k(ranked: &[u32], test_items: &HashSet<u32>, k: usize) -> f64 {
    if test_items.is_empty() {
        return 0.0;
    }
    let hits = ranked
        .iter()
        .take(k)
        .filter(|i| test_items.contains(i))
        .count();
    hits as f64 / test_items.len() as f64
}

/// Binary-gain NDCG: DCG with gain `1 / log2(rank + 1)` (rank starting at
/// 1), ideal DCG truncated at `min(K, |test|)`.
pub fn ndcg_at_k(ranked: &[u32], test_items: &HashSet<u32>, k: usize) -> f64 {
    if test_items.is_empty() || k == 0 {
        return 0.0;
    }
    let dcg: f64 = ranked
        .iter()
        .take(k)
        .enumerate()
        .filter(|(_, i)| test_items.contains(i))
        .map(|(r, _)| 1.0 / ((r + 2) as f64).log2())
        .sum();
    let ideal: f64 = (0..k.min(test_items.len()))
        .map(|r| 1.0 / ((r + 2) as f64).log2())
        .sum();
    dcg / ideal
}

/// Metric means over all users with at least one test interaction.
#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct EvalReport {
    pub k_values: Vec<usize>,
    pub precision: Vec<f64>,
    pub recall: Vec<f64>,
    pub ndcg: Vec<f64>,
    pub users_evaluated: usize,
}

impl EvalReport {
    fn metric_at(&self, values: &[f64], k: usize) -> Option<f64> {
        self.k_values
            .iter()
            .position(|&kk| kk == k)
            .map(|pos| values[pos])
    }

    pub fn recall_at(&self, k: usize) -> Option<f64> {
        self.metric_at(&self.recall, k)
    }

    pub fn precision_at(&self, k: usize) -> Option<f64> {
        self.metric_at(&self.precision, k)
    }

    pub fn ndcg_at(&self, k: usize) -> Option<f64> {
        self.metric_at(&self.ndcg, k)
    }

    /// CSV rows `metric,k,value` with a header.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("metric,k,value\n");
        for (pos, &k) in self.k_values.iter().enumerate() {
            out.push_str(&format!("precision,{k},{}\n", self.precision[pos]));
            out.push_str(&format!("recall,{k},{}\n", self.recall[pos]));
            out.push_str(&format!("ndcg,{k},{}\n", self.ndcg[pos]));
        }
        out
    }
}

/// Ranks the full item set per user (excluding that user's train items) and
/// averages Precision/Recall/NDCG at each cutoff over users with nonempty
/// test sets. Users whose test set is empty are skipped entirely.
pub fn evaluate_all(
    scorer: &dyn Scorer,
    train: &InteractionGraph,
    test: &InteractionGraph,
    k_values: &[usize],
) -> Result<EvalReport> {
    if k_values.is_empty() || k_values.contains(&0) {
        return Err(Error::InvalidConfig(
            "evaluation cutoffs must be nonempty and positive".into(),
        ));
    }
    if train.num_items() != scorer.num_items() {
        return Err(Error::DimensionMismatch {
            expected: format!("{} items", train.num_items()),
            got: format!("{}", scorer.num_items()),
        });
    }
    let max_k = *k_values.iter().max().expect("nonempty");
    let eval_users: Vec<u32> = (0..test.num_users() as u32)
        .filter(|&u| test.user_degree(u) > 0)
        .collect();
    if eval_users.is_empty() {
        return Err(Error::InvalidConfig(
            "no users with test interactions to evaluate".into(),
        ));
    }

    // Per-user metric triples collected in user order, then averaged, so
    // the result does not depend on thread scheduling.
    let per_user: Vec<Vec<(f64, f64, f64)>> = eval_users
        .par_iter()
        .map(|&u| {
            let scores = scorer.score_items(u);
            let exclude: HashSet<u32> = train.user_items(u).iter().copied().collect();
            let test_items: HashSet<u32> = test.user_items(u).iter().copied().collect();
            let ranked = topk(&scores, max_k, &exclude)?;
            Ok(k_values
                .iter()
                .map(|&k| {
                    (
                        precision_at_k(&ranked.items, &test_items, k),
                        recall_at_k(&ranked.items, &test_items, k),
                        ndcg_at_k(&ranked.items, &test_items, k),
                    )
                })
                .collect())
        })
        .collect::<Result<_>>()?;

    let count = eval_users.len() as f64;
    let mut precision = vec![0.0; k_values.len()];
    let mut recall = vec![0.0; k_values.len()];
    let mut ndcg = vec![0.0; k_values.len()];
    for row in &per_user {
        for (pos, &(p, r, n)) in row.iter().enumerate() {
            precision[pos] += p;
            recall[pos] += r;
            ndcg[pos] += n;
        }
    }
    for v in precision.iter_mut().chain(&mut recall).chain(&mut ndcg) {
        *v /= count;
    }
    Ok(EvalReport {
        k_values: k_values.to_vec(),
        precision,
        recall,
        ndcg,
        users_evaluated: eval_users.len(),
    })
}

/// Percentage improvement of `new` over `base`: `100 * (new - base) / base`.
/// Errors when the base is not strictly positive.
pub fn improvement_percent(new: f64, base: f64) -> Result<f64> {
    if !(base.is_finite() && new.is_finite()) {
        return Err(Error::NonFinite("improvement operands".into()));
    }
    if base <= 0.0 {
        return Err(Error::InvalidConfig(format!(
            "improvement base must be > 0, got {base}"
        )));
    }
    Ok(100.0 * (new - base) / base)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn hs(items: &[u32]) -> HashSet<u32> {
        items.iter().copied().collect()
    }

    #[test]
    fn topk_orders_and_breaks_ties_by_index() {
        let scores = [0.5, 0.9, 0.9, 0.1];
        let ranked = topk(&scores, 3, &HashSet::new()).unwrap();
        assert_eq!(ranked.items, vec![1, 2, 0]);
        assert!(!ranked.truncated);
    }

    #[test]
    fn topk_excludes_and_flags_truncation() {
        let scores = [0.5, 0.9, 0.3];
        let ranked = topk(&scores, 5, &hs(&[1])).unwrap();
        assert_eq!(ranked.items, vec![0, 2]);
        assert!(ranked.truncated);
        assert!(topk(&[f64::NAN], 1, &HashSet::new()).is_err());
    }

    #[test]
    fn metric_formulas_on_known_ranking() {
        // Ranked 5 items; test set {a: rank 1, b: rank 4}.
        let ranked = vec![10, 11, 12, 13, 14];
        let test = hs(&[10, 13]);
        assert!((precision_at_k(&ranked, &test, 5) - 0.4).abs() < 1e-15);
        assert!((recall_at_k(&ranked, &test, 5) - 1.0).abs() < 1e-15);
        let dcg = 1.0 / 2.0f64.log2() + 1.0 / 5.0f64.log2();
        let idcg = 1.0 / 2.0f64.log2() + 1.0 / 3.0f64.log2();
        assert!((ndcg_at_k(&ranked, &test, 5) - dcg / idcg).abs() < 1e-15);
    }

    #[test]
    fn perfect_ranking_gets_ndcg_one() {
        let ranked = vec![1, 2, 3];
        let test = hs(&[1, 2, 3]);
        assert!((ndcg_at_k(&ranked, &test, 3) - 1.0).abs() < 1e-15);
        // Also when |test| < K: ideal truncates at |test|.
        let test = hs(&[1]);
        assert!((ndcg_at_k(&ranked, &test, 3) - 1.0).abs() < 1e-15);
    }

    #[test]
    fn empty_test_set_metrics_are_zero() {
        let ranked = vec![1, 2];
        assert_eq!(recall_at_k(&ranked, &HashSet::new(), 2), 0.0);
        assert_eq!(ndcg_at_k(&ranked, &HashSet::new(), 2), 0.0);
    }

    #[test]
    fn evaluate_all_averages_over_test_users_only() {
        let full =
            InteractionGraph::from_edges(3, 4, &[(0, 0), (0, 1), (1, 2), (1, 3), (2, 0)]).unwrap();
        let train = full.with_edges(&[(0, 0), (1, 2), (2, 0)]).unwrap();
        let test = full.with_edges(&[(0, 1), (1, 3)]).unwrap();
        // Popularity by train degree: item 0 deg 2, others <= 1.
        let scorer = baseline_scores(BaselineKind::Popularity, &train, 0);
        let report = evaluate_all(&scorer, &train, &test, &[2]).unwrap();
        assert_eq!(report.users_evaluated, 2);
        // user 0: candidates {1,2,3} scores {1,1,0}; top2 = [1,2] -> hit at 1
        // user 1: candidates {0,1,3} scores {2,1,1}; top2 = [0,1] -> miss
        assert!((report.recall_at(2).unwrap() - 0.5).abs() < 1e-12);
        assert!((report.precision_at(2).unwrap() - 0.25).abs() < 1e-12);
    }

    #[test]
    fn random_scorer_is_deterministic_per_seed() {
        let g = InteractionGraph::from_edges(2, 5, &[(0, 0), (1, 1)]).unwrap();
        let a = baseline_scores(BaselineKind::Random, &g, 9);
        let b = baseline_scores(BaselineKind::Random, &g, 9);
        let c = baseline_scores(BaselineKind::Random, &g, 10);
        assert_eq!(a.score_items(0), b.score_items(0));
        assert_ne!(a.score_items(0), c.score_items(0));
        assert_ne!(a.score_items(0), a.score_items(1));
    }

    #[test]
    fn improvement_percent_arithmetic_and_errors() {
        assert!((improvement_percent(0.12, 0.10).unwrap() - 20.0).abs() < 1e-12);
        assert!(improvement_percent(0.1, 0.0).is_err());
        assert!(improvement_percent(0.1, -0.5).is_err());
        assert!(improvement_percent(f64::NAN, 0.5).is_err());
    }

    #[test]
    fn report_csv_shape() {
        let report = EvalReport {
            k_values: vec![10, 20],
            precision: vec![0.1, 0.2],
            recall: vec![0.3, 0.4],
            ndcg: vec![0.5, 0.6],
            users_evaluated: 7,
        };
        let csv = report.to_csv();
        let lines: Vec<&str> = csv.trim().lines().collect();
        assert_eq!(lines.len(), 1 + 6);
        assert_eq!(lines[0], "metric,k,value");
        assert!(lines.contains(&"recall,20,0.4"));
    }
}
