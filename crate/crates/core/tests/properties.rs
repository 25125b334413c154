//! Randomized invariant checks over the crate's structural contracts.

use std::collections::{BTreeSet, HashSet};

use proptest::prelude::*;

use sgcl_core::analysis::{flag_suspicious, inject_fake_edges, sparsify, FlagConfig};
use sgcl_core::augmentation::{edge_dropout, node_dropout};
use sgcl_core::centrality::{stratify, StratumLevel, DEFAULT_FRACTIONS};
use sgcl_core::encoder::init_embeddings;
use sgcl_core::evaluation::{improvement_percent, topk};
use sgcl_core::graph::split_train_test;
use sgcl_core::losses::{pairwise_exponential_loss, scl_pair_scores, NodeClass, PairLabel};
use sgcl_core::theory::exact_noisy_risk_binary;
use sgcl_core::trainer::{load_checkpoint_from, save_checkpoint_to};
use sgcl_core::{DenseMatrix, InteractionGraph, NormalizedAdjacency};

/// Bipartite graph with distinct edges drawn from an m-by-n grid.
fn arb_graph(max_users: usize, max_items: usize) -> impl Strategy<Value = InteractionGraph> {
    (2..=max_users, 2..=max_items)
        .prop_flat_map(|(m, n)| {
            let cells = m * n;
            (
                Just(m),
                Just(n),
                proptest::collection::btree_set(0..cells, 1..=cells.min(40)),
            )
        })
        .prop_map(|(m, n, cells)| {
            let pairs: Vec<(u32, u32)> = cells
                .into_iter()
                .map(|c| ((c / n) as u32, (c % n) as u32))
                .collect();
            InteractionGraph::from_edges(m, n, &pairs).expect("distinct in-range pairs")
        })
}

fn edge_set(g: &InteractionGraph) -> BTreeSet<(u32, u32)> {
    g.edges().iter().copied().collect()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn adjacency_lists_match_edges(g in arb_graph(8, 8)) {
        let from_users: usize = (0..g.num_users() as u32).map(|u| g.user_degree(u)).sum();
        let from_items: usize = (0..g.num_items() as u32).map(|i| g.item_degree(i)).sum();
        prop_assert_eq!(from_users, g.num_edges());
        prop_assert_eq!(from_items, g.num_edges());
        for &(u, i) in g.edges() {
            prop_assert!(g.user_items(u).binary_search(&i).is_ok());
            prop_assert!(g.item_users(i).binary_search(&u).is_ok());
            prop_assert!(g.has_edge(u, i));
        }
    }

    #[test]
    fn normalized_adjacency_is_symmetric_with_degree_values(g in arb_graph(8, 8)) {
        let adj = NormalizedAdjacency::from_graph(&g);
        prop_assert_eq!(adj.nnz(), 2 * g.num_edges());
        let m = g.num_users();
        for &(u, i) in g.edges() {
            let (r, c) = (u as usize, m + i as usize);
            let expected = 1.0
                / ((g.user_degree(u) as f64) * (g.item_degree(i) as f64)).sqrt();
            let stored = adj.lookup(r, c).unwrap();
            prop_assert!((stored - expected).abs() <= 1e-12);
            prop_assert_eq!(adj.lookup(c, r), Some(stored));
        }
    }

    #[test]
    fn spmm_with_ones_matches_per_row_neighbor_sums(g in arb_graph(8, 8)) {
        let adj = NormalizedAdjacency::from_graph(&g);
        let dim = adj.dim();
        let ones = DenseMatrix::from_vec(dim, 1, vec![1.0; dim]).unwrap();
        let out = adj.spmm(&ones).unwrap();
        let m = g.num_users();
        for r in 0..dim {
            let brute: f64 = if r < m {
                g.user_items(r as u32)
                    .iter()
                    .map(|&i| adj.lookup(r, m + i as usize).unwrap())
                    .sum()
            } else {
                g.item_users((r - m) as u32)
                    .iter()
                    .map(|&u| adj.lookup(r, u as usize).unwrap())
                    .sum()
            };
            prop_assert!((out.get(r, 0) - brute).abs() <= 1e-12);
        }
    }

    #[test]
    fn split_partitions_every_user_history(
        g in arb_graph(8, 8),
        ratio in 0.05f64..0.95,
        seed in any::<u64>(),
    ) {
        let (train, test) = split_train_test(&g, ratio, seed).unwrap();
        let (tr, te) = (edge_set(&train), edge_set(&test));
        prop_assert!(tr.is_disjoint(&te));
        let mut union = tr.clone();
        union.extend(te.iter().copied());
        prop_assert_eq!(union, edge_set(&g));
        for u in 0..g.num_users() as u32 {
            let deg = g.user_degree(u);
            let in_test = te.iter().filter(|&&(a, _)| a == u).count();
            if deg <= 1 {
                prop_assert_eq!(in_test, 0);
            } else {
                // Every user keeps at least one training edge.
                let want = ((ratio * deg as f64).ceil() as usize).min(deg - 1);
                prop_assert_eq!(in_test, want);
            }
        }
        let (train2, test2) = split_train_test(&g, ratio, seed).unwrap();
        prop_assert_eq!(edge_set(&train2), tr);
        prop_assert_eq!(edge_set(&test2), te);
    }

    #[test]
    fn contrastive_scores_stay_within_temperature_bound(
        seed in any::<u64>(),
        tau in 0.05f64..2.0,
        anchors in 2usize..6,
        dim in 2usize..8,
    ) {
        let z1 = init_embeddings(6, 6, dim, seed);
        let z2 = init_embeddings(6, 6, dim, seed.wrapping_add(1));
        let ids: Vec<u32> = (0..anchors as u32).collect();
        let scores = scl_pair_scores(&z1, &z2, &ids, NodeClass::User, tau).unwrap();
        let bound = 1.0 / tau + 1e-9;
        for k in 0..scores.num_anchors() {
            prop_assert!(scores.s_plus[k].abs() <= bound);
            for &s in &scores.s_neg[k] {
                prop_assert!(s.abs() <= bound);
            }
        }
    }

    #[test]
    fn views_only_remove_edges(
        g in arb_graph(8, 8),
        rate in 0.0f64..0.5,
        seed in any::<u64>(),
    ) {
        let original = edge_set(&g);
        for view in [edge_dropout(&g, rate, seed), node_dropout(&g, rate, seed)]
            .into_iter()
            .flatten()
        {
            for l in 0..view.num_layer_sets() {
                let kept = edge_set(view.graph_at(l));
                prop_assert!(kept.is_subset(&original));
            }
        }
    }

    #[test]
    fn strata_partition_matches_rank_cutoffs(
        scores in proptest::collection::vec(-10.0f64..10.0, 5..60),
    ) {
        let strata = stratify(&scores, DEFAULT_FRACTIONS).unwrap();
        let n = scores.len();
        let mut seen = vec![false; n];
        let mut total = 0usize;
        for level in StratumLevel::ALL {
            for idx in strata.members(level) {
                prop_assert!(!seen[idx]);
                seen[idx] = true;
                total += 1;
            }
        }
        prop_assert_eq!(total, n);
        let (f1, f2, f3) = DEFAULT_FRACTIONS;
        prop_assert_eq!(strata.count(StratumLevel::Highest), (f1 * n as f64).ceil() as usize);
        let c2 = (f2 * n as f64).ceil() as usize;
        let c3 = (f3 * n as f64).ceil() as usize;
        prop_assert_eq!(
            strata.count(StratumLevel::Highest) + strata.count(StratumLevel::High),
            c2
        );
        prop_assert_eq!(n - strata.count(StratumLevel::Low), c3);
    }

    #[test]
    fn flagging_is_bounded_and_monotone(
        cosines in proptest::collection::vec(-1.0f64..1.0, 3..40),
        pick in any::<prop::sample::Index>(),
    ) {
        let cfg = FlagConfig::default();
        let flags = flag_suspicious(&cosines, &cfg).unwrap();
        let budget = (cfg.rank_fraction * cosines.len() as f64).floor() as usize;
        prop_assert!(flags.iter().filter(|&&f| f).count() <= budget);
        for (i, &f) in flags.iter().enumerate() {
            if f {
                prop_assert!(cosines[i] < cfg.cosine_threshold);
            }
        }
        let i = pick.index(cosines.len());
        if flags[i] {
            let mut lowered = cosines.clone();
            lowered[i] = -1.0;
            let again = flag_suspicious(&lowered, &cfg).unwrap();
            prop_assert!(again[i]);
        }
    }

    #[test]
    fn sparsify_keeps_nested_prefixes(
        g in arb_graph(8, 8),
        keep_lo in 0.2f64..0.6,
        keep_hi in 0.6f64..1.0,
        seed in any::<u64>(),
    ) {
        prop_assume!((keep_lo * g.num_edges() as f64).floor() >= 1.0);
        let small = sparsify(&g, keep_lo, seed).unwrap();
        let large = sparsify(&g, keep_hi, seed).unwrap();
        prop_assert_eq!(small.num_edges(), (keep_lo * g.num_edges() as f64).floor() as usize);
        prop_assert_eq!(large.num_edges(), (keep_hi * g.num_edges() as f64).floor() as usize);
        prop_assert!(edge_set(&small).is_subset(&edge_set(&large)));
        prop_assert!(edge_set(&large).is_subset(&edge_set(&g)));
    }

    #[test]
    fn fake_edge_injection_swaps_a_fixed_budget(
        g in arb_graph(8, 8),
        ratio in 0.0f64..0.5,
        seed in any::<u64>(),
    ) {
        let free = g.num_users() * g.num_items() - g.num_edges();
        let budget = (ratio * g.num_edges() as f64).floor() as usize;
        prop_assume!(budget <= free);
        let p = inject_fake_edges(&g, ratio, seed).unwrap();
        prop_assert_eq!(p.graph.num_edges(), g.num_edges());
        prop_assert_eq!(p.removed.len(), budget);
        prop_assert_eq!(p.added.len(), budget);
        let original = edge_set(&g);
        for e in &p.removed {
            prop_assert!(original.contains(e));
            prop_assert!(!p.graph.has_edge(e.0, e.1));
        }
        for e in &p.added {
            prop_assert!(!original.contains(e));
            prop_assert!(p.graph.has_edge(e.0, e.1));
        }
    }

    #[test]
    fn checkpoint_round_trip_is_exact(
        users in 1usize..5,
        items in 1usize..5,
        dim in 1usize..6,
        seed in any::<u64>(),
    ) {
        let mut theta = init_embeddings(users, items, dim, seed);
        sgcl_core::trainer::quantize_to_checkpoint_precision(&mut theta);
        let mut buf = Vec::new();
        save_checkpoint_to(&theta, &mut buf).unwrap();
        let loaded = load_checkpoint_from(buf.as_slice()).unwrap();
        prop_assert_eq!(loaded.matrix().data(), theta.matrix().data());
    }

    #[test]
    fn pairwise_label_sum_cancels_exactly(s in -3.0f64..3.0) {
        let total = pairwise_exponential_loss(s, PairLabel::Positive)
            + pairwise_exponential_loss(s, PairLabel::Negative);
        prop_assert_eq!(total, 0.0);
    }

    #[test]
    fn binary_noisy_risk_matches_affine_prediction(
        margins in proptest::collection::vec(-3.0f64..3.0, 1..50),
        label_bits in proptest::collection::vec(any::<bool>(), 50),
        eta in 0.0f64..0.49,
    ) {
        let labels: Vec<PairLabel> = label_bits
            .iter()
            .take(margins.len())
            .map(|&b| if b { PairLabel::Positive } else { PairLabel::Negative })
            .collect();
        let report =
            exact_noisy_risk_binary(&margins, &labels, eta, pairwise_exponential_loss, 0.0)
                .unwrap();
        prop_assert!(report.deviation <= 1e-12);
    }

    #[test]
    fn topk_is_sorted_filtered_and_capped(
        scores in proptest::collection::vec(-5.0f64..5.0, 1..30),
        k in 1usize..10,
        exclude_bits in proptest::collection::vec(any::<bool>(), 30),
    ) {
        let exclude: HashSet<u32> = exclude_bits
            .iter()
            .take(scores.len())
            .enumerate()
            .filter_map(|(i, &b)| b.then_some(i as u32))
            .collect();
        let ranked = topk(&scores, k, &exclude).unwrap();
        let available = scores.len() - exclude.len();
        prop_assert_eq!(ranked.items.len(), k.min(available));
        prop_assert_eq!(ranked.truncated, available < k);
        for pair in ranked.items.windows(2) {
            let (a, b) = (pair[0], pair[1]);
            let better = scores[a as usize] > scores[b as usize]
                || (scores[a as usize] == scores[b as usize] && a < b);
            prop_assert!(better);
        }
        for &i in &ranked.items {
            prop_assert!(!exclude.contains(&i));
        }
    }

    #[test]
    fn improvement_percent_tracks_sign(base in 0.01f64..2.0, delta in -0.009f64..2.0) {
        let value = improvement_percent(base + delta, base).unwrap();
        prop_assert_eq!(value > 0.0, delta > 0.0);
        prop_assert_eq!(value < 0.0, delta < 0.0);
        prop_assert!((value - 100.0 * delta / base).abs() <= 1e-9);
    }
}
