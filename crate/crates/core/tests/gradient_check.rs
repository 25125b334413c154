//! Central finite-difference verification of every analytic gradient: the
//! score-level gradients of the contrastive losses, the BPR gradient, and
//! the full combined objective differentiated through propagation, cosine
//! scoring, and both augmented views.

mod common;

use common::{
    assert_clamp_margin, fd_pair_scores, fd_table, random_scores, toy_graph_6x6, FdReport,
};
use sgcl_core::augmentation::edge_dropout;
use sgcl_core::encoder::{init_embeddings, EmbeddingTable};
use sgcl_core::graph::NormalizedAdjacency;
use sgcl_core::losses::{
    bpr_loss_and_grad, combined_objective, infonce_loss, scl_loss, BprTriple, ContrastBatch,
    ContrastiveObjective, LossConfig, ObjectiveInputs,
};

const TOL: f64 = 1e-4;

fn assert_ok(report: &FdReport, label: &str) {
    assert!(
        report.max_rel_err < TOL,
        "{label}: max rel err {} at {}",
        report.max_rel_err,
        report.worst
    );
}

#[test]
fn scl_score_gradients_match_finite_differences() {
    for &p in &[0.01, 0.1, 1.0] {
        for trial in 0..10u64 {
            let scores = random_scores(300 + trial, 6, 0.5);
            assert_clamp_margin(&scores);
            let lambda = 0.3;
            let (_, grads) = scl_loss(&scores, lambda, p).unwrap();
            let report = fd_pair_scores(&scores, &grads, |s| scl_loss(s, lambda, p).unwrap().0);
            assert_ok(&report, &format!("scl p={p} trial={trial}"));
        }
    }
}

#[test]
fn infonce_score_gradients_match_finite_differences() {
    for trial in 0..10u64 {
        let scores = random_scores(700 + trial, 5, 0.2);
        let (_, grads) = infonce_loss(&scores);
        let report = fd_pair_scores(&scores, &grads, |s| infonce_loss(s).0);
        assert_ok(&report, &format!("infonce trial={trial}"));
    }
}

#[test]
fn bpr_gradient_matches_finite_differences() {
    let e = init_embeddings(6, 6, 5, 40);
    let batch = vec![
        BprTriple {
            user: 0,
            pos_item: 0,
            neg_item: 4,
        },
        BprTriple {
            user: 1,
            pos_item: 3,
            neg_item: 1,
        },
        BprTriple {
            user: 2,
            pos_item: 1,
            neg_item: 5,
        },
        BprTriple {
            user: 4,
            pos_item: 4,
            neg_item: 0,
        },
    ];
    let alpha = 0.01;
    // Full derivative wrt the shared table: ranking part + L2 part.
    let (_, grad_e, grad_theta) = bpr_loss_and_grad(&e, &batch, alpha, &e).unwrap();
    let mut full = grad_e.clone();
    full.add_scaled(&grad_theta, 1.0).unwrap();
    let analytic = EmbeddingTable::from_matrix(6, 6, full).unwrap();
    let report = fd_table(&e, &analytic, |t| {
        bpr_loss_and_grad(t, &batch, alpha, t).unwrap().0
    });
    assert_ok(&report, "bpr");
}

#[test]
fn combined_objective_gradient_matches_finite_differences() {
    let g = toy_graph_6x6();
    let adj = NormalizedAdjacency::from_graph(&g);
    let view1 = edge_dropout(&g, 0.3, 901).unwrap();
    let view2 = edge_dropout(&g, 0.3, 902).unwrap();
    let batch = vec![
        BprTriple {
            user: 0,
            pos_item: 0,
            neg_item: 5,
        },
        BprTriple {
            user: 1,
            pos_item: 3,
            neg_item: 2,
        },
        BprTriple {
            user: 3,
            pos_item: 5,
            neg_item: 0,
        },
        BprTriple {
            user: 4,
            pos_item: 4,
            neg_item: 1,
        },
    ];
    let contrast = ContrastBatch {
        users: vec![0, 1, 3, 4],
        items: vec![0, 3, 4, 5],
    };
    let theta = init_embeddings(6, 6, 6, 77);

    let configs: Vec<(String, LossConfig)> = [0.01, 0.1, 1.0]
        .iter()
        .map(|&p| {
            (
                format!("combined scl p={p}"),
                LossConfig {
                    tau: 0.5,
                    lambda: 0.3,
                    p,
                    beta: 0.5,
                    alpha: 1e-3,
                    objective: ContrastiveObjective::Scl,
                },
            )
        })
        .chain(std::iter::once((
            "combined infonce".to_string(),
            LossConfig {
                tau: 0.5,
                lambda: 0.3,
                p: 1.0,
                beta: 0.5,
                alpha: 1e-3,
                objective: ContrastiveObjective::InfoNce,
            },
        )))
        .collect();

    for (label, cfg) in &configs {
        let inputs = ObjectiveInputs {
            theta: &theta,
            main_adj: &adj,
            views: Some((&view1, &view2)),
            layers: 2,
        };
        let (_, analytic) = combined_objective(&inputs, &batch, Some(&contrast), cfg).unwrap();
        let report = fd_table(&theta, &analytic, |t| {
            let inputs = ObjectiveInputs {
                theta: t,
                main_adj: &adj,
                views: Some((&view1, &view2)),
                layers: 2,
            };
            combined_objective(&inputs, &batch, Some(&contrast), cfg)
                .unwrap()
                .0
                .total
        });
        assert_ok(&report, label);
    }
}
