//! `sgcl robustness`: symmetric vs softmax contrastive objective under
//! fabricated training edges.

use anyhow::Result;
use clap::Args;

use sgcl_core::analysis::inject_fake_edges;
use sgcl_core::evaluation::{evaluate_all, EmbeddingScorer};
use sgcl_core::losses::ContrastiveObjective;
use sgcl_core::trainer::{fit, quantize_to_checkpoint_precision};
use sgcl_core::InteractionGraph;

use crate::artifacts::{csv_table, manifest, RunDir};
use crate::config::{load_split, Overrides, RunConfig};

#[derive(Debug, Args)]
pub struct RobustnessArgs {
    #[command(flatten)]
    pub common: Overrides,
    /// Fraction of training edges replaced with fabricated ones.
    #[arg(long, default_value_t = 0.25)]
    pub ratio: f64,
    /// Training seeds averaged over.
    #[arg(long, value_delimiter = ',', default_values_t = [1, 2, 3])]
    pub seeds: Vec<u64>,
    /// Base seed for the fake-edge draws.
    #[arg(long, default_value_t = 0xAB0)]
    pub perturb_seed_base: u64,
}

fn recall(
    train: &InteractionGraph,
    test: &InteractionGraph,
    cfg: &RunConfig,
    objective: ContrastiveObjective,
    seed: u64,
) -> Result<f64> {
    let mut train_cfg = cfg.train.clone();
    train_cfg.seed = seed;
    train_cfg.loss.objective = objective;
    let result = fit(train, None, &train_cfg)?;
    let mut theta = result.theta;
    quantize_to_checkpoint_precision(&mut theta);
    let scorer = EmbeddingScorer { embeddings: &theta };
    let report = evaluate_all(&scorer, train, test, &cfg.train.eval_ks)?;
    Ok(*report.recall.last().expect("validated nonempty cutoffs"))
}

pub fn run(cfg: &RunConfig, args: &RobustnessArgs) -> Result<()> {
    let (train, test) = load_split(cfg)?;
    let k = *cfg
        .train
        .eval_ks
        .last()
        .expect("validated nonempty cutoffs");

    let mut rows = Vec::new();
    let mut mean_drops = Vec::new();
    for objective in [ContrastiveObjective::Scl, ContrastiveObjective::InfoNce] {
        let name = match objective {
            ContrastiveObjective::Scl => "scl",
            ContrastiveObjective::InfoNce => "infonce",
            ContrastiveObjective::None => "none",
        };
        let mut drop_sum = 0.0;
        for &seed in &args.seeds {
            let corrupted =
                inject_fake_edges(&train, args.ratio, args.perturb_seed_base + seed)?.graph;
            let clean = recall(&train, &test, cfg, objective, seed)?;
            let noisy = recall(&corrupted, &test, cfg, objective, seed)?;
            let drop = (clean - noisy) / clean;
            drop_sum += drop;
            rows.push(vec![
                name.to_string(),
                seed.to_string(),
                clean.to_string(),
                noisy.to_string(),
                drop.to_string(),
            ]);
            println!("{name} seed {seed}: clean {clean:.4} noisy {noisy:.4} drop {drop:+.2e}");
        }
        mean_drops.push((name, drop_sum / args.seeds.len() as f64));
    }

    let (scl_drop, infonce_drop) = (mean_drops[0].1, mean_drops[1].1);
    let dir = RunDir::create(&cfg.output.dir)?;
    dir.write_json("manifest.json", &manifest("robustness", cfg))?;
    dir.write_text(
        "robustness.csv",
        &csv_table(
            &format!("objective,seed,clean_recall@{k},noisy_recall@{k},relative_drop"),
            &rows,
        ),
    )?;
    dir.write_json(
        "summary.json",
        &serde_json::json!({
            "ratio": args.ratio,
            "cutoff": k,
            "scl_mean_drop": scl_drop,
            "infonce_mean_drop": infonce_drop,
            "scl_drop_le_infonce": scl_drop <= infonce_drop,
        }),
    )?;

    println!(
        "mean relative drop at {:.0}% fake edges: scl {:.2}% vs infonce {:.2}%",
        100.0 * args.ratio,
        100.0 * scl_drop,
        100.0 * infonce_drop
    );
    println!("artifacts in {}", cfg.output.dir.display());
    Ok(())
}
