//! `sgcl evaluate`: re-score a saved checkpoint against its recorded split.

use std::path::PathBuf;

use anyhow::{bail, Result};
use clap::Args;

use sgcl_core::evaluation::{evaluate_all, EmbeddingScorer};
use sgcl_core::trainer::load_checkpoint;

use crate::artifacts::{config_from_manifest, RunDir};
use crate::config::load_split;

#[derive(Debug, Args)]
pub struct EvaluateArgs {
    /// Directory written by `sgcl train`; its manifest names the dataset,
    /// split, and cutoffs to reuse.
    #[arg(value_name = "RUN_DIR")]
    pub run_dir: PathBuf,
    /// Checkpoint to score; defaults to `<run-dir>/checkpoint.bin`.
    #[arg(long, value_name = "FILE")]
    pub checkpoint: Option<PathBuf>,
}

pub fn run(args: &EvaluateArgs) -> Result<()> {
    let cfg = config_from_manifest(&args.run_dir)?;
    cfg.validate()?;
    let (train, test) = load_split(&cfg)?;
    if test.num_edges() == 0 {
        bail!("the recorded split has no test interactions to evaluate");
    }

    let ckpt_path = args
        .checkpoint
        .clone()
        .unwrap_or_else(|| args.run_dir.join("checkpoint.bin"));
    let theta = load_checkpoint(&ckpt_path)?;
    if theta.num_users() != train.num_users() || theta.num_items() != train.num_items() {
        bail!(
            "checkpoint holds {}x{} embeddings but the dataset has {} users and {} items",
            theta.num_users(),
            theta.num_items(),
            train.num_users(),
            train.num_items()
        );
    }

    let scorer = EmbeddingScorer { embeddings: &theta };
    let report = evaluate_all(&scorer, &train, &test, &cfg.train.eval_ks)?;
    let dir = RunDir::create(&args.run_dir)?;
    dir.write_text("eval_metrics.csv", &report.to_csv())?;

    for (idx, &k) in report.k_values.iter().enumerate() {
        println!(
            "recall@{k} {:.6}  precision@{k} {:.6}  ndcg@{k} {:.6}",
            report.recall[idx], report.precision[idx], report.ndcg[idx]
        );
    }
    println!("evaluated {} users", report.users_evaluated);
    Ok(())
}
