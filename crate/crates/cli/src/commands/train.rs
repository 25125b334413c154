//! `sgcl train`: fit the model and write every artifact of the run.

use anyhow::{Context, Result};

use sgcl_core::encoder::init_embeddings;
use sgcl_core::evaluation::{evaluate_all, EmbeddingScorer};
use sgcl_core::trainer::{fit, history_csv, quantize_to_checkpoint_precision, save_checkpoint};

use crate::artifacts::{manifest, RunDir};
use crate::config::{load_split, RunConfig};

pub fn run(cfg: &RunConfig) -> Result<()> {
    let (train, test) = load_split(cfg)?;
    let dir = RunDir::create(&cfg.output.dir)?;
    dir.write_json("manifest.json", &manifest("train", cfg))?;

    if cfg.train.epochs == 0 {
        let mut theta = init_embeddings(
            train.num_users(),
            train.num_items(),
            cfg.train.encoder.dim,
            cfg.train.seed,
        );
        quantize_to_checkpoint_precision(&mut theta);
        let path = dir.path("checkpoint.bin");
        save_checkpoint(&theta, &path).context("writing checkpoint")?;
        println!(
            "no epochs requested; wrote initial embeddings to {}",
            path.display()
        );
        return Ok(());
    }

    let held_out = (test.num_edges() > 0).then_some(&test);
    let result = fit(&train, held_out, &cfg.train)?;
    let mut theta = result.theta;
    quantize_to_checkpoint_precision(&mut theta);
    save_checkpoint(&theta, &dir.path("checkpoint.bin")).context("writing checkpoint")?;
    dir.write_text("history.csv", &history_csv(&result.history))?;

    let report = match held_out {
        Some(test) => {
            let scorer = EmbeddingScorer { embeddings: &theta };
            let report = evaluate_all(&scorer, &train, test, &cfg.train.eval_ks)?;
            dir.write_text("metrics.csv", &report.to_csv())?;
            Some(report)
        }
        None => None,
    };

    dir.write_json(
        "summary.json",
        &serde_json::json!({
            "epochs_run": result.history.len(),
            "stopped_early": result.stopped_early,
            "final_loss": result.history.last().map(|h| h.total),
            "metrics": report,
        }),
    )?;

    if let Some(last) = result.history.last() {
        println!(
            "trained {} epochs (final loss {:.6})",
            last.epoch + 1,
            last.total
        );
    }
    if let Some(report) = &report {
        for (idx, &k) in report.k_values.iter().enumerate() {
            println!(
                "recall@{k} {:.6}  precision@{k} {:.6}  ndcg@{k} {:.6}",
                report.recall[idx], report.precision[idx], report.ndcg[idx]
            );
        }
    }
    println!("artifacts in {}", cfg.output.dir.display());
    Ok(())
}
