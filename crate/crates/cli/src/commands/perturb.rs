//! `sgcl perturb-experiment`: retrain under graph corruption and record
//! how ranking quality responds.

use anyhow::Result;
use clap::Args;

use sgcl_core::analysis::{inject_fake_edges, sparsify};
use sgcl_core::evaluation::{evaluate_all, EmbeddingScorer, EvalReport};
use sgcl_core::trainer::{fit, quantize_to_checkpoint_precision};
use sgcl_core::InteractionGraph;

use crate::artifacts::{csv_table, manifest, RunDir};
use crate::config::{load_split, Overrides, RunConfig};

#[derive(Debug, Args)]
pub struct PerturbArgs {
    #[command(flatten)]
    pub common: Overrides,
    /// Fractions of training edges to replace with fabricated ones.
    #[arg(long, value_delimiter = ',', default_values_t = [0.0, 0.1, 0.25])]
    pub fake_ratios: Vec<f64>,
    /// Fractions of training edges to keep when sparsifying.
    #[arg(long, value_delimiter = ',', num_args = 0..)]
    pub keep_fractions: Vec<f64>,
    /// Training seeds; each grid point runs once per seed.
    #[arg(long, value_delimiter = ',', default_values_t = [1, 2, 3])]
    pub seeds: Vec<u64>,
    /// Base seed for the perturbation draws.
    #[arg(long, default_value_t = 0xAB0)]
    pub perturb_seed_base: u64,
}

fn train_and_eval(
    train: &InteractionGraph,
    test: &InteractionGraph,
    cfg: &RunConfig,
    seed: u64,
) -> Result<EvalReport> {
    let mut train_cfg = cfg.train.clone();
    train_cfg.seed = seed;
    let result = fit(train, None, &train_cfg)?;
    let mut theta = result.theta;
    quantize_to_checkpoint_precision(&mut theta);
    let scorer = EmbeddingScorer { embeddings: &theta };
    Ok(evaluate_all(&scorer, train, test, &cfg.train.eval_ks)?)
}

fn metric_cells(report: &EvalReport) -> Vec<String> {
    let mut cells = Vec::new();
    for idx in 0..report.k_values.len() {
        cells.push(report.recall[idx].to_string());
        cells.push(report.ndcg[idx].to_string());
    }
    cells
}

pub fn run(cfg: &RunConfig, args: &PerturbArgs) -> Result<()> {
    let (train, test) = load_split(cfg)?;

    let mut header = String::from("kind,param,seed");
    for k in &cfg.train.eval_ks {
        header.push_str(&format!(",recall@{k},ndcg@{k}"));
    }

    let mut points: Vec<(&str, f64)> = args
        .fake_ratios
        .iter()
        .map(|&r| ("fake_edges", r))
        .collect();
    points.extend(args.keep_fractions.iter().map(|&f| ("sparsify", f)));

    let mut rows = Vec::new();
    for &(kind, param) in &points {
        for &seed in &args.seeds {
            let perturb_seed = args.perturb_seed_base + seed;
            let corrupted = match kind {
                "fake_edges" if param == 0.0 => train.clone(),
                "fake_edges" => inject_fake_edges(&train, param, perturb_seed)?.graph,
                _ => sparsify(&train, param, perturb_seed)?,
            };
            let report = train_and_eval(&corrupted, &test, cfg, seed)?;
            let mut row = vec![kind.to_string(), param.to_string(), seed.to_string()];
            row.extend(metric_cells(&report));
            rows.push(row);
            println!(
                "{kind} {param} seed {seed}: recall@{} {:.4}",
                cfg.train.eval_ks.last().unwrap(),
                report.recall.last().unwrap()
            );
        }
    }

    let dir = RunDir::create(&cfg.output.dir)?;
    dir.write_json("manifest.json", &manifest("perturb-experiment", cfg))?;
    dir.write_text("perturbation.csv", &csv_table(&header, &rows))?;
    println!("artifacts in {}", cfg.output.dir.display());
    Ok(())
}
