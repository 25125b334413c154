//! `sgcl sweep`: one seeded run per point of a hyperparameter grid.

use anyhow::Result;

use sgcl_core::evaluation::{evaluate_all, EmbeddingScorer, EvalReport};
use sgcl_core::trainer::{fit, quantize_to_checkpoint_precision, TrainConfig};
use sgcl_core::InteractionGraph;

use crate::artifacts::{csv_table, manifest, RunDir};
use crate::config::{load_split, RunConfig};

/// One grid point: the hyperparameter values applied to the base config.
#[derive(Debug, Clone)]
struct Point {
    p: f64,
    beta: f64,
    lambda: f64,
    tau: f64,
    dim: usize,
    layers: usize,
    rate: f64,
}

fn grid(cfg: &RunConfig) -> Vec<Point> {
    fn axis<T: Copy>(values: &[T], base: T) -> Vec<T> {
        if values.is_empty() {
            vec![base]
        } else {
            values.to_vec()
        }
    }
    let s = &cfg.sweep;
    let t = &cfg.train;
    let mut points = Vec::new();
    for &p in &axis(&s.p, t.loss.p) {
        for &beta in &axis(&s.beta, t.loss.beta) {
            for &lambda in &axis(&s.lambda, t.loss.lambda) {
                for &tau in &axis(&s.tau, t.loss.tau) {
                    for &dim in &axis(&s.dim, t.encoder.dim) {
                        for &layers in &axis(&s.layers, t.encoder.layers) {
                            for &rate in &axis(&s.rate, t.augment.rate) {
                                points.push(Point {
                                    p,
                                    beta,
                                    lambda,
                                    tau,
                                    dim,
                                    layers,
                                    rate,
                                });
                            }
                        }
                    }
                }
            }
        }
    }
    points
}

fn apply(base: &TrainConfig, point: &Point) -> TrainConfig {
    let mut cfg = base.clone();
    cfg.loss.p = point.p;
    cfg.loss.beta = point.beta;
    cfg.loss.lambda = point.lambda;
    cfg.loss.tau = point.tau;
    cfg.encoder.dim = point.dim;
    cfg.encoder.layers = point.layers;
    cfg.augment.rate = point.rate;
    cfg
}

fn run_point(
    train: &InteractionGraph,
    test: &InteractionGraph,
    cfg: &TrainConfig,
    eval_ks: &[usize],
) -> Result<EvalReport> {
    cfg.validate()?;
    let result = fit(train, None, cfg)?;
    let mut theta = result.theta;
    quantize_to_checkpoint_precision(&mut theta);
    let scorer = EmbeddingScorer { embeddings: &theta };
    Ok(evaluate_all(&scorer, train, test, eval_ks)?)
}

/// CSV-safe rendering of a status message.
fn quoted(text: &str) -> String {
    format!("\"{}\"", text.replace('"', "\"\""))
}

pub fn run(cfg: &RunConfig) -> Result<()> {
    let (train, test) = load_split(cfg)?;
    let points = grid(cfg);

    let mut header = String::from("p,beta,lambda,tau,dim,layers,rate,seed");
    for k in &cfg.train.eval_ks {
        header.push_str(&format!(",recall@{k},ndcg@{k}"));
    }
    header.push_str(",status");

    let metric_cols = 2 * cfg.train.eval_ks.len();
    let mut rows = Vec::new();
    let mut failures = 0usize;
    for point in &points {
        let train_cfg = apply(&cfg.train, point);
        let mut row = vec![
            point.p.to_string(),
            point.beta.to_string(),
            point.lambda.to_string(),
            point.tau.to_string(),
            point.dim.to_string(),
            point.layers.to_string(),
            point.rate.to_string(),
            train_cfg.seed.to_string(),
        ];
        match run_point(&train, &test, &train_cfg, &cfg.train.eval_ks) {
            Ok(report) => {
                for idx in 0..report.k_values.len() {
                    row.push(report.recall[idx].to_string());
                    row.push(report.ndcg[idx].to_string());
                }
                row.push("ok".into());
                println!(
                    "p={} beta={} lambda={} tau={} dim={} layers={} rate={}: recall@{} {:.4}",
                    point.p,
                    point.beta,
                    point.lambda,
                    point.tau,
                    point.dim,
                    point.layers,
                    point.rate,
                    cfg.train.eval_ks.last().unwrap(),
                    report.recall.last().unwrap()
                );
            }
            Err(err) => {
                failures += 1;
                row.extend(std::iter::repeat_n(String::new(), metric_cols));
                row.push(quoted(&format!("error: {err:#}")));
                eprintln!("grid point failed: {err:#}");
            }
        }
        rows.push(row);
    }

    let dir = RunDir::create(&cfg.output.dir)?;
    dir.write_json("manifest.json", &manifest("sweep", cfg))?;
    dir.write_text("sweep.csv", &csv_table(&header, &rows))?;
    println!(
        "swept {} grid points ({} failed); artifacts in {}",
        points.len(),
        failures,
        cfg.output.dir.display()
    );
    Ok(())
}
