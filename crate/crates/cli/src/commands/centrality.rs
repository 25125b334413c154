//! `sgcl centrality`: betweenness scores and importance strata for a graph.

use anyhow::{bail, Result};
use clap::Args;

use sgcl_core::centrality::{betweenness, stratify, StratumLevel, DEFAULT_FRACTIONS};

use crate::artifacts::{csv_table, manifest, RunDir};
use crate::config::{load_dataset, Overrides, RunConfig};

#[derive(Debug, Args)]
pub struct CentralityArgs {
    #[command(flatten)]
    pub common: Overrides,
    /// Cumulative rank fractions for the Highest/High/Middle cutoffs.
    #[arg(long, value_delimiter = ',', num_args = 3, value_name = "F1,F2,F3")]
    pub fractions: Option<Vec<f64>>,
}

pub fn fractions_of(args: &Option<Vec<f64>>) -> Result<(f64, f64, f64)> {
    match args {
        None => Ok(DEFAULT_FRACTIONS),
        Some(v) if v.len() == 3 => Ok((v[0], v[1], v[2])),
        Some(v) => bail!("--fractions needs exactly three values, got {}", v.len()),
    }
}

pub fn run(cfg: &RunConfig, args: &CentralityArgs) -> Result<()> {
    let fractions = fractions_of(&args.fractions)?;
    let g = load_dataset(cfg)?;
    let scores = betweenness(&g);
    let strata = stratify(&scores.edge, fractions)?;

    let dir = RunDir::create(&cfg.output.dir)?;
    dir.write_json("manifest.json", &manifest("centrality", cfg))?;

    let edge_rows: Vec<Vec<String>> = g
        .edges()
        .iter()
        .enumerate()
        .map(|(k, &(u, i))| {
            vec![
                k.to_string(),
                u.to_string(),
                i.to_string(),
                scores.edge[k].to_string(),
                strata.levels[k].name().to_string(),
            ]
        })
        .collect();
    dir.write_text(
        "edge_centrality.csv",
        &csv_table("edge,user,item,betweenness,stratum", &edge_rows),
    )?;

    let m = g.num_users();
    let node_rows: Vec<Vec<String>> = scores
        .node
        .iter()
        .enumerate()
        .map(|(v, &score)| {
            let (kind, idx) = if v < m { ("user", v) } else { ("item", v - m) };
            vec![
                v.to_string(),
                kind.to_string(),
                idx.to_string(),
                score.to_string(),
            ]
        })
        .collect();
    dir.write_text(
        "node_centrality.csv",
        &csv_table("node,kind,index,betweenness", &node_rows),
    )?;

    let counts: Vec<(&str, usize)> = StratumLevel::ALL
        .iter()
        .map(|&l| (l.name(), strata.count(l)))
        .collect();
    dir.write_json(
        "summary.json",
        &serde_json::json!({
            "edges": g.num_edges(),
            "nodes": g.num_nodes(),
            "fractions": [fractions.0, fractions.1, fractions.2],
            "stratum_counts": counts.iter().cloned().collect::<std::collections::BTreeMap<_, _>>(),
        }),
    )?;

    for (name, count) in counts {
        println!("{name}: {count} edges");
    }
    println!("artifacts in {}", cfg.output.dir.display());
    Ok(())
}
