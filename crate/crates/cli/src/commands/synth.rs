//! `sgcl synth`: write the configured block-model graph as a dataset file.

use anyhow::Result;

use sgcl_core::synth::generate_block_graph;

use crate::artifacts::{manifest, RunDir};
use crate::config::RunConfig;

pub fn run(cfg: &RunConfig) -> Result<()> {
    let g = generate_block_graph(&cfg.synth)?;
    let dir = RunDir::create(&cfg.output.dir)?;

    let mut text = String::from("# synthetic block-model interactions: user item\n");
    for &(u, i) in g.edges() {
        text.push_str(&format!("{u}\t{i}\n"));
    }
    let path = dir.write_text("interactions.txt", &text)?;
    dir.write_json("manifest.json", &manifest("synth", cfg))?;

    println!(
        "wrote {} interactions ({} users, {} items) to {}",
        g.num_edges(),
        g.num_users(),
        g.num_items(),
        path.display()
    );
    Ok(())
}
