//! Shared fixtures for the criterion benchmarks.

use sgcl_core::synth::{generate_block_graph, SynthConfig};
use sgcl_core::InteractionGraph;

/// A two-cluster synthetic interaction graph sized for benchmarking.
pub fn bench_graph(num_users: usize, num_items: usize) -> InteractionGraph {
    let cfg = SynthConfig {
        num_users,
        num_items,
        within_density: 0.1,
        seed: 97,
        ..SynthConfig::default()
    };
    generate_block_graph(&cfg).expect("benchmark graph generation")
}
