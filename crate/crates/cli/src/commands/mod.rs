pub mod centrality;
pub mod evaluate;
pub mod fetch;
pub mod noise;
pub mod perturb;
pub mod robustness;
pub mod sweep;
pub mod synth;
pub mod theory;
pub mod train;
