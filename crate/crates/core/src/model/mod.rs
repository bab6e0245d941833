//! Structural attention over subgraphs, causal temporal attention, TransR
//! scoring and the infinite-depth signature.

pub mod config;
pub mod forward;
pub mod params;
pub mod signature;
pub mod structural;
pub mod temporal;
pub mod transr;

pub use config::{Activation, ModelConfig, PoolMode};
pub use forward::{trajectory, trajectory_value, write_attention_csv};
pub use params::{GatParams, ModelParams, TemporalParams};
pub use signature::{infinite_depth_signature, perron_vector};
pub use structural::{
    attention_mask, fuse_subgraphs, gat_layer, gat_layer_weights, step_representation, structural_pool, subgraph_representation,
};
pub use temporal::{temporal_attention, temporal_output, temporal_weights};
pub use transr::{relevance, transr_on_tape, transr_score, transr_triple};
