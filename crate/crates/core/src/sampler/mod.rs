//! Per-user subgraph retrieval: forward-push personalized PageRank, a
//! randomized k-hop expansion, and their ensemble.

pub mod cache;
pub mod ensemble;
pub mod khop;
pub mod ppr;
pub mod subgraph;

pub use cache::{sample_dataset, SubgraphCache};
pub use ensemble::{ensemble_sample, ensemble_sample_or_singleton, EnsembleConfig, SamplerSpec};
pub use khop::{khop_subgraph, KhopConfig};
pub use ppr::{approx_ppr, ppr_subgraph, PprConfig};
pub use subgraph::{SamplerTag, Subgraph};
