//! Recall@K and NDCG@K, ground truth, and frozen or auto-regressive
//! evaluation over a window of steps.

pub mod evaluate;
pub mod metrics;
pub mod truth;

pub use evaluate::{evaluate, Aggregate, EvalMode, MetricsReport, Predictor, StepRecord, UserScore};
pub use metrics::{ndcg_at_k, rank_by_score, recall_at_k};
pub use truth::{GroundTruth, Task};
