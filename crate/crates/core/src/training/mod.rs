//! Losses, negative sampling, background pretraining and the alternating
//! optimization loop.

pub mod kgc;
pub mod negatives;
pub mod pretrain;
pub mod trainer;
pub mod warp;

pub use kgc::{kgc_loss, kgc_on_tape, kgc_pair_on_tape, KgcSample};
pub use negatives::NegativeSampler;
pub use pretrain::{
    background_triples, corrupt_tails, fit_transr, kgc_pass, pretrain_background, static_triples, PretrainConfig, TailPools, Triple,
};
pub use trainer::{
    ranking_loss_on_tape, target_steps, train, validation_recall, write_loss_csv, LossRecord, RankingData, RankingLoss, StepLoss,
    TrainConfig, TrainReport,
};
pub use warp::{harmonic, warp_loss, warp_on_tape, warp_rank, WarpConfig};
