//! The alternating loop: one completion pass over the product graph, then
//! one ranking pass over the training steps, per epoch.

use std::io::Write;
use std::ops::Range;

use rand::seq::SliceRandom;

use crate::error::{Error, Result};
use crate::eval::{evaluate, EvalMode, GroundTruth, Predictor, Task};
use crate::graph::{Dataset, EntityId};
use crate::model::{temporal_attention, trajectory, ModelConfig, ModelParams};
use crate::numcore::{adam_step, AdamConfig, ParameterStore, Tape, Var};
use crate::rng::{derive_seed, mix, rng_from};
use crate::sampler::SubgraphCache;
use crate::training::negatives::NegativeSampler;
use crate::training::pretrain::{corrupt_tails, kgc_pass, static_triples, TailPools};
use crate::training::warp::{warp_on_tape, WarpConfig};

#[derive(Debug, Clone, PartialEq)]
pub struct TrainConfig {
    pub epochs: usize,
    pub lr: f64,
    pub l2: f64,
    pub warp: WarpConfig,
    pub kgc_margin: f64,
    pub kgc_batch: usize,
    /// Users per Adam step of the ranking pass.
    pub user_batch: usize,
    pub early_stop: bool,
    pub patience: usize,
    /// Cutoff of the validation product recall used for early stopping.
    pub stop_k: usize,
    pub seed: u64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            epochs: 50,
            lr: 1e-3,
            l2: 0.005,
            warp: WarpConfig::default(),
            kgc_margin: 1.0,
            kgc_batch: 256,
            user_batch: 32,
            early_stop: true,
            patience: 5,
            stop_k: 20,
            seed: 0,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        self.warp.validate()?;
        if !(self.lr > 0.0) {
            return Err(Error::Config(format!("learning rate must be positive, got {}", self.lr)));
        }
        if !(self.l2 >= 0.0) {
            return Err(Error::Config(format!("l2 weight must be non-negative, got {}", self.l2)));
        }
        if !(self.kgc_margin > 0.0) {
            return Err(Error::Config(format!("kgc margin must be positive, got {}", self.kgc_margin)));
        }
        if self.user_batch == 0 || self.kgc_batch == 0 {
            return Err(Error::Config("batch sizes must be positive".into()));
        }
        if self.early_stop && (self.patience == 0 || self.stop_k == 0) {
            return Err(Error::Config("early stopping needs positive patience and cutoff".into()));
        }
        Ok(())
    }
}

/// Per-epoch component losses. `l_p` and `l_q` are means over positives,
/// `l_kgc` the mean over triples, `l2` the mean penalty across batches.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LossRecord {
    pub epoch: usize,
    pub l_p: f64,
    pub l_q: f64,
    pub l_kgc: f64,
    pub l2: f64,
    pub total: f64,
}

pub fn write_loss_csv<W: Write>(out: &mut W, history: &[LossRecord]) -> std::io::Result<()> {
    writeln!(out, "epoch,L_p,L_q,L_KGC,L2,total")?;
    for r in history {
        writeln!(out, "{},{},{},{},{},{}", r.epoch, r.l_p, r.l_q, r.l_kgc, r.l2, r.total)?;
    }
    Ok(())
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrainReport {
    pub history: Vec<LossRecord>,
    /// Validation product recall after each epoch, when early stopping.
    pub validation: Vec<f64>,
    /// Epoch whose parameters were kept (the last one without early stopping).
    pub best_epoch: Option<usize>,
    pub stopped_early: bool,
}

/// Everything the ranking loss reads besides the parameters.
pub struct RankingData<'a> {
    pub data: &'a Dataset,
    pub cache: &'a SubgraphCache,
    pub truth: &'a GroundTruth,
    pub cfg: &'a ModelConfig,
}

/// Summed WARP losses of one user at one target step.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StepLoss {
    pub user: EntityId,
    pub step: usize,
    pub product: f64,
    pub query: f64,
    pub n_product: usize,
    pub n_query: usize,
}

pub struct RankingLoss {
    /// `L_p + L_q` on the tape.
    pub total: Var,
    pub l_p: f64,
    pub l_q: f64,
    pub steps: Vec<StepLoss>,
}

fn pools(data: &Dataset) -> [NegativeSampler; 2] {
    [
        NegativeSampler::new(data.entities().products.clone()),
        NegativeSampler::new(data.entities().queries.clone()),
    ]
}

/// Target steps of the ranking pass: every training step after the first,
/// which only serves as context.
pub fn target_steps(data: &Dataset) -> Range<usize> {
    let r = data.segmentation.split.train_range();
    (r.start + 1).min(r.end)..r.end
}

/// WARP losses for `users` at each step of `targets`, each predicted from
/// the trajectory before it. Negatives for (user, step, task) are seeded
/// from `neg_seed`. Returns `None` when no positive is found.
pub fn ranking_loss_on_tape(
    tape: &mut Tape,
    store: &ParameterStore,
    params: &ModelParams,
    rd: &RankingData<'_>,
    users: &[EntityId],
    targets: Range<usize>,
    warp: &WarpConfig,
    neg_seed: u64,
) -> Result<Option<RankingLoss>> {
    let first = rd.data.segmentation.split.background;
    if targets.start <= first {
        return Err(Error::Config(format!("target step {} has no context after step {first}", targets.start)));
    }
    let pools = pools(rd.data);
    let mut parts: [Vec<Var>; 2] = [Vec::new(), Vec::new()];
    let mut steps = Vec::new();
    for &user in users {
        let has_truth = targets.clone().any(|t| Task::ALL.iter().any(|&k| !rd.truth.get(user, t, k).is_empty()));
        if !has_truth {
            continue;
        }
        let h = trajectory(tape, store, params, rd.cfg, rd.cache, user, first..targets.end - 1)?;
        for t in targets.clone() {
            let positives = [rd.truth.get(user, t, Task::Product), rd.truth.get(user, t, Task::Query)];
            if positives.iter().all(|p| p.is_empty()) {
                continue;
            }
            let (intent, _) = temporal_attention(tape, store, &params.temporal, h, t - 1 - first)?;
            let mut rec = StepLoss {
                user,
                step: t,
                product: 0.0,
                query: 0.0,
                n_product: 0,
                n_query: 0,
            };
            for (k, pos) in positives.iter().enumerate() {
                let mut rng = rng_from(mix(neg_seed, &[u64::from(user.0), t as u64, k as u64]));
                for &p in pos.iter() {
                    let negs = pools[k].draw(&mut rng, warp.n_neg, pos);
                    if negs.is_empty() {
                        continue;
                    }
                    let rows: Vec<usize> = std::iter::once(p).chain(negs).map(EntityId::index).collect();
                    let items = tape.param_rows(store, params.emb, &rows)?;
                    let l = warp_on_tape(tape, intent, items, warp.margin)?;
                    let v = tape.value(l).item();
                    if k == 0 {
                        rec.product += v;
                        rec.n_product += 1;
                    } else {
                        rec.query += v;
                        rec.n_query += 1;
                    }
                    parts[k].push(l);
                }
            }
            steps.push(rec);
        }
    }
    if parts.iter().all(Vec::is_empty) {
        return Ok(None);
    }
    let mut means = [0.0; 2];
    let mut terms = Vec::new();
    for (k, p) in parts.iter().enumerate() {
        if p.is_empty() {
            continue;
        }
        let stacked = tape.stack_rows(p)?;
        let s = tape.sum(stacked);
        let m = tape.scale(s, 1.0 / p.len() as f64);
        means[k] = tape.value(m).item();
        terms.push(m);
    }
    let total = if terms.len() == 2 { tape.add(terms[0], terms[1])? } else { terms[0] };
    Ok(Some(RankingLoss {
        total,
        l_p: means[0],
        l_q: means[1],
        steps,
    }))
}

fn non_finite(component: &'static str, at: String) -> Error {
    Error::NonFiniteLoss { component, at }
}

/// Validation product recall at `k` with frozen context.
pub fn validation_recall(
    rd: &RankingData<'_>,
    store: &ParameterStore,
    params: &ModelParams,
    k: usize,
) -> Result<f64> {
    let pred = Predictor {
        data: rd.data,
        cache: rd.cache,
        store,
        params,
        cfg: rd.cfg,
    };
    let split = rd.data.segmentation.split;
    let report = evaluate(&pred, rd.truth, split.val_range(), &[k], EvalMode::Frozen)?;
    Ok(report.recall(Task::Product, k))
}

/// Runs the alternating loop and, with early stopping, restores the
/// parameters of the best validation epoch.
pub fn train(
    rd: &RankingData<'_>,
    store: &mut ParameterStore,
    params: &ModelParams,
    cfg: &TrainConfig,
) -> Result<TrainReport> {
    cfg.validate()?;
    let data = rd.data;
    let split = data.segmentation.split;
    let targets = target_steps(data);
    if targets.is_empty() {
        return Err(Error::Empty("training steps after the first"));
    }
    let early_stop = cfg.early_stop && split.val > 0;
    let mut users: Vec<EntityId> = rd.truth.users_in(targets.clone()).into_iter().collect();
    if users.is_empty() {
        return Err(Error::Empty("training interactions"));
    }
    let statics = static_triples(data);
    let tails = TailPools::from_dataset(data);
    let adam = AdamConfig {
        lr: cfg.lr,
        ..AdamConfig::default()
    };
    let rank_ids = params.ranking_ids();
    let kgc_seed = derive_seed(cfg.seed, "train.kgc");
    let neg_seed = derive_seed(cfg.seed, "train.negatives");
    let order_seed = derive_seed(cfg.seed, "train.order");

    let mut report = TrainReport {
        history: Vec::with_capacity(cfg.epochs),
        validation: Vec::new(),
        best_epoch: None,
        stopped_early: false,
    };
    let mut best: Option<(f64, ParameterStore)> = None;
    let mut wait = 0;
    let mut tape = Tape::new();
    for epoch in 0..cfg.epochs {
        let mut l_kgc = 0.0;
        if !statics.is_empty() {
            let samples = corrupt_tails(&statics, &tails, mix(kgc_seed, &[epoch as u64]));
            if !samples.is_empty() {
                l_kgc = kgc_pass(store, params, &samples, cfg.kgc_margin, cfg.kgc_batch, &adam)
                    .map_err(|e| match e {
                        Error::NonFiniteLoss { component, at } => non_finite(component, format!("epoch {epoch}, {at}")),
                        e => e,
                    })?
                    / samples.len() as f64;
            }
        }

        users.shuffle(&mut rng_from(mix(order_seed, &[epoch as u64])));
        let (mut sum_p, mut sum_q, mut sum_l2, mut batches) = (0.0, 0.0, 0.0, 0usize);
        let epoch_seed = mix(neg_seed, &[epoch as u64]);
        for (b, chunk) in users.chunks(cfg.user_batch).enumerate() {
            tape.clear();
            store.zero_grads();
            let Some(loss) = ranking_loss_on_tape(&mut tape, store, params, rd, chunk, targets.clone(), &cfg.warp, epoch_seed)? else {
                continue;
            };
            let at = || format!("epoch {epoch}, batch {b}");
            if !loss.l_p.is_finite() {
                return Err(non_finite("L_p", at()));
            }
            if !loss.l_q.is_finite() {
                return Err(non_finite("L_q", at()));
            }
            tape.backward(loss.total, store)?;
            let l2 = cfg.l2 * store.sum_sq(&rank_ids);
            if !l2.is_finite() {
                return Err(non_finite("L2", at()));
            }
            if cfg.l2 > 0.0 {
                for &id in &rank_ids {
                    let v = store.value(id).clone();
                    store.grad_mut(id).scaled_add_assign(&v, 2.0 * cfg.l2);
                }
            }
            adam_step(store, &rank_ids, &adam);
            sum_p += loss.l_p;
            sum_q += loss.l_q;
            sum_l2 += l2;
            batches += 1;
        }
        let n = batches.max(1) as f64;
        let (l_p, l_q, l2) = (sum_p / n, sum_q / n, sum_l2 / n);
        report.history.push(LossRecord {
            epoch: epoch + 1,
            l_p,
            l_q,
            l_kgc,
            l2,
            total: l_p + l_q + l_kgc + l2,
        });

        if early_stop {
            let v = validation_recall(rd, store, params, cfg.stop_k)?;
            report.validation.push(v);
            if best.as_ref().map_or(true, |(b, _)| v > *b) {
                best = Some((v, store.clone()));
                report.best_epoch = Some(epoch + 1);
                wait = 0;
            } else {
                wait += 1;
                if wait >= cfg.patience {
                    report.stopped_early = true;
                    break;
                }
            }
        } else {
            report.best_epoch = Some(epoch + 1);
        }
    }
    if let Some((_, b)) = best {
        store.load_values_from(&b)?;
    }
    Ok(report)
}
