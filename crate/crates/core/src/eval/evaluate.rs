use std::collections::BTreeMap;
use std::fmt;
use std::io::Write;
use std::ops::Range;
use std::str::FromStr;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::graph::{Dataset, EntityId, Registry};
use crate::eval::metrics::{ndcg_at_k, rank_by_score, recall_at_k};
use crate::eval::truth::{GroundTruth, Task};
use crate::model::{temporal_output, trajectory_value, ModelConfig, ModelParams};
use crate::numcore::{tensor::dot, ParameterStore, Tensor};
use crate::sampler::SubgraphCache;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum EvalMode {
    /// Every step of the window is predicted from the context before it.
    Frozen,
    /// Each realized step joins the context before the next is predicted.
    Autoregressive,
}

impl fmt::Display for EvalMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            EvalMode::Frozen => "frozen",
            EvalMode::Autoregressive => "autoregressive",
        })
    }
}

impl FromStr for EvalMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "frozen" => Ok(EvalMode::Frozen),
            "autoregressive" => Ok(EvalMode::Autoregressive),
            _ => Err(Error::Config(format!("unknown eval mode '{s}'"))),
        }
    }
}

/// Read-only view of a trained model for scoring.
pub struct Predictor<'a> {
    pub data: &'a Dataset,
    pub cache: &'a SubgraphCache,
    pub store: &'a ParameterStore,
    pub params: &'a ModelParams,
    pub cfg: &'a ModelConfig,
}

impl<'a> Predictor<'a> {
    fn first_step(&self) -> usize {
        self.data.segmentation.split.background
    }

    /// Trajectory rows for global steps `[first, end)`.
    pub fn trajectory(&self, user: EntityId, end: usize) -> Result<Tensor> {
        let first = self.first_step();
        if end <= first {
            return Err(Error::Config(format!(
                "no context: trajectory starts at step {first} but ends at {end}"
            )));
        }
        if user.index() >= self.data.num_entities() {
            return Err(Error::Unknown {
                kind: "user",
                id: user.0.to_string(),
            });
        }
        trajectory_value(self.store, self.params, self.cfg, self.cache, user, first..end)
    }

    /// Intent vector from the precomputed trajectory `h` using context
    /// steps `[first, ctx_end)`.
    pub fn intent_from(&self, h: &Tensor, ctx_end: usize) -> Result<Vec<f64>> {
        let first = self.first_step();
        if ctx_end <= first || ctx_end - first > h.rows() {
            return Err(Error::Config(format!("context end {ctx_end} outside the trajectory")));
        }
        let t = &self.params.temporal;
        let out = temporal_output(h, self.store.value(t.wq), self.store.value(t.wk), self.store.value(t.wv), ctx_end - first - 1)?;
        Ok(out.into_vec())
    }

    pub fn scores(&self, intent: &[f64], task: Task) -> (Vec<EntityId>, Vec<f64>) {
        let cands = self.data.entities().of(task.kind()).to_vec();
        let emb = self.store.value(self.params.emb);
        let s = cands.iter().map(|c| dot(intent, emb.row(c.index()))).collect();
        (cands, s)
    }

    pub fn rank(&self, intent: &[f64], task: Task) -> Vec<EntityId> {
        let (c, s) = self.scores(intent, task);
        rank_by_score(&c, &s)
    }

    /// Ranked products and queries after global step `j`.
    pub fn predict_next(&self, user: EntityId, j: usize) -> Result<(Vec<EntityId>, Vec<EntityId>)> {
        let h = self.trajectory(user, j + 1)?;
        let intent = self.intent_from(&h, j + 1)?;
        Ok((self.rank(&intent, Task::Product), self.rank(&intent, Task::Query)))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct StepRecord {
    pub task: Task,
    pub step: usize,
    pub k: usize,
    pub recall: f64,
    pub ndcg: f64,
    pub n_users: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Aggregate {
    pub task: Task,
    pub k: usize,
    pub recall: f64,
    pub ndcg: f64,
    /// Evaluated (user, step) pairs.
    pub n_pairs: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct UserScore {
    pub user: EntityId,
    pub step: usize,
    pub task: Task,
    pub k: usize,
    pub recall: f64,
    pub ndcg: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MetricsReport {
    pub mode: EvalMode,
    pub steps: Vec<usize>,
    pub records: Vec<StepRecord>,
    pub aggregates: Vec<Aggregate>,
    pub skipped_users: usize,
    #[serde(skip)]
    pub per_user: Vec<UserScore>,
}

impl Serialize for Task {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.serialize_str(self.as_str())
    }
}

impl MetricsReport {
    pub fn aggregate(&self, task: Task, k: usize) -> Option<&Aggregate> {
        self.aggregates.iter().find(|a| a.task == task && a.k == k)
    }

    pub fn recall(&self, task: Task, k: usize) -> f64 {
        self.aggregate(task, k).map_or(0.0, |a| a.recall)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report is serializable")
    }

    /// `user,step,task,k,recall,ndcg` rows.
    pub fn write_user_csv<W: Write>(&self, out: &mut W, registry: &Registry) -> std::io::Result<()> {
        writeln!(out, "user,step,task,k,recall,ndcg")?;
        for r in &self.per_user {
            writeln!(
                out,
                "{},{},{},{},{},{}",
                registry.name(r.user),
                r.step,
                r.task,
                r.k,
                r.recall,
                r.ndcg
            )?;
        }
        Ok(())
    }

    /// Rebuilds step records and aggregates from the per-user rows.
    pub fn recompute_from_users(per_user: &[UserScore]) -> (Vec<StepRecord>, Vec<Aggregate>) {
        let mut by_step: BTreeMap<(Task, usize, usize), (f64, f64, usize)> = BTreeMap::new();
        let mut by_task: BTreeMap<(Task, usize), (f64, f64, usize)> = BTreeMap::new();
        for r in per_user {
            let e = by_step.entry((r.task, r.step, r.k)).or_default();
            e.0 += r.recall;
            e.1 += r.ndcg;
            e.2 += 1;
            let a = by_task.entry((r.task, r.k)).or_default();
            a.0 += r.recall;
            a.1 += r.ndcg;
            a.2 += 1;
        }
        let records = by_step
            .into_iter()
            .map(|((task, step, k), (r, n, c))| StepRecord {
                task,
                step,
                k,
                recall: r / c as f64,
                ndcg: n / c as f64,
                n_users: c,
            })
            .collect();
        let aggregates = by_task
            .into_iter()
            .map(|((task, k), (r, n, c))| Aggregate {
                task,
                k,
                recall: r / c as f64,
                ndcg: n / c as f64,
                n_pairs: c,
            })
            .collect();
        (records, aggregates)
    }
}

/// Scores every known user on every step of `window` at each cutoff in
/// `ks`. Users are known when they interact in a background or training
/// step; others with truth in the window are skipped and counted.
pub fn evaluate(
    pred: &Predictor<'_>,
    truth: &GroundTruth,
    window: Range<usize>,
    ks: &[usize],
    mode: EvalMode,
) -> Result<MetricsReport> {
    if window.is_empty() {
        return Err(Error::Empty("evaluation window"));
    }
    if ks.is_empty() || ks.contains(&0) {
        return Err(Error::Config("cutoffs must be positive".into()));
    }
    let split = pred.data.segmentation.split;
    if window.start < split.background + 1 || window.end > pred.data.num_steps() {
        return Err(Error::Config(format!(
            "window {window:?} needs at least one context step after step {}",
            split.background
        )));
    }
    let known = truth.users_in(0..split.background + split.train);
    let present = truth.users_in(window.clone());
    let skipped_users = present.iter().filter(|u| !known.contains(u)).count();
    let mut per_user = Vec::new();
    for &user in present.iter().filter(|u| known.contains(u)) {
        let h = pred.trajectory(user, window.end - 1)?;
        let frozen = pred.intent_from(&h, window.start)?;
        for step in window.clone() {
            let intent = match mode {
                EvalMode::Frozen => frozen.clone(),
                EvalMode::Autoregressive if step == window.start => frozen.clone(),
                EvalMode::Autoregressive => pred.intent_from(&h, step)?,
            };
            for task in Task::ALL {
                let t = truth.get(user, step, task);
                if t.is_empty() {
                    continue;
                }
                let ranked = pred.rank(&intent, task);
                for &k in ks {
                    per_user.push(UserScore {
                        user,
                        step,
                        task,
                        k,
                        recall: recall_at_k(&ranked, t, k)?,
                        ndcg: ndcg_at_k(&ranked, t, k)?,
                    });
                }
            }
        }
    }
    if per_user.is_empty() {
        return Err(Error::Empty("ground truth for every evaluated user"));
    }
    let (records, aggregates) = MetricsReport::recompute_from_users(&per_user);
    Ok(MetricsReport {
        mode,
        steps: window.collect(),
        records,
        aggregates,
        skipped_users,
        per_user,
    })
}
