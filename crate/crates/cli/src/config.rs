//! Line-oriented `key = value` run configuration.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use rete::eval::EvalMode;
use rete::graph::{SegmentationMode, Split};
use rete::model::{ModelConfig, PoolMode};
use rete::rng::derive_seed;
use rete::sampler::{EnsembleConfig, KhopConfig, PprConfig, SamplerSpec};
use rete::training::{PretrainConfig, TrainConfig, WarpConfig};
use rete::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Window {
    Val,
    Test,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub events: PathBuf,
    pub triples: PathBuf,
    pub output: PathBuf,
    /// Optional file of `name=kind` action declarations added to the default schema.
    pub actions: Option<PathBuf>,
    pub steps: usize,
    pub split: Split,
    pub segmentation: SegmentationMode,
    pub kcore: usize,
    pub samplers: Vec<String>,
    pub ppr_alpha: f64,
    pub ppr_eps: Option<f64>,
    pub ppr_budget: usize,
    pub ppr_theta: f64,
    pub khop_k: usize,
    pub khop_budget: usize,
    pub dim: usize,
    pub layers: usize,
    pub pool: PoolMode,
    pub pretrain_epochs: usize,
    pub pretrain_lr: f64,
    pub epochs: usize,
    pub lr: f64,
    pub l2: f64,
    pub warp_margin: f64,
    pub warp_negatives: usize,
    pub kgc_margin: f64,
    pub kgc_batch: usize,
    pub user_batch: usize,
    pub early_stop: bool,
    pub patience: usize,
    pub stop_k: usize,
    pub k: Vec<usize>,
    pub seed: u64,
    pub eval_mode: EvalMode,
    pub eval_window: Window,
}

impl Default for RunConfig {
    fn default() -> Self {
        let warp = WarpConfig::default();
        let train = TrainConfig::default();
        let pretrain = PretrainConfig::default();
        let model = ModelConfig::default();
        let ppr = PprConfig::default();
        let khop = KhopConfig::default();
        let split = Split::default();
        RunConfig {
            events: "events.tsv".into(),
            triples: "triples.tsv".into(),
            output: "out".into(),
            actions: None,
            steps: split.total(),
            split,
            segmentation: SegmentationMode::EqualCount,
            kcore: 1,
            samplers: vec!["ppr".into(), "khop".into()],
            ppr_alpha: ppr.alpha,
            ppr_eps: ppr.eps,
            ppr_budget: ppr.budget,
            ppr_theta: ppr.theta,
            khop_k: khop.k,
            khop_budget: khop.budget,
            dim: model.dim,
            layers: model.layers,
            pool: model.pool,
            pretrain_epochs: pretrain.epochs,
            pretrain_lr: pretrain.lr,
            epochs: train.epochs,
            lr: train.lr,
            l2: train.l2,
            warp_margin: warp.margin,
            warp_negatives: warp.n_neg,
            kgc_margin: train.kgc_margin,
            kgc_batch: train.kgc_batch,
            user_batch: train.user_batch,
            early_stop: train.early_stop,
            patience: train.patience,
            stop_k: train.stop_k,
            k: vec![20],
            seed: 0,
            eval_mode: EvalMode::Frozen,
            eval_window: Window::Test,
        }
    }
}

fn bad(key: &str, value: &str, what: &str) -> Error {
    Error::Config(format!("{key} = {value}: expected {what}"))
}

fn num<T: std::str::FromStr>(key: &str, value: &str, what: &str) -> Result<T> {
    value.parse().map_err(|_| bad(key, value, what))
}

fn list(key: &str, value: &str) -> Result<Vec<usize>> {
    value.split(',').map(|s| num(key, s.trim(), "a comma-separated list of integers")).collect()
}

fn join<T: ToString>(xs: &[T]) -> String {
    xs.iter().map(ToString::to_string).collect::<Vec<_>>().join(",")
}

impl RunConfig {
    pub fn set(&mut self, key: &str, value: &str) -> Result<()> {
        let v = value.trim();
        match key {
            "events" => self.events = v.into(),
            "triples" => self.triples = v.into(),
            "output" => self.output = v.into(),
            "actions" => self.actions = if v.is_empty() || v == "default" { None } else { Some(v.into()) },
            "steps" => self.steps = num(key, v, "an integer")?,
            "split" => {
                let p = list(key, v)?;
                if p.len() != 4 {
                    return Err(bad(key, v, "four counts background,train,val,test"));
                }
                self.split = Split { background: p[0], train: p[1], val: p[2], test: p[3] };
            }
            "segmentation" => {
                self.segmentation = match v {
                    "equal-count" => SegmentationMode::EqualCount,
                    "equal-duration" => SegmentationMode::EqualDuration,
                    _ => return Err(bad(key, v, "equal-count or equal-duration")),
                }
            }
            "kcore" => self.kcore = num(key, v, "an integer")?,
            "samplers" => {
                let names: Vec<String> = v.split(',').map(|s| s.trim().to_string()).collect();
                if names.iter().any(|n| n != "ppr" && n != "khop") {
                    return Err(bad(key, v, "a list of ppr and khop"));
                }
                self.samplers = names;
            }
            "ppr.alpha" => self.ppr_alpha = num(key, v, "a number")?,
            "ppr.eps" => self.ppr_eps = if v == "auto" { None } else { Some(num(key, v, "a number or auto")?) },
            "ppr.budget" => self.ppr_budget = num(key, v, "an integer")?,
            "ppr.theta" => self.ppr_theta = num(key, v, "a number")?,
            "khop.k" => self.khop_k = num(key, v, "an integer")?,
            "khop.budget" => self.khop_budget = num(key, v, "an integer")?,
            "dim" => self.dim = num(key, v, "an integer")?,
            "layers" => self.layers = num(key, v, "an integer")?,
            "pool" => self.pool = v.parse()?,
            "pretrain.epochs" => self.pretrain_epochs = num(key, v, "an integer")?,
            "pretrain.lr" => self.pretrain_lr = num(key, v, "a number")?,
            "epochs" => self.epochs = num(key, v, "an integer")?,
            "lr" => self.lr = num(key, v, "a number")?,
            "l2" => self.l2 = num(key, v, "a number")?,
            "warp.margin" => self.warp_margin = num(key, v, "a number")?,
            "warp.negatives" => self.warp_negatives = num(key, v, "an integer")?,
            "kgc.margin" => self.kgc_margin = num(key, v, "a number")?,
            "kgc.batch" => self.kgc_batch = num(key, v, "an integer")?,
            "user_batch" => self.user_batch = num(key, v, "an integer")?,
            "early_stop" => self.early_stop = num(key, v, "true or false")?,
            "patience" => self.patience = num(key, v, "an integer")?,
            "stop_k" => self.stop_k = num(key, v, "an integer")?,
            "k" => self.k = list(key, v)?,
            "seed" => self.seed = num(key, v, "an unsigned integer")?,
            "eval.mode" => self.eval_mode = v.parse()?,
            "eval.window" => {
                self.eval_window = match v {
                    "val" => Window::Val,
                    "test" => Window::Test,
                    _ => return Err(bad(key, v, "val or test")),
                }
            }
            _ => return Err(Error::Config(format!("unknown key '{key}'"))),
        }
        Ok(())
    }

    /// Applies `key = value` lines on top of the current values. Blank
    /// lines and `#` comments are ignored.
    pub fn apply_text(&mut self, text: &str, origin: &Path) -> Result<()> {
        for (i, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (key, value) = line.split_once('=').ok_or_else(|| Error::Parse {
                path: origin.to_path_buf(),
                line: i + 1,
                message: format!("expected 'key = value', found '{line}'"),
            })?;
            let key = key.trim();
            self.set(key, value).map_err(|e| match e {
                Error::Config(message) => Error::Parse { path: origin.to_path_buf(), line: i + 1, message },
                other => other,
            })?;
            self.resolve(key, origin.parent().unwrap_or(Path::new("")));
        }
        Ok(())
    }

    /// Relative paths read from a file are taken relative to that file.
    fn resolve(&mut self, key: &str, base: &Path) {
        let slot = match key {
            "events" => &mut self.events,
            "triples" => &mut self.triples,
            "output" => &mut self.output,
            "actions" => match &mut self.actions {
                Some(p) => p,
                None => return,
            },
            _ => return,
        };
        if slot.is_relative() {
            *slot = base.join(&*slot);
        }
    }

    #[cfg(test)]
    pub fn parse(text: &str) -> Result<Self> {
        let mut c = Self::default();
        c.apply_text(text, Path::new("<config>"))?;
        Ok(c)
    }

    /// Applies a `key=value` override.
    pub fn apply_override(&mut self, kv: &str) -> Result<()> {
        let (k, v) = kv
            .split_once('=')
            .ok_or_else(|| Error::Config(format!("override '{kv}' is not key=value")))?;
        self.set(k.trim(), v)
    }

    /// Every key in a fixed order.
    pub fn canonical(&self) -> String {
        let mut s = String::new();
        let s_ = &mut s;
        let mut put = |k: &str, v: String| writeln!(s_, "{k} = {v}").unwrap();
        put("events", self.events.display().to_string());
        put("triples", self.triples.display().to_string());
        put("output", self.output.display().to_string());
        put("actions", self.actions.as_ref().map_or("default".into(), |p| p.display().to_string()));
        put("steps", self.steps.to_string());
        let sp = self.split;
        put("split", join(&[sp.background, sp.train, sp.val, sp.test]));
        put(
            "segmentation",
            match self.segmentation {
                SegmentationMode::EqualCount => "equal-count",
                SegmentationMode::EqualDuration => "equal-duration",
            }
            .into(),
        );
        put("kcore", self.kcore.to_string());
        put("samplers", self.samplers.join(","));
        put("ppr.alpha", self.ppr_alpha.to_string());
        put("ppr.eps", self.ppr_eps.map_or("auto".into(), |e| e.to_string()));
        put("ppr.budget", self.ppr_budget.to_string());
        put("ppr.theta", self.ppr_theta.to_string());
        put("khop.k", self.khop_k.to_string());
        put("khop.budget", self.khop_budget.to_string());
        put("dim", self.dim.to_string());
        put("layers", self.layers.to_string());
        put("pool", self.pool.to_string());
        put("pretrain.epochs", self.pretrain_epochs.to_string());
        put("pretrain.lr", self.pretrain_lr.to_string());
        put("epochs", self.epochs.to_string());
        put("lr", self.lr.to_string());
        put("l2", self.l2.to_string());
        put("warp.margin", self.warp_margin.to_string());
        put("warp.negatives", self.warp_negatives.to_string());
        put("kgc.margin", self.kgc_margin.to_string());
        put("kgc.batch", self.kgc_batch.to_string());
        put("user_batch", self.user_batch.to_string());
        put("early_stop", self.early_stop.to_string());
        put("patience", self.patience.to_string());
        put("stop_k", self.stop_k.to_string());
        put("k", join(&self.k));
        put("seed", self.seed.to_string());
        put("eval.mode", self.eval_mode.to_string());
        put(
            "eval.window",
            match self.eval_window {
                Window::Val => "val",
                Window::Test => "test",
            }
            .into(),
        );
        s
    }

    pub fn validate(&self) -> Result<()> {
        if self.split.total() != self.steps {
            return Err(Error::Config(format!(
                "split {}/{}/{}/{} does not sum to steps = {}",
                self.split.background, self.split.train, self.split.val, self.split.test, self.steps
            )));
        }
        if self.kcore == 0 {
            return Err(Error::Config("kcore must be at least 1".into()));
        }
        if self.k.is_empty() || self.k.contains(&0) {
            return Err(Error::Config("k must list positive cutoffs".into()));
        }
        self.ensemble()?.validate()?;
        self.model()?.validate()?;
        self.train()?.validate()
    }

    pub fn ensemble(&self) -> Result<EnsembleConfig> {
        if self.samplers.is_empty() {
            return Err(Error::Config("samplers must not be empty".into()));
        }
        let samplers = self
            .samplers
            .iter()
            .map(|name| match name.as_str() {
                "ppr" => SamplerSpec::Ppr(PprConfig {
                    alpha: self.ppr_alpha,
                    eps: self.ppr_eps,
                    budget: self.ppr_budget,
                    theta: self.ppr_theta,
                    keep_disconnected: false,
                }),
                _ => SamplerSpec::Khop(KhopConfig { k: self.khop_k, budget: self.khop_budget, seed: 0 }),
            })
            .collect();
        Ok(EnsembleConfig { samplers })
    }

    pub fn model(&self) -> Result<ModelConfig> {
        Ok(ModelConfig {
            dim: self.dim,
            layers: self.layers,
            samplers: self.samplers.len(),
            pool: self.pool,
            ..ModelConfig::default()
        })
    }

    pub fn pretrain(&self) -> PretrainConfig {
        PretrainConfig {
            epochs: self.pretrain_epochs,
            lr: self.pretrain_lr,
            margin: self.kgc_margin,
            batch: self.kgc_batch,
            seed: derive_seed(self.seed, "cli.pretrain"),
            ..PretrainConfig::default()
        }
    }

    pub fn train(&self) -> Result<TrainConfig> {
        Ok(TrainConfig {
            epochs: self.epochs,
            lr: self.lr,
            l2: self.l2,
            warp: WarpConfig { margin: self.warp_margin, n_neg: self.warp_negatives },
            kgc_margin: self.kgc_margin,
            kgc_batch: self.kgc_batch,
            user_batch: self.user_batch,
            early_stop: self.early_stop,
            patience: self.patience,
            stop_k: self.stop_k,
            seed: derive_seed(self.seed, "cli.train"),
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_round_trip() {
        let c = RunConfig::default();
        assert_eq!(RunConfig::parse(&c.canonical()).unwrap(), c);
        c.validate().unwrap();
    }

    #[test]
    fn comments_and_spacing_are_ignored() {
        let c = RunConfig::parse("# run\n  dim=16   \nk = 5, 20 # two cutoffs\n").unwrap();
        assert_eq!(c.dim, 16);
        assert_eq!(c.k, vec![5, 20]);
    }

    #[test]
    fn unknown_key_names_the_line() {
        let err = RunConfig::parse("dim = 8\ndimm = 8\n").unwrap_err();
        assert!(err.to_string().contains(":2:"), "{err}");
        assert!(err.to_string().contains("dimm"));
    }
}
