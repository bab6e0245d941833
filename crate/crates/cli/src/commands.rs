use std::fs;
use std::io::Write as _;
use std::path::{Path, PathBuf};

use rete::eval::{evaluate, GroundTruth, Predictor};
use rete::graph::{
    ingest_events_with, ingest_product_graph_with, k_core_filter, segment_time_with, ActionSchema, Dataset, EntityKind,
    HeadPolicy,
};
use rete::model::{write_attention_csv, ModelParams};
use rete::numcore::{checkpoint, ParameterStore};
use rete::rng::{derive_seed, rng_from};
use rete::sampler::{sample_dataset, SubgraphCache};
use rete::synthetic::{generate, PlantedConfig};
use rete::training::{pretrain_background, train as fit, write_loss_csv, RankingData};

use crate::config::{RunConfig, Window};

#[derive(Debug)]
pub struct Failure {
    pub code: &'static str,
    pub message: String,
}

impl Failure {
    pub fn new(code: &'static str, message: impl Into<String>) -> Self {
        Failure { code, message: message.into() }
    }
}

impl From<rete::Error> for Failure {
    fn from(e: rete::Error) -> Self {
        Failure::new(e.code(), e.to_string())
    }
}

type Outcome = Result<(), Failure>;

fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> Failure + '_ {
    move |e| Failure::new("io", format!("{}: {e}", path.display()))
}

fn write(path: &Path, bytes: &[u8]) -> Outcome {
    if let Some(dir) = path.parent() {
        fs::create_dir_all(dir).map_err(io_err(dir))?;
    }
    fs::write(path, bytes).map_err(io_err(path))
}

fn require(path: &Path, command: &str) -> Outcome {
    if path.exists() {
        Ok(())
    } else {
        Err(Failure::new(
            "missing-artifact",
            format!("{} not found; run `rete {command}` first", path.display()),
        ))
    }
}

fn graph_dir(cfg: &RunConfig) -> PathBuf {
    cfg.output.join("graph")
}

fn cache_path(cfg: &RunConfig) -> PathBuf {
    cfg.output.join("subgraphs.bin")
}

fn checkpoint_path(cfg: &RunConfig) -> PathBuf {
    cfg.output.join("model.ckpt")
}

fn load_dataset(cfg: &RunConfig) -> Result<Dataset, Failure> {
    let dir = graph_dir(cfg);
    require(&dir.join("segmentation.json"), "ingest")?;
    let data = Dataset::load(&dir)?;
    if data.num_steps() != cfg.steps || data.segmentation.split != cfg.split {
        return Err(Failure::new(
            "stale-artifact",
            format!("{} was built with a different split; rerun `rete ingest`", dir.display()),
        ));
    }
    Ok(data)
}

fn load_cache(cfg: &RunConfig) -> Result<SubgraphCache, Failure> {
    let path = cache_path(cfg);
    require(&path, "sample")?;
    Ok(SubgraphCache::load(&path)?)
}

fn load_model(cfg: &RunConfig) -> Result<(ParameterStore, ModelParams), Failure> {
    let path = checkpoint_path(cfg);
    require(&path, "train")?;
    let store = checkpoint::load(&path)?;
    let params = ModelParams::lookup(&store, &cfg.model()?)?;
    Ok((store, params))
}

pub fn ingest(cfg: &RunConfig) -> Outcome {
    let mut schema = ActionSchema::default();
    if let Some(path) = &cfg.actions {
        let text = fs::read_to_string(path).map_err(io_err(path))?;
        schema.parse_declarations(&text)?;
    }
    let log = ingest_events_with(&cfg.events, &schema)?;
    let (mut log, policy) = if cfg.kcore > 1 {
        (k_core_filter(&log, cfg.kcore), HeadPolicy::Skip)
    } else {
        (log, HeadPolicy::Register)
    };
    let graph = ingest_product_graph_with(&cfg.triples, &mut log, policy)?;
    let seg = segment_time_with(&log, cfg.steps, cfg.split, cfg.segmentation)?;
    let data = Dataset::new(&log, seg, graph.triples);
    data.save(&graph_dir(cfg))?;
    let s = data.stats();
    println!("#User\t{}", s.users);
    println!("#Product\t{}", s.products);
    println!("#Query\t{}", s.queries);
    println!("#Entity\t{}", s.entities);
    println!("#Triplet\t{}", s.triples);
    println!("#Product interactions\t{}", s.product_interactions);
    println!("#Query interactions\t{}", s.query_interactions);
    if graph.skipped > 0 {
        println!("skipped {} triples whose head was filtered out", graph.skipped);
    }
    Ok(())
}

pub fn sample(cfg: &RunConfig) -> Outcome {
    let data = load_dataset(cfg)?;
    let steps = cfg.split.background..data.num_steps();
    let cache = sample_dataset(&data, steps.clone(), &cfg.ensemble()?, derive_seed(cfg.seed, "cli.sample"))?;
    cache.save(&cache_path(cfg))?;
    println!(
        "sampled {} user-steps over steps {}..{} with {}",
        cache.len(),
        steps.start,
        steps.end,
        cfg.samplers.join("+")
    );
    Ok(())
}

pub fn train(cfg: &RunConfig) -> Outcome {
    let data = load_dataset(cfg)?;
    let cache = load_cache(cfg)?;
    let mcfg = cfg.model()?;
    let mut store = ParameterStore::new();
    let mut rng = rng_from(derive_seed(cfg.seed, "cli.init"));
    let params = ModelParams::init(&mut store, &mcfg, data.num_entities(), data.registry.num_relations(), &mut rng)?;
    let pre = pretrain_background(&data, &mut store, &params, &cfg.pretrain())?;
    let truth = GroundTruth::from_dataset(&data);
    let rd = RankingData { data: &data, cache: &cache, truth: &truth, cfg: &mcfg };
    let report = fit(&rd, &mut store, &params, &cfg.train()?)?;

    checkpoint::save(&store, &checkpoint_path(cfg))?;
    let mut csv = Vec::new();
    write_loss_csv(&mut csv, &report.history).map_err(io_err(&cfg.output))?;
    write(&cfg.output.join("loss.csv"), &csv)?;
    let mut pcsv = String::from("epoch,L_KGC\n");
    for (i, l) in pre.iter().enumerate() {
        pcsv.push_str(&format!("{},{l}\n", i + 1));
    }
    write(&cfg.output.join("pretrain.csv"), pcsv.as_bytes())?;
    let summary = serde_json::json!({
        "epochs_run": report.history.len(),
        "best_epoch": report.best_epoch,
        "stopped_early": report.stopped_early,
        "stop_k": cfg.stop_k,
        "validation_recall": report.validation,
    });
    write(
        &cfg.output.join("train.json"),
        serde_json::to_string_pretty(&summary).expect("json").as_bytes(),
    )?;
    if let Some(last) = report.history.last() {
        println!("trained {} epochs, final total loss {:.6}", report.history.len(), last.total);
    }
    if let Some(b) = report.best_epoch {
        println!("kept epoch {b}");
    }
    Ok(())
}

pub fn eval(cfg: &RunConfig, per_user: bool) -> Outcome {
    let data = load_dataset(cfg)?;
    let cache = load_cache(cfg)?;
    let (store, params) = load_model(cfg)?;
    let mcfg = cfg.model()?;
    let truth = GroundTruth::from_dataset(&data);
    let pred = Predictor { data: &data, cache: &cache, store: &store, params: &params, cfg: &mcfg };
    let (window, wname) = match cfg.eval_window {
        Window::Val => (cfg.split.val_range(), "val"),
        Window::Test => (cfg.split.test_range(), "test"),
    };
    let report = evaluate(&pred, &truth, window, &cfg.k, cfg.eval_mode)?;
    let stem = format!("{}-{wname}", cfg.eval_mode);
    write(&cfg.output.join(format!("metrics-{stem}.json")), report.to_json().as_bytes())?;
    if per_user {
        let mut csv = Vec::new();
        report.write_user_csv(&mut csv, &data.registry).map_err(io_err(&cfg.output))?;
        write(&cfg.output.join(format!("users-{stem}.csv")), &csv)?;
    }
    for a in &report.aggregates {
        println!("{}\tRecall@{}\t{:.4}\tNDCG@{}\t{:.4}", a.task, a.k, a.recall, a.k, a.ndcg);
    }
    if report.skipped_users > 0 {
        println!("skipped {} users unseen before the window", report.skipped_users);
    }
    Ok(())
}

fn file_safe(name: &str) -> String {
    name.chars().map(|c| if c.is_ascii_alphanumeric() || c == '-' || c == '_' { c } else { '_' }).collect()
}

pub fn export_attention(cfg: &RunConfig, user: &str, until: Option<usize>) -> Outcome {
    let data = load_dataset(cfg)?;
    let cache = load_cache(cfg)?;
    let (store, params) = load_model(cfg)?;
    let mcfg = cfg.model()?;
    let id = data
        .registry
        .lookup(user)
        .filter(|&id| data.registry.kind(id) == EntityKind::User)
        .ok_or_else(|| Failure::new("unknown", format!("no user named '{user}'")))?;
    let first = cfg.split.background;
    let end = until.unwrap_or(data.num_steps());
    if end <= first || end > data.num_steps() {
        return Err(Failure::new(
            "config",
            format!("--until must lie in {}..={}, got {end}", first + 1, data.num_steps()),
        ));
    }
    let pred = Predictor { data: &data, cache: &cache, store: &store, params: &params, cfg: &mcfg };
    let h = pred.trajectory(id, end)?;
    let path = cfg.output.join(format!("attention-{}.csv", file_safe(user)));
    let mut csv = Vec::new();
    writeln!(csv, "user,step_from,step_to,beta").expect("vec write");
    let rows = write_attention_csv(&mut csv, user, first, &h, &store, &params).map_err(io_err(&path))?;
    write(&path, &csv)?;
    println!("wrote {rows} rows to {}", path.display());
    Ok(())
}

pub fn selftest(cfg: &RunConfig) -> Outcome {
    let checks = rete::selftest::run_all(cfg.seed)?;
    let mut failed = Vec::new();
    for c in &checks {
        println!("{} {}: {}", if c.passed { "PASS" } else { "FAIL" }, c.name, c.detail);
        if !c.passed {
            failed.push(c.name);
        }
    }
    if failed.is_empty() {
        Ok(())
    } else {
        Err(Failure::new("selftest", format!("failed: {}", failed.join(", "))))
    }
}

const SYNTH_CONFIG: &str = "events = events.tsv
triples = triples.tsv
output = out
dim = 16
lr = 0.01
l2 = 0
user_batch = 4
stop_k = 5
k = 5,20
";

pub fn synth(out: &Path, drift: bool, seed: u64) -> Outcome {
    let pc = if drift { PlantedConfig::drift(seed) } else { PlantedConfig::planted(seed) };
    generate(&pc)?.write(out)?;
    write(&out.join("rete.conf"), SYNTH_CONFIG.as_bytes())?;
    println!("wrote events.tsv, triples.tsv and rete.conf to {}", out.display());
    Ok(())
}
