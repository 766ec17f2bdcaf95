//! Runs every configured algorithm over every seed and writes the metric files.

use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use hetqfl_core::data::{load_csv, load_idx, synth_blobs, Dataset};
use hetqfl_core::fed::{
    summarize, Algorithm, ClientProfile, DataSetup, ExperimentSpec, ProtocolConfig, SeedRun,
    Summary,
};
use hetqfl_core::qnn::write_checkpoint;
use hetqfl_core::seed::rng_for;
use rand::seq::index::sample;
use serde::Serialize;

use crate::config::{ConfigError, DatasetKind, ExperimentConfig};

pub const EFFECTIVE_CONFIG: &str = "effective_config.toml";
pub const ROUNDS_CSV: &str = "rounds.csv";
pub const SUMMARY_CSV: &str = "summary.csv";
pub const COMPARISON_TXT: &str = "comparison.txt";

#[derive(Debug, thiserror::Error)]
pub enum RunError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error("{0}")]
    Core(#[from] hetqfl_core::Error),
    #[error("writing outputs: {0}")]
    Io(#[from] std::io::Error),
    #[error("writing CSV: {0}")]
    Csv(#[from] csv::Error),
}

impl RunError {
    /// Process exit code: 1 for configuration problems, 2 for everything else.
    pub fn exit_code(&self) -> i32 {
        match self {
            RunError::Config(_) => 1,
            _ => 2,
        }
    }
}

/// One JSONL line: a client's view of one round.
#[derive(Debug, Serialize)]
pub struct ClientLine<'a> {
    pub round: usize,
    pub seed: u64,
    pub algo: &'a str,
    pub client_id: usize,
    pub train_loss: f64,
    pub val_acc: f64,
    pub participated: bool,
    pub weight: f64,
    pub test_acc: f64,
    pub test_loss: f64,
}

#[derive(Debug, Serialize)]
struct RoundRow<'a> {
    algo: &'a str,
    seed: u64,
    round: usize,
    test_acc: f64,
    test_loss: f64,
    participants: usize,
    tau: Option<f64>,
    mean_train_loss: f64,
    mean_val_acc: f64,
}

pub fn load_dataset(cfg: &ExperimentConfig) -> Result<Dataset, RunError> {
    let d = &cfg.dataset;
    let ds = match d.kind {
        DatasetKind::Blobs => return Ok(synth_blobs(d.n, d.num_classes, d.dim, d.spread, d.seed)?),
        DatasetKind::Idx => load_idx(
            d.images.as_ref().expect("validated"),
            d.labels.as_ref().expect("validated"),
        )?,
        DatasetKind::Csv => load_csv(d.path.as_ref().expect("validated"))?,
    };
    if d.n == 0 || d.n >= ds.len() {
        return Ok(ds);
    }
    let mut rng = rng_for(&[d.seed, 0x5355]);
    let mut idx = sample(&mut rng, ds.len(), d.n).into_vec();
    idx.sort_unstable();
    Ok(ds.subset(&idx))
}

pub fn client_profiles(cfg: &ExperimentConfig) -> Result<Vec<ClientProfile>, RunError> {
    let f = &cfg.federation;
    (0..f.num_clients)
        .map(|i| {
            let noise = f.client_noise(i);
            let phi = match &f.phi {
                Some(p) => p.get(i),
                None => noise.gate_fidelity()?,
            };
            Ok(ClientProfile {
                id: i,
                num_qubits: f.qubits.get(i),
                num_layers: f.layers.get(i),
                phi,
                noise,
                sigma_sq: f.sigma_sq.as_ref().map(|s| s.get(i)),
            })
        })
        .collect()
}

pub fn protocol(cfg: &ExperimentConfig, algorithm: Algorithm) -> ProtocolConfig {
    let t = &cfg.training;
    ProtocolConfig {
        algorithm,
        strategy: t.strategy,
        rounds: t.rounds,
        local_steps: t.local_steps,
        batch_size: t.batch_size,
        eta: t.learning_rate,
        lambda: t.lambda,
        gamma_ns: t.gamma_ns,
        tau: cfg.tau_mode(),
        alpha: t.alpha,
        optimizer: t.optimizer,
        shots: t.shots,
        surrogate_scale: t.surrogate_scale,
    }
}

pub fn experiment_spec(cfg: &ExperimentConfig, dataset: &Dataset, algorithm: Algorithm) -> Result<ExperimentSpec, RunError> {
    let d = &cfg.dataset;
    let spec = ExperimentSpec {
        dataset: dataset.clone(),
        clients: client_profiles(cfg)?,
        data: DataSetup {
            encoder: d.encoder,
            standardize: d.standardize,
            classes_per_client: d.classes_per_client,
            reduce: d.reduction(),
            ..DataSetup::default()
        },
        protocol: protocol(cfg, algorithm),
        seeds: cfg.seeds.clone(),
    };
    spec.validate()?;
    Ok(spec)
}

fn thread_pool() -> Option<rayon::ThreadPool> {
    let n = std::env::var("HETQFL_THREADS").ok()?.parse::<usize>().ok()?;
    rayon::ThreadPoolBuilder::new()
        .num_threads(n.max(1))
        .build()
        .ok()
}

pub fn jsonl_path(out: &Path, algorithm: Algorithm, seed: u64) -> PathBuf {
    out.join(algorithm.name()).join(format!("seed_{seed}.jsonl"))
}

/// Final global model of one seed, in the binary checkpoint format.
pub fn checkpoint_path(out: &Path, algorithm: Algorithm, seed: u64) -> PathBuf {
    out.join(algorithm.name()).join(format!("seed_{seed}.ckpt"))
}

fn write_jsonl(path: &Path, algorithm: Algorithm, run: &SeedRun) -> Result<(), RunError> {
    if let Some(dir) = path.parent() {
        fs::create_dir_all(dir)?;
    }
    let mut w = BufWriter::new(File::create(path)?);
    for rec in &run.records {
        for c in &rec.clients {
            let line = ClientLine {
                round: rec.round + 1,
                seed: run.seed,
                algo: algorithm.name(),
                client_id: c.client_id,
                train_loss: c.train_loss,
                val_acc: c.val_acc,
                participated: c.participated,
                weight: c.weight,
                test_acc: rec.test_acc,
                test_loss: rec.test_loss,
            };
            serde_json::to_writer(&mut w, &line).map_err(std::io::Error::from)?;
            w.write_all(b"\n")?;
        }
    }
    w.flush()?;
    Ok(())
}

fn mean(values: impl Iterator<Item = f64>) -> f64 {
    let (sum, n) = values.fold((0.0, 0usize), |(s, n), v| (s + v, n + 1));
    sum / n.max(1) as f64
}

/// Plain-text table of final metrics with deltas against the first algorithm.
pub fn comparison_table(summaries: &[Summary]) -> String {
    let mut out = format!(
        "{:<12} {:>5} {:>18} {:>18} {:>10}\n",
        "algorithm", "seeds", "final acc", "final loss", "delta pp"
    );
    let base = summaries.first().map_or(0.0, |s| s.final_acc_mean);
    for s in summaries {
        out.push_str(&format!(
            "{:<12} {:>5} {:>18} {:>18} {:>+10.2}\n",
            s.algorithm.name(),
            s.seeds,
            format!("{:.4} ± {:.4}", s.final_acc_mean, s.final_acc_std),
            format!("{:.4} ± {:.4}", s.final_loss_mean, s.final_loss_std),
            100.0 * (s.final_acc_mean - base)
        ));
    }
    out
}

#[derive(Debug, Clone)]
pub struct RunOutput {
    pub out_dir: PathBuf,
    pub summaries: Vec<Summary>,
    pub runs: Vec<(Algorithm, Vec<SeedRun>)>,
}

/// Runs the experiment and writes `effective_config.toml`, one JSONL file and one
/// final-model checkpoint per algorithm and seed, `rounds.csv`, `summary.csv` and `comparison.txt` under `out`.
pub fn run(cfg: &ExperimentConfig, out: &Path, quiet: bool) -> Result<RunOutput, RunError> {
    cfg.validate()?;
    let dataset = load_dataset(cfg)?;
    let specs = cfg
        .algorithms
        .iter()
        .map(|&a| experiment_spec(cfg, &dataset, a))
        .collect::<Result<Vec<_>, _>>()?;

    fs::create_dir_all(out)?;
    fs::write(out.join(EFFECTIVE_CONFIG), cfg.to_toml())?;
    let mut rounds = csv::Writer::from_path(out.join(ROUNDS_CSV))?;
    let pool = thread_pool();
    let mut runs = Vec::new();
    let mut summaries = Vec::new();
    for spec in &specs {
        let algo = spec.protocol.algorithm;
        let mut seed_runs = Vec::new();
        for &seed in &spec.seeds {
            let run = match &pool {
                Some(p) => p.install(|| spec.run_seed(seed))?,
                None => spec.run_seed(seed)?,
            };
            write_jsonl(&jsonl_path(out, algo, seed), algo, &run)?;
            let mut ckpt = BufWriter::new(File::create(checkpoint_path(out, algo, seed))?);
            write_checkpoint(&run.final_model, &mut ckpt)?;
            ckpt.flush()?;
            for rec in &run.records {
                rounds.serialize(RoundRow {
                    algo: algo.name(),
                    seed,
                    round: rec.round + 1,
                    test_acc: rec.test_acc,
                    test_loss: rec.test_loss,
                    participants: rec.participants(),
                    tau: rec.tau,
                    mean_train_loss: mean(rec.clients.iter().map(|c| c.train_loss)),
                    mean_val_acc: mean(rec.clients.iter().map(|c| c.val_acc)),
                })?;
            }
            if !quiet {
                let fin = run.final_eval();
                eprintln!(
                    "{algo} seed {seed}: final test acc {:.4}, loss {:.4}",
                    fin.accuracy, fin.loss
                );
            }
            seed_runs.push(run);
        }
        summaries.push(summarize(algo, &seed_runs));
        runs.push((algo, seed_runs));
    }
    rounds.flush()?;

    let mut summary = csv::Writer::from_path(out.join(SUMMARY_CSV))?;
    for s in &summaries {
        summary.serialize(s)?;
    }
    summary.flush()?;
    let table = comparison_table(&summaries);
    fs::write(out.join(COMPARISON_TXT), &table)?;
    if !quiet {
        print!("{table}");
    }
    Ok(RunOutput {
        out_dir: out.to_path_buf(),
        summaries,
        runs,
    })
}
