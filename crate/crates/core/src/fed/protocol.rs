//! Round loop: broadcast, parallel local training, validation gating and aggregation.

use std::time::Instant;

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::aggregate::{
    encoding_aware_weights, fairness_weights, inverse_variance_weights, masked_aggregate,
    pad_params, sporadic_select,
};
use crate::data::{avgpool, holdout_split, partition_noniid, split_train_test, Dataset, Pca, ReduceMethod};
use crate::encode::{client_state_summary, pad_to_qubits, pool_features, Encoder, EncoderKind, Standardizer};
use crate::qnn::{build_pqc, evaluate, train_local, Evaluation, GradOptions, OptimizerKind, PqcModel, Sample, TrainerState};
use crate::qsim::{NoiseConfig, QuantumState, Repr};
use crate::seed::{derive_seed, rng_for};
use crate::{Error, Result};

/// Lower and upper clamp of the adaptive validation threshold.
pub const ADAPTIVE_TAU_RANGE: (f64, f64) = (0.2, 0.9);
const STATE_SUMMARY_CAP: usize = 64;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Algorithm {
    QflFedavg,
    Pqfl,
    Wpqfl,
    Spqfl,
    QnnCentral,
}

impl Algorithm {
    pub const ALL: [Algorithm; 5] = [
        Algorithm::QflFedavg,
        Algorithm::Pqfl,
        Algorithm::Wpqfl,
        Algorithm::Spqfl,
        Algorithm::QnnCentral,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Algorithm::QflFedavg => "qfl_fedavg",
            Algorithm::Pqfl => "pqfl",
            Algorithm::Wpqfl => "wpqfl",
            Algorithm::Spqfl => "spqfl",
            Algorithm::QnnCentral => "qnn_central",
        }
    }

    pub fn from_name(name: &str) -> Option<Self> {
        Self::ALL.into_iter().find(|a| a.name() == name)
    }
}

impl std::fmt::Display for Algorithm {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Strategy {
    #[default]
    Uniform,
    Layerwise,
    NoiseAware,
    Fairness,
    EncodingAware,
}

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub enum TauMode {
    Disabled,
    Fixed(f64),
    /// `0.5 ·` mean of the previous round's validation accuracies, clamped.
    #[default]
    Adaptive,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ClientProfile {
    pub id: usize,
    pub num_qubits: usize,
    pub num_layers: usize,
    /// Gate fidelity in `[0, 1]`.
    pub phi: f64,
    pub noise: NoiseConfig,
    /// Noise variance; `None` means `max(1e-6, 1 - φ)`.
    pub sigma_sq: Option<f64>,
}

impl ClientProfile {
    pub fn new(id: usize, num_qubits: usize, num_layers: usize) -> Self {
        ClientProfile {
            id,
            num_qubits,
            num_layers,
            phi: 1.0,
            noise: NoiseConfig::noiseless(),
            sigma_sq: None,
        }
    }

    pub fn sigma_sq(&self) -> f64 {
        self.sigma_sq.unwrap_or((1.0 - self.phi).max(1e-6))
    }

    pub fn validate(&self) -> Result<()> {
        if self.num_qubits == 0 || self.num_layers == 0 {
            return Err(Error::Config(format!(
                "client {}: qubits and layers must be at least 1",
                self.id
            )));
        }
        if !(0.0..=1.0).contains(&self.phi) {
            return Err(Error::OutOfRange {
                name: "phi",
                value: self.phi,
                expected: "[0, 1]",
            });
        }
        if let Some(s) = self.sigma_sq {
            if !(s >= 0.0) || !s.is_finite() {
                return Err(Error::OutOfRange {
                    name: "sigma_sq",
                    value: s,
                    expected: "[0, inf)",
                });
            }
        }
        self.noise.validate()
    }
}

/// Hyperparameters of the federated protocol.
#[derive(Debug, Clone, PartialEq)]
pub struct ProtocolConfig {
    pub algorithm: Algorithm,
    /// Aggregation used by `spqfl`; the baselines fix their own.
    pub strategy: Strategy,
    pub rounds: usize,
    pub local_steps: usize,
    pub batch_size: usize,
    pub eta: f64,
    pub lambda: f64,
    pub gamma_ns: f64,
    pub tau: TauMode,
    pub alpha: f64,
    pub optimizer: OptimizerKind,
    pub shots: Option<u32>,
    pub surrogate_scale: f64,
}

impl Default for ProtocolConfig {
    fn default() -> Self {
        ProtocolConfig {
            algorithm: Algorithm::Spqfl,
            strategy: Strategy::Uniform,
            rounds: 50,
            local_steps: 5,
            batch_size: 32,
            eta: crate::qnn::DEFAULT_LEARNING_RATE,
            lambda: 0.1,
            gamma_ns: 1.0,
            tau: TauMode::Adaptive,
            alpha: 1.0,
            optimizer: OptimizerKind::Sgd,
            shots: None,
            surrogate_scale: 1.0,
        }
    }
}

/// What an algorithm actually runs with once its fixed choices are applied.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Resolved {
    pub lambda: f64,
    pub gamma_ns: f64,
    pub tau: TauMode,
    pub strategy: Strategy,
}

impl ProtocolConfig {
    pub fn validate(&self) -> Result<()> {
        let positive = |name: &'static str, v: f64| {
            if v > 0.0 && v.is_finite() {
                Ok(())
            } else {
                Err(Error::OutOfRange {
                    name,
                    value: v,
                    expected: "(0, inf)",
                })
            }
        };
        let non_negative = |name: &'static str, v: f64| {
            if v >= 0.0 && v.is_finite() {
                Ok(())
            } else {
                Err(Error::OutOfRange {
                    name,
                    value: v,
                    expected: "[0, inf)",
                })
            }
        };
        positive("eta", self.eta)?;
        positive("alpha", self.alpha)?;
        non_negative("lambda", self.lambda)?;
        non_negative("gamma_ns", self.gamma_ns)?;
        non_negative("surrogate_scale", self.surrogate_scale)?;
        if self.batch_size == 0 {
            return Err(Error::Config("batch_size must be at least 1".into()));
        }
        if self.shots == Some(0) {
            return Err(Error::Config("shots must be at least 1".into()));
        }
        if let TauMode::Fixed(t) = self.tau {
            if !(0.0..=1.0).contains(&t) {
                return Err(Error::OutOfRange {
                    name: "tau",
                    value: t,
                    expected: "[0, 1]",
                });
            }
        }
        Ok(())
    }

    pub fn resolve(&self) -> Resolved {
        let off = |strategy| Resolved {
            lambda: 0.0,
            gamma_ns: 0.0,
            tau: TauMode::Disabled,
            strategy,
        };
        match self.algorithm {
            Algorithm::QflFedavg | Algorithm::QnnCentral => off(Strategy::Uniform),
            Algorithm::Pqfl => Resolved {
                lambda: self.lambda,
                ..off(Strategy::Uniform)
            },
            Algorithm::Wpqfl => Resolved {
                lambda: self.lambda,
                ..off(Strategy::Fairness)
            },
            Algorithm::Spqfl => Resolved {
                lambda: self.lambda,
                gamma_ns: self.gamma_ns,
                tau: self.tau,
                strategy: self.strategy,
            },
        }
    }
}

/// How raw dataset rows become encoded client data.
#[derive(Debug, Clone, PartialEq)]
pub struct DataSetup {
    pub encoder: EncoderKind,
    /// Z-score features with statistics of the training split before encoding.
    pub standardize: bool,
    pub classes_per_client: usize,
    pub train_fraction: f64,
    /// Share of each client's shard used for local training; the rest is its
    /// validation holdout.
    pub local_train_fraction: f64,
    /// Feature reduction applied after the train/test split; PCA is fitted on the
    /// training part only.
    pub reduce: Option<(ReduceMethod, usize)>,
}

impl Default for DataSetup {
    fn default() -> Self {
        DataSetup {
            encoder: EncoderKind::Amplitude,
            standardize: true,
            classes_per_client: 2,
            train_fraction: 0.8,
            local_train_fraction: 0.8,
            reduce: None,
        }
    }
}

#[derive(Debug, Clone)]
pub struct ClientData {
    pub train: Vec<Sample>,
    pub validation: Vec<Sample>,
    /// Mean encoded state of the client's data, padded to the global qubit count.
    pub rho: QuantumState,
}

/// Clients, their encoded shards and the global test set for one seed.
#[derive(Debug, Clone)]
pub struct Federation {
    pub clients: Vec<ClientProfile>,
    pub data: Vec<ClientData>,
    pub test: Vec<Sample>,
    pub num_qubits: usize,
    pub num_layers: usize,
    pub num_classes: usize,
}

fn encode_rows(rows: &[Vec<f64>], labels: &[usize], enc: &Encoder) -> Result<Vec<Sample>> {
    rows.iter()
        .zip(labels)
        .map(|(r, &y)| Ok((enc.encode(r)?, y)))
        .collect()
}

impl Federation {
    /// Splits `ds` 80/20, partitions the training part across `clients` by class and
    /// encodes everything. Pass a single client with `classes_per_client` equal to the
    /// class count for a centralized run.
    pub fn build(ds: &Dataset, clients: Vec<ClientProfile>, setup: &DataSetup, seed: u64) -> Result<Self> {
        if clients.is_empty() {
            return Err(Error::Empty("client list"));
        }
        for c in &clients {
            c.validate()?;
        }
        let (train, test) = split_train_test(ds, setup.train_fraction, seed)?;
        let (train, test) = match setup.reduce {
            None => (train, test),
            Some((ReduceMethod::Avgpool, d)) => (avgpool(&train, d)?, avgpool(&test, d)?),
            Some((ReduceMethod::Pca, d)) => {
                let pca = Pca::fit(&train.features, d)?;
                (pca.transform(&train)?, pca.transform(&test)?)
            }
        };
        let standardizer = if setup.standardize {
            Some(Standardizer::fit(&train.features)?)
        } else {
            None
        };
        let prep = |rows: &[Vec<f64>], enc: &Encoder| -> Vec<Vec<f64>> {
            rows.iter()
                .map(|r| {
                    let r = standardizer.as_ref().map_or_else(|| r.clone(), |s| s.apply_row(r));
                    pool_features(&r, enc.feature_capacity())
                })
                .collect()
        };
        let q_g = clients.iter().map(|c| c.num_qubits).max().unwrap_or(1);
        let l_g = clients.iter().map(|c| c.num_layers).max().unwrap_or(1);
        let global_enc = Encoder::new(setup.encoder, q_g)?;
        let test_samples = encode_rows(&prep(&test.features, &global_enc), &test.labels, &global_enc)?;

        let plan = partition_noniid(&train, clients.len(), setup.classes_per_client, seed)?;
        let data = clients
            .iter()
            .enumerate()
            .map(|(i, c)| {
                let shard = plan.shard(&train, i);
                let (tr, va) = holdout_split(&shard, setup.local_train_fraction, derive_seed(&[seed, i as u64, 0x484f]))?;
                let va = if va.is_empty() { tr.clone() } else { va };
                let enc = Encoder::new(setup.encoder, c.num_qubits)?;
                let tr_rows = prep(&tr.features, &enc);
                let rho = client_state_summary(&tr_rows, &enc, STATE_SUMMARY_CAP)?;
                Ok(ClientData {
                    train: encode_rows(&tr_rows, &tr.labels, &enc)?,
                    validation: encode_rows(&prep(&va.features, &enc), &va.labels, &enc)?,
                    rho: pad_to_qubits(&rho, q_g)?,
                })
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(Federation {
            clients,
            data,
            test: test_samples,
            num_qubits: q_g,
            num_layers: l_g,
            num_classes: ds.num_classes,
        })
    }
}

#[derive(Debug, Clone)]
pub struct ServerState {
    pub global: PqcModel,
    /// Index of the next round to run.
    pub round: usize,
    /// Mean validation accuracy of the previous round, for the adaptive threshold.
    pub previous_mean_accuracy: Option<f64>,
}

impl ServerState {
    pub fn new(global: PqcModel) -> Self {
        ServerState {
            global,
            round: 0,
            previous_mean_accuracy: None,
        }
    }

    pub fn threshold(&self, mode: TauMode) -> Option<f64> {
        match mode {
            TauMode::Disabled => None,
            TauMode::Fixed(t) => Some(t),
            TauMode::Adaptive => {
                let (lo, hi) = ADAPTIVE_TAU_RANGE;
                Some(self.previous_mean_accuracy.map_or(lo, |m| (0.5 * m).clamp(lo, hi)))
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClientRound {
    pub client_id: usize,
    pub train_loss: f64,
    pub val_acc: f64,
    pub participated: bool,
    /// Aggregation weight; zero when gated out.
    pub weight: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RoundRecord {
    pub round: usize,
    pub tau: Option<f64>,
    pub clients: Vec<ClientRound>,
    pub test_acc: f64,
    pub test_loss: f64,
    pub wall_time_s: f64,
}

impl RoundRecord {
    pub fn participants(&self) -> usize {
        self.clients.iter().filter(|c| c.participated).count()
    }
}

struct LocalOutcome {
    model: PqcModel,
    train_loss: f64,
    val_acc: f64,
}

fn train_client(
    global: &PqcModel,
    client: &ClientProfile,
    data: &ClientData,
    cfg: &ProtocolConfig,
    resolved: &Resolved,
    round: usize,
    seed: u64,
) -> Result<LocalOutcome> {
    let start = global.restrict(client.num_qubits, client.num_layers)?;
    let anchor = start.params();
    let mut trainer = TrainerState::new(cfg.eta, resolved.lambda, resolved.gamma_ns, cfg.optimizer)?.at_round(round);
    let opts = GradOptions {
        shots: cfg.shots,
        noise_sensitivity: resolved.gamma_ns,
        surrogate_scale: cfg.surrogate_scale,
    };
    let mut rng = rng_for(&[seed, round as u64, client.id as u64, 0x4c54]);
    let run = train_local(
        &start,
        &anchor,
        &data.train,
        cfg.local_steps,
        cfg.batch_size,
        &mut trainer,
        &client.noise,
        &opts,
        &mut rng,
    )?;
    let val_acc = evaluate(&run.model, &data.validation, &client.noise)?.accuracy;
    Ok(LocalOutcome {
        model: run.model,
        train_loss: run.mean_loss,
        val_acc,
    })
}

fn mixture(states: &[&QuantumState]) -> Result<QuantumState> {
    let first = states.first().ok_or(Error::Empty("state list"))?;
    let n = first.num_qubits();
    let dim = first.dim();
    let mut rho = vec![Complex64::new(0.0, 0.0); dim * dim];
    let w = 1.0 / states.len() as f64;
    for s in states {
        if s.num_qubits() != n {
            return Err(Error::DimensionMismatch("states of different sizes".into()));
        }
        for i in 0..dim {
            for j in 0..dim {
                rho[i * dim + j] += w * s.entry(i, j);
            }
        }
    }
    Ok(QuantumState::from_parts_unchecked(n, Repr::Mixed(rho)))
}

/// Aggregation weights over `participants` (indices into the federation), or `None` for
/// the plain mean over whichever participants hold each coordinate.
fn strategy_weights(strategy: Strategy, fed: &Federation, participants: &[usize], alpha: f64) -> Result<Option<Vec<f64>>> {
    let pick = |i: &usize| &fed.clients[*i];
    match strategy {
        Strategy::Uniform | Strategy::Layerwise => Ok(None),
        Strategy::NoiseAware => {
            let s: Vec<f64> = participants.iter().map(|i| pick(i).sigma_sq()).collect();
            inverse_variance_weights(&s).map(Some)
        }
        Strategy::Fairness => {
            let c: Vec<(usize, f64)> = participants.iter().map(|i| (pick(i).num_qubits, pick(i).phi)).collect();
            fairness_weights(&c).map(Some)
        }
        Strategy::EncodingAware => {
            let rhos: Vec<QuantumState> = participants.iter().map(|&i| fed.data[i].rho.clone()).collect();
            let rho_g = mixture(&rhos.iter().collect::<Vec<_>>())?;
            encoding_aware_weights(&rhos, &rho_g, alpha).map(Some)
        }
    }
}

/// One global round of the protocol. `seed` is the experiment seed; every client's
/// randomness is derived from it together with the round and client ids.
pub fn run_round(
    server: &mut ServerState,
    fed: &Federation,
    cfg: &ProtocolConfig,
    seed: u64,
) -> Result<RoundRecord> {
    if fed.clients.is_empty() {
        return Err(Error::Empty("client list"));
    }
    let clock = Instant::now();
    let resolved = cfg.resolve();
    let round = server.round;
    let global = &server.global;
    let outcomes = fed
        .clients
        .par_iter()
        .zip(fed.data.par_iter())
        .map(|(c, d)| train_client(global, c, d, cfg, &resolved, round, seed))
        .collect::<Result<Vec<_>>>()?;

    let accs: Vec<f64> = outcomes.iter().map(|o| o.val_acc).collect();
    let tau = server.threshold(resolved.tau);
    let participants = match tau {
        Some(t) => sporadic_select(&accs, t),
        None => (0..outcomes.len()).collect(),
    };
    server.previous_mean_accuracy = Some(accs.iter().sum::<f64>() / accs.len() as f64);

    let mut weights = vec![0.0; outcomes.len()];
    if !participants.is_empty() {
        let w = strategy_weights(resolved.strategy, fed, &participants, cfg.alpha)?;
        let padded = participants
            .iter()
            .map(|&i| pad_params(&outcomes[i].model, fed.num_qubits, fed.num_layers))
            .collect::<Result<Vec<_>>>()?;
        let next = masked_aggregate(&padded, w.as_deref(), &server.global.params())?;
        server.global.set_params(&next)?;
        for (k, &i) in participants.iter().enumerate() {
            weights[i] = w.as_ref().map_or(1.0 / participants.len() as f64, |w| w[k]);
        }
    }

    let eval = evaluate(&server.global, &fed.test, &NoiseConfig::noiseless())?;
    server.round += 1;
    let clients = outcomes
        .iter()
        .enumerate()
        .map(|(i, o)| ClientRound {
            client_id: fed.clients[i].id,
            train_loss: o.train_loss,
            val_acc: o.val_acc,
            participated: participants.binary_search(&i).is_ok(),
            weight: weights[i],
        })
        .collect();
    Ok(RoundRecord {
        round,
        tau,
        clients,
        test_acc: eval.accuracy,
        test_loss: eval.loss,
        wall_time_s: clock.elapsed().as_secs_f64(),
    })
}

/// Everything needed to run one algorithm over several seeds.
#[derive(Debug, Clone)]
pub struct ExperimentSpec {
    pub dataset: Dataset,
    pub clients: Vec<ClientProfile>,
    pub data: DataSetup,
    pub protocol: ProtocolConfig,
    pub seeds: Vec<u64>,
}

#[derive(Debug, Clone)]
pub struct SeedRun {
    pub seed: u64,
    pub initial: Evaluation,
    pub records: Vec<RoundRecord>,
    pub final_model: PqcModel,
}

impl SeedRun {
    pub fn final_eval(&self) -> Evaluation {
        self.records.last().map_or(self.initial, |r| Evaluation {
            loss: r.test_loss,
            accuracy: r.test_acc,
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Summary {
    pub algorithm: Algorithm,
    pub seeds: usize,
    pub final_acc_mean: f64,
    pub final_acc_std: f64,
    pub final_loss_mean: f64,
    pub final_loss_std: f64,
}

/// Mean and sample standard deviation (zero for fewer than two values).
pub fn mean_std(values: &[f64]) -> (f64, f64) {
    let n = values.len();
    if n == 0 {
        return (f64::NAN, f64::NAN);
    }
    let mean = values.iter().sum::<f64>() / n as f64;
    if n < 2 {
        return (mean, 0.0);
    }
    let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1) as f64;
    (mean, var.sqrt())
}

pub fn summarize(algorithm: Algorithm, runs: &[SeedRun]) -> Summary {
    let finals: Vec<Evaluation> = runs.iter().map(SeedRun::final_eval).collect();
    let (am, asd) = mean_std(&finals.iter().map(|e| e.accuracy).collect::<Vec<_>>());
    let (lm, lsd) = mean_std(&finals.iter().map(|e| e.loss).collect::<Vec<_>>());
    Summary {
        algorithm,
        seeds: runs.len(),
        final_acc_mean: am,
        final_acc_std: asd,
        final_loss_mean: lm,
        final_loss_std: lsd,
    }
}

impl ExperimentSpec {
    pub fn validate(&self) -> Result<()> {
        self.protocol.validate()?;
        if self.clients.is_empty() {
            return Err(Error::Empty("client list"));
        }
        if self.seeds.is_empty() {
            return Err(Error::Empty("seed list"));
        }
        for c in &self.clients {
            c.validate()?;
        }
        self.dataset.validate()
    }

    /// The clients this algorithm actually federates: the configured ones, or a single
    /// noiseless client of the largest size for the centralized baseline.
    pub fn effective_clients(&self) -> (Vec<ClientProfile>, DataSetup) {
        if self.protocol.algorithm != Algorithm::QnnCentral {
            return (self.clients.clone(), self.data.clone());
        }
        let q = self.clients.iter().map(|c| c.num_qubits).max().unwrap_or(1);
        let l = self.clients.iter().map(|c| c.num_layers).max().unwrap_or(1);
        let setup = DataSetup {
            classes_per_client: self.dataset.num_classes,
            ..self.data.clone()
        };
        (vec![ClientProfile::new(0, q, l)], setup)
    }

    pub fn run_seed(&self, seed: u64) -> Result<SeedRun> {
        let (clients, setup) = self.effective_clients();
        let fed = Federation::build(&self.dataset, clients, &setup, seed)?;
        let init = build_pqc(fed.num_qubits, fed.num_layers, fed.num_classes, derive_seed(&[seed, 0x494e]))?;
        let initial = evaluate(&init, &fed.test, &NoiseConfig::noiseless())?;
        let mut server = ServerState::new(init);
        let records = (0..self.protocol.rounds)
            .map(|_| run_round(&mut server, &fed, &self.protocol, seed))
            .collect::<Result<Vec<_>>>()?;
        Ok(SeedRun {
            seed,
            initial,
            records,
            final_model: server.global,
        })
    }
}

/// Runs every seed and summarizes final test metrics across them.
pub fn run_experiment(spec: &ExperimentSpec) -> Result<(Vec<SeedRun>, Summary)> {
    spec.validate()?;
    let runs = spec
        .seeds
        .iter()
        .map(|&s| spec.run_seed(s))
        .collect::<Result<Vec<_>>>()?;
    let summary = summarize(spec.protocol.algorithm, &runs);
    Ok((runs, summary))
}
