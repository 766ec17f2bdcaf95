//! Experiment configuration file (TOML, strict schema).

use std::path::{Path, PathBuf};

use hetqfl_core::data::ReduceMethod;
use hetqfl_core::encode::EncoderKind;
use hetqfl_core::fed::{Algorithm, Strategy, TauMode};
use hetqfl_core::qnn::{OptimizerKind, DEFAULT_LEARNING_RATE};
use hetqfl_core::qsim::NoiseConfig;
use serde::{Deserialize, Serialize};

#[derive(Debug, thiserror::Error)]
pub enum ConfigError {
    #[error("cannot read {path}: {source}")]
    Read {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error("{0}")]
    Parse(String),
    #[error("{field}: {message}")]
    Invalid { field: String, message: String },
}

fn invalid(field: &str, message: impl Into<String>) -> ConfigError {
    ConfigError::Invalid {
        field: field.to_string(),
        message: message.into(),
    }
}

/// A scalar applied to every client, or a list assigned round-robin.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum PerClient<T> {
    One(T),
    Cycle(Vec<T>),
}

impl<T: Copy> PerClient<T> {
    pub fn get(&self, client: usize) -> T {
        match self {
            PerClient::One(v) => *v,
            PerClient::Cycle(vs) => vs[client % vs.len()],
        }
    }

    fn values(&self) -> Vec<T> {
        match self {
            PerClient::One(v) => vec![*v],
            PerClient::Cycle(vs) => vs.clone(),
        }
    }

    fn is_empty(&self) -> bool {
        matches!(self, PerClient::Cycle(v) if v.is_empty())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DatasetKind {
    Blobs,
    Idx,
    Csv,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ReduceSetting {
    None,
    Avgpool,
    Pca,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DatasetConfig {
    pub kind: DatasetKind,
    /// Sample count for blobs; subsample size for files (0 keeps everything).
    pub n: usize,
    pub num_classes: usize,
    pub dim: usize,
    pub spread: f64,
    pub seed: u64,
    pub images: Option<PathBuf>,
    pub labels: Option<PathBuf>,
    pub path: Option<PathBuf>,
    pub reduce: ReduceSetting,
    pub reduce_dim: usize,
    pub encoder: EncoderKind,
    pub standardize: bool,
    pub classes_per_client: usize,
}

impl Default for DatasetConfig {
    fn default() -> Self {
        DatasetConfig {
            kind: DatasetKind::Blobs,
            n: 2000,
            num_classes: 4,
            dim: 16,
            spread: 0.5,
            seed: 0,
            images: None,
            labels: None,
            path: None,
            reduce: ReduceSetting::None,
            reduce_dim: 16,
            encoder: EncoderKind::Amplitude,
            standardize: true,
            classes_per_client: 2,
        }
    }
}

impl DatasetConfig {
    pub fn reduction(&self) -> Option<(ReduceMethod, usize)> {
        match self.reduce {
            ReduceSetting::None => None,
            ReduceSetting::Avgpool => Some((ReduceMethod::Avgpool, self.reduce_dim)),
            ReduceSetting::Pca => Some((ReduceMethod::Pca, self.reduce_dim)),
        }
    }
}

/// Per-client heterogeneity. Each field is a scalar or a round-robin list.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FederationConfig {
    pub num_clients: usize,
    pub qubits: PerClient<usize>,
    pub layers: PerClient<usize>,
    /// Gate fidelity; when absent it is the average fidelity of the client's gate noise.
    pub phi: Option<PerClient<f64>>,
    pub sigma_sq: Option<PerClient<f64>>,
    pub gamma_ad: PerClient<f64>,
    pub p_pd: PerClient<f64>,
    /// Shared device settings (thermal relaxation, T1/T2, gate times). A client's
    /// noise is on when this says so or when its damping parameters are nonzero.
    pub noise: NoiseConfig,
}

impl Default for FederationConfig {
    fn default() -> Self {
        FederationConfig {
            num_clients: 8,
            qubits: PerClient::One(4),
            layers: PerClient::One(2),
            phi: None,
            sigma_sq: None,
            gamma_ad: PerClient::One(0.0),
            p_pd: PerClient::One(0.0),
            noise: NoiseConfig::default(),
        }
    }
}

impl FederationConfig {
    pub fn client_noise(&self, client: usize) -> NoiseConfig {
        let gamma_ad = self.gamma_ad.get(client);
        let p_pd = self.p_pd.get(client);
        NoiseConfig {
            enabled: self.noise.enabled || gamma_ad > 0.0 || p_pd > 0.0,
            gamma_ad,
            p_pd,
            ..self.noise
        }
    }
}

/// `"adaptive"`, `"disabled"` or a fixed threshold in `[0, 1]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum TauSetting {
    Fixed(f64),
    Mode(String),
}

impl TauSetting {
    pub fn mode(&self) -> Result<TauMode, ConfigError> {
        match self {
            TauSetting::Fixed(t) if (0.0..=1.0).contains(t) => Ok(TauMode::Fixed(*t)),
            TauSetting::Fixed(t) => Err(invalid("training.tau", format!("{t} is outside [0, 1]"))),
            TauSetting::Mode(m) if m == "adaptive" => Ok(TauMode::Adaptive),
            TauSetting::Mode(m) if m == "disabled" => Ok(TauMode::Disabled),
            TauSetting::Mode(m) => Err(invalid(
                "training.tau",
                format!("expected \"adaptive\", \"disabled\" or a number, got {m:?}"),
            )),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TrainingConfig {
    pub rounds: usize,
    pub local_steps: usize,
    pub batch_size: usize,
    pub learning_rate: f64,
    pub lambda: f64,
    pub gamma_ns: f64,
    pub tau: TauSetting,
    pub alpha: f64,
    pub optimizer: OptimizerKind,
    pub strategy: Strategy,
    pub shots: Option<u32>,
    pub surrogate_scale: f64,
}

impl Default for TrainingConfig {
    fn default() -> Self {
        TrainingConfig {
            rounds: 50,
            local_steps: 5,
            batch_size: 32,
            learning_rate: DEFAULT_LEARNING_RATE,
            lambda: 0.1,
            gamma_ns: 1.0,
            tau: TauSetting::Mode("adaptive".into()),
            alpha: 1.0,
            optimizer: OptimizerKind::Sgd,
            strategy: Strategy::Uniform,
            shots: None,
            surrogate_scale: 1.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    #[serde(default)]
    pub name: String,
    pub algorithms: Vec<Algorithm>,
    #[serde(default = "default_seeds")]
    pub seeds: Vec<u64>,
    #[serde(default = "default_output")]
    pub output_dir: PathBuf,
    pub dataset: DatasetConfig,
    #[serde(default)]
    pub federation: FederationConfig,
    #[serde(default)]
    pub training: TrainingConfig,
}

fn default_seeds() -> Vec<u64> {
    vec![1, 2, 3]
}

fn default_output() -> PathBuf {
    PathBuf::from("runs")
}

impl ExperimentConfig {
    pub fn from_toml(text: &str) -> Result<Self, ConfigError> {
        let cfg: ExperimentConfig =
            toml::from_str(text).map_err(|e| ConfigError::Parse(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    /// Parses and validates `path`. Relative data paths are resolved against the
    /// config file's directory.
    pub fn load(path: &Path) -> Result<Self, ConfigError> {
        let text = std::fs::read_to_string(path).map_err(|source| ConfigError::Read {
            path: path.to_path_buf(),
            source,
        })?;
        let mut cfg = Self::from_toml(&text)?;
        let base = path.parent().unwrap_or(Path::new("."));
        for p in [&mut cfg.dataset.images, &mut cfg.dataset.labels, &mut cfg.dataset.path]
            .into_iter()
            .flatten()
        {
            if p.is_relative() {
                let joined = base.join(&*p);
                *p = std::path::absolute(&joined).unwrap_or(joined);
            }
        }
        Ok(cfg)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string_pretty(self).expect("config values are always representable")
    }

    pub fn tau_mode(&self) -> TauMode {
        self.training.tau.mode().expect("validated")
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        if self.algorithms.is_empty() {
            return Err(invalid("algorithms", "at least one algorithm is required"));
        }
        if self.seeds.is_empty() {
            return Err(invalid("seeds", "at least one seed is required"));
        }
        let d = &self.dataset;
        match d.kind {
            DatasetKind::Blobs => {
                if d.num_classes < 2 {
                    return Err(invalid("dataset.num_classes", "need at least 2 classes"));
                }
                if d.n < d.num_classes {
                    return Err(invalid("dataset.n", "need at least one sample per class"));
                }
                if d.dim == 0 {
                    return Err(invalid("dataset.dim", "must be at least 1"));
                }
                if !(d.spread >= 0.0) || !d.spread.is_finite() {
                    return Err(invalid("dataset.spread", format!("{} must be >= 0", d.spread)));
                }
            }
            DatasetKind::Idx => {
                if d.images.is_none() || d.labels.is_none() {
                    return Err(invalid("dataset", "idx datasets need `images` and `labels`"));
                }
            }
            DatasetKind::Csv => {
                if d.path.is_none() {
                    return Err(invalid("dataset.path", "csv datasets need a path"));
                }
            }
        }
        if d.reduce != ReduceSetting::None && d.reduce_dim == 0 {
            return Err(invalid("dataset.reduce_dim", "must be at least 1"));
        }
        if d.classes_per_client == 0 {
            return Err(invalid("dataset.classes_per_client", "must be at least 1"));
        }

        let f = &self.federation;
        if f.num_clients == 0 {
            return Err(invalid("federation.num_clients", "must be at least 1"));
        }
        for (name, empty) in [
            ("federation.qubits", f.qubits.is_empty()),
            ("federation.layers", f.layers.is_empty()),
            ("federation.gamma_ad", f.gamma_ad.is_empty()),
            ("federation.p_pd", f.p_pd.is_empty()),
            ("federation.phi", f.phi.as_ref().is_some_and(PerClient::is_empty)),
            ("federation.sigma_sq", f.sigma_sq.as_ref().is_some_and(PerClient::is_empty)),
        ] {
            if empty {
                return Err(invalid(name, "list must not be empty"));
            }
        }
        if f.qubits.values().iter().any(|&q| q == 0 || q > 10) {
            return Err(invalid("federation.qubits", "each value must be in 1..=10"));
        }
        if f.layers.values().contains(&0) {
            return Err(invalid("federation.layers", "each value must be at least 1"));
        }
        for (name, values) in [
            ("federation.gamma_ad", f.gamma_ad.values()),
            ("federation.p_pd", f.p_pd.values()),
            ("federation.phi", f.phi.as_ref().map(PerClient::values).unwrap_or_default()),
        ] {
            if let Some(v) = values.iter().find(|v| !(0.0..=1.0).contains(*v)) {
                return Err(invalid(name, format!("{v} is outside [0, 1]")));
            }
        }
        if let Some(v) = f
            .sigma_sq
            .as_ref()
            .map(PerClient::values)
            .unwrap_or_default()
            .iter()
            .find(|v| !(**v >= 0.0) || !v.is_finite())
        {
            return Err(invalid("federation.sigma_sq", format!("{v} must be >= 0")));
        }
        for i in 0..f.num_clients {
            f.client_noise(i)
                .validate()
                .map_err(|e| invalid("federation.noise", e.to_string()))?;
        }

        let t = &self.training;
        let positive = |name: &str, v: f64| {
            if v > 0.0 && v.is_finite() {
                Ok(())
            } else {
                Err(invalid(name, format!("{v} must be > 0")))
            }
        };
        let non_negative = |name: &str, v: f64| {
            if v >= 0.0 && v.is_finite() {
                Ok(())
            } else {
                Err(invalid(name, format!("{v} must be >= 0")))
            }
        };
        positive("training.learning_rate", t.learning_rate)?;
        positive("training.alpha", t.alpha)?;
        non_negative("training.lambda", t.lambda)?;
        non_negative("training.gamma_ns", t.gamma_ns)?;
        non_negative("training.surrogate_scale", t.surrogate_scale)?;
        if t.batch_size == 0 {
            return Err(invalid("training.batch_size", "must be at least 1"));
        }
        if t.shots == Some(0) {
            return Err(invalid("training.shots", "must be at least 1"));
        }
        t.tau.mode()?;
        Ok(())
    }
}
