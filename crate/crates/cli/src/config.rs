//! Flat `key = value` run configuration.
//!
//! Blank lines and lines starting with `#` are ignored. Every key must be one
//! of [`KEYS`]; unknown and repeated keys are rejected with their line
//! number. Command-line overrides go through the same parser.

use std::fmt;
use std::path::Path;

use landmark2vec::simgen::{InverseLinearParams, PathlossParams, SignalModel};
use landmark2vec::{Layout, LayoutKind, Optimizer, TrainConfig};
use serde::Serialize;

/// Where a configuration value came from, for diagnostics.
#[derive(Debug, Clone, PartialEq)]
pub enum Origin {
    File { path: String, line: usize },
    Flag,
    Default,
}

impl fmt::Display for Origin {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Origin::File { path, line } => write!(f, "{path}:{line}"),
            Origin::Flag => write!(f, "command line"),
            Origin::Default => write!(f, "defaults"),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ConfigError {
    pub origin: Origin,
    pub key: Option<String>,
    pub message: String,
}

impl fmt::Display for ConfigError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match &self.key {
            Some(key) => write!(f, "{}: {key}: {}", self.origin, self.message),
            None => write!(f, "{}: {}", self.origin, self.message),
        }
    }
}

impl std::error::Error for ConfigError {}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum SignalKind {
    Pathloss,
    InverseLinear,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum OptimizerKind {
    Sgd,
    Adam,
}

/// Every accepted configuration key.
pub const KEYS: &[&str] = &[
    "seed",
    "layout",
    "landmarks",
    "dim",
    "extent",
    "radius",
    "signal_model",
    "num_measurements",
    "tx_power",
    "pathloss_exponent",
    "noise_std",
    "d0",
    "scale",
    "region_margin",
    "n",
    "train_fraction",
    "learning_rate",
    "batch_size",
    "max_epochs",
    "tau",
    "optimizer",
    "adam_beta1",
    "adam_beta2",
    "adam_epsilon",
];

/// Measurement count used by `--full-scale`.
pub const FULL_SCALE_MEASUREMENTS: usize = 1_000_000;

/// Resolved parameters for the whole pipeline.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RunConfig {
    pub seed: u64,
    #[serde(serialize_with = "layout_name")]
    pub layout: LayoutKind,
    pub landmarks: usize,
    #[serde(skip)]
    pub landmarks_explicit: bool,
    pub dim: usize,
    pub extent: f64,
    pub radius: f64,
    pub signal_model: SignalKind,
    pub num_measurements: usize,
    pub tx_power: f64,
    pub pathloss_exponent: f64,
    /// Defaults to 2 dB for pathloss and 0.2 for inverse-linear.
    pub noise_std: Option<f64>,
    pub d0: f64,
    pub scale: f64,
    pub region_margin: f64,
    pub n: usize,
    pub train_fraction: f64,
    pub learning_rate: f64,
    pub batch_size: usize,
    pub max_epochs: usize,
    pub tau: f64,
    pub optimizer: OptimizerKind,
    pub adam_beta1: f64,
    pub adam_beta2: f64,
    pub adam_epsilon: f64,
}

fn layout_name<S: serde::Serializer>(kind: &LayoutKind, s: S) -> Result<S::Ok, S::Error> {
    s.serialize_str(match kind {
        LayoutKind::Circle => "circle",
        LayoutKind::Grid => "grid",
        LayoutKind::UniformRandom => "uniform_random",
    })
}

impl Default for RunConfig {
    fn default() -> Self {
        let train = TrainConfig::default();
        Self {
            seed: 0,
            layout: LayoutKind::Circle,
            landmarks: 30,
            landmarks_explicit: false,
            dim: 2,
            extent: 30.0,
            radius: 10.0,
            signal_model: SignalKind::Pathloss,
            num_measurements: 100_000,
            tx_power: 20.0,
            pathloss_exponent: 3.0,
            noise_std: None,
            d0: 0.5,
            scale: 10.0,
            region_margin: 0.1,
            n: train.n,
            train_fraction: 0.8,
            learning_rate: train.learning_rate,
            batch_size: train.batch_size,
            max_epochs: train.max_epochs,
            tau: train.tau,
            optimizer: OptimizerKind::Sgd,
            adam_beta1: 0.9,
            adam_beta2: 0.999,
            adam_epsilon: 1e-8,
        }
    }
}

fn parse<T: std::str::FromStr>(value: &str, what: &str) -> Result<T, String> {
    value
        .parse()
        .map_err(|_| format!("'{value}' is not a valid {what}"))
}

impl RunConfig {
    /// Loads a config file on top of the defaults.
    pub fn from_file(path: &Path) -> Result<Self, ConfigError> {
        let text = std::fs::read_to_string(path).map_err(|e| ConfigError {
            origin: Origin::Default,
            key: None,
            message: format!("cannot read {}: {e}", path.display()),
        })?;
        Self::from_str_with_origin(&text, &path.display().to_string())
    }

    pub fn from_str_with_origin(text: &str, name: &str) -> Result<Self, ConfigError> {
        let mut config = Self::default();
        let mut seen: Vec<String> = Vec::new();
        for (i, raw) in text.lines().enumerate() {
            let origin = Origin::File {
                path: name.to_string(),
                line: i + 1,
            };
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let (key, value) = line.split_once('=').ok_or_else(|| ConfigError {
                origin: origin.clone(),
                key: None,
                message: format!("expected 'key = value', found '{line}'"),
            })?;
            let key = key.trim();
            if seen.iter().any(|k| k == key) {
                return Err(ConfigError {
                    origin,
                    key: Some(key.to_string()),
                    message: "key given more than once".to_string(),
                });
            }
            seen.push(key.to_string());
            config.set(key, value.trim(), origin)?;
        }
        Ok(config)
    }

    /// Sets one key, reporting errors against `origin`.
    pub fn set(&mut self, key: &str, value: &str, origin: Origin) -> Result<(), ConfigError> {
        self.set_inner(key, value).map_err(|message| ConfigError {
            origin,
            key: Some(key.to_string()),
            message,
        })
    }

    /// Applies a `key=value` command-line override.
    pub fn set_flag(&mut self, assignment: &str) -> Result<(), ConfigError> {
        let (key, value) = assignment.split_once('=').ok_or_else(|| ConfigError {
            origin: Origin::Flag,
            key: None,
            message: format!("--set expects key=value, found '{assignment}'"),
        })?;
        self.set(key.trim(), value.trim(), Origin::Flag)
    }

    fn set_inner(&mut self, key: &str, value: &str) -> Result<(), String> {
        match key {
            "seed" => self.seed = parse(value, "integer")?,
            "layout" => {
                self.layout = value
                    .parse()
                    .map_err(|e: landmark2vec::Error| e.to_string())?
            }
            "landmarks" => {
                self.landmarks = parse(value, "integer")?;
                self.landmarks_explicit = true;
            }
            "dim" => self.dim = parse(value, "integer")?,
            "extent" => self.extent = parse(value, "number")?,
            "radius" => self.radius = parse(value, "number")?,
            "signal_model" => {
                self.signal_model = match value {
                    "pathloss" => SignalKind::Pathloss,
                    "inverse_linear" => SignalKind::InverseLinear,
                    other => {
                        return Err(format!(
                            "unknown model '{other}' (expected pathloss or inverse_linear)"
                        ))
                    }
                }
            }
            "num_measurements" => self.num_measurements = parse(value, "integer")?,
            "tx_power" => self.tx_power = parse(value, "number")?,
            "pathloss_exponent" => self.pathloss_exponent = parse(value, "number")?,
            "noise_std" => self.noise_std = Some(parse(value, "number")?),
            "d0" => self.d0 = parse(value, "number")?,
            "scale" => self.scale = parse(value, "number")?,
            "region_margin" => self.region_margin = parse(value, "number")?,
            "n" => self.n = parse(value, "integer")?,
            "train_fraction" => self.train_fraction = parse(value, "number")?,
            "learning_rate" => self.learning_rate = parse(value, "number")?,
            "batch_size" => self.batch_size = parse(value, "integer")?,
            "max_epochs" => self.max_epochs = parse(value, "integer")?,
            "tau" => self.tau = parse(value, "number")?,
            "optimizer" => {
                self.optimizer = match value {
                    "sgd" => OptimizerKind::Sgd,
                    "adam" => OptimizerKind::Adam,
                    other => {
                        return Err(format!(
                            "unknown optimizer '{other}' (expected sgd or adam)"
                        ))
                    }
                }
            }
            "adam_beta1" => self.adam_beta1 = parse(value, "number")?,
            "adam_beta2" => self.adam_beta2 = parse(value, "number")?,
            "adam_epsilon" => self.adam_epsilon = parse(value, "number")?,
            other => return Err(format!("unknown key '{other}'")),
        }
        Ok(())
    }

    pub fn noise_std(&self) -> f64 {
        self.noise_std.unwrap_or(match self.signal_model {
            SignalKind::Pathloss => 2.0,
            SignalKind::InverseLinear => 0.2,
        })
    }

    pub fn layout(&self) -> Layout {
        Layout {
            kind: self.layout,
            landmarks: self.landmarks,
            dim: self.dim,
            extent: self.extent,
            radius: self.radius,
            center: None,
            seed: self.seed,
        }
    }

    pub fn signal_model(&self) -> SignalModel {
        match self.signal_model {
            SignalKind::Pathloss => SignalModel::Pathloss(PathlossParams::uniform(
                self.landmarks,
                self.tx_power,
                self.pathloss_exponent,
                self.noise_std(),
                self.d0,
            )),
            SignalKind::InverseLinear => SignalModel::InverseLinear(InverseLinearParams::uniform(
                self.landmarks,
                self.scale,
                self.noise_std(),
                self.d0,
            )),
        }
    }

    pub fn train_config(&self) -> TrainConfig {
        TrainConfig {
            n: self.n,
            dim: self.dim,
            learning_rate: self.learning_rate,
            batch_size: self.batch_size,
            max_epochs: self.max_epochs,
            tau: self.tau,
            seed: self.train_seed(),
            optimizer: match self.optimizer {
                OptimizerKind::Sgd => Optimizer::Sgd,
                OptimizerKind::Adam => Optimizer::Adam {
                    beta1: self.adam_beta1,
                    beta2: self.adam_beta2,
                    epsilon: self.adam_epsilon,
                },
            },
        }
    }

    /// Seed for agent sampling and measurement noise.
    pub fn data_seed(&self) -> u64 {
        self.seed.wrapping_add(1)
    }

    /// Seed for the train/validation split.
    pub fn split_seed(&self) -> u64 {
        self.seed.wrapping_add(2)
    }

    /// Seed for weight initialization and epoch shuffling.
    pub fn train_seed(&self) -> u64 {
        self.seed.wrapping_add(3)
    }

    /// Checks every parameter group.
    pub fn validate(&self) -> Result<(), ConfigError> {
        let err = |message: String| ConfigError {
            origin: Origin::Default,
            key: None,
            message,
        };
        self.layout().validate().map_err(|e| err(e.to_string()))?;
        if self.num_measurements == 0 {
            return Err(err("num_measurements must be >= 1".to_string()));
        }
        if !(self.region_margin.is_finite() && self.region_margin >= 0.0) {
            return Err(err("region_margin must be >= 0".to_string()));
        }
        if !(self.train_fraction > 0.0 && self.train_fraction < 1.0) {
            return Err(err(format!(
                "train_fraction {} must lie in (0, 1)",
                self.train_fraction
            )));
        }
        if self.n > self.landmarks {
            return Err(err(format!(
                "n = {} exceeds landmarks = {}",
                self.n, self.landmarks
            )));
        }
        // Probe the signal parameters with a throwaway two-point map.
        let probe =
            landmark2vec::LandmarkMap::new(self.dim, vec![vec![0.0; self.dim]; self.landmarks])
                .map_err(|e| err(e.to_string()))?;
        let region = landmark2vec::simgen::Region::new(vec![1.0; self.dim], vec![1.0; self.dim])
            .map_err(|e| err(e.to_string()))?;
        landmark2vec::simgen::generate(&probe, 1, &region, &self.signal_model(), 0)
            .map_err(|e| err(e.to_string()))?;
        self.train_config()
            .validate()
            .map_err(|e| err(e.to_string()))
    }
}
