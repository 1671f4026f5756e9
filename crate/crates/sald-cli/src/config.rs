//! Experiment configuration: a JSON file plus command-line overrides.
//!
//! Schema (all fields optional unless noted; defaults shown):
//!
//! ```json
//! {
//!   "inputs": ["shape.seg2d"],        // geometry files; >1 trains a shape space (required unless "samples" given)
//!   "samples": ["shape.sald"],        // precomputed sample files; overrides "inputs"
//!   "loss_kind": "sald",              // "sal" | "sald"
//!   "lambda": 0.1,
//!   "net": { "hidden": 128, "depth": 4, "latent_dim": 0, "beta": 100.0, "init_radius": 0.5 },
//!   "train": { "epochs": 5000, "lr": 0.0005, "lr_decay": null, "batch_points": 512 },
//!   "sample": { "total": 50000, "n_surface": null, "k": 50, "sigma2": 0.3, "grad_fraction": 0.3333 },
//!   "grid": { "res": 256, "margin": 0.25 },
//!   "out_dir": "out",
//!   "seed": 0
//! }
//! ```
//!
//! `lr_decay` takes `{ "factor": 0.5, "every_n_epochs": 500 }`.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use sald::geometry::SampleParams;
use sald::train::{LossKind, LrDecay, TrainConfig};

use crate::pipeline::PipelineError;

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields, default)]
pub struct ExperimentConfig {
    pub inputs: Vec<PathBuf>,
    pub samples: Vec<PathBuf>,
    pub loss_kind: LossKindConfig,
    pub lambda: f64,
    pub net: NetConfig,
    pub train: TrainSchedule,
    pub sample: SampleConfig,
    pub grid: GridConfig,
    pub out_dir: PathBuf,
    pub seed: u64,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            inputs: Vec::new(),
            samples: Vec::new(),
            loss_kind: LossKindConfig::Sald,
            lambda: 0.1,
            net: NetConfig::default(),
            train: TrainSchedule::default(),
            sample: SampleConfig::default(),
            grid: GridConfig::default(),
            out_dir: PathBuf::from("out"),
            seed: 0,
        }
    }
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize, PartialEq, Eq)]
#[serde(rename_all = "lowercase")]
pub enum LossKindConfig {
    Sal,
    Sald,
}

impl From<LossKindConfig> for LossKind {
    fn from(k: LossKindConfig) -> Self {
        match k {
            LossKindConfig::Sal => LossKind::Sal,
            LossKindConfig::Sald => LossKind::Sald,
        }
    }
}

impl std::str::FromStr for LossKindConfig {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "sal" => Ok(Self::Sal),
            "sald" => Ok(Self::Sald),
            other => Err(format!("unknown loss kind {other:?} (expected sal or sald)")),
        }
    }
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields, default)]
pub struct NetConfig {
    pub hidden: usize,
    pub depth: usize,
    pub latent_dim: usize,
    pub beta: f64,
    pub init_radius: f64,
}

impl Default for NetConfig {
    fn default() -> Self {
        Self {
            hidden: 128,
            depth: 4,
            latent_dim: 0,
            beta: 100.0,
            init_radius: 0.5,
        }
    }
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields, default)]
pub struct TrainSchedule {
    pub epochs: usize,
    pub lr: f64,
    pub lr_decay: Option<LrDecayConfig>,
    pub batch_points: usize,
}

impl Default for TrainSchedule {
    fn default() -> Self {
        Self {
            epochs: 5000,
            lr: 5e-4,
            lr_decay: None,
            batch_points: 512,
        }
    }
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct LrDecayConfig {
    pub factor: f64,
    pub every_n_epochs: usize,
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields, default)]
pub struct SampleConfig {
    pub total: usize,
    /// Gaussian centers; derived from `total` when absent.
    pub n_surface: Option<usize>,
    pub k: usize,
    pub sigma2: f64,
    pub grad_fraction: f64,
}

impl Default for SampleConfig {
    fn default() -> Self {
        Self {
            total: 50_000,
            n_surface: None,
            k: 50,
            sigma2: 0.3,
            grad_fraction: 1.0 / 3.0,
        }
    }
}

impl SampleConfig {
    pub fn params(&self, seed: u64) -> SampleParams {
        let mut p = SampleParams::new(self.total, seed);
        p.k = self.k;
        p.sigma2 = self.sigma2;
        p.grad_fraction = self.grad_fraction;
        if let Some(n) = self.n_surface {
            p.n_surface = n;
        } else {
            p.n_surface = (self.total / 6).max(self.k + 1);
        }
        p
    }
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields, default)]
pub struct GridConfig {
    /// Nodes per axis.
    pub res: usize,
    /// Padding added around the geometry bounds, in world units.
    pub margin: f64,
}

impl Default for GridConfig {
    fn default() -> Self {
        Self {
            res: 256,
            margin: 0.25,
        }
    }
}

impl ExperimentConfig {
    pub fn load(path: &Path) -> Result<Self, PipelineError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| PipelineError::Usage(format!("cannot read {}: {e}", path.display())))?;
        let cfg: Self = serde_json::from_str(&text)
            .map_err(|e| PipelineError::Usage(format!("{}: {e}", path.display())))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<(), PipelineError> {
        if self.lambda < 0.0 {
            return Err(PipelineError::Usage("lambda must be nonnegative".into()));
        }
        if self.train.lr <= 0.0 || self.train.batch_points == 0 {
            return Err(PipelineError::Usage(
                "learning rate must be positive and batch_points nonzero".into(),
            ));
        }
        if self.inputs.is_empty() && self.samples.is_empty() {
            return Err(PipelineError::Usage(
                "config needs at least one entry in \"inputs\" or \"samples\"".into(),
            ));
        }
        let shapes = self.samples.len().max(self.inputs.len());
        if shapes > 1 && self.net.latent_dim == 0 {
            return Err(PipelineError::Usage(
                "multiple shapes need net.latent_dim > 0 (auto-decoder)".into(),
            ));
        }
        for p in self.inputs.iter().chain(&self.samples) {
            if !p.exists() {
                return Err(PipelineError::Usage(format!(
                    "input path {} does not exist",
                    p.display()
                )));
            }
        }
        Ok(())
    }

    pub fn train_config(&self) -> TrainConfig {
        TrainConfig {
            epochs: self.train.epochs,
            lr: self.train.lr,
            lr_decay: self.train.lr_decay.map(|d| LrDecay {
                factor: d.factor,
                every_n_epochs: d.every_n_epochs,
            }),
            batch_points: self.train.batch_points,
            lambda: self.lambda,
            loss_kind: self.loss_kind.into(),
            latent_dim: self.net.latent_dim,
            seed: self.seed,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_round_trip_through_json() {
        let cfg = ExperimentConfig::default();
        let text = serde_json::to_string_pretty(&cfg).unwrap();
        let back: ExperimentConfig = serde_json::from_str(&text).unwrap();
        assert_eq!(cfg, back);
    }

    #[test]
    fn unknown_fields_are_rejected() {
        let r: Result<ExperimentConfig, _> = serde_json::from_str(r#"{"lamda": 0.1}"#);
        assert!(r.is_err());
    }

    #[test]
    fn lambda_must_be_nonnegative() {
        let mut cfg = ExperimentConfig::default();
        cfg.inputs.push(PathBuf::from("/"));
        cfg.lambda = -1.0;
        assert!(cfg.validate().is_err());
    }
}
