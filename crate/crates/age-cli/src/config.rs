//! Strict JSON run configuration: unknown keys are rejected, every default
//! is materialized back out so a run can be reproduced from its artifacts.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use age_core::data::{self, Dataset};
use age_core::divergence::DivergenceMethod;
use age_core::game::{GameConfig, ModelConfig};
use age_core::latent::Prior;
use age_core::nets::Activation;

pub const DEFAULT_LATENT_DIM: usize = 2;

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub data: DataSection,
    #[serde(default)]
    pub model: ModelSection,
    #[serde(default)]
    pub train: TrainSection,
    pub out_dir: PathBuf,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DataSection {
    pub kind: String,
    #[serde(default)]
    pub params: DataParams,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub path: Option<PathBuf>,
}

// Per-field defaults keep partial sections valid: overriding one knob does
// not force spelling out the rest.

fn d_n_modes() -> usize { 8 }
fn d_radius() -> f64 { 2.0 }
fn d_mode_std() -> f64 { 0.02 }
fn d_n() -> usize { 8000 }
fn d_data_seed() -> u64 { 1 }
fn d_x0() -> Vec<f64> { vec![0.0, 0.0] }

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DataParams {
    #[serde(default = "d_n_modes")]
    pub n_modes: usize,
    #[serde(default = "d_radius")]
    pub radius: f64,
    #[serde(default = "d_mode_std")]
    pub std: f64,
    #[serde(default = "d_n")]
    pub n: usize,
    #[serde(default = "d_data_seed")]
    pub seed: u64,
    /// Point-mass location.
    #[serde(default = "d_x0")]
    pub x0: Vec<f64>,
}

impl Default for DataParams {
    fn default() -> Self {
        DataParams {
            n_modes: d_n_modes(),
            radius: d_radius(),
            std: d_mode_std(),
            n: d_n(),
            seed: d_data_seed(),
            x0: d_x0(),
        }
    }
}

fn d_latent() -> usize { DEFAULT_LATENT_DIM }
fn d_widths() -> Vec<usize> { vec![64, 64] }
fn d_prior() -> Prior { Prior::Sphere }
fn d_activation() -> Activation { Activation::LeakyRelu }
fn d_slope() -> f64 { 0.2 }

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelSection {
    #[serde(rename = "M", default = "d_latent")]
    pub latent_dim: usize,
    #[serde(default = "d_widths")]
    pub encoder_widths: Vec<usize>,
    #[serde(default = "d_widths")]
    pub generator_widths: Vec<usize>,
    #[serde(default = "d_prior")]
    pub prior: Prior,
    #[serde(default)]
    pub condition: bool,
    #[serde(default = "d_activation")]
    pub activation: Activation,
    #[serde(default = "d_slope")]
    pub leaky_slope: f64,
}

impl Default for ModelSection {
    fn default() -> Self {
        ModelSection {
            latent_dim: d_latent(),
            encoder_widths: d_widths(),
            generator_widths: d_widths(),
            prior: d_prior(),
            condition: false,
            activation: d_activation(),
            leaky_slope: d_slope(),
        }
    }
}

fn d_iters() -> usize { 20000 }
fn d_batch() -> usize { GameConfig::default().batch_size }
fn d_lr() -> f64 { GameConfig::default().lr }
fn d_lambda() -> f64 { GameConfig::default().lambda }
fn d_mu() -> f64 { GameConfig::default().mu }
fn d_ratio() -> usize { GameConfig::default().gen_updates_per_enc }
fn d_method() -> DivergenceMethod { GameConfig::default().divergence_method }
fn d_beta1() -> f64 { GameConfig::default().beta1 }
fn d_beta2() -> f64 { GameConfig::default().beta2 }
fn d_epsilon() -> f64 { GameConfig::default().epsilon }

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TrainSection {
    #[serde(default = "d_iters")]
    pub iters: usize,
    #[serde(default = "d_batch")]
    pub batch_size: usize,
    #[serde(default = "d_lr")]
    pub lr: f64,
    #[serde(default = "d_lambda")]
    pub lambda: f64,
    #[serde(default = "d_mu")]
    pub mu: f64,
    #[serde(default = "d_ratio")]
    pub gen_updates_per_enc: usize,
    #[serde(default)]
    pub seed: u64,
    #[serde(default = "d_method")]
    pub divergence_method: DivergenceMethod,
    #[serde(default = "d_beta1")]
    pub beta1: f64,
    #[serde(default = "d_beta2")]
    pub beta2: f64,
    #[serde(default = "d_epsilon")]
    pub epsilon: f64,
}

impl Default for TrainSection {
    fn default() -> Self {
        TrainSection {
            iters: d_iters(),
            batch_size: d_batch(),
            lr: d_lr(),
            lambda: d_lambda(),
            mu: d_mu(),
            gen_updates_per_enc: d_ratio(),
            seed: 0,
            divergence_method: d_method(),
            beta1: d_beta1(),
            beta2: d_beta2(),
            epsilon: d_epsilon(),
        }
    }
}

impl RunConfig {
    pub fn load(path: &Path) -> Result<RunConfig, String> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| format!("cannot read config {}: {e}", path.display()))?;
        let cfg: RunConfig =
            serde_json::from_str(&text).map_err(|e| format!("invalid config: {e}"))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<(), String> {
        match self.data.kind.as_str() {
            "ring" | "checkerboard" | "point-mass" => {}
            "csv" => {
                if self.data.path.is_none() {
                    return Err("data.path is required for data.kind = \"csv\"".into());
                }
            }
            other => {
                return Err(format!(
                    "data.kind: unknown kind {other:?}, expected ring | checkerboard | point-mass | csv"
                ))
            }
        }
        self.game_config().validate().map_err(|e| format!("train: {e}"))?;
        if self.model.encoder_widths.iter().chain(&self.model.generator_widths).any(|&w| w == 0) {
            return Err("model: zero-width layer".into());
        }
        Ok(())
    }

    pub fn game_config(&self) -> GameConfig {
        GameConfig {
            latent_dim: self.model.latent_dim,
            lambda: self.train.lambda,
            mu: self.train.mu,
            gen_updates_per_enc: self.train.gen_updates_per_enc,
            batch_size: self.train.batch_size,
            lr: self.train.lr,
            divergence_method: self.train.divergence_method,
            prior: self.model.prior,
            beta1: self.train.beta1,
            beta2: self.train.beta2,
            epsilon: self.train.epsilon,
        }
    }

    pub fn model_config(&self) -> ModelConfig {
        ModelConfig {
            encoder_hidden: self.model.encoder_widths.clone(),
            generator_hidden: self.model.generator_widths.clone(),
            activation: self.model.activation,
            leaky_slope: self.model.leaky_slope,
            condition: self.model.condition,
        }
    }

    pub fn build_dataset(&self) -> age_core::Result<Dataset> {
        let p = &self.data.params;
        match self.data.kind.as_str() {
            "ring" => data::make_gaussian_ring(p.n_modes, p.radius, p.std, p.n, p.seed),
            "checkerboard" => data::make_checkerboard(p.n, p.seed),
            "point-mass" => data::make_point_mass(&p.x0, p.n),
            "csv" => data::load_csv(self.data.path.as_ref().expect("validated")),
            other => Err(age_core::Error::invalid(format!("unknown data kind {other}"))),
        }
    }
}
