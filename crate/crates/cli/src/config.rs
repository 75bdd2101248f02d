use std::path::{Path, PathBuf};

use gesture_core::annotation::{DEFAULT_CONFIDENCE_WINDOW, DEFAULT_MAX_GAP, DEFAULT_OVERLAP, DEFAULT_SIGMA};
use gesture_core::audio::MfccConfig;
use gesture_core::evaluation::DEFAULT_LIP_VERTICES;
use gesture_core::model::{DiscriminatorConfig, GeneratorConfig};
use gesture_core::training::{LossWeights, SyncConfig, TrainConfig};
use gesture_core::{Error, Result};
use serde::{Deserialize, Serialize};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct PreprocessConfig {
    pub confidence_threshold: f64,
    pub confidence_window: usize,
    pub max_gap: usize,
}

impl Default for PreprocessConfig {
    fn default() -> Self {
        Self { confidence_threshold: 0.5, confidence_window: DEFAULT_CONFIDENCE_WINDOW, max_gap: DEFAULT_MAX_GAP }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct EvaluationConfig {
    /// GCK1 lip basis; a seeded synthetic basis is used when absent.
    pub lip_basis: Option<PathBuf>,
    pub lip_vertices: usize,
    /// Window lengths at which a sync classifier is trained and scored.
    pub sync_window_lengths: Vec<usize>,
}

impl Default for EvaluationConfig {
    fn default() -> Self {
        Self { lip_basis: None, lip_vertices: DEFAULT_LIP_VERTICES, sync_window_lengths: vec![64] }
    }
}

/// Every tunable of a run. Relative paths are resolved against the
/// directory of the configuration file.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RunConfig {
    pub seed: u64,
    pub subject: Option<String>,
    pub manifest: Option<PathBuf>,
    pub metrics: Option<PathBuf>,
    pub mfcc: MfccConfig,
    pub preprocess: PreprocessConfig,
    pub overlap: usize,
    pub generator: GeneratorConfig,
    pub discriminator: DiscriminatorConfig,
    pub weights: LossWeights,
    pub train: TrainConfig,
    pub sync: SyncConfig,
    pub smoothing_sigma: f64,
    pub evaluation: EvaluationConfig,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            seed: 0,
            subject: None,
            manifest: None,
            metrics: None,
            mfcc: MfccConfig::default(),
            preprocess: PreprocessConfig::default(),
            overlap: DEFAULT_OVERLAP,
            generator: GeneratorConfig::default(),
            discriminator: DiscriminatorConfig::default(),
            weights: LossWeights::default(),
            train: TrainConfig::default(),
            sync: SyncConfig::default(),
            smoothing_sigma: DEFAULT_SIGMA,
            evaluation: EvaluationConfig::default(),
        }
    }
}

impl RunConfig {
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::Io { path: path.to_path_buf(), source: e })?;
        let mut config: Self =
            serde_json::from_str(&text).map_err(|e| Error::Config(format!("{}: {e}", path.display())))?;
        let base = path.parent().unwrap_or(Path::new("."));
        for p in [&mut config.manifest, &mut config.metrics, &mut config.evaluation.lip_basis].into_iter().flatten() {
            if p.is_relative() {
                *p = base.join(&*p);
            }
        }
        Ok(config)
    }

    pub fn load_or_default(path: Option<&Path>) -> Result<Self> {
        path.map_or_else(|| Ok(Self::default()), Self::load)
    }

    /// Pushes the run seed into the sub-configurations and checks them.
    pub fn finalize(&mut self) -> Result<()> {
        self.train.seed = self.seed;
        self.sync.seed = self.seed;
        self.generator.validate()?;
        self.discriminator.validate()?;
        self.weights.validate()?;
        self.train.validate()?;
        self.sync.validate()?;
        if !(1..=5).contains(&self.overlap) {
            return Err(Error::Config(format!("overlap must be in 1..=5, got {}", self.overlap)));
        }
        if !(self.smoothing_sigma > 0.0 && self.smoothing_sigma.is_finite()) {
            return Err(Error::Config(format!("smoothing_sigma must be positive, got {}", self.smoothing_sigma)));
        }
        Ok(())
    }
}
