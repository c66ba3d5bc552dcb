//! Experiment configuration, read from a TOML file.
//!
//! Every field has a default; an empty file is a valid configuration. See
//! [`ExperimentConfig::default_toml`] for the full annotated schema.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::knn::Metric;
use crate::autoencoder::{AEConfig, MeanGrad};
use crate::dataio::SplitSpec;
use crate::exclusivity::Reduction;
use crate::numkit::Activation;
use crate::stacking::{FineTuneConfig, StackConfig};
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DataSource {
    #[default]
    Synth,
    Idx,
    ImageDir,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DataConfig {
    pub source: DataSource,
    // synth
    pub classes: usize,
    pub dim: usize,
    pub per_class: usize,
    pub spread: f64,
    pub seed: u64,
    // idx
    pub images: Option<PathBuf>,
    pub labels: Option<PathBuf>,
    /// A separate test set replaces the per-class split.
    pub test_images: Option<PathBuf>,
    pub test_labels: Option<PathBuf>,
    pub train_limit: Option<usize>,
    pub test_limit: Option<usize>,
    // image_dir
    pub root: Option<PathBuf>,
}

impl Default for DataConfig {
    fn default() -> Self {
        Self {
            source: DataSource::Synth,
            classes: 3,
            dim: 32,
            per_class: 100,
            spread: 0.12,
            seed: 0,
            images: None,
            labels: None,
            test_images: None,
            test_labels: None,
            train_limit: None,
            test_limit: None,
            root: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SplitConfig {
    pub per_class_train: usize,
    pub mirror_train: bool,
}

impl Default for SplitConfig {
    fn default() -> Self {
        Self {
            per_class_train: 10,
            mirror_train: true,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ModelConfig {
    /// Latent width of each stacked level; the number of entries is the stack depth.
    pub hidden: Vec<usize>,
    pub encoder_activation: Activation,
    pub latent_activation: Activation,
    pub decoder_activation: Activation,
    /// Output activation of the first level (reconstructs `[0, 1]` inputs).
    pub output_activation: Activation,
    /// Output activation of deeper levels (reconstruct latent codes).
    pub inner_output_activation: Activation,
    pub lambda: f64,
    pub m: usize,
    pub lr: f64,
    pub epochs: usize,
    pub batch_size: usize,
    pub sum_mode: Reduction,
    pub mean_grad: MeanGrad,
}

impl Default for ModelConfig {
    fn default() -> Self {
        Self {
            hidden: vec![512, 256, 128],
            encoder_activation: Activation::Relu,
            latent_activation: Activation::Relu,
            decoder_activation: Activation::Relu,
            output_activation: Activation::Sigmoid,
            inner_output_activation: Activation::Identity,
            lambda: 7.0,
            m: 6,
            lr: 0.05,
            epochs: 50,
            batch_size: 32,
            sum_mode: Reduction::BatchMean,
            mean_grad: MeanGrad::Full,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FineTuneSection {
    pub eta: f64,
    pub p: f64,
    pub epochs: usize,
    pub lr: f64,
    pub batch_size: usize,
    pub exclusivity: bool,
    pub sum_mode: Reduction,
}

impl Default for FineTuneSection {
    fn default() -> Self {
        Self {
            eta: 0.6,
            p: 2.0,
            epochs: 50,
            lr: 0.05,
            batch_size: 32,
            exclusivity: false,
            sum_mode: Reduction::BatchMean,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EvalConfig {
    pub knn_k: usize,
    pub metric: Metric,
    pub trials: usize,
    pub base_seed: u64,
}

impl Default for EvalConfig {
    fn default() -> Self {
        Self {
            knn_k: 1,
            metric: Metric::Euclidean,
            trials: 10,
            base_seed: 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OutputConfig {
    /// Directory for `metrics.csv`, `summary.csv` and `timings.csv`; nothing is written if unset.
    pub dir: Option<PathBuf>,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentConfig {
    pub data: DataConfig,
    pub split: SplitConfig,
    pub model: ModelConfig,
    pub finetune: FineTuneSection,
    pub eval: EvalConfig,
    pub output: OutputConfig,
}

/// splitmix64 finaliser; derives independent seeds from one trial seed.
pub fn derive_seed(seed: u64, tag: u64) -> u64 {
    let mut z = seed
        .wrapping_add(tag.wrapping_mul(0x9E37_79B9_7F4A_7C15))
        .wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

impl ExperimentConfig {
    pub fn from_toml(text: &str) -> Result<Self> {
        let cfg: Self = toml::from_str(text)?;
        cfg.validate()?;
        Ok(cfg)
    }

    /// Parses a file; relative data and output paths resolve against its directory.
    pub fn from_file(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let mut cfg = Self::from_toml(&text)?;
        if let Some(base) = path.parent() {
            cfg.resolve_paths(base);
        }
        Ok(cfg)
    }

    pub fn resolve_paths(&mut self, base: &Path) {
        let fix = |p: &mut Option<PathBuf>| {
            if let Some(q) = p.as_mut() {
                if q.is_relative() {
                    *q = base.join(&*q);
                }
            }
        };
        let d = &mut self.data;
        for p in [&mut d.images, &mut d.labels, &mut d.test_images, &mut d.test_labels, &mut d.root] {
            fix(p);
        }
        fix(&mut self.output.dir);
    }

    pub fn to_toml(&self) -> String {
        toml::to_string_pretty(self).expect("config is always serialisable")
    }

    /// The default configuration, annotated.
    pub fn default_toml() -> String {
        let body = Self::default().to_toml();
        format!(
            "# eeae experiment configuration. Every key is optional.\n\
             #\n\
             # [data]      source = synth | idx | image_dir; synth uses classes/dim/per_class/spread/seed,\n\
             #             idx uses images/labels (+ optional test_images/test_labels, train_limit/test_limit),\n\
             #             image_dir uses root (one subdirectory of P5 graymaps per class).\n\
             # [split]     per-class train selection (seeded by the trial seed), optional mirroring.\n\
             # [model]     one stacked level per entry of `hidden`; lambda weighs the exclusivity term,\n\
             #             m is the homologous neighbour count; sum_mode = batch_mean | paper_sum;\n\
             #             mean_grad = full | stopped.\n\
             # [finetune]  eta bounds the per-layer weight-norm ratio to [1 - eta, 1 + eta]; p is the norm order.\n\
             # [eval]      knn_k neighbours, metric = euclidean | cosine; trial t uses seed base_seed + t.\n\
             # [output]    dir receives metrics.csv, summary.csv and timings.csv.\n\n{body}"
        )
    }

    pub fn validate(&self) -> Result<()> {
        if self.eval.trials == 0 {
            return Err(Error::InvalidConfig("trials must be >= 1".into()));
        }
        if self.eval.knn_k == 0 {
            return Err(Error::InvalidConfig("knn_k must be >= 1".into()));
        }
        if self.model.hidden.is_empty() {
            return Err(Error::InvalidConfig("model.hidden needs at least one level".into()));
        }
        if self.split.per_class_train == 0 {
            return Err(Error::InvalidConfig("per_class_train must be >= 1".into()));
        }
        match self.data.source {
            DataSource::Idx if self.data.images.is_none() || self.data.labels.is_none() => {
                Err(Error::InvalidConfig("idx source needs data.images and data.labels".into()))
            }
            DataSource::ImageDir if self.data.root.is_none() => {
                Err(Error::InvalidConfig("image_dir source needs data.root".into()))
            }
            _ => Ok(()),
        }
    }

    pub fn split_spec(&self, seed: u64) -> SplitSpec {
        SplitSpec {
            per_class_train: self.split.per_class_train,
            seed,
            mirror_train: self.split.mirror_train,
        }
    }

    /// Per-level autoencoder configs for input width `input_dim`, seeded from `seed`.
    pub fn level_configs(&self, input_dim: usize, seed: u64) -> Vec<AEConfig> {
        let m = &self.model;
        let mut prev = input_dim;
        m.hidden
            .iter()
            .enumerate()
            .map(|(k, &width)| {
                let cfg = AEConfig {
                    layer_sizes: vec![prev, width],
                    encoder_activation: m.encoder_activation,
                    latent_activation: m.latent_activation,
                    decoder_activation: m.decoder_activation,
                    output_activation: if k == 0 {
                        m.output_activation
                    } else {
                        m.inner_output_activation
                    },
                    lambda: m.lambda,
                    m: m.m,
                    lr: m.lr,
                    epochs: m.epochs,
                    batch_size: m.batch_size,
                    seed: derive_seed(seed, 1 + k as u64),
                    sum_mode: m.sum_mode,
                    mean_grad: m.mean_grad,
                };
                prev = width;
                cfg
            })
            .collect()
    }

    /// A single autoencoder covering every `hidden` width in one encoder.
    pub fn single_config(&self, input_dim: usize, seed: u64) -> AEConfig {
        let m = &self.model;
        let mut sizes = vec![input_dim];
        sizes.extend_from_slice(&m.hidden);
        AEConfig {
            layer_sizes: sizes,
            encoder_activation: m.encoder_activation,
            latent_activation: m.latent_activation,
            decoder_activation: m.decoder_activation,
            output_activation: m.output_activation,
            lambda: m.lambda,
            m: m.m,
            lr: m.lr,
            epochs: m.epochs,
            batch_size: m.batch_size,
            seed: derive_seed(seed, 1),
            sum_mode: m.sum_mode,
            mean_grad: m.mean_grad,
        }
    }

    pub fn stack_config(&self, input_dim: usize, seed: u64) -> StackConfig {
        let f = &self.finetune;
        StackConfig {
            levels: self.level_configs(input_dim, seed),
            eta: f.eta,
            p: f.p,
            finetune: FineTuneConfig {
                epochs: f.epochs,
                lr: f.lr,
                batch_size: f.batch_size,
                seed: derive_seed(seed, 0xF1E),
                exclusivity: f.exclusivity,
                lambda: self.model.lambda,
                m: self.model.m,
                sum_mode: f.sum_mode,
            },
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_match_documented_operating_point() {
        let c = ExperimentConfig::from_toml("").unwrap();
        assert_eq!(c.model.lambda, 7.0);
        assert_eq!(c.model.m, 6);
        assert_eq!(c.model.hidden.len(), 3);
        assert_eq!(*c.model.hidden.last().unwrap(), 128);
        assert_eq!(c.finetune.eta, 0.6);
        assert_eq!(c.eval.knn_k, 1);
        assert_eq!(c.eval.trials, 10);
    }

    #[test]
    fn default_toml_round_trips() {
        let text = ExperimentConfig::default_toml();
        assert_eq!(ExperimentConfig::from_toml(&text).unwrap(), ExperimentConfig::default());
    }

    #[test]
    fn partial_config_and_unknown_keys() {
        let c = ExperimentConfig::from_toml("[model]\nlambda = 0.0\nhidden = [16, 8]\nsum_mode = \"paper_sum\"\n").unwrap();
        assert_eq!(c.model.lambda, 0.0);
        assert_eq!(c.model.sum_mode, Reduction::PaperSum);
        assert!(ExperimentConfig::from_toml("[model]\nlamda = 1.0\n").is_err());
        assert!(ExperimentConfig::from_toml("[eval]\ntrials = 0\n").is_err());
        assert!(ExperimentConfig::from_toml("[data]\nsource = \"idx\"\n").is_err());
    }

    #[test]
    fn level_dimensions_chain() {
        let c = ExperimentConfig::from_toml("[model]\nhidden = [16, 8, 4]\n").unwrap();
        let s = c.stack_config(32, 5);
        s.validate().unwrap();
        let sizes: Vec<_> = s.levels.iter().map(|l| l.layer_sizes.clone()).collect();
        assert_eq!(sizes, vec![vec![32, 16], vec![16, 8], vec![8, 4]]);
        assert_eq!(s.levels[0].output_activation, Activation::Sigmoid);
        assert_eq!(s.levels[1].output_activation, Activation::Identity);
        assert_ne!(s.levels[0].seed, s.levels[1].seed);
    }

    #[test]
    fn relative_paths_resolve_against_config_dir() {
        let mut c = ExperimentConfig::from_toml("[data]\nsource = \"idx\"\nimages = \"a\"\nlabels = \"/abs/b\"\n").unwrap();
        c.resolve_paths(Path::new("/cfg"));
        assert_eq!(c.data.images, Some(PathBuf::from("/cfg/a")));
        assert_eq!(c.data.labels, Some(PathBuf::from("/abs/b")));
    }
}
