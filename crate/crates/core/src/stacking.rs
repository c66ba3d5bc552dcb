//! Greedy layerwise pretraining of several autoencoders, assembly of the deep network
//! (encoders in level order, decoders in reverse level order) and end-to-end fine-tuning
//! with each weight matrix held inside a norm band around its pretrained value:
//! `1 − η ≤ ‖W_F‖ₚ / ‖W_F′‖ₚ ≤ 1 + η`.

use serde::{Deserialize, Serialize};

use crate::autoencoder::{encode, train, train_loop, AEConfig, AEModel, LossBreakdown, Objective, TrainOptions};
use crate::exclusivity::{ExclusivityContext, Reduction, DEFAULT_EPS};
use crate::numkit::{lp_norm, Matrix};
use crate::{Error, MeanGrad, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FineTuneConfig {
    pub epochs: usize,
    pub lr: f64,
    pub batch_size: usize,
    pub seed: u64,
    /// Add the exclusivity term during fine-tuning (ablation; off by default).
    pub exclusivity: bool,
    pub lambda: f64,
    pub m: usize,
    pub sum_mode: Reduction,
}

impl Default for FineTuneConfig {
    fn default() -> Self {
        Self {
            epochs: 50,
            lr: 0.05,
            batch_size: 32,
            seed: 0,
            exclusivity: false,
            lambda: 7.0,
            m: 6,
            sum_mode: Reduction::BatchMean,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct StackConfig {
    /// One config per level; level `k`'s input width is level `k − 1`'s latent width.
    pub levels: Vec<AEConfig>,
    pub eta: f64,
    pub p: f64,
    pub finetune: FineTuneConfig,
}

impl StackConfig {
    pub fn validate(&self) -> Result<()> {
        if self.levels.is_empty() {
            return Err(Error::InvalidConfig("a stack needs at least one level".into()));
        }
        for (k, lvl) in self.levels.iter().enumerate() {
            lvl.validate().map_err(|e| Error::Level {
                level: k,
                source: Box::new(e),
            })?;
        }
        for (k, w) in self.levels.windows(2).enumerate() {
            let latent = *w[0].layer_sizes.last().expect("validated");
            if w[1].layer_sizes[0] != latent {
                return Err(Error::InvalidConfig(format!(
                    "level {} input width {} does not match level {k} latent width {latent}",
                    k + 1,
                    w[1].layer_sizes[0]
                )));
            }
        }
        if !(self.eta >= 0.0 && self.eta.is_finite()) {
            return Err(Error::InvalidConfig(format!("eta must be >= 0, got {}", self.eta)));
        }
        if !(self.p >= 1.0) {
            return Err(Error::InvalidConfig(format!("norm order p must be >= 1, got {}", self.p)));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct StackedModel {
    pub levels: Vec<AEModel>,
    pub assembled: AEModel,
    /// `‖W‖ₚ` of every assembled layer at assembly time, in `assembled.layers()` order.
    pub snapshots: Vec<f64>,
}

/// Per-level training histories from [`train_stack`].
pub type LevelHistories = Vec<Vec<LossBreakdown>>;

#[derive(Debug, Clone, PartialEq, Default)]
pub struct FineTuneHistory {
    pub losses: Vec<LossBreakdown>,
    /// Post-projection `‖W_F‖ₚ / ‖W_F′‖ₚ` of every layer, one row per epoch.
    pub ratios: Vec<Vec<f64>>,
}

/// Stacks level encoders in order and level decoders in reverse order, recording the
/// weight-norm snapshots.
pub fn assemble(levels: &[AEModel], p: f64) -> Result<StackedModel> {
    if levels.is_empty() {
        return Err(Error::invalid("cannot assemble an empty stack"));
    }
    let encoder = levels.iter().flat_map(|m| m.encoder.iter().cloned()).collect();
    let decoder = levels.iter().rev().flat_map(|m| m.decoder.iter().cloned()).collect();
    let assembled = AEModel::new(encoder, decoder)?;
    let snapshots: Vec<f64> = assembled.layers().map(|l| l.weight.flat_norm(p)).collect();
    if let Some(i) = snapshots.iter().position(|&s| !(s > 0.0 && s.is_finite())) {
        return Err(Error::invalid(format!("layer {i} has a zero or non-finite weight norm")));
    }
    Ok(StackedModel {
        levels: levels.to_vec(),
        assembled,
        snapshots,
    })
}

/// Greedy pretraining: level 0 on raw data, level `k` on level `k − 1`'s codes. Each level
/// builds its own exclusivity context in its own input space.
pub fn train_stack(config: &StackConfig, dataset: &Matrix) -> Result<(StackedModel, LevelHistories)> {
    config.validate()?;
    let mut input = dataset.clone();
    let mut levels = Vec::with_capacity(config.levels.len());
    let mut histories = Vec::with_capacity(config.levels.len());
    for (k, cfg) in config.levels.iter().enumerate() {
        let wrap = |e| Error::Level {
            level: k,
            source: Box::new(e),
        };
        let mut model = AEModel::init(cfg).map_err(wrap)?;
        let history = train(&mut model, cfg, &input).map_err(wrap)?;
        if k + 1 < config.levels.len() {
            input = encode(&model, &input).map_err(wrap)?;
        }
        levels.push(model);
        histories.push(history);
    }
    Ok((assemble(&levels, config.p)?, histories))
}

/// `‖W_F‖ₚ / ‖W_F′‖ₚ` with the current weight flattened.
pub fn weight_ratio(snapshot_norm: f64, current_weight: &Matrix, p: f64) -> Result<f64> {
    if !(snapshot_norm > 0.0) {
        return Err(Error::invalid(format!("snapshot norm must be > 0, got {snapshot_norm}")));
    }
    let cur = current_weight.flat_norm(p);
    if cur == 0.0 || !cur.is_finite() {
        return Err(Error::NonFinite(format!("current weight norm is {cur}")));
    }
    Ok(snapshot_norm / cur)
}

/// Rescales `current_weight` so its ratio to the snapshot lies in `[1 − η, 1 + η]`.
/// In-band weights are returned unchanged; for `η ≥ 1` the lower edge never binds.
pub fn project_to_band(snapshot_norm: f64, current_weight: &Matrix, eta: f64, p: f64) -> Result<Matrix> {
    if !(eta >= 0.0) {
        return Err(Error::invalid(format!("eta must be >= 0, got {eta}")));
    }
    let r = weight_ratio(snapshot_norm, current_weight, p)?;
    let lo = (1.0 - eta).max(0.0);
    let hi = 1.0 + eta;
    let target = if r > hi {
        hi
    } else if eta < 1.0 && r < lo {
        lo
    } else {
        return Ok(current_weight.clone());
    };
    // new norm = snapshot / target; computed from the snapshot so the ratio lands on the edge
    let scale = (snapshot_norm / target) / current_weight.flat_norm(p);
    Ok(current_weight.scale(scale))
}

/// Trains the assembled network end to end on raw data, projecting every layer's weight
/// into its band after each epoch.
pub fn fine_tune(stacked: &mut StackedModel, dataset: &Matrix, config: &StackConfig) -> Result<FineTuneHistory> {
    config.validate()?;
    let ft = &config.finetune;
    if stacked.snapshots.len() != stacked.assembled.layers().count() {
        return Err(Error::invalid("snapshot count does not match assembled layer count"));
    }
    if dataset.cols() != stacked.assembled.input_dim() {
        return Err(Error::Shape {
            op: "fine_tune",
            left: dataset.shape(),
            right: (dataset.rows(), stacked.assembled.input_dim()),
        });
    }
    if ft.epochs == 0 {
        return Ok(FineTuneHistory::default());
    }
    let ctx = if ft.exclusivity {
        Some(ExclusivityContext::build(dataset, ft.m)?)
    } else {
        None
    };
    let objective = if ft.exclusivity {
        Objective {
            lambda: ft.lambda,
            reduction: ft.sum_mode,
            mean_grad: MeanGrad::Full,
            eps: DEFAULT_EPS,
        }
    } else {
        Objective::reconstruction_only(ft.sum_mode)
    };
    let opts = TrainOptions {
        objective,
        lr: ft.lr,
        epochs: ft.epochs,
        batch_size: ft.batch_size,
        seed: ft.seed,
    };
    let snapshots = stacked.snapshots.clone();
    let mut ratios = Vec::with_capacity(ft.epochs);
    let losses = train_loop(&mut stacked.assembled, &opts, ctx.as_ref(), dataset, |_, model| {
        let mut row = Vec::with_capacity(snapshots.len());
        for (layer, &snap) in model.layers_mut().zip(&snapshots) {
            layer.weight = project_to_band(snap, &layer.weight, config.eta, config.p)?;
            row.push(weight_ratio(snap, &layer.weight, config.p)?);
        }
        ratios.push(row);
        Ok(())
    })?;
    Ok(FineTuneHistory { losses, ratios })
}

/// Current `‖W_F‖ₚ / ‖W_F′‖ₚ` for every assembled layer.
pub fn layer_ratios(stacked: &StackedModel, p: f64) -> Result<Vec<f64>> {
    stacked
        .assembled
        .layers()
        .zip(&stacked.snapshots)
        .map(|(l, &s)| weight_ratio(s, &l.weight, p))
        .collect()
}

/// Flattened-norm helper exposed for tests and tooling.
pub fn weight_norm(w: &Matrix, p: f64) -> f64 {
    lp_norm(w.as_slice(), p)
}
