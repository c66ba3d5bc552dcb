//! The repeated-trial protocol: split, pretrain the stack, fine-tune, extract
//! features, classify the held-out set with kNN.

use std::time::Instant;

use super::config::{DataSource, ExperimentConfig};
use super::knn::{accuracy, knn_classify};
use super::metrics::write_report;
use crate::autoencoder::LossBreakdown;
use crate::dataio::{load_idx, load_image_dir, mirror, select_per_class, split_indices, synth_gaussian, Dataset};
use crate::stacking::{fine_tune, train_stack, StackedModel};
use crate::{Error, Result};

/// Data for every trial: a labelled pool to select training examples from and, when the
/// source has one, a fixed test set. Without it the pool's unselected rows are the test set.
#[derive(Debug, Clone)]
pub struct ExperimentData {
    pub pool: Dataset,
    pub test: Option<Dataset>,
}

pub fn load_data(config: &ExperimentConfig) -> Result<ExperimentData> {
    let d = &config.data;
    let limit = |ds: Dataset, n: Option<usize>| match n {
        Some(n) => ds.head(n),
        None => ds,
    };
    let need = |p: &Option<std::path::PathBuf>, key: &str| {
        p.clone().ok_or_else(|| Error::InvalidConfig(format!("data.{key} is required for this source")))
    };
    let (pool, test) = match d.source {
        DataSource::Synth => (synth_gaussian(d.classes, d.dim, d.per_class, d.spread, d.seed)?, None),
        DataSource::Idx => {
            let pool = load_idx(need(&d.images, "images")?, need(&d.labels, "labels")?)?;
            let test = match (&d.test_images, &d.test_labels) {
                (Some(i), Some(l)) => Some(limit(load_idx(i, l)?, d.test_limit)),
                (None, None) => None,
                _ => {
                    return Err(Error::InvalidConfig(
                        "data.test_images and data.test_labels must be given together".into(),
                    ))
                }
            };
            (pool, test)
        }
        DataSource::ImageDir => (load_image_dir(need(&d.root, "root")?)?, None),
    };
    Ok(ExperimentData {
        pool: limit(pool, d.train_limit),
        test,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct HistoryRow {
    /// `pretrain-level-<k>` or `finetune`.
    pub phase: String,
    pub epoch: usize,
    pub loss: LossBreakdown,
}

#[derive(Debug, Clone, PartialEq)]
pub struct MetricsRecord {
    pub trial: usize,
    pub seed: u64,
    pub history: Vec<HistoryRow>,
    pub accuracy: Option<f64>,
    pub error: Option<String>,
    pub seconds: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Summary {
    pub trials: usize,
    pub completed: usize,
    pub failed: usize,
    /// Some trials failed; the statistics cover the completed ones only.
    pub partial: bool,
    pub mean_accuracy: Option<f64>,
    /// Sample standard deviation (n − 1); absent with fewer than two completed trials.
    pub std_accuracy: Option<f64>,
}

impl Summary {
    pub fn from_records(records: &[MetricsRecord]) -> Self {
        let accs: Vec<f64> = records.iter().filter_map(|r| r.accuracy).collect();
        let n = accs.len();
        let mean = (n > 0).then(|| accs.iter().sum::<f64>() / n as f64);
        let std = mean.filter(|_| n > 1).map(|m| {
            (accs.iter().map(|a| (a - m).powi(2)).sum::<f64>() / (n - 1) as f64).sqrt()
        });
        Self {
            trials: records.len(),
            completed: n,
            failed: records.len() - n,
            partial: n < records.len(),
            mean_accuracy: mean,
            std_accuracy: std,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentReport {
    pub records: Vec<MetricsRecord>,
    pub summary: Summary,
}

#[derive(Debug, Clone)]
pub struct PipelineOutcome {
    pub stacked: StackedModel,
    pub history: Vec<HistoryRow>,
    pub accuracy: f64,
}

/// Training rows (mirrored if configured), the unmirrored kNN reference rows, and the
/// test rows for one seed.
#[derive(Debug, Clone)]
pub struct TrialSplit {
    pub train: Dataset,
    pub reference: Dataset,
    pub test: Dataset,
}

pub fn prepare_split(config: &ExperimentConfig, data: &ExperimentData, seed: u64) -> Result<TrialSplit> {
    let (reference, test) = match &data.test {
        Some(t) => (data.pool.subset(&select_per_class(&data.pool, config.split.per_class_train, seed)?), t.clone()),
        None => {
            let (tr, te) = split_indices(&data.pool, config.split.per_class_train, seed)?;
            (data.pool.subset(&tr), data.pool.subset(&te))
        }
    };
    // mirroring needs an image shape; shapeless data trains on the originals
    let train = if config.split.mirror_train && reference.image_shape.is_some() {
        mirror(&reference)?
    } else {
        reference.clone()
    };
    Ok(TrialSplit { train, reference, test })
}

/// Accuracy of kNN on the stack's features, reference rows against test rows.
pub fn evaluate(config: &ExperimentConfig, stacked: &StackedModel, split: &TrialSplit) -> Result<f64> {
    let ref_feats = super::extract_features(stacked, &split.reference.examples)?;
    let test_feats = super::extract_features(stacked, &split.test.examples)?;
    let preds = knn_classify(
        &ref_feats,
        split.reference.labels()?,
        &test_feats,
        config.eval.knn_k,
        config.eval.metric,
    )?;
    accuracy(&preds, split.test.labels()?)
}

/// One trial. `seed` drives the split, every level's initialisation and the shuffles.
pub fn run_pipeline(config: &ExperimentConfig, data: &ExperimentData, seed: u64) -> Result<PipelineOutcome> {
    let split = prepare_split(config, data, seed)?;
    let train = &split.train;

    let stack_cfg = config.stack_config(train.dim(), seed);
    let (mut stacked, level_hist) = train_stack(&stack_cfg, &train.examples)?;
    let mut history = Vec::new();
    for (k, h) in level_hist.into_iter().enumerate() {
        history.extend(h.into_iter().enumerate().map(|(epoch, loss)| HistoryRow {
            phase: format!("pretrain-level-{}", k + 1),
            epoch,
            loss,
        }));
    }
    let ft = fine_tune(&mut stacked, &train.examples, &stack_cfg)?;
    history.extend(ft.losses.into_iter().enumerate().map(|(epoch, loss)| HistoryRow {
        phase: "finetune".into(),
        epoch,
        loss,
    }));

    let accuracy = evaluate(config, &stacked, &split)?;
    Ok(PipelineOutcome {
        stacked,
        history,
        accuracy,
    })
}

/// Runs every trial on preloaded data. A failing trial is recorded and the run continues.
pub fn run_trials(
    config: &ExperimentConfig,
    data: &ExperimentData,
    mut on_trial: impl FnMut(&MetricsRecord),
) -> ExperimentReport {
    let mut records = Vec::with_capacity(config.eval.trials);
    for trial in 0..config.eval.trials {
        let seed = config.eval.base_seed.wrapping_add(trial as u64);
        let start = Instant::now();
        let outcome = run_pipeline(config, data, seed);
        let seconds = start.elapsed().as_secs_f64();
        let record = match outcome {
            Ok(o) => MetricsRecord {
                trial,
                seed,
                history: o.history,
                accuracy: Some(o.accuracy),
                error: None,
                seconds,
            },
            Err(e) => MetricsRecord {
                trial,
                seed,
                history: Vec::new(),
                accuracy: None,
                error: Some(e.to_string()),
                seconds,
            },
        };
        on_trial(&record);
        records.push(record);
    }
    let summary = Summary::from_records(&records);
    ExperimentReport { records, summary }
}

/// Loads the data, runs every trial and writes the CSV files if an output directory is set.
pub fn run_experiment(config: &ExperimentConfig) -> Result<ExperimentReport> {
    config.validate()?;
    let data = load_data(config)?;
    let report = run_trials(config, &data, |_| {});
    if let Some(dir) = &config.output.dir {
        write_report(&report, dir)?;
    }
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::eval::metrics::metrics_csv;

    fn tiny() -> ExperimentConfig {
        ExperimentConfig::from_toml(
            "[data]\nclasses = 3\ndim = 8\nper_class = 12\nspread = 0.05\n\
             [split]\nper_class_train = 8\n\
             [model]\nhidden = [6, 4]\nepochs = 3\nbatch_size = 8\nm = 3\n\
             [finetune]\nepochs = 2\nbatch_size = 8\n\
             [eval]\ntrials = 3\n",
        )
        .unwrap()
    }

    #[test]
    fn trials_are_deterministic() {
        let cfg = tiny();
        let a = run_experiment(&cfg).unwrap();
        let b = run_experiment(&cfg).unwrap();
        assert_eq!(metrics_csv(&a.records), metrics_csv(&b.records));
        assert_eq!(a.summary.completed, 3);
        assert!(!a.summary.partial);
        let r = &a.records[0];
        assert_eq!(r.history.len(), 3 + 3 + 2);
        assert_eq!(r.history[3].phase, "pretrain-level-2");
        assert_eq!(r.history[7].phase, "finetune");
    }

    #[test]
    fn failing_trial_is_recorded() {
        let mut cfg = tiny();
        cfg.model.lr = 1e6;
        cfg.model.output_activation = crate::numkit::Activation::Identity;
        cfg.model.inner_output_activation = crate::numkit::Activation::Identity;
        cfg.model.epochs = 50;
        let report = run_experiment(&cfg).unwrap();
        assert_eq!(report.summary.failed, 3);
        assert!(report.summary.partial);
        assert_eq!(report.summary.mean_accuracy, None);
        assert!(report.records[0].error.as_deref().unwrap().contains("diverged"));
    }

    #[test]
    fn summary_statistics() {
        let rec = |a: Option<f64>| MetricsRecord {
            trial: 0,
            seed: 0,
            history: vec![],
            accuracy: a,
            error: a.is_none().then(|| "x".into()),
            seconds: 0.0,
        };
        let s = Summary::from_records(&[rec(Some(0.5)), rec(Some(0.7)), rec(None)]);
        assert_eq!((s.completed, s.failed, s.partial), (2, 1, true));
        assert!((s.mean_accuracy.unwrap() - 0.6).abs() < 1e-12);
        assert!((s.std_accuracy.unwrap() - 0.02f64.sqrt()).abs() < 1e-12);
        assert_eq!(Summary::from_records(&[rec(Some(0.5))]).std_accuracy, None);
    }
}
