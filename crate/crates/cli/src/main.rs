use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};

use eeae::autoencoder::{train, AEModel};
use eeae::dataio::{encode_pgm, synth_gaussian, write_idx};
use eeae::eval::checkpoint::{load_checkpoint, save_checkpoint, Checkpoint};
use eeae::eval::metrics::{metrics_rows, write_report, METRICS_HEADER};
use eeae::eval::{evaluate, load_data, prepare_split, run_trials, ExperimentConfig};
use eeae::gradsuite::{run_suite, DEFAULT_TOLERANCE};
use eeae::stacking::{assemble, fine_tune, train_stack};
use eeae::{Error, Result};

#[derive(Parser)]
#[command(name = "eeae", version, about = "Exclusivity enhanced autoencoders")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(clap::Args)]
struct Common {
    /// Experiment configuration (TOML). Built-in defaults if omitted.
    #[arg(short, long)]
    config: Option<PathBuf>,
    /// Seed for the split and initialisation; defaults to `eval.base_seed`.
    #[arg(long)]
    seed: Option<u64>,
}

impl Common {
    fn load(&self) -> Result<(ExperimentConfig, u64)> {
        let cfg = match &self.config {
            Some(p) => ExperimentConfig::from_file(p)?,
            None => ExperimentConfig::default(),
        };
        let seed = self.seed.unwrap_or(cfg.eval.base_seed);
        Ok((cfg, seed))
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum SynthFormat {
    Idx,
    Pgm,
}

#[derive(Subcommand)]
enum Command {
    /// Train one autoencoder spanning all `model.hidden` widths.
    Train {
        #[command(flatten)]
        common: Common,
        #[arg(short, long)]
        out: PathBuf,
    },
    /// Greedy layerwise pretraining of the stack.
    Stack {
        #[command(flatten)]
        common: Common,
        #[arg(short, long)]
        out: PathBuf,
    },
    /// Norm-banded end-to-end fine-tuning of a checkpoint.
    Finetune {
        #[command(flatten)]
        common: Common,
        #[arg(short, long)]
        input: PathBuf,
        #[arg(short, long)]
        out: PathBuf,
    },
    /// kNN accuracy of a checkpoint's features on the split for `--seed`.
    Eval {
        #[command(flatten)]
        common: Common,
        #[arg(short, long)]
        input: PathBuf,
    },
    /// The full repeated-trial protocol.
    Experiment {
        #[command(flatten)]
        common: Common,
        /// Overrides `eval.trials`.
        #[arg(long)]
        trials: Option<usize>,
        /// Overrides `output.dir`.
        #[arg(short, long)]
        out_dir: Option<PathBuf>,
    },
    /// Finite-difference check of the training objective's gradients.
    Gradcheck {
        #[arg(long, default_value_t = 25)]
        cases: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value_t = DEFAULT_TOLERANCE)]
        tolerance: f64,
    },
    /// Write a synthetic Gaussian-blob dataset.
    Synth {
        #[arg(long, default_value_t = 3)]
        classes: usize,
        #[arg(long, default_value_t = 32)]
        dim: usize,
        #[arg(long, default_value_t = 100)]
        per_class: usize,
        #[arg(long, default_value_t = 0.12)]
        spread: f64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, value_enum, default_value_t = SynthFormat::Idx)]
        format: SynthFormat,
        #[arg(short, long)]
        out: PathBuf,
    },
    /// Print the default configuration.
    Config,
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}

fn print_losses(phase: &str, losses: &[eeae::LossBreakdown]) {
    for (e, l) in losses.iter().enumerate() {
        println!(
            "{phase} epoch {e:>3}  L_a {:.6}  L_h1 {:.6}  L_h2 {:.6}  L {:.6}",
            l.l_a, l.l_h1, l.l_h2, l.l
        );
    }
}

fn run(cli: Cli) -> Result<ExitCode> {
    match cli.command {
        Command::Train { common, out } => {
            let (cfg, seed) = common.load()?;
            let data = load_data(&cfg)?;
            let split = prepare_split(&cfg, &data, seed)?;
            let ae_cfg = cfg.single_config(split.train.dim(), seed);
            let mut model = AEModel::init(&ae_cfg)?;
            let losses = train(&mut model, &ae_cfg, &split.train.examples)?;
            print_losses("train", &losses);
            save_checkpoint(&Checkpoint::from_model(&model, cfg.to_toml()), &out)?;
            println!("wrote {}", out.display());
        }
        Command::Stack { common, out } => {
            let (cfg, seed) = common.load()?;
            let data = load_data(&cfg)?;
            let split = prepare_split(&cfg, &data, seed)?;
            let stack_cfg = cfg.stack_config(split.train.dim(), seed);
            let (stacked, hist) = train_stack(&stack_cfg, &split.train.examples)?;
            for (k, h) in hist.iter().enumerate() {
                print_losses(&format!("level {}", k + 1), h);
            }
            save_checkpoint(&Checkpoint::from_stacked(&stacked, cfg.to_toml()), &out)?;
            println!("wrote {}", out.display());
        }
        Command::Finetune { common, input, out } => {
            let (cfg, seed) = common.load()?;
            let mut stacked = load_checkpoint(&input)?.into_stacked(cfg.finetune.p)?;
            let data = load_data(&cfg)?;
            let split = prepare_split(&cfg, &data, seed)?;
            let stack_cfg = cfg.stack_config(split.train.dim(), seed);
            let stack_cfg = eeae::StackConfig {
                levels: stacked
                    .levels
                    .iter()
                    .zip(stack_cfg.levels.iter().cycle())
                    .map(|(m, c)| eeae::AEConfig {
                        layer_sizes: std::iter::once(m.input_dim()).chain(m.encoder.iter().map(|l| l.out_dim())).collect(),
                        ..c.clone()
                    })
                    .collect(),
                ..stack_cfg
            };
            if stacked.levels.is_empty() {
                stacked = assemble(&[stacked.assembled.clone()], cfg.finetune.p)?;
            }
            let hist = fine_tune(&mut stacked, &split.train.examples, &stack_cfg)?;
            print_losses("finetune", &hist.losses);
            if let Some(r) = hist.ratios.last() {
                println!("final weight-norm ratios {r:?}");
            }
            save_checkpoint(&Checkpoint::from_stacked(&stacked, cfg.to_toml()), &out)?;
            println!("wrote {}", out.display());
        }
        Command::Eval { common, input } => {
            let (cfg, seed) = common.load()?;
            let stacked = load_checkpoint(&input)?.into_stacked(cfg.finetune.p)?;
            let data = load_data(&cfg)?;
            let split = prepare_split(&cfg, &data, seed)?;
            let acc = evaluate(&cfg, &stacked, &split)?;
            println!("accuracy {acc:.4} ({} test examples)", split.test.len());
        }
        Command::Experiment { common, trials, out_dir } => {
            let (mut cfg, _) = common.load()?;
            if let Some(t) = trials {
                cfg.eval.trials = t;
            }
            if let Some(d) = out_dir {
                cfg.output.dir = Some(d);
            }
            if let Some(s) = common.seed {
                cfg.eval.base_seed = s;
            }
            cfg.validate()?;
            let data = load_data(&cfg)?;
            println!("{METRICS_HEADER}");
            let report = run_trials(&cfg, &data, |r| {
                let mut rows = String::new();
                metrics_rows(r, &mut rows);
                print!("{rows}");
                if let Some(e) = &r.error {
                    eprintln!("trial {} failed: {e}", r.trial);
                }
            });
            let s = &report.summary;
            let fmt = |v: Option<f64>| v.map_or("n/a".to_string(), |x| format!("{x:.4}"));
            println!(
                "accuracy mean {} std {} over {} of {} trials{}",
                fmt(s.mean_accuracy),
                fmt(s.std_accuracy),
                s.completed,
                s.trials,
                if s.partial { " (partial)" } else { "" }
            );
            if let Some(dir) = &cfg.output.dir {
                write_report(&report, dir)?;
                println!("wrote {}", dir.display());
            }
            if s.completed == 0 {
                return Ok(ExitCode::FAILURE);
            }
        }
        Command::Gradcheck { cases, seed, tolerance } => {
            let results = run_suite(seed, cases)?;
            let mut failed = 0;
            for c in &results {
                let ok = c.passed(tolerance);
                failed += usize::from(!ok);
                println!(
                    "{} seed {:>4} sizes {:?} batch {} {:?}/{:?} max rel err {:.2e}",
                    if ok { "ok  " } else { "FAIL" },
                    c.seed,
                    c.layer_sizes,
                    c.batch,
                    c.reduction,
                    c.mean_grad,
                    c.max_relative_error
                );
            }
            println!("{} of {} cases within {tolerance:e}", results.len() - failed, results.len());
            if failed > 0 {
                return Ok(ExitCode::FAILURE);
            }
        }
        Command::Synth { classes, dim, per_class, spread, seed, format, out } => {
            let ds = synth_gaussian(classes, dim, per_class, spread, seed)?;
            std::fs::create_dir_all(&out).map_err(|e| Error::io(&out, e))?;
            match format {
                SynthFormat::Idx => {
                    write_idx(&ds, out.join("images.idx"), out.join("labels.idx"))?;
                }
                SynthFormat::Pgm => write_pgm_tree(&ds, &out)?,
            }
            println!("wrote {} examples to {}", ds.len(), out.display());
        }
        Command::Config => print!("{}", ExperimentConfig::default_toml()),
    }
    Ok(ExitCode::SUCCESS)
}

fn write_pgm_tree(ds: &eeae::dataio::Dataset, out: &Path) -> Result<()> {
    let labels = ds.labels()?;
    let (h, w) = ds.image_shape.unwrap_or((1, ds.dim()));
    for (i, row) in ds.examples.iter_rows().enumerate() {
        let dir = out.join(format!("class{:02}", labels[i]));
        std::fs::create_dir_all(&dir).map_err(|e| Error::io(&dir, e))?;
        let px: Vec<u8> = row.iter().map(|v| (v * 255.0).round().clamp(0.0, 255.0) as u8).collect();
        let path = dir.join(format!("{i:05}.pgm"));
        std::fs::write(&path, encode_pgm(h, w, &px)).map_err(|e| Error::io(&path, e))?;
    }
    Ok(())
}
