//! Randomised finite-difference checks of the full training objective.
//!
//! Each case draws a small architecture, batch and mode combination, then compares the
//! analytic gradient from [`total_loss`] with central differences. With stopped means
//! the reference loss treats the encoded target means as constants.

use rand::seq::IndexedRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::autoencoder::{batch_targets, decode, encode, recon_loss, total_loss, AEConfig, AEModel, MeanGrad};
use crate::exclusivity::{exclusivity_loss, ExclusivityContext, Reduction, DEFAULT_EPS};
use crate::numkit::{grad_check, Activation, Matrix, DEFAULT_EPSILON};
use crate::Result;

pub const DEFAULT_TOLERANCE: f64 = 1e-4;

#[derive(Debug, Clone, PartialEq)]
pub struct GradCase {
    pub seed: u64,
    pub layer_sizes: Vec<usize>,
    pub batch: usize,
    pub reduction: Reduction,
    pub mean_grad: MeanGrad,
    pub lambda: f64,
    pub max_relative_error: f64,
}

impl GradCase {
    pub fn passed(&self, tolerance: f64) -> bool {
        self.max_relative_error < tolerance
    }
}

/// One randomised case. Sizes stay at most 8 wide, batches at most 6.
pub fn check_case(seed: u64, reduction: Reduction, mean_grad: MeanGrad) -> Result<GradCase> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let depth = rng.random_range(1..=2);
    let mut sizes = vec![rng.random_range(2..=8)];
    for _ in 0..depth {
        sizes.push(rng.random_range(2..=8));
    }
    let acts = [Activation::Sigmoid, Activation::Relu, Activation::Identity];
    let n = rng.random_range(3..=10);
    let m = rng.random_range(1..n.min(4));
    let b = rng.random_range(1..=6.min(n));
    let lambda = rng.random_range(0.5..8.0);
    let cfg = AEConfig {
        layer_sizes: sizes.clone(),
        encoder_activation: *acts.choose(&mut rng).expect("non-empty"),
        latent_activation: *acts.choose(&mut rng).expect("non-empty"),
        decoder_activation: *acts.choose(&mut rng).expect("non-empty"),
        output_activation: Activation::Sigmoid,
        lambda,
        m,
        sum_mode: reduction,
        mean_grad,
        seed: rng.random(),
        ..AEConfig::default()
    };
    let d = sizes[0];
    let data = Matrix::new(n, d, (0..n * d).map(|_| rng.random_range(0.05..0.95)).collect())?;
    let mut model = AEModel::init(&cfg)?;
    // non-zero biases so relu units are not all at the same side of their kink
    for layer in model.layers_mut() {
        for v in &mut layer.bias {
            *v = rng.random_range(-0.3..0.3);
        }
    }
    let batch: Vec<usize> = rand::seq::index::sample(&mut rng, n, b).into_vec();
    let ctx = ExclusivityContext::build(&data, m)?;
    let obj = cfg.objective();
    let (_, grads) = total_loss(&model, &obj, Some(&ctx), &data, &batch)?;

    let (he, ho) = batch_targets(&ctx, &data, &batch)?;
    let frozen = (encode(&model, &he)?, encode(&model, &ho)?);
    let x = data.gather_rows(&batch);
    let loss = |p: &[f64]| {
        let mut mm = model.clone();
        if mm.set_params_flat(p).is_err() {
            return f64::NAN;
        }
        let eval = || -> Result<f64> {
            match mean_grad {
                MeanGrad::Full => Ok(total_loss(&mm, &obj, Some(&ctx), &data, &batch)?.0.l),
                MeanGrad::Stopped => {
                    let h = encode(&mm, &x)?;
                    let la = recon_loss(&x, &decode(&mm, &h)?, reduction)?.0;
                    let ex = exclusivity_loss(&h, &frozen.0, &frozen.1, reduction, DEFAULT_EPS)?;
                    Ok(la + lambda * ex.l_h)
                }
            }
        };
        eval().unwrap_or(f64::NAN)
    };
    let report = grad_check(loss, &model.params_flat(), &grads.flatten(), DEFAULT_EPSILON)?;
    Ok(GradCase {
        seed,
        layer_sizes: sizes,
        batch: b,
        reduction,
        mean_grad,
        lambda,
        max_relative_error: report.max_relative_error,
    })
}

/// `cases` seeds starting at `base_seed`, each run under all four mode combinations.
pub fn run_suite(base_seed: u64, cases: usize) -> Result<Vec<GradCase>> {
    let mut out = Vec::with_capacity(cases * 4);
    for i in 0..cases as u64 {
        for reduction in [Reduction::BatchMean, Reduction::PaperSum] {
            for mean_grad in [MeanGrad::Full, MeanGrad::Stopped] {
                out.push(check_case(base_seed + i, reduction, mean_grad)?);
            }
        }
    }
    Ok(out)
}
