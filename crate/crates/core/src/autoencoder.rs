//! A single exclusivity-enhanced autoencoder: forward passes, the joint objective
//! `L = L_a + λ·L_h`, and the minibatch SGD loop.

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::exclusivity::{exclusivity_loss, ExclusivityContext, Reduction, DEFAULT_EPS};
use crate::numkit::{
    affine_backward_cached, affine_forward, sgd_step, Activation, DenseLayer, GradSet, LayerGrad,
    Matrix,
};
use crate::{Error, Result};

/// Whether the exclusivity gradient also flows through the encoded prototypes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MeanGrad {
    #[default]
    Full,
    /// Treat `f_e(prototype)` as a constant (stop-gradient).
    Stopped,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct AEConfig {
    /// Input width first, latent width last.
    pub layer_sizes: Vec<usize>,
    pub encoder_activation: Activation,
    pub latent_activation: Activation,
    pub decoder_activation: Activation,
    pub output_activation: Activation,
    pub lambda: f64,
    pub m: usize,
    pub lr: f64,
    pub epochs: usize,
    pub batch_size: usize,
    pub seed: u64,
    pub sum_mode: Reduction,
    pub mean_grad: MeanGrad,
}

impl Default for AEConfig {
    fn default() -> Self {
        Self {
            layer_sizes: vec![784, 128],
            encoder_activation: Activation::Relu,
            latent_activation: Activation::Relu,
            decoder_activation: Activation::Relu,
            output_activation: Activation::Sigmoid,
            lambda: 7.0,
            m: 6,
            lr: 0.05,
            epochs: 50,
            batch_size: 32,
            seed: 0,
            sum_mode: Reduction::BatchMean,
            mean_grad: MeanGrad::Full,
        }
    }
}

impl AEConfig {
    pub fn validate(&self) -> Result<()> {
        if self.layer_sizes.len() < 2 {
            return Err(Error::InvalidConfig(
                "layer_sizes needs at least an input and a latent width".into(),
            ));
        }
        if self.layer_sizes.contains(&0) {
            return Err(Error::InvalidConfig("layer widths must be positive".into()));
        }
        if !(self.lambda >= 0.0 && self.lambda.is_finite()) {
            return Err(Error::InvalidConfig(format!("lambda must be >= 0, got {}", self.lambda)));
        }
        if !(self.lr > 0.0 && self.lr.is_finite()) {
            return Err(Error::InvalidConfig(format!("lr must be > 0, got {}", self.lr)));
        }
        if self.batch_size == 0 {
            return Err(Error::InvalidConfig("batch_size must be positive".into()));
        }
        if self.m == 0 {
            return Err(Error::InvalidConfig("m must be positive".into()));
        }
        Ok(())
    }

    pub fn objective(&self) -> Objective {
        Objective {
            lambda: self.lambda,
            reduction: self.sum_mode,
            mean_grad: self.mean_grad,
            eps: DEFAULT_EPS,
        }
    }

    pub fn train_options(&self) -> TrainOptions {
        TrainOptions {
            objective: self.objective(),
            lr: self.lr,
            epochs: self.epochs,
            batch_size: self.batch_size,
            seed: self.seed,
        }
    }
}

/// How the joint loss is assembled.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Objective {
    pub lambda: f64,
    pub reduction: Reduction,
    pub mean_grad: MeanGrad,
    pub eps: f64,
}

impl Objective {
    pub fn reconstruction_only(reduction: Reduction) -> Self {
        Self {
            lambda: 0.0,
            reduction,
            mean_grad: MeanGrad::Full,
            eps: DEFAULT_EPS,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TrainOptions {
    pub objective: Objective,
    pub lr: f64,
    pub epochs: usize,
    pub batch_size: usize,
    pub seed: u64,
}

/// The five loss scalars and the weight that combines them.
///
/// `l_h` and `l` are always derived from the components, so
/// `l_h == l_h1 + (1 − l_h2)` and `l == l_a + lambda·l_h` hold by construction.
/// When no exclusivity term is evaluated the neutral values `l_h1 = 0`, `l_h2 = 1`
/// are reported.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LossBreakdown {
    pub l_a: f64,
    pub l_h1: f64,
    pub l_h2: f64,
    pub l_h: f64,
    pub l: f64,
    pub lambda: f64,
}

impl LossBreakdown {
    pub fn new(l_a: f64, l_h1: f64, l_h2: f64, lambda: f64) -> Self {
        let l_h = l_h1 + (1.0 - l_h2);
        Self {
            l_a,
            l_h1,
            l_h2,
            l_h,
            l: l_a + lambda * l_h,
            lambda,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct AEModel {
    pub encoder: Vec<DenseLayer>,
    pub decoder: Vec<DenseLayer>,
}

impl AEModel {
    /// Glorot-initialised model with mirror-symmetric decoder.
    pub fn init(config: &AEConfig) -> Result<Self> {
        config.validate()?;
        let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
        let sizes = &config.layer_sizes;
        let depth = sizes.len() - 1;
        let encoder = (0..depth)
            .map(|i| {
                let act = if i + 1 == depth {
                    config.latent_activation
                } else {
                    config.encoder_activation
                };
                DenseLayer::glorot(sizes[i], sizes[i + 1], act, &mut rng)
            })
            .collect();
        let decoder = (0..depth)
            .rev()
            .map(|i| {
                let act = if i == 0 {
                    config.output_activation
                } else {
                    config.decoder_activation
                };
                DenseLayer::glorot(sizes[i + 1], sizes[i], act, &mut rng)
            })
            .collect();
        Self::new(encoder, decoder)
    }

    pub fn new(encoder: Vec<DenseLayer>, decoder: Vec<DenseLayer>) -> Result<Self> {
        let model = Self { encoder, decoder };
        model.validate()?;
        Ok(model)
    }

    pub fn validate(&self) -> Result<()> {
        if self.encoder.is_empty() || self.decoder.is_empty() {
            return Err(Error::InvalidConfig("encoder and decoder need at least one layer".into()));
        }
        for part in [&self.encoder, &self.decoder] {
            for w in part.windows(2) {
                if w[0].out_dim() != w[1].in_dim() {
                    return Err(Error::Shape {
                        op: "AEModel layer chain",
                        left: w[0].weight.shape(),
                        right: w[1].weight.shape(),
                    });
                }
            }
        }
        let enc_out = self.encoder.last().expect("non-empty");
        let dec_in = &self.decoder[0];
        let dec_out = self.decoder.last().expect("non-empty");
        if enc_out.out_dim() != dec_in.in_dim() || dec_out.out_dim() != self.input_dim() {
            return Err(Error::Shape {
                op: "AEModel encoder/decoder",
                left: (self.input_dim(), enc_out.out_dim()),
                right: (dec_in.in_dim(), dec_out.out_dim()),
            });
        }
        Ok(())
    }

    pub fn input_dim(&self) -> usize {
        self.encoder[0].in_dim()
    }

    pub fn latent_dim(&self) -> usize {
        self.encoder.last().expect("non-empty").out_dim()
    }

    pub fn layers(&self) -> impl Iterator<Item = &DenseLayer> + '_ {
        self.encoder.iter().chain(&self.decoder)
    }

    pub fn layers_mut(&mut self) -> impl Iterator<Item = &mut DenseLayer> + '_ {
        self.encoder.iter_mut().chain(self.decoder.iter_mut())
    }

    pub fn num_params(&self) -> usize {
        self.layers().map(DenseLayer::num_params).sum()
    }

    /// Parameters flattened in [`GradSet::flatten`] order.
    pub fn params_flat(&self) -> Vec<f64> {
        let mut out = Vec::with_capacity(self.num_params());
        for l in self.layers() {
            out.extend_from_slice(l.weight.as_slice());
            out.extend_from_slice(&l.bias);
        }
        out
    }

    pub fn set_params_flat(&mut self, flat: &[f64]) -> Result<()> {
        if flat.len() != self.num_params() {
            return Err(Error::invalid(format!(
                "expected {} parameters, got {}",
                self.num_params(),
                flat.len()
            )));
        }
        let mut off = 0;
        for l in self.layers_mut() {
            let nw = l.weight.as_slice().len();
            l.weight.as_mut_slice().copy_from_slice(&flat[off..off + nw]);
            off += nw;
            let nb = l.bias.len();
            l.bias.copy_from_slice(&flat[off..off + nb]);
            off += nb;
        }
        Ok(())
    }
}

/// Row-batch through the encoder.
pub fn encode(model: &AEModel, x_batch: &Matrix) -> Result<Matrix> {
    run_layers(&model.encoder, x_batch)
}

/// Latent row-batch through the decoder.
pub fn decode(model: &AEModel, h_batch: &Matrix) -> Result<Matrix> {
    run_layers(&model.decoder, h_batch)
}

pub(crate) fn run_layers(layers: &[DenseLayer], input: &Matrix) -> Result<Matrix> {
    let mut cur = affine_forward(&layers[0], input)?;
    for l in &layers[1..] {
        cur = affine_forward(l, &cur)?;
    }
    Ok(cur)
}

/// `acts[0]` is the input, `acts[k + 1]` the output of layer `k`.
fn forward_trace(layers: &[DenseLayer], input: Matrix) -> Result<Vec<Matrix>> {
    let mut acts = Vec::with_capacity(layers.len() + 1);
    acts.push(input);
    for l in layers {
        let next = affine_forward(l, acts.last().expect("non-empty"))?;
        acts.push(next);
    }
    Ok(acts)
}

/// Accumulates parameter gradients into `grads`; returns the input gradient if asked.
fn backward_trace(
    layers: &[DenseLayer],
    acts: &[Matrix],
    grad_out: Matrix,
    grads: &mut [LayerGrad],
    need_input_grad: bool,
) -> Result<Option<Matrix>> {
    let mut g = grad_out;
    for k in (0..layers.len()).rev() {
        let need = k > 0 || need_input_grad;
        let (lg, gi) = affine_backward_cached(&layers[k], &acts[k], &acts[k + 1], &g, need)?;
        grads[k].accumulate(&lg)?;
        match gi {
            Some(gi) => g = gi,
            None => return Ok(None),
        }
    }
    Ok(Some(g))
}

/// Squared Euclidean reconstruction error and its gradient with respect to `xhat`.
pub fn recon_loss(x_batch: &Matrix, xhat_batch: &Matrix, reduction: Reduction) -> Result<(f64, Matrix)> {
    if x_batch.shape() != xhat_batch.shape() {
        return Err(Error::Shape {
            op: "recon_loss",
            left: x_batch.shape(),
            right: xhat_batch.shape(),
        });
    }
    if x_batch.rows() == 0 {
        return Err(Error::invalid("reconstruction loss on an empty batch"));
    }
    let scale = reduction.factor(x_batch.rows());
    let mut grad = Matrix::zeros(x_batch.rows(), x_batch.cols());
    let mut total = 0.0;
    for ((g, &x), &xh) in grad
        .as_mut_slice()
        .iter_mut()
        .zip(x_batch.as_slice())
        .zip(xhat_batch.as_slice())
    {
        let diff = xh - x;
        total += diff * diff;
        *g = 2.0 * scale * diff;
    }
    Ok((scale * total, grad))
}

/// Prototype rows for a batch: `(hetero, homo)`.
pub(crate) fn batch_targets(
    ctx: &ExclusivityContext,
    dataset: &Matrix,
    batch: &[usize],
) -> Result<(Matrix, Matrix)> {
    let mut hetero = Matrix::zeros(batch.len(), dataset.cols());
    let mut homo = Matrix::zeros(batch.len(), dataset.cols());
    for (r, &i) in batch.iter().enumerate() {
        let t = ctx.targets_for(dataset, i)?;
        hetero.row_mut(r).copy_from_slice(&t.hetero_mean);
        homo.row_mut(r).copy_from_slice(&t.homo_mean);
    }
    Ok((hetero, homo))
}

/// Evaluates the joint objective on `batch` (indices into `dataset`) and returns the
/// gradient for every model parameter, in [`AEModel::layers`] order.
///
/// Without a context only reconstruction is evaluated. With `lambda == 0` the exclusivity
/// terms are still reported but contribute nothing to the gradient.
pub fn total_loss(
    model: &AEModel,
    objective: &Objective,
    ctx: Option<&ExclusivityContext>,
    dataset: &Matrix,
    batch: &[usize],
) -> Result<(LossBreakdown, GradSet)> {
    if batch.is_empty() {
        return Err(Error::invalid("empty batch"));
    }
    if let Some(&bad) = batch.iter().find(|&&i| i >= dataset.rows()) {
        return Err(Error::invalid(format!(
            "batch index {bad} out of range for {} rows",
            dataset.rows()
        )));
    }
    let n_enc = model.encoder.len();
    let mut grads = GradSet::zeros_like(model.layers());
    let (enc_grads, dec_grads) = grads.layers.split_at_mut(n_enc);

    let x = dataset.gather_rows(batch);
    let enc = forward_trace(&model.encoder, x)?;
    let h = enc.last().expect("non-empty").clone();
    let dec = forward_trace(&model.decoder, h.clone())?;
    let (l_a, g_xhat) = recon_loss(&enc[0], dec.last().expect("non-empty"), objective.reduction)?;
    let mut g_h = backward_trace(&model.decoder, &dec, g_xhat, dec_grads, true)?
        .expect("input gradient requested");

    let (l_h1, l_h2) = match ctx {
        None => (0.0, 1.0),
        Some(ctx) => {
            let (hetero, homo) = batch_targets(ctx, dataset, batch)?;
            let he = forward_trace(&model.encoder, hetero)?;
            let ho = forward_trace(&model.encoder, homo)?;
            let ex = exclusivity_loss(
                &h,
                he.last().expect("non-empty"),
                ho.last().expect("non-empty"),
                objective.reduction,
                objective.eps,
            )?;
            let lambda = objective.lambda;
            if lambda > 0.0 {
                g_h.add_scaled(&ex.grad_h, lambda)?;
                if objective.mean_grad == MeanGrad::Full {
                    backward_trace(&model.encoder, &he, ex.grad_hetero.scale(lambda), enc_grads, false)?;
                    backward_trace(&model.encoder, &ho, ex.grad_homo.scale(lambda), enc_grads, false)?;
                }
            }
            (ex.l_h1, ex.l_h2)
        }
    };
    backward_trace(&model.encoder, &enc, g_h, enc_grads, false)?;
    Ok((LossBreakdown::new(l_a, l_h1, l_h2, objective.lambda), grads))
}

/// Builds the exclusivity context and trains `model` in place; one record per epoch.
pub fn train(model: &mut AEModel, config: &AEConfig, dataset: &Matrix) -> Result<Vec<LossBreakdown>> {
    config.validate()?;
    let n = dataset.rows();
    if n < 2.max(config.m + 1) {
        return Err(Error::invalid(format!(
            "training needs at least max(2, m + 1) = {} examples, got {n}",
            2.max(config.m + 1)
        )));
    }
    if dataset.cols() != model.input_dim() {
        return Err(Error::Shape {
            op: "train",
            left: dataset.shape(),
            right: (n, model.input_dim()),
        });
    }
    if config.epochs == 0 {
        return Ok(Vec::new());
    }
    let ctx = ExclusivityContext::build(dataset, config.m)?;
    train_loop(model, &config.train_options(), Some(&ctx), dataset, |_, _| Ok(()))
}

/// Shuffled minibatch SGD. `after_epoch` runs after each epoch's updates.
pub fn train_loop(
    model: &mut AEModel,
    opts: &TrainOptions,
    ctx: Option<&ExclusivityContext>,
    dataset: &Matrix,
    mut after_epoch: impl FnMut(usize, &mut AEModel) -> Result<()>,
) -> Result<Vec<LossBreakdown>> {
    if opts.batch_size == 0 {
        return Err(Error::InvalidConfig("batch_size must be positive".into()));
    }
    let n = dataset.rows();
    if n == 0 {
        return Err(Error::invalid("empty training set"));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
    rng.set_stream(1);
    let mut order: Vec<usize> = (0..n).collect();
    let mut history = Vec::with_capacity(opts.epochs);
    for epoch in 0..opts.epochs {
        order.shuffle(&mut rng);
        let (mut sa, mut s1, mut s2) = (0.0, 0.0, 0.0);
        for (b, batch) in order.chunks(opts.batch_size).enumerate() {
            let (loss, grads) = total_loss(model, &opts.objective, ctx, dataset, batch)?;
            if !loss.l.is_finite() {
                return Err(Error::Diverged {
                    epoch,
                    batch: b,
                    loss: loss.l,
                });
            }
            sgd_step(model.layers_mut(), &grads, opts.lr).map_err(|e| match e {
                Error::NonFiniteGradient { .. } => Error::Diverged {
                    epoch,
                    batch: b,
                    loss: f64::NAN,
                },
                e => e,
            })?;
            let w = batch.len() as f64;
            sa += w * loss.l_a;
            s1 += w * loss.l_h1;
            s2 += w * loss.l_h2;
        }
        let nf = n as f64;
        history.push(LossBreakdown::new(sa / nf, s1 / nf, s2 / nf, opts.objective.lambda));
        after_epoch(epoch, model)?;
    }
    Ok(history)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numkit::grad_check;
    use rand::Rng;

    fn toy_dataset(seed: u64, n: usize, d: usize) -> Matrix {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        Matrix::new(n, d, (0..n * d).map(|_| rng.random_range(0.05..0.95)).collect()).unwrap()
    }

    fn toy_config(lambda: f64) -> AEConfig {
        AEConfig {
            layer_sizes: vec![2, 3, 2],
            encoder_activation: Activation::Sigmoid,
            latent_activation: Activation::Relu,
            decoder_activation: Activation::Sigmoid,
            output_activation: Activation::Sigmoid,
            lambda,
            m: 2,
            lr: 0.05,
            epochs: 50,
            batch_size: 3,
            seed: 5,
            ..AEConfig::default()
        }
    }

    #[test]
    fn identity_model_round_trips() {
        let id = DenseLayer::new(Matrix::identity(3), vec![0.0; 3], Activation::Identity).unwrap();
        let model = AEModel::new(vec![id.clone()], vec![id]).unwrap();
        let x = toy_dataset(1, 4, 3);
        assert_eq!(encode(&model, &x).unwrap(), x);
        assert_eq!(decode(&model, &encode(&model, &x).unwrap()).unwrap(), x);
    }

    #[test]
    fn saturated_relu_encoder_gives_zero_codes() {
        let l1 = DenseLayer::new(Matrix::from_rows(&[[1.0, 1.0], [1.0, 2.0]]).unwrap(), vec![-10.0, -10.0], Activation::Relu).unwrap();
        let l2 = DenseLayer::new(Matrix::from_rows(&[[1.0, 1.0]]).unwrap(), vec![-1.0], Activation::Relu).unwrap();
        let d = DenseLayer::new(Matrix::from_rows(&[[1.0], [1.0]]).unwrap(), vec![0.0, 0.0], Activation::Sigmoid).unwrap();
        let model = AEModel::new(vec![l1, l2], vec![d]).unwrap();
        let h = encode(&model, &toy_dataset(2, 5, 2)).unwrap();
        assert!(h.as_slice().iter().all(|&v| v == 0.0));
        let out = decode(&model, &Matrix::from_rows(&[[-50.0], [0.0], [50.0]]).unwrap()).unwrap();
        // sigmoid(±50) rounds to 0/1 in f64 only past ~±37 for the upper side
        assert!(out.as_slice().iter().all(|&v| (0.0..=1.0).contains(&v)));
        let mid = decode(&model, &Matrix::from_rows(&[[-3.0], [0.5], [3.0]]).unwrap()).unwrap();
        assert!(mid.as_slice().iter().all(|&v| v > 0.0 && v < 1.0));
    }

    #[test]
    fn hand_built_encoder() {
        // layer1: W=[[2,0],[0,3]], b=[1,-1], identity → [3,2]; layer2: W=[[1,-1]], b=[0.5], relu → 1.5
        let l1 = DenseLayer::new(Matrix::from_rows(&[[2.0, 0.0], [0.0, 3.0]]).unwrap(), vec![1.0, -1.0], Activation::Identity).unwrap();
        let l2 = DenseLayer::new(Matrix::from_rows(&[[1.0, -1.0]]).unwrap(), vec![0.5], Activation::Relu).unwrap();
        let d = DenseLayer::new(Matrix::from_rows(&[[1.0], [1.0]]).unwrap(), vec![0.0, 0.0], Activation::Identity).unwrap();
        let model = AEModel::new(vec![l1, l2], vec![d]).unwrap();
        assert_eq!(encode(&model, &Matrix::from_row(&[1.0, 1.0])).unwrap().as_slice(), &[1.5]);
        assert!(encode(&model, &Matrix::zeros(1, 3)).is_err());
    }

    #[test]
    fn recon_loss_examples() {
        let x = Matrix::from_row(&[0.0, 0.0]);
        let (l, g) = recon_loss(&x, &x, Reduction::BatchMean).unwrap();
        assert_eq!(l, 0.0);
        assert!(g.as_slice().iter().all(|&v| v == 0.0));
        let (l, _) = recon_loss(&x, &Matrix::from_row(&[1.0, 1.0]), Reduction::BatchMean).unwrap();
        assert_eq!(l, 2.0);
        assert!(recon_loss(&x, &Matrix::zeros(2, 2), Reduction::BatchMean).is_err());

        let x = toy_dataset(3, 3, 4);
        let xh = toy_dataset(4, 3, 4);
        for red in [Reduction::BatchMean, Reduction::PaperSum] {
            let (_, g) = recon_loss(&x, &xh, red).unwrap();
            let rep = grad_check(
                |p| recon_loss(&x, &Matrix::new(3, 4, p.to_vec()).unwrap(), red).unwrap().0,
                xh.as_slice(),
                g.as_slice(),
                1e-5,
            )
            .unwrap();
            assert!(rep.max_relative_error < 1e-4);
        }
    }

    #[test]
    fn lambda_zero_reduces_to_reconstruction() {
        let data = toy_dataset(7, 6, 2);
        let model = AEModel::init(&toy_config(0.0)).unwrap();
        let ctx = ExclusivityContext::build(&data, 2).unwrap();
        let obj = toy_config(0.0).objective();
        let batch = [0, 2, 5];
        let (with, g_with) = total_loss(&model, &obj, Some(&ctx), &data, &batch).unwrap();
        let (without, g_without) = total_loss(&model, &obj, None, &data, &batch).unwrap();
        assert_eq!(with.l, with.l_a);
        assert_eq!(with.l_a, without.l_a);
        assert_eq!(g_with, g_without);
    }

    #[test]
    fn full_objective_gradients_match_finite_differences() {
        let data = toy_dataset(9, 6, 2);
        let ctx = ExclusivityContext::build(&data, 2).unwrap();
        for mean_grad in [MeanGrad::Full, MeanGrad::Stopped] {
            for reduction in [Reduction::BatchMean, Reduction::PaperSum] {
                let cfg = AEConfig {
                    sum_mode: reduction,
                    mean_grad,
                    ..toy_config(7.0)
                };
                let model = AEModel::init(&cfg).unwrap();
                let obj = cfg.objective();
                let batch: Vec<usize> = (0..6).collect();
                let (_, grads) = total_loss(&model, &obj, Some(&ctx), &data, &batch).unwrap();
                let (frozen_he, frozen_ho) = {
                    let (he, ho) = batch_targets(&ctx, &data, &batch).unwrap();
                    (encode(&model, &he).unwrap(), encode(&model, &ho).unwrap())
                };
                let loss = |p: &[f64]| {
                    let mut m = model.clone();
                    m.set_params_flat(p).unwrap();
                    match mean_grad {
                        MeanGrad::Full => total_loss(&m, &obj, Some(&ctx), &data, &batch).unwrap().0.l,
                        MeanGrad::Stopped => {
                            let h = encode(&m, &data).unwrap();
                            let xh = decode(&m, &h).unwrap();
                            let la = recon_loss(&data, &xh, reduction).unwrap().0;
                            let ex = exclusivity_loss(&h, &frozen_he, &frozen_ho, reduction, DEFAULT_EPS).unwrap();
                            la + 7.0 * ex.l_h
                        }
                    }
                };
                let rep = grad_check(loss, &model.params_flat(), &grads.flatten(), 1e-5).unwrap();
                assert!(rep.max_relative_error < 1e-4, "{mean_grad:?}/{reduction:?}: {rep:?}");
            }
        }
    }

    #[test]
    fn training_is_deterministic_and_descends() {
        let data = toy_dataset(21, 6, 2);
        let cfg = toy_config(7.0);
        let mut a = AEModel::init(&cfg).unwrap();
        let mut b = AEModel::init(&cfg).unwrap();
        let ha = train(&mut a, &cfg, &data).unwrap();
        let hb = train(&mut b, &cfg, &data).unwrap();
        assert_eq!(a, b);
        assert_eq!(ha, hb);
        assert_eq!(ha.len(), 50);
        assert!(ha.last().unwrap().l < ha[0].l, "{:?} -> {:?}", ha[0], ha.last());
        for rec in &ha {
            assert!((rec.l_h - (rec.l_h1 + (1.0 - rec.l_h2))).abs() < 1e-12);
            assert!((rec.l - (rec.l_a + rec.lambda * rec.l_h)).abs() < 1e-12);
            assert!((0.0..=1.0).contains(&rec.l_h1) && (0.0..=1.0).contains(&rec.l_h2));
        }
    }

    #[test]
    fn zero_epochs_leaves_model_unchanged() {
        let data = toy_dataset(1, 6, 2);
        let cfg = AEConfig { epochs: 0, ..toy_config(7.0) };
        let mut m = AEModel::init(&cfg).unwrap();
        let before = m.clone();
        assert!(train(&mut m, &cfg, &data).unwrap().is_empty());
        assert_eq!(m, before);
    }

    #[test]
    fn divergence_is_reported_with_position() {
        let data = toy_dataset(1, 6, 2);
        let cfg = AEConfig {
            lr: 1e300,
            output_activation: Activation::Identity,
            decoder_activation: Activation::Identity,
            ..toy_config(0.0)
        };
        let mut m = AEModel::init(&cfg).unwrap();
        let err = train(&mut m, &cfg, &data).unwrap_err();
        assert!(matches!(err, Error::Diverged { .. }), "{err}");
    }

    #[test]
    fn config_validation() {
        assert!(AEConfig { layer_sizes: vec![4], ..AEConfig::default() }.validate().is_err());
        assert!(AEConfig { lambda: -1.0, ..AEConfig::default() }.validate().is_err());
        assert!(AEConfig { lr: 0.0, ..AEConfig::default() }.validate().is_err());
        let data = toy_dataset(1, 2, 2);
        let cfg = toy_config(1.0);
        let mut m = AEModel::init(&cfg).unwrap();
        assert!(train(&mut m, &cfg, &data).is_err());
    }
}
