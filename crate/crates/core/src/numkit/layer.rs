//! Affine layers `y = activation(x·Wᵀ + b)` with hand-coded backward passes.

use rand::Rng;
use rand_distr::{Distribution, Uniform};
use serde::{Deserialize, Serialize};

use super::Matrix;
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Activation {
    Identity,
    Relu,
    Sigmoid,
}

impl Activation {
    #[inline]
    pub fn apply(self, z: f64) -> f64 {
        match self {
            Activation::Identity => z,
            Activation::Relu => {
                if z > 0.0 {
                    z
                } else {
                    0.0
                }
            }
            Activation::Sigmoid => {
                // Split on sign so exp never overflows.
                if z >= 0.0 {
                    1.0 / (1.0 + (-z).exp())
                } else {
                    let e = z.exp();
                    e / (1.0 + e)
                }
            }
        }
    }

    /// Derivative expressed through the activation's output `a`.
    /// `relu'(0) = 0`.
    #[inline]
    pub fn derivative_from_output(self, a: f64) -> f64 {
        match self {
            Activation::Identity => 1.0,
            Activation::Relu => {
                if a > 0.0 {
                    1.0
                } else {
                    0.0
                }
            }
            Activation::Sigmoid => a * (1.0 - a),
        }
    }

    pub fn code(self) -> u8 {
        match self {
            Activation::Identity => 0,
            Activation::Relu => 1,
            Activation::Sigmoid => 2,
        }
    }

    pub fn from_code(code: u8) -> Option<Self> {
        match code {
            0 => Some(Activation::Identity),
            1 => Some(Activation::Relu),
            2 => Some(Activation::Sigmoid),
            _ => None,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Activation::Identity => "identity",
            Activation::Relu => "relu",
            Activation::Sigmoid => "sigmoid",
        }
    }
}

impl std::str::FromStr for Activation {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "identity" => Ok(Activation::Identity),
            "relu" => Ok(Activation::Relu),
            "sigmoid" => Ok(Activation::Sigmoid),
            other => Err(Error::invalid(format!("unknown activation {other:?}"))),
        }
    }
}

/// Weight is `out_dim x in_dim`, bias has `out_dim` entries.
#[derive(Debug, Clone, PartialEq)]
pub struct DenseLayer {
    pub weight: Matrix,
    pub bias: Vec<f64>,
    pub activation: Activation,
}

/// Gradient for one [`DenseLayer`], same shapes as its parameters.
#[derive(Debug, Clone, PartialEq)]
pub struct LayerGrad {
    pub weight: Matrix,
    pub bias: Vec<f64>,
}

impl LayerGrad {
    pub fn zeros_like(layer: &DenseLayer) -> Self {
        Self {
            weight: Matrix::zeros(layer.out_dim(), layer.in_dim()),
            bias: vec![0.0; layer.out_dim()],
        }
    }

    pub fn accumulate(&mut self, other: &LayerGrad) -> Result<()> {
        self.weight.add_scaled(&other.weight, 1.0)?;
        for (a, b) in self.bias.iter_mut().zip(&other.bias) {
            *a += b;
        }
        Ok(())
    }

    pub fn is_finite(&self) -> bool {
        self.weight.is_finite() && self.bias.iter().all(|v| v.is_finite())
    }
}

impl DenseLayer {
    pub fn new(weight: Matrix, bias: Vec<f64>, activation: Activation) -> Result<Self> {
        if bias.len() != weight.rows() {
            return Err(Error::Shape {
                op: "DenseLayer::new",
                left: weight.shape(),
                right: (bias.len(), 1),
            });
        }
        Ok(Self {
            weight,
            bias,
            activation,
        })
    }

    /// Glorot-uniform weights in `±sqrt(6 / (in + out))`, zero bias.
    pub fn glorot<R: Rng + ?Sized>(
        in_dim: usize,
        out_dim: usize,
        activation: Activation,
        rng: &mut R,
    ) -> Self {
        let limit = (6.0 / (in_dim + out_dim) as f64).sqrt();
        let dist = Uniform::new_inclusive(-limit, limit).expect("finite positive limit");
        let data = (0..in_dim * out_dim).map(|_| dist.sample(rng)).collect();
        Self {
            weight: Matrix::new(out_dim, in_dim, data).expect("sized above"),
            bias: vec![0.0; out_dim],
            activation,
        }
    }

    #[inline]
    pub fn in_dim(&self) -> usize {
        self.weight.cols()
    }

    #[inline]
    pub fn out_dim(&self) -> usize {
        self.weight.rows()
    }

    pub fn num_params(&self) -> usize {
        self.weight.as_slice().len() + self.bias.len()
    }
}

pub fn affine_forward(layer: &DenseLayer, input: &Matrix) -> Result<Matrix> {
    if input.cols() != layer.in_dim() {
        return Err(Error::Shape {
            op: "affine_forward",
            left: input.shape(),
            right: layer.weight.shape(),
        });
    }
    let mut out = input.matmul_nt(&layer.weight)?;
    let act = layer.activation;
    let cols = out.cols();
    for row in out.as_mut_slice().chunks_mut(cols.max(1)) {
        for (v, b) in row.iter_mut().zip(&layer.bias) {
            *v = act.apply(*v + b);
        }
    }
    Ok(out)
}

/// Backward pass given the forward `output` already computed for `input`.
/// `grad_in` is skipped (returned as `None`) when `need_grad_in` is false.
pub fn affine_backward_cached(
    layer: &DenseLayer,
    input: &Matrix,
    output: &Matrix,
    grad_out: &Matrix,
    need_grad_in: bool,
) -> Result<(LayerGrad, Option<Matrix>)> {
    if grad_out.shape() != output.shape() || output.shape() != (input.rows(), layer.out_dim()) {
        return Err(Error::Shape {
            op: "affine_backward",
            left: grad_out.shape(),
            right: (input.rows(), layer.out_dim()),
        });
    }
    if input.cols() != layer.in_dim() {
        return Err(Error::Shape {
            op: "affine_backward",
            left: input.shape(),
            right: layer.weight.shape(),
        });
    }
    let act = layer.activation;
    // dz = grad_out ⊙ act'(z)
    let mut dz = grad_out.clone();
    if act != super::Activation::Identity {
        for (g, &a) in dz.as_mut_slice().iter_mut().zip(output.as_slice()) {
            *g *= act.derivative_from_output(a);
        }
    }
    let weight = dz.matmul_tn(input)?;
    let bias = dz.column_sums();
    let grad_in = if need_grad_in {
        Some(dz.matmul(&layer.weight)?)
    } else {
        None
    };
    Ok((LayerGrad { weight, bias }, grad_in))
}

/// Returns `(∂L/∂W, ∂L/∂b)` and `∂L/∂input` for upstream gradient `grad_out`.
pub fn affine_backward(
    layer: &DenseLayer,
    input: &Matrix,
    grad_out: &Matrix,
) -> Result<(LayerGrad, Matrix)> {
    let output = affine_forward(layer, input)?;
    let (g, gi) = affine_backward_cached(layer, input, &output, grad_out, true)?;
    Ok((g, gi.expect("requested")))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numkit::grad_check;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn layer(w: &[&[f64]], b: &[f64], act: Activation) -> DenseLayer {
        DenseLayer::new(Matrix::from_rows(w).unwrap(), b.to_vec(), act).unwrap()
    }

    #[test]
    fn forward_examples() {
        let l = layer(&[&[1.0, 0.0], &[0.0, 1.0]], &[0.0, 0.0], Activation::Identity);
        let out = affine_forward(&l, &Matrix::from_row(&[3.0, 4.0])).unwrap();
        assert_eq!(out.as_slice(), &[3.0, 4.0]);

        let l = layer(&[&[1.0, 1.0]], &[-5.0], Activation::Relu);
        let out = affine_forward(&l, &Matrix::from_row(&[2.0, 2.0])).unwrap();
        assert_eq!(out.as_slice(), &[0.0]);

        let l = layer(&[&[2.0, 0.0], &[0.0, 3.0]], &[1.0, -1.0], Activation::Identity);
        let out = affine_forward(&l, &Matrix::from_row(&[1.0, 1.0])).unwrap();
        assert_eq!(out.as_slice(), &[3.0, 2.0]);
    }

    #[test]
    fn forward_dimension_mismatch_names_shapes() {
        let l = layer(&[&[1.0, 1.0]], &[0.0], Activation::Identity);
        let err = affine_forward(&l, &Matrix::zeros(1, 3)).unwrap_err();
        let msg = err.to_string();
        assert!(msg.contains("(1, 3)") && msg.contains("(1, 2)"), "{msg}");
    }

    #[test]
    fn backward_scalar_chain_rule() {
        let l = layer(&[&[1.0]], &[0.0], Activation::Identity);
        let (g, gi) =
            affine_backward(&l, &Matrix::from_row(&[2.0]), &Matrix::from_row(&[1.0])).unwrap();
        assert_eq!(g.weight.as_slice(), &[2.0]);
        assert_eq!(g.bias, vec![1.0]);
        assert_eq!(gi.as_slice(), &[1.0]);
    }

    #[test]
    fn dead_relu_passes_no_gradient() {
        let l = layer(&[&[1.0, 1.0]], &[-10.0], Activation::Relu);
        let (g, gi) =
            affine_backward(&l, &Matrix::from_row(&[1.0, 2.0]), &Matrix::from_row(&[3.0]))
                .unwrap();
        assert!(g.weight.as_slice().iter().all(|&v| v == 0.0));
        assert_eq!(g.bias, vec![0.0]);
        assert!(gi.as_slice().iter().all(|&v| v == 0.0));
    }

    #[test]
    fn backward_rejects_bad_grad_shape() {
        let l = layer(&[&[1.0, 1.0]], &[0.0], Activation::Identity);
        let r = affine_backward(&l, &Matrix::from_row(&[1.0, 2.0]), &Matrix::zeros(1, 2));
        assert!(matches!(r, Err(Error::Shape { .. })));
    }

    /// Loss `Σ c ⊙ forward(x)` against central differences, for every activation.
    #[test]
    fn backward_matches_finite_differences() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for act in [Activation::Identity, Activation::Relu, Activation::Sigmoid] {
            for _ in 0..5 {
                let l = DenseLayer {
                    bias: (0..3).map(|_| rng.random_range(-0.5..0.5)).collect(),
                    ..DenseLayer::glorot(2, 3, act, &mut rng)
                };
                let x = Matrix::new(4, 2, (0..8).map(|_| rng.random_range(-1.0..1.0)).collect())
                    .unwrap();
                let c = Matrix::new(4, 3, (0..12).map(|_| rng.random_range(-1.0..1.0)).collect())
                    .unwrap();
                let (g, gi) = affine_backward(&l, &x, &c).unwrap();

                let loss = |w: &[f64], xs: &[f64]| {
                    let layer = DenseLayer {
                        weight: Matrix::new(3, 2, w[..6].to_vec()).unwrap(),
                        bias: w[6..].to_vec(),
                        activation: act,
                    };
                    let out = affine_forward(&layer, &Matrix::new(4, 2, xs.to_vec()).unwrap())
                        .unwrap();
                    crate::numkit::dot(out.as_slice(), c.as_slice())
                };
                let mut params = l.weight.as_slice().to_vec();
                params.extend_from_slice(&l.bias);
                let mut analytic = g.weight.as_slice().to_vec();
                analytic.extend_from_slice(&g.bias);
                let rep =
                    grad_check(|p| loss(p, x.as_slice()), &params, &analytic, 1e-5).unwrap();
                assert!(rep.max_relative_error < 1e-4, "{act:?}: {rep:?}");
                let rep = grad_check(|xs| loss(&params, xs), x.as_slice(), gi.as_slice(), 1e-5)
                    .unwrap();
                assert!(rep.max_relative_error < 1e-4, "{act:?} input: {rep:?}");
            }
        }
    }

    #[test]
    fn sigmoid_is_stable_at_extremes() {
        assert_eq!(Activation::Sigmoid.apply(-1000.0), 0.0);
        assert_eq!(Activation::Sigmoid.apply(1000.0), 1.0);
        assert!(Activation::Sigmoid.apply(-745.0).is_finite());
    }
}
