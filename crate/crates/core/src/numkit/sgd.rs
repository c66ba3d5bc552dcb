use super::{DenseLayer, LayerGrad};
use crate::{Error, Result};

/// One [`LayerGrad`] per layer, in the parameter set's layer order.
#[derive(Debug, Clone, PartialEq)]
pub struct GradSet {
    pub layers: Vec<LayerGrad>,
}

impl GradSet {
    pub fn zeros_like<'a>(layers: impl IntoIterator<Item = &'a DenseLayer>) -> Self {
        Self {
            layers: layers.into_iter().map(LayerGrad::zeros_like).collect(),
        }
    }

    /// All entries flattened layer by layer: weights (row-major) then bias.
    pub fn flatten(&self) -> Vec<f64> {
        let mut out = Vec::new();
        for g in &self.layers {
            out.extend_from_slice(g.weight.as_slice());
            out.extend_from_slice(&g.bias);
        }
        out
    }
}

/// Plain SGD: `p ← p − lr·g` for every parameter.
///
/// Gradients are validated before anything is written, so an error leaves the
/// parameters untouched.
pub fn sgd_step<'a>(
    layers: impl IntoIterator<Item = &'a mut DenseLayer>,
    grads: &GradSet,
    lr: f64,
) -> Result<()> {
    if !(lr > 0.0 && lr.is_finite()) {
        return Err(Error::invalid(format!("learning rate must be > 0, got {lr}")));
    }
    let layers: Vec<&mut DenseLayer> = layers.into_iter().collect();
    if layers.len() != grads.layers.len() {
        return Err(Error::invalid(format!(
            "gradient set has {} layers, parameters have {}",
            grads.layers.len(),
            layers.len()
        )));
    }
    for (i, (l, g)) in layers.iter().zip(&grads.layers).enumerate() {
        if l.weight.shape() != g.weight.shape() || l.bias.len() != g.bias.len() {
            return Err(Error::Shape {
                op: "sgd_step",
                left: l.weight.shape(),
                right: g.weight.shape(),
            });
        }
        if !g.is_finite() {
            return Err(Error::NonFiniteGradient { layer: i });
        }
    }
    for (l, g) in layers.into_iter().zip(&grads.layers) {
        for (p, d) in l.weight.as_mut_slice().iter_mut().zip(g.weight.as_slice()) {
            *p -= lr * d;
        }
        for (p, d) in l.bias.iter_mut().zip(&g.bias) {
            *p -= lr * d;
        }
    }
    Ok(())
}
