use crate::{Error, Result};

pub const DEFAULT_EPSILON: f64 = 1e-5;

#[derive(Debug, Clone, PartialEq)]
pub struct GradCheckReport {
    /// `max_i |analytic_i − numeric_i| / max(1, |analytic_i|, |numeric_i|)`.
    pub max_relative_error: f64,
    pub worst_index: Option<usize>,
    pub numeric: Vec<f64>,
}

/// Compares `analytic` against central differences of `loss` around `params`.
pub fn grad_check(
    mut loss: impl FnMut(&[f64]) -> f64,
    params: &[f64],
    analytic: &[f64],
    epsilon: f64,
) -> Result<GradCheckReport> {
    if !(epsilon > 0.0) {
        return Err(Error::invalid(format!("epsilon must be > 0, got {epsilon}")));
    }
    if params.len() != analytic.len() {
        return Err(Error::invalid(format!(
            "{} parameters but {} analytic gradient entries",
            params.len(),
            analytic.len()
        )));
    }
    let base = loss(params);
    if !base.is_finite() {
        return Err(Error::NonFinite(format!("loss at base point is {base}")));
    }
    let mut p = params.to_vec();
    let mut numeric = Vec::with_capacity(p.len());
    let mut worst = (0.0, None);
    for i in 0..p.len() {
        let orig = p[i];
        p[i] = orig + epsilon;
        let plus = loss(&p);
        p[i] = orig - epsilon;
        let minus = loss(&p);
        p[i] = orig;
        if !plus.is_finite() || !minus.is_finite() {
            return Err(Error::NonFinite(format!(
                "loss at coordinate {i} is {plus} / {minus}"
            )));
        }
        let num = (plus - minus) / (2.0 * epsilon);
        let a = analytic[i];
        let rel = (a - num).abs() / 1f64.max(a.abs()).max(num.abs());
        if rel > worst.0 || worst.1.is_none() {
            worst = (rel, Some(i));
        }
        numeric.push(num);
    }
    Ok(GradCheckReport {
        max_relative_error: worst.0,
        worst_index: worst.1,
        numeric,
    })
}
