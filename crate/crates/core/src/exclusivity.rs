//! Exclusivity constraints.
//!
//! Each training example `x_i` gets two prototypes computed once in input space:
//!
//! - the *heterogeneous* mean: the mean of every other training row,
//!   `(Σ_j x_j − x_i) / (n − 1)`;
//! - the *homologous* mean: the mean of the `m` rows most cosine-similar to `x_i`.
//!
//! In latent space both prototypes are pushed through the encoder and compared with
//! `h_i = f_e(x_i)` by a clamped cosine `Ω[u − h]·h / (‖Ω[u − h]‖‖h‖)` where `Ω` zeroes
//! negative entries. The heterogeneous term is driven towards 0 and the homologous term
//! towards 1: `L_h = L_h1 + (1 − L_h2)`.

use std::cmp::Ordering;

use serde::{Deserialize, Serialize};

use crate::numkit::{dot, l2_norm, Matrix};
use crate::{Error, Result};

/// Denominator floor for every norm in the clamped cosine.
pub const DEFAULT_EPS: f64 = 1e-12;

/// How per-example terms are combined over a batch.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Reduction {
    /// Average over the batch, so the weight of the penalty does not depend on batch size.
    #[default]
    BatchMean,
    /// Plain sum over the batch.
    PaperSum,
}

impl Reduction {
    pub fn factor(self, batch: usize) -> f64 {
        match self {
            Reduction::BatchMean => 1.0 / batch as f64,
            Reduction::PaperSum => 1.0,
        }
    }
}

/// Dimension-wise clamp: negative entries become 0.
pub fn omega(v: &[f64]) -> Vec<f64> {
    v.iter().map(|&x| if x >= 0.0 { x } else { 0.0 }).collect()
}

/// `Ω[u − h]·h / (‖Ω[u − h]‖‖h‖)`, or 0 when either norm is below `eps`.
pub fn clamped_cosine(u: &[f64], h: &[f64], eps: f64) -> Result<f64> {
    clamped_cosine_grad(u, h, eps).map(|(c, _, _)| c)
}

/// Clamped cosine with its gradients with respect to `u` and `h`.
///
/// The clamp's subgradient at exactly 0 is 0. Degenerate terms have zero gradient.
pub fn clamped_cosine_grad(u: &[f64], h: &[f64], eps: f64) -> Result<(f64, Vec<f64>, Vec<f64>)> {
    if u.len() != h.len() {
        return Err(Error::Shape {
            op: "clamped_cosine",
            left: (1, u.len()),
            right: (1, h.len()),
        });
    }
    let d: Vec<f64> = u.iter().zip(h).map(|(a, b)| (a - b).max(0.0)).collect();
    let dn = l2_norm(&d);
    let hn = l2_norm(h);
    let n = u.len();
    if dn < eps || hn < eps || !dn.is_finite() || !hn.is_finite() {
        return Ok((0.0, vec![0.0; n], vec![0.0; n]));
    }
    let c = dot(&d, h) / (dn * hn);
    let inv = 1.0 / (dn * hn);
    let mut gu = vec![0.0; n];
    let mut gh = vec![0.0; n];
    for k in 0..n {
        // ∂c/∂d_k and the direct ∂c/∂h_k
        let dc_dd = h[k] * inv - c * d[k] / (dn * dn);
        let dc_dh = d[k] * inv - c * h[k] / (hn * hn);
        let mask = if u[k] - h[k] > 0.0 { 1.0 } else { 0.0 };
        gu[k] = mask * dc_dd;
        gh[k] = dc_dh - mask * dc_dd;
    }
    Ok((c, gu, gh))
}

/// Cosine similarity used for neighbour ranking; zero-norm rows score −1.
fn ranking_similarity(a: &[f64], b: &[f64], na: f64, nb: f64) -> f64 {
    if na == 0.0 || nb == 0.0 {
        -1.0
    } else {
        dot(a, b) / (na * nb)
    }
}

/// Higher similarity first, lower index on ties.
fn rank_order(a: &(f64, usize), b: &(f64, usize)) -> Ordering {
    b.0.total_cmp(&a.0).then(a.1.cmp(&b.1))
}

fn check_m(n: usize, m: usize) -> Result<()> {
    if n < 2 {
        return Err(Error::invalid(format!("need at least 2 examples, got {n}")));
    }
    if m == 0 || m > n - 1 {
        return Err(Error::invalid(format!(
            "neighbour count m={m} out of range 1..={}",
            n - 1
        )));
    }
    Ok(())
}

fn select_top(mut scored: Vec<(f64, usize)>, m: usize) -> Vec<usize> {
    if m < scored.len() {
        scored.select_nth_unstable_by(m - 1, rank_order);
        scored.truncate(m);
    }
    scored.sort_by(rank_order);
    scored.into_iter().map(|(_, i)| i).collect()
}

fn neighbors_with_norms(dataset: &Matrix, norms: &[f64], j: usize, m: usize) -> Vec<usize> {
    let xj = dataset.row(j);
    let scored: Vec<(f64, usize)> = (0..dataset.rows())
        .filter(|&i| i != j)
        .map(|i| (ranking_similarity(xj, dataset.row(i), norms[j], norms[i]), i))
        .collect();
    select_top(scored, m)
}

/// The `m` rows (other than `j`) most cosine-similar to row `j`, best first.
pub fn top_m_neighbors(dataset: &Matrix, j: usize, m: usize) -> Result<Vec<usize>> {
    let n = dataset.rows();
    check_m(n, m)?;
    if j >= n {
        return Err(Error::invalid(format!("row index {j} out of range for {n} rows")));
    }
    let norms: Vec<f64> = dataset.iter_rows().map(l2_norm).collect();
    Ok(neighbors_with_norms(dataset, &norms, j, m))
}

/// Training-set statistics the exclusivity targets are derived from. Immutable once built.
#[derive(Debug, Clone, PartialEq)]
pub struct ExclusivityContext {
    dataset_sum: Vec<f64>,
    n: usize,
    m: usize,
    neighbor_table: Vec<Vec<usize>>,
}

/// Per-example prototypes in input space.
#[derive(Debug, Clone, PartialEq)]
pub struct ExclusivityTargets {
    pub hetero_mean: Vec<f64>,
    pub homo_mean: Vec<f64>,
}

impl ExclusivityContext {
    /// Sums the dataset and finds every row's top-`m` neighbours.
    pub fn build(dataset: &Matrix, m: usize) -> Result<Self> {
        let n = dataset.rows();
        check_m(n, m)?;
        let norms: Vec<f64> = dataset.iter_rows().map(l2_norm).collect();
        let neighbor_table = (0..n)
            .map(|j| neighbors_with_norms(dataset, &norms, j, m))
            .collect();
        Ok(Self {
            dataset_sum: dataset.column_sums(),
            n,
            m,
            neighbor_table,
        })
    }

    pub fn dataset_sum(&self) -> &[f64] {
        &self.dataset_sum
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn m(&self) -> usize {
        self.m
    }

    pub fn neighbor_table(&self) -> &[Vec<usize>] {
        &self.neighbor_table
    }

    /// Mean of the training set with `x_j` removed.
    pub fn exclude_one_mean(&self, x_j: &[f64]) -> Result<Vec<f64>> {
        if self.n < 2 {
            return Err(Error::invalid("exclude-one mean needs n >= 2"));
        }
        if x_j.len() != self.dataset_sum.len() {
            return Err(Error::Shape {
                op: "exclude_one_mean",
                left: (1, x_j.len()),
                right: (1, self.dataset_sum.len()),
            });
        }
        let denom = (self.n - 1) as f64;
        Ok(self
            .dataset_sum
            .iter()
            .zip(x_j)
            .map(|(s, x)| (s - x) / denom)
            .collect())
    }

    fn homo_mean(&self, dataset: &Matrix, i: usize) -> Vec<f64> {
        let mut mean = vec![0.0; dataset.cols()];
        for &k in &self.neighbor_table[i] {
            for (a, b) in mean.iter_mut().zip(dataset.row(k)) {
                *a += b;
            }
        }
        let inv = 1.0 / self.m as f64;
        mean.iter_mut().for_each(|v| *v *= inv);
        mean
    }

    fn check_dataset(&self, dataset: &Matrix) -> Result<()> {
        if dataset.rows() != self.n || dataset.cols() != self.dataset_sum.len() {
            return Err(Error::Shape {
                op: "exclusivity context",
                left: dataset.shape(),
                right: (self.n, self.dataset_sum.len()),
            });
        }
        Ok(())
    }

    pub fn targets_for(&self, dataset: &Matrix, i: usize) -> Result<ExclusivityTargets> {
        self.check_dataset(dataset)?;
        if i >= self.n {
            return Err(Error::invalid(format!("row index {i} out of range for {} rows", self.n)));
        }
        Ok(ExclusivityTargets {
            hetero_mean: self.exclude_one_mean(dataset.row(i))?,
            homo_mean: self.homo_mean(dataset, i),
        })
    }

    /// All targets at once, one row per example.
    pub fn target_tables(&self, dataset: &Matrix) -> Result<TargetTables> {
        self.check_dataset(dataset)?;
        let mut hetero = Matrix::zeros(self.n, dataset.cols());
        let mut homo = Matrix::zeros(self.n, dataset.cols());
        for i in 0..self.n {
            hetero
                .row_mut(i)
                .copy_from_slice(&self.exclude_one_mean(dataset.row(i))?);
            homo.row_mut(i).copy_from_slice(&self.homo_mean(dataset, i));
        }
        Ok(TargetTables { hetero, homo })
    }
}

/// Heterogeneous and homologous means for every training row, row-aligned with the data.
#[derive(Debug, Clone, PartialEq)]
pub struct TargetTables {
    pub hetero: Matrix,
    pub homo: Matrix,
}

/// Loss values and gradients of the exclusivity penalty on one batch.
#[derive(Debug, Clone, PartialEq)]
pub struct ExclusivityLoss {
    pub l_h1: f64,
    pub l_h2: f64,
    pub l_h: f64,
    pub grad_h: Matrix,
    pub grad_hetero: Matrix,
    pub grad_homo: Matrix,
}

/// Evaluates `L_h = L_h1 + (1 − L_h2)` for row-aligned latent codes and encoded
/// prototypes, with gradients for all three inputs.
pub fn exclusivity_loss(
    h_batch: &Matrix,
    enc_hetero: &Matrix,
    enc_homo: &Matrix,
    reduction: Reduction,
    eps: f64,
) -> Result<ExclusivityLoss> {
    for (other, op) in [(enc_hetero, "hetero"), (enc_homo, "homo")] {
        if other.shape() != h_batch.shape() {
            return Err(Error::Shape {
                op: if op == "hetero" {
                    "exclusivity_loss (hetero means)"
                } else {
                    "exclusivity_loss (homo means)"
                },
                left: h_batch.shape(),
                right: other.shape(),
            });
        }
    }
    let (b, d) = h_batch.shape();
    if b == 0 {
        return Err(Error::invalid("exclusivity loss on an empty batch"));
    }
    let scale = reduction.factor(b);
    let mut grad_h = Matrix::zeros(b, d);
    let mut grad_hetero = Matrix::zeros(b, d);
    let mut grad_homo = Matrix::zeros(b, d);
    let (mut s1, mut s2) = (0.0, 0.0);
    for i in 0..b {
        let h = h_batch.row(i);
        let (c1, gu1, gh1) = clamped_cosine_grad(enc_hetero.row(i), h, eps)?;
        let (c2, gu2, gh2) = clamped_cosine_grad(enc_homo.row(i), h, eps)?;
        s1 += c1;
        s2 += c2;
        // ∂L_h/∂c1 = +scale, ∂L_h/∂c2 = −scale
        for k in 0..d {
            grad_h.row_mut(i)[k] = scale * (gh1[k] - gh2[k]);
        }
        for (g, v) in grad_hetero.row_mut(i).iter_mut().zip(&gu1) {
            *g = scale * v;
        }
        for (g, v) in grad_homo.row_mut(i).iter_mut().zip(&gu2) {
            *g = -scale * v;
        }
    }
    let l_h1 = scale * s1;
    let l_h2 = scale * s2;
    Ok(ExclusivityLoss {
        l_h1,
        l_h2,
        l_h: l_h1 + (1.0 - l_h2),
        grad_h,
        grad_hetero,
        grad_homo,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numkit::grad_check;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_matrix(rng: &mut impl Rng, r: usize, c: usize, lo: f64, hi: f64) -> Matrix {
        Matrix::new(r, c, (0..r * c).map(|_| rng.random_range(lo..hi)).collect()).unwrap()
    }

    #[test]
    fn omega_examples() {
        assert_eq!(omega(&[1.5, -2.0, 0.0]), vec![1.5, 0.0, 0.0]);
        assert_eq!(omega(&[0.0, 3.0, 2.5]), vec![0.0, 3.0, 2.5]);
    }

    #[test]
    fn clamped_cosine_examples() {
        assert!((clamped_cosine(&[2.0, 2.0], &[1.0, 1.0], DEFAULT_EPS).unwrap() - 1.0).abs() < 1e-15);
        assert_eq!(clamped_cosine(&[1.0, 0.0], &[0.0, 1.0], DEFAULT_EPS).unwrap(), 0.0);
        let c = clamped_cosine(&[3.0, 1.0], &[1.0, 2.0], DEFAULT_EPS).unwrap();
        assert!((c - 1.0 / 5f64.sqrt()).abs() < 1e-15);
        assert!((c - 0.44721).abs() < 1e-5);
        let (c, gu, gh) = clamped_cosine_grad(&[0.0, 0.0], &[1.0, 1.0], DEFAULT_EPS).unwrap();
        assert_eq!((c, gu, gh), (0.0, vec![0.0; 2], vec![0.0; 2]));
        assert!(clamped_cosine(&[1.0], &[1.0, 2.0], DEFAULT_EPS).is_err());
    }

    #[test]
    fn clamped_cosine_gradient_matches_finite_differences() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..50 {
            let u: Vec<f64> = (0..5).map(|_| rng.random_range(-1.0..2.0)).collect();
            let h: Vec<f64> = (0..5).map(|_| rng.random_range(-1.0..1.0)).collect();
            let (_, gu, gh) = clamped_cosine_grad(&u, &h, DEFAULT_EPS).unwrap();
            let mut p = u.clone();
            p.extend_from_slice(&h);
            let mut a = gu.clone();
            a.extend_from_slice(&gh);
            let rep = grad_check(
                |p| clamped_cosine(&p[..5], &p[5..], DEFAULT_EPS).unwrap(),
                &p,
                &a,
                1e-6,
            )
            .unwrap();
            assert!(rep.max_relative_error < 1e-6, "{rep:?}");
        }
    }

    #[test]
    fn exclude_one_mean_examples() {
        let ds = Matrix::from_rows(&[[1.0, 2.0], [5.0, 4.0], [0.0, 3.0]]).unwrap();
        let ctx = ExclusivityContext::build(&ds, 1).unwrap();
        assert_eq!(ctx.dataset_sum(), &[6.0, 9.0]);
        assert_eq!(ctx.exclude_one_mean(&[0.0, 3.0]).unwrap(), vec![3.0, 3.0]);

        let two = Matrix::from_rows(&[[0.25, 0.5], [0.75, 1.0]]).unwrap();
        let ctx = ExclusivityContext::build(&two, 1).unwrap();
        assert_eq!(ctx.exclude_one_mean(two.row(0)).unwrap(), two.row(1).to_vec());

        let same = Matrix::from_rows(&[[0.3, 0.6]; 4]).unwrap();
        let ctx = ExclusivityContext::build(&same, 2).unwrap();
        let mean = ctx.exclude_one_mean(same.row(2)).unwrap();
        for (a, b) in mean.iter().zip(same.row(2)) {
            assert!((a - b).abs() < 1e-15);
        }
    }

    #[test]
    fn too_few_examples_is_an_error() {
        let one = Matrix::from_rows(&[[1.0, 2.0]]).unwrap();
        assert!(ExclusivityContext::build(&one, 1).is_err());
        let three = Matrix::from_rows(&[[1.0], [2.0], [3.0]]).unwrap();
        assert!(ExclusivityContext::build(&three, 3).is_err());
        assert!(ExclusivityContext::build(&three, 0).is_err());
        assert!(top_m_neighbors(&three, 5, 1).is_err());
    }

    #[test]
    fn neighbour_examples() {
        let ds = Matrix::from_rows(&[[1.0, 0.0], [2.0, 0.0], [0.0, 1.0]]).unwrap();
        assert_eq!(top_m_neighbors(&ds, 0, 1).unwrap(), vec![1]);
        assert_eq!(top_m_neighbors(&ds, 0, 2).unwrap(), vec![1, 2]);
        assert_eq!(top_m_neighbors(&ds, 2, 2).unwrap(), vec![0, 1]);

        let dup = Matrix::from_rows(&[[1.0, 1.0], [0.0, 1.0], [1.0, 1.0], [1.0, 1.0]]).unwrap();
        assert_eq!(top_m_neighbors(&dup, 0, 2).unwrap(), vec![2, 3]);

        // Zero-norm rows rank last.
        let z = Matrix::from_rows(&[[1.0, 0.0], [0.0, 0.0], [-1.0, 0.1]]).unwrap();
        assert_eq!(top_m_neighbors(&z, 0, 2).unwrap(), vec![2, 1]);
    }

    #[test]
    fn context_table_and_targets() {
        let ds = Matrix::from_rows(&[[1.0, 0.0], [2.0, 0.1], [0.0, 1.0]]).unwrap();
        let ctx = ExclusivityContext::build(&ds, 1).unwrap();
        for j in 0..3 {
            assert_eq!(ctx.neighbor_table()[j], top_m_neighbors(&ds, j, 1).unwrap());
            let t = ctx.targets_for(&ds, j).unwrap();
            assert_eq!(t.homo_mean, ds.row(ctx.neighbor_table()[j][0]).to_vec());
        }
        let full = ExclusivityContext::build(&ds, 2).unwrap();
        for (j, row) in full.neighbor_table().iter().enumerate() {
            let mut sorted = row.clone();
            sorted.sort();
            let expect: Vec<usize> = (0..3).filter(|&i| i != j).collect();
            assert_eq!(sorted, expect);
        }
        let twins = Matrix::from_rows(&[[0.0, 1.0], [2.0, 0.5], [2.0, 0.5], [0.1, 0.9]]).unwrap();
        let ctx = ExclusivityContext::build(&twins, 2).unwrap();
        let t = ctx.targets_for(&twins, 0).unwrap();
        assert_eq!(ctx.neighbor_table()[0], vec![3, 1]);
        let t1 = ctx.targets_for(&twins, 3).unwrap();
        assert_eq!(ctx.neighbor_table()[3], vec![0, 1]);
        assert!(t.homo_mean.iter().all(|v| v.is_finite()) && t1.hetero_mean.len() == 2);
    }

    #[test]
    fn ideal_state_gives_zero_penalty() {
        // enc_homo = 2h makes Ω[2h − h] = h for nonnegative h, cosine 1.
        // enc_hetero zero on h's support and positive elsewhere is orthogonal after the clamp.
        let h = Matrix::from_rows(&[[1.0, 0.0, 2.0], [0.0, 3.0, 0.0]]).unwrap();
        let homo = h.scale(2.0);
        let hetero = Matrix::from_rows(&[[0.0, 5.0, 0.0], [4.0, 0.0, 1.0]]).unwrap();
        let l = exclusivity_loss(&h, &hetero, &homo, Reduction::BatchMean, DEFAULT_EPS).unwrap();
        assert_eq!(l.l_h1, 0.0);
        assert!((l.l_h2 - 1.0).abs() < 1e-15 && l.l_h.abs() < 1e-15, "{l:?}");
    }

    #[test]
    fn single_example_hetero_value() {
        let h = Matrix::from_row(&[1.0, 2.0]);
        let hetero = Matrix::from_row(&[3.0, 1.0]);
        let homo = h.scale(2.0);
        let l = exclusivity_loss(&h, &hetero, &homo, Reduction::BatchMean, DEFAULT_EPS).unwrap();
        assert!((l.l_h1 - 0.44721).abs() < 1e-5);
    }

    #[test]
    fn misaligned_rows_are_rejected() {
        let h = Matrix::zeros(2, 3);
        let r = exclusivity_loss(&h, &Matrix::zeros(3, 3), &h, Reduction::BatchMean, DEFAULT_EPS);
        assert!(matches!(r, Err(Error::Shape { .. })));
    }

    #[test]
    fn loss_gradients_match_finite_differences() {
        let mut rng = ChaCha8Rng::seed_from_u64(17);
        for reduction in [Reduction::BatchMean, Reduction::PaperSum] {
            for _ in 0..10 {
                let (b, d) = (4, 5);
                let h = random_matrix(&mut rng, b, d, -0.2, 1.0);
                let he = random_matrix(&mut rng, b, d, -0.2, 1.5);
                let ho = random_matrix(&mut rng, b, d, -0.2, 1.5);
                let l = exclusivity_loss(&h, &he, &ho, reduction, DEFAULT_EPS).unwrap();
                let n = b * d;
                let mut p = h.as_slice().to_vec();
                p.extend_from_slice(he.as_slice());
                p.extend_from_slice(ho.as_slice());
                let mut a = l.grad_h.as_slice().to_vec();
                a.extend_from_slice(l.grad_hetero.as_slice());
                a.extend_from_slice(l.grad_homo.as_slice());
                let f = |p: &[f64]| {
                    let m = |s: &[f64]| Matrix::new(b, d, s.to_vec()).unwrap();
                    exclusivity_loss(&m(&p[..n]), &m(&p[n..2 * n]), &m(&p[2 * n..]), reduction, DEFAULT_EPS)
                        .unwrap()
                        .l_h
                };
                let rep = grad_check(f, &p, &a, 1e-6).unwrap();
                assert!(rep.max_relative_error < 1e-4, "{reduction:?}: {rep:?}");
            }
        }
    }

    proptest! {
        #[test]
        fn omega_properties(v in prop::collection::vec(-10.0f64..10.0, 0..20)) {
            let o = omega(&v);
            prop_assert!(o.iter().all(|&x| x >= 0.0));
            prop_assert_eq!(omega(&o), o.clone());
            let nonneg = v.iter().all(|&x| x >= 0.0);
            prop_assert_eq!(o == v, nonneg);
        }

        #[test]
        fn clamped_cosine_bounds(
            u in prop::collection::vec(-5.0f64..5.0, 4),
            h in prop::collection::vec(-5.0f64..5.0, 4),
        ) {
            let c = clamped_cosine(&u, &h, DEFAULT_EPS).unwrap();
            prop_assert!(c.is_finite());
            prop_assert!((-1.0 - 1e-12..=1.0 + 1e-12).contains(&c));
            let hp = omega(&h);
            let cp = clamped_cosine(&u, &hp, DEFAULT_EPS).unwrap();
            prop_assert!((-1e-12..=1.0 + 1e-12).contains(&cp));
        }

        #[test]
        fn degenerate_inputs_never_produce_nan(
            u in prop::collection::vec(prop_oneof![Just(0.0), -1e-300f64..1e-300, -1e3f64..1e3], 3),
            h in prop::collection::vec(prop_oneof![Just(0.0), -1e-300f64..1e-300, -1e3f64..1e3], 3),
        ) {
            let (c, gu, gh) = clamped_cosine_grad(&u, &h, DEFAULT_EPS).unwrap();
            prop_assert!(c.is_finite());
            prop_assert!(gu.iter().chain(&gh).all(|g| g.is_finite()));
        }

        #[test]
        fn loss_is_scale_invariant_per_example(
            seed in 0u64..1000,
            k in 0.1f64..10.0,
        ) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let h = random_matrix(&mut rng, 3, 4, -0.5, 1.0);
            let he = random_matrix(&mut rng, 3, 4, -0.5, 1.5);
            let ho = random_matrix(&mut rng, 3, 4, -0.5, 1.5);
            let base = exclusivity_loss(&h, &he, &ho, Reduction::BatchMean, DEFAULT_EPS).unwrap();
            let row = (seed % 3) as usize;
            let (mut h2, mut he2, mut ho2) = (h.clone(), he.clone(), ho.clone());
            for m in [&mut h2, &mut he2, &mut ho2] {
                m.row_mut(row).iter_mut().for_each(|v| *v *= k);
            }
            let scaled = exclusivity_loss(&h2, &he2, &ho2, Reduction::BatchMean, DEFAULT_EPS).unwrap();
            prop_assert!((base.l_h - scaled.l_h).abs() < 1e-12);
        }
    }
}
