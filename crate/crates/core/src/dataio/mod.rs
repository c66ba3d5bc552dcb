//! Dataset ingestion and preparation.

mod idx;
mod pgm;

pub use idx::{load_idx, write_idx, IMAGE_MAGIC, LABEL_MAGIC};
pub use pgm::{encode_pgm, load_image_dir, parse_pgm};

pub mod idx_bytes {
    //! In-memory IDX encoding and decoding.
    pub use super::idx::{decode, encode, parse_images, parse_labels};
}

use std::collections::BTreeMap;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::numkit::Matrix;
use crate::{Error, Result};

/// Examples as rows with entries in `[0, 1]`. Labels are only ever used for evaluation.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    pub examples: Matrix,
    pub labels: Option<Vec<usize>>,
    pub image_shape: Option<(usize, usize)>,
}

impl Dataset {
    pub fn new(examples: Matrix, labels: Option<Vec<usize>>, image_shape: Option<(usize, usize)>) -> Result<Self> {
        let ds = Self {
            examples,
            labels,
            image_shape,
        };
        ds.validate()?;
        Ok(ds)
    }

    pub fn validate(&self) -> Result<()> {
        if let Some(v) = self.examples.as_slice().iter().find(|v| !(0.0..=1.0).contains(*v)) {
            return Err(Error::invalid(format!("dataset entry {v} outside [0, 1]")));
        }
        if let Some(l) = &self.labels {
            if l.len() != self.examples.rows() {
                return Err(Error::invalid(format!(
                    "{} labels for {} examples",
                    l.len(),
                    self.examples.rows()
                )));
            }
        }
        if let Some((h, w)) = self.image_shape {
            if h * w != self.examples.cols() {
                return Err(Error::invalid(format!(
                    "image shape {h}x{w} does not match {} columns",
                    self.examples.cols()
                )));
            }
        }
        Ok(())
    }

    pub fn len(&self) -> usize {
        self.examples.rows()
    }

    pub fn is_empty(&self) -> bool {
        self.examples.rows() == 0
    }

    pub fn dim(&self) -> usize {
        self.examples.cols()
    }

    pub fn labels(&self) -> Result<&[usize]> {
        self.labels
            .as_deref()
            .ok_or_else(|| Error::invalid("dataset has no labels"))
    }

    /// Rows `indices`, in that order.
    pub fn subset(&self, indices: &[usize]) -> Dataset {
        Dataset {
            examples: self.examples.gather_rows(indices),
            labels: self
                .labels
                .as_ref()
                .map(|l| indices.iter().map(|&i| l[i]).collect()),
            image_shape: self.image_shape,
        }
    }

    /// The first `n` rows (all of them if there are fewer).
    pub fn head(&self, n: usize) -> Dataset {
        let idx: Vec<usize> = (0..n.min(self.len())).collect();
        self.subset(&idx)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SplitSpec {
    pub per_class_train: usize,
    pub seed: u64,
    pub mirror_train: bool,
}

impl Default for SplitSpec {
    fn default() -> Self {
        Self {
            per_class_train: 10,
            seed: 0,
            mirror_train: true,
        }
    }
}

/// Originals followed by their horizontally flipped copies.
pub fn mirror(dataset: &Dataset) -> Result<Dataset> {
    let (h, w) = dataset
        .image_shape
        .ok_or_else(|| Error::invalid("mirroring needs an image shape"))?;
    let n = dataset.len();
    let mut flipped = Matrix::zeros(n, h * w);
    for r in 0..n {
        let src = dataset.examples.row(r);
        let dst = flipped.row_mut(r);
        for y in 0..h {
            for x in 0..w {
                dst[y * w + x] = src[y * w + (w - 1 - x)];
            }
        }
    }
    Ok(Dataset {
        examples: dataset.examples.vstack(&flipped)?,
        labels: dataset.labels.as_ref().map(|l| l.iter().chain(l).copied().collect()),
        image_shape: dataset.image_shape,
    })
}

/// Seeded per-class selection: `(train_indices, test_indices)`, each ascending.
pub fn split_indices(dataset: &Dataset, per_class_train: usize, seed: u64) -> Result<(Vec<usize>, Vec<usize>)> {
    partition(dataset, per_class_train, seed, true)
}

/// Like [`split_indices`] but a class may be taken whole; for pools with a separate test set.
pub fn select_per_class(dataset: &Dataset, per_class: usize, seed: u64) -> Result<Vec<usize>> {
    Ok(partition(dataset, per_class, seed, false)?.0)
}

fn partition(dataset: &Dataset, per_class_train: usize, seed: u64, need_rest: bool) -> Result<(Vec<usize>, Vec<usize>)> {
    if per_class_train == 0 {
        return Err(Error::InvalidConfig("per_class_train must be >= 1".into()));
    }
    let labels = dataset.labels()?;
    let mut by_class: BTreeMap<usize, Vec<usize>> = BTreeMap::new();
    for (i, &l) in labels.iter().enumerate() {
        by_class.entry(l).or_default().push(i);
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut train = Vec::new();
    let mut test = Vec::new();
    for (class, mut members) in by_class {
        if members.len() < per_class_train + usize::from(need_rest) {
            let bound = if need_rest { "more than" } else { "at least" };
            return Err(Error::invalid(format!(
                "class {class} has {} members, needs {bound} {per_class_train}",
                members.len()
            )));
        }
        members.shuffle(&mut rng);
        train.extend_from_slice(&members[..per_class_train]);
        test.extend_from_slice(&members[per_class_train..]);
    }
    train.sort_unstable();
    test.sort_unstable();
    Ok((train, test))
}

/// Per-class train/test split; the train part is mirrored afterwards if requested.
pub fn split_per_class(dataset: &Dataset, spec: &SplitSpec) -> Result<(Dataset, Dataset)> {
    let (tr, te) = split_indices(dataset, spec.per_class_train, spec.seed)?;
    let mut train = dataset.subset(&tr);
    if spec.mirror_train {
        train = mirror(&train)?;
    }
    Ok((train, dataset.subset(&te)))
}

/// Gaussian blobs: per class a mean drawn from `[0.25, 0.75]^dim`, rows are the mean plus
/// `N(0, spread²)` noise clipped to `[0, 1]`. Rows are grouped by class.
pub fn synth_gaussian(classes: usize, dim: usize, per_class: usize, spread: f64, seed: u64) -> Result<Dataset> {
    if classes == 0 || dim == 0 || per_class == 0 {
        return Err(Error::invalid("synthetic dataset counts must be positive"));
    }
    if !(spread > 0.0 && spread.is_finite()) {
        return Err(Error::invalid(format!("spread must be > 0, got {spread}")));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let noise = Normal::new(0.0, spread).map_err(|e| Error::invalid(e.to_string()))?;
    let mut data = Vec::with_capacity(classes * per_class * dim);
    let mut labels = Vec::with_capacity(classes * per_class);
    for c in 0..classes {
        let mean: Vec<f64> = (0..dim).map(|_| rng.random_range(0.25..=0.75)).collect();
        for _ in 0..per_class {
            data.extend(mean.iter().map(|&m| (m + noise.sample(&mut rng)).clamp(0.0, 1.0)));
            labels.push(c);
        }
    }
    Dataset::new(Matrix::new(classes * per_class, dim, data)?, Some(labels), None)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn labelled(n_per: usize, classes: usize) -> Dataset {
        let n = n_per * classes;
        Dataset::new(
            Matrix::new(n, 2, (0..2 * n).map(|i| (i % 7) as f64 / 7.0).collect()).unwrap(),
            Some((0..n).map(|i| i % classes).collect()),
            Some((1, 2)),
        )
        .unwrap()
    }

    #[test]
    fn mirror_flips_columns() {
        let ds = Dataset::new(Matrix::from_row(&[0.1, 0.2, 0.3]), Some(vec![5]), Some((1, 3))).unwrap();
        let m = mirror(&ds).unwrap();
        assert_eq!(m.examples.row(1), &[0.3, 0.2, 0.1]);
        assert_eq!(m.labels, Some(vec![5, 5]));

        let sym = Dataset::new(Matrix::from_row(&[0.1, 0.5, 0.1, 0.2, 0.9, 0.2]), None, Some((2, 3))).unwrap();
        let m = mirror(&sym).unwrap();
        assert_eq!(m.examples.row(0), m.examples.row(1));

        let no_shape = Dataset::new(Matrix::from_row(&[0.1]), None, None).unwrap();
        assert!(mirror(&no_shape).is_err());
    }

    #[test]
    fn double_mirror_contains_each_row_twice() {
        let ds = Dataset::new(
            Matrix::from_rows(&[[0.1, 0.2], [0.3, 0.4], [0.5, 0.6]]).unwrap(),
            None,
            Some((1, 2)),
        )
        .unwrap();
        let mm = mirror(&mirror(&ds).unwrap()).unwrap();
        assert_eq!(mm.len(), 12);
        for r in ds.examples.iter_rows() {
            assert_eq!(mm.examples.iter_rows().filter(|x| *x == r).count(), 2);
        }
    }

    #[test]
    fn split_counts() {
        let ds = labelled(12, 3);
        let spec = SplitSpec { per_class_train: 10, seed: 1, mirror_train: true };
        let (train, test) = split_per_class(&ds, &spec).unwrap();
        assert_eq!((train.len(), test.len()), (60, 6));
        let spec = SplitSpec { mirror_train: false, ..spec };
        let (train, test) = split_per_class(&ds, &spec).unwrap();
        assert_eq!((train.len(), test.len()), (30, 6));

        let spec = SplitSpec { per_class_train: 11, seed: 1, mirror_train: false };
        let (_, test) = split_per_class(&ds, &spec).unwrap();
        let mut per = test.labels.unwrap();
        per.sort();
        assert_eq!(per, vec![0, 1, 2]);
    }

    #[test]
    fn split_is_seeded_partition() {
        let ds = labelled(20, 4);
        let (a_tr, a_te) = split_indices(&ds, 5, 3).unwrap();
        let (b_tr, _) = split_indices(&ds, 5, 3).unwrap();
        assert_eq!(select_per_class(&ds, 5, 3).unwrap(), a_tr);
        assert_eq!(select_per_class(&ds, 20, 3).unwrap().len(), ds.len());
        let (c_tr, _) = split_indices(&ds, 5, 4).unwrap();
        assert_eq!(a_tr, b_tr);
        assert_ne!(a_tr, c_tr);
        assert_eq!(a_tr.len() + a_te.len(), ds.len());
        assert!(a_tr.iter().all(|i| !a_te.contains(i)));
    }

    #[test]
    fn small_class_is_named() {
        let ds = labelled(3, 2);
        let err = split_indices(&ds, 3, 0).unwrap_err().to_string();
        assert!(err.contains("class 0"), "{err}");
    }

    #[test]
    fn synth_examples() {
        let ds = synth_gaussian(3, 32, 100, 0.12, 7).unwrap();
        assert_eq!(ds.len(), 300);
        assert_eq!(ds.dim(), 32);
        let labels = ds.labels().unwrap();
        for c in 0..3 {
            assert_eq!(labels.iter().filter(|&&l| l == c).count(), 100);
        }
        assert_eq!(synth_gaussian(3, 32, 100, 0.12, 7).unwrap(), ds);
        assert!(ds.validate().is_ok());

        let tight = synth_gaussian(2, 4, 5, 1e-8, 1).unwrap();
        for c in 0..2 {
            let rows: Vec<&[f64]> = (0..5).map(|i| tight.examples.row(c * 5 + i)).collect();
            for r in &rows {
                for (a, b) in r.iter().zip(rows[0]) {
                    assert!((a - b).abs() < 1e-6);
                }
            }
        }
    }

    #[test]
    fn dataset_invariants() {
        assert!(Dataset::new(Matrix::from_row(&[1.5]), None, None).is_err());
        assert!(Dataset::new(Matrix::from_row(&[0.5]), Some(vec![1, 2]), None).is_err());
        assert!(Dataset::new(Matrix::from_row(&[0.5, 0.5]), None, Some((2, 2))).is_err());
    }
}
