use serde::{Deserialize, Serialize};

use crate::numkit::{dot, l2_norm, Matrix};
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Metric {
    #[default]
    Euclidean,
    /// `1 − cos`; a zero-norm row has cosine 0 to everything.
    Cosine,
}

impl std::str::FromStr for Metric {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "euclidean" => Ok(Metric::Euclidean),
            "cosine" => Ok(Metric::Cosine),
            other => Err(Error::invalid(format!("unknown metric {other:?}"))),
        }
    }
}

impl Metric {
    fn distance(self, a: &[f64], b: &[f64], na: f64, nb: f64) -> f64 {
        match self {
            Metric::Euclidean => a
                .iter()
                .zip(b)
                .map(|(x, y)| (x - y) * (x - y))
                .sum::<f64>()
                .sqrt(),
            Metric::Cosine => {
                if na == 0.0 || nb == 0.0 {
                    1.0
                } else {
                    1.0 - dot(a, b) / (na * nb)
                }
            }
        }
    }
}

fn vote(neigh: &[(f64, usize)], labels: &[usize]) -> usize {
    // (count, summed distance) per label
    let mut tally: Vec<(usize, usize, f64)> = Vec::with_capacity(neigh.len());
    for &(d, i) in neigh {
        let l = labels[i];
        match tally.iter_mut().find(|t| t.0 == l) {
            Some(t) => {
                t.1 += 1;
                t.2 += d;
            }
            None => tally.push((l, 1, d)),
        }
    }
    tally
        .into_iter()
        .min_by(|a, b| b.1.cmp(&a.1).then(a.2.total_cmp(&b.2)).then(a.0.cmp(&b.0)))
        .map(|t| t.0)
        .expect("k >= 1")
}

fn classify(
    train: &Matrix,
    labels: &[usize],
    query: &Matrix,
    k: usize,
    metric: Metric,
    exclude_self: bool,
) -> Result<Vec<usize>> {
    let n = train.rows();
    if n == 0 {
        return Err(Error::invalid("k-NN needs a non-empty training set"));
    }
    if labels.len() != n {
        return Err(Error::invalid(format!("{} labels for {n} training rows", labels.len())));
    }
    let available = if exclude_self { n - 1 } else { n };
    if k == 0 || k > available {
        return Err(Error::invalid(format!("k={k} out of range 1..={available}")));
    }
    if query.cols() != train.cols() && query.rows() > 0 {
        return Err(Error::Shape {
            op: "knn_classify",
            left: query.shape(),
            right: train.shape(),
        });
    }
    let train_norms: Vec<f64> = train.iter_rows().map(l2_norm).collect();
    let order = |a: &(f64, usize), b: &(f64, usize)| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1));
    let mut preds = Vec::with_capacity(query.rows());
    let mut scored = Vec::with_capacity(n);
    for (q, row) in query.iter_rows().enumerate() {
        let qn = l2_norm(row);
        scored.clear();
        scored.extend(
            (0..n)
                .filter(|&i| !(exclude_self && i == q))
                .map(|i| (metric.distance(row, train.row(i), qn, train_norms[i]), i)),
        );
        if k < scored.len() {
            scored.select_nth_unstable_by(k - 1, order);
            scored.truncate(k);
        }
        scored.sort_by(order);
        preds.push(vote(&scored, labels));
    }
    Ok(preds)
}

/// k-nearest-neighbour majority vote. Vote ties go to the smaller summed distance,
/// then the lower label; distance ties between candidates go to the lower row index.
pub fn knn_classify(
    train_feats: &Matrix,
    train_labels: &[usize],
    query_feats: &Matrix,
    k: usize,
    metric: Metric,
) -> Result<Vec<usize>> {
    classify(train_feats, train_labels, query_feats, k, metric, false)
}

/// Classifies the training set against itself with each row excluded from its own
/// candidates.
pub fn knn_classify_self(train_feats: &Matrix, train_labels: &[usize], k: usize, metric: Metric) -> Result<Vec<usize>> {
    classify(train_feats, train_labels, train_feats, k, metric, true)
}

/// Fraction of matching entries.
pub fn accuracy(predicted: &[usize], truth: &[usize]) -> Result<f64> {
    if predicted.len() != truth.len() {
        return Err(Error::invalid(format!(
            "{} predictions for {} labels",
            predicted.len(),
            truth.len()
        )));
    }
    if predicted.is_empty() {
        return Err(Error::invalid("accuracy of an empty prediction set"));
    }
    let hits = predicted.iter().zip(truth).filter(|(a, b)| a == b).count();
    Ok(hits as f64 / predicted.len() as f64)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn nearest_of_exact_match() {
        let train = Matrix::from_rows(&[[0.0, 0.0], [1.0, 1.0], [5.0, 5.0]]).unwrap();
        let labels = [3, 1, 2];
        let p = knn_classify(&train, &labels, &train, 1, Metric::Euclidean).unwrap();
        assert_eq!(p, vec![3, 1, 2]);
    }

    #[test]
    fn single_training_example() {
        let train = Matrix::from_row(&[0.5, 0.5]);
        let q = Matrix::from_rows(&[[9.0, 9.0], [-1.0, 0.0]]).unwrap();
        assert_eq!(knn_classify(&train, &[4], &q, 1, Metric::Euclidean).unwrap(), vec![4, 4]);
    }

    #[test]
    fn vote_tie_breaks() {
        // k = 2, one neighbour per label: the closer one wins
        let train = Matrix::from_rows(&[[0.0], [3.0]]).unwrap();
        let q = Matrix::from_row(&[1.0]);
        assert_eq!(knn_classify(&train, &[7, 2], &q, 2, Metric::Euclidean).unwrap(), vec![7]);
        // equal summed distance → lower label
        let q = Matrix::from_row(&[1.5]);
        assert_eq!(knn_classify(&train, &[7, 2], &q, 2, Metric::Euclidean).unwrap(), vec![2]);
        // majority beats distance
        let train = Matrix::from_rows(&[[0.0], [2.0], [2.1]]).unwrap();
        let q = Matrix::from_row(&[0.0]);
        assert_eq!(knn_classify(&train, &[0, 1, 1], &q, 3, Metric::Euclidean).unwrap(), vec![1]);
    }

    #[test]
    fn self_exclusion() {
        let train = Matrix::from_rows(&[[0.0], [0.1], [5.0], [5.1]]).unwrap();
        let labels = [0, 0, 1, 1];
        let p = knn_classify_self(&train, &labels, 1, Metric::Euclidean).unwrap();
        assert_eq!(accuracy(&p, &labels).unwrap(), 1.0);
        // without exclusion every row would find itself; with it, row 0 sees row 1
        let lone = [0, 1, 1, 1];
        let p = knn_classify_self(&train, &lone, 1, Metric::Euclidean).unwrap();
        assert_eq!(p[0], 1);
    }

    #[test]
    fn cosine_metric() {
        let train = Matrix::from_rows(&[[1.0, 0.0], [0.0, 1.0]]).unwrap();
        let q = Matrix::from_row(&[10.0, 1.0]);
        assert_eq!(knn_classify(&train, &[0, 1], &q, 1, Metric::Cosine).unwrap(), vec![0]);
    }

    #[test]
    fn errors() {
        let empty = Matrix::zeros(0, 2);
        assert!(knn_classify(&empty, &[], &Matrix::from_row(&[1.0, 1.0]), 1, Metric::Euclidean).is_err());
        let t = Matrix::from_row(&[1.0, 1.0]);
        assert!(knn_classify(&t, &[0], &t, 2, Metric::Euclidean).is_err());
        assert!(accuracy(&[], &[]).is_err());
        assert!(accuracy(&[1], &[1, 2]).is_err());
    }

    #[test]
    fn accuracy_examples() {
        assert_eq!(accuracy(&[1, 2, 3], &[1, 2, 3]).unwrap(), 1.0);
        assert_eq!(accuracy(&[1, 2], &[3, 4]).unwrap(), 0.0);
        assert_eq!(accuracy(&[1, 2, 3, 4], &[1, 2, 3, 0]).unwrap(), 0.75);
    }
}
