use serde::{Deserialize, Serialize};

use super::{Hyperparameters, Model, TrainSet};
use crate::error::{Error, Result};
use crate::features::SparseVector;

/// Multinomial naive Bayes state: class log-priors and per-class term log-likelihoods.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NaiveBayesParams {
    pub log_prior: Vec<f64>,
    /// `log_likelihood[class][term]`
    pub log_likelihood: Vec<Vec<f64>>,
}

impl NaiveBayesParams {
    /// Unnormalized joint log-likelihood per class.
    pub fn joint_log_likelihood(&self, row: &SparseVector) -> Vec<f64> {
        self.log_prior
            .iter()
            .zip(&self.log_likelihood)
            .map(|(prior, ll)| prior + row.dot_dense(ll))
            .collect()
    }

    pub fn log_posterior(&self, row: &SparseVector) -> Vec<f64> {
        let jll = self.joint_log_likelihood(row);
        let max = jll.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let log_norm = max + jll.iter().map(|v| (v - max).exp()).sum::<f64>().ln();
        jll.iter().map(|v| v - log_norm).collect()
    }
}

pub(super) fn fit(data: &TrainSet, alpha: f64) -> Result<NaiveBayesParams> {
    if !(alpha >= 0.0 && alpha.is_finite()) {
        return Err(Error::Training(format!("alpha must be a finite value >= 0, got {alpha}")));
    }
    let nc = data.num_classes();
    let dim = data.matrix.dim();
    let mut feature_sums = vec![vec![0.0; dim]; nc];
    for (row, &label) in data.matrix.rows().iter().zip(&data.labels) {
        for &(c, w) in row.entries() {
            if w < 0.0 {
                return Err(Error::Training(format!(
                    "multinomial naive Bayes needs non-negative features, found {w}"
                )));
            }
            feature_sums[label][c] += w;
        }
    }
    let n = data.labels.len() as f64;
    let log_prior = data
        .class_counts()
        .iter()
        .map(|&c| (c as f64 / n).ln())
        .collect();

    let mut log_likelihood = Vec::with_capacity(nc);
    for (class, sums) in feature_sums.iter().enumerate() {
        let total: f64 = sums.iter().sum::<f64>() + alpha * dim as f64;
        if alpha == 0.0 {
            if let Some(term) = sums.iter().position(|&s| s == 0.0) {
                return Err(Error::Training(format!(
                    "term {term} never occurs in class {:?}; use alpha > 0",
                    data.class_names[class]
                )));
            }
        }
        log_likelihood.push(sums.iter().map(|s| ((s + alpha) / total).ln()).collect());
    }
    Ok(NaiveBayesParams {
        log_prior,
        log_likelihood,
    })
}

/// Multinomial naive Bayes with additive smoothing `alpha` per term.
pub fn train_multinomial_nb(data: &TrainSet, alpha: f64) -> Result<Model> {
    super::train(data, &Hyperparameters::MultinomialNb { alpha }, 0)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::features::SparseMatrix;

    #[test]
    fn two_doc_fixture() {
        let m = SparseMatrix::from_dense(&[vec![1.0, 0.0], vec![0.0, 1.0]], 2).unwrap();
        let data = TrainSet::binary(m, vec![0, 1]).unwrap();
        let model = train_multinomial_nb(&data, 1.0).unwrap();
        let query = SparseMatrix::from_dense(&[vec![1.0, 0.0]], 2).unwrap();
        assert_eq!(model.predict(&query).unwrap(), vec![0]);
        assert_eq!(model.predict(&data.matrix).unwrap(), data.labels);
    }

    #[test]
    fn symmetric_priors() {
        let m = SparseMatrix::from_dense(&[vec![1.0, 1.0], vec![1.0, 1.0], vec![1.0, 1.0], vec![1.0, 1.0]], 2).unwrap();
        let data = TrainSet::binary(m, vec![0, 1, 0, 1]).unwrap();
        let p = fit(&data, 1.0).unwrap();
        assert_eq!(p.log_prior, vec![0.5f64.ln(), 0.5f64.ln()]);
    }

    #[test]
    fn zero_alpha_with_unseen_term_is_an_error() {
        let m = SparseMatrix::from_dense(&[vec![1.0, 0.0], vec![0.0, 1.0]], 2).unwrap();
        let data = TrainSet::binary(m, vec![0, 1]).unwrap();
        let err = fit(&data, 0.0).unwrap_err();
        assert!(err.to_string().contains("alpha > 0"));
        let m = SparseMatrix::from_dense(&[vec![1.0, 1.0], vec![1.0, 2.0]], 2).unwrap();
        assert!(fit(&TrainSet::binary(m, vec![0, 1]).unwrap(), 0.0).is_ok());
    }

    #[test]
    fn negative_features_rejected() {
        let m = SparseMatrix::from_dense(&[vec![-1.0], vec![1.0]], 1).unwrap();
        assert!(fit(&TrainSet::binary(m, vec![0, 1]).unwrap(), 1.0).is_err());
    }

    #[test]
    fn empty_row_falls_back_to_prior() {
        let m = SparseMatrix::from_dense(&[vec![1.0], vec![1.0], vec![2.0]], 1).unwrap();
        let data = TrainSet::binary(m, vec![1, 1, 0]).unwrap();
        let model = train_multinomial_nb(&data, 1.0).unwrap();
        let empty = SparseMatrix::from_dense(&[vec![0.0]], 1).unwrap();
        assert_eq!(model.predict(&empty).unwrap(), vec![1]);
    }
}
