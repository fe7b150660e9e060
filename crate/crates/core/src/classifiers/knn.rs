use std::cmp::Ordering;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{majority, Hyperparameters, Model, TrainSet};
use crate::error::{Error, Result};
use crate::features::{SparseMatrix, SparseVector};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum DistanceMetric {
    Cosine,
    Euclidean,
}

impl std::str::FromStr for DistanceMetric {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "cosine" => Ok(DistanceMetric::Cosine),
            "euclidean" => Ok(DistanceMetric::Euclidean),
            other => Err(Error::Config(format!(
                "unknown metric {other:?}, expected cosine|euclidean"
            ))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KnnParams {
    pub k: usize,
    pub metric: DistanceMetric,
    pub num_classes: usize,
    pub train: SparseMatrix,
    pub labels: Vec<usize>,
}

/// `postings[column]` lists `(row, value)` in ascending row order.
fn postings(matrix: &SparseMatrix) -> Vec<Vec<(u32, f64)>> {
    let mut lists = vec![Vec::new(); matrix.dim()];
    for (r, row) in matrix.rows().iter().enumerate() {
        for &(c, w) in row.entries() {
            lists[c].push((r as u32, w));
        }
    }
    lists
}

/// Distance from the metric's ingredients. A zero vector has cosine similarity 0
/// with everything.
pub(crate) fn distance(metric: DistanceMetric, dot: f64, q_norm_sq: f64, x_norm_sq: f64) -> f64 {
    match metric {
        DistanceMetric::Cosine => {
            if q_norm_sq == 0.0 || x_norm_sq == 0.0 {
                1.0
            } else {
                1.0 - dot / (q_norm_sq.sqrt() * x_norm_sq.sqrt())
            }
        }
        DistanceMetric::Euclidean => (q_norm_sq + x_norm_sq - 2.0 * dot).max(0.0).sqrt(),
    }
}

fn by_distance_then_row(a: &(f64, usize), b: &(f64, usize)) -> Ordering {
    a.0.total_cmp(&b.0).then(a.1.cmp(&b.1))
}

impl KnnParams {
    fn neighbor_votes(&self, matrix: &SparseMatrix) -> Vec<Vec<usize>> {
        let index = postings(&self.train);
        let train_norms: Vec<f64> = self.train.rows().iter().map(SparseVector::norm_sq).collect();
        let n = self.train.n_rows();
        let k = self.k.min(n);
        matrix
            .rows()
            .par_iter()
            .map_init(
                || vec![0.0; n],
                |dots, query| {
                    dots.iter_mut().for_each(|d| *d = 0.0);
                    // accumulating in column order matches a merge-style dot product
                    for &(c, qv) in query.entries() {
                        for &(r, xv) in &index[c] {
                            dots[r as usize] += qv * xv;
                        }
                    }
                    let q_norm = query.norm_sq();
                    let mut dist: Vec<(f64, usize)> = (0..n)
                        .map(|r| (distance(self.metric, dots[r], q_norm, train_norms[r]), r))
                        .collect();
                    if k < n {
                        dist.select_nth_unstable_by(k - 1, by_distance_then_row);
                    }
                    let mut votes = vec![0; self.num_classes];
                    for &(_, r) in &dist[..k] {
                        votes[self.labels[r]] += 1;
                    }
                    votes
                },
            )
            .collect()
    }

    pub fn predict(&self, matrix: &SparseMatrix) -> Vec<usize> {
        self.neighbor_votes(matrix).iter().map(|v| majority(v)).collect()
    }

    pub fn vote_fractions(&self, matrix: &SparseMatrix) -> Vec<Vec<f64>> {
        self.neighbor_votes(matrix)
            .iter()
            .map(|v| v.iter().map(|&c| c as f64 / self.k as f64).collect())
            .collect()
    }
}

pub(super) fn fit(data: &TrainSet, k: usize, metric: DistanceMetric) -> Result<KnnParams> {
    if k == 0 || k > data.matrix.n_rows() {
        return Err(Error::Training(format!(
            "k must lie in 1..={}, got {k}",
            data.matrix.n_rows()
        )));
    }
    Ok(KnnParams {
        k,
        metric,
        num_classes: data.num_classes(),
        train: data.matrix.clone(),
        labels: data.labels.clone(),
    })
}

/// Majority vote of the `k` nearest training rows; equal distances resolve to
/// the earlier training row, equal votes to the lower class id.
pub fn train_knn(data: &TrainSet, k: usize, metric: DistanceMetric) -> Result<Model> {
    super::train(data, &Hyperparameters::Knn { k, metric }, 0)
}
