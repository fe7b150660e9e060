use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::tree::{grow, TreeSettings};
use super::{majority, DecisionTree, Hyperparameters, Model, TrainSet};
use crate::error::{Error, Result};
use crate::features::SparseVector;
use crate::seeding::splitmix64;

/// How many features each split may examine.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FeatureSubsample {
    /// `max(1, ⌊√d⌋)`
    Sqrt,
    /// `max(1, ⌊r·d⌋)` for `r` in (0, 1]
    Fraction(f64),
}

impl FeatureSubsample {
    pub fn max_features(&self, dim: usize) -> usize {
        let m = match self {
            FeatureSubsample::Sqrt => (dim as f64).sqrt().floor() as usize,
            FeatureSubsample::Fraction(r) => (r * dim as f64).floor() as usize,
        };
        m.max(1)
    }
}

impl std::str::FromStr for FeatureSubsample {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        if s == "sqrt" {
            return Ok(FeatureSubsample::Sqrt);
        }
        match s.parse::<f64>() {
            Ok(r) if r > 0.0 && r <= 1.0 => Ok(FeatureSubsample::Fraction(r)),
            _ => Err(Error::Config(format!(
                "feature_subsample must be \"sqrt\" or a ratio in (0, 1], got {s:?}"
            ))),
        }
    }
}

#[derive(Debug, Clone, Copy)]
pub(super) struct ForestSettings {
    pub n_trees: usize,
    pub max_depth: Option<usize>,
    pub min_leaf: usize,
    pub feature_subsample: FeatureSubsample,
    pub bootstrap: bool,
}

pub(super) fn fit(data: &TrainSet, settings: &ForestSettings, seed: u64) -> Result<Vec<DecisionTree>> {
    if settings.n_trees == 0 {
        return Err(Error::Training("n_trees must be at least 1".to_string()));
    }
    if settings.min_leaf == 0 {
        return Err(Error::Training("min_leaf must be at least 1".to_string()));
    }
    if let FeatureSubsample::Fraction(r) = settings.feature_subsample {
        if !(r > 0.0 && r <= 1.0) {
            return Err(Error::Training(format!("feature_subsample ratio {r} outside (0, 1]")));
        }
    }
    let dim = data.matrix.dim();
    let max_features = settings.feature_subsample.max_features(dim);
    let tree_settings = TreeSettings {
        max_depth: settings.max_depth,
        min_leaf: settings.min_leaf,
        max_features: (max_features < dim).then_some(max_features),
    };
    let n = data.labels.len();
    let trees = (0..settings.n_trees)
        .into_par_iter()
        .map(|t| {
            // per-tree stream: identical whether trees are grown serially or in parallel
            let mut rng = ChaCha8Rng::seed_from_u64(splitmix64(seed ^ splitmix64(t as u64)));
            let weights = if settings.bootstrap {
                let mut w = vec![0.0; n];
                for _ in 0..n {
                    w[rng.gen_range(0..n)] += 1.0;
                }
                w
            } else {
                vec![1.0; n]
            };
            grow(data, &weights, tree_settings, Some(&mut rng))
        })
        .collect();
    Ok(trees)
}

pub(super) fn predict_row(trees: &[DecisionTree], row: &SparseVector, num_classes: usize) -> usize {
    let mut votes = vec![0; num_classes];
    for t in trees {
        votes[t.predict_row(row)] += 1;
    }
    majority(&votes)
}

pub(super) fn vote_fractions(trees: &[DecisionTree], row: &SparseVector, num_classes: usize) -> Vec<f64> {
    let mut votes = vec![0.0; num_classes];
    for t in trees {
        votes[t.predict_row(row)] += 1.0;
    }
    votes.iter().map(|v| v / trees.len() as f64).collect()
}

/// Bagged CART trees with per-split feature subsampling and hard majority vote.
pub fn train_random_forest(
    data: &TrainSet,
    n_trees: usize,
    max_depth: Option<usize>,
    feature_subsample: FeatureSubsample,
    seed: u64,
) -> Result<Model> {
    super::train(
        data,
        &Hyperparameters::RandomForest {
            n_trees,
            max_depth,
            min_leaf: 1,
            feature_subsample,
            bootstrap: true,
        },
        seed,
    )
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::classifiers::{train, ModelParams};
    use crate::features::SparseMatrix;

    #[test]
    fn max_features_rules() {
        assert_eq!(FeatureSubsample::Sqrt.max_features(50_000), 223);
        assert_eq!(FeatureSubsample::Sqrt.max_features(0), 1);
        assert_eq!(FeatureSubsample::Fraction(1.0).max_features(7), 7);
        assert_eq!(FeatureSubsample::Fraction(0.01).max_features(7), 1);
        assert!("1.5".parse::<FeatureSubsample>().is_err());
        assert_eq!("sqrt".parse::<FeatureSubsample>().unwrap(), FeatureSubsample::Sqrt);
    }

    #[test]
    fn pure_data_always_that_class() {
        let m = SparseMatrix::from_dense(&[vec![1.0], vec![2.0], vec![0.0]], 1).unwrap();
        let mut data = TrainSet::binary(m.clone(), vec![0, 1, 0]).unwrap();
        data.labels = vec![1, 1, 1];
        let model = train_random_forest(&data, 10, None, FeatureSubsample::Sqrt, 4).unwrap();
        assert_eq!(model.predict(&m).unwrap(), vec![1, 1, 1]);
    }

    #[test]
    fn zero_trees_rejected() {
        let m = SparseMatrix::from_dense(&[vec![1.0], vec![2.0]], 1).unwrap();
        let data = TrainSet::binary(m, vec![0, 1]).unwrap();
        assert!(train_random_forest(&data, 0, None, FeatureSubsample::Sqrt, 4).is_err());
    }

    #[test]
    fn single_full_tree_without_bootstrap_is_the_tree() {
        let rows: Vec<Vec<f64>> = (0..30)
            .map(|i| (0..6).map(|j| ((i * 7 + j * 13) % 5) as f64).collect())
            .collect();
        let labels: Vec<usize> = (0..30).map(|i| (i * 11 % 7 > 3) as usize).collect();
        let data = TrainSet::binary(SparseMatrix::from_dense(&rows, 6).unwrap(), labels).unwrap();
        let forest = train(
            &data,
            &Hyperparameters::RandomForest {
                n_trees: 1,
                max_depth: Some(4),
                min_leaf: 1,
                feature_subsample: FeatureSubsample::Fraction(1.0),
                bootstrap: false,
            },
            9,
        )
        .unwrap();
        let tree = train(&data, &Hyperparameters::DecisionTree { max_depth: Some(4), min_leaf: 1 }, 9).unwrap();
        let (ModelParams::Forest { trees }, ModelParams::Tree(single)) = (&forest.params, &tree.params) else {
            unreachable!()
        };
        assert_eq!(&trees[0], single);
    }
}
