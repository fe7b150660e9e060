//! Six classifiers over sparse feature matrices behind one train/predict contract.
//!
//! Every trainer is a pure function of the training set, its hyperparameters and
//! a seed. Ties between classes always resolve to the lowest class id.

mod forest;
mod knn;
mod linear;
mod naive_bayes;
mod tree;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::features::SparseMatrix;

pub use forest::{train_random_forest, FeatureSubsample};
pub use knn::{train_knn, DistanceMetric};
pub use linear::{logistic_objective, svm_objective, train_linear_svm, train_logistic_regression, LinearParams};
pub use naive_bayes::{train_multinomial_nb, NaiveBayesParams};
pub use tree::{gini, train_decision_tree, DecisionTree, Node};

pub use self::knn::KnnParams;

/// Bumped whenever the serialized [`Model`] layout changes.
pub const MODEL_FORMAT_VERSION: u32 = 1;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ClassifierKind {
    MultinomialNb,
    LinearSvm,
    Knn,
    LogisticRegression,
    DecisionTree,
    RandomForest,
}

impl ClassifierKind {
    /// Report row order.
    pub const ALL: [ClassifierKind; 6] = [
        ClassifierKind::MultinomialNb,
        ClassifierKind::LinearSvm,
        ClassifierKind::Knn,
        ClassifierKind::LogisticRegression,
        ClassifierKind::DecisionTree,
        ClassifierKind::RandomForest,
    ];

    pub fn as_str(&self) -> &'static str {
        match self {
            ClassifierKind::MultinomialNb => "multinomial_nb",
            ClassifierKind::LinearSvm => "linear_svm",
            ClassifierKind::Knn => "knn",
            ClassifierKind::LogisticRegression => "logistic_regression",
            ClassifierKind::DecisionTree => "decision_tree",
            ClassifierKind::RandomForest => "random_forest",
        }
    }

    pub fn display_name(&self) -> &'static str {
        match self {
            ClassifierKind::MultinomialNb => "Multinomial NB",
            ClassifierKind::LinearSvm => "SVM",
            ClassifierKind::Knn => "KNeighbors",
            ClassifierKind::LogisticRegression => "LogisticRegression",
            ClassifierKind::DecisionTree => "Decision Tree",
            ClassifierKind::RandomForest => "Random Forest",
        }
    }
}

impl std::str::FromStr for ClassifierKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        ClassifierKind::ALL
            .into_iter()
            .find(|k| k.as_str() == s)
            .ok_or_else(|| {
                Error::Config(format!(
                    "unknown classifier {s:?}, expected one of {}",
                    ClassifierKind::ALL.map(|k| k.as_str()).join("|")
                ))
            })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrainSet {
    pub matrix: SparseMatrix,
    pub labels: Vec<usize>,
    pub class_names: Vec<String>,
}

impl TrainSet {
    /// Validates that labels line up with rows and every class is present.
    pub fn new(matrix: SparseMatrix, labels: Vec<usize>, class_names: Vec<String>) -> Result<Self> {
        if labels.len() != matrix.n_rows() {
            return Err(Error::LengthMismatch {
                left: labels.len(),
                right: matrix.n_rows(),
            });
        }
        if class_names.len() < 2 {
            return Err(Error::Training("at least two classes are required".to_string()));
        }
        if let Some(&id) = labels.iter().find(|&&l| l >= class_names.len()) {
            return Err(Error::ClassOutOfRange {
                id,
                num_classes: class_names.len(),
            });
        }
        let mut seen = vec![false; class_names.len()];
        for &l in &labels {
            seen[l] = true;
        }
        if let Some(missing) = seen.iter().position(|s| !s) {
            return Err(Error::Training(format!(
                "class {:?} has no training rows",
                class_names[missing]
            )));
        }
        Ok(Self {
            matrix,
            labels,
            class_names,
        })
    }

    /// Binary-label convenience constructor with classes `["0", "1"]`.
    pub fn binary(matrix: SparseMatrix, labels: Vec<usize>) -> Result<Self> {
        Self::new(matrix, labels, vec!["0".to_string(), "1".to_string()])
    }

    pub fn num_classes(&self) -> usize {
        self.class_names.len()
    }

    pub fn class_counts(&self) -> Vec<usize> {
        let mut counts = vec![0; self.num_classes()];
        for &l in &self.labels {
            counts[l] += 1;
        }
        counts
    }

    /// SHA-256 over the matrix, labels, hyperparameters and seed.
    fn fingerprint(&self, hyper: &Hyperparameters, seed: u64) -> String {
        let mut h = Sha256::new();
        h.update((self.matrix.dim() as u64).to_le_bytes());
        h.update((self.matrix.n_rows() as u64).to_le_bytes());
        for (row, label) in self.matrix.rows().iter().zip(&self.labels) {
            h.update((*label as u64).to_le_bytes());
            h.update((row.nnz() as u64).to_le_bytes());
            for (c, w) in row.entries() {
                h.update((*c as u64).to_le_bytes());
                h.update(w.to_bits().to_le_bytes());
            }
        }
        h.update(serde_json::to_vec(hyper).unwrap_or_default());
        h.update(seed.to_le_bytes());
        h.finalize()
            .iter()
            .map(|b| format!("{b:02x}"))
            .collect()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Hyperparameters {
    MultinomialNb {
        alpha: f64,
    },
    LinearSvm {
        c: f64,
        epochs: usize,
    },
    Knn {
        k: usize,
        metric: DistanceMetric,
    },
    LogisticRegression {
        l2: f64,
        epochs: usize,
        tol: f64,
    },
    DecisionTree {
        max_depth: Option<usize>,
        min_leaf: usize,
    },
    RandomForest {
        n_trees: usize,
        max_depth: Option<usize>,
        min_leaf: usize,
        feature_subsample: FeatureSubsample,
        bootstrap: bool,
    },
}

impl Hyperparameters {
    /// Defaults for each kind.
    pub fn default_for(kind: ClassifierKind) -> Self {
        match kind {
            ClassifierKind::MultinomialNb => Hyperparameters::MultinomialNb { alpha: 1.0 },
            ClassifierKind::LinearSvm => Hyperparameters::LinearSvm { c: 1.0, epochs: 20 },
            ClassifierKind::Knn => Hyperparameters::Knn {
                k: 5,
                metric: DistanceMetric::Cosine,
            },
            ClassifierKind::LogisticRegression => Hyperparameters::LogisticRegression {
                l2: 1.0,
                epochs: 100,
                tol: 1e-6,
            },
            ClassifierKind::DecisionTree => Hyperparameters::DecisionTree {
                max_depth: None,
                min_leaf: 1,
            },
            ClassifierKind::RandomForest => Hyperparameters::RandomForest {
                n_trees: 100,
                max_depth: None,
                min_leaf: 1,
                feature_subsample: FeatureSubsample::Sqrt,
                bootstrap: true,
            },
        }
    }

    pub fn kind(&self) -> ClassifierKind {
        match self {
            Hyperparameters::MultinomialNb { .. } => ClassifierKind::MultinomialNb,
            Hyperparameters::LinearSvm { .. } => ClassifierKind::LinearSvm,
            Hyperparameters::Knn { .. } => ClassifierKind::Knn,
            Hyperparameters::LogisticRegression { .. } => ClassifierKind::LogisticRegression,
            Hyperparameters::DecisionTree { .. } => ClassifierKind::DecisionTree,
            Hyperparameters::RandomForest { .. } => ClassifierKind::RandomForest,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum ModelParams {
    NaiveBayes(NaiveBayesParams),
    Linear(LinearParams),
    Knn(KnnParams),
    Tree(DecisionTree),
    Forest { trees: Vec<DecisionTree> },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Model {
    pub format_version: u32,
    pub kind: ClassifierKind,
    pub hyperparameters: Hyperparameters,
    pub seed: u64,
    pub dim: usize,
    pub class_names: Vec<String>,
    pub train_fingerprint: String,
    pub params: ModelParams,
}

/// Trains the model described by `hyper`.
pub fn train(data: &TrainSet, hyper: &Hyperparameters, seed: u64) -> Result<Model> {
    let params = match hyper {
        Hyperparameters::MultinomialNb { alpha } => ModelParams::NaiveBayes(naive_bayes::fit(data, *alpha)?),
        Hyperparameters::LinearSvm { c, epochs } => ModelParams::Linear(linear::fit_svm(data, *c, *epochs, seed)?),
        Hyperparameters::LogisticRegression { l2, epochs, tol } => {
            ModelParams::Linear(linear::fit_logistic(data, *l2, *epochs, *tol)?)
        }
        Hyperparameters::Knn { k, metric } => ModelParams::Knn(knn::fit(data, *k, *metric)?),
        Hyperparameters::DecisionTree { max_depth, min_leaf } => {
            ModelParams::Tree(tree::fit(data, *max_depth, *min_leaf)?)
        }
        Hyperparameters::RandomForest {
            n_trees,
            max_depth,
            min_leaf,
            feature_subsample,
            bootstrap,
        } => ModelParams::Forest {
            trees: forest::fit(
                data,
                &forest::ForestSettings {
                    n_trees: *n_trees,
                    max_depth: *max_depth,
                    min_leaf: *min_leaf,
                    feature_subsample: *feature_subsample,
                    bootstrap: *bootstrap,
                },
                seed,
            )?,
        },
    };
    Ok(Model {
        format_version: MODEL_FORMAT_VERSION,
        kind: hyper.kind(),
        hyperparameters: hyper.clone(),
        seed,
        dim: data.matrix.dim(),
        class_names: data.class_names.clone(),
        train_fingerprint: data.fingerprint(hyper, seed),
        params,
    })
}

/// Index of the largest value; the first one wins ties.
pub(crate) fn argmax(values: &[f64]) -> usize {
    let mut best = 0;
    for (i, v) in values.iter().enumerate().skip(1) {
        if *v > values[best] {
            best = i;
        }
    }
    best
}

pub(crate) fn majority(votes: &[usize]) -> usize {
    let mut best = 0;
    for (i, v) in votes.iter().enumerate().skip(1) {
        if *v > votes[best] {
            best = i;
        }
    }
    best
}

impl Model {
    pub fn num_classes(&self) -> usize {
        self.class_names.len()
    }

    fn check_dim(&self, matrix: &SparseMatrix) -> Result<()> {
        if matrix.dim() != self.dim {
            return Err(Error::DimensionMismatch {
                expected: self.dim,
                actual: matrix.dim(),
            });
        }
        Ok(())
    }

    /// Per-row class scores; the predicted class is the first maximum.
    ///
    /// Naive Bayes returns log posteriors, linear models margins, the
    /// neighbour and tree models vote fractions.
    pub fn scores(&self, matrix: &SparseMatrix) -> Result<Vec<Vec<f64>>> {
        self.check_dim(matrix)?;
        let nc = self.num_classes();
        Ok(match &self.params {
            ModelParams::NaiveBayes(p) => matrix.rows().iter().map(|r| p.log_posterior(r)).collect(),
            ModelParams::Linear(p) => matrix.rows().iter().map(|r| p.margins(r)).collect(),
            ModelParams::Knn(p) => p.vote_fractions(matrix),
            ModelParams::Tree(t) => matrix
                .rows()
                .iter()
                .map(|r| {
                    let mut s = vec![0.0; nc];
                    s[t.predict_row(r)] = 1.0;
                    s
                })
                .collect(),
            ModelParams::Forest { trees } => matrix
                .rows()
                .iter()
                .map(|r| forest::vote_fractions(trees, r, nc))
                .collect(),
        })
    }

    pub fn predict(&self, matrix: &SparseMatrix) -> Result<Vec<usize>> {
        self.check_dim(matrix)?;
        Ok(match &self.params {
            ModelParams::Knn(p) => p.predict(matrix),
            ModelParams::Tree(t) => matrix.rows().iter().map(|r| t.predict_row(r)).collect(),
            ModelParams::Forest { trees } => matrix
                .rows()
                .iter()
                .map(|r| forest::predict_row(trees, r, self.num_classes()))
                .collect(),
            _ => self.scores(matrix)?.iter().map(|s| argmax(s)).collect(),
        })
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string(self)?)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let model: Model = serde_json::from_str(text)?;
        if model.format_version != MODEL_FORMAT_VERSION {
            return Err(Error::Parse(format!(
                "model format version {} not supported (expected {MODEL_FORMAT_VERSION})",
                model.format_version
            )));
        }
        Ok(model)
    }
}

pub fn predict(model: &Model, matrix: &SparseMatrix) -> Result<Vec<usize>> {
    model.predict(matrix)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::features::SparseVector;

    fn two_doc() -> TrainSet {
        let m = SparseMatrix::from_dense(&[vec![1.0, 0.0], vec![0.0, 1.0]], 2).unwrap();
        TrainSet::binary(m, vec![0, 1]).unwrap()
    }

    #[test]
    fn trainset_validation() {
        let m = SparseMatrix::from_dense(&[vec![1.0], vec![2.0]], 1).unwrap();
        assert!(matches!(TrainSet::binary(m.clone(), vec![0]), Err(Error::LengthMismatch { .. })));
        assert!(matches!(TrainSet::binary(m.clone(), vec![0, 0]), Err(Error::Training(_))));
        assert!(matches!(TrainSet::binary(m, vec![0, 2]), Err(Error::ClassOutOfRange { .. })));
    }

    fn fixture_hyper(kind: ClassifierKind) -> Hyperparameters {
        let mut hyper = Hyperparameters::default_for(kind);
        if let Hyperparameters::Knn { k, .. } = &mut hyper {
            *k = 1;
        }
        if let Hyperparameters::RandomForest { bootstrap, .. } = &mut hyper {
            *bootstrap = false;
        }
        hyper
    }

    #[test]
    fn every_kind_trains_and_predicts_the_fixture() {
        let data = two_doc();
        for kind in ClassifierKind::ALL {
            let hyper = fixture_hyper(kind);
            let model = train(&data, &hyper, 7).unwrap();
            assert_eq!(model.kind, kind);
            assert_eq!(model.predict(&data.matrix).unwrap(), vec![0, 1], "{kind:?}");
            let empty = SparseMatrix::new(2, vec![]).unwrap();
            assert!(model.predict(&empty).unwrap().is_empty());
            let wrong = SparseMatrix::new(3, vec![SparseVector::empty(3)]).unwrap();
            let err = model.predict(&wrong).unwrap_err();
            assert!(err.to_string().contains("expects 2") && err.to_string().contains("has 3"));
        }
    }

    #[test]
    fn serialization_round_trip_preserves_predictions() {
        let data = two_doc();
        for kind in ClassifierKind::ALL {
            let model = train(&data, &fixture_hyper(kind), 3).unwrap();
            let back = Model::from_json(&model.to_json().unwrap()).unwrap();
            assert_eq!(back, model);
            assert_eq!(back.predict(&data.matrix).unwrap(), model.predict(&data.matrix).unwrap());
        }
        let mut v: serde_json::Value = serde_json::from_str(&train(&data, &Hyperparameters::default_for(ClassifierKind::MultinomialNb), 0).unwrap().to_json().unwrap()).unwrap();
        v["format_version"] = 99.into();
        assert!(Model::from_json(&v.to_string()).is_err());
    }

    #[test]
    fn fingerprint_tracks_inputs() {
        let data = two_doc();
        let h = Hyperparameters::default_for(ClassifierKind::MultinomialNb);
        let a = train(&data, &h, 1).unwrap();
        assert_eq!(a.train_fingerprint, train(&data, &h, 1).unwrap().train_fingerprint);
        assert_ne!(a.train_fingerprint, train(&data, &h, 2).unwrap().train_fingerprint);
        assert_eq!(a.train_fingerprint.len(), 64);
    }

    #[test]
    fn kind_names_round_trip() {
        for kind in ClassifierKind::ALL {
            assert_eq!(kind.as_str().parse::<ClassifierKind>().unwrap(), kind);
        }
        assert!("svm".parse::<ClassifierKind>().is_err());
    }
}
