//! Binary CART trees with Gini impurity over sparse rows.
//!
//! Absent features read as 0. Candidate thresholds are midpoints between
//! consecutive distinct values of a feature among the node's rows, implicit
//! zeros included. A row goes left when `x[feature] <= threshold`.

use rand::seq::SliceRandom;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::{argmax, Hyperparameters, Model, TrainSet};
use crate::error::{Error, Result};
use crate::features::SparseVector;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "node", rename_all = "snake_case")]
pub enum Node {
    Leaf {
        class: usize,
        /// Weighted class counts of the training rows reaching the leaf.
        counts: Vec<f64>,
    },
    Split {
        feature: usize,
        threshold: f64,
        left: usize,
        right: usize,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DecisionTree {
    pub nodes: Vec<Node>,
}

impl DecisionTree {
    pub fn predict_row(&self, row: &SparseVector) -> usize {
        let mut at = 0;
        loop {
            match &self.nodes[at] {
                Node::Leaf { class, .. } => return *class,
                Node::Split {
                    feature,
                    threshold,
                    left,
                    right,
                } => {
                    at = if row.get(*feature) <= *threshold {
                        *left
                    } else {
                        *right
                    };
                }
            }
        }
    }

    /// `(feature, threshold)` of the root, or `None` for a single-leaf tree.
    pub fn root_split(&self) -> Option<(usize, f64)> {
        match self.nodes.first()? {
            Node::Split {
                feature, threshold, ..
            } => Some((*feature, *threshold)),
            Node::Leaf { .. } => None,
        }
    }

    pub fn depth(&self) -> usize {
        fn walk(nodes: &[Node], at: usize) -> usize {
            match &nodes[at] {
                Node::Leaf { .. } => 0,
                Node::Split { left, right, .. } => 1 + walk(nodes, *left).max(walk(nodes, *right)),
            }
        }
        walk(&self.nodes, 0)
    }

    pub fn leaf_count(&self) -> usize {
        self.nodes
            .iter()
            .filter(|n| matches!(n, Node::Leaf { .. }))
            .count()
    }
}

/// Gini impurity `1 − Σ p_k²` of weighted class counts.
pub fn gini(counts: &[f64]) -> f64 {
    let total: f64 = counts.iter().sum();
    if total == 0.0 {
        return 0.0;
    }
    1.0 - counts.iter().map(|c| (c / total) * (c / total)).sum::<f64>()
}

#[derive(Debug, Clone, Copy)]
pub(super) struct TreeSettings {
    pub max_depth: Option<usize>,
    pub min_leaf: usize,
    /// Non-constant features examined per split; `None` examines all of them.
    pub max_features: Option<usize>,
}

#[derive(Debug, Clone, Copy)]
struct BestSplit {
    feature: usize,
    threshold: f64,
    impurity: f64,
}

/// One nonzero observation at a node: value, class, sample weight.
type Entry = (f64, u32, f64);

struct Builder<'a> {
    rows: &'a [SparseVector],
    labels: &'a [usize],
    weights: &'a [f64],
    num_classes: usize,
    settings: TreeSettings,
    buckets: Vec<Vec<Entry>>,
    touched: Vec<usize>,
    nodes: Vec<Node>,
}

impl<'a> Builder<'a> {
    fn class_counts(&self, samples: &[usize]) -> Vec<f64> {
        let mut counts = vec![0.0; self.num_classes];
        for &i in samples {
            counts[self.labels[i]] += self.weights[i];
        }
        counts
    }

    fn leaf(counts: Vec<f64>) -> Node {
        Node::Leaf {
            class: argmax(&counts),
            counts,
        }
    }

    fn fill_buckets(&mut self, samples: &[usize]) {
        for &i in samples {
            for &(c, v) in self.rows[i].entries() {
                if self.buckets[c].is_empty() {
                    self.touched.push(c);
                }
                self.buckets[c].push((v, self.labels[i] as u32, self.weights[i]));
            }
        }
        self.touched.sort_unstable();
    }

    fn clear_buckets(&mut self) {
        for &c in &self.touched {
            self.buckets[c].clear();
        }
        self.touched.clear();
    }

    /// Best `(threshold, impurity)` for one feature, or `None` when the feature
    /// is constant over the node or no threshold satisfies `min_leaf`.
    fn best_threshold(&mut self, feature: usize, node_counts: &[f64], node_n: usize) -> Option<(f64, f64)> {
        let min_leaf = self.settings.min_leaf;
        let bucket = &mut self.buckets[feature];
        bucket.sort_by(|a, b| a.0.total_cmp(&b.0));
        let zero_n = node_n - bucket.len();
        let mut zero_counts = node_counts.to_vec();
        for &(_, class, w) in bucket.iter() {
            zero_counts[class as usize] -= w;
        }

        // ascending value order with the implicit zeros as one group
        let split_at = bucket.partition_point(|e| e.0 < 0.0);
        let items = (0..split_at)
            .map(Some)
            .chain((zero_n > 0).then_some(None))
            .chain((split_at..bucket.len()).map(Some));

        let total_w: f64 = node_counts.iter().sum();
        let mut left = vec![0.0; node_counts.len()];
        let mut right = vec![0.0; node_counts.len()];
        let mut left_n = 0usize;
        let mut prev: Option<f64> = None;
        let mut best: Option<(f64, f64)> = None;
        for item in items {
            let value = item.map_or(0.0, |i| bucket[i].0);
            if let Some(p) = prev {
                if value != p && left_n >= min_leaf && node_n - left_n >= min_leaf {
                    for ((r, n), l) in right.iter_mut().zip(node_counts).zip(&left) {
                        *r = n - l;
                    }
                    let wl: f64 = left.iter().sum();
                    let impurity = (wl * gini(&left) + (total_w - wl) * gini(&right)) / total_w;
                    if best.map_or(true, |(_, b)| impurity < b) {
                        let mid = p + (value - p) / 2.0;
                        best = Some((if mid < value { mid } else { p }, impurity));
                    }
                }
            }
            match item {
                Some(i) => {
                    let (_, class, w) = bucket[i];
                    left[class as usize] += w;
                    left_n += 1;
                }
                None => {
                    for (l, z) in left.iter_mut().zip(&zero_counts) {
                        *l += z;
                    }
                    left_n += zero_n;
                }
            }
            prev = Some(value);
        }
        best
    }

    fn find_split(&mut self, samples: &[usize], counts: &[f64], rng: Option<&mut ChaCha8Rng>) -> Option<BestSplit> {
        self.fill_buckets(samples);
        let mut candidates = self.touched.clone();
        let limit = match (self.settings.max_features, rng) {
            (Some(m), Some(rng)) if m < candidates.len() => {
                candidates.shuffle(rng);
                m
            }
            _ => candidates.len(),
        };
        let mut best: Option<BestSplit> = None;
        let mut evaluated = 0;
        for feature in candidates {
            if evaluated >= limit {
                break;
            }
            if let Some((threshold, impurity)) = self.best_threshold(feature, counts, samples.len()) {
                evaluated += 1;
                let better = match &best {
                    None => true,
                    Some(b) => impurity < b.impurity || (impurity == b.impurity && feature < b.feature),
                };
                if better {
                    best = Some(BestSplit {
                        feature,
                        threshold,
                        impurity,
                    });
                }
            }
        }
        self.clear_buckets();
        best
    }

    fn build(&mut self, samples: Vec<usize>, mut rng: Option<&mut ChaCha8Rng>) {
        // (node slot, samples, depth)
        let mut stack: Vec<(usize, Vec<usize>, usize)> = Vec::new();
        self.nodes.push(Node::Leaf {
            class: 0,
            counts: vec![],
        });
        stack.push((0, samples, 0));
        while let Some((slot, samples, depth)) = stack.pop() {
            let counts = self.class_counts(&samples);
            let pure = counts.iter().filter(|&&c| c > 0.0).count() <= 1;
            let depth_reached = self.settings.max_depth.is_some_and(|d| depth >= d);
            if pure || depth_reached || samples.len() < 2 * self.settings.min_leaf {
                self.nodes[slot] = Self::leaf(counts);
                continue;
            }
            let Some(split) = self.find_split(&samples, &counts, rng.as_deref_mut()) else {
                self.nodes[slot] = Self::leaf(counts);
                continue;
            };
            let (left, right): (Vec<usize>, Vec<usize>) = samples
                .into_iter()
                .partition(|&i| self.rows[i].get(split.feature) <= split.threshold);
            let left_slot = self.nodes.len();
            self.nodes.push(Self::leaf(vec![]));
            let right_slot = self.nodes.len();
            self.nodes.push(Self::leaf(vec![]));
            self.nodes[slot] = Node::Split {
                feature: split.feature,
                threshold: split.threshold,
                left: left_slot,
                right: right_slot,
            };
            stack.push((right_slot, right, depth + 1));
            stack.push((left_slot, left, depth + 1));
        }
    }
}

/// Grows a tree over rows with positive `weights`.
pub(super) fn grow(
    data: &TrainSet,
    weights: &[f64],
    settings: TreeSettings,
    rng: Option<&mut ChaCha8Rng>,
) -> DecisionTree {
    let samples: Vec<usize> = (0..data.labels.len()).filter(|&i| weights[i] > 0.0).collect();
    let mut builder = Builder {
        rows: data.matrix.rows(),
        labels: &data.labels,
        weights,
        num_classes: data.num_classes(),
        settings,
        buckets: vec![Vec::new(); data.matrix.dim()],
        touched: Vec::new(),
        nodes: Vec::new(),
    };
    builder.build(samples, rng);
    DecisionTree {
        nodes: builder.nodes,
    }
}

pub(super) fn fit(data: &TrainSet, max_depth: Option<usize>, min_leaf: usize) -> Result<DecisionTree> {
    if min_leaf == 0 {
        return Err(Error::Training("min_leaf must be at least 1".to_string()));
    }
    let weights = vec![1.0; data.labels.len()];
    Ok(grow(
        data,
        &weights,
        TreeSettings {
            max_depth,
            min_leaf,
            max_features: None,
        },
        None,
    ))
}

/// CART decision tree. The seed is recorded with the model; the exhaustive
/// split search itself is deterministic.
pub fn train_decision_tree(data: &TrainSet, max_depth: Option<usize>, min_leaf: usize, seed: u64) -> Result<Model> {
    super::train(data, &Hyperparameters::DecisionTree { max_depth, min_leaf }, seed)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::features::SparseMatrix;

    fn data(rows: &[Vec<f64>], labels: Vec<usize>) -> TrainSet {
        TrainSet::binary(SparseMatrix::from_dense(rows, rows[0].len()).unwrap(), labels).unwrap()
    }

    #[test]
    fn gini_values() {
        assert_eq!(gini(&[5.0, 0.0]), 0.0);
        assert_eq!(gini(&[2.0, 2.0]), 0.5);
        assert_eq!(gini(&[0.0, 0.0]), 0.0);
    }

    #[test]
    fn pure_data_is_one_leaf() {
        let mut d = data(&[vec![1.0], vec![2.0], vec![0.0]], vec![0, 1, 0]);
        d.labels = vec![1, 1, 1];
        let t = fit(&d, None, 1).unwrap();
        assert_eq!(t.nodes.len(), 1);
        assert_eq!(t.root_split(), None);
        assert_eq!(t.predict_row(&SparseVector::from_dense(&[5.0])), 1);
    }

    #[test]
    fn xor_needs_depth_two() {
        let rows = vec![vec![0.0, 0.0], vec![0.0, 1.0], vec![1.0, 0.0], vec![1.0, 1.0]];
        let d = data(&rows, vec![0, 1, 1, 0]);
        let t = fit(&d, Some(2), 1).unwrap();
        let preds: Vec<usize> = d.matrix.rows().iter().map(|r| t.predict_row(r)).collect();
        assert_eq!(preds, d.labels);
        assert_eq!(t.depth(), 2);
    }

    #[test]
    fn thresholds_straddle_zero_and_negatives() {
        let rows = vec![vec![-2.0], vec![-1.0], vec![0.0], vec![0.0], vec![3.0]];
        let d = data(&rows, vec![0, 0, 1, 1, 1]);
        let t = fit(&d, Some(1), 1).unwrap();
        assert_eq!(t.root_split(), Some((0, -0.5)));
        let d = data(&rows, vec![1, 1, 1, 1, 0]);
        let t = fit(&d, Some(1), 1).unwrap();
        assert_eq!(t.root_split(), Some((0, 1.5)));
    }

    #[test]
    fn min_leaf_is_respected() {
        let rows: Vec<Vec<f64>> = (0..6).map(|i| vec![i as f64]).collect();
        let d = data(&rows, vec![0, 1, 1, 1, 1, 1]);
        let t = fit(&d, None, 2).unwrap();
        assert_eq!(t.root_split(), Some((0, 1.5)));
        assert!(fit(&d, None, 0).is_err());
    }

    #[test]
    fn constant_features_do_not_split() {
        let d = data(&[vec![1.0, 0.0], vec![1.0, 0.0]], vec![0, 1]);
        let t = fit(&d, None, 1).unwrap();
        assert_eq!(t.nodes.len(), 1);
        assert_eq!(t.predict_row(&SparseVector::from_dense(&[1.0, 0.0])), 0);
    }
}
