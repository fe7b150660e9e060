//! Dense brute-force oracles and synthetic fixtures shared by the integration tests.
#![allow(dead_code)]

use std::collections::HashMap;
use std::fs;
use std::path::{Path, PathBuf};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use textclass::classifiers::TrainSet;
use textclass::features::{SparseMatrix, SparseVector};

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Random token documents over a vocabulary of `t0 .. t{terms-1}`.
pub fn random_token_docs(rng: &mut ChaCha8Rng, max_docs: usize, max_terms: usize) -> Vec<Vec<String>> {
    let n_docs = rng.gen_range(1..=max_docs);
    let n_terms = rng.gen_range(1..=max_terms);
    (0..n_docs)
        .map(|_| {
            let len = rng.gen_range(0..=30);
            (0..len).map(|_| format!("t{}", rng.gen_range(0..n_terms))).collect()
        })
        .collect()
}

/// `tf × log10(N / df)` computed straight from token lists, keyed by term.
/// `fit_docs` supply N and df; `docs` are the rows to weight. Terms absent from
/// `fit_docs` are ignored, as is any document total they would contribute to.
pub fn dense_tfidf(fit_docs: &[Vec<String>], docs: &[Vec<String>]) -> Vec<HashMap<String, f64>> {
    let n = fit_docs.len() as f64;
    let mut df: HashMap<&str, f64> = HashMap::new();
    for d in fit_docs {
        let mut seen: Vec<&str> = d.iter().map(String::as_str).collect();
        seen.sort_unstable();
        seen.dedup();
        for t in seen {
            *df.entry(t).or_default() += 1.0;
        }
    }
    docs.iter()
        .map(|d| {
            let known: Vec<&str> = d.iter().map(String::as_str).filter(|t| df.contains_key(t)).collect();
            let total = known.len() as f64;
            let mut counts: HashMap<&str, f64> = HashMap::new();
            for t in &known {
                *counts.entry(t).or_default() += 1.0;
            }
            counts
                .into_iter()
                .map(|(t, c)| (t.to_string(), (c / total) * (n / df[t]).log10()))
                .collect()
        })
        .collect()
}

/// Random non-negative count matrix with roughly `density` nonzeros.
pub fn random_counts(rng: &mut ChaCha8Rng, rows: usize, dim: usize, density: f64) -> Vec<Vec<f64>> {
    (0..rows)
        .map(|_| {
            (0..dim)
                .map(|_| if rng.gen_bool(density) { rng.gen_range(1..6) as f64 } else { 0.0 })
                .collect()
        })
        .collect()
}

/// Random labels over two classes with both present.
pub fn random_labels(rng: &mut ChaCha8Rng, n: usize) -> Vec<usize> {
    loop {
        let labels: Vec<usize> = (0..n).map(|_| rng.gen_range(0..2)).collect();
        if labels.contains(&0) && labels.contains(&1) {
            return labels;
        }
    }
}

pub fn train_set(dense: &[Vec<f64>], labels: Vec<usize>) -> TrainSet {
    let dim = dense.first().map_or(0, Vec::len);
    TrainSet::binary(SparseMatrix::from_dense(dense, dim).unwrap(), labels).unwrap()
}

/// Multinomial NB log-posteriors from the textbook formula over dense arrays.
pub fn dense_nb_log_posterior(x: &[Vec<f64>], y: &[usize], classes: usize, alpha: f64, query: &[f64]) -> Vec<f64> {
    let dim = query.len();
    let n = y.len() as f64;
    let jll: Vec<f64> = (0..classes)
        .map(|c| {
            let prior = y.iter().filter(|&&l| l == c).count() as f64 / n;
            let mut sums = vec![0.0; dim];
            for (row, &l) in x.iter().zip(y) {
                if l == c {
                    for j in 0..dim {
                        sums[j] += row[j];
                    }
                }
            }
            let total: f64 = sums.iter().sum::<f64>() + alpha * dim as f64;
            prior.ln() + (0..dim).map(|j| query[j] * ((sums[j] + alpha) / total).ln()).sum::<f64>()
        })
        .collect();
    let norm = jll.iter().map(|v| v.exp()).sum::<f64>().ln();
    jll.iter().map(|v| v - norm).collect()
}

pub fn dense_dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).filter(|(x, y)| **x != 0.0 && **y != 0.0).map(|(x, y)| x * y).sum()
}

/// All-pairs k-NN: sort every training row by (distance, index), vote among the
/// first k, ties to the lower class.
pub fn brute_knn(train: &[Vec<f64>], labels: &[usize], classes: usize, k: usize, cosine: bool, query: &[f64]) -> usize {
    let qn: f64 = query.iter().map(|v| v * v).sum();
    let mut dist: Vec<(f64, usize)> = train
        .iter()
        .enumerate()
        .map(|(i, row)| {
            let xn: f64 = row.iter().map(|v| v * v).sum();
            let dot = dense_dot(query, row);
            let d = if cosine {
                if qn == 0.0 || xn == 0.0 {
                    1.0
                } else {
                    1.0 - dot / (qn.sqrt() * xn.sqrt())
                }
            } else {
                (qn + xn - 2.0 * dot).max(0.0).sqrt()
            };
            (d, i)
        })
        .collect();
    dist.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
    let mut votes = vec![0; classes];
    for &(_, i) in &dist[..k] {
        votes[labels[i]] += 1;
    }
    let best = *votes.iter().max().unwrap();
    votes.iter().position(|&v| v == best).unwrap()
}

fn gini(counts: &[f64]) -> f64 {
    let total: f64 = counts.iter().sum();
    if total == 0.0 {
        return 0.0;
    }
    1.0 - counts.iter().map(|c| (c / total).powi(2)).sum::<f64>()
}

/// Weighted child Gini of splitting at `x[feature] <= threshold`.
pub fn split_impurity(x: &[Vec<f64>], y: &[usize], classes: usize, feature: usize, threshold: f64) -> f64 {
    let mut left = vec![0.0; classes];
    let mut right = vec![0.0; classes];
    for (row, &l) in x.iter().zip(y) {
        if row[feature] <= threshold {
            left[l] += 1.0;
        } else {
            right[l] += 1.0;
        }
    }
    let (nl, nr) = (left.iter().sum::<f64>(), right.iter().sum::<f64>());
    (nl * gini(&left) + nr * gini(&right)) / (nl + nr)
}

/// Every `(feature, midpoint threshold, impurity)` candidate in feature order,
/// thresholds ascending.
pub fn all_splits(x: &[Vec<f64>], y: &[usize], classes: usize) -> Vec<(usize, f64, f64)> {
    let dim = x[0].len();
    let mut out = Vec::new();
    for f in 0..dim {
        let mut values: Vec<f64> = x.iter().map(|r| r[f]).collect();
        values.sort_by(f64::total_cmp);
        values.dedup();
        for w in values.windows(2) {
            let t = (w[0] + w[1]) / 2.0;
            out.push((f, t, split_impurity(x, y, classes, f, t)));
        }
    }
    out
}

/// `½(‖w‖² + b²) + C Σ hinge`, with the bias as an extra coordinate of `theta`.
pub fn dense_svm_objective(x: &[Vec<f64>], y: &[f64], c: f64, theta: &[f64]) -> f64 {
    let d = theta.len() - 1;
    let hinge: f64 = x
        .iter()
        .zip(y)
        .map(|(row, yi)| (1.0 - yi * (dense_dot(row, &theta[..d]) + theta[d])).max(0.0))
        .sum();
    0.5 * theta.iter().map(|v| v * v).sum::<f64>() + c * hinge
}

/// Full-batch subgradient descent on the SVM objective with `1/t` steps,
/// returning the best objective seen.
pub fn reference_svm_objective(x: &[Vec<f64>], y: &[f64], c: f64, iterations: usize) -> f64 {
    let d = x[0].len();
    let mut theta = vec![0.0; d + 1];
    let mut best = dense_svm_objective(x, y, c, &theta);
    for t in 1..=iterations {
        let mut g = theta.clone();
        for (row, yi) in x.iter().zip(y) {
            if yi * (dense_dot(row, &theta[..d]) + theta[d]) < 1.0 {
                for j in 0..d {
                    g[j] -= c * yi * row[j];
                }
                g[d] -= c * yi;
            }
        }
        let step = 1.0 / t as f64;
        for (th, gi) in theta.iter_mut().zip(&g) {
            *th -= step * gi;
        }
        best = best.min(dense_svm_objective(x, y, c, &theta));
    }
    best
}

/// `½ l2 ‖w‖² + Σ log(1 + exp(−y(w·x + b)))` over dense rows.
pub fn dense_logistic_loss(x: &[Vec<f64>], y: &[f64], l2: f64, w: &[f64], b: f64) -> f64 {
    let data: f64 = x
        .iter()
        .zip(y)
        .map(|(row, yi)| {
            let z = yi * (row.iter().zip(w).map(|(a, c)| a * c).sum::<f64>() + b);
            (-z).exp().ln_1p()
        })
        .sum();
    0.5 * l2 * w.iter().map(|v| v * v).sum::<f64>() + data
}

pub const POSITIVE_WORDS: [&str; 12] = [
    "great", "wonderful", "loved", "excellent", "superb", "enjoyable", "brilliant", "charming", "moving", "delightful", "perfect", "fun",
];
pub const NEGATIVE_WORDS: [&str; 12] = [
    "terrible", "boring", "hated", "awful", "dreadful", "tedious", "waste", "clumsy", "dull", "poor", "worst", "mess",
];
pub const NEUTRAL_WORDS: [&str; 12] = [
    "film", "plot", "actor", "scene", "story", "music", "ending", "camera", "director", "script", "cast", "screen",
];

/// Synthetic review with several sentiment words and some shared filler.
pub fn synthetic_review(rng: &mut ChaCha8Rng, label: usize) -> String {
    let words = if label == 1 { POSITIVE_WORDS } else { NEGATIVE_WORDS };
    let len = rng.gen_range(6..14);
    (0..len)
        .map(|_| {
            if rng.gen_bool(0.4) {
                NEUTRAL_WORDS[rng.gen_range(0..NEUTRAL_WORDS.len())]
            } else {
                words[rng.gen_range(0..words.len())]
            }
        })
        .collect::<Vec<_>>()
        .join(" ")
}

/// Sparse count rows where class 1 uses the first half of the columns and class
/// 0 the second half, plus a few shared noise columns.
pub fn separable_counts(rng: &mut ChaCha8Rng, n: usize, dim: usize) -> (Vec<Vec<f64>>, Vec<usize>) {
    let half = dim / 2;
    let mut x = Vec::with_capacity(n);
    let mut y = Vec::with_capacity(n);
    for i in 0..n {
        let label = i % 2;
        let mut row = vec![0.0; dim];
        let (lo, hi) = if label == 1 { (0, half - 2) } else { (half, dim - 2) };
        for _ in 0..4 {
            row[rng.gen_range(lo..hi)] += 1.0;
        }
        row[dim - 2 + rng.gen_range(0..2)] += 1.0;
        x.push(row);
        y.push(label);
    }
    (x, y)
}

/// Writes an `aclImdb`-style tree with `per_cell` reviews in each split/label.
pub fn write_imdb_fixture(root: &Path, per_cell: usize, seed: u64) -> PathBuf {
    let mut r = rng(seed);
    let base = root.join("aclImdb");
    for split in ["train", "test"] {
        for (dir, label) in [("neg", 0), ("pos", 1)] {
            let d = base.join(split).join(dir);
            fs::create_dir_all(&d).unwrap();
            for i in 0..per_cell {
                fs::write(d.join(format!("{i}_{}.txt", if label == 1 { 8 } else { 2 })), synthetic_review(&mut r, label)).unwrap();
            }
        }
    }
    base
}

pub fn write_alexa_fixture(path: &Path, rows: usize, seed: u64) {
    let mut r = rng(seed);
    let mut text = String::from("rating\tdate\tvariation\tverified_reviews\tfeedback\n");
    for i in 0..rows {
        let label = usize::from(i % 5 != 0);
        text.push_str(&format!("{}\t31-Jul-18\tCharcoal Fabric\t{}\t{label}\n", if label == 1 { 5 } else { 1 }, synthetic_review(&mut r, label)));
    }
    fs::write(path, text).unwrap();
}

pub fn sparse_rows(dense: &[Vec<f64>]) -> Vec<SparseVector> {
    dense.iter().map(|r| SparseVector::from_dense(r)).collect()
}
