//! Linear SVM (hinge loss, dual coordinate descent) and L2-regularized logistic
//! regression (L-BFGS). More than two classes are handled one-vs-rest; with two
//! classes a single problem is solved with class 1 as the positive side.

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{Hyperparameters, Model, TrainSet};
use crate::error::{Error, Result};
use crate::features::{SparseMatrix, SparseVector};

const ROW_CHUNK: usize = 2048;
const DUAL_GAP_EPS: f64 = 1e-4;
const LBFGS_MEMORY: usize = 10;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LinearParams {
    /// One weight vector per binary problem.
    pub weights: Vec<Vec<f64>>,
    pub bias: Vec<f64>,
    /// Final objective value of each problem.
    pub objective: Vec<f64>,
    pub iterations: Vec<usize>,
}

impl LinearParams {
    pub fn margins(&self, row: &SparseVector) -> Vec<f64> {
        let m: Vec<f64> = self
            .weights
            .iter()
            .zip(&self.bias)
            .map(|(w, b)| row.dot_dense(w) + b)
            .collect();
        if m.len() == 1 {
            vec![-m[0], m[0]]
        } else {
            m
        }
    }
}

fn problems(data: &TrainSet) -> Vec<usize> {
    if data.num_classes() == 2 {
        vec![1]
    } else {
        (0..data.num_classes()).collect()
    }
}

fn signs(data: &TrainSet, positive: usize) -> Vec<f64> {
    data.labels
        .iter()
        .map(|&l| if l == positive { 1.0 } else { -1.0 })
        .collect()
}

fn add_scaled(dense: &mut [f64], row: &SparseVector, factor: f64) {
    for &(c, w) in row.entries() {
        dense[c] += factor * w;
    }
}

/// `½(‖w‖² + b²) + C Σ max(0, 1 − y(w·x + b))`; the bias is regularized as
/// a constant feature.
pub fn svm_objective(data: &TrainSet, positive_class: usize, c: f64, weights: &[f64], bias: f64) -> f64 {
    let y = signs(data, positive_class);
    let hinge: f64 = data
        .matrix
        .rows()
        .iter()
        .zip(&y)
        .map(|(row, yi)| (1.0 - yi * (row.dot_dense(weights) + bias)).max(0.0))
        .sum();
    0.5 * (weights.iter().map(|w| w * w).sum::<f64>() + bias * bias) + c * hinge
}

fn solve_svm(data: &TrainSet, positive: usize, c: f64, epochs: usize, seed: u64) -> (Vec<f64>, f64, usize) {
    let rows = data.matrix.rows();
    let y = signs(data, positive);
    let n = rows.len();
    let mut w = vec![0.0; data.matrix.dim()];
    let mut b = 0.0;
    let mut alpha = vec![0.0; n];
    let qd: Vec<f64> = rows.iter().map(|r| r.norm_sq() + 1.0).collect();
    let mut order: Vec<usize> = (0..n).collect();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut passes = 0;
    for _ in 0..epochs {
        passes += 1;
        order.shuffle(&mut rng);
        let (mut pg_max, mut pg_min) = (f64::NEG_INFINITY, f64::INFINITY);
        for &i in &order {
            let g = y[i] * (rows[i].dot_dense(&w) + b) - 1.0;
            let pg = if alpha[i] == 0.0 {
                g.min(0.0)
            } else if alpha[i] == c {
                g.max(0.0)
            } else {
                g
            };
            pg_max = pg_max.max(pg);
            pg_min = pg_min.min(pg);
            if pg != 0.0 {
                let old = alpha[i];
                alpha[i] = (old - g / qd[i]).clamp(0.0, c);
                let delta = (alpha[i] - old) * y[i];
                if delta != 0.0 {
                    add_scaled(&mut w, &rows[i], delta);
                    b += delta;
                }
            }
        }
        if pg_max - pg_min < DUAL_GAP_EPS {
            break;
        }
    }
    let objective = svm_objective(data, positive, c, &w, b);
    w.push(b);
    (w, objective, passes)
}

pub(super) fn fit_svm(data: &TrainSet, c: f64, epochs: usize, seed: u64) -> Result<LinearParams> {
    if !(c > 0.0 && c.is_finite()) {
        return Err(Error::Training(format!("SVM regularization c must be > 0, got {c}")));
    }
    let mut params = LinearParams {
        weights: vec![],
        bias: vec![],
        objective: vec![],
        iterations: vec![],
    };
    for (k, positive) in problems(data).into_iter().enumerate() {
        let (mut w, objective, passes) = solve_svm(data, positive, c, epochs, seed.wrapping_add(k as u64));
        let b = w.pop().unwrap_or(0.0);
        params.weights.push(w);
        params.bias.push(b);
        params.objective.push(objective);
        params.iterations.push(passes);
    }
    Ok(params)
}

fn softplus(x: f64) -> f64 {
    if x > 0.0 {
        x + (-x).exp().ln_1p()
    } else {
        x.exp().ln_1p()
    }
}

fn sigmoid(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + (-x).exp())
    } else {
        let e = x.exp();
        e / (1.0 + e)
    }
}

struct ChunkPartial {
    loss: f64,
    grad: Vec<f64>,
    grad_b: f64,
}

fn logistic_eval(matrix: &SparseMatrix, y: &[f64], l2: f64, weights: &[f64], bias: f64) -> (f64, Vec<f64>, f64) {
    let dim = matrix.dim();
    let rows = matrix.rows();
    // fixed chunking keeps the summation order independent of thread scheduling
    let partials: Vec<ChunkPartial> = rows
        .par_chunks(ROW_CHUNK)
        .zip(y.par_chunks(ROW_CHUNK))
        .map(|(chunk, ys)| {
            let mut p = ChunkPartial {
                loss: 0.0,
                grad: vec![0.0; dim],
                grad_b: 0.0,
            };
            for (row, yi) in chunk.iter().zip(ys) {
                let z = yi * (row.dot_dense(weights) + bias);
                p.loss += softplus(-z);
                let coef = -yi * sigmoid(-z);
                add_scaled(&mut p.grad, row, coef);
                p.grad_b += coef;
            }
            p
        })
        .collect();
    let mut loss = 0.5 * l2 * weights.iter().map(|w| w * w).sum::<f64>();
    let mut grad: Vec<f64> = weights.iter().map(|w| l2 * w).collect();
    let mut grad_b = 0.0;
    for p in partials {
        loss += p.loss;
        grad_b += p.grad_b;
        for (g, pg) in grad.iter_mut().zip(&p.grad) {
            *g += pg;
        }
    }
    (loss, grad, grad_b)
}

/// Loss and gradient of `½ l2 ‖w‖² + Σ log(1 + exp(−y(w·x + b)))`; the bias is
/// not penalized. Returns `(loss, ∂/∂w, ∂/∂b)`.
pub fn logistic_objective(
    data: &TrainSet,
    positive_class: usize,
    l2: f64,
    weights: &[f64],
    bias: f64,
) -> (f64, Vec<f64>, f64) {
    logistic_eval(&data.matrix, &signs(data, positive_class), l2, weights, bias)
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn solve_logistic(data: &TrainSet, positive: usize, l2: f64, max_iter: usize, tol: f64) -> (Vec<f64>, f64, usize) {
    let y = signs(data, positive);
    let dim = data.matrix.dim();
    let eval = |x: &[f64]| {
        let (loss, mut grad, gb) = logistic_eval(&data.matrix, &y, l2, &x[..dim], x[dim]);
        grad.push(gb);
        (loss, grad)
    };

    let mut x = vec![0.0; dim + 1];
    let (mut f, mut g) = eval(&x);
    let mut history: Vec<(Vec<f64>, Vec<f64>, f64)> = Vec::new();
    let mut iterations = 0;
    while iterations < max_iter {
        if g.iter().all(|v| v.abs() < 1e-12) {
            break;
        }
        iterations += 1;

        // two-loop recursion
        let mut d: Vec<f64> = g.iter().map(|v| -v).collect();
        let mut alphas = Vec::with_capacity(history.len());
        for (s, yv, rho) in history.iter().rev() {
            let a = rho * dot(s, &d);
            for (di, yi) in d.iter_mut().zip(yv) {
                *di -= a * yi;
            }
            alphas.push(a);
        }
        if let Some((s, yv, _)) = history.last() {
            let gamma = dot(s, yv) / dot(yv, yv);
            d.iter_mut().for_each(|di| *di *= gamma);
        }
        for ((s, yv, rho), a) in history.iter().zip(alphas.iter().rev()) {
            let beta = rho * dot(yv, &d);
            for (di, si) in d.iter_mut().zip(s) {
                *di += (a - beta) * si;
            }
        }
        let mut slope = dot(&g, &d);
        if slope >= 0.0 {
            history.clear();
            d = g.iter().map(|v| -v).collect();
            slope = dot(&g, &d);
        }

        let mut step = if history.is_empty() {
            1.0 / dot(&g, &g).sqrt().max(1.0)
        } else {
            1.0
        };
        let mut accepted = None;
        for _ in 0..60 {
            let candidate: Vec<f64> = x.iter().zip(&d).map(|(xi, di)| xi + step * di).collect();
            let (fc, gc) = eval(&candidate);
            if fc.is_finite() && fc <= f + 1e-4 * step * slope {
                accepted = Some((candidate, fc, gc));
                break;
            }
            step *= 0.5;
        }
        let Some((x_new, f_new, g_new)) = accepted else {
            break;
        };
        let s: Vec<f64> = x_new.iter().zip(&x).map(|(a, b)| a - b).collect();
        let yv: Vec<f64> = g_new.iter().zip(&g).map(|(a, b)| a - b).collect();
        let sy = dot(&s, &yv);
        if sy > 1e-12 {
            if history.len() == LBFGS_MEMORY {
                history.remove(0);
            }
            history.push((s, yv, 1.0 / sy));
        }
        let improvement = (f - f_new) / f.abs().max(f_new.abs()).max(1.0);
        x = x_new;
        f = f_new;
        g = g_new;
        if improvement < tol {
            break;
        }
    }
    (x, f, iterations)
}

pub(super) fn fit_logistic(data: &TrainSet, l2: f64, epochs: usize, tol: f64) -> Result<LinearParams> {
    if !(l2 >= 0.0 && l2.is_finite()) {
        return Err(Error::Training(format!("l2 penalty must be >= 0, got {l2}")));
    }
    let mut params = LinearParams {
        weights: vec![],
        bias: vec![],
        objective: vec![],
        iterations: vec![],
    };
    for positive in problems(data) {
        let (mut x, f, iterations) = solve_logistic(data, positive, l2, epochs, tol);
        let b = x.pop().unwrap_or(0.0);
        params.weights.push(x);
        params.bias.push(b);
        params.objective.push(f);
        params.iterations.push(iterations);
    }
    Ok(params)
}

/// Hinge-loss linear SVM with L2 penalty, solved by seeded dual coordinate descent.
pub fn train_linear_svm(data: &TrainSet, c: f64, epochs: usize, seed: u64) -> Result<Model> {
    super::train(data, &Hyperparameters::LinearSvm { c, epochs }, seed)
}

/// L2-regularized logistic regression. L-BFGS is deterministic, so `seed`
/// only enters the model fingerprint.
pub fn train_logistic_regression(data: &TrainSet, l2: f64, epochs: usize, tol: f64, seed: u64) -> Result<Model> {
    super::train(data, &Hyperparameters::LogisticRegression { l2, epochs, tol }, seed)
}
