mod common;

use common::*;
use rand::Rng;
use textclass::classifiers::{
    logistic_objective, train, train_decision_tree, train_knn, train_linear_svm, train_multinomial_nb, ClassifierKind,
    DistanceMetric, FeatureSubsample, Hyperparameters, ModelParams,
};
use textclass::features::SparseMatrix;

#[test]
fn nb_posterior_matches_dense_formula() {
    let mut r = rng(11);
    for round in 0..20 {
        let n = r.gen_range(4..=50);
        let dim = r.gen_range(2..=30);
        let x = random_counts(&mut r, n, dim, 0.3);
        let y = random_labels(&mut r, n);
        let alpha = [1.0, 0.5, 2.0][round % 3];
        let model = train_multinomial_nb(&train_set(&x, y.clone()), alpha).unwrap();
        let ModelParams::NaiveBayes(p) = &model.params else { unreachable!() };
        let queries = random_counts(&mut r, 10, dim, 0.4);
        for q in &queries {
            let got = p.log_posterior(&textclass::features::SparseVector::from_dense(q));
            let want = dense_nb_log_posterior(&x, &y, 2, alpha, q);
            for (g, w) in got.iter().zip(&want) {
                assert!((g - w).abs() <= 1e-10, "round {round}: {g} vs {w}");
            }
        }
    }
}

#[test]
fn logistic_gradient_matches_central_differences() {
    let mut r = rng(23);
    let x = random_counts(&mut r, 40, 8, 0.4);
    let y = random_labels(&mut r, 40);
    let signs: Vec<f64> = y.iter().map(|&l| if l == 1 { 1.0 } else { -1.0 }).collect();
    let data = train_set(&x, y);
    let l2 = 0.7;
    for _ in 0..10 {
        let w: Vec<f64> = (0..8).map(|_| r.gen_range(-1.0..1.0)).collect();
        let b = r.gen_range(-1.0..1.0);
        let (loss, grad_w, grad_b) = logistic_objective(&data, 1, l2, &w, b);
        assert!((loss - dense_logistic_loss(&x, &signs, l2, &w, b)).abs() < 1e-9 * loss.max(1.0));

        let h = 1e-5;
        let mut numeric = Vec::new();
        for j in 0..=8 {
            let (mut wp, mut wm, mut bp, mut bm) = (w.clone(), w.clone(), b, b);
            if j < 8 {
                wp[j] += h;
                wm[j] -= h;
            } else {
                bp += h;
                bm -= h;
            }
            let fp = dense_logistic_loss(&x, &signs, l2, &wp, bp);
            let fm = dense_logistic_loss(&x, &signs, l2, &wm, bm);
            numeric.push((fp - fm) / (2.0 * h));
        }
        let analytic: Vec<f64> = grad_w.iter().copied().chain([grad_b]).collect();
        for (a, n) in analytic.iter().zip(&numeric) {
            let rel = (a - n).abs() / n.abs().max(1.0);
            assert!(rel <= 1e-5, "analytic {a} vs numeric {n}");
        }
    }
}

#[test]
fn knn_matches_all_pairs_oracle() {
    let mut r = rng(5);
    for metric in [DistanceMetric::Cosine, DistanceMetric::Euclidean] {
        let x = random_counts(&mut r, 30, 6, 0.5);
        let y = random_labels(&mut r, 30);
        let model = train_knn(&train_set(&x, y.clone()), 5, metric).unwrap();
        let queries = random_counts(&mut r, 40, 6, 0.5);
        let got = model.predict(&SparseMatrix::from_dense(&queries, 6).unwrap()).unwrap();
        let want: Vec<usize> = queries
            .iter()
            .map(|q| brute_knn(&x, &y, 2, 5, metric == DistanceMetric::Cosine, q))
            .collect();
        assert_eq!(got, want, "{metric:?}");
    }
}

#[test]
fn tree_root_is_exhaustive_gini_optimum() {
    let mut r = rng(31);
    for round in 0..30 {
        let x: Vec<Vec<f64>> = (0..25)
            .map(|_| (0..5).map(|_| if r.gen_bool(0.5) { r.gen_range(-3..5) as f64 } else { 0.0 }).collect())
            .collect();
        let y = random_labels(&mut r, 25);
        let model = train_decision_tree(&train_set(&x, y.clone()), Some(3), 1, 0).unwrap();
        let ModelParams::Tree(tree) = &model.params else { unreachable!() };
        let candidates = all_splits(&x, &y, 2);
        let best = candidates.iter().map(|c| c.2).fold(f64::INFINITY, f64::min);
        let (feature, threshold) = tree.root_split().expect("non-trivial data splits");
        let chosen = split_impurity(&x, &y, 2, feature, threshold);
        assert!((chosen - best).abs() < 1e-12, "round {round}: chosen {chosen}, optimum {best}");
        let optimal: Vec<_> = candidates.iter().filter(|c| c.2 - best < 1e-9).collect();
        if optimal.len() == 1 {
            assert_eq!((feature, threshold), (optimal[0].0, optimal[0].1), "round {round}");
        } else {
            assert!(optimal.iter().any(|c| c.0 == feature && c.1 == threshold), "round {round}");
        }
    }
}

#[test]
fn forest_of_one_full_tree_is_the_tree() {
    let mut r = rng(8);
    let x = random_counts(&mut r, 60, 12, 0.3);
    let y = random_labels(&mut r, 60);
    let data = train_set(&x, y);
    for max_depth in [None, Some(3)] {
        let forest = train(
            &data,
            &Hyperparameters::RandomForest {
                n_trees: 1,
                max_depth,
                min_leaf: 1,
                feature_subsample: FeatureSubsample::Fraction(1.0),
                bootstrap: false,
            },
            17,
        )
        .unwrap();
        let tree = train(&data, &Hyperparameters::DecisionTree { max_depth, min_leaf: 1 }, 17).unwrap();
        let queries = SparseMatrix::from_dense(&random_counts(&mut r, 50, 12, 0.3), 12).unwrap();
        assert_eq!(forest.predict(&queries).unwrap(), tree.predict(&queries).unwrap());
        let (ModelParams::Forest { trees }, ModelParams::Tree(single)) = (&forest.params, &tree.params) else {
            unreachable!()
        };
        assert_eq!(&trees[0], single);
    }
}

#[test]
fn svm_objective_near_long_run_reference() {
    let mut r = rng(2);
    let mut x = Vec::new();
    let mut y = Vec::new();
    while x.len() < 40 {
        let p: [f64; 2] = [r.gen_range(-2.0..2.0), r.gen_range(-2.0..2.0)];
        let s = p[0] + 0.5 * p[1] - 0.3;
        if s.abs() < 0.2 {
            continue;
        }
        x.push(p.to_vec());
        y.push(usize::from(s > 0.0));
    }
    let signs: Vec<f64> = y.iter().map(|&l| if l == 1 { 1.0 } else { -1.0 }).collect();
    let data = train_set(&x, y.clone());
    let reference = reference_svm_objective(&x, &signs, 1.0, 200_000);
    let model = train_linear_svm(&data, 1.0, 1000, 3).unwrap();
    let ModelParams::Linear(p) = &model.params else { unreachable!() };
    let theta: Vec<f64> = p.weights[0].iter().copied().chain([p.bias[0]]).collect();
    let ours = dense_svm_objective(&x, &signs, 1.0, &theta);
    assert!((ours - p.objective[0]).abs() < 1e-9);
    assert!((ours - reference).abs() / reference <= 0.05, "ours {ours}, reference {reference}");
    assert_eq!(model.predict(&data.matrix).unwrap(), y);
}

#[test]
fn every_trainer_fits_separable_corpus() {
    let mut r = rng(99);
    let (x, y) = separable_counts(&mut r, 200, 40);
    let data = train_set(&x, y.clone());
    for kind in ClassifierKind::ALL {
        let mut hyper = Hyperparameters::default_for(kind);
        if let Hyperparameters::Knn { k, .. } = &mut hyper {
            *k = 1;
        }
        let pred = train(&data, &hyper, 5).unwrap().predict(&data.matrix).unwrap();
        let acc = pred.iter().zip(&y).filter(|(a, b)| a == b).count() as f64 / y.len() as f64;
        let floor = if kind == ClassifierKind::Knn { 1.0 } else { 0.95 };
        assert!(acc >= floor, "{kind:?}: {acc}");
    }
}

#[test]
fn training_is_deterministic_across_thread_counts() {
    let mut r = rng(12);
    let x = random_counts(&mut r, 100, 20, 0.25);
    let y = random_labels(&mut r, 100);
    let data = train_set(&x, y);
    let queries = SparseMatrix::from_dense(&random_counts(&mut r, 30, 20, 0.25), 20).unwrap();
    let single = rayon::ThreadPoolBuilder::new().num_threads(1).build().unwrap();
    for kind in ClassifierKind::ALL {
        let hyper = Hyperparameters::default_for(kind);
        let a = train(&data, &hyper, 21).unwrap();
        let b = train(&data, &hyper, 21).unwrap();
        let c = single.install(|| train(&data, &hyper, 21).unwrap());
        assert_eq!(a, b, "{kind:?}");
        assert_eq!(a, c, "{kind:?}");
        assert_eq!(a.predict(&queries).unwrap(), c.predict(&queries).unwrap());
    }
}

#[test]
fn nb_and_cosine_knn_predictions_survive_positive_scaling() {
    let mut r = rng(77);
    let x = random_counts(&mut r, 40, 10, 0.35);
    // balanced classes: the prior term is the same for both
    let y: Vec<usize> = (0..40).map(|i| i % 2).collect();
    let queries = random_counts(&mut r, 50, 10, 0.35);
    let q = SparseMatrix::from_dense(&queries, 10).unwrap();
    let nb = train_multinomial_nb(&train_set(&x, y.clone()), 1.0).unwrap();
    let knn = train_knn(&train_set(&x, y.clone()), 5, DistanceMetric::Cosine).unwrap();
    for s in [0.5, 3.0, 1000.0] {
        let scaled = q.map_rows(|row| row.scaled(s));
        assert_eq!(nb.predict(&q).unwrap(), nb.predict(&scaled).unwrap(), "nb, s={s}");
        let scaled_train: Vec<Vec<f64>> = x.iter().map(|row| row.iter().map(|v| v * s).collect()).collect();
        let knn_scaled = train_knn(&train_set(&scaled_train, y.clone()), 5, DistanceMetric::Cosine).unwrap();
        assert_eq!(knn.predict(&q).unwrap(), knn_scaled.predict(&scaled).unwrap(), "knn, s={s}");
    }
}

#[test]
fn lr_on_empty_documents_predicts_majority_through_bias() {
    let empty = vec![vec![0.0; 3]; 5];
    let data = train_set(&empty, vec![1, 1, 1, 0, 0]);
    let model = train(&data, &Hyperparameters::default_for(ClassifierKind::LogisticRegression), 0).unwrap();
    let ModelParams::Linear(p) = &model.params else { unreachable!() };
    assert!((p.bias[0] - 1.5f64.ln()).abs() < 1e-6);
    assert_eq!(model.predict(&data.matrix).unwrap(), vec![1; 5]);
}
