//! Confusion counts, accuracy and precision/recall/F1 with weighted, macro or
//! per-class averaging. All reported values are percentages.
//!
//! Zero-division policy: a class never predicted gets precision 0, a class with
//! no true rows gets recall 0, and `P = R = 0` gives `F1 = 0`. Any such case sets
//! `zero_division` on the result instead of failing.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ConfusionCounts {
    /// `matrix[true][predicted]`
    pub matrix: Vec<Vec<u64>>,
}

impl ConfusionCounts {
    pub fn num_classes(&self) -> usize {
        self.matrix.len()
    }

    pub fn total(&self) -> u64 {
        self.matrix.iter().flatten().sum()
    }

    pub fn correct(&self) -> u64 {
        (0..self.num_classes()).map(|c| self.matrix[c][c]).sum()
    }

    pub fn true_positives(&self, class: usize) -> u64 {
        self.matrix[class][class]
    }

    pub fn false_positives(&self, class: usize) -> u64 {
        (0..self.num_classes())
            .filter(|&t| t != class)
            .map(|t| self.matrix[t][class])
            .sum()
    }

    pub fn false_negatives(&self, class: usize) -> u64 {
        (0..self.num_classes())
            .filter(|&p| p != class)
            .map(|p| self.matrix[class][p])
            .sum()
    }

    /// Rows whose true label is `class`.
    pub fn support(&self, class: usize) -> u64 {
        self.matrix[class].iter().sum()
    }
}

pub fn confusion(truth: &[usize], predicted: &[usize], num_classes: usize) -> Result<ConfusionCounts> {
    if truth.len() != predicted.len() {
        return Err(Error::LengthMismatch {
            left: truth.len(),
            right: predicted.len(),
        });
    }
    let mut matrix = vec![vec![0u64; num_classes]; num_classes];
    for (&t, &p) in truth.iter().zip(predicted) {
        if let Some(&id) = [t, p].iter().find(|&&id| id >= num_classes) {
            return Err(Error::ClassOutOfRange { id, num_classes });
        }
        matrix[t][p] += 1;
    }
    Ok(ConfusionCounts { matrix })
}

fn require_nonempty(counts: &ConfusionCounts) -> Result<f64> {
    match counts.total() {
        0 => Err(Error::UndefinedMetric("no evaluated documents".to_string())),
        n => Ok(n as f64),
    }
}

/// `100 × correct / total`.
pub fn accuracy(counts: &ConfusionCounts) -> Result<f64> {
    let total = require_nonempty(counts)?;
    Ok(100.0 * counts.correct() as f64 / total)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Averaging {
    #[default]
    Weighted,
    Macro,
    PerClass,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClassMetrics {
    pub class: usize,
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
    pub support: u64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Averaged {
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricBundle {
    pub averaging: Averaging,
    /// `None` for [`Averaging::PerClass`].
    pub average: Option<Averaged>,
    pub per_class: Vec<ClassMetrics>,
    pub zero_division: bool,
}

fn ratio(num: u64, den: u64, zero_division: &mut bool) -> f64 {
    if den == 0 {
        *zero_division = true;
        0.0
    } else {
        num as f64 / den as f64
    }
}

pub fn precision_recall_f1(counts: &ConfusionCounts, averaging: Averaging) -> Result<MetricBundle> {
    let total = require_nonempty(counts)?;
    let mut zero_division = false;
    let per_class: Vec<ClassMetrics> = (0..counts.num_classes())
        .map(|c| {
            let tp = counts.true_positives(c);
            let p = ratio(tp, tp + counts.false_positives(c), &mut zero_division);
            let r = ratio(tp, tp + counts.false_negatives(c), &mut zero_division);
            let f1 = if p + r == 0.0 {
                0.0
            } else {
                2.0 * p * r / (p + r)
            };
            ClassMetrics {
                class: c,
                precision: 100.0 * p,
                recall: 100.0 * r,
                f1: 100.0 * f1,
                support: counts.support(c),
            }
        })
        .collect();

    let average = match averaging {
        Averaging::PerClass => None,
        Averaging::Macro => {
            let k = per_class.len() as f64;
            Some(Averaged {
                precision: per_class.iter().map(|m| m.precision).sum::<f64>() / k,
                recall: per_class.iter().map(|m| m.recall).sum::<f64>() / k,
                f1: per_class.iter().map(|m| m.f1).sum::<f64>() / k,
            })
        }
        Averaging::Weighted => {
            let weighted = |f: fn(&ClassMetrics) -> f64| {
                per_class
                    .iter()
                    .map(|m| m.support as f64 * f(m))
                    .sum::<f64>()
                    / total
            };
            Some(Averaged {
                precision: weighted(|m| m.precision),
                recall: weighted(|m| m.recall),
                f1: weighted(|m| m.f1),
            })
        }
    };
    Ok(MetricBundle {
        averaging,
        average,
        per_class,
        zero_division,
    })
}

/// Rounds to two decimals, ties to even.
pub fn round2(value: f64) -> f64 {
    let scaled = value * 100.0;
    let floor = scaled.floor();
    let frac = scaled - floor;
    let rounded = if (frac - 0.5).abs() < 1e-9 {
        if floor % 2.0 == 0.0 {
            floor
        } else {
            floor + 1.0
        }
    } else {
        scaled.round()
    };
    rounded / 100.0
}

pub fn format2(value: f64) -> String {
    format!("{:.2}", round2(value))
}

/// Metrics for one (dataset, feature scheme, classifier) cell.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub dataset: String,
    pub feature_scheme: String,
    pub classifier: String,
    pub accuracy: f64,
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
    pub per_class: Vec<ClassMetrics>,
    pub class_names: Vec<String>,
    pub zero_division: bool,
    pub num_train: usize,
    pub num_test: usize,
    /// Test documents with no in-vocabulary features.
    pub empty_test_rows: usize,
    pub config_snapshot: serde_json::Value,
}

impl EvalReport {
    pub const CSV_HEADER: [&'static str; 7] = ["dataset", "feature", "classifier", "A", "P", "R", "F1"];

    /// Builds a weighted-average report from true and predicted labels.
    pub fn from_predictions(
        dataset: &str,
        feature_scheme: &str,
        classifier: &str,
        class_names: &[String],
        truth: &[usize],
        predicted: &[usize],
    ) -> Result<Self> {
        let counts = confusion(truth, predicted, class_names.len())?;
        let acc = accuracy(&counts)?;
        let bundle = precision_recall_f1(&counts, Averaging::Weighted)?;
        let avg = bundle.average.expect("weighted averaging yields an average");
        Ok(Self {
            dataset: dataset.to_string(),
            feature_scheme: feature_scheme.to_string(),
            classifier: classifier.to_string(),
            accuracy: acc,
            precision: avg.precision,
            recall: avg.recall,
            f1: avg.f1,
            per_class: bundle.per_class,
            class_names: class_names.to_vec(),
            zero_division: bundle.zero_division,
            num_train: 0,
            num_test: truth.len(),
            empty_test_rows: 0,
            config_snapshot: serde_json::Value::Null,
        })
    }

    pub fn csv_row(&self) -> [String; 7] {
        [
            self.dataset.clone(),
            self.feature_scheme.clone(),
            self.classifier.clone(),
            format2(self.accuracy),
            format2(self.precision),
            format2(self.recall),
            format2(self.f1),
        ]
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string(self)?)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn confusion_examples() {
        let c = confusion(&[0, 1], &[0, 1], 2).unwrap();
        assert_eq!(c.matrix, vec![vec![1, 0], vec![0, 1]]);

        let c = confusion(&[0, 0], &[1, 1], 2).unwrap();
        assert_eq!((c.true_positives(0), c.false_negatives(0), c.false_positives(1)), (0, 2, 2));

        let c = confusion(&[0, 1, 1, 0], &[0, 1, 0, 0], 2).unwrap();
        assert_eq!(c.true_positives(0), 2);
        assert_eq!(c.false_positives(0), 1);
        assert_eq!(c.true_positives(1), 1);
        assert_eq!(c.false_negatives(1), 1);

        assert!(matches!(confusion(&[0], &[0, 1], 2), Err(Error::LengthMismatch { .. })));
        assert!(matches!(confusion(&[0], &[2], 2), Err(Error::ClassOutOfRange { .. })));
    }

    #[test]
    fn accuracy_examples() {
        let truth = vec![1; 10];
        let mut pred = vec![1; 10];
        pred[3] = 0;
        assert_eq!(accuracy(&confusion(&truth, &pred, 2).unwrap()).unwrap(), 90.0);
        assert_eq!(accuracy(&confusion(&truth, &truth, 2).unwrap()).unwrap(), 100.0);
        assert_eq!(accuracy(&confusion(&truth, &[0; 10], 2).unwrap()).unwrap(), 0.0);
        assert!(matches!(accuracy(&confusion(&[], &[], 2).unwrap()), Err(Error::UndefinedMetric(_))));
    }

    #[test]
    fn symmetric_binary_counts() {
        let counts = ConfusionCounts {
            matrix: vec![vec![8, 2], vec![2, 8]],
        };
        let avg = precision_recall_f1(&counts, Averaging::Weighted).unwrap().average.unwrap();
        assert!((avg.precision - 80.0).abs() < 1e-12);
        assert!((avg.recall - 80.0).abs() < 1e-12);
        assert!((avg.f1 - 80.0).abs() < 1e-12);
    }

    #[test]
    fn half_precision_full_recall() {
        // class 1: TP=1, FP=1, FN=0
        let counts = confusion(&[0, 1], &[1, 1], 2).unwrap();
        let b = precision_recall_f1(&counts, Averaging::PerClass).unwrap();
        assert!(b.average.is_none());
        assert_eq!(b.per_class[1].precision, 50.0);
        assert_eq!(b.per_class[1].recall, 100.0);
        assert_eq!(format2(b.per_class[1].f1), "66.67");
        assert!(b.zero_division);
    }

    #[test]
    fn hand_tabulated_weighted_example() {
        let counts = confusion(&[0, 0, 0, 1], &[0, 0, 1, 1], 2).unwrap();
        let avg = precision_recall_f1(&counts, Averaging::Weighted).unwrap().average.unwrap();
        assert!((avg.precision - 87.5).abs() < 1e-12);
        assert!((avg.recall - 75.0).abs() < 1e-12);
        assert_eq!(accuracy(&counts).unwrap(), 75.0);
        let mac = precision_recall_f1(&counts, Averaging::Macro).unwrap().average.unwrap();
        assert!((mac.recall - (100.0 * 2.0 / 3.0 + 100.0) / 2.0).abs() < 1e-12);
    }

    #[test]
    fn rounding_is_half_even() {
        assert_eq!(format2(88.125), "88.12");
        assert_eq!(format2(88.135), "88.14");
        assert_eq!(format2(66.666_666), "66.67");
        assert_eq!(format2(100.0), "100.00");
    }

    #[test]
    fn report_csv_row_order() {
        let names = vec!["negative".to_string(), "positive".to_string()];
        let r = EvalReport::from_predictions("imdb", "tfidf", "knn", &names, &[0, 0, 0, 1], &[0, 0, 1, 1]).unwrap();
        assert_eq!(r.csv_row(), ["imdb", "tfidf", "knn", "75.00", "87.50", "75.00", "76.67"].map(String::from));
        let back: EvalReport = serde_json::from_str(&r.to_json().unwrap()).unwrap();
        assert_eq!(back, r);
    }

    proptest! {
        #[test]
        fn permutation_invariance(pairs in prop::collection::vec((0usize..3, 0usize..3), 1..200), seed in any::<u64>()) {
            let (t, p): (Vec<_>, Vec<_>) = pairs.iter().copied().unzip();
            let mut shuffled = pairs.clone();
            let mut s = seed;
            for i in (1..shuffled.len()).rev() {
                s = crate::seeding::splitmix64(s);
                shuffled.swap(i, (s % (i as u64 + 1)) as usize);
            }
            let (t2, p2): (Vec<_>, Vec<_>) = shuffled.into_iter().unzip();
            let a = precision_recall_f1(&confusion(&t, &p, 3).unwrap(), Averaging::Weighted).unwrap();
            let b = precision_recall_f1(&confusion(&t2, &p2, 3).unwrap(), Averaging::Weighted).unwrap();
            prop_assert_eq!(a, b);
        }

        #[test]
        fn perfect_and_inverted(labels in prop::collection::vec(0usize..2, 1..100)) {
            let c = confusion(&labels, &labels, 2).unwrap();
            prop_assert_eq!(accuracy(&c).unwrap(), 100.0);
            let inverted: Vec<usize> = labels.iter().map(|l| 1 - l).collect();
            prop_assert_eq!(accuracy(&confusion(&labels, &inverted, 2).unwrap()).unwrap(), 0.0);
        }
    }
}
