//! Binary classification metrics over parallel label/prediction slices.

use serde::{Deserialize, Serialize};

use super::EvalError;
use crate::Scalar;

/// The four cells of a binary confusion matrix.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ConfusionCounts {
    pub true_positives: usize,
    pub false_positives: usize,
    pub true_negatives: usize,
    pub false_negatives: usize,
}

impl ConfusionCounts {
    pub fn total(&self) -> usize {
        self.true_positives + self.false_positives + self.true_negatives + self.false_negatives
    }
}

/// Metrics derived from a confusion matrix. `precision` is absent when
/// nothing was predicted positive, `recall` when nothing *is* positive;
/// `f1` is 0 in either degenerate case rather than absent, so report
/// tables always have a number to compare.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ClassificationReport<S> {
    pub accuracy: S,
    pub precision: Option<S>,
    pub recall: Option<S>,
    pub f1: S,
    pub counts: ConfusionCounts,
}

/// Computes accuracy, precision, recall and F1 from parallel slices of
/// {0,1} labels and predictions.
pub fn classification_metrics<S: Scalar>(
    labels: &[u8],
    predictions: &[u8],
) -> Result<ClassificationReport<S>, EvalError> {
    if labels.len() != predictions.len() {
        return Err(EvalError::LengthMismatch {
            labels: labels.len(),
            predictions: predictions.len(),
        });
    }
    if labels.is_empty() {
        return Err(EvalError::EmptyEvaluation);
    }

    let mut counts = ConfusionCounts::default();
    for (&y, &p) in labels.iter().zip(predictions) {
        if y > 1 {
            return Err(EvalError::InvalidLabelValue(y));
        }
        if p > 1 {
            return Err(EvalError::InvalidLabelValue(p));
        }
        match (y, p) {
            (1, 1) => counts.true_positives += 1,
            (0, 1) => counts.false_positives += 1,
            (0, 0) => counts.true_negatives += 1,
            (1, 0) => counts.false_negatives += 1,
            _ => unreachable!(),
        }
    }

    let frac = |num: usize, den: usize| -> Option<S> {
        (den > 0).then(|| S::cast(num) / S::cast(den))
    };
    let accuracy = S::cast(counts.true_positives + counts.true_negatives) / S::cast(labels.len());
    let precision = frac(counts.true_positives, counts.true_positives + counts.false_positives);
    let recall = frac(counts.true_positives, counts.true_positives + counts.false_negatives);
    let f1 = match (precision, recall) {
        (Some(p), Some(r)) if (p + r) > S::zero() => {
            S::cast(2.0) * p * r / (p + r)
        }
        _ => S::zero(),
    };

    Ok(ClassificationReport { accuracy, precision, recall, f1, counts })
}

#[cfg(test)]
mod tests {
    use approx::assert_relative_eq;
    use proptest::prelude::*;

    use super::*;

    /// Builds a (labels, predictions) pair containing the given number of
    /// each confusion cell, in tp/fp/tn/fn block order.
    fn from_counts(tp: usize, fp: usize, tn: usize, fn_: usize) -> (Vec<u8>, Vec<u8>) {
        let mut labels = Vec::new();
        let mut predictions = Vec::new();
        for _ in 0..tp {
            labels.push(1);
            predictions.push(1);
        }
        for _ in 0..fp {
            labels.push(0);
            predictions.push(1);
        }
        for _ in 0..tn {
            labels.push(0);
            predictions.push(0);
        }
        for _ in 0..fn_ {
            labels.push(1);
            predictions.push(0);
        }
        (labels, predictions)
    }

    #[test]
    fn perfect_predictions_score_one_everywhere() {
        let labels = vec![1, 0, 1, 0, 1];
        let report = classification_metrics::<f64>(&labels, &labels).unwrap();
        assert_eq!(report.accuracy, 1.0);
        assert_eq!(report.precision, Some(1.0));
        assert_eq!(report.recall, Some(1.0));
        assert_eq!(report.f1, 1.0);
        assert_eq!(report.counts.total(), 5);
    }

    #[test]
    fn always_positive_metrics_follow_the_base_rate() {
        // 109 positives out of 1,000, everything predicted positive:
        // precision equals the base rate, recall is 1 and F1 is
        // 2p/(1+p).
        let (labels, predictions) = from_counts(109, 891, 0, 0);
        let report = classification_metrics::<f64>(&labels, &predictions).unwrap();
        assert_relative_eq!(report.accuracy, 0.109, max_relative = 1e-12);
        assert_relative_eq!(report.precision.unwrap(), 0.109, max_relative = 1e-12);
        assert_eq!(report.recall, Some(1.0));
        assert_relative_eq!(report.f1, 2.0 * 0.109 / 1.109, max_relative = 1e-12);
    }

    #[test]
    fn hand_counted_confusion_matrix() {
        let (labels, predictions) = from_counts(5, 5, 85, 5);
        let report = classification_metrics::<f64>(&labels, &predictions).unwrap();
        assert_eq!(report.accuracy, 0.90);
        assert_eq!(report.precision, Some(0.5));
        assert_eq!(report.recall, Some(0.5));
        assert_eq!(report.f1, 0.5);
        assert_eq!(
            report.counts,
            ConfusionCounts {
                true_positives: 5,
                false_positives: 5,
                true_negatives: 85,
                false_negatives: 5,
            }
        );
    }

    #[test]
    fn degenerate_denominators_leave_metrics_absent() {
        // All-negative labels and predictions: no positive predictions
        // (precision undefined) and no positive labels (recall
        // undefined); F1 falls back to 0.
        let report = classification_metrics::<f64>(&[0, 0, 0], &[0, 0, 0]).unwrap();
        assert_eq!(report.accuracy, 1.0);
        assert_eq!(report.precision, None);
        assert_eq!(report.recall, None);
        assert_eq!(report.f1, 0.0);
    }

    #[test]
    fn bad_inputs_are_rejected() {
        assert!(matches!(
            classification_metrics::<f64>(&[], &[]),
            Err(EvalError::EmptyEvaluation)
        ));
        assert!(matches!(
            classification_metrics::<f64>(&[1, 0], &[1]),
            Err(EvalError::LengthMismatch { labels: 2, predictions: 1 })
        ));
        assert!(matches!(
            classification_metrics::<f64>(&[2], &[1]),
            Err(EvalError::InvalidLabelValue(2))
        ));
        assert!(matches!(
            classification_metrics::<f64>(&[1], &[3]),
            Err(EvalError::InvalidLabelValue(3))
        ));
    }

    proptest! {
        #[test]
        fn metrics_are_consistent_with_their_counts(
            pairs in proptest::collection::vec((0u8..2, 0u8..2), 1..200),
        ) {
            let labels: Vec<u8> = pairs.iter().map(|&(y, _)| y).collect();
            let predictions: Vec<u8> = pairs.iter().map(|&(_, p)| p).collect();
            let report = classification_metrics::<f64>(&labels, &predictions).unwrap();
            let c = report.counts;

            prop_assert_eq!(c.total(), labels.len());
            let expected_accuracy =
                (c.true_positives + c.true_negatives) as f64 / labels.len() as f64;
            prop_assert_eq!(report.accuracy, expected_accuracy);

            prop_assert!(report.f1 >= 0.0 && report.f1 <= 1.0);
            if let (Some(p), Some(r)) = (report.precision, report.recall) {
                if p + r > 0.0 {
                    let recomputed = 2.0 * p * r / (p + r);
                    prop_assert!((report.f1 - recomputed).abs() < 1e-12);
                }
            }
        }

        #[test]
        fn metrics_ignore_example_order(
            pairs in proptest::collection::vec((0u8..2, 0u8..2), 1..100),
            seed in any::<u64>(),
        ) {
            let labels: Vec<u8> = pairs.iter().map(|&(y, _)| y).collect();
            let predictions: Vec<u8> = pairs.iter().map(|&(_, p)| p).collect();
            let report = classification_metrics::<f64>(&labels, &predictions).unwrap();

            let mut order: Vec<usize> = (0..pairs.len()).collect();
            let mut rng = crate::rng::stream(seed, 1);
            crate::rng::shuffle(&mut rng, &mut order);
            let shuffled_labels: Vec<u8> = order.iter().map(|&i| labels[i]).collect();
            let shuffled_predictions: Vec<u8> =
                order.iter().map(|&i| predictions[i]).collect();
            let shuffled =
                classification_metrics::<f64>(&shuffled_labels, &shuffled_predictions)
                    .unwrap();

            prop_assert_eq!(report, shuffled);
        }
    }
}
