//! Linear SVM trained with the Pegasos stochastic subgradient method.
//!
//! The primal objective is `(λ/2)‖w‖² + (1/n) Σ max(0, 1 − yᵢ(w·xᵢ + b))`
//! with labels recoded to ±1. Each step visits one example (in a seeded
//! per-epoch shuffle), uses the learning rate `η_t = 1/(λ·t)`, shrinks the
//! weights by `(1 − η_t λ)` and, on a margin violation, adds `η_t y x`.
//! The bias follows the hinge subgradient without shrinkage. Scores are
//! signed margins, so the natural decision threshold is 0.

use crate::features::LabeledExample;
use crate::rng;
use crate::Scalar;

use super::{prepare, ModelError, ModelParams, SvmParams, TrainedModel};

const SVM_SHUFFLE_TAG: u64 = 0x7065_6761; // "pega"

fn validate(params: &SvmParams) -> Result<(), ModelError> {
    let bad = |msg: &str| Err(ModelError::InvalidHyperparams(msg.to_string()));
    if !(params.l2.is_finite() && params.l2 > 0.0) {
        return bad("l2 must be positive and finite (the step size is 1/(l2*t))");
    }
    if params.epochs == 0 {
        return bad("epochs must be at least 1");
    }
    Ok(())
}

/// Trains a linear SVM.
pub fn train_svm<S: Scalar>(
    examples: &[LabeledExample<S>],
    params: &SvmParams,
) -> Result<TrainedModel<S>, ModelError> {
    validate(params)?;
    let (standardizer, rows, labels) = prepare(examples)?;
    let y: Vec<S> = labels
        .iter()
        .map(|&l| if l == 1 { S::one() } else { -S::one() })
        .collect();
    let n = rows.len();
    let d = rows[0].len();
    let lambda = S::cast(params.l2);

    let mut weights = vec![S::zero(); d];
    let mut bias = S::zero();
    let mut order: Vec<usize> = (0..n).collect();
    let mut rng = rng::stream(params.seed, SVM_SHUFFLE_TAG);
    let mut t = 0u64;
    for epoch in 0..params.epochs {
        rng::shuffle(&mut rng, &mut order);
        for &i in &order {
            t += 1;
            let eta = S::one() / (lambda * S::cast(t));
            let x = &rows[i];
            let margin = weights
                .iter()
                .zip(x)
                .map(|(&w, &xj)| w * xj)
                .fold(S::zero(), |acc, v| acc + v)
                + bias;
            let shrink = S::one() - eta * lambda;
            if y[i] * margin < S::one() {
                for (w, &xj) in weights.iter_mut().zip(x) {
                    *w = *w * shrink + eta * y[i] * xj;
                }
                bias = bias + eta * y[i];
            } else {
                for w in weights.iter_mut() {
                    *w = *w * shrink;
                }
            }
        }
        if !(bias.is_finite() && weights.iter().all(|w| w.is_finite())) {
            return Err(ModelError::NonFiniteWeights(epoch));
        }
    }
    Ok(TrainedModel { standardizer, params: ModelParams::Svm { weights, bias } })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::models::test_support::examples_from_rows;
    use crate::models::ModelParams;

    const NAMES: &[&str] = &["x0", "x1"];

    /// Two well-separated clusters around (±2, ±1).
    fn separable_rows() -> Vec<(Vec<f64>, u8)> {
        (0..40)
            .map(|i| {
                let side = if i % 2 == 0 { 1.0 } else { -1.0 };
                let jitter = (i as f64 * 0.61).sin() * 0.4;
                (
                    vec![2.0 * side + jitter, side + jitter * 0.5],
                    u8::from(side > 0.0),
                )
            })
            .collect()
    }

    #[test]
    fn separable_clusters_are_classified_perfectly() {
        let rows = separable_rows();
        let examples = examples_from_rows::<f64>(NAMES, &rows);
        let model = train_svm(&examples, &SvmParams::default()).unwrap();
        for (ex, row) in examples.iter().zip(&rows) {
            assert_eq!(model.predict(&ex.features).unwrap(), row.1);
        }
        // Positive-class margins are positive, negative-class negative.
        for (ex, row) in examples.iter().zip(&rows) {
            let margin = model.score(&ex.features).unwrap();
            assert_eq!(margin > 0.0, row.1 == 1);
        }
    }

    #[test]
    fn same_seed_reproduces_the_exact_model() {
        let rows = separable_rows();
        let examples = examples_from_rows::<f64>(NAMES, &rows);
        let params = SvmParams { seed: 42, ..Default::default() };
        let a = train_svm(&examples, &params).unwrap();
        let b = train_svm(&examples, &params).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn different_seeds_visit_examples_in_different_orders() {
        let rows = separable_rows();
        let examples = examples_from_rows::<f64>(NAMES, &rows);
        let a = train_svm(&examples, &SvmParams { seed: 1, epochs: 2, ..Default::default() })
            .unwrap();
        let b = train_svm(&examples, &SvmParams { seed: 2, epochs: 2, ..Default::default() })
            .unwrap();
        // The trajectories differ, so the learned weights do too (the
        // decision boundary still agrees on the training data).
        assert_ne!(a, b);
    }

    #[test]
    fn scaling_weights_preserves_the_induced_ordering() {
        let rows = separable_rows();
        let examples = examples_from_rows::<f64>(NAMES, &rows);
        let model = train_svm(&examples, &SvmParams::default()).unwrap();
        let ModelParams::Svm { weights, bias } = &model.params else {
            panic!("wrong params kind")
        };
        let scaled = TrainedModel {
            standardizer: model.standardizer.clone(),
            params: ModelParams::Svm {
                weights: weights.iter().map(|w| w * 3.5).collect(),
                bias: bias * 3.5,
            },
        };
        let mut scores: Vec<(usize, f64, f64)> = examples
            .iter()
            .enumerate()
            .map(|(i, ex)| {
                (
                    i,
                    model.score(&ex.features).unwrap(),
                    scaled.score(&ex.features).unwrap(),
                )
            })
            .collect();
        let mut by_original = scores.clone();
        by_original.sort_by(|a, b| b.1.partial_cmp(&a.1).unwrap());
        scores.sort_by(|a, b| b.2.partial_cmp(&a.2).unwrap());
        let original_order: Vec<usize> = by_original.iter().map(|s| s.0).collect();
        let scaled_order: Vec<usize> = scores.iter().map(|s| s.0).collect();
        assert_eq!(original_order, scaled_order);
    }

    #[test]
    fn invalid_hyperparameters_are_rejected() {
        let rows = separable_rows();
        let examples = examples_from_rows::<f64>(NAMES, &rows);
        for params in [
            SvmParams { l2: 0.0, ..Default::default() },
            SvmParams { l2: -0.1, ..Default::default() },
            SvmParams { epochs: 0, ..Default::default() },
        ] {
            assert!(matches!(
                train_svm(&examples, &params),
                Err(ModelError::InvalidHyperparams(_))
            ));
        }
    }
}
