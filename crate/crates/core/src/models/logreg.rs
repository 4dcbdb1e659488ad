//! Binary logistic regression trained with full-batch gradient descent.
//!
//! The objective is mean log-loss plus an L2 penalty on the weights (the
//! bias is not penalized):
//!
//! ```text
//! J(w, b) = (1/n) Σᵢ ℓ(zᵢ, yᵢ) + (λ/2) ‖w‖²,   zᵢ = w·xᵢ + b
//! ```
//!
//! with `ℓ(z, y) = max(z, 0) − y·z + ln(1 + e^(−|z|))`, the numerically
//! stable form of `−y ln σ(z) − (1−y) ln(1−σ(z))`. Optimization starts
//! from all-zero weights and stops after `max_iters` steps or when
//! consecutive losses differ by less than `tol`.

use crate::features::LabeledExample;
use crate::Scalar;

use super::{prepare, sigmoid, LogRegParams, ModelError, ModelParams, TrainedModel};

/// Mean regularized log-loss and its gradient at `weights`.
///
/// `weights` holds the feature weights followed by the bias as the final
/// element. Features are used exactly as given — callers are responsible
/// for any standardization. Exposed so the analytic gradient can be
/// checked against finite differences.
pub fn loss_and_gradient<S: Scalar>(
    weights: &[S],
    examples: &[LabeledExample<S>],
    l2: S,
) -> (S, Vec<S>) {
    let d = weights.len() - 1;
    let n = S::cast(examples.len());
    let (w, b) = (&weights[..d], weights[d]);
    let mut loss = S::zero();
    let mut grad = vec![S::zero(); d + 1];
    for ex in examples {
        let x = ex.features.values();
        let z = w
            .iter()
            .zip(x)
            .map(|(&wj, &xj)| wj * xj)
            .fold(S::zero(), |acc, v| acc + v)
            + b;
        let y = S::cast(ex.label);
        loss = loss + z.max(S::zero()) - y * z + (-z.abs()).exp().ln_1p();
        let delta = sigmoid(z) - y;
        for (g, &xj) in grad[..d].iter_mut().zip(x) {
            *g = *g + delta * xj;
        }
        grad[d] = grad[d] + delta;
    }
    loss = loss / n;
    for g in grad.iter_mut() {
        *g = *g / n;
    }
    let half = S::cast(0.5);
    for (g, &wj) in grad[..d].iter_mut().zip(w) {
        *g = *g + l2 * wj;
        loss = loss + half * l2 * wj * wj;
    }
    (loss, grad)
}

fn validate(params: &LogRegParams) -> Result<(), ModelError> {
    let bad = |msg: &str| Err(ModelError::InvalidHyperparams(msg.to_string()));
    if !(params.learning_rate.is_finite() && params.learning_rate > 0.0) {
        return bad("learning_rate must be positive and finite");
    }
    if !(params.l2.is_finite() && params.l2 >= 0.0) {
        return bad("l2 must be non-negative and finite");
    }
    if params.max_iters == 0 {
        return bad("max_iters must be at least 1");
    }
    if !(params.tol.is_finite() && params.tol >= 0.0) {
        return bad("tol must be non-negative and finite");
    }
    Ok(())
}

/// Trains logistic regression and returns the loss at the start of every
/// accepted iteration alongside the model.
pub fn train_logreg_traced<S: Scalar>(
    examples: &[LabeledExample<S>],
    params: &LogRegParams,
) -> Result<(TrainedModel<S>, Vec<S>), ModelError> {
    validate(params)?;
    let (standardizer, rows, labels) = prepare(examples)?;
    let standardized: Vec<LabeledExample<S>> = examples
        .iter()
        .zip(rows)
        .zip(&labels)
        .map(|((ex, values), &label)| LabeledExample {
            key: ex.key.clone(),
            features: crate::features::FeatureVector::new(ex.features.names(), values),
            label,
        })
        .collect();

    let d = standardized[0].features.values().len();
    let lr = S::cast(params.learning_rate);
    let l2 = S::cast(params.l2);
    let tol = S::cast(params.tol);
    let mut weights = vec![S::zero(); d + 1];
    let mut trace = Vec::new();
    let mut previous: Option<S> = None;
    for iter in 0..params.max_iters {
        let (loss, grad) = loss_and_gradient(&weights, &standardized, l2);
        if !loss.is_finite() {
            return Err(ModelError::NonFiniteLoss(iter));
        }
        trace.push(loss);
        for (w, g) in weights.iter_mut().zip(&grad) {
            *w = *w - lr * *g;
        }
        if let Some(prev) = previous {
            if (prev - loss).abs() < tol {
                break;
            }
        }
        previous = Some(loss);
    }
    let bias = weights.pop().expect("bias slot");
    Ok((
        TrainedModel {
            standardizer,
            params: ModelParams::Logreg { weights, bias },
        },
        trace,
    ))
}

/// Trains logistic regression with the default trace discarded.
pub fn train_logreg<S: Scalar>(
    examples: &[LabeledExample<S>],
    params: &LogRegParams,
) -> Result<TrainedModel<S>, ModelError> {
    train_logreg_traced(examples, params).map(|(model, _)| model)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::features::FeatureVector;
    use crate::models::test_support::examples_from_rows;

    const NAMES: &[&str] = &["a", "b", "c"];

    fn fixed_examples() -> Vec<LabeledExample<f64>> {
        let rows = vec![
            (vec![0.5, -1.2, 2.0], 1u8),
            (vec![-0.3, 0.8, -1.5], 0),
            (vec![1.7, 0.1, 0.4], 1),
            (vec![-1.1, -0.6, 0.9], 0),
            (vec![0.2, 1.4, -0.7], 1),
            (vec![0.9, -0.4, -1.9], 0),
        ];
        examples_from_rows(NAMES, &rows)
    }

    /// Central finite differences around a non-trivial point agree with
    /// the analytic gradient to high precision.
    #[test]
    fn gradient_matches_finite_differences() {
        let examples = fixed_examples();
        let l2 = 0.01;
        let weights = vec![0.17, -0.42, 0.31, 0.05];
        let (_, grad) = loss_and_gradient(&weights, &examples, l2);
        let eps = 1e-6;
        for j in 0..weights.len() {
            let mut plus = weights.clone();
            plus[j] += eps;
            let mut minus = weights.clone();
            minus[j] -= eps;
            let (lp, _) = loss_and_gradient(&plus, &examples, l2);
            let (lm, _) = loss_and_gradient(&minus, &examples, l2);
            let fd = (lp - lm) / (2.0 * eps);
            assert!(
                (grad[j] - fd).abs() <= 1e-7 * (1.0 + fd.abs()),
                "component {j}: analytic {} vs finite-difference {fd}",
                grad[j]
            );
        }
    }

    #[test]
    fn loss_at_zero_weights_is_ln_two() {
        let examples = fixed_examples();
        let (loss, _) = loss_and_gradient(&[0.0, 0.0, 0.0, 0.0], &examples, 0.0);
        assert!((loss - std::f64::consts::LN_2).abs() < 1e-12);
    }

    #[test]
    fn zero_weight_model_scores_one_half() {
        let model = TrainedModel {
            standardizer: crate::features::Standardizer {
                names: vec!["a".to_string(), "b".to_string(), "c".to_string()],
                means: vec![0.0, 0.0, 0.0],
                stds: vec![1.0, 1.0, 1.0],
            },
            params: ModelParams::Logreg { weights: vec![0.0, 0.0, 0.0], bias: 0.0 },
        };
        let v = FeatureVector::new(NAMES, vec![3.0, -2.0, 7.5]);
        assert_eq!(model.score(&v).unwrap(), 0.5);
    }

    #[test]
    fn training_loss_is_non_increasing() {
        let (_, trace) =
            train_logreg_traced(&fixed_examples(), &LogRegParams::default()).unwrap();
        assert!(trace.len() > 2);
        for pair in trace.windows(2) {
            assert!(
                pair[1] <= pair[0] + 1e-12,
                "loss increased: {} -> {}",
                pair[0],
                pair[1]
            );
        }
    }

    #[test]
    fn separable_data_is_fit_perfectly() {
        // y = 1 iff a + b > 0, with a comfortable margin.
        let rows: Vec<(Vec<f64>, u8)> = (0..40)
            .map(|i| {
                let a = if i % 2 == 0 { 1.0 } else { -1.0 };
                let b = a + 0.1 * (i as f64 % 5.0 - 2.0);
                let c = (i as f64 * 0.37).sin();
                (vec![a, b, c], u8::from(a > 0.0))
            })
            .collect();
        let examples = examples_from_rows::<f64>(NAMES, &rows);
        let model = train_logreg(&examples, &LogRegParams::default()).unwrap();
        for (ex, row) in examples.iter().zip(&rows) {
            assert_eq!(model.predict(&ex.features).unwrap(), row.1);
        }
    }

    #[test]
    fn convergence_tolerance_stops_early() {
        let examples = fixed_examples();
        let params = LogRegParams { tol: 1e-3, max_iters: 5000, ..Default::default() };
        let (_, trace) = train_logreg_traced(&examples, &params).unwrap();
        assert!(trace.len() < 5000, "tolerance should trigger before max_iters");
        let last_two = &trace[trace.len() - 2..];
        assert!((last_two[0] - last_two[1]).abs() < 1e-3);
    }

    #[test]
    fn invalid_hyperparameters_are_rejected() {
        let examples = fixed_examples();
        for params in [
            LogRegParams { learning_rate: 0.0, ..Default::default() },
            LogRegParams { learning_rate: f64::NAN, ..Default::default() },
            LogRegParams { l2: -1.0, ..Default::default() },
            LogRegParams { max_iters: 0, ..Default::default() },
        ] {
            assert!(matches!(
                train_logreg(&examples, &params),
                Err(ModelError::InvalidHyperparams(_))
            ));
        }
    }

    #[test]
    fn divergent_learning_rate_reports_non_finite_loss() {
        // An absurd learning rate overshoots until the loss overflows.
        let rows: Vec<(Vec<f64>, u8)> = (0..20)
            .map(|i| {
                let a = if i % 2 == 0 { 1000.0 } else { -1000.0 };
                (vec![a, a, a], u8::from(a > 0.0))
            })
            .collect();
        let examples = examples_from_rows::<f64>(NAMES, &rows);
        let params = LogRegParams {
            learning_rate: 1e300,
            l2: 1e280,
            max_iters: 50,
            tol: 0.0,
        };
        match train_logreg(&examples, &params) {
            Err(ModelError::NonFiniteLoss(_)) => {}
            other => panic!("expected NonFiniteLoss, got {other:?}"),
        }
    }
}
