//! Gradient-boosted regression trees on the logistic loss.
//!
//! Boosting follows the classic recipe: the initial score is the log-odds
//! of the training base rate, `F₀ = ln(p̄ / (1 − p̄))`; each round fits a
//! depth-limited regression tree to the residuals `y − p` and adds
//! `lr · tree(x)` to the running scores. Leaf values are one-step Newton
//! estimates `Σ(y − p) / Σ p(1 − p)`, with probabilities clipped to
//! `[1e-6, 1 − 1e-6]` wherever a log or a division needs them, and the
//! final value clamped to ±4 so a near-zero curvature estimate cannot
//! catapult the scores.
//!
//! Splits are exhaustive and deterministic: candidates are the midpoints
//! between consecutive distinct sorted feature values (respecting
//! `min_leaf` on both sides), scored by residual variance reduction, with
//! ties broken by (feature index, threshold) order. A node with any valid
//! candidate is split even at zero gain — the gain of an XOR-shaped
//! pattern is zero at the root yet its children split perfectly — and
//! recursion stops on purity, depth or sample count instead.

use serde::{Deserialize, Serialize};

use crate::features::LabeledExample;
use crate::Scalar;

use super::{prepare, sigmoid, GbtParams, ModelError, ModelParams, TrainedModel};

/// One node of a fitted regression tree. Children are indexes into the
/// tree's node list; evaluation sends `x[feature] < threshold` left.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "node", rename_all = "snake_case")]
pub enum TreeNode<S> {
    Split { feature: usize, threshold: S, left: usize, right: usize },
    Leaf { value: S },
}

/// A regression tree; node 0 is the root.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Tree<S> {
    pub nodes: Vec<TreeNode<S>>,
}

impl<S: Scalar> Tree<S> {
    pub fn eval(&self, x: &[S]) -> S {
        let mut node = 0;
        loop {
            match self.nodes[node] {
                TreeNode::Leaf { value } => return value,
                TreeNode::Split { feature, threshold, left, right } => {
                    node = if x[feature] < threshold { left } else { right };
                }
            }
        }
    }
}

fn clamp_prob<S: Scalar>(p: S) -> S {
    let lo = S::cast(1e-6);
    p.max(lo).min(S::one() - lo)
}

const LEAF_VALUE_CAP: f64 = 4.0;

struct TreeBuilder<'a, S> {
    rows: &'a [Vec<S>],
    residuals: &'a [S],
    hessians: &'a [S],
    max_depth: usize,
    min_leaf: usize,
    nodes: Vec<TreeNode<S>>,
}

impl<S: Scalar> TreeBuilder<'_, S> {
    fn leaf(&mut self, indices: &[usize]) -> usize {
        let num: S = indices.iter().map(|&i| self.residuals[i]).sum();
        let den: S = indices.iter().map(|&i| self.hessians[i]).sum();
        let cap = S::cast(LEAF_VALUE_CAP);
        let value = (num / den).max(-cap).min(cap);
        self.nodes.push(TreeNode::Leaf { value });
        self.nodes.len() - 1
    }

    /// Best candidate split of `indices`: highest residual variance
    /// reduction, first (feature, threshold) on ties. `None` when the node
    /// is pure or no candidate satisfies `min_leaf`/distinctness.
    fn best_split(&self, indices: &[usize]) -> Option<(usize, S)> {
        let n = indices.len();
        let first = self.residuals[indices[0]];
        if indices.iter().all(|&i| self.residuals[i] == first) {
            return None;
        }
        let total: S = indices.iter().map(|&i| self.residuals[i]).sum();
        let parent_score = total * total / S::cast(n);
        let width = self.rows[indices[0]].len();
        let mut best: Option<(S, usize, S)> = None;
        let mut sorted: Vec<(S, S)> = Vec::with_capacity(n);
        for feature in 0..width {
            sorted.clear();
            sorted.extend(
                indices
                    .iter()
                    .map(|&i| (self.rows[i][feature], self.residuals[i])),
            );
            sorted.sort_unstable_by(|a, b| a.0.partial_cmp(&b.0).expect("finite feature"));
            let mut left_sum = S::zero();
            for i in 1..n {
                left_sum = left_sum + sorted[i - 1].1;
                if sorted[i - 1].0 == sorted[i].0 {
                    continue;
                }
                if i < self.min_leaf || n - i < self.min_leaf {
                    continue;
                }
                let right_sum = total - left_sum;
                let gain = left_sum * left_sum / S::cast(i)
                    + right_sum * right_sum / S::cast(n - i)
                    - parent_score;
                if best.is_none() || gain > best.expect("checked").0 {
                    let two = S::cast(2);
                    let threshold = (sorted[i - 1].0 + sorted[i].0) / two;
                    best = Some((gain, feature, threshold));
                }
            }
        }
        best.map(|(_, feature, threshold)| (feature, threshold))
    }

    fn build(&mut self, indices: &[usize], depth: usize) -> usize {
        if depth >= self.max_depth {
            return self.leaf(indices);
        }
        let Some((feature, threshold)) = self.best_split(indices) else {
            return self.leaf(indices);
        };
        let left_idx: Vec<usize> = indices
            .iter()
            .copied()
            .filter(|&i| self.rows[i][feature] < threshold)
            .collect();
        let right_idx: Vec<usize> = indices
            .iter()
            .copied()
            .filter(|&i| self.rows[i][feature] >= threshold)
            .collect();
        if left_idx.is_empty() || right_idx.is_empty() {
            // Midpoint collapsed onto a value; nothing separable here.
            return self.leaf(indices);
        }
        let slot = self.nodes.len();
        self.nodes.push(TreeNode::Leaf { value: S::zero() });
        let left = self.build(&left_idx, depth + 1);
        let right = self.build(&right_idx, depth + 1);
        self.nodes[slot] = TreeNode::Split { feature, threshold, left, right };
        slot
    }
}

fn fit_tree<S: Scalar>(
    rows: &[Vec<S>],
    residuals: &[S],
    hessians: &[S],
    params: &GbtParams,
) -> Tree<S> {
    let mut builder = TreeBuilder {
        rows,
        residuals,
        hessians,
        max_depth: params.max_depth,
        min_leaf: params.min_leaf,
        nodes: Vec::new(),
    };
    let indices: Vec<usize> = (0..rows.len()).collect();
    let root = builder.build(&indices, 0);
    debug_assert_eq!(root, 0);
    Tree { nodes: builder.nodes }
}

fn mean_logloss<S: Scalar>(scores: &[S], labels: &[S]) -> S {
    let n = S::cast(scores.len());
    scores
        .iter()
        .zip(labels)
        .map(|(&z, &y)| z.max(S::zero()) - y * z + (-z.abs()).exp().ln_1p())
        .fold(S::zero(), |acc, v| acc + v)
        / n
}

fn validate(params: &GbtParams) -> Result<(), ModelError> {
    let bad = |msg: &str| Err(ModelError::InvalidHyperparams(msg.to_string()));
    if !(params.learning_rate.is_finite() && params.learning_rate > 0.0) {
        return bad("learning_rate must be positive and finite");
    }
    if params.min_leaf == 0 {
        return bad("min_leaf must be at least 1");
    }
    Ok(())
}

/// Trains a boosted-trees model and returns the mean training log-loss
/// after the initial score and after every round.
pub fn train_gbt_traced<S: Scalar>(
    examples: &[LabeledExample<S>],
    params: &GbtParams,
) -> Result<(TrainedModel<S>, Vec<S>), ModelError> {
    validate(params)?;
    let (standardizer, rows, labels) = prepare(examples)?;
    let y: Vec<S> = labels.iter().map(|&l| S::cast(l)).collect();
    let n = y.len();
    let p_bar = clamp_prob(y.iter().copied().fold(S::zero(), |a, v| a + v) / S::cast(n));
    let initial_score = (p_bar / (S::one() - p_bar)).ln();
    let lr = S::cast(params.learning_rate);

    let mut scores = vec![initial_score; n];
    let mut trace = vec![mean_logloss(&scores, &y)];
    let mut trees = Vec::new();
    // With a single label value the initial score is already the optimum;
    // residual trees would only chase the clipping boundary.
    let uniform = labels.iter().all(|&l| l == labels[0]);
    if !uniform {
        let mut residuals = vec![S::zero(); n];
        let mut hessians = vec![S::zero(); n];
        for round in 0..params.n_trees {
            for i in 0..n {
                let p = sigmoid(scores[i]);
                let pc = clamp_prob(p);
                residuals[i] = y[i] - p;
                hessians[i] = pc * (S::one() - pc);
            }
            let tree = fit_tree(&rows, &residuals, &hessians, params);
            for (score, row) in scores.iter_mut().zip(&rows) {
                *score = *score + lr * tree.eval(row);
            }
            trees.push(tree);
            let loss = mean_logloss(&scores, &y);
            if !loss.is_finite() {
                return Err(ModelError::NonFiniteLoss(round));
            }
            trace.push(loss);
        }
    }
    Ok((
        TrainedModel {
            standardizer,
            params: ModelParams::Gbt { initial_score, learning_rate: lr, trees },
        },
        trace,
    ))
}

/// Trains a boosted-trees model, discarding the loss trace.
pub fn train_gbt<S: Scalar>(
    examples: &[LabeledExample<S>],
    params: &GbtParams,
) -> Result<TrainedModel<S>, ModelError> {
    train_gbt_traced(examples, params).map(|(model, _)| model)
}
