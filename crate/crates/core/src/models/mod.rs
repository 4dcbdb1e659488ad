//! The four classifiers: constant baselines, logistic regression,
//! gradient-boosted trees and a linear SVM — all trained from first
//! principles on [`LabeledExample`] lists.
//!
//! Every trainer fits a [`Standardizer`] on its training examples and
//! stores it in the returned model, so models score *raw* feature vectors
//! and carry their own preprocessing. Scores are comparable within a
//! model: probabilities for the constant, logistic-regression and boosted
//! models, signed margins for the SVM (its default decision threshold is
//! 0 instead of 0.5).
//!
//! Models serialize to a small self-describing JSON file; see
//! `docs/model-format.md` at the repository root.

use std::fs;
use std::path::Path;

use serde::{de::DeserializeOwned, Deserialize, Serialize};
use thiserror::Error;

use crate::features::{fit_standardizer, FeatureVector, LabeledExample, Standardizer};
use crate::Scalar;

pub mod gbt;
pub mod logreg;
pub mod svm;

pub use gbt::{train_gbt, train_gbt_traced, Tree, TreeNode};
pub use logreg::{loss_and_gradient, train_logreg, train_logreg_traced};
pub use svm::train_svm;

/// Magic string identifying model files.
pub const MODEL_FORMAT_MAGIC: &str = "resopp-model";
/// Format version this build reads and writes.
pub const MODEL_FORMAT_VERSION: u32 = 1;

#[derive(Debug, Error)]
pub enum ModelError {
    #[error("cannot train on zero examples")]
    EmptyTrainingSet,
    #[error("training labels must be 0 or 1, found {0}")]
    InvalidLabel(u8),
    #[error("invalid hyperparameters: {0}")]
    InvalidHyperparams(String),
    #[error("training loss became non-finite at iteration {0}")]
    NonFiniteLoss(usize),
    #[error("weights became non-finite during epoch {0}")]
    NonFiniteWeights(usize),
    #[error("feature names disagree: model expects [{expected}], got [{got}]")]
    FeatureNameMismatch { expected: String, got: String },
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error("not a readable model file: {0}")]
    Format(String),
    #[error("unsupported model format version {0} (this build reads {MODEL_FORMAT_VERSION})")]
    UnsupportedVersion(u32),
}

/// Logistic-regression training parameters (full-batch gradient descent).
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct LogRegParams {
    pub learning_rate: f64,
    pub l2: f64,
    pub max_iters: usize,
    /// Stop when consecutive losses differ by less than this.
    pub tol: f64,
}

impl Default for LogRegParams {
    fn default() -> Self {
        LogRegParams { learning_rate: 0.1, l2: 1e-4, max_iters: 500, tol: 1e-8 }
    }
}

/// Gradient-boosted-trees training parameters.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GbtParams {
    pub n_trees: usize,
    pub max_depth: usize,
    pub learning_rate: f64,
    /// Minimum number of training samples in each side of a split.
    pub min_leaf: usize,
}

impl Default for GbtParams {
    fn default() -> Self {
        GbtParams { n_trees: 100, max_depth: 3, learning_rate: 0.1, min_leaf: 5 }
    }
}

/// Linear-SVM training parameters (Pegasos stochastic subgradient).
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SvmParams {
    pub l2: f64,
    pub epochs: usize,
    /// Seed for the per-epoch example shuffle.
    pub seed: u64,
}

impl Default for SvmParams {
    fn default() -> Self {
        SvmParams { l2: 1e-4, epochs: 20, seed: 0 }
    }
}

/// All tunable training parameters, grouped for config files.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Hyperparams {
    pub logreg: LogRegParams,
    pub gbt: GbtParams,
    pub svm: SvmParams,
}

/// What a constant baseline predicts.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ConstantMode {
    /// Score 1 if positives outnumber negatives in training, else 0
    /// (ties go to 0).
    MajorityClass,
    /// Score 1 regardless of the training labels.
    AlwaysPositive,
}

/// Kind-specific learned parameters.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ModelParams<S> {
    Constant { score: S },
    Logreg { weights: Vec<S>, bias: S },
    Svm { weights: Vec<S>, bias: S },
    Gbt { initial_score: S, learning_rate: S, trees: Vec<Tree<S>> },
}

impl<S> ModelParams<S> {
    pub fn kind_name(&self) -> &'static str {
        match self {
            ModelParams::Constant { .. } => "constant",
            ModelParams::Logreg { .. } => "logreg",
            ModelParams::Svm { .. } => "svm",
            ModelParams::Gbt { .. } => "gbt",
        }
    }
}

/// A trained classifier: learned parameters plus the standardizer fitted
/// on its training set. The standardizer's names double as the model's
/// expected feature names.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TrainedModel<S> {
    pub standardizer: Standardizer<S>,
    pub params: ModelParams<S>,
}

/// Numerically safe logistic function.
pub fn sigmoid<S: Scalar>(z: S) -> S {
    if z >= S::zero() {
        S::one() / (S::one() + (-z).exp())
    } else {
        let e = z.exp();
        e / (S::one() + e)
    }
}

fn dot<S: Scalar>(w: &[S], x: &[S]) -> S {
    w.iter().zip(x).map(|(&a, &b)| a * b).fold(S::zero(), |acc, v| acc + v)
}

impl<S: Scalar> TrainedModel<S> {
    pub fn feature_names(&self) -> &[String] {
        &self.standardizer.names
    }

    fn check_names(&self, features: &FeatureVector<S>) -> Result<(), ModelError> {
        let expected = &self.standardizer.names;
        if features.names().len() != expected.len()
            || features.names().iter().zip(expected).any(|(a, b)| a != b)
        {
            return Err(ModelError::FeatureNameMismatch {
                expected: expected.join(", "),
                got: features.names().join(", "),
            });
        }
        Ok(())
    }

    /// Scores a raw feature vector: a probability for probabilistic kinds,
    /// a signed margin for the SVM.
    pub fn score(&self, features: &FeatureVector<S>) -> Result<S, ModelError> {
        self.check_names(features)?;
        let z = self.standardizer.transform_values(features.values());
        Ok(match &self.params {
            ModelParams::Constant { score } => *score,
            ModelParams::Logreg { weights, bias } => sigmoid(dot(weights, &z) + *bias),
            ModelParams::Svm { weights, bias } => dot(weights, &z) + *bias,
            ModelParams::Gbt { initial_score, learning_rate, trees } => {
                let sum = trees
                    .iter()
                    .map(|t| t.eval(&z))
                    .fold(S::zero(), |acc, v| acc + v);
                sigmoid(*initial_score + *learning_rate * sum)
            }
        })
    }

    /// The natural decision threshold for this model's score scale.
    pub fn default_threshold(&self) -> S {
        match self.params {
            ModelParams::Svm { .. } => S::zero(),
            _ => S::cast(0.5),
        }
    }

    /// Predicts 1 when the score strictly exceeds the default threshold.
    pub fn predict(&self, features: &FeatureVector<S>) -> Result<u8, ModelError> {
        self.predict_with_threshold(features, self.default_threshold())
    }

    pub fn predict_with_threshold(
        &self,
        features: &FeatureVector<S>,
        threshold: S,
    ) -> Result<u8, ModelError> {
        Ok(u8::from(self.score(features)? > threshold))
    }
}

#[derive(Serialize, Deserialize)]
struct ModelFile<S> {
    format: String,
    version: u32,
    model: TrainedModel<S>,
}

#[derive(Deserialize)]
struct ModelFileHeader {
    format: String,
    version: u32,
}

impl<S: Scalar + Serialize + DeserializeOwned> TrainedModel<S> {
    pub fn to_json(&self) -> String {
        let file = ModelFile {
            format: MODEL_FORMAT_MAGIC.to_string(),
            version: MODEL_FORMAT_VERSION,
            model: self.clone(),
        };
        let mut json = serde_json::to_string_pretty(&file).expect("model serialization");
        json.push('\n');
        json
    }

    pub fn from_json(json: &str) -> Result<TrainedModel<S>, ModelError> {
        let header: ModelFileHeader =
            serde_json::from_str(json).map_err(|e| ModelError::Format(e.to_string()))?;
        if header.format != MODEL_FORMAT_MAGIC {
            return Err(ModelError::Format(format!(
                "magic is '{}', expected '{MODEL_FORMAT_MAGIC}'",
                header.format
            )));
        }
        if header.version != MODEL_FORMAT_VERSION {
            return Err(ModelError::UnsupportedVersion(header.version));
        }
        let file: ModelFile<S> =
            serde_json::from_str(json).map_err(|e| ModelError::Format(e.to_string()))?;
        Ok(file.model)
    }

    pub fn save(&self, path: &Path) -> Result<(), ModelError> {
        Ok(fs::write(path, self.to_json())?)
    }

    pub fn load(path: &Path) -> Result<TrainedModel<S>, ModelError> {
        TrainedModel::from_json(&fs::read_to_string(path)?)
    }
}

/// Shared trainer preamble: reject empty sets and non-binary labels, fit
/// the standardizer, and hand back standardized value rows plus labels.
fn prepare<S: Scalar>(
    examples: &[LabeledExample<S>],
) -> Result<(Standardizer<S>, Vec<Vec<S>>, Vec<u8>), ModelError> {
    if examples.is_empty() {
        return Err(ModelError::EmptyTrainingSet);
    }
    if let Some(bad) = examples.iter().find(|e| e.label > 1) {
        return Err(ModelError::InvalidLabel(bad.label));
    }
    let standardizer = fit_standardizer(examples).map_err(|_| ModelError::EmptyTrainingSet)?;
    let rows = examples
        .iter()
        .map(|e| standardizer.transform_values(e.features.values()))
        .collect();
    let labels = examples.iter().map(|e| e.label).collect();
    Ok((standardizer, rows, labels))
}

/// Trains a constant baseline.
pub fn train_constant<S: Scalar>(
    examples: &[LabeledExample<S>],
    mode: ConstantMode,
) -> Result<TrainedModel<S>, ModelError> {
    let (standardizer, _, labels) = prepare(examples)?;
    let positives = labels.iter().filter(|&&l| l == 1).count();
    let negatives = labels.len() - positives;
    let score = match mode {
        ConstantMode::AlwaysPositive => S::one(),
        ConstantMode::MajorityClass => {
            if positives > negatives {
                S::one()
            } else {
                S::zero()
            }
        }
    };
    Ok(TrainedModel { standardizer, params: ModelParams::Constant { score } })
}
