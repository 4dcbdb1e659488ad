//! The experiment driver: trains every configured (task, method,
//! feature-set) combination on the training side of a temporal split,
//! evaluates on the test side, and writes the report files.
//!
//! Task-2 evaluation ranks the full test-window catalog for every
//! student who applied to at least one of those opportunities; everyone
//! else is excluded (their average precision is undefined) and counted
//! in the manifest. The random baseline draws one seeded shuffle per
//! student and is shared by every (method, feature-set) row, so ratio
//! columns across a report compare against the same draw.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::fs;
use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use super::metrics::{classification_metrics, ClassificationReport};
use super::ranking::{random_ranker, rank_candidates, RankedList, RankingReport};
use super::EvalError;
use crate::domain::{Dataset, OpportunityId, StudentId, Term};
use crate::features::{
    build_task1_examples, build_task2_examples, build_text_context, temporal_split,
    FeatureSetId, LabeledExample, Level, Task, TextConfig,
};
use crate::models::{
    train_constant, train_gbt, train_logreg, train_svm, ConstantMode, Hyperparams,
    ModelError, TrainedModel,
};
use crate::{rng, Scalar, Value};

/// Substream tag for the per-student random-baseline seeds.
const RANDOM_BASELINE_TAG: u64 = 0x7262_6173;

/// A training method. `baseline_majority` predicts the most common
/// training label; `baseline_always_positive` predicts 1 regardless.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord)]
pub enum Method {
    BaselineMajority,
    BaselineAlwaysPositive,
    LogReg,
    Gbt,
    Svm,
}

impl Method {
    pub const ALL: [Method; 5] = [
        Method::BaselineMajority,
        Method::BaselineAlwaysPositive,
        Method::LogReg,
        Method::Gbt,
        Method::Svm,
    ];

    pub fn label(self) -> &'static str {
        match self {
            Method::BaselineMajority => "baseline_majority",
            Method::BaselineAlwaysPositive => "baseline_always_positive",
            Method::LogReg => "logreg",
            Method::Gbt => "gbt",
            Method::Svm => "svm",
        }
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.label())
    }
}

impl FromStr for Method {
    type Err = EvalError;

    fn from_str(s: &str) -> Result<Method, EvalError> {
        // The bare alias maps to the literal reading of "baseline": the
        // majority class.
        if s == "baseline" {
            return Ok(Method::BaselineMajority);
        }
        Method::ALL
            .into_iter()
            .find(|m| m.label() == s)
            .ok_or_else(|| EvalError::UnknownMethod(s.to_string()))
    }
}

impl Serialize for Method {
    fn serialize<Se: serde::Serializer>(&self, serializer: Se) -> Result<Se::Ok, Se::Error> {
        serializer.serialize_str(self.label())
    }
}

impl<'de> Deserialize<'de> for Method {
    fn deserialize<D: serde::Deserializer<'de>>(deserializer: D) -> Result<Method, D::Error> {
        let s = String::deserialize(deserializer)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

/// Trains one method on prepared examples.
pub fn train_method<S: Scalar>(
    method: Method,
    examples: &[LabeledExample<S>],
    hyper: &Hyperparams,
) -> Result<TrainedModel<S>, ModelError> {
    match method {
        Method::BaselineMajority => train_constant(examples, ConstantMode::MajorityClass),
        Method::BaselineAlwaysPositive => {
            train_constant(examples, ConstantMode::AlwaysPositive)
        }
        Method::LogReg => train_logreg(examples, &hyper.logreg),
        Method::Gbt => train_gbt(examples, &hyper.gbt),
        Method::Svm => train_svm(examples, &hyper.svm),
    }
}

/// Identifies one trained model within a run.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Serialize)]
pub struct ModelSlot {
    pub task: Task,
    pub method: Method,
    pub level: Level,
}

impl ModelSlot {
    /// Canonical model file name, e.g. `task2_logreg_base_plus.json`.
    pub fn file_name(&self) -> String {
        format!("task{}_{}_{}.json", self.task.number(), self.method.label(), self.level.slug())
    }
}

/// Everything a sweep needs: the split cutoff, which tasks/methods/
/// feature sets to run, the k grid and negative-sampling ratio for
/// Task 2, the master seed, and the training hyperparameters.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentConfig {
    pub cutoff: Term,
    pub tasks: Vec<Task>,
    pub methods: Vec<Method>,
    pub task1_levels: Vec<Level>,
    pub task2_levels: Vec<Level>,
    pub k_grid: Vec<usize>,
    /// Negatives sampled per Task-2 positive during training.
    pub neg_ratio: f64,
    pub seed: u64,
    pub hyper: Hyperparams,
    pub text: TextConfig,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        ExperimentConfig {
            cutoff: Term::new(2014, 1).expect("valid term"),
            tasks: vec![Task::One, Task::Two],
            methods: Method::ALL.to_vec(),
            task1_levels: Level::ALL.to_vec(),
            task2_levels: Level::ALL.to_vec(),
            k_grid: vec![5, 10, 20, 50],
            neg_ratio: 3.0,
            seed: 0,
            hyper: Hyperparams::default(),
            text: TextConfig::default(),
        }
    }
}

/// One Task-1 report row.
#[derive(Clone, Debug, PartialEq)]
pub struct Task1Row {
    pub method: Method,
    pub level: Level,
    pub report: ClassificationReport<Value>,
}

/// One Task-2 report row: MAP@k next to the shared random baseline.
/// `ratio` is absent when the baseline MAP is 0.
#[derive(Clone, Debug, PartialEq)]
pub struct Task2Row {
    pub method: Method,
    pub level: Level,
    pub k: usize,
    pub map: Value,
    pub baseline_map: Value,
    pub ratio: Option<Value>,
}

/// The results of one sweep, plus every model trained along the way
/// (keyed by slot, so callers can save or reuse them).
#[derive(Debug, Default)]
pub struct ExperimentOutput {
    pub task1: Vec<Task1Row>,
    pub task2: Vec<Task2Row>,
    pub n_evaluated_students: usize,
    pub n_excluded_students: usize,
    pub warnings: Vec<String>,
    pub models: BTreeMap<ModelSlot, TrainedModel<Value>>,
}

impl ExperimentConfig {
    /// Rejects selections that cannot produce a meaningful sweep.
    pub fn validate(&self) -> Result<(), EvalError> {
        let fail = |message: &str| Err(EvalError::InvalidConfig(message.to_string()));
        if self.tasks.is_empty() {
            return fail("no tasks selected");
        }
        if self.methods.is_empty() {
            return fail("no methods selected");
        }
        if self.tasks.contains(&Task::One) && self.task1_levels.is_empty() {
            return fail("task 1 selected but task1_levels is empty");
        }
        if self.tasks.contains(&Task::Two) {
            if self.task2_levels.is_empty() {
                return fail("task 2 selected but task2_levels is empty");
            }
            if self.k_grid.is_empty() {
                return fail("task 2 selected but k_grid is empty");
            }
            if self.k_grid.contains(&0) {
                return fail("k_grid entries must be at least 1");
            }
            if !self.neg_ratio.is_finite() || self.neg_ratio <= 0.0 {
                return fail("neg_ratio must be a positive finite number");
            }
        }
        Ok(())
    }
}

/// Runs a full sweep, training every model from scratch.
pub fn run_experiment(
    dataset: &Dataset,
    config: &ExperimentConfig,
) -> Result<ExperimentOutput, EvalError> {
    run_experiment_with(dataset, config, &BTreeMap::new())
}

/// Runs a full sweep, but takes any model whose slot appears in
/// `prebuilt` as-is instead of training it — the evaluate-without-
/// retraining path.
pub fn run_experiment_with(
    dataset: &Dataset,
    config: &ExperimentConfig,
    prebuilt: &BTreeMap<ModelSlot, TrainedModel<Value>>,
) -> Result<ExperimentOutput, EvalError> {
    config.validate()?;
    let split = temporal_split(dataset, config.cutoff);
    let mut out = ExperimentOutput::default();
    out.warnings.extend(split.warnings.iter().cloned());

    if config.tasks.contains(&Task::One) {
        for &level in &config.task1_levels {
            let set = FeatureSetId { task: Task::One, level };
            let train_examples = build_task1_examples::<Value>(&split.train, set);
            let test_examples = build_task1_examples::<Value>(&split.test, set);
            let labels: Vec<u8> = test_examples.iter().map(|e| e.label).collect();
            for &method in &config.methods {
                let slot = ModelSlot { task: Task::One, method, level };
                let model = match prebuilt.get(&slot) {
                    Some(model) => model.clone(),
                    None => train_method(method, &train_examples, &config.hyper)?,
                };
                let mut predictions = Vec::with_capacity(test_examples.len());
                for example in &test_examples {
                    predictions.push(model.predict(&example.features)?);
                }
                let report = classification_metrics(&labels, &predictions)?;
                out.task1.push(Task1Row { method, level, report });
                out.models.insert(slot, model);
            }
        }
    }

    if config.tasks.contains(&Task::Two) {
        let text = build_text_context::<Value>(dataset, config.cutoff, &config.text)?;

        // The candidate catalog and, per student, the relevant subset of
        // it. Students who applied in the test window only to off-catalog
        // opportunities are excluded along with the non-applicants.
        let candidate_ids: Vec<OpportunityId> = split
            .test
            .candidate_opportunities()
            .into_iter()
            .map(|o| dataset.opportunities()[o].opportunity_id.clone())
            .collect();
        let mut applicants: BTreeSet<StudentId> = BTreeSet::new();
        let mut relevant_by_student: BTreeMap<StudentId, BTreeSet<OpportunityId>> =
            BTreeMap::new();
        for row in split.test.applications() {
            let application = &dataset.applications()[row];
            applicants.insert(application.student_id.clone());
            if candidate_ids.binary_search(&application.opportunity_id).is_ok() {
                relevant_by_student
                    .entry(application.student_id.clone())
                    .or_default()
                    .insert(application.opportunity_id.clone());
            }
        }
        let eval_students: Vec<(StudentId, BTreeSet<OpportunityId>)> =
            relevant_by_student.into_iter().collect();
        out.n_evaluated_students = eval_students.len();
        out.n_excluded_students = applicants.len() - eval_students.len();

        if candidate_ids.is_empty() || eval_students.is_empty() {
            out.warnings.push(
                "task 2 skipped: no test-window candidates or no students with relevant \
                 test-window applications"
                    .to_string(),
            );
            return Ok(out);
        }

        let k_max = config.k_grid.iter().copied().max().expect("validated non-empty");
        let baseline_lists: Vec<RankedList<Value>> = eval_students
            .iter()
            .enumerate()
            .map(|(i, (student_id, _))| {
                let seed = rng::derive_seed(config.seed, RANDOM_BASELINE_TAG ^ i as u64);
                random_ranker(student_id, &candidate_ids, seed, k_max)
            })
            .collect();
        let baseline_pairs: Vec<(&RankedList<Value>, &BTreeSet<OpportunityId>)> =
            baseline_lists.iter().zip(&eval_students).map(|(l, (_, r))| (l, r)).collect();
        let baseline = RankingReport::compute(&baseline_pairs, &config.k_grid)?;

        for &level in &config.task2_levels {
            let set = FeatureSetId { task: Task::Two, level };
            let built =
                build_task2_examples(&split.train, &text, set, config.neg_ratio, config.seed)?;
            out.warnings.extend(built.warnings.iter().cloned());
            if built.examples.is_empty() {
                out.warnings.push(format!(
                    "task 2 feature set {} skipped: no training examples before the cutoff",
                    set.label()
                ));
                continue;
            }
            for &method in &config.methods {
                let slot = ModelSlot { task: Task::Two, method, level };
                let model = match prebuilt.get(&slot) {
                    Some(model) => model.clone(),
                    None => train_method(method, &built.examples, &config.hyper)?,
                };
                let mut lists = Vec::with_capacity(eval_students.len());
                for (student_id, _) in &eval_students {
                    lists.push(rank_candidates(
                        &model,
                        &split.test,
                        &text,
                        student_id,
                        &candidate_ids,
                        set,
                        k_max,
                    )?);
                }
                let pairs: Vec<(&RankedList<Value>, &BTreeSet<OpportunityId>)> =
                    lists.iter().zip(&eval_students).map(|(l, (_, r))| (l, r)).collect();
                let report = RankingReport::compute(&pairs, &config.k_grid)?;
                for (slot_i, &(k, map)) in report.map_at_k.iter().enumerate() {
                    let baseline_map = baseline.map_at_k[slot_i].1;
                    out.task2.push(Task2Row {
                        method,
                        level,
                        k,
                        map,
                        baseline_map,
                        ratio: (baseline_map > 0.0).then(|| map / baseline_map),
                    });
                }
                out.models.insert(slot, model);
            }
        }
    }

    Ok(out)
}

fn fmt_opt(value: Option<Value>) -> String {
    value.map(|v| v.to_string()).unwrap_or_default()
}

/// Renders the Task-1 rows as CSV.
pub fn task1_csv(rows: &[Task1Row]) -> String {
    let mut csv = String::from("method,feature_set,accuracy,precision,recall,f1\n");
    for row in rows {
        let set = FeatureSetId { task: Task::One, level: row.level };
        csv.push_str(&format!(
            "{},{},{},{},{},{}\n",
            row.method,
            set.label(),
            row.report.accuracy,
            fmt_opt(row.report.precision),
            fmt_opt(row.report.recall),
            row.report.f1,
        ));
    }
    csv
}

/// Renders the Task-2 rows as CSV.
pub fn task2_csv(rows: &[Task2Row]) -> String {
    let mut csv = String::from("method,feature_set,k,map,baseline_map,ratio\n");
    for row in rows {
        let set = FeatureSetId { task: Task::Two, level: row.level };
        csv.push_str(&format!(
            "{},{},{},{},{},{}\n",
            row.method,
            set.label(),
            row.k,
            row.map,
            row.baseline_map,
            fmt_opt(row.ratio),
        ));
    }
    csv
}

#[derive(Serialize)]
struct ToolStamp {
    name: &'static str,
    version: &'static str,
}

#[derive(Serialize)]
struct RunManifest<'a> {
    tool: ToolStamp,
    config: &'a ExperimentConfig,
    dataset_digest: &'a str,
    n_evaluated_students: usize,
    n_excluded_students: usize,
    warnings: &'a [String],
}

/// Writes `task1_report.csv`, `task2_map.csv` and `manifest.json` into
/// `dir` (created if missing). Contents are a pure function of the
/// inputs — no timestamps — so identical runs write identical bytes.
pub fn write_reports(
    dir: &Path,
    config: &ExperimentConfig,
    dataset_digest: &str,
    output: &ExperimentOutput,
) -> Result<(), EvalError> {
    fs::create_dir_all(dir)?;
    fs::write(dir.join("task1_report.csv"), task1_csv(&output.task1))?;
    fs::write(dir.join("task2_map.csv"), task2_csv(&output.task2))?;
    let manifest = RunManifest {
        tool: ToolStamp { name: env!("CARGO_PKG_NAME"), version: env!("CARGO_PKG_VERSION") },
        config,
        dataset_digest,
        n_evaluated_students: output.n_evaluated_students,
        n_excluded_students: output.n_excluded_students,
        warnings: &output.warnings,
    };
    let mut json = serde_json::to_string_pretty(&manifest).expect("manifest serializes");
    json.push('\n');
    fs::write(dir.join("manifest.json"), json)?;
    Ok(())
}
