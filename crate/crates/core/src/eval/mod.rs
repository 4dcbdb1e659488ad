//! Evaluation: classification metrics for Task 1, per-student ranking
//! with MAP@k and a seeded random baseline for Task 2, and the experiment
//! driver that sweeps methods × feature sets × k and writes the report
//! files.
//!
//! Conventions, stated once here and normative everywhere:
//!
//! * Precision and recall are *absent* (not 0) when their denominator is
//!   zero; F1 is 0 whenever precision + recall is 0 or either is absent.
//! * AP@k uses the truncated denominator `min(|relevant|, k)`; students
//!   with no relevant test item have undefined AP and are excluded from
//!   MAP, with the excluded count reported.
//! * The Task-2 candidate set is every opportunity posted in the test
//!   window, ranked in full for every evaluated student.
//! * Score ties rank by ascending opportunity id, so every report is
//!   deterministic.

mod experiment;
mod metrics;
mod ranking;

pub use experiment::{
    run_experiment, run_experiment_with, task1_csv, task2_csv, train_method, write_reports,
    ExperimentConfig, ExperimentOutput, Method, ModelSlot, Task1Row, Task2Row,
};
pub use metrics::{classification_metrics, ClassificationReport, ConfusionCounts};
pub use ranking::{
    average_precision, map_at_k, random_ranker, rank_candidates, RankedList, RankingReport,
};

use thiserror::Error;

use crate::domain::StudentId;
use crate::features::FeatureError;
use crate::models::ModelError;

#[derive(Debug, Error)]
pub enum EvalError {
    #[error("nothing to evaluate: empty input")]
    EmptyEvaluation,
    #[error("labels and predictions differ in length ({labels} vs {predictions})")]
    LengthMismatch { labels: usize, predictions: usize },
    #[error("labels and predictions must be 0 or 1, got {0}")]
    InvalidLabelValue(u8),
    #[error("candidate set is empty")]
    EmptyCandidates,
    #[error("student {0} has no relevant items, so average precision is undefined")]
    EmptyRelevant(StudentId),
    #[error("list size k must be at least 1")]
    InvalidK,
    #[error(
        "unknown method '{0}', expected baseline_majority, baseline_always_positive, \
         logreg, gbt or svm"
    )]
    UnknownMethod(String),
    #[error("invalid experiment config: {0}")]
    InvalidConfig(String),
    #[error(transparent)]
    Feature(#[from] FeatureError),
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error("failed to write report: {0}")]
    Io(#[from] std::io::Error),
}

#[cfg(test)]
pub(crate) mod test_fixture {
    use crate::domain::{
        Application, Course, Dataset, DatasetParts, Enrollment, Faculty, Opportunity,
        StudentRecord, TeachingRecord, Term,
    };

    fn term(year: i32, half: u8) -> Term {
        Term::new(year, half).unwrap()
    }

    /// A hand-sized dataset with activity on both sides of a 2014.1
    /// cutoff: two departments, four courses, six opportunities (three
    /// posted each side of the cutoff) and eight students with varied
    /// histories. Applications exist in both windows so either split
    /// phase has positives.
    pub fn small_dataset() -> Dataset {
        let student = |id: &str, gpa: f64| StudentRecord {
            student_id: id.into(),
            admission_term: term(2012, 1),
            gpa,
        };
        let course = |id: &str, desc: &str, dept: &str, credits: u32| Course {
            course_id: id.into(),
            title: id.to_uppercase(),
            description: desc.to_string(),
            department_id: dept.into(),
            credits,
        };
        let enroll = |s: &str, c: &str, y: i32, h: u8, approved: bool| Enrollment {
            student_id: s.into(),
            course_id: c.into(),
            term: term(y, h),
            approved,
        };
        let teach = |f: &str, c: &str, y: i32, h: u8| TeachingRecord {
            faculty_id: f.into(),
            course_id: c.into(),
            term: term(y, h),
        };
        let opp = |id: &str, text: &str, f: &str, y: i32, h: u8| Opportunity {
            opportunity_id: id.into(),
            abstract_text: text.to_string(),
            faculty_id: f.into(),
            posted_term: term(y, h),
        };
        let apply = |s: &str, o: &str, y: i32, h: u8, accepted: bool| Application {
            student_id: s.into(),
            opportunity_id: o.into(),
            term: term(y, h),
            accepted,
        };

        let parts = DatasetParts {
            students: vec![
                student("s01", 5.2),
                student("s02", 4.1),
                student("s03", 6.0),
                student("s04", 3.3),
                student("s05", 5.8),
                student("s06", 4.9),
                student("s07", 2.7),
                student("s08", 5.0),
            ],
            courses: vec![
                course("c1", "signal processing and linear filters", "d1", 10),
                course("c2", "control theory and feedback signal design", "d1", 8),
                course("c3", "organic chemistry of polymer materials", "d2", 10),
                course("c4", "polymer materials and chemistry lab", "d2", 6),
            ],
            enrollments: vec![
                enroll("s01", "c1", 2012, 2, true),
                enroll("s01", "c2", 2013, 1, true),
                enroll("s02", "c1", 2013, 1, true),
                enroll("s02", "c3", 2013, 2, false),
                enroll("s03", "c3", 2012, 2, true),
                enroll("s03", "c4", 2013, 1, true),
                enroll("s04", "c4", 2013, 2, true),
                enroll("s05", "c1", 2013, 2, true),
                enroll("s05", "c2", 2013, 2, true),
                enroll("s06", "c3", 2013, 1, true),
                enroll("s07", "c2", 2013, 2, false),
                enroll("s08", "c4", 2012, 2, true),
                // Post-cutoff history; must never leak into features.
                enroll("s02", "c2", 2014, 1, true),
                enroll("s07", "c1", 2014, 2, true),
            ],
            teaching: vec![
                teach("f1", "c1", 2012, 2),
                teach("f1", "c1", 2013, 1),
                teach("f1", "c2", 2013, 1),
                teach("f1", "c2", 2013, 2),
                teach("f2", "c3", 2012, 2),
                teach("f2", "c3", 2013, 1),
                teach("f2", "c4", 2013, 1),
                teach("f2", "c4", 2013, 2),
                teach("f2", "c4", 2012, 2),
                teach("f1", "c1", 2014, 2),
                teach("f1", "c2", 2014, 1),
            ],
            faculty: vec![
                Faculty { faculty_id: "f1".into(), department_id: "d1".into() },
                Faculty { faculty_id: "f2".into(), department_id: "d2".into() },
            ],
            opportunities: vec![
                opp("o1", "adaptive signal filters for control", "f1", 2013, 1),
                opp("o2", "polymer chemistry of new materials", "f2", 2013, 1),
                opp("o3", "feedback design for linear systems", "f1", 2013, 2),
                opp("o4", "signal processing for adaptive control", "f1", 2014, 1),
                opp("o5", "new polymer materials chemistry", "f2", 2014, 1),
                opp("o6", "linear feedback signal filters", "f1", 2014, 2),
            ],
            applications: vec![
                apply("s01", "o1", 2013, 1, true),
                apply("s03", "o2", 2013, 1, false),
                apply("s05", "o3", 2013, 2, true),
                apply("s01", "o4", 2014, 1, true),
                apply("s01", "o6", 2014, 2, false),
                apply("s03", "o5", 2014, 1, true),
                apply("s05", "o4", 2014, 1, false),
            ],
            ..DatasetParts::default()
        };
        Dataset::new(parts).expect("fixture is valid")
    }
}
