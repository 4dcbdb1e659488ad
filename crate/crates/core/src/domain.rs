//! Core data model: students, courses, enrollments, teaching records,
//! faculty, research opportunities and applications, plus the validated
//! [`Dataset`] that ties them together.
//!
//! Construction through [`Dataset::new`] checks referential integrity and
//! the record-level invariants in one pass and reports *every* violation
//! found, not just the first, so a broken CSV export can be fixed in one
//! round trip.

use std::collections::{HashMap, HashSet};
use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Errors from constructing the small value types in this module.
#[derive(Debug, Error, PartialEq, Eq)]
pub enum DomainError {
    #[error("term half must be 1 or 2, got {0}")]
    InvalidHalf(u8),
    #[error("invalid term '{0}', expected YEAR.HALF (e.g. 2014.1)")]
    InvalidTermFormat(String),
}

/// Academic half-year term, totally ordered by `(year, half)`.
///
/// The textual form is `YEAR.HALF`, e.g. `2014.1` for the first half of
/// 2014; serde uses the same form so configs and manifests stay readable
/// and deserialization goes through the same validation as parsing.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Term {
    year: i32,
    half: u8,
}

impl Serialize for Term {
    fn serialize<Se: serde::Serializer>(&self, serializer: Se) -> Result<Se::Ok, Se::Error> {
        serializer.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for Term {
    fn deserialize<D: serde::Deserializer<'de>>(deserializer: D) -> Result<Term, D::Error> {
        let s = String::deserialize(deserializer)?;
        Term::parse(&s).map_err(serde::de::Error::custom)
    }
}

impl Term {
    /// Creates a term; `half` must be 1 or 2.
    pub fn new(year: i32, half: u8) -> Result<Term, DomainError> {
        if half == 1 || half == 2 {
            Ok(Term { year, half })
        } else {
            Err(DomainError::InvalidHalf(half))
        }
    }

    pub fn year(self) -> i32 {
        self.year
    }

    pub fn half(self) -> u8 {
        self.half
    }

    /// The term immediately after this one.
    pub fn next(self) -> Term {
        if self.half == 1 {
            Term { year: self.year, half: 2 }
        } else {
            Term { year: self.year + 1, half: 1 }
        }
    }

    /// Parses the `YEAR.HALF` form, e.g. `2014.1`.
    pub fn parse(s: &str) -> Result<Term, DomainError> {
        let bad = || DomainError::InvalidTermFormat(s.to_string());
        let (year, half) = s.split_once('.').ok_or_else(bad)?;
        let year: i32 = year.parse().map_err(|_| bad())?;
        let half: u8 = half.parse().map_err(|_| bad())?;
        Term::new(year, half).map_err(|_| bad())
    }
}

impl fmt::Display for Term {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}.{}", self.year, self.half)
    }
}

/// True when `a` is strictly earlier than `b`.
pub fn term_before(a: Term, b: Term) -> bool {
    a < b
}

macro_rules! id_type {
    ($(#[$doc:meta])* $name:ident) => {
        $(#[$doc])*
        #[derive(
            Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize,
        )]
        #[serde(transparent)]
        pub struct $name(pub String);

        impl $name {
            pub fn as_str(&self) -> &str {
                &self.0
            }
        }

        impl fmt::Display for $name {
            fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
                f.write_str(&self.0)
            }
        }

        impl From<&str> for $name {
            fn from(s: &str) -> Self {
                $name(s.to_string())
            }
        }
    };
}

id_type!(
    /// Opaque student identifier.
    StudentId
);
id_type!(
    /// Opaque course identifier.
    CourseId
);
id_type!(
    /// Opaque faculty identifier.
    FacultyId
);
id_type!(
    /// Opaque department identifier.
    DepartmentId
);
id_type!(
    /// Opaque research-opportunity identifier.
    OpportunityId
);

/// A student: admission term and grade-point average on the configured
/// scale.
#[derive(Clone, Debug, PartialEq)]
pub struct StudentRecord {
    pub student_id: StudentId,
    pub admission_term: Term,
    pub gpa: f64,
}

/// A course in the catalog. `description` is free text used by the
/// content-similarity features.
#[derive(Clone, Debug, PartialEq)]
pub struct Course {
    pub course_id: CourseId,
    pub title: String,
    pub description: String,
    pub department_id: DepartmentId,
    pub credits: u32,
}

/// One (student, course, term) enrollment; `approved` records whether the
/// student passed.
#[derive(Clone, Debug, PartialEq)]
pub struct Enrollment {
    pub student_id: StudentId,
    pub course_id: CourseId,
    pub term: Term,
    pub approved: bool,
}

/// A faculty member teaching a course in a term.
#[derive(Clone, Debug, PartialEq)]
pub struct TeachingRecord {
    pub faculty_id: FacultyId,
    pub course_id: CourseId,
    pub term: Term,
}

/// A faculty member and their department.
#[derive(Clone, Debug, PartialEq)]
pub struct Faculty {
    pub faculty_id: FacultyId,
    pub department_id: DepartmentId,
}

/// A posted research opportunity: an abstract, the offering faculty member
/// and the term it was posted.
#[derive(Clone, Debug, PartialEq)]
pub struct Opportunity {
    pub opportunity_id: OpportunityId,
    pub abstract_text: String,
    pub faculty_id: FacultyId,
    pub posted_term: Term,
}

/// A student applying to an opportunity in a term; `accepted` records the
/// outcome.
#[derive(Clone, Debug, PartialEq)]
pub struct Application {
    pub student_id: StudentId,
    pub opportunity_id: OpportunityId,
    pub term: Term,
    pub accepted: bool,
}

/// Inclusive GPA scale bounds; grades outside the scale are integrity
/// violations.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct GpaScale {
    pub min: f64,
    pub max: f64,
}

impl Default for GpaScale {
    fn default() -> Self {
        GpaScale { min: 1.0, max: 7.0 }
    }
}

impl GpaScale {
    pub fn contains(&self, gpa: f64) -> bool {
        gpa.is_finite() && gpa >= self.min && gpa <= self.max
    }
}

/// The record table a violation points into; also names the CSV file the
/// table is stored as.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum RecordKind {
    Students,
    Courses,
    Enrollments,
    Teaching,
    Faculty,
    Opportunities,
    Applications,
}

impl RecordKind {
    pub const ALL: [RecordKind; 7] = [
        RecordKind::Students,
        RecordKind::Courses,
        RecordKind::Enrollments,
        RecordKind::Teaching,
        RecordKind::Faculty,
        RecordKind::Opportunities,
        RecordKind::Applications,
    ];

    /// Canonical file name of the table in a dataset directory.
    pub fn file_name(self) -> &'static str {
        match self {
            RecordKind::Students => "students.csv",
            RecordKind::Courses => "courses.csv",
            RecordKind::Enrollments => "enrollments.csv",
            RecordKind::Teaching => "teaching.csv",
            RecordKind::Faculty => "faculty.csv",
            RecordKind::Opportunities => "opportunities.csv",
            RecordKind::Applications => "applications.csv",
        }
    }
}

impl fmt::Display for RecordKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.file_name())
    }
}

/// One broken invariant found while constructing a [`Dataset`]: the table,
/// the zero-based row within it, and what is wrong.
#[derive(Clone, Debug, PartialEq)]
pub struct IntegrityViolation {
    pub record: RecordKind,
    pub row: usize,
    pub message: String,
}

impl fmt::Display for IntegrityViolation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} row {}: {}", self.record, self.row, self.message)
    }
}

/// Plain bundle of record tables handed to [`Dataset::new`].
#[derive(Clone, Debug, Default)]
pub struct DatasetParts {
    pub students: Vec<StudentRecord>,
    pub courses: Vec<Course>,
    pub enrollments: Vec<Enrollment>,
    pub teaching: Vec<TeachingRecord>,
    pub faculty: Vec<Faculty>,
    pub opportunities: Vec<Opportunity>,
    pub applications: Vec<Application>,
    pub gpa_scale: GpaScale,
}

/// A validated, immutable snapshot of the seven record tables with lookup
/// indexes.
///
/// Invariants guaranteed after construction:
///
/// * all identifiers within a table are unique;
/// * every foreign key resolves (enrollments and teaching to students,
///   courses and faculty; opportunities to faculty; applications to
///   students and opportunities);
/// * no duplicate (student, course, term) enrollment, (faculty, course,
///   term) teaching record or (student, opportunity) application;
/// * GPAs lie within the configured scale, credits are positive, course
///   descriptions are non-blank and opportunity abstracts non-empty;
/// * applications are never earlier than the opportunity's posted term.
#[derive(Clone, Debug)]
pub struct Dataset {
    students: Vec<StudentRecord>,
    courses: Vec<Course>,
    enrollments: Vec<Enrollment>,
    teaching: Vec<TeachingRecord>,
    faculty: Vec<Faculty>,
    opportunities: Vec<Opportunity>,
    applications: Vec<Application>,
    gpa_scale: GpaScale,
    student_index: HashMap<StudentId, usize>,
    course_index: HashMap<CourseId, usize>,
    faculty_index: HashMap<FacultyId, usize>,
    opportunity_index: HashMap<OpportunityId, usize>,
    enrollments_by_student: Vec<Vec<usize>>,
    applications_by_student: Vec<Vec<usize>>,
    teachers_by_course_term: HashMap<(usize, Term), Vec<usize>>,
}

impl PartialEq for Dataset {
    fn eq(&self, other: &Self) -> bool {
        self.students == other.students
            && self.courses == other.courses
            && self.enrollments == other.enrollments
            && self.teaching == other.teaching
            && self.faculty == other.faculty
            && self.opportunities == other.opportunities
            && self.applications == other.applications
            && self.gpa_scale == other.gpa_scale
    }
}

impl Dataset {
    /// Validates `parts` and builds the lookup indexes. On failure returns
    /// every violation found.
    pub fn new(parts: DatasetParts) -> Result<Dataset, Vec<IntegrityViolation>> {
        let mut violations = Vec::new();
        let mut fault = |record: RecordKind, row: usize, message: String| {
            violations.push(IntegrityViolation { record, row, message });
        };

        let mut student_index = HashMap::new();
        for (row, s) in parts.students.iter().enumerate() {
            if student_index.insert(s.student_id.clone(), row).is_some() {
                fault(
                    RecordKind::Students,
                    row,
                    format!("duplicate student_id '{}'", s.student_id),
                );
            }
            if !parts.gpa_scale.contains(s.gpa) {
                fault(
                    RecordKind::Students,
                    row,
                    format!(
                        "gpa {} outside scale [{}, {}]",
                        s.gpa, parts.gpa_scale.min, parts.gpa_scale.max
                    ),
                );
            }
        }

        let mut course_index = HashMap::new();
        for (row, c) in parts.courses.iter().enumerate() {
            if course_index.insert(c.course_id.clone(), row).is_some() {
                fault(
                    RecordKind::Courses,
                    row,
                    format!("duplicate course_id '{}'", c.course_id),
                );
            }
            if c.description.trim().is_empty() {
                fault(
                    RecordKind::Courses,
                    row,
                    format!("course '{}' has a blank description", c.course_id),
                );
            }
            if c.credits == 0 {
                fault(
                    RecordKind::Courses,
                    row,
                    format!("course '{}' has zero credits", c.course_id),
                );
            }
        }

        let mut faculty_index = HashMap::new();
        for (row, f) in parts.faculty.iter().enumerate() {
            if faculty_index.insert(f.faculty_id.clone(), row).is_some() {
                fault(
                    RecordKind::Faculty,
                    row,
                    format!("duplicate faculty_id '{}'", f.faculty_id),
                );
            }
        }

        let mut opportunity_index = HashMap::new();
        for (row, o) in parts.opportunities.iter().enumerate() {
            if opportunity_index
                .insert(o.opportunity_id.clone(), row)
                .is_some()
            {
                fault(
                    RecordKind::Opportunities,
                    row,
                    format!("duplicate opportunity_id '{}'", o.opportunity_id),
                );
            }
            if o.abstract_text.is_empty() {
                fault(
                    RecordKind::Opportunities,
                    row,
                    format!("opportunity '{}' has an empty abstract", o.opportunity_id),
                );
            }
            if !faculty_index.contains_key(&o.faculty_id) {
                fault(
                    RecordKind::Opportunities,
                    row,
                    format!(
                        "opportunity '{}' references unknown faculty '{}'",
                        o.opportunity_id, o.faculty_id
                    ),
                );
            }
        }

        let mut seen_enrollments = HashSet::new();
        for (row, e) in parts.enrollments.iter().enumerate() {
            if !student_index.contains_key(&e.student_id) {
                fault(
                    RecordKind::Enrollments,
                    row,
                    format!("enrollment references unknown student '{}'", e.student_id),
                );
            }
            if !course_index.contains_key(&e.course_id) {
                fault(
                    RecordKind::Enrollments,
                    row,
                    format!("enrollment references unknown course '{}'", e.course_id),
                );
            }
            if !seen_enrollments.insert((e.student_id.clone(), e.course_id.clone(), e.term)) {
                fault(
                    RecordKind::Enrollments,
                    row,
                    format!(
                        "duplicate enrollment ({}, {}, {})",
                        e.student_id, e.course_id, e.term
                    ),
                );
            }
        }

        let mut seen_teaching = HashSet::new();
        for (row, t) in parts.teaching.iter().enumerate() {
            if !faculty_index.contains_key(&t.faculty_id) {
                fault(
                    RecordKind::Teaching,
                    row,
                    format!("teaching record references unknown faculty '{}'", t.faculty_id),
                );
            }
            if !course_index.contains_key(&t.course_id) {
                fault(
                    RecordKind::Teaching,
                    row,
                    format!("teaching record references unknown course '{}'", t.course_id),
                );
            }
            if !seen_teaching.insert((t.faculty_id.clone(), t.course_id.clone(), t.term)) {
                fault(
                    RecordKind::Teaching,
                    row,
                    format!(
                        "duplicate teaching record ({}, {}, {})",
                        t.faculty_id, t.course_id, t.term
                    ),
                );
            }
        }

        let mut seen_applications = HashSet::new();
        for (row, a) in parts.applications.iter().enumerate() {
            if !student_index.contains_key(&a.student_id) {
                fault(
                    RecordKind::Applications,
                    row,
                    format!("application references unknown student '{}'", a.student_id),
                );
            }
            match opportunity_index.get(&a.opportunity_id) {
                None => fault(
                    RecordKind::Applications,
                    row,
                    format!(
                        "application references unknown opportunity '{}'",
                        a.opportunity_id
                    ),
                ),
                Some(&opp_row) => {
                    let posted = parts.opportunities[opp_row].posted_term;
                    if a.term < posted {
                        fault(
                            RecordKind::Applications,
                            row,
                            format!(
                                "application at {} predates opportunity '{}' posted at {}",
                                a.term, a.opportunity_id, posted
                            ),
                        );
                    }
                }
            }
            if !seen_applications.insert((a.student_id.clone(), a.opportunity_id.clone())) {
                fault(
                    RecordKind::Applications,
                    row,
                    format!(
                        "duplicate application ({}, {})",
                        a.student_id, a.opportunity_id
                    ),
                );
            }
        }

        if !violations.is_empty() {
            return Err(violations);
        }

        let mut enrollments_by_student = vec![Vec::new(); parts.students.len()];
        for (row, e) in parts.enrollments.iter().enumerate() {
            enrollments_by_student[student_index[&e.student_id]].push(row);
        }
        let mut applications_by_student = vec![Vec::new(); parts.students.len()];
        for (row, a) in parts.applications.iter().enumerate() {
            applications_by_student[student_index[&a.student_id]].push(row);
        }
        let mut teachers_by_course_term: HashMap<(usize, Term), Vec<usize>> = HashMap::new();
        for t in &parts.teaching {
            teachers_by_course_term
                .entry((course_index[&t.course_id], t.term))
                .or_default()
                .push(faculty_index[&t.faculty_id]);
        }
        for teachers in teachers_by_course_term.values_mut() {
            teachers.sort_unstable();
        }

        Ok(Dataset {
            students: parts.students,
            courses: parts.courses,
            enrollments: parts.enrollments,
            teaching: parts.teaching,
            faculty: parts.faculty,
            opportunities: parts.opportunities,
            applications: parts.applications,
            gpa_scale: parts.gpa_scale,
            student_index,
            course_index,
            faculty_index,
            opportunity_index,
            enrollments_by_student,
            applications_by_student,
            teachers_by_course_term,
        })
    }

    pub fn students(&self) -> &[StudentRecord] {
        &self.students
    }

    pub fn courses(&self) -> &[Course] {
        &self.courses
    }

    pub fn enrollments(&self) -> &[Enrollment] {
        &self.enrollments
    }

    pub fn teaching(&self) -> &[TeachingRecord] {
        &self.teaching
    }

    pub fn faculty(&self) -> &[Faculty] {
        &self.faculty
    }

    pub fn opportunities(&self) -> &[Opportunity] {
        &self.opportunities
    }

    pub fn applications(&self) -> &[Application] {
        &self.applications
    }

    pub fn gpa_scale(&self) -> GpaScale {
        self.gpa_scale
    }

    pub fn student_index(&self, id: &StudentId) -> Option<usize> {
        self.student_index.get(id).copied()
    }

    pub fn course_index(&self, id: &CourseId) -> Option<usize> {
        self.course_index.get(id).copied()
    }

    pub fn faculty_index(&self, id: &FacultyId) -> Option<usize> {
        self.faculty_index.get(id).copied()
    }

    pub fn opportunity_index(&self, id: &OpportunityId) -> Option<usize> {
        self.opportunity_index.get(id).copied()
    }

    /// Row indexes into [`Dataset::enrollments`] for one student.
    pub fn enrollments_of(&self, student: usize) -> &[usize] {
        &self.enrollments_by_student[student]
    }

    /// Row indexes into [`Dataset::applications`] for one student.
    pub fn applications_of(&self, student: usize) -> &[usize] {
        &self.applications_by_student[student]
    }

    /// Faculty rows teaching `course` in `term`, ascending.
    pub fn taught_by(&self, course: usize, term: Term) -> &[usize] {
        self.teachers_by_course_term
            .get(&(course, term))
            .map(Vec::as_slice)
            .unwrap_or(&[])
    }

    /// Earliest and latest term mentioned anywhere in the dataset
    /// (admissions, enrollments, teaching, postings, applications), or
    /// `None` for an empty dataset.
    pub fn term_range(&self) -> Option<(Term, Term)> {
        let terms = self
            .students
            .iter()
            .map(|s| s.admission_term)
            .chain(self.enrollments.iter().map(|e| e.term))
            .chain(self.teaching.iter().map(|t| t.term))
            .chain(self.opportunities.iter().map(|o| o.posted_term))
            .chain(self.applications.iter().map(|a| a.term));
        let mut range: Option<(Term, Term)> = None;
        for t in terms {
            range = Some(match range {
                None => (t, t),
                Some((lo, hi)) => (lo.min(t), hi.max(t)),
            });
        }
        range
    }
}
