//! CSV ingestion and serialization of datasets.
//!
//! A dataset directory holds seven files — `students.csv`, `courses.csv`,
//! `enrollments.csv`, `teaching.csv`, `faculty.csv`, `opportunities.csv`
//! and `applications.csv` — in RFC-4180 form with exact headers. Loading
//! validates everything it can and reports *all* problems (missing files,
//! malformed headers and fields, duplicate keys, dangling references,
//! out-of-range values) with file names and line numbers, rather than
//! stopping at the first.
//!
//! [`write_dataset`] is the inverse of [`load_dataset`]: writing and
//! re-loading reproduces the dataset exactly, including float fields,
//! which are rendered in shortest round-trip decimal form.

use std::collections::HashSet;
use std::fmt;
use std::fs;
use std::io;
use std::path::Path;

use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::domain::{
    Application, Course, Dataset, DatasetParts, Enrollment, Faculty, GpaScale, Opportunity,
    RecordKind, StudentRecord, TeachingRecord, Term,
};

/// Schema knobs that are institution-specific rather than structural.
#[derive(Clone, Copy, Debug, Default)]
pub struct SchemaConfig {
    pub gpa_scale: GpaScale,
}

/// One problem found while loading: file, 1-based line (0 when the whole
/// file is at fault) and a description.
#[derive(Clone, Debug, PartialEq)]
pub struct Issue {
    pub file: &'static str,
    pub line: u64,
    pub message: String,
}

impl fmt::Display for Issue {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.line == 0 {
            write!(f, "{}: {}", self.file, self.message)
        } else {
            write!(f, "{}:{}: {}", self.file, self.line, self.message)
        }
    }
}

/// Everything wrong with a dataset directory.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct ValidationReport {
    pub issues: Vec<Issue>,
}

impl fmt::Display for ValidationReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "{} issue(s):", self.issues.len())?;
        for issue in &self.issues {
            writeln!(f, "  {issue}")?;
        }
        Ok(())
    }
}

#[derive(Debug, Error)]
pub enum IngestError {
    #[error("{file}: {source}")]
    Io {
        file: String,
        #[source]
        source: io::Error,
    },
    #[error("invalid dataset: {0}")]
    Invalid(ValidationReport),
}

const STUDENTS_HEADER: &[&str] = &["student_id", "admission_year", "admission_half", "gpa"];
const COURSES_HEADER: &[&str] = &["course_id", "title", "description", "department_id", "credits"];
const ENROLLMENTS_HEADER: &[&str] = &["student_id", "course_id", "year", "half", "approved"];
const TEACHING_HEADER: &[&str] = &["faculty_id", "course_id", "year", "half"];
const FACULTY_HEADER: &[&str] = &["faculty_id", "department_id"];
const OPPORTUNITIES_HEADER: &[&str] = &[
    "opportunity_id",
    "abstract",
    "faculty_id",
    "posted_year",
    "posted_half",
];
const APPLICATIONS_HEADER: &[&str] = &["student_id", "opportunity_id", "year", "half", "accepted"];

fn header_of(kind: RecordKind) -> &'static [&'static str] {
    match kind {
        RecordKind::Students => STUDENTS_HEADER,
        RecordKind::Courses => COURSES_HEADER,
        RecordKind::Enrollments => ENROLLMENTS_HEADER,
        RecordKind::Teaching => TEACHING_HEADER,
        RecordKind::Faculty => FACULTY_HEADER,
        RecordKind::Opportunities => OPPORTUNITIES_HEADER,
        RecordKind::Applications => APPLICATIONS_HEADER,
    }
}

/// Raw rows of one table plus the CSV line each row started on.
struct Table {
    rows: Vec<csv::StringRecord>,
    lines: Vec<u64>,
}

struct Loader {
    issues: Vec<Issue>,
}

impl Loader {
    fn fault(&mut self, file: &'static str, line: u64, message: String) {
        self.issues.push(Issue { file, line, message });
    }

    /// Reads one table, checking the header and collecting per-record CSV
    /// errors. Returns `None` when the file is unusable as a whole.
    fn read_table(&mut self, dir: &Path, kind: RecordKind) -> Result<Option<Table>, IngestError> {
        let file = kind.file_name();
        let path = dir.join(file);
        let raw = match fs::read(&path) {
            Ok(bytes) => bytes,
            Err(e) if e.kind() == io::ErrorKind::NotFound => {
                self.fault(file, 0, "file not found".to_string());
                return Ok(None);
            }
            Err(e) => {
                return Err(IngestError::Io {
                    file: path.display().to_string(),
                    source: e,
                })
            }
        };
        let mut reader = csv::ReaderBuilder::new()
            .has_headers(true)
            .from_reader(raw.as_slice());
        let expected = header_of(kind);
        match reader.headers() {
            Ok(headers) => {
                let found: Vec<&str> = headers.iter().collect();
                if found != expected {
                    self.fault(
                        file,
                        1,
                        format!(
                            "malformed header: expected '{}', found '{}'",
                            expected.join(","),
                            found.join(",")
                        ),
                    );
                    return Ok(None);
                }
            }
            Err(e) => {
                self.fault(file, 1, format!("unreadable header: {e}"));
                return Ok(None);
            }
        }
        let mut table = Table { rows: Vec::new(), lines: Vec::new() };
        for result in reader.records() {
            match result {
                Ok(record) => {
                    let line = record.position().map(|p| p.line()).unwrap_or(0);
                    table.rows.push(record);
                    table.lines.push(line);
                }
                Err(e) => {
                    let line = e.position().map(|p| p.line()).unwrap_or(0);
                    self.fault(file, line, format!("malformed record: {e}"));
                }
            }
        }
        Ok(Some(table))
    }

    fn parse_int<T: std::str::FromStr>(
        &mut self,
        kind: RecordKind,
        line: u64,
        name: &str,
        raw: &str,
    ) -> Option<T> {
        match raw.parse::<T>() {
            Ok(v) => Some(v),
            Err(_) => {
                self.fault(
                    kind.file_name(),
                    line,
                    format!("invalid {name} '{raw}' (expected an integer)"),
                );
                None
            }
        }
    }

    fn parse_term(
        &mut self,
        kind: RecordKind,
        line: u64,
        name: &str,
        year_raw: &str,
        half_raw: &str,
    ) -> Option<Term> {
        let year: i32 = self.parse_int(kind, line, &format!("{name} year"), year_raw)?;
        let half: u8 = self.parse_int(kind, line, &format!("{name} half"), half_raw)?;
        match Term::new(year, half) {
            Ok(t) => Some(t),
            Err(e) => {
                self.fault(kind.file_name(), line, format!("invalid {name}: {e}"));
                None
            }
        }
    }

    fn parse_flag(&mut self, kind: RecordKind, line: u64, name: &str, raw: &str) -> Option<bool> {
        match raw {
            "1" => Some(true),
            "0" => Some(false),
            _ => {
                self.fault(
                    kind.file_name(),
                    line,
                    format!("invalid {name} '{raw}' (expected 0 or 1)"),
                );
                None
            }
        }
    }

    fn parse_gpa(&mut self, line: u64, raw: &str) -> Option<f64> {
        match raw.parse::<f64>() {
            Ok(v) if v.is_finite() => Some(v),
            _ => {
                self.fault(
                    RecordKind::Students.file_name(),
                    line,
                    format!("invalid gpa '{raw}' (expected a finite number)"),
                );
                None
            }
        }
    }
}

/// Loads and validates a dataset directory.
pub fn load_dataset(dir: &Path, schema: &SchemaConfig) -> Result<Dataset, IngestError> {
    let mut loader = Loader { issues: Vec::new() };
    let mut tables = Vec::with_capacity(RecordKind::ALL.len());
    for kind in RecordKind::ALL {
        tables.push(loader.read_table(dir, kind)?);
    }
    let [students_t, courses_t, enrollments_t, teaching_t, faculty_t, opportunities_t, applications_t]: [Option<Table>; 7] =
        tables.try_into().ok().expect("seven tables");

    let mut parts = DatasetParts {
        gpa_scale: schema.gpa_scale,
        ..DatasetParts::default()
    };
    // Per-table CSV line numbers, aligned with the part vectors so that
    // integrity violations (which carry row indexes) can be mapped back to
    // lines. The alignment only matters when parsing produced no issues,
    // which is exactly when the integrity phase runs.
    let mut lines = [const { Vec::new() }; 7];

    if let Some(t) = &students_t {
        let kind = RecordKind::Students;
        for (row, line) in t.rows.iter().zip(&t.lines) {
            let term = loader.parse_term(kind, *line, "admission term", &row[1], &row[2]);
            let gpa = loader.parse_gpa(*line, &row[3]);
            if let (Some(term), Some(gpa)) = (term, gpa) {
                parts.students.push(StudentRecord {
                    student_id: row[0].into(),
                    admission_term: term,
                    gpa,
                });
                lines[0].push(*line);
            }
        }
    }
    if let Some(t) = &courses_t {
        let kind = RecordKind::Courses;
        for (row, line) in t.rows.iter().zip(&t.lines) {
            if let Some(credits) = loader.parse_int::<u32>(kind, *line, "credits", &row[4]) {
                parts.courses.push(Course {
                    course_id: row[0].into(),
                    title: row[1].to_string(),
                    description: row[2].to_string(),
                    department_id: row[3].into(),
                    credits,
                });
                lines[1].push(*line);
            }
        }
    }
    if let Some(t) = &enrollments_t {
        let kind = RecordKind::Enrollments;
        for (row, line) in t.rows.iter().zip(&t.lines) {
            let term = loader.parse_term(kind, *line, "term", &row[2], &row[3]);
            let approved = loader.parse_flag(kind, *line, "approved", &row[4]);
            if let (Some(term), Some(approved)) = (term, approved) {
                parts.enrollments.push(Enrollment {
                    student_id: row[0].into(),
                    course_id: row[1].into(),
                    term,
                    approved,
                });
                lines[2].push(*line);
            }
        }
    }
    if let Some(t) = &teaching_t {
        let kind = RecordKind::Teaching;
        for (row, line) in t.rows.iter().zip(&t.lines) {
            if let Some(term) = loader.parse_term(kind, *line, "term", &row[2], &row[3]) {
                parts.teaching.push(TeachingRecord {
                    faculty_id: row[0].into(),
                    course_id: row[1].into(),
                    term,
                });
                lines[3].push(*line);
            }
        }
    }
    if let Some(t) = &faculty_t {
        for (row, line) in t.rows.iter().zip(&t.lines) {
            parts.faculty.push(Faculty {
                faculty_id: row[0].into(),
                department_id: row[1].into(),
            });
            lines[4].push(*line);
        }
    }
    if let Some(t) = &opportunities_t {
        let kind = RecordKind::Opportunities;
        for (row, line) in t.rows.iter().zip(&t.lines) {
            if let Some(term) = loader.parse_term(kind, *line, "posted term", &row[3], &row[4]) {
                parts.opportunities.push(Opportunity {
                    opportunity_id: row[0].into(),
                    abstract_text: row[1].to_string(),
                    faculty_id: row[2].into(),
                    posted_term: term,
                });
                lines[5].push(*line);
            }
        }
    }
    if let Some(t) = &applications_t {
        let kind = RecordKind::Applications;
        for (row, line) in t.rows.iter().zip(&t.lines) {
            let term = loader.parse_term(kind, *line, "term", &row[2], &row[3]);
            let accepted = loader.parse_flag(kind, *line, "accepted", &row[4]);
            if let (Some(term), Some(accepted)) = (term, accepted) {
                parts.applications.push(Application {
                    student_id: row[0].into(),
                    opportunity_id: row[1].into(),
                    term,
                    accepted,
                });
                lines[6].push(*line);
            }
        }
    }

    if !loader.issues.is_empty() {
        loader.issues.sort_by(|a, b| (a.file, a.line).cmp(&(b.file, b.line)));
        return Err(IngestError::Invalid(ValidationReport { issues: loader.issues }));
    }

    match Dataset::new(parts) {
        Ok(ds) => Ok(ds),
        Err(violations) => {
            let mut issues: Vec<Issue> = violations
                .into_iter()
                .map(|v| {
                    let table = RecordKind::ALL
                        .iter()
                        .position(|&k| k == v.record)
                        .expect("known record kind");
                    Issue {
                        file: v.record.file_name(),
                        line: lines[table][v.row],
                        message: v.message,
                    }
                })
                .collect();
            issues.sort_by(|a, b| (a.file, a.line).cmp(&(b.file, b.line)));
            Err(IngestError::Invalid(ValidationReport { issues }))
        }
    }
}

fn flag(b: bool) -> &'static str {
    if b {
        "1"
    } else {
        "0"
    }
}

/// Serializes one table to CSV bytes in canonical form: exact header,
/// rows in dataset order, floats in shortest round-trip decimal notation.
pub fn table_csv_bytes(ds: &Dataset, kind: RecordKind) -> Vec<u8> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(header_of(kind)).expect("csv header");
    match kind {
        RecordKind::Students => {
            for s in ds.students() {
                w.write_record(&[
                    s.student_id.as_str().to_string(),
                    s.admission_term.year().to_string(),
                    s.admission_term.half().to_string(),
                    s.gpa.to_string(),
                ])
                .expect("csv row");
            }
        }
        RecordKind::Courses => {
            for c in ds.courses() {
                w.write_record(&[
                    c.course_id.as_str().to_string(),
                    c.title.clone(),
                    c.description.clone(),
                    c.department_id.as_str().to_string(),
                    c.credits.to_string(),
                ])
                .expect("csv row");
            }
        }
        RecordKind::Enrollments => {
            for e in ds.enrollments() {
                w.write_record(&[
                    e.student_id.as_str().to_string(),
                    e.course_id.as_str().to_string(),
                    e.term.year().to_string(),
                    e.term.half().to_string(),
                    flag(e.approved).to_string(),
                ])
                .expect("csv row");
            }
        }
        RecordKind::Teaching => {
            for t in ds.teaching() {
                w.write_record(&[
                    t.faculty_id.as_str().to_string(),
                    t.course_id.as_str().to_string(),
                    t.term.year().to_string(),
                    t.term.half().to_string(),
                ])
                .expect("csv row");
            }
        }
        RecordKind::Faculty => {
            for f in ds.faculty() {
                w.write_record(&[
                    f.faculty_id.as_str().to_string(),
                    f.department_id.as_str().to_string(),
                ])
                .expect("csv row");
            }
        }
        RecordKind::Opportunities => {
            for o in ds.opportunities() {
                w.write_record(&[
                    o.opportunity_id.as_str().to_string(),
                    o.abstract_text.clone(),
                    o.faculty_id.as_str().to_string(),
                    o.posted_term.year().to_string(),
                    o.posted_term.half().to_string(),
                ])
                .expect("csv row");
            }
        }
        RecordKind::Applications => {
            for a in ds.applications() {
                w.write_record(&[
                    a.student_id.as_str().to_string(),
                    a.opportunity_id.as_str().to_string(),
                    a.term.year().to_string(),
                    a.term.half().to_string(),
                    flag(a.accepted).to_string(),
                ])
                .expect("csv row");
            }
        }
    }
    w.into_inner().expect("csv buffer")
}

/// Writes the seven CSV files of `ds` into `dir`, creating it if needed.
pub fn write_dataset(ds: &Dataset, dir: &Path) -> Result<(), IngestError> {
    let io_err = |path: &Path, source: io::Error| IngestError::Io {
        file: path.display().to_string(),
        source,
    };
    fs::create_dir_all(dir).map_err(|e| io_err(dir, e))?;
    for kind in RecordKind::ALL {
        let path = dir.join(kind.file_name());
        fs::write(&path, table_csv_bytes(ds, kind)).map_err(|e| io_err(&path, e))?;
    }
    Ok(())
}

/// SHA-256 digest of the canonical CSV serialization, for run manifests.
pub fn dataset_digest(ds: &Dataset) -> String {
    let mut hasher = Sha256::new();
    for kind in RecordKind::ALL {
        hasher.update(kind.file_name().as_bytes());
        hasher.update([0u8]);
        hasher.update(&table_csv_bytes(ds, kind));
        hasher.update([0u8]);
    }
    let digest = hasher.finalize();
    let mut hex = String::with_capacity(7 + digest.len() * 2);
    hex.push_str("sha256:");
    for byte in digest {
        hex.push_str(&format!("{byte:02x}"));
    }
    hex
}

/// Headline statistics of a dataset.
#[derive(Clone, Debug, PartialEq)]
pub struct DatasetSummary {
    pub n_students: usize,
    pub n_courses: usize,
    pub n_faculty: usize,
    pub n_opportunities: usize,
    pub n_enrollments: usize,
    pub n_applications: usize,
    /// Students with at least one application.
    pub n_applicants: usize,
    /// `n_applicants / n_students`; 0 for an empty dataset.
    pub applicant_rate: f64,
    /// Accepted share of applications; `None` when there are none.
    pub acceptance_rate: Option<f64>,
    pub term_range: Option<(Term, Term)>,
}

/// Computes headline statistics.
pub fn summarize(ds: &Dataset) -> DatasetSummary {
    let applicants: HashSet<&str> = ds
        .applications()
        .iter()
        .map(|a| a.student_id.as_str())
        .collect();
    let n_students = ds.students().len();
    let n_applications = ds.applications().len();
    let accepted = ds.applications().iter().filter(|a| a.accepted).count();
    DatasetSummary {
        n_students,
        n_courses: ds.courses().len(),
        n_faculty: ds.faculty().len(),
        n_opportunities: ds.opportunities().len(),
        n_enrollments: ds.enrollments().len(),
        n_applications,
        n_applicants: applicants.len(),
        applicant_rate: if n_students == 0 {
            0.0
        } else {
            applicants.len() as f64 / n_students as f64
        },
        acceptance_rate: if n_applications == 0 {
            None
        } else {
            Some(accepted as f64 / n_applications as f64)
        },
        term_range: ds.term_range(),
    }
}
