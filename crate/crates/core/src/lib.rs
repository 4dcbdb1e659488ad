//! Toolkit for studying the recommendation of research opportunities to
//! undergraduate students based on their academic records.
//!
//! Two prediction problems are covered end to end: deciding which students
//! are likely to apply to any research opportunity at all (a per-student
//! binary classification), and ranking the opportunity catalog for each
//! student (pointwise classification scores over (student, opportunity)
//! pairs). The crate ships:
//!
//! * a validated relational data model over seven CSV files ([`domain`],
//!   [`ingest`]),
//! * a seeded synthetic dataset generator with planted, recoverable signal
//!   ([`datagen`]),
//! * TF-IDF text vectors and cosine similarity ([`text`]),
//! * leakage-free feature extraction around a temporal train/test split
//!   ([`features`]),
//! * four classifiers built from first principles: constant baselines,
//!   logistic regression, gradient-boosted trees and a linear SVM
//!   ([`models`]),
//! * an offline evaluation harness producing classification reports and
//!   MAP@k against a seeded random-ranking baseline ([`eval`]).
//!
//! The numeric kernels (text vectors, classifiers, metrics) are generic
//! over the [`Scalar`] floating-point type; the data layer and the
//! end-to-end pipeline run on the concrete [`Value`] alias.

use std::fmt;
use std::iter::Sum;

pub mod datagen;
pub mod domain;
pub mod eval;
pub mod features;
pub mod ingest;
pub mod models;
pub mod rng;
pub mod text;

/// Floating-point scalar the numeric kernels are generic over.
///
/// Implemented for `f32` and `f64`. The bound collects everything the
/// kernels need: IEEE arithmetic with transcendentals via
/// [`num_traits::Float`], conversions from counts and literals, summation,
/// and formatting for reports and error messages.
pub trait Scalar:
    num_traits::Float
    + num_traits::FromPrimitive
    + Sum
    + fmt::Debug
    + fmt::Display
    + Send
    + Sync
    + 'static
{
    /// Converts any primitive numeric value, panicking only on values not
    /// representable at all (never the case for counts and hyperparameters
    /// used in this crate).
    fn cast<T: num_traits::NumCast>(value: T) -> Self {
        num_traits::NumCast::from(value).expect("numeric cast")
    }
}

impl Scalar for f32 {}
impl Scalar for f64 {}

/// Concrete scalar used by the end-to-end pipeline and the CLI.
pub type Value = f64;
