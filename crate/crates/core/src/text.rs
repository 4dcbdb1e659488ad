//! Tokenization, TF-IDF vectors and cosine similarity for course
//! descriptions and opportunity abstracts.
//!
//! The weighting is the smoothed variant
//! `tf(t, d) * (ln((1 + n) / (1 + df(t))) + 1)` with raw counts for `tf`,
//! so idf is at least 1 and every stored weight is strictly positive. The
//! vocabulary assigns dense indices to the retained terms in lexicographic
//! order, which keeps vector layouts independent of hash-map iteration
//! order.

use std::collections::HashMap;
use std::io;

use thiserror::Error;

use crate::Scalar;

#[derive(Debug, Error)]
pub enum TextError {
    #[error("cannot build a vocabulary from an empty corpus")]
    EmptyCorpus,
    #[error("min_df must be at least 1, got {0}")]
    InvalidMinDf(usize),
    #[error("no term appears in at least {min_df} documents (corpus of {n_docs})")]
    EmptyVocabulary { min_df: usize, n_docs: usize },
}

/// Splits text into lowercase tokens: maximal runs of Unicode letters and
/// digits; everything else separates.
pub fn tokenize(text: &str) -> Vec<String> {
    let mut tokens = Vec::new();
    let mut current = String::new();
    for ch in text.chars() {
        if ch.is_alphanumeric() {
            current.extend(ch.to_lowercase());
        } else if !current.is_empty() {
            tokens.push(std::mem::take(&mut current));
        }
    }
    if !current.is_empty() {
        tokens.push(current);
    }
    tokens
}

/// Term index fitted on a training corpus: dense term ids, document
/// frequencies and the corpus size the idf is computed against.
#[derive(Clone, Debug)]
pub struct Vocabulary {
    index: HashMap<String, usize>,
    terms: Vec<String>,
    doc_freq: Vec<usize>,
    n_documents: usize,
}

impl Vocabulary {
    /// Fits a vocabulary on tokenized documents, keeping terms that appear
    /// in at least `min_df` documents. Term ids are assigned in
    /// lexicographic order.
    pub fn fit(documents: &[Vec<String>], min_df: usize) -> Result<Vocabulary, TextError> {
        if min_df == 0 {
            return Err(TextError::InvalidMinDf(min_df));
        }
        if documents.is_empty() {
            return Err(TextError::EmptyCorpus);
        }
        let mut df: HashMap<&str, usize> = HashMap::new();
        for doc in documents {
            let mut seen: Vec<&str> = doc.iter().map(String::as_str).collect();
            seen.sort_unstable();
            seen.dedup();
            for term in seen {
                *df.entry(term).or_insert(0) += 1;
            }
        }
        let mut terms: Vec<&str> = df
            .iter()
            .filter(|&(_, &count)| count >= min_df)
            .map(|(&term, _)| term)
            .collect();
        terms.sort_unstable();
        if terms.is_empty() {
            return Err(TextError::EmptyVocabulary {
                min_df,
                n_docs: documents.len(),
            });
        }
        let doc_freq: Vec<usize> = terms.iter().map(|t| df[t]).collect();
        let index = terms
            .iter()
            .enumerate()
            .map(|(i, t)| (t.to_string(), i))
            .collect();
        Ok(Vocabulary {
            index,
            terms: terms.into_iter().map(str::to_string).collect(),
            doc_freq,
            n_documents: documents.len(),
        })
    }

    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn n_documents(&self) -> usize {
        self.n_documents
    }

    pub fn term_id(&self, term: &str) -> Option<usize> {
        self.index.get(term).copied()
    }

    pub fn term(&self, id: usize) -> &str {
        &self.terms[id]
    }

    pub fn doc_freq(&self, id: usize) -> usize {
        self.doc_freq[id]
    }

    /// Smoothed inverse document frequency of a retained term.
    pub fn idf<S: Scalar>(&self, id: usize) -> S {
        let n = S::cast(self.n_documents);
        let df = S::cast(self.doc_freq[id]);
        ((S::one() + n) / (S::one() + df)).ln() + S::one()
    }

    /// Dumps the vocabulary as `term,id,doc_freq` CSV for inspection.
    pub fn write_csv<W: io::Write>(&self, mut out: W) -> io::Result<()> {
        writeln!(out, "term,id,doc_freq")?;
        for (id, term) in self.terms.iter().enumerate() {
            writeln!(out, "{},{},{}", term, id, self.doc_freq[id])?;
        }
        Ok(())
    }
}

/// Sparse vector with strictly increasing term ids and non-zero, finite
/// weights.
#[derive(Clone, Debug, PartialEq)]
pub struct SparseVector<S> {
    entries: Vec<(usize, S)>,
}

impl<S: Scalar> SparseVector<S> {
    pub fn empty() -> SparseVector<S> {
        SparseVector { entries: Vec::new() }
    }

    /// Builds a vector from (id, weight) pairs; sorts by id and drops
    /// zero weights. Panics on duplicate ids or non-finite weights, which
    /// indicate a bug in the caller rather than bad input data.
    pub fn from_pairs(mut pairs: Vec<(usize, S)>) -> SparseVector<S> {
        pairs.retain(|&(_, w)| w != S::zero());
        pairs.sort_unstable_by_key(|&(id, _)| id);
        for window in pairs.windows(2) {
            assert!(window[0].0 < window[1].0, "duplicate term id {}", window[1].0);
        }
        assert!(
            pairs.iter().all(|&(_, w)| w.is_finite()),
            "non-finite weight in sparse vector"
        );
        SparseVector { entries: pairs }
    }

    pub fn entries(&self) -> &[(usize, S)] {
        &self.entries
    }

    pub fn n_nonzero(&self) -> usize {
        self.entries.len()
    }

    pub fn dot(&self, other: &SparseVector<S>) -> S {
        let mut sum = S::zero();
        let (mut i, mut j) = (0, 0);
        while i < self.entries.len() && j < other.entries.len() {
            let (ida, wa) = self.entries[i];
            let (idb, wb) = other.entries[j];
            match ida.cmp(&idb) {
                std::cmp::Ordering::Less => i += 1,
                std::cmp::Ordering::Greater => j += 1,
                std::cmp::Ordering::Equal => {
                    sum = sum + wa * wb;
                    i += 1;
                    j += 1;
                }
            }
        }
        sum
    }

    pub fn norm(&self) -> S {
        self.entries
            .iter()
            .map(|&(_, w)| w * w)
            .fold(S::zero(), |acc, x| acc + x)
            .sqrt()
    }
}

/// TF-IDF vector of a tokenized document against a fitted vocabulary.
/// Out-of-vocabulary tokens are ignored; an empty or fully
/// out-of-vocabulary document yields the zero vector.
pub fn tfidf_vector<S: Scalar>(tokens: &[String], vocabulary: &Vocabulary) -> SparseVector<S> {
    let mut counts: HashMap<usize, usize> = HashMap::new();
    for token in tokens {
        if let Some(id) = vocabulary.term_id(token) {
            *counts.entry(id).or_insert(0) += 1;
        }
    }
    let pairs = counts
        .into_iter()
        .map(|(id, tf)| (id, S::cast(tf) * vocabulary.idf::<S>(id)))
        .collect();
    SparseVector::from_pairs(pairs)
}

/// Cosine similarity; 0 when either vector has zero norm.
pub fn cosine<S: Scalar>(a: &SparseVector<S>, b: &SparseVector<S>) -> S {
    let na = a.norm();
    let nb = b.norm();
    if na == S::zero() || nb == S::zero() {
        return S::zero();
    }
    a.dot(b) / (na * nb)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use proptest::prelude::*;

    fn doc(words: &[&str]) -> Vec<String> {
        words.iter().map(|w| w.to_string()).collect()
    }

    #[test]
    fn tokenize_lowercases_and_splits_on_non_alphanumerics() {
        assert_eq!(
            tokenize("Dynamic Programming II (2014)"),
            vec!["dynamic", "programming", "ii", "2014"]
        );
        assert_eq!(tokenize("Optimización-Convexa"), vec!["optimización", "convexa"]);
        assert_eq!(tokenize("  .,;!  "), Vec::<String>::new());
        assert_eq!(tokenize(""), Vec::<String>::new());
    }

    #[test]
    fn vocabulary_min_df_filters_rare_terms() {
        // "common" appears in 3 docs, "pair" in 2, the rest in 1.
        let docs = vec![
            doc(&["common", "pair", "alpha"]),
            doc(&["common", "pair", "beta"]),
            doc(&["common", "gamma"]),
        ];
        let vocab = Vocabulary::fit(&docs, 2).unwrap();
        assert_eq!(vocab.len(), 2);
        assert_eq!(vocab.term_id("common"), Some(0));
        assert_eq!(vocab.term_id("pair"), Some(1));
        assert_eq!(vocab.term_id("alpha"), None);
        assert_eq!(vocab.doc_freq(0), 3);
        assert_eq!(vocab.n_documents(), 3);
    }

    #[test]
    fn vocabulary_rejects_empty_corpus_and_bad_min_df() {
        assert!(matches!(
            Vocabulary::fit(&[], 1),
            Err(TextError::EmptyCorpus)
        ));
        assert!(matches!(
            Vocabulary::fit(&[doc(&["a"])], 0),
            Err(TextError::InvalidMinDf(0))
        ));
        let docs = vec![doc(&["solo"]), doc(&["single"])];
        assert!(matches!(
            Vocabulary::fit(&docs, 2),
            Err(TextError::EmptyVocabulary { .. })
        ));
    }

    #[test]
    fn tfidf_weights_match_hand_computation() {
        // Corpus of three documents; fit with min_df 1 so "a" has df 3 and
        // "b" has df 2. For the document [a, a, b]:
        //   w(a) = 2 * (ln(4/4) + 1) = 2
        //   w(b) = 1 * (ln(4/3) + 1) = 1.2876820724517809
        let docs = vec![doc(&["a", "a", "b"]), doc(&["a", "b"]), doc(&["a"])];
        let vocab = Vocabulary::fit(&docs, 1).unwrap();
        let v: SparseVector<f64> = tfidf_vector(&docs[0], &vocab);
        let entries = v.entries();
        assert_eq!(entries.len(), 2);
        assert_eq!(entries[0].0, vocab.term_id("a").unwrap());
        assert_relative_eq!(entries[0].1, 2.0, max_relative = 1e-12);
        assert_relative_eq!(entries[1].1, 1.2876820724517809, max_relative = 1e-12);
    }

    #[test]
    fn idf_is_at_least_one_and_weights_positive() {
        let docs = vec![
            doc(&["x", "y"]),
            doc(&["x", "z"]),
            doc(&["x", "y", "z", "w"]),
        ];
        let vocab = Vocabulary::fit(&docs, 1).unwrap();
        for id in 0..vocab.len() {
            assert!(vocab.idf::<f64>(id) >= 1.0);
        }
        // The term appearing in every document still gets positive weight.
        let v: SparseVector<f64> = tfidf_vector(&doc(&["x"]), &vocab);
        assert_eq!(v.n_nonzero(), 1);
        assert!(v.entries()[0].1 > 0.0);
    }

    #[test]
    fn cosine_of_known_vectors() {
        // (1,1,0) vs (1,0,1): cosine = 1/2.
        let a = SparseVector::from_pairs(vec![(0, 1.0f64), (1, 1.0)]);
        let b = SparseVector::from_pairs(vec![(0, 1.0f64), (2, 1.0)]);
        assert!((cosine(&a, &b) - 0.5).abs() <= 1e-12);
    }

    #[test]
    fn cosine_with_zero_vector_is_zero() {
        let a = SparseVector::from_pairs(vec![(0, 1.0f64)]);
        let zero = SparseVector::<f64>::empty();
        assert_eq!(cosine(&a, &zero), 0.0);
        assert_eq!(cosine(&zero, &zero), 0.0);
    }

    #[test]
    fn out_of_vocabulary_document_yields_zero_vector() {
        let docs = vec![doc(&["alpha", "beta"]), doc(&["alpha"])];
        let vocab = Vocabulary::fit(&docs, 1).unwrap();
        let v: SparseVector<f64> = tfidf_vector(&doc(&["unseen", "words"]), &vocab);
        assert_eq!(v.n_nonzero(), 0);
        assert_eq!(v.norm(), 0.0);
    }

    #[test]
    fn vocabulary_csv_dump_is_sorted_by_id() {
        let docs = vec![doc(&["b", "a"]), doc(&["a", "b"])];
        let vocab = Vocabulary::fit(&docs, 1).unwrap();
        let mut buf = Vec::new();
        vocab.write_csv(&mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert_eq!(text, "term,id,doc_freq\na,0,2\nb,1,2\n");
    }

    prop_compose! {
        fn token_strategy()(s in "[a-f]{1,3}") -> String { s }
    }

    prop_compose! {
        fn doc_strategy()(tokens in prop::collection::vec(token_strategy(), 0..12)) -> Vec<String> {
            tokens
        }
    }

    proptest! {
        /// Tokenization is idempotent: re-tokenizing the joined tokens
        /// changes nothing.
        #[test]
        fn tokenize_is_idempotent(text in "\\PC{0,60}") {
            let once = tokenize(&text);
            let again = tokenize(&once.join(" "));
            prop_assert_eq!(once, again);
        }

        /// Cosine is symmetric, bounded and invariant under positive
        /// scaling of either argument.
        #[test]
        fn cosine_properties(
            docs in prop::collection::vec(doc_strategy(), 2..8),
            scale in 0.5f64..8.0,
        ) {
            let nonempty: Vec<Vec<String>> =
                docs.iter().filter(|d| !d.is_empty()).cloned().collect();
            prop_assume!(nonempty.len() >= 2);
            let vocab = match Vocabulary::fit(&nonempty, 1) {
                Ok(v) => v,
                Err(_) => return Ok(()),
            };
            let a: SparseVector<f64> = tfidf_vector(&nonempty[0], &vocab);
            let b: SparseVector<f64> = tfidf_vector(&nonempty[1], &vocab);
            let ab = cosine(&a, &b);
            let ba = cosine(&b, &a);
            prop_assert!((ab - ba).abs() <= 1e-12);
            prop_assert!((-1e-12..=1.0 + 1e-12).contains(&ab));
            let scaled = SparseVector::from_pairs(
                a.entries().iter().map(|&(i, w)| (i, w * scale)).collect(),
            );
            prop_assert!((cosine(&scaled, &b) - ab).abs() <= 1e-9);
        }

        /// Every stored weight is strictly positive and ids strictly
        /// increase.
        #[test]
        fn tfidf_entries_are_positive_and_sorted(
            docs in prop::collection::vec(doc_strategy(), 1..8),
        ) {
            let nonempty: Vec<Vec<String>> =
                docs.iter().filter(|d| !d.is_empty()).cloned().collect();
            prop_assume!(!nonempty.is_empty());
            let vocab = match Vocabulary::fit(&nonempty, 1) {
                Ok(v) => v,
                Err(_) => return Ok(()),
            };
            for d in &nonempty {
                let v: SparseVector<f64> = tfidf_vector(d, &vocab);
                for pair in v.entries().windows(2) {
                    prop_assert!(pair[0].0 < pair[1].0);
                }
                for &(_, w) in v.entries() {
                    prop_assert!(w > 0.0 && w.is_finite());
                }
            }
        }
    }
}
