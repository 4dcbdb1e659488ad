//! Per-student ranking and average precision.

use std::collections::BTreeSet;

use super::EvalError;
use crate::domain::{OpportunityId, StudentId};
use crate::features::{task2_features, FeatureSetId, SplitView, TextContext};
use crate::models::TrainedModel;
use crate::rng;
use crate::Scalar;

/// Substream tag for the random-ranker baseline.
const RANDOM_RANKER_TAG: u64 = 0x7261_6e6b;

/// One student's recommendation list: at most `k` (opportunity, score)
/// pairs with non-increasing scores, score ties resolved by ascending
/// opportunity id.
#[derive(Clone, Debug, PartialEq)]
pub struct RankedList<S> {
    pub student_id: StudentId,
    pub items: Vec<(OpportunityId, S)>,
}

/// Scores every candidate opportunity for one student and returns the
/// top `k`. Ordering is by descending score, then ascending opportunity
/// id, so equal-scoring models always produce the same list.
pub fn rank_candidates<S: Scalar>(
    model: &TrainedModel<S>,
    view: &SplitView<'_>,
    text: &TextContext<S>,
    student_id: &StudentId,
    candidates: &[OpportunityId],
    set: FeatureSetId,
    k: usize,
) -> Result<RankedList<S>, EvalError> {
    if k == 0 {
        return Err(EvalError::InvalidK);
    }
    if candidates.is_empty() {
        return Err(EvalError::EmptyCandidates);
    }

    let mut scored: Vec<(&OpportunityId, S)> = Vec::with_capacity(candidates.len());
    for opportunity_id in candidates {
        let features = task2_features(view, text, student_id, opportunity_id, set)?;
        let score = model.score(&features)?;
        scored.push((opportunity_id, score));
    }
    scored.sort_by(|a, b| {
        b.1.partial_cmp(&a.1)
            .expect("model scores are finite")
            .then_with(|| a.0.cmp(b.0))
    });
    scored.truncate(k);

    Ok(RankedList {
        student_id: student_id.clone(),
        items: scored.into_iter().map(|(id, s)| (id.clone(), s)).collect(),
    })
}

/// AP@k: the mean of precision-at-i over the relevant items in the top
/// `k`, divided by `min(|relevant|, k)` — the truncated denominator, so
/// a full top-k of relevant items scores 1 even when `|relevant| > k`.
pub fn average_precision<S: Scalar>(
    ranked: &RankedList<S>,
    relevant: &BTreeSet<OpportunityId>,
    k: usize,
) -> Result<S, EvalError> {
    if k == 0 {
        return Err(EvalError::InvalidK);
    }
    if relevant.is_empty() {
        return Err(EvalError::EmptyRelevant(ranked.student_id.clone()));
    }
    let mut hits = 0usize;
    let mut sum = S::zero();
    for (i, (opportunity_id, _)) in ranked.items.iter().take(k).enumerate() {
        if relevant.contains(opportunity_id) {
            hits += 1;
            sum = sum + S::cast(hits) / S::cast(i + 1);
        }
    }
    Ok(sum / S::cast(relevant.len().min(k)))
}

/// Unweighted mean AP@k over students; every student must have at least
/// one relevant item (filter beforehand).
pub fn map_at_k<S: Scalar>(
    per_student: &[(&RankedList<S>, &BTreeSet<OpportunityId>)],
    k: usize,
) -> Result<S, EvalError> {
    if per_student.is_empty() {
        return Err(EvalError::EmptyEvaluation);
    }
    let mut sum = S::zero();
    for &(ranked, relevant) in per_student {
        sum = sum + average_precision(ranked, relevant, k)?;
    }
    Ok(sum / S::cast(per_student.len()))
}

/// MAP at every k in a grid, plus the per-student APs behind it.
#[derive(Clone, Debug, PartialEq)]
pub struct RankingReport<S> {
    /// `(k, MAP@k)` in grid order.
    pub map_at_k: Vec<(usize, S)>,
    /// Per student: `(student_id, [(k, AP@k)])` in input order.
    pub per_student: Vec<(StudentId, Vec<(usize, S)>)>,
    pub n_evaluated_students: usize,
}

impl<S: Scalar> RankingReport<S> {
    pub fn compute(
        per_student: &[(&RankedList<S>, &BTreeSet<OpportunityId>)],
        k_grid: &[usize],
    ) -> Result<RankingReport<S>, EvalError> {
        if per_student.is_empty() || k_grid.is_empty() {
            return Err(EvalError::EmptyEvaluation);
        }
        let mut students = Vec::with_capacity(per_student.len());
        let mut sums = vec![S::zero(); k_grid.len()];
        for &(ranked, relevant) in per_student {
            let mut aps = Vec::with_capacity(k_grid.len());
            for (slot, &k) in k_grid.iter().enumerate() {
                let ap = average_precision(ranked, relevant, k)?;
                sums[slot] = sums[slot] + ap;
                aps.push((k, ap));
            }
            students.push((ranked.student_id.clone(), aps));
        }
        let n = S::cast(per_student.len());
        Ok(RankingReport {
            map_at_k: k_grid.iter().zip(&sums).map(|(&k, &s)| (k, s / n)).collect(),
            per_student: students,
            n_evaluated_students: per_student.len(),
        })
    }
}

/// A seeded uniform shuffle of the candidates, truncated at `k`. The
/// scores are synthetic descending ranks, present only to satisfy the
/// non-increasing invariant; only the order matters.
pub fn random_ranker<S: Scalar>(
    student_id: &StudentId,
    candidates: &[OpportunityId],
    seed: u64,
    k: usize,
) -> RankedList<S> {
    let mut order: Vec<usize> = (0..candidates.len()).collect();
    let mut rng = rng::stream(seed, RANDOM_RANKER_TAG);
    rng::shuffle(&mut rng, &mut order);
    let n = candidates.len();
    RankedList {
        student_id: student_id.clone(),
        items: order
            .into_iter()
            .take(k)
            .enumerate()
            .map(|(i, c)| (candidates[c].clone(), S::cast(n - i)))
            .collect(),
    }
}
