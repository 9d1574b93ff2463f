//! Rubric scoring: per-item verdicts from the extract and judge steps, exact
//! weighted totals, and agreement against expert labels.

use std::collections::{BTreeMap, BTreeSet};

use futures::stream::{self, StreamExt};
use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{ToPrimitive, Zero};
use serde::{Deserialize, Serialize};

use crate::domain::{Assignment, EssayDraft, Stage, Weight};
use crate::error::ScoringError;
use crate::pipeline::Pipeline;
use crate::stats::{binary_confusion, cohen_kappa};

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RubricVerdict {
    pub rubric_id: String,
    /// 0 or 1.
    pub met: u8,
    pub rationale: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EssayScore {
    pub essay_id: String,
    pub assignment_id: String,
    pub stage: Stage,
    pub verdicts: Vec<RubricVerdict>,
    pub total: f64,
    /// The total as an exact reduced fraction `p/q`.
    pub total_exact: String,
    /// Some verdicts defaulted to not met after a provider failure.
    pub partial: bool,
}

fn to_big(w: &Weight) -> BigRational {
    let r = w.ratio();
    BigRational::new(BigInt::from(*r.numer()), BigInt::from(*r.denom()))
}

/// Exact `Σ wᵢ·metᵢ / Σ wᵢ`. Zero-weight items never affect the result.
pub fn aggregate_score(verdicts: &[bool], weights: &[Weight]) -> Result<BigRational, ScoringError> {
    if verdicts.len() != weights.len() {
        return Err(ScoringError::LengthMismatch { verdicts: verdicts.len(), weights: weights.len() });
    }
    let mut earned = BigRational::zero();
    let mut total = BigRational::zero();
    for (met, w) in verdicts.iter().zip(weights) {
        let w = to_big(w);
        if *met {
            earned += &w;
        }
        total += w;
    }
    if total.is_zero() {
        return Err(ScoringError::ZeroTotalWeight);
    }
    Ok(earned / total)
}

pub fn rational_to_f64(r: &BigRational) -> f64 {
    r.to_f64().unwrap_or(f64::NAN)
}

/// Builds the score record for `verdicts`, which must follow rubric order.
pub fn essay_score(
    draft: &EssayDraft,
    assignment: &Assignment,
    verdicts: Vec<RubricVerdict>,
) -> Result<EssayScore, ScoringError> {
    let weights: Vec<Weight> = assignment.rubric_items.iter().map(|r| r.weight).collect();
    let mets: Vec<bool> = verdicts.iter().map(|v| v.met == 1).collect();
    let total = aggregate_score(&mets, &weights)?;
    Ok(EssayScore {
        essay_id: draft.essay_id.clone(),
        assignment_id: draft.assignment_id.clone(),
        stage: draft.stage,
        partial: verdicts.iter().any(|v| v.error.is_some()),
        verdicts,
        total: rational_to_f64(&total),
        total_exact: total.to_string(),
    })
}

/// Scores one draft. A rubric item whose calls fail counts as not met and
/// marks the score partial.
pub async fn score_essay(pipeline: &Pipeline, draft: &EssayDraft, assignment: &Assignment) -> Result<EssayScore, ScoringError> {
    let verdicts = stream::iter(assignment.rubric_items.iter().map(|rubric| async move {
            match pipeline.assess(draft, rubric).await {
                Ok((_, judgment)) => RubricVerdict {
                    rubric_id: rubric.id.clone(),
                    met: judgment.met as u8,
                    rationale: judgment.rationale,
                    error: None,
                },
                Err(e) => RubricVerdict {
                    rubric_id: rubric.id.clone(),
                    met: 0,
                    rationale: String::new(),
                    error: Some(e.to_string()),
                },
            }
        }).collect::<Vec<_>>())
        .buffered(8)
        .collect::<Vec<_>>()
        .await;
    essay_score(draft, assignment, verdicts)
}

/// Scores many drafts, several at a time, preserving input order.
pub async fn score_corpus<'a, F>(
    pipeline: &Pipeline,
    drafts: &'a [EssayDraft],
    assignment_for: F,
    concurrency: usize,
) -> Vec<Result<EssayScore, ScoringError>>
where
    F: Fn(&EssayDraft) -> Option<&'a Assignment>,
{
    stream::iter(drafts.iter().map(|d| {
            let assignment = assignment_for(d);
            async move {
                match assignment {
                    Some(a) => score_essay(pipeline, d, a).await,
                    None => Err(ScoringError::KeyMismatch(format!("no assignment {:?}", d.assignment_id))),
                }
            }
        }).collect::<Vec<_>>())
        .buffered(concurrency.max(1))
        .collect()
        .await
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ScoreDistribution {
    pub n: usize,
    pub mean: f64,
    pub min: f64,
    pub max: f64,
}

pub fn score_distribution(scores: &[EssayScore]) -> Option<ScoreDistribution> {
    if scores.is_empty() {
        return None;
    }
    let totals: Vec<f64> = scores.iter().map(|s| s.total).collect();
    Some(ScoreDistribution {
        n: totals.len(),
        mean: crate::stats::mean(&totals),
        min: totals.iter().copied().fold(f64::INFINITY, f64::min),
        max: totals.iter().copied().fold(f64::NEG_INFINITY, f64::max),
    })
}

/// One expert label, as read from a gold-label file.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct GoldLabel {
    pub essay_id: String,
    pub rubric_id: String,
    pub met: u8,
}

pub type VerdictKey = (String, String);

pub fn verdict_map(scores: &[EssayScore]) -> BTreeMap<VerdictKey, u8> {
    scores
        .iter()
        .flat_map(|s| s.verdicts.iter().map(move |v| ((s.essay_id.clone(), v.rubric_id.clone()), v.met)))
        .collect()
}

pub fn gold_map(labels: &[GoldLabel]) -> BTreeMap<VerdictKey, u8> {
    labels.iter().map(|l| ((l.essay_id.clone(), l.rubric_id.clone()), l.met)).collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AgreementReport {
    pub n_judgments: usize,
    pub accuracy: f64,
    /// Share of gold "met" judgments the machine also marked met.
    pub recall_satisfied: Option<f64>,
    /// Share of gold "missing" judgments the machine also marked missing.
    pub recall_missing: Option<f64>,
    /// Rows: gold (missing, met); columns: machine.
    pub confusion: Vec<Vec<u64>>,
    pub kappa: Option<f64>,
    pub per_rubric_accuracy: BTreeMap<String, f64>,
}

/// Agreement of machine verdicts with gold labels over identical key sets.
pub fn evaluate_against_gold(
    machine: &BTreeMap<VerdictKey, u8>,
    gold: &BTreeMap<VerdictKey, u8>,
) -> Result<AgreementReport, ScoringError> {
    let mk: BTreeSet<&VerdictKey> = machine.keys().collect();
    let gk: BTreeSet<&VerdictKey> = gold.keys().collect();
    if mk != gk {
        let only_machine = mk.difference(&gk).count();
        let only_gold = gk.difference(&mk).count();
        return Err(ScoringError::KeyMismatch(format!(
            "{only_machine} keys only in machine output, {only_gold} only in gold labels"
        )));
    }
    let pairs: Vec<(&VerdictKey, bool, bool)> =
        gold.iter().map(|(k, g)| (k, *g == 1, machine[k] == 1)).collect();
    let n = pairs.len();
    let agree = pairs.iter().filter(|(_, g, m)| g == m).count();
    let recall = |class: bool| {
        let total = pairs.iter().filter(|(_, g, _)| *g == class).count();
        let hit = pairs.iter().filter(|(_, g, m)| *g == class && *m == class).count();
        (total > 0).then(|| hit as f64 / total as f64)
    };
    let mut per_rubric: BTreeMap<String, (usize, usize)> = BTreeMap::new();
    for ((_, rubric), g, m) in &pairs {
        let e = per_rubric.entry(rubric.clone()).or_default();
        e.0 += (g == m) as usize;
        e.1 += 1;
    }
    let confusion = binary_confusion(pairs.iter().map(|(_, g, m)| (*g, *m)));
    let kappa = cohen_kappa(&confusion).ok().and_then(|k| k.kappa);
    Ok(AgreementReport {
        n_judgments: n,
        accuracy: if n == 0 { 0.0 } else { agree as f64 / n as f64 },
        recall_satisfied: recall(true),
        recall_missing: recall(false),
        confusion,
        kappa,
        per_rubric_accuracy: per_rubric.into_iter().map(|(k, (a, t))| (k, a as f64 / t as f64)).collect(),
    })
}
