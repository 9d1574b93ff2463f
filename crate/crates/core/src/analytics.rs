//! Reports derived from the grading event log: per-essay usage, corpus-wide
//! adoption and judgment agreement, and per-grader score dispersion.
//!
//! Every report is a pure function of the events it is given.

use std::collections::{BTreeMap, BTreeSet, HashMap};

use serde::{Deserialize, Serialize};

use crate::domain::Condition;
use crate::error::{EventLogError, StatsError};
use crate::events::{ActionKind, EventAction, GradingEvent, Target};
use crate::stats::{mean, sample_variance};

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct EssayUsageSummary {
    pub essay_id: String,
    pub events: usize,
    pub flip_count: usize,
    pub historic_adds: usize,
    pub ai_constructive_adds: usize,
    pub ai_positive_adds: usize,
    pub additional_feedback_count: usize,
    pub edit_count: usize,
    pub regenerate_count: usize,
    pub reposition_count: usize,
    pub delete_count: usize,
    /// Nonempty feedback comments when the log ends.
    pub total_feedback: usize,
    /// Last minus first timestamp, idle time included.
    pub grading_seconds: f64,
}

/// Where a comment's text came from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Provenance {
    Historic,
    Ai,
    /// Typed by the grader in a rubric box or as a freeform comment.
    Grader,
}

#[derive(Debug, Clone, Default)]
struct CommentState {
    text: String,
    provenance: Option<Provenance>,
    /// An adoption happened and has not been cleared by a delete.
    adopted: bool,
}

/// Comment texts and provenance per essay, rebuilt from events.
#[derive(Debug, Clone, Default)]
struct FeedbackReplay {
    comments: BTreeMap<(String, Target), CommentState>,
    edited_after_adoption: BTreeSet<(String, Target)>,
}

impl FeedbackReplay {
    fn apply(&mut self, e: &GradingEvent) {
        let key = |t: Target| (e.essay_id.clone(), t);
        let mut adopt = |target: Target, text: &str, provenance: Provenance| {
            self.comments.insert(
                key(target),
                CommentState { text: text.to_string(), provenance: Some(provenance), adopted: true },
            );
        };
        match &e.action {
            EventAction::AddHistoric { rubric_id, text } => adopt(Target::Rubric(rubric_id.clone()), text, Provenance::Historic),
            EventAction::AddAiConstructive { rubric_id, text } | EventAction::AddAiPositive { rubric_id, text } => {
                adopt(Target::Rubric(rubric_id.clone()), text, Provenance::Ai)
            }
            EventAction::AddAdditionalFeedback { comment_id, text, .. } => {
                self.comments.insert(
                    key(Target::Comment(comment_id.clone())),
                    CommentState { text: text.clone(), provenance: Some(Provenance::Grader), adopted: false },
                );
            }
            EventAction::EditFinalText { target, text } => {
                let k = key(target.clone());
                let state = self.comments.entry(k.clone()).or_default();
                if state.adopted {
                    self.edited_after_adoption.insert(k);
                }
                if state.provenance.is_none() {
                    state.provenance = Some(Provenance::Grader);
                }
                state.text = text.clone();
            }
            EventAction::DeleteFeedback { target } => {
                self.comments.insert(key(target.clone()), CommentState::default());
            }
            _ => {}
        }
    }

    fn live(&self) -> impl Iterator<Item = (&(String, Target), &CommentState)> {
        self.comments.iter().filter(|(_, c)| !c.text.trim().is_empty())
    }
}

/// Usage counts for one essay. Errors if the log has no events for it.
pub fn summarize_essay(events: &[GradingEvent], essay_id: &str) -> Result<EssayUsageSummary, EventLogError> {
    let mine: Vec<&GradingEvent> = events.iter().filter(|e| e.essay_id == essay_id).collect();
    if mine.is_empty() {
        return Err(EventLogError::UnknownEssay(essay_id.to_string()));
    }
    let mut s = EssayUsageSummary { essay_id: essay_id.to_string(), events: mine.len(), ..Default::default() };
    let mut replay = FeedbackReplay::default();
    for e in &mine {
        match e.kind() {
            ActionKind::FlipJudgment => s.flip_count += 1,
            ActionKind::AddHistoric => s.historic_adds += 1,
            ActionKind::AddAiConstructive => s.ai_constructive_adds += 1,
            ActionKind::AddAiPositive => s.ai_positive_adds += 1,
            ActionKind::AddAdditionalFeedback => s.additional_feedback_count += 1,
            ActionKind::EditFinalText => s.edit_count += 1,
            ActionKind::Regenerate => s.regenerate_count += 1,
            ActionKind::RepositionHighlight => s.reposition_count += 1,
            ActionKind::DeleteFeedback => s.delete_count += 1,
            ActionKind::Open | ActionKind::Close | ActionKind::SetScore => {}
        }
        replay.apply(e);
    }
    s.total_feedback = replay.live().count();
    let first = mine.iter().map(|e| e.timestamp).min().expect("nonempty");
    let last = mine.iter().map(|e| e.timestamp).max().expect("nonempty");
    s.grading_seconds = (last - first).num_milliseconds() as f64 / 1000.0;
    Ok(s)
}

/// One summary per essay, in order of first appearance.
pub fn summarize_all(events: &[GradingEvent]) -> Vec<EssayUsageSummary> {
    let mut seen = BTreeSet::new();
    let mut order = Vec::new();
    for e in events {
        if seen.insert(e.essay_id.as_str()) {
            order.push(e.essay_id.as_str());
        }
    }
    order.into_iter().map(|id| summarize_essay(events, id).expect("essay has events")).collect()
}

/// Mean of each usage field across essays.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct UsageMeans {
    pub essays: usize,
    pub flip_count: f64,
    pub historic_adds: f64,
    pub ai_constructive_adds: f64,
    pub ai_positive_adds: f64,
    pub additional_feedback_count: f64,
    pub total_feedback: f64,
    pub grading_seconds: f64,
}

pub fn usage_means(summaries: &[EssayUsageSummary]) -> UsageMeans {
    let avg = |f: fn(&EssayUsageSummary) -> f64| mean(&summaries.iter().map(f).collect::<Vec<_>>());
    UsageMeans {
        essays: summaries.len(),
        flip_count: avg(|s| s.flip_count as f64),
        historic_adds: avg(|s| s.historic_adds as f64),
        ai_constructive_adds: avg(|s| s.ai_constructive_adds as f64),
        ai_positive_adds: avg(|s| s.ai_positive_adds as f64),
        additional_feedback_count: avg(|s| s.additional_feedback_count as f64),
        total_feedback: avg(|s| s.total_feedback as f64),
        grading_seconds: avg(|s| s.grading_seconds),
    }
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct AdoptionReport {
    /// Distinct (essay, rubric) judgments shown to graders.
    pub judgments_total: usize,
    pub judgments_approved: usize,
    /// Judgments with an odd number of flips.
    pub judgments_corrected: usize,
    pub approval_rate: f64,
    /// Adoption events.
    pub historic_adopted: usize,
    pub ai_adopted: usize,
    pub regenerations: usize,
    /// Final comments, and the share of them whose text came from each source.
    pub total_feedback: usize,
    pub historic_fraction: f64,
    pub ai_fraction: f64,
    /// Distinct comments edited after being adopted.
    pub post_adoption_edits: usize,
}

pub fn corpus_adoption(events: &[GradingEvent]) -> AdoptionReport {
    let mut judgments: BTreeSet<(&str, &str)> = BTreeSet::new();
    let mut flips: HashMap<(&str, &str), usize> = HashMap::new();
    let mut replay = FeedbackReplay::default();
    let mut r = AdoptionReport::default();
    for e in events {
        match &e.action {
            EventAction::Open { condition: Condition::FeedbackWriter, rubric_ids, .. } => {
                judgments.extend(rubric_ids.iter().map(|id| (e.essay_id.as_str(), id.as_str())));
            }
            EventAction::FlipJudgment { rubric_id, .. } => {
                *flips.entry((e.essay_id.as_str(), rubric_id.as_str())).or_default() += 1;
            }
            EventAction::AddHistoric { .. } => r.historic_adopted += 1,
            EventAction::AddAiConstructive { .. } | EventAction::AddAiPositive { .. } => r.ai_adopted += 1,
            EventAction::Regenerate { .. } => r.regenerations += 1,
            _ => {}
        }
        replay.apply(e);
    }
    r.judgments_total = judgments.len();
    r.judgments_corrected = judgments.iter().filter(|k| flips.get(*k).is_some_and(|n| n % 2 == 1)).count();
    r.judgments_approved = r.judgments_total - r.judgments_corrected;
    r.approval_rate = if r.judgments_total == 0 { 0.0 } else { r.judgments_approved as f64 / r.judgments_total as f64 };
    let live: Vec<&CommentState> = replay.live().map(|(_, c)| c).collect();
    r.total_feedback = live.len();
    let share = |p: Provenance| {
        if live.is_empty() {
            0.0
        } else {
            live.iter().filter(|c| c.provenance == Some(p)).count() as f64 / live.len() as f64
        }
    };
    r.historic_fraction = share(Provenance::Historic);
    r.ai_fraction = share(Provenance::Ai);
    r.post_adoption_edits = replay.edited_after_adoption.len();
    r
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GraderStats {
    pub grader_id: String,
    pub n: usize,
    pub mean: f64,
    /// Sample variance; zero for a single score.
    pub variance: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GraderVarianceReport {
    pub graders: Vec<GraderStats>,
    /// Sample variance of the per-grader means.
    pub variance_of_means: f64,
}

pub fn grader_variance(scores: &BTreeMap<String, Vec<f64>>) -> Result<GraderVarianceReport, StatsError> {
    let mut graders = Vec::with_capacity(scores.len());
    for (grader, values) in scores {
        if values.is_empty() {
            return Err(StatsError::EmptyGroup(grader.clone()));
        }
        graders.push(GraderStats { grader_id: grader.clone(), n: values.len(), mean: mean(values), variance: sample_variance(values) });
    }
    let means: Vec<f64> = graders.iter().map(|g| g.mean).collect();
    Ok(GraderVarianceReport { variance_of_means: sample_variance(&means), graders })
}

/// Scores per grader from `set_score` events; the last score per essay wins.
pub fn scores_by_grader(events: &[GradingEvent]) -> BTreeMap<String, Vec<f64>> {
    let mut last: BTreeMap<(&str, &str), f64> = BTreeMap::new();
    for e in events {
        if let EventAction::SetScore { score } = e.action {
            last.insert((e.grader_id.as_str(), e.essay_id.as_str()), score);
        }
    }
    let mut out: BTreeMap<String, Vec<f64>> = BTreeMap::new();
    for ((grader, _), score) in last {
        out.entry(grader.to_string()).or_default().push(score);
    }
    out
}

/// Per-student record for downstream outcome modeling. Stored and exported
/// only; no model is fitted here.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OutcomeRecord {
    pub student_id: String,
    pub assignment_id: String,
    pub first_draft_quality: f64,
    pub final_draft_quality: f64,
    pub ta_first_draft_score: f64,
    #[serde(default)]
    pub post_test_score: Option<f64>,
    pub condition: Condition,
}

impl OutcomeRecord {
    pub fn validate(&self) -> Result<(), String> {
        let fields = [
            ("first_draft_quality", Some(self.first_draft_quality)),
            ("final_draft_quality", Some(self.final_draft_quality)),
            ("ta_first_draft_score", Some(self.ta_first_draft_score)),
            ("post_test_score", self.post_test_score),
        ];
        for (name, value) in fields {
            if let Some(v) = value {
                if !(0.0..=1.0).contains(&v) {
                    return Err(format!("{name} = {v} is outside [0, 1]"));
                }
            }
        }
        Ok(())
    }
}
