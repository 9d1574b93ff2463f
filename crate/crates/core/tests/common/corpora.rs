//! Synthetic grading logs whose true counts are known by construction.

use std::collections::HashMap;

use chrono::{DateTime, Duration, Utc};
use rubric_feedback::events::{EventAction, GradingEvent, Target};
use rubric_feedback::pipeline::{FeedbackSuggestion, SuggestionKind};
use rubric_feedback::text::{AnchorStatus, SpanAnchor, TextRange};
use rubric_feedback::{Condition, Stage};

use super::share;

#[derive(Debug, Clone)]
pub struct EssayRef {
    pub essay_id: String,
    pub assignment_id: String,
    pub grader_id: String,
    pub session_id: String,
}

impl EssayRef {
    pub fn new(essay_id: &str, assignment_id: &str, grader_id: &str) -> Self {
        EssayRef {
            essay_id: essay_id.into(),
            assignment_id: assignment_id.into(),
            grader_id: grader_id.into(),
            session_id: format!("sess-{essay_id}"),
        }
    }
}

/// Appends well-formed events: ids count up per essay and the clock moves
/// forward a few seconds per event.
pub struct LogBuilder {
    events: Vec<GradingEvent>,
    clock: DateTime<Utc>,
    next_id: HashMap<String, u64>,
}

impl Default for LogBuilder {
    fn default() -> Self {
        LogBuilder {
            events: Vec::new(),
            clock: DateTime::parse_from_rfc3339("2024-10-01T09:00:00Z").unwrap().with_timezone(&Utc),
            next_id: HashMap::new(),
        }
    }
}

impl LogBuilder {
    pub fn push(&mut self, essay: &EssayRef, action: EventAction) {
        let id = self.next_id.entry(essay.essay_id.clone()).or_insert(0);
        *id += 1;
        self.clock += Duration::seconds(7);
        self.events.push(GradingEvent {
            event_id: *id,
            timestamp: self.clock,
            grader_id: essay.grader_id.clone(),
            essay_id: essay.essay_id.clone(),
            assignment_id: essay.assignment_id.clone(),
            session_id: essay.session_id.clone(),
            action,
        });
    }

    pub fn finish(self) -> Vec<GradingEvent> {
        self.events
    }
}

pub fn rubric_ids(n: usize) -> Vec<String> {
    (1..=n).map(|i| format!("r{i:02}")).collect()
}

pub fn open(condition: Condition, n_rubrics: usize) -> EventAction {
    EventAction::Open { condition, stage: Stage::First, rubric_ids: rubric_ids(n_rubrics) }
}

pub fn flip(rubric_id: &str, met: bool) -> EventAction {
    EventAction::FlipJudgment {
        rubric_id: rubric_id.into(),
        met,
        suggestion: FeedbackSuggestion { kind: SuggestionKind::for_judgment(met), text: format!("after flip on {rubric_id}") },
        stale: false,
    }
}

pub fn edit(target: Target, text: impl Into<String>) -> EventAction {
    EventAction::EditFinalText { target, text: text.into() }
}

pub fn freeform(essay_id: &str, comment_id: &str, text: impl Into<String>) -> EventAction {
    EventAction::AddAdditionalFeedback {
        comment_id: comment_id.into(),
        anchor: SpanAnchor { draft_id: essay_id.into(), ranges: vec![TextRange::new(0, 12)], status: AnchorStatus::Grounded },
        text: text.into(),
    }
}

pub fn rubric(id: &str) -> Target {
    Target::Rubric(id.into())
}

/// True per-essay counts: flips, historic adds, AI constructive adds, AI
/// positive adds, additional comments, and final comments.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct UsageCounts {
    pub flips: usize,
    pub historic: usize,
    pub ai_constructive: usize,
    pub ai_positive: usize,
    pub additional: usize,
    pub total: usize,
}

pub const TABLE5_ESSAYS: usize = 100;

/// Target means across all assignments: flips, historic, AI constructive,
/// AI positive, additional, total comments.
pub const TABLE5_MEANS: [f64; 6] = [2.83, 1.92, 3.41, 0.91, 1.27, 8.71];

/// 100 assisted essays whose counts sum to 283 flips, 192 historic, 341 AI
/// constructive, 91 AI positive, 127 additional comments and 120 boxes typed
/// by hand, so 871 final comments. Every comment sits on its own target.
/// Regenerations and highlight moves are mixed in and must not count.
pub fn table5_corpus() -> (Vec<GradingEvent>, Vec<UsageCounts>) {
    let mut log = LogBuilder::default();
    let mut expected = Vec::new();
    let n = TABLE5_ESSAYS;
    for i in 0..n {
        let assignment = if i % 2 == 0 { "wa1" } else { "wa2" };
        let essay = EssayRef::new(&format!("t5-{i:03}"), assignment, &format!("ta{}", i % 6 + 1));
        let ids = rubric_ids(35);
        let c = UsageCounts {
            flips: share(283, n, i),
            historic: share(192, n, i),
            ai_constructive: share(341, n, i),
            ai_positive: share(91, n, i),
            additional: share(127, n, i),
            total: 0,
        };
        let typed = share(120, n, i);
        log.push(&essay, open(Condition::FeedbackWriter, 35));
        let mut next_box = 0;
        let mut take = || {
            next_box += 1;
            ids[next_box - 1].clone()
        };
        for _ in 0..c.historic {
            let id = take();
            log.push(&essay, EventAction::AddHistoric { rubric_id: id.clone(), text: format!("Historic note on {id}.") });
        }
        for k in 0..c.ai_constructive {
            let id = take();
            if k == 0 {
                log.push(&essay, EventAction::Regenerate {
                    rubric_id: id.clone(),
                    suggestion: FeedbackSuggestion { kind: SuggestionKind::AiConstructive, text: format!("Second try on {id}?") },
                });
            }
            log.push(&essay, EventAction::AddAiConstructive { rubric_id: id.clone(), text: format!("Second try on {id}?") });
        }
        for _ in 0..c.ai_positive {
            let id = take();
            log.push(&essay, EventAction::AddAiPositive { rubric_id: id.clone(), text: format!("Good point on {id}.") });
        }
        for _ in 0..typed {
            let id = take();
            log.push(&essay, EventAction::RepositionHighlight {
                target: rubric(&id),
                anchor: SpanAnchor { draft_id: essay.essay_id.clone(), ranges: vec![TextRange::new(3, 9)], status: AnchorStatus::Grounded },
            });
            log.push(&essay, edit(rubric(&id), format!("Typed note on {id}.")));
        }
        for k in 0..c.additional {
            log.push(&essay, freeform(&essay.essay_id, &format!("c{}", k + 1), format!("Extra comment {}.", k + 1)));
        }
        // Flips land on the last boxes, which hold no comment.
        for k in 0..c.flips {
            log.push(&essay, flip(&ids[34 - k], k % 2 == 0));
        }
        log.push(&essay, EventAction::SetScore { score: 0.5 });
        log.push(&essay, EventAction::Close { score: Some(0.5), comments: 0 });
        expected.push(UsageCounts { total: c.historic + c.ai_constructive + c.ai_positive + c.additional + typed, ..c });
    }
    (log.finish(), expected)
}

/// Expected corpus totals of [`adoption_corpus`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct AdoptionTargets {
    pub essays: usize,
    pub judgments: usize,
    pub corrected: usize,
    pub historic_events: usize,
    pub ai_events: usize,
    pub historic_comments: usize,
    pub ai_comments: usize,
    pub grader_comments: usize,
    pub post_adoption_edits: usize,
    pub regenerations: usize,
}

pub const ADOPTION: AdoptionTargets = AdoptionTargets {
    essays: 703,
    judgments: 24_270,
    corrected: 2_747,
    historic_events: 1_348,
    ai_events: 3_141,
    historic_comments: 1_348,
    ai_comments: 3_115,
    grader_comments: 1_609,
    post_adoption_edits: 806,
    regenerations: 230,
};

/// 703 assisted essays, 368 with 35 rubric items and 335 with 34, so 24,270
/// judgments shown. 2,747 judgments are flipped an odd number of times and
/// 60 more are flipped twice. 1,348 historic and 3,115 AI comments are
/// adopted on distinct boxes; 26 AI boxes are regenerated and adopted again,
/// for 3,141 AI adoption events. Graders type 609 boxes and add 1,000
/// freeform comments, and edit 806 adopted comments afterwards. 230
/// regenerations in total.
pub fn adoption_corpus() -> Vec<GradingEvent> {
    let t = ADOPTION;
    let n = t.essays;
    let mut log = LogBuilder::default();
    for i in 0..n {
        let n_rubrics = if i < 368 { 35 } else { 34 };
        let ids = rubric_ids(n_rubrics);
        let assignment = if i % 2 == 0 { "wa1" } else { "wa2" };
        let essay = EssayRef::new(&format!("ad-{i:03}"), assignment, &format!("ta{}", i % 6 + 1));
        let historic = share(t.historic_comments, n, i);
        let ai = share(t.ai_comments, n, i);
        let typed = share(609, n, i);
        let free = share(1_000, n, i);
        let odd = share(t.corrected, n, i);
        let even = share(60, n, i);
        let edits = share(t.post_adoption_edits, n, i);
        let regens = share(t.regenerations, n, i);
        let readopt = i < (t.ai_events - t.ai_comments);
        log.push(&essay, open(Condition::FeedbackWriter, n_rubrics));
        let mut adopted = Vec::new();
        for (k, id) in ids.iter().enumerate().take(historic) {
            log.push(&essay, EventAction::AddHistoric { rubric_id: id.clone(), text: format!("Historic comment {k}.") });
            adopted.push(id.clone());
        }
        for k in 0..ai {
            let id = &ids[historic + k];
            let text = format!("Suggestion for {id}?");
            if k == 0 && regens > 0 && !readopt {
                log.push(&essay, EventAction::Regenerate {
                    rubric_id: id.clone(),
                    suggestion: FeedbackSuggestion { kind: SuggestionKind::AiConstructive, text: text.clone() },
                });
            }
            let action = if (i + k) % 4 == 0 {
                EventAction::AddAiPositive { rubric_id: id.clone(), text }
            } else {
                EventAction::AddAiConstructive { rubric_id: id.clone(), text }
            };
            log.push(&essay, action);
            if k == 0 && readopt {
                let again = format!("Another suggestion for {id}?");
                log.push(&essay, EventAction::Regenerate {
                    rubric_id: id.clone(),
                    suggestion: FeedbackSuggestion { kind: SuggestionKind::AiConstructive, text: again.clone() },
                });
                log.push(&essay, EventAction::AddAiConstructive { rubric_id: id.clone(), text: again });
            }
            adopted.push(id.clone());
        }
        for k in 0..typed {
            let id = &ids[historic + ai + k];
            log.push(&essay, edit(rubric(id), format!("Grader note {k}.")));
        }
        for k in 0..free {
            log.push(&essay, freeform(&essay.essay_id, &format!("c{}", k + 1), format!("Freeform {k}.")));
        }
        for id in adopted.iter().take(edits) {
            log.push(&essay, edit(rubric(id), format!("Adopted then edited on {id}.")));
        }
        for k in 0..odd {
            let id = &ids[n_rubrics - 1 - k];
            for f in 0..(1 + 2 * (k % 2)) {
                log.push(&essay, flip(id, f % 2 == 0));
            }
        }
        for k in 0..even {
            let id = &ids[n_rubrics - 1 - odd - k];
            log.push(&essay, flip(id, true));
            log.push(&essay, flip(id, false));
        }
        log.push(&essay, EventAction::SetScore { score: 0.7 });
        log.push(&essay, EventAction::Close { score: Some(0.7), comments: 0 });
    }
    log.finish()
}

/// `SetScore` events for six graders, ten essays each. Each grader's scores
/// sit symmetrically around `center + offsets[g]`, so the per-grader means
/// are exactly those values.
pub fn grader_score_corpus(center: f64, offsets: &[f64], tag: &str) -> Vec<GradingEvent> {
    let mut log = LogBuilder::default();
    for (g, offset) in offsets.iter().enumerate() {
        for e in 0..10 {
            let essay = EssayRef::new(&format!("{tag}-g{g}-e{e}"), "wa1", &format!("{tag}-ta{g}"));
            let spread = if e % 2 == 0 { 0.05 } else { -0.05 };
            log.push(&essay, EventAction::SetScore { score: 0.2 });
            log.push(&essay, EventAction::SetScore { score: center + offset + spread });
        }
    }
    log.finish()
}

/// Spreads of grader means typical of unassisted and assisted grading.
pub const BASELINE_OFFSETS: [f64; 6] = [-0.135, -0.081, -0.027, 0.027, 0.081, 0.135];
pub const ASSISTED_OFFSETS: [f64; 6] = [-0.05, -0.03, -0.01, 0.01, 0.03, 0.05];
