//! Builds a small grading log by hand, writes it to disk as JSON lines and
//! derives the per-essay and corpus reports from it.
//!
//! cargo run --example usage_analytics

use chrono::{Duration, TimeZone, Utc};
use rubric_feedback::analytics::{corpus_adoption, grader_variance, scores_by_grader, summarize_all, usage_means};
use rubric_feedback::pipeline::{FeedbackSuggestion, SuggestionKind};
use rubric_feedback::events::{read_file, to_jsonl, EventAction, GradingEvent, Target};
use rubric_feedback::{Condition, Stage};

fn main() -> anyhow::Result<()> {
    let start = Utc.with_ymd_and_hms(2024, 10, 1, 9, 0, 0).unwrap();
    let mut events = Vec::new();
    let rubrics: Vec<String> = (1..=4).map(|i| format!("r{i:02}")).collect();
    for (n, (essay, grader)) in [("e1", "ta1"), ("e2", "ta1"), ("e3", "ta2")].into_iter().enumerate() {
        let actions = vec![
            EventAction::Open { condition: Condition::FeedbackWriter, stage: Stage::First, rubric_ids: rubrics.clone() },
            EventAction::FlipJudgment {
                rubric_id: "r01".into(),
                met: n % 2 == 0,
                suggestion: FeedbackSuggestion {
                    kind: SuggestionKind::for_judgment(n % 2 == 0),
                    text: "What drives the shift in supply?".into(),
                },
                stale: false,
            },
            EventAction::AddAiConstructive { rubric_id: "r01".into(), text: "What drives the shift in supply?".into() },
            EventAction::AddHistoric { rubric_id: "r02".into(), text: "Label both axes.".into() },
            EventAction::EditFinalText { target: Target::Rubric("r02".into()), text: "Label both axes and the curves.".into() },
            EventAction::SetScore { score: 0.6 + 0.1 * n as f64 },
            EventAction::Close { score: Some(0.6 + 0.1 * n as f64), comments: 2 },
        ];
        for (i, action) in actions.into_iter().enumerate() {
            events.push(GradingEvent {
                event_id: i as u64 + 1,
                timestamp: start + Duration::minutes(10 * n as i64) + Duration::seconds(15 * i as i64),
                grader_id: grader.into(),
                essay_id: essay.into(),
                assignment_id: "wa1".into(),
                session_id: format!("s{n}"),
                action,
            });
        }
    }

    let dir = tempfile::tempdir()?;
    let path = dir.path().join("events.jsonl");
    std::fs::write(&path, to_jsonl(&events))?;
    let events = read_file(&path)?;

    let summaries = summarize_all(&events);
    for s in &summaries {
        println!(
            "{}: flips {} historic {} ai {} additional {} total {}",
            s.essay_id, s.flip_count, s.historic_adds, s.ai_constructive_adds + s.ai_positive_adds, s.additional_feedback_count, s.total_feedback
        );
    }
    println!("means: {:?}", usage_means(&summaries));
    let adoption = corpus_adoption(&events);
    println!(
        "judgments approved {:.1}%, historic share {:.1}%, AI share {:.1}%, edited after adoption {}",
        adoption.approval_rate * 100.0,
        adoption.historic_fraction * 100.0,
        adoption.ai_fraction * 100.0,
        adoption.post_adoption_edits
    );
    let variance = grader_variance(&scores_by_grader(&events))?;
    println!("variance of grader mean scores: {:.4}", variance.variance_of_means);
    Ok(())
}
