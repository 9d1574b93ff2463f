mod common;

use std::collections::{BTreeMap, BTreeSet};

use common::corpora::{
    adoption_corpus, flip, freeform, grader_score_corpus, open, rubric, table5_corpus, EssayRef, LogBuilder, ADOPTION,
    ASSISTED_OFFSETS, BASELINE_OFFSETS, TABLE5_MEANS,
};
use proptest::prelude::*;
use rubric_feedback::analytics::{corpus_adoption, grader_variance, scores_by_grader, summarize_all, usage_means};
use rubric_feedback::events::{parse_events, to_jsonl, EventAction, EventFiles, EventLog, GradingEvent, Target};
use rubric_feedback::Condition;

fn round2(x: f64) -> f64 {
    (x * 100.0).round() / 100.0
}

#[test]
fn table5_counts_and_means() {
    let (events, expected) = table5_corpus();
    EventLog::from_events(events.clone(), chrono::Duration::zero()).unwrap();
    let summaries = summarize_all(&events);
    assert_eq!(summaries.len(), expected.len());
    for (s, e) in summaries.iter().zip(&expected) {
        let got = [s.flip_count, s.historic_adds, s.ai_constructive_adds, s.ai_positive_adds, s.additional_feedback_count, s.total_feedback];
        let want = [e.flips, e.historic, e.ai_constructive, e.ai_positive, e.additional, e.total];
        assert_eq!(got, want, "{}", s.essay_id);
    }
    let m = usage_means(&summaries);
    let got = [m.flip_count, m.historic_adds, m.ai_constructive_adds, m.ai_positive_adds, m.additional_feedback_count, m.total_feedback];
    for (g, want) in got.iter().zip(TABLE5_MEANS) {
        assert_eq!(round2(*g), want);
    }
}

#[test]
fn adoption_corpus_totals() {
    let events = adoption_corpus();
    EventLog::from_events(events.clone(), chrono::Duration::zero()).unwrap();
    let r = corpus_adoption(&events);
    assert_eq!(r.judgments_total, ADOPTION.judgments);
    assert_eq!(r.judgments_corrected, ADOPTION.corrected);
    assert_eq!(r.judgments_approved, ADOPTION.judgments - ADOPTION.corrected);
    assert_eq!(r.historic_adopted, 1_348);
    assert_eq!(r.ai_adopted, 3_141);
    assert_eq!(r.regenerations, ADOPTION.regenerations);
    assert_eq!(r.post_adoption_edits, ADOPTION.post_adoption_edits);
    let comments = ADOPTION.historic_comments + ADOPTION.ai_comments + ADOPTION.grader_comments;
    assert_eq!(r.total_feedback, comments);
    assert_eq!((r.approval_rate * 1000.0).round() / 10.0, 88.7);
    assert_eq!((r.historic_fraction * 1000.0).round() / 10.0, 22.2);
    assert_eq!((r.ai_fraction * 1000.0).round() / 10.0, 51.3);
}

#[test]
fn grader_variance_separates_spread_from_agreement() {
    let baseline = grader_variance(&scores_by_grader(&grader_score_corpus(0.7, &BASELINE_OFFSETS, "b"))).unwrap();
    let assisted = grader_variance(&scores_by_grader(&grader_score_corpus(0.7, &ASSISTED_OFFSETS, "f"))).unwrap();
    assert_eq!(baseline.graders.len(), 6);
    for g in &baseline.graders {
        assert_eq!(g.n, 10);
    }
    // Sample variance of the offsets, by hand.
    let by_hand = |o: &[f64]| o.iter().map(|x| x * x).sum::<f64>() / 5.0;
    assert!((baseline.variance_of_means - by_hand(&BASELINE_OFFSETS)).abs() < 1e-12);
    assert!((assisted.variance_of_means - by_hand(&ASSISTED_OFFSETS)).abs() < 1e-12);
    assert!((0.009..=0.012).contains(&baseline.variance_of_means));
    assert!((0.001..=0.002).contains(&assisted.variance_of_means));
}

#[test]
fn log_files_round_trip() {
    let (events, _) = table5_corpus();
    let dir = tempfile::tempdir().unwrap();
    let files = EventFiles::new(dir.path()).unwrap();
    for e in &events {
        files.append(e).unwrap();
    }
    let mut back = files.read_all().unwrap();
    let key = |e: &GradingEvent| (e.essay_id.clone(), e.event_id);
    back.sort_by_key(key);
    let mut want = events.clone();
    want.sort_by_key(key);
    assert_eq!(back, want);
    assert_eq!(parse_events(&to_jsonl(&events)).unwrap(), events);
}

#[test]
fn log_rejects_gaps_and_backwards_time() {
    let mut log = LogBuilder::default();
    let essay = EssayRef::new("x", "wa1", "ta1");
    log.push(&essay, open(Condition::FeedbackWriter, 3));
    log.push(&essay, flip("r01", true));
    let events = log.finish();
    let mut gap = events.clone();
    gap[1].event_id = 3;
    assert!(EventLog::from_events(gap, chrono::Duration::zero()).is_err());
    let mut back = events.clone();
    back[1].timestamp = back[0].timestamp - chrono::Duration::seconds(30);
    assert!(EventLog::from_events(back.clone(), chrono::Duration::seconds(2)).is_err());
    back[1].timestamp = back[0].timestamp - chrono::Duration::seconds(1);
    let clamped = EventLog::from_events(back, chrono::Duration::seconds(2)).unwrap();
    assert_eq!(clamped.events()[1].timestamp, events[0].timestamp);
}

/// A random single-essay log and, alongside it, the counts a reader of the
/// log would write down by hand.
#[derive(Debug, Clone)]
struct RandomEssay {
    events: Vec<(u8, u8, u8)>,
}

fn random_essay() -> impl Strategy<Value = RandomEssay> {
    prop::collection::vec((0u8..9, 0u8..6, 0u8..4), 0..40).prop_map(|events| RandomEssay { events })
}

#[derive(Debug, Default, PartialEq)]
struct HandCount {
    kinds: BTreeMap<&'static str, usize>,
    live: usize,
    flips: BTreeMap<String, usize>,
}

fn build(essays: &[RandomEssay], tag: &str, log: &mut LogBuilder) -> Vec<HandCount> {
    let mut counts = Vec::new();
    for (i, spec) in essays.iter().enumerate() {
        let essay = EssayRef::new(&format!("{tag}{i}"), "wa1", "ta1");
        let mut count = HandCount::default();
        let mut texts: BTreeMap<Target, String> = BTreeMap::new();
        log.push(&essay, open(Condition::FeedbackWriter, 6));
        let mut comments = 0;
        for (kind, box_index, text_pick) in &spec.events {
            let id = format!("r{:02}", box_index + 1);
            let text = ["", "Well argued.", "Add a diagram.", "  "][*text_pick as usize].to_string();
            let (name, action) = match kind {
                0 => {
                    *count.flips.entry(id.clone()).or_default() += 1;
                    ("flip", flip(&id, true))
                }
                1 => ("historic", EventAction::AddHistoric { rubric_id: id.clone(), text: text.clone() }),
                2 => ("ai_constructive", EventAction::AddAiConstructive { rubric_id: id.clone(), text: text.clone() }),
                3 => ("ai_positive", EventAction::AddAiPositive { rubric_id: id.clone(), text: text.clone() }),
                4 => {
                    comments += 1;
                    let cid = format!("c{comments}");
                    texts.insert(Target::Comment(cid.clone()), text.clone());
                    ("additional", freeform(&essay.essay_id, &cid, text.clone()))
                }
                5 => ("edit", EventAction::EditFinalText { target: rubric(&id), text: text.clone() }),
                6 => ("delete", EventAction::DeleteFeedback { target: rubric(&id) }),
                7 => ("score", EventAction::SetScore { score: 0.5 }),
                _ => ("reposition", EventAction::RepositionHighlight {
                    target: rubric(&id),
                    anchor: rubric_feedback::text::SpanAnchor::unanchored(&essay.essay_id),
                }),
            };
            match kind {
                1..=3 | 5 => {
                    texts.insert(rubric(&id), text);
                }
                6 => {
                    texts.remove(&rubric(&id));
                }
                _ => {}
            }
            *count.kinds.entry(name).or_default() += 1;
            log.push(&essay, action);
        }
        count.live = texts.values().filter(|t| !t.trim().is_empty()).count();
        counts.push(count);
    }
    counts
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(10_000))]

    #[test]
    fn summaries_match_hand_counts(essays in prop::collection::vec(random_essay(), 1..4)) {
        let mut log = LogBuilder::default();
        let counts = build(&essays, "e", &mut log);
        let events = log.finish();
        let summaries = summarize_all(&events);
        for (s, c) in summaries.iter().zip(&counts) {
            let k = |name: &str| c.kinds.get(name).copied().unwrap_or(0);
            prop_assert_eq!(s.flip_count, k("flip"));
            prop_assert_eq!(s.historic_adds, k("historic"));
            prop_assert_eq!(s.ai_constructive_adds, k("ai_constructive"));
            prop_assert_eq!(s.ai_positive_adds, k("ai_positive"));
            prop_assert_eq!(s.additional_feedback_count, k("additional"));
            prop_assert_eq!(s.edit_count, k("edit"));
            prop_assert_eq!(s.delete_count, k("delete"));
            prop_assert_eq!(s.total_feedback, c.live);
        }
        // A judgment counts as corrected exactly when it was flipped an odd
        // number of times.
        let report = corpus_adoption(&events);
        let odd: usize = counts.iter().map(|c| c.flips.values().filter(|n| *n % 2 == 1).count()).sum();
        prop_assert_eq!(report.judgments_total, 6 * essays.len());
        prop_assert_eq!(report.judgments_corrected, odd);
        prop_assert_eq!(report.total_feedback, counts.iter().map(|c| c.live).sum::<usize>());
    }

    #[test]
    fn reports_add_over_disjoint_logs(a in prop::collection::vec(random_essay(), 1..3), b in prop::collection::vec(random_essay(), 1..3)) {
        let mut la = LogBuilder::default();
        build(&a, "a", &mut la);
        let mut lb = LogBuilder::default();
        build(&b, "b", &mut lb);
        let (ea, eb) = (la.finish(), lb.finish());
        let both: Vec<GradingEvent> = ea.iter().chain(&eb).cloned().collect();
        let (ra, rb, rab) = (corpus_adoption(&ea), corpus_adoption(&eb), corpus_adoption(&both));
        prop_assert_eq!(rab.judgments_total, ra.judgments_total + rb.judgments_total);
        prop_assert_eq!(rab.judgments_corrected, ra.judgments_corrected + rb.judgments_corrected);
        prop_assert_eq!(rab.historic_adopted, ra.historic_adopted + rb.historic_adopted);
        prop_assert_eq!(rab.ai_adopted, ra.ai_adopted + rb.ai_adopted);
        prop_assert_eq!(rab.total_feedback, ra.total_feedback + rb.total_feedback);
        prop_assert_eq!(rab.post_adoption_edits, ra.post_adoption_edits + rb.post_adoption_edits);
        let mut separate = summarize_all(&ea);
        separate.extend(summarize_all(&eb));
        prop_assert_eq!(summarize_all(&both), separate);
        let ids: BTreeSet<_> = both.iter().map(|e| e.essay_id.clone()).collect();
        prop_assert_eq!(ids.len(), a.len() + b.len());
    }
}
