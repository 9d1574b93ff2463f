//! Drives the grading service the way a client would: random grader
//! actions, a shadow model of what the grader confirmed, and a scanner for
//! AI output in baseline responses.

use std::collections::{BTreeMap, BTreeSet};
use std::sync::Arc;

use axum::body::Body;
use axum::http::{Method, Request, StatusCode};
use rand::seq::IndexedRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rubric_feedback::events::Target;
use rubric_feedback::provider::MockProvider;
use rubric_feedback::service::{http, replay, Action, GradingService, GradingSession, SessionView};
use rubric_feedback::text::TextRange;
use rubric_feedback::{Catalog, Condition};
use serde_json::Value;
use tower::ServiceExt;

use super::{catalog, client_for, drafts, mock, read_fixture, roster};
use rubric_feedback::pipeline::Pipeline;

pub const GRADER: &str = "head-ta";

/// A service over the fixture catalog, roster and drafts, backed by the
/// mock provider.
pub fn fixture_service(seed: u64) -> (Arc<GradingService>, Arc<MockProvider>) {
    let provider = mock(seed);
    let service = GradingService::builder(catalog(), roster())
        .pipeline(Pipeline::new(client_for(&provider)))
        .reference_base("https://example.edu/rubrics")
        .build()
        .expect("service");
    let report = service.import_drafts(&read_fixture("drafts.jsonl")).expect("import");
    assert_eq!(report.persisted, drafts().len(), "fixture import: {report:?}");
    (Arc::new(service), provider)
}

pub fn essays_in(service: &GradingService, condition: Condition) -> Vec<String> {
    service
        .drafts()
        .into_iter()
        .filter(|d| service.roster().condition_for(&d.student_id, &d.assignment_id) == Some(condition))
        .map(|d| d.essay_id)
        .collect()
}

const TEXTS: &[&str] = &[
    "Good use of the supply and demand diagram.",
    "Which market failure does this policy correct?",
    "Explain who bears the tax burden.",
    "   ",
    "",
    "Nice \u{2014} but say more about elasticity.",
];

fn random_ranges(rng: &mut impl Rng, len: usize) -> Vec<TextRange> {
    (0..rng.random_range(0..3))
        .map(|_| {
            let start = rng.random_range(0..=len + 5);
            TextRange::new(start, start + rng.random_range(0..80))
        })
        .collect()
}

/// One plausible grader action for the session in `view`. Baseline
/// sessions only get actions their condition allows.
pub fn random_action(rng: &mut impl Rng, view: &SessionView) -> Action {
    let session = &view.session;
    let rubric_id = session.boxes.choose(rng).map(|b| b.rubric_id().to_string()).unwrap_or_default();
    let comment = session.freeform_comments.choose(rng).map(|c| c.comment_id.clone());
    let target = match (&comment, rng.random_bool(0.3)) {
        (Some(id), true) => Target::Comment(id.clone()),
        _ => Target::Rubric(rubric_id.clone()),
    };
    let len = view.essay_text.chars().count();
    let text = TEXTS.choose(rng).unwrap().to_string();
    let assisted = session.condition.is_assisted();
    match rng.random_range(0..if assisted { 12 } else { 7 }) {
        0 | 1 => Action::EditFinalText { target, text },
        2 => Action::AddFreeform { ranges: random_ranges(rng, len), text },
        3 => Action::Reposition { target, ranges: random_ranges(rng, len) },
        4 => Action::DeleteFeedback { target },
        5 => Action::SetScore { score: rng.random_range(0..=20) as f64 / 20.0 },
        6 => Action::EditFinalText { target: Target::Comment("c999".into()), text },
        7 | 8 => Action::AdoptAi { rubric_id },
        9 => Action::AdoptHistoric { rubric_id, index: Some(rng.random_range(0..4)) },
        10 => Action::Flip { rubric_id },
        _ => Action::Regenerate { rubric_id },
    }
}

/// What the grader has put into each feedback item, tracked from the
/// actions alone.
#[derive(Debug, Default, Clone)]
pub struct Shadow {
    pub texts: BTreeMap<Target, String>,
}

impl Shadow {
    /// Records a successful action. `before` is the view the action was
    /// chosen from.
    pub fn apply(&mut self, action: &Action, before: &SessionView, catalog: &Catalog) {
        let session = &before.session;
        match action {
            Action::AdoptAi { rubric_id } => {
                let bundle = session.rubric_box(rubric_id).and_then(|b| b.bundle()).expect("assisted box");
                self.texts.insert(Target::Rubric(rubric_id.clone()), bundle.ai_suggestion.text.clone());
            }
            Action::AdoptHistoric { rubric_id, index } => {
                let rubric = catalog.get(&session.assignment_id).and_then(|a| a.rubric(rubric_id)).expect("rubric");
                let text = rubric.historic_feedback[index.unwrap_or(0)].clone();
                self.texts.insert(Target::Rubric(rubric_id.clone()), text);
            }
            Action::EditFinalText { target, text } => {
                self.texts.insert(target.clone(), text.clone());
            }
            Action::AddFreeform { text, .. } => {
                self.texts.insert(Target::Comment(session.next_comment_id()), text.clone());
            }
            Action::DeleteFeedback { target } => {
                self.texts.remove(target);
            }
            Action::Flip { .. } | Action::Regenerate { .. } | Action::Reposition { .. } | Action::SetScore { .. } => {}
        }
    }

    pub fn confirmed(&self) -> BTreeMap<Target, String> {
        self.texts.iter().filter(|(_, t)| !t.trim().is_empty()).map(|(k, v)| (k.clone(), v.clone())).collect()
    }
}

#[derive(Debug, Default)]
pub struct ReplayOutcome {
    pub sequences: usize,
    pub actions_applied: usize,
    pub actions_rejected: usize,
    pub comments_exported: usize,
}

/// Runs `sequences` random action sequences through the service, then
/// checks that replaying each session's logged events over its initial
/// state reproduces the final state, and that the export holds exactly the
/// texts the grader confirmed.
pub async fn replay_random_sequences(sequences: usize, seed: u64) -> Result<ReplayOutcome, String> {
    let (service, _) = fixture_service(seed);
    let catalog = catalog();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut essays: Vec<String> = service.drafts().into_iter().map(|d| d.essay_id).collect();
    essays.sort();
    let mut outcome = ReplayOutcome::default();
    for essay_id in essays.iter().take(sequences) {
        let mut view = service.open_session(GRADER, essay_id).await.map_err(|e| e.to_string())?;
        let session_id = view.session.session_id.clone();
        let mut shadow = Shadow::default();
        for _ in 0..rng.random_range(5..40) {
            let action = random_action(&mut rng, &view);
            match service.apply_action(&session_id, action.clone()).await {
                Ok(next) => {
                    shadow.apply(&action, &view, &catalog);
                    view = next;
                    outcome.actions_applied += 1;
                }
                Err(_) => outcome.actions_rejected += 1,
            }
        }
        service.apply_action(&session_id, Action::SetScore { score: 0.75 }).await.map_err(|e| e.to_string())?;
        let export = service.finalize_and_export(&session_id).await.map_err(|e| e.to_string())?;
        let record = service.session_record(&session_id).await.map_err(|e| e.to_string())?;
        let events = service.events();
        let actions = events.iter().filter(|e| e.session_id == session_id).map(|e| &e.action);
        let replayed: GradingSession = replay(&record.initial, actions).map_err(|e| e.to_string())?;
        if replayed != record.current {
            return Err(format!("{essay_id}: replayed state differs from the live session"));
        }
        let exported: BTreeMap<Target, String> =
            export.comments.iter().map(|c| (c.target.clone(), c.text.clone())).collect();
        if exported.len() != export.comments.len() {
            return Err(format!("{essay_id}: export repeats a target"));
        }
        if exported != shadow.confirmed() {
            return Err(format!(
                "{essay_id}: export {:?} differs from confirmed texts {:?}",
                exported,
                shadow.confirmed()
            ));
        }
        let live: BTreeMap<Target, String> =
            record.current.confirmed_texts().into_iter().map(|(t, s)| (t, s.to_string())).collect();
        if live != exported {
            return Err(format!("{essay_id}: export differs from the session's confirmed texts"));
        }
        outcome.sequences += 1;
        outcome.comments_exported += export.comments.len();
    }
    if outcome.sequences < sequences {
        return Err(format!("only {} essays available", outcome.sequences));
    }
    Ok(outcome)
}

/// Object keys that only AI output carries.
pub const AI_KEYS: &[&str] = &[
    "judgment",
    "ai_suggestion",
    "historic_suggestion",
    "rationale",
    "met",
    "history",
    "adopted_from",
    "regenerations",
    "stale",
];

/// Every AI key, assisted box marker, or known AI text in a JSON value.
pub fn scan_for_ai(value: &Value, ai_texts: &BTreeSet<String>, path: &str, leaks: &mut Vec<String>) {
    match value {
        Value::Object(map) => {
            for (k, v) in map {
                if AI_KEYS.contains(&k.as_str()) {
                    leaks.push(format!("{path}.{k}"));
                }
                if k == "mode" && v.as_str() == Some("assisted") {
                    leaks.push(format!("{path}.mode=assisted"));
                }
                scan_for_ai(v, ai_texts, &format!("{path}.{k}"), leaks);
            }
        }
        Value::Array(items) => {
            for (i, v) in items.iter().enumerate() {
                scan_for_ai(v, ai_texts, &format!("{path}[{i}]"), leaks);
            }
        }
        Value::String(s) => {
            for t in ai_texts {
                if s.contains(t.as_str()) {
                    leaks.push(format!("{path} contains AI text {t:?}"));
                }
            }
        }
        _ => {}
    }
}

pub async fn call(service: &Arc<GradingService>, method: Method, uri: &str, body: Option<Value>) -> (StatusCode, Value) {
    let request = Request::builder().method(method).uri(uri).header("content-type", "application/json");
    let request = match body {
        Some(b) => request.body(Body::from(b.to_string())),
        None => request.body(Body::empty()),
    }
    .expect("request");
    let response = http::router(service.clone()).oneshot(request).await.expect("router is infallible");
    let status = response.status();
    let bytes = axum::body::to_bytes(response.into_body(), usize::MAX).await.expect("body");
    let value = serde_json::from_slice(&bytes).unwrap_or_else(|_| Value::String(String::from_utf8_lossy(&bytes).into()));
    (status, value)
}

#[derive(Debug, Default)]
pub struct GatingOutcome {
    pub responses: usize,
    pub error_responses: usize,
    pub essays: usize,
    pub ai_texts_checked: usize,
    pub leaks: Vec<String>,
    pub provider_calls_during_baseline: usize,
}

/// Collects `target` HTTP responses from baseline sessions, including
/// rejected AI actions and final exports, and scans each for AI output. The
/// AI texts the pipeline would produce for those drafts are computed
/// separately and searched for verbatim.
pub async fn scan_baseline_responses(target: usize, seed: u64) -> GatingOutcome {
    let (service, provider) = fixture_service(seed);
    let reference = Pipeline::new(client_for(&mock(seed)));
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x5eed);
    let mut outcome = GatingOutcome::default();
    let mut essays = essays_in(&service, Condition::Baseline);
    essays.sort();
    let calls_before = provider.calls();
    for essay_id in essays {
        if outcome.responses >= target {
            break;
        }
        let draft = service.draft(&essay_id).expect("draft");
        let assignment = service.catalog().get(&draft.assignment_id).expect("assignment").clone();
        let mut ai_texts = BTreeSet::new();
        for b in reference.run_pipeline(&draft, &assignment).await {
            ai_texts.insert(b.ai_suggestion.text.clone());
            ai_texts.insert(b.judgment.rationale.clone());
        }
        outcome.ai_texts_checked += ai_texts.len();
        outcome.essays += 1;
        let record = |status: StatusCode, value: &Value, label: &str, outcome: &mut GatingOutcome| {
            outcome.responses += 1;
            if !status.is_success() {
                outcome.error_responses += 1;
            }
            let mut leaks = Vec::new();
            scan_for_ai(value, &ai_texts, label, &mut leaks);
            outcome.leaks.extend(leaks.into_iter().map(|l| format!("{essay_id}: {l}")));
        };
        let (status, opened) = call(
            &service,
            Method::POST,
            "/sessions",
            Some(serde_json::json!({ "grader_id": GRADER, "essay_id": essay_id })),
        )
        .await;
        record(status, &opened, "open", &mut outcome);
        let mut view: SessionView = serde_json::from_value(opened).expect("session view");
        let sid = view.session.session_id.clone();
        let actions_uri = format!("/sessions/{sid}/actions");
        let rubric_id = view.session.boxes[0].rubric_id().to_string();
        let forbidden = [Action::AdoptAi { rubric_id: rubric_id.clone() }, Action::Flip { rubric_id }];
        for action in forbidden {
            let (status, body) = call(&service, Method::POST, &actions_uri, Some(serde_json::to_value(&action).unwrap())).await;
            if status != StatusCode::UNPROCESSABLE_ENTITY {
                outcome.leaks.push(format!("{essay_id}: {} was not rejected ({status})", action.name()));
            }
            record(status, &body, action.name(), &mut outcome);
        }
        for _ in 0..2 {
            let action = random_action(&mut rng, &view);
            let (status, body) = call(&service, Method::POST, &actions_uri, Some(serde_json::to_value(&action).unwrap())).await;
            record(status, &body, action.name(), &mut outcome);
            if status.is_success() {
                view = serde_json::from_value(body).expect("session view");
            }
        }
        let (status, body) = call(&service, Method::GET, &format!("/sessions/{sid}"), None).await;
        record(status, &body, "get", &mut outcome);
        let score = serde_json::to_value(Action::SetScore { score: 0.6 }).unwrap();
        let (status, body) = call(&service, Method::POST, &actions_uri, Some(score)).await;
        record(status, &body, "set_score", &mut outcome);
        let (status, body) = call(&service, Method::POST, &format!("/sessions/{sid}/finalize"), None).await;
        record(status, &body, "finalize", &mut outcome);
    }
    outcome.provider_calls_during_baseline = provider.calls() - calls_before;
    outcome
}
