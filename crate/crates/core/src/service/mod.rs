//! The grading service: draft ingestion, sessions with condition gating,
//! grader actions, persistence, export and the final-draft context.

pub mod config;
pub mod export;
pub mod http;
pub mod roster;
mod session;
pub mod store;

use std::collections::{BTreeMap, HashMap};
use std::sync::atomic::{AtomicU64, Ordering};
use std::sync::{Arc, Mutex as StdMutex, RwLock};

use chrono::Utc;
use serde::{Deserialize, Serialize};
use tokio::sync::Mutex;

pub use config::{LmsConfig, ProviderKind, ServiceConfig};
pub use export::{ExportComment, FeedbackExport, FileExporter, HttpLmsClient, LmsClient, NullLms};
pub use roster::{GraderEntry, Roster, StudentEntry};
pub use session::{apply_event, replay, Action, FreeformComment, GradingSession, RubricBox, SessionState, STALE_NOTE};
pub use store::Store;

use crate::analytics::{corpus_adoption, summarize_essay, AdoptionReport, EssayUsageSummary};
use crate::domain::{Assignment, Catalog, EssayDraft, Stage};
use crate::error::ServiceError;
use crate::events::{EventAction, EventLog, GradingEvent, Target};
use crate::pipeline::{FeedbackSuggestion, Pipeline, SuggestionBundle};
use crate::provider::prompts::PROMPT_VERSION;
use crate::text::{compute_diff, reanchor, validate_anchor, AnchorStatus, DraftDiff, SpanAnchor};

/// A session together with the state it was opened in, so the event log
/// can be replayed against it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SessionRecord {
    pub initial: GradingSession,
    pub current: GradingSession,
}

/// What a client receives for a session.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SessionView {
    pub session: GradingSession,
    pub essay_text: String,
    pub rubrics: Vec<RubricSummary>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RubricSummary {
    pub id: String,
    pub text: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RejectedRecord {
    pub line: usize,
    pub reason: String,
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ImportReport {
    pub received: usize,
    pub persisted: usize,
    pub duplicates: Vec<String>,
    pub rejected: Vec<RejectedRecord>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ReanchoredItem {
    pub target: Target,
    pub anchor: SpanAnchor,
}

/// What a grader sees next to a final draft.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FinalDraftContext {
    pub first_essay_id: String,
    pub final_essay_id: String,
    pub diff: DraftDiff,
    /// First-draft final text per rubric; rubrics without a comment are absent.
    pub prior_feedback: BTreeMap<String, String>,
    /// First-draft anchors carried over to the final draft.
    pub anchors: Vec<ReanchoredItem>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PrecomputeReport {
    pub computed: usize,
    pub cached: usize,
    pub skipped_baseline: usize,
    pub bundles_with_errors: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum EssayLock {
    Open,
    Finalized,
}

pub struct GradingService {
    catalog: Catalog,
    roster: Roster,
    pipeline: Option<Pipeline>,
    lms: Arc<dyn LmsClient>,
    store: Store,
    reference_base: Option<String>,
    drafts: RwLock<BTreeMap<String, EssayDraft>>,
    sessions: RwLock<HashMap<String, Arc<Mutex<SessionRecord>>>>,
    /// essay id -> (session id, lock state)
    locks: StdMutex<HashMap<String, (String, EssayLock)>>,
    log: StdMutex<EventLog>,
    cache: Mutex<HashMap<String, Vec<SuggestionBundle>>>,
    next_session: AtomicU64,
}

fn cache_key(draft: &EssayDraft, assignment: &Assignment) -> String {
    format!("{}|{}|{}", draft.essay_id, assignment.rubric_version(), PROMPT_VERSION)
}

/// Builder for [`GradingService`].
pub struct ServiceBuilder {
    catalog: Catalog,
    roster: Roster,
    pipeline: Option<Pipeline>,
    lms: Arc<dyn LmsClient>,
    store: Store,
    reference_base: Option<String>,
    log: EventLog,
}

impl ServiceBuilder {
    pub fn pipeline(mut self, pipeline: Pipeline) -> Self {
        self.pipeline = Some(pipeline);
        self
    }

    pub fn lms(mut self, lms: Arc<dyn LmsClient>) -> Self {
        self.lms = lms;
        self
    }

    pub fn store(mut self, store: Store) -> Self {
        self.store = store;
        self
    }

    /// Base URL of the rubric and historic feedback sheet linked from
    /// baseline sessions; the assignment id is appended.
    pub fn reference_base(mut self, base: impl Into<String>) -> Self {
        self.reference_base = Some(base.into());
        self
    }

    pub fn event_log(mut self, log: EventLog) -> Self {
        self.log = log;
        self
    }

    /// Builds the service, reloading drafts, sessions and events already in
    /// the store.
    pub fn build(self) -> Result<GradingService, ServiceError> {
        let drafts: Vec<EssayDraft> = self.store.all("drafts")?;
        let records: Vec<SessionRecord> = self.store.all("sessions")?;
        let cached: Vec<(String, Vec<SuggestionBundle>)> = self.store.all("cache")?;
        let mut log = self.log;
        for event in self.store.load_events()? {
            log.append(event)?;
        }
        let mut locks = HashMap::new();
        let mut max_id = 0;
        for r in &records {
            let s = &r.current;
            let state = if s.is_open() { EssayLock::Open } else { EssayLock::Finalized };
            locks.insert(s.essay_id.clone(), (s.session_id.clone(), state));
            if let Some(n) = s.session_id.strip_prefix('s').and_then(|n| n.parse::<u64>().ok()) {
                max_id = max_id.max(n);
            }
        }
        Ok(GradingService {
            catalog: self.catalog,
            roster: self.roster,
            pipeline: self.pipeline,
            lms: self.lms,
            store: self.store,
            reference_base: self.reference_base,
            drafts: RwLock::new(drafts.into_iter().map(|d| (d.essay_id.clone(), d)).collect()),
            sessions: RwLock::new(
                records
                    .into_iter()
                    .map(|r| (r.current.session_id.clone(), Arc::new(Mutex::new(r))))
                    .collect(),
            ),
            locks: StdMutex::new(locks),
            log: StdMutex::new(log),
            cache: Mutex::new(cached.into_iter().collect()),
            next_session: AtomicU64::new(max_id + 1),
        })
    }
}

impl GradingService {
    pub fn builder(catalog: Catalog, roster: Roster) -> ServiceBuilder {
        ServiceBuilder {
            catalog,
            roster,
            pipeline: None,
            lms: Arc::new(NullLms),
            store: Store::in_memory(),
            reference_base: None,
            log: EventLog::default(),
        }
    }

    pub fn catalog(&self) -> &Catalog {
        &self.catalog
    }

    pub fn roster(&self) -> &Roster {
        &self.roster
    }

    pub fn draft(&self, essay_id: &str) -> Option<EssayDraft> {
        self.drafts.read().expect("draft map poisoned").get(essay_id).cloned()
    }

    pub fn drafts(&self) -> Vec<EssayDraft> {
        self.drafts.read().expect("draft map poisoned").values().cloned().collect()
    }

    fn assignment(&self, assignment_id: &str) -> Result<&Assignment, ServiceError> {
        self.catalog.get(assignment_id).ok_or_else(|| ServiceError::NotFound(format!("assignment {assignment_id:?}")))
    }

    fn require_draft(&self, essay_id: &str) -> Result<EssayDraft, ServiceError> {
        self.draft(essay_id).ok_or_else(|| ServiceError::NotFound(format!("essay {essay_id:?}")))
    }

    fn require_pipeline(&self) -> Result<&Pipeline, ServiceError> {
        self.pipeline.as_ref().ok_or_else(|| ServiceError::Precondition("no provider is configured".into()))
    }

    /// Ingests a line-delimited draft export. Malformed lines are reported
    /// and skipped; re-imported drafts are flagged as duplicates.
    pub fn import_drafts(&self, source: &str) -> Result<ImportReport, ServiceError> {
        let mut report = ImportReport::default();
        let mut drafts = self.drafts.write().expect("draft map poisoned");
        for (i, line) in source.lines().enumerate().filter(|(_, l)| !l.trim().is_empty()) {
            report.received += 1;
            let reject = |reason: String| RejectedRecord { line: i + 1, reason };
            let draft: EssayDraft = match serde_json::from_str(line) {
                Ok(d) => d,
                Err(e) => {
                    report.rejected.push(reject(e.to_string()));
                    continue;
                }
            };
            let problem = match self.catalog.get(&draft.assignment_id) {
                None => Some(format!("unknown assignment {:?}", draft.assignment_id)),
                Some(a) if !a.draft_stages.contains(&draft.stage) => {
                    Some(format!("assignment {:?} has no {:?} draft", a.id, draft.stage))
                }
                Some(_) if draft.text.trim().is_empty() => Some("empty essay text".into()),
                Some(_) if draft.student_id.trim().is_empty() => Some("empty student_id".into()),
                Some(_) => None,
            };
            if let Some(p) = problem {
                report.rejected.push(reject(p));
                continue;
            }
            match drafts.get(&draft.essay_id) {
                Some(existing) if *existing == draft => {
                    report.duplicates.push(draft.essay_id.clone());
                    continue;
                }
                Some(_) => {
                    report.rejected.push(reject(format!("essay {:?} already exists with different content", draft.essay_id)));
                    continue;
                }
                None => {}
            }
            let slot_taken = drafts.values().any(|d| {
                d.student_id == draft.student_id && d.assignment_id == draft.assignment_id && d.stage == draft.stage
            });
            if slot_taken {
                report.rejected.push(reject(format!(
                    "student already has a {:?} draft for {:?}",
                    draft.stage, draft.assignment_id
                )));
                continue;
            }
            self.store.put("drafts", &draft.essay_id, &draft)?;
            drafts.insert(draft.essay_id.clone(), draft);
            report.persisted += 1;
        }
        Ok(report)
    }

    /// Pipeline output for a draft, from the cache when available.
    async fn bundles_for(&self, draft: &EssayDraft, assignment: &Assignment) -> Result<(Vec<SuggestionBundle>, bool), ServiceError> {
        let key = cache_key(draft, assignment);
        if let Some(hit) = self.cache.lock().await.get(&key) {
            return Ok((hit.clone(), true));
        }
        let bundles = self.require_pipeline()?.run_pipeline(draft, assignment).await;
        // Failed rubric items are not cached so a later open retries them.
        if bundles.iter().all(|b| !b.is_error()) {
            self.store.put("cache", &crate::digest_hex(key.as_bytes()), &(key.clone(), bundles.clone()))?;
            self.cache.lock().await.insert(key, bundles.clone());
        }
        Ok((bundles, false))
    }

    /// Runs the pipeline ahead of time for every assisted draft.
    pub async fn precompute(&self) -> Result<PrecomputeReport, ServiceError> {
        let mut report = PrecomputeReport { computed: 0, cached: 0, skipped_baseline: 0, bundles_with_errors: 0 };
        for draft in self.drafts() {
            let condition = self.roster.condition_for(&draft.student_id, &draft.assignment_id);
            if !condition.is_some_and(|c| c.is_assisted()) {
                report.skipped_baseline += 1;
                continue;
            }
            let assignment = self.assignment(&draft.assignment_id)?;
            let (bundles, hit) = self.bundles_for(&draft, assignment).await?;
            if hit {
                report.cached += 1;
            } else {
                report.computed += 1;
            }
            report.bundles_with_errors += bundles.iter().filter(|b| b.is_error()).count();
        }
        Ok(report)
    }

    fn view(&self, session: &GradingSession) -> Result<SessionView, ServiceError> {
        let draft = self.require_draft(&session.essay_id)?;
        let assignment = self.assignment(&session.assignment_id)?;
        Ok(SessionView {
            session: session.clone(),
            essay_text: draft.text,
            rubrics: assignment.rubric_items.iter().map(|r| RubricSummary { id: r.id.clone(), text: r.text.clone() }).collect(),
        })
    }

    fn record(&self, session_id: &str) -> Result<Arc<Mutex<SessionRecord>>, ServiceError> {
        self.sessions
            .read()
            .expect("session map poisoned")
            .get(session_id)
            .cloned()
            .ok_or_else(|| ServiceError::NotFound(format!("session {session_id:?}")))
    }

    /// Opens a session and takes the single-writer lock on the essay.
    pub async fn open_session(&self, grader_id: &str, essay_id: &str) -> Result<SessionView, ServiceError> {
        let draft = self.require_draft(essay_id)?;
        if !self.roster.grader_covers(grader_id, &draft.student_id) {
            return Err(ServiceError::Unauthorized { grader_id: grader_id.into(), essay_id: essay_id.into() });
        }
        let condition = self.roster.condition_for(&draft.student_id, &draft.assignment_id).ok_or_else(|| {
            ServiceError::Precondition(format!("no condition on the roster for essay {essay_id:?}"))
        })?;
        let assignment = self.assignment(&draft.assignment_id)?;
        let session_id = format!("s{}", self.next_session.fetch_add(1, Ordering::SeqCst));
        {
            let mut locks = self.locks.lock().expect("lock map poisoned");
            match locks.get(essay_id) {
                Some((_, EssayLock::Open)) => return Err(ServiceError::Locked(essay_id.into())),
                Some((sid, EssayLock::Finalized)) => return Err(ServiceError::Finalized(sid.clone())),
                None => {
                    locks.insert(essay_id.into(), (session_id.clone(), EssayLock::Open));
                }
            }
        }
        match self.start_session(&session_id, grader_id, &draft, assignment, condition).await {
            Ok(view) => Ok(view),
            Err(e) => {
                self.locks.lock().expect("lock map poisoned").remove(essay_id);
                Err(e)
            }
        }
    }

    async fn start_session(
        &self,
        session_id: &str,
        grader_id: &str,
        draft: &EssayDraft,
        assignment: &Assignment,
        condition: crate::domain::Condition,
    ) -> Result<SessionView, ServiceError> {
        let bundles = if condition.is_assisted() { Some(self.bundles_for(draft, assignment).await?.0) } else { None };
        let reference = self.reference_base.as_ref().map(|base| format!("{}/{}", base.trim_end_matches('/'), assignment.id));
        let initial = GradingSession::new(
            session_id.into(),
            grader_id.into(),
            draft,
            assignment,
            condition,
            bundles,
            Utc::now(),
            reference,
        );
        let mut record = SessionRecord { initial: initial.clone(), current: initial };
        let open = EventAction::Open {
            condition,
            stage: draft.stage,
            rubric_ids: assignment.rubric_ids().map(str::to_string).collect(),
        };
        self.commit(&mut record, open)?;
        let view = self.view(&record.current)?;
        self.sessions
            .write()
            .expect("session map poisoned")
            .insert(session_id.into(), Arc::new(Mutex::new(record)));
        Ok(view)
    }

    /// Logs one action and applies it. The event is only written if the
    /// state change succeeds, and the state only changes once the event is
    /// written.
    fn commit(&self, record: &mut SessionRecord, action: EventAction) -> Result<GradingEvent, ServiceError> {
        let session = &record.current;
        let mut log = self.log.lock().expect("event log poisoned");
        let event = GradingEvent {
            event_id: log.next_event_id(&session.essay_id),
            timestamp: Utc::now(),
            grader_id: session.grader_id.clone(),
            essay_id: session.essay_id.clone(),
            assignment_id: session.assignment_id.clone(),
            session_id: session.session_id.clone(),
            action,
        };
        let event = log.check(event)?;
        let mut next = record.current.clone();
        apply_event(&mut next, &event.action)?;
        let snapshot = SessionRecord { initial: record.initial.clone(), current: next.clone() };
        self.store.append_event(&event)?;
        log.append(event.clone())?;
        drop(log);
        record.current = next;
        self.store.put("sessions", &record.current.session_id, &snapshot)?;
        Ok(event)
    }

    pub async fn get_session(&self, session_id: &str) -> Result<SessionView, ServiceError> {
        let record = self.record(session_id)?;
        let guard = record.lock().await;
        self.view(&guard.current)
    }

    pub async fn session_record(&self, session_id: &str) -> Result<SessionRecord, ServiceError> {
        Ok(self.record(session_id)?.lock().await.clone())
    }

    /// Applies one grader action and logs it.
    pub async fn apply_action(&self, session_id: &str, action: Action) -> Result<SessionView, ServiceError> {
        let record = self.record(session_id)?;
        let mut guard = record.lock().await;
        let session = &guard.current;
        if !session.is_open() {
            return Err(ServiceError::Finalized(session_id.into()));
        }
        if action.requires_assistance() && !session.condition.is_assisted() {
            return Err(ServiceError::InvalidForCondition { action: action.name(), condition: session.condition });
        }
        let draft = self.require_draft(&session.essay_id)?;
        let assignment = self.assignment(&session.assignment_id)?;
        let event = self.event_for(session, &draft, assignment, action).await?;
        self.commit(&mut guard, event)?;
        self.view(&guard.current)
    }

    fn bundle<'a>(session: &'a GradingSession, rubric_id: &str) -> Result<&'a SuggestionBundle, ServiceError> {
        session
            .rubric_box(rubric_id)
            .ok_or_else(|| ServiceError::NotFound(format!("rubric {rubric_id:?} in session")))?
            .bundle()
            .ok_or(ServiceError::InvalidForCondition { action: "ai", condition: session.condition })
    }

    async fn event_for(
        &self,
        session: &GradingSession,
        draft: &EssayDraft,
        assignment: &Assignment,
        action: Action,
    ) -> Result<EventAction, ServiceError> {
        let anchor_from = |ranges| {
            let raw = SpanAnchor { draft_id: draft.essay_id.clone(), ranges, status: AnchorStatus::Grounded };
            validate_anchor(&raw, draft)
        };
        Ok(match action {
            Action::Flip { rubric_id } => {
                let bundle = Self::bundle(session, &rubric_id)?;
                let next = self.require_pipeline()?.flip_judgment(bundle, draft, assignment).await?;
                EventAction::FlipJudgment {
                    rubric_id,
                    met: next.judgment.met,
                    suggestion: next.ai_suggestion,
                    stale: next.stale,
                }
            }
            Action::AdoptAi { rubric_id } => {
                let bundle = Self::bundle(session, &rubric_id)?;
                if bundle.is_error() {
                    return Err(ServiceError::InvalidAction(format!("rubric {rubric_id:?} has no usable AI suggestion")));
                }
                let FeedbackSuggestion { kind, text } = &bundle.ai_suggestion;
                session::adoption_event(&rubric_id, *kind, text)
            }
            Action::AdoptHistoric { rubric_id, index } => {
                Self::bundle(session, &rubric_id)?;
                let rubric = assignment
                    .rubric(&rubric_id)
                    .ok_or_else(|| ServiceError::NotFound(format!("rubric {rubric_id:?}")))?;
                let i = index.unwrap_or(0);
                let text = rubric.historic_feedback.get(i).ok_or_else(|| {
                    ServiceError::InvalidAction(format!("rubric {rubric_id:?} has no historic feedback #{i}"))
                })?;
                EventAction::AddHistoric { rubric_id, text: text.clone() }
            }
            Action::EditFinalText { target, text } => EventAction::EditFinalText { target, text },
            Action::Regenerate { rubric_id } => {
                let bundle = Self::bundle(session, &rubric_id)?;
                let next = self.require_pipeline()?.regenerate_feedback(bundle, draft, assignment).await?;
                EventAction::Regenerate { rubric_id, suggestion: next.ai_suggestion }
            }
            Action::Reposition { target, ranges } => {
                EventAction::RepositionHighlight { target, anchor: anchor_from(ranges)? }
            }
            Action::AddFreeform { ranges, text } => EventAction::AddAdditionalFeedback {
                comment_id: session.next_comment_id(),
                anchor: anchor_from(ranges)?,
                text,
            },
            Action::DeleteFeedback { target } => EventAction::DeleteFeedback { target },
            Action::SetScore { score } => {
                if !score.is_finite() || !(0.0..=1.0).contains(&score) {
                    return Err(ServiceError::InvalidAction(format!("score {score} is outside [0, 1]")));
                }
                EventAction::SetScore { score }
            }
        })
    }

    /// Closes the session and delivers the grader-confirmed feedback.
    pub async fn finalize_and_export(&self, session_id: &str) -> Result<FeedbackExport, ServiceError> {
        let record = self.record(session_id)?;
        let mut guard = record.lock().await;
        if !guard.current.is_open() {
            return Err(ServiceError::Finalized(session_id.into()));
        }
        let draft = self.require_draft(&guard.current.essay_id)?;
        let mut export = FeedbackExport::from_session(&guard.current, &draft.student_id, &draft.text)?;
        self.commit(&mut guard, EventAction::Close { score: Some(export.score), comments: export.comments.len() })?;
        self.locks
            .lock()
            .expect("lock map poisoned")
            .insert(draft.essay_id.clone(), (session_id.into(), EssayLock::Finalized));
        for w in &export.warnings {
            tracing::warn!(session_id, "{w}");
        }
        if let Err(e) = self.lms.deliver(&export).await {
            tracing::error!(session_id, error = %e, "feedback delivery failed");
            export.warnings.push(format!("delivery failed: {e}"));
        }
        Ok(export)
    }

    fn finalized_session_for(&self, essay_id: &str) -> Option<String> {
        match self.locks.lock().expect("lock map poisoned").get(essay_id) {
            Some((sid, EssayLock::Finalized)) => Some(sid.clone()),
            _ => None,
        }
    }

    /// The diff against the first draft, the first-draft comments, and the
    /// first-draft anchors carried over.
    pub async fn final_draft_context(&self, essay_id: &str) -> Result<FinalDraftContext, ServiceError> {
        let final_draft = self.require_draft(essay_id)?;
        if final_draft.stage != Stage::Final {
            return Err(ServiceError::Precondition(format!("essay {essay_id:?} is not a final draft")));
        }
        let first = self
            .drafts()
            .into_iter()
            .find(|d| {
                d.stage == Stage::First
                    && d.student_id == final_draft.student_id
                    && d.assignment_id == final_draft.assignment_id
            })
            .ok_or_else(|| ServiceError::NotFound(format!("first draft for essay {essay_id:?}")))?;
        let session_id = self.finalized_session_for(&first.essay_id).ok_or_else(|| {
            ServiceError::Precondition(format!("first draft {:?} has no finalized session", first.essay_id))
        })?;
        let session = self.record(&session_id)?.lock().await.current.clone();
        let diff = compute_diff(&first, &final_draft)?;
        let prior_feedback = session
            .boxes
            .iter()
            .filter(|b| !b.final_text().trim().is_empty())
            .map(|b| (b.rubric_id().to_string(), b.final_text().to_string()))
            .collect();
        let targets = session
            .boxes
            .iter()
            .map(|b| (Target::Rubric(b.rubric_id().into()), b.anchor()))
            .chain(session.freeform_comments.iter().map(|c| (Target::Comment(c.comment_id.clone()), &c.anchor)));
        let mut anchors = Vec::new();
        for (target, anchor) in targets {
            if anchor.is_anchored() {
                anchors.push(ReanchoredItem { target, anchor: reanchor(anchor, &diff)? });
            }
        }
        Ok(FinalDraftContext {
            first_essay_id: first.essay_id,
            final_essay_id: final_draft.essay_id,
            diff,
            prior_feedback,
            anchors,
        })
    }

    pub fn events(&self) -> Vec<GradingEvent> {
        self.log.lock().expect("event log poisoned").events().to_vec()
    }

    pub fn essay_summary(&self, essay_id: &str) -> Result<EssayUsageSummary, ServiceError> {
        Ok(summarize_essay(&self.events(), essay_id)?)
    }

    pub fn adoption_report(&self) -> AdoptionReport {
        corpus_adoption(&self.events())
    }
}
