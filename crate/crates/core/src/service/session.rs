//! Grading session state and the pure event-application step shared by live
//! actions and log replay.

use chrono::{DateTime, Utc};
use serde::{Deserialize, Serialize};

use crate::domain::{Assignment, Condition, EssayDraft, Stage};
use crate::error::ServiceError;
use crate::events::{EventAction, Target};
use crate::pipeline::{AdoptionSource, SuggestionBundle, SuggestionKind};
use crate::text::{SpanAnchor, TextRange};

/// Recorded on a bundle whose suggestion could not be regenerated after a flip.
pub const STALE_NOTE: &str = "suggestion could not be regenerated after the judgment changed";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SessionState {
    Open,
    Finalized,
}

/// One rubric item's feedback box. Baseline sessions only ever hold
/// scaffolds, which have no fields for AI output.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "mode", rename_all = "snake_case")]
pub enum RubricBox {
    Assisted(SuggestionBundle),
    Scaffold { rubric_id: String, anchor: SpanAnchor, final_text: String },
}

impl RubricBox {
    pub fn rubric_id(&self) -> &str {
        match self {
            RubricBox::Assisted(b) => &b.rubric_id,
            RubricBox::Scaffold { rubric_id, .. } => rubric_id,
        }
    }

    pub fn final_text(&self) -> &str {
        match self {
            RubricBox::Assisted(b) => &b.final_text,
            RubricBox::Scaffold { final_text, .. } => final_text,
        }
    }

    pub fn anchor(&self) -> &SpanAnchor {
        match self {
            RubricBox::Assisted(b) => &b.anchor,
            RubricBox::Scaffold { anchor, .. } => anchor,
        }
    }

    fn final_text_mut(&mut self) -> &mut String {
        match self {
            RubricBox::Assisted(b) => &mut b.final_text,
            RubricBox::Scaffold { final_text, .. } => final_text,
        }
    }

    fn anchor_mut(&mut self) -> &mut SpanAnchor {
        match self {
            RubricBox::Assisted(b) => &mut b.anchor,
            RubricBox::Scaffold { anchor, .. } => anchor,
        }
    }

    pub fn bundle(&self) -> Option<&SuggestionBundle> {
        match self {
            RubricBox::Assisted(b) => Some(b),
            RubricBox::Scaffold { .. } => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FreeformComment {
    pub comment_id: String,
    pub anchor: SpanAnchor,
    pub text: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GradingSession {
    pub session_id: String,
    pub grader_id: String,
    pub essay_id: String,
    pub assignment_id: String,
    pub stage: Stage,
    pub condition: Condition,
    pub boxes: Vec<RubricBox>,
    pub freeform_comments: Vec<FreeformComment>,
    /// Number of freeform comments ever added; ids are `c1`, `c2`, ...
    pub comments_added: u32,
    pub score: Option<f64>,
    pub state: SessionState,
    pub opened_at: DateTime<Utc>,
    /// Where baseline graders find the rubric and historic feedback sheet.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub reference_link: Option<String>,
}

impl GradingSession {
    /// A fresh session before any grader action.
    #[allow(clippy::too_many_arguments)]
    pub fn new(
        session_id: String,
        grader_id: String,
        draft: &EssayDraft,
        assignment: &Assignment,
        condition: Condition,
        bundles: Option<Vec<SuggestionBundle>>,
        opened_at: DateTime<Utc>,
        reference_link: Option<String>,
    ) -> Self {
        let boxes = match (condition, bundles) {
            (Condition::FeedbackWriter, Some(bundles)) => bundles.into_iter().map(RubricBox::Assisted).collect(),
            _ => assignment
                .rubric_items
                .iter()
                .map(|r| RubricBox::Scaffold {
                    rubric_id: r.id.clone(),
                    anchor: SpanAnchor::unanchored(&draft.essay_id),
                    final_text: String::new(),
                })
                .collect(),
        };
        GradingSession {
            session_id,
            grader_id,
            essay_id: draft.essay_id.clone(),
            assignment_id: draft.assignment_id.clone(),
            stage: draft.stage,
            condition,
            boxes,
            freeform_comments: Vec::new(),
            comments_added: 0,
            score: None,
            state: SessionState::Open,
            opened_at,
            reference_link: if condition.is_assisted() { None } else { reference_link },
        }
    }

    pub fn is_open(&self) -> bool {
        self.state == SessionState::Open
    }

    pub fn rubric_box(&self, rubric_id: &str) -> Option<&RubricBox> {
        self.boxes.iter().find(|b| b.rubric_id() == rubric_id)
    }

    fn rubric_box_mut(&mut self, rubric_id: &str) -> Result<&mut RubricBox, ServiceError> {
        self.boxes
            .iter_mut()
            .find(|b| b.rubric_id() == rubric_id)
            .ok_or_else(|| ServiceError::NotFound(format!("rubric {rubric_id:?} in session")))
    }

    fn bundle_mut(&mut self, rubric_id: &str, action: &'static str) -> Result<&mut SuggestionBundle, ServiceError> {
        let condition = self.condition;
        match self.rubric_box_mut(rubric_id)? {
            RubricBox::Assisted(b) => Ok(b),
            RubricBox::Scaffold { .. } => Err(ServiceError::InvalidForCondition { action, condition }),
        }
    }

    pub fn comment(&self, comment_id: &str) -> Option<&FreeformComment> {
        self.freeform_comments.iter().find(|c| c.comment_id == comment_id)
    }

    pub fn next_comment_id(&self) -> String {
        format!("c{}", self.comments_added + 1)
    }

    /// Every nonempty grader-written or grader-adopted text, boxes first.
    pub fn confirmed_texts(&self) -> Vec<(Target, &str)> {
        let boxes = self
            .boxes
            .iter()
            .filter(|b| !b.final_text().trim().is_empty())
            .map(|b| (Target::Rubric(b.rubric_id().to_string()), b.final_text()));
        let comments = self
            .freeform_comments
            .iter()
            .filter(|c| !c.text.trim().is_empty())
            .map(|c| (Target::Comment(c.comment_id.clone()), c.text.as_str()));
        boxes.chain(comments).collect()
    }

    pub fn anchor_of(&self, target: &Target) -> Option<&SpanAnchor> {
        match target {
            Target::Rubric(id) => self.rubric_box(id).map(RubricBox::anchor),
            Target::Comment(id) => self.comment(id).map(|c| &c.anchor),
        }
    }
}

/// Applies one logged action to a session. Live actions and replay both go
/// through here, so replaying a session's events over its initial state
/// reproduces its current state.
pub fn apply_event(session: &mut GradingSession, action: &EventAction) -> Result<(), ServiceError> {
    if !session.is_open() {
        return Err(ServiceError::Finalized(session.session_id.clone()));
    }
    match action {
        EventAction::Open { .. } => {}
        EventAction::Close { .. } => session.state = SessionState::Finalized,
        EventAction::FlipJudgment { rubric_id, met, suggestion, stale } => {
            let b = session.bundle_mut(rubric_id, "flip")?;
            b.judgment.met = *met;
            b.ai_suggestion = suggestion.clone();
            b.stale = *stale;
            b.error = stale.then(|| STALE_NOTE.to_string());
        }
        EventAction::AddHistoric { rubric_id, text } => {
            let b = session.bundle_mut(rubric_id, "adopt_historic")?;
            b.final_text = text.clone();
            b.adopted_from = Some(AdoptionSource::Historic);
        }
        EventAction::AddAiConstructive { rubric_id, text } | EventAction::AddAiPositive { rubric_id, text } => {
            let b = session.bundle_mut(rubric_id, "adopt_ai")?;
            b.final_text = text.clone();
            b.adopted_from = Some(AdoptionSource::Ai);
        }
        EventAction::AddAdditionalFeedback { comment_id, anchor, text } => {
            if session.comment(comment_id).is_some() {
                return Err(ServiceError::InvalidAction(format!("comment {comment_id:?} already exists")));
            }
            session.freeform_comments.push(FreeformComment {
                comment_id: comment_id.clone(),
                anchor: anchor.clone(),
                text: text.clone(),
            });
            session.comments_added += 1;
        }
        EventAction::EditFinalText { target, text } => match target {
            Target::Rubric(id) => *session.rubric_box_mut(id)?.final_text_mut() = text.clone(),
            Target::Comment(id) => comment_mut(session, id)?.text = text.clone(),
        },
        EventAction::RepositionHighlight { target, anchor } => match target {
            Target::Rubric(id) => *session.rubric_box_mut(id)?.anchor_mut() = anchor.clone(),
            Target::Comment(id) => comment_mut(session, id)?.anchor = anchor.clone(),
        },
        EventAction::Regenerate { rubric_id, suggestion } => {
            let b = session.bundle_mut(rubric_id, "regenerate")?;
            let previous = std::mem::replace(&mut b.ai_suggestion, suggestion.clone());
            b.history.push(previous);
            b.regenerations += 1;
            b.stale = false;
            b.error = None;
        }
        EventAction::DeleteFeedback { target } => match target {
            Target::Rubric(id) => match session.rubric_box_mut(id)? {
                RubricBox::Assisted(b) => {
                    b.final_text.clear();
                    b.adopted_from = None;
                }
                RubricBox::Scaffold { final_text, .. } => final_text.clear(),
            },
            Target::Comment(id) => {
                let before = session.freeform_comments.len();
                session.freeform_comments.retain(|c| &c.comment_id != id);
                if session.freeform_comments.len() == before {
                    return Err(ServiceError::NotFound(format!("comment {id:?}")));
                }
            }
        },
        EventAction::SetScore { score } => session.score = Some(*score),
    }
    Ok(())
}

fn comment_mut<'a>(session: &'a mut GradingSession, id: &str) -> Result<&'a mut FreeformComment, ServiceError> {
    session
        .freeform_comments
        .iter_mut()
        .find(|c| c.comment_id == id)
        .ok_or_else(|| ServiceError::NotFound(format!("comment {id:?}")))
}

/// Replays logged actions over an initial session.
pub fn replay<'a>(initial: &GradingSession, actions: impl IntoIterator<Item = &'a EventAction>) -> Result<GradingSession, ServiceError> {
    let mut session = initial.clone();
    for action in actions {
        apply_event(&mut session, action)?;
    }
    Ok(session)
}

/// A grader action as submitted by a client.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum Action {
    Flip { rubric_id: String },
    AdoptAi { rubric_id: String },
    AdoptHistoric {
        rubric_id: String,
        /// Which historic comment; the first by default.
        #[serde(default)]
        index: Option<usize>,
    },
    EditFinalText { target: Target, text: String },
    Regenerate { rubric_id: String },
    Reposition { target: Target, ranges: Vec<TextRange> },
    AddFreeform { ranges: Vec<TextRange>, text: String },
    DeleteFeedback { target: Target },
    SetScore { score: f64 },
}

impl Action {
    pub fn name(&self) -> &'static str {
        match self {
            Action::Flip { .. } => "flip",
            Action::AdoptAi { .. } => "adopt_ai",
            Action::AdoptHistoric { .. } => "adopt_historic",
            Action::EditFinalText { .. } => "edit_final_text",
            Action::Regenerate { .. } => "regenerate",
            Action::Reposition { .. } => "reposition",
            Action::AddFreeform { .. } => "add_freeform",
            Action::DeleteFeedback { .. } => "delete_feedback",
            Action::SetScore { .. } => "set_score",
        }
    }

    /// Actions that need AI output, unavailable in the baseline condition.
    pub fn requires_assistance(&self) -> bool {
        matches!(self, Action::Flip { .. } | Action::AdoptAi { .. } | Action::AdoptHistoric { .. } | Action::Regenerate { .. })
    }
}

/// Suggestion kind to adoption event.
pub(crate) fn adoption_event(rubric_id: &str, kind: SuggestionKind, text: &str) -> EventAction {
    match kind {
        SuggestionKind::AiPositive => EventAction::AddAiPositive { rubric_id: rubric_id.into(), text: text.into() },
        _ => EventAction::AddAiConstructive { rubric_id: rubric_id.into(), text: text.into() },
    }
}
