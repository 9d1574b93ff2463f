//! Per-rubric suggestion pipeline: find the sentences that address a rubric
//! item, judge it met or not met with a rationale, and draft a feedback
//! suggestion whose polarity follows the judgment.
//!
//! Nothing here ever writes `final_text`; that field belongs to the grader.

use futures::stream::{self, StreamExt};
use serde::{Deserialize, Serialize};

use crate::domain::{Assignment, EssayDraft, RubricItem};
use crate::error::{PipelineError, ProviderError};
use crate::provider::prompts;
use crate::provider::{parse_json, StructuredClient};
use crate::text::{ground_quotes, validate_anchor, SpanAnchor};

/// Rationale recorded when no evidence was found, without calling the model.
pub const NO_EVIDENCE_RATIONALE: &str = "no relevant sentences found";
/// Suggestion text shown when generation failed.
pub const PLACEHOLDER_SUGGESTION: &str = "No suggestion is available for this rubric item. Please write feedback directly.";
pub const DEFAULT_CONCURRENCY: usize = 8;

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Judgment {
    pub met: bool,
    pub rationale: String,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SuggestionKind {
    AiConstructive,
    AiPositive,
    Historic,
}

impl SuggestionKind {
    pub fn for_judgment(met: bool) -> Self {
        if met {
            SuggestionKind::AiPositive
        } else {
            SuggestionKind::AiConstructive
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct FeedbackSuggestion {
    pub kind: SuggestionKind,
    pub text: String,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AdoptionSource {
    Ai,
    Historic,
}

/// Everything the pipeline produced for one rubric item, plus the grader's
/// final text once they write or adopt one.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SuggestionBundle {
    pub rubric_id: String,
    pub anchor: SpanAnchor,
    pub judgment: Judgment,
    pub ai_suggestion: FeedbackSuggestion,
    pub historic_suggestion: Option<FeedbackSuggestion>,
    pub final_text: String,
    pub adopted_from: Option<AdoptionSource>,
    /// Earlier AI suggestions replaced by regeneration, oldest first.
    #[serde(default)]
    pub history: Vec<FeedbackSuggestion>,
    #[serde(default)]
    pub regenerations: u32,
    /// Set when the AI suggestion no longer matches the judgment because
    /// regeneration after a flip failed.
    #[serde(default)]
    pub stale: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
}

impl SuggestionBundle {
    pub fn is_error(&self) -> bool {
        self.error.is_some()
    }

    fn historic_for(rubric: &RubricItem) -> Option<FeedbackSuggestion> {
        rubric
            .historic_feedback
            .first()
            .map(|text| FeedbackSuggestion { kind: SuggestionKind::Historic, text: text.clone() })
    }

    /// Bundle standing in for a rubric item whose pipeline run failed.
    pub fn failed(rubric: &RubricItem, anchor: SpanAnchor, error: &PipelineError) -> Self {
        SuggestionBundle {
            rubric_id: rubric.id.clone(),
            anchor,
            judgment: Judgment { met: false, rationale: format!("pipeline error: {}", error.source) },
            ai_suggestion: FeedbackSuggestion {
                kind: SuggestionKind::AiConstructive,
                text: PLACEHOLDER_SUGGESTION.into(),
            },
            historic_suggestion: Self::historic_for(rubric),
            final_text: String::new(),
            adopted_from: None,
            history: Vec::new(),
            regenerations: 0,
            stale: false,
            error: Some(error.to_string()),
        }
    }
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct ExtractReply {
    sentences: Vec<String>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct JudgeReply {
    rationale: String,
    met: bool,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct GenerateReply {
    feedback: String,
}

fn parse_extract(raw: &str) -> Result<Vec<String>, String> {
    let reply: ExtractReply = parse_json(raw)?;
    Ok(reply.sentences.into_iter().filter(|s| !s.trim().is_empty()).collect())
}

fn parse_judge(raw: &str) -> Result<Judgment, String> {
    let reply: JudgeReply = parse_json(raw)?;
    if reply.rationale.trim().is_empty() {
        return Err("rationale is empty".into());
    }
    let rationale_at = raw.find("\"rationale\"");
    let met_at = raw.find("\"met\"");
    if let (Some(r), Some(m)) = (rationale_at, met_at) {
        if m < r {
            return Err("the rationale must come before the verdict".into());
        }
    }
    Ok(Judgment { met: reply.met, rationale: reply.rationale.trim().to_string() })
}

fn parse_generate(raw: &str) -> Result<String, String> {
    let reply: GenerateReply = parse_json(raw)?;
    let text = reply.feedback.trim();
    if text.is_empty() {
        return Err("feedback is empty".into());
    }
    Ok(text.to_string())
}

/// Runs pipeline steps against a provider.
#[derive(Clone)]
pub struct Pipeline {
    client: StructuredClient,
    concurrency: usize,
}

impl Pipeline {
    pub fn new(client: StructuredClient) -> Self {
        Pipeline { client, concurrency: DEFAULT_CONCURRENCY }
    }

    pub fn with_concurrency(mut self, concurrency: usize) -> Self {
        self.concurrency = concurrency.max(1);
        self
    }

    pub fn client(&self) -> &StructuredClient {
        &self.client
    }

    /// Asks the model for every sentence addressing `rubric` and grounds the
    /// quotes in the draft. Blank drafts are unanchored without a call.
    pub async fn extract_relevant_sentences(
        &self,
        draft: &EssayDraft,
        rubric: &RubricItem,
    ) -> Result<SpanAnchor, PipelineError> {
        if draft.text.trim().is_empty() {
            return Ok(SpanAnchor::unanchored(&draft.essay_id));
        }
        let quotes = self
            .client
            .call(prompts::extract_request(rubric, &draft.text), parse_extract)
            .await
            .map_err(|source| PipelineError { rubric_id: rubric.id.clone(), source })?;
        let anchor = ground_quotes(draft, &quotes);
        Ok(validate_anchor(&anchor, draft).unwrap_or(anchor))
    }

    /// Judges `rubric` from the anchored evidence. An unanchored rubric is
    /// not met and costs no call.
    pub async fn judge_rubric(
        &self,
        draft: &EssayDraft,
        rubric: &RubricItem,
        anchor: &SpanAnchor,
    ) -> Result<Judgment, PipelineError> {
        if !anchor.is_anchored() {
            return Ok(Judgment { met: false, rationale: NO_EVIDENCE_RATIONALE.into() });
        }
        let evidence = anchor.excerpt(&draft.text);
        self.client
            .call(prompts::judge_request(rubric, &draft.text, &evidence), parse_judge)
            .await
            .map_err(|source| PipelineError { rubric_id: rubric.id.clone(), source })
    }

    /// Drafts praise for a met rubric or a hint for an unmet one. `variant`
    /// is zero for the first suggestion and counts up on regeneration.
    pub async fn generate_feedback(
        &self,
        draft: &EssayDraft,
        rubric: &RubricItem,
        judgment: &Judgment,
        anchor: &SpanAnchor,
        exemplars: &[String],
        variant: u32,
    ) -> Result<FeedbackSuggestion, PipelineError> {
        let evidence = anchor.excerpt(&draft.text);
        let request = prompts::generate_request(rubric, &draft.text, &evidence, judgment, exemplars, variant);
        let text = self
            .client
            .call(request, parse_generate)
            .await
            .map_err(|source| PipelineError { rubric_id: rubric.id.clone(), source })?;
        Ok(FeedbackSuggestion { kind: SuggestionKind::for_judgment(judgment.met), text })
    }

    /// Extract and judge only, as used by the scorer.
    pub async fn assess(&self, draft: &EssayDraft, rubric: &RubricItem) -> Result<(SpanAnchor, Judgment), PipelineError> {
        let anchor = self.extract_relevant_sentences(draft, rubric).await?;
        let judgment = self.judge_rubric(draft, rubric, &anchor).await?;
        Ok((anchor, judgment))
    }

    /// All three steps for one rubric item. Failures become an error bundle.
    pub async fn run_rubric(&self, draft: &EssayDraft, assignment: &Assignment, rubric: &RubricItem) -> SuggestionBundle {
        let anchor = match self.extract_relevant_sentences(draft, rubric).await {
            Ok(anchor) => anchor,
            Err(e) => return SuggestionBundle::failed(rubric, SpanAnchor::unanchored(&draft.essay_id), &e),
        };
        let judgment = match self.judge_rubric(draft, rubric, &anchor).await {
            Ok(j) => j,
            Err(e) => return SuggestionBundle::failed(rubric, anchor, &e),
        };
        let suggestion =
            match self.generate_feedback(draft, rubric, &judgment, &anchor, &assignment.exemplar_questions, 0).await {
                Ok(s) => s,
                Err(e) => return SuggestionBundle::failed(rubric, anchor, &e),
            };
        SuggestionBundle {
            rubric_id: rubric.id.clone(),
            anchor,
            judgment,
            ai_suggestion: suggestion,
            historic_suggestion: SuggestionBundle::historic_for(rubric),
            final_text: String::new(),
            adopted_from: None,
            history: Vec::new(),
            regenerations: 0,
            stale: false,
            error: None,
        }
    }

    /// One bundle per rubric item in rubric order. Rubric items run
    /// concurrently; a failing item yields an error bundle.
    pub async fn run_pipeline(&self, draft: &EssayDraft, assignment: &Assignment) -> Vec<SuggestionBundle> {
        stream::iter(assignment.rubric_items.iter().map(|rubric| self.run_rubric(draft, assignment, rubric)).collect::<Vec<_>>())
            .buffered(self.concurrency)
            .collect()
            .await
    }

    /// Negates the judgment and swaps the AI suggestion to the new polarity.
    /// The anchor and final text are untouched. If regeneration fails the
    /// flip still stands, with a placeholder suggestion marked stale.
    pub async fn flip_judgment(
        &self,
        bundle: &SuggestionBundle,
        draft: &EssayDraft,
        assignment: &Assignment,
    ) -> Result<SuggestionBundle, PipelineError> {
        let rubric = self.rubric(assignment, &bundle.rubric_id)?;
        let mut next = bundle.clone();
        next.judgment.met = !bundle.judgment.met;
        let kind = SuggestionKind::for_judgment(next.judgment.met);
        match self
            .generate_feedback(draft, rubric, &next.judgment, &bundle.anchor, &assignment.exemplar_questions, 0)
            .await
        {
            Ok(suggestion) => {
                next.ai_suggestion = suggestion;
                next.stale = false;
                next.error = None;
            }
            Err(e) => {
                tracing::warn!(rubric_id = %bundle.rubric_id, error = %e, "suggestion not regenerated after flip");
                next.ai_suggestion = FeedbackSuggestion { kind, text: PLACEHOLDER_SUGGESTION.into() };
                next.stale = true;
                next.error = Some(e.to_string());
            }
        }
        Ok(next)
    }

    /// A fresh AI suggestion for the current anchor and judgment; the old
    /// one moves to `history`. On failure the bundle is left as it was.
    pub async fn regenerate_feedback(
        &self,
        bundle: &SuggestionBundle,
        draft: &EssayDraft,
        assignment: &Assignment,
    ) -> Result<SuggestionBundle, PipelineError> {
        let rubric = self.rubric(assignment, &bundle.rubric_id)?;
        let variant = bundle.regenerations + 1;
        let suggestion = self
            .generate_feedback(draft, rubric, &bundle.judgment, &bundle.anchor, &assignment.exemplar_questions, variant)
            .await?;
        let mut next = bundle.clone();
        next.history.push(std::mem::replace(&mut next.ai_suggestion, suggestion));
        next.regenerations = variant;
        next.stale = false;
        next.error = None;
        Ok(next)
    }

    fn rubric<'a>(&self, assignment: &'a Assignment, rubric_id: &str) -> Result<&'a RubricItem, PipelineError> {
        assignment.rubric(rubric_id).ok_or_else(|| PipelineError {
            rubric_id: rubric_id.to_string(),
            source: ProviderError::Config(format!("rubric {rubric_id:?} is not in assignment {:?}", assignment.id)),
        })
    }
}
