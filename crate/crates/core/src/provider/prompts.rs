//! Prompt assembly. Templates live in `prompts/*.txt` and are compiled in;
//! `{{name}}` placeholders are filled here. Bump [`PROMPT_VERSION`] whenever
//! a template changes so cached pipeline output is invalidated.

use super::{ChatMessage, ProviderRequest, RequestContext, RequestKind};
use crate::domain::RubricItem;
use crate::pipeline::Judgment;
use crate::quality::FeedbackTypes;

pub const PROMPT_VERSION: &str = "2026-10-1";

const EXTRACT_SYSTEM: &str = include_str!("../../prompts/extract_system.txt");
const EXTRACT_USER: &str = include_str!("../../prompts/extract_user.txt");
const JUDGE_SYSTEM: &str = include_str!("../../prompts/judge_system.txt");
const JUDGE_USER: &str = include_str!("../../prompts/judge_user.txt");
const GENERATE_SYSTEM: &str = include_str!("../../prompts/generate_system.txt");
const GENERATE_USER: &str = include_str!("../../prompts/generate_user.txt");
const SEGMENT_SYSTEM: &str = include_str!("../../prompts/segment_system.txt");
const SEGMENT_USER: &str = include_str!("../../prompts/segment_user.txt");
const CLASSIFY_SYSTEM: &str = include_str!("../../prompts/classify_system.txt");
const CLASSIFY_USER: &str = include_str!("../../prompts/classify_user.txt");
const RATE_SYSTEM: &str = include_str!("../../prompts/rate_system.txt");
const RATE_USER: &str = include_str!("../../prompts/rate_user.txt");
const REPAIR: &str = include_str!("../../prompts/repair.txt");

/// Replaces each `{{key}}` in `template`. Unknown placeholders are left as is.
pub fn render(template: &str, vars: &[(&str, &str)]) -> String {
    let mut out = template.to_string();
    for (key, value) in vars {
        out = out.replace(&format!("{{{{{key}}}}}"), value);
    }
    out
}

fn notes(rubric: &RubricItem) -> String {
    let lines = rubric.refinement_notes.as_ref().map(|n| n.lines()).unwrap_or_default();
    if lines.is_empty() {
        return String::new();
    }
    let mut out = String::from("Notes on this criterion:\n");
    for (label, text) in lines {
        out.push_str(&format!("- {label}: {text}\n"));
    }
    out
}

fn rubric_vars<'a>(rubric: &'a RubricItem, notes: &'a str) -> [(&'static str, &'a str); 3] {
    [("rubric_id", rubric.id.as_str()), ("rubric_text", rubric.text.as_str()), ("notes", notes)]
}

pub fn extract_request(rubric: &RubricItem, draft_text: &str) -> ProviderRequest {
    let notes = notes(rubric);
    let mut vars = rubric_vars(rubric, &notes).to_vec();
    vars.push(("essay", draft_text));
    ProviderRequest {
        kind: RequestKind::ExtractSentences,
        rubric_id: Some(rubric.id.clone()),
        variant: 0,
        messages: vec![ChatMessage::system(EXTRACT_SYSTEM), ChatMessage::user(render(EXTRACT_USER, &vars))],
        context: RequestContext::Extract { rubric: rubric.clone(), draft_text: draft_text.to_string() },
    }
}

pub fn judge_request(rubric: &RubricItem, draft_text: &str, evidence: &str) -> ProviderRequest {
    let notes = notes(rubric);
    let mut vars = rubric_vars(rubric, &notes).to_vec();
    vars.push(("essay", draft_text));
    vars.push(("evidence", evidence));
    ProviderRequest {
        kind: RequestKind::JudgeRubric,
        rubric_id: Some(rubric.id.clone()),
        variant: 0,
        messages: vec![ChatMessage::system(JUDGE_SYSTEM), ChatMessage::user(render(JUDGE_USER, &vars))],
        context: RequestContext::Judge {
            rubric: rubric.clone(),
            draft_text: draft_text.to_string(),
            evidence: evidence.to_string(),
        },
    }
}

pub fn generate_request(
    rubric: &RubricItem,
    draft_text: &str,
    evidence: &str,
    judgment: &Judgment,
    exemplars: &[String],
    variant: u32,
) -> ProviderRequest {
    let notes = notes(rubric);
    let exemplar_block: String = exemplars.iter().map(|q| format!("- {q}\n")).collect();
    let system = render(GENERATE_SYSTEM, &[("exemplars", exemplar_block.trim_end())]);
    let variant_note = if variant == 0 {
        String::new()
    } else {
        format!("Write a different message from earlier suggestions (attempt {}).\n", variant + 1)
    };
    let verdict = if judgment.met { "met" } else { "not met" };
    let mut vars = rubric_vars(rubric, &notes).to_vec();
    vars.extend([
        ("verdict", verdict),
        ("rationale", judgment.rationale.as_str()),
        ("evidence", evidence),
        ("variant_note", variant_note.as_str()),
    ]);
    ProviderRequest {
        kind: RequestKind::GenerateFeedback,
        rubric_id: Some(rubric.id.clone()),
        variant,
        messages: vec![ChatMessage::system(system), ChatMessage::user(render(GENERATE_USER, &vars))],
        context: RequestContext::Generate {
            rubric: rubric.clone(),
            draft_text: draft_text.to_string(),
            evidence: evidence.to_string(),
            judgment: judgment.clone(),
        },
    }
}

pub fn segment_request(message_text: &str, message_rubric: Option<&str>, rubrics: &[(String, String)]) -> ProviderRequest {
    let listing: String = rubrics.iter().map(|(id, text)| format!("- {id}: {text}\n")).collect();
    let own = message_rubric
        .map(|id| format!("The message was written in the feedback box for criterion {id}.\n"))
        .unwrap_or_default();
    let user = render(SEGMENT_USER, &[("rubrics", &listing), ("message_rubric", &own), ("message", message_text)]);
    ProviderRequest {
        kind: RequestKind::SegmentFeedback,
        rubric_id: message_rubric.map(str::to_string),
        variant: 0,
        messages: vec![ChatMessage::system(SEGMENT_SYSTEM), ChatMessage::user(user)],
        context: RequestContext::Segment {
            message_text: message_text.to_string(),
            message_rubric: message_rubric.map(str::to_string),
            rubrics: rubrics.to_vec(),
        },
    }
}

pub fn classify_request(unit_text: &str) -> ProviderRequest {
    ProviderRequest {
        kind: RequestKind::ClassifyType,
        rubric_id: None,
        variant: 0,
        messages: vec![ChatMessage::system(CLASSIFY_SYSTEM), ChatMessage::user(render(CLASSIFY_USER, &[("unit", unit_text)]))],
        context: RequestContext::Classify { unit_text: unit_text.to_string() },
    }
}

pub fn rate_request(unit_text: &str, types: FeedbackTypes, prose_mechanics_only: bool) -> ProviderRequest {
    let applicable = (types.problem || types.solution) && !prose_mechanics_only;
    let applicability = if applicable {
        "Rate all four metrics."
    } else {
        "This unit is not a problem or solution about economic content: set independence and actionability to null."
    };
    let tags = types.labels().join(", ");
    let tags = if tags.is_empty() { "none".to_string() } else { tags };
    ProviderRequest {
        kind: RequestKind::RateQuality,
        rubric_id: None,
        variant: 0,
        messages: vec![
            ChatMessage::system(render(RATE_SYSTEM, &[("applicability", applicability)])),
            ChatMessage::user(render(RATE_USER, &[("unit", unit_text), ("types", &tags)])),
        ],
        context: RequestContext::Rate { unit_text: unit_text.to_string(), types, prose_mechanics_only },
    }
}

pub fn repair_reminder(problem: &str) -> String {
    render(REPAIR, &[("problem", problem)])
}
