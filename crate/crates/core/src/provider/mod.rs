//! LLM access: a minimal chat-completion client trait, an OpenAI-compatible
//! HTTP implementation, a deterministic mock, and the structured-call layer
//! that adds retries, schema validation and one repair round-trip.

mod http;
mod mock;
pub mod prompts;
mod structured;

use std::time::Duration;

use async_trait::async_trait;
use serde::{Deserialize, Serialize};

pub use http::HttpChatClient;
pub use mock::{MockProvider, ScriptKey};
pub use structured::{parse_json, StructuredClient};

use crate::domain::RubricItem;
use crate::error::ProviderError;
use crate::pipeline::Judgment;
use crate::quality::FeedbackTypes;

pub const DEFAULT_TEMPERATURE: f64 = 0.05;
pub const DEFAULT_API_KEY_ENV: &str = "FEEDBACK_LLM_API_KEY";
pub const DEFAULT_ENDPOINT: &str = "https://api.openai.com/v1/chat/completions";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ProviderConfig {
    pub model_id: String,
    pub endpoint: String,
    /// Name of the environment variable holding the bearer credential.
    pub api_key_env: String,
    pub temperature: f64,
    pub timeout_secs: f64,
    /// Total attempts for transport-class failures.
    pub max_retries: u8,
    /// First backoff delay; doubles after each failed attempt.
    pub backoff_ms: u64,
}

impl Default for ProviderConfig {
    fn default() -> Self {
        ProviderConfig {
            model_id: "gpt-4o".into(),
            endpoint: DEFAULT_ENDPOINT.into(),
            api_key_env: DEFAULT_API_KEY_ENV.into(),
            temperature: DEFAULT_TEMPERATURE,
            timeout_secs: 60.0,
            max_retries: 3,
            backoff_ms: 500,
        }
    }
}

impl ProviderConfig {
    pub fn validate(&self) -> Result<(), ProviderError> {
        if !(0.0..=2.0).contains(&self.temperature) {
            return Err(ProviderError::Config(format!("temperature {} outside [0, 2]", self.temperature)));
        }
        if self.max_retries == 0 {
            return Err(ProviderError::Config("max_retries must be at least 1".into()));
        }
        if !(self.timeout_secs.is_finite() && self.timeout_secs > 0.0) {
            return Err(ProviderError::Config("timeout must be positive".into()));
        }
        if self.model_id.trim().is_empty() {
            return Err(ProviderError::Config("model id is empty".into()));
        }
        Ok(())
    }

    pub fn timeout(&self) -> Duration {
        Duration::from_secs_f64(self.timeout_secs)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RequestKind {
    ExtractSentences,
    JudgeRubric,
    GenerateFeedback,
    SegmentFeedback,
    ClassifyType,
    RateQuality,
}

impl RequestKind {
    pub fn as_str(self) -> &'static str {
        match self {
            RequestKind::ExtractSentences => "extract_sentences",
            RequestKind::JudgeRubric => "judge_rubric",
            RequestKind::GenerateFeedback => "generate_feedback",
            RequestKind::SegmentFeedback => "segment_feedback",
            RequestKind::ClassifyType => "classify_type",
            RequestKind::RateQuality => "rate_quality",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Role {
    System,
    User,
    Assistant,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ChatMessage {
    pub role: Role,
    pub content: String,
}

impl ChatMessage {
    pub fn system(content: impl Into<String>) -> Self {
        ChatMessage { role: Role::System, content: content.into() }
    }

    pub fn user(content: impl Into<String>) -> Self {
        ChatMessage { role: Role::User, content: content.into() }
    }

    pub fn assistant(content: impl Into<String>) -> Self {
        ChatMessage { role: Role::Assistant, content: content.into() }
    }
}

/// Structured inputs behind a request. Only the rendered `messages` travel
/// over the wire; the mock provider reads this instead.
#[derive(Debug, Clone, PartialEq)]
pub enum RequestContext {
    Extract { rubric: RubricItem, draft_text: String },
    Judge { rubric: RubricItem, draft_text: String, evidence: String },
    Generate { rubric: RubricItem, draft_text: String, evidence: String, judgment: Judgment },
    Segment { message_text: String, message_rubric: Option<String>, rubrics: Vec<(String, String)> },
    Classify { unit_text: String },
    Rate { unit_text: String, types: FeedbackTypes, prose_mechanics_only: bool },
}

#[derive(Debug, Clone, PartialEq)]
pub struct ProviderRequest {
    pub kind: RequestKind,
    pub rubric_id: Option<String>,
    /// Distinguishes repeated requests that must yield different output
    /// (regeneration); zero for first attempts.
    pub variant: u32,
    pub messages: Vec<ChatMessage>,
    pub context: RequestContext,
}

#[async_trait]
pub trait LlmClient: Send + Sync {
    /// Returns the raw assistant text for one chat-completion call.
    async fn complete(&self, request: &ProviderRequest, config: &ProviderConfig) -> Result<String, ProviderError>;
}
