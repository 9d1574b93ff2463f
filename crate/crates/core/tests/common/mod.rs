//! Shared fixtures, oracles and corpus builders for the integration tests and
//! the acceptance runner.
#![allow(dead_code)]

pub mod corpora;
pub mod oracles;
pub mod sessions;

use std::path::PathBuf;
use std::sync::Arc;

use rubric_feedback::domain::{parse_drafts, Catalog};
use rubric_feedback::pipeline::Pipeline;
use rubric_feedback::provider::{HttpChatClient, LlmClient, MockProvider, ProviderConfig, StructuredClient};
use rubric_feedback::quality::FeedbackAnalyzer;
use rubric_feedback::reliability::{GoldMessage, LabeledExample};
use rubric_feedback::scorer::GoldLabel;
use rubric_feedback::service::Roster;
use rubric_feedback::{EssayDraft, Stage};

pub fn fixture_path(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("fixtures").join(name)
}

pub fn read_fixture(name: &str) -> String {
    std::fs::read_to_string(fixture_path(name)).unwrap_or_else(|e| panic!("fixture {name}: {e}"))
}

pub fn catalog() -> Catalog {
    Catalog::from_json(&read_fixture("catalog.json")).expect("catalog fixture")
}

pub fn drafts() -> Vec<EssayDraft> {
    parse_drafts(&read_fixture("drafts.jsonl")).expect("draft fixture")
}

pub fn roster() -> Roster {
    Roster::from_json(&read_fixture("roster.json")).expect("roster fixture")
}

pub fn scorer_gold() -> Vec<GoldLabel> {
    serde_json::from_str(&read_fixture("scorer_gold.json")).expect("scorer gold fixture")
}

pub fn gold_messages() -> Vec<GoldMessage> {
    serde_json::from_str(&read_fixture("gold_messages.json")).expect("gold message fixture")
}

pub fn labeled_examples() -> Vec<LabeledExample> {
    serde_json::from_str(&read_fixture("labeled_examples.json")).expect("labeled example fixture")
}

pub fn mock(seed: u64) -> Arc<MockProvider> {
    Arc::new(MockProvider::new(seed))
}

pub fn client_for(mock: &Arc<MockProvider>) -> StructuredClient {
    let llm: Arc<dyn LlmClient> = mock.clone();
    let config = ProviderConfig { max_retries: 1, backoff_ms: 0, ..ProviderConfig::default() };
    StructuredClient::new(llm, config).expect("mock client")
}

pub fn mock_pipeline(seed: u64) -> Pipeline {
    Pipeline::new(client_for(&mock(seed)))
}

pub fn mock_analyzer(seed: u64) -> FeedbackAnalyzer {
    FeedbackAnalyzer::new(client_for(&mock(seed)))
}

/// A client for the configured live provider, if its credential is set.
pub fn live_client() -> Option<StructuredClient> {
    let config = ProviderConfig::default();
    let key = std::env::var(&config.api_key_env).ok()?;
    if key.trim().is_empty() {
        return None;
    }
    StructuredClient::new(Arc::new(HttpChatClient::new()), config).ok()
}

pub fn draft(essay_id: &str, student_id: &str, stage: Stage, text: &str) -> EssayDraft {
    EssayDraft {
        essay_id: essay_id.into(),
        student_id: student_id.into(),
        assignment_id: "wa1".into(),
        stage,
        text: text.into(),
        submitted_at: chrono::DateTime::from_timestamp(1_700_000_000, 0).unwrap(),
    }
}

/// `total` spread over `n` items as evenly as possible; item `i` gets the
/// extra unit when `i < total % n`.
pub fn share(total: usize, n: usize, i: usize) -> usize {
    total / n + usize::from(i < total % n)
}
