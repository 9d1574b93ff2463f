//! Student-facing feedback export and delivery to a learning management
//! system.

use std::path::PathBuf;

use async_trait::async_trait;
use serde::{Deserialize, Serialize};

use super::session::GradingSession;
use crate::domain::{Condition, Stage};
use crate::error::ServiceError;
use crate::events::Target;
use crate::quality::FeedbackMessage;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ExportComment {
    pub target: Target,
    /// The highlighted essay text the comment refers to, if anchored.
    pub anchor_excerpt: String,
    pub text: String,
}

/// Exactly the feedback a grader confirmed, plus the score.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeedbackExport {
    pub essay_id: String,
    pub student_id: String,
    pub assignment_id: String,
    pub stage: Stage,
    pub condition: Condition,
    pub score: f64,
    pub comments: Vec<ExportComment>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub warnings: Vec<String>,
}

impl FeedbackExport {
    pub fn from_session(session: &GradingSession, student_id: &str, essay_text: &str) -> Result<Self, ServiceError> {
        let score = session.score.ok_or(ServiceError::MissingScore)?;
        let comments: Vec<ExportComment> = session
            .confirmed_texts()
            .into_iter()
            .map(|(target, text)| ExportComment {
                anchor_excerpt: session.anchor_of(&target).map(|a| a.excerpt(essay_text)).unwrap_or_default(),
                target,
                text: text.to_string(),
            })
            .collect();
        let mut warnings = Vec::new();
        if comments.is_empty() {
            warnings.push("no feedback comments were written for this essay".to_string());
        }
        Ok(FeedbackExport {
            essay_id: session.essay_id.clone(),
            student_id: student_id.to_string(),
            assignment_id: session.assignment_id.clone(),
            stage: session.stage,
            condition: session.condition,
            score,
            comments,
            warnings,
        })
    }

    /// The exported comments as input for feedback analysis.
    pub fn messages(&self) -> Vec<FeedbackMessage> {
        self.comments
            .iter()
            .map(|c| {
                let (kind, id) = match &c.target {
                    Target::Rubric(id) => ("rubric", id),
                    Target::Comment(id) => ("comment", id),
                };
                FeedbackMessage {
                    message_id: format!("{}/{kind}/{id}", self.essay_id),
                    essay_id: self.essay_id.clone(),
                    rubric_id: matches!(c.target, Target::Rubric(_)).then(|| id.clone()),
                    text: c.text.clone(),
                    condition: self.condition,
                }
            })
            .collect()
    }
}

/// Delivery of finalized feedback to a course platform.
#[async_trait]
pub trait LmsClient: Send + Sync {
    async fn deliver(&self, export: &FeedbackExport) -> Result<(), ServiceError>;
}

/// Writes each export as a JSON file; the default delivery target.
#[derive(Debug, Clone)]
pub struct FileExporter {
    dir: PathBuf,
}

impl FileExporter {
    pub fn new(dir: impl Into<PathBuf>) -> Self {
        FileExporter { dir: dir.into() }
    }

    pub fn path_for(&self, essay_id: &str) -> PathBuf {
        self.dir.join(format!("{}.json", super::store::file_stem(essay_id)))
    }
}

#[async_trait]
impl LmsClient for FileExporter {
    async fn deliver(&self, export: &FeedbackExport) -> Result<(), ServiceError> {
        tokio::fs::create_dir_all(&self.dir).await.map_err(|e| ServiceError::Storage(e.to_string()))?;
        let body = serde_json::to_vec_pretty(export).expect("exports serialize");
        tokio::fs::write(self.path_for(&export.essay_id), body).await.map_err(|e| ServiceError::Storage(e.to_string()))
    }
}

/// Posts exports as JSON to a course-platform endpoint. A stand-in for a
/// real integration: no authentication flow, one request per export.
#[derive(Debug, Clone)]
pub struct HttpLmsClient {
    endpoint: String,
    http: reqwest::Client,
}

impl HttpLmsClient {
    pub fn new(endpoint: impl Into<String>) -> Self {
        HttpLmsClient { endpoint: endpoint.into(), http: reqwest::Client::new() }
    }
}

#[async_trait]
impl LmsClient for HttpLmsClient {
    async fn deliver(&self, export: &FeedbackExport) -> Result<(), ServiceError> {
        let response = self
            .http
            .post(&self.endpoint)
            .json(export)
            .send()
            .await
            .map_err(|e| ServiceError::Storage(format!("lms delivery: {e}")))?;
        if !response.status().is_success() {
            return Err(ServiceError::Storage(format!("lms delivery: status {}", response.status())));
        }
        Ok(())
    }
}

/// Discards exports; for tests and dry runs.
#[derive(Debug, Clone, Default)]
pub struct NullLms;

#[async_trait]
impl LmsClient for NullLms {
    async fn deliver(&self, _export: &FeedbackExport) -> Result<(), ServiceError> {
        Ok(())
    }
}
