//! Service configuration file (TOML).
//!
//! ```toml
//! bind = "127.0.0.1:8080"
//! data_dir = "var"
//! catalog = "fixtures/catalog.json"
//! roster = "fixtures/roster.json"
//! rubric_sheet_base = "https://sheets.example.edu/rubrics"
//! clock_skew_ms = 2000
//!
//! [provider]
//! kind = "mock"          # or "http"
//! seed = 7
//!
//! [provider.settings]
//! model_id = "gpt-4o"
//! api_key_env = "FEEDBACK_LLM_API_KEY"
//!
//! [lms]
//! kind = "file"          # or "http" / "none"
//! dir = "var/exports"
//! ```
//!
//! Paths are resolved relative to the config file.

use std::path::{Path, PathBuf};
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use super::export::{FileExporter, HttpLmsClient, LmsClient, NullLms};
use super::roster::Roster;
use super::store::Store;
use super::GradingService;
use crate::domain::Catalog;
use crate::error::ServiceError;
use crate::events::{EventLog, DEFAULT_CLOCK_SKEW_MS};
use crate::pipeline::Pipeline;
use crate::provider::{HttpChatClient, LlmClient, MockProvider, ProviderConfig, StructuredClient};

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ProviderKind {
    #[default]
    Mock,
    Http,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProviderSection {
    #[serde(default)]
    pub kind: ProviderKind,
    /// Seed of the mock provider.
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub settings: ProviderConfig,
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum LmsConfig {
    File { dir: PathBuf },
    Http { endpoint: String },
    #[default]
    None,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ServiceConfig {
    #[serde(default = "default_bind")]
    pub bind: String,
    /// Persistence root; in-memory only when absent.
    #[serde(default)]
    pub data_dir: Option<PathBuf>,
    pub catalog: PathBuf,
    pub roster: PathBuf,
    #[serde(default)]
    pub rubric_sheet_base: Option<String>,
    #[serde(default = "default_skew")]
    pub clock_skew_ms: i64,
    #[serde(default)]
    pub provider: ProviderSection,
    #[serde(default)]
    pub lms: LmsConfig,
}

fn default_bind() -> String {
    "127.0.0.1:8080".into()
}

fn default_skew() -> i64 {
    DEFAULT_CLOCK_SKEW_MS
}

fn read(path: &Path) -> Result<String, ServiceError> {
    std::fs::read_to_string(path).map_err(|e| ServiceError::Storage(format!("{}: {e}", path.display())))
}

impl ServiceConfig {
    /// Reads a config file and resolves its relative paths against the
    /// file's directory.
    pub fn load(path: &Path) -> Result<Self, ServiceError> {
        let mut config: ServiceConfig =
            toml::from_str(&read(path)?).map_err(|e| ServiceError::Precondition(format!("config: {e}")))?;
        let base = path.parent().unwrap_or(Path::new("."));
        let resolve = |p: &mut PathBuf| {
            if p.is_relative() {
                *p = base.join(&*p);
            }
        };
        resolve(&mut config.catalog);
        resolve(&mut config.roster);
        if let Some(d) = config.data_dir.as_mut() {
            resolve(d);
        }
        if let LmsConfig::File { dir } = &mut config.lms {
            resolve(dir);
        }
        Ok(config)
    }

    pub fn pipeline(&self) -> Result<Pipeline, ServiceError> {
        let client: Arc<dyn LlmClient> = match self.provider.kind {
            ProviderKind::Mock => Arc::new(MockProvider::new(self.provider.seed)),
            ProviderKind::Http => Arc::new(HttpChatClient::new()),
        };
        let structured = StructuredClient::new(client, self.provider.settings.clone())
            .map_err(|e| ServiceError::Precondition(e.to_string()))?;
        Ok(Pipeline::new(structured))
    }

    pub fn lms_client(&self) -> Arc<dyn LmsClient> {
        match &self.lms {
            LmsConfig::File { dir } => Arc::new(FileExporter::new(dir.clone())),
            LmsConfig::Http { endpoint } => Arc::new(HttpLmsClient::new(endpoint.clone())),
            LmsConfig::None => Arc::new(NullLms),
        }
    }

    pub fn build_service(&self) -> Result<GradingService, ServiceError> {
        let catalog = Catalog::from_json(&read(&self.catalog)?)?;
        let roster = Roster::from_json(&read(&self.roster)?)?;
        let store = match &self.data_dir {
            Some(dir) => Store::on_disk(dir)?,
            None => Store::in_memory(),
        };
        let mut builder = GradingService::builder(catalog, roster)
            .pipeline(self.pipeline()?)
            .lms(self.lms_client())
            .store(store)
            .event_log(EventLog::new(chrono::Duration::milliseconds(self.clock_skew_ms)));
        if let Some(base) = &self.rubric_sheet_base {
            builder = builder.reference_base(base.clone());
        }
        builder.build()
    }
}
