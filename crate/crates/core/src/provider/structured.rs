use std::sync::Arc;
use std::time::Duration;

use serde::de::DeserializeOwned;

use super::{prompts, ChatMessage, LlmClient, ProviderConfig, ProviderRequest};
use crate::error::ProviderError;

/// Wraps an [`LlmClient`] with the call discipline every pipeline step uses:
/// per-call timeout, exponential backoff on transport failures, strict
/// parsing, and exactly one repair retry when a reply does not parse.
#[derive(Clone)]
pub struct StructuredClient {
    client: Arc<dyn LlmClient>,
    config: ProviderConfig,
}

impl StructuredClient {
    pub fn new(client: Arc<dyn LlmClient>, config: ProviderConfig) -> Result<Self, ProviderError> {
        config.validate()?;
        Ok(StructuredClient { client, config })
    }

    pub fn config(&self) -> &ProviderConfig {
        &self.config
    }

    async fn send(&self, request: &ProviderRequest) -> Result<String, ProviderError> {
        let mut delay = Duration::from_millis(self.config.backoff_ms);
        let attempts = self.config.max_retries.max(1);
        for attempt in 1..=attempts {
            let result = match tokio::time::timeout(self.config.timeout(), self.client.complete(request, &self.config)).await
            {
                Ok(r) => r,
                Err(_) => Err(ProviderError::Timeout),
            };
            match result {
                Ok(text) => return Ok(text),
                Err(e) if e.is_transient() && attempt < attempts => {
                    tracing::debug!(kind = request.kind.as_str(), attempt, error = %e, "retrying provider call");
                    tokio::time::sleep(delay).await;
                    delay *= 2;
                }
                Err(e) => return Err(e),
            }
        }
        unreachable!("loop returns on the final attempt")
    }

    /// Sends `request` and parses the reply with `parse`. A reply that fails
    /// to parse is answered once with a reminder to return valid structure;
    /// a second failure is reported as [`ProviderError::Malformed`].
    pub async fn call<T, F>(&self, mut request: ProviderRequest, parse: F) -> Result<T, ProviderError>
    where
        F: Fn(&str) -> Result<T, String>,
    {
        let raw = self.send(&request).await?;
        let problem = match parse(&raw) {
            Ok(value) => return Ok(value),
            Err(problem) => problem,
        };
        tracing::debug!(kind = request.kind.as_str(), %problem, "repairing malformed reply");
        request.messages.push(ChatMessage::assistant(raw));
        request.messages.push(ChatMessage::user(prompts::repair_reminder(&problem)));
        let raw = self.send(&request).await?;
        parse(&raw).map_err(ProviderError::Malformed)
    }
}

/// Parses a JSON object reply, tolerating a surrounding markdown fence.
pub fn parse_json<T: DeserializeOwned>(raw: &str) -> Result<T, String> {
    let trimmed = raw.trim();
    let body = trimmed
        .strip_prefix("```json")
        .or_else(|| trimmed.strip_prefix("```"))
        .and_then(|s| s.strip_suffix("```"))
        .unwrap_or(trimmed);
    serde_json::from_str(body.trim()).map_err(|e| e.to_string())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::provider::{MockProvider, RequestContext, RequestKind, ScriptKey};
    use serde::Deserialize;

    #[derive(Deserialize, Debug, PartialEq)]
    #[serde(deny_unknown_fields)]
    struct Reply {
        feedback: String,
    }

    fn request() -> ProviderRequest {
        ProviderRequest {
            kind: RequestKind::ClassifyType,
            rubric_id: None,
            variant: 0,
            messages: vec![ChatMessage::user("hi")],
            context: RequestContext::Classify { unit_text: "x".into() },
        }
    }

    fn client(mock: Arc<MockProvider>) -> StructuredClient {
        let config = ProviderConfig { backoff_ms: 0, ..Default::default() };
        StructuredClient::new(mock, config).unwrap()
    }

    #[tokio::test]
    async fn transient_failures_are_retried_up_to_the_limit() {
        let mock = Arc::new(MockProvider::new(0));
        let key = ScriptKey::new(RequestKind::ClassifyType, None);
        mock.script(key.clone(), Err(ProviderError::Transport("reset".into())));
        mock.script(key.clone(), Err(ProviderError::Timeout));
        mock.script(key.clone(), Ok(r#"{"feedback":"ok"}"#.into()));
        let got = client(mock.clone()).call(request(), parse_json::<Reply>).await.unwrap();
        assert_eq!(got.feedback, "ok");
        assert_eq!(mock.calls(), 3);

        for _ in 0..3 {
            mock.script(key.clone(), Err(ProviderError::Transport("down".into())));
        }
        let err = client(mock.clone()).call(request(), parse_json::<Reply>).await.unwrap_err();
        assert_eq!(err, ProviderError::Transport("down".into()));
        assert_eq!(mock.calls(), 6);
    }

    #[tokio::test]
    async fn non_transient_errors_are_not_retried() {
        let mock = Arc::new(MockProvider::new(0));
        let key = ScriptKey::new(RequestKind::ClassifyType, None);
        mock.script(key, Err(ProviderError::Status { status: 400, body: "bad".into() }));
        assert!(client(mock.clone()).call(request(), parse_json::<Reply>).await.is_err());
        assert_eq!(mock.calls(), 1);
    }

    #[tokio::test]
    async fn one_repair_retry_then_malformed() {
        let mock = Arc::new(MockProvider::new(0));
        let key = ScriptKey::new(RequestKind::ClassifyType, None);
        mock.script(key.clone(), Ok("not json".into()));
        mock.script(key.clone(), Ok("```json\n{\"feedback\":\"fixed\"}\n```".into()));
        let got = client(mock.clone()).call(request(), parse_json::<Reply>).await.unwrap();
        assert_eq!(got.feedback, "fixed");
        let last = mock.last_request().unwrap();
        assert_eq!(last.messages.len(), 3, "assistant reply and reminder appended");

        mock.script(key.clone(), Ok("{}".into()));
        mock.script(key.clone(), Ok("{\"feedback\": 3}".into()));
        let err = client(mock.clone()).call(request(), parse_json::<Reply>).await.unwrap_err();
        assert!(matches!(err, ProviderError::Malformed(_)));
    }
}
