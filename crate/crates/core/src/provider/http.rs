use async_trait::async_trait;
use serde::{Deserialize, Serialize};

use super::{ChatMessage, LlmClient, ProviderConfig, ProviderRequest};
use crate::error::ProviderError;

/// Client for an OpenAI-compatible chat-completions endpoint.
///
/// The bearer credential is read from the environment variable named in
/// [`ProviderConfig::api_key_env`] on every call, so it never lands in
/// config files or logs.
#[derive(Debug, Clone, Default)]
pub struct HttpChatClient {
    http: reqwest::Client,
}

#[derive(Serialize)]
struct ChatRequestBody<'a> {
    model: &'a str,
    temperature: f64,
    messages: &'a [ChatMessage],
    response_format: ResponseFormat,
}

#[derive(Serialize)]
struct ResponseFormat {
    #[serde(rename = "type")]
    kind: &'static str,
}

#[derive(Deserialize)]
struct ChatResponseBody {
    choices: Vec<Choice>,
}

#[derive(Deserialize)]
struct Choice {
    message: ChoiceMessage,
}

#[derive(Deserialize)]
struct ChoiceMessage {
    content: Option<String>,
}

impl HttpChatClient {
    pub fn new() -> Self {
        HttpChatClient { http: reqwest::Client::new() }
    }
}

#[async_trait]
impl LlmClient for HttpChatClient {
    async fn complete(&self, request: &ProviderRequest, config: &ProviderConfig) -> Result<String, ProviderError> {
        let key = std::env::var(&config.api_key_env)
            .ok()
            .filter(|k| !k.is_empty())
            .ok_or_else(|| ProviderError::MissingCredential(config.api_key_env.clone()))?;
        let body = ChatRequestBody {
            model: &config.model_id,
            temperature: config.temperature,
            messages: &request.messages,
            response_format: ResponseFormat { kind: "json_object" },
        };
        let response = self
            .http
            .post(&config.endpoint)
            .bearer_auth(key)
            .timeout(config.timeout())
            .json(&body)
            .send()
            .await
            .map_err(|e| if e.is_timeout() { ProviderError::Timeout } else { ProviderError::Transport(e.to_string()) })?;
        let status = response.status();
        let text = response.text().await.map_err(|e| ProviderError::Transport(e.to_string()))?;
        if !status.is_success() {
            return Err(ProviderError::Status { status: status.as_u16(), body: text.chars().take(500).collect() });
        }
        let parsed: ChatResponseBody =
            serde_json::from_str(&text).map_err(|e| ProviderError::Malformed(format!("response envelope: {e}")))?;
        parsed
            .choices
            .into_iter()
            .next()
            .and_then(|c| c.message.content)
            .ok_or_else(|| ProviderError::Malformed("response has no message content".into()))
    }
}
