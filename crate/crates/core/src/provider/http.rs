//! JSON-over-HTTP provider. The request body is the [`ProviderRequest`]
//! itself; the response body must carry `text` and may carry `embeddings`
//! and token counts.

use std::time::{Duration, Instant};

use serde::Deserialize;

use super::{Provider, ProviderError, ProviderRequest, ProviderResponse};

pub struct HttpProvider {
    url: String,
    key: Option<String>,
    agent: ureq::Agent,
}

#[derive(Deserialize)]
struct WireResponse {
    #[serde(default)]
    text: String,
    #[serde(default)]
    embeddings: Vec<Vec<f64>>,
    #[serde(default)]
    prompt_tokens: u64,
    #[serde(default)]
    completion_tokens: u64,
    #[serde(default)]
    provider_id: Option<String>,
}

impl HttpProvider {
    pub fn new(url: &str, key: Option<String>) -> Self {
        let agent = ureq::Agent::config_builder()
            .timeout_global(Some(Duration::from_secs(120)))
            .build()
            .into();
        Self {
            url: url.to_string(),
            key,
            agent,
        }
    }
}

impl Provider for HttpProvider {
    fn id(&self) -> String {
        format!("http:{}", self.url)
    }

    fn send(&self, request: &ProviderRequest) -> Result<ProviderResponse, ProviderError> {
        let started = Instant::now();
        let mut call = self.agent.post(&self.url).header("Content-Type", "application/json");
        if let Some(key) = &self.key {
            call = call.header("Authorization", &format!("Bearer {key}"));
        }
        let mut response = call
            .send_json(request)
            .map_err(|e| ProviderError::Unavailable(e.to_string()))?;
        let wire: WireResponse = response
            .body_mut()
            .read_json()
            .map_err(|e| ProviderError::Malformed(e.to_string()))?;
        Ok(ProviderResponse {
            text: wire.text,
            embeddings: wire.embeddings,
            prompt_tokens: wire.prompt_tokens,
            completion_tokens: wire.completion_tokens,
            provider_id: wire.provider_id.unwrap_or_else(|| self.id()),
            wall_time_ms: started.elapsed().as_millis() as u64,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn unreachable_endpoint_is_unavailable() {
        // port 9 (discard) on localhost is closed in the test environment
        let p = HttpProvider::new("http://127.0.0.1:9/v1", None);
        let req = ProviderRequest::embed(&["x".into()]);
        assert!(matches!(p.send(&req), Err(ProviderError::Unavailable(_))));
    }
}
