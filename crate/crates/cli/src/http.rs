//! OpenAI-compatible HTTP backings for the embedder, verifier, writer and
//! agent roles.
//!
//! The API key is read from the environment once, kept in memory only, and
//! never formatted into errors or debug output.

use std::fmt;
use std::thread;
use std::time::Duration;

use serde_json::{json, Value};
use skilltree_core::adaptation::{RouteRequest, SkillContext};
use skilltree_core::io::ProviderConfig;
use skilltree_core::provider::{AgentProvider, EmbeddingProvider, ProviderError, Verifier, Writer};
use skilltree_core::retrieval::Embedding;
use skilltree_core::{Query, RoutingAction, SkillUnit};

const VERIFIER_PROMPT: &str = include_str!("../prompts/verifier.txt");
const WRITER_PROMPT: &str = include_str!("../prompts/writer.txt");
const AGENT_PROMPT: &str = include_str!("../prompts/agent.txt");

struct ApiKey(String);

impl fmt::Debug for ApiKey {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str("ApiKey(<redacted>)")
    }
}

#[derive(Debug)]
pub struct HttpClient {
    agent: ureq::Agent,
    base_url: String,
    key: ApiKey,
    max_retries: u32,
    backoff: Duration,
}

impl HttpClient {
    /// Fails when the base URL is missing or the key variable is unset.
    pub fn from_config(cfg: &ProviderConfig) -> Result<Self, ProviderError> {
        let base_url = cfg
            .base_url
            .as_deref()
            .filter(|u| !u.is_empty())
            .ok_or_else(|| ProviderError::Config("providers.base_url is not set".into()))?
            .trim_end_matches('/')
            .to_string();
        let key = std::env::var(&cfg.api_key_env)
            .ok()
            .filter(|k| !k.is_empty())
            .ok_or_else(|| {
                ProviderError::Config(format!("environment variable {} is not set", cfg.api_key_env))
            })?;
        let agent = ureq::Agent::config_builder()
            .timeout_global(Some(Duration::from_secs(cfg.timeout_secs)))
            .http_status_as_error(false)
            .build()
            .into();
        Ok(Self {
            agent,
            base_url,
            key: ApiKey(key),
            max_retries: cfg.max_retries,
            backoff: Duration::from_millis(cfg.retry_backoff_ms),
        })
    }

    /// POSTs `body` to `path`. Transport errors, 429 and 5xx are retried with
    /// doubling waits; other statuses fail at once.
    pub fn post(&self, path: &str, body: &Value) -> Result<Value, ProviderError> {
        let url = format!("{}{path}", self.base_url);
        let mut wait = self.backoff;
        let mut last = String::new();
        for attempt in 0..=self.max_retries {
            if attempt > 0 {
                thread::sleep(wait);
                wait = wait.saturating_mul(2);
            }
            let sent = self
                .agent
                .post(&url)
                .header("Authorization", &format!("Bearer {}", self.key.0))
                .send_json(body);
            let mut resp = match sent {
                Ok(r) => r,
                Err(e) => {
                    last = format!("{path}: {e}");
                    continue;
                }
            };
            let status = resp.status().as_u16();
            if status == 429 || status >= 500 {
                last = format!("{path}: status {status}");
                continue;
            }
            if !(200..300).contains(&status) {
                return Err(ProviderError::Transport(format!("{path}: status {status}")));
            }
            return resp
                .body_mut()
                .read_json::<Value>()
                .map_err(|e| ProviderError::Malformed(format!("{path}: {e}")));
        }
        Err(ProviderError::Transport(format!(
            "{last} (gave up after {} attempts)",
            self.max_retries + 1
        )))
    }

    /// One chat completion; returns the first choice's message text.
    pub fn chat(&self, model: &str, system: &str, user: &str) -> Result<String, ProviderError> {
        let body = json!({
            "model": model,
            "temperature": 0,
            "messages": [
                {"role": "system", "content": system},
                {"role": "user", "content": user},
            ],
        });
        let reply = self.post("/chat/completions", &body)?;
        reply
            .pointer("/choices/0/message/content")
            .and_then(Value::as_str)
            .map(str::to_string)
            .ok_or_else(|| ProviderError::Malformed("reply has no choices[0].message.content".into()))
    }
}

#[derive(Debug)]
pub struct HttpEmbedder<'a> {
    pub client: &'a HttpClient,
    pub model: String,
    pub dim: usize,
}

impl EmbeddingProvider for HttpEmbedder<'_> {
    fn dim(&self) -> usize {
        self.dim
    }

    fn embed(&self, text: &str) -> Result<Embedding, ProviderError> {
        let reply = self.client.post("/embeddings", &json!({"model": self.model, "input": text}))?;
        let raw = reply
            .pointer("/data/0/embedding")
            .and_then(Value::as_array)
            .ok_or_else(|| ProviderError::Malformed("reply has no data[0].embedding".into()))?;
        let v: Vec<f64> = raw
            .iter()
            .map(|x| x.as_f64().ok_or_else(|| ProviderError::Malformed("non-numeric embedding entry".into())))
            .collect::<Result<_, _>>()?;
        if v.len() != self.dim {
            return Err(ProviderError::Malformed(format!(
                "embedding has {} dimensions, expected {}",
                v.len(),
                self.dim
            )));
        }
        Ok(Embedding::normalized(v))
    }
}

#[derive(Debug)]
pub struct HttpVerifier<'a> {
    pub client: &'a HttpClient,
    pub model: String,
}

pub fn verifier_prompt(rules: &str) -> String {
    VERIFIER_PROMPT.replace("{rules}", rules.trim_end())
}

pub fn verifier_message(req: &RouteRequest<'_>) -> String {
    let u = req.unit;
    let tags: Vec<&str> = u.tags.iter().map(String::as_str).collect();
    format!(
        "Query:\n{}\n\nUnit {} (layer {}, {} children, relative score {:.3}, depth {}, tags [{}]):\n{}",
        req.query.text,
        u.id,
        u.layer.name(),
        u.children.len(),
        req.score,
        req.depth,
        tags.join(", "),
        u.content
    )
}

impl Verifier for HttpVerifier<'_> {
    /// Strict: anything but a bare action token is a malformed reply.
    fn route(&self, req: &RouteRequest<'_>) -> Result<RoutingAction, ProviderError> {
        let reply = self
            .client
            .chat(&self.model, &verifier_prompt(&req.rules.render()), &verifier_message(req))?;
        reply.parse()
    }
}

#[derive(Debug)]
pub struct HttpWriter<'a> {
    pub client: &'a HttpClient,
    pub model: String,
}

impl Writer for HttpWriter<'_> {
    fn rewrite(&self, query: &Query, unit: &SkillUnit) -> Result<String, ProviderError> {
        let user = format!("Query:\n{}\n\nUnit {}:\n{}", query.text, unit.id, unit.content);
        let out = self.client.chat(&self.model, WRITER_PROMPT, &user)?;
        let out = out.trim();
        if out.is_empty() {
            return Err(ProviderError::Malformed("empty rewrite".into()));
        }
        Ok(out.to_string())
    }
}

#[derive(Debug)]
pub struct HttpAgent<'a> {
    pub client: &'a HttpClient,
    pub model: String,
}

impl AgentProvider for HttpAgent<'_> {
    fn answer(&self, query: &Query, context: &SkillContext) -> Result<String, ProviderError> {
        let user = format!("Skills:\n{}\n\nTask:\n{}", context.render(), query.text);
        Ok(self.client.chat(&self.model, AGENT_PROMPT, &user)?.trim().to_string())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn key_is_redacted_in_debug() {
        let k = ApiKey("sk-very-secret".into());
        assert!(!format!("{k:?}").contains("secret"));
    }

    #[test]
    fn prompt_embeds_rules() {
        let p = verifier_prompt("1. when unit=a -> SKIP\n");
        assert!(p.contains("1. when unit=a -> SKIP\n\nReply"));
        assert!(!p.contains("{rules}"));
    }

    #[test]
    fn missing_base_url_is_a_config_error() {
        let cfg = ProviderConfig::default();
        assert!(matches!(HttpClient::from_config(&cfg), Err(ProviderError::Config(_))));
    }
}
