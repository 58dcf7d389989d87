//! OpenAI-compatible `/chat/completions` provider and its config file.

use super::client::Provider;
use super::{Completion, LlmRequest, ProviderError, Usage};
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};
use std::collections::BTreeMap;
use std::path::Path;
use std::time::{Duration, Instant};

/// One `[[provider]]` table of `providers.toml`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProviderEntry {
    pub name: String,
    pub base_url: String,
    /// Environment variable holding the API key. `None` for local servers.
    #[serde(default)]
    pub api_key_env: Option<String>,
    /// Model alias → upstream model id.
    #[serde(default)]
    pub models: BTreeMap<String, String>,
    #[serde(default = "default_timeout")]
    pub timeout_secs: u64,
}

fn default_timeout() -> u64 {
    120
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct ProvidersConfig {
    #[serde(default, rename = "provider")]
    pub providers: Vec<ProviderEntry>,
}

impl ProvidersConfig {
    pub fn from_toml(text: &str) -> Result<Self, String> {
        toml::from_str(text).map_err(|e| e.to_string())
    }

    pub fn load(path: &Path) -> Result<Self, String> {
        let text = std::fs::read_to_string(path).map_err(|e| format!("{}: {e}", path.display()))?;
        Self::from_toml(&text)
    }

    pub fn get(&self, name: &str) -> Option<&ProviderEntry> {
        self.providers.iter().find(|p| p.name == name)
    }
}

#[derive(Debug, Clone)]
pub struct OpenAiCompatProvider {
    entry: ProviderEntry,
}

impl OpenAiCompatProvider {
    pub fn new(entry: ProviderEntry) -> Self {
        OpenAiCompatProvider { entry }
    }

    fn api_key(&self) -> Result<Option<String>, ProviderError> {
        match &self.entry.api_key_env {
            None => Ok(None),
            Some(var) => match std::env::var(var) {
                Ok(v) if !v.is_empty() => Ok(Some(v)),
                _ => Err(ProviderError::Auth { var: var.clone() }),
            },
        }
    }

    fn upstream_model<'a>(&'a self, alias: &'a str) -> &'a str {
        self.entry
            .models
            .get(alias)
            .map(String::as_str)
            .unwrap_or(alias)
    }

    pub fn request_body(&self, req: &LlmRequest) -> Value {
        let mut body = json!({
            "model": self.upstream_model(&req.model_id),
            "messages": req.messages,
            "temperature": req.params.temperature,
            "max_tokens": req.params.max_tokens,
        });
        if let Some(seed) = req.params.seed {
            body["seed"] = json!(seed);
        }
        body
    }
}

impl Provider for OpenAiCompatProvider {
    fn name(&self) -> &str {
        &self.entry.name
    }

    fn complete(&self, req: &LlmRequest) -> Result<Completion, ProviderError> {
        let key = self.api_key()?;
        let url = format!("{}/chat/completions", self.entry.base_url.trim_end_matches('/'));
        let mut call = ureq::post(&url).timeout(Duration::from_secs(self.entry.timeout_secs));
        if let Some(k) = &key {
            call = call.set("Authorization", &format!("Bearer {k}"));
        }
        let started = Instant::now();
        let resp = call.send_json(self.request_body(req));
        let latency_ms = started.elapsed().as_millis() as u64;
        match resp {
            Ok(r) => {
                let v: Value = r
                    .into_json()
                    .map_err(|e| ProviderError::Transient(format!("unreadable body: {e}")))?;
                parse_chat_response(&v, latency_ms)
            }
            Err(ureq::Error::Status(code, r)) => {
                let body = r.into_string().unwrap_or_default();
                Err(classify_status(
                    code,
                    &body,
                    self.entry.api_key_env.as_deref().unwrap_or("<none>"),
                ))
            }
            Err(ureq::Error::Transport(t)) => Err(ProviderError::Transient(t.to_string())),
        }
    }
}

pub(crate) fn classify_status(code: u16, body: &str, key_var: &str) -> ProviderError {
    let lower = body.to_lowercase();
    match code {
        401 | 403 => ProviderError::Auth {
            var: key_var.to_string(),
        },
        408 | 409 | 429 | 500..=599 => ProviderError::Transient(format!("HTTP {code}")),
        400 | 413 if lower.contains("context") && (lower.contains("length") || lower.contains("too long")) => {
            ProviderError::ContextTooLong(body.chars().take(200).collect())
        }
        _ => ProviderError::Fatal(format!("HTTP {code}: {}", body.chars().take(200).collect::<String>())),
    }
}

pub(crate) fn parse_chat_response(v: &Value, latency_ms: u64) -> Result<Completion, ProviderError> {
    let text = v
        .pointer("/choices/0/message/content")
        .and_then(Value::as_str)
        .ok_or_else(|| ProviderError::Fatal("response has no choices[0].message.content".into()))?;
    let usage = Usage {
        prompt_tokens: v.pointer("/usage/prompt_tokens").and_then(Value::as_u64).unwrap_or(0),
        completion_tokens: v
            .pointer("/usage/completion_tokens")
            .and_then(Value::as_u64)
            .unwrap_or(0),
    };
    Ok(Completion {
        text: text.to_string(),
        usage,
        latency_ms,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::llm::{ChatMessage, Purpose};

    const TOML: &str = r#"
[[provider]]
name = "openai"
base_url = "https://api.openai.com/v1"
api_key_env = "GRAMPROBE_TEST_SURELY_UNSET_KEY"
[provider.models]
gpt5 = "gpt-5"

[[provider]]
name = "local"
base_url = "http://127.0.0.1:8000/v1"
"#;

    #[test]
    fn parses_config() {
        let cfg = ProvidersConfig::from_toml(TOML).unwrap();
        assert_eq!(cfg.providers.len(), 2);
        let p = cfg.get("openai").unwrap();
        assert_eq!(p.models["gpt5"], "gpt-5");
        assert_eq!(p.timeout_secs, 120);
        assert!(cfg.get("local").unwrap().api_key_env.is_none());
    }

    #[test]
    fn shipped_example_parses() {
        let cfg = ProvidersConfig::from_toml(include_str!("../../../../config/providers.example.toml")).unwrap();
        assert_eq!(cfg.get("openai").unwrap().api_key_env.as_deref(), Some("OPENAI_API_KEY"));
        assert_eq!(cfg.get("local").unwrap().models.len(), 1);
    }

    #[test]
    fn missing_credential_names_the_variable() {
        let cfg = ProvidersConfig::from_toml(TOML).unwrap();
        let p = OpenAiCompatProvider::new(cfg.get("openai").unwrap().clone());
        let req = LlmRequest::new("openai", "gpt5", Purpose::Task, vec![ChatMessage::user("x")]);
        assert_eq!(
            p.complete(&req),
            Err(ProviderError::Auth {
                var: "GRAMPROBE_TEST_SURELY_UNSET_KEY".into()
            })
        );
        assert_eq!(p.request_body(&req)["model"], "gpt-5");
    }

    #[test]
    fn status_classification() {
        assert!(matches!(classify_status(429, "", "K"), ProviderError::Transient(_)));
        assert!(matches!(classify_status(503, "", "K"), ProviderError::Transient(_)));
        assert!(matches!(classify_status(401, "", "K"), ProviderError::Auth { .. }));
        assert!(matches!(
            classify_status(400, "maximum context length exceeded", "K"),
            ProviderError::ContextTooLong(_)
        ));
        assert!(matches!(classify_status(404, "nope", "K"), ProviderError::Fatal(_)));
    }

    #[test]
    fn response_parsing() {
        let v = json!({"choices":[{"message":{"content":"hi"}}],"usage":{"prompt_tokens":3,"completion_tokens":1}});
        let c = parse_chat_response(&v, 12).unwrap();
        assert_eq!(c.text, "hi");
        assert_eq!(c.usage.prompt_tokens, 3);
        assert!(parse_chat_response(&json!({}), 0).is_err());
    }
}
