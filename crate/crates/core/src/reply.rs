//! Structured-reply contract for LLM answers.
//!
//! Extraction, generation, back-check and forging prompts ask for a fenced
//! JSON block. The first ```json fence wins; a bare ``` fence is accepted
//! next; a reply that is nothing but a JSON value is accepted last.

use serde_json::Value;

/// Locate the JSON payload inside a reply.
pub fn json_payload(reply: &str) -> Option<&str> {
    if let Some(body) = fenced(reply, "```json") {
        return Some(body);
    }
    if let Some(body) = fenced(reply, "```") {
        return Some(body);
    }
    let t = reply.trim();
    if t.starts_with('[') || t.starts_with('{') {
        return Some(t);
    }
    None
}

fn fenced<'a>(reply: &'a str, opener: &str) -> Option<&'a str> {
    let start = reply.find(opener)?;
    let after = &reply[start + opener.len()..];
    // skip the rest of the opening line (language tag or whitespace)
    let body_start = after.find('\n').map(|i| i + 1).unwrap_or(0);
    let body = &after[body_start..];
    let end = body.find("```")?;
    Some(body[..end].trim())
}

/// Parse the payload as JSON.
pub fn parse_json(reply: &str) -> Result<Value, String> {
    let payload = json_payload(reply).ok_or_else(|| "no fenced JSON block found".to_string())?;
    serde_json::from_str(payload).map_err(|e| format!("invalid JSON: {e}"))
}

/// Parse the payload as a JSON list. A single object is promoted to a
/// one-element list.
pub fn parse_json_list(reply: &str) -> Result<Vec<Value>, String> {
    match parse_json(reply)? {
        Value::Array(items) => Ok(items),
        obj @ Value::Object(_) => Ok(vec![obj]),
        other => Err(format!("expected a JSON list, found {}", kind(&other))),
    }
}

fn kind(v: &Value) -> &'static str {
    match v {
        Value::Null => "null",
        Value::Bool(_) => "boolean",
        Value::Number(_) => "number",
        Value::String(_) => "string",
        Value::Array(_) => "list",
        Value::Object(_) => "object",
    }
}

/// Non-empty trimmed string field of a JSON object.
pub fn str_field(v: &Value, field: &str) -> Option<String> {
    v.get(field)
        .and_then(Value::as_str)
        .map(str::trim)
        .filter(|s| !s.is_empty())
        .map(str::to_string)
}


/// Asking for a structured reply, with repair turns on parse failure.
pub mod ask {
    use crate::llm::{ChatMessage, LlmClient, LlmError, LlmRequest, Purpose};
    use crate::template::{vars, PromptSet};

    /// Total attempts (first ask plus repairs) before giving up on a unit.
    pub const DEFAULT_ATTEMPTS: u32 = 3;

    #[derive(Debug, Clone, PartialEq, thiserror::Error)]
    pub enum AskError {
        #[error(transparent)]
        Llm(#[from] LlmError),
        #[error("reply unparseable after {attempts} attempts: {problem}")]
        Unparseable { attempts: u32, problem: String },
    }

    pub struct Asker<'a> {
        pub client: &'a LlmClient,
        pub model: &'a str,
        pub purpose: Purpose,
        pub prompts: &'a PromptSet,
        pub attempts: u32,
    }

    impl Asker<'_> {
        /// Send `prompt`; while `parse` rejects the reply, append the reply
        /// and a repair message to the conversation and ask again.
        pub fn ask<T>(
            &self,
            prompt: String,
            parse: impl Fn(&str) -> Result<T, String>,
        ) -> Result<T, AskError> {
            let mut messages = vec![ChatMessage::user(prompt)];
            let attempts = self.attempts.max(1);
            let mut problem = String::new();
            for attempt in 1..=attempts {
                let req = LlmRequest::new(
                    self.client.provider_name(),
                    self.model,
                    self.purpose,
                    messages.clone(),
                );
                let reply = self.client.cached_complete(&req)?.text;
                match parse(&reply) {
                    Ok(v) => return Ok(v),
                    Err(p) => {
                        log::warn!("{:?} reply rejected (attempt {attempt}): {p}", self.purpose);
                        problem = p;
                        if attempt < attempts {
                            let repair = self
                                .prompts
                                .render("repair", &vars([("problem", problem.clone())]))
                                .map_err(|e| AskError::Unparseable {
                                    attempts: attempt,
                                    problem: e.to_string(),
                                })?;
                            messages.push(ChatMessage::assistant(reply));
                            messages.push(ChatMessage::user(repair));
                        }
                    }
                }
            }
            Err(AskError::Unparseable { attempts, problem })
        }
    }
}
