//! Deterministic offline providers.
//!
//! Besides scripted replies, two answering modes exist for the probing
//! tasks: a uniform-random answerer and a key-reading oracle. Both derive
//! their randomness from `(seed, request hash)`, so answers do not depend
//! on scheduling order.

use super::{Completion, LlmRequest, ProviderError, Usage};
use super::client::Provider;
use crate::hashing::sha256_hex;
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use regex::Regex;
use std::collections::{BTreeSet, HashMap, VecDeque};
use std::sync::atomic::{AtomicU64, Ordering};
use std::sync::{Arc, Mutex, OnceLock};

/// Labels on offer and the correct subset for one rendered prompt.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AnswerSpec {
    pub labels: Vec<String>,
    pub key: BTreeSet<String>,
}

/// Hidden answer keys, indexed by the exact prompt text. Only test
/// harnesses populate this; a real model never sees it.
#[derive(Debug, Clone, Default)]
pub struct AnswerKeyChannel {
    inner: Arc<Mutex<HashMap<String, AnswerSpec>>>,
}

impl AnswerKeyChannel {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn register(&self, prompt: &str, spec: AnswerSpec) {
        self.inner
            .lock()
            .expect("channel lock")
            .insert(sha256_hex(prompt.as_bytes()), spec);
    }

    pub fn lookup(&self, prompt: &str) -> Option<AnswerSpec> {
        self.inner
            .lock()
            .expect("channel lock")
            .get(&sha256_hex(prompt.as_bytes()))
            .cloned()
    }

    pub fn len(&self) -> usize {
        self.inner.lock().expect("channel lock").len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum ScriptStep {
    Reply(String),
    Transient(String),
}

impl ScriptStep {
    pub fn reply(s: impl Into<String>) -> Self {
        ScriptStep::Reply(s.into())
    }
}

type ReplyFn = dyn Fn(&LlmRequest) -> Result<String, ProviderError> + Send + Sync;

pub enum MockMode {
    /// Replies consumed in order; running out is an error.
    Script(Mutex<VecDeque<ScriptStep>>),
    /// First rule whose needle occurs in the last user message wins.
    Rules {
        rules: Vec<(String, String)>,
        fallback: Option<String>,
    },
    /// Echo the last user message.
    Echo,
    /// Pick uniformly among the offered labels.
    UniformRandom { seed: u64 },
    /// Answer the hidden key, replaced by a uniformly chosen wrong answer
    /// with probability `flip_rate`.
    Oracle {
        channel: AnswerKeyChannel,
        flip_rate: f64,
        seed: u64,
    },
    Custom(Box<ReplyFn>),
}

pub struct MockProvider {
    name: String,
    mode: MockMode,
    calls: AtomicU64,
}

impl std::fmt::Debug for MockProvider {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("MockProvider").field("name", &self.name).finish()
    }
}

impl MockProvider {
    pub fn new(name: &str, mode: MockMode) -> Self {
        MockProvider {
            name: name.to_string(),
            mode,
            calls: AtomicU64::new(0),
        }
    }

    pub fn scripted(name: &str, steps: Vec<ScriptStep>) -> Self {
        Self::new(name, MockMode::Script(Mutex::new(steps.into())))
    }

    pub fn rules(name: &str, rules: Vec<(String, String)>, fallback: Option<String>) -> Self {
        Self::new(name, MockMode::Rules { rules, fallback })
    }

    pub fn uniform_random(name: &str, seed: u64) -> Self {
        Self::new(name, MockMode::UniformRandom { seed })
    }

    pub fn oracle(name: &str, channel: AnswerKeyChannel, flip_rate: f64, seed: u64) -> Self {
        Self::new(
            name,
            MockMode::Oracle {
                channel,
                flip_rate,
                seed,
            },
        )
    }

    pub fn from_fn<F>(name: &str, f: F) -> Self
    where
        F: Fn(&LlmRequest) -> Result<String, ProviderError> + Send + Sync + 'static,
    {
        Self::new(name, MockMode::Custom(Box::new(f)))
    }

    pub fn calls(&self) -> u64 {
        self.calls.load(Ordering::SeqCst)
    }

    fn reply(&self, req: &LlmRequest) -> Result<String, ProviderError> {
        let prompt = req.last_user().unwrap_or_default();
        match &self.mode {
            MockMode::Script(steps) => match steps.lock().expect("script lock").pop_front() {
                Some(ScriptStep::Reply(s)) => Ok(s),
                Some(ScriptStep::Transient(m)) => Err(ProviderError::Transient(m)),
                None => Err(ProviderError::ScriptExhausted),
            },
            MockMode::Rules { rules, fallback } => rules
                .iter()
                .find(|(needle, _)| prompt.contains(needle.as_str()))
                .map(|(_, r)| r.clone())
                .or_else(|| fallback.clone())
                .ok_or(ProviderError::ScriptExhausted),
            MockMode::Echo => Ok(prompt.to_string()),
            MockMode::UniformRandom { seed } => {
                let spec = offered(prompt).ok_or_else(|| {
                    ProviderError::Fatal("random mock found no labelled options".into())
                })?;
                let mut rng = request_rng(*seed, req);
                let k = spec.key.len().max(1);
                let mut labels = spec.labels.clone();
                labels.shuffle(&mut rng);
                let mut pick: Vec<String> = labels.into_iter().take(k).collect();
                pick.sort();
                Ok(format_answer(&pick))
            }
            MockMode::Oracle {
                channel,
                flip_rate,
                seed,
            } => {
                let spec = channel.lookup(prompt).ok_or_else(|| {
                    ProviderError::Fatal("oracle mock has no key for this prompt".into())
                })?;
                let mut rng = request_rng(*seed, req);
                let key: Vec<String> = spec.key.iter().cloned().collect();
                if *flip_rate > 0.0 && rng.gen_bool(flip_rate.clamp(0.0, 1.0)) {
                    if let Some(wrong) = wrong_answer(&spec, &mut rng) {
                        return Ok(format_answer(&wrong));
                    }
                }
                Ok(format_answer(&key))
            }
            MockMode::Custom(f) => f(req),
        }
    }
}

impl Provider for MockProvider {
    fn name(&self) -> &str {
        &self.name
    }

    fn complete(&self, req: &LlmRequest) -> Result<Completion, ProviderError> {
        self.calls.fetch_add(1, Ordering::SeqCst);
        let text = self.reply(req)?;
        let prompt_tokens: u64 = req
            .messages
            .iter()
            .map(|m| m.content.split_whitespace().count() as u64)
            .sum();
        Ok(Completion {
            usage: Usage {
                prompt_tokens,
                completion_tokens: text.split_whitespace().count() as u64,
            },
            text,
            latency_ms: 0,
        })
    }
}

fn request_rng(seed: u64, req: &LlmRequest) -> ChaCha8Rng {
    let h = req.request_hash();
    let prefix = u64::from_str_radix(&h[..16], 16).expect("hex hash");
    ChaCha8Rng::seed_from_u64(seed ^ prefix)
}

fn format_answer(labels: &[String]) -> String {
    format!("ANSWER: {}", labels.join(", "))
}

fn wrong_answer(spec: &AnswerSpec, rng: &mut ChaCha8Rng) -> Option<Vec<String>> {
    let k = spec.key.len();
    if spec.labels.len() <= k {
        return None;
    }
    loop {
        let mut labels = spec.labels.clone();
        labels.shuffle(rng);
        let mut pick: Vec<String> = labels.into_iter().take(k).collect();
        pick.sort();
        if pick.iter().cloned().collect::<BTreeSet<_>>() != spec.key {
            return Some(pick);
        }
    }
}

/// Read option labels (`A. ...` lines) and the required answer count
/// (`exactly N`) from a rendered task prompt.
fn offered(prompt: &str) -> Option<AnswerSpec> {
    static OPTION: OnceLock<Regex> = OnceLock::new();
    static COUNT: OnceLock<Regex> = OnceLock::new();
    let option = OPTION.get_or_init(|| Regex::new(r"(?m)^([A-Z])\. ").expect("regex"));
    let count = COUNT.get_or_init(|| Regex::new(r"exactly (\d+) option").expect("regex"));
    let labels: Vec<String> = option
        .captures_iter(prompt)
        .map(|c| c[1].to_string())
        .collect();
    if labels.is_empty() {
        return None;
    }
    let k = count
        .captures(prompt)
        .and_then(|c| c[1].parse::<usize>().ok())
        .unwrap_or(1)
        .clamp(1, labels.len());
    let key = labels.iter().take(k).cloned().collect();
    Some(AnswerSpec { labels, key })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::llm::{ChatMessage, Purpose};

    fn req(text: &str) -> LlmRequest {
        LlmRequest::new("mock", "m", Purpose::Task, vec![ChatMessage::user(text)])
    }

    const PROMPT: &str = "Pick one.\nA. first\nB. second\nAnswer with the label of exactly 1 option.";

    #[test]
    fn random_is_reproducible() {
        let a = MockProvider::uniform_random("r", 7);
        let b = MockProvider::uniform_random("r", 7);
        let prompts: Vec<String> = (0..50).map(|i| format!("{PROMPT} #{i}")).collect();
        let sa: Vec<_> = prompts.iter().map(|p| a.complete(&req(p)).unwrap().text).collect();
        let sb: Vec<_> = prompts.iter().map(|p| b.complete(&req(p)).unwrap().text).collect();
        assert_eq!(sa, sb);
        assert!(sa.iter().any(|s| s == "ANSWER: A"));
        assert!(sa.iter().any(|s| s == "ANSWER: B"));
    }

    #[test]
    fn random_respects_answer_count() {
        let p = "A. a\nB. b\nC. c\nD. d\nAnswer with the labels of exactly 2 options.";
        let m = MockProvider::uniform_random("r", 1);
        let t = m.complete(&req(p)).unwrap().text;
        assert_eq!(t.trim_start_matches("ANSWER: ").split(", ").count(), 2);
    }

    #[test]
    fn oracle_reads_key() {
        let ch = AnswerKeyChannel::new();
        ch.register(
            PROMPT,
            AnswerSpec {
                labels: vec!["A".into(), "B".into()],
                key: ["B".to_string()].into_iter().collect(),
            },
        );
        let m = MockProvider::oracle("o", ch, 0.0, 0);
        assert_eq!(m.complete(&req(PROMPT)).unwrap().text, "ANSWER: B");
        assert!(m.complete(&req("unknown prompt")).is_err());
    }

    #[test]
    fn rules_and_echo() {
        let m = MockProvider::rules("r", vec![("cat".into(), "meow".into())], None);
        assert_eq!(m.complete(&req("a cat")).unwrap().text, "meow");
        assert_eq!(m.complete(&req("a dog")), Err(ProviderError::ScriptExhausted));
        let e = MockProvider::new("e", MockMode::Echo);
        assert_eq!(e.complete(&req("ping")).unwrap().text, "ping");
        assert_eq!(e.calls(), 1);
    }
}
