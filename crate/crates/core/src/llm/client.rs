use super::{
    unix_now, Completion, LlmError, LlmRequest, LlmTranscript, ProviderError, RetryPolicy,
    TranscriptCache,
};
use std::collections::HashMap;
use std::sync::atomic::{AtomicU64, Ordering};
use std::sync::{Arc, Condvar, Mutex};

/// Anything that can answer a chat completion request.
pub trait Provider: Send + Sync {
    fn name(&self) -> &str;
    fn complete(&self, req: &LlmRequest) -> Result<Completion, ProviderError>;
}

/// Stand-in used when every answer must come from recorded transcripts.
#[derive(Debug, Clone)]
pub struct ReplayOnlyProvider {
    name: String,
}

impl ReplayOnlyProvider {
    pub fn new(name: impl Into<String>) -> Self {
        ReplayOnlyProvider { name: name.into() }
    }
}

impl Provider for ReplayOnlyProvider {
    fn name(&self) -> &str {
        &self.name
    }

    fn complete(&self, _req: &LlmRequest) -> Result<Completion, ProviderError> {
        Err(ProviderError::Fatal(
            "replay-only provider cannot answer live requests".into(),
        ))
    }
}

/// Counting semaphore that also records the peak number of holders.
#[derive(Debug)]
struct Gate {
    limit: usize,
    state: Mutex<(usize, usize)>,
    cv: Condvar,
}

impl Gate {
    fn new(limit: usize) -> Self {
        Gate {
            limit: limit.max(1),
            state: Mutex::new((0, 0)),
            cv: Condvar::new(),
        }
    }

    fn acquire(&self) -> GatePermit<'_> {
        let mut st = self.state.lock().expect("gate lock");
        while st.0 >= self.limit {
            st = self.cv.wait(st).expect("gate lock");
        }
        st.0 += 1;
        st.1 = st.1.max(st.0);
        GatePermit { gate: self }
    }

    fn peak(&self) -> usize {
        self.state.lock().expect("gate lock").1
    }
}

struct GatePermit<'a> {
    gate: &'a Gate,
}

impl Drop for GatePermit<'_> {
    fn drop(&mut self) {
        let mut st = self.gate.state.lock().expect("gate lock");
        st.0 -= 1;
        self.gate.cv.notify_one();
    }
}

/// Call statistics, shared by clones of a client.
#[derive(Debug, Default)]
pub struct ClientCounters {
    pub upstream_calls: AtomicU64,
    pub retries: AtomicU64,
    pub cache_hits: AtomicU64,
    pub replay_misses: AtomicU64,
}

impl ClientCounters {
    pub fn upstream(&self) -> u64 {
        self.upstream_calls.load(Ordering::SeqCst)
    }
    pub fn retried(&self) -> u64 {
        self.retries.load(Ordering::SeqCst)
    }
    pub fn hits(&self) -> u64 {
        self.cache_hits.load(Ordering::SeqCst)
    }
    pub fn misses(&self) -> u64 {
        self.replay_misses.load(Ordering::SeqCst)
    }
}

/// Shareable LLM client. Cheap to clone; clones share the gate, cache
/// locks and counters.
#[derive(Clone)]
pub struct LlmClient {
    provider: Arc<dyn Provider>,
    retry: RetryPolicy,
    gate: Arc<Gate>,
    cache: Option<TranscriptCache>,
    replay_only: bool,
    counters: Arc<ClientCounters>,
    key_locks: Arc<Mutex<HashMap<String, Arc<Mutex<()>>>>>,
}

impl std::fmt::Debug for LlmClient {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("LlmClient")
            .field("provider", &self.provider.name())
            .field("replay_only", &self.replay_only)
            .field("limit", &self.gate.limit)
            .finish()
    }
}

impl LlmClient {
    pub fn new(provider: Arc<dyn Provider>) -> Self {
        LlmClient {
            provider,
            retry: RetryPolicy::default(),
            gate: Arc::new(Gate::new(4)),
            cache: None,
            replay_only: false,
            counters: Arc::new(ClientCounters::default()),
            key_locks: Arc::new(Mutex::new(HashMap::new())),
        }
    }

    /// Client that answers only from `cache`.
    pub fn replay(provider_name: &str, cache: TranscriptCache) -> Self {
        Self::new(Arc::new(ReplayOnlyProvider::new(provider_name)))
            .with_cache(cache)
            .replay_only(true)
    }

    pub fn with_retry(mut self, retry: RetryPolicy) -> Self {
        self.retry = retry;
        self
    }

    pub fn with_concurrency(mut self, limit: usize) -> Self {
        self.gate = Arc::new(Gate::new(limit));
        self
    }

    pub fn with_cache(mut self, cache: TranscriptCache) -> Self {
        self.cache = Some(cache);
        self
    }

    pub fn replay_only(mut self, on: bool) -> Self {
        self.replay_only = on;
        self
    }

    pub fn provider_name(&self) -> &str {
        self.provider.name()
    }

    pub fn concurrency(&self) -> usize {
        self.gate.limit
    }

    pub fn counters(&self) -> &ClientCounters {
        &self.counters
    }

    /// Highest number of simultaneous upstream calls observed.
    pub fn peak_in_flight(&self) -> usize {
        self.gate.peak()
    }

    pub fn cache(&self) -> Option<&TranscriptCache> {
        self.cache.as_ref()
    }

    pub fn is_replay_only(&self) -> bool {
        self.replay_only
    }

    /// Call the provider directly, retrying transient failures.
    pub fn complete(&self, req: &LlmRequest) -> Result<Completion, LlmError> {
        req.validate()?;
        if self.replay_only {
            self.counters.replay_misses.fetch_add(1, Ordering::SeqCst);
            return Err(LlmError::ReplayMiss {
                hash: req.request_hash(),
            });
        }
        let mut attempt: u32 = 0;
        loop {
            let result = {
                let _permit = self.gate.acquire();
                self.counters.upstream_calls.fetch_add(1, Ordering::SeqCst);
                self.provider.complete(req)
            };
            match result {
                Ok(c) => return Ok(c),
                Err(ProviderError::Transient(msg)) => {
                    if attempt >= self.retry.max_retries {
                        return Err(LlmError::Unavailable {
                            attempts: attempt + 1,
                            last: msg,
                        });
                    }
                    let delay = self.retry.delay(attempt);
                    log::warn!(
                        "transient failure from {} (attempt {}): {msg}; retrying in {:?}",
                        self.provider.name(),
                        attempt + 1,
                        delay
                    );
                    self.counters.retries.fetch_add(1, Ordering::SeqCst);
                    std::thread::sleep(delay);
                    attempt += 1;
                }
                Err(ProviderError::Auth { var }) => return Err(LlmError::Auth { var }),
                Err(ProviderError::ContextTooLong(m)) => return Err(LlmError::ContextTooLong(m)),
                Err(ProviderError::ScriptExhausted) => return Err(LlmError::ScriptExhausted),
                Err(ProviderError::Fatal(m)) => return Err(LlmError::Provider(m)),
            }
        }
    }

    /// Answer from the transcript cache when possible; otherwise call the
    /// provider and record the transcript. Identical concurrent requests
    /// are serialized so only one reaches the provider.
    pub fn cached_complete(&self, req: &LlmRequest) -> Result<Completion, LlmError> {
        req.validate()?;
        let Some(cache) = &self.cache else {
            return self.complete(req);
        };
        let hash = req.request_hash();
        let lock = {
            let mut locks = self.key_locks.lock().expect("key locks");
            locks.entry(hash.clone()).or_default().clone()
        };
        let _guard = lock.lock().expect("key lock");
        if let Some(t) = cache.get(&hash)? {
            self.counters.cache_hits.fetch_add(1, Ordering::SeqCst);
            return Ok(t.completion());
        }
        if self.replay_only {
            self.counters.replay_misses.fetch_add(1, Ordering::SeqCst);
            return Err(LlmError::ReplayMiss { hash });
        }
        let c = self.complete(req)?;
        cache.put(&LlmTranscript {
            request_hash: hash,
            request: req.clone(),
            response_text: c.text.clone(),
            usage: c.usage.clone(),
            latency_ms: c.latency_ms,
            timestamp: unix_now(),
        })?;
        Ok(c)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::llm::{ChatMessage, MockProvider, Purpose, ScriptStep};

    fn req(text: &str) -> LlmRequest {
        LlmRequest::new("mock", "m", Purpose::Task, vec![ChatMessage::user(text)])
    }

    #[test]
    fn scripted_text() {
        let mock = MockProvider::scripted("mock", vec![ScriptStep::reply("hello")]);
        let client = LlmClient::new(Arc::new(mock));
        assert_eq!(client.complete(&req("x")).unwrap().text, "hello");
        assert_eq!(client.complete(&req("x")), Err(LlmError::ScriptExhausted));
    }

    #[test]
    fn transient_twice_then_success() {
        let mock = MockProvider::scripted(
            "mock",
            vec![
                ScriptStep::Transient("503".into()),
                ScriptStep::Transient("503".into()),
                ScriptStep::reply("ok"),
            ],
        );
        let client = LlmClient::new(Arc::new(mock)).with_retry(RetryPolicy::immediate(3));
        assert_eq!(client.complete(&req("x")).unwrap().text, "ok");
        assert_eq!(client.counters().retried(), 2);
        assert_eq!(client.counters().upstream(), 3);
    }

    #[test]
    fn retry_budget_exhausted() {
        let mock = MockProvider::scripted(
            "mock",
            (0..5).map(|_| ScriptStep::Transient("429".into())).collect(),
        );
        let client = LlmClient::new(Arc::new(mock)).with_retry(RetryPolicy::immediate(2));
        assert!(matches!(
            client.complete(&req("x")),
            Err(LlmError::Unavailable { attempts: 3, .. })
        ));
    }

    #[test]
    fn cache_hit_makes_no_upstream_call() {
        let dir = tempfile::tempdir().unwrap();
        let mock = MockProvider::scripted("mock", vec![ScriptStep::reply("first")]);
        let client = LlmClient::new(Arc::new(mock)).with_cache(TranscriptCache::new(dir.path()));
        assert_eq!(client.cached_complete(&req("q")).unwrap().text, "first");
        assert_eq!(client.cached_complete(&req("q")).unwrap().text, "first");
        assert_eq!(client.counters().upstream(), 1);
        assert_eq!(client.counters().hits(), 1);
    }

    #[test]
    fn replay_only_miss_is_explicit() {
        let dir = tempfile::tempdir().unwrap();
        let client = LlmClient::replay("mock", TranscriptCache::new(dir.path()));
        let r = req("never recorded");
        assert_eq!(
            client.cached_complete(&r),
            Err(LlmError::ReplayMiss {
                hash: r.request_hash()
            })
        );
        assert_eq!(client.counters().upstream(), 0);
        assert_eq!(client.counters().misses(), 1);
    }

    #[test]
    fn concurrent_identical_requests_hit_upstream_once() {
        let dir = tempfile::tempdir().unwrap();
        let mock = MockProvider::from_fn("mock", |_| {
            std::thread::sleep(std::time::Duration::from_millis(5));
            Ok("same".to_string())
        });
        let client = LlmClient::new(Arc::new(mock))
            .with_cache(TranscriptCache::new(dir.path()))
            .with_concurrency(8);
        std::thread::scope(|s| {
            for _ in 0..16 {
                let c = client.clone();
                s.spawn(move || {
                    assert_eq!(c.cached_complete(&req("same")).unwrap().text, "same");
                });
            }
        });
        assert_eq!(client.counters().upstream(), 1);
        let cache = TranscriptCache::new(dir.path());
        assert_eq!(cache.hashes().unwrap().len(), 1);
        assert!(cache.get(&req("same").request_hash()).unwrap().is_some());
    }

    #[test]
    fn in_flight_never_exceeds_limit() {
        let mock = MockProvider::from_fn("mock", |_| {
            std::thread::sleep(std::time::Duration::from_millis(2));
            Ok("x".to_string())
        });
        let client = LlmClient::new(Arc::new(mock)).with_concurrency(3);
        std::thread::scope(|s| {
            for i in 0..24 {
                let c = client.clone();
                s.spawn(move || {
                    c.complete(&req(&format!("q{i}"))).unwrap();
                });
            }
        });
        assert!(client.peak_in_flight() <= 3);
        assert!(client.peak_in_flight() >= 2);
    }
}
