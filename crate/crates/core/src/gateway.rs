//! Chat-completion client with retries and record/replay cassettes.

use std::collections::BTreeMap;
use std::fs::{File, OpenOptions};
use std::io::{BufRead, BufReader, Write};
use std::path::{Path, PathBuf};
use std::sync::{Mutex, RwLock};
use std::time::{Duration, Instant};

use serde::{Deserialize, Serialize};
use serde_json::{json, Value};
use thiserror::Error;

use crate::prompt::Prompt;
use crate::sha256_hex;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ModelConfig {
    pub endpoint_url: String,
    pub model_name: String,
    pub temperature: f64,
    pub max_output_tokens: u32,
    /// Name of the environment variable holding the bearer token.
    pub auth_token_env_var: String,
    pub max_retries: u32,
    /// First backoff delay; doubles on every retry.
    pub backoff_base_ms: u64,
    pub timeout_secs: u64,
}

impl Default for ModelConfig {
    fn default() -> Self {
        Self {
            endpoint_url: "https://api.openai.com/v1/chat/completions".into(),
            model_name: "gpt-4o".into(),
            temperature: 0.0,
            max_output_tokens: 2048,
            auth_token_env_var: "OPENAI_API_KEY".into(),
            max_retries: 5,
            backoff_base_ms: 1000,
            timeout_secs: 120,
        }
    }
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum GatewayError {
    #[error("rate limited after {attempts} attempts")]
    RateLimitExhausted { attempts: u32 },
    #[error("endpoint returned HTTP {0}")]
    EndpointError(u16),
    #[error("no cassette entry for request {0}")]
    CassetteMiss(String),
    #[error("transport error: {0}")]
    Transport(String),
    #[error("malformed response body: {0}")]
    MalformedResponse(String),
    #[error("cassette {path}: {reason}")]
    Cassette { path: String, reason: String },
    #[error("invalid configuration: {0}")]
    Config(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Mode {
    Network,
    Record,
    Replay,
}

impl std::str::FromStr for Mode {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "network" => Ok(Self::Network),
            "record" => Ok(Self::Record),
            "replay" => Ok(Self::Replay),
            _ => Err(format!("unknown mode `{s}` (network, record, replay)")),
        }
    }
}

/// Hash of the normalized request. Object keys are serialized in sorted order.
pub fn request_digest(model: &str, system: &str, user: &str, temperature: f64) -> String {
    let canonical = json!({
        "model": model,
        "system": system,
        "temperature": temperature,
        "user": user,
    });
    sha256_hex(canonical.to_string().as_bytes())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RequestSummary {
    pub model: String,
    pub temperature: f64,
    pub instance_id: String,
    pub settings: String,
    pub system_chars: usize,
    pub user_chars: usize,
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ResponseMeta {
    pub latency_ms: u64,
    pub prompt_tokens: Option<u64>,
    pub completion_tokens: Option<u64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CassetteEntry {
    pub digest: String,
    pub request_summary: RequestSummary,
    pub response: String,
    pub meta: ResponseMeta,
}

/// Line-delimited store of recorded responses keyed by request digest.
/// Later lines win over earlier ones with the same digest.
#[derive(Debug, Default)]
pub struct Cassette {
    path: Option<PathBuf>,
    entries: RwLock<BTreeMap<String, CassetteEntry>>,
    writer: Mutex<Option<File>>,
}

impl Cassette {
    pub fn in_memory(entries: impl IntoIterator<Item = CassetteEntry>) -> Self {
        Self {
            path: None,
            entries: RwLock::new(entries.into_iter().map(|e| (e.digest.clone(), e)).collect()),
            writer: Mutex::new(None),
        }
    }

    /// Reads an existing cassette file.
    pub fn load(path: &Path) -> Result<Self, GatewayError> {
        let err = |reason: String| GatewayError::Cassette { path: path.display().to_string(), reason };
        let file = File::open(path).map_err(|e| err(e.to_string()))?;
        let mut entries = BTreeMap::new();
        for (i, line) in BufReader::new(file).lines().enumerate() {
            let line = line.map_err(|e| err(e.to_string()))?;
            if line.trim().is_empty() {
                continue;
            }
            let e: CassetteEntry = serde_json::from_str(&line).map_err(|e| err(format!("line {}: {e}", i + 1)))?;
            entries.insert(e.digest.clone(), e);
        }
        Ok(Self { path: Some(path.to_path_buf()), entries: RwLock::new(entries), writer: Mutex::new(None) })
    }

    /// Opens a cassette for appending, loading existing entries if the file exists.
    pub fn open_for_record(path: &Path) -> Result<Self, GatewayError> {
        let c =
            if path.exists() { Self::load(path)? } else { Self { path: Some(path.to_path_buf()), ..Self::default() } };
        let f = OpenOptions::new()
            .create(true)
            .append(true)
            .open(path)
            .map_err(|e| GatewayError::Cassette { path: path.display().to_string(), reason: e.to_string() })?;
        *c.writer.lock().unwrap() = Some(f);
        Ok(c)
    }

    pub fn path(&self) -> Option<&Path> {
        self.path.as_deref()
    }

    pub fn get(&self, digest: &str) -> Option<CassetteEntry> {
        self.entries.read().unwrap().get(digest).cloned()
    }

    pub fn len(&self) -> usize {
        self.entries.read().unwrap().len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn entries(&self) -> Vec<CassetteEntry> {
        self.entries.read().unwrap().values().cloned().collect()
    }

    /// Adds an entry, appending it to the backing file when recording.
    pub fn append(&self, entry: CassetteEntry) -> Result<(), GatewayError> {
        let mut w = self.writer.lock().unwrap();
        if let Some(f) = w.as_mut() {
            let line = serde_json::to_string(&entry).expect("entry serializes");
            writeln!(f, "{line}").and_then(|_| f.flush()).map_err(|e| GatewayError::Cassette {
                path: self.path.as_ref().map(|p| p.display().to_string()).unwrap_or_default(),
                reason: e.to_string(),
            })?;
        }
        self.entries.write().unwrap().insert(entry.digest.clone(), entry);
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TransportResponse {
    pub status: u16,
    pub body: String,
}

/// Sends one JSON POST. Implementations must be usable from many threads.
pub trait Transport: Send + Sync {
    fn post(&self, url: &str, bearer: Option<&str>, body: &Value) -> Result<TransportResponse, String>;
}

pub struct HttpTransport {
    client: reqwest::blocking::Client,
}

impl HttpTransport {
    pub fn new(timeout: Duration) -> Result<Self, GatewayError> {
        let client = reqwest::blocking::Client::builder()
            .timeout(timeout)
            .build()
            .map_err(|e| GatewayError::Transport(e.to_string()))?;
        Ok(Self { client })
    }
}

impl Transport for HttpTransport {
    fn post(&self, url: &str, bearer: Option<&str>, body: &Value) -> Result<TransportResponse, String> {
        let mut req = self.client.post(url).json(body);
        if let Some(t) = bearer {
            req = req.bearer_auth(t);
        }
        let resp = req.send().map_err(|e| e.to_string())?;
        let status = resp.status().as_u16();
        let body = resp.text().map_err(|e| e.to_string())?;
        Ok(TransportResponse { status, body })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Completion {
    pub text: String,
    pub digest: String,
    pub meta: ResponseMeta,
}

pub struct Gateway {
    cfg: ModelConfig,
    mode: Mode,
    cassette: Option<Cassette>,
    transport: Option<Box<dyn Transport>>,
}

impl Gateway {
    /// Replay-only gateway; it holds no transport at all.
    pub fn replay(cfg: ModelConfig, cassette: Cassette) -> Self {
        Self { cfg, mode: Mode::Replay, cassette: Some(cassette), transport: None }
    }

    pub fn network(cfg: ModelConfig, transport: Box<dyn Transport>) -> Self {
        Self { cfg, mode: Mode::Network, cassette: None, transport: Some(transport) }
    }

    pub fn record(cfg: ModelConfig, cassette: Cassette, transport: Box<dyn Transport>) -> Self {
        Self { cfg, mode: Mode::Record, cassette: Some(cassette), transport: Some(transport) }
    }

    /// Builds a gateway for `mode` using the HTTP transport where needed.
    pub fn from_mode(cfg: ModelConfig, mode: Mode, cassette: Option<&Path>) -> Result<Self, GatewayError> {
        if cfg.temperature < 0.0 {
            return Err(GatewayError::Config("temperature must be >= 0".into()));
        }
        let need_cassette = || GatewayError::Config(format!("{mode:?} mode needs a cassette path"));
        let http =
            || HttpTransport::new(Duration::from_secs(cfg.timeout_secs)).map(|t| Box::new(t) as Box<dyn Transport>);
        Ok(match mode {
            Mode::Replay => {
                let c = Cassette::load(cassette.ok_or_else(need_cassette)?)?;
                Self::replay(cfg, c)
            }
            Mode::Record => {
                let c = Cassette::open_for_record(cassette.ok_or_else(need_cassette)?)?;
                let t = http()?;
                Self::record(cfg, c, t)
            }
            Mode::Network => {
                let t = http()?;
                Self::network(cfg, t)
            }
        })
    }

    pub fn config(&self) -> &ModelConfig {
        &self.cfg
    }

    pub fn mode(&self) -> Mode {
        self.mode
    }

    pub fn cassette(&self) -> Option<&Cassette> {
        self.cassette.as_ref()
    }

    pub fn digest(&self, prompt: &Prompt) -> String {
        request_digest(&self.cfg.model_name, &prompt.system_text, &prompt.user_text, self.cfg.temperature)
    }

    pub fn complete(&self, prompt: &Prompt) -> Result<Completion, GatewayError> {
        let digest = self.digest(prompt);
        if self.mode == Mode::Replay {
            let c = self.cassette.as_ref().expect("replay gateway has a cassette");
            return c
                .get(&digest)
                .map(|e| Completion { text: e.response, digest: digest.clone(), meta: e.meta })
                .ok_or(GatewayError::CassetteMiss(digest));
        }
        let start = Instant::now();
        let body = self.send(prompt)?;
        let (text, prompt_tokens, completion_tokens) = parse_chat_body(&body)?;
        let meta = ResponseMeta { latency_ms: start.elapsed().as_millis() as u64, prompt_tokens, completion_tokens };
        if let (Mode::Record, Some(c)) = (self.mode, &self.cassette) {
            c.append(CassetteEntry {
                digest: digest.clone(),
                request_summary: RequestSummary {
                    model: self.cfg.model_name.clone(),
                    temperature: self.cfg.temperature,
                    instance_id: prompt.instance_id.clone(),
                    settings: prompt.settings.to_string(),
                    system_chars: prompt.system_text.chars().count(),
                    user_chars: prompt.user_text.chars().count(),
                },
                response: text.clone(),
                meta: meta.clone(),
            })?;
        }
        Ok(Completion { text, digest, meta })
    }

    fn send(&self, prompt: &Prompt) -> Result<String, GatewayError> {
        let transport = self.transport.as_ref().expect("network gateway has a transport");
        let body = json!({
            "model": self.cfg.model_name,
            "messages": [
                {"role": "system", "content": prompt.system_text},
                {"role": "user", "content": prompt.user_text},
            ],
            "temperature": self.cfg.temperature,
            "max_tokens": self.cfg.max_output_tokens,
        });
        let token = std::env::var(&self.cfg.auth_token_env_var).ok();
        let mut attempt = 0u32;
        loop {
            let outcome = transport.post(&self.cfg.endpoint_url, token.as_deref(), &body);
            let retryable = match &outcome {
                Ok(r) if (200..300).contains(&r.status) => return Ok(outcome.unwrap().body),
                Ok(r) => r.status == 429 || r.status >= 500,
                Err(_) => true,
            };
            if !retryable || attempt >= self.cfg.max_retries {
                return Err(match outcome {
                    Ok(r) if r.status == 429 => GatewayError::RateLimitExhausted { attempts: attempt + 1 },
                    Ok(r) => GatewayError::EndpointError(r.status),
                    Err(e) => GatewayError::Transport(e),
                });
            }
            let delay = self.cfg.backoff_base_ms.saturating_mul(1u64 << attempt.min(16));
            log::debug!("retrying {} after {delay} ms", prompt.instance_id);
            std::thread::sleep(Duration::from_millis(delay));
            attempt += 1;
        }
    }

    /// Completes every prompt with at most `parallelism` requests in flight.
    /// Results keep input order; failures are reported per prompt.
    pub fn complete_batch(
        &self,
        prompts: &[Prompt],
        parallelism: usize,
    ) -> Result<Vec<Result<Completion, GatewayError>>, GatewayError> {
        if parallelism == 0 {
            return Err(GatewayError::Config("parallelism must be at least 1".into()));
        }
        #[cfg(feature = "parallel")]
        {
            use rayon::prelude::*;
            let pool = rayon::ThreadPoolBuilder::new()
                .num_threads(parallelism)
                .build()
                .map_err(|e| GatewayError::Config(e.to_string()))?;
            Ok(pool.install(|| prompts.par_iter().map(|p| self.complete(p)).collect()))
        }
        #[cfg(not(feature = "parallel"))]
        {
            Ok(prompts.iter().map(|p| self.complete(p)).collect())
        }
    }
}

fn parse_chat_body(body: &str) -> Result<(String, Option<u64>, Option<u64>), GatewayError> {
    let v: Value = serde_json::from_str(body).map_err(|e| GatewayError::MalformedResponse(e.to_string()))?;
    let text = v
        .pointer("/choices/0/message/content")
        .and_then(Value::as_str)
        .ok_or_else(|| GatewayError::MalformedResponse("missing choices[0].message.content".into()))?;
    let usage = |k: &str| v.pointer(&format!("/usage/{k}")).and_then(Value::as_u64);
    Ok((text.to_string(), usage("prompt_tokens"), usage("completion_tokens")))
}
