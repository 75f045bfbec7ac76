use std::collections::HashMap;
use std::fs::{File, OpenOptions};
use std::io::{BufRead, BufReader, Write};
use std::path::{Path, PathBuf};
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Mutex;
use std::time::Duration;

use log::warn;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::corpus::Document;
use crate::error::{Error, Result};

/// A machine-translation backend.
pub trait MtClient: Send + Sync {
    fn translate(&self, text: &str, from: &str, to: &str) -> Result<String>;
}

/// Returns every input unchanged.
#[derive(Debug, Clone, Copy, Default)]
pub struct IdentityClient;

impl MtClient for IdentityClient {
    fn translate(&self, text: &str, _from: &str, _to: &str) -> Result<String> {
        Ok(text.to_string())
    }
}

/// Cache key for a translation request: hex SHA-256 of the JSON array
/// `[text, from, to]`.
pub fn cache_key(text: &str, from: &str, to: &str) -> String {
    let encoded = serde_json::to_vec(&(text, from, to)).expect("strings serialize");
    hex::encode(Sha256::digest(&encoded))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
struct CacheRecord {
    k: String,
    from: String,
    to: String,
    text: String,
    out: String,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct CacheStats {
    pub hits: usize,
    pub misses: usize,
}

impl CacheStats {
    pub fn hit_rate(&self) -> f64 {
        let total = self.hits + self.misses;
        if total == 0 {
            0.0
        } else {
            self.hits as f64 / total as f64
        }
    }
}

struct CacheState {
    entries: HashMap<String, String>,
    file: Option<File>,
}

/// Translation cache in front of an optional backend.
///
/// Hits never reach the backend. Misses go to the backend and are appended to the
/// JSON Lines cache file, if any, under a lock. Without a backend a miss is an error,
/// which makes a fully populated cache a hermetic replay.
pub struct CachedTranslator {
    backend: Option<Box<dyn MtClient>>,
    state: Mutex<CacheState>,
    path: Option<PathBuf>,
    hits: AtomicUsize,
    misses: AtomicUsize,
}

impl CachedTranslator {
    pub fn in_memory(backend: Option<Box<dyn MtClient>>) -> Self {
        CachedTranslator {
            backend,
            state: Mutex::new(CacheState {
                entries: HashMap::new(),
                file: None,
            }),
            path: None,
            hits: AtomicUsize::new(0),
            misses: AtomicUsize::new(0),
        }
    }

    /// Loads (or creates) the cache file at `path`.
    pub fn open(path: impl AsRef<Path>, backend: Option<Box<dyn MtClient>>) -> Result<Self> {
        let path = path.as_ref();
        let mut entries = HashMap::new();
        if path.exists() {
            let reader = BufReader::new(File::open(path).map_err(|e| Error::io(path, e))?);
            for (i, line) in reader.lines().enumerate() {
                let line = line.map_err(|e| Error::io(path, e))?;
                if line.trim().is_empty() {
                    continue;
                }
                let rec: CacheRecord = serde_json::from_str(&line).map_err(|e| Error::MalformedLine {
                    path: path.to_path_buf(),
                    line: i + 1,
                    message: e.to_string(),
                })?;
                if rec.k != cache_key(&rec.text, &rec.from, &rec.to) {
                    return Err(Error::MalformedLine {
                        path: path.to_path_buf(),
                        line: i + 1,
                        message: "cache key does not match text/from/to".into(),
                    });
                }
                entries.insert(rec.k, rec.out);
            }
        }
        let file = OpenOptions::new()
            .create(true)
            .append(true)
            .open(path)
            .map_err(|e| Error::io(path, e))?;
        Ok(CachedTranslator {
            backend,
            state: Mutex::new(CacheState {
                entries,
                file: Some(file),
            }),
            path: Some(path.to_path_buf()),
            hits: AtomicUsize::new(0),
            misses: AtomicUsize::new(0),
        })
    }

    pub fn len(&self) -> usize {
        self.state.lock().expect("cache lock").entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn stats(&self) -> CacheStats {
        CacheStats {
            hits: self.hits.load(Ordering::Relaxed),
            misses: self.misses.load(Ordering::Relaxed),
        }
    }
}

impl MtClient for CachedTranslator {
    fn translate(&self, text: &str, from: &str, to: &str) -> Result<String> {
        let k = cache_key(text, from, to);
        if let Some(out) = self.state.lock().expect("cache lock").entries.get(&k) {
            self.hits.fetch_add(1, Ordering::Relaxed);
            return Ok(out.clone());
        }
        self.misses.fetch_add(1, Ordering::Relaxed);
        let backend = self.backend.as_ref().ok_or_else(|| {
            Error::Translation(format!(
                "cache miss for {from}->{to} with no MT backend configured"
            ))
        })?;
        let out = backend.translate(text, from, to)?;
        let mut state = self.state.lock().expect("cache lock");
        if let Some(file) = state.file.as_mut() {
            let rec = CacheRecord {
                k: k.clone(),
                from: from.into(),
                to: to.into(),
                text: text.into(),
                out: out.clone(),
            };
            let line = serde_json::to_string(&rec).expect("cache record serializes");
            let path = self.path.as_deref().unwrap_or(Path::new("<cache>"));
            writeln!(file, "{line}").map_err(|e| Error::io(path, e))?;
        }
        state.entries.insert(k, out.clone());
        Ok(out)
    }
}

/// Client for a LibreTranslate-style HTTP endpoint.
///
/// Sends `POST {"q", "source", "target"[, "api_key"]}` and reads `{"translatedText"}`.
pub struct HttpClient {
    endpoint: String,
    api_key: Option<String>,
    retries: usize,
    backoff: Duration,
    agent: ureq::Agent,
}

#[derive(Serialize)]
struct HttpRequest<'a> {
    q: &'a str,
    source: &'a str,
    target: &'a str,
    #[serde(skip_serializing_if = "Option::is_none")]
    api_key: Option<&'a str>,
}

#[derive(Deserialize)]
struct HttpResponse {
    #[serde(rename = "translatedText")]
    translated_text: String,
}

impl HttpClient {
    pub fn new(endpoint: impl Into<String>, api_key: Option<String>) -> Self {
        let agent = ureq::Agent::config_builder()
            .timeout_global(Some(Duration::from_secs(60)))
            .build()
            .into();
        HttpClient {
            endpoint: endpoint.into(),
            api_key,
            retries: 3,
            backoff: Duration::from_millis(500),
            agent,
        }
    }

    /// Sets the number of retries after the first failed attempt and the initial
    /// backoff, which doubles after every failure.
    pub fn with_retries(mut self, retries: usize, backoff: Duration) -> Self {
        self.retries = retries;
        self.backoff = backoff;
        self
    }

    fn attempt(&self, text: &str, from: &str, to: &str) -> std::result::Result<String, String> {
        let body = HttpRequest {
            q: text,
            source: from,
            target: to,
            api_key: self.api_key.as_deref(),
        };
        let response = self
            .agent
            .post(&self.endpoint)
            .send_json(&body)
            .map_err(|e| e.to_string())?;
        let parsed: HttpResponse = response.into_body().read_json().map_err(|e| e.to_string())?;
        Ok(parsed.translated_text)
    }
}

impl MtClient for HttpClient {
    fn translate(&self, text: &str, from: &str, to: &str) -> Result<String> {
        let mut delay = self.backoff;
        let mut last = String::new();
        for attempt in 0..=self.retries {
            match self.attempt(text, from, to) {
                Ok(out) => return Ok(out),
                Err(e) => {
                    warn!("translation {from}->{to} attempt {} failed: {e}", attempt + 1);
                    last = e;
                }
            }
            if attempt < self.retries {
                std::thread::sleep(delay);
                delay *= 2;
            }
        }
        Err(Error::Translation(format!(
            "{} failed after {} attempts: {last}",
            self.endpoint,
            self.retries + 1
        )))
    }
}

/// Passes every sentence through the language chain pairwise, e.g. en→de, de→es, es→en.
pub fn back_translate(doc: &Document, client: &dyn MtClient, chain: &[String]) -> Result<Document> {
    if chain.len() < 2 {
        return Err(Error::InvalidConfig(
            "back-translation chain needs at least two languages".into(),
        ));
    }
    let sentences = doc
        .sentences
        .iter()
        .map(|sentence| {
            chain.windows(2).try_fold(sentence.clone(), |text, pair| {
                client.translate(&text, &pair[0], &pair[1])
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(Document {
        sentences,
        ..doc.clone()
    })
}
