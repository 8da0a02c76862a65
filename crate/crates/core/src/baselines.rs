//! Clients for the commercial gender-prediction services used as
//! baselines. Every answer is cached in an append-only JSON-lines file
//! keyed by normalized name; cached answers never consume quota, and live
//! calls are capped by a per-UTC-day quota shared across threads.
//!
//! Tests run against [`mock::MockServer`], a local HTTP server speaking
//! each service's documented response shape; no network is touched in CI.

use std::collections::BTreeMap;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::sync::{Condvar, Mutex};
use std::time::Duration;

use serde::{Deserialize, Serialize};

use crate::corpus::{is_valid_name, normalize_name, ClassId, Task};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Service {
    GenderApi,
    Onograph,
    Genderize,
}

impl Service {
    pub fn name(self) -> &'static str {
        match self {
            Service::GenderApi => "gender-api",
            Service::Onograph => "onograph",
            Service::Genderize => "genderize",
        }
    }
}

impl std::str::FromStr for Service {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_lowercase().as_str() {
            "gender-api" | "genderapi" => Ok(Service::GenderApi),
            "onograph" => Ok(Service::Onograph),
            "genderize" => Ok(Service::Genderize),
            other => Err(Error::Config(format!("unknown service {other:?}"))),
        }
    }
}

#[derive(Clone)]
pub struct ApiClientConfig {
    pub service: Service,
    pub base_url: String,
    pub credential: Option<String>,
    pub daily_quota: u32,
    pub cache_path: PathBuf,
    pub timeout: Duration,
    /// Cap on concurrent live requests.
    pub max_in_flight: usize,
}

impl std::fmt::Debug for ApiClientConfig {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        // the credential stays out of logs
        f.debug_struct("ApiClientConfig")
            .field("service", &self.service)
            .field("base_url", &self.base_url)
            .field("credential", &self.credential.as_ref().map(|_| "<set>"))
            .field("daily_quota", &self.daily_quota)
            .field("cache_path", &self.cache_path)
            .field("timeout", &self.timeout)
            .field("max_in_flight", &self.max_in_flight)
            .finish()
    }
}

impl ApiClientConfig {
    pub fn new(service: Service, base_url: impl Into<String>, cache_path: impl Into<PathBuf>) -> Self {
        ApiClientConfig {
            service,
            base_url: base_url.into(),
            credential: None,
            daily_quota: 500,
            cache_path: cache_path.into(),
            timeout: Duration::from_secs(10),
            max_in_flight: 4,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.daily_quota == 0 {
            return Err(Error::InvalidParam("daily quota must be positive".into()));
        }
        if self.max_in_flight == 0 {
            return Err(Error::InvalidParam("max_in_flight must be positive".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum ApiGender {
    Female,
    Male,
    Unknown,
}

impl ApiGender {
    pub fn label(self) -> &'static str {
        match self {
            ApiGender::Female => "Female",
            ApiGender::Male => "Male",
            ApiGender::Unknown => "Unknown",
        }
    }

    pub fn class(self) -> Option<ClassId> {
        match self {
            ApiGender::Female => Some(ClassId(0)),
            ApiGender::Male => Some(ClassId(1)),
            ApiGender::Unknown => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ApiResponse {
    pub gender: ApiGender,
    pub confidence: Option<f64>,
    /// Raw service payload, persisted for audit.
    pub raw: String,
    pub from_cache: bool,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
struct CacheLine {
    service: Service,
    name: String,
    gender: ApiGender,
    confidence: Option<f64>,
    raw: String,
    fetched_at: i64,
    #[serde(default)]
    parse_error: bool,
}

struct ClientState {
    cache: BTreeMap<String, CacheLine>,
    /// Live calls per UTC day (epoch day), reservations included.
    used_by_day: BTreeMap<i64, u32>,
}

/// Synchronized service client: one shared quota counter and cache, at
/// most `max_in_flight` live requests at a time. Concurrent callers asking
/// for the same uncached name may each spend quota; batch export dedupes
/// names up front.
pub struct ApiClient {
    config: ApiClientConfig,
    http: reqwest::blocking::Client,
    state: Mutex<ClientState>,
    in_flight: (Mutex<usize>, Condvar),
    clock: Box<dyn Fn() -> i64 + Send + Sync>,
}

fn system_epoch() -> i64 {
    std::time::SystemTime::now()
        .duration_since(std::time::UNIX_EPOCH)
        .map(|d| d.as_secs() as i64)
        .unwrap_or(0)
}

fn percent_encode(raw: &str) -> String {
    let mut out = String::with_capacity(raw.len());
    for byte in raw.bytes() {
        match byte {
            b'A'..=b'Z' | b'a'..=b'z' | b'0'..=b'9' | b'-' | b'_' | b'.' | b'~' => {
                out.push(byte as char)
            }
            _ => out.push_str(&format!("%{byte:02X}")),
        }
    }
    out
}

impl ApiClient {
    pub fn open(config: ApiClientConfig) -> Result<Self> {
        Self::with_clock(config, Box::new(system_epoch))
    }

    /// Like [`ApiClient::open`] with an injected epoch-seconds clock, so
    /// tests can move the quota day forward.
    pub fn with_clock(
        config: ApiClientConfig,
        clock: Box<dyn Fn() -> i64 + Send + Sync>,
    ) -> Result<Self> {
        config.validate()?;
        let mut cache = BTreeMap::new();
        let mut used_by_day: BTreeMap<i64, u32> = BTreeMap::new();
        if config.cache_path.exists() {
            let text = std::fs::read_to_string(&config.cache_path)
                .map_err(|e| Error::io(&config.cache_path, e))?;
            for (i, line) in text.lines().enumerate() {
                if line.trim().is_empty() {
                    continue;
                }
                let entry: CacheLine = serde_json::from_str(line).map_err(|e| {
                    Error::Data(format!(
                        "cache {} line {}: {e}",
                        config.cache_path.display(),
                        i + 1
                    ))
                })?;
                if entry.service != config.service {
                    continue;
                }
                *used_by_day.entry(entry.fetched_at.div_euclid(86_400)).or_insert(0) += 1;
                if !entry.parse_error {
                    cache.insert(entry.name.clone(), entry);
                }
            }
        }
        let http = reqwest::blocking::Client::builder()
            .timeout(config.timeout)
            .build()
            .map_err(|e| Error::Network(e.to_string()))?;
        Ok(ApiClient {
            config,
            http,
            state: Mutex::new(ClientState { cache, used_by_day }),
            in_flight: (Mutex::new(0), Condvar::new()),
            clock,
        })
    }

    pub fn service(&self) -> Service {
        self.config.service
    }

    /// Live calls already spent today (reservations included).
    pub fn used_today(&self) -> u32 {
        let day = (self.clock)().div_euclid(86_400);
        let state = self.state.lock().expect("client state poisoned");
        state.used_by_day.get(&day).copied().unwrap_or(0)
    }

    fn request_url(&self, normalized: &str) -> String {
        let name = percent_encode(normalized);
        let base = self.config.base_url.trim_end_matches('/');
        let credential = self.config.credential.as_deref().unwrap_or("");
        match self.config.service {
            Service::Genderize => format!("{base}/?name={name}"),
            Service::GenderApi => {
                format!("{base}/get?key={}&name={name}", percent_encode(credential))
            }
            Service::Onograph => format!(
                "{base}/api/v1/gender?name={name}&key={}",
                percent_encode(credential)
            ),
        }
    }

    fn parse_payload(service: Service, body: &str) -> Result<(ApiGender, Option<f64>)> {
        let value: serde_json::Value = serde_json::from_str(body)
            .map_err(|e| Error::Payload(format!("{}: {e}", service.name())))?;
        let gender_field = value.get("gender");
        let gender = match gender_field.and_then(|g| g.as_str()) {
            Some(g) if g.eq_ignore_ascii_case("female") => ApiGender::Female,
            Some(g) if g.eq_ignore_ascii_case("male") => ApiGender::Male,
            Some(_) => ApiGender::Unknown,
            // genderize answers null for names it does not know
            None if gender_field.map(|g| g.is_null()) == Some(true) => ApiGender::Unknown,
            None => {
                return Err(Error::Payload(format!(
                    "{}: payload has no gender field",
                    service.name()
                )))
            }
        };
        let confidence = match service {
            Service::Genderize => value.get("probability").and_then(|v| v.as_f64()),
            Service::GenderApi => value
                .get("accuracy")
                .and_then(|v| v.as_f64())
                .map(|a| a / 100.0),
            Service::Onograph => value.get("genderConfidence").and_then(|v| v.as_f64()),
        };
        Ok((gender, confidence.filter(|c| (0.0..=1.0).contains(c))))
    }

    fn append_cache_line(&self, line: &CacheLine) -> Result<()> {
        let mut file = std::fs::OpenOptions::new()
            .create(true)
            .append(true)
            .open(&self.config.cache_path)
            .map_err(|e| Error::io(&self.config.cache_path, e))?;
        let mut text = serde_json::to_string(line)
            .map_err(|e| Error::Data(format!("cache encode: {e}")))?;
        text.push('\n');
        file.write_all(text.as_bytes())
            .map_err(|e| Error::io(&self.config.cache_path, e))?;
        Ok(())
    }

    /// Cache-first gender lookup. A cached answer never consumes quota; an
    /// uncached one reserves a quota slot for the current UTC day before
    /// the request goes out, and rolls the slot back only when the request
    /// never reached the service.
    pub fn query_gender(&self, name: &str) -> Result<ApiResponse> {
        let normalized = normalize_name(name);
        if !is_valid_name(&normalized) {
            return Err(Error::InvalidParam(format!(
                "name {name:?} is not valid after normalization"
            )));
        }

        let day = (self.clock)().div_euclid(86_400);
        {
            let mut state = self.state.lock().expect("client state poisoned");
            if let Some(entry) = state.cache.get(&normalized) {
                return Ok(ApiResponse {
                    gender: entry.gender,
                    confidence: entry.confidence,
                    raw: entry.raw.clone(),
                    from_cache: true,
                });
            }
            let used = state.used_by_day.entry(day).or_insert(0);
            if *used >= self.config.daily_quota {
                return Err(Error::QuotaExhausted {
                    used: *used,
                    quota: self.config.daily_quota,
                });
            }
            *used += 1; // reserve before the request goes out
        }

        let outcome = self.fetch(&normalized);
        match outcome {
            Err(err) => {
                // the request never completed; give the slot back
                let mut state = self.state.lock().expect("client state poisoned");
                if let Some(used) = state.used_by_day.get_mut(&day) {
                    *used = used.saturating_sub(1);
                }
                Err(err)
            }
            Ok(body) => {
                let fetched_at = (self.clock)();
                match Self::parse_payload(self.config.service, &body) {
                    Ok((gender, confidence)) => {
                        let entry = CacheLine {
                            service: self.config.service,
                            name: normalized.clone(),
                            gender,
                            confidence,
                            raw: body,
                            fetched_at,
                            parse_error: false,
                        };
                        let mut state = self.state.lock().expect("client state poisoned");
                        self.append_cache_line(&entry)?;
                        let response = ApiResponse {
                            gender: entry.gender,
                            confidence: entry.confidence,
                            raw: entry.raw.clone(),
                            from_cache: false,
                        };
                        state.cache.insert(normalized, entry);
                        Ok(response)
                    }
                    Err(err) => {
                        // quota stays spent; keep the payload for audit but
                        // leave the name retryable
                        let entry = CacheLine {
                            service: self.config.service,
                            name: normalized,
                            gender: ApiGender::Unknown,
                            confidence: None,
                            raw: body,
                            fetched_at,
                            parse_error: true,
                        };
                        let _state = self.state.lock().expect("client state poisoned");
                        self.append_cache_line(&entry)?;
                        Err(err)
                    }
                }
            }
        }
    }

    /// Performs the HTTP round trip under the in-flight cap. A successful
    /// return means the service answered (any status).
    fn fetch(&self, normalized: &str) -> Result<String> {
        let (lock, condvar) = &self.in_flight;
        {
            let mut current = lock.lock().expect("in-flight lock poisoned");
            while *current >= self.config.max_in_flight {
                current = condvar.wait(current).expect("in-flight lock poisoned");
            }
            *current += 1;
        }
        let result = (|| {
            let url = self.request_url(normalized);
            let response = self
                .http
                .get(&url)
                .send()
                .map_err(|e| Error::Network(e.to_string()))?;
            let status = response.status();
            let body = response
                .text()
                .map_err(|e| Error::Network(e.to_string()))?;
            if !status.is_success() {
                return Err(Error::Payload(format!(
                    "{}: http status {status}",
                    self.config.service.name()
                )));
            }
            Ok(body)
        })();
        {
            let mut current = lock.lock().expect("in-flight lock poisoned");
            *current -= 1;
            condvar.notify_one();
        }
        // classify: payload errors consumed quota, network errors did not
        result
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct ExportReport {
    pub rows_written: usize,
    pub live_calls: usize,
    pub cache_hits: usize,
    pub skipped_invalid: usize,
}

/// Writes a prediction CSV (`name,label,probability`) for the given names,
/// serving repeats and already-cached names from the cache. On quota
/// exhaustion or a network failure the rows written so far are flushed and
/// the error is returned; a rerun resumes from the cache.
pub fn batch_export(client: &ApiClient, names: &[String], out: &Path) -> Result<ExportReport> {
    let mut report = ExportReport::default();
    let mut seen: std::collections::BTreeSet<String> = Default::default();
    let file = std::fs::File::create(out).map_err(|e| Error::io(out, e))?;
    let mut writer = csv::Writer::from_writer(file);
    writer
        .write_record(["name", "label", "probability"])
        .map_err(Error::Csv)?;

    let finish = |writer: &mut csv::Writer<std::fs::File>| -> Result<()> {
        writer.flush().map_err(|e| Error::io(out, e))
    };

    for raw in names {
        let normalized = normalize_name(raw);
        if !is_valid_name(&normalized) {
            report.skipped_invalid += 1;
            continue;
        }
        if !seen.insert(normalized.clone()) {
            continue;
        }
        match client.query_gender(&normalized) {
            Ok(response) => {
                if response.from_cache {
                    report.cache_hits += 1;
                } else {
                    report.live_calls += 1;
                }
                let probability = response
                    .confidence
                    .map(|c| format!("{c}"))
                    .unwrap_or_default();
                writer
                    .write_record([normalized.as_str(), response.gender.label(), &probability])
                    .map_err(Error::Csv)?;
                report.rows_written += 1;
            }
            Err(err) => {
                finish(&mut writer)?;
                return Err(err);
            }
        }
    }
    finish(&mut writer)?;
    Ok(report)
}

/// Scores an exported prediction file: the task is always gender for these
/// services, with "Unknown" imported as an abstention.
pub fn import_export_file(path: &Path) -> Result<crate::models::PredictionSet> {
    crate::models::import_api_predictions(path, Task::Gender)
}

pub mod mock {
    //! A minimal local HTTP server speaking each service's response shape,
    //! with a request log for quota assertions and a failure switch for
    //! outage drills.

    use std::io::{BufRead, BufReader, Write};
    use std::net::{SocketAddr, TcpListener, TcpStream};
    use std::sync::atomic::{AtomicBool, Ordering};
    use std::sync::{Arc, Mutex};

    use super::Service;

    struct MockState {
        requests: Vec<String>,
        failing: bool,
    }

    pub struct MockServer {
        addr: SocketAddr,
        state: Arc<Mutex<MockState>>,
        stop: Arc<AtomicBool>,
        handle: Option<std::thread::JoinHandle<()>>,
    }

    fn percent_decode(raw: &str) -> String {
        let bytes = raw.as_bytes();
        let mut out = Vec::with_capacity(bytes.len());
        let mut i = 0;
        while i < bytes.len() {
            if bytes[i] == b'%' {
                if let (Some(hi), Some(lo)) = (
                    bytes.get(i + 1).and_then(|b| (*b as char).to_digit(16)),
                    bytes.get(i + 2).and_then(|b| (*b as char).to_digit(16)),
                ) {
                    out.push((hi * 16 + lo) as u8);
                    i += 3;
                    continue;
                }
            }
            out.push(bytes[i]);
            i += 1;
        }
        String::from_utf8_lossy(&out).into_owned()
    }

    /// Deterministic toy gender rule shared by all mock services: names
    /// whose first word ends in A or I read female, others male.
    pub fn toy_rule(name: &str) -> (&'static str, f64) {
        let first = name.split(' ').next().unwrap_or("");
        if first.ends_with('A') || first.ends_with('I') {
            ("female", 0.93)
        } else {
            ("male", 0.91)
        }
    }

    fn response_body(service: Service, name: &str) -> String {
        let (gender, confidence) = toy_rule(name);
        match service {
            Service::Genderize => format!(
                "{{\"name\":{:?},\"gender\":\"{gender}\",\"probability\":{confidence},\"count\":1024}}",
                name
            ),
            Service::GenderApi => format!(
                "{{\"name\":{:?},\"gender\":\"{gender}\",\"accuracy\":{},\"samples\":1024}}",
                name,
                (confidence * 100.0) as u32
            ),
            Service::Onograph => {
                let cap = if gender == "female" { "Female" } else { "Male" };
                format!(
                    "{{\"name\":{:?},\"gender\":\"{cap}\",\"genderConfidence\":{confidence}}}",
                    name
                )
            }
        }
    }

    fn handle(stream: &mut TcpStream, service: Service, state: &Mutex<MockState>) {
        let mut reader = BufReader::new(stream.try_clone().expect("clone stream"));
        let mut request_line = String::new();
        if reader.read_line(&mut request_line).is_err() {
            return;
        }
        // drain headers
        loop {
            let mut line = String::new();
            match reader.read_line(&mut line) {
                Ok(0) => break,
                Ok(_) if line == "\r\n" || line == "\n" => break,
                Ok(_) => continue,
                Err(_) => return,
            }
        }
        let path = request_line.split_whitespace().nth(1).unwrap_or("/");
        let name = path
            .split_once('?')
            .map(|(_, q)| q)
            .unwrap_or("")
            .split('&')
            .find_map(|kv| kv.strip_prefix("name="))
            .map(percent_decode)
            .unwrap_or_default();

        let failing = {
            let mut state = state.lock().expect("mock state poisoned");
            state.requests.push(name.clone());
            state.failing
        };
        if failing {
            // drop the connection mid-flight: the client sees a network error
            let _ = stream.shutdown(std::net::Shutdown::Both);
            return;
        }
        let body = response_body(service, &name);
        let response = format!(
            "HTTP/1.1 200 OK\r\nContent-Type: application/json\r\nContent-Length: {}\r\nConnection: close\r\n\r\n{body}",
            body.len()
        );
        let _ = stream.write_all(response.as_bytes());
    }

    impl MockServer {
        pub fn start(service: Service) -> MockServer {
            let listener = TcpListener::bind("127.0.0.1:0").expect("bind mock server");
            let addr = listener.local_addr().expect("mock addr");
            let state = Arc::new(Mutex::new(MockState {
                requests: Vec::new(),
                failing: false,
            }));
            let stop = Arc::new(AtomicBool::new(false));
            let thread_state = state.clone();
            let thread_stop = stop.clone();
            let handle = std::thread::spawn(move || {
                for stream in listener.incoming() {
                    if thread_stop.load(Ordering::SeqCst) {
                        break;
                    }
                    if let Ok(mut stream) = stream {
                        handle(&mut stream, service, &thread_state);
                    }
                }
            });
            MockServer {
                addr,
                state,
                stop,
                handle: Some(handle),
            }
        }

        pub fn url(&self) -> String {
            format!("http://{}", self.addr)
        }

        pub fn request_count(&self) -> usize {
            self.state.lock().expect("mock state poisoned").requests.len()
        }

        pub fn requests(&self) -> Vec<String> {
            self.state.lock().expect("mock state poisoned").requests.clone()
        }

        /// Makes every subsequent request fail at the connection level.
        pub fn set_failing(&self, failing: bool) {
            self.state.lock().expect("mock state poisoned").failing = failing;
        }
    }

    impl Drop for MockServer {
        fn drop(&mut self) {
            self.stop.store(true, Ordering::SeqCst);
            // wake the accept loop
            let _ = TcpStream::connect(self.addr);
            if let Some(handle) = self.handle.take() {
                let _ = handle.join();
            }
        }
    }
}
