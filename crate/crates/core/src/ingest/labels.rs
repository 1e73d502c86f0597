use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::io::{Read, Write};
use std::path::{Path, PathBuf};
use std::time::Duration;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{IngestError, Strictness};

/// Entity category of an address, ordered by merge severity.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LabelCategory {
    Unknown,
    Eoa,
    Institutional,
    HotWallet,
    Contract,
}

impl LabelCategory {
    /// Institutional, hot-wallet and contract addresses are never candidates.
    pub fn is_excluded(self) -> bool {
        matches!(
            self,
            LabelCategory::Institutional | LabelCategory::HotWallet | LabelCategory::Contract
        )
    }

    pub fn as_str(self) -> &'static str {
        match self {
            LabelCategory::Unknown => "unknown",
            LabelCategory::Eoa => "eoa",
            LabelCategory::Institutional => "institutional",
            LabelCategory::HotWallet => "hot_wallet",
            LabelCategory::Contract => "contract",
        }
    }
}

impl fmt::Display for LabelCategory {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl std::str::FromStr for LabelCategory {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim().to_ascii_lowercase().as_str() {
            "unknown" | "" => Ok(LabelCategory::Unknown),
            "eoa" => Ok(LabelCategory::Eoa),
            "institutional" => Ok(LabelCategory::Institutional),
            "hot_wallet" | "hotwallet" | "hot-wallet" => Ok(LabelCategory::HotWallet),
            "contract" => Ok(LabelCategory::Contract),
            other => Err(format!("unknown label category `{other}`")),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct AddressLabel {
    pub address: String,
    pub category: LabelCategory,
    pub source: String,
}

impl AddressLabel {
    pub fn unknown(address: &str) -> Self {
        AddressLabel {
            address: address.to_string(),
            category: LabelCategory::Unknown,
            source: String::new(),
        }
    }

    /// Keeps the higher-severity label; on equal severity the existing one stays.
    pub fn merge(self, other: AddressLabel) -> AddressLabel {
        if other.category > self.category {
            other
        } else {
            self
        }
    }
}

/// What a provider could say about a batch of addresses.
#[derive(Debug, Clone, Default)]
pub struct LabelResponse {
    /// Any number of labels per address, possibly from several sources.
    pub labels: Vec<AddressLabel>,
    /// Addresses the provider failed to answer for.
    pub unanswered: Vec<String>,
}

pub trait LabelProvider: Sync {
    fn lookup(&self, addresses: &[String]) -> Result<LabelResponse, IngestError>;
}

/// Labels held in memory, e.g. loaded from a `address,category,source` CSV.
#[derive(Debug, Clone, Default)]
pub struct FileLabelProvider {
    by_address: BTreeMap<String, Vec<AddressLabel>>,
}

impl FileLabelProvider {
    pub fn open(path: &Path) -> Result<Self, IngestError> {
        let file = std::fs::File::open(path).map_err(|e| {
            IngestError::ProviderUnavailable(format!("{}: {e}", path.display()))
        })?;
        Self::from_reader(file)
    }

    pub fn from_reader<R: Read>(input: R) -> Result<Self, IngestError> {
        let mut reader = csv::ReaderBuilder::new().flexible(true).from_reader(input);
        let headers = reader.headers()?.clone();
        let col = |name: &str| {
            headers
                .iter()
                .position(|h| h.trim() == name)
                .ok_or_else(|| IngestError::MissingColumn(name.to_string()))
        };
        let (a, c) = (col("address")?, col("category")?);
        let s = headers.iter().position(|h| h.trim() == "source");
        let mut labels = Vec::new();
        for row in reader.records() {
            let row = row?;
            let line = row.position().map_or(0, |p| p.line());
            let address = row.get(a).unwrap_or("").trim();
            if address.is_empty() {
                return Err(IngestError::InvalidLabel {
                    line,
                    reason: "empty address".into(),
                });
            }
            let category = row
                .get(c)
                .unwrap_or("")
                .parse()
                .map_err(|reason| IngestError::InvalidLabel { line, reason })?;
            labels.push(AddressLabel {
                address: address.to_string(),
                category,
                source: s.and_then(|s| row.get(s)).unwrap_or("file").trim().to_string(),
            });
        }
        Ok(Self::from_labels(labels))
    }

    pub fn from_labels(labels: impl IntoIterator<Item = AddressLabel>) -> Self {
        let mut by_address: BTreeMap<String, Vec<AddressLabel>> = BTreeMap::new();
        for l in labels {
            by_address.entry(l.address.clone()).or_default().push(l);
        }
        FileLabelProvider { by_address }
    }
}

impl LabelProvider for FileLabelProvider {
    fn lookup(&self, addresses: &[String]) -> Result<LabelResponse, IngestError> {
        let labels = addresses
            .iter()
            .filter_map(|a| self.by_address.get(a))
            .flatten()
            .cloned()
            .collect();
        Ok(LabelResponse {
            labels,
            unanswered: Vec::new(),
        })
    }
}

#[derive(Debug, Clone)]
pub struct HttpLabelProvider {
    base_url: String,
    timeout: Duration,
    retries: u32,
    concurrency: usize,
}

#[derive(Deserialize)]
struct HttpLabelBody {
    address: String,
    category: String,
    #[serde(default)]
    source: Option<String>,
}

enum HttpOutcome {
    Label(AddressLabel),
    NoLabel,
    Unanswered,
}

impl HttpLabelProvider {
    pub fn new(base_url: impl Into<String>) -> Self {
        HttpLabelProvider {
            base_url: base_url.into().trim_end_matches('/').to_string(),
            timeout: Duration::from_secs(10),
            retries: 2,
            concurrency: 8,
        }
    }

    pub fn with_timeout(mut self, timeout: Duration) -> Self {
        self.timeout = timeout;
        self
    }

    pub fn with_retries(mut self, retries: u32) -> Self {
        self.retries = retries;
        self
    }

    pub fn with_concurrency(mut self, workers: usize) -> Self {
        self.concurrency = workers.max(1);
        self
    }

    fn fetch_one(&self, agent: &ureq::Agent, address: &str) -> Result<HttpOutcome, IngestError> {
        let url = format!("{}/labels", self.base_url);
        let mut last_failure = String::new();
        for attempt in 0..=self.retries {
            if attempt > 0 {
                std::thread::sleep(Duration::from_millis(50 * u64::from(attempt)));
            }
            let mut resp = match agent.get(&url).query("address", address).call() {
                Ok(r) => r,
                Err(e) => {
                    last_failure = e.to_string();
                    continue;
                }
            };
            let status = resp.status().as_u16();
            match status {
                200 => {
                    let body = match resp.body_mut().read_to_string() {
                        Ok(b) => b,
                        Err(e) => {
                            last_failure = e.to_string();
                            continue;
                        }
                    };
                    let Ok(parsed) = serde_json::from_str::<HttpLabelBody>(&body) else {
                        return Ok(HttpOutcome::Unanswered);
                    };
                    let Ok(category) = parsed.category.parse() else {
                        return Ok(HttpOutcome::Unanswered);
                    };
                    if parsed.address != address {
                        return Ok(HttpOutcome::Unanswered);
                    }
                    return Ok(HttpOutcome::Label(AddressLabel {
                        address: parsed.address,
                        category,
                        source: parsed.source.unwrap_or_else(|| "http".to_string()),
                    }));
                }
                404 => return Ok(HttpOutcome::NoLabel),
                s if s >= 500 => last_failure = format!("HTTP {s}"),
                _ => return Ok(HttpOutcome::Unanswered),
            }
        }
        Err(IngestError::ProviderUnavailable(format!(
            "{url}: {last_failure}"
        )))
    }
}

impl LabelProvider for HttpLabelProvider {
    fn lookup(&self, addresses: &[String]) -> Result<LabelResponse, IngestError> {
        let agent: ureq::Agent = ureq::Agent::config_builder()
            .timeout_global(Some(self.timeout))
            .http_status_as_error(false)
            .build()
            .into();
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(self.concurrency)
            .build()
            .map_err(|e| IngestError::ProviderUnavailable(e.to_string()))?;
        let outcomes: Vec<Result<HttpOutcome, IngestError>> = pool.install(|| {
            addresses
                .par_iter()
                .map(|a| self.fetch_one(&agent, a))
                .collect()
        });
        let mut resp = LabelResponse::default();
        for (addr, outcome) in addresses.iter().zip(outcomes) {
            match outcome? {
                HttpOutcome::Label(l) => resp.labels.push(l),
                HttpOutcome::NoLabel => {}
                HttpOutcome::Unanswered => resp.unanswered.push(addr.clone()),
            }
        }
        Ok(resp)
    }
}

/// Queries `provider` for every address and merges the answers by severity.
///
/// Addresses without a label map to [`LabelCategory::Unknown`]. In strict mode
/// any unanswered address is an error.
pub fn load_labels(
    provider: &dyn LabelProvider,
    addresses: &BTreeSet<String>,
    strictness: Strictness,
) -> Result<BTreeMap<String, AddressLabel>, IngestError> {
    if addresses.is_empty() {
        return Ok(BTreeMap::new());
    }
    let query: Vec<String> = addresses.iter().cloned().collect();
    let resp = provider.lookup(&query)?;
    if strictness == Strictness::Strict && !resp.unanswered.is_empty() {
        let mut missing = resp.unanswered;
        missing.sort();
        return Err(IngestError::PartialResponse { missing });
    }
    let mut merged: BTreeMap<String, AddressLabel> = addresses
        .iter()
        .map(|a| (a.clone(), AddressLabel::unknown(a)))
        .collect();
    // Sort so that equal-severity ties resolve the same way for any response order.
    let mut labels = resp.labels;
    labels.sort_by(|x, y| (&x.address, &x.source).cmp(&(&y.address, &y.source)));
    for label in labels {
        if let Some(slot) = merged.get_mut(&label.address) {
            let current = std::mem::replace(slot, AddressLabel::unknown(&label.address));
            *slot = current.merge(label);
        }
    }
    Ok(merged)
}

pub fn write_labels_csv<W: Write>(sink: W, labels: &[AddressLabel]) -> Result<(), IngestError> {
    let mut w = csv::Writer::from_writer(sink);
    w.write_record(["address", "category", "source"])?;
    for l in labels {
        w.write_record([l.address.as_str(), l.category.as_str(), l.source.as_str()])?;
    }
    w.flush()?;
    Ok(())
}

/// Where labels come from, as named in a pipeline config.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum LabelSource {
    File { path: PathBuf },
    Http {
        base_url: String,
        #[serde(default = "default_timeout_secs")]
        timeout_secs: u64,
        #[serde(default = "default_retries")]
        retries: u32,
    },
}

fn default_timeout_secs() -> u64 {
    10
}

fn default_retries() -> u32 {
    2
}

impl LabelSource {
    pub fn provider(&self) -> Result<Box<dyn LabelProvider>, IngestError> {
        Ok(match self {
            LabelSource::File { path } => Box::new(FileLabelProvider::open(path)?),
            LabelSource::Http {
                base_url,
                timeout_secs,
                retries,
            } => Box::new(
                HttpLabelProvider::new(base_url.clone())
                    .with_timeout(Duration::from_secs(*timeout_secs))
                    .with_retries(*retries),
            ),
        })
    }
}
