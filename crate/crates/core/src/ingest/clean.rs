use std::collections::{BTreeMap, BTreeSet, HashMap};

use serde::{Deserialize, Serialize};

use super::{AddressLabel, IngestError, Strictness, TransactionRecord};

pub const ONE_YEAR_SECS: i64 = 365 * 24 * 3600;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CleanConfig {
    /// Records dated after `now` do not extend an address's lifecycle.
    pub now: i64,
    /// Addresses active longer than this many seconds stop being candidates.
    pub max_lifecycle: i64,
    pub strictness: Strictness,
}

impl Default for CleanConfig {
    fn default() -> Self {
        CleanConfig {
            now: i64::MAX,
            max_lifecycle: ONE_YEAR_SECS,
            strictness: Strictness::Lenient,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct CleaningReport {
    pub total_addresses: usize,
    pub excluded_institutional: usize,
    pub excluded_lifecycle: usize,
    pub retained_candidates: usize,
    pub retained_transactions: usize,
    pub dropped_duplicates: usize,
}

impl CleaningReport {
    pub fn reconciles(&self) -> bool {
        self.total_addresses
            == self.excluded_institutional + self.excluded_lifecycle + self.retained_candidates
    }

    pub fn lifecycle_fraction(&self) -> f64 {
        if self.total_addresses == 0 {
            0.0
        } else {
            self.excluded_lifecycle as f64 / self.total_addresses as f64
        }
    }
}

#[derive(Debug, Clone, Default)]
pub struct CleanOutput {
    pub candidates: BTreeSet<String>,
    pub records: Vec<TransactionRecord>,
    pub report: CleaningReport,
}

/// Applies the candidate rules.
///
/// Label-excluded addresses (institutional, hot wallet, contract) leave the
/// candidate set first, then the lifecycle filter runs on what remains. All
/// transfers stay in `records` as graph edges; the only records dropped are
/// repeated copies of the same transfer leg.
pub fn clean(
    records: &[TransactionRecord],
    labels: &BTreeMap<String, AddressLabel>,
    config: &CleanConfig,
) -> Result<CleanOutput, IngestError> {
    if config.max_lifecycle <= 0 {
        return Err(IngestError::InvalidConfig(
            "max_lifecycle must be positive".into(),
        ));
    }

    // One transaction hash may carry several legs (contract distributions), so
    // a leg is identified by hash, endpoints and coin.
    let mut seen: HashMap<(&str, &str, &str, &str), usize> = HashMap::new();
    let mut kept = Vec::with_capacity(records.len());
    let mut dropped = 0;
    for r in records {
        let key = (
            r.tx_hash.as_str(),
            r.input_address.as_str(),
            r.output_address.as_str(),
            r.coin.as_str(),
        );
        match seen.get(&key) {
            None => {
                seen.insert(key, kept.len());
                kept.push(r.clone());
            }
            Some(&i) if kept[i] == *r => dropped += 1,
            Some(_) if config.strictness == Strictness::Strict => {
                return Err(IngestError::DuplicateTransaction(r.tx_hash.clone()));
            }
            Some(_) => dropped += 1,
        }
    }

    let mut span: BTreeMap<&str, Option<(i64, i64)>> = BTreeMap::new();
    for r in &kept {
        for addr in [r.input_address.as_str(), r.output_address.as_str()] {
            let slot = span.entry(addr).or_insert(None);
            if r.timestamp <= config.now {
                *slot = Some(match *slot {
                    None => (r.timestamp, r.timestamp),
                    Some((lo, hi)) => (lo.min(r.timestamp), hi.max(r.timestamp)),
                });
            }
        }
    }

    let mut report = CleaningReport {
        total_addresses: span.len(),
        retained_transactions: kept.len(),
        dropped_duplicates: dropped,
        ..CleaningReport::default()
    };
    let mut candidates = BTreeSet::new();
    for (addr, window) in span {
        if labels.get(addr).is_some_and(|l| l.category.is_excluded()) {
            report.excluded_institutional += 1;
        } else if window.is_some_and(|(lo, hi)| hi - lo > config.max_lifecycle) {
            report.excluded_lifecycle += 1;
        } else {
            candidates.insert(addr.to_string());
        }
    }
    report.retained_candidates = candidates.len();

    Ok(CleanOutput {
        candidates,
        records: kept,
        report,
    })
}
