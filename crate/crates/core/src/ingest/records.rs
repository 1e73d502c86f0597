use std::fmt;
use std::io::{BufRead, BufReader, Read, Write};
use std::sync::mpsc::{sync_channel, Receiver};
use std::thread::JoinHandle;

use serde::{Deserialize, Serialize};

use super::IngestError;

/// Field order of the record CSV header.
pub const RECORD_FIELDS: [&str; 9] = [
    "tx_hash",
    "input_address",
    "output_address",
    "network",
    "coin",
    "amount",
    "amount_usdt",
    "gas_fee",
    "timestamp",
];

/// One directed value transfer.
///
/// Amounts are `f64`; quantities above 2^53 base units lose precision, which
/// is harmless for the statistical aggregates computed downstream.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TransactionRecord {
    pub tx_hash: String,
    /// Sender.
    pub input_address: String,
    /// Recipient.
    pub output_address: String,
    pub network: String,
    pub coin: String,
    /// Quantity in the transferred asset's own units.
    pub amount: f64,
    pub amount_usdt: f64,
    pub gas_fee: f64,
    /// Unix seconds.
    pub timestamp: i64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum RecordFormat {
    Csv,
    Jsonl,
}

impl std::str::FromStr for RecordFormat {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "csv" => Ok(RecordFormat::Csv),
            "jsonl" | "ndjson" => Ok(RecordFormat::Jsonl),
            other => Err(format!("unknown record format `{other}`")),
        }
    }
}

/// Whether the first bad row aborts parsing or is reported and skipped.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Strictness {
    Strict,
    #[default]
    Lenient,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct MalformedRow {
    /// 1-based line number in the input.
    pub line: u64,
    pub reason: String,
}

impl fmt::Display for MalformedRow {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "line {}: {}", self.line, self.reason)
    }
}

#[derive(Debug, Clone, Default)]
pub struct ParseOutcome {
    pub records: Vec<TransactionRecord>,
    /// Rows skipped in lenient mode.
    pub skipped: Vec<MalformedRow>,
}

pub type RowResult = Result<TransactionRecord, MalformedRow>;

/// Validates one row given a field lookup. Shared by both input formats.
fn build_record<F>(line: u64, get: F) -> RowResult
where
    F: Fn(&str) -> Result<Option<String>, String>,
{
    let bad = |reason: String| MalformedRow { line, reason };
    let field = |name: &str| -> Result<String, MalformedRow> {
        match get(name) {
            Ok(Some(v)) if !v.trim().is_empty() => Ok(v.trim().to_string()),
            Ok(_) => Err(bad(format!("missing field `{name}`"))),
            Err(e) => Err(bad(format!("field `{name}`: {e}"))),
        }
    };
    let quantity = |name: &str| -> Result<f64, MalformedRow> {
        let raw = field(name)?;
        let v: f64 = raw
            .parse()
            .map_err(|_| bad(format!("field `{name}`: `{raw}` is not a number")))?;
        if !v.is_finite() {
            return Err(bad(format!("field `{name}`: `{raw}` is not finite")));
        }
        if v < 0.0 {
            return Err(bad(format!("field `{name}`: negative value {raw}")));
        }
        Ok(v)
    };

    let raw_ts = field("timestamp")?;
    let timestamp: i64 = raw_ts
        .parse()
        .map_err(|_| bad(format!("field `timestamp`: `{raw_ts}` is not an integer")))?;
    if timestamp <= 0 {
        return Err(bad(format!("field `timestamp`: {timestamp} is not positive")));
    }

    Ok(TransactionRecord {
        tx_hash: field("tx_hash")?,
        input_address: field("input_address")?,
        output_address: field("output_address")?,
        network: field("network")?,
        coin: field("coin")?,
        amount: quantity("amount")?,
        amount_usdt: quantity("amount_usdt")?,
        gas_fee: quantity("gas_fee")?,
        timestamp,
    })
}

struct CsvRows<R: Read> {
    rows: csv::StringRecordsIntoIter<R>,
    columns: [Option<usize>; 9],
}

impl<R: Read> Iterator for CsvRows<R> {
    type Item = RowResult;

    fn next(&mut self) -> Option<Self::Item> {
        let row = self.rows.next()?;
        Some(match row {
            Err(e) => Err(MalformedRow {
                line: e.position().map_or(0, |p| p.line()),
                reason: e.to_string(),
            }),
            Ok(row) => {
                let line = row.position().map_or(0, |p| p.line());
                build_record(line, |name| {
                    let idx = RECORD_FIELDS.iter().position(|f| *f == name).unwrap();
                    Ok(self.columns[idx]
                        .and_then(|c| row.get(c))
                        .map(str::to_string))
                })
            }
        })
    }
}

struct JsonlRows<R: BufRead> {
    lines: std::io::Lines<R>,
    line: u64,
}

impl<R: BufRead> Iterator for JsonlRows<R> {
    type Item = RowResult;

    fn next(&mut self) -> Option<Self::Item> {
        loop {
            let text = self.lines.next()?;
            self.line += 1;
            let line = self.line;
            let text = match text {
                Ok(t) => t,
                Err(e) => {
                    return Some(Err(MalformedRow {
                        line,
                        reason: e.to_string(),
                    }))
                }
            };
            if text.trim().is_empty() {
                continue;
            }
            let obj: serde_json::Map<String, serde_json::Value> = match serde_json::from_str(&text)
            {
                Ok(o) => o,
                Err(e) => {
                    return Some(Err(MalformedRow {
                        line,
                        reason: format!("invalid JSON object: {e}"),
                    }))
                }
            };
            return Some(build_record(line, |name| match obj.get(name) {
                None | Some(serde_json::Value::Null) => Ok(None),
                Some(serde_json::Value::String(s)) => Ok(Some(s.clone())),
                Some(serde_json::Value::Number(n)) => Ok(Some(n.to_string())),
                Some(other) => Err(format!("unexpected JSON value {other}")),
            }));
        }
    }
}

/// Streams rows in input order. Header problems are reported up front.
pub fn record_stream<'a, R: Read + 'a>(
    input: R,
    format: RecordFormat,
) -> Result<Box<dyn Iterator<Item = RowResult> + Send + 'a>, IngestError>
where
    R: Send,
{
    match format {
        RecordFormat::Csv => {
            let mut reader = csv::ReaderBuilder::new()
                .has_headers(true)
                .flexible(true)
                .from_reader(input);
            let headers = reader.headers()?.clone();
            let mut columns = [None; 9];
            for (slot, name) in columns.iter_mut().zip(RECORD_FIELDS) {
                *slot = headers.iter().position(|h| h.trim() == name);
                if slot.is_none() {
                    return Err(IngestError::MissingColumn(name.to_string()));
                }
            }
            Ok(Box::new(CsvRows {
                rows: reader.into_records(),
                columns,
            }))
        }
        RecordFormat::Jsonl => Ok(Box::new(JsonlRows {
            lines: BufReader::new(input).lines(),
            line: 0,
        })),
    }
}

/// Parses a whole stream. In strict mode the first malformed row is an error.
pub fn parse_transactions<R: Read + Send>(
    input: R,
    format: RecordFormat,
    strictness: Strictness,
) -> Result<ParseOutcome, IngestError> {
    let mut out = ParseOutcome::default();
    for row in record_stream(input, format)? {
        match row {
            Ok(rec) => out.records.push(rec),
            Err(bad) if strictness == Strictness::Strict => {
                return Err(IngestError::Malformed(bad));
            }
            Err(bad) => out.skipped.push(bad),
        }
    }
    Ok(out)
}

/// Parses on a background thread, handing rows to the consumer through a
/// bounded queue of `capacity` rows.
pub fn spawn_parser<R>(
    input: R,
    format: RecordFormat,
    capacity: usize,
) -> (Receiver<Result<RowResult, IngestError>>, JoinHandle<()>)
where
    R: Read + Send + 'static,
{
    let (tx, rx) = sync_channel(capacity.max(1));
    let handle = std::thread::spawn(move || match record_stream(input, format) {
        Err(e) => {
            let _ = tx.send(Err(e));
        }
        Ok(rows) => {
            for row in rows {
                if tx.send(Ok(row)).is_err() {
                    break;
                }
            }
        }
    });
    (rx, handle)
}

pub fn write_transactions_csv<W: Write>(
    sink: W,
    records: &[TransactionRecord],
) -> Result<(), IngestError> {
    let mut w = csv::Writer::from_writer(sink);
    if records.is_empty() {
        w.write_record(RECORD_FIELDS)?;
    }
    for r in records {
        w.serialize(r)?;
    }
    w.flush()?;
    Ok(())
}

pub fn write_transactions_jsonl<W: Write>(
    mut sink: W,
    records: &[TransactionRecord],
) -> Result<(), IngestError> {
    for r in records {
        serde_json::to_writer(&mut sink, r).map_err(|e| IngestError::Io(e.into()))?;
        sink.write_all(b"\n")?;
    }
    sink.flush()?;
    Ok(())
}
