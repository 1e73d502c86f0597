//! Record parsing, address labels and candidate cleaning.

mod clean;
mod labels;
mod records;

pub use clean::{clean, CleanConfig, CleanOutput, CleaningReport, ONE_YEAR_SECS};
pub use labels::{
    load_labels, write_labels_csv, AddressLabel, FileLabelProvider, HttpLabelProvider,
    LabelCategory, LabelProvider, LabelResponse, LabelSource,
};
pub use records::{
    parse_transactions, record_stream, spawn_parser, write_transactions_csv,
    write_transactions_jsonl, MalformedRow, ParseOutcome, RecordFormat, RowResult, Strictness,
    TransactionRecord, RECORD_FIELDS,
};

#[derive(Debug, thiserror::Error)]
pub enum IngestError {
    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),
    #[error("input is missing required column `{0}`")]
    MissingColumn(String),
    #[error("malformed row at {0}")]
    Malformed(MalformedRow),
    #[error("transaction {0} appears twice with different field values")]
    DuplicateTransaction(String),
    #[error("label file line {line}: {reason}")]
    InvalidLabel { line: u64, reason: String },
    #[error("label provider unavailable: {0}")]
    ProviderUnavailable(String),
    #[error("label provider did not answer for {} address(es)", missing.len())]
    PartialResponse { missing: Vec<String> },
    #[error("invalid cleaning config: {0}")]
    InvalidConfig(String),
}
