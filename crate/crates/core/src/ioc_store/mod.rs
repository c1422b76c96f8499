//! Indicator feed ingestion: parse, canonicalize, deduplicate, persist, query.
//!
//! Feeds are comma separated `value,itype,confidence,provider,lasttime,tags`
//! lines. Indicators are keyed by `(itype, value)`; repeats merge by highest
//! confidence, latest sighting and tag union. The store persists to a
//! versioned flat file (`ctiflow-store v1` header, one record per line).

mod feed;
mod indicator;
mod store;

use std::path::PathBuf;

use thiserror::Error;

pub use feed::{parse_feed, LineError, ParsedFeed, RawFeedRecord};
pub use indicator::{
    canonicalize, format_timestamp, normalize, parse_timestamp, Indicator, IndicatorType, Reject, DEFAULT_CONFIDENCE,
};
pub use store::{IndicatorKey, IndicatorStore, IngestReport, SourceLogEntry, UpsertOutcome, STORE_HEADER};

#[derive(Debug, Error)]
pub enum StoreError {
    #[error("I/O error: {0}")]
    Io(#[from] std::io::Error),
    #[error("store file not found: {}", .0.display())]
    NotFound(PathBuf),
    #[error("corrupt store (line {line}): {reason}")]
    Corrupt { line: usize, reason: String },
    #[error("store format version mismatch: found {found:?}, expected v1")]
    VersionMismatch { found: String },
}
