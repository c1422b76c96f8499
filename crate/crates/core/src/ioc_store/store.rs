use std::collections::BTreeMap;
use std::fs;
use std::io::{self, Read, Write};
use std::path::Path;

use super::feed::{parse_feed, parse_line, LineError, ParsedFeed};
use super::indicator::{normalize, Indicator, IndicatorType, Reject};
use super::StoreError;
use crate::par;

pub const STORE_HEADER: &str = "ctiflow-store v1";
const STORE_MAGIC: &str = "ctiflow-store ";

pub type IndicatorKey = (IndicatorType, String);

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum UpsertOutcome {
    Inserted,
    Merged,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SourceLogEntry {
    pub feed: String,
    pub records: usize,
    pub skipped: usize,
}

/// Per-feed result of [`IndicatorStore::ingest`].
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct IngestReport {
    pub feed: String,
    pub inserted: usize,
    pub merged: usize,
    /// Parse errors followed by normalization rejects, in line order within each group.
    pub skipped: Vec<LineError>,
}

impl IngestReport {
    pub fn summary_line(&self) -> String {
        format!("{}: accepted={} merged={} skipped={}", self.feed, self.inserted, self.merged, self.skipped.len())
    }
}

/// Deduplicated indicators keyed by `(itype, value)`.
///
/// Ingest needs `&mut self`; queries take `&self`, so the borrow checker
/// already enforces the single-writer contract.
#[derive(Debug, Clone, Default)]
pub struct IndicatorStore {
    records: BTreeMap<IndicatorKey, Indicator>,
    source_log: Vec<SourceLogEntry>,
}

impl IndicatorStore {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    pub fn records(&self) -> &BTreeMap<IndicatorKey, Indicator> {
        &self.records
    }

    pub fn source_log(&self) -> &[SourceLogEntry] {
        &self.source_log
    }

    pub fn get(&self, itype: IndicatorType, value: &str) -> Option<&Indicator> {
        self.records.get(&(itype, value.to_string()))
    }

    /// Record-for-record equality, ignoring the source log.
    pub fn same_records(&self, other: &IndicatorStore) -> bool {
        self.records == other.records
    }

    pub fn upsert(&mut self, ind: Indicator) -> UpsertOutcome {
        use std::collections::btree_map::Entry;
        match self.records.entry(ind.key()) {
            Entry::Vacant(v) => {
                v.insert(ind);
                UpsertOutcome::Inserted
            }
            Entry::Occupied(mut o) => {
                o.get_mut().merge_from(&ind);
                UpsertOutcome::Merged
            }
        }
    }

    /// Normalizes every parsed record (in parallel when enabled), then
    /// upserts the survivors in line order.
    pub fn ingest(&mut self, parsed: ParsedFeed) -> IngestReport {
        let normalized = par::map_slice(&parsed.records, normalize);
        self.apply_normalized(parsed, normalized)
    }

    /// Sequential variant of [`ingest`](Self::ingest), for comparison.
    pub fn ingest_seq(&mut self, parsed: ParsedFeed) -> IngestReport {
        let normalized = par::map_slice_seq(&parsed.records, normalize);
        self.apply_normalized(parsed, normalized)
    }

    fn apply_normalized(&mut self, parsed: ParsedFeed, normalized: Vec<Result<Indicator, Reject>>) -> IngestReport {
        let mut report = IngestReport { feed: parsed.feed_name, skipped: parsed.errors, ..Default::default() };
        let mut accepted = 0;
        for result in normalized {
            match result {
                Ok(ind) => {
                    accepted += 1;
                    match self.upsert(ind) {
                        UpsertOutcome::Inserted => report.inserted += 1,
                        UpsertOutcome::Merged => report.merged += 1,
                    }
                }
                Err(r) => report.skipped.push(LineError { line_number: r.line_number, reason: r.reason }),
            }
        }
        self.source_log.push(SourceLogEntry {
            feed: report.feed.clone(),
            records: accepted,
            skipped: report.skipped.len(),
        });
        report
    }

    pub fn ingest_reader<R: Read>(&mut self, reader: R, feed_name: &str) -> Result<IngestReport, StoreError> {
        Ok(self.ingest(parse_feed(reader, feed_name)?))
    }

    pub fn ingest_path(&mut self, path: &Path) -> Result<IngestReport, StoreError> {
        let f = fs::File::open(path).map_err(|e| StoreError::open(path, e))?;
        let name = path.file_name().map(|n| n.to_string_lossy().into_owned()).unwrap_or_default();
        self.ingest_reader(f, &name)
    }

    /// Indicators of the given type (any type when `None`) with confidence
    /// at least `min_confidence`, sorted by `(itype, value)`.
    pub fn query(&self, itype: Option<IndicatorType>, min_confidence: u8) -> Vec<&Indicator> {
        let iter: Box<dyn Iterator<Item = &Indicator>> = match itype {
            Some(t) => Box::new(
                self.records.range((t, String::new())..).take_while(move |((kt, _), _)| *kt == t).map(|(_, v)| v),
            ),
            None => Box::new(self.records.values()),
        };
        iter.filter(|i| i.confidence() >= min_confidence).collect()
    }

    pub fn to_store_text(&self) -> String {
        let mut s = String::with_capacity(64 * (self.records.len() + 1));
        s.push_str(STORE_HEADER);
        s.push('\n');
        for ind in self.records.values() {
            s.push_str(&ind.to_record_line());
            s.push('\n');
        }
        s
    }

    pub fn from_store_text(text: &str) -> Result<IndicatorStore, StoreError> {
        let corrupt = |line: usize, reason: &str| StoreError::Corrupt { line, reason: reason.to_string() };
        let mut lines = text.split_inclusive('\n');
        let header = lines.next().ok_or_else(|| corrupt(1, "missing header"))?;
        let header_body = header.trim_end_matches(['\n', '\r']);
        if header_body != STORE_HEADER {
            if let Some(found) = header_body.strip_prefix(STORE_MAGIC) {
                return Err(StoreError::VersionMismatch { found: found.to_string() });
            }
            return Err(corrupt(1, "missing header"));
        }
        if !header.ends_with('\n') {
            return Err(corrupt(1, "truncated header"));
        }
        let mut store = IndicatorStore::new();
        for (i, line) in lines.enumerate() {
            let line_number = i + 2;
            if !line.ends_with('\n') {
                return Err(corrupt(line_number, "truncated record"));
            }
            let rec = parse_line(line, line_number, "")
                .map_err(|r| corrupt(line_number, &r))?
                .ok_or_else(|| corrupt(line_number, "blank record"))?;
            if rec.confidence.is_none() || rec.lasttime.is_none() {
                return Err(corrupt(line_number, "incomplete record"));
            }
            let ind = normalize(&rec).map_err(|r| corrupt(line_number, &r.reason))?;
            if ind.value() != rec.value {
                return Err(corrupt(line_number, "non-canonical value"));
            }
            if store.upsert(ind) == UpsertOutcome::Merged {
                return Err(corrupt(line_number, "duplicate record"));
            }
        }
        Ok(store)
    }

    /// Writes through a sibling temp file and renames over `path`.
    pub fn save(&self, path: &Path) -> Result<(), StoreError> {
        let tmp = path.with_extension("tmp");
        {
            let mut f = fs::File::create(&tmp)?;
            f.write_all(self.to_store_text().as_bytes())?;
            f.sync_all()?;
        }
        fs::rename(&tmp, path)?;
        Ok(())
    }

    pub fn load(path: &Path) -> Result<IndicatorStore, StoreError> {
        let bytes = fs::read(path).map_err(|e| StoreError::open(path, e))?;
        let text =
            String::from_utf8(bytes).map_err(|_| StoreError::Corrupt { line: 0, reason: "invalid utf-8".into() })?;
        Self::from_store_text(&text)
    }

    /// Loads `path`, or starts empty when it does not exist yet.
    pub fn load_or_default(path: &Path) -> Result<IndicatorStore, StoreError> {
        match Self::load(path) {
            Err(StoreError::NotFound(_)) => Ok(IndicatorStore::new()),
            other => other,
        }
    }
}

impl StoreError {
    fn open(path: &Path, e: io::Error) -> StoreError {
        if e.kind() == io::ErrorKind::NotFound {
            StoreError::NotFound(path.to_path_buf())
        } else {
            StoreError::Io(e)
        }
    }
}
