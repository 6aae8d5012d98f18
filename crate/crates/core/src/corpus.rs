//! Timestamped, labeled comment collections.
//!
//! A [`Corpus`] is immutable and always sorted by `(timestamp, id)`. Every
//! transformation (slicing, sampling, exclusion) returns a new value, so a
//! corpus can be shared freely between threads.

use crate::rng::{derive_seed, SplitMix64};
use crate::time::{add_months, format_timestamp, month_label, month_start, parse_timestamp, TimeInterval, Timestamp};
use serde::{Deserialize, Serialize};
use std::collections::{BTreeSet, HashSet};
use std::io::{Read, Write};
use std::sync::Arc;
use thiserror::Error;

pub type CommentId = u64;

#[derive(Debug, Error)]
pub enum CorpusError {
    #[error("missing required column `{0}`")]
    MissingColumn(&'static str),
    #[error("row {row}: {message}")]
    Row { row: usize, message: String },
    #[error("row {row}: duplicate id {id}")]
    DuplicateId { row: usize, id: CommentId },
    #[error("cannot balance single-class corpus")]
    SingleClass,
    #[error("requested sample of {requested} exceeds corpus size {available}")]
    SampleTooLarge { requested: usize, available: usize },
    #[error("sample size must be positive")]
    EmptySample,
    #[error("empty corpus")]
    Empty,
    #[error("csv: {0}")]
    Csv(#[from] csv::Error),
    #[error("io: {0}")]
    Io(#[from] std::io::Error),
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CommentRecord {
    pub id: CommentId,
    pub timestamp: Timestamp,
    pub text: String,
    pub rejected: bool,
    pub comment_length: usize,
}

impl CommentRecord {
    pub fn new(id: CommentId, timestamp: Timestamp, text: impl Into<String>, rejected: bool) -> Self {
        let text = text.into();
        let comment_length = text.chars().count();
        Self { id, timestamp, text, rejected, comment_length }
    }

    pub fn label(&self) -> u8 {
        u8::from(self.rejected)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct ClassCounts {
    pub accepted: usize,
    pub rejected: usize,
}

impl ClassCounts {
    pub fn total(&self) -> usize {
        self.accepted + self.rejected
    }

    pub fn rejection_rate(&self) -> f64 {
        if self.total() == 0 {
            0.0
        } else {
            self.rejected as f64 / self.total() as f64
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Corpus {
    records: Arc<[CommentRecord]>,
    counts: ClassCounts,
}

impl Default for Corpus {
    fn default() -> Self {
        Self::from_sorted_unique(Vec::new())
    }
}

impl Corpus {
    /// Builds a corpus, sorting by `(timestamp, id)`. Duplicate ids are rejected.
    pub fn from_records(mut records: Vec<CommentRecord>) -> Result<Self, CorpusError> {
        let mut seen = HashSet::with_capacity(records.len());
        for (i, r) in records.iter().enumerate() {
            if !seen.insert(r.id) {
                return Err(CorpusError::DuplicateId { row: i + 1, id: r.id });
            }
        }
        records.sort_by_key(|r| (r.timestamp, r.id));
        Ok(Self::from_sorted_unique(records))
    }

    // Callers guarantee sortedness and id uniqueness (subsets of a valid corpus).
    fn from_sorted_unique(records: Vec<CommentRecord>) -> Self {
        let rejected = records.iter().filter(|r| r.rejected).count();
        let counts = ClassCounts { accepted: records.len() - rejected, rejected };
        Self { records: records.into(), counts }
    }

    fn filtered(&self, mut keep: impl FnMut(&CommentRecord) -> bool) -> Self {
        Self::from_sorted_unique(self.records.iter().filter(|r| keep(r)).cloned().collect())
    }

    pub fn records(&self) -> &[CommentRecord] {
        &self.records
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    pub fn class_counts(&self) -> ClassCounts {
        self.counts
    }

    pub fn ids(&self) -> BTreeSet<CommentId> {
        self.records.iter().map(|r| r.id).collect()
    }

    pub fn labels(&self) -> Vec<u8> {
        self.records.iter().map(CommentRecord::label).collect()
    }

    /// `[min timestamp, max timestamp]`, or `None` for an empty corpus.
    pub fn time_span(&self) -> Option<(Timestamp, Timestamp)> {
        Some((self.records.first()?.timestamp, self.records.last()?.timestamp))
    }

    /// Records with `start <= timestamp < end`.
    pub fn slice_by_time(&self, start: Timestamp, end: Timestamp) -> Corpus {
        let lo = self.records.partition_point(|r| r.timestamp < start);
        let hi = self.records.partition_point(|r| r.timestamp < end).max(lo);
        Self::from_sorted_unique(self.records[lo..hi].to_vec())
    }

    pub fn slice(&self, interval: TimeInterval) -> Corpus {
        self.slice_by_time(interval.start, interval.end)
    }

    /// One partition per calendar month (UTC) intersecting the time span,
    /// including empty months between the first and last record.
    pub fn monthly_partitions(&self) -> Vec<(String, Corpus)> {
        let Some((first, last)) = self.time_span() else {
            return Vec::new();
        };
        let mut out = Vec::new();
        let mut start = month_start(first);
        while start <= last {
            let end = add_months(start, 1);
            out.push((month_label(start), self.slice_by_time(start, end)));
            start = end;
        }
        out
    }

    /// Drops random majority-class records until both classes have the
    /// minority count. The minority class is kept entirely.
    pub fn undersample_balanced(&self, seed: u64) -> Result<Corpus, CorpusError> {
        let ClassCounts { accepted, rejected } = self.counts;
        if accepted == 0 || rejected == 0 {
            return Err(CorpusError::SingleClass);
        }
        let majority_is_rejected = rejected > accepted;
        let majority: Vec<usize> = (0..self.len()).filter(|&i| self.records[i].rejected == majority_is_rejected).collect();
        let target = accepted.min(rejected);
        let mut rng = SplitMix64::new(derive_seed(seed, &[0xBA1A]));
        let mut keep = vec![true; self.len()];
        for &i in &majority {
            keep[i] = false;
        }
        for j in rng.sample_indices(majority.len(), target) {
            keep[majority[j]] = true;
        }
        Ok(self.keep_mask(&keep))
    }

    /// Uniform random subset of exactly `n` records.
    pub fn undersample_to_size(&self, n: usize, seed: u64) -> Result<Corpus, CorpusError> {
        if n == 0 {
            return Err(CorpusError::EmptySample);
        }
        if n > self.len() {
            return Err(CorpusError::SampleTooLarge { requested: n, available: self.len() });
        }
        let mut rng = SplitMix64::new(derive_seed(seed, &[0x512E]));
        let mut keep = vec![false; self.len()];
        for i in rng.sample_indices(self.len(), n) {
            keep[i] = true;
        }
        Ok(self.keep_mask(&keep))
    }

    pub(crate) fn keep_mask(&self, keep: &[bool]) -> Corpus {
        let mut it = keep.iter();
        self.filtered(|_| *it.next().unwrap())
    }

    pub fn exclude(&self, ids: &BTreeSet<CommentId>) -> Corpus {
        self.filtered(|r| !ids.contains(&r.id))
    }

    /// Union of two corpora with disjoint ids.
    pub fn merge(&self, other: &Corpus) -> Result<Corpus, CorpusError> {
        let mut all = self.records.to_vec();
        all.extend(other.records.iter().cloned());
        Corpus::from_records(all)
    }

    /// Writes the corpus in the ingest CSV format.
    pub fn write_csv<W: Write>(&self, sink: W) -> Result<(), CorpusError> {
        let mut w = csv::Writer::from_writer(sink);
        w.write_record(["ID", "Date", "Text", "Rejected", "Comment_length"])?;
        for r in self.records.iter() {
            w.write_record([r.id.to_string(), format_timestamp(r.timestamp), r.text.clone(), r.label().to_string(), r.comment_length.to_string()])?;
        }
        w.flush()?;
        Ok(())
    }
}

/// Summary emitted after ingestion.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IngestSummary {
    pub total: usize,
    pub accepted: usize,
    pub rejected: usize,
    pub start: Option<String>,
    pub end: Option<String>,
    pub rejection_rate: f64,
    pub skipped_rows: usize,
    pub corrected_lengths: usize,
}

impl IngestSummary {
    pub fn for_corpus(corpus: &Corpus) -> Self {
        let c = corpus.class_counts();
        let span = corpus.time_span();
        Self {
            total: c.total(),
            accepted: c.accepted,
            rejected: c.rejected,
            start: span.map(|(s, _)| format_timestamp(s)),
            end: span.map(|(_, e)| format_timestamp(e)),
            rejection_rate: c.rejection_rate(),
            skipped_rows: 0,
            corrected_lengths: 0,
        }
    }
}

#[derive(Debug, Clone)]
pub struct Ingested {
    pub corpus: Corpus,
    pub summary: IngestSummary,
}

struct Columns {
    id: usize,
    date: usize,
    text: usize,
    rejected: usize,
    length: Option<usize>,
}

impl Columns {
    fn locate(header: &csv::StringRecord) -> Result<Self, CorpusError> {
        let find = |name: &str| header.iter().position(|h| h.trim().eq_ignore_ascii_case(name));
        Ok(Self {
            id: find("ID").ok_or(CorpusError::MissingColumn("ID"))?,
            date: find("Date").ok_or(CorpusError::MissingColumn("Date"))?,
            text: find("Text").ok_or(CorpusError::MissingColumn("Text"))?,
            rejected: find("Rejected").ok_or(CorpusError::MissingColumn("Rejected"))?,
            length: find("Comment_length"),
        })
    }
}

fn parse_row(cols: &Columns, rec: &csv::StringRecord) -> Result<(CommentRecord, bool), String> {
    let field = |i: usize| rec.get(i).ok_or_else(|| format!("missing field {}", i + 1));
    let id_raw = field(cols.id)?;
    let id: CommentId = id_raw.trim().parse().map_err(|_| format!("invalid id `{id_raw}`"))?;
    let date_raw = field(cols.date)?;
    let timestamp = parse_timestamp(date_raw).ok_or_else(|| format!("unparseable date `{date_raw}`"))?;
    let rejected = match field(cols.rejected)?.trim() {
        "0" => false,
        "1" => true,
        other => return Err(format!("label out of range `{other}`")),
    };
    let record = CommentRecord::new(id, timestamp, field(cols.text)?, rejected);
    let corrected = match cols.length.and_then(|i| rec.get(i)).map(str::trim) {
        Some("") | None => false,
        Some(raw) => !raw.parse::<usize>().is_ok_and(|n| n == record.comment_length),
    };
    Ok((record, corrected))
}

/// Reads a comma-separated, RFC 4180 quoted UTF-8 CSV with a header row.
///
/// Malformed rows are skipped (and logged) unless `strict`, in which case the
/// first one aborts with its 1-based data row number. Duplicate ids always
/// abort. `Comment_length` is recomputed from `Text`.
pub fn ingest_csv<R: Read>(source: R, strict: bool) -> Result<Ingested, CorpusError> {
    let mut reader = csv::ReaderBuilder::new().flexible(true).from_reader(source);
    let cols = Columns::locate(reader.headers()?)?;
    let mut records = Vec::new();
    let mut seen = HashSet::new();
    let (mut skipped, mut corrected) = (0usize, 0usize);
    for (i, rec) in reader.records().enumerate() {
        let row = i + 1;
        let parsed = rec.map_err(|e| e.to_string()).and_then(|rec| parse_row(&cols, &rec));
        match parsed {
            Ok((record, fixed)) => {
                if !seen.insert(record.id) {
                    return Err(CorpusError::DuplicateId { row, id: record.id });
                }
                if fixed {
                    log::warn!("row {row}: Comment_length corrected to {}", record.comment_length);
                    corrected += 1;
                }
                records.push(record);
            }
            Err(message) if strict => return Err(CorpusError::Row { row, message }),
            Err(message) => {
                log::warn!("row {row}: skipped ({message})");
                skipped += 1;
            }
        }
    }
    let corpus = Corpus::from_records(records)?;
    let mut summary = IngestSummary::for_corpus(&corpus);
    summary.skipped_rows = skipped;
    summary.corrected_lengths = corrected;
    log::info!("ingested {} comments ({} accepted, {} rejected)", summary.total, summary.accepted, summary.rejected);
    Ok(Ingested { corpus, summary })
}
