//! Corpus drift diagnostics: Spearman correlation of TF-IDF ranked word
//! lists, and vocabulary that first appears inside a period.

use crate::corpus::Corpus;
use crate::protocols::ChunkSet;
use crate::textprep::{build_feature_space, FeatureParams, Normalizer, TextError};
use crate::time::{add_months, TimeInterval};
use chrono::Datelike;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::collections::HashMap;
use std::fmt::Write as _;
use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum DriftError {
    #[error(transparent)]
    Text(#[from] TextError),
    #[error("insufficient overlap: {0} shared terms, need at least 2")]
    InsufficientOverlap(usize),
    #[error("rank vector has zero variance")]
    DegenerateRanks,
    #[error("need at least 2 chunks, got {0}")]
    TooFewChunks(usize),
    #[error("pair ({row}, {col}): {source}")]
    Pair { row: usize, col: usize, source: Box<DriftError> },
    #[error("no comments before period start")]
    NoPriorData,
    #[error("invalid period: {0}")]
    InvalidPeriod(String),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RankedTerm {
    pub term: String,
    pub score: f64,
    pub rank: f64,
}

/// Terms sorted by descending aggregate TF-IDF score; tied scores share the
/// average of the ranks they span.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
pub struct RankedWordList {
    pub entries: Vec<RankedTerm>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RankOptions {
    pub features: FeatureParams,
    /// Keep only the `k` best-scored terms.
    pub top_k: Option<usize>,
}

impl Default for RankOptions {
    fn default() -> Self {
        Self { features: FeatureParams { ngram_range: (1, 1), ..FeatureParams::default() }, top_k: None }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Alignment {
    /// Compare only shared terms, re-ranked within the shared set.
    #[default]
    Intersection,
    /// Compare all terms; a term missing from one list ties for last place there.
    Union,
}

/// Average ranks for descending order: the largest value gets rank 1.
pub fn average_ranks_desc(values: &[f64]) -> Vec<f64> {
    let mut order: Vec<usize> = (0..values.len()).collect();
    order.sort_by(|&a, &b| values[b].total_cmp(&values[a]));
    let mut ranks = vec![0.0; values.len()];
    let mut i = 0;
    while i < order.len() {
        let mut j = i;
        while j + 1 < order.len() && values[order[j + 1]] == values[order[i]] {
            j += 1;
        }
        let avg = (i + j) as f64 / 2.0 + 1.0;
        for &k in &order[i..=j] {
            ranks[k] = avg;
        }
        i = j + 1;
    }
    ranks
}

pub fn pearson(x: &[f64], y: &[f64]) -> Option<f64> {
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let (mut sxy, mut sxx, mut syy) = (0.0, 0.0, 0.0);
    for (a, b) in x.iter().zip(y) {
        sxy += (a - mx) * (b - my);
        sxx += (a - mx) * (a - mx);
        syy += (b - my) * (b - my);
    }
    if sxx == 0.0 || syy == 0.0 {
        return None;
    }
    Some((sxy / (sxx.sqrt() * syy.sqrt())).clamp(-1.0, 1.0))
}

impl RankedWordList {
    /// Builds a list from `(term, score)` pairs.
    pub fn from_scores(mut scored: Vec<(String, f64)>) -> Self {
        scored.sort_by(|a, b| b.1.total_cmp(&a.1).then_with(|| a.0.cmp(&b.0)));
        let ranks = average_ranks_desc(&scored.iter().map(|s| s.1).collect::<Vec<_>>());
        Self { entries: scored.into_iter().zip(ranks).map(|((term, score), rank)| RankedTerm { term, score, rank }).collect() }
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    fn scores(&self) -> HashMap<&str, f64> {
        self.entries.iter().map(|e| (e.term.as_str(), e.score)).collect()
    }
}

/// Ranks the corpus vocabulary by total TF-IDF mass: for each term, the sum
/// over documents of raw count times idf, with the vocabulary and idf fit on
/// this corpus alone.
pub fn tfidf_rank_list(corpus: &Corpus, normalizer: &Normalizer, opts: &RankOptions) -> Result<RankedWordList, DriftError> {
    let fs = build_feature_space(corpus, normalizer, opts.features)?;
    let scored = fs.terms().iter().zip(fs.corpus_freq().iter().zip(fs.idf())).map(|(t, (&cf, &idf))| (t.clone(), cf as f64 * idf)).collect();
    let mut list = RankedWordList::from_scores(scored);
    if let Some(k) = opts.top_k {
        if k < list.len() {
            let kept = list.entries.drain(..k).map(|e| (e.term, e.score)).collect();
            list = RankedWordList::from_scores(kept);
        }
    }
    Ok(list)
}

/// Spearman correlation between two ranked word lists: the Pearson
/// correlation of their average-rank vectors over the aligned vocabulary.
pub fn spearman(a: &RankedWordList, b: &RankedWordList, alignment: Alignment) -> Result<f64, DriftError> {
    let (sa, sb) = (a.scores(), b.scores());
    let shared = a.entries.iter().filter(|e| sb.contains_key(e.term.as_str())).count();
    if shared < 2 {
        return Err(DriftError::InsufficientOverlap(shared));
    }
    let terms: Vec<&str> = match alignment {
        Alignment::Intersection => a.entries.iter().map(|e| e.term.as_str()).filter(|t| sb.contains_key(t)).collect(),
        Alignment::Union => {
            let mut t: Vec<&str> = a.entries.iter().map(|e| e.term.as_str()).collect();
            t.extend(b.entries.iter().map(|e| e.term.as_str()).filter(|t| !sa.contains_key(t)));
            t
        }
    };
    let pick = |s: &HashMap<&str, f64>| -> Vec<f64> { terms.iter().map(|t| s.get(t).copied().unwrap_or(f64::NEG_INFINITY)).collect() };
    let ra = average_ranks_desc(&pick(&sa));
    let rb = average_ranks_desc(&pick(&sb));
    pearson(&ra, &rb).ok_or(DriftError::DegenerateRanks)
}

/// Symmetric, unit-diagonal matrix of pairwise chunk correlations.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CorrelationMatrix {
    pub chunk_bounds: Vec<TimeInterval>,
    pub rho: Vec<Vec<f64>>,
}

impl CorrelationMatrix {
    pub fn labels(&self) -> Vec<String> {
        self.chunk_bounds.iter().map(|b| b.label()).collect()
    }

    pub fn csv(&self) -> String {
        crate::protocols::matrix_csv(&self.labels(), &self.rho)
    }
}

pub fn spearman_matrix(chunks: &ChunkSet, normalizer: &Normalizer, opts: &RankOptions, alignment: Alignment) -> Result<CorrelationMatrix, DriftError> {
    let k = chunks.len();
    if k < 2 {
        return Err(DriftError::TooFewChunks(k));
    }
    let lists = chunks
        .chunks
        .par_iter()
        .enumerate()
        .map(|(i, c)| tfidf_rank_list(c, normalizer, opts).map_err(|e| DriftError::Pair { row: i, col: i, source: Box::new(e) }))
        .collect::<Result<Vec<_>, _>>()?;
    let pairs: Vec<(usize, usize)> = (0..k).flat_map(|i| (i..k).map(move |j| (i, j))).collect();
    let values = pairs
        .par_iter()
        .map(|&(i, j)| spearman(&lists[i], &lists[j], alignment).map_err(|e| DriftError::Pair { row: i, col: j, source: Box::new(e) }))
        .collect::<Result<Vec<_>, _>>()?;
    let mut rho = vec![vec![0.0; k]; k];
    for (&(i, j), v) in pairs.iter().zip(values) {
        rho[i][j] = v;
        rho[j][i] = v;
    }
    Ok(CorrelationMatrix { chunk_bounds: chunks.bounds.clone(), rho })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EmergingMode {
    /// Terms never seen before the period start, counted in every interval
    /// where they occur.
    #[default]
    NewInPeriod,
    /// Terms listed only in the interval of their first occurrence.
    NewInInterval,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EmergingInterval {
    pub interval: TimeInterval,
    pub label: String,
    pub words: Vec<(String, u64)>,
}

/// `MM-MM/YYYY` for month-aligned intervals within one year, `MM/YYYY` for a
/// single month, otherwise the interval's own label.
pub fn interval_label(iv: &TimeInterval) -> String {
    let aligned = crate::time::month_start(iv.start) == iv.start && crate::time::month_start(iv.end) == iv.end;
    let last = iv.end - chrono::Duration::seconds(1);
    if !aligned || last.year() != iv.start.year() {
        return iv.label();
    }
    if last.month() == iv.start.month() {
        format!("{:02}/{}", iv.start.month(), iv.start.year())
    } else {
        format!("{:02}-{:02}/{}", iv.start.month(), last.month(), iv.start.year())
    }
}

/// Splits `period` into consecutive `group_months` intervals (the last one
/// truncated at the period end).
pub fn group_intervals(period: TimeInterval, group_months: u32) -> Vec<TimeInterval> {
    let mut out = Vec::new();
    let mut start = period.start;
    while start < period.end {
        let end = add_months(start, group_months).min(period.end);
        out.push(TimeInterval::new(start, end));
        start = end;
    }
    out
}

/// Normalized unigrams that do not occur anywhere in the corpus before
/// `period.start`, grouped into `group_months` intervals and ranked by
/// within-interval frequency (ties by term); at most `top_n` per interval.
pub fn emerging_words(
    corpus: &Corpus,
    period: TimeInterval,
    normalizer: &Normalizer,
    top_n: usize,
    group_months: u32,
    mode: EmergingMode,
) -> Result<Vec<EmergingInterval>, DriftError> {
    if period.is_empty() {
        return Err(DriftError::InvalidPeriod(period.label()));
    }
    if group_months == 0 {
        return Err(DriftError::InvalidPeriod("group_months must be positive".into()));
    }
    if corpus.records().first().is_none_or(|r| r.timestamp >= period.start) {
        return Err(DriftError::NoPriorData);
    }
    let intervals = group_intervals(period, group_months);
    // term -> (first occurrence interval index or None if before the period, per-interval counts)
    let mut seen: HashMap<String, Option<usize>> = HashMap::new();
    let mut counts: Vec<HashMap<String, u64>> = vec![HashMap::new(); intervals.len()];
    for r in corpus.records() {
        let slot = if r.timestamp < period.start {
            None
        } else if let Some(k) = intervals.iter().position(|iv| iv.contains(r.timestamp)) {
            Some(k)
        } else {
            continue;
        };
        for tok in normalizer.normalize(&r.text) {
            let first = *seen.entry(tok.clone()).or_insert(slot);
            if let (Some(k), Some(f)) = (slot, first) {
                if mode == EmergingMode::NewInPeriod || f == k {
                    *counts[k].entry(tok).or_default() += 1;
                }
            }
        }
    }
    Ok(intervals
        .into_iter()
        .zip(counts)
        .map(|(interval, c)| {
            let mut words: Vec<(String, u64)> = c.into_iter().collect();
            words.sort_by(|a, b| b.1.cmp(&a.1).then_with(|| a.0.cmp(&b.0)));
            words.truncate(top_n);
            EmergingInterval { label: interval_label(&interval), interval, words }
        })
        .collect())
}

/// Side-by-side `word, freq` column pairs, one pair per interval.
pub fn emerging_csv(intervals: &[EmergingInterval]) -> String {
    let header: Vec<String> = intervals.iter().flat_map(|iv| [format!("{} word", iv.label), format!("{} freq", iv.label)]).collect();
    let mut out = header.join(",") + "\n";
    let rows = intervals.iter().map(|iv| iv.words.len()).max().unwrap_or(0);
    for r in 0..rows {
        let cells: Vec<String> = intervals
            .iter()
            .flat_map(|iv| match iv.words.get(r) {
                Some((w, f)) => [w.clone(), f.to_string()],
                None => [String::new(), String::new()],
            })
            .collect();
        let _ = writeln!(out, "{}", cells.join(","));
    }
    out
}
