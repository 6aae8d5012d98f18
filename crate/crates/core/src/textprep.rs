//! Text normalization and TF-IDF featurization.
//!
//! Weights use raw term counts, smoothed inverse document frequency
//! `idf(t) = ln((1 + n) / (1 + df(t))) + 1` and L2 row normalization.

use crate::corpus::{CommentId, Corpus};
use rayon::prelude::*;
use rust_stemmers::{Algorithm, Stemmer};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use std::collections::{BTreeSet, HashMap};
use std::fmt;
use std::sync::Arc;
use thiserror::Error;

const GERMAN_STOPWORDS: &str = include_str!("../data/stopwords_de.txt");

#[derive(Debug, Error, PartialEq)]
pub enum TextError {
    #[error("empty feature space")]
    EmptyFeatureSpace,
    #[error("cannot fit a feature space on an empty corpus")]
    EmptyCorpus,
    #[error("feature space was built with normalizer {expected}, got {actual}")]
    NormalizerMismatch { expected: String, actual: String },
    #[error("invalid ngram range ({0}, {1})")]
    NgramRange(usize, usize),
}

pub fn sha256_hex(bytes: impl AsRef<[u8]>) -> String {
    hex::encode(Sha256::digest(bytes.as_ref()))
}

/// Hex SHA-256 of the ascending id list, one decimal id per line.
pub fn id_digest<'a>(ids: impl IntoIterator<Item = &'a CommentId>) -> String {
    let sorted: BTreeSet<_> = ids.into_iter().collect();
    let mut h = Sha256::new();
    for id in sorted {
        h.update(id.to_string().as_bytes());
        h.update(b"\n");
    }
    hex::encode(h.finalize())
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct StopwordList {
    pub name: String,
    pub words: BTreeSet<String>,
}

impl StopwordList {
    pub fn empty() -> Self {
        Self { name: "none".into(), words: BTreeSet::new() }
    }

    /// The bundled German list (`data/stopwords_de.txt`).
    pub fn german() -> Self {
        Self::parse("de-v1", GERMAN_STOPWORDS)
    }

    /// One word per line; blank lines and `#` comments are ignored.
    pub fn parse(name: impl Into<String>, text: &str) -> Self {
        let words = text.lines().map(str::trim).filter(|l| !l.is_empty() && !l.starts_with('#')).map(str::to_lowercase).collect();
        Self { name: name.into(), words }
    }

    pub fn from_words<I, S>(name: impl Into<String>, words: I) -> Self
    where
        I: IntoIterator<Item = S>,
        S: AsRef<str>,
    {
        Self { name: name.into(), words: words.into_iter().map(|w| w.as_ref().to_lowercase()).collect() }
    }

    /// SHA-256 over the sorted words, each followed by `\n`.
    pub fn hash(&self) -> String {
        let mut h = Sha256::new();
        for w in &self.words {
            h.update(w.as_bytes());
            h.update(b"\n");
        }
        hex::encode(h.finalize())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StemmerKind {
    None,
    /// Snowball German.
    German,
    /// Snowball English (Porter2).
    English,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default)]
pub struct NormalizerConfig {
    pub lowercase: bool,
    pub stopwords: StopwordList,
    pub stemmer: StemmerKind,
    /// Tokens are maximal runs of alphabetic characters at least this long.
    pub min_token_len: usize,
}

impl Default for NormalizerConfig {
    fn default() -> Self {
        Self { lowercase: true, stopwords: StopwordList::german(), stemmer: StemmerKind::German, min_token_len: 2 }
    }
}

impl NormalizerConfig {
    pub fn plain() -> Self {
        Self { lowercase: true, stopwords: StopwordList::empty(), stemmer: StemmerKind::None, min_token_len: 2 }
    }

    pub fn fingerprint(&self) -> String {
        sha256_hex(serde_json::to_vec(self).expect("config serializes"))
    }
}

type TokenMapFn = dyn Fn(&str) -> String + Send + Sync;

#[derive(Clone)]
enum TokenMap {
    Identity,
    Snowball(Arc<Stemmer>),
    Custom { name: String, f: Arc<TokenMapFn> },
}

/// Applies a [`NormalizerConfig`]: lowercase, tokenize, drop stopwords, stem.
#[derive(Clone)]
pub struct Normalizer {
    config: NormalizerConfig,
    map: TokenMap,
    fingerprint: String,
}

impl fmt::Debug for Normalizer {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Normalizer").field("config", &self.config).field("fingerprint", &self.fingerprint).finish()
    }
}

impl Normalizer {
    pub fn new(config: NormalizerConfig) -> Self {
        let map = match config.stemmer {
            StemmerKind::None => TokenMap::Identity,
            StemmerKind::German => TokenMap::Snowball(Arc::new(Stemmer::create(Algorithm::German))),
            StemmerKind::English => TokenMap::Snowball(Arc::new(Stemmer::create(Algorithm::English))),
        };
        let fingerprint = config.fingerprint();
        Self { config, map, fingerprint }
    }

    /// Replaces the stemmer with an arbitrary token mapping. `name` becomes
    /// part of the fingerprint, so it should identify the mapping uniquely.
    pub fn with_token_map<F>(config: NormalizerConfig, name: impl Into<String>, f: F) -> Self
    where
        F: Fn(&str) -> String + Send + Sync + 'static,
    {
        let name = name.into();
        let fingerprint = sha256_hex(format!("{}+{}", config.fingerprint(), name));
        Self { config, map: TokenMap::Custom { name, f: Arc::new(f) }, fingerprint }
    }

    pub fn config(&self) -> &NormalizerConfig {
        &self.config
    }

    pub fn fingerprint(&self) -> &str {
        &self.fingerprint
    }

    pub fn token_map_name(&self) -> &str {
        match &self.map {
            TokenMap::Identity => "identity",
            TokenMap::Snowball(_) => match self.config.stemmer {
                StemmerKind::English => "snowball-english",
                _ => "snowball-german",
            },
            TokenMap::Custom { name, .. } => name,
        }
    }

    pub fn normalize(&self, text: &str) -> Vec<String> {
        let mut out = Vec::new();
        let mut current = String::new();
        let mut flush = |current: &mut String| {
            if current.is_empty() {
                return;
            }
            let raw = std::mem::take(current);
            let surface = if self.config.lowercase { raw.to_lowercase() } else { raw };
            if surface.chars().count() < self.config.min_token_len || self.config.stopwords.words.contains(&surface) {
                return;
            }
            let token = match &self.map {
                TokenMap::Identity => surface,
                TokenMap::Snowball(s) => s.stem(&surface).into_owned(),
                TokenMap::Custom { f, .. } => f(&surface),
            };
            if !token.is_empty() {
                out.push(token);
            }
        };
        for c in text.chars() {
            if c.is_alphabetic() {
                current.push(c);
            } else {
                flush(&mut current);
            }
        }
        flush(&mut current);
        out
    }
}

/// Contiguous n-grams of `tokens` for every `n` in `lo..=hi`, joined by a space.
pub fn ngrams(tokens: &[String], (lo, hi): (usize, usize)) -> Vec<String> {
    let mut out = Vec::new();
    for n in lo..=hi {
        if n == 0 || n > tokens.len() {
            continue;
        }
        out.extend(tokens.windows(n).map(|w| w.join(" ")));
    }
    out
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default)]
pub struct FeatureParams {
    pub max_terms: usize,
    pub min_corpus_freq: u64,
    pub ngram_range: (usize, usize),
}

impl Default for FeatureParams {
    fn default() -> Self {
        Self { max_terms: 3000, min_corpus_freq: 5, ngram_range: (1, 2) }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
struct FeatureSpaceData {
    terms: Vec<String>,
    doc_freq: Vec<u64>,
    corpus_freq: Vec<u64>,
    idf: Vec<f64>,
    n_docs_fit: usize,
    params: FeatureParams,
    normalizer: String,
    stopwords_hash: String,
    fit_ids_digest: String,
}

/// Frozen vocabulary with document frequencies and IDF weights.
///
/// Column `i` of every vectorized matrix is `terms()[i]`. Terms are ordered by
/// descending corpus frequency, ties broken lexicographically.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(from = "FeatureSpaceData", into = "FeatureSpaceData")]
pub struct FeatureSpace {
    data: FeatureSpaceData,
    index: HashMap<String, usize>,
    fingerprint: String,
}

impl From<FeatureSpaceData> for FeatureSpace {
    fn from(data: FeatureSpaceData) -> Self {
        let index = data.terms.iter().enumerate().map(|(i, t)| (t.clone(), i)).collect();
        let fingerprint = sha256_hex(serde_json::to_vec(&data).expect("feature space serializes"));
        Self { data, index, fingerprint }
    }
}

impl From<FeatureSpace> for FeatureSpaceData {
    fn from(fs: FeatureSpace) -> Self {
        fs.data
    }
}

impl FeatureSpace {
    pub fn len(&self) -> usize {
        self.data.terms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.data.terms.is_empty()
    }

    pub fn terms(&self) -> &[String] {
        &self.data.terms
    }

    pub fn column(&self, term: &str) -> Option<usize> {
        self.index.get(term).copied()
    }

    pub fn doc_freq(&self) -> &[u64] {
        &self.data.doc_freq
    }

    pub fn corpus_freq(&self) -> &[u64] {
        &self.data.corpus_freq
    }

    pub fn idf(&self) -> &[f64] {
        &self.data.idf
    }

    pub fn n_docs_fit(&self) -> usize {
        self.data.n_docs_fit
    }

    pub fn params(&self) -> FeatureParams {
        self.data.params
    }

    pub fn normalizer_fingerprint(&self) -> &str {
        &self.data.normalizer
    }

    pub fn stopwords_hash(&self) -> &str {
        &self.data.stopwords_hash
    }

    /// Digest of the ids of the documents the vocabulary was fit on.
    pub fn fit_ids_digest(&self) -> &str {
        &self.data.fit_ids_digest
    }

    /// SHA-256 of the serialized feature space; binds models to featurization.
    pub fn fingerprint(&self) -> &str {
        &self.fingerprint
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("feature space serializes")
    }

    pub fn from_json(s: &str) -> serde_json::Result<Self> {
        serde_json::from_str(s)
    }
}

/// Counts `(corpus frequency, document frequency)` of every n-gram.
pub(crate) fn count_terms(corpus: &Corpus, normalizer: &Normalizer, range: (usize, usize)) -> HashMap<String, (u64, u64)> {
    corpus
        .records()
        .par_iter()
        .fold(HashMap::new, |mut acc: HashMap<String, (u64, u64)>, r| {
            let grams = ngrams(&normalizer.normalize(&r.text), range);
            let mut local: HashMap<&str, u64> = HashMap::new();
            for g in &grams {
                *local.entry(g).or_default() += 1;
            }
            for (g, c) in local {
                let e = acc.entry(g.to_owned()).or_default();
                e.0 += c;
                e.1 += 1;
            }
            acc
        })
        .reduce(HashMap::new, |mut a, b| {
            for (k, (cf, df)) in b {
                let e = a.entry(k).or_default();
                e.0 += cf;
                e.1 += df;
            }
            a
        })
}

pub fn smoothed_idf(n_docs: usize, doc_freq: u64) -> f64 {
    ((1.0 + n_docs as f64) / (1.0 + doc_freq as f64)).ln() + 1.0
}

pub fn build_feature_space(corpus: &Corpus, normalizer: &Normalizer, params: FeatureParams) -> Result<FeatureSpace, TextError> {
    let (lo, hi) = params.ngram_range;
    if lo == 0 || hi < lo {
        return Err(TextError::NgramRange(lo, hi));
    }
    if corpus.is_empty() {
        return Err(TextError::EmptyCorpus);
    }
    let mut eligible: Vec<(String, u64, u64)> = count_terms(corpus, normalizer, params.ngram_range)
        .into_iter()
        .filter(|(_, (cf, _))| *cf >= params.min_corpus_freq)
        .map(|(t, (cf, df))| (t, cf, df))
        .collect();
    eligible.sort_by(|a, b| b.1.cmp(&a.1).then_with(|| a.0.cmp(&b.0)));
    eligible.truncate(params.max_terms);
    if eligible.is_empty() {
        return Err(TextError::EmptyFeatureSpace);
    }
    let n = corpus.len();
    let data = FeatureSpaceData {
        idf: eligible.iter().map(|e| smoothed_idf(n, e.2)).collect(),
        doc_freq: eligible.iter().map(|e| e.2).collect(),
        corpus_freq: eligible.iter().map(|e| e.1).collect(),
        terms: eligible.into_iter().map(|e| e.0).collect(),
        n_docs_fit: n,
        params,
        normalizer: normalizer.fingerprint().to_owned(),
        stopwords_hash: normalizer.config().stopwords.hash(),
        fit_ids_digest: id_digest(corpus.records().iter().map(|r| &r.id)),
    };
    Ok(FeatureSpace::from(data))
}

/// Sparse row: ascending column indices with their weights.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct SparseRow {
    pub indices: Vec<u32>,
    pub values: Vec<f64>,
}

impl SparseRow {
    pub fn is_empty(&self) -> bool {
        self.indices.is_empty()
    }

    pub fn norm(&self) -> f64 {
        self.values.iter().map(|v| v * v).sum::<f64>().sqrt()
    }

    pub fn dot(&self, dense: &[f64]) -> f64 {
        self.indices.iter().zip(&self.values).map(|(&i, v)| dense[i as usize] * v).sum()
    }

    pub fn to_dense(&self, n_cols: usize) -> Vec<f64> {
        let mut d = vec![0.0; n_cols];
        for (&i, &v) in self.indices.iter().zip(&self.values) {
            d[i as usize] = v;
        }
        d
    }

    pub fn from_dense(dense: &[f64]) -> Self {
        let (indices, values) = dense.iter().enumerate().filter(|(_, v)| **v != 0.0).map(|(i, &v)| (i as u32, v)).unzip();
        Self { indices, values }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DocTermMatrix {
    pub rows: Vec<SparseRow>,
    pub n_cols: usize,
    pub labels: Vec<u8>,
    pub ids: Vec<CommentId>,
    /// Fingerprint of the feature space the columns refer to.
    pub feature_space: String,
}

impl DocTermMatrix {
    /// Assembles a matrix from explicit rows, e.g. for hand-built features.
    pub fn from_dense(rows: &[Vec<f64>], labels: Vec<u8>, feature_space: impl Into<String>) -> Self {
        let n_cols = rows.first().map_or(0, Vec::len);
        assert!(rows.iter().all(|r| r.len() == n_cols), "ragged rows");
        assert_eq!(rows.len(), labels.len(), "labels must align with rows");
        Self {
            rows: rows.iter().map(|r| SparseRow::from_dense(r)).collect(),
            n_cols,
            ids: (0..rows.len() as u64).collect(),
            labels,
            feature_space: feature_space.into(),
        }
    }

    pub fn n_rows(&self) -> usize {
        self.rows.len()
    }

    pub fn empty_rows(&self) -> usize {
        self.rows.iter().filter(|r| r.is_empty()).count()
    }

    /// Fraction of rows with at least one in-vocabulary term.
    pub fn coverage(&self) -> f64 {
        if self.rows.is_empty() {
            return 0.0;
        }
        1.0 - self.empty_rows() as f64 / self.rows.len() as f64
    }
}

/// TF-IDF vectors of `corpus` over a frozen feature space. Out-of-vocabulary
/// n-grams are ignored and rows without any known term stay zero.
pub fn vectorize(corpus: &Corpus, fs: &FeatureSpace, normalizer: &Normalizer) -> Result<DocTermMatrix, TextError> {
    if fs.normalizer_fingerprint() != normalizer.fingerprint() {
        return Err(TextError::NormalizerMismatch { expected: fs.normalizer_fingerprint().to_owned(), actual: normalizer.fingerprint().to_owned() });
    }
    let range = fs.params().ngram_range;
    let rows = corpus
        .records()
        .par_iter()
        .map(|r| {
            let mut counts: HashMap<usize, u64> = HashMap::new();
            for g in ngrams(&normalizer.normalize(&r.text), range) {
                if let Some(c) = fs.column(&g) {
                    *counts.entry(c).or_default() += 1;
                }
            }
            let mut cells: Vec<(usize, f64)> = counts.into_iter().map(|(c, n)| (c, n as f64 * fs.idf()[c])).collect();
            cells.sort_unstable_by_key(|&(c, _)| c);
            let norm = cells.iter().map(|(_, v)| v * v).sum::<f64>().sqrt();
            SparseRow { indices: cells.iter().map(|&(c, _)| c as u32).collect(), values: cells.iter().map(|&(_, v)| v / norm).collect() }
        })
        .collect();
    Ok(DocTermMatrix {
        rows,
        n_cols: fs.len(),
        labels: corpus.labels(),
        ids: corpus.records().iter().map(|r| r.id).collect(),
        feature_space: fs.fingerprint().to_owned(),
    })
}
