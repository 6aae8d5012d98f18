//! Synthetic timestamped comment streams with controllable drift.
//!
//! Each comment is a bag of pseudo-words. For a comment posted at time `t`
//! (with `u` its fraction of the span):
//!
//! 1. an intended class is drawn from `class_prior(u)`;
//! 2. a length `L` is drawn uniformly from `length`;
//! 3. each position is abusive with the intended class's `abusive_rate`
//!    (at most `L - 1` abusive tokens, so every comment has content), and the
//!    word comes from the time-weighted mixture of pools of that kind: the
//!    base pool, topic pools and active burst events;
//! 4. the label is drawn from `label_rule` applied to the abusive density
//!    `d = k / L`: rejected with probability `1 - noise` when
//!    `d >= threshold + label_drift(u)`, otherwise with probability `noise`.
//!
//! Changing topic weights or adding bursts moves `p(X)`; `label_drift`
//! moves `p(y | X)`. Words are drawn within a pool with Zipf weights
//! `1 / (rank + 1)^zipf_exponent`.

use crate::corpus::{CommentRecord, Corpus};
use crate::rng::{derive_seed, SplitMix64};
use crate::time::{month_label, Timestamp};
use chrono::{Duration, TimeZone, Utc};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use std::collections::{BTreeMap, HashMap, HashSet};
use std::path::Path;
use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum SynthError {
    #[error("invalid spec field `{field}`: {reason}")]
    InvalidField { field: String, reason: String },
    #[error("cannot read spec: {0}")]
    Read(String),
    #[error("cannot parse spec: {0}")]
    Parse(String),
}

fn invalid(field: impl Into<String>, reason: impl Into<String>) -> SynthError {
    SynthError::InvalidField { field: field.into(), reason: reason.into() }
}

/// A function of the span fraction `u in [0, 1]`: either a constant or a
/// piecewise-linear curve through `[u, value]` points (flat beyond the ends).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Curve {
    Constant(f64),
    Points(Vec<[f64; 2]>),
}

impl Default for Curve {
    fn default() -> Self {
        Curve::Constant(1.0)
    }
}

impl Curve {
    pub fn at(&self, u: f64) -> f64 {
        match self {
            Curve::Constant(v) => *v,
            Curve::Points(p) => {
                let i = p.partition_point(|q| q[0] <= u);
                if i == 0 {
                    p[0][1]
                } else if i == p.len() {
                    p[p.len() - 1][1]
                } else {
                    let ([u0, v0], [u1, v1]) = (p[i - 1], p[i]);
                    if u1 == u0 {
                        v1
                    } else {
                        v0 + (v1 - v0) * (u - u0) / (u1 - u0)
                    }
                }
            }
        }
    }

    /// Extremes over `[0, 1]` (attained at breakpoints or the ends).
    pub fn range(&self) -> (f64, f64) {
        let mut pts = vec![self.at(0.0), self.at(1.0)];
        if let Curve::Points(p) = self {
            pts.extend(p.iter().filter(|q| (0.0..=1.0).contains(&q[0])).map(|q| q[1]));
        }
        pts.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &v| (lo.min(v), hi.max(v)))
    }

    fn validate(&self, field: &str, lo: f64, hi: f64) -> Result<(), SynthError> {
        if let Curve::Points(p) = self {
            if p.is_empty() {
                return Err(invalid(field, "curve needs at least one point"));
            }
            if p.iter().any(|q| !q[0].is_finite() || !q[1].is_finite()) {
                return Err(invalid(field, "non-finite curve point"));
            }
            if p.windows(2).any(|w| w[1][0] < w[0][0]) {
                return Err(invalid(field, "curve points must be sorted by position"));
            }
        }
        let (a, b) = self.range();
        if !a.is_finite() || !b.is_finite() || a < lo || b > hi {
            return Err(invalid(field, format!("values must lie in [{lo}, {hi}], got [{a}, {b}]")));
        }
        Ok(())
    }
}

/// Explicit word list, or `size` generated pseudo-words seeded by `tag`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum WordPool {
    Words(Vec<String>),
    Generated { tag: String, size: usize },
}

const CONSONANTS: &[u8] = b"bdfgklmnprstvz";
const VOWELS: &[u8] = b"aiou";

/// Deterministic pseudo-word: six consonant-vowel syllables. Contains no `e`
/// and ends in a vowel, so Snowball stemmers leave it unchanged.
pub fn pseudo_word(tag: &str, index: usize) -> String {
    let tag_seed = u64::from_le_bytes(Sha256::digest(tag.as_bytes())[..8].try_into().expect("8 bytes"));
    let mut h = derive_seed(tag_seed, &[index as u64]);
    let mut w = String::with_capacity(12);
    for _ in 0..6 {
        let c = (h % CONSONANTS.len() as u64) as usize;
        h /= CONSONANTS.len() as u64;
        let v = (h % VOWELS.len() as u64) as usize;
        h /= VOWELS.len() as u64;
        w.push(CONSONANTS[c] as char);
        w.push(VOWELS[v] as char);
    }
    w
}

impl WordPool {
    pub fn words(&self) -> Vec<String> {
        match self {
            WordPool::Words(w) => w.clone(),
            WordPool::Generated { tag, size } => (0..*size).map(|i| pseudo_word(tag, i)).collect(),
        }
    }

    fn validate(&self, field: &str) -> Result<(), SynthError> {
        let words = self.words();
        if words.is_empty() {
            return Err(invalid(field, "word pool is empty"));
        }
        if let Some(w) = words.iter().find(|w| w.chars().count() < 2 || !w.chars().all(|c| c.is_alphabetic() && !c.is_uppercase())) {
            return Err(invalid(field, format!("`{w}` is not a lowercase alphabetic word of length >= 2")));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TokenKind {
    Clean,
    Abusive,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TopicSpec {
    pub pool: WordPool,
    pub kind: TokenKind,
    /// Mixture weight over time, relative to the base pool of the same kind.
    pub weight: Curve,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BurstEvent {
    pub at: Timestamp,
    pub pool: WordPool,
    pub kind: TokenKind,
    /// Mixture weight from `at` onwards.
    pub intensity: f64,
    /// Optional exponential decay time constant of the weight, in days.
    #[serde(default)]
    pub decay_days: Option<f64>,
}

impl BurstEvent {
    fn weight(&self, t: Timestamp) -> f64 {
        if t < self.at {
            return 0.0;
        }
        match self.decay_days {
            Some(tau) => self.intensity * (-((t - self.at).num_seconds() as f64 / 86_400.0) / tau).exp(),
            None => self.intensity,
        }
    }
}

/// Per-token probability of drawing from the abusive mixture, by intended class.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AbusiveRate {
    pub accepted: f64,
    pub rejected: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LabelRule {
    pub threshold: f64,
    #[serde(default)]
    pub noise: f64,
}

impl LabelRule {
    pub fn probability(&self, density: f64, shift: f64) -> f64 {
        if density >= self.threshold + shift {
            1.0 - self.noise
        } else {
            self.noise
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LengthRange {
    pub min: usize,
    pub max: usize,
}

fn one() -> f64 {
    1.0
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DriftSpec {
    pub start: Timestamp,
    pub end: Timestamp,
    pub n_comments: usize,
    pub seed: u64,
    pub clean_pool: WordPool,
    pub abusive_pool: WordPool,
    /// Weight of both base pools in their mixtures.
    #[serde(default)]
    pub base_weight: Curve,
    #[serde(default)]
    pub topics: Vec<TopicSpec>,
    #[serde(default)]
    pub events: Vec<BurstEvent>,
    pub abusive_rate: AbusiveRate,
    pub label_rule: LabelRule,
    /// Additive shift of the label threshold over time.
    #[serde(default)]
    pub label_drift: Option<Curve>,
    pub class_prior: Curve,
    pub length: LengthRange,
    #[serde(default = "one")]
    pub zipf_exponent: f64,
    /// Relative posting density over time; uniform when absent.
    #[serde(default)]
    pub time_density: Option<Curve>,
}

impl DriftSpec {
    pub fn from_json(s: &str) -> Result<Self, SynthError> {
        serde_json::from_str(s).map_err(|e| SynthError::Parse(e.to_string()))
    }

    pub fn from_toml(s: &str) -> Result<Self, SynthError> {
        toml::from_str(s).map_err(|e| SynthError::Parse(e.to_string()))
    }

    /// Reads JSON, or TOML when the file extension is `.toml`.
    pub fn from_path(path: &Path) -> Result<Self, SynthError> {
        let text = std::fs::read_to_string(path).map_err(|e| SynthError::Read(format!("{}: {e}", path.display())))?;
        if path.extension().is_some_and(|e| e == "toml") {
            Self::from_toml(&text)
        } else {
            Self::from_json(&text)
        }
    }

    pub fn validate(&self) -> Result<(), SynthError> {
        if self.end <= self.start {
            return Err(invalid("end", "must be after start"));
        }
        if self.n_comments == 0 {
            return Err(invalid("n_comments", "must be positive"));
        }
        self.clean_pool.validate("clean_pool")?;
        self.abusive_pool.validate("abusive_pool")?;
        self.base_weight.validate("base_weight", 0.0, f64::INFINITY)?;
        if self.base_weight.range().0 <= 0.0 {
            return Err(invalid("base_weight", "must be positive everywhere"));
        }
        for (i, t) in self.topics.iter().enumerate() {
            t.pool.validate(&format!("topics[{i}].pool"))?;
            t.weight.validate(&format!("topics[{i}].weight"), 0.0, f64::INFINITY)?;
        }
        for (i, e) in self.events.iter().enumerate() {
            e.pool.validate(&format!("events[{i}].pool"))?;
            if !(e.intensity.is_finite() && e.intensity >= 0.0) {
                return Err(invalid(format!("events[{i}].intensity"), "must be finite and non-negative"));
            }
            if e.decay_days.is_some_and(|d| !(d.is_finite() && d > 0.0)) {
                return Err(invalid(format!("events[{i}].decay_days"), "must be positive"));
            }
        }
        for (field, p) in [
            ("abusive_rate.accepted", self.abusive_rate.accepted),
            ("abusive_rate.rejected", self.abusive_rate.rejected),
            ("label_rule.noise", self.label_rule.noise),
        ] {
            if !(0.0..=1.0).contains(&p) {
                return Err(invalid(field, format!("probability {p} outside [0, 1]")));
            }
        }
        if !self.label_rule.threshold.is_finite() {
            return Err(invalid("label_rule.threshold", "must be finite"));
        }
        if let Some(d) = &self.label_drift {
            d.validate("label_drift", f64::NEG_INFINITY, f64::INFINITY)?;
        }
        self.class_prior.validate("class_prior", 0.0, 1.0)?;
        if self.length.min < 2 || self.length.max < self.length.min {
            return Err(invalid("length", "need 2 <= min <= max"));
        }
        if !(self.zipf_exponent.is_finite() && self.zipf_exponent >= 0.0) {
            return Err(invalid("zipf_exponent", "must be finite and non-negative"));
        }
        if let Some(d) = &self.time_density {
            d.validate("time_density", 0.0, f64::INFINITY)?;
            if d.range().1 <= 0.0 {
                return Err(invalid("time_density", "must be positive somewhere"));
            }
        }
        Ok(())
    }

    fn span_seconds(&self) -> i64 {
        (self.end - self.start).num_seconds()
    }

    pub fn fraction(&self, t: Timestamp) -> f64 {
        (t - self.start).num_seconds() as f64 / self.span_seconds() as f64
    }

    fn label_shift(&self, u: f64) -> f64 {
        self.label_drift.as_ref().map_or(0.0, |c| c.at(u))
    }

    /// Probability that a comment posted at span fraction `u` is labeled
    /// rejected, marginalized over class, length and abusive count.
    pub fn expected_rejection(&self, u: f64) -> f64 {
        let prior = self.class_prior.at(u);
        let shift = self.label_shift(u);
        let per_class = |rate: f64| {
            let lengths = self.length.max - self.length.min + 1;
            (self.length.min..=self.length.max)
                .map(|l| {
                    let pmf = capped_binomial(l, rate);
                    pmf.iter().enumerate().map(|(k, p)| p * self.label_rule.probability(k as f64 / l as f64, shift)).sum::<f64>()
                })
                .sum::<f64>()
                / lengths as f64
        };
        prior * per_class(self.abusive_rate.rejected) + (1.0 - prior) * per_class(self.abusive_rate.accepted)
    }

    /// Every word drawn as abusive in some mixture.
    pub fn abusive_words(&self) -> HashSet<String> {
        let mut out: HashSet<String> = self.abusive_pool.words().into_iter().collect();
        for t in self.topics.iter().filter(|t| t.kind == TokenKind::Abusive) {
            out.extend(t.pool.words());
        }
        for e in self.events.iter().filter(|e| e.kind == TokenKind::Abusive) {
            out.extend(e.pool.words());
        }
        out
    }
}

/// Distribution of the abusive count when each of `len` positions is abusive
/// with probability `rate`, capped at `len - 1`.
fn capped_binomial(len: usize, rate: f64) -> Vec<f64> {
    let mut pmf = vec![0.0; len + 1];
    pmf[0] = 1.0;
    for _ in 0..len {
        for k in (0..=len).rev() {
            pmf[k] = pmf[k] * (1.0 - rate) + if k > 0 { pmf[k - 1] * rate } else { 0.0 };
        }
    }
    let top = pmf.pop().unwrap_or(0.0);
    if let Some(last) = pmf.last_mut() {
        *last += top;
    }
    pmf
}

struct Pool {
    words: Vec<String>,
    cumulative: Vec<f64>,
}

impl Pool {
    fn new(pool: &WordPool, zipf: f64) -> Self {
        let words = pool.words();
        let mut acc = 0.0;
        let cumulative = (0..words.len())
            .map(|r| {
                acc += 1.0 / ((r + 1) as f64).powf(zipf);
                acc
            })
            .collect();
        Self { words, cumulative }
    }

    fn draw(&self, rng: &mut SplitMix64) -> &str {
        let total = *self.cumulative.last().expect("pool non-empty");
        let x = rng.next_f64() * total;
        let i = self.cumulative.partition_point(|&c| c <= x).min(self.words.len() - 1);
        &self.words[i]
    }
}

enum Source<'a> {
    Base,
    Topic(&'a Curve),
    Event(&'a BurstEvent),
}

struct Mixture<'a> {
    entries: Vec<(Source<'a>, Pool)>,
}

impl<'a> Mixture<'a> {
    fn new(spec: &'a DriftSpec, kind: TokenKind) -> Self {
        let base = match kind {
            TokenKind::Clean => &spec.clean_pool,
            TokenKind::Abusive => &spec.abusive_pool,
        };
        let mut entries = vec![(Source::Base, Pool::new(base, spec.zipf_exponent))];
        for t in spec.topics.iter().filter(|t| t.kind == kind) {
            entries.push((Source::Topic(&t.weight), Pool::new(&t.pool, spec.zipf_exponent)));
        }
        for e in spec.events.iter().filter(|e| e.kind == kind) {
            entries.push((Source::Event(e), Pool::new(&e.pool, spec.zipf_exponent)));
        }
        Self { entries }
    }

    fn weights(&self, spec: &DriftSpec, t: Timestamp, u: f64) -> Vec<f64> {
        self.entries
            .iter()
            .map(|(s, _)| match s {
                Source::Base => spec.base_weight.at(u),
                Source::Topic(c) => c.at(u).max(0.0),
                Source::Event(e) => e.weight(t),
            })
            .collect()
    }

    fn draw<'p>(&'p self, weights: &[f64], rng: &mut SplitMix64) -> &'p str {
        let total: f64 = weights.iter().sum();
        let mut x = rng.next_f64() * total;
        for ((_, pool), &w) in self.entries.iter().zip(weights) {
            if x < w {
                return pool.draw(rng);
            }
            x -= w;
        }
        self.entries[0].1.draw(rng)
    }
}

fn draw_time(spec: &DriftSpec, rng: &mut SplitMix64) -> Timestamp {
    let span = spec.span_seconds() as u64;
    let at = |rng: &mut SplitMix64| spec.start + Duration::seconds(rng.below(span) as i64);
    match &spec.time_density {
        None => at(rng),
        Some(d) => {
            let peak = d.range().1;
            loop {
                let t = at(rng);
                if rng.next_f64() * peak < d.at(spec.fraction(t)) {
                    return t;
                }
            }
        }
    }
}

/// Generates `spec.n_comments` records. Record `i` draws from its own stream
/// seeded with `derive_seed(seed, [i])`; ids are assigned `1..=n` in
/// `(timestamp, i)` order.
pub fn generate(spec: &DriftSpec) -> Result<Corpus, SynthError> {
    spec.validate()?;
    let clean = Mixture::new(spec, TokenKind::Clean);
    let abusive = Mixture::new(spec, TokenKind::Abusive);
    let mut drafts: Vec<(Timestamp, usize, String, bool)> = (0..spec.n_comments)
        .into_par_iter()
        .map(|i| {
            let mut rng = SplitMix64::new(derive_seed(spec.seed, &[i as u64]));
            let t = draw_time(spec, &mut rng);
            let u = spec.fraction(t);
            let intended = rng.bernoulli(spec.class_prior.at(u));
            let rate = if intended { spec.abusive_rate.rejected } else { spec.abusive_rate.accepted };
            let len = spec.length.min + rng.below((spec.length.max - spec.length.min + 1) as u64) as usize;
            let (wc, wa) = (clean.weights(spec, t, u), abusive.weights(spec, t, u));
            let mut tokens = Vec::with_capacity(len);
            let mut k = 0;
            for _ in 0..len {
                let is_abusive = rng.bernoulli(rate) && k < len - 1;
                if is_abusive {
                    k += 1;
                    tokens.push(abusive.draw(&wa, &mut rng));
                } else {
                    tokens.push(clean.draw(&wc, &mut rng));
                }
            }
            let p = spec.label_rule.probability(k as f64 / len as f64, spec.label_shift(u));
            let rejected = rng.bernoulli(p);
            (t, i, tokens.join(" "), rejected)
        })
        .collect();
    drafts.sort_by_key(|d| (d.0, d.1));
    let records = drafts.into_iter().enumerate().map(|(n, (t, _, text, rejected))| CommentRecord::new(n as u64 + 1, t, text, rejected)).collect();
    Corpus::from_records(records).map_err(|e| invalid("n_comments", e.to_string()))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MonthlyPrior {
    pub month: String,
    pub n: usize,
    pub rejected: usize,
    pub realized: f64,
    /// Mean of `class_prior` at the comments' times.
    pub target: f64,
    /// Mean model-implied rejection probability at the comments' times.
    pub expected: f64,
    /// Binomial standard deviation of the realized rate around `expected`.
    pub sigma: f64,
    pub within_3_sigma: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DensityBucket {
    /// Whether the realized density met the (possibly drifted) threshold.
    pub above_threshold: bool,
    pub n: usize,
    pub rejected: usize,
    pub realized: f64,
    pub expected: f64,
    pub sigma: f64,
    pub within_3_sigma: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BurstDiagnostics {
    pub at: Timestamp,
    /// Pool word -> (occurrences before `at`, occurrences from `at` on).
    pub words: BTreeMap<String, (u64, u64)>,
    pub total_before: u64,
    pub total_after: u64,
    /// Jensen-Shannon divergence (nats) between token distributions before and after `at`.
    pub js_divergence: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DriftDiagnostics {
    pub monthly: Vec<MonthlyPrior>,
    pub density_buckets: Vec<DensityBucket>,
    pub bursts: Vec<BurstDiagnostics>,
}

fn token_distribution<'a>(texts: impl Iterator<Item = &'a str>) -> HashMap<&'a str, f64> {
    let mut counts: HashMap<&str, f64> = HashMap::new();
    for tok in texts.flat_map(str::split_whitespace) {
        *counts.entry(tok).or_default() += 1.0;
    }
    let total: f64 = counts.values().sum();
    counts.values_mut().for_each(|v| *v /= total.max(1.0));
    counts
}

pub fn js_divergence(p: &HashMap<&str, f64>, q: &HashMap<&str, f64>) -> f64 {
    let keys: HashSet<&str> = p.keys().chain(q.keys()).copied().collect();
    let mut js = 0.0;
    for k in keys {
        let (a, b) = (p.get(k).copied().unwrap_or(0.0), q.get(k).copied().unwrap_or(0.0));
        let m = (a + b) / 2.0;
        if a > 0.0 {
            js += 0.5 * a * (a / m).ln();
        }
        if b > 0.0 {
            js += 0.5 * b * (b / m).ln();
        }
    }
    js
}

/// Compares a generated corpus against its spec: monthly class prior, label
/// rule by density bucket, and per-event burst statistics.
pub fn validate_drift(corpus: &Corpus, spec: &DriftSpec) -> DriftDiagnostics {
    let mut months: BTreeMap<String, (usize, usize, f64, f64, f64)> = BTreeMap::new();
    for r in corpus.records() {
        let u = spec.fraction(r.timestamp);
        let p = spec.expected_rejection(u);
        let e = months.entry(month_label(r.timestamp)).or_default();
        e.0 += 1;
        e.1 += usize::from(r.rejected);
        e.2 += spec.class_prior.at(u);
        e.3 += p;
        e.4 += p * (1.0 - p);
    }
    let monthly = months
        .into_iter()
        .map(|(month, (n, rej, target, expected, var))| {
            let nf = n as f64;
            let realized = rej as f64 / nf;
            let sigma = var.sqrt() / nf;
            let expected = expected / nf;
            MonthlyPrior {
                month,
                n,
                rejected: rej,
                realized,
                target: target / nf,
                expected,
                sigma,
                within_3_sigma: (realized - expected).abs() <= 3.0 * sigma + 1e-12,
            }
        })
        .collect();

    let abusive = spec.abusive_words();
    let mut buckets = [(0usize, 0usize, 0.0f64, 0.0f64); 2];
    for r in corpus.records() {
        let toks: Vec<&str> = r.text.split_whitespace().collect();
        if toks.is_empty() {
            continue;
        }
        let d = toks.iter().filter(|t| abusive.contains(**t)).count() as f64 / toks.len() as f64;
        let shift = spec.label_shift(spec.fraction(r.timestamp));
        let above = d >= spec.label_rule.threshold + shift;
        let p = spec.label_rule.probability(d, shift);
        let b = &mut buckets[usize::from(above)];
        b.0 += 1;
        b.1 += usize::from(r.rejected);
        b.2 += p;
        b.3 += p * (1.0 - p);
    }
    let density_buckets = buckets
        .iter()
        .enumerate()
        .filter(|(_, b)| b.0 > 0)
        .map(|(i, &(n, rej, p, var))| {
            let nf = n as f64;
            let realized = rej as f64 / nf;
            let sigma = var.sqrt() / nf;
            DensityBucket {
                above_threshold: i == 1,
                n,
                rejected: rej,
                realized,
                expected: p / nf,
                sigma,
                within_3_sigma: (realized - p / nf).abs() <= 3.0 * sigma + 1e-12,
            }
        })
        .collect();

    let bursts = spec
        .events
        .iter()
        .map(|e| {
            let pool: HashSet<String> = e.pool.words().into_iter().collect();
            let mut words: BTreeMap<String, (u64, u64)> = pool.iter().map(|w| (w.clone(), (0, 0))).collect();
            for r in corpus.records() {
                for tok in r.text.split_whitespace() {
                    if let Some(c) = words.get_mut(tok) {
                        if r.timestamp < e.at {
                            c.0 += 1;
                        } else {
                            c.1 += 1;
                        }
                    }
                }
            }
            let split = corpus.records().partition_point(|r| r.timestamp < e.at);
            let before = token_distribution(corpus.records()[..split].iter().map(|r| r.text.as_str()));
            let after = token_distribution(corpus.records()[split..].iter().map(|r| r.text.as_str()));
            BurstDiagnostics {
                at: e.at,
                total_before: words.values().map(|c| c.0).sum(),
                total_after: words.values().map(|c| c.1).sum(),
                words,
                js_divergence: js_divergence(&before, &after),
            }
        })
        .collect();

    DriftDiagnostics { monthly, density_buckets, bursts }
}

/// A minimal valid spec over `[start, end)`, handy as a starting point.
pub fn stationary_spec(start: Timestamp, end: Timestamp, n_comments: usize, seed: u64) -> DriftSpec {
    DriftSpec {
        start,
        end,
        n_comments,
        seed,
        clean_pool: WordPool::Generated { tag: "clean".into(), size: 300 },
        abusive_pool: WordPool::Generated { tag: "abusive".into(), size: 60 },
        base_weight: Curve::Constant(1.0),
        topics: Vec::new(),
        events: Vec::new(),
        abusive_rate: AbusiveRate { accepted: 0.03, rejected: 0.4 },
        label_rule: LabelRule { threshold: 0.15, noise: 0.05 },
        label_drift: None,
        class_prior: Curve::Constant(0.3),
        length: LengthRange { min: 6, max: 18 },
        zipf_exponent: 1.0,
        time_density: None,
    }
}

/// Midnight UTC on the given date.
pub fn utc_date(y: i32, m: u32, d: u32) -> Timestamp {
    Utc.with_ymd_and_hms(y, m, d, 0, 0, 0).single().expect("valid date")
}
