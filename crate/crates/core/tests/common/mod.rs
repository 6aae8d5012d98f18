//! Independent brute-force oracles and random corpus builders shared by the
//! integration and acceptance tests. Nothing here calls into the code under
//! test except to construct inputs.
#![allow(dead_code)]

use chrono::{Duration, TimeZone, Utc};
use drifteval::corpus::{CommentRecord, Corpus};
use drifteval::rng::SplitMix64;
use drifteval::time::Timestamp;
use std::collections::{BTreeMap, HashMap};

pub const WORDS: &[&str] = &["alpha", "Beta", "gamma", "delta", "eps", "zeta", "eta", "theta", "iota", "kappa", "lambda", "mu", "nu", "xi"];
const SEPARATORS: &[&str] = &[" ", "  ", ", ", "! ", " 42 ", "-", "?\n", " x "];

/// Random text over a tiny vocabulary with punctuation, digits and
/// single-letter noise between words.
pub fn random_text(rng: &mut SplitMix64, max_words: usize) -> String {
    let n = rng.below(max_words as u64 + 1) as usize;
    let mut s = String::new();
    for i in 0..n {
        if i > 0 {
            s.push_str(SEPARATORS[rng.below(SEPARATORS.len() as u64) as usize]);
        }
        s.push_str(WORDS[rng.below(WORDS.len() as u64) as usize]);
    }
    s
}

/// Lowercased maximal alphabetic runs of at least two characters.
pub fn oracle_tokens(text: &str) -> Vec<String> {
    let lower = text.to_lowercase();
    lower.split(|c: char| !c.is_alphabetic()).filter(|t| t.chars().count() >= 2).map(str::to_owned).collect()
}

pub fn oracle_ngrams(tokens: &[String], lo: usize, hi: usize) -> Vec<String> {
    let mut out = Vec::new();
    for n in lo..=hi {
        for start in 0..tokens.len() {
            if start + n <= tokens.len() {
                out.push(tokens[start..start + n].join(" "));
            }
        }
    }
    out
}

pub struct DenseTfidf {
    pub terms: Vec<String>,
    pub idf: Vec<f64>,
    pub rows: Vec<Vec<f64>>,
    pub corpus_freq: Vec<u64>,
}

/// Textbook TF-IDF: vocabulary = n-grams with corpus frequency >= `min_cf`,
/// ordered by (frequency desc, term asc), first `max_terms` kept;
/// idf = ln((1+N)/(1+df)) + 1; raw counts times idf, rows L2-normalized.
pub fn dense_tfidf(docs: &[String], min_cf: u64, max_terms: usize, lo: usize, hi: usize) -> DenseTfidf {
    let grams: Vec<Vec<String>> = docs.iter().map(|d| oracle_ngrams(&oracle_tokens(d), lo, hi)).collect();
    let mut cf: BTreeMap<String, u64> = BTreeMap::new();
    for g in grams.iter().flatten() {
        *cf.entry(g.clone()).or_default() += 1;
    }
    let mut vocab: Vec<(String, u64)> = cf.into_iter().filter(|(_, c)| *c >= min_cf).collect();
    vocab.sort_by(|a, b| b.1.cmp(&a.1).then(a.0.cmp(&b.0)));
    vocab.truncate(max_terms);
    let n = docs.len() as f64;
    let idf: Vec<f64> = vocab
        .iter()
        .map(|(t, _)| {
            let df = grams.iter().filter(|g| g.contains(t)).count() as f64;
            ((1.0 + n) / (1.0 + df)).ln() + 1.0
        })
        .collect();
    let rows = grams
        .iter()
        .map(|g| {
            let mut row: Vec<f64> = vocab.iter().zip(&idf).map(|((t, _), w)| g.iter().filter(|x| *x == t).count() as f64 * w).collect();
            let norm = row.iter().map(|v| v * v).sum::<f64>().sqrt();
            if norm > 0.0 {
                row.iter_mut().for_each(|v| *v /= norm);
            }
            row
        })
        .collect();
    DenseTfidf { corpus_freq: vocab.iter().map(|(_, c)| *c).collect(), terms: vocab.into_iter().map(|(t, _)| t).collect(), idf, rows }
}

/// Aggregate score per term: sum over documents of raw count times idf.
pub fn brute_rank_scores(docs: &[String], min_cf: u64, max_terms: usize) -> Vec<(String, f64)> {
    let d = dense_tfidf(docs, min_cf, max_terms, 1, 1);
    let toks: Vec<Vec<String>> = docs.iter().map(|x| oracle_tokens(x)).collect();
    d.terms
        .iter()
        .zip(&d.idf)
        .map(|(t, w)| {
            let total: f64 = toks.iter().map(|doc| doc.iter().filter(|x| *x == t).count() as f64 * w).sum();
            (t.clone(), total)
        })
        .collect()
}

/// Average ranks by direct counting: 1 + (# strictly larger) + (# ties) / 2.
pub fn brute_ranks(values: &[f64]) -> Vec<f64> {
    values
        .iter()
        .enumerate()
        .map(|(i, x)| {
            let larger = values.iter().filter(|y| *y > x).count() as f64;
            let ties = values.iter().enumerate().filter(|(j, y)| *j != i && *y == x).count() as f64;
            1.0 + larger + ties / 2.0
        })
        .collect()
}

pub fn brute_pearson(x: &[f64], y: &[f64]) -> f64 {
    let n = x.len() as f64;
    let sx: f64 = x.iter().sum();
    let sy: f64 = y.iter().sum();
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| a * b).sum();
    let sxx: f64 = x.iter().map(|a| a * a).sum();
    let syy: f64 = y.iter().map(|b| b * b).sum();
    (n * sxy - sx * sy) / ((n * sxx - sx * sx).sqrt() * (n * syy - sy * sy).sqrt())
}

/// Spearman over the shared vocabulary, re-ranked within it.
pub fn brute_spearman(a: &[(String, f64)], b: &[(String, f64)]) -> f64 {
    let bm: HashMap<&str, f64> = b.iter().map(|(t, s)| (t.as_str(), *s)).collect();
    let shared: Vec<(f64, f64)> = a.iter().filter_map(|(t, s)| bm.get(t.as_str()).map(|v| (*s, *v))).collect();
    let xs: Vec<f64> = shared.iter().map(|p| p.0).collect();
    let ys: Vec<f64> = shared.iter().map(|p| p.1).collect();
    brute_pearson(&brute_ranks(&xs), &brute_ranks(&ys))
}

/// (tp, fp, fn, tn) with 1 as the positive class.
pub fn tally(predicted: &[u8], truth: &[u8]) -> (usize, usize, usize, usize) {
    let mut t = (0, 0, 0, 0);
    for (p, y) in predicted.iter().zip(truth) {
        match (p, y) {
            (1, 1) => t.0 += 1,
            (1, 0) => t.1 += 1,
            (0, 1) => t.2 += 1,
            _ => t.3 += 1,
        }
    }
    t
}

pub fn ratio(a: usize, b: usize) -> f64 {
    if b == 0 {
        0.0
    } else {
        a as f64 / b as f64
    }
}

/// Mean log loss plus `l2/2 |w|^2`, written out from its definition.
pub fn brute_objective(w: &[f64], b: f64, rows: &[Vec<f64>], labels: &[u8], l2: f64) -> f64 {
    let mut loss = 0.0;
    for (x, &y) in rows.iter().zip(labels) {
        let z: f64 = x.iter().zip(w).map(|(a, c)| a * c).sum::<f64>() + b;
        let p = 1.0 / (1.0 + (-z).exp());
        loss -= if y == 1 { p.ln() } else { (1.0 - p).ln() };
    }
    loss / rows.len() as f64 + 0.5 * l2 * w.iter().map(|v| v * v).sum::<f64>()
}

/// Central finite differences of [`brute_objective`]; the last entry is the bias.
pub fn finite_difference_gradient(w: &[f64], b: f64, rows: &[Vec<f64>], labels: &[u8], l2: f64, h: f64) -> Vec<f64> {
    let mut g = Vec::with_capacity(w.len() + 1);
    for i in 0..w.len() {
        let (mut wp, mut wm) = (w.to_vec(), w.to_vec());
        wp[i] += h;
        wm[i] -= h;
        g.push((brute_objective(&wp, b, rows, labels, l2) - brute_objective(&wm, b, rows, labels, l2)) / (2.0 * h));
    }
    g.push((brute_objective(w, b + h, rows, labels, l2) - brute_objective(w, b - h, rows, labels, l2)) / (2.0 * h));
    g
}

pub fn at(y: i32, m: u32, d: u32) -> Timestamp {
    Utc.with_ymd_and_hms(y, m, d, 0, 0, 0).unwrap()
}

/// `n` comments spread uniformly over `months` months from 2019-01, labels
/// rejected with probability `p_rejected`, texts from [`random_text`].
pub fn random_stream(rng: &mut SplitMix64, n: usize, months: u32, p_rejected: f64) -> Corpus {
    let start = at(2019, 1, 1);
    let span = (drifteval::time::add_months(start, months) - start).num_seconds() as u64;
    let records = (0..n)
        .map(|i| {
            let t = start + Duration::seconds(rng.below(span) as i64);
            let text = random_text(rng, 12);
            CommentRecord::new(i as u64 + 1, t, text, rng.bernoulli(p_rejected))
        })
        .collect();
    Corpus::from_records(records).unwrap()
}

/// Corpus of the given texts, one per day from 2019-01-01, alternating labels.
pub fn corpus_of(texts: &[String]) -> Corpus {
    let records =
        texts.iter().enumerate().map(|(i, t)| CommentRecord::new(i as u64 + 1, at(2019, 1, 1) + Duration::days(i as i64), t.clone(), i % 2 == 0)).collect();
    Corpus::from_records(records).unwrap()
}

/// Checks every SplitDatasets invariant and the per-arm no-leak property on
/// one corpus. Returns `Ok(false)` when the protocol rejects the input.
pub fn check_split_protocol(corpus: &Corpus, eval_start: Timestamp, seed: u64, train_models: bool) -> Result<bool, String> {
    use drifteval::protocols::{build_split_datasets, run_split_experiment};
    use drifteval::textprep::id_digest;
    let Ok(s) = build_split_datasets(corpus, eval_start, seed) else {
        return Ok(false);
    };
    let fail = |m: &str| Err(format!("seed {seed}: {m}"));
    if s.control.len() != s.time_stratified.len() {
        return fail("control and time-stratified sizes differ");
    }
    if !s.control.ids().is_disjoint(&s.evaluation.ids()) {
        return fail("control overlaps evaluation");
    }
    if !s.time_stratified.ids().is_disjoint(&s.evaluation.ids()) {
        return fail("time-stratified overlaps evaluation");
    }
    if s.time_stratified.records().iter().any(|r| r.timestamp >= eval_start) {
        return fail("time-stratified comment at or after eval start");
    }
    if s.evaluation.records().iter().any(|r| r.timestamp < eval_start) {
        return fail("evaluation comment before eval start");
    }
    let all = corpus.ids();
    let before: std::collections::BTreeSet<u64> = corpus.records().iter().filter(|r| r.timestamp < eval_start).map(|r| r.id).collect();
    if s.time_stratified.ids() != before {
        return fail("time-stratified set is not the whole pre-evaluation period");
    }
    if !s.control.ids().is_subset(&all) {
        return fail("control contains foreign ids");
    }
    let expected_eval: std::collections::BTreeSet<u64> = all.difference(&before).filter(|id| !s.control.ids().contains(id)).copied().collect();
    if s.evaluation.ids() != expected_eval {
        return fail("evaluation is not the post-start period minus control");
    }
    if train_models {
        let Ok(report) = run_split_experiment(&s, &Default::default()) else {
            return Ok(false);
        };
        for (arm, train) in [(&report.control, &s.control), (&report.time_stratified, &s.time_stratified)] {
            let digest = id_digest(&train.ids());
            if arm.feature_space_fit_ids != digest || arm.train_ids != digest {
                return fail("feature space fit on ids other than the arm's training set");
            }
        }
    }
    Ok(true)
}

/// Degradation matrix audit: diagonal train/test disjoint, feature spaces fit
/// on the training part only. Returns `Ok(false)` when the protocol rejects
/// the input.
pub fn check_degradation_protocol(corpus: &Corpus, k: usize, seed: u64) -> Result<bool, String> {
    use drifteval::protocols::{build_chunks, run_degradation_matrix};
    let Ok(chunks) = build_chunks(corpus, k, seed) else {
        return Ok(false);
    };
    let Ok(m) = run_degradation_matrix(&chunks, &Default::default(), seed) else {
        return Ok(false);
    };
    for (i, a) in m.diagonal.iter().enumerate() {
        if !a.disjoint || a.train_ids == a.test_ids {
            return Err(format!("seed {seed}: chunk {i} diagonal train/test overlap"));
        }
        if a.feature_space_fit_ids != a.train_ids {
            return Err(format!("seed {seed}: chunk {i} feature space leaked test ids"));
        }
        if a.train_size + a.test_size != chunks.chunk_size() {
            return Err(format!("seed {seed}: chunk {i} hold-out sizes do not add up"));
        }
    }
    Ok(true)
}
