//! Temporal evaluation protocols.
//!
//! * Time-stratified vs. control split: two equally sized training sets, one
//!   strictly before `eval_start` and one sampled from the whole corpus, both
//!   evaluated on the same later comments.
//! * Degradation matrix: train on one chunk of time, evaluate on every chunk.
//! * Sliding window: periodically retrain on the trailing window only.
//!
//! Sampling seeds are derived per task with [`derive_seed`], so running cells
//! in parallel never changes a result. SGD order comes from the pipeline's
//! `hyperparams.shuffle_seed`.

use crate::corpus::{Corpus, CorpusError};
use crate::model::{holdout_split, Metrics, ModelError};
use crate::pipeline::{FittedPipeline, PipelineConfig, PipelineError};
use crate::rng::derive_seed;
use crate::textprep::id_digest;
use crate::time::{add_months, format_timestamp, month_start, months_between, TimeInterval, Timestamp};
use chrono::Duration;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::fmt::Write as _;
use thiserror::Error;

const CONTROL_STREAM: u64 = 0xC0;
const CHUNK_STREAM: u64 = 0xC4;
const HOLDOUT_FRACTION: f64 = 0.2;

#[derive(Debug, Error)]
pub enum ProtocolError {
    #[error("no comments before evaluation start {0}")]
    NoTrainingPeriod(String),
    #[error("no comments at or after evaluation start {0}")]
    NoEvaluationPeriod(String),
    #[error("evaluation set is empty after excluding control comments")]
    EvaluationExhausted,
    #[error("need at least 2 chunks, got {0}")]
    TooFewChunks(usize),
    #[error("chunk {index} ({interval}) is empty")]
    EmptyChunk { index: usize, interval: String },
    #[error("corpus spans {months} calendar months, too few for {k} chunks")]
    TooManyChunks { k: usize, months: u32 },
    #[error("corpus spans {available} months, need at least {required}")]
    WindowTooLong { required: u32, available: u32 },
    #[error("window and step must be at least one month")]
    ZeroWindow,
    #[error("empty corpus")]
    EmptyCorpus,
    #[error("{arm} arm: {source}")]
    Arm { arm: &'static str, source: PipelineError },
    #[error("cell ({row}, {col}): {source}")]
    Cell { row: usize, col: usize, source: PipelineError },
    #[error("chunk {row} hold-out: {source}")]
    Holdout { row: usize, source: ModelError },
    #[error(transparent)]
    Corpus(#[from] CorpusError),
}

// ---------------------------------------------------------------------------
// Time-stratified vs. control split
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, PartialEq)]
pub struct SplitDatasets {
    pub control: Corpus,
    pub time_stratified: Corpus,
    pub evaluation: Corpus,
    pub eval_start: Timestamp,
    /// Evaluation-period size before control comments were removed.
    pub evaluation_before_exclusion: usize,
}

/// Builds the three datasets in four stages:
/// 1. split at `eval_start` into the time-stratified set and the evaluation set;
/// 2. sample the control set uniformly from the whole corpus, sized like the
///    time-stratified set;
/// 3. remove control comments from the evaluation set;
/// 4. return all three.
///
/// The corpus is expected to be class-balanced already.
pub fn build_split_datasets(corpus: &Corpus, eval_start: Timestamp, seed: u64) -> Result<SplitDatasets, ProtocolError> {
    let (first, last) = corpus.time_span().ok_or(ProtocolError::EmptyCorpus)?;
    let counts = corpus.class_counts();
    if counts.accepted != counts.rejected {
        log::warn!("split corpus is not class-balanced ({} accepted, {} rejected)", counts.accepted, counts.rejected);
    }
    let time_stratified = corpus.slice_by_time(first, eval_start);
    let evaluation = corpus.slice_by_time(eval_start, last + Duration::seconds(1));
    if time_stratified.is_empty() {
        return Err(ProtocolError::NoTrainingPeriod(format_timestamp(eval_start)));
    }
    if evaluation.is_empty() {
        return Err(ProtocolError::NoEvaluationPeriod(format_timestamp(eval_start)));
    }
    let control = corpus.undersample_to_size(time_stratified.len(), derive_seed(seed, &[CONTROL_STREAM]))?;
    let evaluation_before_exclusion = evaluation.len();
    let evaluation = evaluation.exclude(&control.ids());
    if evaluation.is_empty() {
        return Err(ProtocolError::EvaluationExhausted);
    }
    Ok(SplitDatasets { control, time_stratified, evaluation, eval_start, evaluation_before_exclusion })
}

impl SplitDatasets {
    pub fn control_from_evaluation_period(&self) -> usize {
        self.control.records().iter().filter(|r| r.timestamp >= self.eval_start).count()
    }

    pub fn composition(&self) -> SplitComposition {
        let n_from_eval = self.control_from_evaluation_period();
        let all = self.control.merge(&self.time_stratified.exclude(&self.control.ids())).unwrap_or_default();
        let all = all.merge(&self.evaluation).unwrap_or(all);
        let months = all
            .monthly_partitions()
            .into_iter()
            .map(|(month, part)| {
                let ids = part.ids();
                let count = |c: &Corpus| c.records().iter().filter(|r| ids.contains(&r.id)).count();
                MonthComposition { month, control: count(&self.control), time_stratified: count(&self.time_stratified), evaluation: count(&self.evaluation) }
            })
            .collect();
        SplitComposition {
            control: self.control.len(),
            time_stratified: self.time_stratified.len(),
            evaluation: self.evaluation.len(),
            evaluation_before_exclusion: self.evaluation_before_exclusion,
            control_from_evaluation_period: n_from_eval,
            control_from_evaluation_fraction: n_from_eval as f64 / self.control.len().max(1) as f64,
            months,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MonthComposition {
    pub month: String,
    pub control: usize,
    pub time_stratified: usize,
    pub evaluation: usize,
}

/// Dataset sizes overall and per month.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SplitComposition {
    pub control: usize,
    pub time_stratified: usize,
    pub evaluation: usize,
    pub evaluation_before_exclusion: usize,
    pub control_from_evaluation_period: usize,
    pub control_from_evaluation_fraction: f64,
    pub months: Vec<MonthComposition>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ArmSummary {
    pub arm: String,
    pub train_size: usize,
    pub vocabulary_size: usize,
    pub feature_space: String,
    /// Digest of the ids the vocabulary was fit on.
    pub feature_space_fit_ids: String,
    /// Digest of the arm's training ids.
    pub train_ids: String,
    pub evaluation_coverage: f64,
    pub overall: Metrics,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MonthRow {
    pub month: String,
    pub n: usize,
    pub control: Metrics,
    pub time_stratified: Metrics,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SplitReport {
    pub eval_start: String,
    /// Set when each arm was scored on its own training data.
    pub self_test: bool,
    pub composition: SplitComposition,
    pub control: ArmSummary,
    pub time_stratified: ArmSummary,
    pub months: Vec<MonthRow>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum EvaluationMode {
    #[default]
    Evaluation,
    /// Score each arm on its own training corpus. Sanity check only.
    SelfTest,
}

struct ArmRun {
    summary: ArmSummary,
    monthly: Vec<(String, usize, Metrics)>,
}

fn run_arm(name: &'static str, train: &Corpus, eval: &Corpus, cfg: &PipelineConfig) -> Result<ArmRun, ProtocolError> {
    let wrap = |source| ProtocolError::Arm { arm: name, source };
    let fitted = FittedPipeline::fit(train, cfg).map_err(wrap)?;
    let overall = fitted.evaluate(eval).map_err(wrap)?;
    let mut monthly = Vec::new();
    for (month, part) in eval.monthly_partitions() {
        if part.is_empty() {
            continue;
        }
        monthly.push((month, part.len(), fitted.evaluate(&part).map_err(wrap)?));
    }
    let fs = fitted.feature_space();
    Ok(ArmRun {
        summary: ArmSummary {
            arm: name.to_owned(),
            train_size: train.len(),
            vocabulary_size: fs.len(),
            feature_space: fs.fingerprint().to_owned(),
            feature_space_fit_ids: fs.fit_ids_digest().to_owned(),
            train_ids: fitted.train_ids_digest().to_owned(),
            evaluation_coverage: fitted.coverage(eval).map_err(wrap)?,
            overall,
        },
        monthly,
    })
}

/// Trains one model per arm (each with its own vocabulary, fit on that arm's
/// training comments only) and scores both on the evaluation set, overall
/// and per calendar month.
pub fn run_split_experiment(splits: &SplitDatasets, cfg: &PipelineConfig) -> Result<SplitReport, ProtocolError> {
    run_split_experiment_with(splits, cfg, EvaluationMode::Evaluation)
}

pub fn run_split_experiment_with(splits: &SplitDatasets, cfg: &PipelineConfig, mode: EvaluationMode) -> Result<SplitReport, ProtocolError> {
    let self_test = mode == EvaluationMode::SelfTest;
    let (control_eval, ts_eval) = if self_test { (&splits.control, &splits.time_stratified) } else { (&splits.evaluation, &splits.evaluation) };
    let (control, ts) =
        rayon::join(|| run_arm("control", &splits.control, control_eval, cfg), || run_arm("time_stratified", &splits.time_stratified, ts_eval, cfg));
    let (control, ts) = (control?, ts?);
    let months = if self_test {
        Vec::new()
    } else {
        control
            .monthly
            .iter()
            .zip(&ts.monthly)
            .map(|((month, n, c), (_, _, t))| MonthRow { month: month.clone(), n: *n, control: *c, time_stratified: *t })
            .collect()
    };
    Ok(SplitReport {
        eval_start: format_timestamp(splits.eval_start),
        self_test,
        composition: splits.composition(),
        control: control.summary,
        time_stratified: ts.summary,
        months,
    })
}

fn metric_columns(prefix: &str) -> String {
    ["precision", "recall", "f1", "macro_precision", "macro_recall", "macro_f1"].iter().map(|m| format!("{prefix}_{m}")).collect::<Vec<_>>().join(",")
}

fn metric_values(m: &Metrics) -> String {
    format!("{:.6},{:.6},{:.6},{:.6},{:.6},{:.6}", m.rejected.precision, m.rejected.recall, m.rejected.f1, m.macro_precision, m.macro_recall, m.macro_f1)
}

fn long_rows(out: &mut String, period: &str, arm: &str, m: &Metrics) {
    for (name, v) in [
        ("precision", m.rejected.precision),
        ("recall", m.rejected.recall),
        ("f1", m.rejected.f1),
        ("macro_precision", m.macro_precision),
        ("macro_recall", m.macro_recall),
        ("macro_f1", m.macro_f1),
    ] {
        let _ = writeln!(out, "{period},{arm},{name},{v:.6}");
    }
}

impl SplitReport {
    /// One row per evaluation month with precision, recall and F1 for both
    /// arms (rejected-class and macro-averaged).
    pub fn monthly_csv(&self) -> String {
        let mut out = format!("month,n,{},{}\n", metric_columns("control"), metric_columns("time_stratified"));
        for row in &self.months {
            let _ = writeln!(out, "{},{},{},{}", row.month, row.n, metric_values(&row.control), metric_values(&row.time_stratified));
        }
        out
    }

    /// Long format `(month, arm, metric, value)`, including an `overall` period.
    pub fn plot_csv(&self) -> String {
        let mut out = String::from("month,arm,metric,value\n");
        for row in &self.months {
            long_rows(&mut out, &row.month, "control", &row.control);
            long_rows(&mut out, &row.month, "time_stratified", &row.time_stratified);
        }
        long_rows(&mut out, "overall", "control", &self.control.overall);
        long_rows(&mut out, "overall", "time_stratified", &self.time_stratified.overall);
        out
    }
}

// ---------------------------------------------------------------------------
// Chunks and the degradation matrix
// ---------------------------------------------------------------------------

/// Consecutive equal-duration chunks, equalized to a common size.
#[derive(Debug, Clone, PartialEq)]
pub struct ChunkSet {
    pub bounds: Vec<TimeInterval>,
    pub chunks: Vec<Corpus>,
    /// Sizes before equalization.
    pub raw_sizes: Vec<usize>,
}

impl ChunkSet {
    /// Wraps already-built chunks; bounds are each chunk's own time span.
    pub fn from_corpora(chunks: Vec<Corpus>) -> Result<Self, ProtocolError> {
        let mut bounds = Vec::with_capacity(chunks.len());
        for (index, c) in chunks.iter().enumerate() {
            let (a, b) = c.time_span().ok_or(ProtocolError::EmptyChunk { index, interval: "?".into() })?;
            bounds.push(TimeInterval::new(a, b + Duration::seconds(1)));
        }
        let raw_sizes = chunks.iter().map(Corpus::len).collect();
        Ok(Self { bounds, chunks, raw_sizes })
    }

    pub fn len(&self) -> usize {
        self.chunks.len()
    }

    pub fn is_empty(&self) -> bool {
        self.chunks.is_empty()
    }

    pub fn chunk_size(&self) -> usize {
        self.chunks.iter().map(Corpus::len).min().unwrap_or(0)
    }
}

/// Splits `[first, last]` into `k` consecutive intervals of equal duration.
///
/// When the span covers a whole number of calendar months divisible by `k`
/// (first of the first month up to the start of the month after the last
/// record), boundaries fall on month starts; otherwise the span
/// `[first, last + 1s)` is cut into `k` equal numbers of seconds. `k` may not
/// exceed the number of calendar months touched by the span.
pub fn chunk_bounds(first: Timestamp, last: Timestamp, k: usize) -> Result<Vec<TimeInterval>, ProtocolError> {
    if k < 2 {
        return Err(ProtocolError::TooFewChunks(k));
    }
    let m0 = month_start(first);
    let months = months_between(m0, add_months(month_start(last), 1));
    if (months as usize) < k {
        return Err(ProtocolError::TooManyChunks { k, months });
    }
    if (months as usize).is_multiple_of(k) {
        let per = months / k as u32;
        return Ok((0..k as u32).map(|i| TimeInterval::new(add_months(m0, i * per), add_months(m0, (i + 1) * per))).collect());
    }
    let total = (last - first).num_seconds() + 1;
    let at = |i: i64| first + Duration::seconds(total * i / k as i64);
    Ok((0..k as i64).map(|i| TimeInterval::new(at(i), at(i + 1))).collect())
}

/// Slices the corpus into `k` equal-duration chunks and undersamples each to
/// the smallest chunk's size.
pub fn build_chunks(corpus: &Corpus, k: usize, seed: u64) -> Result<ChunkSet, ProtocolError> {
    let (first, last) = corpus.time_span().ok_or(ProtocolError::EmptyCorpus)?;
    let bounds = chunk_bounds(first, last, k)?;
    let raw: Vec<Corpus> = bounds.iter().map(|b| corpus.slice(*b)).collect();
    if let Some(index) = raw.iter().position(Corpus::is_empty) {
        return Err(ProtocolError::EmptyChunk { index, interval: bounds[index].label() });
    }
    let size = raw.iter().map(Corpus::len).min().unwrap_or(0);
    let chunks =
        raw.iter().enumerate().map(|(i, c)| c.undersample_to_size(size, derive_seed(seed, &[CHUNK_STREAM, i as u64]))).collect::<Result<Vec<_>, _>>()?;
    Ok(ChunkSet { bounds, chunks, raw_sizes: raw.iter().map(Corpus::len).collect() })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DiagonalAudit {
    pub train_size: usize,
    pub test_size: usize,
    pub train_ids: String,
    pub test_ids: String,
    pub feature_space_fit_ids: String,
    pub disjoint: bool,
}

/// `f1[i][j]`: rejected-class F1 of the model trained on chunk `i`, scored on
/// chunk `j`. Each row's model is trained on an 80% stratified split of its
/// chunk; the diagonal is scored on the remaining 20%, off-diagonal cells on
/// the full chunk.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DegradationMatrix {
    pub chunk_bounds: Vec<TimeInterval>,
    pub chunk_size: usize,
    pub f1: Vec<Vec<f64>>,
    pub macro_f1: Vec<Vec<f64>>,
    pub metrics: Vec<Vec<Metrics>>,
    pub diagonal: Vec<DiagonalAudit>,
}

pub fn run_degradation_matrix(chunks: &ChunkSet, cfg: &PipelineConfig, seed: u64) -> Result<DegradationMatrix, ProtocolError> {
    let k = chunks.len();
    if k < 2 {
        return Err(ProtocolError::TooFewChunks(k));
    }
    let rows = (0..k)
        .into_par_iter()
        .map(|i| {
            let (train, test) = holdout_split(&chunks.chunks[i], HOLDOUT_FRACTION, derive_seed(seed, &[i as u64, i as u64]))
                .map_err(|source| ProtocolError::Holdout { row: i, source })?;
            let fitted = FittedPipeline::fit(&train, cfg).map_err(|source| ProtocolError::Cell { row: i, col: i, source })?;
            let row = (0..k)
                .map(|j| {
                    let target = if i == j { &test } else { &chunks.chunks[j] };
                    fitted.evaluate(target).map_err(|source| ProtocolError::Cell { row: i, col: j, source })
                })
                .collect::<Result<Vec<_>, _>>()?;
            let train_ids = train.ids();
            let audit = DiagonalAudit {
                train_size: train.len(),
                test_size: test.len(),
                train_ids: id_digest(&train_ids),
                test_ids: id_digest(&test.ids()),
                feature_space_fit_ids: fitted.feature_space().fit_ids_digest().to_owned(),
                disjoint: train_ids.is_disjoint(&test.ids()),
            };
            Ok((row, audit))
        })
        .collect::<Result<Vec<_>, ProtocolError>>()?;
    let (metrics, diagonal): (Vec<Vec<Metrics>>, Vec<DiagonalAudit>) = rows.into_iter().unzip();
    Ok(DegradationMatrix {
        chunk_bounds: chunks.bounds.clone(),
        chunk_size: chunks.chunk_size(),
        f1: metrics.iter().map(|r| r.iter().map(Metrics::f1).collect()).collect(),
        macro_f1: metrics.iter().map(|r| r.iter().map(|m| m.macro_f1).collect()).collect(),
        metrics,
        diagonal,
    })
}

pub fn matrix_csv(labels: &[String], values: &[Vec<f64>]) -> String {
    let mut out = format!("train\\test,{}\n", labels.join(","));
    for (label, row) in labels.iter().zip(values) {
        let cells: Vec<String> = row.iter().map(|v| format!("{v:.6}")).collect();
        let _ = writeln!(out, "{label},{}", cells.join(","));
    }
    out
}

impl DegradationMatrix {
    pub fn labels(&self) -> Vec<String> {
        self.chunk_bounds.iter().map(|b| b.label()).collect()
    }

    pub fn mean_diagonal(&self) -> f64 {
        let k = self.f1.len();
        (0..k).map(|i| self.f1[i][i]).sum::<f64>() / k as f64
    }

    /// Mean of cells with `j > i` (trained earlier, evaluated later).
    pub fn mean_forward(&self) -> f64 {
        let cells: Vec<f64> = self.cells().filter(|&(i, j, _)| j > i).map(|c| c.2).collect();
        cells.iter().sum::<f64>() / cells.len().max(1) as f64
    }

    pub fn mean_off_diagonal(&self) -> f64 {
        let cells: Vec<f64> = self.cells().filter(|&(i, j, _)| i != j).map(|c| c.2).collect();
        cells.iter().sum::<f64>() / cells.len().max(1) as f64
    }

    fn cells(&self) -> impl Iterator<Item = (usize, usize, f64)> + '_ {
        self.f1.iter().enumerate().flat_map(|(i, r)| r.iter().enumerate().map(move |(j, &v)| (i, j, v)))
    }

    pub fn f1_csv(&self) -> String {
        matrix_csv(&self.labels(), &self.f1)
    }
}

// ---------------------------------------------------------------------------
// Sliding window
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PeriodMetrics {
    pub train: TimeInterval,
    pub eval: TimeInterval,
    pub n_train: usize,
    pub n_eval: usize,
    pub metrics: Metrics,
}

fn window_plan(corpus: &Corpus, window_months: u32, step_months: u32) -> Result<Vec<(TimeInterval, TimeInterval)>, ProtocolError> {
    if window_months == 0 || step_months == 0 {
        return Err(ProtocolError::ZeroWindow);
    }
    let (first, last) = corpus.time_span().ok_or(ProtocolError::EmptyCorpus)?;
    let start = month_start(first);
    let available = months_between(start, add_months(month_start(last), 1));
    if available < window_months + step_months {
        return Err(ProtocolError::WindowTooLong { required: window_months + step_months, available });
    }
    let mut plan = Vec::new();
    let mut s = 0;
    loop {
        let train = TimeInterval::new(add_months(start, s * step_months), add_months(start, s * step_months + window_months));
        let eval = TimeInterval::new(train.end, add_months(train.end, step_months));
        if eval.start > last {
            break;
        }
        plan.push((train, eval));
        s += 1;
    }
    Ok(plan)
}

fn score_periods(
    corpus: &Corpus,
    plan: &[(TimeInterval, TimeInterval)],
    cfg: &PipelineConfig,
    static_model: bool,
) -> Result<Vec<PeriodMetrics>, ProtocolError> {
    let fixed = if static_model {
        let (train, _) = plan[0];
        Some((train, FittedPipeline::fit(&corpus.slice(train), cfg).map_err(|source| ProtocolError::Arm { arm: "static", source })?))
    } else {
        None
    };
    let results: Vec<Option<PeriodMetrics>> = plan
        .par_iter()
        .map(|&(train_iv, eval_iv)| {
            let eval = corpus.slice(eval_iv);
            if eval.is_empty() {
                log::warn!("skipping {}: no evaluation comments", eval_iv.label());
                return None;
            }
            let (train_iv, n_train, fitted) = match &fixed {
                Some((iv, f)) => (*iv, corpus.slice(*iv).len(), f.clone()),
                None => {
                    let train = corpus.slice(train_iv);
                    match FittedPipeline::fit(&train, cfg) {
                        Ok(f) => (train_iv, train.len(), f),
                        Err(e) => {
                            log::warn!("skipping window {}: {e}", train_iv.label());
                            return None;
                        }
                    }
                }
            };
            match fitted.evaluate(&eval) {
                Ok(metrics) => Some(PeriodMetrics { train: train_iv, eval: eval_iv, n_train, n_eval: eval.len(), metrics }),
                Err(e) => {
                    log::warn!("skipping {}: {e}", eval_iv.label());
                    None
                }
            }
        })
        .collect();
    Ok(results.into_iter().flatten().collect())
}

/// Retrains on the trailing `window_months` before every `step_months`
/// evaluation period. Windows start at the first calendar month of the
/// corpus; unusable windows or periods are skipped with a warning.
pub fn run_sliding_window(corpus: &Corpus, window_months: u32, step_months: u32, cfg: &PipelineConfig) -> Result<Vec<PeriodMetrics>, ProtocolError> {
    let plan = window_plan(corpus, window_months, step_months)?;
    score_periods(corpus, &plan, cfg, false)
}

/// Baseline for [`run_sliding_window`]: one model trained on the first
/// window, scored on the same evaluation periods.
pub fn run_static_window(corpus: &Corpus, window_months: u32, step_months: u32, cfg: &PipelineConfig) -> Result<Vec<PeriodMetrics>, ProtocolError> {
    let plan = window_plan(corpus, window_months, step_months)?;
    score_periods(corpus, &plan, cfg, true)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::CommentRecord;
    use chrono::{TimeZone, Utc};

    fn ts(y: i32, m: u32, d: u32) -> Timestamp {
        Utc.with_ymd_and_hms(y, m, d, 0, 0, 0).unwrap()
    }

    /// One accepted and one rejected comment per day over `[from, to)`.
    fn daily(from: Timestamp, to: Timestamp) -> Corpus {
        let mut recs = Vec::new();
        let mut t = from;
        let mut id = 0;
        while t < to {
            recs.push(CommentRecord::new(id, t, "gut", false));
            recs.push(CommentRecord::new(id + 1, t + Duration::hours(1), "schlecht", true));
            id += 2;
            t += Duration::days(1);
        }
        Corpus::from_records(recs).unwrap()
    }

    #[test]
    fn twenty_month_split_configuration() {
        let c = daily(ts(2018, 11, 1), ts(2020, 7, 1));
        let s = build_split_datasets(&c, ts(2019, 11, 1), 3).unwrap();
        let (a, b) = s.time_stratified.time_span().unwrap();
        assert_eq!(month_start(a), ts(2018, 11, 1));
        assert_eq!(month_start(b), ts(2019, 10, 1));
        assert_eq!(s.evaluation.monthly_partitions().len(), 8);
        assert_eq!(s.control.len(), s.time_stratified.len());
        assert!(s.control.ids().is_disjoint(&s.evaluation.ids()));
        assert!(s.time_stratified.ids().is_disjoint(&s.evaluation.ids()));
        assert!(s.evaluation.records().iter().all(|r| r.timestamp >= s.eval_start));
    }

    #[test]
    fn split_requires_both_sides() {
        let c = daily(ts(2019, 1, 1), ts(2019, 3, 1));
        assert!(matches!(build_split_datasets(&c, ts(2018, 1, 1), 0), Err(ProtocolError::NoTrainingPeriod(_))));
        assert!(matches!(build_split_datasets(&c, ts(2020, 1, 1), 0), Err(ProtocolError::NoEvaluationPeriod(_))));
    }

    #[test]
    fn calendar_chunks() {
        let b = chunk_bounds(ts(2018, 11, 1), ts(2020, 6, 29), 5).unwrap();
        assert_eq!(b.len(), 5);
        for (i, iv) in b.iter().enumerate() {
            assert_eq!(iv.start, add_months(ts(2018, 11, 1), 4 * i as u32));
            assert_eq!(iv.end, add_months(iv.start, 4));
        }
        assert!(matches!(chunk_bounds(ts(2019, 1, 1), ts(2019, 2, 1), 1), Err(ProtocolError::TooFewChunks(1))));
    }

    #[test]
    fn uniform_two_chunks_have_equal_raw_size() {
        let c = daily(ts(2019, 1, 1), ts(2019, 3, 1));
        let set = build_chunks(&c, 2, 0).unwrap();
        assert!(set.raw_sizes[0].abs_diff(set.raw_sizes[1]) <= 6, "{:?}", set.raw_sizes);
        assert_eq!(set.chunks[0].len(), set.chunks[1].len());
    }

    #[test]
    fn too_many_chunks() {
        let c = daily(ts(2019, 1, 1), ts(2019, 1, 4));
        assert!(matches!(build_chunks(&c, 5, 0), Err(ProtocolError::TooManyChunks { k: 5, months: 1 })));
        let mut recs = daily(ts(2019, 1, 1), ts(2019, 1, 20)).records().to_vec();
        recs.extend(daily(ts(2019, 3, 1), ts(2019, 3, 20)).records().iter().map(|r| CommentRecord { id: r.id + 1000, ..r.clone() }));
        let gap = Corpus::from_records(recs).unwrap();
        assert!(matches!(build_chunks(&gap, 3, 0), Err(ProtocolError::EmptyChunk { index: 1, .. })));
    }

    #[test]
    fn window_plan_covers_corpus() {
        let c = daily(ts(2019, 1, 1), ts(2020, 1, 1));
        let plan = window_plan(&c, 6, 2).unwrap();
        assert_eq!(plan.len(), 3);
        assert_eq!(plan[0].0, TimeInterval::new(ts(2019, 1, 1), ts(2019, 7, 1)));
        assert_eq!(plan[2].1, TimeInterval::new(ts(2019, 11, 1), ts(2020, 1, 1)));
        assert!(matches!(window_plan(&c, 12, 1), Err(ProtocolError::WindowTooLong { .. })));
    }
}
