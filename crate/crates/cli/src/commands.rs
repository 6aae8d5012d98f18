use crate::config::{RunConfig, Seeds};
use crate::error::{CliError, CliResult};
use crate::output::{InputRef, ReportWriter};
use drifteval::corpus::{ingest_csv, Corpus, IngestSummary};
use drifteval::driftstats::{emerging_csv, emerging_words, spearman_matrix};
use drifteval::protocols::{
    build_chunks, build_split_datasets, matrix_csv, run_degradation_matrix, run_sliding_window, run_split_experiment, run_static_window, PeriodMetrics,
};
use drifteval::synthgen::{generate, validate_drift, DriftSpec};
use drifteval::textprep::Normalizer;
use drifteval::time::{format_timestamp, parse_timestamp, TimeInterval, Timestamp};
use serde::Serialize;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};

pub struct Loaded {
    pub corpus: Corpus,
    pub summary: IngestSummary,
    pub input: InputRef,
}

pub fn load(path: &Path, strict: bool) -> CliResult<Loaded> {
    let bytes = std::fs::read(path).map_err(|e| CliError::Data(format!("cannot read {}: {e}", path.display())))?;
    let ingested = ingest_csv(bytes.as_slice(), strict)?;
    if ingested.corpus.is_empty() {
        return Err(CliError::Data(format!("{} contains no usable rows", path.display())));
    }
    Ok(Loaded { corpus: ingested.corpus, summary: ingested.summary, input: InputRef::new(path, &bytes) })
}

/// Accepts anything [`parse_timestamp`] does, plus `YYYY-MM` for a month start.
pub fn parse_instant(s: &str) -> CliResult<Timestamp> {
    parse_timestamp(s).or_else(|| parse_timestamp(&format!("{}-01", s.trim()))).ok_or_else(|| CliError::Usage(format!("cannot parse date `{s}`")))
}

/// `START/END` or `START..END`, end exclusive.
pub fn parse_period(s: &str) -> CliResult<TimeInterval> {
    let (a, b) = s.split_once("..").or_else(|| s.split_once('/')).ok_or_else(|| CliError::Usage(format!("period `{s}` must look like START/END")))?;
    let iv = TimeInterval::new(parse_instant(a)?, parse_instant(b)?);
    if iv.is_empty() {
        return Err(CliError::Usage(format!("period `{s}` is empty")));
    }
    Ok(iv)
}

/// Pipeline config with the training seed taken from the run seed.
fn seeded(cfg: &RunConfig, seeds: &Seeds) -> RunConfig {
    let mut cfg = cfg.clone();
    cfg.seed = Some(seeds.run);
    cfg.pipeline.hyperparams.shuffle_seed = seeds.training;
    cfg
}

fn stopwords_hash(cfg: &RunConfig) -> Option<String> {
    Some(cfg.pipeline.normalizer.stopwords.hash())
}

pub fn ingest(input: &Path, cfg: &RunConfig, out: Option<&Path>) -> CliResult<IngestSummary> {
    let loaded = load(input, cfg.strict)?;
    if let Some(dir) = out {
        let mut w = ReportWriter::new(dir);
        w.json("summary.json", &loaded.summary)?;
        w.finish("ingest", cfg, loaded.input, None, None)?;
    }
    Ok(loaded.summary)
}

pub fn split_eval(input: &Path, cfg: &RunConfig, seeds: &Seeds, out: &Path) -> CliResult<Vec<PathBuf>> {
    let cfg = seeded(cfg, seeds);
    let eval_start = parse_instant(cfg.eval_start.as_deref().ok_or_else(|| CliError::Usage("--eval-start is required".into()))?)?;
    let loaded = load(input, cfg.strict)?;
    let balanced = loaded.corpus.undersample_balanced(seeds.balance)?;
    let splits = build_split_datasets(&balanced, eval_start, seeds.split)?;
    let report = run_split_experiment(&splits, &cfg.pipeline)?;
    log::info!(
        "control F1 {:.4}, time-stratified F1 {:.4} over {} evaluation comments",
        report.control.overall.f1(),
        report.time_stratified.overall.f1(),
        splits.evaluation.len()
    );
    let mut w = ReportWriter::new(out);
    w.text("monthly.csv", report.monthly_csv());
    w.text("plot.csv", report.plot_csv());
    w.json("report.json", &report)?;
    w.finish("split-eval", &cfg, loaded.input, stopwords_hash(&cfg), Some(seeds))
}

#[derive(Serialize)]
struct DegradationReport<'a> {
    chunk_raw_sizes: &'a [usize],
    mean_diagonal: f64,
    mean_forward: f64,
    mean_off_diagonal: f64,
    matrix: &'a drifteval::protocols::DegradationMatrix,
}

pub fn degrade(input: &Path, cfg: &RunConfig, seeds: &Seeds, out: &Path) -> CliResult<Vec<PathBuf>> {
    let cfg = seeded(cfg, seeds);
    let loaded = load(input, cfg.strict)?;
    let balanced = loaded.corpus.undersample_balanced(seeds.balance)?;
    let chunks = build_chunks(&balanced, cfg.chunks, seeds.chunks)?;
    let matrix = run_degradation_matrix(&chunks, &cfg.pipeline, seeds.holdout)?;
    let normalizer = Normalizer::new(cfg.pipeline.normalizer.clone());
    let rho = spearman_matrix(&chunks, &normalizer, &cfg.rank_options(), cfg.alignment)?;
    let labels = matrix.labels();
    let mut plot = String::from("train,test,metric,value\n");
    for (metric, values) in [("f1", &matrix.f1), ("macro_f1", &matrix.macro_f1), ("spearman", &rho.rho)] {
        for (i, row) in values.iter().enumerate() {
            for (j, v) in row.iter().enumerate() {
                let _ = writeln!(plot, "{},{},{metric},{v:.6}", labels[i], labels[j]);
            }
        }
    }
    let mut w = ReportWriter::new(out);
    w.text("f1_matrix.csv", matrix.f1_csv());
    w.text("macro_f1_matrix.csv", matrix_csv(&labels, &matrix.macro_f1));
    w.text("spearman_matrix.csv", rho.csv());
    w.text("plot.csv", plot);
    w.json(
        "degradation.json",
        &DegradationReport {
            chunk_raw_sizes: &chunks.raw_sizes,
            mean_diagonal: matrix.mean_diagonal(),
            mean_forward: matrix.mean_forward(),
            mean_off_diagonal: matrix.mean_off_diagonal(),
            matrix: &matrix,
        },
    )?;
    w.json("spearman.json", &rho)?;
    w.finish("degrade", &cfg, loaded.input, stopwords_hash(&cfg), Some(seeds))
}

pub fn emerging(input: &Path, cfg: &RunConfig, out: &Path) -> CliResult<Vec<PathBuf>> {
    let period = parse_period(cfg.period.as_deref().ok_or_else(|| CliError::Usage("--period is required".into()))?)?;
    if cfg.group_months == 0 || cfg.top == 0 {
        return Err(CliError::Usage("--group-months and --top must be positive".into()));
    }
    let loaded = load(input, cfg.strict)?;
    let normalizer = Normalizer::new(cfg.pipeline.normalizer.clone());
    let intervals = emerging_words(&loaded.corpus, period, &normalizer, cfg.top, cfg.group_months, cfg.emerging_mode)?;
    let mut w = ReportWriter::new(out);
    w.text("emerging.csv", emerging_csv(&intervals));
    w.json("emerging.json", &intervals)?;
    w.finish("emerging", cfg, loaded.input, stopwords_hash(cfg), None)
}

pub fn synth(spec_path: &Path, seed: Option<u64>, out: &Path, diagnostics: bool) -> CliResult<Vec<PathBuf>> {
    let bytes = std::fs::read(spec_path).map_err(|e| CliError::Data(format!("cannot read {}: {e}", spec_path.display())))?;
    let mut spec = DriftSpec::from_path(spec_path)?;
    if let Some(s) = seed {
        spec.seed = s;
    }
    let corpus = generate(&spec)?;
    let mut csv = Vec::new();
    corpus.write_csv(&mut csv)?;
    let name = out.file_name().ok_or_else(|| CliError::Usage(format!("--out {} is not a file path", out.display())))?.to_string_lossy().into_owned();
    let dir = out.parent().map(Path::to_path_buf).unwrap_or_default();
    let mut w = ReportWriter::new(&dir).manifest_name(format!("{name}.manifest.json"));
    w.text(&name, String::from_utf8(csv).map_err(|e| CliError::Internal(e.to_string()))?);
    if diagnostics {
        w.json(&format!("{name}.diagnostics.json"), &validate_drift(&corpus, &spec))?;
    }
    log::info!("generated {} comments ({:.2}% rejected)", corpus.len(), corpus.class_counts().rejection_rate() * 100.0);
    w.finish("synth", &spec, InputRef::new(spec_path, &bytes), None, None)
}

fn window_csv(sliding: &[PeriodMetrics], frozen: &[PeriodMetrics]) -> String {
    let mut s = String::from("train_start,train_end,eval_start,eval_end,strategy,n_train,n_eval,f1,macro_f1,accuracy\n");
    for (name, rows) in [("sliding", sliding), ("static", frozen)] {
        for p in rows {
            let _ = writeln!(
                s,
                "{},{},{},{},{name},{},{},{:.6},{:.6},{:.6}",
                format_timestamp(p.train.start),
                format_timestamp(p.train.end),
                format_timestamp(p.eval.start),
                format_timestamp(p.eval.end),
                p.n_train,
                p.n_eval,
                p.metrics.f1(),
                p.metrics.macro_f1,
                p.metrics.accuracy
            );
        }
    }
    s
}

#[derive(Serialize)]
struct WindowReport<'a> {
    window_months: u32,
    step_months: u32,
    sliding: &'a [PeriodMetrics],
    r#static: &'a [PeriodMetrics],
}

pub fn sliding_window(input: &Path, cfg: &RunConfig, seeds: &Seeds, out: &Path) -> CliResult<Vec<PathBuf>> {
    let cfg = seeded(cfg, seeds);
    let loaded = load(input, cfg.strict)?;
    let balanced = loaded.corpus.undersample_balanced(seeds.balance)?;
    let sliding = run_sliding_window(&balanced, cfg.window_months, cfg.step_months, &cfg.pipeline)?;
    let frozen = run_static_window(&balanced, cfg.window_months, cfg.step_months, &cfg.pipeline)?;
    let mut w = ReportWriter::new(out);
    w.text("windows.csv", window_csv(&sliding, &frozen));
    w.json("windows.json", &WindowReport { window_months: cfg.window_months, step_months: cfg.step_months, sliding: &sliding, r#static: &frozen })?;
    w.finish("sliding-window", &cfg, loaded.input, stopwords_hash(&cfg), Some(seeds))
}
