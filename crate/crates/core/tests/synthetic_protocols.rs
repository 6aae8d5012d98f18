//! Protocol behaviour on generated streams with known drift.

mod common;

use common::at;
use drifteval::corpus::{ingest_csv, Corpus};
use drifteval::driftstats::{spearman, tfidf_rank_list, Alignment, RankOptions};
use drifteval::pipeline::{FittedPipeline, PipelineConfig};
use drifteval::protocols::*;
use drifteval::synthgen::*;
use drifteval::textprep::{Normalizer, NormalizerConfig};
use drifteval::time::add_months;
use std::path::Path;

fn shipped(name: &str) -> DriftSpec {
    DriftSpec::from_path(&Path::new(env!("CARGO_MANIFEST_DIR")).join(format!("data/specs/{name}.json"))).unwrap()
}

fn small(name: &str, n: usize) -> DriftSpec {
    DriftSpec { n_comments: n, ..shipped(name) }
}

fn halves_spearman(c: &Corpus, mid: drifteval::time::Timestamp, alignment: Alignment) -> f64 {
    let normalizer = Normalizer::new(NormalizerConfig::default());
    let opts = RankOptions::default();
    let a = tfidf_rank_list(&c.slice_by_time(at(2000, 1, 1), mid), &normalizer, &opts).unwrap();
    let b = tfidf_rank_list(&c.slice_by_time(mid, at(2100, 1, 1)), &normalizer, &opts).unwrap();
    spearman(&a, &b, alignment).unwrap()
}

#[test]
fn shipped_specs_are_valid() {
    for name in ["stationary", "gradual", "gradual_burst"] {
        shipped(name).validate().unwrap();
    }
}

#[test]
fn control_draws_its_share_from_the_evaluation_period() {
    let c = generate(&small("stationary", 12_000)).unwrap().undersample_balanced(1).unwrap();
    let s = build_split_datasets(&c, at(2019, 11, 1), 1).unwrap();
    let comp = s.composition();
    // 8 of 20 uniformly populated months
    assert!((comp.control_from_evaluation_fraction - 0.4).abs() < 0.03, "{}", comp.control_from_evaluation_fraction);
    let report = run_split_experiment(&s, &PipelineConfig::default()).unwrap();
    assert_eq!(report.months.len(), 8);
    assert_eq!(report.monthly_csv().lines().count(), 9);
    assert_eq!(report.months.iter().map(|m| m.n).sum::<usize>(), s.evaluation.len());
}

#[test]
fn drift_favours_the_control_arm() {
    let c = generate(&small("gradual_burst", 20_000)).unwrap().undersample_balanced(2).unwrap();
    let s = build_split_datasets(&c, at(2019, 11, 1), 2).unwrap();
    let r = run_split_experiment(&s, &PipelineConfig::default()).unwrap();
    assert!(r.control.overall.f1() > r.time_stratified.overall.f1());
    assert!(r.control.evaluation_coverage >= r.time_stratified.evaluation_coverage);
    let self_test = run_split_experiment_with(&s, &PipelineConfig::default(), EvaluationMode::SelfTest).unwrap();
    assert!(self_test.self_test);
}

#[test]
fn stationary_degradation_is_symmetric() {
    let c = generate(&small("stationary", 12_000)).unwrap().undersample_balanced(3).unwrap();
    let chunks = build_chunks(&c, 2, 3).unwrap();
    let m = run_degradation_matrix(&chunks, &PipelineConfig::default(), 3).unwrap();
    assert!((m.f1[0][1] - m.f1[1][0]).abs() <= 0.05, "{:?}", m.f1);
    assert!(m.diagonal.iter().all(|d| d.disjoint));
}

#[test]
fn stationary_halves_share_their_vocabulary_ranking() {
    let c = generate(&shipped("stationary")).unwrap();
    let rho = halves_spearman(&c, at(2019, 9, 1), Alignment::Intersection);
    assert!(rho >= 0.95, "{rho}");
}

#[test]
fn stronger_bursts_never_raise_cross_event_correlation() {
    let mut spec = small("stationary", 12_000);
    let event = at(2019, 9, 1);
    let mut last = f64::INFINITY;
    for intensity in [0.0, 0.25, 0.5, 1.0, 2.0, 4.0] {
        spec.events =
            vec![BurstEvent { at: event, pool: WordPool::Generated { tag: "burst".into(), size: 40 }, kind: TokenKind::Clean, intensity, decay_days: None }];
        // burst words are absent before the event, so only union alignment sees them
        let rho = halves_spearman(&generate(&spec).unwrap(), event, Alignment::Union);
        assert!(rho <= last + 0.01, "intensity {intensity}: {rho} > {last}");
        last = rho;
    }
}

#[test]
fn sliding_window_cells_equal_direct_fits() {
    let c = generate(&small("gradual", 6_000)).unwrap().undersample_balanced(4).unwrap();
    let cfg = PipelineConfig::default();
    let periods = run_sliding_window(&c, 4, 2, &cfg).unwrap();
    assert_eq!(periods.len(), 8);
    for p in periods.iter().step_by(3) {
        let direct = FittedPipeline::fit(&c.slice(p.train), &cfg).unwrap().evaluate(&c.slice(p.eval)).unwrap();
        assert_eq!(direct, p.metrics);
        assert_eq!(p.train.end, p.eval.start);
    }
}

#[test]
fn sliding_window_beats_a_frozen_model_under_drift() {
    let c = generate(&small("gradual", 12_000)).unwrap().undersample_balanced(5).unwrap();
    let cfg = PipelineConfig::default();
    let sliding = run_sliding_window(&c, 4, 2, &cfg).unwrap();
    let frozen = run_static_window(&c, 4, 2, &cfg).unwrap();
    assert_eq!(sliding.len(), frozen.len());
    assert_eq!(sliding[0].metrics, frozen[0].metrics);
    let mean = |v: &[PeriodMetrics]| v.iter().map(|p| p.metrics.f1()).sum::<f64>() / v.len() as f64;
    assert!(mean(&sliding) > mean(&frozen) + 0.02, "{} vs {}", mean(&sliding), mean(&frozen));
}

#[test]
fn training_accuracy_beats_the_majority_baseline() {
    for name in ["stationary", "gradual", "gradual_burst"] {
        let c = generate(&small(name, 6_000)).unwrap().undersample_balanced(6).unwrap();
        let f = FittedPipeline::fit(&c, &PipelineConfig::default()).unwrap();
        let m = f.evaluate(&c).unwrap();
        assert!(m.accuracy >= drifteval::model::majority_baseline(&c.labels()), "{name}");
    }
}

#[test]
fn generated_corpora_round_trip_through_csv() {
    let c = generate(&small("gradual_burst", 3_000)).unwrap();
    let mut buf = Vec::new();
    c.write_csv(&mut buf).unwrap();
    let back = ingest_csv(buf.as_slice(), true).unwrap();
    assert_eq!(back.corpus, c);
    assert_eq!(back.summary.total, 3_000);
}

#[test]
fn zero_drift_prior_stays_in_binomial_bounds() {
    let spec = small("stationary", 20_000);
    let d = validate_drift(&generate(&spec).unwrap(), &spec);
    assert_eq!(d.monthly.len(), 20);
    for m in &d.monthly {
        assert!(m.within_3_sigma, "{m:?}");
        assert!((m.target - 0.3).abs() < 1e-12);
    }
    for b in &d.density_buckets {
        assert!(b.within_3_sigma, "{b:?}");
    }
}

#[test]
fn constant_half_prior_realizes_near_half() {
    let mut spec = stationary_spec(at(2019, 1, 1), at(2020, 1, 1), 10_000, 9);
    spec.class_prior = Curve::Constant(0.5);
    spec.abusive_rate = AbusiveRate { accepted: 0.0, rejected: 1.0 };
    spec.label_rule = LabelRule { threshold: 0.5, noise: 0.0 };
    let c = generate(&spec).unwrap();
    let rate = c.class_counts().rejection_rate();
    // 0.03 is six binomial standard deviations at n = 10,000
    assert!((0.47..=0.53).contains(&rate), "{rate}");
    assert!((spec.expected_rejection(0.3) - 0.5).abs() < 1e-12);
}

#[test]
fn label_drift_moves_the_rejection_rate() {
    let mut spec = stationary_spec(at(2019, 1, 1), at(2020, 1, 1), 20_000, 10);
    spec.label_drift = Some(Curve::Points(vec![[0.0, -0.1], [1.0, 0.2]]));
    let c = generate(&spec).unwrap();
    let d = validate_drift(&c, &spec);
    let (first, last) = (&d.monthly[0], &d.monthly[11]);
    assert!(first.realized > last.realized + 0.05, "{} vs {}", first.realized, last.realized);
    assert!(d.monthly.iter().all(|m| m.within_3_sigma));
    assert!(d.density_buckets.iter().all(|b| b.within_3_sigma));
}

#[test]
fn burst_diagnostics_show_the_event() {
    let spec = small("gradual_burst", 10_000);
    let c = generate(&spec).unwrap();
    let d = validate_drift(&c, &spec);
    assert_eq!(d.bursts.len(), 2);
    for b in &d.bursts {
        assert_eq!(b.total_before, 0);
        assert!(b.words.values().all(|&(_, after)| after > 0));
        assert!(b.js_divergence > 0.0);
    }
    assert_eq!(d.bursts[0].at, add_months(at(2020, 1, 1), 2));
}
