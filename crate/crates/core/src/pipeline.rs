//! Fit-on-train, evaluate-anywhere text classification pipeline.

use crate::corpus::Corpus;
use crate::model::{evaluate, train, Metrics, ModelError, Predictions, TrainHyperparams, TrainedModel};
use crate::textprep::{build_feature_space, id_digest, vectorize, FeatureParams, FeatureSpace, Normalizer, NormalizerConfig, TextError};
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum PipelineError {
    #[error(transparent)]
    Text(#[from] TextError),
    #[error(transparent)]
    Model(#[from] ModelError),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
#[serde(default)]
pub struct PipelineConfig {
    pub normalizer: NormalizerConfig,
    pub features: FeatureParams,
    pub hyperparams: TrainHyperparams,
}

/// A feature space and model fit on one training corpus.
#[derive(Debug, Clone)]
pub struct FittedPipeline {
    normalizer: Normalizer,
    feature_space: FeatureSpace,
    model: TrainedModel,
    train_ids_digest: String,
}

impl FittedPipeline {
    pub fn fit(train_corpus: &Corpus, cfg: &PipelineConfig) -> Result<Self, PipelineError> {
        Self::fit_with(train_corpus, Normalizer::new(cfg.normalizer.clone()), cfg.features, &cfg.hyperparams)
    }

    pub fn fit_with(train_corpus: &Corpus, normalizer: Normalizer, features: FeatureParams, hp: &TrainHyperparams) -> Result<Self, PipelineError> {
        let feature_space = build_feature_space(train_corpus, &normalizer, features)?;
        let matrix = vectorize(train_corpus, &feature_space, &normalizer)?;
        let model = train(&matrix, hp)?;
        Ok(Self { normalizer, feature_space, model, train_ids_digest: id_digest(train_corpus.records().iter().map(|r| &r.id)) })
    }

    pub fn feature_space(&self) -> &FeatureSpace {
        &self.feature_space
    }

    pub fn model(&self) -> &TrainedModel {
        &self.model
    }

    pub fn normalizer(&self) -> &Normalizer {
        &self.normalizer
    }

    pub fn train_ids_digest(&self) -> &str {
        &self.train_ids_digest
    }

    pub fn predict(&self, corpus: &Corpus) -> Result<Predictions, PipelineError> {
        let m = vectorize(corpus, &self.feature_space, &self.normalizer)?;
        Ok(self.model.predict(&m)?)
    }

    pub fn evaluate(&self, corpus: &Corpus) -> Result<Metrics, PipelineError> {
        let p = self.predict(corpus)?;
        Ok(evaluate(&p.labels, &corpus.labels())?)
    }

    /// Fraction of `corpus` documents with at least one in-vocabulary term.
    pub fn coverage(&self, corpus: &Corpus) -> Result<f64, PipelineError> {
        Ok(vectorize(corpus, &self.feature_space, &self.normalizer)?.coverage())
    }
}
