//! Run configuration: every flag can also be set in a TOML or JSON file.
//! Flags win over the file, the file wins over defaults.

use crate::error::{CliError, CliResult};
use drifteval::driftstats::{Alignment, EmergingMode, RankOptions};
use drifteval::pipeline::PipelineConfig;
use drifteval::rng::derive_seed;
use drifteval::textprep::FeatureParams;
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;
use std::path::Path;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub seed: Option<u64>,
    pub strict: bool,
    pub eval_start: Option<String>,
    pub chunks: usize,
    pub period: Option<String>,
    pub group_months: u32,
    pub top: usize,
    pub emerging_mode: EmergingMode,
    pub window_months: u32,
    pub step_months: u32,
    pub alignment: Alignment,
    pub rank_top_k: Option<usize>,
    pub rank_features: FeatureParams,
    pub pipeline: PipelineConfig,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            seed: None,
            strict: false,
            eval_start: None,
            chunks: 5,
            period: None,
            group_months: 2,
            top: 20,
            emerging_mode: EmergingMode::default(),
            window_months: 4,
            step_months: 1,
            alignment: Alignment::default(),
            rank_top_k: None,
            rank_features: RankOptions::default().features,
            pipeline: PipelineConfig::default(),
        }
    }
}

impl RunConfig {
    pub fn load(path: &Path) -> CliResult<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| CliError::Usage(format!("cannot read config {}: {e}", path.display())))?;
        let parsed = if path.extension().is_some_and(|e| e == "json") {
            serde_json::from_str(&text).map_err(|e| e.to_string())
        } else {
            toml::from_str(&text).map_err(|e| e.to_string())
        };
        parsed.map_err(|e| CliError::Usage(format!("invalid config {}: {e}", path.display())))
    }

    pub fn rank_options(&self) -> RankOptions {
        RankOptions { features: self.rank_features, top_k: self.rank_top_k }
    }
}

/// Seeds for every random stage, derived from the single run seed.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct Seeds {
    pub run: u64,
    pub balance: u64,
    pub split: u64,
    pub chunks: u64,
    pub holdout: u64,
    pub training: u64,
}

impl Seeds {
    pub fn derive(run: u64) -> Self {
        Self {
            run,
            balance: derive_seed(run, &[1]),
            split: derive_seed(run, &[2]),
            chunks: derive_seed(run, &[3]),
            holdout: derive_seed(run, &[4]),
            training: derive_seed(run, &[5]),
        }
    }

    pub fn as_map(&self) -> BTreeMap<&'static str, u64> {
        BTreeMap::from([
            ("run", self.run),
            ("balance", self.balance),
            ("split", self.split),
            ("chunks", self.chunks),
            ("holdout", self.holdout),
            ("training", self.training),
        ])
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_round_trip_through_both_formats() {
        let cfg = RunConfig::default();
        let json = serde_json::to_string(&cfg).unwrap();
        assert_eq!(serde_json::from_str::<RunConfig>(&json).unwrap(), cfg);
        let t = toml::to_string(&cfg).unwrap();
        assert_eq!(toml::from_str::<RunConfig>(&t).unwrap(), cfg);
    }

    #[test]
    fn partial_toml_keeps_defaults() {
        let cfg: RunConfig = toml::from_str("seed = 9\nchunks = 4\n[pipeline.hyperparams]\nepochs = 5\n").unwrap();
        assert_eq!(cfg.seed, Some(9));
        assert_eq!(cfg.chunks, 4);
        assert_eq!(cfg.pipeline.hyperparams.epochs, 5);
        assert_eq!(cfg.top, 20);
    }

    #[test]
    fn unknown_keys_are_rejected() {
        assert!(toml::from_str::<RunConfig>("chunkz = 4").is_err());
    }

    #[test]
    fn seeds_differ_per_stage() {
        let s = Seeds::derive(42);
        let mut all: Vec<u64> = s.as_map().values().copied().collect();
        all.sort_unstable();
        all.dedup();
        assert_eq!(all.len(), 6);
        assert_eq!(s, Seeds::derive(42));
    }
}
