//! Service settings and the encoder/adjudicator backends behind it.

use std::path::PathBuf;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use jarvis_core::encoder::{Encoder, EndpointMode, MockEncoder, RemoteEncoder};
use jarvis_core::error::Result;
use jarvis_core::eval::AblationConfig;
use jarvis_core::http::InflightLimiter;
use jarvis_core::pipeline::PipelineConfig;
use jarvis_core::reasoner::{LlmClient, MockRules, RemoteLlm};

pub const DEFAULT_ADJUDICATION_SLOTS: usize = 4;
pub const DEFAULT_SNAPSHOT_EVERY: u64 = 5_000;

#[derive(Debug, Clone)]
pub struct ServiceConfig {
    pub data_dir: PathBuf,
    pub pipeline: PipelineConfig,
    pub mock_rules: MockRules,
    /// Concurrent adjudications allowed through the HTTP API.
    pub adjudication_slots: usize,
    /// A store is compacted into its snapshot after this many log lines.
    pub snapshot_every: u64,
}

impl ServiceConfig {
    pub fn new(data_dir: impl Into<PathBuf>) -> Self {
        Self {
            data_dir: data_dir.into(),
            pipeline: PipelineConfig::default(),
            mock_rules: MockRules::default(),
            adjudication_slots: DEFAULT_ADJUDICATION_SLOTS,
            snapshot_every: DEFAULT_SNAPSHOT_EVERY,
        }
    }
}

/// The model capabilities a service instance calls out to.
#[derive(Clone)]
pub struct Backends {
    pub encoder: Arc<dyn Encoder>,
    /// `None` selects the rule-based mock adjudicator.
    pub llm: Option<Arc<dyn LlmClient>>,
}

impl Backends {
    pub fn mock(dense_dim: usize) -> Self {
        Self {
            encoder: Arc::new(MockEncoder::new(dense_dim)),
            llm: None,
        }
    }

    /// Builds backends for the given modes; remote endpoints are read from
    /// `JARVIS_*_URL` and share one in-flight limiter.
    pub fn from_modes(encoders: EndpointMode, adjudicator: EndpointMode, dense_dim: usize) -> Result<Self> {
        let limiter = Arc::new(InflightLimiter::default());
        let encoder: Arc<dyn Encoder> = match encoders {
            EndpointMode::Mock => Arc::new(MockEncoder::new(dense_dim)),
            EndpointMode::Remote => Arc::new(RemoteEncoder::from_env(Arc::clone(&limiter))?.with_dimension(dense_dim)),
        };
        let llm: Option<Arc<dyn LlmClient>> = match adjudicator {
            EndpointMode::Mock => None,
            EndpointMode::Remote => Some(Arc::new(RemoteLlm::from_env(limiter)?)),
        };
        Ok(Self { encoder, llm })
    }
}

/// Minimum scores an evaluation run must reach; unset bounds are not checked.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct Thresholds {
    pub min_precision: Option<f64>,
    pub min_recall: Option<f64>,
    pub min_f1: Option<f64>,
}

/// Contents of a `--config` file. Every section is optional.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct RunConfig {
    pub pipeline: PipelineConfig,
    pub mock_rules: MockRules,
    pub ablation: Option<AblationConfig>,
    pub thresholds: Thresholds,
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn partial_run_config_fills_defaults() {
        let cfg: RunConfig =
            serde_json::from_str(r#"{"pipeline":{"index":{"lambda":0.7}},"thresholds":{"min_recall":0.85}}"#).unwrap();
        assert_eq!(cfg.pipeline.index.lambda, 0.7);
        assert_eq!(cfg.pipeline.index.k, 25);
        assert_eq!(cfg.thresholds.min_recall, Some(0.85));
        assert_eq!(cfg.thresholds.min_precision, None);
        assert!(cfg.ablation.is_none());
    }
}
