use std::sync::Arc;

use serde_json::{json, Value};

use super::{Encoder, EncoderEndpointConfig, EndpointKind, EndpointMode, DEFAULT_DENSE_DIM};
use crate::error::{Error, Result};
use crate::http::{post_json, EndpointSettings, HttpFailure, InflightLimiter};
use crate::model::SparseVector;

/// HTTP-backed encoder. Every endpoint takes `{"text", "image_refs"}` and
/// answers `{"vector"}`, `{"description"}` or `{"terms"}` respectively.
#[derive(Debug, Clone)]
pub struct RemoteEncoder {
    dense: EndpointSettings,
    describe: EndpointSettings,
    sparse: EndpointSettings,
    dim: usize,
    limiter: Arc<InflightLimiter>,
}

fn settings(cfg: &EncoderEndpointConfig, want: EndpointKind) -> Result<EndpointSettings> {
    cfg.validate()?;
    if cfg.kind != want || cfg.mode != EndpointMode::Remote {
        return Err(Error::validation(
            "kind",
            format!("expected a remote {want:?} endpoint, got {:?} {:?}", cfg.mode, cfg.kind),
        ));
    }
    Ok(EndpointSettings {
        url: cfg.base_url.clone().unwrap_or_default(),
        timeout_ms: cfg.timeout_ms,
        max_retries: cfg.max_retries,
    })
}

fn unavailable(f: HttpFailure) -> Error {
    match f {
        HttpFailure::NotFound(m) | HttpFailure::Unavailable(m) => Error::EncoderUnavailable(m),
    }
}

impl RemoteEncoder {
    pub fn new(
        dense: &EncoderEndpointConfig,
        describe: &EncoderEndpointConfig,
        sparse: &EncoderEndpointConfig,
        dim: usize,
        limiter: Arc<InflightLimiter>,
    ) -> Result<Self> {
        if dim == 0 {
            return Err(Error::validation("dense_dim", "must be positive"));
        }
        Ok(Self {
            dense: settings(dense, EndpointKind::Dense)?,
            describe: settings(describe, EndpointKind::Describe)?,
            sparse: settings(sparse, EndpointKind::Sparse)?,
            dim,
            limiter,
        })
    }

    /// Reads `JARVIS_DENSE_URL`, `JARVIS_DESCRIBE_URL` and `JARVIS_SPARSE_URL`.
    pub fn from_env(limiter: Arc<InflightLimiter>) -> Result<Self> {
        Self::new(
            &EncoderEndpointConfig::remote_from_env(EndpointKind::Dense)?,
            &EncoderEndpointConfig::remote_from_env(EndpointKind::Describe)?,
            &EncoderEndpointConfig::remote_from_env(EndpointKind::Sparse)?,
            DEFAULT_DENSE_DIM,
            limiter,
        )
    }

    pub fn with_dimension(mut self, dim: usize) -> Self {
        self.dim = dim;
        self
    }

    fn call(&self, endpoint: &EndpointSettings, text: &str, image_refs: &[String]) -> Result<Value> {
        post_json(
            endpoint,
            &json!({ "text": text, "image_refs": image_refs }),
            &self.limiter,
        )
        .map_err(unavailable)
    }
}

fn bad_reply(what: &str) -> Error {
    Error::EncoderUnavailable(format!("malformed encoder reply: {what}"))
}

impl Encoder for RemoteEncoder {
    fn dimension(&self) -> usize {
        self.dim
    }

    fn embed_dense(&self, text: &str, image_refs: &[String]) -> Result<Vec<f32>> {
        if text.is_empty() && image_refs.is_empty() {
            return Err(Error::validation("text", "empty input: no text and no images"));
        }
        let reply = self.call(&self.dense, text, image_refs)?;
        let raw = reply
            .get("vector")
            .and_then(Value::as_array)
            .ok_or_else(|| bad_reply("missing vector"))?;
        let values: Vec<f64> = raw
            .iter()
            .map(|v| v.as_f64().filter(|x| x.is_finite()))
            .collect::<Option<_>>()
            .ok_or_else(|| bad_reply("non-numeric vector entry"))?;
        if values.len() != self.dim {
            return Err(bad_reply(&format!(
                "vector has {} dimensions, expected {}",
                values.len(),
                self.dim
            )));
        }
        // Renormalize so callers always see unit vectors.
        let norm = values.iter().map(|x| x * x).sum::<f64>().sqrt();
        if norm == 0.0 || !norm.is_finite() {
            return Err(bad_reply("zero vector"));
        }
        Ok(values.iter().map(|x| (x / norm) as f32).collect())
    }

    fn describe_image(&self, image_ref: &str) -> Result<String> {
        let reply = post_json(
            &self.describe,
            &json!({ "text": "", "image_refs": [image_ref] }),
            &self.limiter,
        )
        .map_err(|f| match f {
            HttpFailure::NotFound(_) => Error::MissingImage(image_ref.to_string()),
            other => unavailable(other),
        })?;
        match reply.get("description").and_then(Value::as_str) {
            Some(d) if !d.trim().is_empty() => Ok(d.to_string()),
            _ => Err(bad_reply("missing description")),
        }
    }

    fn embed_sparse(&self, augmented_text: &str) -> Result<SparseVector> {
        if augmented_text.is_empty() {
            return Err(Error::validation("augmented_text", "empty input"));
        }
        let reply = self.call(&self.sparse, augmented_text, &[])?;
        let terms = reply
            .get("terms")
            .and_then(Value::as_object)
            .ok_or_else(|| bad_reply("missing terms"))?;
        terms
            .iter()
            .map(|(t, w)| match w.as_f64() {
                Some(w) if w.is_finite() && w >= 0.0 => Ok((t.clone(), w)),
                _ => Err(bad_reply(&format!("bad weight for {t:?}"))),
            })
            .collect()
    }
}
