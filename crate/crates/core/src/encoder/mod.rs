//! Access to the three model capabilities retrieval depends on: a dense
//! multimodal embedder, an image describer and a sparse lexical encoder.
//!
//! Two backends implement [`Encoder`]: [`MockEncoder`], a deterministic
//! offline stand-in, and [`RemoteEncoder`], which speaks the JSON-over-HTTP
//! protocol documented in `docs/protocols.md`.

mod mock;
mod remote;

use serde::{Deserialize, Serialize};

pub use mock::{fold_confusable, hashed_trigram_vector, tokenize, MockEncoder, STOPWORDS};
pub use remote::RemoteEncoder;

use crate::error::{Error, Result};
use crate::model::{EmbeddingRecord, Review, SparseVector, Timestamp};

/// Separator placed before every image description in augmented text.
pub const IMAGE_DELIMITER: &str = "\n[IMAGE] ";

pub const DEFAULT_DENSE_DIM: usize = 256;

pub trait Encoder: Send + Sync {
    /// Length of every vector returned by [`Encoder::embed_dense`].
    fn dimension(&self) -> usize;

    /// Unit-norm joint embedding of a review's text and images.
    fn embed_dense(&self, text: &str, image_refs: &[String]) -> Result<Vec<f32>>;

    fn describe_image(&self, image_ref: &str) -> Result<String>;

    fn embed_sparse(&self, augmented_text: &str) -> Result<SparseVector>;
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EndpointKind {
    Dense,
    Describe,
    Sparse,
    Llm,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EndpointMode {
    Remote,
    #[default]
    Mock,
}

impl std::str::FromStr for EndpointMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "mock" => Ok(EndpointMode::Mock),
            "remote" => Ok(EndpointMode::Remote),
            other => Err(Error::validation(
                "mode",
                format!("expected mock or remote, got {other:?}"),
            )),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct EncoderEndpointConfig {
    pub kind: EndpointKind,
    #[serde(default)]
    pub base_url: Option<String>,
    pub timeout_ms: u64,
    pub max_retries: u32,
    pub mode: EndpointMode,
}

impl EncoderEndpointConfig {
    pub const DEFAULT_TIMEOUT_MS: u64 = 5_000;
    pub const DEFAULT_MAX_RETRIES: u32 = 2;

    pub fn mock(kind: EndpointKind) -> Self {
        Self {
            kind,
            base_url: None,
            timeout_ms: Self::DEFAULT_TIMEOUT_MS,
            max_retries: Self::DEFAULT_MAX_RETRIES,
            mode: EndpointMode::Mock,
        }
    }

    pub fn remote(kind: EndpointKind, base_url: impl Into<String>) -> Self {
        Self {
            base_url: Some(base_url.into()),
            mode: EndpointMode::Remote,
            ..Self::mock(kind)
        }
    }

    /// Environment variable holding the URL for this endpoint kind.
    pub fn env_var(kind: EndpointKind) -> &'static str {
        match kind {
            EndpointKind::Dense => "JARVIS_DENSE_URL",
            EndpointKind::Describe => "JARVIS_DESCRIBE_URL",
            EndpointKind::Sparse => "JARVIS_SPARSE_URL",
            EndpointKind::Llm => "JARVIS_LLM_URL",
        }
    }

    /// Remote config whose URL comes from the environment.
    pub fn remote_from_env(kind: EndpointKind) -> Result<Self> {
        let var = Self::env_var(kind);
        let url = std::env::var(var).map_err(|_| Error::validation("base_url", format!("{var} is not set")))?;
        let cfg = Self::remote(kind, url);
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        if self.timeout_ms < 1 {
            return Err(Error::validation("timeout_ms", "must be >= 1"));
        }
        match (self.mode, &self.base_url) {
            (EndpointMode::Mock, Some(_)) => Err(Error::validation("base_url", "mock mode takes no base_url")),
            (EndpointMode::Remote, None) => Err(Error::validation("base_url", "remote mode requires a base_url")),
            (EndpointMode::Remote, Some(url)) if url.trim().is_empty() => {
                Err(Error::validation("base_url", "must be non-empty"))
            }
            _ => Ok(()),
        }
    }
}

/// `t` alone when there are no images, otherwise `t` followed by one
/// delimiter-prefixed description per image, in `image_refs` order.
pub fn build_augmented_text(encoder: &dyn Encoder, review: &Review) -> Result<String> {
    let mut out = review.text.clone();
    for image_ref in &review.image_refs {
        out.push_str(IMAGE_DELIMITER);
        out.push_str(&encoder.describe_image(image_ref)?);
    }
    Ok(out)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct EmbedOptions {
    /// When false, images are neither described nor embedded.
    pub include_images: bool,
}

impl Default for EmbedOptions {
    fn default() -> Self {
        Self { include_images: true }
    }
}

/// Computes the full [`EmbeddingRecord`] for a review. `indexed_at` is the
/// review's own timestamp, so the index window tracks event time.
pub fn embed_review(encoder: &dyn Encoder, review: &Review, options: EmbedOptions) -> Result<EmbeddingRecord> {
    let (augmented_text, images): (String, &[String]) = if options.include_images {
        (build_augmented_text(encoder, review)?, &review.image_refs)
    } else {
        (review.text.clone(), &[])
    };
    let dense = encoder.embed_dense(&review.text, images)?;
    let sparse = encoder.embed_sparse(&augmented_text)?;
    Ok(EmbeddingRecord {
        review_id: review.review_id.clone(),
        dense,
        sparse,
        augmented_text,
        indexed_at: embed_timestamp(review),
    })
}

fn embed_timestamp(review: &Review) -> Timestamp {
    review.created_at
}
