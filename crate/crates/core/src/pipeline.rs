//! The end-to-end engine: ingestion into the stores and index, then
//! retrieval, graph construction, path selection, prompt assembly and
//! adjudication for a chosen review.

use std::sync::Arc;
use std::time::Instant;

use serde::{Deserialize, Serialize};

use crate::encoder::{embed_review, EmbedOptions, Encoder};
use crate::error::{Error, Result};
use crate::graph::{build_evidence_graph, BuildOptions, EvidenceGraph, GraphConfig, GraphSources};
use crate::index::{HybridIndex, IndexConfig};
use crate::model::{Adjudication, BehaviorRecord, EmbeddingRecord, Review, Timestamp};
use crate::reasoner::{
    adjudicate_llm, adjudicate_mock_with, assemble_prompt, select_paths, EvidencePath, Fallback, LlmClient, MockRules,
    PromptBundle, DEFAULT_MAX_PATHS,
};
use crate::store::{BehaviorStore, ReviewStore};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct PipelineConfig {
    pub index: IndexConfig,
    pub graph: GraphConfig,
    pub max_paths: usize,
    /// Seed retrieved candidates into the graph.
    pub use_review_nodes: bool,
    /// Run entity and review expansion.
    pub use_entity_nodes: bool,
    /// Describe and embed images.
    pub use_images: bool,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        Self {
            index: IndexConfig::default(),
            graph: GraphConfig::default(),
            max_paths: DEFAULT_MAX_PATHS,
            use_review_nodes: true,
            use_entity_nodes: true,
            use_images: true,
        }
    }
}

impl PipelineConfig {
    pub fn validate(&self) -> Result<()> {
        self.index.validate()?;
        self.graph.validate()?;
        if self.max_paths < 1 {
            return Err(Error::validation("max_paths", "must be >= 1"));
        }
        Ok(())
    }

    fn build_options(&self) -> BuildOptions {
        BuildOptions {
            retrieve: self.use_review_nodes,
            expand: self.use_entity_nodes,
        }
    }

    pub fn embed_options(&self) -> EmbedOptions {
        EmbedOptions {
            include_images: self.use_images,
        }
    }
}

pub enum Adjudicator<'a> {
    Mock(MockRules),
    Llm(&'a dyn LlmClient),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum IngestOutcome {
    Created,
    Unchanged,
}

/// Wall time per stage, in milliseconds.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct StageTimings {
    pub graph_ms: f64,
    pub paths_ms: f64,
    pub prompt_ms: f64,
    pub adjudication_ms: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CaseOutcome {
    /// The review as stored, without ground truth.
    pub review: Review,
    pub graph: EvidenceGraph,
    pub paths: Vec<EvidencePath>,
    pub prompt: PromptBundle,
    pub adjudication: Adjudication,
    pub timings: StageTimings,
}

fn ms_since(t: Instant) -> f64 {
    t.elapsed().as_secs_f64() * 1e3
}

/// Stores, index and encoder behind one owner. Reviews are stored without
/// their ground-truth field.
pub struct Engine {
    encoder: Arc<dyn Encoder>,
    config: PipelineConfig,
    reviews: ReviewStore,
    behaviors: BehaviorStore,
    index: HybridIndex,
}

impl Engine {
    pub fn new(encoder: Arc<dyn Encoder>, config: PipelineConfig) -> Result<Self> {
        config.validate()?;
        if encoder.dimension() != config.index.dense_dim {
            return Err(Error::validation(
                "dense_dim",
                format!(
                    "encoder produces {} dimensions, index expects {}",
                    encoder.dimension(),
                    config.index.dense_dim
                ),
            ));
        }
        Ok(Self {
            index: HybridIndex::new(encoder.dimension()),
            encoder,
            config,
            reviews: ReviewStore::new(),
            behaviors: BehaviorStore::new(),
        })
    }

    pub fn config(&self) -> &PipelineConfig {
        &self.config
    }

    pub fn reviews(&self) -> &ReviewStore {
        &self.reviews
    }

    pub fn behaviors(&self) -> &BehaviorStore {
        &self.behaviors
    }

    pub fn index(&self) -> &HybridIndex {
        &self.index
    }

    pub fn encoder(&self) -> &dyn Encoder {
        self.encoder.as_ref()
    }

    /// Stores the review. Re-sending an identical review is a no-op;
    /// different content under a known id is a conflict. Behavioral links,
    /// including `posted` and `attached_to`, arrive separately through
    /// [`Engine::add_behavior`].
    pub fn store_review(&mut self, review: &Review) -> Result<IngestOutcome> {
        review.validate()?;
        let clean = review.without_label();
        if let Some(existing) = self.reviews.get(&clean.review_id) {
            return if *existing == clean {
                Ok(IngestOutcome::Unchanged)
            } else {
                Err(Error::Conflict(format!(
                    "review {} already stored with different content",
                    clean.review_id
                )))
            };
        }
        self.reviews.insert(clean)?;
        Ok(IngestOutcome::Created)
    }

    /// Computes the embedding of a stored review without touching the index.
    pub fn compute_embedding(&self, review_id: &str) -> Result<EmbeddingRecord> {
        let review = self
            .reviews
            .get(review_id)
            .ok_or_else(|| Error::NotFound(format!("review {review_id}")))?;
        embed_review(self.encoder.as_ref(), review, self.config.embed_options())
    }

    pub fn upsert_embedding(&mut self, rec: EmbeddingRecord) -> Result<()> {
        let review = self
            .reviews
            .get(&rec.review_id)
            .ok_or_else(|| Error::NotFound(format!("review {}", rec.review_id)))?;
        rec.validate_for(review)?;
        self.index.upsert(rec)
    }

    pub fn embed(&mut self, review_id: &str) -> Result<()> {
        let rec = self.compute_embedding(review_id)?;
        self.index.upsert(rec)
    }

    /// [`Engine::store_review`] followed by embedding when the review is new
    /// or not yet indexed.
    pub fn ingest(&mut self, review: &Review) -> Result<IngestOutcome> {
        let outcome = self.store_review(review)?;
        if !self.index.contains(&review.review_id) {
            self.embed(&review.review_id)?;
        }
        Ok(outcome)
    }

    pub fn add_behavior(&mut self, record: BehaviorRecord) -> Result<bool> {
        self.behaviors.add(record)
    }

    /// Drops index records older than the configured window before `now`.
    pub fn evict(&mut self, now: Timestamp) -> usize {
        self.index.evict_older_than(now, self.config.index.window_days)
    }

    pub fn build_graph(&self, review_id: &str, cfg: &PipelineConfig) -> Result<EvidenceGraph> {
        let review = self
            .reviews
            .get(review_id)
            .ok_or_else(|| Error::NotFound(format!("review {review_id}")))?;
        build_evidence_graph(
            review,
            GraphSources {
                reviews: &self.reviews,
                behaviors: &self.behaviors,
                index: &self.index,
            },
            &cfg.index,
            &cfg.graph,
            cfg.build_options(),
        )
    }

    pub fn adjudicate(&self, review_id: &str, adjudicator: &Adjudicator<'_>) -> Result<CaseOutcome> {
        self.adjudicate_with(review_id, adjudicator, &self.config)
    }

    /// Runs the full case pipeline under an alternative configuration that
    /// shares this engine's embeddings.
    pub fn adjudicate_with(
        &self,
        review_id: &str,
        adjudicator: &Adjudicator<'_>,
        cfg: &PipelineConfig,
    ) -> Result<CaseOutcome> {
        cfg.validate()?;
        let review = self
            .reviews
            .get(review_id)
            .ok_or_else(|| Error::NotFound(format!("review {review_id}")))?
            .clone();
        let mut timings = StageTimings::default();

        let t = Instant::now();
        let graph = self.build_graph(review_id, cfg)?;
        timings.graph_ms = ms_since(t);

        let t = Instant::now();
        let selection = select_paths(&graph, cfg.max_paths);
        timings.paths_ms = ms_since(t);

        let t = Instant::now();
        let texts = Fallback(&self.index, &self.reviews);
        let prompt = assemble_prompt(&graph, &selection, &review, &texts);
        timings.prompt_ms = ms_since(t);

        let t = Instant::now();
        let adjudication = match adjudicator {
            Adjudicator::Mock(rules) => adjudicate_mock_with(&graph, &selection.paths, rules),
            Adjudicator::Llm(client) => adjudicate_llm(&prompt, *client, &review.review_id, review.created_at)?,
        };
        timings.adjudication_ms = ms_since(t);

        Ok(CaseOutcome {
            review,
            graph,
            paths: selection.paths,
            prompt,
            adjudication,
            timings,
        })
    }
}
