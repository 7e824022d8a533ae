//! Precision/recall/F1 scoring and the ablation grid runner.
//!
//! The positive class is "deceptive". An inconclusive verdict counts as a
//! negative prediction.

use std::collections::btree_map::Entry;
use std::collections::BTreeMap;
use std::sync::Arc;
use std::time::Instant;

use serde::{Deserialize, Serialize};

use crate::encoder::Encoder;
use crate::error::{Error, Result};
use crate::model::{Adjudication, Label};
use crate::pipeline::{Adjudicator, Engine, PipelineConfig};
use crate::reasoner::MockRules;
use crate::synth::Corpus;

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Confusion {
    pub tp: u64,
    pub fp: u64,
    #[serde(rename = "fn")]
    pub fn_: u64,
    pub tn: u64,
}

impl Confusion {
    pub fn total(&self) -> u64 {
        self.tp + self.fp + self.fn_ + self.tn
    }

    pub fn precision(&self) -> Option<f64> {
        ratio(self.tp, self.tp + self.fp)
    }

    pub fn recall(&self) -> Option<f64> {
        ratio(self.tp, self.tp + self.fn_)
    }

    /// `None` when precision or recall is undefined; 0 when both are 0.
    pub fn f1(&self) -> Option<f64> {
        Some(f1_score(self.precision()?, self.recall()?))
    }

    pub fn record(&mut self, predicted_positive: bool, actual_positive: bool) {
        match (predicted_positive, actual_positive) {
            (true, true) => self.tp += 1,
            (true, false) => self.fp += 1,
            (false, true) => self.fn_ += 1,
            (false, false) => self.tn += 1,
        }
    }
}

fn ratio(num: u64, den: u64) -> Option<f64> {
    (den > 0).then(|| num as f64 / den as f64)
}

/// Harmonic mean of precision and recall; 0 when both are 0.
pub fn f1_score(precision: f64, recall: f64) -> f64 {
    if precision + recall == 0.0 {
        0.0
    } else {
        2.0 * precision * recall / (precision + recall)
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct RuntimeStats {
    pub cases: u64,
    pub total_seconds: f64,
    pub mean_case_ms: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    #[serde(flatten)]
    pub counts: Confusion,
    /// `None` marks an undefined metric (zero denominator).
    pub precision: Option<f64>,
    pub recall: Option<f64>,
    pub f1: Option<f64>,
    #[serde(default)]
    pub runtime: RuntimeStats,
}

impl EvalReport {
    pub fn from_counts(counts: Confusion) -> Self {
        Self {
            precision: counts.precision(),
            recall: counts.recall(),
            f1: counts.f1(),
            counts,
            runtime: RuntimeStats::default(),
        }
    }

    /// F1 with undefined treated as 0, for comparisons between runs.
    pub fn f1_or_zero(&self) -> f64 {
        self.f1.unwrap_or(0.0)
    }
}

/// Scores adjudications against ground truth. Every adjudicated review must
/// have a label.
pub fn score_run(adjudications: &[Adjudication], labels: &BTreeMap<String, Label>) -> Result<EvalReport> {
    let mut counts = Confusion::default();
    for a in adjudications {
        let label = labels
            .get(&a.review_id)
            .ok_or_else(|| Error::validation("labels", format!("no label for review {}", a.review_id)))?;
        counts.record(a.is_positive(), *label == Label::Deceptive);
    }
    Ok(EvalReport::from_counts(counts))
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct AblationConfig {
    #[serde(default)]
    pub disable_dense: bool,
    #[serde(default)]
    pub disable_sparse: bool,
    #[serde(default)]
    pub disable_image: bool,
    #[serde(default)]
    pub disable_review_nodes: bool,
    #[serde(default)]
    pub disable_entity_nodes: bool,
    /// Empty means the base configuration's lambda.
    #[serde(default)]
    pub lambda_grid: Vec<f64>,
    /// Empty means the base configuration's delta T.
    #[serde(default)]
    pub delta_t_grid: Vec<i64>,
}

impl AblationConfig {
    pub fn validate(&self) -> Result<()> {
        if self.disable_dense && self.disable_sparse {
            return Err(Error::validation(
                "disable_sparse",
                "disabling both dense and sparse scoring leaves nothing to retrieve with",
            ));
        }
        if (self.disable_dense || self.disable_sparse) && !self.lambda_grid.is_empty() {
            return Err(Error::validation(
                "lambda_grid",
                "a lambda grid conflicts with disabling a retrieval channel",
            ));
        }
        if let Some(l) = self.lambda_grid.iter().find(|l| !(0.0..=1.0).contains(*l)) {
            return Err(Error::validation("lambda_grid", format!("{l} outside [0, 1]")));
        }
        if let Some(d) = self.delta_t_grid.iter().find(|d| **d < 1) {
            return Err(Error::validation("delta_t_grid", format!("{d} must be >= 1")));
        }
        Ok(())
    }

    /// One pipeline configuration per grid point, in grid order.
    pub fn expand(&self, base: &PipelineConfig) -> Result<Vec<PipelineConfig>> {
        self.validate()?;
        let lambdas = if self.disable_dense {
            vec![0.0]
        } else if self.disable_sparse {
            vec![1.0]
        } else if self.lambda_grid.is_empty() {
            vec![base.index.lambda]
        } else {
            self.lambda_grid.clone()
        };
        let deltas = if self.delta_t_grid.is_empty() {
            vec![base.graph.delta_t_seconds]
        } else {
            self.delta_t_grid.clone()
        };
        let mut out = Vec::new();
        for &lambda in &lambdas {
            for &delta in &deltas {
                let mut cfg = base.clone();
                cfg.index.lambda = lambda;
                cfg.graph.delta_t_seconds = delta;
                cfg.use_images = base.use_images && !self.disable_image;
                cfg.use_review_nodes = base.use_review_nodes && !self.disable_review_nodes;
                cfg.use_entity_nodes = base.use_entity_nodes && !self.disable_entity_nodes;
                out.push(cfg);
            }
        }
        Ok(out)
    }
}

/// Short stable name for a run configuration, used to key reports.
pub fn config_key(cfg: &PipelineConfig) -> String {
    format!(
        "lambda={:.2} dt={}s images={} reviews={} entities={}",
        cfg.index.lambda, cfg.graph.delta_t_seconds, cfg.use_images, cfg.use_review_nodes, cfg.use_entity_nodes
    )
}

/// Loads a corpus into a fresh engine: reviews, embeddings, behaviors.
pub fn load_corpus(encoder: Arc<dyn Encoder>, cfg: &PipelineConfig, corpus: &Corpus) -> Result<Engine> {
    let mut engine = Engine::new(encoder, cfg.clone())?;
    for r in &corpus.reviews {
        engine.ingest(r)?;
    }
    for b in &corpus.behaviors {
        engine.add_behavior(b.clone())?;
    }
    Ok(engine)
}

/// Adjudicates every review in the corpus and scores the result.
pub fn evaluate_engine(
    engine: &Engine,
    cfg: &PipelineConfig,
    corpus: &Corpus,
    adjudicator: &Adjudicator<'_>,
) -> Result<(EvalReport, Vec<Adjudication>)> {
    let start = Instant::now();
    let mut adjudications = Vec::with_capacity(corpus.reviews.len());
    for r in &corpus.reviews {
        adjudications.push(engine.adjudicate_with(&r.review_id, adjudicator, cfg)?.adjudication);
    }
    let mut report = score_run(&adjudications, &corpus.labels)?;
    let secs = start.elapsed().as_secs_f64();
    report.runtime = RuntimeStats {
        cases: adjudications.len() as u64,
        total_seconds: secs,
        mean_case_ms: if adjudications.is_empty() {
            0.0
        } else {
            secs * 1e3 / adjudications.len() as f64
        },
    };
    Ok((report, adjudications))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AblationRun {
    pub key: String,
    pub config: PipelineConfig,
    pub report: EvalReport,
}

/// Runs one full pipeline pass per grid point with the mock adjudicator.
/// Embeddings are shared between runs that agree on image use.
pub fn run_ablation(
    encoder: Arc<dyn Encoder>,
    corpus: &Corpus,
    base: &PipelineConfig,
    ablation: &AblationConfig,
    rules: &MockRules,
) -> Result<Vec<AblationRun>> {
    let configs = ablation.expand(base)?;
    let mut engines: BTreeMap<bool, Engine> = BTreeMap::new();
    let mut out = Vec::with_capacity(configs.len());
    for cfg in configs {
        if let Entry::Vacant(slot) = engines.entry(cfg.use_images) {
            slot.insert(load_corpus(encoder.clone(), &cfg, corpus)?);
        }
        let engine = &engines[&cfg.use_images];
        let (report, _) = evaluate_engine(engine, &cfg, corpus, &Adjudicator::Mock(rules.clone()))?;
        out.push(AblationRun {
            key: config_key(&cfg),
            config: cfg,
            report,
        });
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{AdjudicationSource, RiskLevel, Verdict};

    fn adj(id: &str, verdict: Verdict) -> Adjudication {
        Adjudication {
            review_id: id.into(),
            verdict,
            risk_level: RiskLevel::Low,
            evidence_chains: vec![],
            source: AdjudicationSource::Mock,
            created_at: 0,
            raw_reply: None,
        }
    }

    #[test]
    fn table_f1_values() {
        assert!((f1_score(0.988, 0.901) - 0.942).abs() <= 0.001);
        assert!((f1_score(0.953, 0.830) - 0.887).abs() <= 0.001);
        assert_eq!(f1_score(0.0, 0.0), 0.0);
    }

    #[test]
    fn perfect_classifier_on_ten_reviews() {
        let mut labels = BTreeMap::new();
        let mut adjs = Vec::new();
        for i in 0..10 {
            let id = format!("r{i}");
            let deceptive = i % 3 == 0;
            labels.insert(id.clone(), if deceptive { Label::Deceptive } else { Label::Genuine });
            adjs.push(adj(
                &id,
                if deceptive {
                    Verdict::Fraudulent
                } else {
                    Verdict::Genuine
                },
            ));
        }
        let r = score_run(&adjs, &labels).unwrap();
        assert_eq!((r.precision, r.recall, r.f1), (Some(1.0), Some(1.0), Some(1.0)));
        assert_eq!(r.counts.total(), 10);
    }

    #[test]
    fn inconclusive_is_negative_and_missing_labels_fail() {
        let labels = BTreeMap::from([("a".to_string(), Label::Deceptive)]);
        let r = score_run(&[adj("a", Verdict::Inconclusive)], &labels).unwrap();
        assert_eq!(r.counts.fn_, 1);
        assert_eq!(r.precision, None);
        assert_eq!(r.f1, None);
        assert!(score_run(&[adj("zzz", Verdict::Genuine)], &labels).is_err());
    }

    #[test]
    fn grid_expansion() {
        let base = PipelineConfig::default();
        let grid = AblationConfig {
            lambda_grid: vec![0.0, 0.25, 0.5, 0.75, 1.0],
            ..Default::default()
        };
        let cfgs = grid.expand(&base).unwrap();
        assert_eq!(
            cfgs.iter().map(|c| c.index.lambda).collect::<Vec<_>>(),
            grid.lambda_grid
        );

        let both = AblationConfig {
            disable_dense: true,
            disable_sparse: true,
            ..Default::default()
        };
        assert!(both.expand(&base).is_err());
        let noop = AblationConfig::default().expand(&base).unwrap();
        assert_eq!(noop, vec![base.clone()]);
        let dense_off = AblationConfig {
            disable_dense: true,
            ..Default::default()
        };
        assert_eq!(dense_off.expand(&base).unwrap()[0].index.lambda, 0.0);
    }

    #[test]
    fn report_serializes_fn_field() {
        let r = EvalReport::from_counts(Confusion {
            tp: 1,
            fp: 0,
            fn_: 2,
            tn: 3,
        });
        let s = crate::canonical::to_string(&r).unwrap();
        assert!(s.contains("\"fn\":2"));
        let back: EvalReport = crate::canonical::from_str(&s).unwrap();
        assert_eq!(back, r);
    }
}
