use std::collections::BTreeSet;
use std::sync::Arc;

use jarvis_core::encoder::MockEncoder;
use jarvis_core::error::Error;
use jarvis_core::eval::{evaluate_engine, load_corpus, run_ablation, AblationConfig};
use jarvis_core::model::{RiskLevel, Verdict};
use jarvis_core::pipeline::{Adjudicator, IngestOutcome, PipelineConfig};
use jarvis_core::reasoner::MockRules;
use jarvis_core::synth::{generate_corpus, CampaignSpec, CorpusSpec, SharedEntity, PROMO_TEMPLATES};

#[test]
fn small_benchmark_meets_precision_and_recall() {
    let corpus = generate_corpus(&CorpusSpec::benchmark(21, 6, 800)).unwrap();
    let cfg = PipelineConfig::default();
    let engine = load_corpus(Arc::new(MockEncoder::default()), &cfg, &corpus).unwrap();
    let (report, adjs) = evaluate_engine(&engine, &cfg, &corpus, &Adjudicator::Mock(MockRules::default())).unwrap();
    assert_eq!(adjs.len(), corpus.reviews.len());
    assert_eq!(report.counts.total(), corpus.reviews.len() as u64);
    let (p, r) = (report.precision.unwrap(), report.recall.unwrap());
    assert!(p >= 0.95, "precision {p:.3} {:?}", report.counts);
    assert!(r >= 0.85, "recall {r:.3} {:?}", report.counts);
}

#[test]
fn colluders_sharing_device_and_ip_are_flagged_high_risk() {
    let spec = CorpusSpec {
        n_genuine: 100,
        campaigns: vec![CampaignSpec {
            n_colluders: 6,
            shared_entities: BTreeSet::from([SharedEntity::Device, SharedEntity::Ip]),
            template_text: PROMO_TEMPLATES[2].replace("{item}", "desk lamp"),
            paraphrase_rate: 0.1,
            rare_char_substitution_rate: 0.1,
            time_spread_seconds: 24 * 3600,
            target_item: "item-lamp".into(),
            reuse_image: true,
        }],
        time_horizon_days: 10,
        rng_seed: 5,
    };
    let corpus = generate_corpus(&spec).unwrap();
    let cfg = PipelineConfig::default();
    let engine = load_corpus(Arc::new(MockEncoder::default()), &cfg, &corpus).unwrap();
    let mock = Adjudicator::Mock(MockRules::default());
    for id in corpus.deceptive_ids() {
        let case = engine.adjudicate(id, &mock).unwrap();
        let a = &case.adjudication;
        assert_eq!(
            (a.verdict, a.risk_level),
            (Verdict::Fraudulent, RiskLevel::High),
            "{id}"
        );
        assert!(!a.evidence_chains.is_empty());
        for chain in &a.evidence_chains {
            assert!(case.paths.iter().any(|p| p.to_string() == chain.path), "{}", chain.path);
        }
    }
}

#[test]
fn reingest_is_idempotent_and_conflicts_are_rejected() {
    let corpus = generate_corpus(&CorpusSpec::benchmark(4, 1, 20)).unwrap();
    let cfg = PipelineConfig::default();
    let mut engine = load_corpus(Arc::new(MockEncoder::default()), &cfg, &corpus).unwrap();
    let r = corpus.reviews[0].clone();
    assert_eq!(engine.ingest(&r).unwrap(), IngestOutcome::Unchanged);
    let mut changed = r.clone();
    changed.text.push_str(" edited");
    assert!(matches!(engine.ingest(&changed), Err(Error::Conflict(_))));
    assert!(matches!(
        engine.adjudicate("nope", &Adjudicator::Mock(MockRules::default())),
        Err(Error::NotFound(_))
    ));
}

#[test]
fn ablation_grid_runs_one_report_per_point() {
    let corpus = generate_corpus(&CorpusSpec::benchmark(8, 3, 150)).unwrap();
    let ablation = AblationConfig {
        lambda_grid: vec![0.0, 0.5, 1.0],
        delta_t_grid: vec![24 * 3600, 72 * 3600],
        ..AblationConfig::default()
    };
    let runs = run_ablation(
        Arc::new(MockEncoder::default()),
        &corpus,
        &PipelineConfig::default(),
        &ablation,
        &MockRules::default(),
    )
    .unwrap();
    assert_eq!(runs.len(), 6);
    let keys: BTreeSet<&str> = runs.iter().map(|r| r.key.as_str()).collect();
    assert_eq!(keys.len(), 6);
    for run in &runs {
        assert_eq!(run.report.counts.total(), corpus.reviews.len() as u64);
    }
}
