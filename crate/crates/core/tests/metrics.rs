use std::collections::BTreeMap;

use jarvis_core::eval::{f1_score, score_run, Confusion};
use jarvis_core::model::{Adjudication, AdjudicationSource, EvidenceChain, Label, RiskLevel, Verdict};
use proptest::prelude::*;

fn adjudication(id: String, verdict: Verdict) -> Adjudication {
    let (risk_level, evidence_chains) = match verdict {
        Verdict::Fraudulent => (
            RiskLevel::High,
            vec![EvidenceChain {
                path: format!("review:{id}"),
                rationale: "x".into(),
            }],
        ),
        Verdict::Inconclusive => (RiskLevel::Medium, vec![]),
        Verdict::Genuine => (RiskLevel::Low, vec![]),
    };
    Adjudication {
        review_id: id,
        verdict,
        risk_level,
        evidence_chains,
        source: AdjudicationSource::Mock,
        created_at: 0,
        raw_reply: None,
    }
}

#[test]
fn reference_f1_values() {
    assert!((f1_score(0.988, 0.901) - 0.942).abs() <= 0.001);
    assert!((f1_score(0.953, 0.830) - 0.887).abs() <= 0.001);
    assert_eq!(f1_score(0.0, 0.0), 0.0);
    assert_eq!(f1_score(1.0, 1.0), 1.0);
}

#[test]
fn undefined_metrics_are_none_not_zero() {
    let only_negatives = Confusion {
        tn: 5,
        ..Confusion::default()
    };
    assert_eq!(only_negatives.precision(), None);
    assert_eq!(only_negatives.recall(), None);
    assert_eq!(only_negatives.f1(), None);
    let missed = Confusion {
        fn_: 3,
        tn: 2,
        ..Confusion::default()
    };
    assert_eq!(missed.recall(), Some(0.0));
    assert_eq!(missed.precision(), None);
}

#[test]
fn unlabeled_review_is_an_error() {
    let a = vec![adjudication("r1".into(), Verdict::Genuine)];
    assert!(score_run(&a, &BTreeMap::new()).is_err());
}

fn arb_verdict() -> impl Strategy<Value = Verdict> {
    prop::sample::select(vec![Verdict::Fraudulent, Verdict::Genuine, Verdict::Inconclusive])
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(500))]

    #[test]
    fn score_run_identities(cases in prop::collection::vec((arb_verdict(), any::<bool>()), 0..200)) {
        let mut adjs = Vec::new();
        let mut labels = BTreeMap::new();
        let (mut tp, mut fp, mut fn_, mut tn) = (0u64, 0u64, 0u64, 0u64);
        for (i, (v, deceptive)) in cases.iter().enumerate() {
            let id = format!("r{i:04}");
            adjs.push(adjudication(id.clone(), *v));
            labels.insert(id, if *deceptive { Label::Deceptive } else { Label::Genuine });
            match (*v == Verdict::Fraudulent, *deceptive) {
                (true, true) => tp += 1,
                (true, false) => fp += 1,
                (false, true) => fn_ += 1,
                (false, false) => tn += 1,
            }
        }
        let r = score_run(&adjs, &labels).unwrap();
        prop_assert_eq!(r.counts, Confusion { tp, fp, fn_, tn });
        prop_assert_eq!(r.counts.total(), cases.len() as u64);
        prop_assert_eq!(r.precision, (tp + fp > 0).then(|| tp as f64 / (tp + fp) as f64));
        prop_assert_eq!(r.recall, (tp + fn_ > 0).then(|| tp as f64 / (tp + fn_) as f64));
        match (r.precision, r.recall, r.f1) {
            (Some(p), Some(rc), Some(f)) => {
                prop_assert!((0.0..=1.0).contains(&f));
                prop_assert!(f <= p.max(rc) + 1e-12 && f >= p.min(rc).min(f) - 1e-12);
                if tp > 0 {
                    let direct = 2.0 * tp as f64 / (2 * tp + fp + fn_) as f64;
                    prop_assert!((f - direct).abs() < 1e-12);
                }
            }
            (p, rc, f) => {
                prop_assert!(p.is_none() || rc.is_none());
                prop_assert!(f.is_none());
            }
        }
    }

    #[test]
    fn f1_is_symmetric_and_bounded(p in 0.0f64..=1.0, r in 0.0f64..=1.0) {
        let f = f1_score(p, r);
        prop_assert_eq!(f, f1_score(r, p));
        prop_assert!(f >= 0.0 && f <= p.max(r) + 1e-12);
        prop_assert!(f >= p.min(r) - 1e-12 || f == 0.0);
    }
}
