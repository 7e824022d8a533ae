//! Rule-based offline adjudicator.
//!
//! Two signals are read off the graph: the number of entity nodes whose
//! linked reviews come from at least two distinct authors, and the mean RR
//! weight on the meta review's edges. Both at threshold gives a fraudulent
//! verdict at high risk. One at threshold with the other inside the margin
//! gives medium risk, reported as inconclusive. Anything else is genuine.

use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};

use super::paths::{EvidencePath, PathEdge};
use crate::graph::{EvidenceGraph, NodeId};
use crate::model::{Adjudication, AdjudicationSource, EntityRef, EvidenceChain, RiskLevel, Verdict};

const CHAINS_PER_SIGNAL: usize = 3;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct MockRules {
    pub min_shared_entities: usize,
    pub min_mean_similarity: f64,
    /// Relative distance below a threshold that still counts as "near".
    pub near_margin: f64,
}

impl Default for MockRules {
    fn default() -> Self {
        Self {
            min_shared_entities: 2,
            min_mean_similarity: 0.7,
            near_margin: 0.2,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MockSignals {
    pub shared_entities: Vec<EntityRef>,
    pub mean_similarity: f64,
    pub meta_edge_count: usize,
}

pub fn mock_signals(g: &EvidenceGraph) -> MockSignals {
    let shared_entities = g
        .entity_nodes()
        .filter(|e| {
            let authors: BTreeSet<&str> = g.reviews_of(e).into_iter().map(|r| r.user_id.as_str()).collect();
            authors.len() >= 2
        })
        .cloned()
        .collect();
    let meta = g.meta_review_id();
    let weights: Vec<f64> = g
        .rr_edges()
        .filter(|e| e.a == meta || e.b == meta)
        .map(|e| e.weight)
        .collect();
    let mean_similarity = if weights.is_empty() {
        0.0
    } else {
        weights.iter().sum::<f64>() / weights.len() as f64
    };
    MockSignals {
        shared_entities,
        mean_similarity,
        meta_edge_count: weights.len(),
    }
}

fn entity_chains(paths: &[EvidencePath], signals: &MockSignals, g: &EvidenceGraph) -> Vec<EvidenceChain> {
    let keys: Vec<(String, &EntityRef)> = signals.shared_entities.iter().map(|e| (e.key(), e)).collect();
    paths
        .iter()
        .filter_map(|p| {
            let (_, e) = keys.iter().find(|(k, _)| p.node_sequence.contains(k))?;
            let authors: BTreeSet<&str> = g.reviews_of(e).into_iter().map(|r| r.user_id.as_str()).collect();
            Some(EvidenceChain {
                path: p.to_string(),
                rationale: format!("{e} is shared by {} distinct review authors", authors.len()),
            })
        })
        .take(CHAINS_PER_SIGNAL)
        .collect()
}

fn similarity_chains(paths: &[EvidencePath]) -> Vec<EvidenceChain> {
    paths
        .iter()
        .filter_map(|p| match p.edge_sequence.as_slice() {
            [PathEdge::Rr { weight }] => Some(EvidenceChain {
                path: p.to_string(),
                rationale: format!("content similarity {weight:.4} with {}", p.node_sequence[1]),
            }),
            _ => None,
        })
        .take(CHAINS_PER_SIGNAL)
        .collect()
}

pub fn adjudicate_mock(g: &EvidenceGraph, paths: &[EvidencePath]) -> Adjudication {
    adjudicate_mock_with(g, paths, &MockRules::default())
}

pub fn adjudicate_mock_with(g: &EvidenceGraph, paths: &[EvidencePath], rules: &MockRules) -> Adjudication {
    let s = mock_signals(g);
    let shared = s.shared_entities.len() as f64;
    let min_shared = rules.min_shared_entities as f64;
    let entity_fires = shared >= min_shared;
    let similarity_fires = s.mean_similarity >= rules.min_mean_similarity;
    let near = 1.0 - rules.near_margin;
    let entity_near = shared >= min_shared * near;
    let similarity_near = s.mean_similarity >= rules.min_mean_similarity * near;

    let (verdict, risk_level) = match (entity_fires, similarity_fires) {
        (true, true) => (Verdict::Fraudulent, RiskLevel::High),
        (true, false) if similarity_near => (Verdict::Inconclusive, RiskLevel::Medium),
        (false, true) if entity_near => (Verdict::Inconclusive, RiskLevel::Medium),
        _ => (Verdict::Genuine, RiskLevel::Low),
    };

    let mut evidence_chains = Vec::new();
    if verdict != Verdict::Genuine {
        if entity_fires {
            evidence_chains.extend(entity_chains(paths, &s, g));
        }
        if similarity_fires {
            evidence_chains.extend(similarity_chains(paths));
        }
        if evidence_chains.is_empty() {
            evidence_chains.push(EvidenceChain {
                path: NodeId::review(g.meta_review_id()).key(),
                rationale: format!(
                    "{} shared entities; mean similarity {:.4} over {} edges",
                    s.shared_entities.len(),
                    s.mean_similarity,
                    s.meta_edge_count
                ),
            });
        }
    }
    Adjudication {
        review_id: g.meta_review_id().to_string(),
        verdict,
        risk_level,
        evidence_chains,
        source: AdjudicationSource::Mock,
        created_at: g.meta().created_at,
        raw_reply: None,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::Review;
    use crate::store::ReviewStore;

    #[test]
    fn isolated_review_is_genuine() {
        let m = Review {
            review_id: "m".into(),
            item_id: "i".into(),
            user_id: "u".into(),
            text: "t".into(),
            image_refs: vec![],
            created_at: 7,
            label: None,
        };
        let mut rs = ReviewStore::new();
        rs.insert(m.clone()).unwrap();
        let g = EvidenceGraph::seed(&m, &[], &rs, 0.3).unwrap();
        let a = adjudicate_mock(&g, &[]);
        assert_eq!((a.verdict, a.risk_level), (Verdict::Genuine, RiskLevel::Low));
        assert!(a.evidence_chains.is_empty());
        assert_eq!(a.created_at, 7);
        a.validate().unwrap();
    }
}
