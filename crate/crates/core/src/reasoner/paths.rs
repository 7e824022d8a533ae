//! Ranked simple paths out of the meta review.
//!
//! Paths are ordered by aggregate weight (descending), then edge count
//! (ascending), then node keys (lexicographic). Extending a path never moves
//! it earlier in that order, because RR weights are at most 1 and the edge
//! count grows. A best-first search over a heap therefore pops paths in final
//! order and can stop as soon as `max_paths` have been emitted.

use std::cmp::Ordering;
use std::collections::BinaryHeap;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::graph::{EvidenceGraph, GraphEdge, NodeId};
use crate::model::Relation;

pub const MAX_PATH_EDGES: usize = 3;
pub const DEFAULT_MAX_PATHS: usize = 40;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum PathEdge {
    Rr { weight: f64 },
    Re { relation: Relation },
    Ee { relation: Relation },
}

impl PathEdge {
    pub fn factor(&self) -> f64 {
        match self {
            PathEdge::Rr { weight } => *weight,
            PathEdge::Re { .. } | PathEdge::Ee { .. } => 1.0,
        }
    }

    fn from_graph(e: &GraphEdge) -> Self {
        match e {
            GraphEdge::Rr(rr) => PathEdge::Rr { weight: rr.weight },
            GraphEdge::Re(re) => PathEdge::Re { relation: re.relation },
            GraphEdge::Ee(ee) => PathEdge::Ee { relation: ee.relation },
        }
    }
}

impl fmt::Display for PathEdge {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            PathEdge::Rr { weight } => write!(f, "rr {weight:.4}"),
            PathEdge::Re { relation } | PathEdge::Ee { relation } => write!(f, "{relation}"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvidencePath {
    /// Node keys, starting at the meta review.
    pub node_sequence: Vec<String>,
    pub edge_sequence: Vec<PathEdge>,
    /// Product of the RR weights along the path.
    pub aggregate_weight: f64,
}

impl EvidencePath {
    pub fn len(&self) -> usize {
        self.edge_sequence.len()
    }

    pub fn is_empty(&self) -> bool {
        self.edge_sequence.is_empty()
    }

    /// Canonical rank order: weight desc, length asc, node keys asc.
    pub fn rank_cmp(&self, other: &Self) -> Ordering {
        other
            .aggregate_weight
            .total_cmp(&self.aggregate_weight)
            .then_with(|| self.len().cmp(&other.len()))
            .then_with(|| self.node_sequence.cmp(&other.node_sequence))
    }

    /// Whether every node and edge exists in `g` and no node repeats.
    pub fn replays_on(&self, g: &EvidenceGraph) -> bool {
        if self.node_sequence.len() != self.edge_sequence.len() + 1
            || self.node_sequence.first().map(String::as_str) != Some(&NodeId::review(g.meta_review_id()).key())
        {
            return false;
        }
        let mut seen = std::collections::HashSet::new();
        if !self.node_sequence.iter().all(|n| seen.insert(n)) {
            return false;
        }
        let mut weight = 1.0;
        for (i, edge) in self.edge_sequence.iter().enumerate() {
            let Some(from) = parse_node(g, &self.node_sequence[i]) else {
                return false;
            };
            let to = &self.node_sequence[i + 1];
            let hit = g
                .neighbors(&from)
                .into_iter()
                .any(|(n, e)| &n.key() == to && PathEdge::from_graph(&e) == *edge);
            if !hit {
                return false;
            }
            weight *= edge.factor();
        }
        weight == self.aggregate_weight && weight > 0.0 && weight <= 1.0
    }
}

impl fmt::Display for EvidencePath {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if let Some(first) = self.node_sequence.first() {
            write!(f, "{first}")?;
        }
        for (edge, node) in self.edge_sequence.iter().zip(self.node_sequence.iter().skip(1)) {
            write!(f, " -[{edge}]- {node}")?;
        }
        Ok(())
    }
}

fn parse_node(g: &EvidenceGraph, key: &str) -> Option<NodeId> {
    if let Some(id) = key.strip_prefix("review:") {
        let n = NodeId::review(id);
        return g.contains(&n).then_some(n);
    }
    g.entity_nodes()
        .find(|e| e.key() == key)
        .map(|e| NodeId::Entity(e.clone()))
}

struct Partial {
    nodes: Vec<NodeId>,
    keys: Vec<String>,
    edges: Vec<PathEdge>,
    weight: f64,
}

impl Partial {
    fn cmp_rank(&self, other: &Self) -> Ordering {
        other
            .weight
            .total_cmp(&self.weight)
            .then_with(|| self.edges.len().cmp(&other.edges.len()))
            .then_with(|| self.keys.cmp(&other.keys))
    }
}

impl PartialEq for Partial {
    fn eq(&self, other: &Self) -> bool {
        self.cmp_rank(other) == Ordering::Equal
    }
}

impl Eq for Partial {}

impl PartialOrd for Partial {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Partial {
    // BinaryHeap is a max-heap; the best-ranked path must compare greatest.
    fn cmp(&self, other: &Self) -> Ordering {
        other.cmp_rank(self)
    }
}

/// The evidence paths handed to an adjudicator, and whether more existed.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct PathSelection {
    pub paths: Vec<EvidencePath>,
    pub truncated: bool,
}

/// Top `max_paths` simple paths of 1 to 3 edges from the meta review.
pub fn retrieve_evidence(g: &EvidenceGraph, max_paths: usize) -> Vec<EvidencePath> {
    select_paths(g, max_paths).paths
}

pub fn select_paths(g: &EvidenceGraph, max_paths: usize) -> PathSelection {
    let start = NodeId::review(g.meta_review_id());
    let mut heap = BinaryHeap::new();
    let mut out = PathSelection::default();
    let push_children = |heap: &mut BinaryHeap<Partial>, p: &Partial| {
        let tail = p.nodes.last().expect("paths are never empty");
        for (next, edge) in g.neighbors(tail) {
            if p.nodes.contains(&next) {
                continue;
            }
            let edge = PathEdge::from_graph(&edge);
            let mut nodes = p.nodes.clone();
            let mut keys = p.keys.clone();
            let mut edges = p.edges.clone();
            keys.push(next.key());
            nodes.push(next);
            let weight = p.weight * edge.factor();
            edges.push(edge);
            heap.push(Partial {
                nodes,
                keys,
                edges,
                weight,
            });
        }
    };
    let root = Partial {
        keys: vec![start.key()],
        nodes: vec![start],
        edges: Vec::new(),
        weight: 1.0,
    };
    push_children(&mut heap, &root);
    while let Some(p) = heap.pop() {
        if out.paths.len() == max_paths {
            out.truncated = true;
            break;
        }
        if p.edges.len() < MAX_PATH_EDGES {
            push_children(&mut heap, &p);
        }
        out.paths.push(EvidencePath {
            node_sequence: p.keys,
            edge_sequence: p.edges,
            aggregate_weight: p.weight,
        });
    }
    out
}
