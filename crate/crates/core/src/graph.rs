//! Per-review heterogeneous evidence graph.
//!
//! Construction runs in four steps, each usable on its own:
//!
//! 1. [`EvidenceGraph::seed`] places the meta review and its retrieved
//!    candidates, with review-review (RR) edges carrying retrieval scores.
//! 2. [`EvidenceGraph::expand_entities`] adds the users, devices, IPs and
//!    items behaviorally linked to those seeds, with review-entity (RE) and
//!    entity-entity (EE) edges.
//! 3. [`EvidenceGraph::expand_reviews`] pulls in further reviews attached to
//!    those entities when they lie within `delta_t_seconds` of some seed.
//! 4. [`EvidenceGraph::close_rr_edges`] scores every remaining review pair and
//!    keeps edges at or above the RR threshold.
//!
//! All collections are ordered, so a graph built twice from the same inputs
//! serializes to identical bytes.

use std::collections::{BTreeMap, BTreeSet, HashSet};
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::index::{HybridIndex, IndexConfig, ScoredCandidate};
use crate::model::{EntityRef, EntityType, Relation, Review, Timestamp};
use crate::store::{BehaviorStore, ReviewStore};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct GraphConfig {
    pub delta_t_seconds: i64,
    pub max_reviews_per_entity: usize,
    pub rr_edge_threshold: f64,
}

impl GraphConfig {
    /// Cap value that disables the per-entity fan-out limit.
    pub const UNCAPPED: usize = usize::MAX;

    pub fn validate(&self) -> Result<()> {
        if self.delta_t_seconds < 1 {
            return Err(Error::validation("delta_t_seconds", "must be >= 1"));
        }
        if self.max_reviews_per_entity < 1 {
            return Err(Error::validation("max_reviews_per_entity", "must be >= 1"));
        }
        if !(0.0..=1.0).contains(&self.rr_edge_threshold) {
            return Err(Error::validation("rr_edge_threshold", "must lie in [0, 1]"));
        }
        Ok(())
    }
}

impl Default for GraphConfig {
    fn default() -> Self {
        Self {
            delta_t_seconds: 72 * 3600,
            max_reviews_per_entity: 50,
            rr_edge_threshold: 0.3,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ReviewRole {
    Meta,
    Retrieved,
    Expanded,
}

impl ReviewRole {
    pub fn is_seed(self) -> bool {
        matches!(self, ReviewRole::Meta | ReviewRole::Retrieved)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReviewNode {
    pub review_id: String,
    pub role: ReviewRole,
    pub user_id: String,
    pub item_id: String,
    pub created_at: Timestamp,
    /// Hybrid score against the meta review, for retrieved nodes.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub retrieval_score: Option<f64>,
    /// Entity through which an expanded node was reached.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub via: Option<EntityRef>,
}

/// Identifier of any node, rendered as `review:<id>` or `<type>:<id>`.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum NodeId {
    Review(String),
    Entity(EntityRef),
}

impl NodeId {
    pub fn review(id: impl Into<String>) -> Self {
        NodeId::Review(id.into())
    }

    pub fn key(&self) -> String {
        self.to_string()
    }
}

impl fmt::Display for NodeId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            NodeId::Review(id) => write!(f, "review:{id}"),
            NodeId::Entity(e) => write!(f, "{e}"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct ReEdge {
    pub review_id: String,
    pub entity: EntityRef,
    pub relation: Relation,
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct EeEdge {
    pub source: EntityRef,
    pub target: EntityRef,
    pub relation: Relation,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RrEdge {
    pub a: String,
    pub b: String,
    pub weight: f64,
}

/// A review pair that could not be scored during closure.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SkippedPair {
    pub a: String,
    pub b: String,
    pub reason: String,
}

fn ordered(a: &str, b: &str) -> (String, String) {
    if a <= b {
        (a.to_string(), b.to_string())
    } else {
        (b.to_string(), a.to_string())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(into = "GraphExport", try_from = "GraphExport")]
pub struct EvidenceGraph {
    meta_review_id: String,
    reviews: BTreeMap<String, ReviewNode>,
    entities: BTreeSet<EntityRef>,
    rr: BTreeMap<(String, String), f64>,
    re: BTreeSet<ReEdge>,
    ee: BTreeSet<EeEdge>,
    scored: HashSet<(String, String)>,
    diagnostics: Vec<SkippedPair>,
}

fn node_for(review: &Review, role: ReviewRole) -> ReviewNode {
    ReviewNode {
        review_id: review.review_id.clone(),
        role,
        user_id: review.user_id.clone(),
        item_id: review.item_id.clone(),
        created_at: review.created_at,
        retrieval_score: None,
        via: None,
    }
}

impl EvidenceGraph {
    /// Meta review plus retrieved candidates. RR edges are added between the
    /// meta review and every candidate scoring at least `rr_edge_threshold`.
    pub fn seed(
        meta: &Review,
        candidates: &[ScoredCandidate],
        reviews: &ReviewStore,
        rr_edge_threshold: f64,
    ) -> Result<Self> {
        let mut g = EvidenceGraph {
            meta_review_id: meta.review_id.clone(),
            reviews: BTreeMap::new(),
            entities: BTreeSet::new(),
            rr: BTreeMap::new(),
            re: BTreeSet::new(),
            ee: BTreeSet::new(),
            scored: HashSet::new(),
            diagnostics: Vec::new(),
        };
        g.reviews
            .insert(meta.review_id.clone(), node_for(meta, ReviewRole::Meta));
        for c in candidates {
            if c.review_id == meta.review_id {
                return Err(Error::validation(
                    "candidates",
                    "the meta review cannot be its own candidate",
                ));
            }
            if g.reviews.contains_key(&c.review_id) {
                return Err(Error::validation(
                    "candidates",
                    format!("candidate {} listed more than once", c.review_id),
                ));
            }
            let review = reviews.get(&c.review_id).ok_or_else(|| {
                Error::validation(
                    "candidates",
                    format!("candidate {} is not a stored review", c.review_id),
                )
            })?;
            let mut node = node_for(review, ReviewRole::Retrieved);
            node.retrieval_score = Some(c.score);
            g.reviews.insert(c.review_id.clone(), node);
            g.record_score(&meta.review_id, &c.review_id, c.score, rr_edge_threshold);
        }
        Ok(g)
    }

    fn record_score(&mut self, a: &str, b: &str, score: f64, threshold: f64) {
        let key = ordered(a, b);
        if score >= threshold && score > 0.0 {
            self.rr.insert(key.clone(), score.min(1.0));
        }
        self.scored.insert(key);
    }

    /// Adds every entity one behavioral hop from a seed review: the author,
    /// the author's devices and IPs, and the item. EE edges join added users
    /// to added devices and IPs they were seen on.
    pub fn expand_entities(&mut self, behaviors: &BehaviorStore) {
        let seeds: Vec<String> = self
            .reviews
            .values()
            .filter(|n| n.role.is_seed())
            .map(|n| n.review_id.clone())
            .collect();
        for review_id in seeds {
            for (entity, relation, _) in behaviors.entities_of_review(&review_id) {
                self.entities.insert(entity.clone());
                self.re.insert(ReEdge {
                    review_id: review_id.clone(),
                    entity,
                    relation,
                });
            }
        }
        let users: Vec<EntityRef> = self
            .entities
            .iter()
            .filter(|e| e.entity_type == EntityType::User)
            .cloned()
            .collect();
        for user in users {
            for d in behaviors.devices_of(&user.entity_id) {
                let device = EntityRef::device(d.clone());
                if self.entities.contains(&device) {
                    self.ee.insert(EeEdge {
                        source: user.clone(),
                        target: device,
                        relation: Relation::LoggedInFrom,
                    });
                }
            }
            for ip in behaviors.ips_of(&user.entity_id) {
                let ip = EntityRef::ip(ip.clone());
                if self.entities.contains(&ip) {
                    self.ee.insert(EeEdge {
                        source: user.clone(),
                        target: ip,
                        relation: Relation::ConnectedVia,
                    });
                }
            }
        }
    }

    /// Attaches reviews linked to each entity node that lie within
    /// `delta_t_seconds` of at least one seed review, newest first, at most
    /// `max_reviews_per_entity` new reviews per entity. Afterwards every
    /// entity carries an RE edge to each linked review present in the graph.
    pub fn expand_reviews(&mut self, behaviors: &BehaviorStore, reviews: &ReviewStore, cfg: &GraphConfig) {
        let seed_times: Vec<Timestamp> = self
            .reviews
            .values()
            .filter(|n| n.role.is_seed())
            .map(|n| n.created_at)
            .collect();
        let window = cfg.delta_t_seconds.max(0).unsigned_abs();
        let near_seed = |t: Timestamp| seed_times.iter().any(|s| t.abs_diff(*s) <= window);

        let entities: Vec<EntityRef> = self.entities.iter().cloned().collect();
        let mut links: Vec<(EntityRef, BTreeMap<String, Relation>)> = Vec::with_capacity(entities.len());
        for entity in entities {
            let linked = behaviors.reviews_of_entity(&entity);
            let mut fresh: Vec<&Review> = linked
                .keys()
                .filter(|id| !self.reviews.contains_key(*id))
                .filter_map(|id| reviews.get(id))
                .filter(|r| near_seed(r.created_at))
                .collect();
            fresh.sort_by(|a, b| {
                b.created_at
                    .cmp(&a.created_at)
                    .then_with(|| a.review_id.cmp(&b.review_id))
            });
            for r in fresh.into_iter().take(cfg.max_reviews_per_entity) {
                let mut node = node_for(r, ReviewRole::Expanded);
                node.via = Some(entity.clone());
                self.reviews.insert(r.review_id.clone(), node);
            }
            links.push((entity, linked));
        }
        for (entity, linked) in links {
            for (review_id, relation) in linked {
                if self.reviews.contains_key(&review_id) {
                    self.re.insert(ReEdge {
                        review_id,
                        entity: entity.clone(),
                        relation,
                    });
                }
            }
        }
    }

    /// Scores every unordered review pair not yet scored and adds an RR edge
    /// where the hybrid score reaches `threshold`. Pairs lacking an
    /// embedding are listed in [`EvidenceGraph::diagnostics`].
    pub fn close_rr_edges(&mut self, index: &HybridIndex, lambda: f64, threshold: f64) {
        let ids: Vec<String> = self.reviews.keys().cloned().collect();
        for (i, a) in ids.iter().enumerate() {
            for b in &ids[i + 1..] {
                let key = (a.clone(), b.clone());
                if self.scored.contains(&key) {
                    continue;
                }
                match index.score_pair(a, b, lambda) {
                    Some(s) => self.record_score(a, b, s.score, threshold),
                    None => {
                        let missing = if index.contains(a) { b } else { a };
                        if !self.diagnostics.iter().any(|d| d.a == *a && d.b == *b) {
                            self.diagnostics.push(SkippedPair {
                                a: a.clone(),
                                b: b.clone(),
                                reason: format!("no embedding for {missing}"),
                            });
                        }
                    }
                }
            }
        }
    }

    pub fn meta_review_id(&self) -> &str {
        &self.meta_review_id
    }

    pub fn meta(&self) -> &ReviewNode {
        &self.reviews[&self.meta_review_id]
    }

    pub fn review(&self, review_id: &str) -> Option<&ReviewNode> {
        self.reviews.get(review_id)
    }

    /// Review nodes in ascending id order.
    pub fn review_nodes(&self) -> impl Iterator<Item = &ReviewNode> {
        self.reviews.values()
    }

    pub fn entity_nodes(&self) -> impl Iterator<Item = &EntityRef> {
        self.entities.iter()
    }

    pub fn contains_entity(&self, e: &EntityRef) -> bool {
        self.entities.contains(e)
    }

    pub fn contains(&self, node: &NodeId) -> bool {
        match node {
            NodeId::Review(id) => self.reviews.contains_key(id),
            NodeId::Entity(e) => self.entities.contains(e),
        }
    }

    pub fn review_count(&self) -> usize {
        self.reviews.len()
    }

    pub fn entity_count(&self) -> usize {
        self.entities.len()
    }

    pub fn node_count(&self) -> usize {
        self.reviews.len() + self.entities.len()
    }

    pub fn edge_count(&self) -> usize {
        self.rr.len() + self.re.len() + self.ee.len()
    }

    /// RR edges with `a < b`, in ascending `(a, b)` order.
    pub fn rr_edges(&self) -> impl Iterator<Item = RrEdge> + '_ {
        self.rr.iter().map(|((a, b), w)| RrEdge {
            a: a.clone(),
            b: b.clone(),
            weight: *w,
        })
    }

    pub fn rr_weight(&self, a: &str, b: &str) -> Option<f64> {
        self.rr.get(&ordered(a, b)).copied()
    }

    /// Whether the pair was scored, whether or not an edge resulted.
    pub fn is_scored(&self, a: &str, b: &str) -> bool {
        self.scored.contains(&ordered(a, b))
    }

    pub fn re_edges(&self) -> impl Iterator<Item = &ReEdge> {
        self.re.iter()
    }

    pub fn ee_edges(&self) -> impl Iterator<Item = &EeEdge> {
        self.ee.iter()
    }

    pub fn diagnostics(&self) -> &[SkippedPair] {
        &self.diagnostics
    }

    /// Review nodes joined to `entity` by an RE edge.
    pub fn reviews_of(&self, entity: &EntityRef) -> Vec<&ReviewNode> {
        self.re
            .iter()
            .filter(|e| &e.entity == entity)
            .filter_map(|e| self.reviews.get(&e.review_id))
            .collect()
    }

    /// Neighbors of a node with the connecting edge, in a fixed order.
    pub fn neighbors(&self, node: &NodeId) -> Vec<(NodeId, GraphEdge)> {
        let mut out = Vec::new();
        match node {
            NodeId::Review(id) => {
                for ((a, b), w) in &self.rr {
                    let other = if a == id {
                        b
                    } else if b == id {
                        a
                    } else {
                        continue;
                    };
                    out.push((
                        NodeId::Review(other.clone()),
                        GraphEdge::Rr(RrEdge {
                            a: a.clone(),
                            b: b.clone(),
                            weight: *w,
                        }),
                    ));
                }
                for e in self.re.iter().filter(|e| &e.review_id == id) {
                    out.push((NodeId::Entity(e.entity.clone()), GraphEdge::Re(e.clone())));
                }
            }
            NodeId::Entity(ent) => {
                for e in self.re.iter().filter(|e| &e.entity == ent) {
                    out.push((NodeId::Review(e.review_id.clone()), GraphEdge::Re(e.clone())));
                }
                for e in &self.ee {
                    if &e.source == ent {
                        out.push((NodeId::Entity(e.target.clone()), GraphEdge::Ee(e.clone())));
                    } else if &e.target == ent {
                        out.push((NodeId::Entity(e.source.clone()), GraphEdge::Ee(e.clone())));
                    }
                }
            }
        }
        out
    }

    /// Checks the structural invariants that hold for any well-formed graph.
    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::validation("graph", m));
        match self.reviews.get(&self.meta_review_id) {
            Some(n) if n.role == ReviewRole::Meta => {}
            _ => return bad(format!("meta review {} missing", self.meta_review_id)),
        }
        if self.reviews.values().filter(|n| n.role == ReviewRole::Meta).count() != 1 {
            return bad("exactly one meta node required".into());
        }
        for (id, n) in &self.reviews {
            if id != &n.review_id {
                return bad(format!("node keyed {id} carries id {}", n.review_id));
            }
        }
        for ((a, b), w) in &self.rr {
            if a >= b {
                return bad(format!("rr edge ({a}, {b}) not stored as a < b"));
            }
            if !(w.is_finite() && *w > 0.0 && *w <= 1.0) {
                return bad(format!("rr edge ({a}, {b}) weight {w} outside (0, 1]"));
            }
            if !self.reviews.contains_key(a) || !self.reviews.contains_key(b) {
                return bad(format!("rr edge ({a}, {b}) has a missing endpoint"));
            }
        }
        for e in &self.re {
            if !self.reviews.contains_key(&e.review_id) || !self.entities.contains(&e.entity) {
                return bad(format!(
                    "re edge {} -> {} has a missing endpoint",
                    e.review_id, e.entity
                ));
            }
        }
        for e in &self.ee {
            if !self.entities.contains(&e.source) || !self.entities.contains(&e.target) {
                return bad(format!("ee edge {} -> {} has a missing endpoint", e.source, e.target));
            }
            if e.source == e.target {
                return bad(format!("ee self-loop on {}", e.source));
            }
        }
        Ok(())
    }

    /// Whether every expanded review lies within `delta_t` of some seed.
    pub fn temporally_sound(&self, delta_t_seconds: i64) -> bool {
        let window = delta_t_seconds.max(0).unsigned_abs();
        let seeds: Vec<Timestamp> = self
            .reviews
            .values()
            .filter(|n| n.role.is_seed())
            .map(|n| n.created_at)
            .collect();
        self.reviews
            .values()
            .filter(|n| n.role == ReviewRole::Expanded)
            .all(|n| seeds.iter().any(|s| n.created_at.abs_diff(*s) <= window))
    }
}

/// What [`build_evidence_graph`] should do beyond seeding the meta review.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct BuildOptions {
    /// Seed retrieved candidates alongside the meta review.
    pub retrieve: bool,
    /// Run entity and review expansion.
    pub expand: bool,
}

impl Default for BuildOptions {
    fn default() -> Self {
        Self {
            retrieve: true,
            expand: true,
        }
    }
}

/// Read-only views the builder draws on.
#[derive(Clone, Copy)]
pub struct GraphSources<'a> {
    pub reviews: &'a ReviewStore,
    pub behaviors: &'a BehaviorStore,
    pub index: &'a HybridIndex,
}

/// Retrieves candidates for an already embedded meta review and runs every
/// construction step.
pub fn build_evidence_graph(
    meta: &Review,
    sources: GraphSources<'_>,
    index_cfg: &IndexConfig,
    cfg: &GraphConfig,
    options: BuildOptions,
) -> Result<EvidenceGraph> {
    index_cfg.validate()?;
    cfg.validate()?;
    let query = sources
        .index
        .get(&meta.review_id)
        .ok_or_else(|| Error::NotFound(format!("no embedding for review {}", meta.review_id)))?;
    let candidates = if options.retrieve {
        let exclude = HashSet::from([meta.review_id.clone()]);
        sources.index.query_topk(query, index_cfg, &exclude)?
    } else {
        Vec::new()
    };
    let mut g = EvidenceGraph::seed(meta, &candidates, sources.reviews, cfg.rr_edge_threshold)?;
    if options.expand {
        g.expand_entities(sources.behaviors);
        g.expand_reviews(sources.behaviors, sources.reviews, cfg);
    }
    g.close_rr_edges(sources.index, index_cfg.lambda, cfg.rr_edge_threshold);
    Ok(g)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum GraphNode {
    Review(ReviewNode),
    Entity(EntityRef),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum GraphEdge {
    Rr(RrEdge),
    Re(ReEdge),
    Ee(EeEdge),
}

/// Node-list and edge-list form used for serialization.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GraphExport {
    pub meta_review_id: String,
    pub nodes: Vec<GraphNode>,
    pub edges: Vec<GraphEdge>,
    #[serde(default)]
    pub diagnostics: Vec<SkippedPair>,
    /// Pairs that were scored without producing an RR edge, `a < b`, sorted.
    #[serde(default)]
    pub scored_below_threshold: Vec<(String, String)>,
}

impl From<EvidenceGraph> for GraphExport {
    fn from(g: EvidenceGraph) -> Self {
        let nodes = g
            .reviews
            .into_values()
            .map(GraphNode::Review)
            .chain(g.entities.into_iter().map(GraphNode::Entity))
            .collect();
        let mut scored_below_threshold: Vec<(String, String)> =
            g.scored.into_iter().filter(|key| !g.rr.contains_key(key)).collect();
        scored_below_threshold.sort();
        let edges =
            g.rr.into_iter()
                .map(|((a, b), weight)| GraphEdge::Rr(RrEdge { a, b, weight }))
                .chain(g.re.into_iter().map(GraphEdge::Re))
                .chain(g.ee.into_iter().map(GraphEdge::Ee))
                .collect();
        GraphExport {
            meta_review_id: g.meta_review_id,
            nodes,
            edges,
            diagnostics: g.diagnostics,
            scored_below_threshold,
        }
    }
}

impl TryFrom<GraphExport> for EvidenceGraph {
    type Error = Error;

    fn try_from(x: GraphExport) -> Result<Self> {
        let mut g = EvidenceGraph {
            meta_review_id: x.meta_review_id,
            reviews: BTreeMap::new(),
            entities: BTreeSet::new(),
            rr: BTreeMap::new(),
            re: BTreeSet::new(),
            ee: BTreeSet::new(),
            scored: HashSet::new(),
            diagnostics: x.diagnostics,
        };
        for n in x.nodes {
            match n {
                GraphNode::Review(r) => {
                    if let Some(prev) = g.reviews.insert(r.review_id.clone(), r) {
                        return Err(Error::validation(
                            "nodes",
                            format!("duplicate review {}", prev.review_id),
                        ));
                    }
                }
                GraphNode::Entity(e) => {
                    g.entities.insert(e);
                }
            }
        }
        for e in x.edges {
            match e {
                GraphEdge::Rr(RrEdge { a, b, weight }) => {
                    if a == b {
                        return Err(Error::validation("edges", format!("rr self-loop on {a}")));
                    }
                    let key = ordered(&a, &b);
                    g.scored.insert(key.clone());
                    g.rr.insert(key, weight);
                }
                GraphEdge::Re(e) => {
                    g.re.insert(e);
                }
                GraphEdge::Ee(e) => {
                    g.ee.insert(e);
                }
            }
        }
        for (a, b) in x.scored_below_threshold {
            let key = ordered(&a, &b);
            if g.rr.contains_key(&key) {
                return Err(Error::validation(
                    "scored_below_threshold",
                    format!("pair ({a}, {b}) also has an rr edge"),
                ));
            }
            if !g.reviews.contains_key(&a) || !g.reviews.contains_key(&b) {
                return Err(Error::validation(
                    "scored_below_threshold",
                    format!("pair ({a}, {b}) has a missing endpoint"),
                ));
            }
            g.scored.insert(key);
        }
        g.validate()?;
        Ok(g)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::BehaviorRecord;

    const T0: Timestamp = 1_735_689_600;
    const HOUR: i64 = 3600;

    fn review(id: &str, user: &str, item: &str, at: Timestamp) -> Review {
        Review {
            review_id: id.into(),
            item_id: item.into(),
            user_id: user.into(),
            text: format!("text of {id}"),
            image_refs: vec![],
            created_at: at,
            label: None,
        }
    }

    fn cand(id: &str, score: f64) -> ScoredCandidate {
        ScoredCandidate {
            review_id: id.into(),
            score,
            dense_component: score,
            sparse_component: score,
        }
    }

    struct Fixture {
        reviews: ReviewStore,
        behaviors: BehaviorStore,
    }

    impl Fixture {
        fn new(rs: &[Review]) -> Self {
            let mut f = Fixture {
                reviews: ReviewStore::new(),
                behaviors: BehaviorStore::new(),
            };
            for r in rs {
                f.reviews.insert(r.clone()).unwrap();
                f.behaviors.add_review_links(r).unwrap();
            }
            f
        }
    }

    #[test]
    fn seed_without_candidates_is_a_single_node() {
        let meta = review("m", "u0", "i0", T0);
        let f = Fixture::new(std::slice::from_ref(&meta));
        let g = EvidenceGraph::seed(&meta, &[], &f.reviews, 0.3).unwrap();
        assert_eq!(g.node_count(), 1);
        assert_eq!(g.edge_count(), 0);
        g.validate().unwrap();
    }

    #[test]
    fn seed_with_full_candidate_list() {
        let meta = review("m", "u0", "i0", T0);
        let mut all = vec![meta.clone()];
        let mut cands = Vec::new();
        for i in 0..25 {
            let id = format!("r{i:02}");
            all.push(review(&id, &format!("u{i}"), "ix", T0));
            cands.push(cand(&id, 0.31 + f64::from(i) * 0.01));
        }
        let f = Fixture::new(&all);
        let g = EvidenceGraph::seed(&meta, &cands, &f.reviews, 0.3).unwrap();
        assert_eq!(g.review_count(), 26);
        assert_eq!(g.rr_edges().count(), 25);
        assert!(g.rr_edges().all(|e| e.a == "m" || e.b == "m"));
    }

    #[test]
    fn seed_threshold_and_duplicate_rules() {
        let meta = review("m", "u0", "i0", T0);
        let f = Fixture::new(&[meta.clone(), review("a", "u1", "i1", T0)]);
        let g = EvidenceGraph::seed(&meta, &[cand("a", 0.2)], &f.reviews, 0.3).unwrap();
        assert!(g.review("a").is_some());
        assert_eq!(g.rr_weight("m", "a"), None);
        assert!(g.is_scored("a", "m"));

        let err = EvidenceGraph::seed(&meta, &[cand("a", 0.5), cand("a", 0.5)], &f.reviews, 0.3).unwrap_err();
        assert_eq!(err.field(), Some("candidates"));
        assert!(EvidenceGraph::seed(&meta, &[cand("m", 0.5)], &f.reviews, 0.3).is_err());
        assert!(EvidenceGraph::seed(&meta, &[cand("ghost", 0.5)], &f.reviews, 0.3).is_err());
    }

    #[test]
    fn shared_device_produces_ee_edge() {
        let meta = review("m", "u1", "i0", T0);
        let mut f = Fixture::new(std::slice::from_ref(&meta));
        f.behaviors.add(BehaviorRecord::logged_in_from("u1", "d1", T0)).unwrap();
        let mut g = EvidenceGraph::seed(&meta, &[], &f.reviews, 0.3).unwrap();
        g.expand_entities(&f.behaviors);
        assert!(g.contains_entity(&EntityRef::device("d1")));
        assert!(g.ee_edges().any(|e| e.source == EntityRef::user("u1")
            && e.target == EntityRef::device("d1")
            && e.relation == Relation::LoggedInFrom));
        g.validate().unwrap();
    }

    #[test]
    fn review_without_behaviors_stays_put() {
        let meta = review("m", "u1", "i0", T0);
        let f = Fixture {
            reviews: {
                let mut s = ReviewStore::new();
                s.insert(meta.clone()).unwrap();
                s
            },
            behaviors: BehaviorStore::new(),
        };
        let mut g = EvidenceGraph::seed(&meta, &[], &f.reviews, 0.3).unwrap();
        let before = g.clone();
        g.expand_entities(&f.behaviors);
        g.expand_reviews(&f.behaviors, &f.reviews, &GraphConfig::default());
        assert_eq!(g, before);
    }

    #[test]
    fn temporal_filter_and_hand_enumerated_expansion() {
        let meta = review("m", "u0", "shop", T0);
        let rs = vec![
            meta.clone(),
            review("near1", "u1", "shop", T0 + HOUR),
            review("near2", "u2", "shop", T0 - 10 * HOUR),
            review("near3", "u3", "shop", T0 + 72 * HOUR),
            review("far", "u4", "shop", T0 + 100 * 24 * HOUR),
        ];
        let f = Fixture::new(&rs);
        let cfg = GraphConfig::default();
        let mut g = EvidenceGraph::seed(&meta, &[], &f.reviews, cfg.rr_edge_threshold).unwrap();
        g.expand_entities(&f.behaviors);
        g.expand_reviews(&f.behaviors, &f.reviews, &cfg);

        // Oracle: every review sharing the item whose gap to the only seed
        // is at most 72h, other than the meta review itself.
        let expected: BTreeSet<&str> = rs
            .iter()
            .filter(|r| r.review_id != "m" && r.item_id == "shop" && (r.created_at - T0).abs() <= 72 * HOUR)
            .map(|r| r.review_id.as_str())
            .collect();
        let got: BTreeSet<&str> = g
            .review_nodes()
            .filter(|n| n.role == ReviewRole::Expanded)
            .map(|n| n.review_id.as_str())
            .collect();
        assert_eq!(got, expected);
        assert_eq!(got.len(), 3);
        assert!(g.review("far").is_none());
        assert!(g.temporally_sound(cfg.delta_t_seconds));
        for id in &got {
            assert_eq!(g.review(id).unwrap().via, Some(EntityRef::item("shop")));
        }
        g.validate().unwrap();
    }

    #[test]
    fn fanout_cap_keeps_newest() {
        let meta = review("m", "u0", "hub", T0);
        let mut rs = vec![meta.clone()];
        for i in 0..10 {
            rs.push(review(
                &format!("r{i}"),
                &format!("u{}", i + 1),
                "hub",
                T0 - i64::from(i) * HOUR,
            ));
        }
        let f = Fixture::new(&rs);
        let cfg = GraphConfig {
            max_reviews_per_entity: 3,
            ..GraphConfig::default()
        };
        let mut g = EvidenceGraph::seed(&meta, &[], &f.reviews, 0.3).unwrap();
        g.expand_entities(&f.behaviors);
        g.expand_reviews(&f.behaviors, &f.reviews, &cfg);
        let got: Vec<&str> = g
            .review_nodes()
            .filter(|n| n.role == ReviewRole::Expanded)
            .map(|n| n.review_id.as_str())
            .collect();
        assert_eq!(got, ["r0", "r1", "r2"]);
    }

    #[test]
    fn export_round_trips_and_rejects_dangling_edges() {
        let meta = review("m", "u1", "i0", T0);
        let mut f = Fixture::new(&[meta.clone(), review("a", "u2", "i0", T0)]);
        f.behaviors
            .add(BehaviorRecord::connected_via("u1", "10.0.0.1", T0))
            .unwrap();
        let mut g = EvidenceGraph::seed(&meta, &[cand("a", 0.8)], &f.reviews, 0.3).unwrap();
        g.expand_entities(&f.behaviors);
        g.expand_reviews(&f.behaviors, &f.reviews, &GraphConfig::default());
        let text = crate::canonical::to_string(&g).unwrap();
        let back: EvidenceGraph = crate::canonical::from_str(&text).unwrap();
        assert_eq!(crate::canonical::to_string(&back).unwrap(), text);

        let mut x = GraphExport::from(g);
        x.edges.push(GraphEdge::Re(ReEdge {
            review_id: "nope".into(),
            entity: EntityRef::item("i0"),
            relation: Relation::AttachedTo,
        }));
        assert!(EvidenceGraph::try_from(x).is_err());
    }
}
