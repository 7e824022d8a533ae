//! Sliding-window hybrid index.
//!
//! A review's hybrid score against a query is
//! `s = lambda * dense + (1 - lambda) * sparse`, where `dense` is the
//! cosine of the dense vectors clamped to `[0, 1]` and `sparse` is the
//! L2-normalized dot product of the sparse term maps. Retrieval is an exact
//! scan: dense dot products over every live record plus an inverted index
//! that accumulates sparse dot products only for records sharing a term.
//!
//! Arithmetic is fixed so that any scorer following the same recipe gets
//! bit-identical scores:
//! * dense dot: `f32` products widened to `f64`, accumulated into eight
//!   interleaved lanes (`i % 8`), lanes summed as
//!   `((l0+l1)+(l2+l3))+((l4+l5)+(l6+l7))`; norm is `sqrt(dot(a, a))`;
//! * sparse dot: query terms visited in ascending term order, adding
//!   `q[t] * d[t]` for terms present in both; norm is the square root of
//!   the squared weights summed in ascending term order;
//! * cosine is `dot / (norm_q * norm_d)`, or 0 if either norm is 0,
//!   clamped to `[0, 1]`; the combined score is clamped to `[0, 1]` too.

use std::cmp::Ordering;
use std::collections::{BinaryHeap, HashMap, HashSet};

use serde::{Deserialize, Serialize};

use crate::encoder::DEFAULT_DENSE_DIM;
use crate::error::{Error, Result};
use crate::model::{EmbeddingRecord, SparseVector, Timestamp, SECONDS_PER_DAY};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct IndexConfig {
    pub lambda: f64,
    pub k: usize,
    pub window_days: u32,
    pub rr_edge_threshold: f64,
    pub dense_dim: usize,
}

impl Default for IndexConfig {
    fn default() -> Self {
        Self {
            lambda: 0.5,
            k: 25,
            window_days: 30,
            rr_edge_threshold: 0.3,
            dense_dim: DEFAULT_DENSE_DIM,
        }
    }
}

impl IndexConfig {
    pub fn validate(&self) -> Result<()> {
        if !(0.0..=1.0).contains(&self.lambda) {
            return Err(Error::validation("lambda", "must lie in [0, 1]"));
        }
        if self.k < 1 {
            return Err(Error::validation("k", "must be >= 1"));
        }
        if self.window_days < 1 {
            return Err(Error::validation("window_days", "must be >= 1"));
        }
        if !(0.0..=1.0).contains(&self.rr_edge_threshold) {
            return Err(Error::validation("rr_edge_threshold", "must lie in [0, 1]"));
        }
        if self.dense_dim < 1 {
            return Err(Error::validation("dense_dim", "must be >= 1"));
        }
        Ok(())
    }

    pub fn window_seconds(&self) -> i64 {
        i64::from(self.window_days) * SECONDS_PER_DAY
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScoredCandidate {
    pub review_id: String,
    pub score: f64,
    pub dense_component: f64,
    pub sparse_component: f64,
}

pub fn dense_dot(a: &[f32], b: &[f32]) -> f64 {
    let mut lanes = [0.0f64; 8];
    let ca = a.chunks_exact(8);
    let cb = b.chunks_exact(8);
    let (ra, rb) = (ca.remainder(), cb.remainder());
    for (x, y) in ca.zip(cb) {
        for i in 0..8 {
            lanes[i] += f64::from(x[i]) * f64::from(y[i]);
        }
    }
    for (i, (x, y)) in ra.iter().zip(rb).enumerate() {
        lanes[i] += f64::from(*x) * f64::from(*y);
    }
    ((lanes[0] + lanes[1]) + (lanes[2] + lanes[3])) + ((lanes[4] + lanes[5]) + (lanes[6] + lanes[7]))
}

pub fn dense_norm(a: &[f32]) -> f64 {
    dense_dot(a, a).sqrt()
}

pub fn sparse_dot(q: &SparseVector, d: &SparseVector) -> f64 {
    let mut acc = 0.0;
    for (t, w) in q {
        if let Some(dw) = d.get(t) {
            acc += w * dw;
        }
    }
    acc
}

pub fn sparse_norm(q: &SparseVector) -> f64 {
    q.values().fold(0.0, |acc, w| acc + w * w).sqrt()
}

fn unit_cosine(dot: f64, norm_a: f64, norm_b: f64) -> f64 {
    if norm_a == 0.0 || norm_b == 0.0 {
        return 0.0;
    }
    (dot / (norm_a * norm_b)).clamp(0.0, 1.0)
}

/// Normalized sparse dot product in `[0, 1]`; 0 when either map is empty.
pub fn lexical_score(q: &SparseVector, d: &SparseVector) -> f64 {
    unit_cosine(sparse_dot(q, d), sparse_norm(q), sparse_norm(d))
}

pub fn combine(lambda: f64, dense: f64, sparse: f64) -> f64 {
    (lambda * dense + (1.0 - lambda) * sparse).clamp(0.0, 1.0)
}

/// Scores document `d` against query `q`.
pub fn hybrid_score(q: &EmbeddingRecord, d: &EmbeddingRecord, lambda: f64) -> Result<ScoredCandidate> {
    if q.dense.len() != d.dense.len() {
        return Err(Error::validation(
            "dense",
            format!("dimension mismatch: {} vs {}", q.dense.len(), d.dense.len()),
        ));
    }
    let dense = unit_cosine(
        dense_dot(&q.dense, &d.dense),
        dense_norm(&q.dense),
        dense_norm(&d.dense),
    );
    let sparse = lexical_score(&q.sparse, &d.sparse);
    Ok(ScoredCandidate {
        review_id: d.review_id.clone(),
        score: combine(lambda, dense, sparse),
        dense_component: dense,
        sparse_component: sparse,
    })
}

/// Candidate order: score descending, then review id ascending.
pub fn rank_order(a_score: f64, a_id: &str, b_score: f64, b_id: &str) -> Ordering {
    b_score.total_cmp(&a_score).then_with(|| a_id.cmp(b_id))
}

struct Slot {
    record: EmbeddingRecord,
    dense_norm: f64,
    sparse_norm: f64,
}

struct Posting {
    slot: u32,
    generation: u32,
    weight: f64,
}

/// Heap entry ordered so the worst candidate sits on top.
struct Ranked<'a> {
    score: f64,
    id: &'a str,
    slot: u32,
    dense: f64,
    sparse: f64,
}

impl PartialEq for Ranked<'_> {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}

impl Eq for Ranked<'_> {}

impl PartialOrd for Ranked<'_> {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Ranked<'_> {
    fn cmp(&self, other: &Self) -> Ordering {
        rank_order(self.score, self.id, other.score, other.id)
    }
}

/// Exact hybrid index over a sliding time window. Not internally
/// synchronized: wrap in a `RwLock` for many-readers/one-writer use.
pub struct HybridIndex {
    dim: usize,
    slots: Vec<Option<Slot>>,
    generations: Vec<u32>,
    free: Vec<u32>,
    by_id: HashMap<String, u32>,
    postings: HashMap<String, Vec<Posting>>,
    live_postings: usize,
    stale_postings: usize,
}

impl HybridIndex {
    pub fn new(dim: usize) -> Self {
        Self {
            dim,
            slots: Vec::new(),
            generations: Vec::new(),
            free: Vec::new(),
            by_id: HashMap::new(),
            postings: HashMap::new(),
            live_postings: 0,
            stale_postings: 0,
        }
    }

    pub fn dimension(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.by_id.len()
    }

    pub fn is_empty(&self) -> bool {
        self.by_id.is_empty()
    }

    pub fn contains(&self, review_id: &str) -> bool {
        self.by_id.contains_key(review_id)
    }

    pub fn get(&self, review_id: &str) -> Option<&EmbeddingRecord> {
        let slot = *self.by_id.get(review_id)?;
        self.slots[slot as usize].as_ref().map(|s| &s.record)
    }

    /// Live records in ascending review id order.
    pub fn records(&self) -> Vec<&EmbeddingRecord> {
        let mut out: Vec<&EmbeddingRecord> = self.slots.iter().flatten().map(|s| &s.record).collect();
        out.sort_by(|a, b| a.review_id.cmp(&b.review_id));
        out
    }

    /// Inserts or replaces the record for `rec.review_id`.
    pub fn upsert(&mut self, rec: EmbeddingRecord) -> Result<()> {
        if rec.dense.len() != self.dim {
            return Err(Error::validation(
                "dense",
                format!(
                    "dimension {} does not match index dimension {}",
                    rec.dense.len(),
                    self.dim
                ),
            ));
        }
        rec.validate()?;
        if let Some(old) = self.by_id.get(&rec.review_id).copied() {
            self.remove_slot(old);
        }
        let slot = match self.free.pop() {
            Some(s) => s,
            None => {
                self.slots.push(None);
                self.generations.push(0);
                (self.slots.len() - 1) as u32
            }
        };
        let generation = self.generations[slot as usize];
        for (term, weight) in &rec.sparse {
            self.postings.entry(term.clone()).or_default().push(Posting {
                slot,
                generation,
                weight: *weight,
            });
        }
        self.live_postings += rec.sparse.len();
        self.by_id.insert(rec.review_id.clone(), slot);
        self.slots[slot as usize] = Some(Slot {
            dense_norm: dense_norm(&rec.dense),
            sparse_norm: sparse_norm(&rec.sparse),
            record: rec,
        });
        self.maybe_compact();
        Ok(())
    }

    pub fn remove(&mut self, review_id: &str) -> bool {
        match self.by_id.get(review_id).copied() {
            Some(slot) => {
                self.remove_slot(slot);
                self.maybe_compact();
                true
            }
            None => false,
        }
    }

    fn remove_slot(&mut self, slot: u32) {
        let Some(old) = self.slots[slot as usize].take() else {
            return;
        };
        self.by_id.remove(&old.record.review_id);
        self.generations[slot as usize] = self.generations[slot as usize].wrapping_add(1);
        self.live_postings -= old.record.sparse.len();
        self.stale_postings += old.record.sparse.len();
        self.free.push(slot);
    }

    fn maybe_compact(&mut self) {
        if self.stale_postings < 4096 || self.stale_postings < self.live_postings {
            return;
        }
        let generations = &self.generations;
        let slots = &self.slots;
        self.postings.retain(|_, list| {
            list.retain(|p| generations[p.slot as usize] == p.generation && slots[p.slot as usize].is_some());
            !list.is_empty()
        });
        self.stale_postings = 0;
    }

    /// Removes every record with `indexed_at < now - window_days`; a record
    /// exactly on the boundary stays. Returns the number removed.
    pub fn evict_older_than(&mut self, now: Timestamp, window_days: u32) -> usize {
        let cutoff = now.saturating_sub(i64::from(window_days) * SECONDS_PER_DAY);
        let doomed: Vec<u32> = self
            .slots
            .iter()
            .enumerate()
            .filter_map(|(i, s)| match s {
                Some(s) if s.record.indexed_at < cutoff => Some(i as u32),
                _ => None,
            })
            .collect();
        for &slot in &doomed {
            self.remove_slot(slot);
        }
        self.maybe_compact();
        doomed.len()
    }

    /// Exact top-k by hybrid score, ties broken by ascending review id.
    /// Returns `min(k, live records not excluded)` candidates.
    pub fn query_topk(
        &self,
        query: &EmbeddingRecord,
        cfg: &IndexConfig,
        exclude: &HashSet<String>,
    ) -> Result<Vec<ScoredCandidate>> {
        if query.dense.len() != self.dim {
            return Err(Error::validation(
                "dense",
                format!(
                    "query dimension {} does not match index dimension {}",
                    query.dense.len(),
                    self.dim
                ),
            ));
        }
        if cfg.k == 0 || self.is_empty() {
            return Ok(Vec::new());
        }
        let q_dense_norm = dense_norm(&query.dense);
        let q_sparse_norm = sparse_norm(&query.sparse);

        let mut sparse_acc = vec![0.0f64; self.slots.len()];
        for (term, w) in &query.sparse {
            if let Some(list) = self.postings.get(term) {
                for p in list {
                    if self.generations[p.slot as usize] == p.generation {
                        sparse_acc[p.slot as usize] += w * p.weight;
                    }
                }
            }
        }

        let excluded: HashSet<u32> = exclude.iter().filter_map(|id| self.by_id.get(id).copied()).collect();
        let mut heap: BinaryHeap<Ranked<'_>> = BinaryHeap::with_capacity(cfg.k + 1);
        for (i, slot) in self.slots.iter().enumerate() {
            let Some(slot) = slot else { continue };
            if excluded.contains(&(i as u32)) {
                continue;
            }
            let dense = unit_cosine(
                dense_dot(&query.dense, &slot.record.dense),
                q_dense_norm,
                slot.dense_norm,
            );
            let sparse = unit_cosine(sparse_acc[i], q_sparse_norm, slot.sparse_norm);
            let entry = Ranked {
                score: combine(cfg.lambda, dense, sparse),
                id: &slot.record.review_id,
                slot: i as u32,
                dense,
                sparse,
            };
            if heap.len() < cfg.k {
                heap.push(entry);
            } else if let Some(worst) = heap.peek() {
                if entry < *worst {
                    heap.pop();
                    heap.push(entry);
                }
            }
        }
        debug_assert!(heap.iter().all(|r| self.slots[r.slot as usize].is_some()));
        Ok(heap
            .into_sorted_vec()
            .into_iter()
            .map(|r| ScoredCandidate {
                review_id: r.id.to_string(),
                score: r.score,
                dense_component: r.dense,
                sparse_component: r.sparse,
            })
            .collect())
    }

    /// Scores the stored pair `(query_id, doc_id)` exactly as
    /// [`hybrid_score`] would. `None` if either record is absent.
    pub fn score_pair(&self, query_id: &str, doc_id: &str, lambda: f64) -> Option<ScoredCandidate> {
        let q = self.slots[*self.by_id.get(query_id)? as usize].as_ref()?;
        let d = self.slots[*self.by_id.get(doc_id)? as usize].as_ref()?;
        let dense = unit_cosine(dense_dot(&q.record.dense, &d.record.dense), q.dense_norm, d.dense_norm);
        let sparse = unit_cosine(
            sparse_dot(&q.record.sparse, &d.record.sparse),
            q.sparse_norm,
            d.sparse_norm,
        );
        Some(ScoredCandidate {
            review_id: d.record.review_id.clone(),
            score: combine(lambda, dense, sparse),
            dense_component: dense,
            sparse_component: sparse,
        })
    }
}
