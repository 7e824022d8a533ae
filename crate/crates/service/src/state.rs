//! The service's state and every operation that changes it.
//!
//! Five stores live under the data directory as [`RecordLog`]s: `reviews`,
//! `behaviors`, `embeddings`, `cases` and `decisions`. A write is appended
//! to its log before it is applied in memory, all under one writer lock,
//! so the logs replay to exactly the committed state. Lock order is
//! writer, engine, cases, pending.
//!
//! The retrieval window follows event time: the clock is the newest
//! `created_at` ingested, and index eviction runs against it.

use std::collections::{BTreeMap, BTreeSet};
use std::sync::atomic::{AtomicI64, Ordering};
use std::sync::{Arc, Mutex, MutexGuard, PoisonError, RwLock, RwLockReadGuard, RwLockWriteGuard};
use std::time::{Instant, SystemTime, UNIX_EPOCH};

use serde::{Deserialize, Serialize};

use jarvis_core::encoder::{embed_review, Encoder};
use jarvis_core::error::{Error, Result};
use jarvis_core::graph::GraphExport;
use jarvis_core::model::{BehaviorRecord, EmbeddingRecord, Review, Timestamp, SECONDS_PER_DAY};
use jarvis_core::persist::RecordLog;
use jarvis_core::pipeline::{Adjudicator, Engine, IngestOutcome};
use jarvis_core::reasoner::{adjudicate_llm, LlmClient};

use crate::config::{Backends, ServiceConfig};
use crate::records::{case_id, AdoptionReport, AuditorDecision, CaseRecord, CaseSummary, Decision};

pub fn unix_now() -> Timestamp {
    SystemTime::now()
        .duration_since(UNIX_EPOCH)
        .map(|d| d.as_secs() as Timestamp)
        .unwrap_or(0)
}

fn read<T>(l: &RwLock<T>) -> RwLockReadGuard<'_, T> {
    l.read().unwrap_or_else(PoisonError::into_inner)
}

fn write<T>(l: &RwLock<T>) -> RwLockWriteGuard<'_, T> {
    l.write().unwrap_or_else(PoisonError::into_inner)
}

fn lock<T>(m: &Mutex<T>) -> MutexGuard<'_, T> {
    m.lock().unwrap_or_else(PoisonError::into_inner)
}

struct Logs {
    reviews: RecordLog<Review>,
    behaviors: RecordLog<BehaviorRecord>,
    embeddings: RecordLog<EmbeddingRecord>,
    cases: RecordLog<CaseRecord>,
    decisions: RecordLog<AuditorDecision>,
    last_case: u64,
    last_eviction: Timestamp,
}

#[derive(Default)]
struct Cases {
    records: BTreeMap<String, CaseRecord>,
    /// Every decision per case, oldest first.
    history: BTreeMap<String, Vec<AuditorDecision>>,
}

impl Cases {
    fn view(&self, id: &str) -> Option<CaseRecord> {
        let mut case = self.records.get(id)?.clone();
        case.decision_history = self.history.get(id).cloned().unwrap_or_default();
        case.decision = case.decision_history.last().cloned();
        Some(case)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IngestReport {
    pub review_id: String,
    pub outcome: IngestOutcome,
    pub indexed: bool,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct BatchReport {
    pub created: usize,
    pub unchanged: usize,
    /// Stored but not yet embedded.
    pub pending: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DecisionInput {
    pub decision: Decision,
    #[serde(default)]
    pub note: Option<String>,
    pub auditor_id: String,
    #[serde(default)]
    pub decided_at: Option<Timestamp>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DecisionOutcome {
    pub decision: AuditorDecision,
    pub history_length: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ServiceStats {
    pub reviews: usize,
    pub indexed: usize,
    pub behaviors: usize,
    pub pending_embeddings: usize,
    pub cases: usize,
    pub decisions: usize,
    /// Newest review timestamp seen; the retrieval window ends here.
    pub event_clock: Timestamp,
}

pub struct Service {
    cfg: ServiceConfig,
    encoder: Arc<dyn Encoder>,
    llm: Option<Arc<dyn LlmClient>>,
    writer: Mutex<Logs>,
    engine: RwLock<Engine>,
    cases: RwLock<Cases>,
    pending: Mutex<BTreeSet<String>>,
    clock: AtomicI64,
}

impl Service {
    /// Opens the data directory and replays every store.
    pub fn open(cfg: ServiceConfig, backends: Backends) -> Result<Self> {
        cfg.pipeline.validate()?;
        if cfg.adjudication_slots < 1 {
            return Err(Error::validation("adjudication_slots", "must be >= 1"));
        }
        if cfg.snapshot_every < 1 {
            return Err(Error::validation("snapshot_every", "must be >= 1"));
        }
        let dir = cfg.data_dir.as_path();
        let mut engine = Engine::new(Arc::clone(&backends.encoder), cfg.pipeline.clone())?;

        let (reviews_log, reviews) = RecordLog::<Review>::open(dir, "reviews")?;
        let mut clock = Timestamp::MIN;
        for r in &reviews {
            engine.store_review(r)?;
            add_review_links(&mut engine, r)?;
            clock = clock.max(r.created_at);
        }
        let (behaviors_log, behaviors) = RecordLog::<BehaviorRecord>::open(dir, "behaviors")?;
        for b in behaviors {
            engine.add_behavior(b)?;
        }
        let (embeddings_log, embeddings) = RecordLog::<EmbeddingRecord>::open(dir, "embeddings")?;
        for rec in embeddings {
            engine.upsert_embedding(rec)?;
        }
        if clock != Timestamp::MIN {
            engine.evict(clock);
        }

        let (cases_log, stored_cases) = RecordLog::<CaseRecord>::open(dir, "cases")?;
        let (decisions_log, decisions) = RecordLog::<AuditorDecision>::open(dir, "decisions")?;
        let mut cases = Cases::default();
        let mut last_case = 0;
        for c in stored_cases {
            if let Some(n) = c.case_id.strip_prefix("case-").and_then(|n| n.parse::<u64>().ok()) {
                last_case = last_case.max(n);
            }
            cases.records.insert(c.case_id.clone(), c);
        }
        for d in decisions {
            cases.history.entry(d.adjudication_id.clone()).or_default().push(d);
        }

        let cutoff = clock.saturating_sub(cfg.pipeline.index.window_seconds());
        let pending: BTreeSet<String> = engine
            .reviews()
            .iter()
            .filter(|r| !engine.index().contains(&r.review_id) && r.created_at >= cutoff)
            .map(|r| r.review_id.clone())
            .collect();
        tracing::info!(
            reviews = engine.reviews().len(),
            indexed = engine.index().len(),
            cases = cases.records.len(),
            pending = pending.len(),
            "replayed {}",
            dir.display()
        );

        Ok(Self {
            encoder: backends.encoder,
            llm: backends.llm,
            writer: Mutex::new(Logs {
                reviews: reviews_log,
                behaviors: behaviors_log,
                embeddings: embeddings_log,
                cases: cases_log,
                decisions: decisions_log,
                last_case,
                last_eviction: clock,
            }),
            engine: RwLock::new(engine),
            cases: RwLock::new(cases),
            pending: Mutex::new(pending),
            clock: AtomicI64::new(clock),
            cfg,
        })
    }

    pub fn config(&self) -> &ServiceConfig {
        &self.cfg
    }

    /// Read access to the engine, for inspection.
    pub fn engine(&self) -> RwLockReadGuard<'_, Engine> {
        read(&self.engine)
    }

    /// Stores a review and indexes its embedding. A review whose embedding
    /// cannot be computed because the encoder is down is still stored,
    /// queued for [`Service::retry_pending`], and reported as
    /// [`Error::EncoderUnavailable`].
    pub fn ingest(&self, review: &Review, now: Timestamp) -> Result<IngestReport> {
        review.validate_at(now)?;
        let clean = review.without_label();
        let id = clean.review_id.clone();

        let known = {
            let engine = read(&self.engine);
            match engine.reviews().get(&id) {
                Some(existing) if *existing != clean => {
                    return Err(Error::Conflict(format!(
                        "review {id} already stored with different content"
                    )))
                }
                Some(_) => Some(engine.index().contains(&id)),
                None => None,
            }
        };
        if let Some(indexed) = known {
            if !indexed {
                self.embed_stored(&id)?;
            }
            return Ok(IngestReport {
                review_id: id,
                outcome: IngestOutcome::Unchanged,
                indexed: true,
            });
        }

        let embedded = match embed_review(self.encoder.as_ref(), &clean, self.cfg.pipeline.embed_options()) {
            Ok(rec) => Ok(rec),
            Err(Error::EncoderUnavailable(m)) => Err(m),
            Err(e) => return Err(e),
        };

        let outcome = {
            let mut logs = lock(&self.writer);
            let mut engine = write(&self.engine);
            let outcome = store_logged(&mut logs, &mut engine, std::slice::from_ref(&clean))?[0];
            if let Ok(rec) = &embedded {
                if !engine.index().contains(&id) {
                    logs.embeddings.append(rec)?;
                    engine.upsert_embedding(rec.clone())?;
                }
            }
            self.after_write(&mut logs, &mut engine, clean.created_at)?;
            outcome
        };

        match embedded {
            Ok(_) => Ok(IngestReport {
                review_id: id,
                outcome,
                indexed: true,
            }),
            Err(m) => {
                lock(&self.pending).insert(id.clone());
                Err(Error::EncoderUnavailable(format!(
                    "review {id} stored; embedding queued for retry: {m}"
                )))
            }
        }
    }

    /// Ingests many reviews with one sync per store. Any invalid or
    /// conflicting review rejects the whole batch before anything is stored.
    pub fn ingest_batch(&self, reviews: &[Review], now: Timestamp) -> Result<BatchReport> {
        let mut fresh: Vec<Review> = Vec::new();
        let mut seen = BTreeSet::new();
        let mut report = BatchReport::default();
        {
            let engine = read(&self.engine);
            for r in reviews {
                r.validate_at(now)?;
                let clean = r.without_label();
                match engine.reviews().get(&clean.review_id) {
                    Some(existing) if *existing != clean => {
                        return Err(Error::Conflict(format!(
                            "review {} already stored with different content",
                            clean.review_id
                        )))
                    }
                    Some(_) => report.unchanged += 1,
                    None if !seen.insert(clean.review_id.clone()) => {
                        return Err(Error::validation(
                            "review_id",
                            format!("{} appears twice in the batch", clean.review_id),
                        ))
                    }
                    None => fresh.push(clean),
                }
            }
        }

        let mut embeddings = Vec::with_capacity(fresh.len());
        let mut failed = Vec::new();
        for r in &fresh {
            match embed_review(self.encoder.as_ref(), r, self.cfg.pipeline.embed_options()) {
                Ok(rec) => embeddings.push(rec),
                Err(Error::EncoderUnavailable(_)) => failed.push(r.review_id.clone()),
                Err(e) => return Err(e),
            }
        }

        let newest = fresh.iter().map(|r| r.created_at).max();
        {
            let mut logs = lock(&self.writer);
            let mut engine = write(&self.engine);
            for outcome in store_logged(&mut logs, &mut engine, &fresh)? {
                match outcome {
                    IngestOutcome::Created => report.created += 1,
                    IngestOutcome::Unchanged => report.unchanged += 1,
                }
            }
            logs.embeddings.append_batch(&embeddings)?;
            for rec in embeddings {
                engine.upsert_embedding(rec)?;
            }
            if let Some(t) = newest {
                self.after_write(&mut logs, &mut engine, t)?;
            }
        }
        report.pending = failed.len();
        lock(&self.pending).extend(failed);
        Ok(report)
    }

    /// Returns whether the record was new.
    pub fn add_behavior(&self, b: BehaviorRecord) -> Result<bool> {
        Ok(self.add_behaviors(vec![b])? == 1)
    }

    /// Returns how many records were new.
    pub fn add_behaviors(&self, records: Vec<BehaviorRecord>) -> Result<usize> {
        for b in &records {
            jarvis_core::model::validate_behavior(b)?;
        }
        let mut logs = lock(&self.writer);
        let mut engine = write(&self.engine);
        let fresh: Vec<BehaviorRecord> = {
            let known: BTreeSet<&BehaviorRecord> = engine.behaviors().records().collect();
            let mut batch = BTreeSet::new();
            records
                .into_iter()
                .filter(|b| !known.contains(b) && batch.insert(b.clone()))
                .collect()
        };
        logs.behaviors.append_batch(&fresh)?;
        for b in &fresh {
            engine.add_behavior(b.clone())?;
        }
        self.maybe_snapshot(&mut logs, &engine)?;
        Ok(fresh.len())
    }

    /// Embeds every queued review the encoder can now handle; returns how
    /// many were indexed.
    pub fn retry_pending(&self) -> usize {
        let queued: Vec<String> = lock(&self.pending).iter().cloned().collect();
        let mut done = 0;
        for id in queued {
            match self.embed_stored(&id) {
                Ok(()) => done += 1,
                Err(Error::EncoderUnavailable(_)) => break,
                Err(e) => {
                    tracing::warn!(review_id = %id, "dropping from retry queue: {e}");
                    lock(&self.pending).remove(&id);
                }
            }
        }
        done
    }

    pub fn pending(&self) -> Vec<String> {
        lock(&self.pending).iter().cloned().collect()
    }

    fn embed_stored(&self, id: &str) -> Result<()> {
        let review = read(&self.engine)
            .reviews()
            .get(id)
            .cloned()
            .ok_or_else(|| Error::NotFound(format!("review {id}")))?;
        let rec = match embed_review(self.encoder.as_ref(), &review, self.cfg.pipeline.embed_options()) {
            Ok(rec) => rec,
            Err(e) => {
                if matches!(e, Error::EncoderUnavailable(_)) {
                    lock(&self.pending).insert(id.to_string());
                }
                return Err(e);
            }
        };
        let mut logs = lock(&self.writer);
        let mut engine = write(&self.engine);
        logs.embeddings.append(&rec)?;
        engine.upsert_embedding(rec)?;
        self.maybe_snapshot(&mut logs, &engine)?;
        lock(&self.pending).remove(id);
        Ok(())
    }

    /// Runs the full case pipeline for a stored review and persists the case.
    pub fn adjudicate(&self, review_id: &str, now: Timestamp) -> Result<CaseRecord> {
        let indexed = {
            let engine = read(&self.engine);
            if engine.reviews().get(review_id).is_none() {
                return Err(Error::NotFound(format!("review {review_id}")));
            }
            engine.index().contains(review_id)
        };
        if !indexed {
            self.embed_stored(review_id)?;
        }

        let mut outcome = read(&self.engine).adjudicate(review_id, &Adjudicator::Mock(self.cfg.mock_rules.clone()))?;
        if let Some(llm) = &self.llm {
            let t = Instant::now();
            outcome.adjudication = adjudicate_llm(&outcome.prompt, llm.as_ref(), review_id, outcome.review.created_at)?;
            outcome.timings.adjudication_ms = t.elapsed().as_secs_f64() * 1e3;
        }

        let mut logs = lock(&self.writer);
        let case = CaseRecord {
            case_id: case_id(logs.last_case + 1),
            review: outcome.review,
            graph: GraphExport::from(outcome.graph),
            evidence_paths: outcome.paths.iter().map(ToString::to_string).collect(),
            prompt_template_version: outcome.prompt.template_version.clone(),
            adjudication: outcome.adjudication,
            timings: outcome.timings,
            opened_at: now,
            decision: None,
            decision_history: Vec::new(),
        };
        case.validate()?;
        logs.cases.append(&case)?;
        logs.last_case += 1;
        write(&self.cases).records.insert(case.case_id.clone(), case.clone());
        let engine = read(&self.engine);
        self.maybe_snapshot(&mut logs, &engine)?;
        Ok(case)
    }

    pub fn case(&self, case_id: &str) -> Result<CaseRecord> {
        read(&self.cases)
            .view(case_id)
            .ok_or_else(|| Error::NotFound(format!("case {case_id}")))
    }

    pub fn case_summaries(&self) -> Vec<CaseSummary> {
        let cases = read(&self.cases);
        cases
            .records
            .keys()
            .filter_map(|id| cases.view(id))
            .map(|c| c.summary())
            .collect()
    }

    /// Records an auditor decision; the latest one per case counts.
    pub fn decide(&self, case_id: &str, input: DecisionInput, now: Timestamp) -> Result<DecisionOutcome> {
        let decision = AuditorDecision {
            adjudication_id: case_id.to_string(),
            decision: input.decision,
            note: input.note,
            decided_at: input.decided_at.unwrap_or(now),
            auditor_id: input.auditor_id,
        };
        decision.validate()?;
        let mut logs = lock(&self.writer);
        if !read(&self.cases).records.contains_key(case_id) {
            return Err(Error::NotFound(format!("case {case_id}")));
        }
        logs.decisions.append(&decision)?;
        let history_length = {
            let mut cases = write(&self.cases);
            let h = cases.history.entry(case_id.to_string()).or_default();
            h.push(decision.clone());
            h.len()
        };
        let engine = read(&self.engine);
        self.maybe_snapshot(&mut logs, &engine)?;
        Ok(DecisionOutcome {
            decision,
            history_length,
        })
    }

    pub fn adoption(&self) -> AdoptionReport {
        let cases = read(&self.cases);
        let (mut adopted, mut rejected) = (0, 0);
        for d in cases.history.values().filter_map(|h| h.last()) {
            match d.decision {
                Decision::Adopted => adopted += 1,
                Decision::Rejected => rejected += 1,
            }
        }
        AdoptionReport::from_counts(adopted, rejected)
    }

    pub fn stats(&self) -> ServiceStats {
        let engine = read(&self.engine);
        let cases = read(&self.cases);
        ServiceStats {
            reviews: engine.reviews().len(),
            indexed: engine.index().len(),
            behaviors: engine.behaviors().len(),
            pending_embeddings: lock(&self.pending).len(),
            cases: cases.records.len(),
            decisions: cases.history.values().map(Vec::len).sum(),
            event_clock: self.clock.load(Ordering::Relaxed),
        }
    }

    /// Compacts every store into its snapshot.
    pub fn snapshot_all(&self) -> Result<()> {
        let mut logs = lock(&self.writer);
        let engine = read(&self.engine);
        self.snapshot_where(&mut logs, &engine, |_| true)
    }

    /// Advances the event clock, evicts when it has moved a day since the
    /// last eviction, and compacts stores that have grown.
    fn after_write(&self, logs: &mut Logs, engine: &mut Engine, event_time: Timestamp) -> Result<()> {
        let clock = self.clock.fetch_max(event_time, Ordering::Relaxed).max(event_time);
        if clock.saturating_sub(logs.last_eviction) >= SECONDS_PER_DAY {
            let removed = engine.evict(clock);
            logs.last_eviction = clock;
            if removed > 0 {
                tracing::debug!(removed, clock, "evicted index records outside the window");
            }
        }
        self.maybe_snapshot(logs, engine)
    }

    fn maybe_snapshot(&self, logs: &mut Logs, engine: &Engine) -> Result<()> {
        let every = self.cfg.snapshot_every;
        self.snapshot_where(logs, engine, |n| n >= every)
    }

    fn snapshot_where(&self, logs: &mut Logs, engine: &Engine, due: impl Fn(u64) -> bool) -> Result<()> {
        if due(logs.reviews.since_snapshot()) {
            let all: Vec<Review> = engine.reviews().iter().cloned().collect();
            logs.reviews.snapshot(&all)?;
        }
        if due(logs.behaviors.since_snapshot()) {
            let all: Vec<BehaviorRecord> = engine.behaviors().records().cloned().collect();
            logs.behaviors.snapshot(&all)?;
        }
        if due(logs.embeddings.since_snapshot()) {
            let all: Vec<EmbeddingRecord> = engine.index().records().into_iter().cloned().collect();
            logs.embeddings.snapshot(&all)?;
        }
        if due(logs.cases.since_snapshot()) || due(logs.decisions.since_snapshot()) {
            let cases = read(&self.cases);
            if due(logs.cases.since_snapshot()) {
                let all: Vec<CaseRecord> = cases.records.values().cloned().collect();
                logs.cases.snapshot(&all)?;
            }
            if due(logs.decisions.since_snapshot()) {
                let all: Vec<AuditorDecision> = cases.history.values().flatten().cloned().collect();
                logs.decisions.snapshot(&all)?;
            }
        }
        Ok(())
    }
}

fn add_review_links(engine: &mut Engine, r: &Review) -> Result<()> {
    engine.add_behavior(BehaviorRecord::posted(&r.user_id, &r.review_id, r.created_at))?;
    engine.add_behavior(BehaviorRecord::attached_to(&r.review_id, &r.item_id, r.created_at))?;
    Ok(())
}

/// Appends the reviews not yet stored, then stores them with their
/// `posted` and `attached_to` links.
fn store_logged(logs: &mut Logs, engine: &mut Engine, reviews: &[Review]) -> Result<Vec<IngestOutcome>> {
    let mut fresh = Vec::new();
    let mut outcomes = Vec::with_capacity(reviews.len());
    for r in reviews {
        match engine.reviews().get(&r.review_id) {
            Some(existing) if existing != r => {
                return Err(Error::Conflict(format!(
                    "review {} already stored with different content",
                    r.review_id
                )))
            }
            Some(_) => outcomes.push(IngestOutcome::Unchanged),
            None => {
                fresh.push(r.clone());
                outcomes.push(IngestOutcome::Created);
            }
        }
    }
    logs.reviews.append_batch(&fresh)?;
    for r in &fresh {
        engine.store_review(r)?;
        add_review_links(engine, r)?;
    }
    Ok(outcomes)
}
