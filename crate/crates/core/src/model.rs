//! Domain types shared by every stage of the pipeline.
//!
//! All timestamps are integer Unix seconds (UTC). Values are plain immutable
//! data and can be shared freely between threads.

use std::collections::BTreeMap;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Unix seconds, UTC.
pub type Timestamp = i64;

pub const SECONDS_PER_DAY: i64 = 86_400;

/// How far into the future a review timestamp may lie relative to the
/// ingestion clock.
pub const CLOCK_SKEW_ALLOWANCE: i64 = SECONDS_PER_DAY;

/// Term to weight map produced by the sparse encoder. Ordered so that
/// serialization and dot products are deterministic.
pub type SparseVector = BTreeMap<String, f64>;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Label {
    Genuine,
    Deceptive,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Review {
    pub review_id: String,
    pub item_id: String,
    pub user_id: String,
    pub text: String,
    #[serde(default)]
    pub image_refs: Vec<String>,
    pub created_at: Timestamp,
    /// Ground truth for synthetic and evaluation corpora only. Never shown to
    /// an adjudicator.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub label: Option<Label>,
}

impl Review {
    /// Checks the clock-independent invariants.
    pub fn validate(&self) -> Result<()> {
        if self.review_id.trim().is_empty() {
            return Err(Error::validation("review_id", "must be non-empty"));
        }
        if self.item_id.trim().is_empty() {
            return Err(Error::validation("item_id", "must be non-empty"));
        }
        if self.user_id.trim().is_empty() {
            return Err(Error::validation("user_id", "must be non-empty"));
        }
        if self.text.is_empty() && self.image_refs.is_empty() {
            return Err(Error::validation(
                "text",
                "may be empty only when image_refs is non-empty",
            ));
        }
        if let Some(bad) = self.image_refs.iter().find(|r| r.trim().is_empty()) {
            return Err(Error::validation(
                "image_refs",
                format!("blank image reference {bad:?}"),
            ));
        }
        Ok(())
    }

    /// Full validation against an ingestion clock.
    pub fn validate_at(&self, now: Timestamp) -> Result<()> {
        self.validate()?;
        if self.created_at > now.saturating_add(CLOCK_SKEW_ALLOWANCE) {
            return Err(Error::validation(
                "created_at",
                format!(
                    "{} lies more than {}s past the ingestion clock {}",
                    self.created_at, CLOCK_SKEW_ALLOWANCE, now
                ),
            ));
        }
        Ok(())
    }

    pub fn without_label(&self) -> Review {
        Review {
            label: None,
            ..self.clone()
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EntityType {
    User,
    Device,
    Ip,
    Item,
}

impl EntityType {
    pub fn as_str(self) -> &'static str {
        match self {
            EntityType::User => "user",
            EntityType::Device => "device",
            EntityType::Ip => "ip",
            EntityType::Item => "item",
        }
    }
}

impl fmt::Display for EntityType {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Identity of an entity node: the (type, id) pair.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct EntityRef {
    pub entity_type: EntityType,
    pub entity_id: String,
}

impl EntityRef {
    pub fn new(entity_type: EntityType, entity_id: impl Into<String>) -> Self {
        Self {
            entity_type,
            entity_id: entity_id.into(),
        }
    }

    pub fn user(id: impl Into<String>) -> Self {
        Self::new(EntityType::User, id)
    }

    pub fn device(id: impl Into<String>) -> Self {
        Self::new(EntityType::Device, id)
    }

    pub fn ip(id: impl Into<String>) -> Self {
        Self::new(EntityType::Ip, id)
    }

    pub fn item(id: impl Into<String>) -> Self {
        Self::new(EntityType::Item, id)
    }

    /// Node key used in graph exports and prompts, e.g. `device:d-17`.
    pub fn key(&self) -> String {
        format!("{}:{}", self.entity_type, self.entity_id)
    }
}

impl fmt::Display for EntityRef {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:{}", self.entity_type, self.entity_id)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Relation {
    Posted,
    LoggedInFrom,
    ConnectedVia,
    AttachedTo,
}

impl Relation {
    pub fn as_str(self) -> &'static str {
        match self {
            Relation::Posted => "posted",
            Relation::LoggedInFrom => "logged_in_from",
            Relation::ConnectedVia => "connected_via",
            Relation::AttachedTo => "attached_to",
        }
    }
}

impl fmt::Display for Relation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// One end of a behavior record: an entity or a review.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Endpoint {
    Entity(EntityRef),
    Review(String),
}

impl Endpoint {
    fn entity_type(&self) -> Option<EntityType> {
        match self {
            Endpoint::Entity(e) => Some(e.entity_type),
            Endpoint::Review(_) => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct BehaviorRecord {
    pub subject: Endpoint,
    pub relation: Relation,
    pub object: Endpoint,
    pub observed_at: Timestamp,
}

impl BehaviorRecord {
    pub fn posted(user: &str, review_id: &str, at: Timestamp) -> Self {
        Self {
            subject: Endpoint::Entity(EntityRef::user(user)),
            relation: Relation::Posted,
            object: Endpoint::Review(review_id.to_string()),
            observed_at: at,
        }
    }

    pub fn logged_in_from(user: &str, device: &str, at: Timestamp) -> Self {
        Self {
            subject: Endpoint::Entity(EntityRef::user(user)),
            relation: Relation::LoggedInFrom,
            object: Endpoint::Entity(EntityRef::device(device)),
            observed_at: at,
        }
    }

    pub fn connected_via(user: &str, ip: &str, at: Timestamp) -> Self {
        Self {
            subject: Endpoint::Entity(EntityRef::user(user)),
            relation: Relation::ConnectedVia,
            object: Endpoint::Entity(EntityRef::ip(ip)),
            observed_at: at,
        }
    }

    pub fn attached_to(review_id: &str, item: &str, at: Timestamp) -> Self {
        Self {
            subject: Endpoint::Review(review_id.to_string()),
            relation: Relation::AttachedTo,
            object: Endpoint::Entity(EntityRef::item(item)),
            observed_at: at,
        }
    }
}

/// Accepts exactly these relation shapes:
///
/// | relation         | subject | object |
/// |------------------|---------|--------|
/// | `posted`         | user    | review |
/// | `logged_in_from` | user    | device |
/// | `connected_via`  | user    | ip     |
/// | `attached_to`    | review  | item   |
pub fn validate_behavior(b: &BehaviorRecord) -> Result<()> {
    for end in [&b.subject, &b.object] {
        match end {
            Endpoint::Entity(e) if e.entity_id.trim().is_empty() => {
                return Err(Error::validation("entity_id", "must be non-empty"));
            }
            Endpoint::Review(id) if id.trim().is_empty() => {
                return Err(Error::validation("review_id", "must be non-empty"));
            }
            _ => {}
        }
    }

    let (want_subject, want_object) = match b.relation {
        Relation::Posted => (Some(EntityType::User), None),
        Relation::LoggedInFrom => (Some(EntityType::User), Some(EntityType::Device)),
        Relation::ConnectedVia => (Some(EntityType::User), Some(EntityType::Ip)),
        Relation::AttachedTo => (None, Some(EntityType::Item)),
    };
    let describe = |t: Option<EntityType>| t.map_or("review", EntityType::as_str);

    if b.subject.entity_type() != want_subject {
        return Err(Error::validation(
            "subject",
            format!("{} requires {} subject", b.relation, describe(want_subject)),
        ));
    }
    if b.object.entity_type() != want_object {
        return Err(Error::validation(
            "object",
            format!("{} requires {} object", b.relation, describe(want_object)),
        ));
    }
    Ok(())
}

/// The unit of retrieval: one review's dense and sparse representations.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EmbeddingRecord {
    pub review_id: String,
    pub dense: Vec<f32>,
    pub sparse: SparseVector,
    pub augmented_text: String,
    pub indexed_at: Timestamp,
}

pub const UNIT_NORM_TOLERANCE: f64 = 1e-6;

impl EmbeddingRecord {
    pub fn validate(&self) -> Result<()> {
        if self.review_id.trim().is_empty() {
            return Err(Error::validation("review_id", "must be non-empty"));
        }
        let norm = self
            .dense
            .iter()
            .map(|&x| f64::from(x) * f64::from(x))
            .sum::<f64>()
            .sqrt();
        if !norm.is_finite() || (norm - 1.0).abs() > UNIT_NORM_TOLERANCE {
            return Err(Error::validation("dense", format!("expected unit L2 norm, got {norm}")));
        }
        if let Some((term, w)) = self.sparse.iter().find(|(_, w)| !w.is_finite() || **w < 0.0) {
            return Err(Error::validation(
                "sparse",
                format!("weight for {term:?} must be finite and >= 0, got {w}"),
            ));
        }
        Ok(())
    }

    /// Adds the containment check that needs the source review.
    pub fn validate_for(&self, review: &Review) -> Result<()> {
        self.validate()?;
        if self.review_id != review.review_id {
            return Err(Error::validation("review_id", "does not match the review"));
        }
        if !self.augmented_text.contains(review.text.as_str()) {
            return Err(Error::validation("augmented_text", "must contain the review text"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Verdict {
    Fraudulent,
    Genuine,
    Inconclusive,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RiskLevel {
    Low,
    Medium,
    High,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AdjudicationSource {
    Model,
    Mock,
    HumanOverride,
}

/// One rendered evidence path plus the reason it matters.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct EvidenceChain {
    pub path: String,
    pub rationale: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Adjudication {
    pub review_id: String,
    pub verdict: Verdict,
    pub risk_level: RiskLevel,
    pub evidence_chains: Vec<EvidenceChain>,
    pub source: AdjudicationSource,
    pub created_at: Timestamp,
    /// Model output kept verbatim when it could not be parsed.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub raw_reply: Option<String>,
}

impl Adjudication {
    pub fn validate(&self) -> Result<()> {
        if self.verdict == Verdict::Fraudulent {
            if self.risk_level == RiskLevel::Low {
                return Err(Error::validation(
                    "risk_level",
                    "fraudulent verdict requires medium or high risk",
                ));
            }
            if self.evidence_chains.is_empty() {
                return Err(Error::validation(
                    "evidence_chains",
                    "fraudulent verdict requires at least one evidence chain",
                ));
            }
        }
        Ok(())
    }

    pub fn is_positive(&self) -> bool {
        self.verdict == Verdict::Fraudulent
    }
}
