//! Records the service persists and returns: cases, auditor decisions and
//! the adoption report.

use serde::{Deserialize, Serialize};

use jarvis_core::error::{Error, Result};
use jarvis_core::graph::GraphExport;
use jarvis_core::model::{Adjudication, Review, RiskLevel, Timestamp, Verdict};
use jarvis_core::pipeline::StageTimings;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Decision {
    Adopted,
    Rejected,
}

impl std::str::FromStr for Decision {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "adopted" => Ok(Decision::Adopted),
            "rejected" => Ok(Decision::Rejected),
            other => Err(Error::validation(
                "decision",
                format!("expected adopted or rejected, got {other:?}"),
            )),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct AuditorDecision {
    /// The case id the decision applies to.
    pub adjudication_id: String,
    pub decision: Decision,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub note: Option<String>,
    pub decided_at: Timestamp,
    pub auditor_id: String,
}

impl AuditorDecision {
    pub fn validate(&self) -> Result<()> {
        if self.adjudication_id.trim().is_empty() {
            return Err(Error::validation("adjudication_id", "must be non-empty"));
        }
        if self.auditor_id.trim().is_empty() {
            return Err(Error::validation("auditor_id", "must be non-empty"));
        }
        Ok(())
    }
}

/// Everything produced for one adjudication request. `decision` and
/// `decision_history` are filled in when the case is read; the persisted
/// form leaves them empty.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CaseRecord {
    pub case_id: String,
    pub review: Review,
    pub graph: GraphExport,
    /// Display form of every selected path, best first.
    pub evidence_paths: Vec<String>,
    pub prompt_template_version: String,
    pub adjudication: Adjudication,
    pub timings: StageTimings,
    /// Wall-clock time the case was opened.
    pub opened_at: Timestamp,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub decision: Option<AuditorDecision>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub decision_history: Vec<AuditorDecision>,
}

impl CaseRecord {
    pub fn validate(&self) -> Result<()> {
        if self.graph.meta_review_id != self.review.review_id {
            return Err(Error::validation(
                "graph.meta_review_id",
                format!(
                    "{} does not match review {}",
                    self.graph.meta_review_id, self.review.review_id
                ),
            ));
        }
        if self.adjudication.review_id != self.review.review_id {
            return Err(Error::validation(
                "adjudication.review_id",
                "does not match the case review",
            ));
        }
        let t = &self.timings;
        if [t.graph_ms, t.paths_ms, t.prompt_ms, t.adjudication_ms]
            .iter()
            .any(|x| !(x.is_finite() && *x >= 0.0))
        {
            return Err(Error::validation("timings", "must be finite and non-negative"));
        }
        if self.review.label.is_some() {
            return Err(Error::validation("review.label", "cases never carry ground truth"));
        }
        self.adjudication.validate()
    }

    pub fn summary(&self) -> CaseSummary {
        CaseSummary {
            case_id: self.case_id.clone(),
            review_id: self.review.review_id.clone(),
            verdict: self.adjudication.verdict,
            risk_level: self.adjudication.risk_level,
            decision: self.decision.as_ref().map(|d| d.decision),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CaseSummary {
    pub case_id: String,
    pub review_id: String,
    pub verdict: Verdict,
    pub risk_level: RiskLevel,
    #[serde(default)]
    pub decision: Option<Decision>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AdoptionReport {
    pub adopted: u64,
    pub rejected: u64,
    pub decided: u64,
    /// `adopted / decided`; `null` while nothing is decided.
    pub rate: Option<f64>,
}

impl AdoptionReport {
    pub fn from_counts(adopted: u64, rejected: u64) -> Self {
        let decided = adopted + rejected;
        Self {
            adopted,
            rejected,
            decided,
            rate: (decided > 0).then(|| adopted as f64 / decided as f64),
        }
    }
}

pub fn case_id(n: u64) -> String {
    format!("case-{n:06}")
}
