//! Evidence-path retrieval, prompt assembly and adjudication.
//!
//! [`select_paths`] ranks simple paths out of the meta review,
//! [`assemble_prompt`] renders them with the rest of the graph into the
//! versioned template, and either [`adjudicate_llm`] or [`adjudicate_mock`]
//! produces the [`Adjudication`].

mod mock;
mod paths;
mod prompt;
mod reply;

use std::sync::Arc;

use serde_json::{json, Value};

pub use mock::{adjudicate_mock, adjudicate_mock_with, mock_signals, MockRules, MockSignals};
pub use paths::{
    retrieve_evidence, select_paths, EvidencePath, PathEdge, PathSelection, DEFAULT_MAX_PATHS, MAX_PATH_EDGES,
};
pub use prompt::{assemble_prompt, render_evidence, Fallback, PromptBundle, TextLookup, TEMPLATE, TEMPLATE_VERSION};
pub use reply::{parse_reply, ParsedReply, ReplyError};

use crate::encoder::{EncoderEndpointConfig, EndpointKind, EndpointMode};
use crate::error::{Error, Result};
use crate::http::{post_json, EndpointSettings, HttpFailure, InflightLimiter};
use crate::model::{Adjudication, AdjudicationSource, RiskLevel, Timestamp, Verdict};

/// A text-completion backend.
pub trait LlmClient: Send + Sync {
    /// Transport failures map to [`Error::AdjudicationUnavailable`].
    fn complete(&self, prompt: &str) -> Result<String>;
}

/// Speaks `POST {"prompt"}` and expects `{"text"}` back.
#[derive(Debug, Clone)]
pub struct RemoteLlm {
    endpoint: EndpointSettings,
    limiter: Arc<InflightLimiter>,
}

impl RemoteLlm {
    pub fn new(cfg: &EncoderEndpointConfig, limiter: Arc<InflightLimiter>) -> Result<Self> {
        cfg.validate()?;
        if cfg.kind != EndpointKind::Llm || cfg.mode != EndpointMode::Remote {
            return Err(Error::validation("kind", "expected a remote llm endpoint"));
        }
        Ok(Self {
            endpoint: EndpointSettings {
                url: cfg.base_url.clone().unwrap_or_default(),
                timeout_ms: cfg.timeout_ms,
                max_retries: cfg.max_retries,
            },
            limiter,
        })
    }

    /// Reads `JARVIS_LLM_URL`.
    pub fn from_env(limiter: Arc<InflightLimiter>) -> Result<Self> {
        Self::new(&EncoderEndpointConfig::remote_from_env(EndpointKind::Llm)?, limiter)
    }
}

impl LlmClient for RemoteLlm {
    fn complete(&self, prompt: &str) -> Result<String> {
        let reply = post_json(&self.endpoint, &json!({ "prompt": prompt }), &self.limiter).map_err(|f| match f {
            HttpFailure::NotFound(m) | HttpFailure::Unavailable(m) => Error::AdjudicationUnavailable(m),
        })?;
        reply
            .get("text")
            .and_then(Value::as_str)
            .map(str::to_string)
            .ok_or_else(|| Error::AdjudicationUnavailable("llm reply has no text field".into()))
    }
}

/// Follow-up prompt sent once when a reply cannot be parsed.
pub fn reformat_prompt(bundle: &PromptBundle, previous: &str, problem: &ReplyError) -> String {
    format!(
        "{}\n## REFORMAT\nYour previous answer could not be read ({problem}). It was:\n<<<\n{previous}\n>>>\n\
         Restate the same judgment using only the block described under OUTPUT FORMAT.\n\n{}\n",
        bundle.rendered_text, bundle.output_schema_block
    )
}

/// Sends the prompt, parses the reply, retries once with a reformat request
/// and falls back to an inconclusive verdict carrying the last raw reply.
pub fn adjudicate_llm(
    bundle: &PromptBundle,
    client: &dyn LlmClient,
    review_id: &str,
    created_at: Timestamp,
) -> Result<Adjudication> {
    let build = |parsed: ParsedReply| Adjudication {
        review_id: review_id.to_string(),
        verdict: parsed.verdict,
        risk_level: parsed.risk_level,
        evidence_chains: parsed.evidence_chains,
        source: AdjudicationSource::Model,
        created_at,
        raw_reply: None,
    };
    let first = client.complete(&bundle.rendered_text)?;
    let problem = match parse_reply(&first) {
        Ok(p) => return Ok(build(p)),
        Err(e) => e,
    };
    let second = client.complete(&reformat_prompt(bundle, &first, &problem))?;
    match parse_reply(&second) {
        Ok(p) => Ok(build(p)),
        Err(_) => Ok(Adjudication {
            review_id: review_id.to_string(),
            verdict: Verdict::Inconclusive,
            risk_level: RiskLevel::Medium,
            evidence_chains: Vec::new(),
            source: AdjudicationSource::Model,
            created_at,
            raw_reply: Some(second),
        }),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::sync::Mutex;

    struct Scripted(Mutex<Vec<Result<String>>>);

    impl LlmClient for Scripted {
        fn complete(&self, _prompt: &str) -> Result<String> {
            self.0.lock().unwrap().remove(0)
        }
    }

    fn bundle() -> PromptBundle {
        PromptBundle {
            template_version: "v1".into(),
            role_block: String::new(),
            task_block: String::new(),
            evidence_block: String::new(),
            reasoning_block: String::new(),
            output_schema_block: "## OUTPUT FORMAT".into(),
            rendered_text: "prompt".into(),
        }
    }

    #[test]
    fn well_formed_reply_is_used() {
        let c = Scripted(Mutex::new(vec![Ok(
            "```\nVERDICT: fraudulent\nRISK: high\nCHAINS:\n- a :: x\n- b :: y\n```".into(),
        )]));
        let a = adjudicate_llm(&bundle(), &c, "m", 5).unwrap();
        assert_eq!(a.verdict, Verdict::Fraudulent);
        assert_eq!(a.evidence_chains.len(), 2);
        assert_eq!(a.source, AdjudicationSource::Model);
        a.validate().unwrap();
    }

    #[test]
    fn retry_then_inconclusive() {
        let c = Scripted(Mutex::new(vec![
            Ok("VERDICT: genuine".into()),
            Ok("still no risk".into()),
        ]));
        let a = adjudicate_llm(&bundle(), &c, "m", 5).unwrap();
        assert_eq!(a.verdict, Verdict::Inconclusive);
        assert_eq!(a.raw_reply.as_deref(), Some("still no risk"));

        let c = Scripted(Mutex::new(vec![
            Ok("junk".into()),
            Ok("VERDICT: genuine\nRISK: low".into()),
        ]));
        assert_eq!(adjudicate_llm(&bundle(), &c, "m", 5).unwrap().verdict, Verdict::Genuine);
    }

    #[test]
    fn transport_failure_propagates() {
        let c = Scripted(Mutex::new(vec![Err(Error::AdjudicationUnavailable("down".into()))]));
        assert!(matches!(
            adjudicate_llm(&bundle(), &c, "m", 5),
            Err(Error::AdjudicationUnavailable(_))
        ));
    }
}
