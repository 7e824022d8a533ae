//! Parser for the fenced `VERDICT` / `RISK` / `CHAINS` reply block.

use std::fmt;

use crate::model::{EvidenceChain, RiskLevel, Verdict};

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ParsedReply {
    pub verdict: Verdict,
    pub risk_level: RiskLevel,
    pub evidence_chains: Vec<EvidenceChain>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum ReplyError {
    MissingField(&'static str),
    BadValue { field: &'static str, value: String },
    Inconsistent(&'static str),
}

impl fmt::Display for ReplyError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ReplyError::MissingField(field) => write!(f, "missing {field} line"),
            ReplyError::BadValue { field, value } => write!(f, "unrecognized {field} value {value:?}"),
            ReplyError::Inconsistent(why) => f.write_str(why),
        }
    }
}

impl std::error::Error for ReplyError {}

/// The body of the first fenced block, or the whole reply if there is none.
fn block(reply: &str) -> &str {
    let Some(open) = reply.find("```") else { return reply };
    let after = &reply[open + 3..];
    // Skip an info string such as ```text on the opening line.
    let body = match after.find('\n') {
        Some(nl) => &after[nl + 1..],
        None => after,
    };
    match body.find("```") {
        Some(close) => &body[..close],
        None => body,
    }
}

fn field_value<'a>(line: &'a str, name: &str) -> Option<&'a str> {
    let (head, rest) = line.split_once(':')?;
    head.trim().eq_ignore_ascii_case(name).then(|| rest.trim())
}

fn clean(v: &str) -> String {
    v.trim_matches(|c: char| c == '*' || c == '`' || c == '"' || c == '\'' || c.is_whitespace())
        .to_ascii_lowercase()
}

fn parse_verdict(v: &str) -> Result<Verdict, ReplyError> {
    match clean(v).as_str() {
        "fraudulent" => Ok(Verdict::Fraudulent),
        "genuine" => Ok(Verdict::Genuine),
        "inconclusive" => Ok(Verdict::Inconclusive),
        _ => Err(ReplyError::BadValue {
            field: "VERDICT",
            value: v.chars().take(80).collect(),
        }),
    }
}

fn parse_risk(v: &str) -> Result<RiskLevel, ReplyError> {
    match clean(v).as_str() {
        "low" => Ok(RiskLevel::Low),
        "medium" => Ok(RiskLevel::Medium),
        "high" => Ok(RiskLevel::High),
        _ => Err(ReplyError::BadValue {
            field: "RISK",
            value: v.chars().take(80).collect(),
        }),
    }
}

fn parse_chain(line: &str) -> Option<EvidenceChain> {
    let item = line.trim_start().strip_prefix(['-', '*'])?.trim();
    if item.is_empty() {
        return None;
    }
    let (path, rationale) = match item.split_once("::") {
        Some((p, r)) => (p.trim(), r.trim()),
        None => (item, ""),
    };
    Some(EvidenceChain {
        path: path.to_string(),
        rationale: rationale.to_string(),
    })
}

/// Parses a model reply. Accepts any input without panicking.
pub fn parse_reply(reply: &str) -> Result<ParsedReply, ReplyError> {
    let mut verdict = None;
    let mut risk = None;
    let mut chains = Vec::new();
    let mut in_chains = false;
    for line in block(reply).lines() {
        let line = line.trim_end();
        if let Some(v) = field_value(line, "VERDICT") {
            verdict = Some(parse_verdict(v)?);
            in_chains = false;
        } else if let Some(v) = field_value(line, "RISK") {
            risk = Some(parse_risk(v)?);
            in_chains = false;
        } else if let Some(v) = field_value(line, "CHAINS") {
            in_chains = true;
            if !v.is_empty() && !v.eq_ignore_ascii_case("none") {
                chains.extend(parse_chain(&format!("- {v}")));
            }
        } else if in_chains {
            chains.extend(parse_chain(line));
        }
    }
    let verdict = verdict.ok_or(ReplyError::MissingField("VERDICT"))?;
    let risk_level = risk.ok_or(ReplyError::MissingField("RISK"))?;
    if verdict == Verdict::Fraudulent {
        if risk_level == RiskLevel::Low {
            return Err(ReplyError::Inconsistent("fraudulent verdict with low risk"));
        }
        if chains.is_empty() {
            return Err(ReplyError::Inconsistent("fraudulent verdict without evidence chains"));
        }
    }
    Ok(ParsedReply {
        verdict,
        risk_level,
        evidence_chains: chains,
    })
}
