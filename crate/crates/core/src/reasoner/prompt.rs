//! Prompt assembly from the versioned template in `assets/`.

use std::collections::BTreeSet;
use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use super::paths::PathSelection;
use crate::graph::{EvidenceGraph, NodeId, ReviewNode, ReviewRole};
use crate::index::HybridIndex;
use crate::model::{Relation, Review};

pub const TEMPLATE_VERSION: &str = "v1";
pub const TEMPLATE: &str = include_str!("../../assets/adjudication_prompt.v1.txt");

const SECTIONS: [&str; 5] = ["## ROLE", "## TASK", "## EVIDENCE", "## REASONING", "## OUTPUT FORMAT"];

/// Source of the text shown for each review: normally the augmented text
/// held by the index, so image descriptions are included.
pub trait TextLookup {
    fn review_text(&self, review_id: &str) -> Option<String>;
}

impl TextLookup for HybridIndex {
    fn review_text(&self, review_id: &str) -> Option<String> {
        self.get(review_id).map(|r| r.augmented_text.clone())
    }
}

impl TextLookup for std::collections::HashMap<String, String> {
    fn review_text(&self, review_id: &str) -> Option<String> {
        self.get(review_id).cloned()
    }
}

/// Falls back from one lookup to another, e.g. evicted embeddings to raw
/// review text.
pub struct Fallback<'a>(pub &'a dyn TextLookup, pub &'a dyn TextLookup);

impl TextLookup for Fallback<'_> {
    fn review_text(&self, review_id: &str) -> Option<String> {
        self.0.review_text(review_id).or_else(|| self.1.review_text(review_id))
    }
}

impl TextLookup for crate::store::ReviewStore {
    fn review_text(&self, review_id: &str) -> Option<String> {
        self.get(review_id).map(|r| r.text.clone())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PromptBundle {
    pub template_version: String,
    pub role_block: String,
    pub task_block: String,
    pub evidence_block: String,
    pub reasoning_block: String,
    pub output_schema_block: String,
    pub rendered_text: String,
}

fn split_template() -> [&'static str; 5] {
    let mut starts = SECTIONS.map(|h| TEMPLATE.find(h).expect("template section present"));
    starts.sort_unstable();
    let mut out = [""; 5];
    for i in 0..5 {
        let end = starts.get(i + 1).copied().unwrap_or(TEMPLATE.len());
        out[i] = TEMPLATE[starts[i]..end].trim_end();
    }
    out
}

fn indent_text(out: &mut String, text: &str) {
    if text.is_empty() {
        out.push_str("  | (no text)\n");
    }
    for line in text.lines() {
        let _ = writeln!(out, "  | {line}");
    }
}

fn offset_hours(node: &ReviewNode, meta: &ReviewNode) -> String {
    let h = (node.created_at - meta.created_at) as f64 / 3600.0;
    format!("{h:+.1}h")
}

fn acquisition(node: &ReviewNode) -> String {
    match node.role {
        ReviewRole::Meta => "target".into(),
        ReviewRole::Retrieved => match node.retrieval_score {
            Some(s) => format!("retrieved by similarity, score {s:.4}"),
            None => "retrieved by similarity".into(),
        },
        ReviewRole::Expanded => match &node.via {
            Some(e) => format!("expanded via {e}"),
            None => "expanded".into(),
        },
    }
}

fn relation_phrase(review: &str, entity: &str, relation: Relation) -> String {
    match relation {
        Relation::Posted => format!("{entity} posted {review}"),
        Relation::AttachedTo => format!("{review} is attached to {entity}"),
        Relation::LoggedInFrom => format!("author of {review} logged in from {entity}"),
        Relation::ConnectedVia => format!("author of {review} connected via {entity}"),
    }
}

/// Evidence section: the target, every review node, RR similarities,
/// entities, behavioral records and ranked paths.
pub fn render_evidence(g: &EvidenceGraph, selection: &PathSelection, texts: &dyn TextLookup) -> String {
    let meta = g.meta();
    let mut out = String::new();

    out.push_str("### Target review\n");
    let _ = writeln!(
        out,
        "review:{} by user:{} on item:{} at {}",
        meta.review_id, meta.user_id, meta.item_id, meta.created_at
    );
    out.push_str("content (text, image description):\n");
    indent_text(&mut out, &texts.review_text(&meta.review_id).unwrap_or_default());

    out.push_str("\n### Related reviews\n");
    let others: Vec<&ReviewNode> = g.review_nodes().filter(|n| n.role != ReviewRole::Meta).collect();
    if others.is_empty() {
        out.push_str("(none)\n");
    }
    for n in others {
        let _ = writeln!(
            out,
            "- review:{} [{}] by user:{} on item:{} at {} ({} from target)",
            n.review_id,
            acquisition(n),
            n.user_id,
            n.item_id,
            n.created_at,
            offset_hours(n, meta)
        );
        indent_text(&mut out, &texts.review_text(&n.review_id).unwrap_or_default());
    }

    out.push_str("\n### Pairwise similarities\n");
    let mut any = false;
    for e in g.rr_edges() {
        any = true;
        let _ = writeln!(out, "- review:{} ~ review:{} : {:.4}", e.a, e.b, e.weight);
    }
    if !any {
        out.push_str("(none)\n");
    }

    out.push_str("\n### Entities\n");
    if g.entity_count() == 0 {
        out.push_str("(none)\n");
    }
    for e in g.entity_nodes() {
        let reviews = g.reviews_of(e);
        let authors: BTreeSet<&str> = reviews.iter().map(|r| r.user_id.as_str()).collect();
        let ids: Vec<String> = reviews.iter().map(|r| format!("review:{}", r.review_id)).collect();
        let _ = writeln!(
            out,
            "- {e}: {} linked reviews from {} distinct authors [{}]",
            ids.len(),
            authors.len(),
            ids.join(", ")
        );
    }

    out.push_str("\n### Entity-sharing records\n");
    let mut any = false;
    for e in g.ee_edges() {
        any = true;
        let _ = writeln!(out, "- {} {} {}", e.source, e.relation, e.target);
    }
    for e in g.re_edges() {
        any = true;
        let review = NodeId::review(e.review_id.clone()).key();
        let _ = writeln!(out, "- {}", relation_phrase(&review, &e.entity.key(), e.relation));
    }
    if !any {
        out.push_str("(none)\n");
    }

    out.push_str("\n### Evidence paths\n");
    if selection.paths.is_empty() {
        out.push_str("(none)\n");
    }
    for (i, p) in selection.paths.iter().enumerate() {
        let _ = writeln!(out, "{}. {} (weight {:.4})", i + 1, p, p.aggregate_weight);
    }
    if selection.truncated {
        let covered: BTreeSet<&str> = selection
            .paths
            .iter()
            .flat_map(|p| p.node_sequence.iter().map(String::as_str))
            .collect();
        let all_keys: Vec<String> = g
            .review_nodes()
            .map(|n| NodeId::review(n.review_id.clone()).key())
            .chain(g.entity_nodes().map(|e| e.key()))
            .collect();
        let missing: Vec<&str> = all_keys
            .iter()
            .map(String::as_str)
            .filter(|k| !covered.contains(k))
            .collect();
        let _ = writeln!(
            out,
            "Note: path list truncated at {} entries. Nodes on no listed path: {}",
            selection.paths.len(),
            if missing.is_empty() {
                "(none)".to_string()
            } else {
                missing.join(", ")
            }
        );
    }
    out.trim_end().to_string()
}

/// Fills the template. `meta` supplies the target id; its ground-truth
/// field is never read.
pub fn assemble_prompt(
    g: &EvidenceGraph,
    selection: &PathSelection,
    meta: &Review,
    texts: &dyn TextLookup,
) -> PromptBundle {
    let [role, task, evidence, reasoning, output] = split_template();
    let task_block = task.replace("{{META_REVIEW_ID}}", &format!("review:{}", meta.review_id));
    let evidence_block = evidence.replace("{{EVIDENCE}}", &render_evidence(g, selection, texts));
    let blocks = [
        role.to_string(),
        task_block,
        evidence_block,
        reasoning.to_string(),
        output.to_string(),
    ];
    let rendered_text = blocks.join("\n\n") + "\n";
    let [role_block, task_block, evidence_block, reasoning_block, output_schema_block] = blocks;
    PromptBundle {
        template_version: TEMPLATE_VERSION.into(),
        role_block,
        task_block,
        evidence_block,
        reasoning_block,
        output_schema_block,
        rendered_text,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::reasoner::paths::select_paths;
    use crate::store::ReviewStore;

    fn meta() -> Review {
        Review {
            review_id: "m".into(),
            item_id: "i0".into(),
            user_id: "u0".into(),
            text: "fine kettle".into(),
            image_refs: vec![],
            created_at: 100,
            label: Some(crate::model::Label::Deceptive),
        }
    }

    #[test]
    fn sections_appear_in_fixed_order() {
        let m = meta();
        let mut rs = ReviewStore::new();
        rs.insert(m.clone()).unwrap();
        let g = EvidenceGraph::seed(&m, &[], &rs, 0.3).unwrap();
        let sel = select_paths(&g, 40);
        let b = assemble_prompt(&g, &sel, &m, &rs);
        let pos: Vec<usize> = SECTIONS.iter().map(|h| b.rendered_text.find(h).unwrap()).collect();
        assert!(pos.windows(2).all(|w| w[0] < w[1]));
        for lit in [
            "senior e-commerce risk control expert",
            "anti-fraud auditor",
            "Entity Consistency Audit",
            "Semantic Style Alignment",
        ] {
            assert!(b.rendered_text.contains(lit), "{lit}");
        }
        assert!(b.evidence_block.contains("### Evidence paths\n(none)"));
        assert!(b.evidence_block.contains("### Entities\n(none)"));
        assert!(b.rendered_text.contains("fine kettle"));
        assert!(!b.rendered_text.to_lowercase().contains("label"));
        assert!(!b.rendered_text.contains("deceptive"));
        assert!(!b.rendered_text.contains("{{"));
    }
}
