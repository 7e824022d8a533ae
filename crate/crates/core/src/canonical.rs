//! Canonical text form: JSON with object keys sorted and no insignificant
//! whitespace. Two serializations of equal values are byte-identical, which
//! keeps log files, hashes and test fixtures stable.

use serde::de::DeserializeOwned;
use serde::Serialize;

use crate::error::Result;
use crate::model::Review;

/// Serializes any value in canonical form.
///
/// Going through `serde_json::Value` sorts every object's keys (the map
/// backing `Value` is ordered), independent of struct declaration order.
pub fn to_vec<T: Serialize + ?Sized>(value: &T) -> Result<Vec<u8>> {
    let value = serde_json::to_value(value)?;
    Ok(serde_json::to_vec(&value)?)
}

pub fn to_string<T: Serialize + ?Sized>(value: &T) -> Result<String> {
    let value = serde_json::to_value(value)?;
    Ok(serde_json::to_string(&value)?)
}

pub fn from_slice<T: DeserializeOwned>(bytes: &[u8]) -> Result<T> {
    Ok(serde_json::from_slice(bytes)?)
}

pub fn from_str<T: DeserializeOwned>(s: &str) -> Result<T> {
    Ok(serde_json::from_str(s)?)
}

/// Validates, then serializes a review.
pub fn serialize_review(review: &Review) -> Result<Vec<u8>> {
    review.validate()?;
    to_vec(review)
}

pub fn deserialize_review(bytes: &[u8]) -> Result<Review> {
    let review: Review = from_slice(bytes)?;
    review.validate()?;
    Ok(review)
}

/// Writes values as canonical JSON lines.
pub fn write_lines<'a, T, I>(mut out: impl std::io::Write, values: I) -> Result<()>
where
    T: Serialize + 'a,
    I: IntoIterator<Item = &'a T>,
{
    for v in values {
        out.write_all(&to_vec(v)?)?;
        out.write_all(b"\n")?;
    }
    Ok(())
}

/// Reads canonical JSON lines, skipping blank lines.
pub fn read_lines<T: DeserializeOwned>(input: impl std::io::BufRead) -> Result<Vec<T>> {
    let mut out = Vec::new();
    for line in input.lines() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        out.push(from_str(&line)?);
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{
        validate_behavior, Adjudication, AdjudicationSource, BehaviorRecord, EmbeddingRecord, EvidenceChain, Label,
        RiskLevel, SparseVector, Verdict,
    };
    use proptest::prelude::*;

    #[test]
    fn image_only_review_serializes() {
        let r = Review {
            review_id: "r1".into(),
            item_id: "i1".into(),
            user_id: "u1".into(),
            text: String::new(),
            image_refs: vec!["img://promo-001".into()],
            created_at: 1_700_000_000,
            label: None,
        };
        let s = String::from_utf8(serialize_review(&r).unwrap()).unwrap();
        assert!(s.contains(r#""image_refs":["img://promo-001"]"#), "{s}");
        assert!(s.contains(r#""text":"""#), "{s}");
        assert!(!s.contains(' '), "no insignificant whitespace: {s}");
    }

    #[test]
    fn keys_are_sorted() {
        let r = Review {
            review_id: "r1".into(),
            item_id: "i1".into(),
            user_id: "u1".into(),
            text: "ok".into(),
            image_refs: vec![],
            created_at: 5,
            label: Some(Label::Genuine),
        };
        let s = to_string(&r).unwrap();
        assert_eq!(
            s,
            r#"{"created_at":5,"image_refs":[],"item_id":"i1","label":"genuine","review_id":"r1","text":"ok","user_id":"u1"}"#
        );
    }

    #[test]
    fn invalid_review_names_the_field() {
        let r = Review {
            review_id: String::new(),
            item_id: "i1".into(),
            user_id: "u1".into(),
            text: "x".into(),
            image_refs: vec![],
            created_at: 0,
            label: None,
        };
        assert_eq!(serialize_review(&r).unwrap_err().field(), Some("review_id"));
    }

    fn arb_review() -> impl Strategy<Value = Review> {
        (
            "[a-z0-9-]{1,12}",
            "[a-z0-9]{1,8}",
            "[a-z0-9]{1,8}",
            "\\PC{0,40}",
            proptest::collection::vec("img://[a-z0-9-]{1,10}", 0..3),
            0i64..2_000_000_000,
            proptest::option::of(prop_oneof![Just(Label::Genuine), Just(Label::Deceptive)]),
        )
            .prop_map(
                |(review_id, item_id, user_id, text, image_refs, created_at, label)| Review {
                    review_id,
                    item_id,
                    user_id,
                    text,
                    image_refs,
                    created_at,
                    label,
                },
            )
            .prop_filter("valid", |r| r.validate().is_ok())
    }

    fn arb_behavior() -> impl Strategy<Value = BehaviorRecord> {
        (0usize..4, "[a-z0-9]{1,6}", "[a-z0-9]{1,6}", 0i64..2_000_000_000).prop_map(|(kind, a, b, t)| match kind {
            0 => BehaviorRecord::posted(&a, &b, t),
            1 => BehaviorRecord::logged_in_from(&a, &b, t),
            2 => BehaviorRecord::connected_via(&a, &b, t),
            _ => BehaviorRecord::attached_to(&a, &b, t),
        })
    }

    proptest! {
        #[test]
        fn review_round_trip_and_stability(r in arb_review()) {
            let a = serialize_review(&r).unwrap();
            let b = serialize_review(&r).unwrap();
            prop_assert_eq!(&a, &b);
            prop_assert_eq!(deserialize_review(&a).unwrap(), r);
        }

        #[test]
        fn behavior_round_trip(b in arb_behavior()) {
            validate_behavior(&b).unwrap();
            let bytes = to_vec(&b).unwrap();
            prop_assert_eq!(from_slice::<BehaviorRecord>(&bytes).unwrap(), b);
        }

        #[test]
        fn embedding_and_adjudication_round_trip(
            dense in proptest::collection::vec(-1.0f32..1.0, 1..16),
            terms in proptest::collection::btree_map("[a-z]{1,6}", 0.0f64..5.0, 0..6),
            chains in proptest::collection::vec(("\\PC{0,20}", "\\PC{0,20}"), 0..3),
        ) {
            let rec = EmbeddingRecord {
                review_id: "r".into(),
                dense,
                sparse: terms.into_iter().collect::<SparseVector>(),
                augmented_text: "t".into(),
                indexed_at: 3,
            };
            let bytes = to_vec(&rec).unwrap();
            prop_assert_eq!(from_slice::<EmbeddingRecord>(&bytes).unwrap(), rec);

            let adj = Adjudication {
                review_id: "r".into(),
                verdict: Verdict::Inconclusive,
                risk_level: RiskLevel::Medium,
                evidence_chains: chains
                    .into_iter()
                    .map(|(path, rationale)| EvidenceChain { path, rationale })
                    .collect(),
                source: AdjudicationSource::Model,
                created_at: 9,
                raw_reply: Some("raw".into()),
            };
            let bytes = to_vec(&adj).unwrap();
            prop_assert_eq!(from_slice::<Adjudication>(&bytes).unwrap(), adj);
        }
    }
}
