//! Synthetic labeled corpora with planted collusion campaigns.
//!
//! Genuine reviews come from a slot-filled phrase corpus, each written by a
//! user with a private device and IP. Campaign reviews start from a
//! promotional template, go through synonym paraphrasing and homoglyph
//! substitution, share the configured devices/IPs and target item, and are
//! packed into `time_spread_seconds`. Every random draw comes from a ChaCha8
//! stream derived from the seed and the review's position, so a corpus is a
//! pure function of its [`CorpusSpec`].

mod files;
mod tables;

use std::collections::{BTreeMap, BTreeSet};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

pub use files::{read_corpus, write_corpus, BEHAVIORS_FILE, LABELS_FILE, REVIEWS_FILE};
pub use tables::{HOMOGLYPHS, PROMO_ITEMS, PROMO_TEMPLATES, SYNONYMS};

use crate::error::{Error, Result};
use crate::model::{BehaviorRecord, Label, Review, Timestamp, SECONDS_PER_DAY};

/// 2025-01-01T00:00:00Z; corpora start here.
pub const BASE_EPOCH: Timestamp = 1_735_689_600;

/// Share of genuine reviews that carry their own photo.
const GENUINE_IMAGE_RATE: f64 = 0.2;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SharedEntity {
    Device,
    Ip,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CampaignSpec {
    pub n_colluders: usize,
    pub shared_entities: BTreeSet<SharedEntity>,
    pub template_text: String,
    pub paraphrase_rate: f64,
    pub rare_char_substitution_rate: f64,
    pub time_spread_seconds: i64,
    pub target_item: String,
    pub reuse_image: bool,
}

impl CampaignSpec {
    pub fn validate(&self) -> Result<()> {
        if self.n_colluders < 2 {
            return Err(Error::validation(
                "n_colluders",
                "a campaign needs at least 2 colluders",
            ));
        }
        for (field, rate) in [
            ("paraphrase_rate", self.paraphrase_rate),
            ("rare_char_substitution_rate", self.rare_char_substitution_rate),
        ] {
            if !(0.0..=1.0).contains(&rate) {
                return Err(Error::validation(field, "must lie in [0, 1]"));
            }
        }
        if self.time_spread_seconds < 1 {
            return Err(Error::validation("time_spread_seconds", "must be >= 1"));
        }
        if self.template_text.trim().is_empty() {
            return Err(Error::validation("template_text", "must be non-empty"));
        }
        if self.target_item.trim().is_empty() {
            return Err(Error::validation("target_item", "must be non-empty"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CorpusSpec {
    pub n_genuine: usize,
    pub campaigns: Vec<CampaignSpec>,
    pub time_horizon_days: u32,
    pub rng_seed: u64,
}

impl CorpusSpec {
    pub fn validate(&self) -> Result<()> {
        if self.time_horizon_days < 1 {
            return Err(Error::validation("time_horizon_days", "must be >= 1"));
        }
        let total = self.n_genuine + self.campaigns.iter().map(|c| c.n_colluders).sum::<usize>();
        if total == 0 {
            return Err(Error::validation("n_genuine", "corpus would contain no reviews"));
        }
        let horizon = self.horizon_seconds();
        for (i, c) in self.campaigns.iter().enumerate() {
            c.validate()
                .map_err(|e| Error::validation(format!("campaigns[{i}]"), e.to_string()))?;
            if c.time_spread_seconds > horizon {
                return Err(Error::validation(
                    format!("campaigns[{i}].time_spread_seconds"),
                    "exceeds the corpus time horizon",
                ));
            }
        }
        Ok(())
    }

    pub fn horizon_seconds(&self) -> i64 {
        i64::from(self.time_horizon_days) * SECONDS_PER_DAY
    }

    /// Evaluation workload: `n_campaigns` campaigns of 5 to 20 colluders
    /// each over a 30-day horizon, with mixed shared entities and moderate
    /// text noise.
    pub fn benchmark(rng_seed: u64, n_campaigns: usize, n_genuine: usize) -> Self {
        let mut rng = stream(rng_seed, STREAM_SPEC, 0);
        let campaigns = (0..n_campaigns)
            .map(|n| {
                let template = PROMO_TEMPLATES[n % PROMO_TEMPLATES.len()];
                let product = PROMO_ITEMS[rng.random_range(0..PROMO_ITEMS.len())];
                let shared_entities = match rng.random_range(0..3) {
                    0 => BTreeSet::from([SharedEntity::Device]),
                    1 => BTreeSet::from([SharedEntity::Ip]),
                    _ => BTreeSet::from([SharedEntity::Device, SharedEntity::Ip]),
                };
                CampaignSpec {
                    n_colluders: rng.random_range(5..=20),
                    shared_entities,
                    template_text: template.replace("{item}", product),
                    paraphrase_rate: 0.1,
                    rare_char_substitution_rate: 0.1,
                    time_spread_seconds: 48 * 3600,
                    target_item: format!("item-c{n:02}"),
                    reuse_image: rng.random_bool(0.5),
                }
            })
            .collect();
        CorpusSpec {
            n_genuine,
            campaigns,
            time_horizon_days: 30,
            rng_seed,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Corpus {
    /// Sorted by `(created_at, review_id)`, labels attached.
    pub reviews: Vec<Review>,
    /// Every behavioral record: `posted`, `attached_to`, device and IP.
    pub behaviors: Vec<BehaviorRecord>,
    pub labels: BTreeMap<String, Label>,
}

impl Corpus {
    pub fn deceptive_ids(&self) -> impl Iterator<Item = &String> {
        self.labels
            .iter()
            .filter(|(_, l)| **l == Label::Deceptive)
            .map(|(id, _)| id)
    }
}

const STREAM_GENUINE: u64 = 1;
const STREAM_CAMPAIGN: u64 = 2;
const STREAM_COLLUDER: u64 = 3;
const STREAM_SPEC: u64 = 4;

fn stream(seed: u64, kind: u64, index: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream((kind << 56) | index);
    rng
}

/// Replaces roughly `rate` of the characters that have a homoglyph in
/// [`HOMOGLYPHS`] (matched case-insensitively). Character count is kept.
pub fn rare_char_substitute<R: Rng + ?Sized>(text: &str, rate: f64, rng: &mut R) -> String {
    text.chars()
        .map(|c| {
            let lower = c.to_ascii_lowercase();
            match HOMOGLYPHS.iter().find(|(k, _)| *k == lower) {
                Some((_, glyph)) if rate > 0.0 && rng.random::<f64>() < rate => *glyph,
                _ => c,
            }
        })
        .collect()
}

/// Swaps roughly `rate` of the words found in [`SYNONYMS`] for a synonym,
/// keeping surrounding punctuation and a leading capital.
pub fn paraphrase<R: Rng + ?Sized>(text: &str, rate: f64, rng: &mut R) -> String {
    let mut out = String::with_capacity(text.len());
    let mut word = String::new();
    let flush = |word: &mut String, out: &mut String, rng: &mut R| {
        if word.is_empty() {
            return;
        }
        let lower = word.to_lowercase();
        let swapped = SYNONYMS
            .iter()
            .find(|(w, _)| *w == lower)
            .filter(|_| rate > 0.0 && rng.random::<f64>() < rate)
            .map(|(_, options)| options[rng.random_range(0..options.len())]);
        match swapped {
            Some(s) if word.chars().all(|c| c.is_uppercase()) && word.chars().count() > 1 => {
                out.push_str(&s.to_uppercase())
            }
            Some(s) if word.starts_with(|c: char| c.is_uppercase()) => {
                let mut cs = s.chars();
                if let Some(first) = cs.next() {
                    out.extend(first.to_uppercase());
                    out.push_str(cs.as_str());
                }
            }
            Some(s) => out.push_str(s),
            None => out.push_str(word),
        }
        word.clear();
    };
    for c in text.chars() {
        if c.is_alphanumeric() {
            word.push(c);
        } else {
            flush(&mut word, &mut out, rng);
            out.push(c);
        }
    }
    flush(&mut word, &mut out, rng);
    out
}

fn pick<'a, R: Rng + ?Sized>(rng: &mut R, options: &[&'a str]) -> &'a str {
    options[rng.random_range(0..options.len())]
}

/// Two to four short sentences about one product, drawn from independent
/// slot vocabularies and shuffled.
fn genuine_text<R: Rng + ?Sized>(rng: &mut R) -> String {
    let product = pick(rng, tables::GENUINE_PRODUCTS);
    let mut sentences = vec![format!(
        "The {} on this {product} {}.",
        pick(rng, tables::GENUINE_ASPECTS),
        pick(rng, tables::GENUINE_JUDGEMENTS)
    )];
    if rng.random_bool(0.8) {
        sentences.push(format!(
            "{} {}.",
            pick(rng, tables::GENUINE_USES),
            pick(rng, tables::GENUINE_WHEN)
        ));
    }
    if rng.random_bool(0.6) {
        sentences.push(format!(
            "{}, {}",
            pick(rng, tables::GENUINE_COMPARISONS),
            pick(rng, tables::GENUINE_VERDICTS)
        ));
    }
    if rng.random_bool(0.6) {
        sentences.push(format!(
            "The {} {} too.",
            pick(rng, tables::GENUINE_ASPECTS),
            pick(rng, tables::GENUINE_JUDGEMENTS)
        ));
    }
    for i in (1..sentences.len()).rev() {
        sentences.swap(i, rng.random_range(0..=i));
    }
    sentences.push(pick(rng, tables::GENUINE_CLOSERS).to_string());
    let mut text = sentences.join(" ");
    if let Some(first) = text.get(..1) {
        text = first.to_uppercase() + &text[1..];
    }
    text
}

pub fn generate_corpus(spec: &CorpusSpec) -> Result<Corpus> {
    spec.validate()?;
    let horizon = spec.horizon_seconds();
    let item_pool = (spec.n_genuine * 4).max(64);
    let mut reviews = Vec::new();
    let mut behaviors = Vec::new();

    for i in 0..spec.n_genuine {
        let mut rng = stream(spec.rng_seed, STREAM_GENUINE, i as u64);
        let created_at = BASE_EPOCH + rng.random_range(0..horizon);
        let user = format!("u-g{i:06}");
        let image_refs = if rng.random_bool(GENUINE_IMAGE_RATE) {
            vec![format!("img://g-{i:06}")]
        } else {
            Vec::new()
        };
        let review = Review {
            review_id: format!("g-{i:06}"),
            item_id: format!("item-{:06}", rng.random_range(0..item_pool)),
            user_id: user.clone(),
            text: genuine_text(&mut rng),
            image_refs,
            created_at,
            label: Some(Label::Genuine),
        };
        behaviors.push(BehaviorRecord::posted(&user, &review.review_id, created_at));
        behaviors.push(BehaviorRecord::attached_to(
            &review.review_id,
            &review.item_id,
            created_at,
        ));
        behaviors.push(BehaviorRecord::logged_in_from(&user, &format!("d-g{i:06}"), created_at));
        behaviors.push(BehaviorRecord::connected_via(&user, &format!("ip-g{i:06}"), created_at));
        reviews.push(review);
    }

    for (n, c) in spec.campaigns.iter().enumerate() {
        let mut crng = stream(spec.rng_seed, STREAM_CAMPAIGN, n as u64);
        let start = BASE_EPOCH + crng.random_range(0..=horizon - c.time_spread_seconds);
        let shared_device = format!("d-c{n:02}");
        let shared_ip = format!("ip-c{n:02}");
        for j in 0..c.n_colluders {
            let mut rng = stream(spec.rng_seed, STREAM_COLLUDER, ((n as u64) << 24) | j as u64);
            let created_at = start + rng.random_range(0..=c.time_spread_seconds);
            let user = format!("u-c{n:02}-{j:03}");
            let text = paraphrase(&c.template_text, c.paraphrase_rate, &mut rng);
            let text = rare_char_substitute(&text, c.rare_char_substitution_rate, &mut rng);
            let device = if c.shared_entities.contains(&SharedEntity::Device) {
                shared_device.clone()
            } else {
                format!("d-c{n:02}-{j:03}")
            };
            let ip = if c.shared_entities.contains(&SharedEntity::Ip) {
                shared_ip.clone()
            } else {
                format!("ip-c{n:02}-{j:03}")
            };
            let review_id = format!("c{n:02}-{j:03}");
            behaviors.push(BehaviorRecord::posted(&user, &review_id, created_at));
            behaviors.push(BehaviorRecord::attached_to(&review_id, &c.target_item, created_at));
            behaviors.push(BehaviorRecord::logged_in_from(&user, &device, created_at));
            behaviors.push(BehaviorRecord::connected_via(&user, &ip, created_at));
            reviews.push(Review {
                review_id,
                item_id: c.target_item.clone(),
                user_id: user,
                text,
                image_refs: if c.reuse_image {
                    vec![format!("img://promo-c{n:02}")]
                } else {
                    Vec::new()
                },
                created_at,
                label: Some(Label::Deceptive),
            });
        }
    }

    reviews.sort_by(|a, b| {
        a.created_at
            .cmp(&b.created_at)
            .then_with(|| a.review_id.cmp(&b.review_id))
    });
    behaviors.sort();
    let labels = reviews
        .iter()
        .map(|r| (r.review_id.clone(), r.label.expect("generated reviews are labeled")))
        .collect();
    Ok(Corpus {
        reviews,
        behaviors,
        labels,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn campaign(n: usize, shared: &[SharedEntity]) -> CampaignSpec {
        CampaignSpec {
            n_colluders: n,
            shared_entities: shared.iter().copied().collect(),
            template_text: "Best deal ever, buy now!".into(),
            paraphrase_rate: 0.0,
            rare_char_substitution_rate: 0.0,
            time_spread_seconds: 3600,
            target_item: "item-target".into(),
            reuse_image: false,
        }
    }

    #[test]
    fn good_becomes_g00d() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        assert_eq!(rare_char_substitute("good", 1.0, &mut rng), "g00d");
        assert_eq!(rare_char_substitute("good", 0.0, &mut rng), "good");
    }

    #[test]
    fn homoglyph_keys_are_distinct_lowercase() {
        let keys: BTreeSet<char> = HOMOGLYPHS.iter().map(|(k, _)| *k).collect();
        assert_eq!(keys.len(), HOMOGLYPHS.len());
        assert!(keys.iter().all(|c| c.is_ascii_lowercase()));
        assert!(HOMOGLYPHS.iter().all(|(k, g)| k != g));
    }

    #[test]
    fn substitution_keeps_char_count() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let s = "Excellent price, amazing quality!!";
        assert_eq!(
            rare_char_substitute(s, 0.5, &mut rng).chars().count(),
            s.chars().count()
        );
    }

    #[test]
    fn paraphrase_keeps_case_and_punctuation() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let out = paraphrase("Best deal, BUY now!", 1.0, &mut rng);
        assert!(out.ends_with('!'));
        assert!(out.contains(", "));
        assert_ne!(out, "Best deal, BUY now!");
        assert!(out.starts_with(|c: char| c.is_uppercase()));
        assert_eq!(paraphrase("Best deal", 0.0, &mut rng), "Best deal");
    }

    #[test]
    fn campaign_of_five_shares_one_device() {
        let spec = CorpusSpec {
            n_genuine: 0,
            campaigns: vec![campaign(5, &[SharedEntity::Device])],
            time_horizon_days: 7,
            rng_seed: 11,
        };
        let c = generate_corpus(&spec).unwrap();
        assert_eq!(c.reviews.len(), 5);
        let devices: BTreeSet<String> = c
            .behaviors
            .iter()
            .filter(|b| b.relation == crate::model::Relation::LoggedInFrom)
            .map(|b| format!("{:?}", b.object))
            .collect();
        assert_eq!(devices.len(), 1);
        assert!(c.reviews.iter().all(|r| r.text == "Best deal ever, buy now!"));
        assert!(c.reviews.iter().all(|r| r.label == Some(Label::Deceptive)));
    }

    #[test]
    fn infeasible_specs_are_rejected() {
        let mut c = campaign(3, &[]);
        c.time_spread_seconds = 10 * SECONDS_PER_DAY;
        let spec = CorpusSpec {
            n_genuine: 1,
            campaigns: vec![c],
            time_horizon_days: 7,
            rng_seed: 0,
        };
        assert!(generate_corpus(&spec).is_err());
        let empty = CorpusSpec {
            n_genuine: 0,
            campaigns: vec![],
            time_horizon_days: 7,
            rng_seed: 0,
        };
        assert!(generate_corpus(&empty).is_err());
        assert!(campaign(1, &[]).validate().is_err());
    }

    #[test]
    fn same_seed_same_bytes() {
        let spec = CorpusSpec::benchmark(5, 3, 50);
        let a = crate::canonical::to_string(&generate_corpus(&spec).unwrap()).unwrap();
        let b = crate::canonical::to_string(&generate_corpus(&spec).unwrap()).unwrap();
        assert_eq!(a, b);
    }
}
