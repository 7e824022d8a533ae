//! Deterministic offline encoders.
//!
//! Dense: lowercase, confusable-folded character 3-grams of the text and its image
//! descriptions, FNV-1a hashed into `dim` buckets with a hash-derived
//! sign, counted, L2-normalized.
//! Sparse: alphanumeric tokens, lowercase, stopwords dropped, weight
//! `1 + ln(tf)`. Image descriptions are assembled from fixed vocabularies
//! chosen by hashing the image reference.

use std::collections::BTreeMap;

use super::{Encoder, DEFAULT_DENSE_DIM, IMAGE_DELIMITER};
use crate::error::{Error, Result};
use crate::model::SparseVector;

pub const STOPWORDS: &[&str] = &[
    "a", "an", "and", "are", "as", "at", "be", "been", "but", "by", "did", "do", "for", "from", "had", "has", "have",
    "i", "image", "in", "is", "it", "its", "me", "my", "of", "on", "or", "our", "so", "that", "the", "their", "them",
    "these", "they", "this", "those", "to", "too", "was", "we", "were", "with", "you", "your",
];

/// Scheme every mock-resolvable image reference must carry.
pub const MOCK_IMAGE_SCHEME: &str = "img://";

const LIGHTING: &[&str] = &[
    "sunlit",
    "dim",
    "overexposed",
    "studio-lit",
    "backlit",
    "shadowy",
    "flash-lit",
    "warm-toned",
    "hazy",
    "neon-lit",
    "candlelit",
    "grainy",
    "high-contrast",
    "washed-out",
    "golden-hour",
    "fluorescent",
];
const COLORS: &[&str] = &[
    "crimson",
    "teal",
    "charcoal",
    "ivory",
    "mustard",
    "lilac",
    "olive",
    "cobalt",
    "coral",
    "slate",
    "amber",
    "mint",
    "burgundy",
    "turquoise",
    "beige",
    "magenta",
    "navy",
    "peach",
    "graphite",
    "lavender",
    "rust",
    "sage",
    "scarlet",
    "cream",
];
const OBJECTS: &[&str] = &[
    "kettle",
    "sneaker",
    "handbag",
    "smartwatch",
    "notebook",
    "speaker",
    "lamp",
    "jacket",
    "blender",
    "headset",
    "mug",
    "backpack",
    "charger",
    "tripod",
    "cushion",
    "thermos",
    "wallet",
    "umbrella",
    "perfume",
    "sunglasses",
    "toothbrush",
    "keyboard",
    "saucepan",
    "teapot",
    "scarf",
    "drone",
    "vase",
    "bracelet",
    "helmet",
    "candle",
    "stapler",
    "glove",
];
const SURFACES: &[&str] = &[
    "wooden desk",
    "marble counter",
    "bedsheet",
    "carpet",
    "car seat",
    "glass shelf",
    "cardboard box",
    "granite slab",
    "picnic blanket",
    "office chair",
    "windowsill",
    "doormat",
    "bathroom tile",
    "kitchen island",
    "garden bench",
    "ironing board",
    "piano lid",
    "laundry pile",
    "bookcase",
    "stair step",
    "hotel bed",
    "workbench",
    "patio table",
    "sofa arm",
];
const DETAILS: &[&str] = &[
    "visible price sticker",
    "blurred background",
    "watermark in corner",
    "hand holding it",
    "receipt beside it",
    "packaging torn open",
    "bold banner overlay",
    "tilted framing",
    "close crop",
    "duplicate items stacked",
    "cat in frame",
    "lens flare",
    "thumb over lens",
    "mirror reflection",
    "barcode showing",
    "ruler for scale",
    "motion blur",
    "coffee ring nearby",
    "pet hair visible",
    "packing slip",
    "dusty surface",
    "fingerprints visible",
    "timestamp overlay",
    "cropped edge",
];

/// Cyrillic and Greek lookalikes and the digit zero, mapped to the Latin
/// letter they imitate.
const CONFUSABLES: &[(char, char)] = &[
    ('\u{0430}', 'a'),
    ('\u{0441}', 'c'),
    ('\u{0435}', 'e'),
    ('\u{0456}', 'i'),
    ('\u{043e}', 'o'),
    ('\u{0440}', 'p'),
    ('\u{0455}', 's'),
    ('\u{0445}', 'x'),
    ('\u{0443}', 'y'),
    ('\u{03bf}', 'o'),
    ('\u{03b1}', 'a'),
    ('\u{03b5}', 'e'),
    ('0', 'o'),
];

/// Latin skeleton of a lowercase character; others pass through.
pub fn fold_confusable(c: char) -> char {
    CONFUSABLES.iter().find(|(k, _)| *k == c).map_or(c, |(_, v)| *v)
}

pub(crate) fn fnv1a(bytes: &[u8]) -> u64 {
    let mut h: u64 = 0xcbf2_9ce4_8422_2325;
    for b in bytes {
        h ^= u64::from(*b);
        h = h.wrapping_mul(0x0000_0100_0000_01b3);
    }
    h
}

fn splitmix(mut x: u64) -> u64 {
    x = x.wrapping_add(0x9e37_79b9_7f4a_7c15);
    x = (x ^ (x >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    x = (x ^ (x >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    x ^ (x >> 31)
}

/// Hashed character-trigram count vector over the confusable-folded
/// lowercase text, L2-normalized. The top hash bit
/// picks the sign of each gram's contribution, so unrelated texts land near
/// orthogonal. Inputs shorter than three characters contribute a single gram.
pub fn hashed_trigram_vector(text: &str, dim: usize) -> Vec<f32> {
    let chars: Vec<char> = text.to_lowercase().chars().map(fold_confusable).collect();
    let mut counts = vec![0.0f64; dim];
    let mut buf = [0u8; 12];
    let mut bump = |gram: &[char]| {
        let mut n = 0;
        for c in gram {
            n += c.encode_utf8(&mut buf[n..]).len();
        }
        let h = fnv1a(&buf[..n]);
        let sign = if h >> 63 == 0 { 1.0 } else { -1.0 };
        counts[(h % dim as u64) as usize] += sign;
    };
    if chars.len() < 3 {
        if !chars.is_empty() {
            bump(&chars);
        }
    } else {
        chars.windows(3).for_each(&mut bump);
    }
    let norm = counts.iter().map(|c| c * c).sum::<f64>().sqrt();
    if norm == 0.0 {
        return vec![0.0; dim];
    }
    counts.iter().map(|c| (c / norm) as f32).collect()
}

/// Lowercased alphanumeric runs; everything else separates tokens.
pub fn tokenize(text: &str) -> Vec<String> {
    text.split(|c: char| !c.is_alphanumeric())
        .filter(|t| !t.is_empty())
        .map(str::to_lowercase)
        .collect()
}

#[derive(Debug, Clone)]
pub struct MockEncoder {
    dim: usize,
}

impl MockEncoder {
    pub fn new(dim: usize) -> Self {
        assert!(dim > 0, "dense dimension must be positive");
        Self { dim }
    }
}

impl Default for MockEncoder {
    fn default() -> Self {
        Self::new(DEFAULT_DENSE_DIM)
    }
}

impl Encoder for MockEncoder {
    fn dimension(&self) -> usize {
        self.dim
    }

    fn embed_dense(&self, text: &str, image_refs: &[String]) -> Result<Vec<f32>> {
        if text.is_empty() && image_refs.is_empty() {
            return Err(Error::validation("text", "empty input: no text and no images"));
        }
        let mut joined = text.to_string();
        for r in image_refs {
            joined.push_str(IMAGE_DELIMITER);
            joined.push_str(&self.describe_image(r)?);
        }
        Ok(hashed_trigram_vector(&joined, self.dim))
    }

    fn describe_image(&self, image_ref: &str) -> Result<String> {
        let key = image_ref
            .strip_prefix(MOCK_IMAGE_SCHEME)
            .filter(|rest| !rest.trim().is_empty())
            .ok_or_else(|| Error::MissingImage(image_ref.to_string()))?;
        let mut h = fnv1a(key.as_bytes());
        let mut pick = |options: &[&'static str]| {
            h = splitmix(h);
            options[(h % options.len() as u64) as usize]
        };
        let lighting = pick(LIGHTING);
        let color = pick(COLORS);
        let object = pick(OBJECTS);
        let surface = pick(SURFACES);
        let detail = pick(DETAILS);
        let serial = splitmix(h) % 100_000;
        Ok(format!(
            "{color} {object}, {lighting}, {surface}, {detail} #{serial:05}"
        ))
    }

    fn embed_sparse(&self, augmented_text: &str) -> Result<SparseVector> {
        if augmented_text.is_empty() {
            return Err(Error::validation("augmented_text", "empty input"));
        }
        let mut tf: BTreeMap<String, u32> = BTreeMap::new();
        for tok in tokenize(augmented_text) {
            if STOPWORDS.binary_search(&tok.as_str()).is_err() {
                *tf.entry(tok).or_default() += 1;
            }
        }
        Ok(tf.into_iter().map(|(t, n)| (t, 1.0 + f64::from(n).ln())).collect())
    }
}
