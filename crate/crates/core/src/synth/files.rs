//! On-disk corpus layout: `reviews.jsonl` (labels stripped),
//! `behaviors.jsonl` and `labels.json`, all canonical JSON.

use std::collections::BTreeMap;
use std::fs::{self, File};
use std::io::{BufReader, BufWriter, Write};
use std::path::Path;

use super::Corpus;
use crate::canonical;
use crate::error::{Error, Result};
use crate::model::{BehaviorRecord, Label, Review};

pub const REVIEWS_FILE: &str = "reviews.jsonl";
pub const BEHAVIORS_FILE: &str = "behaviors.jsonl";
pub const LABELS_FILE: &str = "labels.json";

pub fn write_corpus(dir: &Path, corpus: &Corpus) -> Result<()> {
    fs::create_dir_all(dir)?;
    let stripped: Vec<Review> = corpus.reviews.iter().map(Review::without_label).collect();
    let mut out = BufWriter::new(File::create(dir.join(REVIEWS_FILE))?);
    canonical::write_lines(&mut out, &stripped)?;
    out.flush()?;
    let mut out = BufWriter::new(File::create(dir.join(BEHAVIORS_FILE))?);
    canonical::write_lines(&mut out, &corpus.behaviors)?;
    out.flush()?;
    fs::write(dir.join(LABELS_FILE), canonical::to_vec(&corpus.labels)?)?;
    Ok(())
}

/// Reads a corpus directory. `labels.json` is optional; when present the
/// labels are also attached to the reviews.
pub fn read_corpus(dir: &Path) -> Result<Corpus> {
    let open = |name: &str| -> Result<BufReader<File>> {
        File::open(dir.join(name))
            .map(BufReader::new)
            .map_err(|e| Error::validation("corpus", format!("{}: {e}", dir.join(name).display())))
    };
    let mut reviews: Vec<Review> = canonical::read_lines(open(REVIEWS_FILE)?)?;
    let behaviors: Vec<BehaviorRecord> = if dir.join(BEHAVIORS_FILE).exists() {
        canonical::read_lines(open(BEHAVIORS_FILE)?)?
    } else {
        Vec::new()
    };
    let labels: BTreeMap<String, Label> = match fs::read(dir.join(LABELS_FILE)) {
        Ok(bytes) => canonical::from_slice(&bytes)?,
        Err(e) if e.kind() == std::io::ErrorKind::NotFound => BTreeMap::new(),
        Err(e) => return Err(e.into()),
    };
    for r in &mut reviews {
        r.validate()?;
        r.label = labels.get(&r.review_id).copied();
    }
    Ok(Corpus {
        reviews,
        behaviors,
        labels,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::synth::{generate_corpus, CorpusSpec};

    #[test]
    fn corpus_round_trips_through_a_directory() {
        let corpus = generate_corpus(&CorpusSpec::benchmark(1, 2, 30)).unwrap();
        let dir = tempfile::tempdir().unwrap();
        write_corpus(dir.path(), &corpus).unwrap();
        let text = fs::read_to_string(dir.path().join(REVIEWS_FILE)).unwrap();
        assert!(!text.contains("\"label\""));
        assert_eq!(read_corpus(dir.path()).unwrap(), corpus);
    }

    #[test]
    fn labels_file_is_optional() {
        let corpus = generate_corpus(&CorpusSpec::benchmark(1, 1, 5)).unwrap();
        let dir = tempfile::tempdir().unwrap();
        write_corpus(dir.path(), &corpus).unwrap();
        fs::remove_file(dir.path().join(LABELS_FILE)).unwrap();
        let back = read_corpus(dir.path()).unwrap();
        assert!(back.labels.is_empty());
        assert!(back.reviews.iter().all(|r| r.label.is_none()));
    }
}
