//! Append-only record logs with snapshots.
//!
//! A log named `reviews` in directory `d` is two files:
//!
//! * `d/reviews.log.jsonl`: one canonical JSON line `{"rec":...,"seq":n}`
//!   per appended record, fsynced before `append` returns;
//! * `d/reviews.snapshot.json`: `{"records":[...],"seq":n}`, written to a
//!   temporary file and renamed into place, after which the log is truncated.
//!
//! Replay loads the snapshot, then every log line with a larger `seq`. A
//! torn final line (crash mid-write) is dropped and cut from the file; a bad
//! line anywhere else is [`Error::CorruptLog`].

use std::fs::{self, File, OpenOptions};
use std::io::{BufRead, BufReader, Write};
use std::marker::PhantomData;
use std::path::{Path, PathBuf};

use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use crate::canonical;
use crate::error::{Error, Result};

#[derive(Serialize)]
struct LineOut<'a, T> {
    seq: u64,
    rec: &'a T,
}

#[derive(Deserialize)]
struct LineIn<T> {
    seq: u64,
    rec: T,
}

#[derive(Serialize)]
struct SnapshotOut<'a, T> {
    seq: u64,
    records: &'a [T],
}

#[derive(Deserialize)]
struct SnapshotIn<T> {
    seq: u64,
    records: Vec<T>,
}

#[derive(Debug)]
pub struct RecordLog<T> {
    log_path: PathBuf,
    snapshot_path: PathBuf,
    file: File,
    last_seq: u64,
    since_snapshot: u64,
    _records: PhantomData<fn() -> T>,
}

fn corrupt(path: &Path, message: impl Into<String>) -> Error {
    Error::CorruptLog {
        path: path.display().to_string(),
        message: message.into(),
    }
}

impl<T: Serialize + DeserializeOwned> RecordLog<T> {
    /// Opens (creating if needed) the log `name` under `dir` and returns it
    /// with every committed record in append order.
    pub fn open(dir: &Path, name: &str) -> Result<(Self, Vec<T>)> {
        if name.is_empty() || name.contains(['/', '\\']) {
            return Err(Error::validation("name", "log name must be a plain file stem"));
        }
        fs::create_dir_all(dir)?;
        let log_path = dir.join(format!("{name}.log.jsonl"));
        let snapshot_path = dir.join(format!("{name}.snapshot.json"));

        let (mut last_seq, mut records) = match fs::read(&snapshot_path) {
            Ok(bytes) => {
                let snap: SnapshotIn<T> =
                    serde_json::from_slice(&bytes).map_err(|e| corrupt(&snapshot_path, e.to_string()))?;
                (snap.seq, snap.records)
            }
            Err(e) if e.kind() == std::io::ErrorKind::NotFound => (0, Vec::new()),
            Err(e) => return Err(e.into()),
        };
        let snapshot_seq = last_seq;

        let mut good_len = 0u64;
        let mut since_snapshot = 0u64;
        let mut torn = false;
        if log_path.exists() {
            let mut reader = BufReader::new(File::open(&log_path)?);
            let mut line = Vec::new();
            let mut line_no = 0usize;
            loop {
                line.clear();
                let n = reader.read_until(b'\n', &mut line)?;
                if n == 0 {
                    break;
                }
                line_no += 1;
                if line.last() != Some(&b'\n') {
                    torn = true;
                    break;
                }
                match serde_json::from_slice::<LineIn<T>>(line.trim_ascii_end()) {
                    Ok(entry) => {
                        if entry.seq > snapshot_seq {
                            if entry.seq <= last_seq {
                                return Err(corrupt(
                                    &log_path,
                                    format!("line {line_no}: seq {} does not increase", entry.seq),
                                ));
                            }
                            last_seq = entry.seq;
                            since_snapshot += 1;
                            records.push(entry.rec);
                        }
                        good_len += n as u64;
                    }
                    Err(e) => {
                        let mut rest = Vec::new();
                        reader.read_until(b'\n', &mut rest)?;
                        if rest.is_empty() {
                            // A final line that parses badly but ends in a
                            // newline is still a torn write of the payload.
                            torn = true;
                            break;
                        }
                        return Err(corrupt(&log_path, format!("line {line_no}: {e}")));
                    }
                }
            }
        }

        let file = OpenOptions::new().create(true).append(true).open(&log_path)?;
        if torn {
            file.set_len(good_len)?;
            file.sync_all()?;
        }
        Ok((
            Self {
                log_path,
                snapshot_path,
                file,
                last_seq,
                since_snapshot,
                _records: PhantomData,
            },
            records,
        ))
    }

    /// Appends one record durably and returns its sequence number.
    pub fn append(&mut self, rec: &T) -> Result<u64> {
        self.append_batch(std::slice::from_ref(rec))
    }

    /// Appends records with a single sync at the end and returns the
    /// sequence number of the last one. Either every line is committed or,
    /// after a crash, a prefix of them is.
    pub fn append_batch(&mut self, recs: &[T]) -> Result<u64> {
        if recs.is_empty() {
            return Ok(self.last_seq);
        }
        let mut buf = Vec::new();
        let mut seq = self.last_seq;
        for rec in recs {
            seq += 1;
            buf.extend_from_slice(&canonical::to_vec(&LineOut { seq, rec })?);
            buf.push(b'\n');
        }
        self.file.write_all(&buf)?;
        self.file.sync_data()?;
        self.since_snapshot += seq - self.last_seq;
        self.last_seq = seq;
        Ok(seq)
    }

    /// Replaces the snapshot with `records`, the full state as of the last
    /// appended record, and empties the log.
    pub fn snapshot(&mut self, records: &[T]) -> Result<()> {
        let tmp = self.snapshot_path.with_extension("json.tmp");
        {
            let mut f = File::create(&tmp)?;
            f.write_all(&canonical::to_vec(&SnapshotOut {
                seq: self.last_seq,
                records,
            })?)?;
            f.sync_all()?;
        }
        fs::rename(&tmp, &self.snapshot_path)?;
        if let Some(dir) = self.snapshot_path.parent() {
            // Persist the rename itself; not supported on every platform.
            if let Ok(d) = File::open(dir) {
                let _ = d.sync_all();
            }
        }
        self.file.set_len(0)?;
        self.file.sync_all()?;
        self.since_snapshot = 0;
        Ok(())
    }

    /// Log lines written or replayed since the last snapshot.
    pub fn since_snapshot(&self) -> u64 {
        self.since_snapshot
    }

    /// Sequence number of the last committed record, 0 when none.
    pub fn last_seq(&self) -> u64 {
        self.last_seq
    }

    pub fn log_path(&self) -> &Path {
        &self.log_path
    }

    pub fn snapshot_path(&self) -> &Path {
        &self.snapshot_path
    }
}
