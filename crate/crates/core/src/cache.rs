//! Persistent residue cache: JSON lines, one verification record or one
//! per-prime window value per line, each stamped with the engine version.
//! Lines from another engine version are ignored; lines that fail to parse
//! are kept aside so a self-test can report them.

use std::collections::HashMap;
use std::fs::{File, OpenOptions};
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::sync::Mutex;

use num_bigint::BigUint;
use serde::{Deserialize, Serialize};

use crate::claims::{RecordRow, VerificationRecord};
use crate::error::{Error, Result};

/// Bumped whenever an evaluator could change a stored value.
pub const ENGINE_VERSION: &str = concat!("mhsc-", env!("CARGO_PKG_VERSION"), "/1");

pub const CACHE_ENV: &str = "MHSC_CACHE";

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
enum Entry {
    Record { engine: String, row: RecordRow },
    Window { engine: String, tag: String, p: u64, a: u32, value: String },
}

type RecordKey = (String, u64, u32, u64);
type WindowKey = (String, u64, u32);

#[derive(Default)]
struct State {
    records: HashMap<RecordKey, RecordRow>,
    windows: HashMap<WindowKey, BigUint>,
    pending: Vec<Entry>,
}

pub struct Cache {
    path: PathBuf,
    state: Mutex<State>,
    corrupt: Vec<(usize, String)>,
}

impl Cache {
    /// Loads `path` if it exists; a missing file is an empty cache.
    pub fn open(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref().to_path_buf();
        let mut state = State::default();
        let mut corrupt = Vec::new();
        if path.exists() {
            let file = File::open(&path).map_err(|e| Error::Cache(format!("{}: {e}", path.display())))?;
            for (no, line) in BufReader::new(file).lines().enumerate() {
                let line = line.map_err(|e| Error::Cache(e.to_string()))?;
                if line.trim().is_empty() {
                    continue;
                }
                match serde_json::from_str::<Entry>(&line) {
                    Ok(Entry::Record { engine, row }) if engine == ENGINE_VERSION => {
                        if VerificationRecord::from_row(&row).is_err() {
                            corrupt.push((no + 1, line));
                            continue;
                        }
                        state.records.insert((row.claim.clone(), row.p, row.r, row.m), row);
                    }
                    Ok(Entry::Window { engine, tag, p, a, value }) if engine == ENGINE_VERSION => {
                        match value.parse::<BigUint>() {
                            Ok(v) => {
                                state.windows.insert((tag, p, a), v);
                            }
                            Err(_) => corrupt.push((no + 1, line)),
                        }
                    }
                    Ok(_) => {}
                    Err(_) => corrupt.push((no + 1, line)),
                }
            }
        }
        Ok(Cache { path, state: Mutex::new(state), corrupt })
    }

    pub fn path(&self) -> &Path {
        &self.path
    }

    /// Lines that could not be parsed, with 1-based line numbers.
    pub fn corrupt_lines(&self) -> &[(usize, String)] {
        &self.corrupt
    }

    pub fn record(&self, claim: &str, p: u64, r: u32, m: u64) -> Option<VerificationRecord> {
        let state = self.state.lock().expect("cache lock poisoned");
        let row = state.records.get(&(claim.to_string(), p, r, m))?;
        VerificationRecord::from_row(row).ok()
    }

    pub fn put_record(&self, rec: &VerificationRecord) {
        let row = rec.row();
        let mut state = self.state.lock().expect("cache lock poisoned");
        state.records.insert((row.claim.clone(), row.p, row.r, row.m), row.clone());
        state.pending.push(Entry::Record { engine: ENGINE_VERSION.to_string(), row });
    }

    pub fn records(&self) -> Vec<VerificationRecord> {
        let state = self.state.lock().expect("cache lock poisoned");
        let mut rows: Vec<&RecordRow> = state.records.values().collect();
        rows.sort_by(|a, b| (&a.claim, a.p, a.r, a.m).cmp(&(&b.claim, b.p, b.r, b.m)));
        rows.into_iter().filter_map(|r| VerificationRecord::from_row(r).ok()).collect()
    }

    pub fn window(&self, tag: &str, p: u64, a: u32) -> Option<BigUint> {
        self.state.lock().expect("cache lock poisoned").windows.get(&(tag.to_string(), p, a)).cloned()
    }

    /// Every stored window value as `(tag, p, a, value)`, sorted.
    pub fn windows(&self) -> Vec<(String, u64, u32, BigUint)> {
        let state = self.state.lock().expect("cache lock poisoned");
        let mut out: Vec<_> = state.windows.iter().map(|((t, p, a), v)| (t.clone(), *p, *a, v.clone())).collect();
        out.sort();
        out
    }

    pub fn put_window(&self, tag: &str, p: u64, a: u32, value: &BigUint) {
        let mut state = self.state.lock().expect("cache lock poisoned");
        state.windows.insert((tag.to_string(), p, a), value.clone());
        state.pending.push(Entry::Window {
            engine: ENGINE_VERSION.to_string(),
            tag: tag.to_string(),
            p,
            a,
            value: value.to_string(),
        });
    }

    /// Appends everything recorded since the last flush, sorted so the
    /// file contents do not depend on worker scheduling.
    pub fn flush(&self) -> Result<()> {
        let mut pending = std::mem::take(&mut self.state.lock().expect("cache lock poisoned").pending);
        if pending.is_empty() {
            return Ok(());
        }
        let mut lines: Vec<String> =
            pending.drain(..).map(|e| serde_json::to_string(&e).expect("entries serialize")).collect();
        lines.sort();
        if let Some(dir) = self.path.parent().filter(|d| !d.as_os_str().is_empty()) {
            std::fs::create_dir_all(dir).map_err(|e| Error::Cache(e.to_string()))?;
        }
        let file = OpenOptions::new()
            .create(true)
            .append(true)
            .open(&self.path)
            .map_err(|e| Error::Cache(format!("{}: {e}", self.path.display())))?;
        let mut out = BufWriter::new(file);
        for line in lines {
            writeln!(out, "{line}").map_err(|e| Error::Cache(e.to_string()))?;
        }
        out.flush().map_err(|e| Error::Cache(e.to_string()))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::claims::{find_claim, verify_claim};

    #[test]
    fn round_trip_through_disk() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("cache.jsonl");
        let rec = verify_claim(find_claim("main_n4").unwrap(), 7, 2, 0);
        {
            let cache = Cache::open(&path).unwrap();
            assert!(cache.record("main_n4", 7, 2, 0).is_none());
            cache.put_record(&rec);
            cache.put_window("zhao", 11, 1, &BigUint::from(4u32));
            cache.flush().unwrap();
        }
        let cache = Cache::open(&path).unwrap();
        assert_eq!(cache.record("main_n4", 7, 2, 0), Some(rec));
        assert_eq!(cache.window("zhao", 11, 1), Some(BigUint::from(4u32)));
        assert!(cache.corrupt_lines().is_empty());
    }

    #[test]
    fn stale_and_broken_lines() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("cache.jsonl");
        let stale = r#"{"kind":"window","engine":"mhsc-0.0.0/0","tag":"zhao","p":5,"a":1,"value":"3"}"#;
        std::fs::write(&path, format!("{stale}\nnot json\n")).unwrap();
        let cache = Cache::open(&path).unwrap();
        assert!(cache.window("zhao", 5, 1).is_none());
        assert_eq!(cache.corrupt_lines().len(), 1);
        assert_eq!(cache.corrupt_lines()[0].0, 2);
    }
}
