//! Append-only JSON-lines event log. Every state change of the service is
//! one line; the state is rebuilt by replaying the file in order.

use std::fs::{File, OpenOptions};
use std::io::{BufRead, BufReader, Seek, SeekFrom, Write};
use std::path::{Path, PathBuf};

use serde::{de::DeserializeOwned, Serialize};

use crate::error::{Error, Result};

pub const LOG_FILE: &str = "events.jsonl";

#[derive(Debug)]
pub struct EventLog {
    path: PathBuf,
    file: File,
    fsync: bool,
    appended: u64,
}

impl EventLog {
    /// Opens (creating if needed) the log in `dir` and returns it with the
    /// events already stored. A torn final line left by a crash is dropped.
    pub fn open<E: DeserializeOwned>(dir: &Path, fsync: bool) -> Result<(Self, Vec<E>)> {
        std::fs::create_dir_all(dir)?;
        let path = dir.join(LOG_FILE);
        let mut file = OpenOptions::new().read(true).append(true).create(true).open(&path)?;
        let mut events = Vec::new();
        let mut good_len = 0u64;
        let mut reader = BufReader::new(&mut file);
        let mut line = String::new();
        let mut lineno = 0;
        loop {
            line.clear();
            let n = reader.read_line(&mut line)?;
            if n == 0 {
                break;
            }
            lineno += 1;
            if !line.ends_with('\n') {
                tracing::warn!(line = lineno, "dropping incomplete trailing event");
                break;
            }
            let event = serde_json::from_str(line.trim_end())
                .map_err(|e| Error::Parse { line: lineno, message: format!("{}: {e}", path.display()) })?;
            events.push(event);
            good_len += n as u64;
        }
        drop(reader);
        if file.metadata()?.len() != good_len {
            file.set_len(good_len)?;
            file.seek(SeekFrom::End(0))?;
        }
        Ok((Self { path, file, fsync, appended: 0 }, events))
    }

    pub fn append<E: Serialize>(&mut self, event: &E) -> Result<()> {
        let mut line = serde_json::to_string(event).map_err(|e| Error::Config(e.to_string()))?;
        line.push('\n');
        self.file.write_all(line.as_bytes())?;
        if self.fsync {
            self.file.sync_data()?;
        }
        self.appended += 1;
        Ok(())
    }

    pub fn path(&self) -> &Path {
        &self.path
    }

    /// Events appended through this handle.
    pub fn appended(&self) -> u64 {
        self.appended
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn roundtrip_and_torn_tail() {
        let dir = tempfile::tempdir().unwrap();
        {
            let (mut log, old) = EventLog::open::<Vec<u32>>(dir.path(), false).unwrap();
            assert!(old.is_empty());
            log.append(&vec![1u32]).unwrap();
            log.append(&vec![2u32, 3]).unwrap();
        }
        let path = dir.path().join(LOG_FILE);
        let mut f = OpenOptions::new().append(true).open(&path).unwrap();
        f.write_all(b"[4, 5").unwrap();
        drop(f);

        let (mut log, events) = EventLog::open::<Vec<u32>>(dir.path(), false).unwrap();
        assert_eq!(events, vec![vec![1], vec![2, 3]]);
        log.append(&vec![6u32]).unwrap();
        drop(log);
        let (_, events) = EventLog::open::<Vec<u32>>(dir.path(), false).unwrap();
        assert_eq!(events, vec![vec![1], vec![2, 3], vec![6]]);
    }

    #[test]
    fn corrupt_line_is_an_error() {
        let dir = tempfile::tempdir().unwrap();
        std::fs::write(dir.path().join(LOG_FILE), "[1]\nnot json\n").unwrap();
        let err = EventLog::open::<Vec<u32>>(dir.path(), false).unwrap_err();
        assert!(matches!(err, Error::Parse { line: 2, .. }));
    }
}
