//! Append-only JSONL event log.

use std::fs::{File, OpenOptions};
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};

use parking_lot::Mutex;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::multileaver::Method;
use crate::ranking::CreditFunction;

pub const LOG_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum Event {
    ExperimentCreated {
        experiment_id: String,
    },
    SessionCreated {
        session_id: String,
        experiment_id: String,
        ranker_names: Vec<String>,
        rankings: Vec<Vec<String>>,
        method: Method,
        credit: CreditFunction,
        output: Vec<String>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        teams: Option<Vec<usize>>,
        created_ms: u64,
    },
    Click {
        session_id: String,
        position: usize,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        idempotency_key: Option<String>,
        ts_ms: u64,
    },
    SessionEvicted {
        session_id: String,
        ts_ms: u64,
    },
}

#[derive(Serialize, Deserialize)]
struct Record {
    v: u32,
    #[serde(flatten)]
    event: Event,
}

/// Writer half of the log. Every append is flushed before returning.
#[derive(Debug)]
pub struct EventLog {
    path: PathBuf,
    out: Mutex<BufWriter<File>>,
}

impl EventLog {
    /// Opens `path` for appending, dropping any torn final line first.
    pub fn open(path: &Path) -> Result<Self> {
        truncate_torn_tail(path)?;
        let file = OpenOptions::new().create(true).append(true).open(path).map_err(|e| {
            Error::Io(std::io::Error::new(e.kind(), format!("cannot open event log {}: {e}", path.display())))
        })?;
        Ok(EventLog { path: path.to_path_buf(), out: Mutex::new(BufWriter::new(file)) })
    }

    pub fn path(&self) -> &Path {
        &self.path
    }

    pub fn append(&self, event: &Event) -> Result<()> {
        let line = serde_json::to_string(&Record { v: LOG_VERSION, event: event.clone() })?;
        let mut out = self.out.lock();
        out.write_all(line.as_bytes())?;
        out.write_all(b"\n")?;
        out.flush()?;
        Ok(())
    }

    pub fn sync(&self) -> Result<()> {
        let mut out = self.out.lock();
        out.flush()?;
        out.get_ref().sync_data()?;
        Ok(())
    }
}

fn truncate_torn_tail(path: &Path) -> Result<()> {
    let bytes = match std::fs::read(path) {
        Ok(b) => b,
        Err(e) if e.kind() == std::io::ErrorKind::NotFound => return Ok(()),
        Err(e) => return Err(e.into()),
    };
    if bytes.last().is_some_and(|&b| b != b'\n') {
        let keep = bytes.iter().rposition(|&b| b == b'\n').map_or(0, |i| i + 1);
        OpenOptions::new().write(true).open(path)?.set_len(keep as u64)?;
    }
    Ok(())
}

/// Reads every event in `path`. A missing file is an empty log. A torn final
/// line (crash mid-write) is ignored; corruption elsewhere is an error.
pub fn read_events(path: &Path) -> Result<Vec<Event>> {
    let file = match File::open(path) {
        Ok(f) => f,
        Err(e) if e.kind() == std::io::ErrorKind::NotFound => return Ok(Vec::new()),
        Err(e) => return Err(e.into()),
    };
    let lines: Vec<String> = BufReader::new(file).lines().collect::<std::io::Result<_>>()?;
    let last = lines.len().saturating_sub(1);
    let mut events = Vec::with_capacity(lines.len());
    for (i, line) in lines.iter().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        match serde_json::from_str::<Record>(line) {
            Ok(r) if r.v == LOG_VERSION => events.push(r.event),
            Ok(r) => return Err(Error::InvalidConfig(format!("unsupported log version {} on line {}", r.v, i + 1))),
            Err(_) if i == last => tracing::warn!(line = i + 1, "ignoring torn final log line"),
            Err(e) => return Err(Error::InvalidConfig(format!("corrupt event log line {}: {e}", i + 1))),
        }
    }
    Ok(events)
}
