//! Append-only JSON-lines event log behind the submission quotas.
//!
//! One event per line:
//!
//! ```text
//! {"event":"submit","team":"wg","phase":"final","seq":1,"ts":1767225600,"status":"accepted"}
//! {"event":"score","team":"wg","phase":"final","seq":1,"ts":1767225612,"status":"scored","report":"reports/final/wg/1.json"}
//! ```
//!
//! Counts are never stored; they are rebuilt by replaying the log. A final
//! line without its newline is a torn write from a crash and is cut off on
//! open.

use std::collections::BTreeMap;
use std::fs::{File, OpenOptions};
use std::io::{self, Write};
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::{HarnessError, Phase};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum EventKind {
    Submit,
    Score,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum EventStatus {
    Accepted,
    Rejected,
    Denied,
    Scored,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LedgerEvent {
    pub event: EventKind,
    pub team: String,
    pub phase: Phase,
    pub seq: u32,
    pub ts: u64,
    pub status: EventStatus,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub reason: Option<String>,
    /// Report file, relative to the harness root.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub report: Option<String>,
}

/// Accepted-submission counts per `(team, phase)`, derived from the log.
#[derive(Debug, Default)]
pub struct QuotaLedger {
    path: Option<PathBuf>,
    file: Option<File>,
    events: Vec<LedgerEvent>,
    accepted: BTreeMap<(String, Phase), u32>,
}

impl QuotaLedger {
    /// A ledger that is never persisted.
    pub fn in_memory() -> Self {
        Self::default()
    }

    /// Opens (or creates) a log file and replays it.
    pub fn open(path: &Path) -> Result<Self, HarnessError> {
        let io_err = |source| HarnessError::Io {
            path: path.to_path_buf(),
            source,
        };
        let mut ledger = Self {
            path: Some(path.to_path_buf()),
            ..Default::default()
        };
        if path.exists() {
            let bytes = std::fs::read(path).map_err(io_err)?;
            let complete = match bytes.iter().rposition(|&b| b == b'\n') {
                Some(i) => i + 1,
                None => 0,
            };
            if complete < bytes.len() {
                let f = OpenOptions::new().write(true).open(path).map_err(io_err)?;
                f.set_len(complete as u64).map_err(io_err)?;
                f.sync_all().map_err(io_err)?;
            }
            for (lineno, line) in bytes[..complete].split(|&b| b == b'\n').enumerate() {
                if line.iter().all(u8::is_ascii_whitespace) {
                    continue;
                }
                let event: LedgerEvent =
                    serde_json::from_slice(line).map_err(|e| HarnessError::CorruptLedger {
                        line: lineno + 1,
                        message: e.to_string(),
                    })?;
                ledger.apply(event);
            }
        }
        let file = OpenOptions::new()
            .create(true)
            .append(true)
            .open(path)
            .map_err(io_err)?;
        ledger.file = Some(file);
        Ok(ledger)
    }

    fn apply(&mut self, event: LedgerEvent) {
        if event.event == EventKind::Submit && event.status == EventStatus::Accepted {
            *self
                .accepted
                .entry((event.team.clone(), event.phase))
                .or_insert(0) += 1;
        }
        self.events.push(event);
    }

    /// Persists an event, then applies it.
    pub fn append(&mut self, event: LedgerEvent) -> Result<(), HarnessError> {
        if let Some(file) = self.file.as_mut() {
            let mut line = serde_json::to_vec(&event).expect("ledger event serializes");
            line.push(b'\n');
            let write = |f: &mut File| -> io::Result<()> {
                f.write_all(&line)?;
                f.sync_data()
            };
            write(file).map_err(|source| HarnessError::Io {
                path: self.path.clone().unwrap_or_default(),
                source,
            })?;
        }
        self.apply(event);
        Ok(())
    }

    pub fn accepted(&self, team: &str, phase: Phase) -> u32 {
        self.accepted
            .get(&(team.to_string(), phase))
            .copied()
            .unwrap_or(0)
    }

    pub fn counts(&self) -> &BTreeMap<(String, Phase), u32> {
        &self.accepted
    }

    pub fn events(&self) -> &[LedgerEvent] {
        &self.events
    }
}
