//! Challenge operations: submission validation, per-phase quotas, a
//! persisted event log and the leaderboard.
//!
//! Admission (quota check plus ledger append) goes through a single mutex;
//! validation and scoring run outside it, so several submissions can be
//! scored at once while the accepted count per `(team, phase)` never passes
//! the phase limit. Rejected submissions do not use up quota.

pub(crate) mod archive;
mod ledger;
pub(crate) mod validate;

pub use archive::{sidecar_path, EntryStatus, SubmissionArchive};
pub use ledger::{EventKind, EventStatus, LedgerEvent, QuotaLedger};
pub use validate::{validate_submission, Fault, FaultKind};

use std::cmp::Ordering;
use std::collections::BTreeMap;
use std::fmt;
use std::fs;
use std::io;
use std::path::{Path, PathBuf};
use std::sync::Mutex;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::evaluate::{evaluate_submission, EvalError, GroundTruth};
use crate::metrics::{rank_submissions, LeaderboardRow, ScoreReport, WeightConfig};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Phase {
    Validation,
    Final,
}

impl fmt::Display for Phase {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Phase::Validation => "validation",
            Phase::Final => "final",
        })
    }
}

impl std::str::FromStr for Phase {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "validation" => Ok(Phase::Validation),
            "final" => Ok(Phase::Final),
            _ => Err(format!("unknown phase `{s}` (expected validation or final)")),
        }
    }
}

/// `phase.json`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PhaseConfig {
    pub phase: Phase,
    pub max_submissions_per_team: u32,
    pub gt_visible: bool,
    /// Free text; phase windows are not enforced here.
    #[serde(default)]
    pub duration_note: String,
}

impl PhaseConfig {
    pub fn validation() -> Self {
        Self {
            phase: Phase::Validation,
            max_submissions_per_team: 100,
            gt_visible: true,
            duration_note: "nearly one month".into(),
        }
    }

    pub fn final_phase() -> Self {
        Self {
            phase: Phase::Final,
            max_submissions_per_team: 5,
            gt_visible: false,
            duration_note: "six days".into(),
        }
    }

    /// Validation runs with 100 submissions and visible ground truth; the
    /// final phase with 5 and hidden ground truth.
    pub fn check(&self) -> Result<(), HarnessError> {
        let expected = match self.phase {
            Phase::Validation => (100, true),
            Phase::Final => (5, false),
        };
        if (self.max_submissions_per_team, self.gt_visible) != expected {
            return Err(HarnessError::InvalidPhaseConfig(format!(
                "{} phase requires max_submissions_per_team = {} and gt_visible = {}",
                self.phase, expected.0, expected.1
            )));
        }
        Ok(())
    }

    pub fn from_json(bytes: &[u8]) -> Result<Self, HarnessError> {
        let cfg: Self = serde_json::from_slice(bytes)
            .map_err(|e| HarnessError::InvalidPhaseConfig(e.to_string()))?;
        cfg.check()?;
        Ok(cfg)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum SubmissionStatus {
    Accepted,
    Rejected(String),
    Scored,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SubmissionRecord {
    pub team: String,
    pub phase: Phase,
    pub sequence_no: u32,
    pub timestamp: u64,
    pub status: SubmissionStatus,
    pub report: Option<ScoreReport>,
}

#[derive(Debug, Error)]
pub enum HarnessError {
    #[error("{team} has used all {limit} {phase}-phase submissions")]
    QuotaExhausted {
        team: String,
        phase: Phase,
        limit: u32,
    },
    #[error("phase {0} is not open")]
    PhaseClosed(Phase),
    #[error("invalid team name `{0}`")]
    InvalidTeam(String),
    #[error("invalid phase config: {0}")]
    InvalidPhaseConfig(String),
    #[error("ledger line {line}: {message}")]
    CorruptLedger { line: usize, message: String },
    #[error("{}: {source}", path.display())]
    Io { path: PathBuf, source: io::Error },
    #[error(transparent)]
    Eval(#[from] EvalError),
}

/// Everything needed to score one phase.
#[derive(Debug, Clone)]
pub struct PhaseSetup {
    pub config: PhaseConfig,
    pub ground_truth: GroundTruth,
    pub weights: WeightConfig,
}

struct State {
    ledger: QuotaLedger,
    reports: BTreeMap<(String, Phase, u32), ScoreReport>,
}

/// Local challenge runner rooted at a directory holding `ledger.jsonl` and
/// `reports/<phase>/<team>/<seq>.json`.
pub struct Harness {
    root: PathBuf,
    phases: BTreeMap<Phase, PhaseSetup>,
    state: Mutex<State>,
}

pub const LEDGER_FILE: &str = "ledger.jsonl";

fn check_team(team: &str) -> Result<(), HarnessError> {
    let ok = !team.is_empty()
        && !team.starts_with('.')
        && team
            .chars()
            .all(|c| c.is_ascii_alphanumeric() || matches!(c, '_' | '-' | '.'));
    if ok {
        Ok(())
    } else {
        Err(HarnessError::InvalidTeam(team.to_string()))
    }
}

fn summarize(faults: &[Fault]) -> String {
    let mut s = faults
        .iter()
        .take(5)
        .map(ToString::to_string)
        .collect::<Vec<_>>()
        .join("; ");
    if faults.len() > 5 {
        s.push_str(&format!("; and {} more", faults.len() - 5));
    }
    s
}

impl Harness {
    /// Opens a harness directory, replaying its ledger and reloading the
    /// persisted reports.
    pub fn open(root: impl Into<PathBuf>, phases: Vec<PhaseSetup>) -> Result<Self, HarnessError> {
        let root = root.into();
        fs::create_dir_all(&root).map_err(|source| HarnessError::Io {
            path: root.clone(),
            source,
        })?;
        let mut map = BTreeMap::new();
        for p in phases {
            p.config.check()?;
            map.insert(p.config.phase, p);
        }
        let ledger = QuotaLedger::open(&root.join(LEDGER_FILE))?;
        let mut reports = BTreeMap::new();
        for ev in ledger.events() {
            if let (EventStatus::Scored, Some(rel)) = (ev.status, ev.report.as_ref()) {
                let path = root.join(rel);
                let bytes = fs::read(&path).map_err(|source| HarnessError::Io {
                    path: path.clone(),
                    source,
                })?;
                let report: ScoreReport =
                    serde_json::from_slice(&bytes).map_err(|e| HarnessError::Io {
                        path: path.clone(),
                        source: io::Error::new(io::ErrorKind::InvalidData, e),
                    })?;
                reports.insert((ev.team.clone(), ev.phase, ev.seq), report);
            }
        }
        Ok(Self {
            root,
            phases: map,
            state: Mutex::new(State { ledger, reports }),
        })
    }

    pub fn root(&self) -> &Path {
        &self.root
    }

    pub fn phase(&self, phase: Phase) -> Option<&PhaseSetup> {
        self.phases.get(&phase)
    }

    pub fn accepted_count(&self, team: &str, phase: Phase) -> u32 {
        self.state.lock().unwrap().ledger.accepted(team, phase)
    }

    pub fn counts(&self) -> BTreeMap<(String, Phase), u32> {
        self.state.lock().unwrap().ledger.counts().clone()
    }

    pub fn events(&self) -> Vec<LedgerEvent> {
        self.state.lock().unwrap().ledger.events().to_vec()
    }

    fn event(team: &str, phase: Phase, seq: u32, ts: u64, status: EventStatus) -> LedgerEvent {
        LedgerEvent {
            event: if status == EventStatus::Scored {
                EventKind::Score
            } else {
                EventKind::Submit
            },
            team: team.to_string(),
            phase,
            seq,
            ts,
            status,
            reason: None,
            report: None,
        }
    }

    /// Appends a denial if the team is at its limit, else returns the next
    /// sequence number. Caller holds the lock.
    fn admit(
        state: &mut State,
        config: &PhaseConfig,
        team: &str,
        ts: u64,
    ) -> Result<u32, HarnessError> {
        let used = state.ledger.accepted(team, config.phase);
        let limit = config.max_submissions_per_team;
        if used >= limit {
            let mut ev = Self::event(team, config.phase, used + 1, ts, EventStatus::Denied);
            ev.reason = Some(format!("limit {limit} reached"));
            state.ledger.append(ev)?;
            return Err(HarnessError::QuotaExhausted {
                team: team.to_string(),
                phase: config.phase,
                limit,
            });
        }
        Ok(used + 1)
    }

    /// Runs one submission through quota, validation and scoring.
    ///
    /// Quota is checked first; a team at its limit gets
    /// [`HarnessError::QuotaExhausted`]. A submission with faults comes back
    /// as a `Rejected` record and does not count. Otherwise it is accepted,
    /// scored against the phase's ground truth and its report persisted.
    pub fn submit(
        &self,
        team: &str,
        phase: Phase,
        archive: &SubmissionArchive,
        ts: u64,
    ) -> Result<SubmissionRecord, HarnessError> {
        check_team(team)?;
        let setup = self.phases.get(&phase).ok_or(HarnessError::PhaseClosed(phase))?;

        Self::admit(&mut self.state.lock().unwrap(), &setup.config, team, ts)?;

        let gt = &setup.ground_truth;
        let faults = validate_submission(archive, &gt.manifest, &gt.categories, Some(gt));
        if !faults.is_empty() {
            let reason = summarize(&faults);
            let mut state = self.state.lock().unwrap();
            let seq = state.ledger.accepted(team, phase) + 1;
            let mut ev = Self::event(team, phase, seq, ts, EventStatus::Rejected);
            ev.reason = Some(reason.clone());
            state.ledger.append(ev)?;
            return Ok(SubmissionRecord {
                team: team.to_string(),
                phase,
                sequence_no: seq,
                timestamp: ts,
                status: SubmissionStatus::Rejected(reason),
                report: None,
            });
        }

        let seq = {
            let mut state = self.state.lock().unwrap();
            let seq = Self::admit(&mut state, &setup.config, team, ts)?;
            state
                .ledger
                .append(Self::event(team, phase, seq, ts, EventStatus::Accepted))?;
            seq
        };

        let report = evaluate_submission(gt, archive, &setup.weights)?.report;
        let rel = format!("reports/{phase}/{team}/{seq}.json");
        self.write_report(&rel, &report)?;

        let mut state = self.state.lock().unwrap();
        let mut ev = Self::event(team, phase, seq, ts, EventStatus::Scored);
        ev.report = Some(rel);
        state.ledger.append(ev)?;
        state
            .reports
            .insert((team.to_string(), phase, seq), report.clone());
        Ok(SubmissionRecord {
            team: team.to_string(),
            phase,
            sequence_no: seq,
            timestamp: ts,
            status: SubmissionStatus::Scored,
            report: Some(report),
        })
    }

    fn write_report(&self, rel: &str, report: &ScoreReport) -> Result<(), HarnessError> {
        let path = self.root.join(rel);
        let io_err = |source| HarnessError::Io {
            path: path.clone(),
            source,
        };
        if let Some(parent) = path.parent() {
            fs::create_dir_all(parent).map_err(io_err)?;
        }
        let tmp = path.with_extension("json.tmp");
        let json = serde_json::to_vec_pretty(report).expect("report serializes");
        fs::write(&tmp, json).map_err(io_err)?;
        fs::rename(&tmp, &path).map_err(io_err)
    }

    /// All submissions, rebuilt from the event log.
    pub fn records(&self) -> Vec<SubmissionRecord> {
        let state = self.state.lock().unwrap();
        let mut out: Vec<SubmissionRecord> = Vec::new();
        for ev in state.ledger.events() {
            match ev.status {
                EventStatus::Accepted | EventStatus::Rejected => out.push(SubmissionRecord {
                    team: ev.team.clone(),
                    phase: ev.phase,
                    sequence_no: ev.seq,
                    timestamp: ev.ts,
                    status: if ev.status == EventStatus::Accepted {
                        SubmissionStatus::Accepted
                    } else {
                        SubmissionStatus::Rejected(ev.reason.clone().unwrap_or_default())
                    },
                    report: None,
                }),
                EventStatus::Scored => {
                    let key = (ev.team.clone(), ev.phase, ev.seq);
                    if let Some(r) = out.iter_mut().rev().find(|r| {
                        r.status == SubmissionStatus::Accepted
                            && (r.team.as_str(), r.phase, r.sequence_no) == (key.0.as_str(), key.1, key.2)
                    }) {
                        r.status = SubmissionStatus::Scored;
                        r.report = state.reports.get(&key).cloned();
                    }
                }
                EventStatus::Denied => {}
            }
        }
        out
    }

    /// Best scored submission per team, ranked. Empty when nothing is
    /// scored yet.
    pub fn leaderboard(&self, phase: Phase) -> Vec<LeaderboardRow> {
        let state = self.state.lock().unwrap();
        let mut best: BTreeMap<&str, (u32, &ScoreReport)> = BTreeMap::new();
        for ((team, p, seq), report) in &state.reports {
            if *p != phase {
                continue;
            }
            let better = match best.get(team.as_str()) {
                None => true,
                Some((best_seq, cur)) => match compare_reports(report, cur) {
                    Ordering::Greater => true,
                    Ordering::Equal => seq < best_seq,
                    Ordering::Less => false,
                },
            };
            if better {
                best.insert(team, (*seq, report));
            }
        }
        let entries: Vec<_> = best
            .into_iter()
            .map(|(team, (_, r))| (team.to_string(), r.weighted()))
            .collect();
        rank_submissions(&entries)
    }
}

fn compare_reports(a: &ScoreReport, b: &ScoreReport) -> Ordering {
    a.wpq
        .total_cmp(&b.wpq)
        .then_with(|| a.wsq.total_cmp(&b.wsq))
        .then_with(|| a.wrq.total_cmp(&b.wrq))
}
