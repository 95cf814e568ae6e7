use std::fs::{self, OpenOptions};
use std::io::Write;
use std::path::{Path, PathBuf};

use super::{ExperimentLogEntry, LoopError, LoopState};

pub const TSV_FILE: &str = "experiments.tsv";
pub const PROTOCOL_FILE: &str = "protocol.md";
pub const STATE_FILE: &str = "state.json";

/// On-disk record of a loop: an append-only TSV (no header), an append-only
/// markdown protocol and a snapshot of the latest state.
#[derive(Debug, Clone)]
pub struct LoopLog {
    dir: PathBuf,
}

impl LoopLog {
    pub fn open(dir: impl AsRef<Path>) -> Result<Self, LoopError> {
        fs::create_dir_all(dir.as_ref())?;
        Ok(Self {
            dir: dir.as_ref().to_path_buf(),
        })
    }

    pub fn dir(&self) -> &Path {
        &self.dir
    }

    pub fn tsv_path(&self) -> PathBuf {
        self.dir.join(TSV_FILE)
    }

    pub fn protocol_path(&self) -> PathBuf {
        self.dir.join(PROTOCOL_FILE)
    }

    pub fn state_path(&self) -> PathBuf {
        self.dir.join(STATE_FILE)
    }

    pub fn load_state(&self) -> Result<Option<LoopState>, LoopError> {
        match fs::read_to_string(self.state_path()) {
            Ok(text) => Ok(Some(serde_json::from_str(&text)?)),
            Err(e) if e.kind() == std::io::ErrorKind::NotFound => Ok(None),
            Err(e) => Err(e.into()),
        }
    }

    /// Writes the snapshot through a temporary file and a rename.
    pub fn save_state(&self, state: &LoopState) -> Result<(), LoopError> {
        let tmp = self.dir.join(format!("{STATE_FILE}.tmp"));
        fs::write(&tmp, serde_json::to_string_pretty(state)?)?;
        fs::rename(&tmp, self.state_path())?;
        Ok(())
    }

    pub fn read_entries(&self) -> Result<Vec<ExperimentLogEntry>, LoopError> {
        let text = match fs::read_to_string(self.tsv_path()) {
            Ok(t) => t,
            Err(e) if e.kind() == std::io::ErrorKind::NotFound => return Ok(Vec::new()),
            Err(e) => return Err(e.into()),
        };
        text.lines()
            .filter(|l| !l.is_empty())
            .map(|l| ExperimentLogEntry::parse_tsv_line(l).map_err(LoopError::Log))
            .collect()
    }

    fn protocol_notes(&self) -> Result<usize, LoopError> {
        match fs::read_to_string(self.protocol_path()) {
            Ok(t) => Ok(t.lines().filter(|l| l.starts_with("### ")).count()),
            Err(e) if e.kind() == std::io::ErrorKind::NotFound => Ok(0),
            Err(e) => Err(e.into()),
        }
    }

    fn append(path: &Path, text: &str) -> Result<(), LoopError> {
        let mut f = OpenOptions::new().create(true).append(true).open(path)?;
        f.write_all(text.as_bytes())?;
        f.sync_data()?;
        Ok(())
    }

    fn protocol_note(n: usize, e: &ExperimentLogEntry) -> String {
        format!(
            "### {n}. `{}`: {}\n\ntotal wins {}, hard wins {}\n\n{}\n\n",
            e.tag, e.status, e.total_wins, e.hard_wins, e.description
        )
    }

    /// Brings the TSV and protocol up to the state's history. The snapshot
    /// is written first, so a crash can only leave the logs behind, never
    /// ahead.
    pub fn reconcile(&self, state: &LoopState) -> Result<(), LoopError> {
        let logged = self.read_entries()?;
        if logged.len() > state.history.len() || logged[..] != state.history[..logged.len()] {
            return Err(LoopError::Log(format!(
                "{} has {} entries that do not prefix the {} in the state",
                TSV_FILE,
                logged.len(),
                state.history.len()
            )));
        }
        for e in &state.history[logged.len()..] {
            Self::append(&self.tsv_path(), &format!("{}\n", e.tsv_line()))?;
        }
        let notes = self.protocol_notes()?;
        for (k, e) in state.history.iter().enumerate().skip(notes) {
            Self::append(&self.protocol_path(), &Self::protocol_note(k + 1, e))?;
        }
        Ok(())
    }

    /// Persists a new state and appends its new history to the logs.
    pub fn commit(&self, state: &LoopState) -> Result<(), LoopError> {
        self.save_state(state)?;
        self.reconcile(state)
    }
}
