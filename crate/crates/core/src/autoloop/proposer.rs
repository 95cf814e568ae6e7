use std::collections::VecDeque;
use std::io::{Read, Write};
use std::process::{Command, Stdio};
use std::thread;
use std::time::{Duration, Instant};

use thiserror::Error;

use super::ObservationPayload;

pub const DEFAULT_PROPOSER_TIMEOUT: Duration = Duration::from_secs(300);

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ProposerError {
    /// Nothing left to propose; the loop stops without logging.
    #[error("proposer unavailable")]
    Unavailable,
    #[error("proposer timed out after {0:?}")]
    Timeout(Duration),
    #[error("proposer exited with status {0}")]
    ExitStatus(String),
    #[error("proposer failed: {0}")]
    Io(String),
}

/// Source of proposals. Returns raw text; parsing happens in the loop so a
/// malformed reply is logged like any other failure.
pub trait Proposer {
    fn propose(&mut self, observation: &ObservationPayload) -> Result<String, ProposerError>;
}

/// Replays a fixed list of replies.
#[derive(Debug, Clone, Default)]
pub struct ScriptedProposer {
    replies: VecDeque<String>,
}

impl ScriptedProposer {
    pub fn new<I: IntoIterator<Item = String>>(replies: I) -> Self {
        Self {
            replies: replies.into_iter().collect(),
        }
    }

    /// Reads a JSON array. Objects are replayed as their JSON text, strings
    /// verbatim (useful for malformed replies).
    pub fn from_json(text: &str) -> Result<Self, String> {
        let items: Vec<serde_json::Value> = serde_json::from_str(text).map_err(|e| e.to_string())?;
        Ok(Self::new(items.into_iter().map(|v| match v {
            serde_json::Value::String(s) => s,
            other => other.to_string(),
        })))
    }

    /// Skips the first `n` replies, e.g. when resuming a loop.
    pub fn skip(&mut self, n: usize) {
        for _ in 0..n.min(self.replies.len()) {
            self.replies.pop_front();
        }
    }

    pub fn remaining(&self) -> usize {
        self.replies.len()
    }
}

impl Proposer for ScriptedProposer {
    fn propose(&mut self, _observation: &ObservationPayload) -> Result<String, ProposerError> {
        self.replies.pop_front().ok_or(ProposerError::Unavailable)
    }
}

/// Runs a shell command per proposal: the observation goes to its stdin as
/// JSON, the reply is whatever it prints to stdout.
#[derive(Debug, Clone)]
pub struct ExternalProposer {
    pub command: String,
    pub timeout: Duration,
}

impl ExternalProposer {
    pub fn new(command: impl Into<String>) -> Self {
        Self {
            command: command.into(),
            timeout: DEFAULT_PROPOSER_TIMEOUT,
        }
    }
}

impl Proposer for ExternalProposer {
    fn propose(&mut self, observation: &ObservationPayload) -> Result<String, ProposerError> {
        let io = |e: std::io::Error| ProposerError::Io(e.to_string());
        let payload = serde_json::to_vec(observation).map_err(|e| ProposerError::Io(e.to_string()))?;
        let mut child = Command::new("sh")
            .arg("-c")
            .arg(&self.command)
            .stdin(Stdio::piped())
            .stdout(Stdio::piped())
            .stderr(Stdio::null())
            .spawn()
            .map_err(io)?;
        let mut stdin = child.stdin.take().expect("piped stdin");
        let writer = thread::spawn(move || {
            // a command that ignores its input may close the pipe early
            let _ = stdin.write_all(&payload);
        });
        let mut stdout = child.stdout.take().expect("piped stdout");
        let reader = thread::spawn(move || {
            let mut buf = String::new();
            stdout.read_to_string(&mut buf).map(|_| buf)
        });

        let start = Instant::now();
        let status = loop {
            if let Some(status) = child.try_wait().map_err(io)? {
                break status;
            }
            if start.elapsed() >= self.timeout {
                let _ = child.kill();
                let _ = child.wait();
                return Err(ProposerError::Timeout(self.timeout));
            }
            thread::sleep(Duration::from_millis(10));
        };
        let _ = writer.join();
        let out = reader
            .join()
            .map_err(|_| ProposerError::Io("reader thread panicked".into()))?
            .map_err(io)?;
        if !status.success() {
            return Err(ProposerError::ExitStatus(status.to_string()));
        }
        Ok(out)
    }
}
