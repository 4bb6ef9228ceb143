use std::io::{BufRead, BufReader, BufWriter, Write};
use std::process::{Child, ChildStdin, Command, Stdio};
use std::sync::mpsc::{self, Receiver, RecvTimeoutError};
use std::thread;
use std::time::Duration;

use serde::{Deserialize, Serialize};

use super::protocol::{Reply, Request};
use super::{ResetMode, Student};
use crate::error::{Error, Result};
use crate::space::TaskParams;

/// How to launch an external student.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ExternalSpec {
    pub command: String,
    #[serde(default)]
    pub args: Vec<String>,
    /// Per-request reply deadline.
    #[serde(default = "default_timeout_ms")]
    pub timeout_ms: u64,
}

fn default_timeout_ms() -> u64 {
    60_000
}

impl ExternalSpec {
    pub fn new(command: impl Into<String>, args: impl IntoIterator<Item = impl Into<String>>) -> Self {
        Self {
            command: command.into(),
            args: args.into_iter().map(Into::into).collect(),
            timeout_ms: default_timeout_ms(),
        }
    }

    pub fn timeout(&self) -> Duration {
        Duration::from_millis(self.timeout_ms)
    }
}

/// A child process driven over the line protocol.
///
/// Any failure poisons the session: the child is killed and later calls
/// fail immediately.
pub struct ExternalStudent {
    child: Child,
    stdin: BufWriter<ChildStdin>,
    replies: Receiver<std::io::Result<String>>,
    timeout: Duration,
    failed: Option<String>,
}

impl std::fmt::Debug for ExternalStudent {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("ExternalStudent")
            .field("pid", &self.child.id())
            .field("timeout", &self.timeout)
            .field("failed", &self.failed)
            .finish()
    }
}

impl ExternalStudent {
    pub fn spawn(spec: &ExternalSpec) -> Result<Self> {
        let mut child = Command::new(&spec.command)
            .args(&spec.args)
            .stdin(Stdio::piped())
            .stdout(Stdio::piped())
            .stderr(Stdio::inherit())
            .spawn()?;
        let stdin = child.stdin.take().expect("stdin is piped");
        let stdout = child.stdout.take().expect("stdout is piped");
        let (tx, rx) = mpsc::channel();
        thread::Builder::new().name("student-stdout".into()).spawn(move || {
            for line in BufReader::new(stdout).lines() {
                let stop = line.is_err();
                if tx.send(line).is_err() || stop {
                    break;
                }
            }
        })?;
        Ok(Self {
            child,
            stdin: BufWriter::new(stdin),
            replies: rx,
            timeout: spec.timeout(),
            failed: None,
        })
    }

    fn request(&mut self, request: &Request) -> Result<Reply> {
        if let Some(reason) = &self.failed {
            return Err(Error::ProcessExited(format!("session already failed: {reason}")));
        }
        let outcome = self.exchange(request);
        if let Err(e) = &outcome {
            self.failed = Some(e.to_string());
            let _ = self.child.kill();
            let _ = self.child.wait();
        }
        outcome
    }

    fn exchange(&mut self, request: &Request) -> Result<Reply> {
        let sent = serde_json::to_writer(&mut self.stdin, request)
            .map_err(Error::from)
            .and_then(|()| Ok(self.stdin.write_all(b"\n")?))
            .and_then(|()| Ok(self.stdin.flush()?));
        if sent.is_err() {
            return Err(self.exit_error());
        }
        let line = match self.replies.recv_timeout(self.timeout) {
            Ok(Ok(line)) => line,
            Ok(Err(e)) => return Err(e.into()),
            Err(RecvTimeoutError::Timeout) => return Err(Error::Timeout(self.timeout)),
            Err(RecvTimeoutError::Disconnected) => return Err(self.exit_error()),
        };
        match serde_json::from_str::<Reply>(&line) {
            Ok(Reply::Error { error }) => Err(Error::Protocol { line, message: format!("student error: {error}") }),
            Ok(reply) => Ok(reply),
            Err(e) => Err(Error::Protocol { line, message: e.to_string() }),
        }
    }

    fn exit_error(&mut self) -> Error {
        match self.child.wait() {
            Ok(status) => Error::ProcessExited(status.to_string()),
            Err(e) => Error::ProcessExited(e.to_string()),
        }
    }

    fn reward(&mut self, request: Request) -> Result<f64> {
        match self.request(&request)? {
            Reply::Reward { reward } if reward.is_finite() => Ok(reward),
            other => {
                let line = serde_json::to_string(&other)?;
                self.failed = Some("bad reward reply".into());
                let _ = self.child.kill();
                Err(Error::Protocol { line, message: "expected a finite reward".into() })
            }
        }
    }
}

impl Student for ExternalStudent {
    fn train_on(&mut self, params: &TaskParams) -> Result<f64> {
        self.reward(Request::Train { params: params.0.clone() })
    }

    fn evaluate(&mut self, params: &TaskParams) -> Result<f64> {
        self.reward(Request::Eval { params: params.0.clone() })
    }

    fn reset(&mut self, mode: ResetMode) -> Result<()> {
        if mode == ResetMode::FineTune {
            return Ok(());
        }
        match self.request(&Request::Reset { mode })? {
            Reply::Ok { ok: true } => Ok(()),
            other => Err(Error::Protocol {
                line: serde_json::to_string(&other)?,
                message: "expected {\"ok\":true}".into(),
            }),
        }
    }
}

impl Drop for ExternalStudent {
    fn drop(&mut self) {
        let _ = self.child.kill();
        let _ = self.child.wait();
    }
}
