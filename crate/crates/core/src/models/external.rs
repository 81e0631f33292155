//! Out-of-process models speaking newline-delimited JSON over stdio.
//!
//! The server announces itself with `{"type":"hello","n_features":p}`, then
//! answers each `{"type":"predict","id":..,"rows":[[..],..]}` with
//! `{"type":"prediction","id":..,"values":[..]}`. The client ends the
//! session with `{"type":"shutdown"}`.

use std::io::{BufRead, BufReader, Write};
use std::process::{Child, ChildStdin, ChildStdout, Command, Stdio};
use std::sync::Mutex;
use std::time::{Duration, Instant};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

use super::{Batch, RegressionModel};

#[derive(Serialize)]
#[serde(tag = "type", rename_all = "lowercase")]
enum Request<'a> {
    Predict { id: u64, rows: Vec<&'a [f64]> },
    Shutdown,
}

#[derive(Deserialize)]
#[serde(tag = "type", rename_all = "lowercase", deny_unknown_fields)]
enum Reply {
    Hello {
        n_features: usize,
    },
    Prediction {
        id: u64,
        values: Vec<f64>,
    },
    Error {
        #[serde(default)]
        id: Option<u64>,
        message: String,
    },
}

struct Session {
    child: Child,
    stdin: Option<ChildStdin>,
    stdout: BufReader<ChildStdout>,
    next_id: u64,
}

impl Session {
    fn send(&mut self, req: &Request<'_>) -> Result<()> {
        let stdin = self
            .stdin
            .as_mut()
            .ok_or_else(|| Error::External("session already closed".into()))?;
        let mut line = serde_json::to_vec(req).map_err(|e| Error::External(e.to_string()))?;
        line.push(b'\n');
        stdin
            .write_all(&line)
            .and_then(|_| stdin.flush())
            .map_err(|e| Error::External(format!("write to server failed: {e}")))
    }

    fn recv(&mut self) -> Result<Reply> {
        let mut line = String::new();
        let read = self
            .stdout
            .read_line(&mut line)
            .map_err(|e| Error::External(format!("read from server failed: {e}")))?;
        if read == 0 {
            let status = self.child.try_wait().ok().flatten();
            return Err(Error::External(match status {
                Some(s) => format!("server exited mid-session ({s})"),
                None => "server closed its output mid-session".into(),
            }));
        }
        let line = line.trim_end();
        serde_json::from_str(line).map_err(|_| Error::External(format!("malformed response: {line}")))
    }
}

/// A model served by a child process. Requests are serialized: at most one
/// is in flight at a time.
pub struct ExternalModel {
    command: String,
    n_features: usize,
    session: Mutex<Session>,
}

impl ExternalModel {
    /// Spawns `command` through `sh -c` and checks that the server's hello
    /// reports `expected_features`.
    pub fn connect(command: &str, expected_features: usize) -> Result<Self> {
        let mut child = Command::new("sh")
            .arg("-c")
            .arg(command)
            .stdin(Stdio::piped())
            .stdout(Stdio::piped())
            .stderr(Stdio::inherit())
            .spawn()
            .map_err(|e| Error::External(format!("cannot spawn '{command}': {e}")))?;
        let stdin = child.stdin.take();
        let stdout = BufReader::new(child.stdout.take().expect("piped stdout"));
        let mut session = Session {
            child,
            stdin,
            stdout,
            next_id: 1,
        };
        let n_features = match session.recv()? {
            Reply::Hello { n_features } => n_features,
            _ => return Err(Error::External("expected hello as the first message".into())),
        };
        let model = Self {
            command: command.to_owned(),
            n_features,
            session: Mutex::new(session),
        };
        if n_features != expected_features {
            return Err(Error::External(format!(
                "handshake mismatch: server reports {n_features} features, expected {expected_features}"
            )));
        }
        Ok(model)
    }
}

impl RegressionModel for ExternalModel {
    fn n_features(&self) -> usize {
        self.n_features
    }

    fn predict_batch(&self, batch: Batch<'_>) -> Result<Vec<f64>> {
        let mut session = self.session.lock().unwrap_or_else(|e| e.into_inner());
        let id = session.next_id;
        session.next_id += 1;
        session.send(&Request::Predict {
            id,
            rows: batch.rows().collect(),
        })?;
        match session.recv()? {
            Reply::Prediction { id: got, values } => {
                if got != id {
                    return Err(Error::External(format!(
                        "response id {got} does not match request id {id}"
                    )));
                }
                if values.len() != batch.len() {
                    return Err(Error::External(format!(
                        "server returned {} values for {} rows",
                        values.len(),
                        batch.len()
                    )));
                }
                Ok(values)
            }
            Reply::Error { id: got, message } => Err(Error::External(match got {
                Some(got) => format!("server error for request {got}: {message}"),
                None => format!("server error: {message}"),
            })),
            Reply::Hello { .. } => Err(Error::External("unexpected hello mid-session".into())),
        }
    }

    fn concurrent(&self) -> bool {
        false
    }

    fn describe(&self) -> String {
        format!("external({})", self.command)
    }
}

impl Drop for ExternalModel {
    fn drop(&mut self) {
        let session = self.session.get_mut().unwrap_or_else(|e| e.into_inner());
        let _ = session.send(&Request::Shutdown);
        session.stdin = None;
        let deadline = Instant::now() + Duration::from_secs(2);
        while Instant::now() < deadline {
            match session.child.try_wait() {
                Ok(Some(_)) | Err(_) => return,
                Ok(None) => std::thread::sleep(Duration::from_millis(10)),
            }
        }
        let _ = session.child.kill();
        let _ = session.child.wait();
    }
}
