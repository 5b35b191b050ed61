//! Models served by a child process over line-delimited JSON.
//!
//! Requests and responses are single JSON objects terminated by `\n`:
//!
//! ```text
//! {"op":"info"}              -> {"arity":N,"output":"probs|label|scalar","gradient":true|false}
//! {"op":"predict","x":[..]}  -> {"y":[..]}
//! {"op":"gradient","x":[..]} -> {"g":[..]} | {"error":"unsupported"}
//! ```
//!
//! For probability outputs `g` is the row-major `n_classes x arity`
//! Jacobian. Calls are serialized, so responses match requests by order.

use std::io::{BufRead, BufReader, Read, Write};
use std::process::{Child, ChildStdin, Command, Stdio};
use std::sync::mpsc::{self, Receiver, RecvTimeoutError};
use std::sync::{Arc, Mutex};
use std::thread::JoinHandle;
use std::time::Duration;

use serde::{Deserialize, Serialize};
use serde_json::Value;
use xmeter_core::{Error, GradientCapability, Model, OutputKind, Prediction, Result};

pub const DEFAULT_TIMEOUT: Duration = Duration::from_secs(30);
const STDERR_TAIL: usize = 4096;

#[derive(Debug, Serialize)]
#[serde(tag = "op", rename_all = "lowercase")]
enum Request<'a> {
    Info,
    Predict { x: &'a [f64] },
    Gradient { x: &'a [f64] },
}

/// Handshake answer.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize)]
pub struct ModelInfo {
    pub arity: usize,
    pub output: OutputKind,
    pub gradient: bool,
}

struct Session {
    child: Child,
    stdin: ChildStdin,
    lines: Receiver<std::io::Result<String>>,
    stderr_reader: Option<JoinHandle<()>>,
    dead: Option<String>,
}

pub struct ExternalModel {
    command: String,
    info: ModelInfo,
    timeout: Duration,
    session: Mutex<Session>,
    stderr: Arc<Mutex<String>>,
}

fn protocol(msg: impl Into<String>) -> Error {
    Error::ModelProtocol(msg.into())
}

impl ExternalModel {
    pub fn spawn(command: &str) -> Result<Self> {
        Self::spawn_with_timeout(command, DEFAULT_TIMEOUT)
    }

    pub fn spawn_with_timeout(command: &str, timeout: Duration) -> Result<Self> {
        let argv = shlex::split(command)
            .filter(|a| !a.is_empty())
            .ok_or_else(|| Error::Contract(format!("cannot parse model command `{command}`")))?;
        let mut child = Command::new(&argv[0])
            .args(&argv[1..])
            .stdin(Stdio::piped())
            .stdout(Stdio::piped())
            .stderr(Stdio::piped())
            .spawn()
            .map_err(|e| protocol(format!("cannot start `{command}`: {e}")))?;
        let stdin = child.stdin.take().expect("piped stdin");
        let stdout = child.stdout.take().expect("piped stdout");
        let mut child_stderr = child.stderr.take().expect("piped stderr");

        let (tx, lines) = mpsc::channel();
        std::thread::spawn(move || {
            for line in BufReader::new(stdout).lines() {
                let stop = line.is_err();
                if tx.send(line).is_err() || stop {
                    break;
                }
            }
        });
        let stderr = Arc::new(Mutex::new(String::new()));
        let sink = Arc::clone(&stderr);
        let stderr_reader = std::thread::spawn(move || {
            let mut buf = [0u8; 1024];
            while let Ok(n) = child_stderr.read(&mut buf) {
                if n == 0 {
                    break;
                }
                let mut s = sink.lock().unwrap_or_else(|p| p.into_inner());
                s.push_str(&String::from_utf8_lossy(&buf[..n]));
                if s.len() > 2 * STDERR_TAIL {
                    let mut cut = s.len() - STDERR_TAIL;
                    while !s.is_char_boundary(cut) {
                        cut += 1;
                    }
                    s.drain(..cut);
                }
            }
        });

        let mut model = Self {
            command: command.to_string(),
            info: ModelInfo {
                arity: 0,
                output: OutputKind::Scalar,
                gradient: false,
            },
            timeout,
            session: Mutex::new(Session {
                child,
                stdin,
                lines,
                stderr_reader: Some(stderr_reader),
                dead: None,
            }),
            stderr,
        };
        let reply = model.call(&Request::Info)?;
        let info: ModelInfo = serde_json::from_value(reply)
            .map_err(|e| protocol(format!("malformed info response from `{command}`: {e}")))?;
        if info.arity == 0 {
            return Err(protocol(format!("`{command}` declared arity 0")));
        }
        model.info = info;
        Ok(model)
    }

    pub fn info(&self) -> ModelInfo {
        self.info
    }

    pub fn command(&self) -> &str {
        &self.command
    }

    fn stderr_tail(&self) -> String {
        let s = self.stderr.lock().unwrap_or_else(|p| p.into_inner());
        let t = s.trim();
        if t.is_empty() {
            String::new()
        } else {
            format!("; stderr: {t}")
        }
    }

    fn call(&self, req: &Request<'_>) -> Result<Value> {
        let mut session = self
            .session
            .lock()
            .map_err(|_| protocol("model session poisoned"))?;
        if let Some(reason) = &session.dead {
            return Err(protocol(reason.clone()));
        }
        let mut line = serde_json::to_string(req).map_err(|e| protocol(e.to_string()))?;
        line.push('\n');
        let written = session
            .stdin
            .write_all(line.as_bytes())
            .and_then(|()| session.stdin.flush());
        let outcome = match written {
            Err(e) => Err(format!("cannot write to `{}`: {e}", self.command)),
            Ok(()) => match session.lines.recv_timeout(self.timeout) {
                Ok(Ok(reply)) => Ok(reply),
                Ok(Err(e)) => Err(format!("cannot read from `{}`: {e}", self.command)),
                Err(RecvTimeoutError::Timeout) => Err(format!(
                    "`{}` did not answer within {:.1} s",
                    self.command,
                    self.timeout.as_secs_f64()
                )),
                Err(RecvTimeoutError::Disconnected) => {
                    Err(format!("`{}` closed its output", self.command))
                }
            },
        };
        let reply = match outcome {
            Ok(reply) => reply,
            Err(msg) => {
                let _ = session.child.kill();
                let status = session.child.wait().ok();
                if let Some(h) = session.stderr_reader.take() {
                    let _ = h.join();
                }
                let status = status.map(|s| format!(" ({s})")).unwrap_or_default();
                let full = format!("{msg}{status}{}", self.stderr_tail());
                session.dead = Some(full.clone());
                return Err(protocol(full));
            }
        };
        let value: Value = serde_json::from_str(reply.trim()).map_err(|_| {
            protocol(format!(
                "malformed response from `{}`: {:?}{}",
                self.command,
                truncate(&reply),
                self.stderr_tail()
            ))
        })?;
        if let Some(err) = value.get("error") {
            let text = err.as_str().unwrap_or_default().to_string();
            return Err(if text == "unsupported" {
                Error::Unsupported(format!("`{}` does not support this request", self.command))
            } else {
                protocol(format!("`{}` reported an error: {err}", self.command))
            });
        }
        Ok(value)
    }

    fn numbers(&self, value: &Value, key: &str) -> Result<Vec<f64>> {
        let arr = value.get(key).and_then(Value::as_array).ok_or_else(|| {
            protocol(format!(
                "response from `{}` lacks `{key}`: {value}",
                self.command
            ))
        })?;
        arr.iter()
            .map(|v| {
                v.as_f64().filter(|f| f.is_finite()).ok_or_else(|| {
                    protocol(format!(
                        "non-numeric `{key}` entry from `{}`: {v}",
                        self.command
                    ))
                })
            })
            .collect()
    }
}

fn truncate(s: &str) -> String {
    s.chars().take(200).collect()
}

impl Model for ExternalModel {
    fn arity(&self) -> usize {
        self.info.arity
    }

    fn output_kind(&self) -> OutputKind {
        self.info.output
    }

    fn gradient_capability(&self) -> GradientCapability {
        if self.info.gradient {
            GradientCapability::Exact
        } else {
            GradientCapability::None
        }
    }

    fn predict(&self, x: &[f64]) -> Result<Prediction> {
        xmeter_core::model::check_arity(self, x)?;
        let y = self.numbers(&self.call(&Request::Predict { x })?, "y")?;
        match self.info.output {
            OutputKind::Scalar if y.len() == 1 => Ok(Prediction::Scalar(y[0])),
            OutputKind::Label if y.len() == 1 && y[0] >= 0.0 && y[0].fract() == 0.0 => {
                Ok(Prediction::Label(y[0] as usize))
            }
            OutputKind::Probs if !y.is_empty() && y.iter().all(|p| *p >= 0.0) => {
                Ok(Prediction::Probs(y))
            }
            kind => Err(protocol(format!(
                "`{}` returned {y:?}, which is not a valid {kind:?} output",
                self.command
            ))),
        }
    }

    fn exact_gradient(&self, x: &[f64], output: usize) -> Result<Vec<f64>> {
        xmeter_core::model::check_arity(self, x)?;
        if !self.info.gradient {
            return Err(Error::Unsupported(format!(
                "`{}` declares no gradient",
                self.command
            )));
        }
        let g = self.numbers(&self.call(&Request::Gradient { x })?, "g")?;
        let n = self.info.arity;
        if g.len() % n != 0 || g.is_empty() {
            return Err(protocol(format!(
                "gradient of length {} from `{}` is not a multiple of arity {n}",
                g.len(),
                self.command
            )));
        }
        let rows = g.len() / n;
        if output >= rows || (self.info.output == OutputKind::Scalar && rows != 1) {
            return Err(protocol(format!(
                "gradient from `{}` has {rows} rows, output {output} requested",
                self.command
            )));
        }
        Ok(g[output * n..(output + 1) * n].to_vec())
    }
}

impl Drop for ExternalModel {
    fn drop(&mut self) {
        if let Ok(session) = self.session.get_mut() {
            let _ = session.child.kill();
            let _ = session.child.wait();
        }
    }
}
