//! Driving external classifiers over line-delimited JSON on standard streams.
//!
//! The harness writes one request object per line to the adapter's stdin and
//! reads reply objects, one per line, from its stdout. See `docs/PROTOCOL.md`
//! for the grammar.

use std::collections::{HashMap, HashSet};
use std::io::{BufRead, BufReader, Write};
use std::path::{Path, PathBuf};
use std::process::{Child, ChildStdin, Command, Stdio};
use std::sync::mpsc::{self, Receiver, RecvTimeoutError};
use std::thread;
use std::time::Duration;

use log::debug;
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};
use thiserror::Error;

use crate::classifier::{self, ClassifierModel, Hyperparams};
use crate::corpus::ingest_csv;
use crate::labeling::{binarize, BinaryLabel};

pub const PROTOCOL_VERSION: u64 = 1;

#[derive(Debug, Error)]
pub enum ProtocolError {
    #[error("failed to start adapter `{command}`: {source}")]
    Spawn {
        command: String,
        #[source]
        source: std::io::Error,
    },
    #[error("adapter speaks protocol version {found}, harness expects {expected}")]
    ProtocolVersionMismatch { expected: u64, found: u64 },
    #[error("adapter crashed: {0}")]
    AdapterCrashed(String),
    #[error("adapter did not answer `{op}` within {after:?}")]
    Timeout { op: String, after: Duration },
    #[error("adapter error: {0}")]
    AdapterError(String),
    #[error("adapter returned no prediction for {} test id(s), first `{}`", .0.len(), .0[0])]
    MissingPrediction(Vec<String>),
    #[error("adapter returned a prediction for unknown id `{0}`")]
    UnknownId(String),
    #[error("malformed adapter reply: {0}")]
    MalformedReply(String),
    #[error("`{op}` is not allowed while the adapter is {state:?}")]
    InvalidState { op: String, state: AdapterState },
    #[error("{path} does not exist")]
    MissingFile { path: String },
    #[error("reading {path}: {reason}")]
    Data { path: String, reason: String },
}

pub type Result<T> = std::result::Result<T, ProtocolError>;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum AdapterState {
    /// Started, handshake not yet completed.
    Starting,
    Idle,
    Training,
    Ready,
    Failed,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct AdapterInfo {
    pub name: String,
    pub version: u64,
}

/// One prediction line as exchanged on the wire.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IdPrediction {
    pub id: String,
    pub label: BinaryLabel,
    pub score: f64,
}

/// A classifier that trains from and predicts on canonical CSV files.
pub trait Adapter {
    fn name(&self) -> &str;
    fn train(&mut self, train_file: &Path, model_dir: &Path, params: &Value) -> Result<()>;
    /// Predictions in the order of the test file's records.
    fn predict(&mut self, test_file: &Path) -> Result<Vec<IdPrediction>>;
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Timeouts {
    pub handshake: Duration,
    pub train: Duration,
    pub predict: Duration,
}

impl Default for Timeouts {
    fn default() -> Self {
        Self {
            handshake: Duration::from_secs(60),
            train: Duration::from_secs(24 * 60 * 60),
            predict: Duration::from_secs(24 * 60 * 60),
        }
    }
}

/// A running adapter subprocess.
pub struct AdapterHandle {
    command: Vec<String>,
    child: Child,
    stdin: Option<ChildStdin>,
    replies: Receiver<String>,
    state: AdapterState,
    info: Option<AdapterInfo>,
    pub timeouts: Timeouts,
}

impl std::fmt::Debug for AdapterHandle {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("AdapterHandle")
            .field("command", &self.command)
            .field("state", &self.state)
            .field("info", &self.info)
            .finish()
    }
}

fn test_ids(test_file: &Path) -> Result<Vec<String>> {
    let set = ingest_csv(test_file, true).map_err(|e| ProtocolError::Data {
        path: test_file.display().to_string(),
        reason: e.to_string(),
    })?;
    Ok(set.into_records().into_iter().map(|r| r.id).collect())
}

fn require_file(path: &Path) -> Result<()> {
    if path.is_file() {
        Ok(())
    } else {
        Err(ProtocolError::MissingFile {
            path: path.display().to_string(),
        })
    }
}

/// Checks that `predictions` cover `ids` exactly once each and returns them
/// in `ids` order.
pub fn match_predictions(ids: &[String], predictions: Vec<IdPrediction>) -> Result<Vec<IdPrediction>> {
    let known: HashSet<&str> = ids.iter().map(String::as_str).collect();
    let mut by_id: HashMap<String, IdPrediction> = HashMap::with_capacity(predictions.len());
    for p in predictions {
        if !known.contains(p.id.as_str()) {
            return Err(ProtocolError::UnknownId(p.id));
        }
        if !(0.0..=1.0).contains(&p.score) {
            return Err(ProtocolError::MalformedReply(format!(
                "score {} for `{}` outside [0, 1]",
                p.score, p.id
            )));
        }
        if by_id.contains_key(&p.id) {
            return Err(ProtocolError::MalformedReply(format!("duplicate prediction for `{}`", p.id)));
        }
        by_id.insert(p.id.clone(), p);
    }
    let missing: Vec<String> = ids.iter().filter(|id| !by_id.contains_key(*id)).cloned().collect();
    if !missing.is_empty() {
        return Err(ProtocolError::MissingPrediction(missing));
    }
    Ok(ids.iter().map(|id| by_id.remove(id).expect("checked")).collect())
}

impl AdapterHandle {
    /// Starts `command[0]` with the remaining arguments. The adapter's stderr
    /// is inherited.
    pub fn spawn(command: &[String]) -> Result<Self> {
        let (program, args) = command.split_first().ok_or_else(|| ProtocolError::Spawn {
            command: String::new(),
            source: std::io::Error::new(std::io::ErrorKind::InvalidInput, "empty command"),
        })?;
        let mut child = Command::new(program)
            .args(args)
            .stdin(Stdio::piped())
            .stdout(Stdio::piped())
            .stderr(Stdio::inherit())
            .spawn()
            .map_err(|e| ProtocolError::Spawn {
                command: command.join(" "),
                source: e,
            })?;
        let stdin = child.stdin.take();
        let stdout = child.stdout.take().expect("stdout is piped");
        let (tx, rx) = mpsc::channel();
        thread::spawn(move || {
            for line in BufReader::new(stdout).lines() {
                let Ok(line) = line else { break };
                if tx.send(line).is_err() {
                    break;
                }
            }
        });
        Ok(Self {
            command: command.to_vec(),
            child,
            stdin,
            replies: rx,
            state: AdapterState::Starting,
            info: None,
            timeouts: Timeouts::default(),
        })
    }

    /// Spawns and completes the handshake.
    pub fn start(command: &[String]) -> Result<Self> {
        let mut handle = Self::spawn(command)?;
        handle.handshake()?;
        Ok(handle)
    }

    pub fn state(&self) -> AdapterState {
        self.state
    }

    pub fn info(&self) -> Option<&AdapterInfo> {
        self.info.as_ref()
    }

    fn crashed(&mut self) -> ProtocolError {
        self.state = AdapterState::Failed;
        let status = match self.child.try_wait() {
            Ok(Some(status)) => format!("exited with {status}"),
            Ok(None) => "closed its output stream".to_string(),
            Err(e) => e.to_string(),
        };
        ProtocolError::AdapterCrashed(status)
    }

    fn send(&mut self, request: &Value) -> Result<()> {
        debug!("-> {request}");
        let mut line = request.to_string();
        line.push('\n');
        let written = match self.stdin.as_mut() {
            Some(stdin) => stdin.write_all(line.as_bytes()).and_then(|_| stdin.flush()),
            None => Err(std::io::Error::from(std::io::ErrorKind::BrokenPipe)),
        };
        written.map_err(|_| self.crashed())
    }

    fn recv(&mut self, op: &str, timeout: Duration) -> Result<Value> {
        match self.replies.recv_timeout(timeout) {
            Ok(line) => {
                debug!("<- {line}");
                serde_json::from_str(&line)
                    .map_err(|e| ProtocolError::MalformedReply(format!("{e}: {line}")))
            }
            Err(RecvTimeoutError::Timeout) => {
                self.state = AdapterState::Failed;
                Err(ProtocolError::Timeout {
                    op: op.to_string(),
                    after: timeout,
                })
            }
            Err(RecvTimeoutError::Disconnected) => {
                // Give the process a moment to be reaped so the status is known.
                let _ = self.child.wait();
                Err(self.crashed())
            }
        }
    }

    fn expect_ok(&mut self, reply: &Value) -> Result<()> {
        match reply.get("ok").and_then(Value::as_bool) {
            Some(true) => Ok(()),
            Some(false) => {
                let msg = reply
                    .get("error")
                    .map(|e| e.as_str().map_or_else(|| e.to_string(), str::to_string))
                    .unwrap_or_default();
                Err(ProtocolError::AdapterError(msg))
            }
            None => Err(ProtocolError::MalformedReply(format!("missing `ok` in {reply}"))),
        }
    }

    fn check_state(&self, op: &str, allowed: &[AdapterState]) -> Result<()> {
        if allowed.contains(&self.state) {
            Ok(())
        } else {
            Err(ProtocolError::InvalidState {
                op: op.to_string(),
                state: self.state,
            })
        }
    }

    pub fn handshake(&mut self) -> Result<AdapterInfo> {
        self.check_state("hello", &[AdapterState::Starting])?;
        self.send(&json!({"op": "hello", "version": PROTOCOL_VERSION}))?;
        let reply = self.recv("hello", self.timeouts.handshake)?;
        self.expect_ok(&reply)?;
        let version = reply
            .get("version")
            .and_then(Value::as_u64)
            .ok_or_else(|| ProtocolError::MalformedReply(format!("missing `version` in {reply}")))?;
        if version != PROTOCOL_VERSION {
            self.state = AdapterState::Failed;
            return Err(ProtocolError::ProtocolVersionMismatch {
                expected: PROTOCOL_VERSION,
                found: version,
            });
        }
        let name = reply
            .get("name")
            .and_then(Value::as_str)
            .ok_or_else(|| ProtocolError::MalformedReply(format!("missing `name` in {reply}")))?
            .to_string();
        let info = AdapterInfo { name, version };
        self.info = Some(info.clone());
        self.state = AdapterState::Idle;
        Ok(info)
    }

    pub fn remote_train(&mut self, train_file: &Path, model_dir: &Path, params: &Value) -> Result<()> {
        self.check_state("train", &[AdapterState::Idle, AdapterState::Ready])?;
        require_file(train_file)?;
        self.send(&json!({
            "op": "train",
            "train_file": train_file,
            "model_dir": model_dir,
            "params": params,
        }))?;
        self.state = AdapterState::Training;
        let reply = self.recv("train", self.timeouts.train)?;
        if let Err(e) = self.expect_ok(&reply) {
            self.state = AdapterState::Failed;
            return Err(e);
        }
        self.state = AdapterState::Ready;
        Ok(())
    }

    /// Requests predictions for `test_file`. Reply lines are collected until
    /// the terminating `{"ok":true}` and must cover the test ids exactly.
    pub fn remote_predict(&mut self, test_file: &Path) -> Result<Vec<IdPrediction>> {
        self.check_state("predict", &[AdapterState::Ready])?;
        require_file(test_file)?;
        let ids = test_ids(test_file)?;
        self.send(&json!({"op": "predict", "test_file": test_file}))?;
        let mut predictions = Vec::with_capacity(ids.len());
        loop {
            let reply = self.recv("predict", self.timeouts.predict)?;
            if reply.get("id").is_some() {
                let p: IdPrediction = serde_json::from_value(reply.clone())
                    .map_err(|e| ProtocolError::MalformedReply(format!("{e}: {reply}")))?;
                predictions.push(p);
            } else {
                self.expect_ok(&reply)?;
                break;
            }
        }
        match_predictions(&ids, predictions)
    }

    /// Asks the adapter to exit and waits for it; a non-zero exit is an error.
    pub fn shutdown(mut self) -> Result<()> {
        if self.state != AdapterState::Failed {
            self.send(&json!({"op": "shutdown"}))?;
            let reply = self.recv("shutdown", self.timeouts.handshake)?;
            self.expect_ok(&reply)?;
        }
        self.stdin.take();
        let status = self.child.wait().map_err(|e| ProtocolError::AdapterCrashed(e.to_string()))?;
        if status.success() {
            Ok(())
        } else {
            Err(ProtocolError::AdapterCrashed(format!("exited with {status}")))
        }
    }
}

impl Drop for AdapterHandle {
    fn drop(&mut self) {
        if let Ok(None) = self.child.try_wait() {
            let _ = self.child.kill();
            let _ = self.child.wait();
        }
    }
}

impl Adapter for AdapterHandle {
    fn name(&self) -> &str {
        self.info.as_ref().map_or("adapter", |i| i.name.as_str())
    }

    fn train(&mut self, train_file: &Path, model_dir: &Path, params: &Value) -> Result<()> {
        self.remote_train(train_file, model_dir, params)
    }

    fn predict(&mut self, test_file: &Path) -> Result<Vec<IdPrediction>> {
        self.remote_predict(test_file)
    }
}

/// The built-in classifier behind the [`Adapter`] interface. `params` may
/// override any [`Hyperparams`] field.
#[derive(Debug, Clone)]
pub struct NativeAdapter {
    name: String,
    base: Hyperparams,
    model: Option<ClassifierModel>,
    pub model_path: Option<PathBuf>,
}

impl NativeAdapter {
    pub fn new(name: impl Into<String>, base: Hyperparams) -> Self {
        Self {
            name: name.into(),
            base,
            model: None,
            model_path: None,
        }
    }

    pub fn model(&self) -> Option<&ClassifierModel> {
        self.model.as_ref()
    }
}

/// Overlays the keys of a JSON object on `base`.
pub fn merge_hyperparams(base: &Hyperparams, params: &Value) -> Result<Hyperparams> {
    let mut merged = serde_json::to_value(base).expect("hyperparams serialize");
    if let (Value::Object(dst), Value::Object(src)) = (&mut merged, params) {
        for (k, v) in src {
            dst.insert(k.clone(), v.clone());
        }
    }
    serde_json::from_value(merged).map_err(|e| ProtocolError::AdapterError(format!("bad params: {e}")))
}

impl Adapter for NativeAdapter {
    fn name(&self) -> &str {
        &self.name
    }

    fn train(&mut self, train_file: &Path, model_dir: &Path, params: &Value) -> Result<()> {
        require_file(train_file)?;
        let hyperparams = merge_hyperparams(&self.base, params)?;
        let set = ingest_csv(train_file, true).map_err(|e| ProtocolError::Data {
            path: train_file.display().to_string(),
            reason: e.to_string(),
        })?;
        let (rows, _) = binarize(&set);
        let examples: Vec<(String, BinaryLabel)> =
            rows.into_iter().map(|(r, l)| (r.text, l)).collect();
        let model = classifier::train(&examples, &hyperparams)
            .map_err(|e| ProtocolError::AdapterError(e.to_string()))?;
        if model_dir.is_dir() {
            let path = model_dir.join("model.tpc");
            model
                .save(&path)
                .map_err(|e| ProtocolError::AdapterError(e.to_string()))?;
            self.model_path = Some(path);
        }
        self.model = Some(model);
        Ok(())
    }

    fn predict(&mut self, test_file: &Path) -> Result<Vec<IdPrediction>> {
        let model = self.model.as_ref().ok_or(ProtocolError::InvalidState {
            op: "predict".into(),
            state: AdapterState::Idle,
        })?;
        require_file(test_file)?;
        let set = ingest_csv(test_file, true).map_err(|e| ProtocolError::Data {
            path: test_file.display().to_string(),
            reason: e.to_string(),
        })?;
        Ok(set
            .iter()
            .map(|r| {
                let p = model.predict(&r.text);
                IdPrediction {
                    id: r.id.clone(),
                    label: p.label,
                    score: p.score,
                }
            })
            .collect())
    }
}
