use std::io::{BufRead, BufReader, Write};
use std::process::{Child, ChildStdin, Command, Stdio};
use std::sync::mpsc::{self, Receiver, RecvTimeoutError};
use std::sync::Mutex;
use std::thread;
use std::time::Duration;

use serde::{Deserialize, Serialize};

use super::{CorefCluster, CorefError, Resolver};
use crate::corpus::Span;

pub const DEFAULT_TIMEOUT: Duration = Duration::from_secs(60);

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SidecarRequest {
    pub id: String,
    pub tokens: Vec<String>,
}

/// Exactly one of `clusters` and `error` is present on the wire.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SidecarResponse {
    pub id: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub clusters: Option<Vec<Vec<Span>>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
}

impl SidecarResponse {
    pub fn ok(id: &str, clusters: &[CorefCluster]) -> Self {
        Self {
            id: id.to_owned(),
            clusters: Some(clusters.iter().map(|c| c.spans.clone()).collect()),
            error: None,
        }
    }
}

struct Session {
    child: Child,
    stdin: ChildStdin,
    lines: Receiver<std::io::Result<String>>,
    next_id: u64,
}

/// Client for a resolver process speaking line-delimited JSON over stdio.
/// Calls are serialized; one request is in flight at a time.
pub struct SidecarResolver {
    command: String,
    timeout: Duration,
    session: Mutex<Session>,
}

impl SidecarResolver {
    /// Start `command` through the shell.
    pub fn spawn(command: &str, timeout: Duration) -> Result<Self, CorefError> {
        let spawn_err = |message: String| CorefError::Spawn {
            command: command.to_owned(),
            message,
        };
        let mut child = Command::new("sh")
            .arg("-c")
            .arg(command)
            .stdin(Stdio::piped())
            .stdout(Stdio::piped())
            .stderr(Stdio::inherit())
            .spawn()
            .map_err(|e| spawn_err(e.to_string()))?;
        let stdin = child.stdin.take().ok_or_else(|| spawn_err("no stdin".into()))?;
        let stdout = child.stdout.take().ok_or_else(|| spawn_err("no stdout".into()))?;
        let (tx, rx) = mpsc::channel();
        thread::spawn(move || {
            for line in BufReader::new(stdout).lines() {
                if tx.send(line).is_err() {
                    break;
                }
            }
        });
        Ok(Self {
            command: command.to_owned(),
            timeout,
            session: Mutex::new(Session {
                child,
                stdin,
                lines: rx,
                next_id: 0,
            }),
        })
    }

    pub fn command(&self) -> &str {
        &self.command
    }

    fn exchange(&self, tokens: &[String]) -> Result<SidecarResponse, CorefError> {
        let mut s = self.session.lock().unwrap_or_else(|p| p.into_inner());
        s.next_id += 1;
        let req = SidecarRequest {
            id: format!("r{}", s.next_id),
            tokens: tokens.to_vec(),
        };
        let mut line = serde_json::to_string(&req).expect("request serializes");
        line.push('\n');
        s.stdin
            .write_all(line.as_bytes())
            .and_then(|_| s.stdin.flush())
            .map_err(|e| CorefError::Io(e.to_string()))?;
        let reply = match s.lines.recv_timeout(self.timeout) {
            Ok(Ok(l)) => l,
            Ok(Err(e)) => return Err(CorefError::Io(e.to_string())),
            Err(RecvTimeoutError::Timeout) => return Err(CorefError::Timeout(self.timeout.as_secs())),
            Err(RecvTimeoutError::Disconnected) => return Err(CorefError::Io("sidecar closed its output".into())),
        };
        let resp: SidecarResponse =
            serde_json::from_str(&reply).map_err(|e| CorefError::Protocol(format!("{e}: {reply}")))?;
        if resp.id != req.id {
            return Err(CorefError::Protocol(format!("expected id {}, got {}", req.id, resp.id)));
        }
        Ok(resp)
    }
}

impl Resolver for SidecarResolver {
    fn resolve(&self, tokens: &[String]) -> Result<Vec<CorefCluster>, CorefError> {
        let resp = self.exchange(tokens)?;
        match (resp.clusters, resp.error) {
            (_, Some(e)) => Err(CorefError::Sidecar(e)),
            (Some(c), None) => Ok(c.into_iter().map(|spans| CorefCluster { spans }).collect()),
            (None, None) => Err(CorefError::Protocol("response has neither clusters nor error".into())),
        }
    }
}

impl Drop for SidecarResolver {
    fn drop(&mut self) {
        let s = self.session.get_mut().unwrap_or_else(|p| p.into_inner());
        let _ = s.child.kill();
        let _ = s.child.wait();
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn wire_shapes() {
        let r = SidecarResponse::ok(
            "x",
            &[CorefCluster {
                spans: vec![Span::new(0, 1), Span::new(2, 3)],
            }],
        );
        assert_eq!(serde_json::to_string(&r).unwrap(), r#"{"id":"x","clusters":[[[0,1],[2,3]]]}"#);
        let e: SidecarResponse = serde_json::from_str(r#"{"id":"y","error":"bad"}"#).unwrap();
        assert_eq!(e.error.as_deref(), Some("bad"));
    }

    #[test]
    fn timeout_and_closed_output() {
        let slow = SidecarResolver::spawn("sleep 5", Duration::from_millis(200)).unwrap();
        assert!(matches!(slow.resolve(&["a".into()]), Err(CorefError::Timeout(_))));

        let dead = SidecarResolver::spawn("true", Duration::from_secs(5)).unwrap();
        assert!(matches!(dead.resolve(&["a".into()]), Err(CorefError::Io(_))));
    }

    #[test]
    fn id_mismatch_is_a_protocol_error() {
        let liar = SidecarResolver::spawn(
            r#"while read l; do echo '{"id":"nope","clusters":[]}'; done"#,
            Duration::from_secs(5),
        )
        .unwrap();
        assert!(matches!(liar.resolve(&["a".into()]), Err(CorefError::Protocol(_))));
    }
}
