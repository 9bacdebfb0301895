//! Client for external taggers speaking the line-oriented JSON protocol.
//!
//! The server greets with a hello line, then answers one response per
//! request. Over HTTP the hello is served at `GET /v1/health` and requests
//! are posted to `/v1/tag`.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::io::{BufRead, BufReader, Write};
use std::num::NonZeroUsize;
use std::process::{Child, ChildStdin, Command, Stdio};
use std::str::FromStr;
use std::sync::Mutex;
use std::thread;
use std::time::{Duration, Instant};

use crossbeam_channel::{Receiver, RecvTimeoutError};
use pertext_core::{Label, Tagger, TaggerError, Task, Token};
use thiserror::Error;

pub const PROTOCOL_VERSION: u32 = 1;
pub const DEFAULT_TIMEOUT_MS: u64 = 30_000;

/// Wire messages.
pub mod protocol {
    use serde::{Deserialize, Serialize};

    #[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
    pub struct Hello {
        pub proto: u32,
        pub name: String,
        pub tasks: Vec<String>,
    }

    #[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
    pub struct Request {
        pub id: u64,
        pub task: String,
        pub tokens: Vec<String>,
        pub seps: Vec<String>,
    }

    /// Either a response (`labels`) or an error (`error`).
    #[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
    pub struct Reply {
        pub id: u64,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        pub labels: Option<Vec<String>>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        pub error: Option<String>,
    }

    impl Reply {
        pub fn labels(id: u64, labels: Vec<String>) -> Reply {
            Reply { id, labels: Some(labels), error: None }
        }

        pub fn error(id: u64, message: impl Into<String>) -> Reply {
            Reply { id, labels: None, error: Some(message.into()) }
        }
    }
}

use protocol::{Hello, Reply, Request};

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Transport {
    /// Program and arguments of a server speaking over stdin/stdout.
    ChildProcess(Vec<String>),
    /// Base URL of an HTTP server.
    Http(String),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RemoteEndpoint {
    pub transport: Transport,
    pub timeout: Duration,
    pub max_inflight: NonZeroUsize,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum EndpointError {
    #[error("empty endpoint")]
    Empty,
    #[error("cannot split command line `{0}`")]
    Unquotable(String),
    #[error("timeout must be positive")]
    ZeroTimeout,
}

impl RemoteEndpoint {
    pub fn new(transport: Transport) -> RemoteEndpoint {
        RemoteEndpoint {
            transport,
            timeout: Duration::from_millis(DEFAULT_TIMEOUT_MS),
            max_inflight: NonZeroUsize::MIN,
        }
    }

    pub fn with_timeout_ms(mut self, ms: u64) -> Result<RemoteEndpoint, EndpointError> {
        if ms == 0 {
            return Err(EndpointError::ZeroTimeout);
        }
        self.timeout = Duration::from_millis(ms);
        Ok(self)
    }

    pub fn with_max_inflight(mut self, n: NonZeroUsize) -> RemoteEndpoint {
        self.max_inflight = n;
        self
    }
}

/// `http://` and `https://` addresses are URLs; anything else is a
/// shell-quoted command line.
impl FromStr for RemoteEndpoint {
    type Err = EndpointError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let s = s.trim();
        if s.is_empty() {
            return Err(EndpointError::Empty);
        }
        if s.starts_with("http://") || s.starts_with("https://") {
            return Ok(RemoteEndpoint::new(Transport::Http(s.trim_end_matches('/').to_string())));
        }
        let argv = shlex::split(s).ok_or_else(|| EndpointError::Unquotable(s.to_string()))?;
        if argv.is_empty() {
            return Err(EndpointError::Empty);
        }
        Ok(RemoteEndpoint::new(Transport::ChildProcess(argv)))
    }
}

impl fmt::Display for RemoteEndpoint {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match &self.transport {
            Transport::Http(url) => f.write_str(url),
            Transport::ChildProcess(argv) => f.write_str(&shlex::try_join(argv.iter().map(String::as_str)).unwrap_or_else(|_| argv.join(" "))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ServerInfo {
    pub name: String,
    pub tasks: Vec<Task>,
    pub protocol_version: u32,
}

fn parse_hello(line: &str) -> Result<ServerInfo, TaggerError> {
    let hello: Hello = serde_json::from_str(line.trim_end()).map_err(|e| TaggerError::Protocol(format!("malformed hello: {e}")))?;
    if hello.proto != PROTOCOL_VERSION {
        return Err(TaggerError::Protocol(format!("unsupported protocol version {}", hello.proto)));
    }
    let tasks = hello
        .tasks
        .iter()
        .map(|t| t.parse::<Task>().map_err(|_| TaggerError::Protocol(format!("unknown task `{t}` in hello"))))
        .collect::<Result<Vec<_>, _>>()?;
    Ok(ServerInfo {
        name: hello.name,
        tasks,
        protocol_version: hello.proto,
    })
}

fn request_for(id: u64, task: Task, tokens: &[Token]) -> Request {
    Request {
        id,
        task: task.as_str().to_string(),
        tokens: tokens.iter().map(|t| t.surface.clone()).collect(),
        seps: tokens.iter().map(|t| t.sep_after.as_str().to_string()).collect(),
    }
}

/// Checks a reply against what was asked. Never returns an out-of-set label.
fn decode_labels(reply: Reply, task: Task, expected_len: usize) -> Result<Vec<Label>, TaggerError> {
    if let Some(message) = reply.error {
        return Err(TaggerError::Remote(message));
    }
    let raw = reply.labels.ok_or_else(|| TaggerError::Protocol("reply has neither labels nor error".into()))?;
    if raw.len() != expected_len {
        return Err(TaggerError::Protocol("length mismatch".into()));
    }
    raw.iter()
        .map(|name| Label::parse(task, name).ok_or_else(|| TaggerError::Protocol(format!("unknown class value `{name}`"))))
        .collect()
}

struct StdioConn {
    child: Child,
    stdin: Option<ChildStdin>,
    lines: Receiver<Result<String, String>>,
}

impl StdioConn {
    fn spawn(argv: &[String]) -> Result<StdioConn, TaggerError> {
        let (program, args) = argv.split_first().ok_or_else(|| TaggerError::Transport("empty command".into()))?;
        let mut child = Command::new(program)
            .args(args)
            .stdin(Stdio::piped())
            .stdout(Stdio::piped())
            .stderr(Stdio::inherit())
            .spawn()
            .map_err(|e| TaggerError::Transport(format!("cannot start `{program}`: {e}")))?;
        let stdout = child.stdout.take().expect("piped stdout");
        let (tx, rx) = crossbeam_channel::unbounded();
        thread::spawn(move || {
            for line in BufReader::new(stdout).lines() {
                let failed = line.is_err();
                if tx.send(line.map_err(|e| e.to_string())).is_err() || failed {
                    break;
                }
            }
        });
        Ok(StdioConn {
            stdin: child.stdin.take(),
            child,
            lines: rx,
        })
    }

    fn recv_line(&self, deadline: Instant) -> Result<String, TaggerError> {
        let wait = deadline.saturating_duration_since(Instant::now());
        match self.lines.recv_timeout(wait) {
            Ok(Ok(line)) => Ok(line),
            Ok(Err(e)) => Err(TaggerError::Transport(format!("read failed: {e}"))),
            Err(RecvTimeoutError::Timeout) => Err(TaggerError::Timeout),
            Err(RecvTimeoutError::Disconnected) => Err(TaggerError::Transport("server closed the connection".into())),
        }
    }

    fn send(&mut self, request: &Request) -> Result<(), TaggerError> {
        let stdin = self
            .stdin
            .as_mut()
            .ok_or_else(|| TaggerError::Transport("connection closed".into()))?;
        let mut line = serde_json::to_vec(request).expect("request serializes");
        line.push(b'\n');
        stdin
            .write_all(&line)
            .and_then(|()| stdin.flush())
            .map_err(|e| TaggerError::Transport(format!("write failed: {e}")))
    }
}

impl Drop for StdioConn {
    fn drop(&mut self) {
        self.stdin.take();
        let _ = self.child.kill();
        let _ = self.child.wait();
    }
}

struct HttpConn {
    agent: ureq::Agent,
    base: String,
}

fn http_error(e: ureq::Error) -> TaggerError {
    match e {
        ureq::Error::Timeout(_) => TaggerError::Timeout,
        ureq::Error::Io(io) if matches!(io.kind(), std::io::ErrorKind::TimedOut | std::io::ErrorKind::WouldBlock) => TaggerError::Timeout,
        other => TaggerError::Transport(other.to_string()),
    }
}

impl HttpConn {
    fn new(base: &str, timeout: Duration) -> HttpConn {
        let agent = ureq::Agent::config_builder()
            .timeout_global(Some(timeout))
            .http_status_as_error(false)
            .build()
            .into();
        HttpConn {
            agent,
            base: base.to_string(),
        }
    }

    fn read_body(mut resp: ureq::http::Response<ureq::Body>) -> Result<(u16, String), TaggerError> {
        let status = resp.status().as_u16();
        let body = resp.body_mut().read_to_string().map_err(http_error)?;
        Ok((status, body))
    }

    fn health(&self) -> Result<ServerInfo, TaggerError> {
        let resp = self.agent.get(&format!("{}/v1/health", self.base)).call().map_err(http_error)?;
        let (status, body) = Self::read_body(resp)?;
        if status != 200 {
            return Err(TaggerError::Transport(format!("health check returned HTTP {status}")));
        }
        parse_hello(&body)
    }

    fn tag(&self, request: &Request) -> Result<Reply, TaggerError> {
        let payload = serde_json::to_string(request).expect("request serializes");
        let resp = self
            .agent
            .post(&format!("{}/v1/tag", self.base))
            .header("Content-Type", "application/json")
            .send(payload.as_str())
            .map_err(http_error)?;
        let (status, body) = Self::read_body(resp)?;
        match serde_json::from_str::<Reply>(&body) {
            Ok(reply) => Ok(reply),
            Err(_) if status != 200 => Err(TaggerError::Transport(format!("HTTP {status}"))),
            Err(e) => Err(TaggerError::Protocol(format!("malformed reply: {e}"))),
        }
    }
}

enum Conn {
    Stdio(StdioConn),
    Http(HttpConn),
}

fn open(endpoint: &RemoteEndpoint) -> Result<(Conn, ServerInfo), TaggerError> {
    match &endpoint.transport {
        Transport::ChildProcess(argv) => {
            let conn = StdioConn::spawn(argv)?;
            let hello = conn.recv_line(Instant::now() + endpoint.timeout)?;
            let info = parse_hello(&hello)?;
            Ok((Conn::Stdio(conn), info))
        }
        Transport::Http(url) => {
            let conn = HttpConn::new(url, endpoint.timeout);
            let info = conn.health()?;
            Ok((Conn::Http(conn), info))
        }
    }
}

/// Fetches the server's hello.
pub fn healthcheck(endpoint: &RemoteEndpoint) -> Result<ServerInfo, TaggerError> {
    open(endpoint).map(|(_, info)| info)
}

struct Session {
    conn: Conn,
    next_id: u64,
    /// Ids whose request timed out; their late replies are discarded.
    abandoned: BTreeSet<u64>,
}

impl Session {
    /// Reads stdio replies until one for a pending id arrives.
    fn next_reply(conn: &StdioConn, abandoned: &mut BTreeSet<u64>, pending: &BTreeMap<u64, usize>, deadline: Instant) -> Result<Reply, TaggerError> {
        loop {
            let line = conn.recv_line(deadline)?;
            if line.trim().is_empty() {
                continue;
            }
            let reply: Reply = serde_json::from_str(&line).map_err(|e| TaggerError::Protocol(format!("malformed reply: {e}")))?;
            if pending.contains_key(&reply.id) {
                return Ok(reply);
            }
            if abandoned.remove(&reply.id) {
                continue;
            }
            if reply.id == 0 {
                if let Some(message) = reply.error {
                    return Err(TaggerError::Remote(message));
                }
            }
            return Err(TaggerError::Protocol(format!("id mismatch: unexpected reply id {}", reply.id)));
        }
    }

    fn tag_many(&mut self, task: Task, seqs: &[&[Token]], window: usize, timeout: Duration) -> Result<Vec<Vec<Label>>, TaggerError> {
        let mut out: Vec<Option<Vec<Label>>> = seqs.iter().map(|s| s.is_empty().then(Vec::new)).collect();
        let todo: Vec<usize> = (0..seqs.len()).filter(|&i| !seqs[i].is_empty()).collect();
        match &mut self.conn {
            Conn::Http(conn) => {
                for i in todo {
                    let id = self.next_id;
                    self.next_id += 1;
                    let reply = conn.tag(&request_for(id, task, seqs[i]))?;
                    if reply.id != id {
                        return Err(TaggerError::Protocol(format!("id mismatch: sent {id}, got {}", reply.id)));
                    }
                    out[i] = Some(decode_labels(reply, task, seqs[i].len())?);
                }
            }
            Conn::Stdio(conn) => {
                let mut pending: BTreeMap<u64, usize> = BTreeMap::new();
                let mut queue = todo.into_iter();
                let mut deadlines: BTreeMap<u64, Instant> = BTreeMap::new();
                loop {
                    while pending.len() < window {
                        let Some(i) = queue.next() else { break };
                        let id = self.next_id;
                        self.next_id += 1;
                        conn.send(&request_for(id, task, seqs[i]))?;
                        pending.insert(id, i);
                        deadlines.insert(id, Instant::now() + timeout);
                    }
                    let Some((_, &deadline)) = deadlines.iter().min_by_key(|(_, d)| **d) else { break };
                    let reply = match Self::next_reply(conn, &mut self.abandoned, &pending, deadline) {
                        Ok(r) => r,
                        Err(e) => {
                            if e == TaggerError::Timeout {
                                self.abandoned.extend(pending.keys().copied());
                            }
                            return Err(e);
                        }
                    };
                    let i = pending.remove(&reply.id).expect("pending id");
                    deadlines.remove(&reply.id);
                    out[i] = Some(decode_labels(reply, task, seqs[i].len())?);
                }
            }
        }
        Ok(out.into_iter().map(|o| o.expect("every sequence answered")).collect())
    }
}

/// A connected remote tagger for one task.
pub struct RemoteTagger {
    task: Task,
    endpoint: RemoteEndpoint,
    info: ServerInfo,
    session: Mutex<Session>,
}

impl fmt::Debug for RemoteTagger {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("RemoteTagger")
            .field("task", &self.task)
            .field("endpoint", &self.endpoint)
            .field("info", &self.info)
            .finish_non_exhaustive()
    }
}

impl RemoteTagger {
    /// Opens a connection and checks that the server offers `task`.
    pub fn connect(endpoint: &RemoteEndpoint, task: Task) -> Result<RemoteTagger, TaggerError> {
        let (conn, info) = open(endpoint)?;
        if !info.tasks.contains(&task) {
            return Err(TaggerError::Protocol(format!("server `{}` does not serve {task}", info.name)));
        }
        Ok(RemoteTagger {
            task,
            endpoint: endpoint.clone(),
            info,
            session: Mutex::new(Session {
                conn,
                next_id: 1,
                abandoned: BTreeSet::new(),
            }),
        })
    }

    pub fn info(&self) -> &ServerInfo {
        &self.info
    }

    pub fn endpoint(&self) -> &RemoteEndpoint {
        &self.endpoint
    }

    /// Tags several sequences, keeping up to `max_inflight` requests
    /// outstanding on stdio connections. Results follow input order.
    pub fn tag_batch(&self, seqs: &[&[Token]]) -> Result<Vec<Vec<Label>>, TaggerError> {
        let mut session = self.session.lock().unwrap_or_else(|p| p.into_inner());
        session.tag_many(self.task, seqs, self.endpoint.max_inflight.get(), self.endpoint.timeout)
    }
}

impl Tagger for RemoteTagger {
    fn task(&self) -> Task {
        self.task
    }

    fn tag(&self, tokens: &[Token]) -> Result<Vec<Label>, TaggerError> {
        if tokens.is_empty() {
            return Ok(Vec::new());
        }
        let mut session = self.session.lock().unwrap_or_else(|p| p.into_inner());
        let mut out = session.tag_many(self.task, &[tokens], 1, self.endpoint.timeout)?;
        Ok(out.pop().expect("one result"))
    }
}
