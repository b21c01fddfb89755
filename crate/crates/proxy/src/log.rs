use std::fmt;
use std::fs::OpenOptions;
use std::io::{self, Write};
use std::path::PathBuf;
use std::sync::Mutex;

use sessmon_core::model::{Message, VerdictKind};

use crate::codec::{ConnectionManager, LineCodec};

/// Environment variable overriding the session log path.
pub const LOG_ENV: &str = "SESSMON_LOG";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Side {
    Untrusted,
    Trusted,
}

impl fmt::Display for Side {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Side::Untrusted => "untrusted",
            Side::Trusted => "trusted",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Direction {
    ToTrusted,
    ToUntrusted,
}

impl fmt::Display for Direction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Direction::ToTrusted => "to-trusted",
            Direction::ToUntrusted => "to-untrusted",
        })
    }
}

/// What triggered a verdict.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Offending {
    Message(Message),
    /// A frame that did not decode, with the reason.
    Malformed(String),
    /// The monitor started in a verdict.
    Nothing,
}

impl fmt::Display for Offending {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Offending::Message(m) => f.write_str(&wire(m)),
            Offending::Malformed(why) => write!(f, "malformed frame: {why}"),
            Offending::Nothing => f.write_str("-"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum CloseReason {
    /// The monitor reached `0`.
    Completed,
    /// Closed after a verdict.
    Halted,
    PeerDisconnect(Side),
    Timeout,
    Error(String),
}

impl fmt::Display for CloseReason {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CloseReason::Completed => f.write_str("completed"),
            CloseReason::Halted => f.write_str("halted"),
            CloseReason::PeerDisconnect(side) => write!(f, "peer-disconnect {side}"),
            CloseReason::Timeout => f.write_str("timeout"),
            CloseReason::Error(e) => write!(f, "error {e}"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum SessionEvent {
    Forwarded(Direction, Message),
    Flagged(VerdictKind, Offending),
    Closed(CloseReason),
}

impl SessionEvent {
    fn record(&self) -> (&'static str, String) {
        match self {
            SessionEvent::Forwarded(d, m) => ("forwarded", format!("{d} {}", wire(m))),
            SessionEvent::Flagged(k, o) => ("flagged", format!("{k} {o}")),
            SessionEvent::Closed(r) => ("closed", r.to_string()),
        }
    }
}

fn wire(m: &Message) -> String {
    let mut s = String::from_utf8(LineCodec.encode(m)).expect("the codec emits UTF-8");
    s.pop();
    s
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SessionLog {
    pub session_id: u64,
    pub events: Vec<SessionEvent>,
}

impl SessionLog {
    pub fn new(session_id: u64) -> Self {
        Self { session_id, events: Vec::new() }
    }

    pub fn verdict(&self) -> Option<VerdictKind> {
        self.events.iter().find_map(|e| match e {
            SessionEvent::Flagged(k, _) => Some(*k),
            _ => None,
        })
    }

    pub fn close_reason(&self) -> Option<&CloseReason> {
        self.events.iter().find_map(|e| match e {
            SessionEvent::Closed(r) => Some(r),
            _ => None,
        })
    }

    pub fn forwarded(&self, dir: Direction) -> impl Iterator<Item = &Message> {
        self.events.iter().filter_map(move |e| match e {
            SessionEvent::Forwarded(d, m) if *d == dir => Some(m),
            _ => None,
        })
    }

    /// Checks the log's shape: at most one verdict, directly before the
    /// single closing event, which comes last.
    pub fn is_well_formed(&self) -> bool {
        let flagged: Vec<usize> =
            self.events.iter().enumerate().filter(|(_, e)| matches!(e, SessionEvent::Flagged(..))).map(|(i, _)| i).collect();
        let closed = self.events.iter().filter(|e| matches!(e, SessionEvent::Closed(_))).count();
        let n = self.events.len();
        closed == 1
            && matches!(self.events.last(), Some(SessionEvent::Closed(_)))
            && flagged.len() <= 1
            && flagged.first().is_none_or(|&i| i + 2 == n)
    }

    /// `session_id<TAB>event<TAB>detail` lines.
    pub fn records(&self) -> Vec<String> {
        self.events
            .iter()
            .map(|e| {
                let (event, detail) = e.record();
                format!("{}\t{event}\t{}", self.session_id, escape_record(&detail))
            })
            .collect()
    }
}

/// Keeps one record per line even for payloads containing tabs or newlines.
fn escape_record(s: &str) -> String {
    s.replace('\t', "\\t").replace('\n', "\\n")
}

/// Append-only destination for finished session logs. Sessions are written
/// whole, so records of concurrent sessions never interleave.
pub struct LogSink {
    writer: Option<Mutex<Box<dyn Write + Send>>>,
    retained: Option<Mutex<Vec<SessionLog>>>,
}

impl LogSink {
    /// Keeps logs in memory only.
    pub fn memory() -> Self {
        Self { writer: None, retained: Some(Mutex::new(Vec::new())) }
    }

    pub fn writer(w: impl Write + Send + 'static) -> Self {
        Self { writer: Some(Mutex::new(Box::new(w))), retained: None }
    }

    /// Appends to `$SESSMON_LOG` if set, else to `default`, else to stderr.
    pub fn from_env(default: Option<PathBuf>) -> io::Result<Self> {
        let path = std::env::var_os(LOG_ENV).map(PathBuf::from).or(default);
        match path {
            Some(p) => Ok(Self::writer(OpenOptions::new().create(true).append(true).open(p)?)),
            None => Ok(Self::writer(io::stderr())),
        }
    }

    pub fn retaining(mut self) -> Self {
        self.retained = Some(Mutex::new(Vec::new()));
        self
    }

    pub fn append(&self, log: &SessionLog) {
        if let Some(w) = &self.writer {
            let mut text = log.records().join("\n");
            text.push('\n');
            let mut w = w.lock().unwrap_or_else(|e| e.into_inner());
            // Logging must never take a session down.
            let _ = w.write_all(text.as_bytes()).and_then(|_| w.flush());
        }
        if let Some(r) = &self.retained {
            r.lock().unwrap_or_else(|e| e.into_inner()).push(log.clone());
        }
    }

    /// Retained logs, oldest first.
    pub fn logs(&self) -> Vec<SessionLog> {
        self.retained.as_ref().map(|r| r.lock().unwrap_or_else(|e| e.into_inner()).clone()).unwrap_or_default()
    }
}
