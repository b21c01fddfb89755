use std::fmt;

use super::{Label, Value};

/// `l(v1, .., vn)`: the unit of both simulated actions and wire traffic.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Message {
    pub label: Label,
    pub payload: Vec<Value>,
}

impl Message {
    pub fn new(label: impl Into<Label>, payload: Vec<Value>) -> Self {
        Self { label: label.into(), payload }
    }
}

impl fmt::Display for Message {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}(", self.label)?;
        for (i, v) in self.payload.iter().enumerate() {
            if i > 0 {
                f.write_str(",")?;
            }
            write!(f, "{v}")?;
        }
        f.write_str(")")
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Action {
    Tau,
    ProcSend(Message),
    ProcRecv(Message),
    /// Monitor forwards to the environment.
    ExtSend(Message),
    /// Monitor receives from the environment.
    ExtRecv(Message),
}

impl Action {
    pub fn is_external(&self) -> bool {
        matches!(self, Action::ExtSend(_) | Action::ExtRecv(_))
    }

    pub fn message(&self) -> Option<&Message> {
        match self {
            Action::Tau => None,
            Action::ProcSend(m) | Action::ProcRecv(m) | Action::ExtSend(m) | Action::ExtRecv(m) => Some(m),
        }
    }
}

impl fmt::Display for Action {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Action::Tau => f.write_str("tau"),
            Action::ProcSend(m) => write!(f, "proc-send {m}"),
            Action::ProcRecv(m) => write!(f, "proc-recv {m}"),
            Action::ExtSend(m) => write!(f, "out {m}"),
            Action::ExtRecv(m) => write!(f, "in {m}"),
        }
    }
}
