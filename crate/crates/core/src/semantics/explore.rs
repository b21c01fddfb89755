use std::collections::{HashMap, VecDeque};
use std::fmt;

use super::composite::{parts, step_composite, CompositeRule, Configuration, Parts};
use super::monitor::{MonitorBlock, MonitorStep};
use super::process::{ProcessBlock, ProcessStep};
use super::ExecContext;
use crate::model::{Action, Monitor, Process, VerdictKind};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum StuckKind {
    VerdictReached(VerdictKind),
    Deadlock,
    CleanTermination,
}

impl fmt::Display for StuckKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            StuckKind::VerdictReached(k) => write!(f, "verdict {k}"),
            StuckKind::Deadlock => f.write_str("deadlock"),
            StuckKind::CleanTermination => f.write_str("clean termination"),
        }
    }
}

/// Why a monitored system cannot move.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum StuckClass {
    /// The monitor blamed the process.
    C1,
    /// Monitor waits for a process send; the process is receiving.
    C2a,
    /// Monitor waits for a process send; the process is `0`.
    C2b,
    /// Monitor forwards a label the process does not accept.
    C3a,
    /// Monitor forwards; the process is sending.
    C3b,
    /// Monitor forwards; the process is `0`.
    C3c,
    /// Monitor is `0`; the process still communicates.
    C4,
    /// The process is stuck on an expression that does not evaluate.
    C5,
    Unclassified,
}

impl StuckClass {
    pub const WITNESS_CLASSES: [StuckClass; 8] = [
        StuckClass::C1,
        StuckClass::C2a,
        StuckClass::C2b,
        StuckClass::C3a,
        StuckClass::C3b,
        StuckClass::C3c,
        StuckClass::C4,
        StuckClass::C5,
    ];

    pub fn name(self) -> &'static str {
        match self {
            StuckClass::C1 => "1",
            StuckClass::C2a => "2a",
            StuckClass::C2b => "2b",
            StuckClass::C3a => "3a",
            StuckClass::C3b => "3b",
            StuckClass::C3c => "3c",
            StuckClass::C4 => "4",
            StuckClass::C5 => "5",
            StuckClass::Unclassified => "unclassified",
        }
    }

    pub fn from_name(s: &str) -> Option<Self> {
        Self::WITNESS_CLASSES.into_iter().chain([StuckClass::Unclassified]).find(|c| c.name() == s)
    }
}

impl fmt::Display for StuckClass {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// A configuration without successors, with the actions that reach it.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct StuckReport {
    pub config: Configuration,
    pub kind: StuckKind,
    pub class: StuckClass,
    pub trace: Vec<(CompositeRule, Action)>,
}

impl StuckReport {
    pub fn verdict(&self) -> Option<VerdictKind> {
        match self.kind {
            StuckKind::VerdictReached(k) => Some(k),
            _ => None,
        }
    }

    /// True for a monitor blaming the environment.
    pub fn blames_environment(&self) -> bool {
        matches!(self.verdict(), Some(VerdictKind::NoELabel | VerdictKind::NoEAssert))
    }

    pub fn blames_process(&self) -> bool {
        self.verdict().is_some_and(VerdictKind::blames_process)
    }
}

impl fmt::Display for StuckReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} (class {}) after", self.kind, self.class)?;
        let visible: Vec<String> =
            self.trace.iter().map(|(rule, a)| if a.is_external() { a.to_string() } else { format!("{rule}") }).collect();
        if visible.is_empty() {
            f.write_str(" no steps")?;
        } else {
            write!(f, " {}", visible.join(", "))?;
        }
        write!(
            f,
            "; process `{}`, monitor `{}`",
            crate::parser::render_process(&self.config.process),
            crate::parser::render_monitor(&self.config.monitor)
        )
    }
}

/// Classifies a configuration known to have no successors.
pub(crate) fn classify(c: &Configuration, p: &Parts) -> (StuckKind, StuckClass) {
    if let Some(k) = c.verdict() {
        let class = if k.blames_process() { StuckClass::C1 } else { StuckClass::Unclassified };
        return (StuckKind::VerdictReached(k), class);
    }
    if c.process == Process::Nil && c.monitor == Monitor::Nil {
        return (StuckKind::CleanTermination, StuckClass::Unclassified);
    }
    if matches!(p.process, Err(ProcessBlock::IllTyped(_))) {
        return (StuckKind::Deadlock, StuckClass::C5);
    }
    let class = match (&p.monitor, &p.process) {
        (Ok(MonitorStep::RecvInternal(_)), Ok(ProcessStep::Receive(_))) => StuckClass::C2a,
        (Ok(MonitorStep::RecvInternal(_)), Err(ProcessBlock::Nil)) => StuckClass::C2b,
        (Ok(MonitorStep::SendInternal(..)), Ok(ProcessStep::Receive(_))) => StuckClass::C3a,
        (Ok(MonitorStep::SendInternal(..)), Ok(ProcessStep::Send(..))) => StuckClass::C3b,
        (Ok(MonitorStep::SendInternal(..)), Err(ProcessBlock::Nil)) => StuckClass::C3c,
        (Err(MonitorBlock::Nil), Ok(ProcessStep::Send(..) | ProcessStep::Receive(_))) => StuckClass::C4,
        _ => StuckClass::Unclassified,
    };
    (StuckKind::Deadlock, class)
}

/// Result of a bounded breadth-first search.
#[derive(Debug, Clone, Default)]
pub struct Exploration {
    pub reports: Vec<StuckReport>,
    /// Some configuration at the depth bound still had successors, or the
    /// state cap was hit.
    pub budget_exceeded: bool,
    pub states: usize,
}

impl Exploration {
    pub fn verdicts(&self) -> impl Iterator<Item = VerdictKind> + '_ {
        self.reports.iter().filter_map(StuckReport::verdict)
    }

    pub fn has_process_blame(&self) -> bool {
        self.reports.iter().any(StuckReport::blames_process)
    }
}

/// Hard cap on distinct configurations per search.
pub const MAX_STATES: usize = 2_000_000;

struct Node {
    config: Configuration,
    parent: Option<(usize, CompositeRule, Action)>,
    depth: usize,
}

/// Enumerates every configuration reachable from `c0` within `max_depth`
/// actions and reports the ones without successors.
pub fn explore(c0: &Configuration, max_depth: usize, ctx: &ExecContext) -> Exploration {
    let mut nodes: Vec<Node> = vec![Node { config: c0.clone(), parent: None, depth: 0 }];
    let mut index: HashMap<Configuration, usize> = HashMap::from([(c0.clone(), 0)]);
    let mut queue = VecDeque::from([0usize]);
    let mut out = Exploration::default();
    while let Some(i) = queue.pop_front() {
        let config = nodes[i].config.clone();
        let depth = nodes[i].depth;
        let succs = step_composite(&config, ctx);
        if succs.is_empty() {
            let (kind, class) = classify(&config, &parts(&config, ctx));
            out.reports.push(StuckReport { config, kind, class, trace: trace_to(&nodes, i) });
            continue;
        }
        if depth >= max_depth {
            out.budget_exceeded = true;
            continue;
        }
        for t in succs {
            if index.contains_key(&t.target) {
                continue;
            }
            if nodes.len() >= MAX_STATES {
                out.budget_exceeded = true;
                break;
            }
            index.insert(t.target.clone(), nodes.len());
            queue.push_back(nodes.len());
            nodes.push(Node { config: t.target, parent: Some((i, t.rule, t.action)), depth: depth + 1 });
        }
    }
    out.states = nodes.len();
    out
}

fn trace_to(nodes: &[Node], mut i: usize) -> Vec<(CompositeRule, Action)> {
    let mut out = Vec::new();
    while let Some((parent, rule, action)) = &nodes[i].parent {
        out.push((*rule, action.clone()));
        i = *parent;
    }
    out.reverse();
    out
}
