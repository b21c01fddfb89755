use std::fmt;

use super::monitor::{step_monitor, MonitorBlock, MonitorStep};
use super::process::{step_process, ProcessBlock, ProcessStep};
use super::ExecContext;
use crate::model::{Action, Env, Monitor, Process, VerdictKind};

/// A monitored system `<P ; M>` with the monitor's payload map.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Configuration {
    pub process: Process,
    pub monitor: Monitor,
    pub payloads: Env,
}

impl Configuration {
    pub fn new(process: Process, monitor: Monitor) -> Self {
        Self { process, monitor, payloads: Env::new() }
    }

    fn with(process: Process, monitor: Monitor, mut payloads: Env) -> Self {
        // Bindings the monitor can no longer read are dropped, so configurations
        // that differ only in dead payloads coincide.
        let live = monitor.fv();
        payloads.retain(|k, _| live.contains(k));
        Self { process, monitor, payloads }
    }

    pub fn verdict(&self) -> Option<VerdictKind> {
        match self.monitor {
            Monitor::Verdict(k) => Some(k),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum CompositeRule {
    /// Process send received by the monitor.
    ISnd,
    /// Monitor forward received by the process.
    IRcv,
    /// Monitor output to the environment.
    IOut,
    /// Environment input to the monitor.
    IIn,
    /// Silent process move.
    IProc,
    /// Silent monitor move.
    IMon,
}

impl fmt::Display for CompositeRule {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            CompositeRule::ISnd => "iSnd",
            CompositeRule::IRcv => "iRcv",
            CompositeRule::IOut => "iOut",
            CompositeRule::IIn => "iIn",
            CompositeRule::IProc => "iProc",
            CompositeRule::IMon => "iMon",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Transition {
    pub rule: CompositeRule,
    pub action: Action,
    pub target: Configuration,
}

/// Component steps of a configuration, computed once and shared by the
/// exhaustive and the scripted drivers.
pub(crate) struct Parts {
    pub process: Result<ProcessStep, ProcessBlock>,
    pub monitor: Result<MonitorStep, MonitorBlock>,
}

pub(crate) fn parts(c: &Configuration, ctx: &ExecContext) -> Parts {
    Parts { process: step_process(&c.process, &ctx.predicates), monitor: step_monitor(&c.monitor, &c.payloads, &ctx.predicates) }
}

/// Rule `rule` applied to `c`, for every rule except `IIn`.
pub(crate) fn fire(c: &Configuration, p: &Parts, rule: CompositeRule) -> Option<Transition> {
    let t = |action, target| Some(Transition { rule, action, target });
    match (rule, &p.process, &p.monitor) {
        (CompositeRule::ISnd, Ok(ProcessStep::Send(msg, p2)), Ok(MonitorStep::RecvInternal(offer))) => {
            let (m2, env) = offer.accept(msg);
            t(Action::Tau, Configuration::with(p2.clone(), m2, env))
        }
        (CompositeRule::IRcv, Ok(ProcessStep::Receive(offer)), Ok(MonitorStep::SendInternal(msg, m2, env))) => {
            let p2 = offer.accept(msg)?;
            t(Action::Tau, Configuration::with(p2, m2.clone(), env.clone()))
        }
        (CompositeRule::IOut, _, Ok(MonitorStep::SendExternal(msg, m2, env))) => {
            t(Action::ExtSend(msg.clone()), Configuration::with(c.process.clone(), m2.clone(), env.clone()))
        }
        (CompositeRule::IProc, Ok(ProcessStep::Tau(p2)), _) => {
            t(Action::Tau, Configuration::with(p2.clone(), c.monitor.clone(), c.payloads.clone()))
        }
        (CompositeRule::IMon, _, Ok(MonitorStep::Tau(m2, env))) => {
            t(Action::Tau, Configuration::with(c.process.clone(), m2.clone(), env.clone()))
        }
        _ => None,
    }
}

/// Environment input `msg` at a monitor waiting externally.
pub(crate) fn fire_input(c: &Configuration, p: &Parts, msg: &crate::model::Message) -> Option<Transition> {
    let Ok(MonitorStep::RecvExternal(offer)) = &p.monitor else {
        return None;
    };
    let (m2, env) = offer.accept(msg);
    Some(Transition {
        rule: CompositeRule::IIn,
        action: Action::ExtRecv(msg.clone()),
        target: Configuration::with(c.process.clone(), m2, env),
    })
}

/// All successors of `c`. Environment inputs range over the context's value
/// domains. A configuration whose monitor is a verdict has none.
pub fn step_composite(c: &Configuration, ctx: &ExecContext) -> Vec<Transition> {
    if c.verdict().is_some() {
        return Vec::new();
    }
    let p = parts(c, ctx);
    let mut out: Vec<Transition> = [
        CompositeRule::ISnd,
        CompositeRule::IRcv,
        CompositeRule::IProc,
        CompositeRule::IMon,
        CompositeRule::IOut,
    ]
    .into_iter()
    .filter_map(|r| fire(c, &p, r))
    .collect();
    if let Ok(MonitorStep::RecvExternal(offer)) = &p.monitor {
        for msg in ctx.domains.external_inputs(&offer.branches) {
            out.extend(fire_input(c, &p, &msg));
        }
    }
    out
}
