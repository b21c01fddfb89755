//! Executable transition systems for processes, monitors and monitored
//! systems, with bounded exhaustive exploration and scripted replay.
//!
//! Receive binders in processes are instantiated by substitution. Monitors
//! instead keep received payloads in a map, which later assertions read.

mod composite;
mod domain;
mod explore;
mod monitor;
mod process;
mod trace;

#[cfg(test)]
mod tests;

pub use composite::{step_composite, CompositeRule, Configuration, Transition};
pub use domain::{alien_label, ExecContext, ValueDomain};
pub(crate) use domain::product;
pub use explore::{explore, Exploration, StuckClass, StuckKind, StuckReport, MAX_STATES};
pub use monitor::{step_monitor, MonitorBlock, MonitorOffer, MonitorStep};
pub use process::{step_process, ProcessBlock, ProcessStep, ReceiveOffer};
pub use trace::{run_trace, TraceEnd, TraceOutcome};
