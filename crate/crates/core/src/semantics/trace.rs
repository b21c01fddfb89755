use super::composite::{fire, fire_input, parts, CompositeRule, Configuration};
use super::explore::{classify, StuckReport};
use super::ExecContext;
use crate::model::{Action, Message};

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum TraceEnd {
    Stuck(StuckReport),
    /// The script ran out, or the step limit was reached, while the system
    /// could still move.
    Running(Configuration),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TraceOutcome {
    pub steps: Vec<(CompositeRule, Action)>,
    pub end: TraceEnd,
    /// Number of script messages consumed.
    pub consumed: usize,
}

impl TraceOutcome {
    pub fn external_actions(&self) -> Vec<&Action> {
        self.steps.iter().map(|(_, a)| a).filter(|a| a.is_external()).collect()
    }

    pub fn stuck(&self) -> Option<&StuckReport> {
        match &self.end {
            TraceEnd::Stuck(r) => Some(r),
            TraceEnd::Running(_) => None,
        }
    }
}

/// Deterministic replay. Silent moves are taken eagerly in the order iSnd,
/// iRcv, iProc, iMon; then outputs; then the next scripted input.
pub fn run_trace(c0: &Configuration, script: &[Message], ctx: &ExecContext, max_steps: usize) -> TraceOutcome {
    const ORDER: [CompositeRule; 5] =
        [CompositeRule::ISnd, CompositeRule::IRcv, CompositeRule::IProc, CompositeRule::IMon, CompositeRule::IOut];
    let mut c = c0.clone();
    let mut steps = Vec::new();
    let mut next_input = 0;
    while steps.len() < max_steps {
        let p = parts(&c, ctx);
        let chosen = if c.verdict().is_some() {
            None
        } else {
            ORDER.iter().find_map(|&r| fire(&c, &p, r)).or_else(|| {
                let msg = script.get(next_input)?;
                let t = fire_input(&c, &p, msg)?;
                next_input += 1;
                Some(t)
            })
        };
        match chosen {
            Some(t) => {
                steps.push((t.rule, t.action));
                c = t.target;
            }
            None => {
                let waiting_for_input = c.verdict().is_none()
                    && matches!(p.monitor, Ok(super::monitor::MonitorStep::RecvExternal(_)));
                if waiting_for_input {
                    return TraceOutcome { steps, end: TraceEnd::Running(c), consumed: next_input };
                }
                let (kind, class) = classify(&c, &p);
                let trace = steps.clone();
                return TraceOutcome {
                    steps,
                    end: TraceEnd::Stuck(StuckReport { config: c, kind, class, trace }),
                    consumed: next_input,
                };
            }
        }
    }
    TraceOutcome { steps, end: TraceEnd::Running(c), consumed: next_input }
}
