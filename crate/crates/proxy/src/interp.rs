//! Monitor interpretation for the proxy.
//!
//! The reference stepper rewrites the monitor term (unfolding recursion by
//! substitution). Here a cursor walks the original term instead and
//! recursion variables resolve to the `rec` node that binds them, so a step
//! allocates nothing beyond the payload map. Synthesized monitors are closed,
//! so no binder ever needs renaming and both readings agree.

use std::rc::Rc;

use sessmon_core::model::{Env, Message, Monitor, MonitorBranch, PredicateRegistry, RecVar, Value, VerdictKind};
use sessmon_core::semantics::MonitorBlock;

/// Upper bound on consecutive silent steps, against unguarded monitors.
const MAX_SILENT: usize = 100_000;

struct Frame<'m> {
    var: &'m RecVar,
    rec: &'m Monitor,
    outer: Scope<'m>,
}

type Scope<'m> = Option<Rc<Frame<'m>>>;

/// Where the monitor next interacts.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Next<'m> {
    /// Forward to the process (the untrusted side).
    SendInternal(Message),
    /// Forward to the environment (the trusted side).
    SendExternal(Message),
    RecvInternal(&'m [MonitorBranch]),
    RecvExternal(&'m [MonitorBranch]),
    Blocked(MonitorBlock),
}

pub struct Interpreter<'m> {
    node: &'m Monitor,
    scope: Scope<'m>,
    env: Env,
    halted: Option<VerdictKind>,
}

impl<'m> Interpreter<'m> {
    pub fn new(monitor: &'m Monitor) -> Self {
        Self { node: monitor, scope: None, env: Env::new(), halted: None }
    }

    /// Runs silent steps up to the next interaction. Sends are performed
    /// logically: the cursor is already past them when they are returned.
    pub fn advance(&mut self, preds: &PredicateRegistry) -> Next<'m> {
        if let Some(k) = self.halted {
            return Next::Blocked(MonitorBlock::Verdict(k));
        }
        for _ in 0..MAX_SILENT {
            match self.node {
                Monitor::Nil => return Next::Blocked(MonitorBlock::Nil),
                Monitor::Verdict(k) => return Next::Blocked(MonitorBlock::Verdict(*k)),
                Monitor::Rec(x, body) => {
                    self.scope = Some(Rc::new(Frame { var: x, rec: self.node, outer: self.scope.take() }));
                    self.node = body;
                }
                Monitor::Var(x) => {
                    let mut frame = self.scope.clone();
                    while let Some(f) = frame.as_ref().filter(|f| f.var != x) {
                        frame = f.outer.clone();
                    }
                    let Some(f) = frame else { return Next::Blocked(MonitorBlock::Stuck) };
                    self.node = f.rec;
                    self.scope = f.outer.clone();
                }
                // A condition that fails to evaluate takes the else branch.
                Monitor::If { cond, then, els } => {
                    self.node = if cond.eval_bool(&self.env, preds).unwrap_or(false) { then } else { els };
                }
                Monitor::SendInternal { label, args, cont } | Monitor::SendExternal { label, args, cont } => {
                    let payload: Result<Vec<Value>, _> = args.iter().map(|a| a.eval(&self.env, preds)).collect();
                    let Ok(payload) = payload else { return Next::Blocked(MonitorBlock::Stuck) };
                    let msg = Message::new(label.clone(), payload);
                    let internal = matches!(self.node, Monitor::SendInternal { .. });
                    self.node = cont;
                    return if internal { Next::SendInternal(msg) } else { Next::SendExternal(msg) };
                }
                Monitor::RecvInternal(bs) => return Next::RecvInternal(bs),
                Monitor::RecvExternal(bs) => return Next::RecvExternal(bs),
            }
        }
        Next::Blocked(MonitorBlock::Stuck)
    }

    /// Delivers `msg` to the pending receive `branches`. A label outside the
    /// set, or the wrong number of values, yields `violation`.
    pub fn deliver(&mut self, branches: &'m [MonitorBranch], msg: Message, violation: VerdictKind) {
        let hit = branches.iter().find(|b| b.label == msg.label && b.params.len() == msg.payload.len());
        match hit {
            Some(b) => {
                for (p, v) in b.params.iter().zip(msg.payload) {
                    self.env.insert(p.name.clone(), v);
                }
                self.node = &b.cont;
            }
            None => self.halted = Some(violation),
        }
    }

    /// Halts with `k`, as for a frame that could not be decoded.
    pub fn reject(&mut self, k: VerdictKind) {
        self.halted = Some(k);
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use sessmon_core::parser::{parse_monitor, parse_type};
    use sessmon_core::semantics::{step_monitor, MonitorStep};
    use sessmon_core::synthesis::synthesize;

    #[test]
    fn agrees_with_the_reference_stepper_on_a_loop() {
        let m0 = synthesize(&parse_type("rec X. +{!Ping().?Pong().X, !Quit()}").unwrap()).unwrap();
        let preds = PredicateRegistry::new();
        let mut it = Interpreter::new(&m0);
        let (mut m, mut env) = (m0.clone(), Env::new());
        let inputs = ["Ping", "Pong", "Ping", "Pong", "Quit"];
        let mut fed = 0;
        let mut sent = Vec::new();
        loop {
            match step_monitor(&m, &env, &preds) {
                Ok(MonitorStep::Tau(a, b)) => (m, env) = (a, b),
                Ok(MonitorStep::SendExternal(msg, a, b)) | Ok(MonitorStep::SendInternal(msg, a, b)) => {
                    sent.push(msg);
                    (m, env) = (a, b);
                }
                Ok(MonitorStep::RecvInternal(o) | MonitorStep::RecvExternal(o)) => {
                    (m, env) = o.accept(&Message::new(inputs[fed], vec![]));
                    fed += 1;
                }
                Err(block) => {
                    assert_eq!(block, MonitorBlock::Nil);
                    break;
                }
            }
        }
        let mut fed = 0;
        let mut got = Vec::new();
        loop {
            match it.advance(&preds) {
                Next::SendExternal(msg) | Next::SendInternal(msg) => got.push(msg),
                Next::RecvInternal(bs) => {
                    it.deliver(bs, Message::new(inputs[fed], vec![]), VerdictKind::NoPLabel);
                    fed += 1;
                }
                Next::RecvExternal(bs) => {
                    it.deliver(bs, Message::new(inputs[fed], vec![]), VerdictKind::NoELabel);
                    fed += 1;
                }
                Next::Blocked(b) => {
                    assert_eq!(b, MonitorBlock::Nil);
                    break;
                }
            }
        }
        assert_eq!(got, sent);
        assert_eq!(got.len(), 5);
    }

    #[test]
    fn shadowed_recursion_variables_resolve_lexically() {
        // Leaving the inner X through Y must bring the outer X back in scope.
        let m = parse_monitor(
            "rec X. recv_int {A(). send_ext A(). rec Y. recv_int {\
               B(). send_ext B(). rec X. recv_int {C(). send_ext C(). Y},\
               E(). send_ext E(). X}, D(). 0}",
        )
        .unwrap();
        let preds = PredicateRegistry::new();
        let mut it = Interpreter::new(&m);
        for l in ["A", "B", "C", "E"] {
            let Next::RecvInternal(bs) = it.advance(&preds) else { panic!("no receive before {l}") };
            it.deliver(bs, Message::new(l, vec![]), VerdictKind::NoPLabel);
            assert_eq!(it.advance(&preds), Next::SendExternal(Message::new(l, vec![])));
        }
        let Next::RecvInternal(bs) = it.advance(&preds) else { panic!() };
        it.deliver(bs, Message::new("D", vec![]), VerdictKind::NoPLabel);
        assert_eq!(it.advance(&preds), Next::Blocked(MonitorBlock::Nil));
    }

    #[test]
    fn free_variables_and_unguarded_loops_block() {
        let preds = PredicateRegistry::new();
        let m = Monitor::Var("X".into());
        assert_eq!(Interpreter::new(&m).advance(&preds), Next::Blocked(MonitorBlock::Stuck));
        let m = Monitor::rec("X", Monitor::Var("X".into()));
        assert_eq!(Interpreter::new(&m).advance(&preds), Next::Blocked(MonitorBlock::Stuck));
    }
}
