use crate::model::{Env, Message, Monitor, MonitorBranch, PredicateRegistry, Value, VerdictKind};

/// One-step behaviour of a monitor under its payload map.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum MonitorStep {
    Tau(Monitor, Env),
    /// Forward to the process.
    SendInternal(Message, Monitor, Env),
    /// Forward to the environment.
    SendExternal(Message, Monitor, Env),
    /// Waiting for the process.
    RecvInternal(MonitorOffer),
    /// Waiting for the environment.
    RecvExternal(MonitorOffer),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MonitorOffer {
    pub branches: Vec<MonitorBranch>,
    pub env: Env,
    /// Verdict reached on a message outside the branch set.
    pub violation: VerdictKind,
}

impl MonitorOffer {
    /// Receiving is total: an unknown label, or a known label with the wrong
    /// number of values, yields the violation verdict.
    pub fn accept(&self, msg: &Message) -> (Monitor, Env) {
        let hit = self.branches.iter().find(|b| b.label == msg.label && b.params.len() == msg.payload.len());
        match hit {
            Some(b) => {
                let mut env = self.env.clone();
                for (p, v) in b.params.iter().zip(&msg.payload) {
                    env.insert(p.name.clone(), v.clone());
                }
                (b.cont.clone(), env)
            }
            None => (Monitor::Verdict(self.violation), self.env.clone()),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum MonitorBlock {
    Nil,
    Verdict(VerdictKind),
    /// Arguments of a forward did not evaluate, or a free recursion variable.
    Stuck,
}

/// Conditions that fail to evaluate take the else branch, so an assertion
/// that cannot be evaluated never passes.
pub fn step_monitor(m: &Monitor, env: &Env, preds: &PredicateRegistry) -> Result<MonitorStep, MonitorBlock> {
    let eval_args = |args: &[crate::model::Expr]| args.iter().map(|a| a.eval(env, preds)).collect::<Result<Vec<Value>, _>>();
    match m {
        Monitor::Nil => Err(MonitorBlock::Nil),
        Monitor::Verdict(k) => Err(MonitorBlock::Verdict(*k)),
        Monitor::Var(_) => Err(MonitorBlock::Stuck),
        Monitor::Rec(x, body) => Ok(MonitorStep::Tau(body.substitute_pvar(x, m), env.clone())),
        Monitor::If { cond, then, els } => {
            let next = if cond.eval_bool(env, preds).unwrap_or(false) { then } else { els };
            Ok(MonitorStep::Tau((**next).clone(), env.clone()))
        }
        Monitor::SendInternal { label, args, cont } => match eval_args(args) {
            Ok(payload) => Ok(MonitorStep::SendInternal(Message::new(label.clone(), payload), (**cont).clone(), env.clone())),
            Err(_) => Err(MonitorBlock::Stuck),
        },
        Monitor::SendExternal { label, args, cont } => match eval_args(args) {
            Ok(payload) => Ok(MonitorStep::SendExternal(Message::new(label.clone(), payload), (**cont).clone(), env.clone())),
            Err(_) => Err(MonitorBlock::Stuck),
        },
        Monitor::RecvInternal(bs) => Ok(MonitorStep::RecvInternal(MonitorOffer {
            branches: bs.clone(),
            env: env.clone(),
            violation: VerdictKind::NoPLabel,
        })),
        Monitor::RecvExternal(bs) => Ok(MonitorStep::RecvExternal(MonitorOffer {
            branches: bs.clone(),
            env: env.clone(),
            violation: VerdictKind::NoELabel,
        })),
    }
}
