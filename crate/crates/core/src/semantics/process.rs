use crate::model::{Env, EvalError, Message, PredicateRegistry, Process, RecvBranch, Value};

/// One-step behaviour of a closed process.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum ProcessStep {
    /// Unfolding or a resolved conditional.
    Tau(Process),
    Send(Message, Process),
    /// Waiting for one of the offered labels; instantiated by [`ReceiveOffer::accept`].
    Receive(ReceiveOffer),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ReceiveOffer {
    pub branches: Vec<RecvBranch>,
}

impl ReceiveOffer {
    /// Continuation after receiving `msg`, if some branch has its label and arity.
    pub fn accept(&self, msg: &Message) -> Option<Process> {
        let b = self.branches.iter().find(|b| b.label == msg.label && b.params.len() == msg.payload.len())?;
        Some(b.cont.substitute_values(b.params.iter().zip(&msg.payload)))
    }

    pub fn offers(&self, label: &crate::model::Label, arity: usize) -> bool {
        self.branches.iter().any(|b| &b.label == label && b.params.len() == arity)
    }
}

/// Why a process has no transition.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum ProcessBlock {
    Nil,
    /// A condition or argument failed to evaluate.
    IllTyped(EvalError),
    /// A free process variable (only in open terms).
    FreeVar,
}

/// The successors of a process. Processes are deterministic except for the
/// choice of received message, so at most one step exists.
pub fn step_process(p: &Process, preds: &PredicateRegistry) -> Result<ProcessStep, ProcessBlock> {
    let env = Env::new();
    match p {
        Process::Nil => Err(ProcessBlock::Nil),
        Process::Var(_) => Err(ProcessBlock::FreeVar),
        Process::Rec(x, body) => Ok(ProcessStep::Tau(body.substitute_pvar(x, p))),
        Process::If { cond, then, els } => match cond.eval_bool(&env, preds) {
            Ok(true) => Ok(ProcessStep::Tau((**then).clone())),
            Ok(false) => Ok(ProcessStep::Tau((**els).clone())),
            Err(e) => Err(ProcessBlock::IllTyped(e)),
        },
        Process::Send { label, args, cont } => {
            let payload = args.iter().map(|a| a.eval(&env, preds)).collect::<Result<Vec<Value>, _>>();
            match payload {
                Ok(payload) => Ok(ProcessStep::Send(Message::new(label.clone(), payload), (**cont).clone())),
                Err(e) => Err(ProcessBlock::IllTyped(e)),
            }
        }
        Process::Recv(bs) => Ok(ProcessStep::Receive(ReceiveOffer { branches: bs.clone() })),
    }
}
