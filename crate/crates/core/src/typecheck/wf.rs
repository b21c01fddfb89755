use std::collections::BTreeSet;
use std::fmt;

use crate::model::{ExprTypeError, Label, Name, RecVar, SessionType, TypeEnv};

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Violation {
    EmptyChoice,
    DuplicateLabel(Label),
    DuplicateParam { label: Label, name: Name },
    Unguarded(RecVar),
    FreeVariable(RecVar),
    EmptyTuple { label: Label },
    IllTypedAssertion { label: Label, error: ExprTypeError },
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Violation::EmptyChoice => f.write_str("choice with no branches"),
            Violation::DuplicateLabel(l) => write!(f, "label `{l}` occurs twice in one choice"),
            Violation::DuplicateParam { label, name } => write!(f, "payload name `{name}` repeated in `{label}`"),
            Violation::Unguarded(x) => write!(f, "recursion variable `{x}` is not under a message prefix"),
            Violation::FreeVariable(x) => write!(f, "free recursion variable `{x}`"),
            Violation::EmptyTuple { label } => write!(f, "empty tuple type in `{label}`"),
            Violation::IllTypedAssertion { label, error } => write!(f, "assertion of `{label}` is not Bool: {error}"),
        }
    }
}

/// Lists every violated well-formedness condition; empty iff the type is
/// well-formed and closed. Assertions are typed under the payload names
/// declared by the enclosing prefixes and the message itself.
pub fn check_well_formed(s: &SessionType) -> Vec<Violation> {
    check_well_formed_in(s, &[])
}

/// As [`check_well_formed`], with `bound` treated as recursion variables
/// bound (and guarded) by an enclosing context.
pub fn check_well_formed_in(s: &SessionType, bound: &[RecVar]) -> Vec<Violation> {
    let mut out = Vec::new();
    walk(s, &mut bound.to_vec(), &mut Vec::new(), &mut TypeEnv::new(), &mut out);
    out
}

pub fn is_well_formed(s: &SessionType) -> bool {
    check_well_formed(s).is_empty()
}

fn walk(s: &SessionType, bound: &mut Vec<RecVar>, pending: &mut Vec<RecVar>, gamma: &mut TypeEnv, out: &mut Vec<Violation>) {
    match s {
        SessionType::End => {}
        SessionType::Var(x) => {
            if !bound.contains(x) {
                out.push(Violation::FreeVariable(x.clone()));
            } else if pending.contains(x) {
                out.push(Violation::Unguarded(x.clone()));
            }
        }
        SessionType::Rec(x, body) => {
            bound.push(x.clone());
            pending.push(x.clone());
            walk(body, bound, pending, gamma, out);
            pending.pop();
            bound.pop();
        }
        SessionType::Select(bs) | SessionType::Branch(bs) => {
            if bs.is_empty() {
                out.push(Violation::EmptyChoice);
            }
            let mut labels = BTreeSet::new();
            for b in bs {
                if !labels.insert(&b.label) {
                    out.push(Violation::DuplicateLabel(b.label.clone()));
                }
                let mut names = BTreeSet::new();
                let saved = gamma.clone();
                for p in &b.params {
                    if !names.insert(&p.name) {
                        out.push(Violation::DuplicateParam { label: b.label.clone(), name: p.name.clone() });
                    }
                    if !p.ty.is_well_formed() {
                        out.push(Violation::EmptyTuple { label: b.label.clone() });
                    }
                    gamma.insert(p.name.clone(), p.ty.clone());
                }
                match b.assertion.infer(gamma) {
                    Ok(crate::model::BaseType::Bool) => {}
                    Ok(other) => out.push(Violation::IllTypedAssertion {
                        label: b.label.clone(),
                        error: ExprTypeError::Operand { op: "assertion", expected: "Bool".into(), found: other.to_string() },
                    }),
                    Err(error) => out.push(Violation::IllTypedAssertion { label: b.label.clone(), error }),
                }
                let mut inner_pending = Vec::new();
                walk(&b.cont, bound, &mut inner_pending, gamma, out);
                *gamma = saved;
            }
        }
    }
}
