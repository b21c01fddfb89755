//! Monitor synthesis from session types.
//!
//! A selection becomes an internal receive that type-tests the payload,
//! evaluates the assertion and forwards to the environment; a branching is
//! the mirror image with blame on the environment.

use thiserror::Error;

use crate::model::{Expr, MonParam, Monitor, MonitorBranch, SessionType, TypeBranch, VerdictKind};
use crate::typecheck::{check_well_formed, Violation};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("cannot synthesize a monitor for an ill-formed type: {}", .0.iter().map(ToString::to_string).collect::<Vec<_>>().join("; "))]
pub struct SynthesisError(pub Vec<Violation>);

pub fn synthesize(s: &SessionType) -> Result<Monitor, SynthesisError> {
    let problems = check_well_formed(s);
    if !problems.is_empty() {
        return Err(SynthesisError(problems));
    }
    Ok(synthesize_unchecked(s))
}

/// Structural synthesis without the well-formedness gate. Also defined on
/// open types, which the substitution property needs.
pub fn synthesize_unchecked(s: &SessionType) -> Monitor {
    match s {
        SessionType::End => Monitor::Nil,
        SessionType::Var(x) => Monitor::Var(x.clone()),
        SessionType::Rec(x, body) => Monitor::Rec(x.clone(), Box::new(synthesize_unchecked(body))),
        SessionType::Select(bs) => Monitor::RecvInternal(bs.iter().map(|b| branch(b, Side::Process)).collect()),
        SessionType::Branch(bs) => Monitor::RecvExternal(bs.iter().map(|b| branch(b, Side::Environment)).collect()),
    }
}

#[derive(Clone, Copy)]
enum Side {
    Process,
    Environment,
}

fn branch(b: &TypeBranch, side: Side) -> MonitorBranch {
    let args: Vec<Expr> = b.params.iter().map(|p| Expr::Var(p.name.clone())).collect();
    let cont = Box::new(synthesize_unchecked(&b.cont));
    let (forward, label_verdict, assert_verdict) = match side {
        Side::Process => (
            Monitor::SendExternal { label: b.label.clone(), args, cont },
            VerdictKind::NoPLabel,
            VerdictKind::NoPAssert,
        ),
        Side::Environment => (
            Monitor::SendInternal { label: b.label.clone(), args, cont },
            VerdictKind::NoELabel,
            VerdictKind::NoEAssert,
        ),
    };
    let checked = if b.assertion.is_trivially_true() {
        forward
    } else {
        Monitor::if_(b.assertion.clone(), forward, Monitor::Verdict(assert_verdict))
    };
    let body = if b.params.is_empty() {
        checked
    } else {
        let tests = b.params.iter().map(|p| Expr::is_type(p.ty.clone(), Expr::Var(p.name.clone())));
        Monitor::if_(Expr::conj(tests), checked, Monitor::Verdict(label_verdict))
    };
    MonitorBranch {
        label: b.label.clone(),
        params: b.params.iter().map(|p| MonParam::new(p.name.clone(), Some(p.ty.clone()))).collect(),
        cont: body,
    }
}
