use std::collections::HashSet;

use crate::model::{SessionType, TypeBranch};

/// Upper bound on assumed pairs; only reachable when repeated unfolding keeps
/// renaming payload binders.
const MAX_ASSUMPTIONS: usize = 100_000;

/// Equality up to unfolding of `rec`, decided coinductively: a pair already
/// under comparison is assumed equal. Branch order is irrelevant.
pub fn type_equal(a: &SessionType, b: &SessionType) -> bool {
    let mut assumed = HashSet::new();
    eq(a, b, &mut assumed).unwrap_or(false)
}

fn eq(a: &SessionType, b: &SessionType, assumed: &mut HashSet<(SessionType, SessionType)>) -> Option<bool> {
    if a == b {
        return Some(true);
    }
    if !assumed.insert((a.clone(), b.clone())) {
        return Some(true);
    }
    if assumed.len() > MAX_ASSUMPTIONS {
        return None;
    }
    let (ua, ub) = (a.unfold()?, b.unfold()?);
    match (&ua, &ub) {
        (SessionType::End, SessionType::End) => Some(true),
        (SessionType::Var(x), SessionType::Var(y)) => Some(x == y),
        (SessionType::Select(xs), SessionType::Select(ys)) | (SessionType::Branch(xs), SessionType::Branch(ys)) => {
            branches_eq(xs, ys, assumed)
        }
        _ => Some(false),
    }
}

fn branches_eq(xs: &[TypeBranch], ys: &[TypeBranch], assumed: &mut HashSet<(SessionType, SessionType)>) -> Option<bool> {
    if xs.len() != ys.len() {
        return Some(false);
    }
    for x in xs {
        let Some(y) = ys.iter().find(|y| y.label == x.label) else {
            return Some(false);
        };
        if x.params != y.params || x.assertion != y.assertion {
            return Some(false);
        }
        if !eq(&x.cont, &y.cont, assumed)? {
            return Some(false);
        }
    }
    Some(true)
}
