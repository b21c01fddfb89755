//! Algebraic laws of duality and synthesis, checked on generated types.

use crate::model::{Expr, RecVar, SessionType, TypeBranch, VerdictKind};
use crate::parser::render_type;
use crate::synthesis::{synthesize, synthesize_unchecked};
use crate::typecheck::dual;

use super::{Generator, SectionReport};

/// `dual(dual(S)) = S`.
pub fn dual_involution(samples: usize, seed: u64) -> SectionReport {
    let mut r = SectionReport::new("dual involution");
    let mut g = Generator::new(seed);
    for _ in 0..samples {
        let s = g.session_type();
        r.checked += 1;
        if dual(&dual(&s)) != s {
            r.failures.push(render_type(&s));
        }
    }
    r
}

/// Synthesis commutes with substitution of a closed type for a free
/// recursion variable: `synth(S{S'/X}) = synth(S){synth(S')/X}`.
pub fn synthesis_commutes_with_substitution(samples: usize, seed: u64) -> SectionReport {
    let mut r = SectionReport::new("synthesis/substitution");
    let mut g = Generator::new(seed);
    let x = RecVar::new("Z");
    for _ in 0..samples {
        let s = g.open_session_type(std::slice::from_ref(&x));
        let s2 = g.session_type();
        r.checked += 1;
        let lhs = synthesize_unchecked(&s.substitute(&x, &s2));
        let rhs = synthesize_unchecked(&s).substitute_pvar(&x, &synthesize_unchecked(&s2));
        if lhs != rhs {
            r.failures.push(format!("S = {}, S' = {}", render_type(&s), render_type(&s2)));
        }
    }
    r
}

/// Sets every assertion in `s` to `a`.
pub fn with_assertions(s: &SessionType, a: &Expr) -> SessionType {
    let branches = |bs: &[TypeBranch]| -> Vec<TypeBranch> {
        bs.iter()
            .map(|b| TypeBranch { assertion: a.clone(), cont: with_assertions(&b.cont, a), ..b.clone() })
            .collect()
    };
    match s {
        SessionType::Select(bs) => SessionType::Select(branches(bs)),
        SessionType::Branch(bs) => SessionType::Branch(branches(bs)),
        SessionType::Rec(x, body) => SessionType::rec(x.clone(), with_assertions(body, a)),
        other => other.clone(),
    }
}

/// Monitors for types whose assertions are all `tt` never reach an assertion
/// verdict; with a non-trivial assertion on every branch they can.
pub fn trivial_assertions_never_blame(samples: usize, seed: u64) -> SectionReport {
    let mut r = SectionReport::new("trivial assertions");
    let mut g = Generator::new(seed);
    let asserted = Expr::Call("check".into(), vec![]);
    for _ in 0..samples {
        let s = with_assertions(&g.session_type(), &Expr::tt());
        r.checked += 1;
        let m = synthesize(&s).expect("generated types are well-formed");
        let verdicts = m.verdicts();
        if verdicts.contains(&VerdictKind::NoPAssert) || verdicts.contains(&VerdictKind::NoEAssert) {
            r.failures.push(format!("assertion verdict in the monitor for {}", render_type(&s)));
        }
        let m = synthesize(&with_assertions(&s, &asserted)).expect("well-formed");
        if s != SessionType::End && !m.verdicts().iter().any(|k| matches!(k, VerdictKind::NoPAssert | VerdictKind::NoEAssert)) {
            r.failures.push(format!("no assertion verdict with asserted branches in {}", render_type(&s)));
        }
    }
    r
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::parser::parse_type;

    #[test]
    fn laws_hold_on_small_samples() {
        assert!(dual_involution(50, 1).passed());
        assert!(synthesis_commutes_with_substitution(50, 2).passed());
        assert!(trivial_assertions_never_blame(50, 3).passed());
    }

    #[test]
    fn assertions_are_replaced_everywhere() {
        let s = parse_type("rec X. !A(x:Int)[x > 0]. &{?B().X, ?C().end}").unwrap();
        assert!(with_assertions(&s, &Expr::tt()).has_trivial_assertions());
        assert!(!s.has_trivial_assertions());
    }
}
