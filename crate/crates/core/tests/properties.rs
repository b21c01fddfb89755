use std::collections::BTreeSet;

use proptest::prelude::*;
use sessmon_core::harness::{mutants, with_assertions, Generator};
use sessmon_core::model::{Expr, RecVar, SessionType, VerdictKind};
use sessmon_core::parser::{parse_monitor, parse_open_type, parse_process, parse_type, render_monitor, render_process, render_type};
use sessmon_core::synthesis::{synthesize, synthesize_unchecked};
use sessmon_core::typecheck::{dual, explain_failure, type_equal, typecheck, TypingEnvs};

fn seeds() -> impl Strategy<Value = u64> {
    any::<u64>()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(300))]

    #[test]
    fn rendering_parses_back(seed in seeds()) {
        let mut g = Generator::new(seed);
        let (p, s) = g.well_typed_pair();
        prop_assert_eq!(parse_type(&render_type(&s)).unwrap(), s.clone());
        prop_assert_eq!(parse_process(&render_process(&p)).unwrap(), p);
        let m = synthesize(&s).unwrap();
        prop_assert_eq!(parse_monitor(&render_monitor(&m)).unwrap(), m);
    }

    #[test]
    fn open_types_render_and_parse_back(seed in seeds()) {
        let s = Generator::new(seed).open_session_type(&[RecVar::new("Z")]);
        prop_assert_eq!(parse_open_type(&render_type(&s)).unwrap(), s);
    }

    #[test]
    fn duality_is_an_involution(seed in seeds()) {
        let s = Generator::new(seed).session_type();
        prop_assert_eq!(dual(&dual(&s)), s.clone());
        prop_assert!(type_equal(&dual(&dual(&s)), &s));
    }

    #[test]
    fn synthesis_commutes_with_substitution(seed in seeds()) {
        let mut g = Generator::new(seed);
        let x = RecVar::new("Z");
        let s = g.open_session_type(std::slice::from_ref(&x));
        let s2 = g.session_type();
        prop_assert_eq!(
            synthesize_unchecked(&s.substitute(&x, &s2)),
            synthesize_unchecked(&s).substitute_pvar(&x, &synthesize_unchecked(&s2))
        );
    }

    #[test]
    fn synthesized_monitors_are_closed_and_guarded(seed in seeds()) {
        let m = synthesize(&Generator::new(seed).session_type()).unwrap();
        prop_assert!(m.fv().is_empty());
        prop_assert!(m.fpv().is_empty());
        prop_assert!(m.unguarded_vars().is_empty());
    }

    #[test]
    fn trivial_assertions_give_no_assertion_verdicts(seed in seeds()) {
        let s = with_assertions(&Generator::new(seed).session_type(), &Expr::tt());
        let verdicts = synthesize(&s).unwrap().verdicts();
        prop_assert!(!verdicts.contains(&VerdictKind::NoPAssert));
        prop_assert!(!verdicts.contains(&VerdictKind::NoEAssert));
    }

    #[test]
    fn typecheck_agrees_with_failure_explanation(seed in seeds()) {
        let mut g = Generator::new(seed);
        let (p, s) = g.well_typed_pair();
        let env = TypingEnvs::empty();
        prop_assert!(typecheck(&env, &p, &s));
        prop_assert!(explain_failure(&env, &p, &s).is_none());
        for m in mutants(&p, &s) {
            let report = explain_failure(&env, &m.process, &s);
            prop_assert_eq!(typecheck(&env, &m.process, &s), report.is_none());
            let report = report.expect("mutants are ill-typed");
            prop_assert_eq!(report.chain.first(), Some(&report.rule));
        }
    }

    #[test]
    fn type_equality_is_an_equivalence_up_to_unfolding(a in seeds(), b in seeds()) {
        let s = Generator::new(a).session_type();
        let t = Generator::new(b).session_type();
        prop_assert!(type_equal(&s, &s));
        if let Some(u) = s.unfold() {
            prop_assert!(type_equal(&s, &u) && type_equal(&u, &s));
        }
        prop_assert_eq!(type_equal(&s, &t), type_equal(&t, &s));
        prop_assert_eq!(type_equal(&s, &t), type_equal(&dual(&s), &dual(&t)));
        if s == t {
            prop_assert!(type_equal(&s, &t));
        }
    }

    /// fv(S{S'/X}) = fv(S) - {X}, plus fv(S') when X occurs free in S.
    #[test]
    fn substitution_free_variables(seed in seeds()) {
        let mut g = Generator::new(seed);
        let (x, y) = (RecVar::new("Z"), RecVar::new("W"));
        let s = g.open_session_type(&[x.clone(), y.clone()]);
        let s2 = g.open_session_type(std::slice::from_ref(&y));
        let mut expected: BTreeSet<RecVar> = s.free_vars();
        let had_x = expected.remove(&x);
        if had_x {
            expected.extend(s2.free_vars());
        }
        prop_assert_eq!(s.substitute(&x, &s2).free_vars(), expected);
        let m = synthesize_unchecked(&s).substitute_pvar(&x, &synthesize_unchecked(&s2));
        prop_assert_eq!(m.fpv(), s.substitute(&x, &s2).free_vars());
    }
}

#[test]
fn a_type_differs_from_its_dual_unless_it_is_end() {
    let s = parse_type("rec X. +{!Ping().?Pong().X, !Quit()}").unwrap();
    assert!(!type_equal(&s, &dual(&s)));
    assert!(type_equal(&SessionType::End, &dual(&SessionType::End)));
}
