use super::*;
use crate::model::{Action, Message, Monitor, Process, Value, VerdictKind};
use crate::parser::{parse_monitor, parse_process, parse_type};
use crate::synthesis::synthesize;

const S_AUTH: &str = "rec Y. !Auth(uname:Str, pwd:Str). &{?Succ(tok:Str).end, ?Fail(code:Int).Y}";
const P_AUTH: &str = r#"rec X. send Auth("Bob","pwd"). recv { Succ(tok). 0, Fail(code). X }"#;
const P_BAD: &str = r#"send Login("Bob"). recv { Res(tok). 0 }"#;

fn system(p: &str, s: &str) -> Configuration {
    Configuration::new(parse_process(p).unwrap(), synthesize(&parse_type(s).unwrap()).unwrap())
}

fn ctx() -> ExecContext {
    ExecContext::default()
}

#[test]
fn process_steps() {
    let p = parse_process(P_AUTH).unwrap();
    assert!(matches!(step_process(&p, &Default::default()), Ok(ProcessStep::Tau(_))));
    assert_eq!(step_process(&Process::Nil, &Default::default()), Err(ProcessBlock::Nil));
    let recv = parse_process("recv{Succ(tok).0, Fail(code).0}").unwrap();
    let Ok(ProcessStep::Receive(offer)) = step_process(&recv, &Default::default()) else { panic!() };
    for v in ValueDomain::default().values_of(&crate::model::BaseType::Str) {
        assert_eq!(offer.accept(&Message::new("Succ", vec![v])), Some(Process::Nil));
    }
    assert_eq!(offer.accept(&Message::new("Other", vec![])), None);
}

#[test]
fn monitor_rejects_unknown_label() {
    let m = parse_monitor("recv_int {Login(u). send_ext Login(u). 0}").unwrap();
    let Ok(MonitorStep::RecvInternal(offer)) = step_monitor(&m, &Default::default(), &Default::default()) else { panic!() };
    let (next, _) = offer.accept(&Message::new("Auth", vec![Value::str("Bob"), Value::str("pwd")]));
    assert_eq!(next, Monitor::Verdict(VerdictKind::NoPLabel));
    assert_eq!(
        step_monitor(&Monitor::Verdict(VerdictKind::NoELabel), &Default::default(), &Default::default()),
        Err(MonitorBlock::Verdict(VerdictKind::NoELabel))
    );
    let m = parse_monitor("if tt then 0 else no_P").unwrap();
    assert!(matches!(step_monitor(&m, &Default::default(), &Default::default()), Ok(MonitorStep::Tau(Monitor::Nil, _))));
}

#[test]
fn composite_sync_on_send() {
    let c = system(P_AUTH, S_AUTH);
    // Unfold both sides, then the process send meets the monitor receive.
    let mut cur = c;
    for _ in 0..2 {
        cur = step_composite(&cur, &ctx()).into_iter().next().unwrap().target;
    }
    let ts = step_composite(&cur, &ctx());
    assert_eq!(ts.len(), 1);
    assert_eq!(ts[0].rule, CompositeRule::ISnd);
    assert!(matches!(ts[0].target.monitor, Monitor::If { .. }));
}

#[test]
fn nil_nil_terminates_cleanly() {
    let c = Configuration::new(Process::Nil, Monitor::Nil);
    for depth in [0, 3] {
        let e = explore(&c, depth, &ctx());
        assert_eq!(e.reports.len(), 1);
        assert_eq!(e.reports[0].kind, StuckKind::CleanTermination);
        assert!(!e.budget_exceeded);
    }
}

#[test]
fn bad_client_is_flagged() {
    let e = explore(&system(P_BAD, S_AUTH), 8, &ctx());
    assert!(e.verdicts().any(|k| k == VerdictKind::NoPLabel));
    let out = run_trace(&system(P_BAD, S_AUTH), &[], &ctx(), 100);
    let r = out.stuck().unwrap();
    assert_eq!(r.kind, StuckKind::VerdictReached(VerdictKind::NoPLabel));
    assert_eq!(r.class, StuckClass::C1);
    assert!(out.steps.len() <= 2, "{:?}", out.steps);
}

#[test]
fn auth_trace_with_failure_reply() {
    let out = run_trace(&system(P_AUTH, S_AUTH), &[Message::new("Fail", vec![Value::Int(1)])], &ctx(), 1000);
    let ext = out.external_actions();
    let auth = Message::new("Auth", vec![Value::str("Bob"), Value::str("pwd")]);
    assert_eq!(ext[0], &Action::ExtSend(auth.clone()));
    assert_eq!(ext[1], &Action::ExtRecv(Message::new("Fail", vec![Value::Int(1)])));
    assert_eq!(ext[2], &Action::ExtSend(auth));
    assert!(matches!(out.end, TraceEnd::Running(_)));
}

#[test]
fn environment_violation() {
    let out = run_trace(&system(P_AUTH, S_AUTH), &[Message::new("Res", vec![Value::Int(227)])], &ctx(), 1000);
    assert_eq!(out.stuck().unwrap().kind, StuckKind::VerdictReached(VerdictKind::NoELabel));
}

#[test]
fn pruned_choice_deadlocks_without_blame() {
    let e = explore(&system("recv{A(x).0}", "&{?A(x:Int).end, ?B(y:Int).end}"), 8, &ctx());
    assert!(!e.has_process_blame());
    assert!(e.reports.iter().any(|r| r.kind == StuckKind::Deadlock && r.class == StuckClass::C3a));
}
