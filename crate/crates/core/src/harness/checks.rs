use rand::seq::SliceRandom;
use thiserror::Error;

use super::gen::Generator;
use crate::model::{has_type, Message, Monitor, Process, SessionType, TypeBranch, VerdictKind};
use crate::semantics::{explore, step_process, Configuration, ExecContext, ProcessStep, StuckReport, ValueDomain};
use crate::synthesis::{synthesize, SynthesisError};
use crate::typecheck::{explain_failure, typecheck, FailureReport, TypingEnvs};

/// Violated preconditions of a check; distinct from a failed check.
#[derive(Debug, Error)]
pub enum UsageError {
    #[error("the process is not well-typed: {0}")]
    NotWellTyped(FailureReport),
    #[error("the process is well-typed")]
    WellTyped,
    #[error("the type carries non-trivial assertions")]
    Asserted,
    #[error(transparent)]
    Synthesis(#[from] SynthesisError),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum CheckOutcome {
    Pass { states: usize },
    Counterexample(Box<StuckReport>),
}

impl CheckOutcome {
    pub fn passed(&self) -> bool {
        matches!(self, CheckOutcome::Pass { .. })
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum CompletenessOutcome {
    Witness(Box<StuckReport>),
    NotFoundWithinBudget { depth: usize },
}

impl CompletenessOutcome {
    pub fn witness(&self) -> Option<&StuckReport> {
        match self {
            CompletenessOutcome::Witness(r) => Some(r),
            CompletenessOutcome::NotFoundWithinBudget { .. } => None,
        }
    }
}

fn require_well_typed(p: &Process, s: &SessionType) -> Result<Monitor, UsageError> {
    if let Some(r) = explain_failure(&TypingEnvs::empty(), p, s) {
        return Err(UsageError::NotWellTyped(r));
    }
    if !s.has_trivial_assertions() {
        return Err(UsageError::Asserted);
    }
    Ok(synthesize(s)?)
}

/// Searches the monitored system for a verdict blaming the process.
pub fn check_soundness(p: &Process, s: &SessionType, depth: usize, domains: &ValueDomain) -> Result<CheckOutcome, UsageError> {
    let m = require_well_typed(p, s)?;
    Ok(soundness_with_monitor(p, &m, depth, domains))
}

/// Soundness search against an arbitrary monitor, e.g. a hand-written one.
pub fn soundness_with_monitor(p: &Process, m: &Monitor, depth: usize, domains: &ValueDomain) -> CheckOutcome {
    let ctx = ExecContext::with_domains(domains.clone());
    let e = explore(&Configuration::new(p.clone(), m.clone()), depth, &ctx);
    match e.reports.into_iter().find(StuckReport::blames_process) {
        Some(r) => CheckOutcome::Counterexample(Box::new(r)),
        None => CheckOutcome::Pass { states: e.states },
    }
}

/// Every stuck configuration with a live process must be an environment
/// label violation. `domains` should be adversarial.
pub fn check_blame(p: &Process, s: &SessionType, depth: usize, domains: &ValueDomain) -> Result<CheckOutcome, UsageError> {
    let m = require_well_typed(p, s)?;
    let ctx = ExecContext::with_domains(domains.clone());
    let e = explore(&Configuration::new(p.clone(), m), depth, &ctx);
    let bad = e
        .reports
        .into_iter()
        .find(|r| r.config.process != Process::Nil && r.verdict() != Some(VerdictKind::NoELabel));
    Ok(match bad {
        Some(r) => CheckOutcome::Counterexample(Box::new(r)),
        None => CheckOutcome::Pass { states: e.states },
    })
}

/// Stuck configurations that witness ill-typedness: not a clean
/// termination and not caused by the environment.
pub fn completeness_witnesses(p: &Process, s: &SessionType, depth: usize, domains: &ValueDomain) -> Vec<StuckReport> {
    let ctx = ExecContext::with_domains(domains.clone());
    let m = crate::synthesis::synthesize_unchecked(s);
    explore(&Configuration::new(p.clone(), m), depth, &ctx)
        .reports
        .into_iter()
        .filter(|r| !(r.config.process == Process::Nil && r.config.monitor == Monitor::Nil) && !r.blames_environment())
        .collect()
}

/// The shortest witness within `depth`. The caller vouches that `p` has no
/// dead code.
pub fn check_weak_completeness(
    p: &Process,
    s: &SessionType,
    depth: usize,
    domains: &ValueDomain,
) -> Result<CompletenessOutcome, UsageError> {
    if typecheck(&TypingEnvs::empty(), p, s) {
        return Err(UsageError::WellTyped);
    }
    Ok(match completeness_witnesses(p, s, depth, domains).into_iter().next() {
        Some(r) => CompletenessOutcome::Witness(Box::new(r)),
        None => CompletenessOutcome::NotFoundWithinBudget { depth },
    })
}

/// Doubles the depth from `start` up to `max` until a witness appears.
pub fn escalate_weak_completeness(
    p: &Process,
    s: &SessionType,
    start: usize,
    max: usize,
    domains: &ValueDomain,
) -> Result<CompletenessOutcome, UsageError> {
    let mut depth = start.max(1);
    loop {
        let out = check_weak_completeness(p, s, depth.min(max), domains)?;
        if out.witness().is_some() || depth >= max {
            return Ok(out);
        }
        depth *= 2;
    }
}

/// A process action, seen from the process.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum ProcessAction {
    Tau,
    Send(Message),
    Receive(Message),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SubjectReductionFailure {
    pub process: Process,
    pub session_type: SessionType,
    pub action: ProcessAction,
    pub target: Process,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum SubjectReductionOutcome {
    Pass { pairs: usize, transitions: usize },
    Counterexample(Box<SubjectReductionFailure>),
}

/// Accepted transitions of `p`, each with the types that may retype the target.
fn accepted_steps(p: &Process, s: &SessionType, domains: &ValueDomain) -> Vec<(ProcessAction, Process, Vec<Typing>)> {
    let unfolded = s.unfold();
    let select = |l: &crate::model::Label, v: &[crate::model::Value]| -> Option<TypeBranch> {
        match unfolded.as_ref()? {
            SessionType::Select(bs) => accepting(bs, l, v),
            _ => None,
        }
    };
    let mut out = Vec::new();
    match step_process(p, &Default::default()) {
        Ok(ProcessStep::Tau(p2)) => {
            // Either the type stays put, or it unfolds silently.
            let mut candidates = vec![Typing::closed(s.clone())];
            if matches!(s, SessionType::Rec(..)) {
                candidates.extend(unfolded.clone().map(Typing::closed));
            }
            out.push((ProcessAction::Tau, p2, candidates));
        }
        Ok(ProcessStep::Send(msg, p2)) => {
            if let Some(b) = select(&msg.label, &msg.payload) {
                out.push((ProcessAction::Send(msg), p2, vec![Typing::after(&b)]));
            }
        }
        Ok(ProcessStep::Receive(offer)) => {
            if let Some(SessionType::Branch(bs)) = unfolded.as_ref() {
                for b in bs {
                    let columns: Vec<_> = b.params.iter().map(|p| domains.values_of(&p.ty)).collect();
                    for payload in crate::semantics::product(&columns) {
                        let msg = Message::new(b.label.clone(), payload);
                        if let Some(p2) = offer.accept(&msg) {
                            out.push((ProcessAction::Receive(msg), p2, vec![Typing::after(b)]));
                        }
                    }
                }
            }
        }
        Err(_) => {}
    }
    out
}

fn accepting(bs: &[TypeBranch], l: &crate::model::Label, v: &[crate::model::Value]) -> Option<TypeBranch> {
    bs.iter()
        .find(|b| &b.label == l && b.params.len() == v.len() && b.params.iter().zip(v).all(|(p, v)| has_type(v, &p.ty)))
        .cloned()
}

/// A type with the payload names in scope at that point.
#[derive(Debug, Clone)]
struct Typing {
    envs: TypingEnvs,
    ty: SessionType,
}

impl Typing {
    fn closed(ty: SessionType) -> Self {
        Self { envs: TypingEnvs::empty(), ty }
    }

    fn after(b: &TypeBranch) -> Self {
        let mut envs = TypingEnvs::empty();
        envs.gamma.extend(b.params.iter().map(|p| (p.name.clone(), p.ty.clone())));
        Self { envs, ty: b.cont.clone() }
    }
}

/// Checks every accepted one-step transition of a well-typed pair, then
/// continues along `walk` random accepted transitions, rechecking at each
/// visited state. Returns the number of transitions checked.
pub fn subject_reduction_pair(
    p: &Process,
    s: &SessionType,
    walk: usize,
    domains: &ValueDomain,
    g: &mut Generator,
) -> Result<usize, Box<SubjectReductionFailure>> {
    let (mut p, mut s) = (p.clone(), s.clone());
    let mut checked = 0;
    for _ in 0..=walk {
        let mut next = Vec::new();
        for (action, p2, candidates) in accepted_steps(&p, &s, domains) {
            checked += 1;
            match candidates.into_iter().find(|t| typecheck(&t.envs, &p2, &t.ty)) {
                Some(t) => next.push((p2, t.ty)),
                None => {
                    return Err(Box::new(SubjectReductionFailure { process: p, session_type: s, action, target: p2 }));
                }
            }
        }
        match next.choose(g.rng()) {
            Some((p2, s2)) => (p, s) = (p2.clone(), s2.clone()),
            None => break,
        }
    }
    Ok(checked)
}

/// Subject reduction over `samples` generated well-typed pairs.
pub fn check_subject_reduction(samples: usize, seed: u64) -> SubjectReductionOutcome {
    let mut g = Generator::new(seed);
    let domains = ValueDomain::default();
    let mut transitions = 0;
    for _ in 0..samples {
        let (p, s) = g.well_typed_pair();
        match subject_reduction_pair(&p, &s, 8, &domains, &mut g) {
            Ok(n) => transitions += n,
            Err(f) => return SubjectReductionOutcome::Counterexample(f),
        }
    }
    SubjectReductionOutcome::Pass { pairs: samples, transitions }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::parser::{parse_process, parse_type};
    use crate::semantics::{StuckClass, StuckKind};

    const S_AUTH: &str = "rec Y. !Auth(uname:Str, pwd:Str). &{?Succ(tok:Str).end, ?Fail(code:Int).Y}";
    const P_AUTH: &str = r#"rec X. send Auth("Bob","pwd"). recv { Succ(tok). 0, Fail(code). X }"#;
    const P_BAD: &str = r#"send Login("Bob"). recv { Res(tok). 0 }"#;

    fn pair(p: &str, s: &str) -> (Process, SessionType) {
        (parse_process(p).unwrap(), parse_type(s).unwrap())
    }

    #[test]
    fn auth_is_sound_and_blames_environment_only() {
        let (p, s) = pair(P_AUTH, S_AUTH);
        assert!(check_soundness(&p, &s, 16, &ValueDomain::default()).unwrap().passed());
        assert!(check_blame(&p, &s, 16, &ValueDomain::extended()).unwrap().passed());
        let ctx = ExecContext::with_domains(ValueDomain::extended());
        let c = Configuration::new(p, synthesize(&s).unwrap());
        let res = Message::new("Res", vec![crate::model::Value::Int(227)]);
        let out = crate::semantics::run_trace(&c, &[res], &ctx, 50);
        assert_eq!(out.stuck().and_then(StuckReport::verdict), Some(VerdictKind::NoELabel));
    }

    #[test]
    fn trivial_pairs() {
        let (p, s) = pair("0", "end");
        assert!(check_soundness(&p, &s, 4, &ValueDomain::default()).unwrap().passed());
        assert!(check_blame(&p, &s, 4, &ValueDomain::extended()).unwrap().passed());
        assert_eq!(
            check_subject_reduction(0, 1),
            SubjectReductionOutcome::Pass { pairs: 0, transitions: 0 }
        );
    }

    #[test]
    fn preconditions_are_reported() {
        let (p, s) = pair(P_BAD, S_AUTH);
        assert!(matches!(check_soundness(&p, &s, 4, &ValueDomain::default()), Err(UsageError::NotWellTyped(_))));
        let (p, s) = pair(P_AUTH, S_AUTH);
        assert!(matches!(check_weak_completeness(&p, &s, 4, &ValueDomain::default()), Err(UsageError::WellTyped)));
        let (p, s) = pair("send A(1).0", "!A(x:Int)[x > 0]");
        assert!(matches!(check_soundness(&p, &s, 4, &ValueDomain::default()), Err(UsageError::Asserted)));
    }

    #[test]
    fn completeness_examples() {
        let (p, s) = pair(P_BAD, S_AUTH);
        let w = check_weak_completeness(&p, &s, 12, &ValueDomain::default()).unwrap();
        assert_eq!(w.witness().unwrap().kind, StuckKind::VerdictReached(VerdictKind::NoPLabel));

        let (p, s) = pair("recv{A(x).0}", "&{?A(x:Int).end, ?B(y:Int).end}");
        let w = check_weak_completeness(&p, &s, 8, &ValueDomain::default()).unwrap();
        let w = w.witness().unwrap();
        assert_eq!((w.kind, w.class), (StuckKind::Deadlock, StuckClass::C3a));

        let (p, s) = pair("0", "+{!A(x:Int).end}");
        let w = check_weak_completeness(&p, &s, 4, &ValueDomain::default()).unwrap();
        let w = w.witness().unwrap();
        assert_eq!((w.kind, w.class), (StuckKind::Deadlock, StuckClass::C2b));
    }

    #[test]
    fn auth_unfolding_keeps_its_type() {
        let (p, s) = pair(P_AUTH, S_AUTH);
        let steps = accepted_steps(&p, &s, &ValueDomain::default());
        assert_eq!(steps.len(), 1);
        let (action, p2, candidates) = &steps[0];
        assert_eq!(action, &ProcessAction::Tau);
        assert!(typecheck(&TypingEnvs::empty(), p2, &s));
        assert!(candidates.iter().any(|t| t.ty == s));
    }

    #[test]
    fn nil_has_no_transitions() {
        let (p, s) = pair("0", "end");
        assert!(accepted_steps(&p, &s, &ValueDomain::default()).is_empty());
    }

    #[test]
    fn subject_reduction_small_run() {
        match check_subject_reduction(50, 5) {
            SubjectReductionOutcome::Pass { transitions, .. } => assert!(transitions > 50),
            SubjectReductionOutcome::Counterexample(f) => panic!("{f:?}"),
        }
    }
}
