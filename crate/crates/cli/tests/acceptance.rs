//! Acceptance criteria, run in order with one PASS/FAIL line each.

use std::io::Write;
use std::net::{TcpListener, TcpStream};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::PathBuf;
use std::process::Command;
use std::sync::Arc;
use std::thread;
use std::time::{Duration, Instant};

use sessmon_core::harness::{
    blame_suite, check_subject_reduction, completeness_suite, coverage_section, dual_involution, soundness_suite,
    soundness_with_monitor, synthesis_commutes_with_substitution, trivial_assertions_never_blame, witnesses_for, Corpus,
    SuiteConfig, SubjectReductionOutcome,
};
use sessmon_core::model::{Action, Message, PredicateRegistry, Value, VerdictKind};
use sessmon_core::parser::{parse_monitor, parse_type};
use sessmon_core::semantics::{
    explore, run_trace, CompositeRule, Configuration, ExecContext, StuckClass, StuckKind, TraceEnd, ValueDomain,
};
use sessmon_core::synthesis::synthesize;
use sessmon_core::typecheck::{typecheck, TypingEnvs};
use sessmon_proxy::scenario::AUTH_ASSERTED;
use sessmon_proxy::{
    auth_scenarios, builtin_predicates, prepare_monitor, replay, run_benchmark, run_peer, Direction, LogSink, Mode, Protocol,
    Proxy, ScenarioKind,
};

type Outcome = Result<String, String>;

fn root() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../..")
}

fn corpus_path(file: &str) -> String {
    root().join("corpus").join(file).display().to_string()
}

fn corpus() -> Corpus {
    Corpus::load(root().join("corpus")).expect("bundled corpus loads")
}

fn ensure(cond: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg())
    }
}

fn sessmon(args: &[&str]) -> (i32, String) {
    let out = Command::new(env!("CARGO_BIN_EXE_sessmon")).args(args).output().expect("binary runs");
    (out.status.code().unwrap_or(-1), String::from_utf8_lossy(&out.stdout).into_owned())
}

fn worked_examples() -> Outcome {
    let (code, out) = sessmon(&["check", &corpus_path("auth.st"), &corpus_path("auth_client.proc")]);
    ensure(code == 0 && out.trim() == "well-typed", || format!("check: exit {code}, {out}"))?;

    let (code, out) = sessmon(&["synth", &corpus_path("auth.st")]);
    let expected = parse_monitor(
        "rec Y. recv_int {Auth(uname:Str, pwd:Str).
           if is_Str(uname) && is_Str(pwd) then send_ext Auth(uname, pwd).
             recv_ext {
               Succ(tok:Str). if is_Str(tok) then send_int Succ(tok). 0 else no_E,
               Fail(code:Int). if is_Int(code) then send_int Fail(code). Y else no_E }
           else no_P}",
    )
    .unwrap();
    ensure(code == 0 && parse_monitor(&out).ok() == Some(expected), || format!("synth: exit {code}, {out}"))?;

    let s = parse_type(&std::fs::read_to_string(corpus_path("auth.st")).unwrap()).unwrap();
    let m = synthesize(&s).unwrap();
    let ctx = ExecContext::with_domains(ValueDomain::default());
    let client = sessmon_core::parser::parse_process(&std::fs::read_to_string(corpus_path("auth_client.proc")).unwrap()).unwrap();
    let fail = Message::new("Fail", vec![Value::Int(1)]);
    let auth = Message::new("Auth", vec![Value::str("Bob"), Value::str("pwd")]);
    let t = run_trace(&Configuration::new(client, m.clone()), std::slice::from_ref(&fail), &ctx, 1000);
    let ext: Vec<Action> = t.external_actions().into_iter().cloned().collect();
    ensure(ext == [Action::ExtSend(auth.clone()), Action::ExtRecv(fail), Action::ExtSend(auth)], || {
        format!("auth trace: {ext:?}")
    })?;
    ensure(matches!(t.end, TraceEnd::Running(_)), || "auth trace should wait for the next reply".into())?;

    let bad = sessmon_core::parser::parse_process(&std::fs::read_to_string(corpus_path("bad_client.proc")).unwrap()).unwrap();
    let t = run_trace(&Configuration::new(bad, m), &[], &ctx, 1000);
    let verdict = t.stuck().and_then(|r| r.verdict());
    ensure(verdict == Some(VerdictKind::NoPLabel), || format!("bad client: {verdict:?}"))?;
    let send = t.steps.iter().position(|(r, _)| *r == CompositeRule::ISnd).ok_or("no process send")?;
    let after = t.steps.len() - send - 1;
    ensure(after <= 2, || format!("{after} silent steps after the offending send"))?;

    let (code, _) = sessmon(&["simulate", &corpus_path("auth.st"), &corpus_path("bad_client.proc")]);
    ensure(code == 3, || format!("simulate bad client: exit {code}"))?;
    Ok(format!("no_P {after} steps after the offending send"))
}

fn soundness() -> Outcome {
    let c = corpus();
    let n = c.well_typed().count();
    ensure(n >= 15, || format!("only {n} well-typed entries"))?;
    let r = soundness_suite(&c, &SuiteConfig::default());
    ensure(r.passed(), || r.to_string())?;
    Ok(format!("{} pairs ({n} bundled), {}", r.checked, r.note))
}

fn blame() -> Outcome {
    let r = blame_suite(&corpus(), &SuiteConfig::default());
    ensure(r.passed(), || r.to_string())?;
    Ok(format!("{} pairs, {}", r.checked, r.note))
}

fn weak_completeness() -> Outcome {
    let c = corpus();
    let (r, details) = completeness_suite(&c, &SuiteConfig::default());
    ensure(r.checked >= 15, || format!("only {} ill-typed dead-code-free entries", r.checked))?;
    ensure(r.passed(), || r.to_string())?;
    let blamed_env = details.iter().flat_map(|d| &d.witnesses).filter(|w| w.blames_environment()).count();
    ensure(blamed_env == 0, || format!("{blamed_env} witnesses blame the environment"))?;
    let deepest = details.iter().map(|d| d.depth).max().unwrap_or(0);
    ensure(deepest <= 32, || format!("depth {deepest}"))?;
    let cov = coverage_section(&details);
    ensure(cov.passed(), || cov.to_string())?;
    Ok(format!("{} entries, {}; {}", r.checked, r.note, cov.note))
}

fn impossibility() -> Outcome {
    let c = corpus();
    let cfg = SuiteConfig::default();
    let pruned = c.get("choice-pruned").ok_or("no choice-pruned entry")?;
    let full = c.get("choice-full").ok_or("no choice-full entry")?;
    ensure(!typecheck(&TypingEnvs::empty(), &pruned.process, &pruned.session_type), || "pruned entry typechecks".into())?;
    let (depth, witnesses) = witnesses_for(&pruned.process, &pruned.session_type, &cfg);
    ensure(
        witnesses.iter().any(|w| w.class == StuckClass::C3a && w.kind == StuckKind::Deadlock),
        || format!("no class 3a deadlock up to depth {depth}"),
    )?;
    let ctx = ExecContext::with_domains(ValueDomain::default());
    let all = explore(&Configuration::new(pruned.process.clone(), synthesize(&pruned.session_type).unwrap()), cfg.depth, &ctx);
    let nop = all.reports.iter().filter(|r| r.blames_process()).count();
    ensure(nop == 0, || format!("{nop} traces reach a process verdict"))?;
    ensure(typecheck(&TypingEnvs::empty(), &full.process, &full.session_type), || "full entry is ill-typed".into())?;
    let m = synthesize(&full.session_type).unwrap();
    let ok = soundness_with_monitor(&full.process, &m, cfg.depth, &ValueDomain::default());
    ensure(ok.passed(), || format!("full entry: {ok:?}"))?;
    Ok(format!("3a deadlock at depth {depth}, {} stuck states, none blaming the process", all.reports.len()))
}

fn subject_reduction() -> Outcome {
    match check_subject_reduction(500, 42) {
        SubjectReductionOutcome::Pass { pairs, transitions } => Ok(format!("{pairs} pairs, {transitions} transitions")),
        SubjectReductionOutcome::Counterexample(f) => Err(format!("{f:?}")),
    }
}

fn algebra() -> Outcome {
    let sections =
        [dual_involution(1000, 7), synthesis_commutes_with_substitution(500, 7), trivial_assertions_never_blame(500, 7)];
    for s in &sections {
        ensure(s.passed(), || s.to_string())?;
    }
    Ok(sections.iter().map(|s| format!("{} {}", s.name, s.checked)).collect::<Vec<_>>().join(", "))
}

fn proxy_agreement() -> Outcome {
    let s = parse_type(AUTH_ASSERTED).unwrap();
    let preds: PredicateRegistry = builtin_predicates();
    let scenarios = auth_scenarios(2024, 50);
    let mut kinds = std::collections::BTreeMap::new();
    let mut verdicts = 0;
    for (i, sc) in scenarios.iter().enumerate() {
        *kinds.entry(sc.kind).or_insert(0) += 1;
        let monitor = prepare_monitor(&s, &preds).map_err(|e| e.to_string())?;
        let trusted = TcpListener::bind("127.0.0.1:0").unwrap();
        let forward = trusted.local_addr().unwrap().to_string();
        let proxy = Proxy::bind("127.0.0.1:0", &forward, monitor, preds.clone(), Arc::new(LogSink::memory()))
            .map_err(|e| e.to_string())?
            .with_idle_timeout(Some(Duration::from_secs(10)));
        let entry = proxy.local_addr();
        let steps = sc.trusted.clone();
        let t = thread::spawn(move || run_peer(trusted.accept().unwrap().0, &steps));
        let p = thread::spawn(move || proxy.serve_one());
        let u = run_peer(TcpStream::connect(entry).unwrap(), &sc.untrusted);
        let log = p.join().unwrap().map_err(|e| e.to_string())?;
        let t = t.join().unwrap();

        let a = replay(&log, &s, &preds);
        ensure(a.agrees(), || format!("session {i}: proxy {:?}, semantics {:?}", a.proxy_verdict, a.trace_verdict))?;
        ensure(log.verdict() == sc.expected, || format!("session {i}: {:?}, expected {:?}", log.verdict(), sc.expected))?;
        if log.verdict().is_none() {
            ensure(t.received == u.sent && u.received == t.sent, || format!("session {i}: frames differ"))?;
        } else {
            verdicts += 1;
            let forwarded = log.forwarded(Direction::ToTrusted).count() + log.forwarded(Direction::ToUntrusted).count();
            ensure(t.received.len() + u.received.len() == forwarded, || format!("session {i}: bytes after the verdict"))?;
        }
    }
    for k in [ScenarioKind::Conforming, ScenarioKind::LabelViolation, ScenarioKind::TypeViolation, ScenarioKind::AssertionViolation] {
        ensure(kinds.contains_key(&k), || format!("no {k:?} session"))?;
    }
    Ok(format!("{} sessions, {verdicts} with verdicts, all agree", scenarios.len()))
}

fn benchmark() -> Outcome {
    let bench = |p, m, n| run_benchmark(p, m, n).map_err(|e| e.to_string());
    // Warm up sockets, allocator and caches before measuring.
    bench(Protocol::PingPong, Mode::Unsafe, 200)?;
    bench(Protocol::PingPong, Mode::Monitored, 200)?;
    let unsafe_ = bench(Protocol::PingPong, Mode::Unsafe, 2000)?;
    let monitored = bench(Protocol::PingPong, Mode::Monitored, 2000)?;
    let smtp = bench(Protocol::Smtp, Mode::Monitored, 100)?;
    for r in [&unsafe_, &monitored, &smtp] {
        ensure(r.verdicts == 0, || format!("{r}"))?;
    }
    let ratio = monitored.mean_ms / unsafe_.mean_ms;
    ensure(ratio <= 3.0, || format!("monitored/unsafe = {ratio:.2} ({} vs {})", monitored.mean_ms, unsafe_.mean_ms))?;
    Ok(format!(
        "pingpong mean {:.4} ms monitored vs {:.4} ms unsafe (x{ratio:.2}); smtp 100 emails, mean {:.4} ms",
        monitored.mean_ms, unsafe_.mean_ms, smtp.mean_ms
    ))
}

struct Criterion {
    title: &'static str,
    budget: Duration,
    run: fn() -> Outcome,
}

#[test]
fn acceptance_criteria() {
    let criteria = [
        Criterion { title: "worked examples", budget: Duration::from_secs(1), run: worked_examples },
        Criterion { title: "soundness", budget: Duration::from_secs(60), run: soundness },
        Criterion { title: "blame", budget: Duration::from_secs(60), run: blame },
        Criterion { title: "weak completeness", budget: Duration::from_secs(120), run: weak_completeness },
        Criterion { title: "impossibility", budget: Duration::from_secs(60), run: impossibility },
        Criterion { title: "subject reduction", budget: Duration::from_secs(30), run: subject_reduction },
        Criterion { title: "duality and synthesis laws", budget: Duration::from_secs(60), run: algebra },
        Criterion { title: "proxy/semantics agreement", budget: Duration::from_secs(60), run: proxy_agreement },
        Criterion { title: "benchmark sanity", budget: Duration::from_secs(120), run: benchmark },
    ];
    let mut failed = Vec::new();
    // Written straight to stderr so the lines show even when output is captured.
    let mut err = std::io::stderr();
    for (i, c) in criteria.iter().enumerate() {
        let start = Instant::now();
        let result = catch_unwind(AssertUnwindSafe(c.run)).unwrap_or_else(|p| {
            Err(p.downcast_ref::<String>().cloned().or_else(|| p.downcast_ref::<&str>().map(|s| s.to_string())).unwrap_or_default())
        });
        let elapsed = start.elapsed();
        let result = result.and_then(|detail| {
            if elapsed <= c.budget {
                Ok(detail)
            } else {
                Err(format!("{detail}; took {elapsed:.2?}, budget {:?}", c.budget))
            }
        });
        let line = match &result {
            Ok(detail) => format!("PASS criterion {}: {} ({elapsed:.2?}; {detail})", i + 1, c.title),
            Err(why) => format!("FAIL criterion {}: {} ({elapsed:.2?}; {why})", i + 1, c.title),
        };
        writeln!(err, "{line}").unwrap();
        if result.is_err() {
            failed.push(line);
        }
    }
    assert!(failed.is_empty(), "{}", failed.join("\n"));
}
