use std::net::{TcpListener, TcpStream};
use std::sync::Arc;
use std::thread;
use std::time::Duration;

use sessmon_core::model::{Message, VerdictKind};
use sessmon_core::parser::parse_type;
use sessmon_proxy::scenario::AUTH_ASSERTED;
use sessmon_proxy::{
    auth_scenarios, builtin_predicates, prepare_monitor, replay, run_peer, CloseReason, ConnectionManager, Direction,
    LineCodec, LogSink, PeerStep, Proxy, Scenario, ScenarioKind, SessionLog, Side, Transcript,
};

fn encode_all<'a>(ms: impl Iterator<Item = &'a Message>) -> Vec<Vec<u8>> {
    ms.map(|m| LineCodec.encode(m)).collect()
}

fn run_through_proxy(ty: &str, untrusted: Vec<PeerStep>, trusted: Vec<PeerStep>) -> (SessionLog, Transcript, Transcript) {
    let preds = builtin_predicates();
    let monitor = prepare_monitor(&parse_type(ty).unwrap(), &preds).unwrap();
    let trusted_listener = TcpListener::bind("127.0.0.1:0").unwrap();
    let forward = trusted_listener.local_addr().unwrap().to_string();
    let proxy = Proxy::bind("127.0.0.1:0", &forward, monitor, preds, Arc::new(LogSink::memory()))
        .unwrap()
        .with_idle_timeout(Some(Duration::from_secs(10)));
    let entry = proxy.local_addr();

    let t = thread::spawn(move || run_peer(trusted_listener.accept().unwrap().0, &trusted));
    let p = thread::spawn(move || proxy.serve_one().unwrap());
    let u = run_peer(TcpStream::connect(entry).unwrap(), &untrusted);
    (p.join().unwrap(), u, t.join().unwrap())
}

fn run_scenario(sc: &Scenario) -> (SessionLog, Transcript, Transcript) {
    run_through_proxy(AUTH_ASSERTED, sc.untrusted.clone(), sc.trusted.clone())
}

#[test]
fn generated_auth_sessions_behave_as_the_monitor_prescribes() {
    let s = parse_type(AUTH_ASSERTED).unwrap();
    let preds = builtin_predicates();
    let scenarios = auth_scenarios(7, 48);
    for kind in [ScenarioKind::Conforming, ScenarioKind::LabelViolation, ScenarioKind::TypeViolation, ScenarioKind::AssertionViolation] {
        assert!(scenarios.iter().any(|s| s.kind == kind));
    }
    for sc in &scenarios {
        let (log, u, t) = run_scenario(sc);
        assert!(log.is_well_formed(), "{log:?}");
        assert_eq!(log.verdict(), sc.expected, "{sc:?}\n{log:?}");

        // Partial identity: each side receives exactly the forwarded frames,
        // byte for byte, and they are a prefix of what the other side sent.
        let to_t = encode_all(log.forwarded(Direction::ToTrusted));
        let to_u = encode_all(log.forwarded(Direction::ToUntrusted));
        assert_eq!(t.received, to_t);
        assert_eq!(u.received, to_u);
        assert!(u.sent.starts_with(&to_t));
        assert!(t.sent.starts_with(&to_u));

        match sc.culprit {
            None => {
                assert_eq!(to_t, u.sent);
                assert_eq!(to_u, t.sent);
                assert_eq!(log.close_reason(), Some(&CloseReason::Completed));
            }
            // Fail fast: the offending frame is the culprit's last one and
            // goes nowhere.
            Some(Side::Untrusted) => assert_eq!(to_t.len() + 1, u.sent.len()),
            Some(Side::Trusted) => assert_eq!(to_u.len() + 1, t.sent.len()),
        }
        if sc.expected.is_some() {
            assert_eq!(log.close_reason(), Some(&CloseReason::Halted));
        }

        let agreement = replay(&log, &s, &preds);
        assert!(agreement.agrees(), "{sc:?}\n{agreement:?}");
    }
}

#[test]
fn malformed_frames_halt_the_session() {
    let (log, u, t) = run_through_proxy(
        AUTH_ASSERTED,
        vec![PeerStep::Send(b"Auth(\"Bob\",\"pw\")\n".to_vec()), PeerStep::Expect],
        vec![PeerStep::Expect, PeerStep::Send(b"Fail(007)\n".to_vec())],
    );
    assert_eq!(log.verdict(), Some(VerdictKind::NoELabel));
    assert_eq!(t.received.len(), 1);
    assert!(u.received.is_empty() && u.cut_short);
}

#[test]
fn unreachable_trusted_peer_closes_with_an_error() {
    let preds = builtin_predicates();
    let monitor = prepare_monitor(&parse_type("!A()").unwrap(), &preds).unwrap();
    let dead = TcpListener::bind("127.0.0.1:0").unwrap().local_addr().unwrap().to_string();
    let proxy = Proxy::bind("127.0.0.1:0", &dead, monitor, preds, Arc::new(LogSink::memory())).unwrap();
    let entry = proxy.local_addr();
    let p = thread::spawn(move || proxy.serve_one().unwrap());
    let _client = TcpStream::connect(entry).unwrap();
    let log = p.join().unwrap();
    assert!(matches!(log.close_reason(), Some(CloseReason::Error(_))), "{log:?}");
    assert!(log.is_well_formed());
}

#[test]
fn idle_peers_time_out() {
    let preds = builtin_predicates();
    let monitor = prepare_monitor(&parse_type("!A()").unwrap(), &preds).unwrap();
    let trusted = TcpListener::bind("127.0.0.1:0").unwrap();
    let forward = trusted.local_addr().unwrap().to_string();
    let proxy = Proxy::bind("127.0.0.1:0", &forward, monitor, preds, Arc::new(LogSink::memory()))
        .unwrap()
        .with_idle_timeout(Some(Duration::from_millis(100)));
    let entry = proxy.local_addr();
    let p = thread::spawn(move || proxy.serve_one().unwrap());
    let _client = TcpStream::connect(entry).unwrap();
    let _server = trusted.accept().unwrap();
    assert_eq!(p.join().unwrap().close_reason(), Some(&CloseReason::Timeout));
}

fn echo_server(listener: TcpListener) {
    for stream in listener.incoming() {
        let Ok(stream) = stream else { break };
        thread::spawn(move || {
            let mut reader = std::io::BufReader::new(stream.try_clone().unwrap());
            let mut w = stream;
            loop {
                match LineCodec.read_frame(&mut reader) {
                    Ok(Some(f)) if f.starts_with(b"Ping") => {
                        LineCodec.write_message(&mut w, &Message::new("Pong", vec![])).unwrap()
                    }
                    _ => return,
                }
            }
        });
    }
}

#[test]
fn concurrent_sessions_are_isolated() {
    let preds = builtin_predicates();
    let monitor = prepare_monitor(&parse_type("rec X. +{!Ping().?Pong().X, !Quit()}").unwrap(), &preds).unwrap();
    let trusted = TcpListener::bind("127.0.0.1:0").unwrap();
    let forward = trusted.local_addr().unwrap().to_string();
    thread::spawn(move || echo_server(trusted));
    let sink = Arc::new(LogSink::memory());
    let proxy = Proxy::bind("127.0.0.1:0", &forward, monitor, preds, sink.clone())
        .unwrap()
        .with_idle_timeout(Some(Duration::from_secs(10)))
        .with_session_limit(4);
    let entry = proxy.local_addr();
    let stop = proxy.shutdown_handle();
    let server = thread::spawn(move || proxy.serve());

    let clients: Vec<_> = (0..12)
        .map(|i| {
            thread::spawn(move || {
                let pings = 3 + i % 4;
                let mut steps = Vec::new();
                for _ in 0..pings {
                    steps.push(PeerStep::send(&Message::new("Ping", vec![])));
                    steps.push(PeerStep::Expect);
                }
                let bad = i % 3 == 0;
                steps.push(PeerStep::send(&Message::new(if bad { "Pang" } else { "Quit" }, vec![])));
                (pings, bad, run_peer(TcpStream::connect(entry).unwrap(), &steps))
            })
        })
        .collect();
    for c in clients {
        let (pings, _, t) = c.join().unwrap();
        assert_eq!(t.received.len(), pings);
    }
    stop.shutdown();
    server.join().unwrap().unwrap();

    let logs = sink.logs();
    assert_eq!(logs.len(), 12);
    let mut ids: Vec<u64> = logs.iter().map(|l| l.session_id).collect();
    ids.sort();
    ids.dedup();
    assert_eq!(ids.len(), 12);
    assert_eq!(logs.iter().filter(|l| l.verdict() == Some(VerdictKind::NoPLabel)).count(), 4);
    for log in &logs {
        assert!(log.is_well_formed());
        let pongs = log.forwarded(Direction::ToUntrusted).count();
        assert_eq!(log.forwarded(Direction::ToTrusted).count(), pongs + usize::from(log.verdict().is_none()));
    }
}
