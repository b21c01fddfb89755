//! Scripted peers and generated sessions for exercising a proxy, plus the
//! replay of a session log through the reference semantics.

use std::io::{BufReader, Write};
use std::net::TcpStream;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use sessmon_core::model::{Expr, Message, Name, PredicateRegistry, Process, RecvBranch, SessionType, Value, VerdictKind};
use sessmon_core::semantics::{run_trace, Configuration, ExecContext, TraceOutcome, ValueDomain};
use sessmon_core::synthesis::synthesize;

use crate::codec::{ConnectionManager, LineCodec};
use crate::log::{Direction, Offending, SessionEvent, SessionLog};

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum PeerStep {
    /// Write these bytes (normally one frame).
    Send(Vec<u8>),
    /// Read one frame.
    Expect,
}

impl PeerStep {
    pub fn send(m: &Message) -> Self {
        PeerStep::Send(LineCodec.encode(m))
    }
}

/// What a scripted peer observed.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Transcript {
    pub sent: Vec<Vec<u8>>,
    pub received: Vec<Vec<u8>>,
    /// The connection ended before the script did.
    pub cut_short: bool,
}

/// Runs `steps` over `stream`, stopping early if the other side goes away.
/// Bytes still arriving after the script ends are collected too.
pub fn run_peer(stream: TcpStream, steps: &[PeerStep]) -> Transcript {
    let _ = stream.set_nodelay(true);
    let mut out = Transcript::default();
    let Ok(read_half) = stream.try_clone() else {
        out.cut_short = true;
        return out;
    };
    let mut reader = BufReader::new(read_half);
    let mut writer = stream;
    for step in steps {
        match step {
            PeerStep::Send(bytes) => {
                if writer.write_all(bytes).and_then(|_| writer.flush()).is_err() {
                    out.cut_short = true;
                    return out;
                }
                out.sent.push(bytes.clone());
            }
            PeerStep::Expect => match LineCodec.read_frame(&mut reader) {
                Ok(Some(frame)) => out.received.push(frame),
                _ => {
                    out.cut_short = true;
                    return out;
                }
            },
        }
    }
    let _ = writer.shutdown(std::net::Shutdown::Write);
    while let Ok(Some(frame)) = LineCodec.read_frame(&mut reader) {
        out.received.push(frame);
    }
    out
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum ScenarioKind {
    Conforming,
    LabelViolation,
    TypeViolation,
    AssertionViolation,
}

/// A pair of scripts for the two peers of a session.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Scenario {
    pub kind: ScenarioKind,
    /// Which side misbehaves, if any.
    pub culprit: Option<crate::log::Side>,
    pub untrusted: Vec<PeerStep>,
    pub trusted: Vec<PeerStep>,
    /// Verdict the monitor must reach.
    pub expected: Option<VerdictKind>,
}

/// The login protocol with assertions, from the client's side.
pub const AUTH_ASSERTED: &str = "rec Y. !Auth(uname:Str, pwd:Str)[validUname(uname)]. \
     &{?Succ(tok:Str)[validTok(tok, uname)].end, ?Fail(code:Int).Y}";

fn random_password(rng: &mut ChaCha8Rng) -> String {
    const CHARS: &[char] = &['a', 'Z', '7', '"', '\\', '\n', '\t', ' ', 'é', ','];
    (0..rng.gen_range(0..8)).map(|_| *CHARS.choose(rng).unwrap()).collect()
}

fn random_user(rng: &mut ChaCha8Rng) -> String {
    const CHARS: &[u8] = b"abcXYZ019";
    (0..rng.gen_range(1..6)).map(|_| *CHARS.choose(rng).unwrap() as char).collect()
}

/// `n` login sessions for [`AUTH_ASSERTED`] with the builtin predicates,
/// cycling through the four kinds.
pub fn auth_scenarios(seed: u64, n: usize) -> Vec<Scenario> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let kinds =
        [ScenarioKind::Conforming, ScenarioKind::LabelViolation, ScenarioKind::TypeViolation, ScenarioKind::AssertionViolation];
    (0..n).map(|i| auth_scenario(&mut rng, kinds[i % kinds.len()])).collect()
}

fn auth_scenario(rng: &mut ChaCha8Rng, kind: ScenarioKind) -> Scenario {
    use crate::log::Side;
    let user = random_user(rng);
    let rounds = rng.gen_range(1..=4);
    let culprit = match kind {
        ScenarioKind::Conforming => None,
        _ => Some(if rng.gen_bool(0.5) { Side::Untrusted } else { Side::Trusted }),
    };
    let bad_round = rng.gen_range(0..rounds);
    let (mut u, mut t) = (Vec::new(), Vec::new());
    let mut expected = None;
    for round in 0..rounds {
        let last = round + 1 == rounds;
        let auth = Message::new("Auth", vec![Value::str(user.clone()), Value::str(random_password(rng))]);
        if round == bad_round && culprit == Some(Side::Untrusted) {
            let (bad, verdict) = match kind {
                ScenarioKind::LabelViolation => (Message::new("Login", vec![Value::str(user.clone())]), VerdictKind::NoPLabel),
                ScenarioKind::TypeViolation => {
                    (Message::new("Auth", vec![Value::Int(rng.gen_range(0..100)), auth.payload[1].clone()]), VerdictKind::NoPLabel)
                }
                _ => (Message::new("Auth", vec![Value::str(format!("{user} x")), auth.payload[1].clone()]), VerdictKind::NoPAssert),
            };
            u.push(PeerStep::send(&bad));
            u.push(PeerStep::Expect);
            t.push(PeerStep::Expect);
            expected = Some(verdict);
            break;
        }
        u.push(PeerStep::send(&auth));
        u.push(PeerStep::Expect);
        t.push(PeerStep::Expect);
        let reply = if last {
            Message::new("Succ", vec![Value::str(format!("tok-{user}"))])
        } else {
            Message::new("Fail", vec![Value::Int(rng.gen_range(-3..400))])
        };
        if round == bad_round && culprit == Some(Side::Trusted) {
            let (bad, verdict) = match kind {
                ScenarioKind::LabelViolation => (Message::new("Res", vec![Value::Int(227)]), VerdictKind::NoELabel),
                ScenarioKind::TypeViolation => (Message::new("Fail", vec![Value::str("x")]), VerdictKind::NoELabel),
                _ => (Message::new("Succ", vec![Value::str("tok-intruder")]), VerdictKind::NoEAssert),
            };
            t.push(PeerStep::send(&bad));
            expected = Some(verdict);
            break;
        }
        t.push(PeerStep::send(&reply));
    }
    Scenario { kind, culprit, untrusted: u, trusted: t, expected }
}

/// The session recast for the reference semantics: a process performing
/// the untrusted peer's part, and the trusted peer's messages as the
/// environment script.
pub fn log_to_trace_input(log: &SessionLog) -> (Process, Vec<Message>) {
    let mut script = Vec::new();
    let mut steps: Vec<(bool, Message)> = Vec::new();
    for e in &log.events {
        match e {
            SessionEvent::Forwarded(Direction::ToTrusted, m) => steps.push((true, m.clone())),
            SessionEvent::Forwarded(Direction::ToUntrusted, m) => {
                steps.push((false, m.clone()));
                script.push(m.clone());
            }
            SessionEvent::Flagged(k, Offending::Message(m)) => {
                if k.blames_process() {
                    steps.push((true, m.clone()));
                } else {
                    script.push(m.clone());
                }
            }
            _ => {}
        }
    }
    let process = steps.into_iter().rev().fold(Process::Nil, |cont, (send, m)| {
        if send {
            Process::send(m.label.clone(), m.payload.into_iter().map(Expr::Lit).collect(), cont)
        } else {
            let params = (0..m.payload.len()).map(|i| Name::new(format!("x{i}"))).collect();
            Process::Recv(vec![RecvBranch::new(m.label, params, cont)])
        }
    });
    (process, script)
}

/// How a session log compares with the reference semantics.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Agreement {
    pub proxy_verdict: Option<VerdictKind>,
    pub trace_verdict: Option<VerdictKind>,
    /// Messages sent to the trusted side coincide with the trace's outputs,
    /// and every scripted input was consumed.
    pub same_messages: bool,
    pub trace: TraceOutcome,
}

impl Agreement {
    pub fn agrees(&self) -> bool {
        self.proxy_verdict == self.trace_verdict && self.same_messages
    }
}

/// Replays `log` through `run_trace` over the monitor synthesized from `s`.
pub fn replay(log: &SessionLog, s: &SessionType, predicates: &PredicateRegistry) -> Agreement {
    let (process, script) = log_to_trace_input(log);
    let monitor = synthesize(s).expect("the proxied type is well-formed");
    let ctx = ExecContext::new(ValueDomain::default(), predicates.clone());
    let trace = run_trace(&Configuration::new(process, monitor), &script, &ctx, 100_000);
    let outputs: Vec<&Message> = trace
        .steps
        .iter()
        .filter_map(|(_, a)| match a {
            sessmon_core::model::Action::ExtSend(m) => Some(m),
            _ => None,
        })
        .collect();
    let forwarded: Vec<&Message> = log.forwarded(Direction::ToTrusted).collect();
    Agreement {
        proxy_verdict: log.verdict(),
        trace_verdict: trace.stuck().and_then(|r| r.verdict()),
        same_messages: outputs == forwarded && trace.consumed == script.len(),
        trace,
    }
}
