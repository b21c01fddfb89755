//! One proxied session: the synthesized monitor, interpreted step by step,
//! between an untrusted peer (the monitored side) and a trusted peer.

use std::io::{self, BufRead, BufReader, Write};
use std::net::{Shutdown, TcpStream};
use std::time::Duration;

use sessmon_core::model::{Message, Monitor, PredicateRegistry, VerdictKind};
use sessmon_core::semantics::MonitorBlock;

use crate::codec::{ConnectionManager, FrameError};
use crate::interp::{Interpreter, Next};
use crate::log::{CloseReason, Direction, Offending, SessionEvent, SessionLog, Side};

/// One side of a session.
pub struct Channel {
    reader: Box<dyn BufRead + Send>,
    writer: Box<dyn Write + Send>,
    stream: Option<TcpStream>,
}

impl Channel {
    pub fn tcp(stream: TcpStream, idle_timeout: Option<Duration>) -> io::Result<Self> {
        stream.set_nodelay(true)?;
        stream.set_read_timeout(idle_timeout)?;
        let reader = BufReader::new(stream.try_clone()?);
        Ok(Self { reader: Box::new(reader), writer: Box::new(stream.try_clone()?), stream: Some(stream) })
    }

    /// A channel over arbitrary streams, e.g. in-memory buffers.
    pub fn new(reader: impl BufRead + Send + 'static, writer: impl Write + Send + 'static) -> Self {
        Self { reader: Box::new(reader), writer: Box::new(writer), stream: None }
    }

    fn close(&mut self) {
        let _ = self.writer.flush();
        if let Some(s) = &self.stream {
            let _ = s.shutdown(Shutdown::Both);
        }
    }
}

enum Received {
    Message(Message),
    Malformed(String),
    Closed(CloseReason),
}

fn receive(codec: &dyn ConnectionManager, ch: &mut Channel, side: Side) -> Received {
    let frame = match codec.read_frame(&mut ch.reader) {
        Ok(Some(f)) => f,
        Ok(None) => return Received::Closed(CloseReason::PeerDisconnect(side)),
        Err(FrameError::Io(e)) if matches!(e.kind(), io::ErrorKind::WouldBlock | io::ErrorKind::TimedOut) => {
            return Received::Closed(CloseReason::Timeout)
        }
        Err(FrameError::Io(_)) => return Received::Closed(CloseReason::PeerDisconnect(side)),
        Err(e) => return Received::Malformed(e.to_string()),
    };
    match codec.decode(&frame) {
        Ok(m) => Received::Message(m),
        Err(e) => Received::Malformed(e.to_string()),
    }
}

/// Drives `monitor` until it terminates, reaches a verdict, or a peer goes
/// away. Both channels are closed on return.
pub fn run_session(
    session_id: u64,
    monitor: Monitor,
    predicates: &PredicateRegistry,
    codec: &dyn ConnectionManager,
    mut untrusted: Channel,
    mut trusted: Channel,
) -> SessionLog {
    let mut log = SessionLog::new(session_id);
    let mut it = Interpreter::new(&monitor);
    let mut last: Option<Offending> = None;
    let reason = loop {
        match it.advance(predicates) {
            Next::RecvInternal(bs) => match input(codec, &mut untrusted, Side::Untrusted) {
                Ok(Ok(msg)) => {
                    last = Some(Offending::Message(msg.clone()));
                    it.deliver(bs, msg, VerdictKind::NoPLabel);
                }
                Ok(Err(why)) => {
                    last = Some(Offending::Malformed(why));
                    it.reject(VerdictKind::NoPLabel);
                }
                Err(r) => break r,
            },
            Next::RecvExternal(bs) => match input(codec, &mut trusted, Side::Trusted) {
                Ok(Ok(msg)) => {
                    last = Some(Offending::Message(msg.clone()));
                    it.deliver(bs, msg, VerdictKind::NoELabel);
                }
                Ok(Err(why)) => {
                    last = Some(Offending::Malformed(why));
                    it.reject(VerdictKind::NoELabel);
                }
                Err(r) => break r,
            },
            Next::SendExternal(msg) => {
                if codec.write_message(&mut trusted.writer, &msg).is_err() {
                    break CloseReason::PeerDisconnect(Side::Trusted);
                }
                log.events.push(SessionEvent::Forwarded(Direction::ToTrusted, msg));
            }
            Next::SendInternal(msg) => {
                if codec.write_message(&mut untrusted.writer, &msg).is_err() {
                    break CloseReason::PeerDisconnect(Side::Untrusted);
                }
                log.events.push(SessionEvent::Forwarded(Direction::ToUntrusted, msg));
            }
            Next::Blocked(MonitorBlock::Nil) => break CloseReason::Completed,
            Next::Blocked(MonitorBlock::Verdict(k)) => {
                log.events.push(SessionEvent::Flagged(k, last.take().unwrap_or(Offending::Nothing)));
                break CloseReason::Halted;
            }
            Next::Blocked(MonitorBlock::Stuck) => break CloseReason::Error("monitor cannot evaluate a forward".into()),
        }
    };
    untrusted.close();
    trusted.close();
    log.events.push(SessionEvent::Closed(reason));
    log
}

/// Reads one frame. A frame that does not decode is returned as the inner
/// error; the caller treats it as a message outside the offer.
fn input(codec: &dyn ConnectionManager, ch: &mut Channel, side: Side) -> Result<Result<Message, String>, CloseReason> {
    match receive(codec, ch, side) {
        Received::Message(msg) => Ok(Ok(msg)),
        Received::Malformed(why) => Ok(Err(why)),
        Received::Closed(r) => Err(r),
    }
}

#[cfg(test)]
mod tests {
    use std::sync::{Arc, Mutex};

    use super::*;
    use crate::codec::LineCodec;
    use crate::predicates::builtin_predicates;
    use sessmon_core::parser::parse_type;
    use sessmon_core::synthesis::synthesize;

    #[derive(Clone, Default)]
    struct Sink(Arc<Mutex<Vec<u8>>>);

    impl Write for Sink {
        fn write(&mut self, buf: &[u8]) -> io::Result<usize> {
            self.0.lock().unwrap().extend_from_slice(buf);
            Ok(buf.len())
        }
        fn flush(&mut self) -> io::Result<()> {
            Ok(())
        }
    }

    const S_AUTH: &str = "rec Y. !Auth(uname:Str, pwd:Str). &{?Succ(tok:Str).end, ?Fail(code:Int).Y}";

    fn run(ty: &str, from_untrusted: &str, from_trusted: &str) -> (SessionLog, Vec<u8>, Vec<u8>) {
        let m = synthesize(&parse_type(ty).unwrap()).unwrap();
        let (to_u, to_t) = (Sink::default(), Sink::default());
        let u = Channel::new(io::Cursor::new(from_untrusted.as_bytes().to_vec()), to_u.clone());
        let t = Channel::new(io::Cursor::new(from_trusted.as_bytes().to_vec()), to_t.clone());
        let log = run_session(1, m, &builtin_predicates(), &LineCodec, u, t);
        assert!(log.is_well_formed(), "{log:?}");
        let a = to_u.0.lock().unwrap().clone();
        let b = to_t.0.lock().unwrap().clone();
        (log, a, b)
    }

    #[test]
    fn forwards_a_conforming_exchange() {
        let (log, to_u, to_t) = run(S_AUTH, "Auth(\"Bob\",\"pwd\")\n", "Fail(1)\n");
        assert_eq!(to_t, b"Auth(\"Bob\",\"pwd\")\n");
        assert_eq!(to_u, b"Fail(1)\n");
        assert_eq!(log.verdict(), None);
        assert_eq!(log.close_reason(), Some(&CloseReason::PeerDisconnect(Side::Untrusted)));
    }

    #[test]
    fn flags_an_unknown_label_and_forwards_nothing() {
        let (log, to_u, to_t) = run(S_AUTH, "Login(\"Bob\")\n", "");
        assert_eq!(log.verdict(), Some(VerdictKind::NoPLabel));
        assert!(to_u.is_empty() && to_t.is_empty());
    }

    #[test]
    fn malformed_frames_are_label_violations_of_their_side() {
        let (log, _, _) = run(S_AUTH, "Auth(\"Bob\" ,\"pwd\")\n", "");
        assert_eq!(log.verdict(), Some(VerdictKind::NoPLabel));
        let (log, _, to_t) = run(S_AUTH, "Auth(\"Bob\",\"pwd\")\n", "Fail(x)\n");
        assert_eq!(log.verdict(), Some(VerdictKind::NoELabel));
        assert_eq!(to_t, b"Auth(\"Bob\",\"pwd\")\n");
    }

    #[test]
    fn constant_true_token_check_forwards_success() {
        let ty = "rec Y. !Auth(uname:Str, pwd:Str). &{?Succ(tok:Int)[validTok2(tok)].end, ?Fail(code:Int).Y}";
        let m = synthesize(&parse_type(ty).unwrap()).unwrap();
        let preds = PredicateRegistry::new().with("validTok2", |_| Ok(true));
        let to_u = Sink::default();
        let u = Channel::new(io::Cursor::new(b"Auth(\"Bob\",\"pwd\")\n".to_vec()), to_u.clone());
        let t = Channel::new(io::Cursor::new(b"Succ(321)\n".to_vec()), Sink::default());
        let log = run_session(1, m, &preds, &LineCodec, u, t);
        assert_eq!(log.verdict(), None);
        assert_eq!(log.close_reason(), Some(&CloseReason::Completed));
        assert_eq!(*to_u.0.lock().unwrap(), b"Succ(321)\n");
    }

    #[test]
    fn failing_or_unevaluable_assertions_blame_the_sender() {
        let ty = "rec Y. !Auth(uname:Str, pwd:Str)[validUname(uname)]. \
                  &{?Succ(tok:Str)[validTok(tok, uname)].end, ?Fail(code:Int).Y}";
        let (log, _, _) = run(ty, "Auth(\"\",\"pwd\")\n", "");
        assert_eq!(log.verdict(), Some(VerdictKind::NoPAssert));
        let (log, _, _) = run(ty, "Auth(\"Bob\",\"pwd\")\n", "Succ(\"tok-Eve\")\n");
        assert_eq!(log.verdict(), Some(VerdictKind::NoEAssert));
        let (log, _, _) = run(ty, "Auth(\"Bob\",\"pwd\")\n", "Succ(\"tok-Bob\")\n");
        assert_eq!(log.close_reason(), Some(&CloseReason::Completed));
        let (log, _, _) = run("!A(x:Int)[positive(x, x)]", "A(1)\n", "");
        assert_eq!(log.verdict(), Some(VerdictKind::NoPAssert));
    }
}
