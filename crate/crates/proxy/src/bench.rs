//! Loopback latency benchmark: the same peers talking directly or through
//! the monitoring proxy.

use std::fmt;
use std::io::{self, BufReader};
use std::net::{TcpListener, TcpStream};
use std::sync::Arc;
use std::thread;
use std::time::{Duration, Instant};

use sessmon_core::model::{Message, PredicateRegistry, Value};
use sessmon_core::parser::parse_type;
use thiserror::Error;

use crate::codec::{ConnectionManager, LineCodec};
use crate::log::LogSink;
use crate::server::{prepare_monitor, Proxy, ProxyError};

/// Client side; the client is the untrusted peer.
pub const PINGPONG_TYPE: &str = "rec X. +{!Ping().?Pong().X, !Quit()}";

/// Server side; the server is the untrusted peer.
pub const SMTP_TYPE: &str = "!M220(msg:Str). &{
  ?Helo(host:Str). !M250(msg:Str).
    rec X. &{
      ?MailFrom(addr:Str). !M250(msg:Str).
        rec Y. &{
          ?RcptTo(addr:Str). !M250(msg:Str). Y,
          ?Data(). !M354(msg:Str). ?Content(txt:Str). !M250(msg:Str). X,
          ?Quit(). !M221(msg:Str)
        },
      ?Quit(). !M221(msg:Str)
    },
  ?Quit(). !M221(msg:Str)
}";

const PEER_TIMEOUT: Duration = Duration::from_secs(20);

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Protocol {
    /// One iteration is a Ping/Pong round trip.
    PingPong,
    /// One iteration is one email.
    Smtp,
}

impl Protocol {
    pub fn session_type(self) -> &'static str {
        match self {
            Protocol::PingPong => PINGPONG_TYPE,
            Protocol::Smtp => SMTP_TYPE,
        }
    }
}

impl fmt::Display for Protocol {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Protocol::PingPong => "pingpong",
            Protocol::Smtp => "smtp",
        })
    }
}

impl std::str::FromStr for Protocol {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "pingpong" => Ok(Protocol::PingPong),
            "smtp" => Ok(Protocol::Smtp),
            _ => Err(format!("unknown protocol `{s}` (expected pingpong or smtp)")),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Mode {
    Monitored,
    /// Peers connect directly.
    Unsafe,
}

impl fmt::Display for Mode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Mode::Monitored => "monitored",
            Mode::Unsafe => "unsafe",
        })
    }
}

impl std::str::FromStr for Mode {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "monitored" => Ok(Mode::Monitored),
            "unsafe" => Ok(Mode::Unsafe),
            _ => Err(format!("unknown mode `{s}` (expected monitored or unsafe)")),
        }
    }
}

#[derive(Debug, Error)]
pub enum BenchError {
    #[error(transparent)]
    Io(#[from] io::Error),
    #[error("peer protocol error: {0}")]
    Protocol(String),
    #[error(transparent)]
    Proxy(#[from] ProxyError),
    #[error("a peer thread panicked")]
    Panicked,
}

#[derive(Debug, Clone, PartialEq)]
pub struct BenchReport {
    pub protocol: Protocol,
    pub mode: Mode,
    pub iterations: usize,
    pub mean_ms: f64,
    pub p99_ms: f64,
    /// User plus system CPU time of the whole process during the run.
    pub cpu_ms: f64,
    /// Peak resident set size of the process, in KiB.
    pub max_rss_kb: i64,
    /// Verdicts raised by the proxy; always 0 in unsafe mode.
    pub verdicts: usize,
}

impl BenchReport {
    pub const CSV_HEADER: &'static str = "protocol,mode,iterations,mean_ms,p99_ms,cpu_ms,max_rss_kb,verdicts";

    pub fn csv_row(&self) -> String {
        format!(
            "{},{},{},{:.4},{:.4},{:.1},{},{}",
            self.protocol,
            self.mode,
            self.iterations,
            self.mean_ms,
            self.p99_ms,
            self.cpu_ms,
            self.max_rss_kb,
            self.verdicts
        )
    }
}

impl fmt::Display for BenchReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "{} {}: {} iterations, mean {:.4} ms, p99 {:.4} ms, cpu {:.1} ms, max rss {} KiB, {} verdicts",
            self.protocol, self.mode, self.iterations, self.mean_ms, self.p99_ms, self.cpu_ms, self.max_rss_kb, self.verdicts
        )
    }
}

struct Peer {
    reader: BufReader<TcpStream>,
    writer: TcpStream,
}

impl Peer {
    fn new(stream: TcpStream) -> io::Result<Self> {
        stream.set_nodelay(true)?;
        stream.set_read_timeout(Some(PEER_TIMEOUT))?;
        Ok(Self { reader: BufReader::new(stream.try_clone()?), writer: stream })
    }

    fn send(&mut self, label: &str, payload: Vec<Value>) -> Result<(), BenchError> {
        Ok(LineCodec.write_message(&mut self.writer, &Message::new(label, payload))?)
    }

    fn recv(&mut self) -> Result<Message, BenchError> {
        let frame = LineCodec
            .read_frame(&mut self.reader)
            .map_err(|e| BenchError::Protocol(e.to_string()))?
            .ok_or_else(|| BenchError::Protocol("connection closed".into()))?;
        LineCodec.decode(&frame).map_err(|e| BenchError::Protocol(e.to_string()))
    }

    fn expect(&mut self, label: &str) -> Result<Message, BenchError> {
        let m = self.recv()?;
        if m.label.as_str() == label {
            Ok(m)
        } else {
            Err(BenchError::Protocol(format!("expected {label}, got {}", m.label)))
        }
    }
}

fn text(s: &str) -> Vec<Value> {
    vec![Value::str(s)]
}

fn pingpong_client(mut p: Peer, n: usize) -> Result<Vec<Duration>, BenchError> {
    let mut out = Vec::with_capacity(n);
    for _ in 0..n {
        let t = Instant::now();
        p.send("Ping", vec![])?;
        p.expect("Pong")?;
        out.push(t.elapsed());
    }
    p.send("Quit", vec![])?;
    Ok(out)
}

fn pingpong_server(mut p: Peer) -> Result<(), BenchError> {
    loop {
        let m = p.recv()?;
        match m.label.as_str() {
            "Ping" => p.send("Pong", vec![])?,
            "Quit" => return Ok(()),
            other => return Err(BenchError::Protocol(format!("unexpected {other}"))),
        }
    }
}

fn smtp_server(mut p: Peer) -> Result<(), BenchError> {
    p.send("M220", text("ready"))?;
    loop {
        let m = p.recv()?;
        let (label, msg) = match m.label.as_str() {
            "Helo" | "MailFrom" | "RcptTo" | "Content" => ("M250", "ok"),
            "Data" => ("M354", "go ahead"),
            "Quit" => {
                p.send("M221", text("bye"))?;
                return Ok(());
            }
            other => return Err(BenchError::Protocol(format!("unexpected {other}"))),
        };
        p.send(label, text(msg))?;
    }
}

fn smtp_client(mut p: Peer, n: usize) -> Result<Vec<Duration>, BenchError> {
    p.expect("M220")?;
    p.send("Helo", text("bench.local"))?;
    p.expect("M250")?;
    let mut out = Vec::with_capacity(n);
    for i in 0..n {
        let t = Instant::now();
        p.send("MailFrom", text("alice@bench.local"))?;
        p.expect("M250")?;
        p.send("RcptTo", text("bob@bench.local"))?;
        p.expect("M250")?;
        p.send("Data", vec![])?;
        p.expect("M354")?;
        p.send("Content", text(&format!("message {i}\nline two\tend")))?;
        p.expect("M250")?;
        out.push(t.elapsed());
    }
    p.send("Quit", vec![])?;
    p.expect("M221")?;
    Ok(out)
}

#[derive(Clone, Copy)]
struct Usage {
    cpu: Duration,
    max_rss_kb: i64,
}

fn usage() -> Usage {
    // SAFETY: getrusage only writes into the zeroed struct we pass.
    let ru = unsafe {
        let mut ru: libc::rusage = std::mem::zeroed();
        libc::getrusage(libc::RUSAGE_SELF, &mut ru);
        ru
    };
    let tv = |t: libc::timeval| Duration::from_secs(t.tv_sec as u64) + Duration::from_micros(t.tv_usec as u64);
    Usage { cpu: tv(ru.ru_utime) + tv(ru.ru_stime), max_rss_kb: ru.ru_maxrss as i64 }
}

fn join<T>(h: thread::JoinHandle<Result<T, BenchError>>) -> Result<T, BenchError> {
    h.join().map_err(|_| BenchError::Panicked)?
}

/// Runs one session of `iterations` rounds over loopback TCP.
pub fn run_benchmark(protocol: Protocol, mode: Mode, iterations: usize) -> Result<BenchReport, BenchError> {
    let trusted_listener = TcpListener::bind("127.0.0.1:0")?;
    let trusted_addr = trusted_listener.local_addr()?;
    let log = Arc::new(LogSink::memory());

    let before = usage();
    let start = Instant::now();
    let trusted = thread::spawn(move || -> Result<Option<Vec<Duration>>, BenchError> {
        let (s, _) = trusted_listener.accept()?;
        let p = Peer::new(s)?;
        match protocol {
            Protocol::PingPong => pingpong_server(p).map(|_| None),
            Protocol::Smtp => smtp_client(p, iterations).map(Some),
        }
    });

    let (entry, proxy) = match mode {
        Mode::Unsafe => (trusted_addr, None),
        Mode::Monitored => {
            let s = parse_type(protocol.session_type()).expect("benchmark types parse");
            let preds = PredicateRegistry::new();
            let monitor = prepare_monitor(&s, &preds)?;
            let proxy = Proxy::bind("127.0.0.1:0", &trusted_addr.to_string(), monitor, preds, log.clone())?
                .with_idle_timeout(Some(PEER_TIMEOUT));
            let addr = proxy.local_addr();
            (addr, Some(thread::spawn(move || proxy.serve_one().map_err(BenchError::from))))
        }
    };

    let untrusted = Peer::new(TcpStream::connect(entry)?)?;
    let measured = match protocol {
        Protocol::PingPong => Some(pingpong_client(untrusted, iterations)),
        Protocol::Smtp => smtp_server(untrusted).err().map(Err),
    };
    let from_trusted = join(trusted)?;
    if let Some(h) = proxy {
        join(h)?;
    }
    let samples = match measured {
        Some(r) => r?,
        None => from_trusted.expect("the SMTP client measures"),
    };
    let _wall = start.elapsed();
    let after = usage();

    let mut ms: Vec<f64> = samples.iter().map(|d| d.as_secs_f64() * 1e3).collect();
    ms.sort_by(f64::total_cmp);
    let mean_ms = if ms.is_empty() { 0.0 } else { ms.iter().sum::<f64>() / ms.len() as f64 };
    let p99_ms = percentile(&ms, 0.99);
    Ok(BenchReport {
        protocol,
        mode,
        iterations,
        mean_ms,
        p99_ms,
        cpu_ms: (after.cpu.saturating_sub(before.cpu)).as_secs_f64() * 1e3,
        max_rss_kb: after.max_rss_kb,
        verdicts: log.logs().iter().filter(|l| l.verdict().is_some()).count(),
    })
}

/// Nearest-rank percentile of sorted samples.
pub fn percentile(sorted: &[f64], q: f64) -> f64 {
    if sorted.is_empty() {
        return 0.0;
    }
    let rank = (q * sorted.len() as f64).ceil() as usize;
    sorted[rank.clamp(1, sorted.len()) - 1]
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn nearest_rank() {
        let xs: Vec<f64> = (1..=100).map(f64::from).collect();
        assert_eq!(percentile(&xs, 0.99), 99.0);
        assert_eq!(percentile(&xs, 1.0), 100.0);
        assert_eq!(percentile(&[3.0], 0.99), 3.0);
    }

    #[test]
    fn short_runs_complete_in_both_modes() {
        for protocol in [Protocol::PingPong, Protocol::Smtp] {
            for mode in [Mode::Monitored, Mode::Unsafe] {
                let r = run_benchmark(protocol, mode, 5).unwrap();
                assert_eq!(r.verdicts, 0, "{r}");
                assert!(r.mean_ms > 0.0);
            }
        }
    }
}
