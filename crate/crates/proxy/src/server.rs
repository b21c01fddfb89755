use std::net::{SocketAddr, TcpListener, TcpStream, ToSocketAddrs};
use std::path::PathBuf;
use std::sync::atomic::{AtomicBool, AtomicU64, Ordering};
use std::sync::{Arc, Condvar, Mutex};
use std::thread;
use std::time::Duration;

use sessmon_core::model::{Monitor, Name, PredicateRegistry, SessionType};
use sessmon_core::parser::{parse_type, SourceError};
use sessmon_core::synthesis::{synthesize, SynthesisError};
use thiserror::Error;

use crate::codec::{ConnectionManager, LineCodec};
use crate::log::{LogSink, SessionLog};
use crate::predicates::registry_by_name;
use crate::session::{run_session, Channel};

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ProxyConfig {
    pub type_file: PathBuf,
    /// Where untrusted peers connect.
    pub listen: String,
    /// The trusted peer.
    pub forward: String,
    /// Name of a predicate registry, see [`registry_by_name`].
    pub predicates: String,
    pub session_limit: usize,
    pub idle_timeout: Duration,
}

#[derive(Debug, Error)]
pub enum ProxyError {
    #[error("{path}: {source}")]
    Io { path: String, source: std::io::Error },
    #[error("{path}:{source}")]
    Parse { path: String, source: SourceError },
    #[error("type is not well-formed: {0}")]
    Synthesis(#[from] SynthesisError),
    #[error("unknown predicate registry `{0}`")]
    UnknownRegistry(String),
    #[error("the type uses predicates missing from the registry: {}", .0.join(", "))]
    MissingPredicates(Vec<String>),
    #[error("invalid configuration: {0}")]
    Config(&'static str),
    #[error("{what} {addr}: {source}")]
    Net { what: &'static str, addr: String, source: std::io::Error },
}

impl ProxyConfig {
    pub fn validate(&self) -> Result<(), ProxyError> {
        if self.listen == self.forward {
            return Err(ProxyError::Config("listen and forward endpoints must differ"));
        }
        if self.session_limit == 0 {
            return Err(ProxyError::Config("session limit must be at least 1"));
        }
        if self.idle_timeout.is_zero() {
            return Err(ProxyError::Config("idle timeout must be positive"));
        }
        Ok(())
    }
}

/// Synthesizes the monitor for `s` after checking every predicate it calls
/// is registered.
pub fn prepare_monitor(s: &SessionType, predicates: &PredicateRegistry) -> Result<Monitor, ProxyError> {
    let missing: Vec<String> = s
        .predicate_names()
        .iter().filter(|n: &&Name| !predicates.contains(n)).map(|n| n.to_string()).collect();
    if !missing.is_empty() {
        return Err(ProxyError::MissingPredicates(missing));
    }
    Ok(synthesize(s)?)
}

struct Slots {
    active: Mutex<usize>,
    freed: Condvar,
}

impl Slots {
    fn acquire(&self, limit: usize) {
        let mut n = self.active.lock().unwrap_or_else(|e| e.into_inner());
        while *n >= limit {
            n = self.freed.wait(n).unwrap_or_else(|e| e.into_inner());
        }
        *n += 1;
    }

    fn release(&self) {
        *self.active.lock().unwrap_or_else(|e| e.into_inner()) -= 1;
        self.freed.notify_one();
    }
}

/// A bound proxy. Sessions share only the monitor, the predicates and the
/// log sink, all immutable or append-only.
pub struct Proxy {
    listener: TcpListener,
    forward: String,
    monitor: Arc<Monitor>,
    predicates: Arc<PredicateRegistry>,
    session_limit: usize,
    idle_timeout: Option<Duration>,
    log: Arc<LogSink>,
    stop: Arc<AtomicBool>,
    next_id: AtomicU64,
}

/// Stops a running [`Proxy::serve`] loop from another thread.
#[derive(Clone)]
pub struct ShutdownHandle {
    stop: Arc<AtomicBool>,
    addr: SocketAddr,
}

impl ShutdownHandle {
    pub fn shutdown(&self) {
        self.stop.store(true, Ordering::SeqCst);
        // Wakes the blocking accept.
        let _ = TcpStream::connect(self.addr);
    }
}

impl Proxy {
    pub fn from_config(config: &ProxyConfig, log: Arc<LogSink>) -> Result<Self, ProxyError> {
        config.validate()?;
        let path = config.type_file.display().to_string();
        let text = std::fs::read_to_string(&config.type_file).map_err(|source| ProxyError::Io { path: path.clone(), source })?;
        let s = parse_type(&text).map_err(|source| ProxyError::Parse { path, source })?;
        let predicates =
            registry_by_name(&config.predicates).ok_or_else(|| ProxyError::UnknownRegistry(config.predicates.clone()))?;
        let monitor = prepare_monitor(&s, &predicates)?;
        let mut p = Self::bind(&config.listen, &config.forward, monitor, predicates, log)?;
        p.session_limit = config.session_limit;
        p.idle_timeout = Some(config.idle_timeout);
        Ok(p)
    }

    /// Binds with one session at a time and no idle timeout.
    pub fn bind(
        listen: &str,
        forward: &str,
        monitor: Monitor,
        predicates: PredicateRegistry,
        log: Arc<LogSink>,
    ) -> Result<Self, ProxyError> {
        let listener =
            TcpListener::bind(listen).map_err(|source| ProxyError::Net { what: "cannot listen on", addr: listen.into(), source })?;
        Ok(Self {
            listener,
            forward: forward.to_owned(),
            monitor: Arc::new(monitor),
            predicates: Arc::new(predicates),
            session_limit: 1,
            idle_timeout: None,
            log,
            stop: Arc::new(AtomicBool::new(false)),
            next_id: AtomicU64::new(1),
        })
    }

    pub fn with_idle_timeout(mut self, t: Option<Duration>) -> Self {
        self.idle_timeout = t;
        self
    }

    pub fn with_session_limit(mut self, n: usize) -> Self {
        self.session_limit = n.max(1);
        self
    }

    pub fn local_addr(&self) -> SocketAddr {
        self.listener.local_addr().expect("bound listener has an address")
    }

    pub fn shutdown_handle(&self) -> ShutdownHandle {
        ShutdownHandle { stop: self.stop.clone(), addr: self.local_addr() }
    }

    /// Accepts one untrusted connection and runs its session on the
    /// calling thread.
    pub fn serve_one(&self) -> Result<SessionLog, ProxyError> {
        let (untrusted, _) = self
            .listener
            .accept()
            .map_err(|source| ProxyError::Net { what: "accept failed on", addr: self.local_addr().to_string(), source })?;
        Ok(self.session(untrusted))
    }

    fn session(&self, untrusted: TcpStream) -> SessionLog {
        let id = self.next_id.fetch_add(1, Ordering::Relaxed);
        let log = session_worker(
            id,
            untrusted,
            &self.forward,
            (*self.monitor).clone(),
            &self.predicates,
            self.idle_timeout,
        );
        self.log.append(&log);
        log
    }

    /// Accepts untrusted connections until shut down, one thread per
    /// session, at most `session_limit` at a time.
    pub fn serve(self) -> Result<(), ProxyError> {
        let this = Arc::new(self);
        let slots = Arc::new(Slots { active: Mutex::new(0), freed: Condvar::new() });
        let mut workers = Vec::new();
        loop {
            slots.acquire(this.session_limit);
            let accepted = this.listener.accept();
            if this.stop.load(Ordering::SeqCst) {
                slots.release();
                break;
            }
            let Ok((untrusted, _)) = accepted else {
                slots.release();
                continue;
            };
            let (this2, slots2) = (this.clone(), slots.clone());
            workers.push(thread::spawn(move || {
                this2.session(untrusted);
                slots2.release();
            }));
            workers.retain(|w| !w.is_finished());
        }
        workers.into_iter().for_each(|w| {
            let _ = w.join();
        });
        Ok(())
    }
}

fn session_worker(
    id: u64,
    untrusted: TcpStream,
    forward: &str,
    monitor: Monitor,
    predicates: &PredicateRegistry,
    idle: Option<Duration>,
) -> SessionLog {
    let codec = LineCodec;
    let connect = || -> std::io::Result<TcpStream> {
        let addr = forward
            .to_socket_addrs()?
            .next()
            .ok_or_else(|| std::io::Error::new(std::io::ErrorKind::NotFound, "no address"))?;
        TcpStream::connect(addr)
    };
    let channels = connect().and_then(|trusted| Ok((Channel::tcp(untrusted, idle)?, Channel::tcp(trusted, idle)?)));
    match channels {
        Ok((u, t)) => run_session(id, monitor, predicates, &codec as &dyn ConnectionManager, u, t),
        Err(e) => {
            let mut log = SessionLog::new(id);
            log.events.push(crate::log::SessionEvent::Closed(crate::log::CloseReason::Error(format!(
                "cannot reach trusted peer {forward}: {e}"
            ))));
            log
        }
    }
}
