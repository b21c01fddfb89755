//! TCP proxy that enforces a session type on an untrusted peer by running
//! the synthesized monitor between it and a trusted peer.

pub mod bench;
pub mod codec;
pub mod interp;
pub mod log;
pub mod predicates;
pub mod scenario;
pub mod server;
pub mod session;

pub use bench::{run_benchmark, BenchError, BenchReport, Mode, Protocol};
pub use codec::{line_codec, ConnectionManager, FrameError, LineCodec, MAX_FRAME};
pub use log::{CloseReason, Direction, LogSink, Offending, SessionEvent, SessionLog, Side, LOG_ENV};
pub use predicates::{builtin_predicates, registry_by_name};
pub use scenario::{auth_scenarios, replay, run_peer, Agreement, PeerStep, Scenario, ScenarioKind, Transcript};
pub use server::{prepare_monitor, Proxy, ProxyConfig, ProxyError, ShutdownHandle};
pub use session::{run_session, Channel};
