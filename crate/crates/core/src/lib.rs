pub mod harness;
pub mod model;
pub mod parser;
pub mod semantics;
pub mod synthesis;
pub mod typecheck;
