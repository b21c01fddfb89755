//! Abstract syntax and value domains shared by every other module.
//!
//! Nothing in here has behavior beyond construction, equality, free-variable
//! computation and substitution. Checking, synthesis and execution live in
//! their own modules.

mod expr;
mod ident;
mod message;
mod monitor;
mod process;
mod types;
mod value;

pub use expr::{Assertion, BinOp, Env, EvalError, Expr, ExprTypeError, PredicateFn, PredicateRegistry, TypeEnv};
pub use ident::{fresh_name, is_identifier, Label, Name, RecVar};
pub use message::{Action, Message};
pub use monitor::{MonParam, Monitor, MonitorBranch, VerdictKind};
pub use process::{Process, RecvBranch};
pub use types::{Param, SessionType, TypeBranch};
pub use value::{has_type, BaseType, Value};
