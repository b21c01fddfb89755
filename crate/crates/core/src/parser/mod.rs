//! Concrete syntax for session types, processes and monitors.
//!
//! ```text
//! S ::= +{ !msg.S, .. } | &{ ?msg.S, .. } | !msg.S | ?msg.S | rec X. S | X | end
//! msg ::= Label(x:B, ..)[assertion]
//! P ::= send L(e, ..).P | recv { L(x, ..).P, .. } | rec X. P | X | if e then P else P | 0
//! M ::= recv_int {..} | recv_ext {..} | send_int L(e, ..).M | send_ext L(e, ..).M
//!     | rec X. M | X | if e then M else M | 0 | no_P | no_E | no_P_assert | no_E_assert
//! ```
//!
//! `#` starts a line comment. A trailing `.end` or `.0` may be left out.

mod error;
mod grammar;
mod lexer;
mod render;

pub use error::SourceError;
pub use render::{render_expr, render_monitor, render_process, render_type};

use crate::model::{BaseType, Expr, Monitor, Process, SessionType};
use grammar::Parser;

/// Parses a closed session type. Duplicate labels, duplicate payload names,
/// unguarded recursion and free recursion variables are rejected.
pub fn parse_type(src: &str) -> Result<SessionType, SourceError> {
    parse_with(src, false, Parser::session_type)
}

/// Like [`parse_type`] but accepts free recursion variables.
pub fn parse_open_type(src: &str) -> Result<SessionType, SourceError> {
    parse_with(src, true, Parser::session_type)
}

pub fn parse_process(src: &str) -> Result<Process, SourceError> {
    parse_with(src, false, Parser::process)
}

pub fn parse_open_process(src: &str) -> Result<Process, SourceError> {
    parse_with(src, true, Parser::process)
}

pub fn parse_monitor(src: &str) -> Result<Monitor, SourceError> {
    parse_with(src, false, Parser::monitor)
}

pub fn parse_open_monitor(src: &str) -> Result<Monitor, SourceError> {
    parse_with(src, true, Parser::monitor)
}

pub fn parse_expr(src: &str) -> Result<Expr, SourceError> {
    parse_with(src, true, Parser::expr)
}

pub fn parse_base_type(src: &str) -> Result<BaseType, SourceError> {
    parse_with(src, true, Parser::base_type)
}

fn parse_with<'a, T>(
    src: &'a str,
    allow_free: bool,
    f: impl FnOnce(&mut Parser<'a>) -> Result<T, SourceError>,
) -> Result<T, SourceError> {
    let mut p = Parser::new(src, allow_free)?;
    let out = f(&mut p)?;
    p.finish()?;
    Ok(out)
}
