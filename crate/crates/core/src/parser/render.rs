use std::fmt::Write;

use crate::model::{
    BaseType, BinOp, Expr, MonitorBranch, Monitor, Process, RecvBranch, SessionType, TypeBranch, Value,
};

const OR: u8 = 1;
const AND: u8 = 2;
const NOT: u8 = 3;
const CMP: u8 = 4;
const ADD: u8 = 5;
const ATOM: u8 = 6;

fn prec(e: &Expr) -> u8 {
    match e {
        Expr::Bin(BinOp::Or, ..) => OR,
        Expr::Bin(BinOp::And, ..) => AND,
        Expr::Not(_) => NOT,
        Expr::Bin(BinOp::Add | BinOp::Sub, ..) => ADD,
        Expr::Bin(..) => CMP,
        _ => ATOM,
    }
}

pub fn render_expr(e: &Expr) -> String {
    let mut out = String::new();
    expr_into(&mut out, e, OR);
    out
}

fn expr_into(out: &mut String, e: &Expr, min: u8) {
    let p = prec(e);
    if p < min {
        out.push('(');
    }
    match e {
        Expr::Lit(v) => lit_into(out, v),
        Expr::Var(x) => out.push_str(x.as_str()),
        Expr::Not(inner) => {
            out.push('!');
            expr_into(out, inner, NOT);
        }
        Expr::Bin(op, a, b) => {
            let (l, r) = match op {
                BinOp::Or => (OR, AND),
                BinOp::And => (AND, NOT),
                BinOp::Add | BinOp::Sub => (ADD, ATOM),
                _ => (ADD, ADD),
            };
            expr_into(out, a, l);
            let _ = write!(out, " {} ", op.symbol());
            expr_into(out, b, r);
        }
        Expr::IsType(ty, inner) => {
            match ty {
                BaseType::Int | BaseType::Str | BaseType::Bool => {
                    let _ = write!(out, "is_{ty}(");
                }
                BaseType::Tuple(_) => {
                    let _ = write!(out, "is<{ty}>(");
                }
            }
            expr_into(out, inner, OR);
            out.push(')');
        }
        Expr::Call(name, args) => {
            out.push_str(name.as_str());
            list_into(out, args, false);
        }
        Expr::Tuple(items) => list_into(out, items, true),
    }
    if p < min {
        out.push(')');
    }
}

fn lit_into(out: &mut String, v: &Value) {
    match v {
        Value::Bool(true) => out.push_str("tt"),
        Value::Bool(false) => out.push_str("ff"),
        Value::Tuple(items) => {
            out.push('(');
            for (i, item) in items.iter().enumerate() {
                if i > 0 {
                    out.push_str(", ");
                }
                lit_into(out, item);
            }
            out.push_str(if items.len() == 1 { ",)" } else { ")" });
        }
        other => {
            let _ = write!(out, "{other}");
        }
    }
}

fn list_into(out: &mut String, items: &[Expr], tuple: bool) {
    out.push('(');
    for (i, a) in items.iter().enumerate() {
        if i > 0 {
            out.push_str(", ");
        }
        expr_into(out, a, OR);
    }
    if tuple && items.len() == 1 {
        out.push(',');
    }
    out.push(')');
}

pub fn render_type(s: &SessionType) -> String {
    let mut out = String::new();
    type_into(&mut out, s);
    out
}

fn type_into(out: &mut String, s: &SessionType) {
    match s {
        SessionType::End => out.push_str("end"),
        SessionType::Var(x) => out.push_str(x.as_str()),
        SessionType::Rec(x, body) => {
            let _ = write!(out, "rec {x}. ");
            type_into(out, body);
        }
        SessionType::Select(bs) | SessionType::Branch(bs) => {
            let (open, marker) = if matches!(s, SessionType::Select(_)) { ("+{", '!') } else { ("&{", '?') };
            if let [b] = bs.as_slice() {
                out.push(marker);
                type_branch_into(out, b);
                return;
            }
            out.push_str(open);
            for (i, b) in bs.iter().enumerate() {
                if i > 0 {
                    out.push_str(", ");
                }
                out.push(marker);
                type_branch_into(out, b);
            }
            out.push('}');
        }
    }
}

fn type_branch_into(out: &mut String, b: &TypeBranch) {
    let _ = write!(out, "{}(", b.label);
    for (i, p) in b.params.iter().enumerate() {
        if i > 0 {
            out.push_str(", ");
        }
        let _ = write!(out, "{}:{}", p.name, p.ty);
    }
    out.push(')');
    if !b.assertion.is_trivially_true() {
        out.push('[');
        expr_into(out, &b.assertion, OR);
        out.push(']');
    }
    if b.cont != SessionType::End {
        out.push('.');
        type_into(out, &b.cont);
    }
}

pub fn render_process(p: &Process) -> String {
    let mut out = String::new();
    process_into(&mut out, p);
    out
}

fn process_into(out: &mut String, p: &Process) {
    match p {
        Process::Nil => out.push('0'),
        Process::Var(x) => out.push_str(x.as_str()),
        Process::Rec(x, body) => {
            let _ = write!(out, "rec {x}. ");
            process_into(out, body);
        }
        Process::Send { label, args, cont } => {
            let _ = write!(out, "send {label}");
            list_into(out, args, false);
            out.push_str(". ");
            process_into(out, cont);
        }
        Process::Recv(bs) => {
            out.push_str("recv {");
            for (i, RecvBranch { label, params, cont }) in bs.iter().enumerate() {
                if i > 0 {
                    out.push_str(", ");
                }
                let names: Vec<&str> = params.iter().map(|n| n.as_str()).collect();
                let _ = write!(out, "{label}({}). ", names.join(", "));
                process_into(out, cont);
            }
            out.push('}');
        }
        Process::If { cond, then, els } => {
            out.push_str("if ");
            expr_into(out, cond, OR);
            out.push_str(" then ");
            process_into(out, then);
            out.push_str(" else ");
            process_into(out, els);
        }
    }
}

pub fn render_monitor(m: &Monitor) -> String {
    let mut out = String::new();
    monitor_into(&mut out, m);
    out
}

fn monitor_into(out: &mut String, m: &Monitor) {
    match m {
        Monitor::Nil => out.push('0'),
        Monitor::Verdict(k) => out.push_str(k.keyword()),
        Monitor::Var(x) => out.push_str(x.as_str()),
        Monitor::Rec(x, body) => {
            let _ = write!(out, "rec {x}. ");
            monitor_into(out, body);
        }
        Monitor::RecvInternal(bs) | Monitor::RecvExternal(bs) => {
            out.push_str(if matches!(m, Monitor::RecvInternal(_)) { "recv_int {" } else { "recv_ext {" });
            for (i, MonitorBranch { label, params, cont }) in bs.iter().enumerate() {
                if i > 0 {
                    out.push_str(", ");
                }
                let _ = write!(out, "{label}(");
                for (j, p) in params.iter().enumerate() {
                    if j > 0 {
                        out.push_str(", ");
                    }
                    out.push_str(p.name.as_str());
                    if let Some(ty) = &p.ty {
                        let _ = write!(out, ":{ty}");
                    }
                }
                out.push_str("). ");
                monitor_into(out, cont);
            }
            out.push('}');
        }
        Monitor::SendInternal { label, args, cont } | Monitor::SendExternal { label, args, cont } => {
            let kw = if matches!(m, Monitor::SendInternal { .. }) { "send_int" } else { "send_ext" };
            let _ = write!(out, "{kw} {label}");
            list_into(out, args, false);
            out.push_str(". ");
            monitor_into(out, cont);
        }
        Monitor::If { cond, then, els } => {
            out.push_str("if ");
            expr_into(out, cond, OR);
            out.push_str(" then ");
            monitor_into(out, then);
            out.push_str(" else ");
            monitor_into(out, els);
        }
    }
}
