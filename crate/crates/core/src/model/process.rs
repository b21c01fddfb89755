use std::collections::BTreeSet;

use super::{fresh_name, Expr, Label, Name, RecVar, Value};

#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct RecvBranch {
    pub label: Label,
    pub params: Vec<Name>,
    pub cont: Process,
}

impl RecvBranch {
    pub fn new(label: impl Into<Label>, params: Vec<Name>, cont: Process) -> Self {
        Self { label: label.into(), params, cont }
    }
}

/// Terms of the monitored-component calculus.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Process {
    Send { label: Label, args: Vec<Expr>, cont: Box<Process> },
    Recv(Vec<RecvBranch>),
    Rec(RecVar, Box<Process>),
    Var(RecVar),
    If { cond: Expr, then: Box<Process>, els: Box<Process> },
    Nil,
}

impl Process {
    pub fn send(label: impl Into<Label>, args: Vec<Expr>, cont: Process) -> Self {
        Process::Send { label: label.into(), args, cont: Box::new(cont) }
    }

    pub fn rec(x: impl Into<RecVar>, body: Process) -> Self {
        Process::Rec(x.into(), Box::new(body))
    }

    pub fn var(x: impl Into<RecVar>) -> Self {
        Process::Var(x.into())
    }

    pub fn if_(cond: Expr, then: Process, els: Process) -> Self {
        Process::If { cond, then: Box::new(then), els: Box::new(els) }
    }

    /// Free value variables.
    pub fn fv(&self) -> BTreeSet<Name> {
        match self {
            Process::Send { args, cont, .. } => {
                let mut out = cont.fv();
                args.iter().for_each(|a| out.extend(a.free_vars()));
                out
            }
            Process::Recv(bs) => bs
                .iter()
                .flat_map(|b| {
                    let mut s = b.cont.fv();
                    b.params.iter().for_each(|p| {
                        s.remove(p);
                    });
                    s
                })
                .collect(),
            Process::Rec(_, body) => body.fv(),
            Process::Var(_) | Process::Nil => BTreeSet::new(),
            Process::If { cond, then, els } => {
                let mut out = cond.free_vars();
                out.extend(then.fv());
                out.extend(els.fv());
                out
            }
        }
    }

    /// Free process variables.
    pub fn fpv(&self) -> BTreeSet<RecVar> {
        match self {
            Process::Send { cont, .. } => cont.fpv(),
            Process::Recv(bs) => bs.iter().flat_map(|b| b.cont.fpv()).collect(),
            Process::Rec(x, body) => {
                let mut s = body.fpv();
                s.remove(x);
                s
            }
            Process::Var(x) => BTreeSet::from([x.clone()]),
            Process::If { then, els, .. } => {
                let mut s = then.fpv();
                s.extend(els.fpv());
                s
            }
            Process::Nil => BTreeSet::new(),
        }
    }

    pub fn is_closed(&self) -> bool {
        self.fv().is_empty() && self.fpv().is_empty()
    }

    /// `self[v/x]`. Values are closed, so only shadowing needs care.
    pub fn substitute_value(&self, x: &Name, v: &Value) -> Process {
        match self {
            Process::Send { label, args, cont } => Process::Send {
                label: label.clone(),
                args: args.iter().map(|a| a.substitute(x, v)).collect(),
                cont: Box::new(cont.substitute_value(x, v)),
            },
            Process::Recv(bs) => Process::Recv(
                bs.iter()
                    .map(|b| {
                        let cont = if b.params.contains(x) { b.cont.clone() } else { b.cont.substitute_value(x, v) };
                        RecvBranch { label: b.label.clone(), params: b.params.clone(), cont }
                    })
                    .collect(),
            ),
            Process::Rec(y, body) => Process::Rec(y.clone(), Box::new(body.substitute_value(x, v))),
            Process::Var(_) | Process::Nil => self.clone(),
            Process::If { cond, then, els } => Process::If {
                cond: cond.substitute(x, v),
                then: Box::new(then.substitute_value(x, v)),
                els: Box::new(els.substitute_value(x, v)),
            },
        }
    }

    /// Simultaneous substitution of received payloads for binders.
    pub fn substitute_values<'a>(&self, bindings: impl IntoIterator<Item = (&'a Name, &'a Value)>) -> Process {
        bindings.into_iter().fold(self.clone(), |p, (x, v)| p.substitute_value(x, v))
    }

    fn rename_value(&self, from: &Name, to: &Name) -> Process {
        match self {
            Process::Send { label, args, cont } => Process::Send {
                label: label.clone(),
                args: args.iter().map(|a| a.rename(from, to)).collect(),
                cont: Box::new(cont.rename_value(from, to)),
            },
            Process::Recv(bs) => Process::Recv(
                bs.iter()
                    .map(|b| {
                        let cont = if b.params.contains(from) { b.cont.clone() } else { b.cont.rename_value(from, to) };
                        RecvBranch { label: b.label.clone(), params: b.params.clone(), cont }
                    })
                    .collect(),
            ),
            Process::Rec(y, body) => Process::Rec(y.clone(), Box::new(body.rename_value(from, to))),
            Process::Var(_) | Process::Nil => self.clone(),
            Process::If { cond, then, els } => Process::If {
                cond: cond.rename(from, to),
                then: Box::new(then.rename_value(from, to)),
                els: Box::new(els.rename_value(from, to)),
            },
        }
    }

    fn all_names(&self, out: &mut BTreeSet<String>) {
        match self {
            Process::Send { args, cont, .. } => {
                args.iter().for_each(|a| out.extend(a.free_vars().into_iter().map(|n| n.to_string())));
                cont.all_names(out);
            }
            Process::Recv(bs) => {
                for b in bs {
                    out.extend(b.params.iter().map(|n| n.to_string()));
                    b.cont.all_names(out);
                }
            }
            Process::Rec(x, body) => {
                out.insert(x.to_string());
                body.all_names(out);
            }
            Process::Var(x) => {
                out.insert(x.to_string());
            }
            Process::If { cond, then, els } => {
                out.extend(cond.free_vars().into_iter().map(|n| n.to_string()));
                then.all_names(out);
                els.all_names(out);
            }
            Process::Nil => {}
        }
    }

    /// Capture-avoiding `self[q/x]`.
    pub fn substitute_pvar(&self, x: &RecVar, q: &Process) -> Process {
        let q_pvars = q.fpv();
        let q_vars = q.fv();
        self.subst(x, q, &q_pvars, &q_vars)
    }

    fn subst(&self, x: &RecVar, q: &Process, q_pvars: &BTreeSet<RecVar>, q_vars: &BTreeSet<Name>) -> Process {
        match self {
            Process::Var(y) if y == x => q.clone(),
            Process::Var(_) | Process::Nil => self.clone(),
            Process::Rec(y, _) if y == x => self.clone(),
            Process::Rec(y, body) => {
                if q_pvars.contains(y) && body.fpv().contains(x) {
                    let mut avoid = BTreeSet::new();
                    body.all_names(&mut avoid);
                    q.all_names(&mut avoid);
                    let fresh = RecVar::new(fresh_name(y.as_str(), &avoid));
                    let renamed = body.substitute_pvar(y, &Process::Var(fresh.clone()));
                    Process::Rec(fresh, Box::new(renamed.subst(x, q, q_pvars, q_vars)))
                } else {
                    Process::Rec(y.clone(), Box::new(body.subst(x, q, q_pvars, q_vars)))
                }
            }
            Process::Send { label, args, cont } => Process::Send {
                label: label.clone(),
                args: args.clone(),
                cont: Box::new(cont.subst(x, q, q_pvars, q_vars)),
            },
            Process::If { cond, then, els } => Process::If {
                cond: cond.clone(),
                then: Box::new(then.subst(x, q, q_pvars, q_vars)),
                els: Box::new(els.subst(x, q, q_pvars, q_vars)),
            },
            Process::Recv(bs) => Process::Recv(
                bs.iter()
                    .map(|b| {
                        let mut params = b.params.clone();
                        let mut cont = b.cont.clone();
                        if cont.fpv().contains(x) {
                            for i in 0..params.len() {
                                if q_vars.contains(&params[i]) {
                                    let mut avoid = BTreeSet::new();
                                    cont.all_names(&mut avoid);
                                    q.all_names(&mut avoid);
                                    avoid.extend(params.iter().map(|n| n.to_string()));
                                    let fresh = Name::new(fresh_name(params[i].as_str(), &avoid));
                                    cont = cont.rename_value(&params[i], &fresh);
                                    params[i] = fresh;
                                }
                            }
                        }
                        RecvBranch { label: b.label.clone(), params, cont: cont.subst(x, q, q_pvars, q_vars) }
                    })
                    .collect(),
            ),
        }
    }

    /// Process variables that occur without an intervening send/receive
    /// prefix below their binder.
    pub fn unguarded_vars(&self) -> BTreeSet<RecVar> {
        let mut out = BTreeSet::new();
        self.collect_unguarded(&mut Vec::new(), &mut out);
        out
    }

    fn collect_unguarded(&self, pending: &mut Vec<RecVar>, out: &mut BTreeSet<RecVar>) {
        match self {
            Process::Send { cont, .. } => cont.collect_unguarded(&mut Vec::new(), out),
            Process::Recv(bs) => bs.iter().for_each(|b| b.cont.collect_unguarded(&mut Vec::new(), out)),
            Process::Rec(x, body) => {
                pending.push(x.clone());
                body.collect_unguarded(pending, out);
                pending.pop();
            }
            Process::Var(x) if pending.contains(x) => {
                out.insert(x.clone());
            }
            Process::Var(_) | Process::Nil => {}
            Process::If { then, els, .. } => {
                then.collect_unguarded(&mut pending.clone(), out);
                els.collect_unguarded(pending, out);
            }
        }
    }

    pub fn size(&self) -> usize {
        match self {
            Process::Send { cont, .. } => 1 + cont.size(),
            Process::Recv(bs) => 1 + bs.iter().map(|b| b.cont.size()).sum::<usize>(),
            Process::Rec(_, body) => 1 + body.size(),
            Process::Var(_) | Process::Nil => 1,
            Process::If { then, els, .. } => 1 + then.size() + els.size(),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn substitute_payload_in_send() {
        let p = Process::send("Auth", vec![Expr::var("uname"), Expr::Lit(Value::str("pwd"))], Process::Nil);
        let q = p.substitute_value(&Name::from("uname"), &Value::str("Bob"));
        assert_eq!(q, Process::send("Auth", vec![Expr::Lit(Value::str("Bob")), Expr::Lit(Value::str("pwd"))], Process::Nil));
    }

    #[test]
    fn bound_variable_is_shadowed() {
        let body = Process::send("A", vec![Expr::var("x")], Process::Nil);
        let p = Process::Recv(vec![RecvBranch::new("L", vec!["x".into()], body)]);
        assert_eq!(p.substitute_value(&Name::from("x"), &Value::Int(1)), p);
    }

    #[test]
    fn unfold_ping() {
        let body = Process::send("Ping", vec![], Process::var("X"));
        let p = Process::rec("X", body);
        let Process::Rec(x, b) = &p else { unreachable!() };
        let unfolded = b.substitute_pvar(x, &p);
        assert_eq!(unfolded, Process::send("Ping", vec![], p.clone()));
    }

    #[test]
    fn receive_binder_capture_is_avoided() {
        // recv{C(x). X}[send B(x).0 / X] must keep x free.
        let p = Process::Recv(vec![RecvBranch::new("C", vec!["x".into()], Process::var("X"))]);
        let q = Process::send("B", vec![Expr::var("x")], Process::Nil);
        let out = p.substitute_pvar(&RecVar::from("X"), &q);
        assert_eq!(out.fv(), BTreeSet::from([Name::from("x")]));
    }

    #[test]
    fn guardedness() {
        assert!(!Process::rec("X", Process::var("X")).unguarded_vars().is_empty());
        assert!(!Process::rec("X", Process::if_(Expr::tt(), Process::var("X"), Process::Nil)).unguarded_vars().is_empty());
        assert!(Process::rec("X", Process::send("A", vec![], Process::var("X"))).unguarded_vars().is_empty());
    }
}
