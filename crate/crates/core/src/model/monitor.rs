use std::collections::BTreeSet;
use std::fmt;

use super::{fresh_name, BaseType, Expr, Label, Name, RecVar};

/// A receive binder. Synthesized monitors record the declared payload type,
/// which the explorer uses to enumerate environment inputs.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct MonParam {
    pub name: Name,
    pub ty: Option<BaseType>,
}

impl MonParam {
    pub fn new(name: impl Into<Name>, ty: Option<BaseType>) -> Self {
        Self { name: name.into(), ty }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct MonitorBranch {
    pub label: Label,
    pub params: Vec<MonParam>,
    pub cont: Monitor,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum VerdictKind {
    NoPLabel,
    NoELabel,
    NoPAssert,
    NoEAssert,
}

impl VerdictKind {
    /// True when the verdict blames the monitored process.
    pub fn blames_process(self) -> bool {
        matches!(self, VerdictKind::NoPLabel | VerdictKind::NoPAssert)
    }

    pub fn keyword(self) -> &'static str {
        match self {
            VerdictKind::NoPLabel => "no_P",
            VerdictKind::NoELabel => "no_E",
            VerdictKind::NoPAssert => "no_P_assert",
            VerdictKind::NoEAssert => "no_E_assert",
        }
    }

    pub fn from_keyword(s: &str) -> Option<Self> {
        [VerdictKind::NoPLabel, VerdictKind::NoELabel, VerdictKind::NoPAssert, VerdictKind::NoEAssert]
            .into_iter()
            .find(|k| k.keyword() == s)
    }
}

impl fmt::Display for VerdictKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.keyword())
    }
}

/// Monitor terms. "Internal" faces the monitored process, "external" the
/// environment.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Monitor {
    RecvInternal(Vec<MonitorBranch>),
    SendInternal { label: Label, args: Vec<Expr>, cont: Box<Monitor> },
    RecvExternal(Vec<MonitorBranch>),
    SendExternal { label: Label, args: Vec<Expr>, cont: Box<Monitor> },
    Rec(RecVar, Box<Monitor>),
    Var(RecVar),
    If { cond: Expr, then: Box<Monitor>, els: Box<Monitor> },
    Nil,
    Verdict(VerdictKind),
}

impl Monitor {
    pub fn rec(x: impl Into<RecVar>, body: Monitor) -> Self {
        Monitor::Rec(x.into(), Box::new(body))
    }

    pub fn if_(cond: Expr, then: Monitor, els: Monitor) -> Self {
        Monitor::If { cond, then: Box::new(then), els: Box::new(els) }
    }

    pub fn fpv(&self) -> BTreeSet<RecVar> {
        match self {
            Monitor::RecvInternal(bs) | Monitor::RecvExternal(bs) => bs.iter().flat_map(|b| b.cont.fpv()).collect(),
            Monitor::SendInternal { cont, .. } | Monitor::SendExternal { cont, .. } => cont.fpv(),
            Monitor::Rec(x, body) => {
                let mut s = body.fpv();
                s.remove(x);
                s
            }
            Monitor::Var(x) => BTreeSet::from([x.clone()]),
            Monitor::If { then, els, .. } => {
                let mut s = then.fpv();
                s.extend(els.fpv());
                s
            }
            Monitor::Nil | Monitor::Verdict(_) => BTreeSet::new(),
        }
    }

    /// Free value variables (those read from the payload map at runtime).
    pub fn fv(&self) -> BTreeSet<Name> {
        match self {
            Monitor::RecvInternal(bs) | Monitor::RecvExternal(bs) => bs
                .iter()
                .flat_map(|b| {
                    let mut s = b.cont.fv();
                    b.params.iter().for_each(|p| {
                        s.remove(&p.name);
                    });
                    s
                })
                .collect(),
            Monitor::SendInternal { args, cont, .. } | Monitor::SendExternal { args, cont, .. } => {
                let mut s = cont.fv();
                args.iter().for_each(|a| s.extend(a.free_vars()));
                s
            }
            Monitor::Rec(_, body) => body.fv(),
            Monitor::If { cond, then, els } => {
                let mut s = cond.free_vars();
                s.extend(then.fv());
                s.extend(els.fv());
                s
            }
            Monitor::Var(_) | Monitor::Nil | Monitor::Verdict(_) => BTreeSet::new(),
        }
    }

    fn all_names(&self, out: &mut BTreeSet<String>) {
        match self {
            Monitor::RecvInternal(bs) | Monitor::RecvExternal(bs) => {
                for b in bs {
                    out.extend(b.params.iter().map(|p| p.name.to_string()));
                    b.cont.all_names(out);
                }
            }
            Monitor::SendInternal { args, cont, .. } | Monitor::SendExternal { args, cont, .. } => {
                args.iter().for_each(|a| out.extend(a.free_vars().into_iter().map(|n| n.to_string())));
                cont.all_names(out);
            }
            Monitor::Rec(x, body) => {
                out.insert(x.to_string());
                body.all_names(out);
            }
            Monitor::Var(x) => {
                out.insert(x.to_string());
            }
            Monitor::If { cond, then, els } => {
                out.extend(cond.free_vars().into_iter().map(|n| n.to_string()));
                then.all_names(out);
                els.all_names(out);
            }
            Monitor::Nil | Monitor::Verdict(_) => {}
        }
    }

    fn rename_value(&self, from: &Name, to: &Name) -> Monitor {
        let branches = |bs: &[MonitorBranch]| -> Vec<MonitorBranch> {
            bs.iter()
                .map(|b| {
                    let shadowed = b.params.iter().any(|p| &p.name == from);
                    let cont = if shadowed { b.cont.clone() } else { b.cont.rename_value(from, to) };
                    MonitorBranch { label: b.label.clone(), params: b.params.clone(), cont }
                })
                .collect()
        };
        let args = |a: &[Expr]| a.iter().map(|e| e.rename(from, to)).collect::<Vec<_>>();
        match self {
            Monitor::RecvInternal(bs) => Monitor::RecvInternal(branches(bs)),
            Monitor::RecvExternal(bs) => Monitor::RecvExternal(branches(bs)),
            Monitor::SendInternal { label, args: a, cont } => Monitor::SendInternal {
                label: label.clone(),
                args: args(a),
                cont: Box::new(cont.rename_value(from, to)),
            },
            Monitor::SendExternal { label, args: a, cont } => Monitor::SendExternal {
                label: label.clone(),
                args: args(a),
                cont: Box::new(cont.rename_value(from, to)),
            },
            Monitor::Rec(y, body) => Monitor::Rec(y.clone(), Box::new(body.rename_value(from, to))),
            Monitor::If { cond, then, els } => Monitor::If {
                cond: cond.rename(from, to),
                then: Box::new(then.rename_value(from, to)),
                els: Box::new(els.rename_value(from, to)),
            },
            Monitor::Var(_) | Monitor::Nil | Monitor::Verdict(_) => self.clone(),
        }
    }

    /// Capture-avoiding `self[n/x]`.
    pub fn substitute_pvar(&self, x: &RecVar, n: &Monitor) -> Monitor {
        self.subst(x, n, &n.fpv(), &n.fv())
    }

    fn subst(&self, x: &RecVar, n: &Monitor, n_pvars: &BTreeSet<RecVar>, n_vars: &BTreeSet<Name>) -> Monitor {
        let branches = |bs: &[MonitorBranch]| -> Vec<MonitorBranch> {
            bs.iter()
                .map(|b| {
                    let mut params = b.params.clone();
                    let mut cont = b.cont.clone();
                    if cont.fpv().contains(x) {
                        for i in 0..params.len() {
                            if n_vars.contains(&params[i].name) {
                                let mut avoid = BTreeSet::new();
                                cont.all_names(&mut avoid);
                                n.all_names(&mut avoid);
                                avoid.extend(params.iter().map(|p| p.name.to_string()));
                                let fresh = Name::new(fresh_name(params[i].name.as_str(), &avoid));
                                cont = cont.rename_value(&params[i].name, &fresh);
                                params[i].name = fresh;
                            }
                        }
                    }
                    MonitorBranch { label: b.label.clone(), params, cont: cont.subst(x, n, n_pvars, n_vars) }
                })
                .collect()
        };
        match self {
            Monitor::Var(y) if y == x => n.clone(),
            Monitor::Var(_) | Monitor::Nil | Monitor::Verdict(_) => self.clone(),
            Monitor::Rec(y, _) if y == x => self.clone(),
            Monitor::Rec(y, body) => {
                if n_pvars.contains(y) && body.fpv().contains(x) {
                    let mut avoid = BTreeSet::new();
                    body.all_names(&mut avoid);
                    n.all_names(&mut avoid);
                    let fresh = RecVar::new(fresh_name(y.as_str(), &avoid));
                    let renamed = body.substitute_pvar(y, &Monitor::Var(fresh.clone()));
                    Monitor::Rec(fresh, Box::new(renamed.subst(x, n, n_pvars, n_vars)))
                } else {
                    Monitor::Rec(y.clone(), Box::new(body.subst(x, n, n_pvars, n_vars)))
                }
            }
            Monitor::RecvInternal(bs) => Monitor::RecvInternal(branches(bs)),
            Monitor::RecvExternal(bs) => Monitor::RecvExternal(branches(bs)),
            Monitor::SendInternal { label, args, cont } => Monitor::SendInternal {
                label: label.clone(),
                args: args.clone(),
                cont: Box::new(cont.subst(x, n, n_pvars, n_vars)),
            },
            Monitor::SendExternal { label, args, cont } => Monitor::SendExternal {
                label: label.clone(),
                args: args.clone(),
                cont: Box::new(cont.subst(x, n, n_pvars, n_vars)),
            },
            Monitor::If { cond, then, els } => Monitor::If {
                cond: cond.clone(),
                then: Box::new(then.subst(x, n, n_pvars, n_vars)),
                els: Box::new(els.subst(x, n, n_pvars, n_vars)),
            },
        }
    }

    pub fn unguarded_vars(&self) -> BTreeSet<RecVar> {
        let mut out = BTreeSet::new();
        self.collect_unguarded(&mut Vec::new(), &mut out);
        out
    }

    fn collect_unguarded(&self, pending: &mut Vec<RecVar>, out: &mut BTreeSet<RecVar>) {
        match self {
            Monitor::RecvInternal(bs) | Monitor::RecvExternal(bs) => {
                bs.iter().for_each(|b| b.cont.collect_unguarded(&mut Vec::new(), out))
            }
            Monitor::SendInternal { cont, .. } | Monitor::SendExternal { cont, .. } => {
                cont.collect_unguarded(&mut Vec::new(), out)
            }
            Monitor::Rec(x, body) => {
                pending.push(x.clone());
                body.collect_unguarded(pending, out);
                pending.pop();
            }
            Monitor::Var(x) if pending.contains(x) => {
                out.insert(x.clone());
            }
            Monitor::If { then, els, .. } => {
                then.collect_unguarded(&mut pending.clone(), out);
                els.collect_unguarded(pending, out);
            }
            Monitor::Var(_) | Monitor::Nil | Monitor::Verdict(_) => {}
        }
    }

    /// All verdicts occurring syntactically in the term.
    pub fn verdicts(&self) -> BTreeSet<VerdictKind> {
        let mut out = BTreeSet::new();
        self.collect_verdicts(&mut out);
        out
    }

    fn collect_verdicts(&self, out: &mut BTreeSet<VerdictKind>) {
        match self {
            Monitor::RecvInternal(bs) | Monitor::RecvExternal(bs) => bs.iter().for_each(|b| b.cont.collect_verdicts(out)),
            Monitor::SendInternal { cont, .. } | Monitor::SendExternal { cont, .. } | Monitor::Rec(_, cont) => {
                cont.collect_verdicts(out)
            }
            Monitor::If { then, els, .. } => {
                then.collect_verdicts(out);
                els.collect_verdicts(out);
            }
            Monitor::Verdict(k) => {
                out.insert(*k);
            }
            Monitor::Var(_) | Monitor::Nil => {}
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn verdict_keywords_round_trip() {
        for k in [VerdictKind::NoPLabel, VerdictKind::NoELabel, VerdictKind::NoPAssert, VerdictKind::NoEAssert] {
            assert_eq!(VerdictKind::from_keyword(k.keyword()), Some(k));
        }
        assert!(VerdictKind::NoPAssert.blames_process());
        assert!(!VerdictKind::NoELabel.blames_process());
    }

    #[test]
    fn unfold_monitor() {
        let body = Monitor::SendExternal { label: "Ping".into(), args: vec![], cont: Box::new(Monitor::Var("Y".into())) };
        let m = Monitor::rec("Y", body);
        let Monitor::Rec(y, b) = &m else { unreachable!() };
        let out = b.substitute_pvar(y, &m);
        assert!(out.fpv().is_empty());
        assert!(m.unguarded_vars().is_empty());
    }
}
