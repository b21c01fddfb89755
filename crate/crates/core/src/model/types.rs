use std::collections::BTreeSet;

use super::{fresh_name, BaseType, Expr, Label, Name, RecVar};

#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Param {
    pub name: Name,
    pub ty: BaseType,
}

impl Param {
    pub fn new(name: impl Into<Name>, ty: BaseType) -> Self {
        Self { name: name.into(), ty }
    }
}

/// One labelled alternative of a choice: `l(x1:B1, ..)[A].S`.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct TypeBranch {
    pub label: Label,
    pub params: Vec<Param>,
    pub assertion: Expr,
    pub cont: SessionType,
}

impl TypeBranch {
    pub fn new(label: impl Into<Label>, params: Vec<Param>, cont: SessionType) -> Self {
        Self { label: label.into(), params, assertion: Expr::tt(), cont }
    }

    pub fn with_assertion(mut self, a: Expr) -> Self {
        self.assertion = a;
        self
    }

    pub fn param_names(&self) -> impl Iterator<Item = &Name> {
        self.params.iter().map(|p| &p.name)
    }
}

/// Binary session types. Branch order is source order.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum SessionType {
    /// Internal choice: this party sends one of the labels.
    Select(Vec<TypeBranch>),
    /// External choice: this party receives one of the labels.
    Branch(Vec<TypeBranch>),
    Rec(RecVar, Box<SessionType>),
    Var(RecVar),
    End,
}

impl SessionType {
    pub fn rec(x: impl Into<RecVar>, body: SessionType) -> Self {
        SessionType::Rec(x.into(), Box::new(body))
    }

    pub fn var(x: impl Into<RecVar>) -> Self {
        SessionType::Var(x.into())
    }

    pub fn branches(&self) -> Option<&[TypeBranch]> {
        match self {
            SessionType::Select(bs) | SessionType::Branch(bs) => Some(bs),
            _ => None,
        }
    }

    pub fn free_vars(&self) -> BTreeSet<RecVar> {
        let mut out = BTreeSet::new();
        self.collect_free_vars(&mut Vec::new(), &mut out);
        out
    }

    fn collect_free_vars(&self, bound: &mut Vec<RecVar>, out: &mut BTreeSet<RecVar>) {
        match self {
            SessionType::Select(bs) | SessionType::Branch(bs) => {
                bs.iter().for_each(|b| b.cont.collect_free_vars(bound, out));
            }
            SessionType::Rec(x, body) => {
                bound.push(x.clone());
                body.collect_free_vars(bound, out);
                bound.pop();
            }
            SessionType::Var(x) if !bound.contains(x) => {
                out.insert(x.clone());
            }
            SessionType::Var(_) | SessionType::End => {}
        }
    }

    pub fn is_closed(&self) -> bool {
        self.free_vars().is_empty()
    }

    /// Payload names occurring free in assertions, i.e. not declared by an
    /// enclosing prefix of the type itself.
    pub fn free_value_names(&self) -> BTreeSet<Name> {
        let mut out = BTreeSet::new();
        self.collect_value_names(&mut Vec::new(), &mut out);
        out
    }

    fn collect_value_names(&self, scope: &mut Vec<Name>, out: &mut BTreeSet<Name>) {
        match self {
            SessionType::Select(bs) | SessionType::Branch(bs) => {
                for b in bs {
                    let mark = scope.len();
                    scope.extend(b.param_names().cloned());
                    out.extend(b.assertion.free_vars().into_iter().filter(|n| !scope.contains(n)));
                    b.cont.collect_value_names(scope, out);
                    scope.truncate(mark);
                }
            }
            SessionType::Rec(_, body) => body.collect_value_names(scope, out),
            SessionType::Var(_) | SessionType::End => {}
        }
    }

    fn all_names(&self, out: &mut BTreeSet<String>) {
        match self {
            SessionType::Select(bs) | SessionType::Branch(bs) => {
                for b in bs {
                    out.extend(b.param_names().map(|n| n.to_string()));
                    out.extend(b.assertion.free_vars().into_iter().map(|n| n.to_string()));
                    b.cont.all_names(out);
                }
            }
            SessionType::Rec(x, body) => {
                out.insert(x.to_string());
                body.all_names(out);
            }
            SessionType::Var(x) => {
                out.insert(x.to_string());
            }
            SessionType::End => {}
        }
    }

    /// Capture-avoiding `self[r/x]`. Binders of recursion variables and of
    /// payload names are renamed when they would capture a free name of `r`.
    pub fn substitute(&self, x: &RecVar, r: &SessionType) -> SessionType {
        let r_vars = r.free_vars();
        let r_names = r.free_value_names();
        self.subst(x, r, &r_vars, &r_names)
    }

    fn subst(&self, x: &RecVar, r: &SessionType, r_vars: &BTreeSet<RecVar>, r_names: &BTreeSet<Name>) -> SessionType {
        match self {
            SessionType::End => SessionType::End,
            SessionType::Var(y) if y == x => r.clone(),
            SessionType::Var(_) => self.clone(),
            SessionType::Rec(y, _) if y == x => self.clone(),
            SessionType::Rec(y, body) => {
                if r_vars.contains(y) && body.free_vars().contains(x) {
                    let mut avoid = BTreeSet::new();
                    body.all_names(&mut avoid);
                    r.all_names(&mut avoid);
                    let fresh = RecVar::new(fresh_name(y.as_str(), &avoid));
                    let renamed = body.substitute(y, &SessionType::Var(fresh.clone()));
                    SessionType::Rec(fresh, Box::new(renamed.subst(x, r, r_vars, r_names)))
                } else {
                    SessionType::Rec(y.clone(), Box::new(body.subst(x, r, r_vars, r_names)))
                }
            }
            SessionType::Select(bs) => SessionType::Select(bs.iter().map(|b| b.subst(x, r, r_vars, r_names)).collect()),
            SessionType::Branch(bs) => SessionType::Branch(bs.iter().map(|b| b.subst(x, r, r_vars, r_names)).collect()),
        }
    }

    /// Renames free occurrences of the payload name `from` to `to`.
    fn rename_value(&self, from: &Name, to: &Name) -> SessionType {
        let map = |bs: &[TypeBranch]| -> Vec<TypeBranch> {
            bs.iter()
                .map(|b| {
                    let shadowed = b.param_names().any(|n| n == from);
                    let assertion = if shadowed { b.assertion.clone() } else { b.assertion.rename(from, to) };
                    let cont = if shadowed { b.cont.clone() } else { b.cont.rename_value(from, to) };
                    TypeBranch { label: b.label.clone(), params: b.params.clone(), assertion, cont }
                })
                .collect()
        };
        match self {
            SessionType::Select(bs) => SessionType::Select(map(bs)),
            SessionType::Branch(bs) => SessionType::Branch(map(bs)),
            SessionType::Rec(y, body) => SessionType::Rec(y.clone(), Box::new(body.rename_value(from, to))),
            other => other.clone(),
        }
    }

    /// Strips top-level `rec` binders by unfolding. Returns `None` for an
    /// unguarded type that never reaches a prefix.
    pub fn unfold(&self) -> Option<SessionType> {
        let mut cur = self.clone();
        for _ in 0..=self.rec_depth() {
            match cur {
                SessionType::Rec(ref x, ref body) => {
                    let next = body.substitute(x, &cur);
                    cur = next;
                }
                _ => return Some(cur),
            }
        }
        None
    }

    fn rec_depth(&self) -> usize {
        match self {
            SessionType::Rec(_, body) => 1 + body.rec_depth(),
            _ => 0,
        }
    }

    pub fn has_trivial_assertions(&self) -> bool {
        match self {
            SessionType::Select(bs) | SessionType::Branch(bs) => {
                bs.iter().all(|b| b.assertion.is_trivially_true() && b.cont.has_trivial_assertions())
            }
            SessionType::Rec(_, body) => body.has_trivial_assertions(),
            SessionType::Var(_) | SessionType::End => true,
        }
    }

    pub fn predicate_names(&self) -> BTreeSet<Name> {
        let mut out = BTreeSet::new();
        self.walk_branches(&mut |b| b.assertion.predicate_names(&mut out));
        out
    }

    fn walk_branches(&self, f: &mut impl FnMut(&TypeBranch)) {
        match self {
            SessionType::Select(bs) | SessionType::Branch(bs) => {
                for b in bs {
                    f(b);
                    b.cont.walk_branches(f);
                }
            }
            SessionType::Rec(_, body) => body.walk_branches(f),
            SessionType::Var(_) | SessionType::End => {}
        }
    }

    /// Number of constructors; used to bound generated terms in tests.
    pub fn size(&self) -> usize {
        match self {
            SessionType::Select(bs) | SessionType::Branch(bs) => 1 + bs.iter().map(|b| b.cont.size()).sum::<usize>(),
            SessionType::Rec(_, body) => 1 + body.size(),
            SessionType::Var(_) | SessionType::End => 1,
        }
    }
}

impl TypeBranch {
    fn subst(&self, x: &RecVar, r: &SessionType, r_vars: &BTreeSet<RecVar>, r_names: &BTreeSet<Name>) -> TypeBranch {
        let mut params = self.params.clone();
        let mut assertion = self.assertion.clone();
        let mut cont = self.cont.clone();
        if cont.free_vars().contains(x) {
            for p in params.iter_mut() {
                if r_names.contains(&p.name) {
                    let mut avoid = BTreeSet::new();
                    cont.all_names(&mut avoid);
                    r.all_names(&mut avoid);
                    avoid.extend(assertion.free_vars().into_iter().map(|n| n.to_string()));
                    avoid.extend(self.params.iter().map(|p| p.name.to_string()));
                    let fresh = Name::new(fresh_name(p.name.as_str(), &avoid));
                    assertion = assertion.rename(&p.name, &fresh);
                    cont = cont.rename_value(&p.name, &fresh);
                    p.name = fresh;
                }
            }
        }
        TypeBranch { label: self.label.clone(), params, assertion, cont: cont.subst(x, r, r_vars, r_names) }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ping() -> SessionType {
        SessionType::Select(vec![TypeBranch::new("Ping", vec![], SessionType::var("X"))])
    }

    #[test]
    fn unfold_one_step() {
        let s = SessionType::rec("X", ping());
        let expected = SessionType::Select(vec![TypeBranch::new("Ping", vec![], s.clone())]);
        assert_eq!(s.unfold(), Some(expected));
    }

    #[test]
    fn unguarded_does_not_unfold() {
        let s = SessionType::rec("X", SessionType::var("X"));
        assert_eq!(s.unfold(), None);
    }

    #[test]
    fn shadowed_binder_is_untouched() {
        let s = SessionType::rec("X", ping());
        assert_eq!(s.substitute(&RecVar::from("X"), &SessionType::End), s);
    }

    #[test]
    fn capture_is_avoided() {
        // (rec Y. !Ping().X)[Y/X] must not bind the substituted Y.
        let body = SessionType::rec("Y", ping());
        let out = body.substitute(&RecVar::from("X"), &SessionType::var("Y"));
        assert_eq!(out.free_vars(), BTreeSet::from([RecVar::from("Y")]));
    }

    #[test]
    fn payload_capture_is_avoided() {
        let a = Expr::Call("p".into(), vec![Expr::var("u")]);
        let inner = SessionType::Branch(vec![TypeBranch::new("B", vec![Param::new("u", BaseType::Int)], SessionType::var("X"))]);
        let r = SessionType::Select(vec![TypeBranch::new("C", vec![], SessionType::End).with_assertion(a)]);
        let out = inner.substitute(&RecVar::from("X"), &r);
        assert_eq!(out.free_value_names(), BTreeSet::from([Name::from("u")]));
    }
}
