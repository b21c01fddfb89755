//! Seeded generators for session types, processes that follow them, and
//! single-point mutations that break typing.

use std::fmt;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::model::{BaseType, BinOp, Expr, Label, Name, Param, Process, RecVar, RecvBranch, SessionType, TypeBranch, Value};

const LABELS: [&str; 5] = ["A", "B", "C", "D", "E"];
/// Label used by mutations; never produced for types.
const FOREIGN_LABEL: &str = "Z";

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct GenConfig {
    /// Maximum number of nested choices.
    pub max_depth: usize,
    pub max_fanout: usize,
    pub max_params: usize,
    /// Allow tuple payloads (two components).
    pub tuples: bool,
}

impl Default for GenConfig {
    fn default() -> Self {
        Self { max_depth: 4, max_fanout: 3, max_params: 2, tuples: true }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum MutationKind {
    LabelRename,
    BranchPrune,
    ArgRetype,
    PrematureNil,
}

impl fmt::Display for MutationKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            MutationKind::LabelRename => "label-rename",
            MutationKind::BranchPrune => "branch-prune",
            MutationKind::ArgRetype => "arg-retype",
            MutationKind::PrematureNil => "premature-nil",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Mutant {
    pub kind: MutationKind,
    pub process: Process,
}

pub struct Generator {
    rng: ChaCha8Rng,
    cfg: GenConfig,
    next_param: usize,
    next_var: usize,
}

impl Generator {
    pub fn new(seed: u64) -> Self {
        Self::with_config(seed, GenConfig::default())
    }

    pub fn with_config(seed: u64, cfg: GenConfig) -> Self {
        Self { rng: ChaCha8Rng::seed_from_u64(seed), cfg, next_param: 0, next_var: 0 }
    }

    pub fn rng(&mut self) -> &mut ChaCha8Rng {
        &mut self.rng
    }

    /// A closed, guarded, assertion-free type.
    pub fn session_type(&mut self) -> SessionType {
        self.next_param = 0;
        self.next_var = 0;
        self.gen_type(self.cfg.max_depth, &mut Vec::new(), &mut Vec::new())
    }

    /// An open type whose free variables are drawn from `free`, all guarded.
    pub fn open_session_type(&mut self, free: &[RecVar]) -> SessionType {
        self.next_param = 0;
        let mut guarded = free.to_vec();
        self.gen_choice(self.cfg.max_depth.max(1), &mut guarded, &mut Vec::new())
    }

    fn gen_type(&mut self, depth: usize, guarded: &mut Vec<RecVar>, pending: &mut Vec<RecVar>) -> SessionType {
        let roll = self.rng.gen_range(0..10);
        if depth == 0 || roll == 0 {
            return match guarded.choose(&mut self.rng) {
                Some(x) if self.rng.gen_bool(0.5) => SessionType::Var(x.clone()),
                _ => SessionType::End,
            };
        }
        if roll <= 2 && !guarded.is_empty() {
            return SessionType::Var(guarded.choose(&mut self.rng).unwrap().clone());
        }
        if roll <= 4 {
            let x = RecVar::new(format!("X{}", self.next_var));
            self.next_var += 1;
            pending.push(x.clone());
            let body = self.gen_choice(depth, guarded, pending);
            pending.retain(|y| y != &x);
            guarded.retain(|y| y != &x);
            return SessionType::rec(x, body);
        }
        self.gen_choice(depth, guarded, pending)
    }

    fn gen_choice(&mut self, depth: usize, guarded: &mut Vec<RecVar>, pending: &mut Vec<RecVar>) -> SessionType {
        // The prefix guards every variable bound since the last one.
        let newly: Vec<RecVar> = std::mem::take(pending);
        guarded.extend(newly.iter().cloned());
        let n = self.rng.gen_range(1..=self.cfg.max_fanout);
        let mut labels = LABELS.to_vec();
        labels.shuffle(&mut self.rng);
        let branches = labels[..n]
            .iter()
            .map(|l| {
                let params = (0..self.rng.gen_range(0..=self.cfg.max_params))
                    .map(|_| {
                        let name = Name::new(format!("p{}", self.next_param));
                        self.next_param += 1;
                        Param { name, ty: self.base_type() }
                    })
                    .collect();
                let cont = self.gen_type(depth - 1, guarded, &mut Vec::new());
                TypeBranch::new(*l, params, cont)
            })
            .collect();
        guarded.retain(|x| !newly.contains(x));
        *pending = newly;
        if self.rng.gen_bool(0.5) {
            SessionType::Select(branches)
        } else {
            SessionType::Branch(branches)
        }
    }

    fn base_type(&mut self) -> BaseType {
        match self.rng.gen_range(0..if self.cfg.tuples { 7 } else { 6 }) {
            0..=2 => BaseType::Int,
            3 | 4 => BaseType::Str,
            5 => BaseType::Bool,
            _ => BaseType::Tuple(vec![BaseType::Int, BaseType::Bool]),
        }
    }

    pub fn literal(&mut self, ty: &BaseType) -> Value {
        match ty {
            BaseType::Int => Value::Int(self.rng.gen_range(0..3)),
            BaseType::Str => Value::str(*["a", "b"].choose(&mut self.rng).unwrap()),
            BaseType::Bool => Value::Bool(self.rng.gen()),
            BaseType::Tuple(items) => Value::Tuple(items.iter().map(|t| self.literal(t)).collect()),
        }
    }

    /// A process typed by `s`. Conditionals on received integers appear when
    /// `with_if` holds.
    pub fn process_for(&mut self, s: &SessionType, with_if: bool) -> Process {
        self.mirror(s, &mut Vec::new(), with_if)
    }

    /// A well-typed pair; the process may branch on received values.
    pub fn well_typed_pair(&mut self) -> (Process, SessionType) {
        let s = self.session_type();
        let p = self.process_for(&s, true);
        (p, s)
    }

    fn mirror(&mut self, s: &SessionType, gamma: &mut Vec<(Name, BaseType)>, with_if: bool) -> Process {
        match s {
            SessionType::End => Process::Nil,
            SessionType::Var(x) => Process::Var(x.clone()),
            SessionType::Rec(x, body) => Process::rec(x.clone(), self.mirror(body, gamma, with_if)),
            SessionType::Select(bs) => {
                let ints: Vec<Name> = gamma.iter().filter(|(_, t)| *t == BaseType::Int).map(|(x, _)| x.clone()).collect();
                if with_if && !ints.is_empty() && self.rng.gen_bool(0.3) {
                    let x = ints.choose(&mut self.rng).unwrap().clone();
                    let cond = Expr::bin(BinOp::Eq, Expr::Var(x), Expr::Lit(Value::Int(0)));
                    let then = self.select_one(bs, gamma, with_if);
                    let els = self.select_one(bs, gamma, with_if);
                    Process::if_(cond, then, els)
                } else {
                    self.select_one(bs, gamma, with_if)
                }
            }
            SessionType::Branch(bs) => {
                let mut out: Vec<RecvBranch> = bs
                    .iter()
                    .map(|b| {
                        let mark = gamma.len();
                        gamma.extend(b.params.iter().map(|p| (p.name.clone(), p.ty.clone())));
                        let cont = self.mirror(&b.cont, gamma, with_if);
                        gamma.truncate(mark);
                        RecvBranch::new(b.label.clone(), b.params.iter().map(|p| p.name.clone()).collect(), cont)
                    })
                    .collect();
                // Extra branches are allowed by typing and never exercised.
                let unused: Vec<&str> = LABELS.iter().copied().filter(|l| bs.iter().all(|b| b.label.as_str() != *l)).collect();
                if let Some(l) = unused.choose(&mut self.rng).filter(|_| self.rng.gen_bool(0.2)) {
                    out.push(RecvBranch::new(*l, Vec::new(), Process::Nil));
                }
                out.shuffle(&mut self.rng);
                Process::Recv(out)
            }
        }
    }

    fn select_one(&mut self, bs: &[TypeBranch], gamma: &mut Vec<(Name, BaseType)>, with_if: bool) -> Process {
        let b = bs.choose(&mut self.rng).unwrap();
        let args = b
            .params
            .iter()
            .map(|p| {
                let vars: Vec<&Name> = gamma.iter().filter(|(_, t)| *t == p.ty).map(|(x, _)| x).collect();
                match vars.choose(&mut self.rng) {
                    Some(x) if self.rng.gen_bool(0.5) => Expr::Var((*x).clone()),
                    _ => Expr::Lit(self.literal(&p.ty)),
                }
            })
            .collect();
        let cont = self.mirror(&b.cont, gamma, with_if);
        Process::Send { label: b.label.clone(), args, cont: Box::new(cont) }
    }

    /// One random mutant of `p` at a position the type checks, or `None` if
    /// `p` offers no such position. The caller should confirm ill-typedness.
    pub fn mutate(&mut self, p: &Process, s: &SessionType) -> Option<Mutant> {
        let all = mutants(p, s);
        all.choose(&mut self.rng).cloned()
    }
}

/// Every single-point mutant of `p` along its typing derivation against `s`.
/// `p` is expected to be free of conditionals.
pub fn mutants(p: &Process, s: &SessionType) -> Vec<Mutant> {
    let mut out = Vec::new();
    collect(p, s, &mut |kind, q| out.push(Mutant { kind, process: q }));
    out
}

fn collect(p: &Process, s: &SessionType, emit: &mut dyn FnMut(MutationKind, Process)) {
    let unfolded = s.unfold();
    match (p, unfolded.as_ref()) {
        (Process::Rec(x, body), _) => collect(body, s, &mut |k, q| emit(k, Process::rec(x.clone(), q))),
        (Process::Send { label, args, cont }, Some(SessionType::Select(bs))) => {
            let Some(b) = bs.iter().find(|b| &b.label == label) else { return };
            emit(MutationKind::PrematureNil, Process::Nil);
            emit(MutationKind::LabelRename, Process::Send { label: Label::new(FOREIGN_LABEL), args: args.clone(), cont: cont.clone() });
            for (i, param) in b.params.iter().enumerate() {
                let mut args2 = args.clone();
                args2[i] = Expr::Lit(crate::semantics::ValueDomain::off_type(&param.ty));
                emit(MutationKind::ArgRetype, Process::Send { label: label.clone(), args: args2, cont: cont.clone() });
            }
            collect(cont, &b.cont, &mut |k, q| {
                emit(k, Process::Send { label: label.clone(), args: args.clone(), cont: Box::new(q) })
            });
        }
        (Process::Recv(rbs), Some(SessionType::Branch(bs))) => {
            emit(MutationKind::PrematureNil, Process::Nil);
            for (i, rb) in rbs.iter().enumerate() {
                let Some(b) = bs.iter().find(|b| b.label == rb.label) else { continue };
                let with = |replacement: Option<RecvBranch>| {
                    let mut v = rbs.clone();
                    match replacement {
                        Some(r) => v[i] = r,
                        None => {
                            v.remove(i);
                        }
                    }
                    Process::Recv(v)
                };
                if rbs.len() > 1 {
                    emit(MutationKind::BranchPrune, with(None));
                }
                if rbs.iter().all(|r| r.label.as_str() != FOREIGN_LABEL) {
                    emit(MutationKind::LabelRename, with(Some(RecvBranch { label: Label::new(FOREIGN_LABEL), ..rb.clone() })));
                }
                collect(&rb.cont, &b.cont, &mut |k, q| emit(k, with(Some(RecvBranch { cont: q, ..rb.clone() }))));
            }
        }
        _ => {}
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::typecheck::{is_well_formed, typecheck, TypingEnvs};

    #[test]
    fn generated_pairs_are_well_typed() {
        let mut g = Generator::new(7);
        for _ in 0..300 {
            let (p, s) = g.well_typed_pair();
            assert!(is_well_formed(&s), "{s:?}");
            assert!(p.is_closed());
            assert!(typecheck(&TypingEnvs::empty(), &p, &s), "{p:?} : {s:?}");
        }
    }

    #[test]
    fn generation_is_deterministic() {
        let a: Vec<_> = (0..20).map({
            let mut g = Generator::new(3);
            move |_| g.well_typed_pair()
        }).collect();
        let b: Vec<_> = (0..20).map({
            let mut g = Generator::new(3);
            move |_| g.well_typed_pair()
        }).collect();
        assert_eq!(a, b);
    }

    #[test]
    fn every_mutant_is_ill_typed() {
        let mut g = Generator::new(11);
        let mut total = 0;
        for _ in 0..200 {
            let s = g.session_type();
            let p = g.process_for(&s, false);
            for m in mutants(&p, &s) {
                total += 1;
                assert!(!typecheck(&TypingEnvs::empty(), &m.process, &s), "{} {m:?} : {s:?}", m.kind);
            }
        }
        assert!(total > 100);
    }
}
