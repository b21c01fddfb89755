use std::collections::BTreeMap;
use std::fmt;

use super::{check_well_formed_in, type_equal};
use crate::model::{BaseType, Expr, Label, Process, RecVar, SessionType, TypeEnv};

/// Typing environments: recursion variables to types, value variables to
/// base types.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct TypingEnvs {
    pub theta: BTreeMap<RecVar, SessionType>,
    pub gamma: TypeEnv,
}

impl TypingEnvs {
    pub fn empty() -> Self {
        Self::default()
    }
}

/// Rules of the negated typing judgment.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum NegRule {
    NBra0,
    NBra1,
    NBra2,
    NSel0,
    NSel1,
    NSel2,
    NSel3,
    NRec,
    NPVar,
    NIf1,
    NIf2,
    NIf3,
    NIf4,
    NNil,
    /// The type itself violates well-formedness; no derivation is attempted.
    IllFormedType,
}

impl NegRule {
    pub const ALL: [NegRule; 14] = [
        NegRule::NBra0,
        NegRule::NBra1,
        NegRule::NBra2,
        NegRule::NSel0,
        NegRule::NSel1,
        NegRule::NSel2,
        NegRule::NSel3,
        NegRule::NRec,
        NegRule::NPVar,
        NegRule::NIf1,
        NegRule::NIf2,
        NegRule::NIf3,
        NegRule::NIf4,
        NegRule::NNil,
    ];

    pub fn name(self) -> &'static str {
        match self {
            NegRule::NBra0 => "nBra0",
            NegRule::NBra1 => "nBra1",
            NegRule::NBra2 => "nBra2",
            NegRule::NSel0 => "nSel0",
            NegRule::NSel1 => "nSel1",
            NegRule::NSel2 => "nSel2",
            NegRule::NSel3 => "nSel3",
            NegRule::NRec => "nRec",
            NegRule::NPVar => "nPVar",
            NegRule::NIf1 => "nIf1",
            NegRule::NIf2 => "nIf2",
            NegRule::NIf3 => "nIf3",
            NegRule::NIf4 => "nIf4",
            NegRule::NNil => "nNil",
            NegRule::IllFormedType => "ill-formed-type",
        }
    }

    pub fn from_name(s: &str) -> Option<Self> {
        NegRule::ALL.into_iter().chain([NegRule::IllFormedType]).find(|r| r.name() == s)
    }
}

impl fmt::Display for NegRule {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// One step from a process to a direct subterm.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum PathStep {
    SendCont,
    RecvBranch(Label),
    RecBody,
    Then,
    Else,
}

impl fmt::Display for PathStep {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            PathStep::SendCont => f.write_str("send"),
            PathStep::RecvBranch(l) => write!(f, "recv[{l}]"),
            PathStep::RecBody => f.write_str("rec"),
            PathStep::Then => f.write_str("then"),
            PathStep::Else => f.write_str("else"),
        }
    }
}

/// A derivation of the negated judgment, flattened along its leftmost spine.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FailureReport {
    /// Rule concluding the judgment for the whole process.
    pub rule: NegRule,
    /// Rules from the root down to the axiom that closes the derivation.
    pub chain: Vec<NegRule>,
    /// Address of the subterm where the axiom applies.
    pub path: Vec<PathStep>,
    pub detail: String,
}

impl FailureReport {
    pub fn leaf(&self) -> NegRule {
        *self.chain.last().unwrap_or(&self.rule)
    }

    pub fn render_path(&self) -> String {
        if self.path.is_empty() {
            return "<root>".into();
        }
        self.path.iter().map(ToString::to_string).collect::<Vec<_>>().join(" / ")
    }
}

impl fmt::Display for FailureReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let chain: Vec<&str> = self.chain.iter().map(|r| r.name()).collect();
        write!(f, "rule {} at root (derivation {}), at {}: {}", self.rule, chain.join(" > "), self.render_path(), self.detail)
    }
}

/// Decides `theta . gamma |- p : s`.
pub fn typecheck(env: &TypingEnvs, p: &Process, s: &SessionType) -> bool {
    explain_failure(env, p, s).is_none()
}

/// `None` iff the process is well-typed; otherwise one negated derivation,
/// choosing the leftmost failing premise at every step.
pub fn explain_failure(env: &TypingEnvs, p: &Process, s: &SessionType) -> Option<FailureReport> {
    let problems = check_well_formed_open(env, s);
    if let Some(v) = problems.first() {
        return Some(FailureReport {
            rule: NegRule::IllFormedType,
            chain: vec![NegRule::IllFormedType],
            path: Vec::new(),
            detail: v.to_string(),
        });
    }
    let mut theta = env.theta.clone();
    let mut gamma = env.gamma.clone();
    let mut path = Vec::new();
    let (chain, detail) = negate(&mut theta, &mut gamma, p, s, &mut path)?;
    Some(FailureReport { rule: chain[0], chain, path, detail })
}

fn check_well_formed_open(env: &TypingEnvs, s: &SessionType) -> Vec<super::Violation> {
    let bound: Vec<RecVar> = env.theta.keys().cloned().collect();
    check_well_formed_in(s, &bound)
}

type Neg = Option<(Vec<NegRule>, String)>;

fn leaf(rule: NegRule, detail: String) -> Neg {
    Some((vec![rule], detail))
}

fn wrap(rule: NegRule, inner: Neg) -> Neg {
    inner.map(|(mut chain, detail)| {
        chain.insert(0, rule);
        (chain, detail)
    })
}

fn bool_typed(gamma: &TypeEnv, cond: &Expr) -> Result<(), String> {
    match cond.infer(gamma) {
        Ok(BaseType::Bool) => Ok(()),
        Ok(other) => Err(format!("condition has type {other}, expected Bool")),
        Err(e) => Err(format!("condition is ill-typed: {e}")),
    }
}

fn negate(
    theta: &mut BTreeMap<RecVar, SessionType>,
    gamma: &mut TypeEnv,
    p: &Process,
    s: &SessionType,
    path: &mut Vec<PathStep>,
) -> Neg {
    match p {
        Process::Rec(x, body) => {
            let saved = theta.insert(x.clone(), s.clone());
            path.push(PathStep::RecBody);
            let r = negate(theta, gamma, body, s, path);
            if r.is_none() {
                path.pop();
            }
            match saved {
                Some(old) => theta.insert(x.clone(), old),
                None => theta.remove(x),
            };
            wrap(NegRule::NRec, r)
        }
        Process::Var(x) => match theta.get(x) {
            Some(t) if type_equal(t, s) => None,
            Some(_) => leaf(NegRule::NPVar, format!("`{x}` is bound to a different type")),
            None => leaf(NegRule::NPVar, format!("`{x}` is unbound")),
        },
        Process::If { cond, then, els } => {
            if let Err(why) = bool_typed(gamma, cond) {
                return leaf(NegRule::NIf1, why);
            }
            path.push(PathStep::Then);
            let t = negate(theta, gamma, then, s, path);
            if t.is_none() {
                path.pop();
            }
            match t {
                Some(_) => {
                    // The else branch is still checked so that nIf2 and nIf4 are told apart.
                    let e = negate(theta, gamma, els, s, &mut Vec::new());
                    wrap(if e.is_some() { NegRule::NIf4 } else { NegRule::NIf2 }, t)
                }
                None => {
                    path.push(PathStep::Else);
                    let e = negate(theta, gamma, els, s, path);
                    if e.is_none() {
                        path.pop();
                    }
                    wrap(NegRule::NIf3, e)
                }
            }
        }
        Process::Nil => match s.unfold() {
            Some(SessionType::End) => None,
            _ => leaf(NegRule::NNil, "the type expects further communication".into()),
        },
        Process::Send { label, args, cont } => {
            let Some(SessionType::Select(bs)) = s.unfold() else {
                return leaf(NegRule::NSel0, format!("send of `{label}` where the type does not select"));
            };
            let Some(b) = bs.iter().find(|b| &b.label == label) else {
                return leaf(NegRule::NSel1, format!("label `{label}` is not offered by the type"));
            };
            if args.len() != b.params.len() {
                return leaf(
                    NegRule::NSel2,
                    format!("`{label}` sends {} values, the type declares {}", args.len(), b.params.len()),
                );
            }
            for (i, (a, param)) in args.iter().zip(&b.params).enumerate() {
                match a.infer(gamma) {
                    Ok(t) if t == param.ty => {}
                    Ok(t) => {
                        return leaf(NegRule::NSel2, format!("argument {} of `{label}` has type {t}, expected {}", i + 1, param.ty))
                    }
                    Err(e) => return leaf(NegRule::NSel2, format!("argument {} of `{label}` is ill-typed: {e}", i + 1)),
                }
            }
            path.push(PathStep::SendCont);
            let r = negate(theta, gamma, cont, &b.cont, path);
            if r.is_none() {
                path.pop();
            }
            wrap(NegRule::NSel3, r)
        }
        Process::Recv(rbs) => {
            let Some(SessionType::Branch(bs)) = s.unfold() else {
                return leaf(NegRule::NBra0, "receive where the type does not branch".into());
            };
            for b in &bs {
                let Some(rb) = rbs.iter().find(|rb| rb.label == b.label) else {
                    return leaf(NegRule::NBra1, format!("label `{}` of the type is not handled", b.label));
                };
                if rb.params.len() != b.params.len() {
                    return leaf(
                        NegRule::NBra1,
                        format!("`{}` binds {} values, the type declares {}", b.label, rb.params.len(), b.params.len()),
                    );
                }
                let saved = gamma.clone();
                for (x, param) in rb.params.iter().zip(&b.params) {
                    gamma.insert(x.clone(), param.ty.clone());
                }
                path.push(PathStep::RecvBranch(b.label.clone()));
                let r = negate(theta, gamma, &rb.cont, &b.cont, path);
                *gamma = saved;
                if r.is_some() {
                    return wrap(NegRule::NBra2, r);
                }
                path.pop();
            }
            None
        }
    }
}
