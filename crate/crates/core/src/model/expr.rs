//! Predicates and payload expressions.
//!
//! The same expression language is used for assertions attached to session
//! types, for conditions of `if` in processes and monitors, and for message
//! arguments. Evaluation is precise: an expression that is ill-typed under
//! [`Expr::infer`] never evaluates to a value.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::sync::Arc;

use thiserror::Error;

use super::{has_type, BaseType, Name, Value};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum BinOp {
    Eq,
    Ne,
    Lt,
    Le,
    Gt,
    Ge,
    And,
    Or,
    Add,
    Sub,
}

impl BinOp {
    pub fn symbol(self) -> &'static str {
        match self {
            BinOp::Eq => "==",
            BinOp::Ne => "!=",
            BinOp::Lt => "<",
            BinOp::Le => "<=",
            BinOp::Gt => ">",
            BinOp::Ge => ">=",
            BinOp::And => "&&",
            BinOp::Or => "||",
            BinOp::Add => "+",
            BinOp::Sub => "-",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Expr {
    Lit(Value),
    Var(Name),
    Not(Box<Expr>),
    Bin(BinOp, Box<Expr>, Box<Expr>),
    /// `is_B(e)`: runtime type test, total on every operand.
    IsType(BaseType, Box<Expr>),
    /// Call of a user-registered predicate.
    Call(Name, Vec<Expr>),
    Tuple(Vec<Expr>),
}

pub type Assertion = Expr;

/// Runtime payload environment.
pub type Env = BTreeMap<Name, Value>;

/// Static environment of value variables.
pub type TypeEnv = BTreeMap<Name, BaseType>;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum EvalError {
    #[error("unbound variable `{0}`")]
    Unbound(Name),
    #[error("operator `{op}` cannot be applied to {operands}")]
    Mismatch { op: &'static str, operands: String },
    #[error("integer overflow in `{0}`")]
    Overflow(&'static str),
    #[error("unknown predicate `{0}`")]
    UnknownPredicate(Name),
    #[error("predicate `{name}` failed: {message}")]
    Predicate { name: Name, message: String },
    #[error("empty tuple")]
    EmptyTuple,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ExprTypeError {
    #[error("unbound variable `{0}`")]
    Unbound(Name),
    #[error("operator `{op}` expects {expected}, found {found}")]
    Operand { op: &'static str, expected: String, found: String },
    #[error("empty tuple")]
    EmptyTuple,
}

pub type PredicateFn = dyn Fn(&[Value]) -> Result<bool, String> + Send + Sync;

/// Named external predicates available to assertions.
#[derive(Clone, Default)]
pub struct PredicateRegistry {
    entries: BTreeMap<Name, Arc<PredicateFn>>,
}

impl PredicateRegistry {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn register<F>(&mut self, name: impl Into<Name>, f: F) -> &mut Self
    where
        F: Fn(&[Value]) -> Result<bool, String> + Send + Sync + 'static,
    {
        self.entries.insert(name.into(), Arc::new(f));
        self
    }

    pub fn with<F>(mut self, name: impl Into<Name>, f: F) -> Self
    where
        F: Fn(&[Value]) -> Result<bool, String> + Send + Sync + 'static,
    {
        self.register(name, f);
        self
    }

    pub fn contains(&self, name: &Name) -> bool {
        self.entries.contains_key(name)
    }

    pub fn names(&self) -> impl Iterator<Item = &Name> {
        self.entries.keys()
    }

    pub fn call(&self, name: &Name, args: &[Value]) -> Result<bool, EvalError> {
        let f = self.entries.get(name).ok_or_else(|| EvalError::UnknownPredicate(name.clone()))?;
        f(args).map_err(|message| EvalError::Predicate { name: name.clone(), message })
    }
}

impl fmt::Debug for PredicateRegistry {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_set().entries(self.entries.keys()).finish()
    }
}

impl Expr {
    pub fn tt() -> Self {
        Expr::Lit(Value::Bool(true))
    }

    pub fn ff() -> Self {
        Expr::Lit(Value::Bool(false))
    }

    pub fn var(name: impl Into<Name>) -> Self {
        Expr::Var(name.into())
    }

    pub fn bin(op: BinOp, lhs: Expr, rhs: Expr) -> Self {
        Expr::Bin(op, Box::new(lhs), Box::new(rhs))
    }

    pub fn is_type(ty: BaseType, e: Expr) -> Self {
        Expr::IsType(ty, Box::new(e))
    }

    /// Left-nested conjunction; `tt` when empty.
    pub fn conj(items: impl IntoIterator<Item = Expr>) -> Self {
        items.into_iter().reduce(|acc, e| Expr::bin(BinOp::And, acc, e)).unwrap_or_else(Expr::tt)
    }

    pub fn is_trivially_true(&self) -> bool {
        matches!(self, Expr::Lit(Value::Bool(true)))
    }

    pub fn free_vars(&self) -> BTreeSet<Name> {
        let mut out = BTreeSet::new();
        self.collect_vars(&mut out);
        out
    }

    fn collect_vars(&self, out: &mut BTreeSet<Name>) {
        match self {
            Expr::Lit(_) => {}
            Expr::Var(x) => {
                out.insert(x.clone());
            }
            Expr::Not(e) | Expr::IsType(_, e) => e.collect_vars(out),
            Expr::Bin(_, a, b) => {
                a.collect_vars(out);
                b.collect_vars(out);
            }
            Expr::Call(_, args) | Expr::Tuple(args) => args.iter().for_each(|a| a.collect_vars(out)),
        }
    }

    pub fn predicate_names(&self, out: &mut BTreeSet<Name>) {
        match self {
            Expr::Lit(_) | Expr::Var(_) => {}
            Expr::Not(e) | Expr::IsType(_, e) => e.predicate_names(out),
            Expr::Bin(_, a, b) => {
                a.predicate_names(out);
                b.predicate_names(out);
            }
            Expr::Call(name, args) => {
                out.insert(name.clone());
                args.iter().for_each(|a| a.predicate_names(out));
            }
            Expr::Tuple(args) => args.iter().for_each(|a| a.predicate_names(out)),
        }
    }

    pub fn substitute(&self, x: &Name, v: &Value) -> Expr {
        match self {
            Expr::Var(y) if y == x => Expr::Lit(v.clone()),
            Expr::Lit(_) | Expr::Var(_) => self.clone(),
            Expr::Not(e) => Expr::Not(Box::new(e.substitute(x, v))),
            Expr::IsType(t, e) => Expr::IsType(t.clone(), Box::new(e.substitute(x, v))),
            Expr::Bin(op, a, b) => Expr::bin(*op, a.substitute(x, v), b.substitute(x, v)),
            Expr::Call(n, args) => Expr::Call(n.clone(), args.iter().map(|a| a.substitute(x, v)).collect()),
            Expr::Tuple(args) => Expr::Tuple(args.iter().map(|a| a.substitute(x, v)).collect()),
        }
    }

    pub fn rename(&self, from: &Name, to: &Name) -> Expr {
        match self {
            Expr::Var(y) if y == from => Expr::Var(to.clone()),
            Expr::Lit(_) | Expr::Var(_) => self.clone(),
            Expr::Not(e) => Expr::Not(Box::new(e.rename(from, to))),
            Expr::IsType(t, e) => Expr::IsType(t.clone(), Box::new(e.rename(from, to))),
            Expr::Bin(op, a, b) => Expr::bin(*op, a.rename(from, to), b.rename(from, to)),
            Expr::Call(n, args) => Expr::Call(n.clone(), args.iter().map(|a| a.rename(from, to)).collect()),
            Expr::Tuple(args) => Expr::Tuple(args.iter().map(|a| a.rename(from, to)).collect()),
        }
    }

    pub fn eval(&self, env: &Env, preds: &PredicateRegistry) -> Result<Value, EvalError> {
        match self {
            Expr::Lit(v) => Ok(v.clone()),
            Expr::Var(x) => env.get(x).cloned().ok_or_else(|| EvalError::Unbound(x.clone())),
            Expr::Not(e) => match e.eval(env, preds)? {
                Value::Bool(b) => Ok(Value::Bool(!b)),
                other => Err(mismatch("!", &[&other])),
            },
            Expr::IsType(ty, e) => Ok(Value::Bool(has_type(&e.eval(env, preds)?, ty))),
            Expr::Bin(op, a, b) => eval_bin(*op, a, b, env, preds),
            Expr::Call(name, args) => {
                let args = args.iter().map(|a| a.eval(env, preds)).collect::<Result<Vec<_>, _>>()?;
                preds.call(name, &args).map(Value::Bool)
            }
            Expr::Tuple(items) if items.is_empty() => Err(EvalError::EmptyTuple),
            Expr::Tuple(items) => Ok(Value::Tuple(items.iter().map(|a| a.eval(env, preds)).collect::<Result<_, _>>()?)),
        }
    }

    /// Evaluates to a truth value; any non-boolean result is an error.
    pub fn eval_bool(&self, env: &Env, preds: &PredicateRegistry) -> Result<bool, EvalError> {
        match self.eval(env, preds)? {
            Value::Bool(b) => Ok(b),
            other => Err(mismatch("condition", &[&other])),
        }
    }

    /// Static type of the expression. Comparison operands must share a base
    /// type, ordering is restricted to `Int` and `Str`, and named predicates
    /// are `Bool`-valued over arguments of any (well-formed) type.
    pub fn infer(&self, gamma: &TypeEnv) -> Result<BaseType, ExprTypeError> {
        match self {
            Expr::Lit(v) => v.type_of().ok_or(ExprTypeError::EmptyTuple),
            Expr::Var(x) => gamma.get(x).cloned().ok_or_else(|| ExprTypeError::Unbound(x.clone())),
            Expr::Not(e) => {
                expect(e.infer(gamma)?, BaseType::Bool, "!")?;
                Ok(BaseType::Bool)
            }
            Expr::IsType(_, e) => {
                e.infer(gamma)?;
                Ok(BaseType::Bool)
            }
            Expr::Call(_, args) => {
                for a in args {
                    a.infer(gamma)?;
                }
                Ok(BaseType::Bool)
            }
            Expr::Tuple(items) if items.is_empty() => Err(ExprTypeError::EmptyTuple),
            Expr::Tuple(items) => Ok(BaseType::Tuple(items.iter().map(|a| a.infer(gamma)).collect::<Result<_, _>>()?)),
            Expr::Bin(op, a, b) => {
                let (ta, tb) = (a.infer(gamma)?, b.infer(gamma)?);
                let sym = op.symbol();
                match op {
                    BinOp::And | BinOp::Or => {
                        expect(ta, BaseType::Bool, sym)?;
                        expect(tb, BaseType::Bool, sym)?;
                        Ok(BaseType::Bool)
                    }
                    BinOp::Add | BinOp::Sub => {
                        expect(ta, BaseType::Int, sym)?;
                        expect(tb, BaseType::Int, sym)?;
                        Ok(BaseType::Int)
                    }
                    BinOp::Eq | BinOp::Ne => {
                        if ta != tb {
                            return Err(ExprTypeError::Operand { op: sym, expected: ta.to_string(), found: tb.to_string() });
                        }
                        Ok(BaseType::Bool)
                    }
                    BinOp::Lt | BinOp::Le | BinOp::Gt | BinOp::Ge => {
                        if ta != tb || !matches!(ta, BaseType::Int | BaseType::Str) {
                            return Err(ExprTypeError::Operand {
                                op: sym,
                                expected: "two Int or two Str operands".into(),
                                found: format!("{ta} and {tb}"),
                            });
                        }
                        Ok(BaseType::Bool)
                    }
                }
            }
        }
    }
}

fn expect(found: BaseType, expected: BaseType, op: &'static str) -> Result<(), ExprTypeError> {
    if found == expected {
        Ok(())
    } else {
        Err(ExprTypeError::Operand { op, expected: expected.to_string(), found: found.to_string() })
    }
}

fn mismatch(op: &'static str, operands: &[&Value]) -> EvalError {
    let operands = operands.iter().map(|v| v.to_string()).collect::<Vec<_>>().join(" and ");
    EvalError::Mismatch { op, operands }
}

fn eval_bin(op: BinOp, a: &Expr, b: &Expr, env: &Env, preds: &PredicateRegistry) -> Result<Value, EvalError> {
    let sym = op.symbol();
    // && and || short-circuit, but only over booleans.
    if matches!(op, BinOp::And | BinOp::Or) {
        let lhs = match a.eval(env, preds)? {
            Value::Bool(b) => b,
            other => return Err(mismatch(sym, &[&other])),
        };
        if (op == BinOp::And && !lhs) || (op == BinOp::Or && lhs) {
            return Ok(Value::Bool(lhs));
        }
        return match b.eval(env, preds)? {
            Value::Bool(b) => Ok(Value::Bool(b)),
            other => Err(mismatch(sym, &[&other])),
        };
    }
    let (va, vb) = (a.eval(env, preds)?, b.eval(env, preds)?);
    match op {
        BinOp::Add | BinOp::Sub => match (&va, &vb) {
            (Value::Int(x), Value::Int(y)) => {
                let r = if op == BinOp::Add { x.checked_add(*y) } else { x.checked_sub(*y) };
                r.map(Value::Int).ok_or(EvalError::Overflow(sym))
            }
            _ => Err(mismatch(sym, &[&va, &vb])),
        },
        BinOp::Eq | BinOp::Ne => {
            if va.type_of().is_none() || va.type_of() != vb.type_of() {
                return Err(mismatch(sym, &[&va, &vb]));
            }
            Ok(Value::Bool((va == vb) == (op == BinOp::Eq)))
        }
        _ => {
            let ord = match (&va, &vb) {
                (Value::Int(x), Value::Int(y)) => x.cmp(y),
                (Value::Str(x), Value::Str(y)) => x.cmp(y),
                _ => return Err(mismatch(sym, &[&va, &vb])),
            };
            let r = match op {
                BinOp::Lt => ord.is_lt(),
                BinOp::Le => ord.is_le(),
                BinOp::Gt => ord.is_gt(),
                _ => ord.is_ge(),
            };
            Ok(Value::Bool(r))
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn int(i: i64) -> Expr {
        Expr::Lit(Value::Int(i))
    }

    fn s(x: &str) -> Expr {
        Expr::Lit(Value::str(x))
    }

    #[test]
    fn evaluation_basics() {
        let env = Env::from([(Name::from("x"), Value::Int(3))]);
        let preds = PredicateRegistry::new();
        let e = Expr::bin(BinOp::And, Expr::bin(BinOp::Ge, Expr::var("x"), int(1)), Expr::Not(Box::new(Expr::ff())));
        assert_eq!(e.eval_bool(&env, &preds), Ok(true));
        assert_eq!(Expr::bin(BinOp::Sub, Expr::var("x"), int(5)).eval(&env, &preds), Ok(Value::Int(-2)));
        assert!(matches!(Expr::var("y").eval(&env, &preds), Err(EvalError::Unbound(_))));
    }

    #[test]
    fn ill_typed_never_yields_truth() {
        let env = Env::new();
        let preds = PredicateRegistry::new();
        for e in [
            Expr::bin(BinOp::Eq, int(1), s("a")),
            Expr::bin(BinOp::Lt, Expr::tt(), Expr::ff()),
            Expr::bin(BinOp::And, int(1), Expr::tt()),
            Expr::Not(Box::new(int(0))),
        ] {
            assert!(e.infer(&TypeEnv::new()).is_err(), "{e:?} should be ill-typed");
            assert!(e.eval(&env, &preds).is_err(), "{e:?} should not evaluate");
        }
    }

    #[test]
    fn overflow_is_an_error() {
        let e = Expr::bin(BinOp::Add, int(i64::MAX), int(1));
        assert_eq!(e.eval(&Env::new(), &PredicateRegistry::new()), Err(EvalError::Overflow("+")));
    }

    #[test]
    fn short_circuit_skips_rhs() {
        let e = Expr::bin(BinOp::And, Expr::ff(), Expr::var("unbound"));
        assert_eq!(e.eval_bool(&Env::new(), &PredicateRegistry::new()), Ok(false));
    }

    #[test]
    fn type_tests_and_predicates() {
        let preds = PredicateRegistry::new().with("positive", |args| match args {
            [Value::Int(i)] => Ok(*i > 0),
            _ => Err("expects one Int".into()),
        });
        let env = Env::from([(Name::from("code"), Value::Int(7))]);
        assert_eq!(Expr::is_type(BaseType::Int, Expr::var("code")).eval_bool(&env, &preds), Ok(true));
        assert_eq!(Expr::is_type(BaseType::Str, Expr::var("code")).eval_bool(&env, &preds), Ok(false));
        let call = Expr::Call("positive".into(), vec![Expr::var("code")]);
        assert_eq!(call.eval_bool(&env, &preds), Ok(true));
        let bad = Expr::Call("positive".into(), vec![s("x")]);
        assert!(matches!(bad.eval_bool(&env, &preds), Err(EvalError::Predicate { .. })));
        let unknown = Expr::Call("nope".into(), vec![]);
        assert!(matches!(unknown.eval_bool(&env, &preds), Err(EvalError::UnknownPredicate(_))));
        assert_eq!(call.infer(&TypeEnv::from([(Name::from("code"), BaseType::Int)])), Ok(BaseType::Bool));
    }

    #[test]
    fn substitution_and_free_vars() {
        let e = Expr::bin(BinOp::Eq, Expr::var("x"), Expr::var("y"));
        let e2 = e.substitute(&Name::from("x"), &Value::Int(1));
        assert_eq!(e2.free_vars(), BTreeSet::from([Name::from("y")]));
        assert_eq!(e.free_vars().len(), 2);
    }
}
