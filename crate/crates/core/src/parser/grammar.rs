use std::collections::BTreeSet;

use super::lexer::{tokenize, Tok, Token};
use super::SourceError;
use crate::model::{
    fresh_name, BaseType, BinOp, Expr, Label, MonParam, Monitor, MonitorBranch, Name, Param, Process, RecVar,
    RecvBranch, SessionType, TypeBranch, Value, VerdictKind,
};

pub(crate) const KEYWORDS: [&str; 21] = [
    "rec", "end", "send", "recv", "if", "then", "else", "tt", "ff", "true", "false", "is", "recv_int", "send_int",
    "recv_ext", "send_ext", "no_P", "no_E", "no_P_assert", "no_E_assert", "is_Int",
];

const MAX_NESTING: usize = 200;

pub(crate) fn is_keyword(s: &str) -> bool {
    KEYWORDS.contains(&s) || s == "is_Str" || s == "is_Bool"
}

pub(crate) struct Parser<'a> {
    src: &'a str,
    toks: Vec<Token>,
    pos: usize,
    depth: usize,
    /// Every identifier in the source; generated names avoid these.
    idents: BTreeSet<String>,
    /// Recursion variables bound since the last communication prefix.
    pending: Vec<RecVar>,
    /// All recursion variables in scope.
    bound: Vec<RecVar>,
    allow_free: bool,
}

type PResult<T> = Result<T, SourceError>;

impl<'a> Parser<'a> {
    pub(crate) fn new(src: &'a str, allow_free: bool) -> PResult<Self> {
        let toks = tokenize(src)?;
        let idents = toks
            .iter()
            .filter_map(|t| match &t.tok {
                Tok::Ident(s) => Some(s.clone()),
                _ => None,
            })
            .collect();
        Ok(Self { src, toks, pos: 0, depth: 0, idents, pending: Vec::new(), bound: Vec::new(), allow_free })
    }

    fn peek(&self) -> &Tok {
        &self.toks[self.pos].tok
    }

    fn peek_at(&self, n: usize) -> &Tok {
        &self.toks[(self.pos + n).min(self.toks.len() - 1)].tok
    }

    fn offset(&self) -> usize {
        self.toks[self.pos].offset
    }

    fn bump(&mut self) -> Tok {
        let t = self.toks[self.pos].tok.clone();
        if self.pos + 1 < self.toks.len() {
            self.pos += 1;
        }
        t
    }

    fn err_here(&self, msg: impl Into<String>) -> SourceError {
        SourceError::at(self.src, self.offset(), msg)
    }

    fn err_at(&self, offset: usize, msg: impl Into<String>) -> SourceError {
        SourceError::at(self.src, offset, msg)
    }

    fn describe(tok: &Tok) -> String {
        match tok {
            Tok::Ident(s) => format!("`{s}`"),
            Tok::Int(s) => format!("`{s}`"),
            Tok::Str(_) => "string literal".into(),
            Tok::Sym(s) => format!("`{s}`"),
            Tok::Eof => "end of input".into(),
        }
    }

    fn is_sym(&self, s: &str) -> bool {
        matches!(self.peek(), Tok::Sym(x) if *x == s)
    }

    fn is_kw(&self, s: &str) -> bool {
        matches!(self.peek(), Tok::Ident(x) if x == s)
    }

    fn eat_sym(&mut self, s: &str) -> bool {
        if self.is_sym(s) {
            self.bump();
            true
        } else {
            false
        }
    }

    fn expect_sym(&mut self, s: &str) -> PResult<()> {
        if self.eat_sym(s) {
            Ok(())
        } else {
            Err(self.err_here(format!("expected `{s}`, found {}", Self::describe(self.peek()))))
        }
    }

    fn expect_kw(&mut self, s: &str) -> PResult<()> {
        if self.is_kw(s) {
            self.bump();
            Ok(())
        } else {
            Err(self.err_here(format!("expected `{s}`, found {}", Self::describe(self.peek()))))
        }
    }

    fn ident(&mut self, what: &str) -> PResult<String> {
        match self.peek().clone() {
            Tok::Ident(s) => {
                self.bump();
                Ok(s)
            }
            other => Err(self.err_here(format!("expected {what}, found {}", Self::describe(&other)))),
        }
    }

    fn name(&mut self, what: &str) -> PResult<String> {
        let at = self.offset();
        let s = self.ident(what)?;
        if is_keyword(&s) {
            return Err(self.err_at(at, format!("keyword `{s}` cannot be used as {what}")));
        }
        Ok(s)
    }

    pub(crate) fn finish(&mut self) -> PResult<()> {
        match self.peek() {
            Tok::Eof => Ok(()),
            other => Err(self.err_here(format!("unexpected {} after end of term", Self::describe(other)))),
        }
    }

    fn enter(&mut self) -> PResult<()> {
        self.depth += 1;
        if self.depth > MAX_NESTING {
            return Err(self.err_here("nesting too deep"));
        }
        Ok(())
    }

    fn leave(&mut self) {
        self.depth -= 1;
    }

    fn bind_rec(&mut self) -> PResult<RecVar> {
        self.expect_kw("rec")?;
        let x = RecVar::new(self.name("recursion variable")?);
        self.expect_sym(".")?;
        Ok(x)
    }

    fn with_binder<T>(&mut self, x: &RecVar, f: impl FnOnce(&mut Self) -> PResult<T>) -> PResult<T> {
        self.bound.push(x.clone());
        self.pending.push(x.clone());
        let r = f(self);
        self.pending.pop();
        self.bound.pop();
        r
    }

    fn guarded<T>(&mut self, f: impl FnOnce(&mut Self) -> PResult<T>) -> PResult<T> {
        let saved = std::mem::take(&mut self.pending);
        let r = f(self);
        self.pending = saved;
        r
    }

    fn rec_var_ref(&mut self) -> PResult<RecVar> {
        let at = self.offset();
        let x = RecVar::new(self.name("recursion variable")?);
        if self.pending.contains(&x) {
            return Err(self.err_at(at, format!("unguarded recursion on `{x}`")));
        }
        if !self.allow_free && !self.bound.contains(&x) {
            return Err(self.err_at(at, format!("free recursion variable `{x}`")));
        }
        Ok(x)
    }

    fn check_distinct<'l>(&self, labels: impl IntoIterator<Item = (&'l Label, usize)>) -> PResult<()> {
        let mut seen = BTreeSet::new();
        for (l, at) in labels {
            if !seen.insert(l) {
                return Err(self.err_at(at, format!("duplicate label `{l}`")));
            }
        }
        Ok(())
    }

    // ---- base types -------------------------------------------------------

    pub(crate) fn base_type(&mut self) -> PResult<BaseType> {
        if self.eat_sym("(") {
            let mut items = vec![self.base_type()?];
            while self.eat_sym(",") {
                if self.is_sym(")") {
                    break;
                }
                items.push(self.base_type()?);
            }
            self.expect_sym(")")?;
            return Ok(BaseType::Tuple(items));
        }
        let at = self.offset();
        match self.ident("base type")?.as_str() {
            "Int" => Ok(BaseType::Int),
            "Str" => Ok(BaseType::Str),
            "Bool" => Ok(BaseType::Bool),
            other => Err(self.err_at(at, format!("unknown base type `{other}`"))),
        }
    }

    // ---- session types ----------------------------------------------------

    pub(crate) fn session_type(&mut self) -> PResult<SessionType> {
        self.enter()?;
        let r = self.session_type_inner();
        self.leave();
        r
    }

    fn session_type_inner(&mut self) -> PResult<SessionType> {
        if self.eat_sym("(") {
            let s = self.session_type()?;
            self.expect_sym(")")?;
            return Ok(s);
        }
        let select = self.is_sym("+{") || (self.is_sym("+") && matches!(self.peek_at(1), Tok::Sym("{")));
        let branch = self.is_sym("&{") || (self.is_sym("&") && matches!(self.peek_at(1), Tok::Sym("{")));
        if select || branch {
            if !self.eat_sym("+{") && !self.eat_sym("&{") {
                self.bump();
                self.bump();
            }
            let marker = if select { "!" } else { "?" };
            let mut bs = Vec::new();
            let mut offsets = Vec::new();
            loop {
                self.eat_sym(marker);
                offsets.push(self.offset());
                bs.push(self.type_branch()?);
                if !self.eat_sym(",") {
                    break;
                }
            }
            self.expect_sym("}")?;
            self.check_distinct(bs.iter().map(|b| &b.label).zip(offsets))?;
            return Ok(if select { SessionType::Select(bs) } else { SessionType::Branch(bs) });
        }
        if self.eat_sym("!") {
            return Ok(SessionType::Select(vec![self.type_branch()?]));
        }
        if self.eat_sym("?") {
            return Ok(SessionType::Branch(vec![self.type_branch()?]));
        }
        if self.is_kw("end") {
            self.bump();
            return Ok(SessionType::End);
        }
        if self.is_kw("rec") {
            let x = self.bind_rec()?;
            let body = self.with_binder(&x, |p| p.session_type())?;
            return Ok(SessionType::Rec(x, Box::new(body)));
        }
        if matches!(self.peek(), Tok::Ident(_)) {
            return Ok(SessionType::Var(self.rec_var_ref()?));
        }
        Err(self.err_here(format!("expected a session type, found {}", Self::describe(self.peek()))))
    }

    fn type_branch(&mut self) -> PResult<TypeBranch> {
        let label = Label::new(self.ident("message label")?);
        self.expect_sym("(")?;
        let mut raw: Vec<(Option<(String, usize)>, BaseType)> = Vec::new();
        if !self.is_sym(")") {
            loop {
                let name = if matches!(self.peek(), Tok::Ident(_)) && matches!(self.peek_at(1), Tok::Sym(":")) {
                    let at = self.offset();
                    let n = self.name("payload name")?;
                    self.bump();
                    Some((n, at))
                } else {
                    None
                };
                raw.push((name, self.base_type()?));
                if !self.eat_sym(",") {
                    break;
                }
            }
        }
        self.expect_sym(")")?;
        let mut params = Vec::with_capacity(raw.len());
        let mut used: BTreeSet<String> = self.idents.clone();
        let mut seen = BTreeSet::new();
        for (i, (name, ty)) in raw.into_iter().enumerate() {
            let name = match name {
                Some((n, at)) => {
                    if !seen.insert(n.clone()) {
                        return Err(self.err_at(at, format!("duplicate payload name `{n}`")));
                    }
                    n
                }
                None => {
                    let n = fresh_name(&format!("x{}", i + 1), &used);
                    seen.insert(n.clone());
                    n
                }
            };
            used.insert(name.clone());
            params.push(Param::new(name, ty));
        }
        let assertion = if self.eat_sym("[") {
            let a = self.expr()?;
            self.expect_sym("]")?;
            a
        } else {
            Expr::tt()
        };
        let cont = self.guarded(|p| if p.eat_sym(".") { p.session_type() } else { Ok(SessionType::End) })?;
        Ok(TypeBranch { label, params, assertion, cont })
    }

    // ---- processes --------------------------------------------------------

    pub(crate) fn process(&mut self) -> PResult<Process> {
        self.enter()?;
        let r = self.process_inner();
        self.leave();
        r
    }

    fn process_inner(&mut self) -> PResult<Process> {
        if self.eat_sym("(") {
            let p = self.process()?;
            self.expect_sym(")")?;
            return Ok(p);
        }
        if matches!(self.peek(), Tok::Int(s) if s == "0") {
            self.bump();
            return Ok(Process::Nil);
        }
        if self.is_kw("send") {
            self.bump();
            let label = Label::new(self.ident("message label")?);
            let args = self.args()?;
            let cont = self.guarded(|p| if p.eat_sym(".") { p.process() } else { Ok(Process::Nil) })?;
            return Ok(Process::Send { label, args, cont: Box::new(cont) });
        }
        if self.is_kw("recv") {
            self.bump();
            let bs = self.branches(|p| {
                let label = Label::new(p.ident("message label")?);
                let params = p.binders()?.into_iter().map(|(n, _)| Name::new(n)).collect();
                let cont = p.guarded(|p| if p.eat_sym(".") { p.process() } else { Ok(Process::Nil) })?;
                Ok(RecvBranch { label, params, cont })
            })?;
            self.check_distinct(bs.iter().map(|(b, at)| (&b.label, *at)))?;
            return Ok(Process::Recv(bs.into_iter().map(|(b, _)| b).collect()));
        }
        if self.is_kw("rec") {
            let x = self.bind_rec()?;
            let body = self.with_binder(&x, |p| p.process())?;
            return Ok(Process::Rec(x, Box::new(body)));
        }
        if self.is_kw("if") {
            self.bump();
            let cond = self.expr()?;
            self.expect_kw("then")?;
            let then = self.process()?;
            self.expect_kw("else")?;
            let els = self.process()?;
            return Ok(Process::If { cond, then: Box::new(then), els: Box::new(els) });
        }
        if matches!(self.peek(), Tok::Ident(_)) {
            return Ok(Process::Var(self.rec_var_ref()?));
        }
        Err(self.err_here(format!("expected a process, found {}", Self::describe(self.peek()))))
    }

    /// `{ b, .. }` or a single unbraced branch.
    fn branches<T>(&mut self, mut item: impl FnMut(&mut Self) -> PResult<T>) -> PResult<Vec<(T, usize)>> {
        let mut out = Vec::new();
        if self.eat_sym("{") {
            loop {
                let at = self.offset();
                out.push((item(self)?, at));
                if !self.eat_sym(",") {
                    break;
                }
            }
            self.expect_sym("}")?;
        } else {
            let at = self.offset();
            out.push((item(self)?, at));
        }
        Ok(out)
    }

    /// `(x, y:Int, ..)`; duplicate names are rejected.
    fn binders(&mut self) -> PResult<Vec<(String, Option<BaseType>)>> {
        self.expect_sym("(")?;
        let mut out: Vec<(String, Option<BaseType>)> = Vec::new();
        if !self.is_sym(")") {
            loop {
                let at = self.offset();
                let n = self.name("binder")?;
                if out.iter().any(|(m, _)| *m == n) {
                    return Err(self.err_at(at, format!("duplicate binder `{n}`")));
                }
                let ty = if self.eat_sym(":") { Some(self.base_type()?) } else { None };
                out.push((n, ty));
                if !self.eat_sym(",") {
                    break;
                }
            }
        }
        self.expect_sym(")")?;
        Ok(out)
    }

    fn args(&mut self) -> PResult<Vec<Expr>> {
        self.expect_sym("(")?;
        let mut out = Vec::new();
        if !self.is_sym(")") {
            loop {
                out.push(self.expr()?);
                if !self.eat_sym(",") {
                    break;
                }
            }
        }
        self.expect_sym(")")?;
        Ok(out)
    }

    // ---- monitors ---------------------------------------------------------

    pub(crate) fn monitor(&mut self) -> PResult<Monitor> {
        self.enter()?;
        let r = self.monitor_inner();
        self.leave();
        r
    }

    fn monitor_inner(&mut self) -> PResult<Monitor> {
        if self.eat_sym("(") {
            let m = self.monitor()?;
            self.expect_sym(")")?;
            return Ok(m);
        }
        if matches!(self.peek(), Tok::Int(s) if s == "0") {
            self.bump();
            return Ok(Monitor::Nil);
        }
        let kw = match self.peek() {
            Tok::Ident(s) => s.clone(),
            other => return Err(self.err_here(format!("expected a monitor, found {}", Self::describe(other)))),
        };
        if let Some(k) = VerdictKind::from_keyword(&kw) {
            self.bump();
            return Ok(Monitor::Verdict(k));
        }
        match kw.as_str() {
            "recv_int" | "recv_ext" => {
                self.bump();
                let bs = self.branches(|p| {
                    let label = Label::new(p.ident("message label")?);
                    let params = p.binders()?.into_iter().map(|(n, ty)| MonParam::new(n, ty)).collect();
                    let cont = p.guarded(|p| if p.eat_sym(".") { p.monitor() } else { Ok(Monitor::Nil) })?;
                    Ok(MonitorBranch { label, params, cont })
                })?;
                self.check_distinct(bs.iter().map(|(b, at)| (&b.label, *at)))?;
                let bs = bs.into_iter().map(|(b, _)| b).collect();
                Ok(if kw == "recv_int" { Monitor::RecvInternal(bs) } else { Monitor::RecvExternal(bs) })
            }
            "send_int" | "send_ext" => {
                self.bump();
                let label = Label::new(self.ident("message label")?);
                let args = self.args()?;
                let cont = Box::new(self.guarded(|p| if p.eat_sym(".") { p.monitor() } else { Ok(Monitor::Nil) })?);
                Ok(if kw == "send_int" {
                    Monitor::SendInternal { label, args, cont }
                } else {
                    Monitor::SendExternal { label, args, cont }
                })
            }
            "rec" => {
                let x = self.bind_rec()?;
                let body = self.with_binder(&x, |p| p.monitor())?;
                Ok(Monitor::Rec(x, Box::new(body)))
            }
            "if" => {
                self.bump();
                let cond = self.expr()?;
                self.expect_kw("then")?;
                let then = self.monitor()?;
                self.expect_kw("else")?;
                let els = self.monitor()?;
                Ok(Monitor::If { cond, then: Box::new(then), els: Box::new(els) })
            }
            _ => Ok(Monitor::Var(self.rec_var_ref()?)),
        }
    }

    // ---- expressions ------------------------------------------------------

    pub(crate) fn expr(&mut self) -> PResult<Expr> {
        self.enter()?;
        let r = self.or_expr();
        self.leave();
        r
    }

    fn or_expr(&mut self) -> PResult<Expr> {
        let mut e = self.and_expr()?;
        while self.eat_sym("||") {
            e = Expr::bin(BinOp::Or, e, self.and_expr()?);
        }
        Ok(e)
    }

    fn and_expr(&mut self) -> PResult<Expr> {
        let mut e = self.not_expr()?;
        while self.eat_sym("&&") {
            e = Expr::bin(BinOp::And, e, self.not_expr()?);
        }
        Ok(e)
    }

    fn not_expr(&mut self) -> PResult<Expr> {
        if self.eat_sym("!") {
            self.enter()?;
            let e = self.not_expr();
            self.leave();
            return Ok(Expr::Not(Box::new(e?)));
        }
        self.cmp_expr()
    }

    fn cmp_expr(&mut self) -> PResult<Expr> {
        let lhs = self.add_expr()?;
        let op = match self.peek() {
            Tok::Sym("==") => BinOp::Eq,
            Tok::Sym("!=") => BinOp::Ne,
            Tok::Sym("<") => BinOp::Lt,
            Tok::Sym("<=") => BinOp::Le,
            Tok::Sym(">") => BinOp::Gt,
            Tok::Sym(">=") => BinOp::Ge,
            _ => return Ok(lhs),
        };
        self.bump();
        let rhs = self.add_expr()?;
        Ok(Expr::bin(op, lhs, rhs))
    }

    fn add_expr(&mut self) -> PResult<Expr> {
        let mut e = self.atom()?;
        loop {
            let op = match self.peek() {
                Tok::Sym("+") => BinOp::Add,
                Tok::Sym("-") => BinOp::Sub,
                _ => return Ok(e),
            };
            self.bump();
            e = Expr::bin(op, e, self.atom()?);
        }
    }

    fn int_literal(&mut self, negative: bool) -> PResult<Expr> {
        let at = self.offset();
        let Tok::Int(digits) = self.bump() else {
            return Err(self.err_at(at, "expected an integer literal"));
        };
        let text = if negative { format!("-{digits}") } else { digits };
        text.parse::<i64>()
            .map(|i| Expr::Lit(Value::Int(i)))
            .map_err(|_| self.err_at(at, format!("integer literal `{text}` out of range")))
    }

    fn atom(&mut self) -> PResult<Expr> {
        match self.peek().clone() {
            Tok::Int(_) => self.int_literal(false),
            Tok::Sym("-") if matches!(self.peek_at(1), Tok::Int(_)) => {
                self.bump();
                self.int_literal(true)
            }
            Tok::Str(s) => {
                self.bump();
                Ok(Expr::Lit(Value::Str(s)))
            }
            Tok::Sym("(") => {
                self.bump();
                let first = self.expr()?;
                if self.eat_sym(")") {
                    return Ok(first);
                }
                let mut items = vec![first];
                while self.eat_sym(",") {
                    if self.is_sym(")") {
                        break;
                    }
                    items.push(self.expr()?);
                }
                self.expect_sym(")")?;
                Ok(fold_tuple(items))
            }
            Tok::Ident(s) => {
                let at = self.offset();
                match s.as_str() {
                    "tt" | "true" => {
                        self.bump();
                        return Ok(Expr::tt());
                    }
                    "ff" | "false" => {
                        self.bump();
                        return Ok(Expr::ff());
                    }
                    "is_Int" | "is_Str" | "is_Bool" => {
                        self.bump();
                        let ty = match &s[3..] {
                            "Int" => BaseType::Int,
                            "Str" => BaseType::Str,
                            _ => BaseType::Bool,
                        };
                        return self.type_test(ty);
                    }
                    "is" => {
                        self.bump();
                        self.expect_sym("<")?;
                        let ty = self.base_type()?;
                        self.expect_sym(">")?;
                        return self.type_test(ty);
                    }
                    _ => {}
                }
                if is_keyword(&s) {
                    return Err(self.err_at(at, format!("unexpected keyword `{s}` in expression")));
                }
                self.bump();
                if self.is_sym("(") {
                    let args = self.args()?;
                    return Ok(Expr::Call(Name::new(s), args));
                }
                Ok(Expr::Var(Name::new(s)))
            }
            other => Err(self.err_here(format!("expected an expression, found {}", Self::describe(&other)))),
        }
    }

    fn type_test(&mut self, ty: BaseType) -> PResult<Expr> {
        self.expect_sym("(")?;
        let e = self.expr()?;
        self.expect_sym(")")?;
        Ok(Expr::IsType(ty, Box::new(e)))
    }
}

/// A tuple of literals is itself a literal value.
fn fold_tuple(items: Vec<Expr>) -> Expr {
    let lits: Option<Vec<Value>> = items
        .iter()
        .map(|e| match e {
            Expr::Lit(v) => Some(v.clone()),
            _ => None,
        })
        .collect();
    match lits {
        Some(vs) => Expr::Lit(Value::Tuple(vs)),
        None => Expr::Tuple(items),
    }
}
