//! Recursive-descent parser.
//!
//! Precedence, loosest first: `;` sequencing, `:=`, `&&`, comparisons,
//! additive operators (`+ - @ ^`), multiplicative operators (`* / mod`),
//! application.

use std::collections::{HashMap, HashSet};

use crate::effects::{Effect, IAnn, IExpr, Op, OpSet};
use crate::types::{CompType, Type};
use crate::builtins::Prim;

use super::lexer::{lex, Pos, Tok};
use super::syntax::{Expr, Item, Param, Pat, ProcExpr, PromiseExpr};
use super::ParseError;

pub struct Parser {
    toks: Vec<(Tok, Pos)>,
    at: usize,
    type_aliases: HashMap<String, Type>,
    eff_aliases: HashMap<String, Effect>,
    /// Runtime mode admits interrupt syntax, which source programs may not use.
    runtime: bool,
}

type R<T> = Result<T, ParseError>;

impl Parser {
    pub fn new(src: &str, runtime: bool) -> R<Parser> {
        Ok(Parser { toks: lex(src)?, at: 0, type_aliases: HashMap::new(), eff_aliases: HashMap::new(), runtime })
    }

    fn peek(&self) -> &Tok {
        &self.toks[self.at].0
    }

    fn peek_at(&self, k: usize) -> &Tok {
        &self.toks[(self.at + k).min(self.toks.len() - 1)].0
    }

    pub fn pos(&self) -> Pos {
        self.toks[self.at].1
    }

    fn bump(&mut self) -> Tok {
        let t = self.toks[self.at].0.clone();
        if self.at < self.toks.len() - 1 {
            self.at += 1;
        }
        t
    }

    fn is_sym(&self, s: &str) -> bool {
        matches!(self.peek(), Tok::Sym(x) if *x == s)
    }

    fn is_kw(&self, s: &str) -> bool {
        matches!(self.peek(), Tok::Kw(x) if *x == s)
    }

    fn eat_sym(&mut self, s: &str) -> bool {
        if self.is_sym(s) {
            self.bump();
            true
        } else {
            false
        }
    }

    fn eat_kw(&mut self, s: &str) -> bool {
        if self.is_kw(s) {
            self.bump();
            true
        } else {
            false
        }
    }

    fn err<T>(&self, msg: impl Into<String>, expected: &[&str]) -> R<T> {
        Err(ParseError::new(self.pos(), msg, expected.iter().map(|s| s.to_string()).collect()))
    }

    fn unexpected<T>(&self, expected: &[&str]) -> R<T> {
        self.err(format!("unexpected {}", self.peek()), expected)
    }

    fn expect_sym(&mut self, s: &'static str) -> R<()> {
        if self.eat_sym(s) {
            Ok(())
        } else {
            self.unexpected(&[s])
        }
    }

    fn expect_kw(&mut self, s: &'static str) -> R<()> {
        if self.eat_kw(s) {
            Ok(())
        } else {
            self.unexpected(&[s])
        }
    }

    fn ident(&mut self) -> R<String> {
        match self.peek().clone() {
            Tok::Ident(s) => {
                self.bump();
                Ok(s)
            }
            _ => self.unexpected(&["identifier"]),
        }
    }

    pub fn at_eof(&self) -> bool {
        matches!(self.peek(), Tok::Eof)
    }

    pub fn expect_eof(&self) -> R<()> {
        if self.at_eof() {
            Ok(())
        } else {
            self.unexpected(&["end of input"])
        }
    }

    /// Every identifier in the token stream; fresh names avoid these.
    pub fn idents(&self) -> HashSet<String> {
        self.toks
            .iter()
            .filter_map(|(t, _)| match t {
                Tok::Ident(s) => Some(s.clone()),
                _ => None,
            })
            .collect()
    }

    // -----------------------------------------------------------------
    // Types and effects

    pub fn ty(&mut self) -> R<Type> {
        let lhs = self.sum_ty()?;
        if self.eat_sym("->") {
            let rhs = self.ty()?;
            let eff = if self.eat_sym("!") { self.effect()? } else { Effect::pure() };
            return Ok(Type::fun(lhs, rhs, eff));
        }
        Ok(lhs)
    }

    fn sum_ty(&mut self) -> R<Type> {
        let lhs = self.prod_ty()?;
        if self.eat_sym("+") {
            return Ok(Type::sum(lhs, self.sum_ty()?));
        }
        Ok(lhs)
    }

    fn prod_ty(&mut self) -> R<Type> {
        let lhs = self.postfix_ty()?;
        if self.eat_sym("*") {
            return Ok(Type::prod(lhs, self.prod_ty()?));
        }
        Ok(lhs)
    }

    fn postfix_ty(&mut self) -> R<Type> {
        let mut t = self.atom_ty()?;
        loop {
            if self.eat_kw("promise") {
                t = Type::promise(t);
                continue;
            }
            match self.peek() {
                Tok::Ident(s) if s == "box" => t = Type::boxed(t),
                Tok::Ident(s) if s == "list" => t = Type::list(t),
                Tok::Ident(s) if s == "ref" => t = Type::reference(t),
                _ => return Ok(t),
            }
            self.bump();
        }
    }

    fn atom_ty(&mut self) -> R<Type> {
        if self.eat_sym("(") {
            let t = self.ty()?;
            self.expect_sym(")")?;
            return Ok(t);
        }
        let name = self.ident()?;
        Ok(match name.as_str() {
            "int" => Type::Int,
            "bool" => Type::Bool,
            "string" => Type::Str,
            "unit" => Type::Unit,
            "empty" => Type::Empty,
            _ => match self.type_aliases.get(&name) {
                Some(t) => t.clone(),
                None => return self.err(format!("unknown type `{name}`"), &["type"]),
            },
        })
    }

    fn op_name(&mut self) -> R<Op> {
        Ok(Op::from(self.ident()?.as_str()))
    }

    fn oset(&mut self) -> R<OpSet> {
        self.expect_sym("{")?;
        let mut o = OpSet::new();
        if !self.is_sym("}") {
            loop {
                o.insert(self.op_name()?);
                if !self.eat_sym(",") {
                    break;
                }
            }
        }
        self.expect_sym("}")?;
        Ok(o)
    }

    /// `(oset, iann)`, a bare signal set, or an effect alias.
    pub fn effect(&mut self) -> R<Effect> {
        let pos = self.pos();
        if self.is_sym("{") {
            return Ok(Effect::new(self.oset()?, IAnn::empty()));
        }
        if self.eat_sym("(") {
            let o = self.oset()?;
            self.expect_sym(",")?;
            let e = self.iexpr()?;
            self.expect_sym(")")?;
            let i = IAnn::compile(&e).map_err(|err| ParseError::new(pos, err.to_string(), vec![]))?;
            return Ok(Effect::new(o, i));
        }
        let name = self.ident()?;
        match self.eff_aliases.get(&name) {
            Some(e) => Ok(e.clone()),
            None => Err(ParseError::new(pos, format!("unknown effect `{name}`"), vec!["effect".into()])),
        }
    }

    fn iexpr(&mut self) -> R<IExpr> {
        if self.eat_kw("rec") {
            let t = self.ident()?;
            self.expect_sym(".")?;
            return Ok(IExpr::Mu(t, Box::new(self.iexpr()?)));
        }
        if self.eat_sym("{") {
            let mut entries = vec![];
            if !self.is_sym("}") {
                loop {
                    let op = self.op_name()?;
                    self.expect_sym("->")?;
                    let (o, i) = self.entry_value()?;
                    entries.push((op, o, i));
                    if !self.eat_sym(",") {
                        break;
                    }
                }
            }
            self.expect_sym("}")?;
            return Ok(IExpr::Map(entries));
        }
        Ok(IExpr::Var(self.ident()?))
    }

    fn entry_value(&mut self) -> R<(OpSet, IExpr)> {
        if self.is_sym("{") {
            return Ok((self.oset()?, IExpr::Map(vec![])));
        }
        if self.eat_sym("(") {
            let o = self.oset()?;
            self.expect_sym(",")?;
            let i = self.iexpr()?;
            self.expect_sym(")")?;
            return Ok((o, i));
        }
        let pos = self.pos();
        let name = self.ident()?;
        match self.eff_aliases.get(&name) {
            Some(e) => Ok((e.o.clone(), e.i.to_expr())),
            None => Err(ParseError::new(pos, format!("unknown effect `{name}`"), vec!["effect".into()])),
        }
    }

    pub fn comp_type(&mut self) -> R<CompType> {
        let ty = self.ty()?;
        let eff = if self.eat_sym("!") { self.effect()? } else { Effect::pure() };
        Ok(CompType::new(ty, eff))
    }

    // -----------------------------------------------------------------
    // Patterns and parameters

    fn pat(&mut self) -> R<Pat> {
        if self.eat_sym("(") {
            if self.eat_sym(")") {
                return Ok(Pat::Unit);
            }
            let a = self.pat()?;
            if self.eat_sym(",") {
                let b = self.pat()?;
                self.expect_sym(")")?;
                return Ok(Pat::Tuple(Box::new(a), Box::new(b)));
            }
            self.expect_sym(")")?;
            return Ok(a);
        }
        let x = self.ident()?;
        Ok(if x == "_" { Pat::Wild } else { Pat::Var(x) })
    }

    fn starts_param(&self) -> bool {
        matches!(self.peek(), Tok::Ident(_)) || self.is_sym("(")
    }

    /// `x`, `_`, `()`, `(x, y)` or `(p : T)`.
    fn param(&mut self) -> R<Param> {
        if self.is_sym("(") {
            let save = self.at;
            self.bump();
            if self.eat_sym(")") {
                return Ok(Param { pat: Pat::Unit, ty: None });
            }
            let p = self.pat()?;
            if self.eat_sym(":") {
                let t = self.ty()?;
                self.expect_sym(")")?;
                return Ok(Param { pat: p, ty: Some(t) });
            }
            self.at = save;
        }
        Ok(Param { pat: self.pat()?, ty: None })
    }

    fn arrow(&mut self) -> R<()> {
        if self.eat_sym("|->") || self.eat_sym("->") {
            Ok(())
        } else {
            self.unexpected(&["|->", "->"])
        }
    }

    // -----------------------------------------------------------------
    // Expressions

    pub fn expr(&mut self) -> R<Expr> {
        if self.is_kw("let") {
            return self.let_expr();
        }
        if self.eat_kw("fun") {
            let mut params = vec![self.param()?];
            while self.starts_param() {
                params.push(self.param()?);
            }
            let ret = if self.eat_sym(":") { Some(self.ty()?) } else { None };
            self.arrow()?;
            let body = self.expr()?;
            return Ok(Expr::Fun(params, ret, Box::new(body)));
        }
        if self.eat_kw("rec") {
            let f = self.ident()?;
            let p = self.param()?;
            let ret = if self.eat_sym(":") { Some(self.ty()?) } else { None };
            self.arrow()?;
            let body = self.expr()?;
            return Ok(Expr::RecFun(f, p, ret, Box::new(body)));
        }
        if self.eat_kw("if") {
            let c = self.expr()?;
            self.expect_kw("then")?;
            let a = self.expr()?;
            self.expect_kw("else")?;
            let b = self.expr()?;
            return Ok(Expr::If(Box::new(c), Box::new(a), Box::new(b)));
        }
        if self.is_kw("match") {
            return self.match_expr();
        }
        let lhs = self.assign()?;
        if self.eat_sym(";") {
            let rhs = self.expr()?;
            return Ok(Expr::Seq(Box::new(lhs), Box::new(rhs)));
        }
        Ok(lhs)
    }

    fn let_expr(&mut self) -> R<Expr> {
        let pos = self.pos();
        self.expect_kw("let")?;
        if self.eat_kw("rec") {
            let f = self.ident()?;
            let mut params = vec![];
            while self.starts_param() {
                params.push(self.param()?);
            }
            let ret = if self.eat_sym(":") { Some(self.ty()?) } else { None };
            self.expect_sym("=")?;
            let body = self.expr()?;
            self.expect_kw("in")?;
            let cont = self.expr()?;
            return Ok(Expr::LetRec(f, params, ret, Box::new(body), Box::new(cont), pos));
        }
        // `let f x y = ...` defines a function; `let p = ...` binds a pattern.
        if let Tok::Ident(f) = self.peek().clone() {
            if !matches!(self.peek_at(1), Tok::Sym("=") | Tok::Sym(",")) {
                self.bump();
                let mut params = vec![];
                while self.starts_param() {
                    params.push(self.param()?);
                }
                let ret = if self.eat_sym(":") { Some(self.ty()?) } else { None };
                self.expect_sym("=")?;
                let body = self.expr()?;
                self.expect_kw("in")?;
                let cont = self.expr()?;
                if params.is_empty() {
                    return Ok(Expr::Let(Pat::Var(f), Box::new(body), Box::new(cont)));
                }
                return Ok(Expr::LetFun(f, params, ret, Box::new(body), Box::new(cont)));
            }
        }
        let p = self.let_pat()?;
        self.expect_sym("=")?;
        let rhs = self.expr()?;
        self.expect_kw("in")?;
        let cont = self.expr()?;
        Ok(Expr::Let(p, Box::new(rhs), Box::new(cont)))
    }

    /// Let patterns may omit the outer parentheses of a tuple: `let a, b = ...`.
    fn let_pat(&mut self) -> R<Pat> {
        let p = self.pat()?;
        if self.eat_sym(",") {
            let q = self.let_pat()?;
            return Ok(Pat::Tuple(Box::new(p), Box::new(q)));
        }
        Ok(p)
    }

    fn match_expr(&mut self) -> R<Expr> {
        self.expect_kw("match")?;
        let ann = if self.eat_sym("{") {
            let t = self.ty()?;
            self.expect_sym("}")?;
            Some(t)
        } else {
            None
        };
        let scrut = self.expr()?;
        self.expect_kw("with")?;
        if self.is_sym("{") && matches!(self.peek_at(1), Tok::Sym("}")) {
            self.bump();
            self.bump();
            return Ok(Expr::MatchEmpty(Box::new(scrut), ann));
        }
        self.eat_sym("|");
        if self.eat_kw("inl") {
            let p = self.pat()?;
            self.arrow()?;
            let a = self.expr()?;
            self.expect_sym("|")?;
            self.expect_kw("inr")?;
            let q = self.pat()?;
            self.arrow()?;
            let b = self.expr()?;
            return Ok(Expr::MatchSum(Box::new(scrut), p, Box::new(a), q, Box::new(b)));
        }
        if self.eat_kw("inr") {
            let q = self.pat()?;
            self.arrow()?;
            let b = self.expr()?;
            self.expect_sym("|")?;
            self.expect_kw("inl")?;
            let p = self.pat()?;
            self.arrow()?;
            let a = self.expr()?;
            return Ok(Expr::MatchSum(Box::new(scrut), p, Box::new(a), q, Box::new(b)));
        }
        let p = self.pat()?;
        self.arrow()?;
        let body = self.expr()?;
        Ok(Expr::MatchTuple(Box::new(scrut), p, Box::new(body)))
    }

    fn assign(&mut self) -> R<Expr> {
        let lhs = self.and()?;
        let pos = self.pos();
        if self.eat_sym(":=") {
            let rhs = self.and()?;
            return Ok(Expr::Assign(Box::new(lhs), Box::new(rhs), pos));
        }
        Ok(lhs)
    }

    fn and(&mut self) -> R<Expr> {
        let mut lhs = self.cmp()?;
        while self.eat_sym("&&") {
            let rhs = self.cmp()?;
            lhs = Expr::Bin(Prim::And, Box::new(lhs), Box::new(rhs));
        }
        Ok(lhs)
    }

    fn cmp(&mut self) -> R<Expr> {
        let lhs = self.add()?;
        let op = match self.peek() {
            Tok::Sym("=") => Prim::Eq,
            Tok::Sym("<>") => Prim::Neq,
            Tok::Sym("<") => Prim::Lt,
            Tok::Sym("<=") => Prim::Le,
            Tok::Sym(">") => Prim::Gt,
            Tok::Sym(">=") => Prim::Ge,
            _ => return Ok(lhs),
        };
        self.bump();
        let rhs = self.add()?;
        Ok(Expr::Bin(op, Box::new(lhs), Box::new(rhs)))
    }

    fn add(&mut self) -> R<Expr> {
        let mut lhs = self.mul()?;
        loop {
            let op = match self.peek() {
                Tok::Sym("+") => Prim::Add,
                Tok::Sym("-") => Prim::Sub,
                Tok::Sym("@") => Prim::Append,
                Tok::Sym("^") => Prim::Concat,
                _ => return Ok(lhs),
            };
            self.bump();
            let rhs = self.mul()?;
            lhs = Expr::Bin(op, Box::new(lhs), Box::new(rhs));
        }
    }

    fn mul(&mut self) -> R<Expr> {
        let mut lhs = self.unary()?;
        loop {
            let op = match self.peek() {
                Tok::Sym("*") => Prim::Mul,
                Tok::Sym("/") => Prim::Div,
                Tok::Kw("mod") => Prim::Mod,
                _ => return Ok(lhs),
            };
            self.bump();
            let rhs = self.unary()?;
            lhs = Expr::Bin(op, Box::new(lhs), Box::new(rhs));
        }
    }

    fn unary(&mut self) -> R<Expr> {
        if self.eat_sym("-") {
            return Ok(Expr::Neg(Box::new(self.unary()?)));
        }
        self.app()
    }

    fn starts_atom(&self) -> bool {
        match self.peek() {
            Tok::Ident(_) | Tok::Int(_) | Tok::Str(_) => true,
            Tok::Kw(k) => matches!(*k, "true" | "false" | "inl" | "inr"),
            Tok::Sym(s) => matches!(*s, "(" | "[" | "[|" | "<<" | "!" | "$" | "!->" | "!<-"),
            _ => false,
        }
    }

    fn app(&mut self) -> R<Expr> {
        match self.peek() {
            Tok::Kw("return") => {
                self.bump();
                return Ok(Expr::Return(Box::new(self.and()?)));
            }
            Tok::Kw("send") => {
                self.bump();
                let op = self.op_name()?;
                let arg = self.atom()?;
                return Ok(Expr::Send(op, Box::new(arg)));
            }
            Tok::Kw("await") => {
                self.bump();
                let v = self.atom()?;
                if self.eat_kw("until") {
                    self.expect_sym("<<")?;
                    let x = self.ident()?;
                    self.expect_sym(">>")?;
                    self.expect_kw("in")?;
                    let body = self.expr()?;
                    return Ok(Expr::Await(Box::new(v), Some((x, Box::new(body)))));
                }
                return Ok(Expr::Await(Box::new(v), None));
            }
            Tok::Kw("unbox") => {
                self.bump();
                let v = self.atom()?;
                if self.eat_kw("as") {
                    self.expect_sym("[|")?;
                    let x = self.ident()?;
                    self.expect_sym("|]")?;
                    self.expect_kw("in")?;
                    let body = self.expr()?;
                    return Ok(Expr::Unbox(Box::new(v), Some((x, Box::new(body)))));
                }
                return Ok(Expr::Unbox(Box::new(v), None));
            }
            Tok::Kw("spawn") => {
                self.bump();
                return match self.atom()? {
                    Expr::Tuple(m, n) => Ok(Expr::Spawn(m, Some(n))),
                    m => Ok(Expr::Spawn(Box::new(m), None)),
                };
            }
            Tok::Kw("promise") => return self.promise(),
            Tok::Ident(s) if s.starts_with("process_") || s == "process" => {
                if let Some(e) = self.process_op()? {
                    return Ok(e);
                }
            }
            _ => {}
        }
        let mut head = self.atom()?;
        while self.starts_atom() {
            let arg = self.atom()?;
            head = Expr::App(Box::new(head), Box::new(arg));
        }
        Ok(head)
    }

    /// `process_op p with (<<x>> |-> M)` or `process op p with ...`.
    fn process_op(&mut self) -> R<Option<Expr>> {
        let save = self.at;
        let Tok::Ident(word) = self.bump() else { unreachable!() };
        let op = if word == "process" {
            match self.peek().clone() {
                Tok::Ident(op) => {
                    self.bump();
                    op
                }
                _ => {
                    self.at = save;
                    return Ok(None);
                }
            }
        } else {
            word["process_".len()..].to_string()
        };
        if !self.starts_atom() {
            self.at = save;
            return Ok(None);
        }
        let p = self.atom()?;
        if !self.eat_kw("with") {
            self.at = save;
            return Ok(None);
        }
        self.expect_sym("(")?;
        self.expect_sym("<<")?;
        let x = self.ident()?;
        self.expect_sym(">>")?;
        self.arrow()?;
        let body = self.expr()?;
        self.expect_sym(")")?;
        Ok(Some(Expr::ProcessOp(Op::from(op.as_str()), Box::new(p), x, Box::new(body))))
    }

    fn promise(&mut self) -> R<Expr> {
        self.expect_kw("promise")?;
        self.expect_sym("(")?;
        let op = self.op_name()?;
        let pat = self.pat()?;
        let mut r = None;
        let mut s = None;
        if let Tok::Ident(x) = self.peek().clone() {
            self.bump();
            r = Some(x);
            if self.starts_param() {
                let p = self.param()?;
                s = Some((p.pat, p.ty));
            }
        }
        let guard = if self.eat_kw("when") { Some(Box::new(self.expr()?)) } else { None };
        self.arrow()?;
        let body = self.expr()?;
        self.expect_sym(")")?;
        let state = if self.eat_sym("@") { Some(Box::new(self.atom()?)) } else { None };
        let cont = if self.eat_kw("as") {
            let p = self.ident()?;
            self.expect_kw("in")?;
            Some((p, Box::new(self.expr()?)))
        } else {
            None
        };
        Ok(Expr::Promise(PromiseExpr { op, pat, r, s, guard, body: Box::new(body), state, cont }))
    }

    fn atom(&mut self) -> R<Expr> {
        let pos = self.pos();
        match self.bump() {
            Tok::Ident(x) => Ok(Expr::Var(x, pos)),
            Tok::Int(n) => Ok(Expr::Int(n)),
            Tok::Str(s) => Ok(Expr::Str(s)),
            Tok::Kw("true") => Ok(Expr::Bool(true)),
            Tok::Kw("false") => Ok(Expr::Bool(false)),
            Tok::Kw(k @ ("inl" | "inr")) => {
                let ann = if self.eat_sym("{") {
                    let t = self.ty()?;
                    self.expect_sym("}")?;
                    Some(t)
                } else {
                    None
                };
                let v = Box::new(self.atom()?);
                Ok(if k == "inl" { Expr::Inl(ann, v) } else { Expr::Inr(ann, v) })
            }
            Tok::Sym("(") => {
                if self.eat_sym(")") {
                    return Ok(Expr::Unit);
                }
                let e = self.expr()?;
                if self.eat_sym(",") {
                    let f = self.expr()?;
                    self.expect_sym(")")?;
                    return Ok(Expr::Tuple(Box::new(e), Box::new(f)));
                }
                self.expect_sym(")")?;
                Ok(e)
            }
            Tok::Sym("[") => {
                let mut items = vec![];
                if !self.is_sym("]") {
                    loop {
                        items.push(self.assign()?);
                        if !self.eat_sym(";") {
                            break;
                        }
                    }
                }
                self.expect_sym("]")?;
                let ann = if self.is_sym("{") {
                    self.bump();
                    let t = self.ty()?;
                    self.expect_sym("}")?;
                    Some(t)
                } else {
                    None
                };
                Ok(Expr::List(items, ann))
            }
            Tok::Sym("[|") => {
                let e = self.expr()?;
                self.expect_sym("|]")?;
                Ok(Expr::Boxed(Box::new(e)))
            }
            Tok::Sym("<<") => {
                let e = self.expr()?;
                self.expect_sym(">>")?;
                Ok(Expr::Fulfilled(Box::new(e)))
            }
            Tok::Sym("!") => Ok(Expr::Deref(Box::new(self.atom()?), pos)),
            Tok::Sym("$") => {
                let name = self.ident()?;
                self.expect_sym("(")?;
                let mut args = vec![];
                if !self.is_sym(")") {
                    loop {
                        args.push(self.expr()?);
                        if !self.eat_sym(",") {
                            break;
                        }
                    }
                }
                self.expect_sym(")")?;
                Ok(Expr::PrimLit(name, args, pos))
            }
            Tok::Sym(s @ ("!->" | "!<-")) => {
                if s == "!<-" && !self.runtime {
                    return Err(ParseError::new(
                        pos,
                        "interrupts cannot be written in source programs; inject them at run time",
                        vec![],
                    ));
                }
                let op = self.op_name()?;
                self.expect_sym("(")?;
                let v = self.expr()?;
                self.expect_sym(",")?;
                let k = self.expr()?;
                self.expect_sym(")")?;
                Ok(if s == "!->" {
                    Expr::Signal(op, Box::new(v), Box::new(k))
                } else {
                    Expr::Interrupt(op, Box::new(v), Box::new(k), pos)
                })
            }
            t => {
                self.at -= 1;
                let _ = t;
                self.unexpected(&["expression"])
            }
        }
    }

    // -----------------------------------------------------------------
    // Processes and programs

    pub fn process(&mut self) -> R<ProcExpr> {
        let lhs = self.proc_atom()?;
        if self.eat_sym("||") {
            let rhs = self.process()?;
            return Ok(ProcExpr::Par(Box::new(lhs), Box::new(rhs)));
        }
        Ok(lhs)
    }

    fn proc_atom(&mut self) -> R<ProcExpr> {
        let pos = self.pos();
        if self.eat_kw("run") {
            let m = self.expr()?;
            let ann = if self.eat_sym(":") {
                let t = self.ty()?;
                let e = if self.eat_sym("!") { Some(self.effect()?) } else { None };
                Some((t, e))
            } else {
                None
            };
            return Ok(ProcExpr::Run(m, ann, pos));
        }
        if self.eat_sym("(") {
            let p = self.process()?;
            self.expect_sym(")")?;
            return Ok(p);
        }
        if self.is_sym("!->") || self.is_sym("!<-") {
            let Tok::Sym(s) = self.bump() else { unreachable!() };
            if s == "!<-" && !self.runtime {
                return Err(ParseError::new(
                    pos,
                    "interrupts cannot be written in source programs; inject them at run time",
                    vec![],
                ));
            }
            let op = self.op_name()?;
            self.expect_sym("(")?;
            let v = self.expr()?;
            self.expect_sym(",")?;
            let p = self.process()?;
            self.expect_sym(")")?;
            return Ok(if s == "!->" {
                ProcExpr::Signal(op, v, Box::new(p))
            } else {
                ProcExpr::Interrupt(op, v, Box::new(p), pos)
            });
        }
        self.unexpected(&["run", "(", "!->"])
    }

    pub fn items(&mut self) -> R<Vec<Item>> {
        let mut items = vec![];
        while !self.at_eof() {
            let pos = self.pos();
            match self.peek().clone() {
                Tok::Pragma(words) => {
                    self.bump();
                    items.push(Item::Extensions(words, pos));
                }
                Tok::Kw("operation") => {
                    self.bump();
                    let op = self.op_name()?;
                    self.expect_sym(":")?;
                    let t = self.ty()?;
                    items.push(Item::Operation(op, t, pos));
                }
                Tok::Kw("type") => {
                    self.bump();
                    let name = self.ident()?;
                    self.expect_sym("=")?;
                    let t = self.ty()?;
                    self.type_aliases.insert(name, t);
                }
                Tok::Kw("effect") => {
                    self.bump();
                    let name = self.ident()?;
                    self.expect_sym("=")?;
                    let e = self.effect()?;
                    self.eff_aliases.insert(name, e);
                }
                Tok::Kw("let") => {
                    self.bump();
                    let rec = self.eat_kw("rec");
                    let name = self.ident()?;
                    let mut params = vec![];
                    while self.starts_param() {
                        params.push(self.param()?);
                    }
                    let ret = if self.eat_sym(":") { Some(self.ty()?) } else { None };
                    self.expect_sym("=")?;
                    let body = self.expr()?;
                    items.push(Item::Def { name, rec, params, ret, body, pos });
                }
                _ => items.push(Item::Process(self.process()?)),
            }
        }
        Ok(items)
    }
}
