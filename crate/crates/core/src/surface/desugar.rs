//! Desugaring of the surface tree into core terms.
//!
//! Output is in A-normal form: every non-value argument is bound by a `let`
//! to a fresh `_tN` name first, evaluated left to right. Builtin names
//! applied to fewer value arguments than their arity fold into partial
//! application constants, so the checker sees `$map(f) xs` directly.

use std::collections::{BTreeMap, HashMap, HashSet};
use std::sync::Arc;

use serde::Serialize;
use thiserror::Error;

use crate::ast::{name, Comp, Const, Handler, Lambda, Name, Proc, Value};
use crate::builtins::Prim;
use crate::effects::Op;
use crate::subst::fv_value;
use crate::types::Type;

use super::lexer::Pos;
use super::syntax::{Expr, Item, Param, Pat, ProcExpr, PromiseExpr};
use super::{Extensions, Program, RunAnnotation};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum DesugarKind {
    ExtensionDisabled,
    UndeclaredOperation,
    DuplicateDeclaration,
    UnknownBuiltin,
    MissingStateAnnotation,
    NotAValue,
    NoProcess,
}

#[derive(Debug, Clone, PartialEq, Eq, Error, Serialize)]
#[error("{pos}: {msg}")]
pub struct DesugarError {
    pub kind: DesugarKind,
    pub pos: Pos,
    pub msg: String,
}

type R<T> = Result<T, DesugarError>;

pub struct Desugarer {
    sig: Option<BTreeMap<Op, Type>>,
    ext: Extensions,
    used: HashSet<String>,
    counter: usize,
    scope: Vec<String>,
    globals: HashMap<String, Value>,
    pos: Pos,
}

fn wrap(binds: Vec<(Name, Comp)>, body: Comp) -> Comp {
    binds.into_iter().rev().fold(body, |n, (x, m)| Comp::Let(x, Arc::new(m), Arc::new(n)))
}

/// Builtins reachable by name from source programs.
fn surface_prim(x: &str) -> Option<Prim> {
    Prim::from_name(x).filter(|p| *p != Prim::Pick)
}

impl Desugarer {
    fn new(sig: Option<BTreeMap<Op, Type>>, ext: Extensions, used: HashSet<String>) -> Desugarer {
        Desugarer { sig, ext, used, counter: 0, scope: vec![], globals: HashMap::new(), pos: Pos::default() }
    }

    /// Desugarer for runtime syntax: no signature checks, all extensions.
    pub fn runtime(used: HashSet<String>) -> Desugarer {
        Desugarer::new(None, Extensions::all(), used)
    }

    fn err<T>(&self, kind: DesugarKind, msg: impl Into<String>) -> R<T> {
        Err(DesugarError { kind, pos: self.pos, msg: msg.into() })
    }

    fn fresh(&mut self) -> Name {
        loop {
            let s = format!("_t{}", self.counter);
            self.counter += 1;
            if !self.used.contains(&s) {
                return name(&s);
            }
        }
    }

    fn bound(&self, x: &str) -> bool {
        self.scope.iter().rev().any(|y| y == x)
    }

    fn check_op(&self, op: &Op) -> R<()> {
        match &self.sig {
            Some(sig) if !sig.contains_key(op) => {
                self.err(DesugarKind::UndeclaredOperation, format!("operation `{op}` is not declared"))
            }
            _ => Ok(()),
        }
    }

    fn check_prim(&self, p: Prim) -> R<()> {
        if p.is_ref_op() && !self.ext.refs {
            return self.err(
                DesugarKind::ExtensionDisabled,
                format!("`{}` needs `#extensions refs`", p.name()),
            );
        }
        Ok(())
    }

    // -----------------------------------------------------------------
    // Patterns

    fn pat_name(&mut self, p: &Pat) -> Name {
        match p {
            Pat::Var(x) => name(x),
            _ => self.fresh(),
        }
    }

    /// Runs `f` with the variables of `p` in scope, destructuring `x`.
    fn under(&mut self, p: &Pat, x: &Name, f: &mut dyn FnMut(&mut Self) -> R<Comp>) -> R<Comp> {
        match p {
            Pat::Var(v) => {
                self.scope.push(v.clone());
                let c = f(self);
                self.scope.pop();
                c
            }
            Pat::Wild | Pat::Unit => f(self),
            Pat::Tuple(a, b) => {
                let na = self.pat_name(a);
                let nb = self.pat_name(b);
                let c = self.under(a, &na, &mut |s| s.under(b, &nb, f))?;
                Ok(Comp::MatchPair(Value::Var(x.clone()), na, nb, Arc::new(c)))
            }
        }
    }

    // -----------------------------------------------------------------
    // Values

    fn fun_value(&mut self, params: &[Param], ret: &Option<Type>, body: &Expr) -> R<Value> {
        let (p, rest) = params.split_first().expect("at least one parameter");
        let x = self.pat_name(&p.pat);
        let c = self.under(&p.pat, &x, &mut |s| {
            if rest.is_empty() {
                s.comp(body)
            } else {
                Ok(Comp::Return(s.fun_value(rest, ret, body)?))
            }
        })?;
        let ret = if rest.is_empty() { ret.clone() } else { None };
        let param_ty = match (&p.ty, &p.pat) {
            (None, Pat::Unit) => Some(Type::Unit),
            (t, _) => t.clone(),
        };
        Ok(Value::Fun(Arc::new(Lambda { rec_name: None, param: x, param_ty, ret, body: c })))
    }

    fn rec_value(&mut self, f: &str, params: &[Param], ret: &Option<Type>, body: &Expr) -> R<Value> {
        if !self.ext.rec {
            return self.err(DesugarKind::ExtensionDisabled, "recursive definitions need `#extensions rec`");
        }
        if params.is_empty() {
            return self.err(DesugarKind::NotAValue, format!("recursive definition `{f}` needs a parameter"));
        }
        self.scope.push(f.to_string());
        let v = self.fun_value(params, ret, body);
        self.scope.pop();
        match v? {
            Value::Fun(l) => {
                let mut l = (*l).clone();
                l.rec_name = Some(name(f));
                Ok(Value::Fun(Arc::new(l)))
            }
            _ => unreachable!(),
        }
    }

    fn prim_value(&self, p: Prim, args: Vec<Value>) -> Value {
        Value::Const(Const::Prim(p, Arc::new(args)))
    }

    /// Head and arguments of an application spine.
    fn spine(e: &Expr) -> (&Expr, Vec<&Expr>) {
        let mut args = vec![];
        let mut head = e;
        while let Expr::App(f, a) = head {
            args.push(&**a);
            head = f;
        }
        args.reverse();
        (head, args)
    }

    fn builtin_head(&self, e: &Expr) -> Option<Prim> {
        match e {
            Expr::Var(x, _) if !self.bound(x) && !self.globals.contains_key(x) => surface_prim(x),
            _ => None,
        }
    }

    /// Evaluates `e` to a value, recording any computation it needs in `binds`.
    fn value_in(&mut self, e: &Expr, binds: &mut Vec<(Name, Comp)>) -> R<Value> {
        Ok(match e {
            Expr::Var(x, pos) => {
                self.pos = *pos;
                if self.bound(x) {
                    Value::Var(name(x))
                } else if let Some(v) = self.globals.get(x) {
                    v.clone()
                } else if let Some(p) = surface_prim(x) {
                    self.check_prim(p)?;
                    self.prim_value(p, vec![])
                } else {
                    Value::Var(name(x))
                }
            }
            Expr::Unit => Value::Unit,
            Expr::Int(n) => Value::int(*n),
            Expr::Bool(b) => Value::bool(*b),
            Expr::Str(s) => Value::str(s),
            Expr::Tuple(a, b) => {
                let va = self.value_in(a, binds)?;
                let vb = self.value_in(b, binds)?;
                Value::pair(va, vb)
            }
            Expr::Inl(t, a) => Value::Inl(t.clone(), Arc::new(self.value_in(a, binds)?)),
            Expr::Inr(t, a) => Value::Inr(t.clone(), Arc::new(self.value_in(a, binds)?)),
            Expr::Fun(params, ret, body) => self.fun_value(params, ret, body)?,
            Expr::RecFun(f, p, ret, body) => self.rec_value(f, std::slice::from_ref(p), ret, body)?,
            Expr::Fulfilled(a) => Value::fulfilled(self.value_in(a, binds)?),
            Expr::Boxed(a) => Value::boxed(self.value_in(a, binds)?),
            Expr::List(items, t) => {
                let mut vs = vec![];
                for it in items {
                    vs.push(self.value_in(it, binds)?);
                }
                Value::list(t.clone(), vs)
            }
            Expr::Neg(a) if matches!(**a, Expr::Int(_)) => {
                let Expr::Int(n) = **a else { unreachable!() };
                Value::int(n.wrapping_neg())
            }
            Expr::PrimLit(p, args, pos) => {
                self.pos = *pos;
                let mut vs = vec![];
                for a in args {
                    vs.push(self.value_in(a, binds)?);
                }
                if p == "loc" {
                    return match vs.as_slice() {
                        [Value::Const(Const::Int(n))] if *n >= 0 => Ok(Value::Const(Const::Loc(*n as u32))),
                        _ => self.err(DesugarKind::NotAValue, "`$loc` takes one non-negative integer"),
                    };
                }
                let Some(prim) = Prim::from_name(p) else {
                    return self.err(DesugarKind::UnknownBuiltin, format!("unknown builtin `{p}`"));
                };
                if vs.len() >= prim.arity() {
                    return self.err(
                        DesugarKind::NotAValue,
                        format!("`${p}` takes fewer than {} arguments", prim.arity()),
                    );
                }
                self.prim_value(prim, vs)
            }
            Expr::App(..) => {
                let (head, args) = Self::spine(e);
                match self.builtin_head(head) {
                    Some(p) if args.len() < p.arity() => {
                        self.check_prim(p)?;
                        let mut vs = vec![];
                        for a in args {
                            vs.push(self.value_in(a, binds)?);
                        }
                        self.prim_value(p, vs)
                    }
                    _ => self.bind_comp(e, binds)?,
                }
            }
            _ => self.bind_comp(e, binds)?,
        })
    }

    fn bind_comp(&mut self, e: &Expr, binds: &mut Vec<(Name, Comp)>) -> R<Value> {
        let c = self.comp(e)?;
        if let Comp::Return(v) = &c {
            if !matches!(e, Expr::Return(_)) {
                return Ok(v.clone());
            }
        }
        let t = self.fresh();
        binds.push((t.clone(), c));
        Ok(Value::Var(t))
    }

    /// A closed value: fails if evaluation would be needed.
    pub fn value(&mut self, e: &Expr) -> R<Value> {
        let mut binds = vec![];
        let v = self.value_in(e, &mut binds)?;
        if !binds.is_empty() {
            return self.err(DesugarKind::NotAValue, "expected a value");
        }
        Ok(v)
    }

    // -----------------------------------------------------------------
    // Computations

    pub fn comp(&mut self, e: &Expr) -> R<Comp> {
        let mut binds = vec![];
        let c = self.comp_in(e, &mut binds)?;
        Ok(wrap(binds, c))
    }

    fn scoped(&mut self, x: &str, e: &Expr) -> R<Comp> {
        self.scope.push(x.to_string());
        let c = self.comp(e);
        self.scope.pop();
        c
    }

    fn comp_in(&mut self, e: &Expr, binds: &mut Vec<(Name, Comp)>) -> R<Comp> {
        Ok(match e {
            Expr::Return(a) => Comp::Return(self.value_in(a, binds)?),
            Expr::Let(pat, rhs, body) => {
                let m = self.comp(rhs)?;
                let x = self.pat_name(pat);
                let n = self.under(pat, &x, &mut |s| s.comp(body))?;
                Comp::Let(x, Arc::new(m), Arc::new(n))
            }
            Expr::LetFun(f, params, ret, body, cont) => {
                let v = self.fun_value(params, ret, body)?;
                Comp::Let(name(f), Arc::new(Comp::Return(v)), Arc::new(self.scoped(f, cont)?))
            }
            Expr::LetRec(f, params, ret, body, cont, pos) => {
                self.pos = *pos;
                let v = self.rec_value(f, params, ret, body)?;
                Comp::Let(name(f), Arc::new(Comp::Return(v)), Arc::new(self.scoped(f, cont)?))
            }
            Expr::Seq(a, b) => {
                let m = self.comp(a)?;
                let x = self.fresh();
                Comp::Let(x, Arc::new(m), Arc::new(self.comp(b)?))
            }
            Expr::App(..) => {
                let (head, args) = Self::spine(e);
                let mut vs = vec![];
                let (mut f, rest) = match self.builtin_head(head) {
                    Some(p) => {
                        self.check_prim(p)?;
                        let n = p.arity().min(args.len());
                        for a in &args[..n] {
                            vs.push(self.value_in(a, binds)?);
                        }
                        if n < p.arity() {
                            return Ok(Comp::Return(self.prim_value(p, vs)));
                        }
                        let last = vs.pop().unwrap();
                        (Comp::Apply(self.prim_value(p, vs), last), &args[n..])
                    }
                    None => {
                        let vf = self.value_in(head, binds)?;
                        let va = self.value_in(args[0], binds)?;
                        (Comp::Apply(vf, va), &args[1..])
                    }
                };
                for a in rest {
                    let t = self.fresh();
                    binds.push((t.clone(), f));
                    let va = self.value_in(a, binds)?;
                    f = Comp::Apply(Value::Var(t), va);
                }
                f
            }
            Expr::Bin(p, a, b) => {
                let va = self.value_in(a, binds)?;
                let vb = self.value_in(b, binds)?;
                Comp::Apply(self.prim_value(*p, vec![va]), vb)
            }
            Expr::Neg(a) if !matches!(**a, Expr::Int(_)) => {
                let v = self.value_in(a, binds)?;
                Comp::Apply(self.prim_value(Prim::Neg, vec![]), v)
            }
            Expr::Deref(a, pos) => {
                self.pos = *pos;
                self.check_prim(Prim::Deref)?;
                let v = self.value_in(a, binds)?;
                Comp::Apply(self.prim_value(Prim::Deref, vec![]), v)
            }
            Expr::Assign(a, b, pos) => {
                self.pos = *pos;
                self.check_prim(Prim::Assign)?;
                let va = self.value_in(a, binds)?;
                let vb = self.value_in(b, binds)?;
                Comp::Apply(self.prim_value(Prim::Assign, vec![va]), vb)
            }
            Expr::MatchTuple(scrut, pat, body) => {
                let v = self.value_in(scrut, binds)?;
                match pat {
                    Pat::Tuple(a, b) => {
                        let na = self.pat_name(a);
                        let nb = self.pat_name(b);
                        let c = self.under(a, &na, &mut |s| s.under(b, &nb, &mut |s2| s2.comp(body)))?;
                        Comp::MatchPair(v, na, nb, Arc::new(c))
                    }
                    _ => {
                        let x = self.pat_name(pat);
                        let c = self.under(pat, &x, &mut |s| s.comp(body))?;
                        Comp::Let(x, Arc::new(Comp::Return(v)), Arc::new(c))
                    }
                }
            }
            Expr::MatchEmpty(scrut, t) => Comp::MatchEmpty(self.value_in(scrut, binds)?, t.clone()),
            Expr::MatchSum(scrut, p, a, q, b) => {
                let v = self.value_in(scrut, binds)?;
                let xa = self.pat_name(p);
                let ca = self.under(p, &xa, &mut |s| s.comp(a))?;
                let xb = self.pat_name(q);
                let cb = self.under(q, &xb, &mut |s| s.comp(b))?;
                Comp::MatchSum(v, xa, Arc::new(ca), xb, Arc::new(cb))
            }
            Expr::If(c, a, b) => {
                let v = self.value_in(c, binds)?;
                Comp::If(v, Arc::new(self.comp(a)?), Arc::new(self.comp(b)?))
            }
            Expr::Signal(op, v, k) => {
                self.check_op(op)?;
                let v = self.value_in(v, binds)?;
                Comp::Signal(op.clone(), v, Arc::new(self.comp(k)?))
            }
            Expr::Interrupt(op, v, k, pos) => {
                self.pos = *pos;
                self.check_op(op)?;
                let v = self.value_in(v, binds)?;
                Comp::Interrupt(op.clone(), v, Arc::new(self.comp(k)?))
            }
            Expr::Send(op, v) => {
                self.check_op(op)?;
                let v = self.value_in(v, binds)?;
                Comp::Signal(op.clone(), v, Arc::new(Comp::unit()))
            }
            Expr::Await(v, k) => {
                let v = self.value_in(v, binds)?;
                match k {
                    Some((x, body)) => Comp::Await(v, name(x), Arc::new(self.scoped(x, body)?)),
                    None => {
                        let x = self.fresh();
                        Comp::Await(v, x.clone(), Arc::new(Comp::Return(Value::Var(x))))
                    }
                }
            }
            Expr::Unbox(v, k) => {
                let v = self.value_in(v, binds)?;
                match k {
                    Some((x, body)) => Comp::Unbox(v, name(x), Arc::new(self.scoped(x, body)?)),
                    None => {
                        let x = self.fresh();
                        Comp::Unbox(v, x.clone(), Arc::new(Comp::Return(Value::Var(x))))
                    }
                }
            }
            Expr::Spawn(m, n) => {
                let cm = self.comp(m)?;
                let cn = match n {
                    Some(n) => self.comp(n)?,
                    None => Comp::unit(),
                };
                Comp::Spawn(Arc::new(cm), Arc::new(cn))
            }
            Expr::Promise(pe) => self.promise(pe, binds)?,
            Expr::ProcessOp(op, p, x, body) => {
                self.check_op(op)?;
                let vp = self.value_in(p, binds)?;
                let z = self.fresh();
                let y = self.fresh();
                let m = self.scoped(x, body)?;
                let hbody = Comp::Let(
                    name(x),
                    Arc::new(Comp::Await(vp, z.clone(), Arc::new(Comp::Return(Value::Var(z))))),
                    Arc::new(Comp::Let(y.clone(), Arc::new(m), Arc::new(Comp::Return(Value::fulfilled(Value::Var(y)))))),
                );
                let h = Handler {
                    op: op.clone(),
                    x: self.fresh(),
                    r: self.fresh(),
                    s: self.fresh(),
                    state_ty: Some(Type::Unit),
                    body: hbody,
                };
                let p = self.fresh();
                Comp::Promise(Arc::new(h), Value::Unit, p.clone(), Arc::new(Comp::Return(Value::Var(p))))
            }
            // Value forms in computation position are returned.
            _ => Comp::Return(self.value_in(e, binds)?),
        })
    }

    fn promise(&mut self, pe: &PromiseExpr, binds: &mut Vec<(Name, Comp)>) -> R<Comp> {
        self.check_op(&pe.op)?;
        let state = match &pe.state {
            Some(w) => self.value_in(w, binds)?,
            None => Value::Unit,
        };
        let (spat, sann) = match &pe.s {
            Some((p, t)) => (p.clone(), t.clone()),
            None => (Pat::Wild, None),
        };
        let state_ty = match (&pe.state, sann) {
            (_, Some(t)) => Some(t),
            (None, None) => Some(Type::Unit),
            (Some(_), None) => None,
        };
        if pe.guard.is_some() && state_ty.is_none() && !matches!(pe.state.as_deref(), Some(Expr::Unit)) {
            return self.err(
                DesugarKind::MissingStateAnnotation,
                "a guarded handler with non-unit state needs a state annotation `(s : S)`",
            );
        }
        let x = self.pat_name(&pe.pat);
        let r: Name = match &pe.r {
            Some(r) => name(r),
            None => self.fresh(),
        };
        let s = self.pat_name(&spat);
        let (r2, s2) = (r.clone(), s.clone());
        let body = self.under(&pe.pat, &x, &mut |this| {
            this.scope.push(r2.to_string());
            let c = this.under(&spat, &s2, &mut |inner| match &pe.guard {
                None => inner.comp(&pe.body),
                Some(g) => {
                    let cg = inner.comp(g)?;
                    let b = inner.fresh();
                    let yes = inner.comp(&pe.body)?;
                    let no = Comp::Apply(Value::Var(r2.clone()), Value::Var(s2.clone()));
                    Ok(Comp::Let(b.clone(), Arc::new(cg), Arc::new(Comp::If(Value::Var(b), Arc::new(yes), Arc::new(no)))))
                }
            });
            this.scope.pop();
            c
        })?;
        let h = Handler { op: pe.op.clone(), x, r, s, state_ty, body };
        let (p, cont) = match &pe.cont {
            Some((p, n)) => (name(p), self.scoped(p, n)?),
            None => {
                let p = self.fresh();
                (p.clone(), Comp::Return(Value::Var(p)))
            }
        };
        Ok(Comp::Promise(Arc::new(h), state, p, Arc::new(cont)))
    }

    // -----------------------------------------------------------------
    // Processes

    pub fn proc(&mut self, e: &ProcExpr) -> R<Proc> {
        self.proc_with(e, &[], &mut vec![])
    }

    fn proc_with(&mut self, e: &ProcExpr, lets: &[(Name, Comp)], runs: &mut Vec<RunAnnotation>) -> R<Proc> {
        Ok(match e {
            ProcExpr::Run(m, ann, pos) => {
                self.pos = *pos;
                let c = wrap(lets.to_vec(), self.comp(m)?);
                let (ty, eff) = match ann {
                    Some((t, e)) => (Some(t.clone()), e.clone()),
                    None => (None, None),
                };
                runs.push(RunAnnotation { ty, eff, pos: *pos });
                Proc::Run(Arc::new(c))
            }
            ProcExpr::Par(a, b) => {
                let pa = self.proc_with(a, lets, runs)?;
                let pb = self.proc_with(b, lets, runs)?;
                Proc::Par(Arc::new(pa), Arc::new(pb))
            }
            ProcExpr::Signal(op, v, p) => {
                self.check_op(op)?;
                let v = self.value(v)?;
                Proc::Signal(op.clone(), v, Arc::new(self.proc_with(p, lets, runs)?))
            }
            ProcExpr::Interrupt(op, v, p, pos) => {
                self.pos = *pos;
                self.check_op(op)?;
                let v = self.value(v)?;
                Proc::Interrupt(op.clone(), v, Arc::new(self.proc_with(p, lets, runs)?))
            }
        })
    }
}

/// Desugars a parsed file.
pub fn program(items: &[Item], used: HashSet<String>) -> R<Program> {
    let mut ext = Extensions::default();
    let mut sig = BTreeMap::new();
    for it in items {
        match it {
            Item::Extensions(words, pos) => {
                for w in words {
                    match w.as_str() {
                        "refs" => ext.refs = true,
                        "rec" => ext.rec = true,
                        _ => {
                            return Err(DesugarError {
                                kind: DesugarKind::ExtensionDisabled,
                                pos: *pos,
                                msg: format!("unknown extension `{w}`"),
                            })
                        }
                    }
                }
            }
            Item::Operation(op, t, pos)
                if sig.insert(op.clone(), t.clone()).is_some() => {
                    return Err(DesugarError {
                        kind: DesugarKind::DuplicateDeclaration,
                        pos: *pos,
                        msg: format!("operation `{op}` declared twice"),
                    });
                }
            _ => {}
        }
    }
    let mut d = Desugarer::new(Some(sig.clone()), ext, used);
    // Top-level definitions that are not closed values wrap every run clause.
    let mut lets: Vec<(Name, Comp)> = vec![];
    let mut result = None;
    for it in items {
        match it {
            Item::Def { name: f, rec, params, ret, body, pos } => {
                d.pos = *pos;
                let v = if *rec {
                    Some(d.rec_value(f, params, ret, body)?)
                } else if !params.is_empty() {
                    Some(d.fun_value(params, ret, body)?)
                } else {
                    match d.comp(body)? {
                        Comp::Return(v) => Some(v),
                        c => {
                            lets.push((name(f), c));
                            None
                        }
                    }
                };
                match v {
                    Some(v) if fv_value(&v).is_empty() => {
                        d.scope.retain(|y| y != f);
                        d.globals.insert(f.clone(), v);
                    }
                    Some(v) => lets.push((name(f), Comp::Return(v))),
                    None => {}
                }
                if lets.last().is_some_and(|(x, _)| &**x == f.as_str()) {
                    d.globals.remove(f);
                    d.scope.push(f.clone());
                }
            }
            Item::Process(pe) => {
                if result.is_some() {
                    return Err(DesugarError {
                        kind: DesugarKind::DuplicateDeclaration,
                        pos: d.pos,
                        msg: "a program has a single process; join run clauses with `||`".into(),
                    });
                }
                let mut runs = vec![];
                let proc = d.proc_with(pe, &lets, &mut runs)?;
                result = Some((proc, runs));
            }
            _ => {}
        }
    }
    let Some((proc, runs)) = result else {
        return Err(DesugarError { kind: DesugarKind::NoProcess, pos: d.pos, msg: "program has no `run` clause".into() });
    };
    Ok(Program { extensions: ext, signature: sig, proc, runs })
}
