//! Bidirectional type-and-effect checking for values, computations and
//! processes, with Fitch-style locks for the box modality.
//!
//! The expected effect of a computation is kept as a stack of pending
//! interrupt actions over a base annotation, so that runtime terms containing
//! `↓op` frames can be checked against the same leaf types the process type
//! reduction produces.

use std::cell::RefCell;
use std::collections::BTreeMap;
use std::fmt;

use serde::Serialize;
use thiserror::Error;

use crate::ast::{Comp, Const, Lambda, Name, Proc, Value};
use crate::builtins::{Cell, Prim};
use crate::effects::{Effect, Op, OpSet};
use crate::subst::{alpha_eq_value, fv_comp, subst_comp};
use crate::surface::{print_comp, print_value, Pos, Program};
use crate::types::{effect_ops, ProcType, Type};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum ErrorKind {
    TypeMismatch,
    SignalNotDeclared,
    NoHandlerAnnotation,
    MobilityViolation,
    LockViolation,
    UnboundVariable,
    MissingAnnotation,
    UndeclaredOperation,
}

impl fmt::Display for ErrorKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Debug::fmt(self, f)
    }
}

/// A typing failure. `rule` names the typing rule whose premise failed and
/// `context` is the offending subterm.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Error)]
pub struct TypeError {
    pub kind: ErrorKind,
    pub rule: &'static str,
    pub span: Option<Pos>,
    pub expected: Option<String>,
    pub found: Option<String>,
    pub context: String,
}

impl fmt::Display for TypeError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} ({})", self.kind, self.rule)?;
        if let Some(p) = &self.span {
            write!(f, " at {p}")?;
        }
        if let Some(e) = &self.expected {
            write!(f, ": expected {e}")?;
        }
        if let Some(x) = &self.found {
            write!(f, ", found {x}")?;
        }
        if !self.context.is_empty() {
            write!(f, " in `{}`", self.context)?;
        }
        Ok(())
    }
}

pub type Result<T> = std::result::Result<T, TypeError>;

fn clip(s: String) -> String {
    const MAX: usize = 160;
    if s.chars().count() <= MAX {
        s
    } else {
        let mut t: String = s.chars().take(MAX).collect();
        t.push_str("...");
        t
    }
}

fn err(kind: ErrorKind, rule: &'static str, context: String) -> TypeError {
    TypeError { kind, rule, span: None, expected: None, found: None, context: clip(context) }
}

fn mismatch(rule: &'static str, expected: impl fmt::Display, found: impl fmt::Display, context: String) -> TypeError {
    TypeError {
        kind: ErrorKind::TypeMismatch,
        rule,
        span: None,
        expected: Some(expected.to_string()),
        found: Some(found.to_string()),
        context: clip(context),
    }
}

fn missing(rule: &'static str, context: String) -> TypeError {
    err(ErrorKind::MissingAnnotation, rule, context)
}

#[derive(Clone, Debug)]
enum Entry {
    Var(Name, Type),
    Lock,
}

/// Ordered typing context of bindings and locks.
#[derive(Clone, Debug, Default)]
pub struct Ctx(Vec<Entry>);

impl Ctx {
    pub fn new() -> Ctx {
        Ctx::default()
    }

    pub fn bind(&self, x: &Name, t: Type) -> Ctx {
        let mut c = self.clone();
        c.0.push(Entry::Var(x.clone(), t));
        c
    }

    pub fn lock(&self) -> Ctx {
        let mut c = self.clone();
        c.0.push(Entry::Lock);
        c
    }

    /// A variable is visible if it is mobile or no lock was pushed after it.
    pub fn lookup(&self, x: &str) -> Result<Type> {
        let mut locked = false;
        for e in self.0.iter().rev() {
            match e {
                Entry::Lock => locked = true,
                Entry::Var(y, t) if &**y == x => {
                    if locked && !t.is_mobile() {
                        return Err(TypeError {
                            kind: ErrorKind::LockViolation,
                            rule: "TyVal-Var",
                            span: None,
                            expected: Some("a mobile type".into()),
                            found: Some(t.to_string()),
                            context: x.to_string(),
                        });
                    }
                    return Ok(t.clone());
                }
                Entry::Var(..) => {}
            }
        }
        Err(err(ErrorKind::UnboundVariable, "TyVal-Var", x.to_string()))
    }
}

/// Expected effect: `ops↓↓base`, with `ops[0]` the outermost action.
#[derive(Clone, Debug)]
pub struct EffStack {
    pub ops: Vec<Op>,
    pub base: Effect,
}

impl EffStack {
    pub fn new(base: Effect) -> EffStack {
        EffStack { ops: vec![], base }
    }

    pub fn concrete(&self) -> Effect {
        self.base.act_list(&self.ops)
    }
}

/// Builtin signatures with type and effect variables.
#[derive(Clone, Debug)]
enum P {
    T(Type),
    V(usize),
    L(Box<P>),
    R(Box<P>),
    Pair(Box<P>, Box<P>),
    F(Box<P>, Box<P>, usize),
}

fn l(p: P) -> P {
    P::L(Box::new(p))
}

fn f(a: P, b: P, e: usize) -> P {
    P::F(Box::new(a), Box::new(b), e)
}

/// Parameters, result and the effect variables the final application performs.
fn prim_sig(p: Prim) -> (Vec<P>, P, Vec<usize>) {
    use P::{T, V};
    let int = || T(Type::Int);
    let boolean = || T(Type::Bool);
    match p {
        Prim::Add | Prim::Sub | Prim::Mul | Prim::Div | Prim::Mod => (vec![int(), int()], int(), vec![]),
        Prim::Neg => (vec![int()], int(), vec![]),
        Prim::Eq | Prim::Neq => (vec![V(0), V(0)], boolean(), vec![]),
        Prim::Lt | Prim::Le | Prim::Gt | Prim::Ge => (vec![int(), int()], boolean(), vec![]),
        Prim::And | Prim::Or => (vec![boolean(), boolean()], boolean(), vec![]),
        Prim::Not => (vec![boolean()], boolean(), vec![]),
        Prim::Concat => (vec![T(Type::Str), T(Type::Str)], T(Type::Str), vec![]),
        Prim::ToString => (vec![V(0)], T(Type::Str), vec![]),
        Prim::Range => (vec![int(), int()], l(int()), vec![]),
        Prim::Length => (vec![l(V(0))], int(), vec![]),
        Prim::Nth => (vec![l(V(0)), int()], V(0), vec![]),
        Prim::SetNth => (vec![l(V(0)), int(), V(0)], l(V(0)), vec![]),
        Prim::Append => (vec![l(V(0)), l(V(0))], l(V(0)), vec![]),
        Prim::Cons => (vec![V(0), l(V(0))], l(V(0)), vec![]),
        Prim::Head => (vec![l(V(0))], V(0), vec![]),
        Prim::Tail => (vec![l(V(0))], l(V(0)), vec![]),
        Prim::Fst => (vec![P::Pair(Box::new(V(0)), Box::new(V(1)))], V(0), vec![]),
        Prim::Snd => (vec![P::Pair(Box::new(V(0)), Box::new(V(1)))], V(1), vec![]),
        Prim::Map => (vec![f(V(0), V(1), 0), l(V(0))], l(V(1)), vec![0]),
        Prim::Filter => (vec![f(V(0), boolean(), 0), l(V(0))], l(V(0)), vec![0]),
        Prim::Fold => (vec![f(V(1), f(V(0), V(1), 1), 0), V(1), l(V(0))], V(1), vec![0, 1]),
        Prim::Pick => (vec![l(boolean()), l(V(0))], l(V(0)), vec![]),
        Prim::Ref => (vec![V(0)], P::R(Box::new(V(0))), vec![]),
        Prim::Deref => (vec![P::R(Box::new(V(0)))], V(0), vec![]),
        Prim::Assign => (vec![P::R(Box::new(V(0))), V(0)], T(Type::Unit), vec![]),
    }
}

fn p_effvars(p: &P) -> Vec<usize> {
    match p {
        P::T(_) | P::V(_) => vec![],
        P::L(q) | P::R(q) => p_effvars(q),
        P::Pair(a, b) => [p_effvars(a), p_effvars(b)].concat(),
        P::F(a, b, e) => [p_effvars(a), p_effvars(b), vec![*e]].concat(),
    }
}

/// Values worth inlining at their use sites rather than typing in isolation.
fn has_fun_literal(v: &Value) -> bool {
    match v {
        Value::Fun(_) => true,
        Value::Boxed(x) | Value::Inl(_, x) | Value::Inr(_, x) => has_fun_literal(x),
        Value::Pair(a, b) => has_fun_literal(a) || has_fun_literal(b),
        _ => false,
    }
}

#[derive(Default)]
struct Inst {
    tys: [Option<Type>; 2],
    effs: [Option<Effect>; 2],
}

/// Type-and-effect checker parameterised by the operation signature.
pub struct Checker<'a> {
    sig: &'a BTreeMap<Op, Type>,
    all_ops: OpSet,
    effects: bool,
    /// First pass of result-type inference: `empty` acts as a bottom type
    /// and effects are not checked.
    lenient: bool,
    store: &'a [Cell],
    in_progress: RefCell<Vec<(Value, Type)>>,
}

impl<'a> Checker<'a> {
    pub fn new(sig: &'a BTreeMap<Op, Type>) -> Checker<'a> {
        Checker {
            sig,
            all_ops: sig.keys().cloned().collect(),
            effects: true,
            lenient: false,
            store: &[],
            in_progress: RefCell::new(vec![]),
        }
    }

    /// Shape-only checking: every effect premise holds.
    pub fn without_effects(mut self) -> Checker<'a> {
        self.effects = false;
        self
    }

    pub fn effects_enabled(&self) -> bool {
        self.effects
    }

    /// Uses `store` to type reference locations.
    pub fn with_store<'b>(&'b self, store: &'b [Cell]) -> Checker<'b> {
        Checker {
            sig: self.sig,
            all_ops: self.all_ops.clone(),
            effects: self.effects,
            lenient: self.lenient,
            store,
            in_progress: RefCell::new(self.in_progress.borrow().clone()),
        }
    }

    fn lenient(&self) -> Checker<'_> {
        let mut c = self.with_store(self.store);
        c.lenient = true;
        c.effects = false;
        c
    }

    /// The most permissive effect over the signature.
    pub fn top(&self) -> Effect {
        Effect::top(&self.all_ops)
    }

    fn checks_effects(&self) -> bool {
        self.effects && !self.lenient
    }

    fn eff_leq(&self, a: &Effect, b: &Effect) -> bool {
        !self.checks_effects() || a.leq(b)
    }

    pub fn sub(&self, a: &Type, b: &Type) -> bool {
        if self.checks_effects() {
            return a.sub(b);
        }
        match (a, b) {
            (Type::Empty, _) if self.lenient => true,
            (Type::Prod(a1, b1), Type::Prod(a2, b2)) | (Type::Sum(a1, b1), Type::Sum(a2, b2)) => {
                self.sub(a1, a2) && self.sub(b1, b2)
            }
            (Type::Fun(a1, c1), Type::Fun(a2, c2)) => {
                self.sub(a1, a2) && self.sub(a2, a1) && self.sub(&c1.ty, &c2.ty)
            }
            (Type::Promise(a), Type::Promise(b))
            | (Type::Box(a), Type::Box(b))
            | (Type::List(a), Type::List(b))
            | (Type::Ref(a), Type::Ref(b)) => self.sub(a, b),
            _ => a == b,
        }
    }

    /// Least common supertype of two branch types, if one contains the other.
    fn join(&self, a: Type, b: Type, rule: &'static str, ctx: impl Fn() -> String) -> Result<Type> {
        if self.sub(&a, &b) {
            Ok(b)
        } else if self.sub(&b, &a) {
            Ok(a)
        } else {
            Err(mismatch(rule, a, b, ctx()))
        }
    }

    fn payload_type(&self, op: &Op, rule: &'static str, ctx: impl Fn() -> String) -> Result<Type> {
        self.sig
            .get(op)
            .cloned()
            .ok_or_else(|| err(ErrorKind::UndeclaredOperation, rule, format!("{op} in {}", ctx())))
    }

    fn expect(&self, found: Type, expected: Option<&Type>, rule: &'static str, ctx: impl Fn() -> String) -> Result<Type> {
        match expected {
            Some(e) if self.sub(&found, e) => Ok(e.clone()),
            Some(e) => Err(mismatch(rule, e, found, ctx())),
            None => Ok(found),
        }
    }

    // ----- values -----

    pub fn synth_value(&self, ctx: &Ctx, v: &Value, amb: &Effect) -> Result<Type> {
        self.value(ctx, v, None, amb)
    }

    pub fn check_value(&self, ctx: &Ctx, v: &Value, t: &Type, amb: &Effect) -> Result<()> {
        self.value(ctx, v, Some(t), amb).map(|_| ())
    }

    /// Type of a closed value; used to record the cell type of a fresh reference.
    pub fn closed_value_type(&self, v: &Value) -> Option<Type> {
        self.synth_value(&Ctx::new(), v, &self.top()).ok()
    }

    /// Types `v`, against `expected` when given. `amb` is the latent effect
    /// given to function literals whose type is synthesised.
    fn value(&self, ctx: &Ctx, v: &Value, expected: Option<&Type>, amb: &Effect) -> Result<Type> {
        let here = || print_value(v);
        match v {
            Value::Var(x) => {
                let t = ctx.lookup(x)?;
                self.expect(t, expected, "TyVal-Var", here)
            }
            Value::Unit => self.expect(Type::Unit, expected, "TyVal-Unit", here),
            Value::Pair(a, b) => {
                let (ea, eb) = match expected {
                    Some(Type::Prod(x, y)) => (Some(&**x), Some(&**y)),
                    Some(e) => return Err(mismatch("TyVal-Pair", e, "a pair", here())),
                    None => (None, None),
                };
                let ta = self.value(ctx, a, ea, amb)?;
                let tb = self.value(ctx, b, eb, amb)?;
                Ok(Type::prod(ta, tb))
            }
            Value::Inl(ann, a) | Value::Inr(ann, a) => {
                let left = matches!(v, Value::Inl(..));
                let rule = if left { "TyVal-Inl" } else { "TyVal-Inr" };
                let (this_e, other_e) = match expected {
                    Some(Type::Sum(x, y)) if left => (Some(&**x), Some(&**y)),
                    Some(Type::Sum(x, y)) => (Some(&**y), Some(&**x)),
                    Some(e) => return Err(mismatch(rule, e, "an injection", here())),
                    None => (None, None),
                };
                let other = match (ann, other_e) {
                    (Some(t), Some(e)) if self.sub(t, e) => e.clone(),
                    (Some(t), Some(e)) => return Err(mismatch(rule, e, t, here())),
                    (Some(t), None) => t.clone(),
                    (None, Some(e)) => e.clone(),
                    (None, None) => return Err(missing(rule, here())),
                };
                let this = self.value(ctx, a, this_e, amb)?;
                Ok(if left { Type::sum(this, other) } else { Type::sum(other, this) })
            }
            Value::Fun(lam) => self.lambda(ctx, v, lam, expected, amb),
            Value::Fulfilled(a) => {
                let inner = match expected {
                    Some(Type::Promise(x)) => Some(&**x),
                    Some(e) => return Err(mismatch("TyVal-Promise", e, "a fulfilled promise", here())),
                    None => None,
                };
                Ok(Type::promise(self.value(ctx, a, inner, amb)?))
            }
            Value::Boxed(a) => {
                let inner = match expected {
                    Some(Type::Box(x)) => Some(&**x),
                    Some(e) => return Err(mismatch("TyVal-Box", e, "a box", here())),
                    None => None,
                };
                Ok(Type::boxed(self.value(&ctx.lock(), a, inner, amb)?))
            }
            Value::Const(c) => match c {
                Const::Int(_) => self.expect(Type::Int, expected, "TyVal-Const", here),
                Const::Bool(_) => self.expect(Type::Bool, expected, "TyVal-Const", here),
                Const::Str(_) => self.expect(Type::Str, expected, "TyVal-Const", here),
                Const::List(ann, items) => {
                    let elem_e = match expected {
                        Some(Type::List(x)) => Some((**x).clone()),
                        Some(e) => return Err(mismatch("TyVal-List", e, "a list", here())),
                        None => None,
                    };
                    let mut elem = match (ann, elem_e) {
                        (Some(t), Some(e)) if self.sub(t, &e) => Some(e),
                        (Some(t), Some(e)) => return Err(mismatch("TyVal-List", e, t, here())),
                        (a, e) => a.clone().or(e),
                    };
                    let fixed = elem.is_some();
                    for it in items.iter() {
                        let t = self.value(ctx, it, elem.as_ref().filter(|_| fixed), amb)?;
                        elem = Some(match elem {
                            Some(e) if !fixed => self.join(e, t, "TyVal-List", here)?,
                            Some(e) => e,
                            None => t,
                        });
                    }
                    elem.map(Type::list).ok_or_else(|| missing("TyVal-List", here()))
                }
                Const::Loc(n) => {
                    let t = self
                        .store
                        .get(*n as usize)
                        .and_then(|c| c.ty.clone())
                        .ok_or_else(|| missing("TyVal-Loc", here()))?;
                    self.expect(Type::reference(t), expected, "TyVal-Loc", here)
                }
                Const::Prim(p, args) => {
                    if args.len() >= p.arity() {
                        return Err(mismatch("TyVal-Prim", "a partial application", "a saturated one", here()));
                    }
                    let (t, _) = self.prim_app(ctx, *p, args, expected, amb, &here)?;
                    Ok(t)
                }
            },
        }
    }

    fn lambda(&self, ctx: &Ctx, v: &Value, lam: &Lambda, expected: Option<&Type>, amb: &Effect) -> Result<Type> {
        let here = || print_value(v);
        if let Some(e) = expected {
            let Type::Fun(a, c) = e else {
                return Err(mismatch("TyVal-Fun", e, "a function", here()));
            };
            if let Some(pt) = &lam.param_ty {
                if !(self.sub(pt, a) && self.sub(a, pt)) {
                    return Err(mismatch("TyVal-Fun", a, pt, here()));
                }
            }
            let ret = match &lam.ret {
                Some(r) if self.sub(r, &c.ty) => r.clone(),
                Some(r) => return Err(mismatch("TyVal-Fun", &c.ty, r, here())),
                None => c.ty.clone(),
            };
            let ftype = Type::fun((**a).clone(), ret.clone(), c.eff.clone());
            let mut inner = ctx.clone();
            if let Some(fname) = &lam.rec_name {
                inner = inner.bind(fname, ftype.clone());
            }
            inner = inner.bind(&lam.param, (**a).clone());
            self.comp(&inner, &lam.body, Some(&ret), &EffStack::new(c.eff.clone()))?;
            return Ok(e.clone());
        }
        let a = lam.param_ty.clone().ok_or_else(|| missing("TyVal-Fun", here()))?;
        let stack = EffStack::new(amb.clone());
        let ret = match (&lam.ret, &lam.rec_name) {
            (Some(r), _) => r.clone(),
            (None, None) => {
                let t = self.comp(&ctx.bind(&lam.param, a.clone()), &lam.body, None, &stack)?;
                return Ok(Type::fun(a, t, amb.clone()));
            }
            (None, Some(fname)) => {
                let guess = Type::fun(a.clone(), Type::Empty, amb.clone());
                let inner = ctx.bind(fname, guess).bind(&lam.param, a.clone());
                self.lenient().comp(&inner, &lam.body, None, &stack)?
            }
        };
        let ftype = Type::fun(a.clone(), ret.clone(), amb.clone());
        let mut inner = ctx.clone();
        if let Some(fname) = &lam.rec_name {
            inner = inner.bind(fname, ftype.clone());
        }
        self.comp(&inner.bind(&lam.param, a), &lam.body, Some(&ret), &stack)?;
        Ok(ftype)
    }

    // ----- builtins -----

    fn unify(&self, p: &P, t: &Type, inst: &mut Inst) -> bool {
        match (p, t) {
            (P::T(c), _) => self.sub(t, c),
            (P::V(i), _) => match &inst.tys[*i] {
                None => {
                    inst.tys[*i] = Some(t.clone());
                    true
                }
                Some(b) if self.sub(t, b) => true,
                Some(b) if self.sub(b, t) => {
                    inst.tys[*i] = Some(t.clone());
                    true
                }
                Some(_) => false,
            },
            (P::L(q), Type::List(u)) | (P::R(q), Type::Ref(u)) => self.unify(q, u, inst),
            (P::Pair(a, b), Type::Prod(x, y)) => self.unify(a, x, inst) && self.unify(b, y, inst),
            (P::F(a, b, e), Type::Fun(x, c)) => {
                let ok = self.unify(a, x, inst) && self.unify(b, &c.ty, inst);
                let joined = match &inst.effs[*e] {
                    None => c.eff.clone(),
                    Some(old) => old.join(&c.eff),
                };
                inst.effs[*e] = Some(joined);
                ok
            }
            _ => false,
        }
    }

    fn instantiate(&self, p: &P, inst: &Inst) -> Option<Type> {
        Some(match p {
            P::T(t) => t.clone(),
            P::V(i) => inst.tys[*i].clone()?,
            P::L(q) => Type::list(self.instantiate(q, inst)?),
            P::R(q) => Type::reference(self.instantiate(q, inst)?),
            P::Pair(a, b) => Type::prod(self.instantiate(a, inst)?, self.instantiate(b, inst)?),
            P::F(a, b, e) => Type::fun(
                self.instantiate(a, inst)?,
                self.instantiate(b, inst)?,
                inst.effs[*e].clone().unwrap_or_else(Effect::pure),
            ),
        })
    }

    /// Types a builtin applied to `args`. A saturated application yields its
    /// result type and the effect it performs; a partial one yields a curried
    /// function type and the pure effect.
    fn prim_app(
        &self,
        ctx: &Ctx,
        p: Prim,
        args: &[Value],
        expected: Option<&Type>,
        amb: &Effect,
        here: &dyn Fn() -> String,
    ) -> Result<(Type, Effect)> {
        let rule = "TyVal-Prim";
        let (params, result, effvars) = prim_sig(p);
        let mut inst = Inst::default();
        let saturated = args.len() == params.len();
        // Fix type variables from the expected type first, so that
        // unannotated arguments such as empty lists can be checked.
        if let Some(e) = expected {
            if saturated {
                let mut probe = Inst::default();
                if self.unify(&result, e, &mut probe) {
                    inst.tys = probe.tys;
                }
            } else {
                let mut t = e.clone();
                let mut ok = true;
                for q in &params[args.len()..] {
                    let Type::Fun(a, c) = t else {
                        ok = false;
                        break;
                    };
                    ok &= self.unify(q, &a, &mut inst);
                    t = c.ty.clone();
                }
                if !(ok && self.unify(&result, &t, &mut inst)) {
                    return Err(mismatch(rule, e, format!("builtin {}", p.name()), here()));
                }
            }
        }
        let mut deferred = vec![];
        for (k, a) in args.iter().enumerate() {
            match self.instantiate(&params[k], &inst) {
                Some(t) => {
                    self.value(ctx, a, Some(&t), amb)?;
                    self.unify(&params[k], &t, &mut inst);
                }
                None => match self.value(ctx, a, None, amb) {
                    Ok(t) => {
                        if !self.unify(&params[k], &t, &mut inst) {
                            let want = self
                                .instantiate(&params[k], &inst)
                                .map(|t| t.to_string())
                                .unwrap_or_else(|| format!("argument {} of {}", k + 1, p.name()));
                            return Err(mismatch(rule, want, t, here()));
                        }
                    }
                    Err(e) if e.kind == ErrorKind::MissingAnnotation => deferred.push((k, e)),
                    Err(e) => return Err(e),
                },
            }
        }
        for (k, e) in deferred {
            // Unconstrained latent effects of function arguments default to
            // the ambient effect, the most permissive choice that still lets
            // the application happen here.
            if let P::F(..) = &params[k] {
                for ev in p_effvars(&params[k]) {
                    inst.effs[ev].get_or_insert_with(|| amb.clone());
                }
            }
            let t = match self.instantiate(&params[k], &inst) {
                Some(t) => t,
                None => {
                    // A function literal whose parameter type is known but
                    // whose result is not: ascribe the parameter and synthesize.
                    let (P::F(pa, _, _), Value::Fun(lam)) = (&params[k], &args[k]) else { return Err(e) };
                    let (Some(pt), None) = (self.instantiate(pa, &inst), &lam.param_ty) else { return Err(e) };
                    let mut lam = (**lam).clone();
                    lam.param_ty = Some(pt);
                    let t = self.value(ctx, &Value::Fun(std::sync::Arc::new(lam)), None, amb)?;
                    if !self.unify(&params[k], &t, &mut inst) {
                        return Err(mismatch(rule, format!("argument {} of {}", k + 1, p.name()), t, here()));
                    }
                    continue;
                }
            };
            self.value(ctx, &args[k], Some(&t), amb)?;
        }
        let eff = effvars
            .iter()
            .filter_map(|e| inst.effs[*e].clone())
            .fold(Effect::pure(), |a, b| a.join(&b));
        let res = self.instantiate(&result, &inst);
        if saturated {
            let t = res.or_else(|| expected.cloned()).ok_or_else(|| missing(rule, here()))?;
            return Ok((t, eff));
        }
        let mut t = res.ok_or_else(|| missing(rule, here()))?;
        let rest = &params[args.len()..];
        for (k, q) in rest.iter().enumerate().rev() {
            let a = self.instantiate(q, &inst).ok_or_else(|| missing(rule, here()))?;
            let e = if k + 1 == rest.len() { eff.clone() } else { Effect::pure() };
            t = Type::fun(a, t, e);
        }
        Ok((t, Effect::pure()))
    }

    // ----- computations -----

    pub fn check_comp(&self, ctx: &Ctx, m: &Comp, ty: &Type, eff: &EffStack) -> Result<()> {
        self.comp(ctx, m, Some(ty), eff).map(|_| ())
    }

    pub fn synth_comp(&self, ctx: &Ctx, m: &Comp, eff: &EffStack) -> Result<Type> {
        self.comp(ctx, m, None, eff)
    }

    fn comp(&self, ctx: &Ctx, m: &Comp, expected: Option<&Type>, st: &EffStack) -> Result<Type> {
        let here = || print_comp(m);
        match m {
            Comp::Return(v) => self.value(ctx, v, expected, &st.concrete()),
            Comp::Let(x, a, b) => {
                let a = self.beta(ctx, a, st)?;
                if let Comp::Return(v) = &a {
                    let inline = match v {
                        v if has_fun_literal(v) => true,
                        _ => matches!(
                            self.value(ctx, v, None, &st.concrete()),
                            Err(TypeError { kind: ErrorKind::MissingAnnotation, .. })
                        ),
                    };
                    if inline {
                        if !fv_comp(b).contains(x) {
                            // Dead binding: still check what can be checked.
                            match self.value(ctx, v, None, &st.concrete()) {
                                Err(e) if e.kind != ErrorKind::MissingAnnotation => return Err(e),
                                _ => {}
                            }
                        }
                        return self.comp(ctx, &subst_comp(b, x, v), expected, st);
                    }
                }
                let t = self.comp(ctx, &a, None, st)?;
                self.comp(&ctx.bind(x, t), b, expected, st)
            }
            Comp::Apply(fv, a) => self.apply(ctx, m, fv, a, expected, st),
            Comp::MatchPair(v, x, y, k) => {
                let t = self.value(ctx, v, None, &st.concrete())?;
                let Type::Prod(ta, tb) = t else {
                    return Err(mismatch("TyComp-MatchPair", "a product", t, here()));
                };
                self.comp(&ctx.bind(x, (*ta).clone()).bind(y, (*tb).clone()), k, expected, st)
            }
            Comp::MatchEmpty(v, ann) => {
                self.value(ctx, v, Some(&Type::Empty), &st.concrete())?;
                match (ann, expected) {
                    (_, Some(e)) => Ok(e.clone()),
                    (Some(t), None) => Ok(t.clone()),
                    (None, None) => Err(missing("TyComp-MatchEmpty", here())),
                }
            }
            Comp::MatchSum(v, x, a, y, b) => {
                let t = self.value(ctx, v, None, &st.concrete())?;
                let Type::Sum(ta, tb) = t else {
                    return Err(mismatch("TyComp-MatchSum", "a sum", t, here()));
                };
                let ra = self.comp(&ctx.bind(x, (*ta).clone()), a, expected, st)?;
                let rb = self.comp(&ctx.bind(y, (*tb).clone()), b, expected, st)?;
                self.join(ra, rb, "TyComp-MatchSum", here)
            }
            Comp::If(v, a, b) => {
                self.value(ctx, v, Some(&Type::Bool), &st.concrete())?;
                let ra = self.comp(ctx, a, expected, st)?;
                let rb = self.comp(ctx, b, expected, st)?;
                self.join(ra, rb, "TyComp-If", here)
            }
            Comp::Signal(op, v, k) => {
                let a = self.payload_type(op, "TyComp-Signal", here)?;
                let conc = st.concrete();
                if self.checks_effects() && !conc.o.contains(op) {
                    return Err(TypeError {
                        kind: ErrorKind::SignalNotDeclared,
                        rule: "TyComp-Signal",
                        span: None,
                        expected: Some(format!("{op} among the signals of {conc}")),
                        found: None,
                        context: clip(here()),
                    });
                }
                self.value(ctx, v, Some(&a), &conc)?;
                self.comp(ctx, k, expected, st)
            }
            Comp::Interrupt(op, v, k) => {
                let a = self.payload_type(op, "TyComp-Interrupt", here)?;
                self.value(ctx, v, Some(&a), &st.concrete())?;
                let inner = self.interrupt_inner(op, st);
                self.comp(ctx, k, expected, &inner)
            }
            Comp::Promise(h, w, p, n) => {
                let a_op = self.payload_type(&h.op, "TyComp-Promise", here)?;
                let conc = st.concrete();
                let s_ty = match &h.state_ty {
                    Some(t) => {
                        self.value(ctx, w, Some(t), &conc)?;
                        t.clone()
                    }
                    None => self.value(ctx, w, None, &conc)?,
                };
                let candidates = if self.checks_effects() {
                    let Some(whole) = conc.i.get(&h.op) else {
                        return Err(TypeError {
                            kind: ErrorKind::NoHandlerAnnotation,
                            rule: "TyComp-Promise",
                            span: None,
                            expected: Some(format!("an annotation for {} in {conc}", h.op)),
                            found: None,
                            context: clip(here()),
                        });
                    };
                    let mut cs: Vec<Effect> = vec![];
                    for k in (0..st.ops.len()).rev() {
                        if let Some(c) = st.base.act_list(&st.ops[k..]).i.get(&h.op) {
                            if c.leq(&whole) && !cs.contains(&c) {
                                cs.push(c);
                            }
                        }
                    }
                    if !cs.contains(&whole) {
                        cs.push(whole);
                    }
                    cs
                } else {
                    vec![Effect::pure()]
                };
                let mut last = None;
                for c in candidates {
                    match self.handler(ctx, h, &a_op, &s_ty, &c) {
                        Ok(x) => {
                            return self.comp(&ctx.bind(p, Type::promise(x)), n, expected, st);
                        }
                        Err(e) => last = Some(e),
                    }
                }
                Err(last.expect("at least one candidate"))
            }
            Comp::Await(v, x, k) => {
                let t = self.value(ctx, v, None, &st.concrete())?;
                let Type::Promise(inner) = t else {
                    return Err(mismatch("TyComp-Await", "a promise", t, here()));
                };
                self.comp(&ctx.bind(x, (*inner).clone()), k, expected, st)
            }
            Comp::Unbox(v, x, k) => {
                let t = self.value(ctx, v, None, &st.concrete())?;
                let Type::Box(inner) = t else {
                    return Err(mismatch("TyComp-Unbox", "a box", t, here()));
                };
                self.comp(&ctx.bind(x, (*inner).clone()), k, expected, st)
            }
            Comp::Spawn(a, b) => {
                self.comp(&ctx.lock(), a, None, &EffStack::new(self.top()))?;
                self.comp(ctx, b, expected, st)
            }
        }
    }

    /// Effect stack for the body of `↓op(V, M)`: pops a matching pending
    /// action, otherwise keeps the stack if the action is absorbed, and as a
    /// last resort drops the handler annotation for `op`.
    fn interrupt_inner(&self, op: &Op, st: &EffStack) -> EffStack {
        if st.ops.first() == Some(op) {
            return EffStack { ops: st.ops[1..].to_vec(), base: st.base.clone() };
        }
        let conc = st.concrete();
        if !self.checks_effects() || conc.act(op).leq(&conc) {
            return st.clone();
        }
        EffStack::new(Effect::new(conc.o.clone(), conc.i.remove(op)))
    }

    /// Beta-reduces applications of non-recursive function literals at the
    /// head of `m`, checking each argument against its parameter annotation.
    /// The reduct is what `app-fun` would produce, so typing it instead of
    /// the redex lets one literal be used at several argument types.
    fn beta(&self, ctx: &Ctx, m: &Comp, st: &EffStack) -> Result<Comp> {
        let mut m = m.clone();
        while let Comp::Apply(Value::Fun(lam), a) = &m {
            if lam.rec_name.is_some() {
                break;
            }
            let conc = st.concrete();
            match &lam.param_ty {
                Some(t) => {
                    self.value(ctx, a, Some(t), &conc)?;
                }
                None if !fv_comp(&lam.body).contains(&lam.param) => match self.value(ctx, a, None, &conc) {
                    Err(e) if e.kind != ErrorKind::MissingAnnotation => return Err(e),
                    _ => {}
                },
                None => {}
            }
            m = subst_comp(&lam.body, &lam.param, a);
        }
        Ok(m)
    }

    /// Checks handler code at effect `c` and returns the promise payload type.
    fn handler(&self, ctx: &Ctx, h: &crate::ast::Handler, a_op: &Type, s_ty: &Type, c: &Effect) -> Result<Type> {
        let stack = EffStack::new(c.clone());
        let reinstall_eff = Effect::new(OpSet::new(), crate::effects::IAnn::from_entries(vec![(h.op.clone(), c.clone())]));
        let bind = |x: Type| {
            ctx.bind(&h.x, a_op.clone())
                .bind(&h.r, Type::fun(s_ty.clone(), Type::promise(x), reinstall_eff.clone()))
                .bind(&h.s, s_ty.clone())
        };
        let guess = self.lenient().comp(&bind(Type::Empty), &h.body, None, &stack)?;
        let x = match guess {
            Type::Promise(x) => (*x).clone(),
            Type::Empty => Type::Empty,
            t => return Err(mismatch("TyComp-Promise", "a promise type", t, print_comp(&h.body))),
        };
        self.comp(&bind(x.clone()), &h.body, Some(&Type::promise(x.clone())), &stack)?;
        Ok(x)
    }

    fn apply(&self, ctx: &Ctx, m: &Comp, fv: &Value, a: &Value, expected: Option<&Type>, st: &EffStack) -> Result<Type> {
        let here = || print_comp(m);
        let conc = st.concrete();
        match fv {
            Value::Fun(lam) => self.apply_literal(ctx, fv, lam, a, expected, st),
            Value::Const(Const::Prim(p, args)) => {
                let mut all = args.as_ref().clone();
                all.push(a.clone());
                if all.len() > p.arity() {
                    return Err(mismatch("TyComp-App", "a function", format!("saturated {}", p.name()), here()));
                }
                let (t, e) = self.prim_app(ctx, *p, &all, expected, &conc, &here)?;
                if !self.eff_leq(&e, &conc) {
                    return Err(mismatch("TyComp-App", &conc, &e, here()));
                }
                self.expect(t, expected, "TyComp-App", here)
            }
            _ => {
                let t = self.value(ctx, fv, None, &conc)?;
                let Type::Fun(arg, c) = t else {
                    return Err(mismatch("TyComp-App", "a function", t, here()));
                };
                self.value(ctx, a, Some(&arg), &conc)?;
                if !self.eff_leq(&c.eff, &conc) {
                    return Err(mismatch("TyComp-App", &conc, &c.eff, here()));
                }
                self.expect(c.ty.clone(), expected, "TyComp-App", here)
            }
        }
    }

    /// A function literal in head position: its body runs here, so it is
    /// checked at the current effect stack.
    fn apply_literal(
        &self,
        ctx: &Ctx,
        fv: &Value,
        lam: &Lambda,
        a: &Value,
        expected: Option<&Type>,
        st: &EffStack,
    ) -> Result<Type> {
        let here = || print_value(fv);
        let conc = st.concrete();
        let known = self.in_progress.borrow().iter().find(|(v, _)| alpha_eq_value(v, fv)).map(|(_, t)| t.clone());
        if let Some(Type::Fun(arg, c)) = known {
            self.value(ctx, a, Some(&arg), &conc)?;
            if !self.eff_leq(&c.eff, &conc) {
                return Err(mismatch("TyComp-App", &conc, &c.eff, here()));
            }
            return self.expect(c.ty.clone(), expected, "TyComp-App", here);
        }
        if lam.rec_name.is_none() {
            let body = self.beta(ctx, &Comp::Apply(fv.clone(), a.clone()), st)?;
            let t = self.comp(ctx, &body, lam.ret.as_ref().or(expected), st)?;
            return match (&lam.ret, expected) {
                (Some(r), Some(e)) if !self.sub(r, e) => Err(mismatch("TyComp-App", e, r, here())),
                _ => Ok(expected.cloned().unwrap_or(t)),
            };
        }
        let arg = match &lam.param_ty {
            Some(t) => {
                self.value(ctx, a, Some(t), &conc)?;
                t.clone()
            }
            None => self.value(ctx, a, None, &conc)?,
        };
        let body_ctx = ctx.bind(&lam.param, arg.clone());
        let fname = lam.rec_name.as_ref().expect("non-recursive literals are beta-reduced");
        let ret = match (&lam.ret, expected) {
            (Some(r), Some(e)) if !self.sub(r, e) => return Err(mismatch("TyComp-App", e, r, here())),
            (Some(r), _) => r.clone(),
            (None, Some(e)) => e.clone(),
            (None, None) => {
                let guess = Type::fun(arg.clone(), Type::Empty, conc.clone());
                self.lenient().comp(&body_ctx.bind(fname, guess), &lam.body, None, st)?
            }
        };
        let ftype = Type::fun(arg, ret.clone(), conc);
        self.in_progress.borrow_mut().push((fv.clone(), ftype.clone()));
        let r = self.comp(&body_ctx.bind(fname, ftype), &lam.body, Some(&ret), st);
        self.in_progress.borrow_mut().pop();
        r?;
        Ok(expected.cloned().unwrap_or(ret))
    }

    // ----- processes -----

    /// Checks a process against a process type. `stores` supplies the cell
    /// types of each run leaf, left to right.
    pub fn check_proc(&self, p: &Proc, c: &ProcType, stores: &[Vec<Cell>]) -> Result<()> {
        let mut leaf = 0;
        self.proc(p, c, stores, &mut leaf)
    }

    fn proc(&self, p: &Proc, c: &ProcType, stores: &[Vec<Cell>], leaf: &mut usize) -> Result<()> {
        let here = || crate::surface::print_proc(p);
        match (p, c) {
            (Proc::Run(m), ProcType::Run { ty, eff, pending }) => {
                let store = stores.get(*leaf).map(|s| s.as_slice()).unwrap_or(&[]);
                *leaf += 1;
                let st = EffStack { ops: pending.clone(), base: eff.clone() };
                self.with_store(store).check_comp(&Ctx::new(), m, ty, &st)
            }
            (Proc::Par(a, b), ProcType::Par(c1, c2)) => {
                self.proc(a, c1, stores, leaf)?;
                self.proc(b, c2, stores, leaf)
            }
            (Proc::Signal(op, v, q), _) => {
                let a = self.payload_type(op, "TyProc-Signal", here)?;
                self.check_value(&Ctx::new(), v, &a, &Effect::pure())?;
                if self.checks_effects() && !c.signals_of().contains(op) {
                    return Err(TypeError {
                        kind: ErrorKind::SignalNotDeclared,
                        rule: "TyProc-Signal",
                        span: None,
                        expected: Some(format!("{op} among the signals of {c}")),
                        found: None,
                        context: clip(here()),
                    });
                }
                self.proc(q, c, stores, leaf)
            }
            (Proc::Interrupt(op, v, q), _) => {
                let a = self.payload_type(op, "TyProc-Interrupt", here)?;
                self.check_value(&Ctx::new(), v, &a, &Effect::pure())?;
                self.proc(q, &self.proc_interrupt_inner(op, c), stores, leaf)
            }
            _ => Err(mismatch("TyProc-Par", c, "a process of a different shape", here())),
        }
    }

    fn proc_interrupt_inner(&self, op: &Op, c: &ProcType) -> ProcType {
        match c {
            ProcType::Run { ty, eff, pending } => {
                let st = self.interrupt_inner(op, &EffStack { ops: pending.clone(), base: eff.clone() });
                ProcType::Run { ty: ty.clone(), eff: st.base, pending: st.ops }
            }
            ProcType::Par(a, b) => ProcType::par(self.proc_interrupt_inner(op, a), self.proc_interrupt_inner(op, b)),
        }
    }

    /// Checks an externally injected interrupt payload.
    pub fn check_payload(&self, op: &str, v: &Value) -> Result<()> {
        let op: Op = op.into();
        let a = self.payload_type(&op, "TyProc-Interrupt", || format!("!<-{op}"))?;
        if !a.is_mobile() {
            return Err(TypeError {
                kind: ErrorKind::MobilityViolation,
                rule: "TyProc-Interrupt",
                span: None,
                expected: Some("a mobile payload type".into()),
                found: Some(a.to_string()),
                context: op.to_string(),
            });
        }
        self.check_value(&Ctx::new(), v, &a, &Effect::pure())
    }
}

/// Checks the signature, the declared annotations and every run clause of a
/// program, returning its process type. Clauses without a declared effect are
/// checked at the top effect; without a declared type, their type is
/// synthesised.
pub fn check_program(prog: &Program, effects: bool) -> Result<ProcType> {
    let mut checker = Checker::new(&prog.signature);
    if !effects {
        checker = checker.without_effects();
    }
    for (op, t) in &prog.signature {
        if !t.is_mobile() {
            return Err(TypeError {
                kind: ErrorKind::MobilityViolation,
                rule: "Signature",
                span: None,
                expected: Some("a mobile payload type".into()),
                found: Some(t.to_string()),
                context: format!("operation {op} : {t}"),
            });
        }
    }
    let mut leaf_types = vec![];
    for (m, run) in prog.proc.leaves().into_iter().zip(&prog.runs) {
        let at = |mut e: TypeError| {
            e.span = Some(run.pos);
            e
        };
        let mut ops = OpSet::new();
        if let Some(e) = &run.eff {
            effect_ops(e, &mut ops);
        }
        if let Some(t) = &run.ty {
            t.ops(&mut ops);
        }
        if let Some(op) = ops.iter().find(|op| !prog.signature.contains_key(*op)) {
            return Err(at(err(ErrorKind::UndeclaredOperation, "Annotation", op.to_string())));
        }
        let eff = run.eff.clone().unwrap_or_else(|| checker.top());
        let st = EffStack::new(eff.clone());
        let ty = match &run.ty {
            Some(t) => {
                checker.check_comp(&Ctx::new(), m, t, &st).map_err(at)?;
                t.clone()
            }
            None => checker.synth_comp(&Ctx::new(), m, &st).map_err(at)?,
        };
        leaf_types.push(ProcType::run(ty, eff));
    }
    let mut it = leaf_types.into_iter();
    Ok(shape(&prog.proc, &mut it))
}

fn shape(p: &Proc, leaves: &mut impl Iterator<Item = ProcType>) -> ProcType {
    match p {
        Proc::Run(_) => leaves.next().expect("one type per run leaf"),
        Proc::Par(a, b) => {
            let l = shape(a, leaves);
            ProcType::par(l, shape(b, leaves))
        }
        Proc::Signal(_, _, q) | Proc::Interrupt(_, _, q) => shape(q, leaves),
    }
}

/// A type for values stored by `ref`, synthesised with the given signature.
pub fn alloc_type(sig: &BTreeMap<Op, Type>) -> impl Fn(&Value, &[Cell]) -> Option<Type> + '_ {
    move |v, store| {
        let c = Checker::new(sig);
        let c = c.with_store(store);
        c.closed_value_type(v)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::effects::{oset, IAnn};
    use crate::surface::{parse_comp, parse_program};

    fn sig(entries: &[(&str, Type)]) -> BTreeMap<Op, Type> {
        entries.iter().map(|(k, t)| (Op::from(*k), t.clone())).collect()
    }

    #[test]
    fn lock_hides_promises_not_ints() {
        let p: Name = "p".into();
        let n: Name = "n".into();
        let ctx = Ctx::new().bind(&p, Type::promise(Type::Int)).bind(&n, Type::Int).lock();
        assert_eq!(ctx.lookup("p").unwrap_err().kind, ErrorKind::LockViolation);
        assert_eq!(ctx.lookup("n").unwrap(), Type::Int);
        assert_eq!(Ctx::new().lookup("q").unwrap_err().kind, ErrorKind::UnboundVariable);
    }

    #[test]
    fn box_of_promise_variable_rejected() {
        let s = sig(&[]);
        let c = Checker::new(&s);
        let p: Name = "p".into();
        let ctx = Ctx::new().bind(&p, Type::promise(Type::Int));
        let e = c.check_value(&ctx, &Value::boxed(Value::var("p")), &Type::boxed(Type::promise(Type::Int)), &Effect::pure());
        assert_eq!(e.unwrap_err().kind, ErrorKind::LockViolation);
    }

    #[test]
    fn signal_needs_declared_effect() {
        let s = sig(&[("display", Type::Str)]);
        let c = Checker::new(&s);
        let m = parse_comp("send display \"x\"; return ()").unwrap();
        let ok = EffStack::new(Effect::new(oset(["display"]), IAnn::empty()));
        c.check_comp(&Ctx::new(), &m, &Type::Unit, &ok).unwrap();
        let e = c.check_comp(&Ctx::new(), &m, &Type::Unit, &EffStack::new(Effect::pure())).unwrap_err();
        assert_eq!(e.kind, ErrorKind::SignalNotDeclared);
        c.without_effects().check_comp(&Ctx::new(), &m, &Type::Unit, &EffStack::new(Effect::pure())).unwrap();
    }

    #[test]
    fn promise_needs_handler_annotation() {
        let s = sig(&[("op", Type::Int)]);
        let c = Checker::new(&s);
        let m = parse_comp("promise (op x |-> return <<x>>) as p in await p").unwrap();
        let e = c.synth_comp(&Ctx::new(), &m, &EffStack::new(Effect::pure())).unwrap_err();
        assert_eq!(e.kind, ErrorKind::NoHandlerAnnotation);
        let eff = Effect::new(OpSet::new(), IAnn::from_entries(vec![("op".into(), Effect::pure())]));
        assert_eq!(c.synth_comp(&Ctx::new(), &m, &EffStack::new(eff)).unwrap(), Type::Int);
    }

    #[test]
    fn builtins_and_lists() {
        let s = sig(&[]);
        let c = Checker::new(&s);
        let m = parse_comp("let xs = range 1 3 in let ys = map (fun (x : int) |-> return 10 * x) xs in nth ys 0").unwrap();
        assert_eq!(c.synth_comp(&Ctx::new(), &m, &EffStack::new(Effect::pure())).unwrap(), Type::Int);
        let m = parse_comp("length []").unwrap();
        assert_eq!(c.synth_comp(&Ctx::new(), &m, &EffStack::new(Effect::pure())).unwrap_err().kind, ErrorKind::MissingAnnotation);
    }

    #[test]
    fn rec_result_inferred() {
        let s = sig(&[]);
        let c = Checker::new(&s);
        let m = parse_comp("let rec fact n = if n = 0 then return 1 else (let r = fact (n - 1) in return n * r) in fact 5").unwrap();
        assert_eq!(c.synth_comp(&Ctx::new(), &m, &EffStack::new(Effect::pure())).unwrap(), Type::Int);
    }

    #[test]
    fn program_signature_mobility() {
        let src = "operation op : int promise\nrun return ()";
        match parse_program(src) {
            Ok(p) => assert_eq!(check_program(&p, true).unwrap_err().kind, ErrorKind::MobilityViolation),
            Err(e) => panic!("{e}"),
        }
    }
}
