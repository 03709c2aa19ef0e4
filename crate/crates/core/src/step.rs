//! Small-step semantics of computations: redex enumeration under evaluation
//! contexts, contraction, and result forms.
//!
//! A redex is located by a path of evaluation-context frames from the root.
//! Enumeration is leftmost-outermost; at a single node the rules are tried
//! in the order of the reference rule table.

use std::collections::BTreeSet;
use std::fmt;
use std::sync::Arc;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::ast::{Comp, Const, Handler, Lambda, Name, Value};
use crate::builtins::{self, BuiltinError, Store};
use crate::subst::{fresh, fv_comp, Subst};
use crate::types::Type;

/// Reduction rule identifiers. The names are stable and appear in traces.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Rule {
    // standard computation rules
    AppFun,
    LetReturn,
    MatchPair,
    MatchInl,
    MatchInr,
    // extensions: recursion, builtins, conditionals
    AppRec,
    Delta,
    IfTrue,
    IfFalse,
    // algebraicity
    LetSignal,
    LetPromise,
    LetAwait,
    LetSpawn,
    // commutativity with interrupt handlers
    PromiseSignal,
    PromiseSpawn,
    // interrupt propagation
    InterruptReturn,
    InterruptSignal,
    InterruptHandle,
    InterruptSkip,
    InterruptAwait,
    InterruptSpawn,
    // awaiting and unboxing
    AwaitFulfilled,
    UnboxBox,
    // processes
    HoistSignal,
    SpawnProcess,
    BroadcastLeft,
    BroadcastRight,
    InterruptRun,
    InterruptPar,
    InterruptProcSignal,
}

impl Rule {
    pub const ALL: &'static [Rule] = &[
        Rule::AppFun,
        Rule::LetReturn,
        Rule::MatchPair,
        Rule::MatchInl,
        Rule::MatchInr,
        Rule::AppRec,
        Rule::Delta,
        Rule::IfTrue,
        Rule::IfFalse,
        Rule::LetSignal,
        Rule::LetPromise,
        Rule::LetAwait,
        Rule::LetSpawn,
        Rule::PromiseSignal,
        Rule::PromiseSpawn,
        Rule::InterruptReturn,
        Rule::InterruptSignal,
        Rule::InterruptHandle,
        Rule::InterruptSkip,
        Rule::InterruptAwait,
        Rule::InterruptSpawn,
        Rule::AwaitFulfilled,
        Rule::UnboxBox,
        Rule::HoistSignal,
        Rule::SpawnProcess,
        Rule::BroadcastLeft,
        Rule::BroadcastRight,
        Rule::InterruptRun,
        Rule::InterruptPar,
        Rule::InterruptProcSignal,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Rule::AppFun => "app-fun",
            Rule::LetReturn => "let-return",
            Rule::MatchPair => "match-pair",
            Rule::MatchInl => "match-inl",
            Rule::MatchInr => "match-inr",
            Rule::AppRec => "app-rec",
            Rule::Delta => "delta",
            Rule::IfTrue => "if-true",
            Rule::IfFalse => "if-false",
            Rule::LetSignal => "let-signal",
            Rule::LetPromise => "let-promise",
            Rule::LetAwait => "let-await",
            Rule::LetSpawn => "let-spawn",
            Rule::PromiseSignal => "promise-signal",
            Rule::PromiseSpawn => "promise-spawn",
            Rule::InterruptReturn => "interrupt-return",
            Rule::InterruptSignal => "interrupt-signal",
            Rule::InterruptHandle => "interrupt-handle",
            Rule::InterruptSkip => "interrupt-skip",
            Rule::InterruptAwait => "interrupt-await",
            Rule::InterruptSpawn => "interrupt-spawn",
            Rule::AwaitFulfilled => "await-fulfilled",
            Rule::UnboxBox => "unbox-box",
            Rule::HoistSignal => "hoist-signal",
            Rule::SpawnProcess => "spawn-process",
            Rule::BroadcastLeft => "broadcast-left",
            Rule::BroadcastRight => "broadcast-right",
            Rule::InterruptRun => "interrupt-run",
            Rule::InterruptPar => "interrupt-par",
            Rule::InterruptProcSignal => "interrupt-proc-signal",
        }
    }

    pub fn from_name(s: &str) -> Option<Rule> {
        Rule::ALL.iter().copied().find(|r| r.name() == s)
    }

    pub fn is_process_rule(self) -> bool {
        self >= Rule::HoistSignal
    }
}

impl fmt::Display for Rule {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// One evaluation-context frame.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Frame {
    /// `let x = [] in N`
    Let,
    /// `!->op(V, [])`
    Signal,
    /// `!<-op(V, [])`
    Interrupt,
    /// `promise (...) @ V as p in []`
    Promise,
    /// `spawn (M, [])`
    Spawn,
    /// `[] || Q`
    Left,
    /// `P || []`
    Right,
    /// `run []`
    Run,
}

/// An enabled reduction: where, and by which rule.
#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Redex {
    pub path: Vec<Frame>,
    pub rule: Rule,
    pub description: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Error, Serialize)]
pub enum StepError {
    #[error("redex `{rule}` is not enabled at the given path")]
    StaleRedex { rule: Rule },
    #[error("builtin failed: {0}")]
    Builtin(BuiltinError),
}

/// How reference cells get their type at allocation.
pub type AllocTy<'a> = &'a dyn Fn(&Value, &Store) -> Option<Type>;

/// The E-context child of a computation, if any.
pub fn child(m: &Comp, f: Frame) -> Option<&Comp> {
    match (m, f) {
        (Comp::Let(_, a, _), Frame::Let) => Some(a),
        (Comp::Signal(_, _, k), Frame::Signal) => Some(k),
        (Comp::Interrupt(_, _, k), Frame::Interrupt) => Some(k),
        (Comp::Promise(_, _, _, k), Frame::Promise) => Some(k),
        (Comp::Spawn(_, k), Frame::Spawn) => Some(k),
        _ => None,
    }
}

fn context_frame(m: &Comp) -> Option<(Frame, &Comp)> {
    [Frame::Let, Frame::Signal, Frame::Interrupt, Frame::Promise, Frame::Spawn]
        .into_iter()
        .find_map(|f| child(m, f).map(|c| (f, c)))
}

/// Rebuilds `m` with its `f`-child replaced.
pub fn replace_child(m: &Comp, f: Frame, new: Comp) -> Comp {
    let new = Arc::new(new);
    match (m, f) {
        (Comp::Let(x, _, n), Frame::Let) => Comp::Let(x.clone(), new, n.clone()),
        (Comp::Signal(op, v, _), Frame::Signal) => Comp::Signal(op.clone(), v.clone(), new),
        (Comp::Interrupt(op, v, _), Frame::Interrupt) => Comp::Interrupt(op.clone(), v.clone(), new),
        (Comp::Promise(h, w, p, _), Frame::Promise) => Comp::Promise(h.clone(), w.clone(), p.clone(), new),
        (Comp::Spawn(a, _), Frame::Spawn) => Comp::Spawn(a.clone(), new),
        _ => panic!("frame {f:?} does not fit"),
    }
}

/// The rule that fires at the root of `m`, if any. At most one does.
pub fn rule_at(m: &Comp) -> Option<Rule> {
    Some(match m {
        Comp::Apply(Value::Fun(l), _) if l.rec_name.is_none() => Rule::AppFun,
        Comp::Apply(Value::Fun(_), _) => Rule::AppRec,
        Comp::Apply(Value::Const(Const::Prim(..)), _) => Rule::Delta,
        Comp::Let(_, a, _) => match &**a {
            Comp::Return(_) => Rule::LetReturn,
            Comp::Signal(..) => Rule::LetSignal,
            Comp::Promise(..) => Rule::LetPromise,
            Comp::Await(..) => Rule::LetAwait,
            Comp::Spawn(..) => Rule::LetSpawn,
            _ => return None,
        },
        Comp::MatchPair(Value::Pair(..), ..) => Rule::MatchPair,
        Comp::MatchSum(Value::Inl(..), ..) => Rule::MatchInl,
        Comp::MatchSum(Value::Inr(..), ..) => Rule::MatchInr,
        Comp::If(Value::Const(Const::Bool(true)), ..) => Rule::IfTrue,
        Comp::If(Value::Const(Const::Bool(false)), ..) => Rule::IfFalse,
        Comp::Promise(_, _, _, k) => match &**k {
            Comp::Signal(..) => Rule::PromiseSignal,
            Comp::Spawn(..) => Rule::PromiseSpawn,
            _ => return None,
        },
        Comp::Interrupt(op, _, k) => match &**k {
            Comp::Return(_) => Rule::InterruptReturn,
            Comp::Signal(..) => Rule::InterruptSignal,
            Comp::Promise(h, ..) if h.op == *op => Rule::InterruptHandle,
            Comp::Promise(..) => Rule::InterruptSkip,
            Comp::Await(..) => Rule::InterruptAwait,
            Comp::Spawn(..) => Rule::InterruptSpawn,
            _ => return None,
        },
        Comp::Await(Value::Fulfilled(_), ..) => Rule::AwaitFulfilled,
        Comp::Unbox(Value::Boxed(_), ..) => Rule::UnboxBox,
        _ => return None,
    })
}

pub fn describe(rule: Rule, m: &Comp) -> String {
    let op = match m {
        Comp::Interrupt(op, ..) => Some(op.clone()),
        Comp::Let(_, a, _) => match &**a {
            Comp::Signal(op, ..) => Some(op.clone()),
            Comp::Promise(h, ..) => Some(h.op.clone()),
            _ => None,
        },
        Comp::Promise(_, _, _, k) => match &**k {
            Comp::Signal(op, ..) => Some(op.clone()),
            _ => None,
        },
        _ => None,
    };
    let what = match rule {
        Rule::AppFun => "apply a function".to_string(),
        Rule::AppRec => "unfold a recursive function".to_string(),
        Rule::Delta => match m {
            Comp::Apply(Value::Const(Const::Prim(p, _)), _) => format!("apply builtin {}", p.name()),
            _ => "apply builtin".to_string(),
        },
        Rule::LetReturn => "bind a returned value".to_string(),
        Rule::MatchPair => "split a pair".to_string(),
        Rule::MatchInl => "take the inl branch".to_string(),
        Rule::MatchInr => "take the inr branch".to_string(),
        Rule::IfTrue => "take the then branch".to_string(),
        Rule::IfFalse => "take the else branch".to_string(),
        Rule::LetSignal => format!("float signal {} out of a let", op.unwrap_or_default()),
        Rule::LetPromise => format!("float handler for {} out of a let", op.unwrap_or_default()),
        Rule::LetAwait => "float await out of a let".to_string(),
        Rule::LetSpawn => "float spawn out of a let".to_string(),
        Rule::PromiseSignal => format!("move signal {} past a handler", op.unwrap_or_default()),
        Rule::PromiseSpawn => "move spawn past a handler".to_string(),
        Rule::InterruptReturn => format!("interrupt {} meets a return", op.unwrap_or_default()),
        Rule::InterruptSignal => format!("interrupt {} passes a signal", op.unwrap_or_default()),
        Rule::InterruptHandle => format!("interrupt {} triggers its handler", op.unwrap_or_default()),
        Rule::InterruptSkip => format!("interrupt {} passes another handler", op.unwrap_or_default()),
        Rule::InterruptAwait => format!("interrupt {} passes an await", op.unwrap_or_default()),
        Rule::InterruptSpawn => format!("interrupt {} passes a spawn", op.unwrap_or_default()),
        Rule::AwaitFulfilled => "await a fulfilled promise".to_string(),
        Rule::UnboxBox => "unbox a boxed value".to_string(),
        _ => rule.name().to_string(),
    };
    what
}

/// All redexes of `m`, leftmost-outermost.
pub fn redexes(m: &Comp) -> Vec<Redex> {
    let mut out = vec![];
    let mut path = vec![];
    let mut cur = m;
    loop {
        if let Some(rule) = rule_at(cur) {
            out.push(Redex { path: path.clone(), rule, description: describe(rule, cur) });
        }
        match context_frame(cur) {
            Some((f, c)) => {
                path.push(f);
                cur = c;
            }
            None => return out,
        }
    }
}

/// The subterm at `path`.
pub fn at_path<'a>(m: &'a Comp, path: &[Frame]) -> Option<&'a Comp> {
    path.iter().try_fold(m, |c, f| child(c, *f))
}

fn subst2(m: &Comp, pairs: &[(&Name, &Value)]) -> Comp {
    let mut s = Subst::new();
    for (x, v) in pairs {
        s.insert((*x).clone(), (*v).clone());
    }
    s.comp(m)
}

/// `fun (s' : S) |-> promise (op x r s |-> M) @ s' as p in return p`
fn reinstaller(h: &Arc<Handler>, p: &Name) -> Value {
    let used = fv_comp(&h.body);
    let s2 = fresh(&h.s, &|c| used.contains(c) || c == &*h.s || c == &*h.x || c == &*h.r);
    let body = Comp::Promise(h.clone(), Value::Var(s2.clone()), p.clone(), Arc::new(Comp::Return(Value::Var(p.clone()))));
    Value::Fun(Arc::new(Lambda { rec_name: None, param: s2, param_ty: h.state_ty.clone(), ret: None, body }))
}

/// Contracts the redex at the root of `m` by `rule`.
pub fn contract(rule: Rule, m: &Comp, store: &mut Store, alloc: AllocTy) -> Result<Comp, StepError> {
    if rule_at(m) != Some(rule) {
        return Err(StepError::StaleRedex { rule });
    }
    let a = Arc::new;
    Ok(match (rule, m) {
        (Rule::AppFun | Rule::AppRec, Comp::Apply(Value::Fun(l), v)) => {
            let mut s = Subst::single(&l.param, v);
            if let Some(f) = &l.rec_name {
                if f != &l.param {
                    s.insert(f.clone(), Value::Fun(l.clone()));
                }
            }
            s.comp(&l.body)
        }
        (Rule::Delta, Comp::Apply(Value::Const(Const::Prim(p, args)), v)) => {
            builtins::apply(*p, args, v, store, alloc).map_err(StepError::Builtin)?
        }
        (Rule::LetReturn, Comp::Let(x, r, n)) => {
            let Comp::Return(v) = &**r else { unreachable!() };
            subst2(n, &[(x, v)])
        }
        (Rule::MatchPair, Comp::MatchPair(Value::Pair(v, w), x, y, k)) => {
            if x == y {
                subst2(k, &[(y, w)])
            } else {
                subst2(k, &[(x, v), (y, w)])
            }
        }
        (Rule::MatchInl, Comp::MatchSum(Value::Inl(_, v), x, k, _, _)) => subst2(k, &[(x, v)]),
        (Rule::MatchInr, Comp::MatchSum(Value::Inr(_, v), _, _, y, k)) => subst2(k, &[(y, v)]),
        (Rule::IfTrue, Comp::If(_, t, _)) => (**t).clone(),
        (Rule::IfFalse, Comp::If(_, _, e)) => (**e).clone(),
        (Rule::LetSignal, Comp::Let(x, s, n)) => {
            let Comp::Signal(op, v, k) = &**s else { unreachable!() };
            Comp::Signal(op.clone(), v.clone(), a(Comp::Let(x.clone(), k.clone(), n.clone())))
        }
        (Rule::LetPromise, Comp::Let(x, pr, n2)) => {
            let Comp::Promise(h, w, p, n1) = &**pr else { unreachable!() };
            // Barendregt: rename p if it would capture a free variable of N2.
            let (p, n1) = rename_if_free(p, n1, n2);
            Comp::Promise(h.clone(), w.clone(), p, a(Comp::Let(x.clone(), a(n1), n2.clone())))
        }
        (Rule::LetAwait, Comp::Let(x, aw, n)) => {
            let Comp::Await(v, y, k) = &**aw else { unreachable!() };
            let (y, k) = rename_if_free(y, k, n);
            Comp::Await(v.clone(), y, a(Comp::Let(x.clone(), a(k), n.clone())))
        }
        (Rule::LetSpawn, Comp::Let(x, sp, n2)) => {
            let Comp::Spawn(m1, n1) = &**sp else { unreachable!() };
            Comp::Spawn(m1.clone(), a(Comp::Let(x.clone(), n1.clone(), n2.clone())))
        }
        (Rule::PromiseSignal, Comp::Promise(h, w, p, k)) => {
            let Comp::Signal(op, v, n) = &**k else { unreachable!() };
            Comp::Signal(op.clone(), v.clone(), a(Comp::Promise(h.clone(), w.clone(), p.clone(), n.clone())))
        }
        (Rule::PromiseSpawn, Comp::Promise(h, w, p, k)) => {
            let Comp::Spawn(m2, n) = &**k else { unreachable!() };
            Comp::Spawn(m2.clone(), a(Comp::Promise(h.clone(), w.clone(), p.clone(), n.clone())))
        }
        (Rule::InterruptReturn, Comp::Interrupt(_, _, k)) => (**k).clone(),
        (Rule::InterruptSignal, Comp::Interrupt(op, v, k)) => {
            let Comp::Signal(op2, w, n) = &**k else { unreachable!() };
            Comp::Signal(op2.clone(), w.clone(), a(Comp::Interrupt(op.clone(), v.clone(), n.clone())))
        }
        (Rule::InterruptHandle, Comp::Interrupt(op, v, k)) => {
            let Comp::Promise(h, w, p, n) = &**k else { unreachable!() };
            let r = reinstaller(h, p);
            let mut s = Subst::new();
            s.insert(h.x.clone(), v.clone());
            s.insert(h.r.clone(), r);
            s.insert(h.s.clone(), w.clone());
            let body = s.comp(&h.body);
            Comp::Let(p.clone(), a(body), a(Comp::Interrupt(op.clone(), v.clone(), n.clone())))
        }
        (Rule::InterruptSkip, Comp::Interrupt(op, v, k)) => {
            let Comp::Promise(h, w, p, n) = &**k else { unreachable!() };
            Comp::Promise(h.clone(), w.clone(), p.clone(), a(Comp::Interrupt(op.clone(), v.clone(), n.clone())))
        }
        (Rule::InterruptAwait, Comp::Interrupt(op, v, k)) => {
            let Comp::Await(w, x, n) = &**k else { unreachable!() };
            Comp::Await(w.clone(), x.clone(), a(Comp::Interrupt(op.clone(), v.clone(), n.clone())))
        }
        (Rule::InterruptSpawn, Comp::Interrupt(op, v, k)) => {
            let Comp::Spawn(m1, n) = &**k else { unreachable!() };
            Comp::Spawn(m1.clone(), a(Comp::Interrupt(op.clone(), v.clone(), n.clone())))
        }
        (Rule::AwaitFulfilled, Comp::Await(Value::Fulfilled(v), x, k)) => subst2(k, &[(x, v)]),
        (Rule::UnboxBox, Comp::Unbox(Value::Boxed(v), x, k)) => subst2(k, &[(x, v)]),
        _ => unreachable!("rule_at agreed"),
    })
}

/// Renames binder `x` of `body` when `x` occurs free in `other`, the term
/// about to move under it.
fn rename_if_free(x: &Name, body: &Arc<Comp>, other: &Comp) -> (Name, Comp) {
    let fo = fv_comp(other);
    if !fo.contains(x) {
        return (x.clone(), (**body).clone());
    }
    let fb = fv_comp(body);
    let y = fresh(x, &|c| fo.contains(c) || fb.contains(c));
    (y.clone(), Subst::single(x, &Value::Var(y)).comp(body))
}

/// Applies `r` to `m`, checking that it is still enabled.
pub fn apply(m: &Comp, r: &Redex, store: &mut Store, alloc: AllocTy) -> Result<Comp, StepError> {
    fn go(m: &Comp, path: &[Frame], rule: Rule, store: &mut Store, alloc: AllocTy) -> Result<Comp, StepError> {
        match path.split_first() {
            None => contract(rule, m, store, alloc),
            Some((f, rest)) => {
                let c = child(m, *f).ok_or(StepError::StaleRedex { rule })?;
                Ok(replace_child(m, *f, go(c, rest, rule, store, alloc)?))
            }
        }
    }
    go(m, &r.path, r.rule, store, alloc)
}

/// `RunRes⟨Ψ | M⟩`
pub fn is_run_result(psi: &BTreeSet<Name>, m: &Comp) -> bool {
    match m {
        Comp::Return(_) => true,
        Comp::Await(Value::Var(p), ..) => psi.contains(p),
        Comp::Promise(_, _, p, n) => {
            let mut psi = psi.clone();
            psi.insert(p.clone());
            is_run_result(&psi, n)
        }
        _ => false,
    }
}

/// `CompRes⟨Ψ | M⟩`
pub fn is_comp_result(psi: &BTreeSet<Name>, m: &Comp) -> bool {
    match m {
        Comp::Signal(_, _, k) | Comp::Spawn(_, k) => is_comp_result(psi, k),
        _ => is_run_result(psi, m),
    }
}
