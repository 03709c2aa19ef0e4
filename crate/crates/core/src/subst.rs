//! Free variables, capture-avoiding substitution, alpha-equivalence and
//! canonical hashing.
//!
//! Substitution works on the named representation and renames binders on
//! demand. Alpha-equivalence and hashing go through a byte encoding in which
//! bound variables are replaced by de Bruijn indices.

use std::collections::{BTreeSet, HashMap, HashSet};
use std::sync::Arc;

use sha2::{Digest, Sha256};

use crate::ast::{Comp, Const, Handler, Lambda, Name, Proc, Value};
use crate::builtins::Store;
use crate::effects::Effect;
use crate::types::{CompType, Type};

pub type Vars = BTreeSet<Name>;

pub fn fv_value(v: &Value) -> Vars {
    let mut acc = Vars::new();
    value_fv(v, &mut vec![], &mut acc);
    acc
}

pub fn fv_comp(m: &Comp) -> Vars {
    let mut acc = Vars::new();
    comp_fv(m, &mut vec![], &mut acc);
    acc
}

pub fn fv_proc(p: &Proc) -> Vars {
    let mut acc = Vars::new();
    proc_fv(p, &mut vec![], &mut acc);
    acc
}

fn value_fv(v: &Value, bound: &mut Vec<Name>, acc: &mut Vars) {
    match v {
        Value::Var(x) => {
            if !bound.contains(x) {
                acc.insert(x.clone());
            }
        }
        Value::Unit => {}
        Value::Pair(a, b) => {
            value_fv(a, bound, acc);
            value_fv(b, bound, acc);
        }
        Value::Inl(_, a) | Value::Inr(_, a) | Value::Fulfilled(a) | Value::Boxed(a) => value_fv(a, bound, acc),
        Value::Fun(l) => {
            let n = bound.len();
            bound.extend(l.rec_name.iter().cloned());
            bound.push(l.param.clone());
            comp_fv(&l.body, bound, acc);
            bound.truncate(n);
        }
        Value::Const(Const::List(_, items)) | Value::Const(Const::Prim(_, items)) => {
            for it in items.iter() {
                value_fv(it, bound, acc);
            }
        }
        Value::Const(_) => {}
    }
}

fn under(bound: &mut Vec<Name>, names: &[&Name], m: &Comp, acc: &mut Vars) {
    let n = bound.len();
    bound.extend(names.iter().map(|x| (*x).clone()));
    comp_fv(m, bound, acc);
    bound.truncate(n);
}

fn comp_fv(m: &Comp, bound: &mut Vec<Name>, acc: &mut Vars) {
    match m {
        Comp::Return(v) => value_fv(v, bound, acc),
        Comp::Let(x, a, b) => {
            comp_fv(a, bound, acc);
            under(bound, &[x], b, acc);
        }
        Comp::Apply(f, a) => {
            value_fv(f, bound, acc);
            value_fv(a, bound, acc);
        }
        Comp::MatchPair(v, x, y, b) => {
            value_fv(v, bound, acc);
            under(bound, &[x, y], b, acc);
        }
        Comp::MatchEmpty(v, _) => value_fv(v, bound, acc),
        Comp::MatchSum(v, x, a, y, b) => {
            value_fv(v, bound, acc);
            under(bound, &[x], a, acc);
            under(bound, &[y], b, acc);
        }
        Comp::If(v, a, b) => {
            value_fv(v, bound, acc);
            comp_fv(a, bound, acc);
            comp_fv(b, bound, acc);
        }
        Comp::Signal(_, v, k) | Comp::Interrupt(_, v, k) => {
            value_fv(v, bound, acc);
            comp_fv(k, bound, acc);
        }
        Comp::Promise(h, w, p, k) => {
            under(bound, &[&h.x, &h.r, &h.s], &h.body, acc);
            value_fv(w, bound, acc);
            under(bound, &[p], k, acc);
        }
        Comp::Await(v, x, k) | Comp::Unbox(v, x, k) => {
            value_fv(v, bound, acc);
            under(bound, &[x], k, acc);
        }
        Comp::Spawn(a, b) => {
            comp_fv(a, bound, acc);
            comp_fv(b, bound, acc);
        }
    }
}

fn proc_fv(p: &Proc, bound: &mut Vec<Name>, acc: &mut Vars) {
    match p {
        Proc::Run(m) => comp_fv(m, bound, acc),
        Proc::Par(a, b) => {
            proc_fv(a, bound, acc);
            proc_fv(b, bound, acc);
        }
        Proc::Signal(_, v, q) | Proc::Interrupt(_, v, q) => {
            value_fv(v, bound, acc);
            proc_fv(q, bound, acc);
        }
    }
}

/// All variable names occurring in a computation, free or bound.
fn all_names_comp(m: &Comp, acc: &mut HashSet<Name>) {
    // Bound names are collected through the free-variable walk of every
    // binder body; a superset is harmless for freshness.
    let mut bound = vec![];
    let mut fv = Vars::new();
    comp_fv(m, &mut bound, &mut fv);
    acc.extend(fv);
    binders_comp(m, acc);
}

fn binders_value(v: &Value, acc: &mut HashSet<Name>) {
    match v {
        Value::Pair(a, b) => {
            binders_value(a, acc);
            binders_value(b, acc);
        }
        Value::Inl(_, a) | Value::Inr(_, a) | Value::Fulfilled(a) | Value::Boxed(a) => binders_value(a, acc),
        Value::Fun(l) => {
            acc.extend(l.rec_name.iter().cloned());
            acc.insert(l.param.clone());
            binders_comp(&l.body, acc);
        }
        Value::Const(Const::List(_, items)) | Value::Const(Const::Prim(_, items)) => {
            items.iter().for_each(|it| binders_value(it, acc))
        }
        _ => {}
    }
}

fn binders_comp(m: &Comp, acc: &mut HashSet<Name>) {
    match m {
        Comp::Return(v) | Comp::MatchEmpty(v, _) => binders_value(v, acc),
        Comp::Let(x, a, b) => {
            acc.insert(x.clone());
            binders_comp(a, acc);
            binders_comp(b, acc);
        }
        Comp::Apply(f, a) => {
            binders_value(f, acc);
            binders_value(a, acc);
        }
        Comp::MatchPair(v, x, y, b) => {
            binders_value(v, acc);
            acc.insert(x.clone());
            acc.insert(y.clone());
            binders_comp(b, acc);
        }
        Comp::MatchSum(v, x, a, y, b) => {
            binders_value(v, acc);
            acc.insert(x.clone());
            acc.insert(y.clone());
            binders_comp(a, acc);
            binders_comp(b, acc);
        }
        Comp::If(v, a, b) => {
            binders_value(v, acc);
            binders_comp(a, acc);
            binders_comp(b, acc);
        }
        Comp::Signal(_, v, k) | Comp::Interrupt(_, v, k) => {
            binders_value(v, acc);
            binders_comp(k, acc);
        }
        Comp::Promise(h, w, p, k) => {
            acc.extend([h.x.clone(), h.r.clone(), h.s.clone(), p.clone()]);
            binders_comp(&h.body, acc);
            binders_value(w, acc);
            binders_comp(k, acc);
        }
        Comp::Await(v, x, k) | Comp::Unbox(v, x, k) => {
            binders_value(v, acc);
            acc.insert(x.clone());
            binders_comp(k, acc);
        }
        Comp::Spawn(a, b) => {
            binders_comp(a, acc);
            binders_comp(b, acc);
        }
    }
}

/// `base'`, `base'1`, `base'2`, ... : the first one not in `avoid`.
pub fn fresh(base: &str, avoid: &dyn Fn(&str) -> bool) -> Name {
    let root = base.split('\'').next().unwrap_or(base);
    let root = if root.is_empty() { "x" } else { root };
    let first = format!("{root}'");
    if !avoid(&first) {
        return Name::from(first);
    }
    (1..)
        .map(|n| format!("{root}'{n}"))
        .find(|c| !avoid(c))
        .map(Name::from)
        .unwrap()
}

/// A simultaneous substitution.
#[derive(Clone, Debug, Default)]
pub struct Subst {
    map: HashMap<Name, Value>,
    range_fv: Vars,
}

impl Subst {
    pub fn new() -> Subst {
        Subst::default()
    }

    pub fn single(x: &Name, v: &Value) -> Subst {
        let mut s = Subst::new();
        s.insert(x.clone(), v.clone());
        s
    }

    pub fn insert(&mut self, x: Name, v: Value) {
        self.range_fv.extend(fv_value(&v));
        self.map.insert(x, v);
    }

    pub fn is_empty(&self) -> bool {
        self.map.is_empty()
    }

    /// Prepares to go under binders `xs` whose scope is `body`. Returns the
    /// possibly renamed binders and the substitution to use inside.
    fn enter(&self, xs: &[&Name], body: &[&Comp]) -> (Vec<Name>, Subst) {
        let mut inner = self.clone();
        for x in xs {
            inner.map.remove(*x);
        }
        if inner.map.is_empty() {
            return (xs.iter().map(|x| (*x).clone()).collect(), inner);
        }
        let capture = xs.iter().any(|x| self.range_fv.contains(*x));
        if !capture {
            return (xs.iter().map(|x| (*x).clone()).collect(), inner);
        }
        let mut used: HashSet<Name> = self.range_fv.iter().cloned().collect();
        used.extend(self.map.keys().cloned());
        for b in body {
            all_names_comp(b, &mut used);
        }
        used.extend(xs.iter().map(|x| (*x).clone()));
        let mut out = vec![];
        for x in xs {
            if self.range_fv.contains(*x) {
                let y = fresh(x, &|c| used.contains(c));
                used.insert(y.clone());
                inner.map.insert((*x).clone(), Value::Var(y.clone()));
                inner.range_fv.insert(y.clone());
                out.push(y);
            } else {
                out.push((*x).clone());
            }
        }
        (out, inner)
    }

    pub fn value(&self, v: &Value) -> Value {
        if self.map.is_empty() {
            return v.clone();
        }
        match v {
            Value::Var(x) => self.map.get(x).cloned().unwrap_or_else(|| v.clone()),
            Value::Unit => Value::Unit,
            Value::Pair(a, b) => Value::Pair(Arc::new(self.value(a)), Arc::new(self.value(b))),
            Value::Inl(t, a) => Value::Inl(t.clone(), Arc::new(self.value(a))),
            Value::Inr(t, a) => Value::Inr(t.clone(), Arc::new(self.value(a))),
            Value::Fulfilled(a) => Value::Fulfilled(Arc::new(self.value(a))),
            Value::Boxed(a) => Value::Boxed(Arc::new(self.value(a))),
            Value::Fun(l) => {
                let mut xs: Vec<&Name> = l.rec_name.iter().collect();
                xs.push(&l.param);
                let (ys, inner) = self.enter(&xs, &[&l.body]);
                let (rec_name, param) = if l.rec_name.is_some() {
                    (Some(ys[0].clone()), ys[1].clone())
                } else {
                    (None, ys[0].clone())
                };
                Value::Fun(Arc::new(Lambda {
                    rec_name,
                    param,
                    param_ty: l.param_ty.clone(),
                    ret: l.ret.clone(),
                    body: inner.comp(&l.body),
                }))
            }
            Value::Const(Const::List(t, items)) => {
                Value::Const(Const::List(t.clone(), Arc::new(items.iter().map(|i| self.value(i)).collect())))
            }
            Value::Const(Const::Prim(p, items)) => {
                Value::Const(Const::Prim(*p, Arc::new(items.iter().map(|i| self.value(i)).collect())))
            }
            Value::Const(_) => v.clone(),
        }
    }

    fn body1(&self, x: &Name, m: &Comp) -> (Name, Arc<Comp>) {
        let (ys, inner) = self.enter(&[x], &[m]);
        (ys[0].clone(), Arc::new(inner.comp(m)))
    }

    pub fn comp(&self, m: &Comp) -> Comp {
        if self.map.is_empty() {
            return m.clone();
        }
        match m {
            Comp::Return(v) => Comp::Return(self.value(v)),
            Comp::Let(x, a, b) => {
                let a2 = self.comp(a);
                let (y, b2) = self.body1(x, b);
                Comp::Let(y, Arc::new(a2), b2)
            }
            Comp::Apply(f, a) => Comp::Apply(self.value(f), self.value(a)),
            Comp::MatchPair(v, x, y, b) => {
                let (ys, inner) = self.enter(&[x, y], &[b]);
                Comp::MatchPair(self.value(v), ys[0].clone(), ys[1].clone(), Arc::new(inner.comp(b)))
            }
            Comp::MatchEmpty(v, t) => Comp::MatchEmpty(self.value(v), t.clone()),
            Comp::MatchSum(v, x, a, y, b) => {
                let (x2, a2) = self.body1(x, a);
                let (y2, b2) = self.body1(y, b);
                Comp::MatchSum(self.value(v), x2, a2, y2, b2)
            }
            Comp::If(v, a, b) => Comp::If(self.value(v), Arc::new(self.comp(a)), Arc::new(self.comp(b))),
            Comp::Signal(op, v, k) => Comp::Signal(op.clone(), self.value(v), Arc::new(self.comp(k))),
            Comp::Interrupt(op, v, k) => Comp::Interrupt(op.clone(), self.value(v), Arc::new(self.comp(k))),
            Comp::Promise(h, w, p, k) => {
                let (ys, inner) = self.enter(&[&h.x, &h.r, &h.s], &[&h.body]);
                let h2 = Handler {
                    op: h.op.clone(),
                    x: ys[0].clone(),
                    r: ys[1].clone(),
                    s: ys[2].clone(),
                    state_ty: h.state_ty.clone(),
                    body: inner.comp(&h.body),
                };
                let (p2, k2) = self.body1(p, k);
                Comp::Promise(Arc::new(h2), self.value(w), p2, k2)
            }
            Comp::Await(v, x, k) => {
                let (y, k2) = self.body1(x, k);
                Comp::Await(self.value(v), y, k2)
            }
            Comp::Unbox(v, x, k) => {
                let (y, k2) = self.body1(x, k);
                Comp::Unbox(self.value(v), y, k2)
            }
            Comp::Spawn(a, b) => Comp::Spawn(Arc::new(self.comp(a)), Arc::new(self.comp(b))),
        }
    }

    pub fn proc(&self, p: &Proc) -> Proc {
        if self.map.is_empty() {
            return p.clone();
        }
        match p {
            Proc::Run(m) => Proc::Run(Arc::new(self.comp(m))),
            Proc::Par(a, b) => Proc::Par(Arc::new(self.proc(a)), Arc::new(self.proc(b))),
            Proc::Signal(op, v, q) => Proc::Signal(op.clone(), self.value(v), Arc::new(self.proc(q))),
            Proc::Interrupt(op, v, q) => Proc::Interrupt(op.clone(), self.value(v), Arc::new(self.proc(q))),
        }
    }
}

/// `m[v/x]`
pub fn subst_comp(m: &Comp, x: &Name, v: &Value) -> Comp {
    Subst::single(x, v).comp(m)
}

pub fn subst_value(t: &Value, x: &Name, v: &Value) -> Value {
    Subst::single(x, v).value(t)
}

// ---------------------------------------------------------------------------
// De Bruijn encoding

struct Enc {
    out: Vec<u8>,
    env: Vec<Name>,
}

impl Enc {
    fn tag(&mut self, t: u8) {
        self.out.push(t);
    }
    fn str(&mut self, s: &str) {
        self.out.extend((s.len() as u32).to_le_bytes());
        self.out.extend(s.as_bytes());
    }
    fn int(&mut self, n: i64) {
        self.out.extend(n.to_le_bytes());
    }
    fn var(&mut self, x: &Name) {
        match self.env.iter().rev().position(|y| y == x) {
            Some(i) => {
                self.tag(1);
                self.int(i as i64);
            }
            None => {
                self.tag(2);
                self.str(x);
            }
        }
    }
    fn bind<F: FnOnce(&mut Enc)>(&mut self, xs: &[&Name], f: F) {
        let n = self.env.len();
        self.env.extend(xs.iter().map(|x| (*x).clone()));
        f(self);
        self.env.truncate(n);
    }
    fn opt_ty(&mut self, t: &Option<Type>) {
        match t {
            None => self.tag(0),
            Some(t) => {
                self.tag(1);
                self.ty(t);
            }
        }
    }
    fn eff(&mut self, e: &Effect) {
        self.int(e.o.len() as i64);
        for op in &e.o {
            self.str(op);
        }
        let nodes = e.i.raw_nodes();
        self.int(nodes.len() as i64);
        for node in nodes {
            self.int(node.len() as i64);
            for (op, (o, c)) in node {
                self.str(op);
                self.int(o.len() as i64);
                for s in o {
                    self.str(s);
                }
                self.int(*c as i64);
            }
        }
    }
    fn ty(&mut self, t: &Type) {
        match t {
            Type::Int => self.tag(0),
            Type::Bool => self.tag(1),
            Type::Str => self.tag(2),
            Type::Unit => self.tag(3),
            Type::Empty => self.tag(4),
            Type::Prod(a, b) => {
                self.tag(5);
                self.ty(a);
                self.ty(b);
            }
            Type::Sum(a, b) => {
                self.tag(6);
                self.ty(a);
                self.ty(b);
            }
            Type::Fun(a, c) => {
                self.tag(7);
                self.ty(a);
                self.ctype(c);
            }
            Type::Promise(a) => {
                self.tag(8);
                self.ty(a);
            }
            Type::Box(a) => {
                self.tag(9);
                self.ty(a);
            }
            Type::List(a) => {
                self.tag(10);
                self.ty(a);
            }
            Type::Ref(a) => {
                self.tag(11);
                self.ty(a);
            }
        }
    }
    fn ctype(&mut self, c: &CompType) {
        self.ty(&c.ty);
        self.eff(&c.eff);
    }
    fn value(&mut self, v: &Value) {
        match v {
            Value::Var(x) => self.var(x),
            Value::Unit => self.tag(3),
            Value::Pair(a, b) => {
                self.tag(4);
                self.value(a);
                self.value(b);
            }
            Value::Inl(t, a) => {
                self.tag(5);
                self.opt_ty(t);
                self.value(a);
            }
            Value::Inr(t, a) => {
                self.tag(6);
                self.opt_ty(t);
                self.value(a);
            }
            Value::Fun(l) => {
                self.tag(if l.rec_name.is_some() { 8 } else { 7 });
                self.opt_ty(&l.param_ty);
                self.opt_ty(&l.ret);
                let mut xs: Vec<&Name> = l.rec_name.iter().collect();
                xs.push(&l.param);
                self.bind(&xs, |e| e.comp(&l.body));
            }
            Value::Fulfilled(a) => {
                self.tag(9);
                self.value(a);
            }
            Value::Boxed(a) => {
                self.tag(10);
                self.value(a);
            }
            Value::Const(c) => match c {
                Const::Int(n) => {
                    self.tag(11);
                    self.int(*n);
                }
                Const::Bool(b) => {
                    self.tag(12);
                    self.tag(*b as u8);
                }
                Const::Str(s) => {
                    self.tag(13);
                    self.str(s);
                }
                Const::List(t, items) => {
                    self.tag(14);
                    self.opt_ty(t);
                    self.int(items.len() as i64);
                    items.iter().for_each(|i| self.value(i));
                }
                Const::Loc(l) => {
                    self.tag(15);
                    self.int(*l as i64);
                }
                Const::Prim(p, items) => {
                    self.tag(16);
                    self.str(p.name());
                    self.int(items.len() as i64);
                    items.iter().for_each(|i| self.value(i));
                }
            },
        }
    }
    fn comp(&mut self, m: &Comp) {
        match m {
            Comp::Return(v) => {
                self.tag(30);
                self.value(v);
            }
            Comp::Let(x, a, b) => {
                self.tag(31);
                self.comp(a);
                self.bind(&[x], |e| e.comp(b));
            }
            Comp::Apply(f, a) => {
                self.tag(32);
                self.value(f);
                self.value(a);
            }
            Comp::MatchPair(v, x, y, b) => {
                self.tag(33);
                self.value(v);
                self.bind(&[x, y], |e| e.comp(b));
            }
            Comp::MatchEmpty(v, t) => {
                self.tag(34);
                self.value(v);
                self.opt_ty(t);
            }
            Comp::MatchSum(v, x, a, y, b) => {
                self.tag(35);
                self.value(v);
                self.bind(&[x], |e| e.comp(a));
                self.bind(&[y], |e| e.comp(b));
            }
            Comp::If(v, a, b) => {
                self.tag(36);
                self.value(v);
                self.comp(a);
                self.comp(b);
            }
            Comp::Signal(op, v, k) => {
                self.tag(37);
                self.str(op);
                self.value(v);
                self.comp(k);
            }
            Comp::Interrupt(op, v, k) => {
                self.tag(38);
                self.str(op);
                self.value(v);
                self.comp(k);
            }
            Comp::Promise(h, w, p, k) => {
                self.tag(39);
                self.str(&h.op);
                self.opt_ty(&h.state_ty);
                self.bind(&[&h.x, &h.r, &h.s], |e| e.comp(&h.body));
                self.value(w);
                self.bind(&[p], |e| e.comp(k));
            }
            Comp::Await(v, x, k) => {
                self.tag(40);
                self.value(v);
                self.bind(&[x], |e| e.comp(k));
            }
            Comp::Unbox(v, x, k) => {
                self.tag(41);
                self.value(v);
                self.bind(&[x], |e| e.comp(k));
            }
            Comp::Spawn(a, b) => {
                self.tag(42);
                self.comp(a);
                self.comp(b);
            }
        }
    }
    fn proc(&mut self, p: &Proc) {
        match p {
            Proc::Run(m) => {
                self.tag(50);
                self.comp(m);
            }
            Proc::Par(a, b) => {
                self.tag(51);
                self.proc(a);
                self.proc(b);
            }
            Proc::Signal(op, v, q) => {
                self.tag(52);
                self.str(op);
                self.value(v);
                self.proc(q);
            }
            Proc::Interrupt(op, v, q) => {
                self.tag(53);
                self.str(op);
                self.value(v);
                self.proc(q);
            }
        }
    }
}

fn enc() -> Enc {
    Enc { out: Vec::with_capacity(256), env: vec![] }
}

pub fn encode_value(v: &Value) -> Vec<u8> {
    let mut e = enc();
    e.value(v);
    e.out
}

pub fn encode_comp(m: &Comp) -> Vec<u8> {
    let mut e = enc();
    e.comp(m);
    e.out
}

pub fn encode_proc(p: &Proc) -> Vec<u8> {
    let mut e = enc();
    e.proc(p);
    e.out
}

/// Encoding of a process together with per-leaf stores.
pub fn encode_config(p: &Proc, stores: &[Store]) -> Vec<u8> {
    let mut e = enc();
    e.proc(p);
    for s in stores {
        e.tag(60);
        e.int(s.len() as i64);
        for cell in s {
            e.opt_ty(&cell.ty);
            e.value(&cell.val);
        }
    }
    e.out
}

pub fn alpha_eq_value(a: &Value, b: &Value) -> bool {
    encode_value(a) == encode_value(b)
}

pub fn alpha_eq_comp(a: &Comp, b: &Comp) -> bool {
    encode_comp(a) == encode_comp(b)
}

pub fn alpha_eq_proc(a: &Proc, b: &Proc) -> bool {
    encode_proc(a) == encode_proc(b)
}

/// First 64 bits of SHA-256 over the encoding. Stable across runs.
pub fn digest(bytes: &[u8]) -> u64 {
    let d = Sha256::digest(bytes);
    u64::from_be_bytes(d[..8].try_into().unwrap())
}

pub fn hash_value(v: &Value) -> u64 {
    digest(&encode_value(v))
}

pub fn hash_comp(m: &Comp) -> u64 {
    digest(&encode_comp(m))
}

pub fn hash_proc(p: &Proc) -> u64 {
    digest(&encode_proc(p))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ast::name;

    #[test]
    fn direct_replacement() {
        let m = Comp::ret(Value::var("x"));
        let v = Value::fulfilled(Value::Unit);
        assert_eq!(subst_comp(&m, &name("x"), &v), Comp::ret(v));
    }

    #[test]
    fn renames_on_capture() {
        let f = Value::fun("y", Some(Type::Unit), Comp::ret(Value::var("x")));
        let out = subst_value(&f, &name("x"), &Value::var("y"));
        let Value::Fun(l) = &out else { panic!() };
        assert_eq!(&*l.param, "y'");
        assert_eq!(l.body, Comp::ret(Value::var("y")));
    }

    #[test]
    fn alpha_and_hash() {
        let a = Value::fun("x", None, Comp::ret(Value::var("x")));
        let b = Value::fun("y", None, Comp::ret(Value::var("y")));
        let c = Value::fun("y", None, Comp::ret(Value::var("z")));
        assert!(alpha_eq_value(&a, &b));
        assert!(!alpha_eq_value(&a, &c));
        assert_eq!(hash_value(&a), hash_value(&b));
        let r1 = Comp::ret(Value::Unit);
        let r2 = Comp::ret(Value::fulfilled(Value::Unit));
        assert_ne!(hash_comp(&r1), hash_comp(&r2));
    }

    #[test]
    fn fresh_names() {
        assert_eq!(&*fresh("y", &|_| false), "y'");
        assert_eq!(&*fresh("y", &|c| c == "y'"), "y'1");
        assert_eq!(&*fresh("y'", &|c| c == "y'" || c == "y'1"), "y'2");
    }
}
