//! Abstract syntax of values, computations and processes.
//!
//! Terms are immutable and share sub-terms through `Arc`, so cloning is cheap
//! and terms can be sent across threads freely.

use std::sync::Arc;

use crate::builtins::Prim;
use crate::effects::Op;
use crate::types::Type;

pub type Name = Arc<str>;

#[derive(Clone, PartialEq, Eq, Hash, Debug)]
pub enum Value {
    Var(Name),
    Unit,
    Pair(Arc<Value>, Arc<Value>),
    /// `inl_Y V`: the annotation is the type of the other summand.
    Inl(Option<Type>, Arc<Value>),
    Inr(Option<Type>, Arc<Value>),
    Fun(Arc<Lambda>),
    Fulfilled(Arc<Value>),
    Boxed(Arc<Value>),
    Const(Const),
}

/// `fun (x : X) |-> M`, optionally self-referential under `rec_name`.
#[derive(Clone, PartialEq, Eq, Hash, Debug)]
pub struct Lambda {
    pub rec_name: Option<Name>,
    pub param: Name,
    pub param_ty: Option<Type>,
    pub ret: Option<Type>,
    pub body: Comp,
}

#[derive(Clone, PartialEq, Eq, Hash, Debug)]
pub enum Const {
    Int(i64),
    Bool(bool),
    Str(Arc<str>),
    List(Option<Type>, Arc<Vec<Value>>),
    /// Reference cell in the store of the enclosing process.
    Loc(u32),
    /// Builtin applied to fewer arguments than its arity.
    Prim(Prim, Arc<Vec<Value>>),
}

/// The code of a stateful reinstallable interrupt handler: `op x r s |-> body`.
#[derive(Clone, PartialEq, Eq, Hash, Debug)]
pub struct Handler {
    pub op: Op,
    pub x: Name,
    pub r: Name,
    pub s: Name,
    pub state_ty: Option<Type>,
    pub body: Comp,
}

#[derive(Clone, PartialEq, Eq, Hash, Debug)]
pub enum Comp {
    Return(Value),
    Let(Name, Arc<Comp>, Arc<Comp>),
    Apply(Value, Value),
    MatchPair(Value, Name, Name, Arc<Comp>),
    MatchEmpty(Value, Option<Type>),
    MatchSum(Value, Name, Arc<Comp>, Name, Arc<Comp>),
    If(Value, Arc<Comp>, Arc<Comp>),
    Signal(Op, Value, Arc<Comp>),
    Interrupt(Op, Value, Arc<Comp>),
    /// `promise (h) @ state as p in cont`
    Promise(Arc<Handler>, Value, Name, Arc<Comp>),
    Await(Value, Name, Arc<Comp>),
    Unbox(Value, Name, Arc<Comp>),
    Spawn(Arc<Comp>, Arc<Comp>),
}

#[derive(Clone, PartialEq, Eq, Hash, Debug)]
pub enum Proc {
    Run(Arc<Comp>),
    Par(Arc<Proc>, Arc<Proc>),
    Signal(Op, Value, Arc<Proc>),
    Interrupt(Op, Value, Arc<Proc>),
}

pub fn name(s: &str) -> Name {
    Name::from(s)
}

impl Value {
    pub fn var(x: &str) -> Value {
        Value::Var(name(x))
    }
    pub fn pair(a: Value, b: Value) -> Value {
        Value::Pair(Arc::new(a), Arc::new(b))
    }
    pub fn fulfilled(v: Value) -> Value {
        Value::Fulfilled(Arc::new(v))
    }
    pub fn boxed(v: Value) -> Value {
        Value::Boxed(Arc::new(v))
    }
    pub fn int(n: i64) -> Value {
        Value::Const(Const::Int(n))
    }
    pub fn bool(b: bool) -> Value {
        Value::Const(Const::Bool(b))
    }
    pub fn str(s: &str) -> Value {
        Value::Const(Const::Str(s.into()))
    }
    pub fn list(elem: Option<Type>, items: Vec<Value>) -> Value {
        Value::Const(Const::List(elem, Arc::new(items)))
    }
    pub fn fun(x: &str, ty: Option<Type>, body: Comp) -> Value {
        Value::Fun(Arc::new(Lambda { rec_name: None, param: name(x), param_ty: ty, ret: None, body }))
    }
    pub fn prim(p: Prim) -> Value {
        Value::Const(Const::Prim(p, Arc::new(vec![])))
    }
}

impl Comp {
    pub fn ret(v: Value) -> Comp {
        Comp::Return(v)
    }
    pub fn unit() -> Comp {
        Comp::Return(Value::Unit)
    }
    pub fn let_(x: &str, m: Comp, n: Comp) -> Comp {
        Comp::Let(name(x), Arc::new(m), Arc::new(n))
    }
    pub fn signal(op: &str, v: Value, m: Comp) -> Comp {
        Comp::Signal(op.into(), v, Arc::new(m))
    }
    pub fn interrupt(op: &str, v: Value, m: Comp) -> Comp {
        Comp::Interrupt(op.into(), v, Arc::new(m))
    }
    pub fn await_(v: Value, x: &str, m: Comp) -> Comp {
        Comp::Await(v, name(x), Arc::new(m))
    }
    pub fn spawn(m: Comp, n: Comp) -> Comp {
        Comp::Spawn(Arc::new(m), Arc::new(n))
    }
    /// Stateless promise with unit state and the given handler code.
    pub fn promise(op: &str, x: &str, body: Comp, p: &str, cont: Comp) -> Comp {
        let h = Handler { op: op.into(), x: name(x), r: name("_r"), s: name("_s"), state_ty: Some(Type::Unit), body };
        Comp::Promise(Arc::new(h), Value::Unit, name(p), Arc::new(cont))
    }
}

impl Proc {
    pub fn run(m: Comp) -> Proc {
        Proc::Run(Arc::new(m))
    }
    pub fn par(a: Proc, b: Proc) -> Proc {
        Proc::Par(Arc::new(a), Arc::new(b))
    }
    pub fn signal(op: &str, v: Value, p: Proc) -> Proc {
        Proc::Signal(op.into(), v, Arc::new(p))
    }
    pub fn interrupt(op: &str, v: Value, p: Proc) -> Proc {
        Proc::Interrupt(op.into(), v, Arc::new(p))
    }

    /// Run leaves, left to right.
    pub fn leaves(&self) -> Vec<&Comp> {
        let mut out = vec![];
        fn go<'a>(p: &'a Proc, out: &mut Vec<&'a Comp>) {
            match p {
                Proc::Run(m) => out.push(m),
                Proc::Par(a, b) => {
                    go(a, out);
                    go(b, out);
                }
                Proc::Signal(_, _, q) | Proc::Interrupt(_, _, q) => go(q, out),
            }
        }
        go(self, &mut out);
        out
    }
}

/// Any of the three syntactic sorts.
#[derive(Clone, PartialEq, Eq, Hash, Debug)]
pub enum Term {
    Value(Value),
    Comp(Comp),
    Proc(Proc),
}
