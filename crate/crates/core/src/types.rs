//! Value, computation and process types.

use std::fmt;
use std::sync::Arc;

use crate::effects::{Effect, Op, OpSet};

#[derive(Clone, PartialEq, Eq, Hash)]
pub enum Type {
    Int,
    Bool,
    Str,
    Unit,
    Empty,
    Prod(Arc<Type>, Arc<Type>),
    Sum(Arc<Type>, Arc<Type>),
    Fun(Arc<Type>, Arc<CompType>),
    Promise(Arc<Type>),
    Box(Arc<Type>),
    List(Arc<Type>),
    Ref(Arc<Type>),
}

/// `X ! (o, ι)`
#[derive(Clone, PartialEq, Eq, Hash)]
pub struct CompType {
    pub ty: Type,
    pub eff: Effect,
}

impl Type {
    pub fn prod(a: Type, b: Type) -> Type {
        Type::Prod(Arc::new(a), Arc::new(b))
    }
    pub fn sum(a: Type, b: Type) -> Type {
        Type::Sum(Arc::new(a), Arc::new(b))
    }
    pub fn fun(a: Type, b: Type, eff: Effect) -> Type {
        Type::Fun(Arc::new(a), Arc::new(CompType { ty: b, eff }))
    }
    pub fn promise(a: Type) -> Type {
        Type::Promise(Arc::new(a))
    }
    pub fn boxed(a: Type) -> Type {
        Type::Box(Arc::new(a))
    }
    pub fn list(a: Type) -> Type {
        Type::List(Arc::new(a))
    }
    pub fn reference(a: Type) -> Type {
        Type::Ref(Arc::new(a))
    }

    /// Mobile types may cross handler and process boundaries.
    pub fn is_mobile(&self) -> bool {
        match self {
            Type::Int | Type::Bool | Type::Str | Type::Unit | Type::Empty | Type::Box(_) => true,
            Type::Prod(a, b) | Type::Sum(a, b) => a.is_mobile() && b.is_mobile(),
            Type::List(a) => a.is_mobile(),
            Type::Fun(..) | Type::Promise(_) | Type::Ref(_) => false,
        }
    }

    /// Subtyping: structural, covariant in result types and latent effects,
    /// invariant in argument and reference types.
    pub fn sub(&self, other: &Type) -> bool {
        match (self, other) {
            (a, b) if a == b => true,
            (Type::Prod(a1, b1), Type::Prod(a2, b2)) | (Type::Sum(a1, b1), Type::Sum(a2, b2)) => {
                a1.sub(a2) && b1.sub(b2)
            }
            (Type::Fun(a1, c1), Type::Fun(a2, c2)) => a1 == a2 && c1.sub(c2),
            (Type::Promise(a), Type::Promise(b)) | (Type::Box(a), Type::Box(b)) | (Type::List(a), Type::List(b)) => {
                a.sub(b)
            }
            _ => false,
        }
    }

    /// Operation names mentioned anywhere in latent effects.
    pub fn ops(&self, acc: &mut OpSet) {
        match self {
            Type::Prod(a, b) | Type::Sum(a, b) => {
                a.ops(acc);
                b.ops(acc);
            }
            Type::Fun(a, c) => {
                a.ops(acc);
                c.ty.ops(acc);
                effect_ops(&c.eff, acc);
            }
            Type::Promise(a) | Type::Box(a) | Type::List(a) | Type::Ref(a) => a.ops(acc),
            _ => {}
        }
    }
}

/// Every operation name occurring in an effect annotation.
pub fn effect_ops(e: &Effect, acc: &mut OpSet) {
    acc.extend(e.o.iter().cloned());
    for node in e.i.raw_nodes() {
        for (op, (o, _)) in node {
            acc.insert(op.clone());
            acc.extend(o.iter().cloned());
        }
    }
}

impl CompType {
    pub fn new(ty: Type, eff: Effect) -> CompType {
        CompType { ty, eff }
    }
    pub fn sub(&self, other: &CompType) -> bool {
        self.ty.sub(&other.ty) && self.eff.leq(&other.eff)
    }
}

/// Process types. A leaf keeps its interrupt actions symbolic in `pending`
/// (outermost first) so reduction under enveloping actions stays derivable.
#[derive(Clone, PartialEq, Eq, Hash)]
pub enum ProcType {
    Run { ty: Type, eff: Effect, pending: Vec<Op> },
    Par(Arc<ProcType>, Arc<ProcType>),
}

impl ProcType {
    pub fn run(ty: Type, eff: Effect) -> ProcType {
        ProcType::Run { ty, eff, pending: vec![] }
    }

    pub fn par(a: ProcType, b: ProcType) -> ProcType {
        ProcType::Par(Arc::new(a), Arc::new(b))
    }

    /// `op↓C`: records the action at every leaf.
    pub fn act(&self, op: &Op) -> ProcType {
        match self {
            ProcType::Run { ty, eff, pending } => {
                let mut p = vec![op.clone()];
                p.extend(pending.iter().cloned());
                ProcType::Run { ty: ty.clone(), eff: eff.clone(), pending: p }
            }
            ProcType::Par(a, b) => ProcType::par(a.act(op), b.act(op)),
        }
    }

    /// The effect a leaf currently denotes.
    pub fn leaf_effect(&self) -> Option<Effect> {
        match self {
            ProcType::Run { eff, pending, .. } => Some(eff.act_list(pending)),
            ProcType::Par(..) => None,
        }
    }

    pub fn signals_of(&self) -> OpSet {
        match self {
            ProcType::Run { eff, pending, .. } => eff.act_list(pending).o,
            ProcType::Par(a, b) => &a.signals_of() | &b.signals_of(),
        }
    }

    pub fn leaves(&self) -> Vec<&ProcType> {
        match self {
            ProcType::Run { .. } => vec![self],
            ProcType::Par(a, b) => {
                let mut v = a.leaves();
                v.extend(b.leaves());
                v
            }
        }
    }

    /// One step of process type reduction.
    pub fn steps_to(&self, other: &ProcType) -> bool {
        if self == other {
            return true;
        }
        match (self, other) {
            (ProcType::Par(a, b), ProcType::Par(c, d)) if a.steps_to(c) && b.steps_to(d) => true,
            (ProcType::Run { .. }, ProcType::Par(c, d)) if **c == *self || **d == *self => true,
            (
                ProcType::Run { ty: t1, eff: e1, pending: p1 },
                ProcType::Run { ty: t2, eff: e2, pending: p2 },
            ) if t1 == t2 => {
                // Same actions, base acted upon once more.
                if p1 == p2 && e1 != e2 {
                    return e1.i.ops().any(|op| e1.act(op) == *e2);
                }
                // One extra action inserted somewhere in the list.
                e1 == e2 && p2.len() == p1.len() + 1 && (0..p2.len()).any(|k| {
                    p2[..k] == p1[..k] && p2[k + 1..] == p1[k..]
                })
            }
            _ => false,
        }
    }
}

fn fmt_atom(t: &Type, f: &mut fmt::Formatter<'_>) -> fmt::Result {
    match t {
        Type::Prod(..) | Type::Sum(..) | Type::Fun(..) => write!(f, "({t})"),
        _ => write!(f, "{t}"),
    }
}

impl fmt::Display for Type {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Type::Int => write!(f, "int"),
            Type::Bool => write!(f, "bool"),
            Type::Str => write!(f, "string"),
            Type::Unit => write!(f, "unit"),
            Type::Empty => write!(f, "empty"),
            Type::Prod(a, b) => {
                fmt_atom(a, f)?;
                write!(f, " * ")?;
                fmt_atom(b, f)
            }
            Type::Sum(a, b) => {
                match **a {
                    Type::Fun(..) | Type::Sum(..) => write!(f, "({a})")?,
                    _ => write!(f, "{a}")?,
                }
                write!(f, " + ")?;
                fmt_atom(b, f)
            }
            Type::Fun(a, c) => {
                match **a {
                    Type::Fun(..) => write!(f, "({a})")?,
                    _ => write!(f, "{a}")?,
                }
                write!(f, " -> {c}")
            }
            Type::Promise(a) => {
                fmt_atom(a, f)?;
                write!(f, " promise")
            }
            Type::Box(a) => {
                fmt_atom(a, f)?;
                write!(f, " box")
            }
            Type::List(a) => {
                fmt_atom(a, f)?;
                write!(f, " list")
            }
            Type::Ref(a) => {
                fmt_atom(a, f)?;
                write!(f, " ref")
            }
        }
    }
}

impl fmt::Debug for Type {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{self}")
    }
}

impl fmt::Display for CompType {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.ty {
            Type::Fun(..) => write!(f, "({}) ! {}", self.ty, self.eff),
            _ => write!(f, "{} ! {}", self.ty, self.eff),
        }
    }
}

impl fmt::Debug for CompType {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{self}")
    }
}

impl fmt::Display for ProcType {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ProcType::Run { ty, eff, pending } => {
                for op in pending {
                    write!(f, "{op}↓")?;
                }
                write!(f, "{ty} !! {eff}")
            }
            ProcType::Par(a, b) => write!(f, "({a} || {b})"),
        }
    }
}

impl fmt::Debug for ProcType {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{self}")
    }
}
