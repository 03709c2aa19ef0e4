//! Builtin constants and their δ-rules: integers, booleans, strings, lists
//! and mutable references.
//!
//! A builtin is curried. Applying it to fewer arguments than its arity yields
//! a partial application value; the last argument fires the δ-rule, which
//! produces a computation (higher-order list functions expand into `let`s that
//! call the user function).

use std::sync::Arc;

use serde::Serialize;
use thiserror::Error;

use crate::ast::{name, Comp, Const, Name, Value};
use crate::subst::{alpha_eq_value, fv_value, Vars};
use crate::types::Type;

#[derive(Debug, Clone, PartialEq, Eq, Error, Serialize)]
pub enum BuiltinError {
    #[error("division by zero")]
    DivisionByZero,
    #[error("index {index} out of range for list of length {len}")]
    IndexOutOfRange { index: i64, len: usize },
    #[error("`{0}` applied to an ill-typed argument")]
    BadArgument(&'static str),
    #[error("dangling reference")]
    DanglingRef,
    #[error("range too large")]
    RangeTooLarge,
}

/// A reference cell: its type is recorded at allocation when it can be
/// synthesised from the stored value.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct Cell {
    pub ty: Option<Type>,
    pub val: Value,
}

pub type Store = Vec<Cell>;

macro_rules! prims {
    ($($v:ident = $s:literal / $n:literal,)*) => {
        #[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
        pub enum Prim { $($v,)* }

        impl Prim {
            pub const ALL: &'static [Prim] = &[$(Prim::$v,)*];

            pub fn name(self) -> &'static str {
                match self { $(Prim::$v => $s,)* }
            }

            pub fn arity(self) -> usize {
                match self { $(Prim::$v => $n,)* }
            }
        }
    };
}

prims! {
    Add = "add" / 2,
    Sub = "sub" / 2,
    Mul = "mul" / 2,
    Div = "div" / 2,
    Mod = "mod" / 2,
    Neg = "neg" / 1,
    Eq = "eq" / 2,
    Neq = "neq" / 2,
    Lt = "lt" / 2,
    Le = "le" / 2,
    Gt = "gt" / 2,
    Ge = "ge" / 2,
    And = "and" / 2,
    Or = "or" / 2,
    Not = "not" / 1,
    Concat = "concat" / 2,
    ToString = "toString" / 1,
    Range = "range" / 2,
    Length = "length" / 1,
    Nth = "nth" / 2,
    SetNth = "setNth" / 3,
    Append = "append" / 2,
    Cons = "cons" / 2,
    Head = "head" / 1,
    Tail = "tail" / 1,
    Fst = "fst" / 1,
    Snd = "snd" / 1,
    Map = "map" / 2,
    Filter = "filter" / 2,
    Fold = "fold" / 3,
    Pick = "pick" / 2,
    Ref = "ref" / 1,
    Deref = "deref" / 1,
    Assign = "assign" / 2,
}

impl Prim {
    pub fn from_name(s: &str) -> Option<Prim> {
        Prim::ALL.iter().copied().find(|p| p.name() == s)
    }

    /// Builtins that touch the store; only available with the refs extension.
    pub fn is_ref_op(self) -> bool {
        matches!(self, Prim::Ref | Prim::Deref | Prim::Assign)
    }

    /// Whether the δ-rule ignores the store.
    pub fn is_pure(self) -> bool {
        !self.is_ref_op()
    }
}

fn int(v: &Value, who: &'static str) -> Result<i64, BuiltinError> {
    match v {
        Value::Const(Const::Int(n)) => Ok(*n),
        _ => Err(BuiltinError::BadArgument(who)),
    }
}

fn boolean(v: &Value, who: &'static str) -> Result<bool, BuiltinError> {
    match v {
        Value::Const(Const::Bool(b)) => Ok(*b),
        _ => Err(BuiltinError::BadArgument(who)),
    }
}

fn list(v: &Value, who: &'static str) -> Result<(Option<Type>, Arc<Vec<Value>>), BuiltinError> {
    match v {
        Value::Const(Const::List(t, items)) => Ok((t.clone(), items.clone())),
        _ => Err(BuiltinError::BadArgument(who)),
    }
}

fn loc(v: &Value, store: &Store, who: &'static str) -> Result<usize, BuiltinError> {
    match v {
        Value::Const(Const::Loc(l)) if (*l as usize) < store.len() => Ok(*l as usize),
        Value::Const(Const::Loc(_)) => Err(BuiltinError::DanglingRef),
        _ => Err(BuiltinError::BadArgument(who)),
    }
}

/// Text shown for a value by `toString`.
pub fn show(v: &Value) -> String {
    match v {
        Value::Const(Const::Int(n)) => n.to_string(),
        Value::Const(Const::Bool(b)) => b.to_string(),
        Value::Const(Const::Str(s)) => s.to_string(),
        Value::Unit => "()".into(),
        Value::Pair(a, b) => format!("({}, {})", show(a), show(b)),
        Value::Const(Const::List(_, items)) => {
            format!("[{}]", items.iter().map(show).collect::<Vec<_>>().join("; "))
        }
        _ => "<value>".into(),
    }
}

fn ret(v: Value) -> Comp {
    Comp::Return(v)
}

/// Fires the δ-rule of a fully applied builtin. `alloc_ty` is consulted
/// when a reference is created.
pub fn delta(
    p: Prim,
    args: &[Value],
    store: &mut Store,
    alloc_ty: &dyn Fn(&Value, &Store) -> Option<Type>,
) -> Result<Comp, BuiltinError> {
    debug_assert_eq!(args.len(), p.arity());
    let n = p.name();
    let avoid: Vars = args.iter().flat_map(fv_value).collect();
    let binder = |base: &str, k: usize| -> Name {
        let mut s = format!("{base}{k}");
        while avoid.contains(s.as_str()) {
            s.push('\'');
        }
        name(&s)
    };
    let arith = |f: fn(i64, i64) -> Option<i64>| -> Result<Comp, BuiltinError> {
        let (a, b) = (int(&args[0], n)?, int(&args[1], n)?);
        f(a, b).map(|r| ret(Value::int(r))).ok_or(BuiltinError::DivisionByZero)
    };
    let cmp = |f: fn(i64, i64) -> bool| -> Result<Comp, BuiltinError> {
        Ok(ret(Value::bool(f(int(&args[0], n)?, int(&args[1], n)?))))
    };
    match p {
        Prim::Add => arith(|a, b| Some(a.wrapping_add(b))),
        Prim::Sub => arith(|a, b| Some(a.wrapping_sub(b))),
        Prim::Mul => arith(|a, b| Some(a.wrapping_mul(b))),
        Prim::Div => arith(|a, b| if b == 0 { None } else { Some(a.wrapping_div_euclid(b)) }),
        Prim::Mod => arith(|a, b| if b == 0 { None } else { Some(a.wrapping_rem_euclid(b)) }),
        Prim::Neg => Ok(ret(Value::int(int(&args[0], n)?.wrapping_neg()))),
        Prim::Eq => Ok(ret(Value::bool(alpha_eq_value(&args[0], &args[1])))),
        Prim::Neq => Ok(ret(Value::bool(!alpha_eq_value(&args[0], &args[1])))),
        Prim::Lt => cmp(|a, b| a < b),
        Prim::Le => cmp(|a, b| a <= b),
        Prim::Gt => cmp(|a, b| a > b),
        Prim::Ge => cmp(|a, b| a >= b),
        Prim::And => Ok(ret(Value::bool(boolean(&args[0], n)? && boolean(&args[1], n)?))),
        Prim::Or => Ok(ret(Value::bool(boolean(&args[0], n)? || boolean(&args[1], n)?))),
        Prim::Not => Ok(ret(Value::bool(!boolean(&args[0], n)?))),
        Prim::Concat => match (&args[0], &args[1]) {
            (Value::Const(Const::Str(a)), Value::Const(Const::Str(b))) => Ok(ret(Value::str(&format!("{a}{b}")))),
            _ => Err(BuiltinError::BadArgument(n)),
        },
        Prim::ToString => Ok(ret(Value::str(&show(&args[0])))),
        Prim::Range => {
            let (i, j) = (int(&args[0], n)?, int(&args[1], n)?);
            if j.saturating_sub(i) > 100_000 {
                return Err(BuiltinError::RangeTooLarge);
            }
            Ok(ret(Value::list(Some(Type::Int), (i..=j).map(Value::int).collect())))
        }
        Prim::Length => Ok(ret(Value::int(list(&args[0], n)?.1.len() as i64))),
        Prim::Nth => {
            let (_, xs) = list(&args[0], n)?;
            let k = int(&args[1], n)?;
            usize::try_from(k)
                .ok()
                .and_then(|k| xs.get(k))
                .map(|v| ret(v.clone()))
                .ok_or(BuiltinError::IndexOutOfRange { index: k, len: xs.len() })
        }
        Prim::SetNth => {
            let (t, xs) = list(&args[0], n)?;
            let k = int(&args[1], n)?;
            let mut ys = xs.as_ref().clone();
            match usize::try_from(k).ok().filter(|k| *k < ys.len()) {
                Some(k) => {
                    ys[k] = args[2].clone();
                    Ok(ret(Value::list(t, ys)))
                }
                None => Err(BuiltinError::IndexOutOfRange { index: k, len: xs.len() }),
            }
        }
        Prim::Append => {
            let (t1, xs) = list(&args[0], n)?;
            let (t2, ys) = list(&args[1], n)?;
            let mut zs = xs.as_ref().clone();
            zs.extend(ys.iter().cloned());
            Ok(ret(Value::list(t1.or(t2), zs)))
        }
        Prim::Cons => {
            let (t, xs) = list(&args[1], n)?;
            let mut zs = vec![args[0].clone()];
            zs.extend(xs.iter().cloned());
            Ok(ret(Value::list(t, zs)))
        }
        Prim::Head => {
            let (_, xs) = list(&args[0], n)?;
            xs.first().map(|v| ret(v.clone())).ok_or(BuiltinError::IndexOutOfRange { index: 0, len: 0 })
        }
        Prim::Tail => {
            let (t, xs) = list(&args[0], n)?;
            if xs.is_empty() {
                return Err(BuiltinError::IndexOutOfRange { index: 0, len: 0 });
            }
            Ok(ret(Value::list(t, xs[1..].to_vec())))
        }
        Prim::Fst | Prim::Snd => match &args[0] {
            Value::Pair(a, b) => Ok(ret(if p == Prim::Fst { (**a).clone() } else { (**b).clone() })),
            _ => Err(BuiltinError::BadArgument(n)),
        },
        Prim::Map => {
            let (_, xs) = list(&args[1], n)?;
            let ys: Vec<Value> = (0..xs.len()).map(|k| Value::Var(binder("y", k))).collect();
            let mut m = ret(Value::list(None, ys));
            for (k, x) in xs.iter().enumerate().rev() {
                m = Comp::Let(binder("y", k), Arc::new(Comp::Apply(args[0].clone(), x.clone())), Arc::new(m));
            }
            Ok(m)
        }
        Prim::Filter => {
            let (t, xs) = list(&args[1], n)?;
            let bs: Vec<Value> = (0..xs.len()).map(|k| Value::Var(binder("b", k))).collect();
            let pick = Value::Const(Const::Prim(Prim::Pick, Arc::new(vec![Value::list(Some(Type::Bool), bs)])));
            let mut m = Comp::Apply(pick, Value::list(t, xs.as_ref().clone()));
            for (k, x) in xs.iter().enumerate().rev() {
                m = Comp::Let(binder("b", k), Arc::new(Comp::Apply(args[0].clone(), x.clone())), Arc::new(m));
            }
            Ok(m)
        }
        Prim::Fold => {
            let (_, xs) = list(&args[2], n)?;
            // let g0 = f z in let a0 = g0 x0 in let g1 = f a0 in ...
            let mut acc = args[1].clone();
            let mut lets = vec![];
            for (k, x) in xs.iter().enumerate() {
                let g = binder("g", k);
                let a = binder("a", k);
                lets.push((g.clone(), Comp::Apply(args[0].clone(), acc.clone())));
                lets.push((a.clone(), Comp::Apply(Value::Var(g), x.clone())));
                acc = Value::Var(a);
            }
            let mut m = ret(acc);
            for (x, c) in lets.into_iter().rev() {
                m = Comp::Let(x, Arc::new(c), Arc::new(m));
            }
            Ok(m)
        }
        Prim::Pick => {
            let (_, bs) = list(&args[0], n)?;
            let (t, xs) = list(&args[1], n)?;
            let mut out = vec![];
            for (b, x) in bs.iter().zip(xs.iter()) {
                if boolean(b, n)? {
                    out.push(x.clone());
                }
            }
            Ok(ret(Value::list(t, out)))
        }
        Prim::Ref => {
            let ty = alloc_ty(&args[0], store);
            store.push(Cell { ty, val: args[0].clone() });
            Ok(ret(Value::Const(Const::Loc((store.len() - 1) as u32))))
        }
        Prim::Deref => {
            let l = loc(&args[0], store, n)?;
            Ok(ret(store[l].val.clone()))
        }
        Prim::Assign => {
            let l = loc(&args[0], store, n)?;
            if store[l].ty.is_none() {
                store[l].ty = alloc_ty(&args[1], store);
            }
            store[l].val = args[1].clone();
            Ok(ret(Value::Unit))
        }
    }
}

/// Applies a builtin partial application to one more argument.
pub fn apply(
    p: Prim,
    args: &[Value],
    arg: &Value,
    store: &mut Store,
    alloc_ty: &dyn Fn(&Value, &Store) -> Option<Type>,
) -> Result<Comp, BuiltinError> {
    let mut all = args.to_vec();
    all.push(arg.clone());
    if all.len() < p.arity() {
        Ok(ret(Value::Const(Const::Prim(p, Arc::new(all)))))
    } else {
        delta(p, &all, store, alloc_ty)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn no_ty(_: &Value, _: &Store) -> Option<Type> {
        None
    }

    fn run(p: Prim, args: &[Value]) -> Comp {
        delta(p, args, &mut vec![], &no_ty).unwrap()
    }

    #[test]
    fn range_inclusive() {
        assert_eq!(
            run(Prim::Range, &[Value::int(1), Value::int(3)]),
            ret(Value::list(Some(Type::Int), vec![Value::int(1), Value::int(2), Value::int(3)]))
        );
    }

    #[test]
    fn errors() {
        assert_eq!(
            delta(Prim::Div, &[Value::int(1), Value::int(0)], &mut vec![], &no_ty),
            Err(BuiltinError::DivisionByZero)
        );
        let xs = Value::list(Some(Type::Int), vec![Value::int(1)]);
        assert_eq!(
            delta(Prim::Nth, &[xs, Value::int(1)], &mut vec![], &no_ty),
            Err(BuiltinError::IndexOutOfRange { index: 1, len: 1 })
        );
    }

    #[test]
    fn store_roundtrip() {
        let mut st = vec![];
        let Comp::Return(l) = delta(Prim::Ref, &[Value::int(0)], &mut st, &no_ty).unwrap() else { panic!() };
        delta(Prim::Assign, &[l.clone(), Value::int(7)], &mut st, &no_ty).unwrap();
        assert_eq!(delta(Prim::Deref, &[l], &mut st, &no_ty).unwrap(), ret(Value::int(7)));
    }

    #[test]
    fn partial_application() {
        let c = apply(Prim::Add, &[], &Value::int(1), &mut vec![], &no_ty).unwrap();
        assert_eq!(c, ret(Value::Const(Const::Prim(Prim::Add, Arc::new(vec![Value::int(1)])))));
    }
}
