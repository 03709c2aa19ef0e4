//! Printer for core terms. The output is valid runtime syntax: parsing and
//! desugaring it gives back an alpha-equivalent term.

use std::fmt::{self, Write};

use crate::ast::{Comp, Const, Lambda, Proc, Value};

pub fn print_value(v: &Value) -> String {
    let mut s = String::new();
    value(&mut s, v, false);
    s
}

pub fn print_comp(m: &Comp) -> String {
    let mut s = String::new();
    comp(&mut s, m);
    s
}

pub fn print_proc(p: &Proc) -> String {
    let mut s = String::new();
    proc(&mut s, p, false);
    s
}

fn quote(s: &str) -> String {
    let mut out = String::from("\"");
    for c in s.chars() {
        match c {
            '"' => out.push_str("\\\""),
            '\\' => out.push_str("\\\\"),
            '\n' => out.push_str("\\n"),
            '\t' => out.push_str("\\t"),
            c => out.push(c),
        }
    }
    out.push('"');
    out
}

fn is_atom(v: &Value) -> bool {
    !matches!(v, Value::Fun(_))
}

fn lambda(out: &mut String, l: &Lambda) {
    match &l.rec_name {
        Some(f) => write!(out, "rec {f} ").unwrap(),
        None => out.push_str("fun "),
    }
    match &l.param_ty {
        Some(t) => write!(out, "({} : {t})", l.param).unwrap(),
        None => out.push_str(&l.param),
    }
    if let Some(r) = &l.ret {
        write!(out, " : {r}").unwrap();
    }
    out.push_str(" |-> ");
    comp(out, &l.body);
}

/// Prints `v`, parenthesised when `atom` is requested and it is not one.
fn value(out: &mut String, v: &Value, atom: bool) {
    if atom && !is_atom(v) {
        out.push('(');
        value(out, v, false);
        out.push(')');
        return;
    }
    match v {
        Value::Var(x) => out.push_str(x),
        Value::Unit => out.push_str("()"),
        Value::Pair(a, b) => {
            out.push('(');
            value(out, a, true);
            out.push_str(", ");
            value(out, b, true);
            out.push(')');
        }
        Value::Inl(t, a) | Value::Inr(t, a) => {
            out.push_str(if matches!(v, Value::Inl(..)) { "inl" } else { "inr" });
            if let Some(t) = t {
                write!(out, "{{{t}}}").unwrap();
            }
            out.push(' ');
            value(out, a, true);
        }
        Value::Fun(l) => lambda(out, l),
        Value::Fulfilled(a) => {
            out.push_str("<<");
            value(out, a, false);
            out.push_str(">>");
        }
        Value::Boxed(a) => {
            out.push_str("[| ");
            value(out, a, false);
            out.push_str(" |]");
        }
        Value::Const(c) => match c {
            Const::Int(n) if *n < 0 => write!(out, "({n})").unwrap(),
            Const::Int(n) => write!(out, "{n}").unwrap(),
            Const::Bool(b) => write!(out, "{b}").unwrap(),
            Const::Str(s) => out.push_str(&quote(s)),
            Const::List(t, items) => {
                out.push('[');
                for (k, it) in items.iter().enumerate() {
                    if k > 0 {
                        out.push_str("; ");
                    }
                    value(out, it, true);
                }
                out.push(']');
                if let Some(t) = t {
                    write!(out, "{{{t}}}").unwrap();
                }
            }
            Const::Loc(l) => write!(out, "$loc({l})").unwrap(),
            Const::Prim(p, args) => {
                write!(out, "${}(", p.name()).unwrap();
                for (k, a) in args.iter().enumerate() {
                    if k > 0 {
                        out.push_str(", ");
                    }
                    value(out, a, true);
                }
                out.push(')');
            }
        },
    }
}

/// Computations that are safe to print unparenthesised before `in`, `)` or
/// `else`, but go in parentheses inside branches.
fn paren_comp(out: &mut String, m: &Comp) {
    match m {
        Comp::Return(_) | Comp::Apply(..) => comp(out, m),
        _ => {
            out.push('(');
            comp(out, m);
            out.push(')');
        }
    }
}

fn comp(out: &mut String, m: &Comp) {
    match m {
        Comp::Return(v) => {
            out.push_str("return ");
            value(out, v, true);
        }
        Comp::Let(x, a, b) => {
            write!(out, "let {x} = ").unwrap();
            comp(out, a);
            out.push_str(" in ");
            comp(out, b);
        }
        Comp::Apply(f, a) => {
            value(out, f, true);
            out.push(' ');
            value(out, a, true);
        }
        Comp::MatchPair(v, x, y, k) => {
            out.push_str("match ");
            value(out, v, true);
            write!(out, " with ({x}, {y}) |-> ").unwrap();
            comp(out, k);
        }
        Comp::MatchEmpty(v, t) => {
            out.push_str("match");
            if let Some(t) = t {
                write!(out, "{{{t}}}").unwrap();
            }
            out.push(' ');
            value(out, v, true);
            out.push_str(" with {}");
        }
        Comp::MatchSum(v, x, a, y, b) => {
            out.push_str("match ");
            value(out, v, true);
            write!(out, " with inl {x} |-> ").unwrap();
            paren_comp(out, a);
            write!(out, " | inr {y} |-> ").unwrap();
            paren_comp(out, b);
        }
        Comp::If(v, a, b) => {
            out.push_str("if ");
            value(out, v, true);
            out.push_str(" then ");
            paren_comp(out, a);
            out.push_str(" else ");
            paren_comp(out, b);
        }
        Comp::Signal(op, v, k) | Comp::Interrupt(op, v, k) => {
            out.push_str(if matches!(m, Comp::Signal(..)) { "!->" } else { "!<-" });
            write!(out, "{op}(").unwrap();
            value(out, v, true);
            out.push_str(", ");
            comp(out, k);
            out.push(')');
        }
        Comp::Promise(h, w, p, k) => {
            write!(out, "promise ({} {} {} ", h.op, h.x, h.r).unwrap();
            match &h.state_ty {
                Some(t) => write!(out, "({} : {t})", h.s).unwrap(),
                None => out.push_str(&h.s),
            }
            out.push_str(" |-> ");
            comp(out, &h.body);
            out.push_str(") @ ");
            value(out, w, true);
            write!(out, " as {p} in ").unwrap();
            comp(out, k);
        }
        Comp::Await(v, x, k) => {
            out.push_str("await ");
            value(out, v, true);
            write!(out, " until <<{x}>> in ").unwrap();
            comp(out, k);
        }
        Comp::Unbox(v, x, k) => {
            out.push_str("unbox ");
            value(out, v, true);
            write!(out, " as [| {x} |] in ").unwrap();
            comp(out, k);
        }
        Comp::Spawn(a, b) => {
            out.push_str("spawn (");
            comp(out, a);
            out.push_str(", ");
            comp(out, b);
            out.push(')');
        }
    }
}

fn proc(out: &mut String, p: &Proc, left_of_par: bool) {
    match p {
        Proc::Run(m) => {
            out.push_str("run (");
            comp(out, m);
            out.push(')');
        }
        Proc::Par(a, b) => {
            if left_of_par {
                out.push('(');
            }
            proc(out, a, true);
            out.push_str(" || ");
            proc(out, b, false);
            if left_of_par {
                out.push(')');
            }
        }
        Proc::Signal(op, v, q) | Proc::Interrupt(op, v, q) => {
            out.push_str(if matches!(p, Proc::Signal(..)) { "!->" } else { "!<-" });
            write!(out, "{op}(").unwrap();
            value(out, v, true);
            out.push_str(", ");
            proc(out, q, false);
            out.push(')');
        }
    }
}

impl fmt::Display for Value {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&print_value(self))
    }
}

impl fmt::Display for Comp {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&print_comp(self))
    }
}

impl fmt::Display for Proc {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&print_proc(self))
    }
}
