//! Process-level semantics: configurations with per-process reference
//! stores, process redexes, and interrupt injection.

use std::sync::Arc;

use crate::ast::{Comp, Proc, Value};
use crate::builtins::Store;
use crate::step::{self, AllocTy, Frame, Redex, Rule, StepError};
use crate::subst::{digest, encode_config};

/// A process together with one reference store per `run` leaf, aligned
/// with the leaves from left to right.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct Config {
    pub proc: Proc,
    pub stores: Vec<Store>,
}

impl Config {
    pub fn new(proc: Proc) -> Config {
        let n = proc.leaves().len();
        Config { proc, stores: vec![Store::new(); n] }
    }

    /// Canonical hash of the configuration, invariant under renaming of
    /// bound variables.
    pub fn hash(&self) -> u64 {
        digest(&encode_config(&self.proc, &self.stores))
    }

    pub fn redexes(&self) -> Vec<Redex> {
        proc_redexes(&self.proc)
    }

    pub fn is_result(&self) -> bool {
        is_proc_result(&self.proc)
    }

    /// Wraps the whole process in an incoming interrupt.
    pub fn inject(&self, op: &str, payload: Value) -> Config {
        Config { proc: Proc::Interrupt(op.into(), payload, Arc::new(self.proc.clone())), stores: self.stores.clone() }
    }

    pub fn apply(&self, r: &Redex, alloc: AllocTy) -> Result<Config, StepError> {
        let mut stores = self.stores.clone();
        let proc = apply_proc(&self.proc, &r.path, r.rule, 0, &mut stores, alloc)?;
        Ok(Config { proc, stores })
    }
}

fn proc_rule_at(p: &Proc) -> Vec<Rule> {
    match p {
        Proc::Run(m) => match &**m {
            Comp::Signal(..) => vec![Rule::HoistSignal],
            Comp::Spawn(..) => vec![Rule::SpawnProcess],
            _ => vec![],
        },
        Proc::Par(a, b) => {
            let mut v = vec![];
            if matches!(**a, Proc::Signal(..)) {
                v.push(Rule::BroadcastLeft);
            }
            if matches!(**b, Proc::Signal(..)) {
                v.push(Rule::BroadcastRight);
            }
            v
        }
        Proc::Interrupt(_, _, q) => match &**q {
            Proc::Run(_) => vec![Rule::InterruptRun],
            Proc::Par(..) => vec![Rule::InterruptPar],
            Proc::Signal(..) => vec![Rule::InterruptProcSignal],
            Proc::Interrupt(..) => vec![],
        },
        Proc::Signal(..) => vec![],
    }
}

fn describe(rule: Rule, p: &Proc) -> String {
    let op = match (rule, p) {
        (Rule::HoistSignal, Proc::Run(m)) => match &**m {
            Comp::Signal(op, ..) => op.to_string(),
            _ => String::new(),
        },
        (Rule::BroadcastLeft, Proc::Par(a, _)) | (Rule::BroadcastRight, Proc::Par(_, a)) => match &**a {
            Proc::Signal(op, ..) => op.to_string(),
            _ => String::new(),
        },
        (_, Proc::Interrupt(op, ..)) => op.to_string(),
        _ => String::new(),
    };
    match rule {
        Rule::HoistSignal => format!("hoist signal {op} out of a process"),
        Rule::SpawnProcess => "start a spawned process".into(),
        Rule::BroadcastLeft => format!("broadcast {op} from the left process"),
        Rule::BroadcastRight => format!("broadcast {op} from the right process"),
        Rule::InterruptRun => format!("deliver interrupt {op} to a process"),
        Rule::InterruptPar => format!("split interrupt {op} over a parallel composition"),
        Rule::InterruptProcSignal => format!("interrupt {op} passes an outgoing signal"),
        _ => rule.name().into(),
    }
}

/// All redexes of a process: process rules at every F-context position plus
/// computation redexes inside each `run`, leftmost-outermost.
pub fn proc_redexes(p: &Proc) -> Vec<Redex> {
    let mut out = vec![];
    collect(p, &mut vec![], &mut out);
    out
}

fn collect(p: &Proc, path: &mut Vec<Frame>, out: &mut Vec<Redex>) {
    for rule in proc_rule_at(p) {
        out.push(Redex { path: path.clone(), rule, description: describe(rule, p) });
    }
    match p {
        Proc::Run(m) => {
            for mut r in step::redexes(m) {
                let mut full = path.clone();
                full.push(Frame::Run);
                full.append(&mut r.path);
                r.path = full;
                out.push(r);
            }
        }
        Proc::Par(a, b) => {
            path.push(Frame::Left);
            collect(a, path, out);
            path.pop();
            path.push(Frame::Right);
            collect(b, path, out);
            path.pop();
        }
        Proc::Signal(_, _, q) => {
            path.push(Frame::Signal);
            collect(q, path, out);
            path.pop();
        }
        Proc::Interrupt(_, _, q) => {
            path.push(Frame::Interrupt);
            collect(q, path, out);
            path.pop();
        }
    }
}

/// Number of `run` leaves of a process.
pub fn leaf_count(p: &Proc) -> usize {
    match p {
        Proc::Run(_) => 1,
        Proc::Par(a, b) => leaf_count(a) + leaf_count(b),
        Proc::Signal(_, _, q) | Proc::Interrupt(_, _, q) => leaf_count(q),
    }
}

/// Index of the leftmost leaf under the position `path` points to.
pub fn leaf_of_path(p: &Proc, path: &[Frame]) -> Option<usize> {
    let mut base = 0;
    let mut cur = p;
    for f in path {
        match (cur, f) {
            (Proc::Par(a, _), Frame::Left) => cur = a,
            (Proc::Par(a, b), Frame::Right) => {
                base += leaf_count(a);
                cur = b;
            }
            (Proc::Signal(_, _, q), Frame::Signal) | (Proc::Interrupt(_, _, q), Frame::Interrupt) => cur = q,
            (Proc::Run(_), Frame::Run) => return Some(base),
            _ => return None,
        }
    }
    Some(base)
}

fn apply_proc(
    p: &Proc,
    path: &[Frame],
    rule: Rule,
    base: usize,
    stores: &mut Vec<Store>,
    alloc: AllocTy,
) -> Result<Proc, StepError> {
    let stale = StepError::StaleRedex { rule };
    let Some((f, rest)) = path.split_first() else {
        return contract_proc(rule, p, base, stores);
    };
    Ok(match (p, f) {
        (Proc::Run(m), Frame::Run) => {
            if rule.is_process_rule() {
                return Err(stale);
            }
            let r = Redex { path: rest.to_vec(), rule, description: String::new() };
            Proc::Run(Arc::new(step::apply(m, &r, &mut stores[base], alloc)?))
        }
        (Proc::Par(a, b), Frame::Left) => Proc::Par(Arc::new(apply_proc(a, rest, rule, base, stores, alloc)?), b.clone()),
        (Proc::Par(a, b), Frame::Right) => {
            let nb = apply_proc(b, rest, rule, base + leaf_count(a), stores, alloc)?;
            Proc::Par(a.clone(), Arc::new(nb))
        }
        (Proc::Signal(op, v, q), Frame::Signal) => {
            Proc::Signal(op.clone(), v.clone(), Arc::new(apply_proc(q, rest, rule, base, stores, alloc)?))
        }
        (Proc::Interrupt(op, v, q), Frame::Interrupt) => {
            Proc::Interrupt(op.clone(), v.clone(), Arc::new(apply_proc(q, rest, rule, base, stores, alloc)?))
        }
        _ => return Err(stale),
    })
}

fn contract_proc(rule: Rule, p: &Proc, base: usize, stores: &mut Vec<Store>) -> Result<Proc, StepError> {
    if !proc_rule_at(p).contains(&rule) {
        return Err(StepError::StaleRedex { rule });
    }
    let a = Arc::new;
    Ok(match (rule, p) {
        (Rule::HoistSignal, Proc::Run(m)) => {
            let Comp::Signal(op, v, k) = &**m else { unreachable!() };
            Proc::Signal(op.clone(), v.clone(), a(Proc::Run(k.clone())))
        }
        (Rule::SpawnProcess, Proc::Run(m)) => {
            let Comp::Spawn(m1, n) = &**m else { unreachable!() };
            // The spawned process starts with an empty store; the parent
            // keeps its own.
            stores.insert(base, Store::new());
            Proc::Par(a(Proc::Run(m1.clone())), a(Proc::Run(n.clone())))
        }
        (Rule::BroadcastLeft, Proc::Par(l, q)) => {
            let Proc::Signal(op, v, pl) = &**l else { unreachable!() };
            let q2 = Proc::Interrupt(op.clone(), v.clone(), q.clone());
            Proc::Signal(op.clone(), v.clone(), a(Proc::Par(pl.clone(), a(q2))))
        }
        (Rule::BroadcastRight, Proc::Par(pl, r)) => {
            let Proc::Signal(op, v, q) = &**r else { unreachable!() };
            let p2 = Proc::Interrupt(op.clone(), v.clone(), pl.clone());
            Proc::Signal(op.clone(), v.clone(), a(Proc::Par(a(p2), q.clone())))
        }
        (Rule::InterruptRun, Proc::Interrupt(op, v, q)) => {
            let Proc::Run(m) = &**q else { unreachable!() };
            Proc::Run(Arc::new(Comp::Interrupt(op.clone(), v.clone(), m.clone())))
        }
        (Rule::InterruptPar, Proc::Interrupt(op, v, q)) => {
            let Proc::Par(l, r) = &**q else { unreachable!() };
            Proc::Par(
                a(Proc::Interrupt(op.clone(), v.clone(), l.clone())),
                a(Proc::Interrupt(op.clone(), v.clone(), r.clone())),
            )
        }
        (Rule::InterruptProcSignal, Proc::Interrupt(op, v, q)) => {
            let Proc::Signal(op2, w, r) = &**q else { unreachable!() };
            Proc::Signal(op2.clone(), w.clone(), a(Proc::Interrupt(op.clone(), v.clone(), r.clone())))
        }
        _ => unreachable!(),
    })
}

/// `ProcRes⟨P⟩`: outgoing signals around a parallel result.
pub fn is_proc_result(p: &Proc) -> bool {
    match p {
        Proc::Signal(_, _, q) => is_proc_result(q),
        _ => is_par_result(p),
    }
}

/// `ParRes⟨P⟩`
pub fn is_par_result(p: &Proc) -> bool {
    match p {
        Proc::Run(m) => step::is_run_result(&Default::default(), m),
        Proc::Par(a, b) => is_par_result(a) && is_par_result(b),
        _ => false,
    }
}

/// Signals at the root of a process, outermost first.
pub fn root_signals(p: &Proc) -> Vec<(crate::effects::Op, Value)> {
    let mut out = vec![];
    let mut cur = p;
    while let Proc::Signal(op, v, q) = cur {
        out.push((op.clone(), v.clone()));
        cur = q;
    }
    out
}
