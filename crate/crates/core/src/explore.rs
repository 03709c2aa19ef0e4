//! Driving the semantics: single runs under a scheduling strategy, JSONL
//! traces, bounded breadth-first exploration, and the safety checks made
//! along the way.
//!
//! Safety is checked constructively. Every state carries a process type;
//! after each step we search for a successor type that the old one reduces
//! to and that the new state checks against. Failing to find one is a
//! preservation violation, and a state with no redexes that is not a result
//! is a progress violation.

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;
use thiserror::Error;

use crate::ast::{Comp, Proc, Value};
use crate::builtins::{BuiltinError, Store};
use crate::check::{alloc_type, check_program, Checker, Ctx, EffStack, TypeError};
use crate::effects::Op;
use crate::process::{root_signals, Config};
use crate::step::{Frame, Redex, Rule, StepError};
use crate::subst::alpha_eq_proc;
use crate::surface::{parse_program, print_proc, print_value, Program, SurfaceError};
use crate::types::{ProcType, Type};

/// How the next redex is chosen when running a single trace.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Strategy {
    /// Always the leftmost-outermost redex.
    Deterministic,
    /// Uniformly at random from a seeded generator.
    Random(u64),
}

/// A configuration with the process type it is known to have, if any.
#[derive(Clone, Debug)]
pub struct State {
    pub config: Config,
    pub ty: Option<ProcType>,
}

impl State {
    pub fn hash(&self) -> u64 {
        self.config.hash()
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum ViolationKind {
    Progress,
    Preservation,
    Finality,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "camelCase")]
pub struct SafetyViolation {
    pub kind: ViolationKind,
    pub state: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub rule: Option<Rule>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub path: Option<Vec<Frame>>,
    pub detail: String,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct EmittedSignal {
    pub op: String,
    pub payload: String,
}

/// One line of a JSONL trace.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "camelCase")]
pub struct TraceRecord {
    pub step: usize,
    pub rule: String,
    pub path: Vec<Frame>,
    pub proc_hash_before: String,
    pub proc_hash_after: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub emitted_signal: Option<EmittedSignal>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub note: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Eq, Error, Serialize)]
pub enum StepFailure {
    #[error("{0}")]
    Step(StepError),
    #[error("{0}")]
    Builtin(BuiltinError),
}

#[derive(Debug, Clone, Error, Serialize)]
pub enum InjectError {
    #[error("unknown operation `{0}`")]
    UnknownOperation(String),
    #[error("{0}")]
    Payload(TypeError),
}

/// Why a source file could not be turned into a running system.
#[derive(Debug, Clone, Error, Serialize)]
#[serde(tag = "stage", content = "error", rename_all = "lowercase")]
pub enum LoadError {
    #[error("{0}")]
    Parse(SurfaceError),
    #[error("type error: {0}")]
    Type(TypeError),
}

/// Parses and checks a source file.
pub fn load_source(src: &str, effects: bool) -> Result<(System, State), LoadError> {
    let prog = parse_program(src).map_err(LoadError::Parse)?;
    System::load(&prog, effects).map_err(LoadError::Type)
}

pub fn hex(h: u64) -> String {
    format!("{h:016x}")
}

/// The result of one step.
#[derive(Clone, Debug)]
pub struct Stepped {
    pub state: State,
    pub emitted: Option<EmittedSignal>,
    pub violation: Option<SafetyViolation>,
}

/// A program's signature together with the checking mode; everything that
/// stays fixed while the process evolves.
#[derive(Clone, Debug)]
pub struct System {
    pub sig: BTreeMap<Op, Type>,
    pub effects: bool,
}

impl System {
    /// Checks `prog` and returns the system with its initial state.
    pub fn load(prog: &Program, effects: bool) -> Result<(System, State), TypeError> {
        let ty = check_program(prog, effects)?;
        let sys = System { sig: prog.signature.clone(), effects };
        Ok((sys, State { config: Config::new(prog.proc.clone()), ty: Some(ty) }))
    }

    /// A system for a term given directly in runtime syntax. Without a
    /// declared type the term is run but not safety-checked.
    pub fn untyped(sig: BTreeMap<Op, Type>, proc: Proc) -> (System, State) {
        (System { sig, effects: true }, State { config: Config::new(proc), ty: None })
    }

    fn checker(&self) -> Checker<'_> {
        let c = Checker::new(&self.sig);
        if self.effects {
            c
        } else {
            c.without_effects()
        }
    }

    /// Applies a redex. With `safety` set and a typed state, the successor
    /// is typed too, or a preservation violation is reported.
    pub fn step(&self, s: &State, r: &Redex, safety: bool) -> Result<Stepped, StepFailure> {
        let at = alloc_type(&self.sig);
        let alloc = |v: &Value, st: &Store| at(v, st);
        let config = s.config.apply(r, &alloc).map_err(|e| match e {
            StepError::Builtin(b) => StepFailure::Builtin(b),
            e => StepFailure::Step(e),
        })?;
        let emitted = emitted_signal(&s.config.proc, r);
        let (ty, violation) = match (&s.ty, safety) {
            (Some(t), true) => match self.witness(&s.config, t, r, &config) {
                Ok(t2) => (Some(t2), None),
                Err(detail) => (
                    None,
                    Some(SafetyViolation {
                        kind: ViolationKind::Preservation,
                        state: print_proc(&s.config.proc),
                        rule: Some(r.rule),
                        path: Some(r.path.clone()),
                        detail,
                    }),
                ),
            },
            (t, false) => (t.clone(), None),
            (None, true) => (None, None),
        };
        Ok(Stepped { state: State { config, ty }, emitted, violation })
    }

    /// Wraps the whole process in an incoming interrupt. The payload must
    /// check against the operation's signature; the type records the action.
    pub fn inject(&self, s: &State, op: &str, payload: Value) -> Result<State, InjectError> {
        if !self.sig.contains_key(op) {
            return Err(InjectError::UnknownOperation(op.to_string()));
        }
        self.checker().check_payload(op, &payload).map_err(InjectError::Payload)?;
        let op_: Op = op.into();
        Ok(State { config: s.config.inject(op, payload), ty: s.ty.as_ref().map(|t| t.act(&op_)) })
    }

    /// Progress and finality for one state: results have no redexes, and
    /// states without redexes are results.
    pub fn check_state(&self, s: &State) -> Option<SafetyViolation> {
        let result = s.config.is_result();
        let stuck = s.config.redexes().is_empty();
        let kind = match (result, stuck) {
            (true, false) => ViolationKind::Finality,
            (false, true) => ViolationKind::Progress,
            _ => return None,
        };
        let detail = match kind {
            ViolationKind::Finality => "a result form has an enabled redex",
            _ => "no redex is enabled but the process is not a result",
        };
        Some(SafetyViolation {
            kind,
            state: print_proc(&s.config.proc),
            rule: None,
            path: None,
            detail: detail.into(),
        })
    }

    /// Preservation for one transition `before --r--> after`: a successor of
    /// the type of `before` that types `after`. Exposed so that tests can
    /// feed in deliberately wrong successors.
    pub fn check_successor(&self, before: &State, r: &Redex, after: &Config) -> Result<ProcType, String> {
        let t = before.ty.as_ref().ok_or("the state before the step has no type")?;
        self.witness(&before.config, t, r, after)
    }

    /// Searches the process types that `t` reduces to in one step for one
    /// that types the successor configuration.
    fn witness(&self, before: &Config, t: &ProcType, r: &Redex, after: &Config) -> Result<ProcType, String> {
        let checker = self.checker();
        let fits = |c: &ProcType| checker.check_proc(&after.proc, c, &after.stores);
        let mut last = match fits(t) {
            Ok(()) => return Ok(t.clone()),
            Err(e) => e.to_string(),
        };
        for cand in self.candidates(before, t, r)? {
            debug_assert!(t.steps_to(&cand), "{t} does not reduce to {cand}");
            match fits(&cand) {
                Ok(()) => return Ok(cand),
                Err(e) => last = e.to_string(),
            }
        }
        Err(last)
    }

    fn candidates(&self, before: &Config, t: &ProcType, r: &Redex) -> Result<Vec<ProcType>, String> {
        let mut out = vec![];
        let type_path: Vec<Frame> =
            r.path.iter().copied().take_while(|f| *f != Frame::Run).filter(|f| matches!(f, Frame::Left | Frame::Right)).collect();
        match r.rule {
            Rule::BroadcastLeft | Rule::BroadcastRight => {
                let proc_path: Vec<Frame> = r.path.iter().copied().take_while(|f| *f != Frame::Run).collect();
                let Some(Proc::Par(a, b)) = proc_at(&before.proc, &proc_path) else {
                    return Err("broadcast redex does not point at a parallel composition".into());
                };
                let sender = if r.rule == Rule::BroadcastLeft { a } else { b };
                let Proc::Signal(op, ..) = &**sender else {
                    return Err("broadcast redex without an outgoing signal".into());
                };
                let k = proc_path.iter().filter(|f| **f == Frame::Interrupt).count();
                let side = if r.rule == Rule::BroadcastLeft { Frame::Right } else { Frame::Left };
                let mut indices: Vec<usize> = vec![k];
                let max_pending = leaves_under(t, &type_path, side).iter().map(|l| pending_len(l)).max().unwrap_or(0);
                indices.extend((0..=max_pending).filter(|i| *i != k));
                for i in indices {
                    if let Some(c) = update_at(t, &type_path, &mut |node| insert_on_side(node, side, op, i)) {
                        out.push(c);
                    }
                }
            }
            Rule::SpawnProcess => {
                let proc_path: Vec<Frame> = r.path.iter().copied().take_while(|f| *f != Frame::Run).collect();
                let Some(Proc::Run(m)) = proc_at(&before.proc, &proc_path) else {
                    return Err("spawn redex does not point at a run".into());
                };
                let Comp::Spawn(spawned, _) = &**m else {
                    return Err("spawn redex without a spawn".into());
                };
                let checker = self.checker();
                let top = checker.top();
                let x = checker
                    .synth_comp(&Ctx::new(), spawned, &EffStack::new(top.clone()))
                    .map_err(|e| format!("spawned computation does not type: {e}"))?;
                let new_leaf = ProcType::run(x, top);
                if let Some(c) = update_at(t, &type_path, &mut |node| Some(ProcType::par(new_leaf.clone(), node.clone()))) {
                    out.push(c);
                }
            }
            _ => {
                // A computation step: the leaf's base effect may need to
                // absorb one of its actions.
                if let Some(ProcType::Run { ty, eff, pending }) = node_at(t, &type_path) {
                    let ops: BTreeSet<Op> = eff.i.ops().cloned().collect();
                    for op in ops {
                        let eff2 = eff.act(&op);
                        if eff2 == *eff {
                            continue;
                        }
                        let leaf = ProcType::Run { ty: ty.clone(), eff: eff2, pending: pending.clone() };
                        if let Some(c) = update_at(t, &type_path, &mut |_| Some(leaf.clone())) {
                            out.push(c);
                        }
                    }
                }
            }
        }
        Ok(out)
    }

    /// Runs a single trace from `s`. `choose` picks among the enabled
    /// redexes; `script` supplies interrupts from the environment.
    pub fn run(&self, s: State, opts: &RunOptions, choose: &mut dyn FnMut(&State, &[Redex]) -> Option<usize>) -> RunReport {
        let mut state = s;
        let mut records = vec![];
        let mut violations = vec![];
        let mut script: std::collections::VecDeque<Injection> = opts.script.iter().cloned().collect();
        let mut step = 0;
        let mut stop = StopReason::MaxSteps;
        let mut builtin_error = None;
        while step < opts.max_steps {
            let redexes = state.config.redexes();
            let due = script.front().is_some_and(|i| match i.after {
                Some(n) => step >= n,
                None => redexes.is_empty(),
            });
            if due {
                let inj = script.pop_front().expect("front exists");
                let before = state.hash();
                match self.inject(&state, &inj.op, inj.payload.clone()) {
                    Ok(s2) => {
                        state = s2;
                        records.push(TraceRecord {
                            step,
                            rule: "inject".into(),
                            path: vec![],
                            proc_hash_before: hex(before),
                            proc_hash_after: hex(state.hash()),
                            emitted_signal: None,
                            note: Some(format!("!<-{}({})", inj.op, print_value(&inj.payload))),
                        });
                    }
                    Err(e) => {
                        stop = StopReason::InjectRejected(e.to_string());
                        break;
                    }
                }
                continue;
            }
            if redexes.is_empty() {
                if opts.check_safety {
                    violations.extend(self.check_state(&state));
                }
                stop = StopReason::Quiescent;
                break;
            }
            let Some(k) = choose(&state, &redexes) else {
                stop = StopReason::Aborted;
                break;
            };
            let r = &redexes[k.min(redexes.len() - 1)];
            let before = state.hash();
            match self.step(&state, r, opts.check_safety) {
                Ok(st) => {
                    records.push(TraceRecord {
                        step,
                        rule: r.rule.name().into(),
                        path: r.path.clone(),
                        proc_hash_before: hex(before),
                        proc_hash_after: hex(st.state.hash()),
                        emitted_signal: st.emitted,
                        note: st.violation.as_ref().map(|v| format!("preservation violation: {}", v.detail)),
                    });
                    violations.extend(st.violation);
                    state = st.state;
                }
                Err(e) => {
                    builtin_error = Some(e.to_string());
                    stop = StopReason::BuiltinError;
                    break;
                }
            }
            step += 1;
        }
        if opts.check_safety && stop == StopReason::MaxSteps {
            violations.extend(self.check_state(&state));
        }
        RunReport { final_state: state, records, violations, stop, builtin_error }
    }

    /// Breadth-first exploration of every interleaving, deduplicating states
    /// up to renaming of bound variables. Successors of a whole level are
    /// computed in parallel when `opts.parallel` is set; the merge is
    /// sequential, so the report does not depend on it.
    pub fn explore(&self, init: State, opts: &ExploreOptions) -> ExploreReport {
        self.explore_with(init, opts, &mut |_, _, _| {})
    }

    /// [`System::explore`], calling `visit` on every expanded state with its
    /// depth and whether it is terminal.
    pub fn explore_with(
        &self,
        init: State,
        opts: &ExploreOptions,
        visit: &mut dyn FnMut(&State, usize, bool),
    ) -> ExploreReport {
        let mut seen: HashMap<u64, Vec<Config>> = HashMap::new();
        let mut report = ExploreReport::default();
        let mut orders: BTreeSet<Vec<String>> = BTreeSet::new();
        seen.entry(init.hash()).or_default().push(init.config.clone());
        report.states_visited = 1;
        let mut frontier = vec![init];
        let mut depth = 0;
        while !frontier.is_empty() {
            let expand = |s: &State| self.expand(s, opts);
            let results: Vec<Expansion> = if opts.parallel {
                frontier.par_iter().map(expand).collect()
            } else {
                frontier.iter().map(expand).collect()
            };
            let mut next = vec![];
            for (s, ex) in frontier.iter().zip(results) {
                report.safety_violations.extend(ex.violations);
                report.builtin_errors.extend(ex.builtin_errors);
                visit(s, depth, ex.terminal);
                if ex.terminal {
                    report.terminal_states += 1;
                    let order = signal_order(&s.config.proc);
                    orders.insert(order);
                    if report.terminals.len() < opts.keep_terminals {
                        report.terminals.push(print_proc(&s.config.proc));
                    }
                }
                if depth >= opts.max_depth {
                    if !ex.successors.is_empty() {
                        report.depth_limited += 1;
                    }
                    continue;
                }
                for succ in ex.successors {
                    if report.states_visited >= opts.max_states {
                        report.truncated = true;
                        break;
                    }
                    let bucket = seen.entry(succ.hash()).or_default();
                    if bucket.iter().any(|c| same_config(c, &succ.config)) {
                        continue;
                    }
                    bucket.push(succ.config.clone());
                    report.states_visited += 1;
                    next.push(succ);
                }
            }
            report.max_depth_reached = depth;
            frontier = next;
            depth += 1;
        }
        report.distinct_signal_orders = orders.len();
        report.signal_orders = orders.into_iter().collect();
        report
    }

    fn expand(&self, s: &State, opts: &ExploreOptions) -> Expansion {
        let mut ex = Expansion::default();
        if opts.check_safety {
            ex.violations.extend(self.check_state(s));
        }
        let redexes = s.config.redexes();
        ex.terminal = redexes.is_empty();
        for r in &redexes {
            match self.step(s, r, opts.check_safety) {
                Ok(st) => {
                    ex.violations.extend(st.violation);
                    ex.successors.push(st.state);
                }
                Err(e) => ex.builtin_errors.push(BuiltinReport {
                    state: print_proc(&s.config.proc),
                    rule: r.rule,
                    error: e.to_string(),
                }),
            }
        }
        ex
    }
}

#[derive(Default)]
struct Expansion {
    successors: Vec<State>,
    violations: Vec<SafetyViolation>,
    builtin_errors: Vec<BuiltinReport>,
    terminal: bool,
}

fn same_config(a: &Config, b: &Config) -> bool {
    a.stores == b.stores && alpha_eq_proc(&a.proc, &b.proc)
}

/// An interrupt supplied by the environment during a run. Without `after`
/// it fires once the process has no redexes left.
#[derive(Clone, Debug)]
pub struct Injection {
    pub after: Option<usize>,
    pub op: String,
    pub payload: Value,
}

#[derive(Clone, Debug)]
pub struct RunOptions {
    pub max_steps: usize,
    pub check_safety: bool,
    pub script: Vec<Injection>,
}

impl Default for RunOptions {
    fn default() -> RunOptions {
        RunOptions { max_steps: 10_000, check_safety: false, script: vec![] }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub enum StopReason {
    Quiescent,
    MaxSteps,
    Aborted,
    BuiltinError,
    InjectRejected(String),
}

#[derive(Clone, Debug)]
pub struct RunReport {
    pub final_state: State,
    pub records: Vec<TraceRecord>,
    pub violations: Vec<SafetyViolation>,
    pub stop: StopReason,
    pub builtin_error: Option<String>,
}

impl RunReport {
    /// Signals hoisted out of processes, in order.
    pub fn emitted(&self) -> Vec<&EmittedSignal> {
        self.records.iter().filter_map(|r| r.emitted_signal.as_ref()).collect()
    }
}

/// Picks the index of the redex to contract next, or `None` to stop.
pub type Chooser = Box<dyn FnMut(&State, &[Redex]) -> Option<usize> + Send>;

/// A chooser implementing a non-interactive strategy.
pub fn chooser(strategy: Strategy) -> Chooser {
    match strategy {
        Strategy::Deterministic => Box::new(|_, _| Some(0)),
        Strategy::Random(seed) => {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            Box::new(move |_, rs| Some(rng.gen_range(0..rs.len())))
        }
    }
}

#[derive(Clone, Debug)]
pub struct ExploreOptions {
    pub max_states: usize,
    pub max_depth: usize,
    pub check_safety: bool,
    pub parallel: bool,
    pub keep_terminals: usize,
}

impl Default for ExploreOptions {
    fn default() -> ExploreOptions {
        ExploreOptions { max_states: 5000, max_depth: 60, check_safety: true, parallel: false, keep_terminals: 64 }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct BuiltinReport {
    pub state: String,
    pub rule: Rule,
    pub error: String,
}

#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize)]
#[serde(rename_all = "camelCase")]
pub struct ExploreReport {
    pub states_visited: usize,
    pub terminal_states: usize,
    pub safety_violations: Vec<SafetyViolation>,
    pub distinct_signal_orders: usize,
    pub signal_orders: Vec<Vec<String>>,
    pub builtin_errors: Vec<BuiltinReport>,
    /// Printed terminal states, up to the configured number.
    pub terminals: Vec<String>,
    pub max_depth_reached: usize,
    /// States at the depth bound that still had redexes.
    pub depth_limited: usize,
    /// Whether the state bound cut the search short.
    pub truncated: bool,
}

/// Outgoing top-level signals of a state, outermost (earliest) first.
pub fn signal_order(p: &Proc) -> Vec<String> {
    root_signals(p).into_iter().map(|(op, v)| format!("{op}({})", print_value(&v))).collect()
}

fn emitted_signal(p: &Proc, r: &Redex) -> Option<EmittedSignal> {
    if r.rule != Rule::HoistSignal {
        return None;
    }
    match proc_at(p, &r.path)? {
        Proc::Run(m) => match &**m {
            Comp::Signal(op, v, _) => Some(EmittedSignal { op: op.to_string(), payload: print_value(v) }),
            _ => None,
        },
        _ => None,
    }
}

/// The subprocess at a process-level path.
pub fn proc_at<'a>(p: &'a Proc, path: &[Frame]) -> Option<&'a Proc> {
    let mut cur = p;
    for f in path {
        cur = match (cur, f) {
            (Proc::Par(a, _), Frame::Left) => a,
            (Proc::Par(_, b), Frame::Right) => b,
            (Proc::Signal(_, _, q), Frame::Signal) | (Proc::Interrupt(_, _, q), Frame::Interrupt) => q,
            _ => return None,
        };
    }
    Some(cur)
}

fn node_at<'a>(t: &'a ProcType, path: &[Frame]) -> Option<&'a ProcType> {
    let mut cur = t;
    for f in path {
        cur = match (cur, f) {
            (ProcType::Par(a, _), Frame::Left) => a,
            (ProcType::Par(_, b), Frame::Right) => b,
            _ => return None,
        };
    }
    Some(cur)
}

fn update_at(t: &ProcType, path: &[Frame], f: &mut dyn FnMut(&ProcType) -> Option<ProcType>) -> Option<ProcType> {
    let Some((first, rest)) = path.split_first() else {
        return f(t);
    };
    match (t, first) {
        (ProcType::Par(a, b), Frame::Left) => Some(ProcType::Par(Arc::new(update_at(a, rest, f)?), b.clone())),
        (ProcType::Par(a, b), Frame::Right) => Some(ProcType::Par(a.clone(), Arc::new(update_at(b, rest, f)?))),
        _ => None,
    }
}

fn leaves_under<'a>(t: &'a ProcType, path: &[Frame], side: Frame) -> Vec<&'a ProcType> {
    match node_at(t, path) {
        Some(ProcType::Par(a, b)) => if side == Frame::Left { a } else { b }.leaves(),
        _ => vec![],
    }
}

fn pending_len(t: &ProcType) -> usize {
    match t {
        ProcType::Run { pending, .. } => pending.len(),
        ProcType::Par(..) => 0,
    }
}

fn insert_on_side(node: &ProcType, side: Frame, op: &Op, i: usize) -> Option<ProcType> {
    let ProcType::Par(a, b) = node else { return None };
    if side == Frame::Left {
        Some(ProcType::par(insert_action(a, op, i)?, (**b).clone()))
    } else {
        Some(ProcType::par((**a).clone(), insert_action(b, op, i)?))
    }
}

/// Inserts an action at position `i` of every leaf's pending list.
fn insert_action(t: &ProcType, op: &Op, i: usize) -> Option<ProcType> {
    match t {
        ProcType::Run { ty, eff, pending } => {
            if i > pending.len() {
                return None;
            }
            let mut p = pending.clone();
            p.insert(i, op.clone());
            Some(ProcType::Run { ty: ty.clone(), eff: eff.clone(), pending: p })
        }
        ProcType::Par(a, b) => Some(ProcType::par(insert_action(a, op, i)?, insert_action(b, op, i)?)),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::surface::parse_program;

    fn load(src: &str) -> (System, State) {
        System::load(&parse_program(src).unwrap(), true).unwrap()
    }

    const PINGPONG_ONCE: &str = "operation ping : unit\n\
        run (send ping (); return ()) : unit ! {ping}\n\
        || run (promise (ping _ |-> return <<()>>) as p in await p until <<x>> in return x) : unit ! ({}, {ping -> {}})";

    #[test]
    fn deterministic_run_reaches_result() {
        let (sys, s) = load(PINGPONG_ONCE);
        let opts = RunOptions { check_safety: true, ..Default::default() };
        let rep = sys.run(s, &opts, &mut chooser(Strategy::Deterministic));
        assert_eq!(rep.stop, StopReason::Quiescent);
        assert!(rep.violations.is_empty(), "{:?}", rep.violations);
        assert!(rep.final_state.config.is_result());
        assert_eq!(rep.emitted().len(), 1);
    }

    #[test]
    fn exploration_is_safe_and_parallel_agrees() {
        let (sys, s) = load(PINGPONG_ONCE);
        let seq = sys.explore(s.clone(), &ExploreOptions::default());
        let par = sys.explore(s, &ExploreOptions { parallel: true, ..Default::default() });
        assert!(seq.safety_violations.is_empty(), "{:?}", seq.safety_violations);
        assert_eq!(seq, par);
        assert_eq!(seq.terminal_states, 1);
    }

    #[test]
    fn mutated_successor_is_caught() {
        let (sys, mut s) = load(PINGPONG_ONCE);
        let r = loop {
            let rs = s.config.redexes();
            if let Some(r) = rs.iter().find(|r| r.rule == Rule::HoistSignal) {
                break r.clone();
            }
            s = sys.step(&s, &rs[0], true).unwrap().state;
        };
        let good = sys.step(&s, &r, true).unwrap();
        assert!(good.violation.is_none());
        // A hoist that renames the signal to one the process never declared.
        let Proc::Par(a, b) = &good.state.config.proc else { panic!() };
        let Proc::Signal(_, v, q) = &**a else { panic!() };
        let renamed = Proc::Signal("pong".into(), v.clone(), q.clone());
        let mut sig = sys.sig.clone();
        sig.insert("pong".into(), Type::Unit);
        let sys = System { sig, ..sys };
        let bad = Config { proc: Proc::Par(Arc::new(renamed), b.clone()), stores: good.state.config.stores.clone() };
        assert!(sys.check_successor(&s, &r, &bad).is_err());
        // A payload of the wrong type is caught as well.
        let Proc::Signal(op, _, q) = &**a else { panic!() };
        let retyped = Proc::Signal(op.clone(), Value::int(3), q.clone());
        let bad = Config { proc: Proc::Par(Arc::new(retyped), b.clone()), stores: good.state.config.stores };
        assert!(sys.check_successor(&s, &r, &bad).is_err());
    }

    #[test]
    fn inject_checks_payload() {
        let (sys, s) = load(PINGPONG_ONCE);
        assert!(sys.inject(&s, "ping", Value::int(1)).is_err());
        assert!(sys.inject(&s, "pong", Value::Unit).is_err());
        let s2 = sys.inject(&s, "ping", Value::Unit).unwrap();
        assert!(matches!(s2.config.proc, Proc::Interrupt(..)));
    }
}
