//! Acceptance checks, one per criterion. Each prints a `[PASS]` or `[FAIL]`
//! line; the target fails if any criterion does.
//!
//! Expected values come from the fixtures in `tests/fixtures` (derived by
//! hand) or from small reference implementations written here.

use std::collections::{BTreeMap, BTreeSet};
use std::path::{Path, PathBuf};
use std::process::Command;
use std::time::{Duration, Instant};

use aeff::ast::{Comp, Const, Proc, Value};
use aeff::effects::{gen, Effect, IAnn, IExpr, OpSet};
use aeff::explore::{chooser, load_source, ExploreOptions, ExploreReport, RunOptions, State, Strategy, System};
use aeff::step::{child, Frame};
use aeff::subst::alpha_eq_proc;
use aeff::surface::{parse_proc, print_proc};
use aeff::types::{ProcType, Type};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde_json::Value as Json;

const SWEEP: &[&str] = &[
    "trivial",
    "nonconfluence",
    "nonconfluence_blocked",
    "feed",
    "multithreading",
    "remotecall",
    "cancellable",
    "lcg",
    "heap",
    "postprocess",
    "pingpong",
];

type Outcome = Result<String, String>;

fn root() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../..")
}

fn corpus_path(name: &str) -> PathBuf {
    root().join("corpus").join(format!("{name}.aeff"))
}

fn corpus(name: &str) -> String {
    std::fs::read_to_string(corpus_path(name)).unwrap()
}

/// Non-comment lines of a fixture file.
fn fixture(name: &str) -> Vec<String> {
    let p = Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/fixtures").join(name);
    let text = std::fs::read_to_string(p).unwrap();
    text.lines().filter(|l| !l.trim().is_empty() && !l.starts_with('#')).map(str::to_string).collect()
}

fn aeff(args: &[&str]) -> std::process::Output {
    Command::new(env!("CARGO_BIN_EXE_aeff")).args(args).output().expect("binary runs")
}

fn ensure(cond: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg())
    }
}

// ----- 1 and 10: safety sweep and finality -----

fn explore_cli(name: &str) -> Result<ExploreReportJson, String> {
    let path = corpus_path(name);
    let out = aeff(&[
        "explore",
        path.to_str().unwrap(),
        "--check-safety",
        "--max-states",
        "5000",
        "--max-depth",
        "60",
    ]);
    let json: Json = serde_json::from_slice(&out.stdout).map_err(|e| format!("{name}: bad report: {e}"))?;
    Ok(ExploreReportJson { name: name.to_string(), code: out.status.code(), json })
}

struct ExploreReportJson {
    name: String,
    code: Option<i32>,
    json: Json,
}

fn violations_of(r: &ExploreReportJson, kinds: &[&str]) -> usize {
    r.json["safetyViolations"].as_array().unwrap().iter().filter(|v| kinds.contains(&v["kind"].as_str().unwrap())).count()
}

fn criterion_1(reports: &[ExploreReportJson], elapsed: Duration) -> Outcome {
    let mut states = 0;
    for r in reports {
        let bad = violations_of(r, &["Progress", "Preservation"]);
        ensure(bad == 0, || format!("{}: {bad} violations: {}", r.name, r.json["safetyViolations"]))?;
        ensure(r.code == Some(0), || format!("{}: exit {:?}", r.name, r.code))?;
        states += r.json["statesVisited"].as_u64().unwrap();
    }
    ensure(elapsed < Duration::from_secs(120), || format!("took {elapsed:?}"))?;
    Ok(format!("{} programs, {states} states, 0 violations, {:.1}s", reports.len(), elapsed.as_secs_f64()))
}

/// Results straight from their grammar: outgoing signals around a parallel
/// composition of runs, each of which is `return`, or `await` on a promise
/// bound by an enclosing `promise`.
fn oracle_result(p: &Proc) -> bool {
    fn run_res(m: &Comp, bound: &mut Vec<String>) -> bool {
        match m {
            Comp::Return(_) => true,
            Comp::Await(Value::Var(p), ..) => bound.iter().any(|b| **b == **p),
            Comp::Promise(_, _, p, n) => {
                bound.push(p.to_string());
                let ok = run_res(n, bound);
                bound.pop();
                ok
            }
            _ => false,
        }
    }
    fn par_res(p: &Proc) -> bool {
        match p {
            Proc::Run(m) => run_res(m, &mut vec![]),
            Proc::Par(a, b) => par_res(a) && par_res(b),
            _ => false,
        }
    }
    match p {
        Proc::Signal(_, _, q) => oracle_result(q),
        _ => par_res(p),
    }
}

fn criterion_10(reports: &[ExploreReportJson]) -> Outcome {
    let mut total = 0;
    for r in reports {
        let fin = violations_of(r, &["Finality"]);
        ensure(fin == 0, || format!("{}: {fin} finality violations", r.name))?;
        // Walk the same state space in-process and compare each state's
        // menu with the grammar of results.
        let (sys, s) = load_source(&corpus(&r.name), true).map_err(|e| e.to_string())?;
        let opts = ExploreOptions { check_safety: false, ..Default::default() };
        let mut bad = vec![];
        let rep = sys.explore_with(s, &opts, &mut |st: &State, _, terminal| {
            let res = oracle_result(&st.config.proc);
            if res != terminal || res != st.config.is_result() {
                bad.push(print_proc(&st.config.proc));
            }
        });
        ensure(bad.is_empty(), || format!("{}: result/menu mismatch at {}", r.name, bad[0]))?;
        let cli_states = r.json["statesVisited"].as_u64().unwrap() as usize;
        ensure(rep.states_visited == cli_states, || {
            format!("{}: {} states in-process vs {cli_states} from the CLI", r.name, rep.states_visited)
        })?;
        total += rep.states_visited;
    }
    Ok(format!("{total} states, result iff empty menu everywhere"))
}

// ----- 2: non-confluence -----

fn criterion_2() -> Outcome {
    let (sys, s) = load_source(&corpus("nonconfluence"), true).map_err(|e| e.to_string())?;
    let rep: ExploreReport = sys.explore(s, &ExploreOptions::default());
    let got: Vec<Proc> = rep.terminals.iter().map(|t| parse_proc(t).unwrap()).collect();
    let want: Vec<Proc> = fixture("nonconfluence_terminals.txt").iter().map(|t| parse_proc(t).unwrap()).collect();
    ensure(rep.terminal_states >= 2, || format!("only {} terminal states", rep.terminal_states))?;
    ensure(got.len() == want.len(), || format!("{} terminals, fixture has {}", got.len(), want.len()))?;
    for w in &want {
        ensure(got.iter().any(|g| alpha_eq_proc(g, w)), || format!("missing terminal {}", print_proc(w)))?;
    }
    let orders: BTreeSet<Vec<String>> = rep
        .signal_orders
        .iter()
        .map(|o| o.iter().filter(|s| s.starts_with("op1(") || s.starts_with("op2(")).cloned().collect())
        .collect();
    let both = orders.contains(&vec!["op1(1)".to_string(), "op2(2)".to_string()])
        && orders.contains(&vec!["op2(2)".to_string(), "op1(1)".to_string()]);
    ensure(both, || format!("orders seen: {orders:?}"))?;
    Ok(format!("{} terminals match the fixture, op1/op2 in both orders", got.len()))
}

// ----- 3: request chain -----

fn criterion_3() -> Outcome {
    let (sys, s) = load_source(&corpus("request"), true).map_err(|e| e.to_string())?;
    let want = fixture("request_chain.txt");
    let mut cur = s;
    for (k, w) in want.iter().enumerate() {
        let r = cur.config.redexes().into_iter().next().ok_or("stuck early")?;
        cur = sys.step(&cur, &r, true).map_err(|e| e.to_string())?.state;
        let expect = parse_proc(w).unwrap();
        ensure(alpha_eq_proc(&cur.config.proc, &expect), || {
            format!("step {}: got {} expected {w}", k + 1, print_proc(&cur.config.proc))
        })?;
    }
    Ok("three intermediate terms match".into())
}

// ----- 4: feed -----

fn criterion_4() -> Outcome {
    let src = corpus("feed");
    let cut = src.find("\n|| run user ()").ok_or("feed program changed shape")?;
    let dir = tempfile::tempdir().unwrap();
    let prog = dir.path().join("feed_scripted.aeff");
    std::fs::write(&prog, format!("{}\n", &src[..cut])).unwrap();
    let script: Vec<Json> = (0..120).map(|_| serde_json::json!({ "op": "nextItem", "payload": "()" })).collect();
    let script_path = dir.path().join("script.json");
    std::fs::write(&script_path, serde_json::to_string(&script).unwrap()).unwrap();
    let out = aeff(&[
        "run",
        prog.to_str().unwrap(),
        "--strategy",
        "deterministic",
        "--inject",
        script_path.to_str().unwrap(),
        "--max-steps",
        "200000",
        "--json",
    ]);
    ensure(out.status.success(), || String::from_utf8_lossy(&out.stderr).into_owned())?;
    let rep: Json = serde_json::from_slice(&out.stdout).map_err(|e| e.to_string())?;
    let displays: Vec<String> = rep["emitted"]
        .as_array()
        .unwrap()
        .iter()
        .filter(|s| s["op"] == "display")
        .map(|s| s["payload"].as_str().unwrap().trim_matches('"').to_string())
        .collect();
    let numeric: Vec<i64> = displays.iter().filter_map(|d| d.parse().ok()).collect();
    ensure(numeric.len() > 84, || format!("only {} numeric displays", numeric.len()))?;
    for (k, n) in numeric.iter().enumerate() {
        let expect = 10 * (k as i64 + 1);
        ensure(*n == expect, || format!("display {k} is {n}, expected {expect}"))?;
    }
    Ok(format!("{} numeric displays of {} total, all 10*(k+1)", numeric.len(), displays.len()))
}

// ----- 5: LCG -----

fn lcg_program(calls: usize, (modulus, a, c, seed): (i64, i64, i64, i64)) -> String {
    let src = corpus("lcg");
    let start = src.find("let client () =").unwrap();
    let end = src.find("\nrun client").unwrap();
    let mut client = String::from("let client () =\n");
    for k in 0..calls {
        client.push_str(&format!("    let x{k} = random {k} in send out x{k};\n"));
    }
    client.push_str("    return ()\n");
    let rest = src[end..].replace("lcgRunner 1234 567 89 1", &format!("lcgRunner {modulus} {a} {c} {seed}"));
    format!("{}{client}{rest}", &src[..start])
}

fn outs(sys: &System, s: State, strategy: Strategy) -> Result<Vec<i64>, String> {
    let rep = sys.run(s, &RunOptions { max_steps: 1_000_000, ..Default::default() }, &mut chooser(strategy));
    ensure(rep.final_state.config.is_result(), || format!("stopped with {:?}", rep.stop))?;
    rep.emitted()
        .into_iter()
        .filter(|e| e.op == "out")
        .map(|e| e.payload.trim_matches(['(', ')']).parse::<i64>().map_err(|err| err.to_string()))
        .collect()
}

fn criterion_5() -> Outcome {
    let params = [(1234, 567, 89, 1), (1000, 21, 7, 999), (97, 5, 3, 42)];
    for p in params {
        let (modulus, a, c, seed) = p;
        let mut expect = vec![];
        let mut s = seed;
        for _ in 0..50 {
            expect.push(s % 10);
            s = (a * s + c) % modulus;
        }
        let (sys, st) = load_source(&lcg_program(50, p), true).map_err(|e| e.to_string())?;
        for strategy in [Strategy::Deterministic, Strategy::Random(1), Strategy::Random(2)] {
            let got = outs(&sys, st.clone(), strategy)?;
            ensure(got == expect, || format!("{p:?} {strategy:?}: got {got:?}, expected {expect:?}"))?;
        }
    }
    Ok("50 draws match the recurrence for 3 parameter sets".into())
}

// ----- 6: heap -----

/// A random client script together with the outputs a map would give.
fn heap_script(rng: &mut ChaCha8Rng) -> (String, Vec<i64>) {
    let mut heap: Vec<i64> = vec![];
    let mut lines = vec![];
    let mut expect = vec![];
    let n = rng.gen_range(1..12);
    for call in 0..n {
        let v: i64 = rng.gen_range(-50..50);
        let op = if heap.is_empty() { 0 } else { rng.gen_range(0..3) };
        match op {
            0 => {
                lines.push(format!("let l{} = alloc {call} ({v}) in", heap.len()));
                heap.push(v);
            }
            1 => {
                let l = rng.gen_range(0..heap.len());
                lines.push(format!("let r{call} = lookup {call} l{l} in send out r{call};"));
                expect.push(heap[l]);
            }
            _ => {
                let l = rng.gen_range(0..heap.len());
                lines.push(format!("update {call} l{l} ({v});"));
                heap[l] = v;
            }
        }
    }
    let body: String = lines.iter().map(|l| format!("    {l}\n")).collect();
    (format!("let client () =\n{body}    return ()\n"), expect)
}

fn criterion_6() -> Outcome {
    let src = corpus("heap");
    let start = src.find("let client () =").unwrap();
    let end = src.find("\nrun client").unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    let mut lookups = 0;
    for k in 0..200 {
        let (client, expect) = heap_script(&mut rng);
        let prog = format!("{}{client}{}", &src[..start], &src[end..]);
        let (sys, st) = load_source(&prog, true).map_err(|e| format!("script {k}: {e}\n{client}"))?;
        let strategies = [Strategy::Deterministic]
            .into_iter()
            .chain((0..5).map(|i| Strategy::Random(1000 * k + i)));
        for strategy in strategies {
            let got = outs(&sys, st.clone(), strategy)?;
            ensure(got == expect, || format!("script {k} {strategy:?}: got {got:?} expected {expect:?}\n{client}"))?;
        }
        lookups += expect.len();
    }
    Ok(format!("200 scripts x 6 strategies, {lookups} lookups agree with the reference map"))
}

// ----- 7: cancellation -----

/// Computations in evaluation position of a process, with the names and
/// handler operations of the promises installed around each.
fn leaves(p: &Proc, out: &mut Vec<(Comp, BTreeMap<String, String>)>) {
    match p {
        Proc::Run(m) => {
            let mut promises = BTreeMap::new();
            let mut cur: &Comp = m;
            loop {
                if let Comp::Promise(h, _, name, _) = cur {
                    promises.insert(name.to_string(), h.op.to_string());
                }
                let next = [Frame::Let, Frame::Signal, Frame::Interrupt, Frame::Promise, Frame::Spawn]
                    .into_iter()
                    .find_map(|f| child(cur, f));
                match next {
                    Some(n) => cur = n,
                    None => break,
                }
            }
            out.push((cur.clone(), promises));
        }
        Proc::Par(a, b) => {
            leaves(a, out);
            leaves(b, out);
        }
        Proc::Signal(_, _, q) | Proc::Interrupt(_, _, q) => leaves(q, out),
    }
}

fn is_cancelled_result(op: &str, v: &Value) -> bool {
    op == "result" && matches!(v, Value::Pair(_, n) if **n == Value::Const(Const::Int(0)))
}

/// Whether `result` tagged with call 0 is being issued anywhere in the
/// state: as a signal or interrupt in the process, or as the next action of
/// some computation.
fn issues_cancelled_result(p: &Proc) -> bool {
    fn in_proc(p: &Proc) -> bool {
        match p {
            Proc::Signal(op, v, q) | Proc::Interrupt(op, v, q) => is_cancelled_result(op, v) || in_proc(q),
            Proc::Par(a, b) => in_proc(a) || in_proc(b),
            Proc::Run(m) => in_comp(m),
        }
    }
    fn in_comp(m: &Comp) -> bool {
        let here = match m {
            Comp::Signal(op, v, _) | Comp::Interrupt(op, v, _) => is_cancelled_result(op, v),
            _ => false,
        };
        here || [Frame::Let, Frame::Signal, Frame::Interrupt, Frame::Promise, Frame::Spawn]
            .into_iter()
            .filter_map(|f| child(m, f))
            .any(in_comp)
    }
    in_proc(p)
}

fn blocked_on_impossible(p: &Proc) -> bool {
    let mut ls = vec![];
    leaves(p, &mut ls);
    ls.iter().any(|(m, promises)| match m {
        Comp::Await(Value::Var(x), ..) => promises.get(&x.to_string()).is_some_and(|op| op == "impossible"),
        _ => false,
    })
}

fn criterion_7() -> Outcome {
    let (sys, s) = load_source(&corpus("cancellable"), true).map_err(|e| e.to_string())?;
    let opts = ExploreOptions { max_states: 1_000_000, max_depth: 40, check_safety: false, ..Default::default() };
    let mut bad = None;
    let rep = sys.explore_with(s.clone(), &opts, &mut |st: &State, _, _| {
        if bad.is_none() && issues_cancelled_result(&st.config.proc) {
            bad = Some(print_proc(&st.config.proc));
        }
    });
    ensure(bad.is_none(), || format!("cancelled result issued in {}", bad.clone().unwrap()))?;
    ensure(!rep.truncated, || "exploration to depth 40 was truncated".into())?;
    // Every complete run ends with the cancelled task parked on the
    // promise that nobody fulfils.
    let strategies = [Strategy::Deterministic].into_iter().chain((0..20).map(Strategy::Random));
    for strategy in strategies {
        let run = sys.run(s.clone(), &RunOptions { max_steps: 100_000, ..Default::default() }, &mut chooser(strategy));
        let p = &run.final_state.config.proc;
        ensure(run.final_state.config.is_result(), || format!("{strategy:?} did not finish"))?;
        ensure(!run.emitted().iter().any(|e| e.op == "result" && e.payload.ends_with(", 0)")), || {
            format!("{strategy:?} emitted a cancelled result")
        })?;
        ensure(blocked_on_impossible(p), || format!("{strategy:?} ended in {}", print_proc(p)))?;
        let mut ls = vec![];
        leaves(p, &mut ls);
        let returned = ls.iter().any(|(m, _)| *m == Comp::Return(Value::Const(Const::Int(7))));
        ensure(returned, || format!("{strategy:?}: the caller did not return 7: {}", print_proc(p)))?;
    }
    Ok(format!("{} states to depth 40 clean; 21 complete runs end blocked on impossible", rep.states_visited))
}

// ----- 8: modal -----

fn criterion_8() -> Outcome {
    for (name, kind) in [
        ("modal_box_escape", "LockViolation"),
        ("modal_fun_escape", "MobilityViolation"),
        ("modal_promise_escape", "MobilityViolation"),
    ] {
        let out = aeff(&["check", corpus_path(name).to_str().unwrap(), "--json"]);
        let text = String::from_utf8_lossy(&out.stdout);
        ensure(out.status.code() == Some(1), || format!("{name}: exit {:?}", out.status.code()))?;
        ensure(text.contains(kind), || format!("{name}: expected {kind}, got {text}"))?;
    }
    let out = aeff(&["check", corpus_path("remotecall").to_str().unwrap()]);
    ensure(out.status.success(), || format!("remotecall: {}", String::from_utf8_lossy(&out.stderr)))?;
    Ok("escapes rejected, boxed remote call accepted".into())
}

// ----- 9: effect algebra -----

const OPS: &[&str] = &["a", "b", "c", "d"];

fn effect(rng: &mut ChaCha8Rng) -> Effect {
    let i = IAnn::compile(&gen::iexpr(rng, OPS, 3)).unwrap();
    Effect::new(gen::oset(rng, OPS), i)
}

fn criterion_9() -> Outcome {
    let t = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    for k in 0..1000 {
        // Unfolding a recursive annotation once denotes the same tree.
        let e = match gen::iexpr(&mut rng, OPS, 3) {
            e @ IExpr::Mu(..) => e,
            body => IExpr::Mu("top".into(), Box::new(body)),
        };
        let IExpr::Mu(x, body) = &e else { unreachable!() };
        let unfolded = gen::subst(body, x, &e);
        ensure(IAnn::compile(&e).unwrap() == IAnn::compile(&unfolded).unwrap(), || format!("unfolding {k}"))?;
    }
    for k in 0..1000 {
        let e = effect(&mut rng);
        let (op, other) = (OPS[rng.gen_range(0..4)], OPS[rng.gen_range(0..4)]);
        let acted = e.act(op);
        ensure(e.o.is_subset(&acted.o), || format!("action {k} lost signals"))?;
        if let Some(c) = e.i.get(op) {
            ensure(c.leq(&acted), || format!("action {k}: handler annotation not below the result"))?;
        }
        if op != other {
            if let Some(c) = e.i.get(other) {
                ensure(acted.i.get(other).is_some_and(|a| c.leq(&a)), || format!("action {k} lost {other}"))?;
            }
        }
    }
    for k in 0..1000 {
        let mut t = ProcType::par(
            ProcType::run(Type::Unit, effect(&mut rng)),
            ProcType::run(Type::Int, effect(&mut rng)),
        );
        for _ in 0..4 {
            let next = reduce(&t, &mut rng);
            ensure(t.steps_to(&next), || format!("reduction {k} not accepted"))?;
            ensure(t.signals_of().is_subset(&next.signals_of()), || format!("reduction {k} dropped signals"))?;
            t = next;
        }
    }
    let took = t.elapsed();
    ensure(took < Duration::from_secs(10), || format!("took {took:?}"))?;
    Ok(format!("3 x 1000 annotations in {:.2}s", took.as_secs_f64()))
}

fn reduce(t: &ProcType, rng: &mut ChaCha8Rng) -> ProcType {
    match t {
        ProcType::Par(a, b) if rng.gen_bool(0.5) => ProcType::par(reduce(a, rng), (**b).clone()),
        ProcType::Par(a, b) => ProcType::par((**a).clone(), reduce(b, rng)),
        ProcType::Run { ty, eff, pending } => match rng.gen_range(0..3) {
            0 => {
                let op = OPS[rng.gen_range(0..OPS.len())];
                ProcType::Run { ty: ty.clone(), eff: eff.act(op), pending: pending.clone() }
            }
            1 => {
                let mut p = pending.clone();
                p.insert(rng.gen_range(0..=p.len()), OPS[rng.gen_range(0..OPS.len())].into());
                ProcType::Run { ty: ty.clone(), eff: eff.clone(), pending: p }
            }
            _ => ProcType::par(ProcType::run(Type::Unit, Effect::top(&OpSet::new())), t.clone()),
        },
    }
}

fn main() {
    let mut failed = 0;
    let mut report = |n: usize, what: &str, r: Outcome| {
        match &r {
            Ok(msg) => println!("[PASS] {n} {what}: {msg}"),
            Err(msg) => {
                failed += 1;
                println!("[FAIL] {n} {what}: {msg}");
            }
        }
    };
    let t = Instant::now();
    let reports: Result<Vec<_>, String> = SWEEP.iter().map(|n| explore_cli(n)).collect();
    let elapsed = t.elapsed();
    match &reports {
        Ok(rs) => report(1, "safety sweep", criterion_1(rs, elapsed)),
        Err(e) => report(1, "safety sweep", Err(e.clone())),
    }
    report(2, "non-confluence", criterion_2());
    report(3, "request chain", criterion_3());
    report(4, "feed", criterion_4());
    report(5, "lcg", criterion_5());
    report(6, "heap", criterion_6());
    report(7, "cancellation", criterion_7());
    report(8, "modal", criterion_8());
    report(9, "effect algebra", criterion_9());
    match &reports {
        Ok(rs) => report(10, "finality", criterion_10(rs)),
        Err(e) => report(10, "finality", Err(e.clone())),
    }
    if failed > 0 {
        println!("{failed} criteria failed");
        std::process::exit(1);
    }
}
