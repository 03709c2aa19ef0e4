//! Property tests: the effect algebra against a finite-tree oracle, the
//! interrupt action laws, process type reduction, and the substitution,
//! hashing and printing machinery on states reached by random runs.

use std::collections::BTreeMap;
use std::path::PathBuf;

use aeff::effects::{gen, Effect, FiniteAnn, IAnn, IExpr, Op, OpSet};
use aeff::explore::{chooser, load_source, RunOptions, Strategy};
use aeff::subst::{alpha_eq_proc, hash_proc};
use aeff::surface::{parse_proc, print_proc};
use aeff::types::{ProcType, Type};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

const OPS: &[&str] = &["a", "b", "c", "d"];

fn ann(seed: u64) -> IAnn {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    IAnn::compile(&gen::iexpr(&mut rng, OPS, 3)).expect("generated terms are closed and contractive")
}

fn effect(seed: u64) -> Effect {
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x9e37_79b9);
    Effect::new(gen::oset(&mut rng, OPS), ann(seed))
}

// ----- finite-tree oracle -----

fn fin_leq(a: &FiniteAnn, b: &FiniteAnn) -> bool {
    a.0.iter().all(|(op, (o, c))| match b.0.get(op) {
        Some((o2, c2)) => o.is_subset(o2) && fin_leq(c, c2),
        None => false,
    })
}

fn fin_join(a: &FiniteAnn, b: &FiniteAnn) -> FiniteAnn {
    let mut out = b.0.clone();
    for (op, (o, c)) in &a.0 {
        let merged = match b.0.get(op) {
            Some((o2, c2)) => (o | o2, fin_join(c, c2)),
            None => (o.clone(), c.clone()),
        };
        out.insert(op.clone(), merged);
    }
    FiniteAnn(out)
}

fn fin_truncate(a: &FiniteAnn, depth: usize) -> FiniteAnn {
    if depth == 0 {
        return FiniteAnn::default();
    }
    FiniteAnn(a.0.iter().map(|(op, (o, c))| (op.clone(), (o.clone(), fin_truncate(c, depth - 1)))).collect())
}

/// The action on a finite unfolding, straight from its definition.
fn fin_act(op: &str, o: &OpSet, i: &FiniteAnn) -> (OpSet, FiniteAnn) {
    match i.0.get(op) {
        None => (o.clone(), i.clone()),
        Some((o2, i2)) => {
            let mut rest = i.0.clone();
            rest.remove(op);
            (o | o2, fin_join(&FiniteAnn(rest), i2))
        }
    }
}

const DEPTH: usize = 5;

proptest! {
    #![proptest_config(ProptestConfig::with_cases(1000))]

    #[test]
    fn unfolding_a_binder_is_equal(seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let e = gen::iexpr(&mut rng, OPS, 3);
        let e = match e {
            IExpr::Mu(..) => e,
            body => IExpr::Mu("top".into(), Box::new(body)),
        };
        let IExpr::Mu(t, body) = &e else { unreachable!() };
        let unfolded = gen::subst(body, t, &e);
        prop_assert_eq!(IAnn::compile(&e).unwrap(), IAnn::compile(&unfolded).unwrap());
    }

    #[test]
    fn compile_print_roundtrip(seed in any::<u64>()) {
        let a = ann(seed);
        prop_assert_eq!(IAnn::compile(&a.to_expr()).unwrap(), a);
    }

    #[test]
    fn order_agrees_with_finite_unfoldings(s1 in any::<u64>(), s2 in any::<u64>()) {
        let (a, b) = (ann(s1), ann(s2));
        if a.leq(&b) {
            prop_assert!(fin_leq(&a.unfold_to(DEPTH), &b.unfold_to(DEPTH)));
        }
        let j = a.join(&b);
        prop_assert!(a.leq(&j) && b.leq(&j));
        prop_assert_eq!(j.unfold_to(DEPTH), fin_join(&a.unfold_to(DEPTH), &b.unfold_to(DEPTH)));
        prop_assert!(IAnn::empty().leq(&a));
    }

    #[test]
    fn action_agrees_with_oracle(seed in any::<u64>(), k in 0usize..4) {
        let e = effect(seed);
        let op = OPS[k];
        let acted = e.act(op);
        let (o, i) = fin_act(op, &e.o, &e.i.unfold_to(DEPTH + 1));
        prop_assert_eq!(&acted.o, &o);
        prop_assert_eq!(acted.i.unfold_to(DEPTH), fin_truncate(&i, DEPTH));
    }

    #[test]
    fn action_laws(seed in any::<u64>(), k in 0usize..4, k2 in 0usize..4) {
        let e = effect(seed);
        let (op, op2) = (OPS[k], OPS[k2]);
        let acted = e.act(op);
        // Signals are only ever added.
        prop_assert!(e.o.is_subset(&acted.o));
        // The handler's own annotation is below the result.
        if let Some(c) = e.i.get(op) {
            prop_assert!(c.leq(&acted));
        }
        // Annotations of other operations survive.
        if op != op2 {
            if let Some(c) = e.i.get(op2) {
                let after = acted.i.get(op2);
                prop_assert!(after.is_some_and(|a| c.leq(&a)));
            }
        }
    }

    #[test]
    fn type_reduction_keeps_signals(seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let leaf = |rng: &mut ChaCha8Rng| ProcType::run(Type::Unit, effect(rng.gen()));
        let mut t = ProcType::par(leaf(&mut rng), ProcType::par(leaf(&mut rng), leaf(&mut rng)));
        for _ in 0..6 {
            let before = t.signals_of();
            let next = reduce_randomly(&t, &mut rng);
            prop_assert!(t.steps_to(&next));
            prop_assert!(before.is_subset(&next.signals_of()));
            t = next;
        }
    }
}

/// One random process type reduction: act on a leaf's base effect, record a
/// pending action at some position, or split off a spawned process.
fn reduce_randomly(t: &ProcType, rng: &mut ChaCha8Rng) -> ProcType {
    match t {
        ProcType::Par(a, b) => {
            if rng.gen_bool(0.5) {
                ProcType::par(reduce_randomly(a, rng), (**b).clone())
            } else {
                ProcType::par((**a).clone(), reduce_randomly(b, rng))
            }
        }
        ProcType::Run { ty, eff, pending } => match rng.gen_range(0..3) {
            0 => {
                let ops: Vec<Op> = eff.i.ops().cloned().collect();
                if ops.is_empty() {
                    return t.clone();
                }
                let op = &ops[rng.gen_range(0..ops.len())];
                ProcType::Run { ty: ty.clone(), eff: eff.act(op), pending: pending.clone() }
            }
            1 => {
                let mut p = pending.clone();
                p.insert(rng.gen_range(0..=p.len()), Op::from(OPS[rng.gen_range(0..OPS.len())]));
                ProcType::Run { ty: ty.clone(), eff: eff.clone(), pending: p }
            }
            _ => ProcType::par(ProcType::run(Type::Int, Effect::top(&OpSet::new())), t.clone()),
        },
    }
}

// ----- terms reached by random runs -----

fn corpus(name: &str) -> String {
    let p = PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../corpus").join(format!("{name}.aeff"));
    std::fs::read_to_string(p).unwrap()
}

const WALKED: &[&str] = &["nonconfluence", "feed", "remotecall", "multithreading", "heap", "postprocess"];

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn reached_states_print_parse_and_hash_stably(seed in any::<u64>(), which in 0usize..6, steps in 0usize..120) {
        let (sys, s) = load_source(&corpus(WALKED[which]), true).unwrap();
        let opts = RunOptions { max_steps: steps, ..Default::default() };
        let rep = sys.run(s, &opts, &mut chooser(Strategy::Random(seed)));
        let p = &rep.final_state.config.proc;
        let printed = print_proc(p);
        let back = parse_proc(&printed).unwrap();
        prop_assert!(alpha_eq_proc(p, &back), "{}", printed);
        prop_assert_eq!(hash_proc(p), hash_proc(&back));
        prop_assert_eq!(print_proc(&back), printed);
    }
}

// ----- list builtins against Rust -----

fn run_to_value(src: &str) -> String {
    let (sys, s) = aeff::explore::System::untyped(BTreeMap::new(), parse_proc(&format!("run ({src})")).unwrap());
    let rep = sys.run(s, &RunOptions::default(), &mut chooser(Strategy::Deterministic));
    match &rep.final_state.config.proc {
        aeff::ast::Proc::Run(m) => match &**m {
            aeff::ast::Comp::Return(v) => aeff::surface::print_value(v),
            other => panic!("not a value: {}", aeff::surface::print_comp(other)),
        },
        other => panic!("not a run: {}", print_proc(other)),
    }
}

fn lit(xs: &[i64]) -> String {
    let items: Vec<String> = xs.iter().map(|x| if *x < 0 { format!("({x})") } else { x.to_string() }).collect();
    format!("[{}]{{int}}", items.join("; "))
}

/// Integers as the printer shows them.
fn num(x: i64) -> String {
    if x < 0 {
        format!("({x})")
    } else {
        x.to_string()
    }
}

fn expect_list(xs: &[i64]) -> String {
    let items: Vec<String> = xs.iter().map(|x| num(*x)).collect();
    format!("[{}]", items.join("; "))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn list_builtins_match_reference(xs in prop::collection::vec(-20i64..20, 0..8), ys in prop::collection::vec(-20i64..20, 0..5)) {
        prop_assert_eq!(run_to_value(&format!("length {}", lit(&xs))), xs.len().to_string());
        let mut app = xs.clone();
        app.extend(&ys);
        let got = run_to_value(&format!("{} @ {}", lit(&xs), lit(&ys)));
        prop_assert!(got.starts_with(&expect_list(&app)), "{} vs {:?}", got, app);
        let doubled: Vec<i64> = xs.iter().map(|x| 2 * x).collect();
        let got = run_to_value(&format!("map (fun (x : int) |-> 2 * x) {}", lit(&xs)));
        prop_assert!(got.starts_with(&expect_list(&doubled)), "{} vs {:?}", got, doubled);
        let pos: Vec<i64> = xs.iter().copied().filter(|x| *x > 0).collect();
        let got = run_to_value(&format!("filter (fun (x : int) |-> x > 0) {}", lit(&xs)));
        prop_assert!(got.starts_with(&expect_list(&pos)), "{} vs {:?}", got, pos);
        let sum: i64 = xs.iter().sum();
        prop_assert_eq!(run_to_value(&format!("fold (fun (a : int) (x : int) |-> a + x) 0 {}", lit(&xs))), num(sum));
        if !xs.is_empty() {
            let k = xs.len() / 2;
            prop_assert_eq!(run_to_value(&format!("nth {} {k}", lit(&xs))), num(xs[k]));
            let mut set = xs.clone();
            set[k] = 99;
            let got = run_to_value(&format!("setNth {} {k} 99", lit(&xs)));
            prop_assert!(got.starts_with(&expect_list(&set)), "{} vs {:?}", got, set);
        }
        let (lo, hi) = (xs.first().copied().unwrap_or(0), ys.first().copied().unwrap_or(3));
        let range: Vec<i64> = (lo..=hi).collect();
        let got = run_to_value(&format!("range ({lo}) ({hi})"));
        prop_assert!(got.starts_with(&expect_list(&range)), "{} vs {:?}", got, range);
    }
}
