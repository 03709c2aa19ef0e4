//! Effect annotations: signal sets, regular interrupt annotations and the
//! interrupt action.
//!
//! An interrupt annotation is a possibly infinite tree of partial maps. We
//! only represent the regular ones, stored as a deterministic automaton whose
//! states are map nodes. Every value is kept minimal and numbered in
//! breadth-first order from the root, so two annotations denote the same tree
//! exactly when they are structurally equal.

use std::collections::{BTreeMap, BTreeSet, HashMap, HashSet, VecDeque};
use std::fmt;
use std::sync::Arc;

use thiserror::Error;

/// Operation (signal / interrupt) name.
pub type Op = Arc<str>;

/// A finite set of signal names, ordered by inclusion.
pub type OpSet = BTreeSet<Op>;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum EffectError {
    #[error("ill-formed annotation: unbound recursion variable `{0}`")]
    Unbound(String),
    #[error("ill-formed annotation: recursion variable `{0}` is not guarded by a map")]
    NotContractive(String),
    #[error("ill-formed annotation: duplicate entry for `{0}`")]
    Duplicate(String),
}

type Node = BTreeMap<Op, (OpSet, u32)>;

/// Regular interrupt annotation in canonical form.
#[derive(Clone, PartialEq, Eq, Hash)]
pub struct IAnn {
    nodes: Arc<Vec<Node>>,
}

/// Signal set paired with an interrupt annotation.
#[derive(Clone, PartialEq, Eq, Hash)]
pub struct Effect {
    pub o: OpSet,
    pub i: IAnn,
}

/// Builds a canonical annotation from an arbitrary graph rooted at `root`.
fn canonicalize(graph: &[Node], root: u32) -> IAnn {
    // Reachable states, in discovery order.
    let mut order = vec![root];
    let mut seen: HashSet<u32> = HashSet::from([root]);
    let mut k = 0;
    while k < order.len() {
        for (_, c) in graph[order[k] as usize].values() {
            if seen.insert(*c) {
                order.push(*c);
            }
        }
        k += 1;
    }
    // Moore-style partition refinement.
    let mut class: HashMap<u32, usize> = HashMap::new();
    {
        let mut sigs: HashMap<Vec<(Op, OpSet)>, usize> = HashMap::new();
        for &n in &order {
            let sig: Vec<(Op, OpSet)> = graph[n as usize]
                .iter()
                .map(|(op, (o, _))| (op.clone(), o.clone()))
                .collect();
            let len = sigs.len();
            let c = *sigs.entry(sig).or_insert(len);
            class.insert(n, c);
        }
    }
    loop {
        let mut sigs: HashMap<(usize, Vec<usize>), usize> = HashMap::new();
        let mut next: HashMap<u32, usize> = HashMap::new();
        for &n in &order {
            let kids: Vec<usize> = graph[n as usize].values().map(|(_, c)| class[c]).collect();
            let len = sigs.len();
            let c = *sigs.entry((class[&n], kids)).or_insert(len);
            next.insert(n, c);
        }
        let before = class.values().collect::<HashSet<_>>().len();
        let after = sigs.len();
        class = next;
        if before == after {
            break;
        }
    }
    // Representative per class, then BFS renumbering from the root class.
    let mut rep: HashMap<usize, u32> = HashMap::new();
    for &n in &order {
        rep.entry(class[&n]).or_insert(n);
    }
    let mut number: HashMap<usize, u32> = HashMap::new();
    let mut queue = VecDeque::from([class[&root]]);
    number.insert(class[&root], 0);
    let mut out_order = vec![];
    while let Some(c) = queue.pop_front() {
        out_order.push(c);
        for (_, child) in graph[rep[&c] as usize].values() {
            let cc = class[child];
            if !number.contains_key(&cc) {
                number.insert(cc, number.len() as u32);
                queue.push_back(cc);
            }
        }
    }
    let nodes = out_order
        .iter()
        .map(|c| {
            graph[rep[c] as usize]
                .iter()
                .map(|(op, (o, child))| (op.clone(), (o.clone(), number[&class[child]])))
                .collect()
        })
        .collect();
    IAnn { nodes: Arc::new(nodes) }
}

impl IAnn {
    /// The annotation with no installed handlers.
    pub fn empty() -> IAnn {
        IAnn { nodes: Arc::new(vec![Node::new()]) }
    }

    /// A single-level map; entries must be distinct.
    pub fn from_entries(entries: Vec<(Op, Effect)>) -> IAnn {
        let mut graph = vec![Node::new()];
        for (op, eff) in entries {
            let off = graph.len() as u32;
            for node in eff.i.nodes.iter() {
                graph.push(node.iter().map(|(k, (o, c))| (k.clone(), (o.clone(), c + off))).collect());
            }
            graph[0].insert(op, (eff.o, off));
        }
        canonicalize(&graph, 0)
    }

    pub fn is_empty(&self) -> bool {
        self.nodes[0].is_empty()
    }

    /// Number of automaton states.
    pub fn size(&self) -> usize {
        self.nodes.len()
    }

    /// Operations mapped at the root.
    pub fn ops(&self) -> impl Iterator<Item = &Op> {
        self.nodes[0].keys()
    }

    fn reroot(&self, n: u32) -> IAnn {
        if n == 0 {
            return self.clone();
        }
        canonicalize(&self.nodes, n)
    }

    /// `ι(op)`, or `None` for ⊥.
    pub fn get(&self, op: &str) -> Option<Effect> {
        self.nodes[0].get(op).map(|(o, c)| Effect { o: o.clone(), i: self.reroot(*c) })
    }

    /// `ι[op ↦ ⊥]`.
    pub fn remove(&self, op: &str) -> IAnn {
        if !self.nodes[0].contains_key(op) {
            return self.clone();
        }
        let mut graph: Vec<Node> = self.nodes.as_ref().clone();
        let mut root = graph[0].clone();
        root.remove(op);
        graph.push(root);
        let r = (graph.len() - 1) as u32;
        canonicalize(&graph, r)
    }

    /// Coinductive order: every op mapped on the left is mapped on the right
    /// with pointwise smaller components.
    pub fn leq(&self, other: &IAnn) -> bool {
        let mut seen: HashSet<(u32, u32)> = HashSet::new();
        let mut stack = vec![(0u32, 0u32)];
        while let Some((a, b)) = stack.pop() {
            if !seen.insert((a, b)) {
                continue;
            }
            let nb = &other.nodes[b as usize];
            for (op, (o, ca)) in self.nodes[a as usize].iter() {
                match nb.get(op) {
                    Some((o2, cb)) if o.is_subset(o2) => stack.push((*ca, *cb)),
                    _ => return false,
                }
            }
        }
        true
    }

    /// Least upper bound by product construction.
    pub fn join(&self, other: &IAnn) -> IAnn {
        if self.is_empty() {
            return other.clone();
        }
        if other.is_empty() || self == other {
            return self.clone();
        }
        let mut index: HashMap<(Option<u32>, Option<u32>), u32> = HashMap::new();
        let mut pairs = vec![(Some(0u32), Some(0u32))];
        index.insert(pairs[0], 0);
        let mut graph: Vec<Node> = vec![];
        let mut k = 0;
        while k < pairs.len() {
            let (a, b) = pairs[k];
            let na = a.map(|a| &self.nodes[a as usize]);
            let nb = b.map(|b| &other.nodes[b as usize]);
            let mut keys: BTreeSet<&Op> = BTreeSet::new();
            if let Some(na) = na {
                keys.extend(na.keys());
            }
            if let Some(nb) = nb {
                keys.extend(nb.keys());
            }
            let mut node = Node::new();
            for op in keys {
                let ea = na.and_then(|n| n.get(op));
                let eb = nb.and_then(|n| n.get(op));
                let (o, pair) = match (ea, eb) {
                    (Some((o1, c1)), Some((o2, c2))) => (o1 | o2, (Some(*c1), Some(*c2))),
                    (Some((o1, c1)), None) => (o1.clone(), (Some(*c1), None)),
                    (None, Some((o2, c2))) => (o2.clone(), (None, Some(*c2))),
                    (None, None) => unreachable!(),
                };
                let len = pairs.len() as u32;
                let id = *index.entry(pair).or_insert_with(|| {
                    pairs.push(pair);
                    len
                });
                node.insert(op.clone(), (o, id));
            }
            graph.push(node);
            k += 1;
        }
        canonicalize(&graph, 0)
    }

    /// Compiles a μ-term, checking closedness and contractiveness.
    pub fn compile(expr: &IExpr) -> Result<IAnn, EffectError> {
        let mut graph: Vec<Node> = vec![];
        let mut env: Vec<(String, u32)> = vec![];
        let root = compile_into(expr, &mut graph, &mut env)?;
        Ok(canonicalize(&graph, root))
    }

    /// Reads the annotation back as a μ-term. Binders are introduced only
    /// where a node is revisited along the current path.
    pub fn to_expr(&self) -> IExpr {
        fn go(ann: &IAnn, n: u32, path: &mut Vec<u32>, used: &mut HashSet<u32>) -> IExpr {
            if path.contains(&n) {
                used.insert(n);
                return IExpr::Var(format!("t{n}"));
            }
            path.push(n);
            let entries = ann.nodes[n as usize]
                .iter()
                .map(|(op, (o, c))| (op.clone(), o.clone(), go(ann, *c, path, used)))
                .collect();
            path.pop();
            let body = IExpr::Map(entries);
            if used.remove(&n) {
                IExpr::Mu(format!("t{n}"), Box::new(body))
            } else {
                body
            }
        }
        go(self, 0, &mut vec![], &mut HashSet::new())
    }

    /// Finite unfolding to the given depth; deeper levels are cut off as
    /// empty maps. Used by tests as an independent approximation.
    pub fn unfold_to(&self, depth: usize) -> FiniteAnn {
        fn go(ann: &IAnn, n: u32, depth: usize) -> FiniteAnn {
            if depth == 0 {
                return FiniteAnn::default();
            }
            FiniteAnn(
                ann.nodes[n as usize]
                    .iter()
                    .map(|(op, (o, c))| (op.clone(), (o.clone(), go(ann, *c, depth - 1))))
                    .collect(),
            )
        }
        go(self, 0, depth)
    }

    /// Raw automaton, for hashing and tests.
    pub fn raw_nodes(&self) -> &[BTreeMap<Op, (OpSet, u32)>] {
        &self.nodes
    }

    /// Builds an annotation from an arbitrary automaton, minimising it.
    pub fn from_raw(graph: &[BTreeMap<Op, (OpSet, u32)>], root: u32) -> IAnn {
        canonicalize(graph, root)
    }
}

fn compile_into(expr: &IExpr, graph: &mut Vec<Node>, env: &mut Vec<(String, u32)>) -> Result<u32, EffectError> {
    match expr {
        IExpr::Var(t) => env
            .iter()
            .rev()
            .find(|(n, _)| n == t)
            .map(|(_, id)| *id)
            .ok_or_else(|| EffectError::Unbound(t.clone())),
        IExpr::Map(_) | IExpr::Mu(..) => {
            let mut binders = vec![];
            let mut body = expr;
            while let IExpr::Mu(t, b) = body {
                binders.push(t.clone());
                body = b;
            }
            let IExpr::Map(entries) = body else {
                let IExpr::Var(v) = body else { unreachable!() };
                return Err(EffectError::NotContractive(v.clone()));
            };
            let id = graph.len() as u32;
            graph.push(Node::new());
            let mark = env.len();
            for t in binders {
                env.push((t, id));
            }
            let mut node = Node::new();
            for (op, o, child) in entries {
                let c = compile_into(child, graph, env)?;
                if node.insert(op.clone(), (o.clone(), c)).is_some() {
                    return Err(EffectError::Duplicate(op.to_string()));
                }
            }
            env.truncate(mark);
            graph[id as usize] = node;
            Ok(id)
        }
    }
}

/// Surface form of an interrupt annotation with named recursion.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum IExpr {
    Map(Vec<(Op, OpSet, IExpr)>),
    Var(String),
    Mu(String, Box<IExpr>),
}

/// Finite tree of partial maps (a depth-bounded unfolding).
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct FiniteAnn(pub BTreeMap<Op, (OpSet, FiniteAnn)>);

impl FiniteAnn {
    pub fn leq(&self, other: &FiniteAnn) -> bool {
        self.0.iter().all(|(op, (o, i))| match other.0.get(op) {
            Some((o2, i2)) => o.is_subset(o2) && i.leq(i2),
            None => false,
        })
    }
}

impl Effect {
    pub fn new(o: OpSet, i: IAnn) -> Effect {
        Effect { o, i }
    }

    /// `(∅, {})`
    pub fn pure() -> Effect {
        Effect { o: OpSet::new(), i: IAnn::empty() }
    }

    /// The most permissive annotation over the given signature: every signal
    /// may be issued, and every interrupt may trigger anything, forever.
    pub fn top(sig: &OpSet) -> Effect {
        let node: Node = sig.iter().map(|op| (op.clone(), (sig.clone(), 0))).collect();
        Effect { o: sig.clone(), i: canonicalize(&[node], 0) }
    }

    pub fn leq(&self, other: &Effect) -> bool {
        self.o.is_subset(&other.o) && self.i.leq(&other.i)
    }

    pub fn join(&self, other: &Effect) -> Effect {
        Effect { o: &self.o | &other.o, i: self.i.join(&other.i) }
    }

    /// The interrupt action `op↓(o, ι)`.
    pub fn act(&self, op: &str) -> Effect {
        match self.i.get(op) {
            Some(inner) => Effect { o: &self.o | &inner.o, i: self.i.remove(op).join(&inner.i) },
            None => self.clone(),
        }
    }

    /// `ops↓↓e`: the head of the list acts last.
    pub fn act_list(&self, ops: &[Op]) -> Effect {
        ops.iter().rev().fold(self.clone(), |e, op| e.act(op))
    }
}

fn fmt_oset(o: &OpSet, f: &mut fmt::Formatter<'_>) -> fmt::Result {
    write!(f, "{{")?;
    for (k, op) in o.iter().enumerate() {
        if k > 0 {
            write!(f, ", ")?;
        }
        write!(f, "{op}")?;
    }
    write!(f, "}}")
}

impl fmt::Display for IExpr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            IExpr::Var(t) => write!(f, "{t}"),
            IExpr::Mu(t, b) => write!(f, "rec {t} . {b}"),
            IExpr::Map(entries) => {
                write!(f, "{{")?;
                for (k, (op, o, i)) in entries.iter().enumerate() {
                    if k > 0 {
                        write!(f, ", ")?;
                    }
                    write!(f, "{op} -> (")?;
                    fmt_oset(o, f)?;
                    write!(f, ", {i})")?;
                }
                write!(f, "}}")
            }
        }
    }
}

impl fmt::Display for IAnn {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.to_expr())
    }
}

impl fmt::Debug for IAnn {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{self}")
    }
}

impl fmt::Display for Effect {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "(")?;
        fmt_oset(&self.o, f)?;
        write!(f, ", {})", self.i)
    }
}

impl fmt::Debug for Effect {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{self}")
    }
}

/// Convenience constructor for signal sets.
pub fn oset<I, S>(ops: I) -> OpSet
where
    I: IntoIterator<Item = S>,
    S: AsRef<str>,
{
    ops.into_iter().map(|s| Op::from(s.as_ref())).collect()
}

/// Random regular annotations, for property tests.
pub mod gen {
    use rand::Rng;

    use super::{IExpr, Op, OpSet};

    pub fn oset<R: Rng>(rng: &mut R, ops: &[&str]) -> OpSet {
        ops.iter().filter(|_| rng.gen_bool(0.3)).map(|o| Op::from(*o)).collect()
    }

    /// A closed, contractive μ-term over `ops`. Recursion variables only
    /// occur as map children, which keeps every binder guarded.
    pub fn iexpr<R: Rng>(rng: &mut R, ops: &[&str], depth: usize) -> IExpr {
        fn go<R: Rng>(rng: &mut R, ops: &[&str], depth: usize, env: &mut Vec<String>) -> IExpr {
            let bind = rng.gen_bool(0.4);
            if bind {
                env.push(format!("t{}", env.len()));
            }
            let mut entries = vec![];
            for op in ops {
                if depth == 0 || !rng.gen_bool(0.45) {
                    continue;
                }
                let o = oset(rng, ops);
                let child = if !env.is_empty() && rng.gen_bool(0.4) {
                    IExpr::Var(env[rng.gen_range(0..env.len())].clone())
                } else {
                    go(rng, ops, depth - 1, env)
                };
                entries.push((Op::from(*op), o, child));
            }
            let body = IExpr::Map(entries);
            if bind {
                let t = env.pop().expect("pushed above");
                IExpr::Mu(t, Box::new(body))
            } else {
                body
            }
        }
        go(rng, ops, depth, &mut vec![])
    }

    /// Replaces free occurrences of `t` by `by`.
    pub fn subst(e: &IExpr, t: &str, by: &IExpr) -> IExpr {
        match e {
            IExpr::Var(x) if x == t => by.clone(),
            IExpr::Var(_) => e.clone(),
            IExpr::Mu(x, _) if x == t => e.clone(),
            IExpr::Mu(x, b) => IExpr::Mu(x.clone(), Box::new(subst(b, t, by))),
            IExpr::Map(es) => IExpr::Map(es.iter().map(|(op, o, c)| (op.clone(), o.clone(), subst(c, t, by))).collect()),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ib() -> IAnn {
        let e = IExpr::Mu(
            "t".into(),
            Box::new(IExpr::Map(vec![("batchSizeReq".into(), oset(["batchSizeResp"]), IExpr::Var("t".into()))])),
        );
        IAnn::compile(&e).unwrap()
    }

    #[test]
    fn empty_is_least() {
        let one = IAnn::from_entries(vec![("op".into(), Effect::pure())]);
        assert!(IAnn::empty().leq(&one));
        assert!(!one.leq(&IAnn::empty()));
    }

    #[test]
    fn unfolding_is_equal() {
        let unfolded = IExpr::Map(vec![(
            "batchSizeReq".into(),
            oset(["batchSizeResp"]),
            IExpr::Mu(
                "u".into(),
                Box::new(IExpr::Map(vec![("batchSizeReq".into(), oset(["batchSizeResp"]), IExpr::Var("u".into()))])),
            ),
        )]);
        let u = IAnn::compile(&unfolded).unwrap();
        assert_eq!(u, ib());
        assert_eq!(ib().size(), 1);
    }

    #[test]
    fn ill_formed() {
        let open = IExpr::Var("t".into());
        assert_eq!(IAnn::compile(&open), Err(EffectError::Unbound("t".into())));
        let nc = IExpr::Mu("t".into(), Box::new(IExpr::Var("t".into())));
        assert_eq!(IAnn::compile(&nc), Err(EffectError::NotContractive("t".into())));
    }

    #[test]
    fn act_examples() {
        let e = Effect::new(
            OpSet::new(),
            IAnn::from_entries(vec![("op".into(), Effect::new(oset(["op2"]), IAnn::empty()))]),
        );
        assert_eq!(e.act("op"), Effect::new(oset(["op2"]), IAnn::empty()));
        let e2 = Effect::new(oset(["a"]), IAnn::empty());
        assert_eq!(e2.act("op"), e2);
        let b = Effect::new(OpSet::new(), ib());
        assert_eq!(b.act("batchSizeReq"), Effect::new(oset(["batchSizeResp"]), ib()));
    }

    #[test]
    fn roundtrip_expr() {
        let a = ib();
        assert_eq!(IAnn::compile(&a.to_expr()).unwrap(), a);
        assert_eq!(a.to_string(), "rec t0 . {batchSizeReq -> ({batchSizeResp}, t0)}");
    }

    #[test]
    fn top_absorbs_actions() {
        let sig = oset(["a", "b"]);
        let t = Effect::top(&sig);
        assert_eq!(t.act("a"), t);
        assert!(Effect::pure().leq(&t));
    }
}
