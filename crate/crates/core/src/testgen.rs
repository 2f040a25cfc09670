//! Test generation from test purposes: TP automaton, synchronized product
//! with an abstraction's LTS, postman coverage and concrete instantiation.

use crate::ast::{EventSystem, Pred, Term};
use crate::eval::{holds, EvalError};
use crate::parser::{parse_pred, ParseError};
use crate::postman::{balance, euler_circuit, path_to, shortest_from, Arc};
use crate::semantics::{build_lts, Lts, SemError};
use crate::value::Valuation;
use serde::Serialize;
use std::cmp::Reverse;
use std::collections::{BTreeMap, BTreeSet, BinaryHeap, HashMap, VecDeque};
use std::fmt::Write as _;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum TestgenError {
    #[error("test purpose line {line}: {msg}")]
    Purpose { line: usize, msg: String },
    #[error("test purpose line {line}: {source}")]
    Target { line: usize, source: ParseError },
    #[error("no accepting state of the product is reachable")]
    EmptyProduct,
    #[error(transparent)]
    Eval(#[from] EvalError),
    #[error(transparent)]
    Sem(#[from] SemError),
}

#[derive(Clone, Debug, PartialEq)]
pub enum Step {
    Named(String),
    Wild,
    /// Any number of arbitrary events, then a state satisfying `target`.
    /// `bound: None` defers to twice the number of abstract states.
    WildStar { target: Pred, bound: Option<usize> },
    Reach(Pred),
}

#[derive(Clone, Debug, PartialEq, Default)]
pub struct TestPurpose {
    pub steps: Vec<Step>,
}

fn purpose_err(line: usize, msg: impl Into<String>) -> TestgenError {
    TestgenError::Purpose { line, msg: msg.into() }
}

fn parse_target(rest: &str, line: usize, m: &EventSystem) -> Result<(Pred, usize), TestgenError> {
    let rest_trim = rest.trim_start();
    let lead = rest.len() - rest_trim.len();
    let body = rest_trim.strip_prefix('"').ok_or_else(|| purpose_err(line, "expected a quoted predicate"))?;
    let end = body.find('"').ok_or_else(|| purpose_err(line, "unterminated predicate"))?;
    let p = parse_pred(&body[..end], m).map_err(|source| TestgenError::Target { line, source })?;
    if !p.free_primed().is_empty() {
        return Err(purpose_err(line, "targets are state predicates and cannot mention primed variables"));
    }
    Ok((p, lead + end + 2))
}

fn parse_step(src: &str, line: usize, m: &EventSystem) -> Result<Step, TestgenError> {
    let s = src.trim();
    if let Some(rest) = s.strip_prefix("_*") {
        let mut rest = rest.trim_start();
        let mut bound = None;
        if let Some(r) = rest.strip_prefix('[') {
            let close = r.find(']').ok_or_else(|| purpose_err(line, "missing `]`"))?;
            let n: usize = r[..close].trim().parse().map_err(|_| purpose_err(line, "bound must be a positive integer"))?;
            if n == 0 {
                return Err(purpose_err(line, "bound must be a positive integer"));
            }
            bound = Some(n);
            rest = r[close + 1..].trim_start();
        }
        let rest = rest.strip_prefix("->").ok_or_else(|| purpose_err(line, "expected `->` after `_*`"))?;
        let (target, used) = parse_target(rest, line, m)?;
        if !rest[used..].trim().is_empty() {
            return Err(purpose_err(line, "unexpected text after predicate"));
        }
        return Ok(Step::WildStar { target, bound });
    }
    if s == "_" {
        return Ok(Step::Wild);
    }
    if s.starts_with('"') {
        let (target, used) = parse_target(s, line, m)?;
        if !s[used..].trim().is_empty() {
            return Err(purpose_err(line, "unexpected text after predicate"));
        }
        return Ok(Step::Reach(target));
    }
    let ident = s.chars().next().is_some_and(|c| c.is_alphabetic()) && s.chars().all(|c| c.is_alphanumeric() || c == '_');
    if ident {
        Ok(Step::Named(s.to_string()))
    } else {
        Err(purpose_err(line, format!("malformed step `{s}`")))
    }
}

/// Splits on `;` outside quoted predicates.
fn split_steps(line: &str) -> Vec<&str> {
    let mut out = Vec::new();
    let (mut start, mut quoted) = (0, false);
    for (i, c) in line.char_indices() {
        match c {
            '"' => quoted = !quoted,
            ';' if !quoted => {
                out.push(&line[start..i]);
                start = i + 1;
            }
            _ => {}
        }
    }
    out.push(&line[start..]);
    out
}

/// Parses one test purpose per non-blank line; `//` starts a comment.
/// Targets are typed against the (abstract) model `m`.
pub fn parse_purposes(text: &str, m: &EventSystem) -> Result<Vec<(String, TestPurpose)>, TestgenError> {
    let mut out = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        let line = strip_comment(raw).trim();
        if line.is_empty() {
            continue;
        }
        let steps = split_steps(line).into_iter().map(|s| parse_step(s, i + 1, m)).collect::<Result<_, _>>()?;
        out.push((line.to_string(), TestPurpose { steps }));
    }
    Ok(out)
}

fn strip_comment(line: &str) -> &str {
    let mut quoted = false;
    let b = line.as_bytes();
    for i in 0..b.len() {
        match b[i] {
            b'"' => quoted = !quoted,
            b'/' if !quoted && b.get(i + 1) == Some(&b'/') => return &line[..i],
            _ => {}
        }
    }
    line
}

#[derive(Clone, Debug, PartialEq)]
pub enum EdgeLabel {
    Event(String),
    Any,
    /// Silent move taken when the current state satisfies the predicate.
    Guard(Pred),
}

#[derive(Clone, Debug, PartialEq)]
pub struct TpEdge {
    pub from: usize,
    pub to: usize,
    pub label: EdgeLabel,
}

#[derive(Clone, Debug, PartialEq)]
pub struct TpAutomaton {
    pub states: usize,
    pub initial: usize,
    pub accepting: usize,
    pub edges: Vec<TpEdge>,
    /// Loop bound per state, for the self-loops of `_*` steps.
    pub bounds: BTreeMap<usize, Option<usize>>,
}

/// A linear automaton: state `i` precedes step `i`, the last state accepts.
pub fn compile_tp(tp: &TestPurpose) -> TpAutomaton {
    let mut edges = Vec::new();
    let mut bounds = BTreeMap::new();
    for (i, step) in tp.steps.iter().enumerate() {
        let next = |label| TpEdge { from: i, to: i + 1, label };
        match step {
            Step::Named(e) => edges.push(next(EdgeLabel::Event(e.clone()))),
            Step::Wild => edges.push(next(EdgeLabel::Any)),
            Step::Reach(p) => edges.push(next(EdgeLabel::Guard(p.clone()))),
            Step::WildStar { target, bound } => {
                edges.push(TpEdge { from: i, to: i, label: EdgeLabel::Any });
                edges.push(next(EdgeLabel::Guard(target.clone())));
                bounds.insert(i, *bound);
            }
        }
    }
    TpAutomaton { states: tp.steps.len() + 1, initial: 0, accepting: tp.steps.len(), edges, bounds }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct ProductTransition {
    pub src: usize,
    pub label: String,
    pub dst: usize,
}

/// A self-loop of the abstraction taken while the TP stays in place.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Serialize)]
pub struct Reflexive {
    pub lts_state: usize,
    pub label: String,
    pub tp_state: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SyncProduct {
    /// Pairs (abstraction state, TP state).
    pub states: Vec<(usize, usize)>,
    pub initial: Vec<usize>,
    pub accepting: Vec<bool>,
    pub transitions: Vec<ProductTransition>,
    pub reflexive: Vec<Reflexive>,
}

fn guard_holds(p: &Pred, s: &Valuation) -> Result<bool, TestgenError> {
    Ok(holds(p, s)?)
}

/// TP states reachable from `q` by guard moves in abstraction state `s`.
fn closure(tp: &TpAutomaton, s: &Valuation, q: usize) -> Result<Vec<usize>, TestgenError> {
    let mut out = vec![q];
    let mut i = 0;
    while i < out.len() {
        let cur = out[i];
        for e in tp.edges.iter().filter(|e| e.from == cur) {
            if let EdgeLabel::Guard(p) = &e.label {
                if !out.contains(&e.to) && guard_holds(p, s)? {
                    out.push(e.to);
                }
            }
        }
        i += 1;
    }
    Ok(out)
}

/// Reachable product of `a` with `tp`. Loops of `_*` steps are expanded at
/// most `bound` times along any path into a product state.
pub fn sync_product(a: &Lts, tp: &TpAutomaton) -> Result<SyncProduct, TestgenError> {
    let default_bound = 2 * a.states.len().max(1);
    let mut index: HashMap<(usize, usize), usize> = HashMap::new();
    let mut states = Vec::new();
    let mut depth: Vec<usize> = Vec::new();
    let mut heap = BinaryHeap::new();
    let mut intern = |st: (usize, usize), d: usize, states: &mut Vec<(usize, usize)>, depth: &mut Vec<usize>, heap: &mut BinaryHeap<_>| -> usize {
        match index.get(&st) {
            Some(&i) => {
                if d < depth[i] {
                    depth[i] = d;
                    heap.push(Reverse((d, i)));
                }
                i
            }
            None => {
                let i = states.len();
                index.insert(st, i);
                states.push(st);
                depth.push(d);
                heap.push(Reverse((d, i)));
                i
            }
        }
    };
    let mut initial = Vec::new();
    for &s0 in &a.initial {
        for q in closure(tp, &a.states[s0], tp.initial)? {
            let i = intern((s0, q), 0, &mut states, &mut depth, &mut heap);
            if !initial.contains(&i) {
                initial.push(i);
            }
        }
    }
    let succ = a.successors();
    let mut edges: BTreeSet<(usize, usize, usize)> = BTreeSet::new();
    let mut reflexive = BTreeSet::new();
    let mut expanded: HashMap<usize, usize> = HashMap::new();
    while let Some(Reverse((d, i))) = heap.pop() {
        if d > depth[i] || expanded.get(&i).is_some_and(|&e| e <= d) {
            continue;
        }
        expanded.insert(i, d);
        let (s, q) = states[i];
        for &(l, t) in &succ[s] {
            let label = &a.labels[l];
            for e in tp.edges.iter().filter(|e| e.from == q) {
                let stay = e.to == q;
                let matches = match &e.label {
                    EdgeLabel::Event(name) => name == label,
                    EdgeLabel::Any => true,
                    EdgeLabel::Guard(_) => false,
                };
                if !matches {
                    continue;
                }
                let nd = if stay {
                    if t == s {
                        reflexive.insert(Reflexive { lts_state: s, label: label.clone(), tp_state: q });
                        continue;
                    }
                    let bound = tp.bounds.get(&q).copied().flatten().unwrap_or(default_bound);
                    if d >= bound {
                        continue;
                    }
                    d + 1
                } else {
                    0
                };
                for q2 in closure(tp, &a.states[t], e.to)? {
                    let d2 = if q2 == q && stay { nd } else { 0 };
                    let j = intern((t, q2), d2, &mut states, &mut depth, &mut heap);
                    edges.insert((i, l, j));
                }
            }
        }
    }
    let accepting: Vec<bool> = states.iter().map(|&(_, q)| q == tp.accepting).collect();
    if !accepting.iter().any(|&b| b) {
        return Err(TestgenError::EmptyProduct);
    }
    let transitions =
        edges.into_iter().map(|(src, l, dst)| ProductTransition { src, label: a.labels[l].clone(), dst }).collect();
    Ok(SyncProduct { states, initial, accepting, transitions, reflexive: reflexive.into_iter().collect() })
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct AbstractStep {
    pub event: String,
    pub src: Valuation,
    pub dst: Valuation,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct AbstractTest {
    pub steps: Vec<AbstractStep>,
    /// Product transitions traversed, by index.
    #[serde(skip)]
    pub path: Vec<usize>,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Cover {
    pub tests: Vec<AbstractTest>,
    /// Product transitions on some initial-to-accepting path.
    pub coverable: Vec<usize>,
    /// Product transitions on no initial-to-accepting path.
    pub unreachable: Vec<usize>,
}

impl Cover {
    pub fn total_length(&self) -> usize {
        self.tests.iter().map(|t| t.steps.len()).sum()
    }

    pub fn covered(&self) -> BTreeSet<usize> {
        self.tests.iter().flat_map(|t| t.path.iter().copied()).collect()
    }
}

fn reach(n: usize, adj: &[Vec<usize>], from: &[usize]) -> Vec<bool> {
    let mut seen = vec![false; n];
    let mut q: VecDeque<usize> = from.iter().copied().collect();
    for &f in from {
        seen[f] = true;
    }
    while let Some(v) = q.pop_front() {
        for &w in &adj[v] {
            if !seen[w] {
                seen[w] = true;
                q.push_back(w);
            }
        }
    }
    seen
}

fn find(parent: &mut [usize], v: usize) -> usize {
    let mut r = v;
    while parent[r] != r {
        r = parent[r];
    }
    let mut v = v;
    while parent[v] != r {
        let next = parent[v];
        parent[v] = r;
        v = next;
    }
    r
}

/// Paths from initial to accepting product states that together traverse
/// every coverable transition, with minimum total length of a single closed
/// tour through a virtual root joining accepting states back to initial ones.
pub fn postman_cover(sp: &SyncProduct, a: &Lts) -> Cover {
    let n = sp.states.len();
    let mut fwd = vec![Vec::new(); n];
    let mut bwd = vec![Vec::new(); n];
    for t in &sp.transitions {
        fwd[t.src].push(t.dst);
        bwd[t.dst].push(t.src);
    }
    let from_init = reach(n, &fwd, &sp.initial);
    let accepting: Vec<usize> = (0..n).filter(|&i| sp.accepting[i]).collect();
    let to_acc = reach(n, &bwd, &accepting);
    let (coverable, unreachable): (Vec<usize>, Vec<usize>) =
        (0..sp.transitions.len()).partition(|&i| from_init[sp.transitions[i].src] && to_acc[sp.transitions[i].dst]);

    let root = n;
    let mut arcs: Vec<Arc> =
        coverable.iter().map(|&i| Arc { from: sp.transitions[i].src, to: sp.transitions[i].dst, cost: 1 }).collect();
    let n_req = arcs.len();
    for &s in &sp.initial {
        arcs.push(Arc { from: root, to: s, cost: 0 });
    }
    for &s in &accepting {
        if from_init[s] {
            arcs.push(Arc { from: s, to: root, cost: 0 });
        }
    }
    let mut multiset: Vec<usize> = (0..n_req).collect();
    multiset.extend(balance(n + 1, &arcs, &multiset).expect("coverable arcs lie on root cycles"));

    // join components that the root does not reach
    let mut parent: Vec<usize> = (0..=n).collect();
    for &i in &multiset {
        let (x, y) = (find(&mut parent, arcs[i].from), find(&mut parent, arcs[i].to));
        parent[x] = y;
    }
    let (_, from_root) = shortest_from(n + 1, &arcs, root);
    let mut joined = BTreeSet::new();
    for &i in &multiset.clone() {
        let v = arcs[i].from;
        let c = find(&mut parent, v);
        if c == find(&mut parent, root) || !joined.insert(c) {
            continue;
        }
        let (_, from_v) = shortest_from(n + 1, &arcs, v);
        multiset.extend(path_to(&arcs, &from_root, v));
        multiset.extend(path_to(&arcs, &from_v, root));
        let r = find(&mut parent, root);
        parent[c] = r;
    }

    let mut tests = Vec::new();
    if n_req > 0 {
        let circuit = euler_circuit(n + 1, &arcs, &multiset, root).expect("balanced connected multigraph");
        let mut cur: Vec<usize> = Vec::new();
        for i in circuit {
            if i < n_req {
                cur.push(coverable[i]);
            } else if arcs[i].to == root && !cur.is_empty() {
                tests.push(std::mem::take(&mut cur));
            }
        }
        debug_assert!(cur.is_empty());
    }
    let tests = tests
        .into_iter()
        .map(|path| {
            let steps = path
                .iter()
                .map(|&i| {
                    let t = &sp.transitions[i];
                    AbstractStep {
                        event: t.label.clone(),
                        src: a.states[sp.states[t.src].0].clone(),
                        dst: a.states[sp.states[t.dst].0].clone(),
                    }
                })
                .collect();
            AbstractTest { steps, path }
        })
        .collect();
    Cover { tests, coverable, unreachable }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct ConcreteStep {
    pub event: String,
    pub before: Valuation,
    pub after: Valuation,
    /// Inserted between abstract steps; not part of the abstract test.
    pub padding: bool,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Default)]
pub struct InstantiatedTest {
    pub steps: Vec<ConcreteStep>,
}

#[derive(Debug, Error)]
pub enum InstantiateError {
    #[error("abstract step {step} has no concrete counterpart")]
    NoPath { step: usize, prefix: InstantiatedTest },
    #[error("abstract step {step} not reached within the depth budget")]
    DepthExceeded { step: usize, prefix: InstantiatedTest },
}

impl InstantiateError {
    pub fn prefix(&self) -> &InstantiatedTest {
        match self {
            Self::NoPath { prefix, .. } | Self::DepthExceeded { prefix, .. } => prefix,
        }
    }
}

/// Replays abstract tests on a concrete LTS.
pub struct Instantiator {
    lts: Lts,
    proj: Vec<Valuation>,
    succ: Vec<Vec<(usize, usize)>>,
    padding: BTreeSet<String>,
}

fn project(s: &Valuation, x: &BTreeSet<String>) -> Valuation {
    s.iter().filter(|(k, _)| x.contains(*k)).map(|(k, v)| (k.clone(), v.clone())).collect()
}

impl Instantiator {
    /// `x` names the abstract variables; `padding` the labels that may be
    /// inserted between abstract steps.
    pub fn new(m: &EventSystem, x: &BTreeSet<String>, padding: BTreeSet<String>) -> Result<Self, SemError> {
        let lts = build_lts(m)?;
        Ok(Self::from_lts(lts, x, padding))
    }

    pub fn from_lts(lts: Lts, x: &BTreeSet<String>, padding: BTreeSet<String>) -> Self {
        let proj = lts.states.iter().map(|s| project(s, x)).collect();
        let succ = lts.successors();
        Self { lts, proj, succ, padding }
    }

    fn path_of(&self, trail: &[(usize, usize, usize, bool)]) -> InstantiatedTest {
        InstantiatedTest {
            steps: trail
                .iter()
                .map(|&(src, l, dst, padding)| ConcreteStep {
                    event: self.lts.labels[l].clone(),
                    before: self.lts.states[src].clone(),
                    after: self.lts.states[dst].clone(),
                    padding,
                })
                .collect(),
        }
    }

    /// Breadth-first search for a concrete run; at most `max_depth` padding
    /// steps precede each abstract step.
    pub fn instantiate(&self, t: &AbstractTest, max_depth: usize) -> Result<InstantiatedTest, InstantiateError> {
        let Some(first) = t.steps.first() else {
            return Ok(InstantiatedTest::default());
        };
        type Trail = Vec<(usize, usize, usize, bool)>;
        let mut frontier: BTreeMap<usize, Trail> =
            self.lts.initial.iter().filter(|&&c| self.proj[c] == first.src).map(|&c| (c, Vec::new())).collect();
        let mut best: Trail = Vec::new();
        for (k, step) in t.steps.iter().enumerate() {
            let mut next: BTreeMap<usize, Trail> = BTreeMap::new();
            let mut seen: BTreeSet<usize> = frontier.keys().copied().collect();
            let mut layer: Vec<(usize, Trail)> = frontier.into_iter().collect();
            let mut truncated = false;
            for depth in 0..=max_depth {
                let mut grow = Vec::new();
                for (c, trail) in &layer {
                    if trail.len() > best.len() {
                        best = trail.clone();
                    }
                    for &(l, d) in &self.succ[*c] {
                        let label = &self.lts.labels[l];
                        if *label == step.event && self.proj[d] == step.dst {
                            next.entry(d).or_insert_with(|| {
                                let mut tr = trail.clone();
                                tr.push((*c, l, d, false));
                                tr
                            });
                        } else if self.padding.contains(label) && self.proj[d] == step.src && !seen.contains(&d) {
                            if depth == max_depth {
                                truncated = true;
                                continue;
                            }
                            seen.insert(d);
                            let mut tr = trail.clone();
                            tr.push((*c, l, d, true));
                            grow.push((d, tr));
                        }
                    }
                }
                if grow.is_empty() {
                    break;
                }
                layer = grow;
            }
            if next.is_empty() {
                let prefix = self.path_of(&best);
                return Err(if truncated {
                    InstantiateError::DepthExceeded { step: k, prefix }
                } else {
                    InstantiateError::NoPath { step: k, prefix }
                });
            }
            frontier = next;
        }
        let trail = frontier.into_values().next().expect("nonempty frontier");
        Ok(self.path_of(&trail))
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CoverageReport {
    pub purpose: String,
    pub tests: usize,
    pub instantiated: usize,
    /// `instantiated / tests`, absent when there are no tests.
    pub ratio: Option<f64>,
    pub product_transitions: usize,
    pub reflexive: usize,
    pub coverable: usize,
    pub covered: usize,
    pub unreachable: usize,
    pub total_length: usize,
    pub abstraction_transitions: usize,
    pub abstraction_covered: usize,
    pub empty_product: bool,
}

impl CoverageReport {
    pub fn empty(purpose: &str, a: &Lts) -> Self {
        Self {
            purpose: purpose.to_string(),
            tests: 0,
            instantiated: 0,
            ratio: None,
            product_transitions: 0,
            reflexive: 0,
            coverable: 0,
            covered: 0,
            unreachable: 0,
            total_length: 0,
            abstraction_transitions: a.transitions.len(),
            abstraction_covered: 0,
            empty_product: true,
        }
    }

    /// Share of coverable product transitions that the tests traverse.
    pub fn coverage(&self) -> Option<f64> {
        (self.coverable > 0).then(|| self.covered as f64 / self.coverable as f64)
    }
}

/// Tallies one pipeline run.
pub fn report(
    purpose: &str,
    a: &Lts,
    sp: &SyncProduct,
    cover: &Cover,
    results: &[Result<InstantiatedTest, InstantiateError>],
) -> CoverageReport {
    let covered = cover.covered();
    let abs_covered: BTreeSet<(usize, &str, usize)> = covered
        .iter()
        .map(|&i| {
            let t = &sp.transitions[i];
            (sp.states[t.src].0, t.label.as_str(), sp.states[t.dst].0)
        })
        .collect();
    let tests = cover.tests.len();
    let instantiated = results.iter().filter(|r| r.is_ok()).count();
    CoverageReport {
        purpose: purpose.to_string(),
        tests,
        instantiated,
        ratio: (tests > 0).then(|| instantiated as f64 / tests as f64),
        product_transitions: sp.transitions.len(),
        reflexive: sp.reflexive.len(),
        coverable: cover.coverable.len(),
        covered: covered.len(),
        unreachable: cover.unreachable.len(),
        total_length: cover.total_length(),
        abstraction_transitions: a.transitions.len(),
        abstraction_covered: abs_covered.len(),
        empty_product: false,
    }
}

/// Aligned text table, one row per report.
pub fn report_table(reports: &[CoverageReport]) -> String {
    let header = ["purpose", "inst/tests", "ratio", "SP cover", "A cover", "unreach", "refl", "length", "note"];
    let rows: Vec<Vec<String>> = reports
        .iter()
        .map(|r| {
            vec![
                r.purpose.clone(),
                format!("{}/{}", r.instantiated, r.tests),
                r.ratio.map_or("-".into(), |x| format!("{x:.2}")),
                format!("{}/{}", r.covered, r.coverable),
                format!("{}/{}", r.abstraction_covered, r.abstraction_transitions),
                r.unreachable.to_string(),
                r.reflexive.to_string(),
                r.total_length.to_string(),
                if r.empty_product { "empty product".into() } else { String::new() },
            ]
        })
        .collect();
    let mut widths: Vec<usize> = header.iter().map(|h| h.len()).collect();
    for row in &rows {
        for (w, c) in widths.iter_mut().zip(row) {
            *w = (*w).max(c.chars().count());
        }
    }
    let mut out = String::new();
    let mut line = |cells: Vec<String>| {
        let text: Vec<String> = cells.iter().zip(&widths).map(|(c, w)| format!("{c:<w$}")).collect();
        let _ = writeln!(out, "{}", text.join("  ").trim_end());
    };
    line(header.iter().map(|h| h.to_string()).collect());
    for row in rows {
        line(row);
    }
    out
}

/// Outcome of one test purpose through the whole pipeline.
#[derive(Debug)]
pub struct PurposeRun {
    pub purpose: String,
    pub tests: Vec<AbstractTest>,
    pub results: Vec<Result<InstantiatedTest, InstantiateError>>,
    pub report: CoverageReport,
}

/// Runs every purpose against the abstraction `abs` of `m`.
pub fn run_pipeline(
    m: &EventSystem,
    abs: &EventSystem,
    purposes: &[(String, TestPurpose)],
    max_depth: usize,
) -> Result<Vec<PurposeRun>, TestgenError> {
    let a = build_lts(abs)?;
    let concrete = build_lts(m)?;
    let x: BTreeSet<String> = abs.vars.keys().cloned().collect();
    let mut runs = Vec::new();
    for (text, tp) in purposes {
        let sp = match sync_product(&a, &compile_tp(tp)) {
            Err(TestgenError::EmptyProduct) => {
                runs.push(PurposeRun {
                    purpose: text.clone(),
                    tests: vec![],
                    results: vec![],
                    report: CoverageReport::empty(text, &a),
                });
                continue;
            }
            other => other?,
        };
        let cover = postman_cover(&sp, &a);
        let padding: BTreeSet<String> = sp.reflexive.iter().map(|r| r.label.clone()).collect();
        let inst = Instantiator::from_lts(concrete.clone(), &x, padding);
        let results: Vec<_> = cover.tests.iter().map(|t| inst.instantiate(t, max_depth)).collect();
        let report = report(text, &a, &sp, &cover, &results);
        runs.push(PurposeRun { purpose: text.clone(), tests: cover.tests, results, report });
    }
    Ok(runs)
}
