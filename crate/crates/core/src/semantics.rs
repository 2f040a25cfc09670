//! Explicit-state semantics: successor computation, labelled transition
//! systems, and refinement checks between a model and an abstraction.

use crate::ast::{assigned_vars, EventSystem, LValue, Subst};
use crate::eval::{eval_expr, eval_pred, Env, EvalError};
use crate::normalize::to_primitive;
use crate::value::{for_each_valuation, show_valuation, Valuation, Value};
use crate::wp::wp;
use serde::Serialize;
use std::collections::{BTreeMap, BTreeSet, HashMap, VecDeque};
use std::fmt::Write as _;
use thiserror::Error;

pub const DEFAULT_STATE_CAP: usize = 1_000_000;

/// Reachable-state cap: `EVB_STATE_CAP` if set and valid, else the default.
pub fn state_cap() -> usize {
    std::env::var("EVB_STATE_CAP").ok().and_then(|s| s.parse().ok()).unwrap_or(DEFAULT_STATE_CAP)
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum SemError {
    #[error(transparent)]
    Eval(#[from] EvalError),
    #[error("value {value} leaves the domain of `{var}`")]
    DomainOverflow { var: String, value: String },
    #[error("invariant violated in state {state} after trace [{}]", trace.join(", "))]
    InvariantViolation { trace: Vec<String>, state: String },
    #[error("more than {cap} reachable states")]
    StateCap { cap: usize },
    #[error("no event named `{0}`")]
    UnknownEvent(String),
}

fn exec_into(s: &Subst, m: &EventSystem, env: &mut Env, out: &mut BTreeSet<Valuation>) -> Result<(), SemError> {
    match s {
        Subst::Skip => {
            out.insert(env.cur.clone());
        }
        Subst::Assign(pairs) => {
            let mut next = env.cur.clone();
            for (lv, e) in pairs {
                let v = eval_expr(e, env)?;
                let (x, v) = match lv {
                    LValue::Var(x) => (x, v),
                    LValue::Apply(x, i) => {
                        let iv = eval_expr(i, env)?;
                        let mut f = match env.cur.get(x) {
                            Some(Value::Fn(f)) => f.clone(),
                            _ => return Err(EvalError::TypeMismatch(format!("`{x}` is not a function")).into()),
                        };
                        f.insert(iv, v);
                        (x, Value::Fn(f))
                    }
                };
                if !m.vars.get(x).is_some_and(|d| d.contains(&v)) {
                    return Err(SemError::DomainOverflow { var: x.clone(), value: v.to_string() });
                }
                next.insert(x.clone(), v);
            }
            out.insert(next);
        }
        Subst::Guard(p, body) => {
            if eval_pred(p, env)? {
                exec_into(body, m, env, out)?;
            }
        }
        Subst::Choice(a, b) => {
            exec_into(a, m, env, out)?;
            exec_into(b, m, env, out)?;
        }
        Subst::Any(z, d, body) => {
            for v in d.values() {
                env.push(z, v);
                let r = exec_into(body, m, env, out);
                env.pop();
                r?;
            }
        }
        Subst::If(p, a, b) => {
            if eval_pred(p, env)? {
                exec_into(a, m, env, out)?;
            } else {
                exec_into(b, m, env, out)?;
            }
        }
    }
    Ok(())
}

/// All states `S` can lead to from `state`.
pub fn exec(m: &EventSystem, s: &Subst, state: &Valuation) -> Result<BTreeSet<Valuation>, SemError> {
    let mut out = BTreeSet::new();
    exec_into(s, m, &mut Env::new(state), &mut out)?;
    Ok(out)
}

/// Successors of `state` by event `e`.
pub fn step(m: &EventSystem, state: &Valuation, e: &str) -> Result<BTreeSet<Valuation>, SemError> {
    let body = m.events.get(e).ok_or_else(|| SemError::UnknownEvent(e.to_string()))?;
    exec(m, body, state)
}

/// The state every variable of which holds the first value of its domain.
pub fn dummy_state(m: &EventSystem) -> Valuation {
    m.vars.iter().map(|(x, d)| (x.clone(), d.first_value())).collect()
}

/// States produced by the initialisation.
pub fn initial_states(m: &EventSystem) -> Result<BTreeSet<Valuation>, SemError> {
    exec(m, &m.init, &dummy_state(m))
}

#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Serialize)]
pub struct Transition {
    pub src: usize,
    pub label: String,
    pub dst: usize,
}

/// A labelled transition system with canonically numbered states.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct Lts {
    pub vars: Vec<String>,
    pub states: Vec<Valuation>,
    pub initial: Vec<usize>,
    pub labels: Vec<String>,
    /// Events that assign no variable; they only ever stutter.
    pub silent: Vec<String>,
    pub transitions: Vec<Transition>,
    /// Size of the product of the variable domains.
    pub domain_product: u128,
}

impl Lts {
    pub fn index_of(&self, s: &Valuation) -> Option<usize> {
        self.states.binary_search(s).ok()
    }

    pub fn successors(&self) -> Vec<Vec<(usize, usize)>> {
        let label_ix: HashMap<&str, usize> = self.labels.iter().enumerate().map(|(i, l)| (l.as_str(), i)).collect();
        let mut out = vec![Vec::new(); self.states.len()];
        for t in &self.transitions {
            out[t.src].push((label_ix[t.label.as_str()], t.dst));
        }
        out
    }

    pub fn to_dot(&self) -> String {
        let mut s = String::from("digraph lts {\n  rankdir=LR;\n  node [shape=box];\n");
        for (i, st) in self.states.iter().enumerate() {
            let style = if self.initial.contains(&i) { ", style=bold" } else { "" };
            let _ = writeln!(s, "  s{i} [label=\"{}\"{style}];", show_valuation(st).replace('"', "\\\""));
        }
        for t in &self.transitions {
            let dashed = if self.silent.contains(&t.label) { ", style=dashed" } else { "" };
            let _ = writeln!(s, "  s{} -> s{} [label=\"{}\"{dashed}];", t.src, t.dst, t.label);
        }
        s.push_str("}\n");
        s
    }
}

fn silent_events(m: &EventSystem) -> Vec<String> {
    m.events.iter().filter(|(_, s)| assigned_vars(s).is_empty()).map(|(n, _)| n.clone()).collect()
}

fn trace_to(parent: &HashMap<Valuation, Option<(Valuation, String)>>, s: &Valuation) -> Vec<String> {
    let mut trace = Vec::new();
    let mut cur = s.clone();
    while let Some(Some((p, l))) = parent.get(&cur) {
        trace.push(l.clone());
        cur = p.clone();
    }
    trace.reverse();
    trace
}

/// Breadth-first exploration from the initial states under [`state_cap`].
pub fn build_lts(m: &EventSystem) -> Result<Lts, SemError> {
    build_lts_capped(m, state_cap())
}

pub fn build_lts_capped(m: &EventSystem, cap: usize) -> Result<Lts, SemError> {
    let prim = crate::normalize::primitive_system(m);
    let mut parent: HashMap<Valuation, Option<(Valuation, String)>> = HashMap::new();
    let mut queue = VecDeque::new();
    let mut raw: Vec<(Valuation, String, Valuation)> = Vec::new();
    let check = |s: &Valuation, parent: &HashMap<Valuation, Option<(Valuation, String)>>| -> Result<(), SemError> {
        if eval_pred(&m.invariant, &mut Env::new(s))? {
            Ok(())
        } else {
            Err(SemError::InvariantViolation { trace: trace_to(parent, s), state: show_valuation(s) })
        }
    };
    let inits = initial_states(&prim)?;
    for s in &inits {
        parent.insert(s.clone(), None);
        check(s, &parent)?;
        queue.push_back(s.clone());
    }
    if parent.len() > cap {
        return Err(SemError::StateCap { cap });
    }
    while let Some(s) = queue.pop_front() {
        for (name, body) in &prim.events {
            for t in exec(&prim, body, &s)? {
                if !parent.contains_key(&t) {
                    parent.insert(t.clone(), Some((s.clone(), name.clone())));
                    check(&t, &parent)?;
                    if parent.len() > cap {
                        return Err(SemError::StateCap { cap });
                    }
                    queue.push_back(t.clone());
                }
                raw.push((s.clone(), name.clone(), t));
            }
        }
    }
    let mut states: Vec<Valuation> = parent.into_keys().collect();
    states.sort();
    let ix = |s: &Valuation| states.binary_search(s).expect("explored state");
    let mut transitions: Vec<Transition> =
        raw.iter().map(|(s, l, t)| Transition { src: ix(s), label: l.clone(), dst: ix(t) }).collect();
    transitions.sort();
    transitions.dedup();
    let mut initial: Vec<usize> = inits.iter().map(ix).collect();
    initial.sort();
    Ok(Lts {
        vars: m.vars.keys().cloned().collect(),
        initial,
        labels: m.events.keys().cloned().collect(),
        silent: silent_events(&prim),
        transitions,
        domain_product: m.vars.values().map(|d| d.size()).product(),
        states,
    })
}

/// Outcome of a check, with a witness when it fails.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct Verdict {
    pub holds: bool,
    /// Event labels leading to the failure; the last one is the offending step.
    pub trace: Vec<String>,
    pub reason: Option<String>,
}

impl Verdict {
    fn ok() -> Verdict {
        Verdict { holds: true, trace: vec![], reason: None }
    }

    fn fail(trace: Vec<String>, reason: String) -> Verdict {
        Verdict { holds: false, trace, reason: Some(reason) }
    }
}

/// Consistency: the initialisation establishes the invariant and every event
/// preserves it, checked over every state of the domain product.
pub fn check_correct(m: &EventSystem) -> Result<Verdict, SemError> {
    let prim = crate::normalize::primitive_system(m);
    for s in initial_states(&prim)? {
        if !eval_pred(&m.invariant, &mut Env::new(&s))? {
            return Ok(Verdict::fail(vec![], format!("initialisation reaches {}", show_valuation(&s))));
        }
    }
    let space: Vec<(String, Vec<Value>)> = m.vars.iter().map(|(x, d)| (x.clone(), d.values())).collect();
    let mut failure: Result<Option<Verdict>, SemError> = Ok(None);
    for_each_valuation(&space, |s| {
        let r = (|| -> Result<Option<Verdict>, SemError> {
            if !eval_pred(&m.invariant, &mut Env::new(s))? {
                return Ok(None);
            }
            for (name, body) in &prim.events {
                // [S]I, evaluated through the weakest precondition
                let pre = wp(body, &m.invariant);
                if !eval_pred(&pre, &mut Env::new(s))? {
                    return Ok(Some(Verdict::fail(
                        vec![name.clone()],
                        format!("{name} breaks the invariant from {}", show_valuation(s)),
                    )));
                }
            }
            Ok(None)
        })();
        match r {
            Ok(None) => true,
            other => {
                failure = other;
                false
            }
        }
    });
    Ok(failure?.unwrap_or_else(Verdict::ok))
}

fn project(s: &Valuation, x: &BTreeSet<String>) -> Valuation {
    s.iter().filter(|(k, _)| x.contains(*k)).map(|(k, v)| (k.clone(), v.clone())).collect()
}

/// Shortest label paths from the initial states to every reachable state.
fn bfs_paths(l: &Lts) -> Vec<Option<(usize, String)>> {
    let mut parent: Vec<Option<(usize, String)>> = vec![None; l.states.len()];
    let mut seen = vec![false; l.states.len()];
    let mut q = VecDeque::new();
    for &i in &l.initial {
        seen[i] = true;
        q.push_back(i);
    }
    let succ = l.successors();
    while let Some(s) = q.pop_front() {
        for &(li, t) in &succ[s] {
            if !seen[t] {
                seen[t] = true;
                parent[t] = Some((s, l.labels[li].clone()));
                q.push_back(t);
            }
        }
    }
    parent
}

fn path(parent: &[Option<(usize, String)>], mut s: usize) -> Vec<String> {
    let mut out = Vec::new();
    while let Some((p, l)) = &parent[s] {
        out.push(l.clone());
        s = *p;
    }
    out.reverse();
    out
}

struct Pairing<'a> {
    conc: &'a Lts,
    abs: &'a Lts,
    /// Abstract index of each concrete state's projection.
    image: Vec<Option<usize>>,
    abs_edges: BTreeSet<(usize, String, usize)>,
    parent: Vec<Option<(usize, String)>>,
}

impl<'a> Pairing<'a> {
    fn new(conc: &'a Lts, abs: &'a Lts) -> Self {
        let x: BTreeSet<String> = abs.vars.iter().cloned().collect();
        let image = conc.states.iter().map(|s| abs.index_of(&project(s, &x))).collect();
        let abs_edges = abs.transitions.iter().map(|t| (t.src, t.label.clone(), t.dst)).collect();
        Pairing { conc, abs, image, abs_edges, parent: bfs_paths(conc) }
    }

    /// Forward direction: each concrete step stutters on the abstract
    /// variables or is matched by the same event in the abstraction.
    fn forward(&self) -> Verdict {
        for &i in &self.conc.initial {
            match self.image[i] {
                Some(a) if self.abs.initial.contains(&a) => {}
                _ => {
                    return Verdict::fail(
                        vec![],
                        format!("initial state {} has no abstract counterpart", show_valuation(&self.conc.states[i])),
                    )
                }
            }
        }
        for t in &self.conc.transitions {
            let (Some(a), b) = (self.image[t.src], self.image[t.dst]) else {
                continue;
            };
            let ok = match b {
                Some(b) => a == b || self.abs_edges.contains(&(a, t.label.clone(), b)),
                None => false,
            };
            if !ok {
                let mut trace = path(&self.parent, t.src);
                trace.push(t.label.clone());
                return Verdict::fail(
                    trace,
                    format!(
                        "{} from {} is not matched in the abstraction",
                        t.label,
                        show_valuation(&self.conc.states[t.src])
                    ),
                );
            }
        }
        Verdict::ok()
    }

    /// Backward direction: each abstract step from the image of a reachable
    /// concrete state is matched by that concrete state, self-loops stuttering.
    fn backward(&self) -> Verdict {
        let covered: BTreeSet<usize> = self.conc.initial.iter().filter_map(|&i| self.image[i]).collect();
        for &a in &self.abs.initial {
            if !covered.contains(&a) {
                return Verdict::fail(
                    vec![],
                    format!("abstract initial state {} has no concrete counterpart", show_valuation(&self.abs.states[a])),
                );
            }
        }
        let mut conc_edges: BTreeMap<(usize, &str), BTreeSet<usize>> = BTreeMap::new();
        for t in &self.conc.transitions {
            if let Some(b) = self.image[t.dst] {
                conc_edges.entry((t.src, t.label.as_str())).or_default().insert(b);
            }
        }
        let mut by_src: BTreeMap<usize, Vec<&Transition>> = BTreeMap::new();
        for t in &self.abs.transitions {
            by_src.entry(t.src).or_default().push(t);
        }
        let reachable: Vec<bool> = {
            let mut r = vec![false; self.conc.states.len()];
            for &i in &self.conc.initial {
                r[i] = true;
            }
            for (i, p) in self.parent.iter().enumerate() {
                if p.is_some() {
                    r[i] = true;
                }
            }
            r
        };
        for (c, &img) in self.image.iter().enumerate() {
            let Some(a) = img else { continue };
            if !reachable[c] {
                continue;
            }
            for t in by_src.get(&a).into_iter().flatten() {
                if t.dst == a {
                    continue;
                }
                let matched = conc_edges.get(&(c, t.label.as_str())).is_some_and(|s| s.contains(&t.dst));
                if !matched {
                    let mut trace = path(&self.parent, c);
                    trace.push(t.label.clone());
                    return Verdict::fail(
                        trace,
                        format!(
                            "abstract {} to {} is not offered by concrete state {}",
                            t.label,
                            show_valuation(&self.abs.states[t.dst]),
                            show_valuation(&self.conc.states[c])
                        ),
                    );
                }
            }
        }
        Verdict::ok()
    }
}

/// Whether the abstraction (over a subset of the variables) simulates the
/// concrete system, steps that leave the abstract variables unchanged
/// counting as stuttering.
pub fn check_simulation(concrete: &Lts, abstraction: &Lts) -> Verdict {
    Pairing::new(concrete, abstraction).forward()
}

/// Stuttering bisimulation between a system and its abstraction, relating
/// each concrete state to its projection.
pub fn check_bisimulation(concrete: &Lts, abstraction: &Lts) -> Verdict {
    let p = Pairing::new(concrete, abstraction);
    let f = p.forward();
    if !f.holds {
        return f;
    }
    p.backward()
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum TraceRelation {
    Equal,
    /// Every trace of the left system is a trace of the right one, not conversely.
    LeftInFull,
    RightInFull,
    Incomparable,
}

/// Compares the visible trace languages of two systems. Events silent in
/// either system are hidden in both.
pub fn trace_relation(a: &Lts, b: &Lts) -> TraceRelation {
    let hidden: BTreeSet<&str> = a.silent.iter().chain(&b.silent).map(String::as_str).collect();
    let edges = |l: &'_ Lts| -> Vec<Vec<(Option<String>, usize)>> {
        let mut out = vec![Vec::new(); l.states.len()];
        for t in &l.transitions {
            let lab = (!hidden.contains(t.label.as_str())).then(|| t.label.clone());
            out[t.src].push((lab, t.dst));
        }
        out
    };
    let (ea, eb) = (edges(a), edges(b));
    let closure = |e: &Vec<Vec<(Option<String>, usize)>>, start: BTreeSet<usize>| {
        let mut set = start.clone();
        let mut stack: Vec<usize> = start.into_iter().collect();
        while let Some(s) = stack.pop() {
            for (l, t) in &e[s] {
                if l.is_none() && set.insert(*t) {
                    stack.push(*t);
                }
            }
        }
        set
    };
    let post = |e: &Vec<Vec<(Option<String>, usize)>>, from: &BTreeSet<usize>, lab: &str| {
        let mut out = BTreeSet::new();
        for &s in from {
            for (l, t) in &e[s] {
                if l.as_deref() == Some(lab) {
                    out.insert(*t);
                }
            }
        }
        closure(e, out)
    };
    let visible = |e: &Vec<Vec<(Option<String>, usize)>>, from: &BTreeSet<usize>| -> BTreeSet<String> {
        from.iter().flat_map(|&s| e[s].iter().filter_map(|(l, _)| l.clone())).collect()
    };
    let start = (closure(&ea, a.initial.iter().copied().collect()), closure(&eb, b.initial.iter().copied().collect()));
    let (mut a_in_b, mut b_in_a) = (true, true);
    if start.0.is_empty() != start.1.is_empty() {
        // one system has no behaviour at all, not even the empty trace
        if start.0.is_empty() {
            b_in_a = false;
        } else {
            a_in_b = false;
        }
    }
    let mut seen = BTreeSet::new();
    let mut stack = vec![start];
    while let Some((sa, sb)) = stack.pop() {
        if !seen.insert((sa.clone(), sb.clone())) {
            continue;
        }
        let labels: BTreeSet<String> = &visible(&ea, &sa) | &visible(&eb, &sb);
        for l in labels {
            let na = post(&ea, &sa, &l);
            let nb = post(&eb, &sb, &l);
            match (na.is_empty(), nb.is_empty()) {
                (false, true) => a_in_b = false,
                (true, false) => b_in_a = false,
                (false, false) => stack.push((na, nb)),
                (true, true) => {}
            }
        }
        if !a_in_b && !b_in_a {
            break;
        }
    }
    match (a_in_b, b_in_a) {
        (true, true) => TraceRelation::Equal,
        (true, false) => TraceRelation::LeftInFull,
        (false, true) => TraceRelation::RightInFull,
        (false, false) => TraceRelation::Incomparable,
    }
}

/// The before-after relation of `s` restricted to `x`, by execution: all
/// `(v, w|x)` with `w` a successor of `v`.
pub fn step_relation(
    m: &EventSystem,
    s: &Subst,
    v: &Valuation,
    x: &BTreeSet<String>,
) -> Result<BTreeSet<Valuation>, SemError> {
    Ok(exec(m, &to_primitive(s), v)?.iter().map(|w| project(w, x)).collect())
}
