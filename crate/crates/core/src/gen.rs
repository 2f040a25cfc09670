//! Seeded random models, predicates, substitutions and graphs for
//! property suites and self-checks.

use crate::ast::{ArithOp, Domain, EventSystem, Expr, LValue, Pred, RelOp, Subst};
use indexmap::IndexMap;
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub type GenRng = ChaCha8Rng;

pub fn rng(seed: u64) -> GenRng {
    ChaCha8Rng::seed_from_u64(seed)
}

const NAMES: [&str; 3] = ["a", "b", "c"];
const RELS: [RelOp; 6] = [RelOp::Eq, RelOp::Ne, RelOp::Lt, RelOp::Le, RelOp::Gt, RelOp::Ge];

/// 1 to 3 integer variables sharing a range of 2 to 4 values.
pub fn random_vars(r: &mut GenRng) -> IndexMap<String, Domain> {
    let n = r.gen_range(1..=3);
    let k = r.gen_range(2..=4);
    NAMES[..n].iter().map(|v| (v.to_string(), Domain::IntRange(0, k - 1))).collect()
}

fn upper(vars: &IndexMap<String, Domain>) -> i64 {
    match vars.values().next() {
        Some(Domain::IntRange(_, hi)) => *hi,
        _ => 1,
    }
}

fn pick_var(r: &mut GenRng, vars: &IndexMap<String, Domain>) -> String {
    vars.keys().nth(r.gen_range(0..vars.len())).expect("nonempty").clone()
}

fn lit(r: &mut GenRng, hi: i64) -> Expr {
    Expr::Int(r.gen_range(0..=hi))
}

/// An atom that some value of `v` satisfies.
fn satisfiable_atom(r: &mut GenRng, v: &str, hi: i64) -> Pred {
    let x = Expr::var(v);
    match r.gen_range(0..4) {
        0 => Pred::rel(x, RelOp::Eq, lit(r, hi)),
        1 => Pred::rel(x, RelOp::Ne, lit(r, hi)),
        2 => Pred::rel(x, RelOp::Lt, Expr::Int(r.gen_range(1..=hi))),
        _ => Pred::rel(x, RelOp::Gt, Expr::Int(r.gen_range(0..hi))),
    }
}

fn event_body(r: &mut GenRng, vars: &IndexMap<String, Domain>) -> Subst {
    let hi = upper(vars);
    let d = Domain::IntRange(0, hi);
    let x = pick_var(r, vars);
    match r.gen_range(0..8) {
        0 | 1 => Subst::assign(&x, lit(r, hi)),
        2 => Subst::assign(&x, Expr::var(&pick_var(r, vars))),
        3 => {
            let z = Pred::rel(Expr::var("z"), *RELS.choose(r).expect("nonempty"), lit(r, hi));
            Subst::any("z", d, Subst::guard(z, Subst::assign(&x, Expr::var("z"))))
        }
        4 => Subst::guard(
            Pred::rel(Expr::var(&x), RelOp::Lt, Expr::Int(hi)),
            Subst::assign(&x, Expr::Arith(ArithOp::Add, Box::new(Expr::var(&x)), Box::new(Expr::Int(1)))),
        ),
        5 => {
            let y = pick_var(r, vars);
            Subst::If(
                Pred::rel(Expr::var(&y), RelOp::Eq, lit(r, hi)),
                Box::new(Subst::assign(&x, lit(r, hi))),
                Box::new(Subst::Skip),
            )
        }
        6 if vars.len() > 1 => {
            // `x, y := n, x`
            let mut names: Vec<&String> = vars.keys().collect();
            names.shuffle(r);
            let (x, y) = (names[0].clone(), names[1].clone());
            Subst::Assign(vec![(LValue::Var(x.clone()), lit(r, hi)), (LValue::Var(y), Expr::var(&x))])
        }
        _ => Subst::Skip,
    }
}

/// A random well-typed model whose reachable states stay in the domains.
pub fn random_model(r: &mut GenRng) -> EventSystem {
    let vars = random_vars(r);
    let hi = upper(&vars);
    let invariant = Pred::conj(vars.iter().map(|(v, d)| Pred::rel(Expr::var(v), RelOp::In, d.to_expr())));
    let init = Subst::Assign(vars.keys().map(|v| (LValue::Var(v.clone()), lit(r, hi))).collect());
    let mut events = IndexMap::new();
    for i in 0..r.gen_range(1..=4) {
        let mut body = event_body(r, &vars);
        if r.gen_bool(0.4) {
            body = Subst::choice(body, event_body(r, &vars));
        }
        let mut guard_vars: Vec<&String> = vars.keys().collect();
        guard_vars.shuffle(r);
        let atoms: Vec<Pred> =
            guard_vars.into_iter().take(r.gen_range(0..=2)).map(|v| satisfiable_atom(r, v, hi)).collect();
        if !atoms.is_empty() {
            body = Subst::guard(Pred::conj(atoms), body);
        }
        events.insert(format!("e{i}"), body);
    }
    EventSystem { vars, invariant, init, events }
}

/// A nonempty subset of the variables, in declaration order.
pub fn random_observed(r: &mut GenRng, m: &EventSystem) -> Vec<String> {
    loop {
        let pick: Vec<String> = m.vars.keys().filter(|_| r.gen_bool(0.5)).cloned().collect();
        if !pick.is_empty() {
            return pick;
        }
    }
}

fn term(r: &mut GenRng, vars: &IndexMap<String, Domain>, bound: &[String], hi: i64) -> Expr {
    if !bound.is_empty() && r.gen_bool(0.5) {
        return Expr::var(bound.choose(r).expect("nonempty"));
    }
    if r.gen_bool(0.65) {
        Expr::var(&pick_var(r, vars))
    } else {
        lit(r, hi)
    }
}

fn pred_in(r: &mut GenRng, vars: &IndexMap<String, Domain>, bound: &mut Vec<String>, depth: u32) -> Pred {
    let hi = upper(vars);
    let leaf = depth == 0 || r.gen_bool(0.3);
    if leaf {
        return match r.gen_range(0..12) {
            0 => Pred::True,
            1 => Pred::False,
            _ => {
                let a = term(r, vars, bound, hi);
                let b = term(r, vars, bound, hi);
                Pred::rel(a, *RELS.choose(r).expect("nonempty"), b)
            }
        };
    }
    match r.gen_range(0..6) {
        0 => Pred::not(pred_in(r, vars, bound, depth - 1)),
        1 => Pred::and(pred_in(r, vars, bound, depth - 1), pred_in(r, vars, bound, depth - 1)),
        2 => Pred::or(pred_in(r, vars, bound, depth - 1), pred_in(r, vars, bound, depth - 1)),
        3 => Pred::implies(pred_in(r, vars, bound, depth - 1), pred_in(r, vars, bound, depth - 1)),
        _ => {
            let z = format!("q{}", bound.len());
            bound.push(z.clone());
            let body = pred_in(r, vars, bound, depth - 1);
            bound.pop();
            let d = Domain::IntRange(0, hi);
            if r.gen_bool(0.5) {
                Pred::Forall(z, d, Box::new(body))
            } else {
                Pred::Exists(z, d, Box::new(body))
            }
        }
    }
}

/// A random state predicate of nesting depth at most `depth`.
pub fn random_pred(r: &mut GenRng, vars: &IndexMap<String, Domain>, depth: u32) -> Pred {
    pred_in(r, vars, &mut Vec::new(), depth)
}

fn subst_in(r: &mut GenRng, vars: &IndexMap<String, Domain>, locals: &mut Vec<String>, depth: u32) -> Subst {
    let hi = upper(vars);
    if depth == 0 || r.gen_bool(0.3) {
        if r.gen_bool(0.15) {
            return Subst::Skip;
        }
        let mut targets: Vec<&String> = vars.keys().collect();
        targets.shuffle(r);
        let n = r.gen_range(1..=targets.len().min(2));
        let pairs = targets[..n]
            .iter()
            .map(|v| {
                let rhs = if !locals.is_empty() && r.gen_bool(0.5) {
                    Expr::var(locals.choose(r).expect("nonempty"))
                } else if r.gen_bool(0.5) {
                    Expr::var(&pick_var(r, vars))
                } else {
                    lit(r, hi)
                };
                (LValue::Var((*v).clone()), rhs)
            })
            .collect();
        return Subst::Assign(pairs);
    }
    match r.gen_range(0..4) {
        0 => {
            let mut scope = locals.clone();
            Subst::guard(pred_in(r, vars, &mut scope, 1), subst_in(r, vars, locals, depth - 1))
        }
        1 => Subst::choice(subst_in(r, vars, locals, depth - 1), subst_in(r, vars, locals, depth - 1)),
        2 => {
            let z = format!("z{}", locals.len());
            locals.push(z.clone());
            let body = subst_in(r, vars, locals, depth - 1);
            locals.pop();
            Subst::any(&z, Domain::IntRange(0, hi), body)
        }
        _ => {
            let mut scope = locals.clone();
            let c = pred_in(r, vars, &mut scope, 1);
            Subst::If(c, Box::new(subst_in(r, vars, locals, depth - 1)), Box::new(subst_in(r, vars, locals, depth - 1)))
        }
    }
}

/// A random substitution whose assignments stay within the domains.
pub fn random_subst(r: &mut GenRng, vars: &IndexMap<String, Domain>, depth: u32) -> Subst {
    subst_in(r, vars, &mut Vec::new(), depth)
}

/// A directed multigraph with at most `max_v` vertices and `max_e` edges,
/// at least one edge.
pub fn random_graph(r: &mut GenRng, max_v: usize, max_e: usize) -> (usize, Vec<(usize, usize)>) {
    let n = r.gen_range(1..=max_v);
    let e = r.gen_range(1..=max_e);
    let edges = (0..e).map(|_| (r.gen_range(0..n), r.gen_range(0..n))).collect();
    (n, edges)
}

/// Like [`random_graph`] but strongly connected, by closing a random cycle
/// through every vertex first.
pub fn random_strong_graph(r: &mut GenRng, max_v: usize, max_e: usize) -> (usize, Vec<(usize, usize)>) {
    let n = r.gen_range(1..=max_v.min(max_e));
    let mut order: Vec<usize> = (0..n).collect();
    order.shuffle(r);
    let mut edges: Vec<(usize, usize)> = (0..n).map(|i| (order[i], order[(i + 1) % n])).collect();
    let extra = r.gen_range(0..=max_e - n);
    edges.extend((0..extra).map(|_| (r.gen_range(0..n), r.gen_range(0..n))));
    edges.shuffle(r);
    (n, edges)
}
