//! Choice of the abstract variables from a set of observed ones.

use crate::ast::{rhs_vars_of_assignments_to, Domain, EventSystem, Pred, Subst, Term};
use crate::eval::{equivalent, eval_pred, Env};
use crate::normalize::to_primitive;
use crate::transform::t_subst;
use crate::value::Valuation;
use crate::wp::{mod_pred_init, mod_inductive, replace_pred, replace_primed_pred, Replacement};
use indexmap::IndexMap;
use serde::Serialize;
use std::collections::BTreeSet;
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum VarSelectError {
    #[error("`{0}` is not a variable of the model")]
    UnknownVariable(String),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Provenance {
    Observed,
    Relevant,
}

/// Abstract variables in declaration order, each tagged with why it was kept.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct VarSet {
    pub names: Vec<String>,
    pub provenance: IndexMap<String, Provenance>,
}

impl VarSet {
    pub fn set(&self) -> BTreeSet<String> {
        self.names.iter().cloned().collect()
    }

    pub fn contains(&self, x: &str) -> bool {
        self.provenance.contains_key(x)
    }

    fn build(m: &EventSystem, observed: &BTreeSet<String>, all: &BTreeSet<String>) -> VarSet {
        let names: Vec<String> = m.vars.keys().filter(|x| all.contains(*x)).cloned().collect();
        let provenance = names
            .iter()
            .map(|x| {
                let p = if observed.contains(x) { Provenance::Observed } else { Provenance::Relevant };
                (x.clone(), p)
            })
            .collect();
        VarSet { names, provenance }
    }
}

/// How the relevant variables are computed.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Method {
    /// Right-hand sides of assignments to abstract variables.
    DataFlow,
    /// Free variables of the simplified modification predicates.
    DataControlFlow,
}

fn check_observed(m: &EventSystem, observed: &[String]) -> Result<BTreeSet<String>, VarSelectError> {
    for x in observed {
        if !m.vars.contains_key(x) {
            return Err(VarSelectError::UnknownVariable(x.clone()));
        }
    }
    Ok(observed.iter().cloned().collect())
}

fn bodies(m: &EventSystem) -> Vec<Subst> {
    std::iter::once(&m.init).chain(m.events.values()).map(to_primitive).collect()
}

pub fn select(m: &EventSystem, observed: &[String], method: Method) -> Result<VarSet, VarSelectError> {
    match method {
        Method::DataFlow => select_dataflow(m, observed),
        Method::DataControlFlow => select_dataflow_controlflow(m, observed),
    }
}

/// Least set containing `observed` and closed under "x := E with x kept
/// makes the state variables of E kept".
pub fn select_dataflow(m: &EventSystem, observed: &[String]) -> Result<VarSet, VarSelectError> {
    let obs = check_observed(m, observed)?;
    let bodies = bodies(m);
    let mut cur = obs.clone();
    loop {
        let mut next = cur.clone();
        for s in &bodies {
            for x in &cur {
                next.extend(rhs_vars_of_assignments_to(s, x).into_iter().filter(|v| m.vars.contains_key(v)));
            }
        }
        if next == cur {
            return Ok(VarSet::build(m, &obs, &cur));
        }
        cur = next;
    }
}

/// Variables a modification predicate for `x` depends on, after simplification.
pub fn relevant_for(m: &EventSystem, x: &BTreeSet<String>) -> BTreeSet<String> {
    let mut out = BTreeSet::new();
    let init = simplify(&m.vars, &mod_pred_init(&to_primitive(&m.init), x));
    out.extend(init.free_vars());
    for s in m.events.values() {
        let p = simplify(&m.vars, &mod_inductive(&to_primitive(s), x));
        out.extend(p.free_vars());
    }
    out.retain(|v| m.vars.contains_key(v));
    out
}

/// Least set containing `observed` and the free variables of every simplified
/// modification predicate of the set.
pub fn select_dataflow_controlflow(m: &EventSystem, observed: &[String]) -> Result<VarSet, VarSelectError> {
    let obs = check_observed(m, observed)?;
    let mut cur = obs.clone();
    if cur.is_empty() {
        return Ok(VarSet::build(m, &obs, &cur));
    }
    loop {
        let mut next = cur.clone();
        next.extend(relevant_for(m, &cur));
        if next == cur {
            next.extend(unfaithful_vars(m, &cur));
            if next == cur {
                return Ok(VarSet::build(m, &obs, &cur));
            }
        }
        cur = next;
    }
}

/// Simplification may drop guard variables whose guards are jointly
/// unsatisfiable, and the abstraction then weakens those guards to `true`.
/// For every section whose abstraction on `x` changes the modification
/// predicate, returns the free variables of its unsimplified predicate.
pub fn unfaithful_vars(m: &EventSystem, x: &BTreeSet<String>) -> BTreeSet<String> {
    let mut out = BTreeSet::new();
    let sections = std::iter::once((true, &m.init)).chain(m.events.values().map(|s| (false, s)));
    for (is_init, s) in sections {
        let s = to_primitive(s);
        let Ok(t) = t_subst(&s, x) else { continue };
        let modp = |s: &Subst| if is_init { mod_pred_init(s, x) } else { mod_inductive(s, x) };
        let concrete = modp(&s);
        if equivalent(&m.vars, &concrete, &modp(&t)) != Ok(None) {
            out.extend(concrete.free_vars());
        }
    }
    out.retain(|v| m.vars.contains_key(v));
    out
}

// ---- simplification ----

fn is_dual(a: &Pred, b: &Pred) -> bool {
    match (a, b) {
        (Pred::Rel(x, o, y), Pred::Rel(u, p, v)) => x == u && y == v && o.dual() == *p,
        (Pred::Not(x), y) | (y, Pred::Not(x)) => **x == *y,
        _ => false,
    }
}

/// `(a & q) or (not a & q)` becomes `q`, over all pairs of disjuncts.
fn merge_complements(disjuncts: Vec<Pred>) -> Vec<Pred> {
    let mut ds: Vec<Vec<Pred>> = disjuncts.iter().map(|d| d.conjuncts().into_iter().cloned().collect()).collect();
    'outer: loop {
        for i in 0..ds.len() {
            for j in i + 1..ds.len() {
                if ds[i].len() != ds[j].len() {
                    continue;
                }
                let diff: Vec<usize> = (0..ds[i].len()).filter(|k| ds[i][*k] != ds[j][*k]).collect();
                if diff.len() == 1 && is_dual(&ds[i][diff[0]], &ds[j][diff[0]]) {
                    let mut merged = ds[i].clone();
                    merged.remove(diff[0]);
                    ds.remove(j);
                    ds[i] = merged;
                    continue 'outer;
                }
            }
        }
        break;
    }
    ds.into_iter().map(Pred::conj).collect()
}

fn and_s(a: Pred, b: Pred) -> Pred {
    match (a, b) {
        (Pred::False, _) | (_, Pred::False) => Pred::False,
        (Pred::True, q) | (q, Pred::True) => q,
        (a, b) if a == b => a,
        (a, b) => Pred::and(a, b),
    }
}

fn or_s(a: Pred, b: Pred) -> Pred {
    match (a, b) {
        (Pred::True, _) | (_, Pred::True) => Pred::True,
        (Pred::False, q) | (q, Pred::False) => q,
        (a, b) if a == b => a,
        (a, b) => Pred::or(a, b),
    }
}

/// Unit and absorption laws, folding of ground comparisons and complement merging.
pub fn fold(p: &Pred) -> Pred {
    match p {
        Pred::True | Pred::False => p.clone(),
        Pred::Rel(..) => {
            if p.free_refs().is_empty() {
                let empty = Valuation::new();
                match eval_pred(p, &mut Env::new(&empty)) {
                    Ok(true) => Pred::True,
                    Ok(false) => Pred::False,
                    Err(_) => p.clone(),
                }
            } else {
                p.clone()
            }
        }
        Pred::Not(q) => match fold(q) {
            Pred::True => Pred::False,
            Pred::False => Pred::True,
            Pred::Not(r) => *r,
            Pred::Rel(a, op, b) => Pred::Rel(a, op.dual(), b),
            r => Pred::not(r),
        },
        Pred::And(a, b) => and_s(fold(a), fold(b)),
        Pred::Or(a, b) => {
            let r = or_s(fold(a), fold(b));
            if matches!(r, Pred::Or(..)) {
                let ds: Vec<Pred> = r.disjuncts().into_iter().cloned().collect();
                let n = ds.len();
                let merged = merge_complements(ds);
                if merged.len() < n {
                    return fold(&Pred::disj(merged));
                }
            }
            r
        }
        Pred::Implies(a, b) => match (fold(a), fold(b)) {
            (Pred::False, _) | (_, Pred::True) => Pred::True,
            (Pred::True, q) => q,
            (q, Pred::False) => fold(&Pred::not(q)),
            (a, b) => Pred::implies(a, b),
        },
        Pred::Forall(z, d, q) | Pred::Exists(z, d, q) => {
            let body = fold(q);
            // domains are nonempty
            if matches!(body, Pred::True | Pred::False) || !body.free_roots().contains(z) {
                return body;
            }
            if matches!(p, Pred::Forall(..)) {
                Pred::Forall(z.clone(), d.clone(), Box::new(body))
            } else {
                Pred::Exists(z.clone(), d.clone(), Box::new(body))
            }
        }
    }
}

/// Equivalence-preserving simplification that removes every free variable
/// the predicate does not semantically depend on.
pub fn simplify(vars: &IndexMap<String, Domain>, p: &Pred) -> Pred {
    let mut cur = fold(p);
    loop {
        let mut changed = false;
        for r in cur.free_refs() {
            let Some(d) = vars.get(&r.name) else { continue };
            let map: Replacement = [(r.name.clone(), d.first_value().to_expr())].into();
            let inst = if r.primed { replace_primed_pred(&cur, &map) } else { replace_pred(&cur, &map) };
            if let Ok(None) = equivalent(vars, &cur, &inst) {
                cur = fold(&inst);
                changed = true;
                break;
            }
        }
        if !changed {
            return cur;
        }
    }
}

/// State variables of `m` free in `p`.
pub fn free_state_vars(m: &EventSystem, p: &Pred) -> BTreeSet<String> {
    p.free_vars().into_iter().filter(|v| m.vars.contains_key(v)).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ast::{Expr, RelOp};
    use crate::models::electrical;
    use crate::parser::parse_model;

    fn names(v: &VarSet) -> Vec<&str> {
        v.names.iter().map(String::as_str).collect()
    }

    #[test]
    fn electrical_bat_needs_nothing_else() {
        let m = electrical();
        let o = vec!["Bat".to_string()];
        assert_eq!(names(&select_dataflow(&m, &o).unwrap()), ["Bat"]);
        assert_eq!(names(&select_dataflow_controlflow(&m, &o).unwrap()), ["Bat"]);
    }

    #[test]
    fn electrical_h_pulls_in_bat_under_control_flow() {
        let m = electrical();
        let o = vec!["H".to_string()];
        assert_eq!(names(&select_dataflow(&m, &o).unwrap()), ["H"]);
        let v = select_dataflow_controlflow(&m, &o).unwrap();
        assert_eq!(names(&v), ["H", "Bat"]);
        assert_eq!(v.provenance["H"], Provenance::Observed);
        assert_eq!(v.provenance["Bat"], Provenance::Relevant);
    }

    #[test]
    fn contradictory_guards_keep_their_variables() {
        // the modification predicate of e for {c} is false, yet abstracting
        // on {c} alone would let e set c
        let m = parse_model(
            "VARS a : 0..1 b : 0..1 c : 0..1\nINIT a, b, c := 0, 1, 0\n\
             EVENT e == a < 1 & b /= 0 ==> IF a = 1 THEN c := 1 ELSE skip END",
        )
        .unwrap();
        let c = BTreeSet::from(["c".to_string()]);
        assert!(relevant_for(&m, &c).is_empty());
        assert_eq!(unfaithful_vars(&m, &c), BTreeSet::from(["a".to_string(), "b".to_string(), "c".to_string()]));
        assert_eq!(names(&select_dataflow_controlflow(&m, &["c".into()]).unwrap()), ["a", "b", "c"]);
    }

    #[test]
    fn one_step_data_flow_and_empty_set() {
        let m = parse_model("VARS x : 0..2 y : 0..2\nINIT x, y := 0, 0\nEVENT e == x := y").unwrap();
        assert_eq!(names(&select_dataflow(&m, &["x".into()]).unwrap()), ["x", "y"]);
        assert!(select_dataflow(&m, &[]).unwrap().names.is_empty());
        assert!(select_dataflow_controlflow(&m, &[]).unwrap().names.is_empty());
        assert!(matches!(select_dataflow(&m, &["q".into()]), Err(VarSelectError::UnknownVariable(_))));
    }

    #[test]
    fn never_assigned_variable_stays_alone() {
        let m = parse_model("VARS x : 0..2 y : 0..2\nINIT x, y := 0, 0\nEVENT e == x = 1 ==> y := x").unwrap();
        assert_eq!(names(&select_dataflow_controlflow(&m, &["x".into()]).unwrap()), ["x"]);
    }

    #[test]
    fn simplify_laws() {
        let vars: IndexMap<String, Domain> =
            ["x", "y"].iter().map(|v| (v.to_string(), Domain::IntRange(0, 2))).collect();
        let a = Pred::rel(Expr::primed("x"), RelOp::Eq, Expr::Int(1));
        assert_eq!(simplify(&vars, &Pred::and(a.clone(), Pred::True)), a);
        assert_eq!(simplify(&vars, &Pred::and(Pred::False, a.clone())), Pred::False);
        let y = Pred::rel(Expr::var("y"), RelOp::Eq, Expr::Int(0));
        let p = Pred::or(Pred::and(y.clone(), a.clone()), Pred::and(Pred::not(y.clone()), a.clone()));
        let s = simplify(&vars, &p);
        assert_eq!(s, a);
        assert_eq!(equivalent(&vars, &p, &s), Ok(None));
    }

    #[test]
    fn simplify_drops_semantically_irrelevant_variable() {
        let vars: IndexMap<String, Domain> =
            ["x", "y"].iter().map(|v| (v.to_string(), Domain::IntRange(0, 2))).collect();
        // x < 3 holds everywhere in 0..2, so y's disjunct is irrelevant
        let p = Pred::or(Pred::rel(Expr::var("x"), RelOp::Lt, Expr::Int(3)), Pred::rel(Expr::var("y"), RelOp::Eq, Expr::Int(1)));
        assert_eq!(simplify(&vars, &p), Pred::True);
    }
}
