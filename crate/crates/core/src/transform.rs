//! Syntactic abstraction: elimination of the non-abstract variables.

use crate::ast::{EventSystem, LValue, Pred, Subst, Term};
use crate::normalize::{is_cf, to_cf, to_primitive, NormalizeError};
use std::collections::BTreeSet;
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum TransformError {
    #[error("predicate is not in conjunctive form")]
    NotInCF,
    #[error("`{0}` is not a variable of the model")]
    UnknownVariable(String),
    #[error("in {section}, `{target}` is kept but its new value reads {}", missing.join(", "))]
    NotClosed { section: String, target: String, missing: Vec<String> },
    #[error(transparent)]
    Normalize(#[from] NormalizeError),
}

fn and_s(a: Pred, b: Pred) -> Pred {
    match (a, b) {
        (Pred::False, _) | (_, Pred::False) => Pred::False,
        (Pred::True, q) | (q, Pred::True) => q,
        (a, b) => Pred::and(a, b),
    }
}

fn or_s(a: Pred, b: Pred) -> Pred {
    match (a, b) {
        (Pred::True, _) | (_, Pred::True) => Pred::True,
        (Pred::False, q) | (q, Pred::False) => q,
        (a, b) => Pred::or(a, b),
    }
}

fn t_cf(p: &Pred, x: &BTreeSet<String>) -> Pred {
    match p {
        Pred::True | Pred::False => p.clone(),
        // primed occurrences count as their root
        Pred::Rel(..) => {
            if p.free_roots().is_subset(x) {
                p.clone()
            } else {
                Pred::True
            }
        }
        Pred::And(a, b) => and_s(t_cf(a, x), t_cf(b, x)),
        Pred::Or(a, b) => or_s(t_cf(a, x), t_cf(b, x)),
        Pred::Forall(z, d, q) | Pred::Exists(z, d, q) => {
            let mut xz = x.clone();
            xz.insert(z.clone());
            match t_cf(q, &xz) {
                Pred::True => Pred::True,
                body if matches!(p, Pred::Forall(..)) => Pred::Forall(z.clone(), d.clone(), Box::new(body)),
                body => Pred::Exists(z.clone(), d.clone(), Box::new(body)),
            }
        }
        Pred::Not(_) | Pred::Implies(..) => unreachable!("conjunctive form has no negation or implication"),
    }
}

/// Transforms a predicate, bringing it to conjunctive form first.
pub fn t_pred(p: &Pred, x: &BTreeSet<String>) -> Result<Pred, TransformError> {
    Ok(t_cf(&to_cf(p)?, x))
}

/// Transforms a predicate that must already be in conjunctive form.
pub fn t_pred_strict(p: &Pred, x: &BTreeSet<String>) -> Result<Pred, TransformError> {
    if !is_cf(p) {
        return Err(TransformError::NotInCF);
    }
    Ok(t_cf(p, x))
}

/// Transforms a substitution; non-primitive input is normalized first.
pub fn t_subst(s: &Subst, x: &BTreeSet<String>) -> Result<Subst, TransformError> {
    Ok(match s {
        Subst::Skip => Subst::Skip,
        Subst::Assign(pairs) => {
            if pairs.iter().any(|(lv, _)| matches!(lv, LValue::Apply(..))) {
                return t_subst(&to_primitive(s), x);
            }
            let kept: Vec<_> = pairs.iter().filter(|(lv, _)| x.contains(lv.root())).cloned().collect();
            if kept.is_empty() {
                Subst::Skip
            } else {
                Subst::Assign(kept)
            }
        }
        Subst::Guard(p, body) => Subst::guard(t_pred(p, x)?, t_subst(body, x)?),
        Subst::Choice(a, b) => Subst::choice(t_subst(a, x)?, t_subst(b, x)?),
        Subst::Any(z, d, body) => {
            let mut xz = x.clone();
            xz.insert(z.clone());
            Subst::any(z, d.clone(), t_subst(body, &xz)?)
        }
        Subst::If(..) => return t_subst(&to_primitive(s), x),
    })
}

/// Every behaviour of `a` is a behaviour of `b`.
fn subsumed(a: &Subst, b: &Subst) -> bool {
    if a == b {
        return true;
    }
    match a {
        Subst::Guard(_, a1) => subsumed(a1, b),
        Subst::Any(z, _, a1) => !b.free_roots().contains(z) && subsumed(a1, b),
        _ => false,
    }
}

/// Display cleanup: `true ==> S` becomes `S`, and a choice branch whose
/// behaviours are all offered by the other branch is dropped.
pub fn cleanup(s: &Subst) -> Subst {
    match s {
        Subst::Guard(Pred::True, body) => cleanup(body),
        Subst::Guard(p, body) => Subst::guard(p.clone(), cleanup(body)),
        Subst::Choice(a, b) => {
            let (a, b) = (cleanup(a), cleanup(b));
            if subsumed(&a, &b) {
                b
            } else if subsumed(&b, &a) {
                a
            } else {
                Subst::choice(a, b)
            }
        }
        Subst::Any(z, d, body) => Subst::any(z, d.clone(), cleanup(body)),
        Subst::If(p, a, b) => Subst::If(p.clone(), Box::new(cleanup(a)), Box::new(cleanup(b))),
        Subst::Skip | Subst::Assign(_) => s.clone(),
    }
}

/// Checks that every kept assignment only reads kept variables.
pub fn check_closed(m: &EventSystem, x: &BTreeSet<String>) -> Result<(), TransformError> {
    let sections = std::iter::once(("INIT".to_string(), &m.init))
        .chain(m.events.iter().map(|(n, s)| (format!("event {n}"), s)));
    for (section, s) in sections {
        for target in x {
            let reads = crate::ast::rhs_vars_of_assignments_to(&to_primitive(s), target);
            let missing: Vec<String> =
                reads.into_iter().filter(|v| m.vars.contains_key(v) && !x.contains(v)).collect();
            if !missing.is_empty() {
                return Err(TransformError::NotClosed { section, target: target.clone(), missing });
            }
        }
    }
    Ok(())
}

/// The abstraction of `m` on the variables `x`.
pub fn abstract_system(m: &EventSystem, x: &[String]) -> Result<EventSystem, TransformError> {
    for v in x {
        if !m.vars.contains_key(v) {
            return Err(TransformError::UnknownVariable(v.clone()));
        }
    }
    let xs: BTreeSet<String> = x.iter().cloned().collect();
    check_closed(m, &xs)?;
    let abs = |s: &Subst| -> Result<Subst, TransformError> { Ok(cleanup(&t_subst(&to_primitive(s), &xs)?)) };
    let mut events = indexmap::IndexMap::new();
    for (name, s) in &m.events {
        events.insert(name.clone(), abs(s)?);
    }
    Ok(EventSystem {
        vars: m.vars.iter().filter(|(v, _)| xs.contains(*v)).map(|(v, d)| (v.clone(), d.clone())).collect(),
        invariant: t_pred(&m.invariant, &xs)?,
        init: abs(&m.init)?,
        events,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ast::{Domain, Expr, RelOp};
    use crate::models::{electrical, ELECTRICAL_BAT};
    use crate::parser::{parse_model, parse_pred};
    use crate::print::{pred_to_string, pretty_print};

    fn set(xs: &[&str]) -> BTreeSet<String> {
        xs.iter().map(|s| s.to_string()).collect()
    }

    #[test]
    fn electrical_invariant_keeps_bat_typing() {
        let m = electrical();
        let t = t_pred(&m.invariant, &set(&["Bat"])).unwrap();
        assert_eq!(pred_to_string(&t), "Bat : 1..3 --> {ok, ko}");
    }

    #[test]
    fn disjunction_with_unknown_side_becomes_true() {
        let m = parse_model("VARS x : 0..2 y : 0..2").unwrap();
        let p = parse_pred("x = 1 or y = 2", &m).unwrap();
        assert_eq!(t_pred(&p, &set(&["x"])).unwrap(), Pred::True);
    }

    #[test]
    fn quantifier_extends_the_set() {
        let m = parse_model("VARS x : 0..3").unwrap();
        let p = parse_pred("!z : 1..3 . (z : 1..3 => x /= z)", &m).unwrap();
        let t = t_pred(&p, &set(&["x"])).unwrap();
        assert_eq!(pred_to_string(&t), "!z : 1..3 . (z /: 1..3 or x /= z)");
        assert!(matches!(t_pred_strict(&p, &set(&["x"])), Err(TransformError::NotInCF)));
    }

    #[test]
    fn multiple_assignment_keeps_abstract_targets() {
        let s = Subst::Assign(vec![
            (LValue::Var("x".into()), Expr::Int(1)),
            (LValue::Var("y".into()), Expr::Int(2)),
        ]);
        assert_eq!(t_subst(&s, &set(&["x"])).unwrap(), Subst::assign("x", Expr::Int(1)));
        assert_eq!(t_subst(&s, &set(&[])).unwrap(), Subst::Skip);
    }

    #[test]
    fn electrical_abstraction_matches_golden_text() {
        let a = abstract_system(&electrical(), &["Bat".into()]).unwrap();
        assert_eq!(pretty_print(&a), ELECTRICAL_BAT);
    }

    #[test]
    fn full_variable_set_is_identity_up_to_normal_form() {
        let m = electrical();
        let all: Vec<String> = m.vars.keys().cloned().collect();
        let a = abstract_system(&m, &all).unwrap();
        assert_eq!(a.vars, m.vars);
        for (n, s) in &m.events {
            assert_eq!(a.events[n], cleanup(&to_primitive(s)));
        }
    }

    #[test]
    fn closure_is_enforced() {
        let m = parse_model("VARS x : 0..2 y : 0..2\nINIT x, y := 0, 0\nEVENT e == x := y").unwrap();
        assert!(matches!(abstract_system(&m, &["x".into()]), Err(TransformError::NotClosed { .. })));
        assert!(abstract_system(&m, &["x".into(), "y".into()]).is_ok());
        // {H} is closed in the electrical system: H only ever receives literals
        assert!(abstract_system(&electrical(), &["H".into()]).is_ok());
    }

    #[test]
    fn guard_skip_is_kept() {
        let s = Subst::guard(Pred::rel(Expr::var("x"), RelOp::Eq, Expr::Int(0)), Subst::Skip);
        assert_eq!(cleanup(&s), s);
        let any = Subst::any("z", Domain::IntRange(0, 1), Subst::guard(Pred::True, Subst::Skip));
        assert_eq!(cleanup(&Subst::choice(any, Subst::Skip)), Subst::Skip);
    }
}
