//! Weakest preconditions, before-after predicates and modification predicates.

use crate::ast::{Expr, LValue, Pred, RelOp, Subst, Term};
use crate::normalize::to_primitive;
use std::collections::{BTreeMap, BTreeSet};

/// Every identifier occurring in a term, bound or free.
fn names_expr(e: &Expr, out: &mut BTreeSet<String>) {
    out.extend(e.free_roots());
}

fn names_pred(p: &Pred, out: &mut BTreeSet<String>) {
    match p {
        Pred::True | Pred::False => {}
        Pred::Rel(a, _, b) => {
            names_expr(a, out);
            names_expr(b, out);
        }
        Pred::Not(q) => names_pred(q, out),
        Pred::And(a, b) | Pred::Or(a, b) | Pred::Implies(a, b) => {
            names_pred(a, out);
            names_pred(b, out);
        }
        Pred::Forall(z, _, q) | Pred::Exists(z, _, q) => {
            out.insert(z.clone());
            names_pred(q, out);
        }
    }
}

fn names_subst(s: &Subst, out: &mut BTreeSet<String>) {
    match s {
        Subst::Skip => {}
        Subst::Assign(pairs) => {
            for (lv, e) in pairs {
                out.insert(lv.root().to_string());
                if let LValue::Apply(_, i) = lv {
                    names_expr(i, out);
                }
                names_expr(e, out);
            }
        }
        Subst::Guard(p, s) => {
            names_pred(p, out);
            names_subst(s, out);
        }
        Subst::Choice(a, b) => {
            names_subst(a, out);
            names_subst(b, out);
        }
        Subst::Any(z, _, s) => {
            out.insert(z.clone());
            names_subst(s, out);
        }
        Subst::If(p, a, b) => {
            names_pred(p, out);
            names_subst(a, out);
            names_subst(b, out);
        }
    }
}

fn fresh(base: &str, avoid: &BTreeSet<String>) -> String {
    (1..).map(|k| format!("{base}_{k}")).find(|n| !avoid.contains(n)).expect("unbounded")
}

/// Simultaneous replacement of unprimed variables; primed occurrences are untouched.
pub type Replacement = BTreeMap<String, Expr>;

pub fn replace_expr(e: &Expr, map: &Replacement) -> Expr {
    let r = |x: &Expr| Box::new(replace_expr(x, map));
    match e {
        Expr::Var(x) => map.get(x).cloned().unwrap_or_else(|| e.clone()),
        Expr::Primed(_) | Expr::Int(_) | Expr::Enum(_) => e.clone(),
        Expr::Apply(a, b) => Expr::Apply(r(a), r(b)),
        Expr::Card(a) => Expr::Card(r(a)),
        Expr::Dom(a) => Expr::Dom(r(a)),
        Expr::RanRestrict(a, b) => Expr::RanRestrict(r(a), r(b)),
        Expr::Override(a, b) => Expr::Override(r(a), r(b)),
        Expr::Arith(op, a, b) => Expr::Arith(*op, r(a), r(b)),
        Expr::Range(a, b) => Expr::Range(r(a), r(b)),
        Expr::FnSpace(a, b) => Expr::FnSpace(r(a), r(b)),
        Expr::SetLit(items) => Expr::SetLit(items.iter().map(|x| replace_expr(x, map)).collect()),
        Expr::Maplets(ps) => Expr::Maplets(ps.iter().map(|(k, v)| (replace_expr(k, map), replace_expr(v, map))).collect()),
    }
}

/// Replaces primed occurrences `x'` by the given expressions.
pub fn replace_primed_expr(e: &Expr, map: &Replacement) -> Expr {
    let r = |x: &Expr| Box::new(replace_primed_expr(x, map));
    match e {
        Expr::Primed(x) => map.get(x).cloned().unwrap_or_else(|| e.clone()),
        Expr::Var(_) | Expr::Int(_) | Expr::Enum(_) => e.clone(),
        Expr::Apply(a, b) => Expr::Apply(r(a), r(b)),
        Expr::Card(a) => Expr::Card(r(a)),
        Expr::Dom(a) => Expr::Dom(r(a)),
        Expr::RanRestrict(a, b) => Expr::RanRestrict(r(a), r(b)),
        Expr::Override(a, b) => Expr::Override(r(a), r(b)),
        Expr::Arith(op, a, b) => Expr::Arith(*op, r(a), r(b)),
        Expr::Range(a, b) => Expr::Range(r(a), r(b)),
        Expr::FnSpace(a, b) => Expr::FnSpace(r(a), r(b)),
        Expr::SetLit(items) => Expr::SetLit(items.iter().map(|x| replace_primed_expr(x, map)).collect()),
        Expr::Maplets(ps) => {
            Expr::Maplets(ps.iter().map(|(k, v)| (replace_primed_expr(k, map), replace_primed_expr(v, map))).collect())
        }
    }
}

/// Capture-avoiding simultaneous substitution in a predicate.
pub fn replace_pred(p: &Pred, map: &Replacement) -> Pred {
    map_pred(p, map, &|e, m| replace_expr(e, m))
}

pub fn replace_primed_pred(p: &Pred, map: &Replacement) -> Pred {
    map_pred(p, map, &|e, m| replace_primed_expr(e, m))
}

fn map_pred(p: &Pred, map: &Replacement, f: &dyn Fn(&Expr, &Replacement) -> Expr) -> Pred {
    match p {
        Pred::True | Pred::False => p.clone(),
        Pred::Rel(a, op, b) => Pred::Rel(f(a, map), *op, f(b, map)),
        Pred::Not(q) => Pred::not(map_pred(q, map, f)),
        Pred::And(a, b) => Pred::and(map_pred(a, map, f), map_pred(b, map, f)),
        Pred::Or(a, b) => Pred::or(map_pred(a, map, f), map_pred(b, map, f)),
        Pred::Implies(a, b) => Pred::implies(map_pred(a, map, f), map_pred(b, map, f)),
        Pred::Forall(z, d, q) | Pred::Exists(z, d, q) => {
            let mut inner = map.clone();
            inner.remove(z);
            let captured = inner.values().any(|e| e.free_roots().contains(z));
            let (z2, body) = if captured {
                let mut avoid = BTreeSet::new();
                names_pred(q, &mut avoid);
                for e in inner.values() {
                    names_expr(e, &mut avoid);
                }
                avoid.extend(inner.keys().cloned());
                let z2 = fresh(z, &avoid);
                let ren: Replacement = [(z.clone(), Expr::Var(z2.clone()))].into();
                (z2, replace_pred(q, &ren))
            } else {
                (z.clone(), (**q).clone())
            };
            let body = Box::new(map_pred(&body, &inner, f));
            if matches!(p, Pred::Forall(..)) {
                Pred::Forall(z2, d.clone(), body)
            } else {
                Pred::Exists(z2, d.clone(), body)
            }
        }
    }
}

/// Renames the free occurrences of a local `z` inside a substitution.
fn rename_subst(s: &Subst, z: &str, to: &str) -> Subst {
    let map: Replacement = [(z.to_string(), Expr::var(to))].into();
    match s {
        Subst::Skip => Subst::Skip,
        Subst::Assign(pairs) => Subst::Assign(
            pairs
                .iter()
                .map(|(lv, e)| {
                    let lv = match lv {
                        LValue::Var(_) => lv.clone(),
                        LValue::Apply(x, i) => LValue::Apply(x.clone(), replace_expr(i, &map)),
                    };
                    (lv, replace_expr(e, &map))
                })
                .collect(),
        ),
        Subst::Guard(p, b) => Subst::guard(replace_pred(p, &map), rename_subst(b, z, to)),
        Subst::Choice(a, b) => Subst::choice(rename_subst(a, z, to), rename_subst(b, z, to)),
        Subst::Any(y, _, _) if y == z => s.clone(),
        Subst::Any(y, d, b) => Subst::any(y, d.clone(), rename_subst(b, z, to)),
        Subst::If(p, a, b) => {
            Subst::If(replace_pred(p, &map), Box::new(rename_subst(a, z, to)), Box::new(rename_subst(b, z, to)))
        }
    }
}

/// `[S]P`.
pub fn wp(s: &Subst, p: &Pred) -> Pred {
    match s {
        Subst::Skip => p.clone(),
        Subst::Assign(pairs) => {
            if pairs.iter().any(|(lv, _)| matches!(lv, LValue::Apply(..))) {
                return wp(&to_primitive(s), p);
            }
            let map: Replacement = pairs.iter().map(|(lv, e)| (lv.root().to_string(), e.clone())).collect();
            replace_pred(p, &map)
        }
        Subst::Guard(g, body) => Pred::implies(g.clone(), wp(body, p)),
        Subst::Choice(a, b) => Pred::and(wp(a, p), wp(b, p)),
        Subst::Any(z, d, body) => {
            if p.free_roots().contains(z) {
                let mut avoid = BTreeSet::new();
                names_pred(p, &mut avoid);
                names_subst(body, &mut avoid);
                let z2 = fresh(z, &avoid);
                Pred::Forall(z2.clone(), d.clone(), Box::new(wp(&rename_subst(body, z, &z2), p)))
            } else {
                Pred::Forall(z.clone(), d.clone(), Box::new(wp(body, p)))
            }
        }
        Subst::If(..) => wp(&to_primitive(s), p),
    }
}

fn frame(x: &BTreeSet<String>) -> Pred {
    Pred::conj(x.iter().map(|v| Pred::rel(Expr::var(v), RelOp::Eq, Expr::primed(v))))
}

fn changed<'a>(x: impl IntoIterator<Item = &'a String>) -> Pred {
    Pred::disj(x.into_iter().map(|v| Pred::rel(Expr::var(v), RelOp::Ne, Expr::primed(v))))
}

/// `Prd_X(S) = not [S] not (x = x' for x in X)`.
pub fn prd(s: &Subst, x: &BTreeSet<String>) -> Pred {
    Pred::not(wp(s, &Pred::not(frame(x))))
}

/// Modification predicate by definition: `Prd_X(S) & (x /= x' for some x in X)`.
pub fn mod_defined(s: &Subst, x: &BTreeSet<String>) -> Pred {
    if x.is_empty() {
        return Pred::False;
    }
    Pred::and(prd(s, x), changed(x))
}

/// The initialisation has no before-state, so its modification predicate is
/// the before-after predicate without the change disjunct.
pub fn mod_pred_init(init: &Subst, x: &BTreeSet<String>) -> Pred {
    prd(init, x)
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

/// Modification predicate by induction on primitive substitutions.
pub fn mod_inductive(s: &Subst, x: &BTreeSet<String>) -> Pred {
    mod_rec(s, x, &BTreeSet::new())
}

// `locals` are the binders added to X by enclosing `Any`; their frame
// equation `z' = z` is eliminated by the one-point rule.
fn mod_rec(s: &Subst, x: &BTreeSet<String>, locals: &BTreeSet<String>) -> Pred {
    match s {
        Subst::Skip => Pred::False,
        Subst::Assign(pairs) => {
            if pairs.iter().any(|(lv, _)| matches!(lv, LValue::Apply(..))) {
                return mod_rec(&to_primitive(s), x, locals);
            }
            let targets: BTreeMap<&str, &Expr> = pairs.iter().map(|(lv, e)| (lv.root(), e)).collect();
            let a: Vec<&String> = x.iter().filter(|v| targets.contains_key(v.as_str())).collect();
            if a.is_empty() {
                return Pred::False;
            }
            let post = Pred::conj(a.iter().map(|v| Pred::rel(Expr::primed(v), RelOp::Eq, targets[v.as_str()].clone())));
            let keep = Pred::conj(
                x.iter()
                    .filter(|v| !targets.contains_key(v.as_str()) && !locals.contains(*v))
                    .map(|v| Pred::rel(Expr::primed(v), RelOp::Eq, Expr::var(v))),
            );
            and_s(and_s(post, keep), changed(a))
        }
        Subst::Guard(p, body) => and_s(p.clone(), mod_rec(body, x, locals)),
        Subst::Choice(a, b) => or_s(mod_rec(a, x, locals), mod_rec(b, x, locals)),
        Subst::Any(z, d, body) => {
            let mut x2 = x.clone();
            x2.insert(z.clone());
            let mut l2 = locals.clone();
            l2.insert(z.clone());
            match mod_rec(body, &x2, &l2) {
                Pred::False => Pred::False,
                inner => Pred::Exists(z.clone(), d.clone(), Box::new(inner)),
            }
        }
        Subst::If(..) => mod_rec(&to_primitive(s), x, locals),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ast::Domain;
    use crate::eval::equivalent;
    use indexmap::IndexMap;

    fn vars() -> IndexMap<String, Domain> {
        ["x", "y"].iter().map(|v| (v.to_string(), Domain::IntRange(0, 2))).collect()
    }

    fn gt0(e: Expr) -> Pred {
        Pred::rel(e, RelOp::Gt, Expr::Int(0))
    }

    fn set(xs: &[&str]) -> BTreeSet<String> {
        xs.iter().map(|s| s.to_string()).collect()
    }

    #[test]
    fn wp_of_skip_and_assign() {
        let p = gt0(Expr::var("x"));
        assert_eq!(wp(&Subst::Skip, &p), p);
        let e = Expr::Arith(crate::ast::ArithOp::Add, Box::new(Expr::var("y")), Box::new(Expr::Int(1)));
        assert_eq!(wp(&Subst::assign("x", e.clone()), &p), gt0(e));
    }

    #[test]
    fn wp_of_choice_is_conjunction() {
        let s = Subst::choice(Subst::assign("x", Expr::Int(1)), Subst::assign("x", Expr::Int(2)));
        let p = Pred::rel(Expr::var("x"), RelOp::Eq, Expr::Int(1));
        assert_eq!(
            wp(&s, &p),
            Pred::and(
                Pred::rel(Expr::Int(1), RelOp::Eq, Expr::Int(1)),
                Pred::rel(Expr::Int(2), RelOp::Eq, Expr::Int(1))
            )
        );
    }

    #[test]
    fn assignment_is_simultaneous() {
        let swap = Subst::Assign(vec![
            (LValue::Var("x".into()), Expr::var("y")),
            (LValue::Var("y".into()), Expr::var("x")),
        ]);
        let p = Pred::rel(Expr::var("x"), RelOp::Lt, Expr::var("y"));
        assert_eq!(wp(&swap, &p), Pred::rel(Expr::var("y"), RelOp::Lt, Expr::var("x")));
    }

    #[test]
    fn substitution_avoids_capture() {
        // [x := z] (#z : 0..2 . (z = x)) must not capture the free z
        let p = Pred::Exists("z".into(), Domain::IntRange(0, 2), Box::new(Pred::rel(Expr::var("z"), RelOp::Eq, Expr::var("x"))));
        let r = wp(&Subst::assign("x", Expr::var("z")), &p);
        let Pred::Exists(z2, _, body) = r else { panic!() };
        assert_ne!(z2, "z");
        assert_eq!(*body, Pred::rel(Expr::var(&z2), RelOp::Eq, Expr::var("z")));
    }

    #[test]
    fn any_binder_is_renamed_when_free_in_postcondition() {
        let s = Subst::any("y", Domain::IntRange(0, 2), Subst::assign("x", Expr::var("y")));
        let p = Pred::rel(Expr::var("x"), RelOp::Eq, Expr::var("y"));
        let Pred::Forall(z, _, body) = wp(&s, &p) else { panic!() };
        assert_ne!(z, "y");
        assert_eq!(*body, Pred::rel(Expr::var(&z), RelOp::Eq, Expr::var("y")));
    }

    #[test]
    fn prd_of_assign_and_skip() {
        let v = vars();
        let x = set(&["x"]);
        let e = Expr::var("y");
        let p = prd(&Subst::assign("x", e.clone()), &x);
        assert_eq!(equivalent(&v, &p, &Pred::rel(Expr::primed("x"), RelOp::Eq, e)), Ok(None));
        let q = prd(&Subst::Skip, &x);
        assert_eq!(equivalent(&v, &q, &Pred::rel(Expr::primed("x"), RelOp::Eq, Expr::var("x"))), Ok(None));
    }

    #[test]
    fn prd_of_guard() {
        let v = vars();
        let x = set(&["x", "y"]);
        let g = gt0(Expr::var("y"));
        let s = Subst::assign("x", Expr::Int(2));
        assert_eq!(equivalent(&v, &prd(&Subst::guard(g.clone(), s.clone()), &x), &Pred::and(g, prd(&s, &x))), Ok(None));
    }

    #[test]
    fn mod_routes_agree_on_any() {
        let v = vars();
        let s = Subst::any(
            "z",
            Domain::IntRange(0, 2),
            Subst::guard(Pred::rel(Expr::var("z"), RelOp::Ne, Expr::var("y")), Subst::assign("x", Expr::var("z"))),
        );
        for x in [set(&["x"]), set(&["y"]), set(&["x", "y"])] {
            assert_eq!(equivalent(&v, &mod_defined(&s, &x), &mod_inductive(&s, &x)), Ok(None));
        }
        assert_eq!(mod_inductive(&Subst::Skip, &set(&["x"])), Pred::False);
    }
}
