//! Pretty-printing in the concrete syntax accepted by [`crate::parser`].

use crate::ast::{ArithOp, Domain, EventSystem, Expr, LValue, Pred, RelOp, Subst};

fn rel_sym(op: RelOp) -> &'static str {
    match op {
        RelOp::Eq => "=",
        RelOp::Ne => "/=",
        RelOp::Lt => "<",
        RelOp::Le => "<=",
        RelOp::Gt => ">",
        RelOp::Ge => ">=",
        RelOp::In => ":",
        RelOp::NotIn => "/:",
    }
}

// Expression levels, loosest first: -->, .., <+, |>, + -, application, atoms.
fn expr_level(e: &Expr) -> u8 {
    match e {
        Expr::FnSpace(..) => 0,
        Expr::Range(..) => 1,
        Expr::Override(..) => 2,
        Expr::RanRestrict(..) => 3,
        Expr::Arith(..) => 4,
        Expr::Apply(..) => 5,
        Expr::Int(n) if *n < 0 => 5,
        _ => 6,
    }
}

fn write_expr(e: &Expr, min: u8, out: &mut String) {
    if expr_level(e) < min {
        out.push('(');
        write_expr(e, 0, out);
        out.push(')');
        return;
    }
    let bin = |a: &Expr, la: u8, op: &str, b: &Expr, lb: u8, out: &mut String| {
        write_expr(a, la, out);
        out.push_str(op);
        write_expr(b, lb, out);
    };
    match e {
        Expr::Var(x) | Expr::Enum(x) => out.push_str(x),
        Expr::Primed(x) => {
            out.push_str(x);
            out.push('\'');
        }
        Expr::Int(n) => out.push_str(&n.to_string()),
        Expr::FnSpace(a, b) => bin(a, 1, " --> ", b, 0, out),
        Expr::Range(a, b) => bin(a, 2, "..", b, 2, out),
        Expr::Override(a, b) => bin(a, 2, " <+ ", b, 3, out),
        Expr::RanRestrict(a, b) => bin(a, 3, " |> ", b, 4, out),
        Expr::Arith(op, a, b) => {
            let sym = if *op == ArithOp::Add { " + " } else { " - " };
            bin(a, 4, sym, b, 5, out)
        }
        Expr::Apply(f, a) => {
            write_expr(f, 5, out);
            out.push('(');
            write_expr(a, 0, out);
            out.push(')');
        }
        Expr::Card(a) | Expr::Dom(a) => {
            out.push_str(if matches!(e, Expr::Card(_)) { "card(" } else { "dom(" });
            write_expr(a, 0, out);
            out.push(')');
        }
        Expr::SetLit(items) => {
            out.push('{');
            for (i, it) in items.iter().enumerate() {
                if i > 0 {
                    out.push_str(", ");
                }
                write_expr(it, 0, out);
            }
            out.push('}');
        }
        Expr::Maplets(pairs) => {
            out.push('{');
            for (i, (k, v)) in pairs.iter().enumerate() {
                if i > 0 {
                    out.push_str(", ");
                }
                bin(k, 0, " |-> ", v, 0, out);
            }
            out.push('}');
        }
    }
}

pub fn expr_to_string(e: &Expr) -> String {
    let mut s = String::new();
    write_expr(e, 0, &mut s);
    s
}

pub fn domain_to_string(d: &Domain) -> String {
    expr_to_string(&d.to_expr())
}

// Predicate levels: =>, or, &, not, atoms.
fn pred_level(p: &Pred) -> u8 {
    match p {
        Pred::Implies(..) => 0,
        Pred::Or(..) => 1,
        Pred::And(..) => 2,
        Pred::Not(_) => 3,
        _ => 4,
    }
}

fn write_pred(p: &Pred, min: u8, out: &mut String) {
    if pred_level(p) < min {
        out.push('(');
        write_pred(p, 0, out);
        out.push(')');
        return;
    }
    match p {
        Pred::True => out.push_str("true"),
        Pred::False => out.push_str("false"),
        Pred::Rel(a, op, b) => {
            write_expr(a, 0, out);
            out.push(' ');
            out.push_str(rel_sym(*op));
            out.push(' ');
            write_expr(b, 0, out);
        }
        Pred::Not(q) => {
            out.push_str("not ");
            write_pred(q, 3, out);
        }
        Pred::And(a, b) => {
            write_pred(a, 2, out);
            out.push_str(" & ");
            write_pred(b, 3, out);
        }
        Pred::Or(a, b) => {
            write_pred(a, 1, out);
            out.push_str(" or ");
            write_pred(b, 2, out);
        }
        Pred::Implies(a, b) => {
            write_pred(a, 1, out);
            out.push_str(" => ");
            write_pred(b, 0, out);
        }
        Pred::Forall(z, d, body) | Pred::Exists(z, d, body) => {
            out.push(if matches!(p, Pred::Forall(..)) { '!' } else { '#' });
            out.push_str(z);
            out.push_str(" : ");
            out.push_str(&domain_to_string(d));
            out.push_str(" . (");
            write_pred(body, 0, out);
            out.push(')');
        }
    }
}

pub fn pred_to_string(p: &Pred) -> String {
    let mut s = String::new();
    write_pred(p, 0, &mut s);
    s
}

/// `x := x <+ {i |-> e}` is shown as `x(i) := e`.
fn resugar(lv: &LValue, e: &Expr) -> (LValue, Expr) {
    if let (LValue::Var(x), Expr::Override(f, g)) = (lv, e) {
        if let (Expr::Var(fx), Expr::Maplets(pairs)) = (f.as_ref(), g.as_ref()) {
            if fx == x && pairs.len() == 1 {
                let (i, v) = pairs[0].clone();
                return (LValue::Apply(x.clone(), i), v);
            }
        }
    }
    (lv.clone(), e.clone())
}

fn subst_level(s: &Subst) -> u8 {
    match s {
        Subst::Guard(..) => 0,
        Subst::Choice(..) => 1,
        _ => 2,
    }
}

/// Whether `@z.(P ==> S)` can be written without the explicit domain.
fn short_any<'a>(z: &str, d: &Domain, body: &'a Subst) -> Option<(&'a Pred, &'a Subst)> {
    let Subst::Guard(g, s) = body else { return None };
    match g.conjuncts().first() {
        Some(Pred::Rel(Expr::Var(v), RelOp::In, de)) if v == z && Domain::from_expr(de).as_ref() == Some(d) => {
            Some((g, s))
        }
        _ => None,
    }
}

fn write_subst(s: &Subst, min: u8, out: &mut String) {
    if subst_level(s) < min {
        out.push('(');
        write_subst(s, 0, out);
        out.push(')');
        return;
    }
    match s {
        Subst::Skip => out.push_str("skip"),
        Subst::Assign(pairs) => {
            let sugared: Vec<(LValue, Expr)> = pairs.iter().map(|(lv, e)| resugar(lv, e)).collect();
            for (i, (lv, _)) in sugared.iter().enumerate() {
                if i > 0 {
                    out.push_str(", ");
                }
                match lv {
                    LValue::Var(x) => out.push_str(x),
                    LValue::Apply(x, idx) => {
                        out.push_str(x);
                        out.push('(');
                        write_expr(idx, 0, out);
                        out.push(')');
                    }
                }
            }
            out.push_str(" := ");
            for (i, (_, e)) in sugared.iter().enumerate() {
                if i > 0 {
                    out.push_str(", ");
                }
                write_expr(e, 0, out);
            }
        }
        Subst::Guard(p, body) => {
            write_pred(p, 0, out);
            out.push_str(" ==> ");
            write_subst(body, 0, out);
        }
        Subst::Choice(a, b) => {
            write_subst(a, 1, out);
            out.push_str(" [] ");
            write_subst(b, 2, out);
        }
        Subst::Any(z, d, body) => match short_any(z, d, body) {
            Some((g, inner)) => {
                out.push('@');
                out.push_str(z);
                out.push_str(".(");
                write_pred(g, 0, out);
                out.push_str(" ==> ");
                write_subst(inner, 0, out);
                out.push(')');
            }
            None => {
                out.push('@');
                out.push_str(z);
                out.push_str(" : ");
                out.push_str(&domain_to_string(d));
                out.push_str(" . (");
                write_subst(body, 0, out);
                out.push(')');
            }
        },
        Subst::If(p, a, b) => {
            out.push_str("IF ");
            write_pred(p, 0, out);
            out.push_str(" THEN ");
            write_subst(a, 0, out);
            out.push_str(" ELSE ");
            write_subst(b, 0, out);
            out.push_str(" END");
        }
    }
}

pub fn subst_to_string(s: &Subst) -> String {
    let mut out = String::new();
    write_subst(s, 0, &mut out);
    out
}

/// Renders a whole model, one section header per line and bodies indented.
pub fn pretty_print(m: &EventSystem) -> String {
    let mut out = String::new();
    if !m.vars.is_empty() {
        out.push_str("VARS\n");
        for (x, d) in &m.vars {
            out.push_str(&format!("  {x} : {}\n", domain_to_string(d)));
        }
    }
    out.push_str(&format!("INVARIANT\n  {}\n", pred_to_string(&m.invariant)));
    out.push_str(&format!("INIT\n  {}\n", subst_to_string(&m.init)));
    for (name, s) in &m.events {
        out.push_str(&format!("EVENT {name} ==\n  {}\n", subst_to_string(s)));
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::parser::parse_model;

    #[test]
    fn expression_parentheses_follow_precedence() {
        let e = Expr::Card(Box::new(Expr::RanRestrict(
            Box::new(Expr::Override(Box::new(Expr::var("f")), Box::new(Expr::var("g")))),
            Box::new(Expr::SetLit(vec![Expr::enum_lit("ok")])),
        )));
        assert_eq!(expr_to_string(&e), "card((f <+ g) |> {ok})");
        let sub = Expr::Arith(
            ArithOp::Sub,
            Box::new(Expr::var("a")),
            Box::new(Expr::Arith(ArithOp::Sub, Box::new(Expr::var("b")), Box::new(Expr::Int(-1)))),
        );
        assert_eq!(expr_to_string(&sub), "a - (b - -1)");
    }

    #[test]
    fn predicates_parenthesise_weaker_operands() {
        let a = Pred::rel(Expr::var("x"), RelOp::Eq, Expr::Int(1));
        let p = Pred::and(Pred::or(a.clone(), a.clone()), Pred::not(Pred::and(a.clone(), a.clone())));
        assert_eq!(pred_to_string(&p), "(x = 1 or x = 1) & not (x = 1 & x = 1)");
    }

    #[test]
    fn function_update_is_resugared() {
        let s = Subst::assign("Bat", Expr::update(Expr::var("Bat"), Expr::var("nb"), Expr::enum_lit("ko")));
        assert_eq!(subst_to_string(&s), "Bat(nb) := ko");
    }

    #[test]
    fn guarded_alternatives_are_parenthesised() {
        let g = Subst::guard(Pred::True, Subst::Skip);
        let s = Subst::choice(g.clone(), Subst::choice(Subst::Skip, g));
        assert_eq!(subst_to_string(&s), "(true ==> skip) [] (skip [] (true ==> skip))");
    }

    #[test]
    fn round_trip_small_model() {
        let src = "VARS x : 0..3 f : 0..1 --> {a, b}\nINVARIANT x : 0..3 => (f(0) = a or not x > 1)\n\
                   INIT x, f := 0, {0 |-> a, 1 |-> b}\n\
                   EVENT e == IF x < 3 THEN x := x + 1 ELSE x := 0 END\n\
                   EVENT g == @i.(i : 0..1 & f(i) = a ==> f(i) := b) [] (x = 0 ==> skip)\n\
                   EVENT h == @k : 0..3 . (x := k)";
        let m = parse_model(src).unwrap();
        let text = pretty_print(&m);
        assert_eq!(parse_model(&text).unwrap(), m, "{text}");
    }
}
