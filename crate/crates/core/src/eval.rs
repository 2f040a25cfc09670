//! Evaluation of expressions and predicates over valuations, and decision
//! procedures for validity and equivalence by exhaustive enumeration.

use crate::ast::{ArithOp, Domain, Expr, Pred, RelOp, Term, VarRef};
use crate::value::{for_each_valuation, Valuation, Value};
use indexmap::IndexMap;
use std::collections::{BTreeMap, BTreeSet};
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum EvalError {
    #[error("unbound variable `{0}`")]
    Unbound(String),
    #[error("function applied outside its domain: {0}")]
    UndefinedApplication(String),
    #[error("ill-typed operand: {0}")]
    TypeMismatch(String),
    #[error("maplet set is not a function: key {0} mapped twice")]
    NotAFunction(String),
}

/// Evaluation environment: before-state, optional after-state and bound locals.
pub struct Env<'a> {
    pub cur: &'a Valuation,
    pub next: Option<&'a Valuation>,
    locals: Vec<(String, Value)>,
}

impl<'a> Env<'a> {
    pub fn new(cur: &'a Valuation) -> Self {
        Env { cur, next: None, locals: Vec::new() }
    }

    pub fn with_next(cur: &'a Valuation, next: &'a Valuation) -> Self {
        Env { cur, next: Some(next), locals: Vec::new() }
    }

    pub fn push(&mut self, name: &str, v: Value) {
        self.locals.push((name.to_string(), v));
    }

    pub fn pop(&mut self) {
        self.locals.pop();
    }

    fn lookup(&self, name: &str) -> Result<Value, EvalError> {
        if let Some((_, v)) = self.locals.iter().rev().find(|(n, _)| n == name) {
            return Ok(v.clone());
        }
        self.cur.get(name).cloned().ok_or_else(|| EvalError::Unbound(name.to_string()))
    }

    fn lookup_next(&self, name: &str) -> Result<Value, EvalError> {
        self.next
            .and_then(|n| n.get(name))
            .cloned()
            .ok_or_else(|| EvalError::Unbound(format!("{name}'")))
    }
}

fn int(v: Value) -> Result<i64, EvalError> {
    match v {
        Value::Int(n) => Ok(n),
        other => Err(EvalError::TypeMismatch(format!("expected integer, got {other}"))),
    }
}

fn func(v: Value) -> Result<BTreeMap<Value, Value>, EvalError> {
    match v {
        Value::Fn(m) => Ok(m),
        // the empty set literal doubles as the empty function
        Value::Set(s) if s.is_empty() => Ok(BTreeMap::new()),
        other => Err(EvalError::TypeMismatch(format!("expected function, got {other}"))),
    }
}

fn set(v: Value) -> Result<BTreeSet<Value>, EvalError> {
    match v {
        Value::Set(s) => Ok(s),
        Value::Fn(m) if m.is_empty() => Ok(BTreeSet::new()),
        other => Err(EvalError::TypeMismatch(format!("expected set, got {other}"))),
    }
}

pub fn eval_expr(e: &Expr, env: &mut Env) -> Result<Value, EvalError> {
    Ok(match e {
        Expr::Var(x) => env.lookup(x)?,
        Expr::Primed(x) => env.lookup_next(x)?,
        Expr::Int(n) => Value::Int(*n),
        Expr::Enum(l) => Value::Enum(l.clone()),
        Expr::Apply(f, a) => {
            let fv = func(eval_expr(f, env)?)?;
            let av = eval_expr(a, env)?;
            match fv.get(&av) {
                Some(v) => v.clone(),
                None => return Err(EvalError::UndefinedApplication(format!("{av}"))),
            }
        }
        Expr::Card(s) => match eval_expr(s, env)? {
            Value::Set(s) => Value::Int(s.len() as i64),
            Value::Fn(m) => Value::Int(m.len() as i64),
            other => return Err(EvalError::TypeMismatch(format!("card of {other}"))),
        },
        Expr::RanRestrict(f, s) => {
            let fv = func(eval_expr(f, env)?)?;
            let sv = set(eval_expr(s, env)?)?;
            Value::Fn(fv.into_iter().filter(|(_, v)| sv.contains(v)).collect())
        }
        Expr::Dom(f) => Value::Set(func(eval_expr(f, env)?)?.into_keys().collect()),
        Expr::SetLit(items) => {
            let mut out = BTreeSet::new();
            for it in items {
                out.insert(eval_expr(it, env)?);
            }
            Value::Set(out)
        }
        Expr::Maplets(pairs) => {
            let mut out = BTreeMap::new();
            for (k, v) in pairs {
                let kv = eval_expr(k, env)?;
                let vv = eval_expr(v, env)?;
                if let Some(prev) = out.insert(kv.clone(), vv.clone()) {
                    if prev != vv {
                        return Err(EvalError::NotAFunction(kv.to_string()));
                    }
                }
            }
            Value::Fn(out)
        }
        Expr::Override(f, g) => {
            let mut fv = func(eval_expr(f, env)?)?;
            fv.extend(func(eval_expr(g, env)?)?);
            Value::Fn(fv)
        }
        Expr::Arith(op, a, b) => {
            let x = int(eval_expr(a, env)?)?;
            let y = int(eval_expr(b, env)?)?;
            Value::Int(match op {
                ArithOp::Add => x + y,
                ArithOp::Sub => x - y,
            })
        }
        Expr::Range(a, b) => {
            let lo = int(eval_expr(a, env)?)?;
            let hi = int(eval_expr(b, env)?)?;
            Value::Set((lo..=hi).map(Value::Int).collect())
        }
        Expr::FnSpace(..) => {
            let d = fn_space_domain(e, env)?;
            Value::Set(d.values().into_iter().collect())
        }
    })
}

/// Builds the `TotalFn` domain a function-space expression denotes.
fn fn_space_domain(e: &Expr, env: &mut Env) -> Result<Domain, EvalError> {
    fn as_domain(e: &Expr, env: &mut Env) -> Result<Domain, EvalError> {
        if let Expr::FnSpace(..) = e {
            return fn_space_domain(e, env);
        }
        let vals = set(eval_expr(e, env)?)?;
        // encode an arbitrary finite set as an enumerated domain over its rendering
        if vals.iter().all(|v| matches!(v, Value::Int(_))) {
            let ints: Vec<i64> = vals.iter().map(|v| if let Value::Int(n) = v { *n } else { 0 }).collect();
            if let (Some(lo), Some(hi)) = (ints.first(), ints.last()) {
                if (hi - lo + 1) as usize == ints.len() {
                    return Ok(Domain::IntRange(*lo, *hi));
                }
            }
        }
        if vals.iter().all(|v| matches!(v, Value::Enum(_))) {
            return Ok(Domain::EnumSet(
                vals.into_iter().map(|v| if let Value::Enum(s) = v { s } else { String::new() }).collect(),
            ));
        }
        Err(EvalError::TypeMismatch("unsupported function-space operand".into()))
    }
    match e {
        Expr::FnSpace(d, r) => Ok(Domain::TotalFn(Box::new(as_domain(d, env)?), Box::new(as_domain(r, env)?))),
        _ => as_domain(e, env),
    }
}

fn member(lhs: &Value, rhs: &Expr, env: &mut Env) -> Result<bool, EvalError> {
    match rhs {
        Expr::FnSpace(..) => Ok(fn_space_domain(rhs, env)?.contains(lhs)),
        Expr::Range(a, b) => {
            let lo = int(eval_expr(a, env)?)?;
            let hi = int(eval_expr(b, env)?)?;
            Ok(matches!(lhs, Value::Int(n) if lo <= *n && *n <= hi))
        }
        _ => Ok(set(eval_expr(rhs, env)?)?.contains(lhs)),
    }
}

pub fn eval_pred(p: &Pred, env: &mut Env) -> Result<bool, EvalError> {
    Ok(match p {
        Pred::True => true,
        Pred::False => false,
        Pred::Rel(a, op, b) => {
            let av = eval_expr(a, env)?;
            match op {
                RelOp::In => member(&av, b, env)?,
                RelOp::NotIn => !member(&av, b, env)?,
                RelOp::Eq => av == eval_expr(b, env)?,
                RelOp::Ne => av != eval_expr(b, env)?,
                _ => {
                    let x = int(av)?;
                    let y = int(eval_expr(b, env)?)?;
                    match op {
                        RelOp::Lt => x < y,
                        RelOp::Le => x <= y,
                        RelOp::Gt => x > y,
                        RelOp::Ge => x >= y,
                        _ => unreachable!(),
                    }
                }
            }
        }
        Pred::Not(q) => !eval_pred(q, env)?,
        Pred::And(a, b) => eval_pred(a, env)? && eval_pred(b, env)?,
        Pred::Or(a, b) => eval_pred(a, env)? || eval_pred(b, env)?,
        Pred::Implies(a, b) => !eval_pred(a, env)? || eval_pred(b, env)?,
        Pred::Forall(z, d, body) => {
            let mut all = true;
            for v in d.values() {
                env.push(z, v);
                let r = eval_pred(body, env);
                env.pop();
                if !r? {
                    all = false;
                    break;
                }
            }
            all
        }
        Pred::Exists(z, d, body) => {
            let mut some = false;
            for v in d.values() {
                env.push(z, v);
                let r = eval_pred(body, env);
                env.pop();
                if r? {
                    some = true;
                    break;
                }
            }
            some
        }
    })
}

/// Evaluates a predicate that mentions only current-state variables.
pub fn holds(p: &Pred, state: &Valuation) -> Result<bool, EvalError> {
    eval_pred(p, &mut Env::new(state))
}

/// Evaluates a before-after predicate at the pair `(before, after)`.
pub fn holds_pair(p: &Pred, before: &Valuation, after: &Valuation) -> Result<bool, EvalError> {
    eval_pred(p, &mut Env::with_next(before, after))
}

/// A point of the enumeration space: before-values and after-values.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Witness {
    pub before: Valuation,
    pub after: Valuation,
}

/// Enumerates every valuation of the free (primed and unprimed) variables of
/// `preds` over their declared domains, calling `f` until it returns `Some`.
pub fn search<F>(
    vars: &IndexMap<String, Domain>,
    preds: &[&Pred],
    mut f: F,
) -> Result<Option<Witness>, EvalError>
where
    F: FnMut(&Valuation, &Valuation) -> Result<bool, EvalError>,
{
    let mut refs: BTreeSet<VarRef> = BTreeSet::new();
    for p in preds {
        refs.extend(p.free_refs());
    }
    let mut space = Vec::new();
    for r in &refs {
        let d = vars.get(&r.name).ok_or_else(|| EvalError::Unbound(r.name.clone()))?;
        let key = if r.primed { format!("{}'", r.name) } else { r.name.clone() };
        space.push((key, d.values()));
    }
    let mut found = None;
    let mut err = None;
    for_each_valuation(&space, |joint| {
        let mut before = Valuation::new();
        let mut after = Valuation::new();
        for (k, v) in joint {
            match k.strip_suffix('\'') {
                Some(base) => after.insert(base.to_string(), v.clone()),
                None => before.insert(k.clone(), v.clone()),
            };
        }
        match f(&before, &after) {
            Ok(true) => {
                found = Some(Witness { before, after });
                false
            }
            Ok(false) => true,
            Err(e) => {
                err = Some(e);
                false
            }
        }
    });
    match err {
        Some(e) => Err(e),
        None => Ok(found),
    }
}

/// Decides `p <=> q` over the declared finite domains. Returns a
/// distinguishing point when they differ.
pub fn equivalent(
    vars: &IndexMap<String, Domain>,
    p: &Pred,
    q: &Pred,
) -> Result<Option<Witness>, EvalError> {
    search(vars, &[p, q], |b, a| Ok(holds_pair(p, b, a)? != holds_pair(q, b, a)?))
}

/// Decides validity of `p => q`. Returns a point where `p` holds and `q` fails.
pub fn implies(
    vars: &IndexMap<String, Domain>,
    p: &Pred,
    q: &Pred,
) -> Result<Option<Witness>, EvalError> {
    search(vars, &[p, q], |b, a| Ok(holds_pair(p, b, a)? && !holds_pair(q, b, a)?))
}

/// Decides validity of `p`. Returns a falsifying point.
pub fn valid(vars: &IndexMap<String, Domain>, p: &Pred) -> Result<Option<Witness>, EvalError> {
    search(vars, &[p], |b, a| Ok(!holds_pair(p, b, a)?))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn bat(vals: [&str; 3]) -> Value {
        Value::Fn((1..=3).zip(vals).map(|(i, v)| (Value::Int(i), Value::Enum(v.into()))).collect())
    }

    #[test]
    fn range_restriction_card_and_dom() {
        let mut st = Valuation::new();
        st.insert("Bat".into(), bat(["ok", "ko", "ok"]));
        let restricted = Expr::RanRestrict(
            Box::new(Expr::var("Bat")),
            Box::new(Expr::SetLit(vec![Expr::enum_lit("ok")])),
        );
        let mut env = Env::new(&st);
        assert_eq!(eval_expr(&Expr::Card(Box::new(restricted.clone())), &mut env), Ok(Value::Int(2)));
        assert_eq!(
            eval_expr(&Expr::Dom(Box::new(restricted)), &mut env),
            Ok(Value::Set([Value::Int(1), Value::Int(3)].into_iter().collect()))
        );
    }

    #[test]
    fn function_space_membership() {
        let mut st = Valuation::new();
        st.insert("Bat".into(), bat(["ok", "ko", "ok"]));
        let space = Expr::FnSpace(
            Box::new(Expr::Range(Box::new(Expr::Int(1)), Box::new(Expr::Int(3)))),
            Box::new(Expr::SetLit(vec![Expr::enum_lit("ok"), Expr::enum_lit("ko")])),
        );
        let p = Pred::rel(Expr::var("Bat"), RelOp::In, space.clone());
        assert_eq!(holds(&p, &st), Ok(true));
        st.insert("Bat".into(), Value::Fn([(Value::Int(1), Value::Enum("ok".into()))].into()));
        assert_eq!(holds(&p, &st), Ok(false));
    }

    #[test]
    fn application_outside_domain_is_an_error() {
        let st = Valuation::new();
        let e = Expr::apply(Expr::Maplets(vec![(Expr::Int(1), Expr::Int(2))]), Expr::Int(5));
        assert!(matches!(eval_expr(&e, &mut Env::new(&st)), Err(EvalError::UndefinedApplication(_))));
    }

    #[test]
    fn equivalence_finds_distinguishing_point() {
        let vars: IndexMap<String, Domain> = [("x".to_string(), Domain::IntRange(0, 2))].into();
        let p = Pred::rel(Expr::var("x"), RelOp::Lt, Expr::Int(2));
        let q = Pred::rel(Expr::var("x"), RelOp::Le, Expr::Int(1));
        assert_eq!(equivalent(&vars, &p, &q), Ok(None));
        let r = Pred::rel(Expr::var("x"), RelOp::Lt, Expr::Int(1));
        let w = equivalent(&vars, &p, &r).unwrap().unwrap();
        assert_eq!(w.before["x"], Value::Int(1));
    }
}
