//! Primitive substitutions and conjunctive form.

use crate::ast::{EventSystem, Expr, LValue, Pred, Subst};
use thiserror::Error;

pub const DEFAULT_CF_CAP: usize = 10_000;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum NormalizeError {
    #[error("conjunctive form exceeds {limit} literals")]
    CfExplosion { limit: usize },
}

/// Negation normal form: implications removed, negations folded into
/// relational operators and pushed through quantifiers.
pub fn nnf(p: &Pred) -> Pred {
    push(p, false)
}

fn push(p: &Pred, neg: bool) -> Pred {
    match p {
        Pred::True => if neg { Pred::False } else { Pred::True },
        Pred::False => if neg { Pred::True } else { Pred::False },
        Pred::Rel(a, op, b) => Pred::Rel(a.clone(), if neg { op.dual() } else { *op }, b.clone()),
        Pred::Not(q) => push(q, !neg),
        Pred::And(a, b) if neg => Pred::or(push(a, true), push(b, true)),
        Pred::And(a, b) => Pred::and(push(a, false), push(b, false)),
        Pred::Or(a, b) if neg => Pred::and(push(a, true), push(b, true)),
        Pred::Or(a, b) => Pred::or(push(a, false), push(b, false)),
        Pred::Implies(a, b) if neg => Pred::and(push(a, false), push(b, true)),
        Pred::Implies(a, b) => Pred::or(push(a, true), push(b, false)),
        Pred::Forall(z, d, q) if neg => Pred::Exists(z.clone(), d.clone(), Box::new(push(q, true))),
        Pred::Forall(z, d, q) => Pred::Forall(z.clone(), d.clone(), Box::new(push(q, false))),
        Pred::Exists(z, d, q) if neg => Pred::Forall(z.clone(), d.clone(), Box::new(push(q, true))),
        Pred::Exists(z, d, q) => Pred::Exists(z.clone(), d.clone(), Box::new(push(q, false))),
    }
}

/// Rewrites to Skip/Assign/Guard/Choice/Any only.
pub fn to_primitive(s: &Subst) -> Subst {
    match s {
        Subst::Skip => Subst::Skip,
        Subst::Assign(pairs) => {
            let mut out: Vec<(LValue, Expr)> = pairs
                .iter()
                .map(|(lv, e)| match lv {
                    LValue::Var(_) => (lv.clone(), e.clone()),
                    LValue::Apply(x, i) => (LValue::Var(x.clone()), Expr::update(Expr::var(x), i.clone(), e.clone())),
                })
                .collect();
            out.sort_by(|a, b| a.0.root().cmp(b.0.root()));
            Subst::Assign(out)
        }
        Subst::Guard(p, s) => Subst::guard(p.clone(), to_primitive(s)),
        Subst::Choice(a, b) => Subst::choice(to_primitive(a), to_primitive(b)),
        Subst::Any(z, d, s) => Subst::any(z, d.clone(), to_primitive(s)),
        Subst::If(p, a, b) => Subst::choice(
            Subst::guard(p.clone(), to_primitive(a)),
            Subst::guard(nnf(&Pred::not(p.clone())), to_primitive(b)),
        ),
    }
}

/// Applies [`to_primitive`] to the initialisation and every event.
pub fn primitive_system(m: &EventSystem) -> EventSystem {
    EventSystem {
        vars: m.vars.clone(),
        invariant: m.invariant.clone(),
        init: to_primitive(&m.init),
        events: m.events.iter().map(|(n, s)| (n.clone(), to_primitive(s))).collect(),
    }
}

type Clauses = Vec<Vec<Pred>>;

fn clauses(p: &Pred, cap: usize) -> Result<Clauses, NormalizeError> {
    let out = match p {
        Pred::True => vec![],
        Pred::False => vec![vec![]],
        Pred::Rel(..) => vec![vec![p.clone()]],
        Pred::And(a, b) => {
            let mut l = clauses(a, cap)?;
            for c in clauses(b, cap)? {
                if !l.contains(&c) {
                    l.push(c);
                }
            }
            l
        }
        Pred::Or(a, b) => {
            let l = clauses(a, cap)?;
            let r = clauses(b, cap)?;
            let size = l.iter().map(Vec::len).sum::<usize>() * r.len() + r.iter().map(Vec::len).sum::<usize>() * l.len();
            if size > cap {
                return Err(NormalizeError::CfExplosion { limit: cap });
            }
            let mut out: Clauses = Vec::new();
            for ca in &l {
                for cb in &r {
                    let mut c = ca.clone();
                    for lit in cb {
                        if !c.contains(lit) {
                            c.push(lit.clone());
                        }
                    }
                    if !out.contains(&c) {
                        out.push(c);
                    }
                }
            }
            out
        }
        Pred::Forall(z, d, q) | Pred::Exists(z, d, q) => {
            // domains are nonempty, so constant bodies fold away
            match cf_nnf(q, cap)? {
                Pred::True => vec![],
                Pred::False => vec![vec![]],
                body => {
                    let lit = if matches!(p, Pred::Forall(..)) {
                        Pred::Forall(z.clone(), d.clone(), Box::new(body))
                    } else {
                        Pred::Exists(z.clone(), d.clone(), Box::new(body))
                    };
                    vec![vec![lit]]
                }
            }
        }
        Pred::Not(_) | Pred::Implies(..) => unreachable!("input is in negation normal form"),
    };
    if out.iter().map(Vec::len).sum::<usize>() > cap {
        return Err(NormalizeError::CfExplosion { limit: cap });
    }
    Ok(out)
}

fn cf_nnf(p: &Pred, cap: usize) -> Result<Pred, NormalizeError> {
    let cs = clauses(p, cap)?;
    if cs.iter().any(Vec::is_empty) {
        return Ok(Pred::False);
    }
    Ok(Pred::conj(cs.into_iter().map(Pred::disj)))
}

/// Conjunctive form with the default literal cap.
pub fn to_cf(p: &Pred) -> Result<Pred, NormalizeError> {
    to_cf_capped(p, DEFAULT_CF_CAP)
}

pub fn to_cf_capped(p: &Pred, cap: usize) -> Result<Pred, NormalizeError> {
    cf_nnf(&nnf(p), cap)
}

fn is_literal(p: &Pred) -> bool {
    match p {
        Pred::Rel(..) | Pred::True | Pred::False => true,
        Pred::Forall(_, _, q) | Pred::Exists(_, _, q) => is_cf(q),
        _ => false,
    }
}

/// Conjunction of disjunctions of elementary or quantified CF predicates.
pub fn is_cf(p: &Pred) -> bool {
    if matches!(p, Pred::True | Pred::False) {
        return true;
    }
    p.conjuncts().into_iter().all(|c| c.disjuncts().into_iter().all(is_literal))
}
