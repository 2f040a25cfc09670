//! Static typing of terms over the declared domains.

use crate::ast::{Domain, EventSystem, Expr, LValue, Pred, RelOp, Subst, Term};
use indexmap::IndexMap;
use std::collections::BTreeSet;
use std::fmt;

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Type {
    Int,
    Enum,
    Set(Box<Type>),
    Fn(Box<Type>, Box<Type>),
    /// Element type of the empty set literal; compatible with anything.
    Unknown,
}

impl fmt::Display for Type {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Type::Int => write!(f, "INT"),
            Type::Enum => write!(f, "ENUM"),
            Type::Set(t) => write!(f, "POW({t})"),
            Type::Fn(a, b) => write!(f, "{a} --> {b}"),
            Type::Unknown => write!(f, "?"),
        }
    }
}

impl Type {
    pub fn of_domain(d: &Domain) -> Type {
        match d {
            Domain::IntRange(..) => Type::Int,
            Domain::EnumSet(_) => Type::Enum,
            Domain::TotalFn(a, b) => Type::Fn(Box::new(Type::of_domain(a)), Box::new(Type::of_domain(b))),
        }
    }

    /// Compatibility up to `Unknown`; an empty set is also an empty function.
    pub fn compatible(&self, other: &Type) -> bool {
        match (self, other) {
            (Type::Unknown, _) | (_, Type::Unknown) => true,
            (Type::Int, Type::Int) | (Type::Enum, Type::Enum) => true,
            (Type::Set(a), Type::Set(b)) => a.compatible(b),
            (Type::Fn(a, b), Type::Fn(c, d)) => a.compatible(c) && b.compatible(d),
            (Type::Fn(..), Type::Set(t)) | (Type::Set(t), Type::Fn(..)) => **t == Type::Unknown,
            _ => false,
        }
    }

    fn join(self, other: Type) -> Type {
        match (self, other) {
            (Type::Unknown, t) | (t, Type::Unknown) => t,
            (Type::Set(a), Type::Set(b)) => Type::Set(Box::new(a.join(*b))),
            (Type::Set(_), f @ Type::Fn(..)) | (f @ Type::Fn(..), Type::Set(_)) => f,
            (a, _) => a,
        }
    }
}

/// Typing context: state variables and a stack of bound names.
pub struct Ctx<'a> {
    vars: &'a IndexMap<String, Domain>,
    locals: Vec<(String, Type)>,
}

impl<'a> Ctx<'a> {
    pub fn new(vars: &'a IndexMap<String, Domain>) -> Self {
        Ctx { vars, locals: Vec::new() }
    }

    fn lookup(&self, x: &str) -> Result<Type, String> {
        if let Some((_, t)) = self.locals.iter().rev().find(|(n, _)| n == x) {
            return Ok(t.clone());
        }
        self.vars.get(x).map(Type::of_domain).ok_or_else(|| format!("unknown identifier `{x}`"))
    }

    fn is_local(&self, x: &str) -> bool {
        self.locals.iter().any(|(n, _)| n == x)
    }

    fn with<T>(&mut self, z: &str, d: &Domain, f: impl FnOnce(&mut Self) -> T) -> T {
        self.locals.push((z.to_string(), Type::of_domain(d)));
        let r = f(self);
        self.locals.pop();
        r
    }
}

fn expect(what: &str, got: &Type, want: &Type) -> Result<(), String> {
    if got.compatible(want) {
        Ok(())
    } else {
        Err(format!("{what}: expected {want}, found {got}"))
    }
}

fn fn_parts(t: Type, what: &str) -> Result<(Type, Type), String> {
    match t {
        Type::Fn(a, b) => Ok((*a, *b)),
        Type::Set(e) if *e == Type::Unknown => Ok((Type::Unknown, Type::Unknown)),
        Type::Unknown => Ok((Type::Unknown, Type::Unknown)),
        other => Err(format!("{what}: expected a function, found {other}")),
    }
}

pub fn type_of(e: &Expr, cx: &mut Ctx) -> Result<Type, String> {
    Ok(match e {
        Expr::Var(x) | Expr::Primed(x) => cx.lookup(x)?,
        Expr::Int(_) => Type::Int,
        Expr::Enum(_) => Type::Enum,
        Expr::Apply(f, a) => {
            let (d, r) = fn_parts(type_of(f, cx)?, "application")?;
            expect("argument", &type_of(a, cx)?, &d)?;
            r
        }
        Expr::Card(s) => match type_of(s, cx)? {
            Type::Set(_) | Type::Fn(..) | Type::Unknown => Type::Int,
            other => return Err(format!("card: expected a set, found {other}")),
        },
        Expr::RanRestrict(f, s) => {
            let (d, r) = fn_parts(type_of(f, cx)?, "range restriction")?;
            expect("range restriction", &type_of(s, cx)?, &Type::Set(Box::new(r.clone())))?;
            Type::Fn(Box::new(d), Box::new(r))
        }
        Expr::Dom(f) => Type::Set(Box::new(fn_parts(type_of(f, cx)?, "dom")?.0)),
        Expr::SetLit(items) => {
            let mut t = Type::Unknown;
            for it in items {
                let ti = type_of(it, cx)?;
                expect("set element", &ti, &t)?;
                t = t.join(ti);
            }
            Type::Set(Box::new(t))
        }
        Expr::Maplets(pairs) => {
            let (mut d, mut r) = (Type::Unknown, Type::Unknown);
            for (k, v) in pairs {
                let (tk, tv) = (type_of(k, cx)?, type_of(v, cx)?);
                expect("maplet key", &tk, &d)?;
                expect("maplet value", &tv, &r)?;
                d = d.join(tk);
                r = r.join(tv);
            }
            Type::Fn(Box::new(d), Box::new(r))
        }
        Expr::Override(f, g) => {
            let tf = type_of(f, cx)?;
            let tg = type_of(g, cx)?;
            fn_parts(tf.clone(), "override")?;
            fn_parts(tg.clone(), "override")?;
            expect("override", &tg, &tf)?;
            tf.join(tg)
        }
        Expr::Arith(_, a, b) => {
            expect("arithmetic", &type_of(a, cx)?, &Type::Int)?;
            expect("arithmetic", &type_of(b, cx)?, &Type::Int)?;
            Type::Int
        }
        Expr::Range(a, b) => {
            expect("range bound", &type_of(a, cx)?, &Type::Int)?;
            expect("range bound", &type_of(b, cx)?, &Type::Int)?;
            Type::Set(Box::new(Type::Int))
        }
        Expr::FnSpace(a, b) => {
            let elem = |t: Type| match t {
                Type::Set(e) => Ok(*e),
                other => Err(format!("function space: expected a set, found {other}")),
            };
            let ta = elem(type_of(a, cx)?)?;
            let tb = elem(type_of(b, cx)?)?;
            Type::Set(Box::new(Type::Fn(Box::new(ta), Box::new(tb))))
        }
    })
}

pub fn check_pred(p: &Pred, cx: &mut Ctx) -> Result<(), String> {
    match p {
        Pred::True | Pred::False => Ok(()),
        Pred::Rel(a, op, b) => {
            let ta = type_of(a, cx)?;
            let tb = type_of(b, cx)?;
            match op {
                RelOp::Eq | RelOp::Ne => expect("comparison", &tb, &ta),
                RelOp::In | RelOp::NotIn => expect("membership", &tb, &Type::Set(Box::new(ta))),
                _ => {
                    expect("ordering", &ta, &Type::Int)?;
                    expect("ordering", &tb, &Type::Int)
                }
            }
        }
        Pred::Not(q) => check_pred(q, cx),
        Pred::And(a, b) | Pred::Or(a, b) | Pred::Implies(a, b) => {
            check_pred(a, cx)?;
            check_pred(b, cx)
        }
        Pred::Forall(z, d, body) | Pred::Exists(z, d, body) => cx.with(z, d, |cx| check_pred(body, cx)),
    }
}

pub fn check_subst(s: &Subst, cx: &mut Ctx) -> Result<(), String> {
    match s {
        Subst::Skip => Ok(()),
        Subst::Assign(pairs) => {
            let mut roots = BTreeSet::new();
            for (lv, e) in pairs {
                let root = lv.root();
                if cx.is_local(root) {
                    return Err(format!("cannot assign to bound variable `{root}`"));
                }
                if !roots.insert(root.to_string()) {
                    return Err(format!("`{root}` assigned twice in one substitution"));
                }
                let target = cx.lookup(root)?;
                let te = type_of(e, cx)?;
                match lv {
                    LValue::Var(x) => expect(&format!("assignment to `{x}`"), &te, &target)?,
                    LValue::Apply(x, i) => {
                        let (d, r) = fn_parts(target, &format!("update of `{x}`"))?;
                        expect("update index", &type_of(i, cx)?, &d)?;
                        expect(&format!("update of `{x}`"), &te, &r)?;
                    }
                }
            }
            Ok(())
        }
        Subst::Guard(p, s) => {
            check_pred(p, cx)?;
            check_subst(s, cx)
        }
        Subst::Choice(a, b) => {
            check_subst(a, cx)?;
            check_subst(b, cx)
        }
        Subst::Any(z, d, body) => cx.with(z, d, |cx| check_subst(body, cx)),
        Subst::If(p, a, b) => {
            check_pred(p, cx)?;
            check_subst(a, cx)?;
            check_subst(b, cx)
        }
    }
}

/// Where in a model a typing problem was found.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Section {
    Invariant,
    Init,
    Event(String),
}

impl fmt::Display for Section {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Section::Invariant => write!(f, "INVARIANT"),
            Section::Init => write!(f, "INIT"),
            Section::Event(e) => write!(f, "EVENT {e}"),
        }
    }
}

/// Variables whose before-value `s` reads; plain assignment targets are not reads.
fn reads(s: &Subst) -> BTreeSet<String> {
    match s {
        Subst::Skip => BTreeSet::new(),
        Subst::Assign(pairs) => {
            let mut out = BTreeSet::new();
            for (lv, e) in pairs {
                out.extend(e.free_vars());
                if let LValue::Apply(x, i) = lv {
                    out.insert(x.clone());
                    out.extend(i.free_vars());
                }
            }
            out
        }
        Subst::Guard(p, s) => &p.free_vars() | &reads(s),
        Subst::Choice(a, b) => &reads(a) | &reads(b),
        Subst::If(p, a, b) => &(&p.free_vars() | &reads(a)) | &reads(b),
        Subst::Any(z, _, s) => {
            let mut r = reads(s);
            r.remove(z);
            r
        }
    }
}

/// Checks the initialisation: well typed and independent of the state.
pub fn check_init(init: &Subst, vars: &IndexMap<String, Domain>) -> Result<(), String> {
    check_subst(init, &mut Ctx::new(vars))?;
    let read: Vec<String> = reads(init).into_iter().filter(|x| vars.contains_key(x)).collect();
    if read.is_empty() {
        Ok(())
    } else {
        Err(format!("initialisation reads state variable(s) {}", read.join(", ")))
    }
}

/// Type-checks a whole system, reporting the first offending section.
pub fn check_system(m: &EventSystem) -> Result<(), (Section, String)> {
    check_pred(&m.invariant, &mut Ctx::new(&m.vars)).map_err(|e| (Section::Invariant, e))?;
    check_init(&m.init, &m.vars).map_err(|e| (Section::Init, e))?;
    for (name, s) in &m.events {
        check_subst(s, &mut Ctx::new(&m.vars)).map_err(|e| (Section::Event(name.clone()), e))?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn vars() -> IndexMap<String, Domain> {
        let ok_ko = Domain::EnumSet(vec!["ok".into(), "ko".into()]);
        [
            ("Sw".to_string(), Domain::IntRange(1, 3)),
            ("Bat".to_string(), Domain::TotalFn(Box::new(Domain::IntRange(1, 3)), Box::new(ok_ko))),
        ]
        .into()
    }

    #[test]
    fn application_types_through_function() {
        let v = vars();
        let mut cx = Ctx::new(&v);
        let e = Expr::apply(Expr::var("Bat"), Expr::var("Sw"));
        assert_eq!(type_of(&e, &mut cx), Ok(Type::Enum));
        let bad = Expr::apply(Expr::var("Bat"), Expr::enum_lit("ok"));
        assert!(type_of(&bad, &mut cx).is_err());
    }

    #[test]
    fn assignment_checks() {
        let v = vars();
        let mut cx = Ctx::new(&v);
        assert!(check_subst(&Subst::assign("Sw", Expr::enum_lit("ok")), &mut cx).is_err());
        let twice = Subst::Assign(vec![
            (LValue::Var("Sw".into()), Expr::Int(1)),
            (LValue::Var("Sw".into()), Expr::Int(2)),
        ]);
        assert!(check_subst(&twice, &mut cx).is_err());
        let local = Subst::any("z", Domain::IntRange(1, 3), Subst::assign("z", Expr::Int(1)));
        assert!(check_subst(&local, &mut cx).is_err());
        let upd = Subst::Assign(vec![(LValue::Apply("Bat".into(), Expr::var("Sw")), Expr::enum_lit("ko"))]);
        assert!(check_subst(&upd, &mut cx).is_ok());
    }

    #[test]
    fn empty_set_is_an_empty_function() {
        let v = vars();
        let mut cx = Ctx::new(&v);
        let p = Pred::rel(Expr::RanRestrict(Box::new(Expr::var("Bat")), Box::new(Expr::SetLit(vec![]))), RelOp::Eq, Expr::SetLit(vec![]));
        assert!(check_pred(&p, &mut cx).is_ok());
    }

    #[test]
    fn init_must_not_read_state() {
        let v = vars();
        assert!(check_init(&Subst::assign("Sw", Expr::var("Sw")), &v).is_err());
        assert!(check_init(&Subst::assign("Sw", Expr::Int(2)), &v).is_ok());
    }
}
