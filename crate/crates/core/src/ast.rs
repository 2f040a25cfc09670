//! Term language: expressions, predicates, substitutions and event systems.

use indexmap::IndexMap;
use std::collections::BTreeSet;

/// A finite carrier set for a state variable or a bound variable.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub enum Domain {
    IntRange(i64, i64),
    EnumSet(Vec<String>),
    TotalFn(Box<Domain>, Box<Domain>),
}

impl Domain {
    /// The set expression denoting this domain (`lo..hi`, `{a, b}`, `D --> R`).
    pub fn to_expr(&self) -> Expr {
        match self {
            Domain::IntRange(lo, hi) => {
                Expr::Range(Box::new(Expr::Int(*lo)), Box::new(Expr::Int(*hi)))
            }
            Domain::EnumSet(lits) => Expr::SetLit(lits.iter().cloned().map(Expr::Enum).collect()),
            Domain::TotalFn(d, r) => Expr::FnSpace(Box::new(d.to_expr()), Box::new(r.to_expr())),
        }
    }

    /// Inverse of [`Domain::to_expr`] for literal set expressions.
    pub fn from_expr(e: &Expr) -> Option<Domain> {
        match e {
            Expr::Range(lo, hi) => match (lo.as_ref(), hi.as_ref()) {
                (Expr::Int(lo), Expr::Int(hi)) if lo <= hi => Some(Domain::IntRange(*lo, *hi)),
                _ => None,
            },
            Expr::SetLit(items) if !items.is_empty() => {
                let mut lits = Vec::new();
                for it in items {
                    match it {
                        Expr::Enum(l) if !lits.contains(l) => lits.push(l.clone()),
                        _ => return None,
                    }
                }
                Some(Domain::EnumSet(lits))
            }
            Expr::FnSpace(d, r) => Some(Domain::TotalFn(
                Box::new(Domain::from_expr(d)?),
                Box::new(Domain::from_expr(r)?),
            )),
            _ => None,
        }
    }

    /// Number of values in the domain.
    pub fn size(&self) -> u128 {
        match self {
            Domain::IntRange(lo, hi) => (hi - lo + 1) as u128,
            Domain::EnumSet(l) => l.len() as u128,
            Domain::TotalFn(d, r) => r.size().saturating_pow(d.size().min(u32::MAX as u128) as u32),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum ArithOp {
    Add,
    Sub,
}

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub enum Expr {
    Var(String),
    /// After-value of a state variable. Never written in models.
    Primed(String),
    Int(i64),
    Enum(String),
    Apply(Box<Expr>, Box<Expr>),
    Card(Box<Expr>),
    RanRestrict(Box<Expr>, Box<Expr>),
    Dom(Box<Expr>),
    SetLit(Vec<Expr>),
    Maplets(Vec<(Expr, Expr)>),
    Override(Box<Expr>, Box<Expr>),
    Arith(ArithOp, Box<Expr>, Box<Expr>),
    Range(Box<Expr>, Box<Expr>),
    /// Set of total functions between two sets.
    FnSpace(Box<Expr>, Box<Expr>),
}

impl Expr {
    pub fn var(name: &str) -> Expr {
        Expr::Var(name.to_string())
    }

    pub fn primed(name: &str) -> Expr {
        Expr::Primed(name.to_string())
    }

    pub fn enum_lit(name: &str) -> Expr {
        Expr::Enum(name.to_string())
    }

    pub fn apply(f: Expr, a: Expr) -> Expr {
        Expr::Apply(Box::new(f), Box::new(a))
    }

    /// `f <+ {i |-> e}`
    pub fn update(f: Expr, index: Expr, value: Expr) -> Expr {
        Expr::Override(Box::new(f), Box::new(Expr::Maplets(vec![(index, value)])))
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum RelOp {
    Eq,
    Ne,
    Lt,
    Le,
    Gt,
    Ge,
    In,
    NotIn,
}

impl RelOp {
    /// The operator `r'` such that `not (a r b)` is `a r' b`.
    pub fn dual(self) -> RelOp {
        match self {
            RelOp::Eq => RelOp::Ne,
            RelOp::Ne => RelOp::Eq,
            RelOp::Lt => RelOp::Ge,
            RelOp::Ge => RelOp::Lt,
            RelOp::Gt => RelOp::Le,
            RelOp::Le => RelOp::Gt,
            RelOp::In => RelOp::NotIn,
            RelOp::NotIn => RelOp::In,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub enum Pred {
    True,
    False,
    Rel(Expr, RelOp, Expr),
    Not(Box<Pred>),
    And(Box<Pred>, Box<Pred>),
    Or(Box<Pred>, Box<Pred>),
    Implies(Box<Pred>, Box<Pred>),
    Forall(String, Domain, Box<Pred>),
    Exists(String, Domain, Box<Pred>),
}

impl Pred {
    pub fn rel(lhs: Expr, op: RelOp, rhs: Expr) -> Pred {
        Pred::Rel(lhs, op, rhs)
    }

    #[allow(clippy::should_implement_trait)]
    pub fn not(p: Pred) -> Pred {
        Pred::Not(Box::new(p))
    }

    pub fn and(a: Pred, b: Pred) -> Pred {
        Pred::And(Box::new(a), Box::new(b))
    }

    pub fn or(a: Pred, b: Pred) -> Pred {
        Pred::Or(Box::new(a), Box::new(b))
    }

    pub fn implies(a: Pred, b: Pred) -> Pred {
        Pred::Implies(Box::new(a), Box::new(b))
    }

    /// Left-nested conjunction; `True` when empty.
    pub fn conj<I: IntoIterator<Item = Pred>>(items: I) -> Pred {
        items.into_iter().reduce(Pred::and).unwrap_or(Pred::True)
    }

    /// Left-nested disjunction; `False` when empty.
    pub fn disj<I: IntoIterator<Item = Pred>>(items: I) -> Pred {
        items.into_iter().reduce(Pred::or).unwrap_or(Pred::False)
    }

    /// Leaves of the top-level `And` tree, left to right.
    pub fn conjuncts(&self) -> Vec<&Pred> {
        let mut out = Vec::new();
        fn go<'a>(p: &'a Pred, out: &mut Vec<&'a Pred>) {
            match p {
                Pred::And(a, b) => {
                    go(a, out);
                    go(b, out);
                }
                other => out.push(other),
            }
        }
        go(self, &mut out);
        out
    }

    /// Leaves of the top-level `Or` tree, left to right.
    pub fn disjuncts(&self) -> Vec<&Pred> {
        let mut out = Vec::new();
        fn go<'a>(p: &'a Pred, out: &mut Vec<&'a Pred>) {
            match p {
                Pred::Or(a, b) => {
                    go(a, out);
                    go(b, out);
                }
                other => out.push(other),
            }
        }
        go(self, &mut out);
        out
    }
}

/// Left-hand side of an assignment: `x` or the function-update sugar `x(i)`.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub enum LValue {
    Var(String),
    Apply(String, Expr),
}

impl LValue {
    pub fn root(&self) -> &str {
        match self {
            LValue::Var(x) | LValue::Apply(x, _) => x,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub enum Subst {
    Skip,
    /// Simultaneous assignment; roots are pairwise distinct.
    Assign(Vec<(LValue, Expr)>),
    Guard(Pred, Box<Subst>),
    Choice(Box<Subst>, Box<Subst>),
    Any(String, Domain, Box<Subst>),
    /// Surface sugar, removed by normalization.
    If(Pred, Box<Subst>, Box<Subst>),
}

impl Subst {
    pub fn assign(x: &str, e: Expr) -> Subst {
        Subst::Assign(vec![(LValue::Var(x.to_string()), e)])
    }

    pub fn guard(p: Pred, s: Subst) -> Subst {
        Subst::Guard(p, Box::new(s))
    }

    pub fn choice(a: Subst, b: Subst) -> Subst {
        Subst::Choice(Box::new(a), Box::new(b))
    }

    pub fn any(z: &str, d: Domain, s: Subst) -> Subst {
        Subst::Any(z.to_string(), d, Box::new(s))
    }
}

/// A closed specification `<X, I, Init, Ev>` over finite domains.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct EventSystem {
    pub vars: IndexMap<String, Domain>,
    pub invariant: Pred,
    pub init: Subst,
    pub events: IndexMap<String, Subst>,
}

/// A variable occurrence: current value or after-value.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct VarRef {
    pub name: String,
    pub primed: bool,
}

impl VarRef {
    pub fn cur(name: &str) -> VarRef {
        VarRef { name: name.to_string(), primed: false }
    }

    pub fn next(name: &str) -> VarRef {
        VarRef { name: name.to_string(), primed: true }
    }

    pub fn to_expr(&self) -> Expr {
        if self.primed {
            Expr::Primed(self.name.clone())
        } else {
            Expr::Var(self.name.clone())
        }
    }
}

/// Free-variable queries shared by all term kinds.
pub trait Term {
    /// Collects free occurrences, skipping names in `bound`.
    fn collect_refs(&self, bound: &mut Vec<String>, out: &mut BTreeSet<VarRef>);

    /// Free variable occurrences, primed and unprimed.
    fn free_refs(&self) -> BTreeSet<VarRef> {
        let mut out = BTreeSet::new();
        self.collect_refs(&mut Vec::new(), &mut out);
        out
    }

    /// Names of free unprimed variables.
    fn free_vars(&self) -> BTreeSet<String> {
        self.free_refs().into_iter().filter(|r| !r.primed).map(|r| r.name).collect()
    }

    /// Names of free primed variables.
    fn free_primed(&self) -> BTreeSet<String> {
        self.free_refs().into_iter().filter(|r| r.primed).map(|r| r.name).collect()
    }

    /// Roots of all free occurrences, primed or not.
    fn free_roots(&self) -> BTreeSet<String> {
        self.free_refs().into_iter().map(|r| r.name).collect()
    }
}

impl Term for Expr {
    fn collect_refs(&self, bound: &mut Vec<String>, out: &mut BTreeSet<VarRef>) {
        match self {
            Expr::Var(x) => {
                if !bound.contains(x) {
                    out.insert(VarRef::cur(x));
                }
            }
            // bound names are never primed
            Expr::Primed(x) => {
                out.insert(VarRef::next(x));
            }
            Expr::Int(_) | Expr::Enum(_) => {}
            Expr::Card(e) | Expr::Dom(e) => e.collect_refs(bound, out),
            Expr::Apply(a, b)
            | Expr::RanRestrict(a, b)
            | Expr::Override(a, b)
            | Expr::Arith(_, a, b)
            | Expr::Range(a, b)
            | Expr::FnSpace(a, b) => {
                a.collect_refs(bound, out);
                b.collect_refs(bound, out);
            }
            Expr::SetLit(items) => items.iter().for_each(|e| e.collect_refs(bound, out)),
            Expr::Maplets(pairs) => {
                for (k, v) in pairs {
                    k.collect_refs(bound, out);
                    v.collect_refs(bound, out);
                }
            }
        }
    }
}

impl Term for Pred {
    fn collect_refs(&self, bound: &mut Vec<String>, out: &mut BTreeSet<VarRef>) {
        match self {
            Pred::True | Pred::False => {}
            Pred::Rel(a, _, b) => {
                a.collect_refs(bound, out);
                b.collect_refs(bound, out);
            }
            Pred::Not(p) => p.collect_refs(bound, out),
            Pred::And(a, b) | Pred::Or(a, b) | Pred::Implies(a, b) => {
                a.collect_refs(bound, out);
                b.collect_refs(bound, out);
            }
            Pred::Forall(z, _, p) | Pred::Exists(z, _, p) => {
                bound.push(z.clone());
                p.collect_refs(bound, out);
                bound.pop();
            }
        }
    }
}

impl Term for Subst {
    fn collect_refs(&self, bound: &mut Vec<String>, out: &mut BTreeSet<VarRef>) {
        match self {
            Subst::Skip => {}
            Subst::Assign(targets) => {
                for (lv, e) in targets {
                    if !bound.iter().any(|b| b == lv.root()) {
                        out.insert(VarRef::cur(lv.root()));
                    }
                    if let LValue::Apply(_, i) = lv {
                        i.collect_refs(bound, out);
                    }
                    e.collect_refs(bound, out);
                }
            }
            Subst::Guard(p, s) => {
                p.collect_refs(bound, out);
                s.collect_refs(bound, out);
            }
            Subst::Choice(a, b) => {
                a.collect_refs(bound, out);
                b.collect_refs(bound, out);
            }
            Subst::Any(z, _, s) => {
                bound.push(z.clone());
                s.collect_refs(bound, out);
                bound.pop();
            }
            Subst::If(p, a, b) => {
                p.collect_refs(bound, out);
                a.collect_refs(bound, out);
                b.collect_refs(bound, out);
            }
        }
    }
}

/// Roots of every assignment target in `s`. `x(i) := E` contributes `x`.
pub fn assigned_vars(s: &Subst) -> BTreeSet<String> {
    let mut out = BTreeSet::new();
    fn go(s: &Subst, out: &mut BTreeSet<String>) {
        match s {
            Subst::Skip => {}
            Subst::Assign(t) => out.extend(t.iter().map(|(lv, _)| lv.root().to_string())),
            Subst::Guard(_, s) | Subst::Any(_, _, s) => go(s, out),
            Subst::Choice(a, b) | Subst::If(_, a, b) => {
                go(a, out);
                go(b, out);
            }
        }
    }
    go(s, &mut out);
    out
}

/// For every assignment to `x` in `s`, the free variables of its right-hand
/// side (and of the index, for function updates), excluding local binders.
pub fn rhs_vars_of_assignments_to(s: &Subst, x: &str) -> BTreeSet<String> {
    let mut out = BTreeSet::new();
    fn go(s: &Subst, x: &str, bound: &mut Vec<String>, out: &mut BTreeSet<String>) {
        match s {
            Subst::Skip => {}
            Subst::Assign(t) => {
                for (lv, e) in t {
                    if lv.root() != x {
                        continue;
                    }
                    let mut refs = BTreeSet::new();
                    e.collect_refs(bound, &mut refs);
                    if let LValue::Apply(root, i) = lv {
                        i.collect_refs(bound, &mut refs);
                        refs.insert(VarRef::cur(root));
                    }
                    out.extend(refs.into_iter().map(|r| r.name));
                }
            }
            Subst::Guard(_, s) => go(s, x, bound, out),
            Subst::Any(z, _, s) => {
                bound.push(z.clone());
                go(s, x, bound, out);
                bound.pop();
            }
            Subst::Choice(a, b) | Subst::If(_, a, b) => {
                go(a, x, bound, out);
                go(b, x, bound, out);
            }
        }
    }
    go(s, x, &mut Vec::new(), &mut out);
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn free_vars_of_elementary_predicate() {
        let p = Pred::rel(
            Expr::apply(Expr::var("Bat"), Expr::var("Sw")),
            RelOp::Eq,
            Expr::enum_lit("ok"),
        );
        let fv: Vec<_> = p.free_vars().into_iter().collect();
        assert_eq!(fv, ["Bat", "Sw"]);
    }

    #[test]
    fn any_binder_is_not_free() {
        // @z.(z > x ==> y := z)
        let s = Subst::any(
            "z",
            Domain::IntRange(0, 3),
            Subst::guard(
                Pred::rel(Expr::var("z"), RelOp::Gt, Expr::var("x")),
                Subst::assign("y", Expr::var("z")),
            ),
        );
        let fv: Vec<_> = s.free_vars().into_iter().collect();
        assert_eq!(fv, ["x", "y"]);
        assert!(Subst::Skip.free_vars().is_empty());
    }

    #[test]
    fn assigned_vars_includes_function_update_roots() {
        let s = Subst::Assign(vec![
            (LValue::Var("Sw".into()), Expr::var("ns")),
            (LValue::Apply("Bat".into(), Expr::var("nb")), Expr::enum_lit("ko")),
        ]);
        let av: Vec<_> = assigned_vars(&s).into_iter().collect();
        assert_eq!(av, ["Bat", "Sw"]);
        assert!(assigned_vars(&Subst::Skip).is_empty());
        let rhs: Vec<_> = rhs_vars_of_assignments_to(&s, "Bat").into_iter().collect();
        assert_eq!(rhs, ["Bat", "nb"]);
    }

    #[test]
    fn domain_expression_round_trip() {
        let d = Domain::TotalFn(
            Box::new(Domain::IntRange(1, 3)),
            Box::new(Domain::EnumSet(vec!["ok".into(), "ko".into()])),
        );
        assert_eq!(Domain::from_expr(&d.to_expr()), Some(d.clone()));
        assert_eq!(d.size(), 8);
    }
}
