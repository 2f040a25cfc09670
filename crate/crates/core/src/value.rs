//! Concrete values and valuations.

use crate::ast::{Domain, Expr};
use serde::ser::{SerializeSeq, Serializer};
use serde::Serialize;
use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Value {
    Int(i64),
    Enum(String),
    Set(BTreeSet<Value>),
    /// A (possibly partial) function, as a finite map.
    Fn(BTreeMap<Value, Value>),
}

/// A total assignment of values to variable names.
pub type Valuation = BTreeMap<String, Value>;

impl fmt::Display for Value {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Value::Int(n) => write!(f, "{n}"),
            Value::Enum(s) => write!(f, "{s}"),
            Value::Set(items) => {
                write!(f, "{{")?;
                for (i, v) in items.iter().enumerate() {
                    if i > 0 {
                        write!(f, ", ")?;
                    }
                    write!(f, "{v}")?;
                }
                write!(f, "}}")
            }
            Value::Fn(map) => {
                write!(f, "{{")?;
                for (i, (k, v)) in map.iter().enumerate() {
                    if i > 0 {
                        write!(f, ", ")?;
                    }
                    write!(f, "{k} |-> {v}")?;
                }
                write!(f, "}}")
            }
        }
    }
}

// Ints as numbers, literals as strings, sets as arrays, functions as arrays of pairs.
impl Serialize for Value {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        match self {
            Value::Int(n) => s.serialize_i64(*n),
            Value::Enum(l) => s.serialize_str(l),
            Value::Set(items) => {
                let mut seq = s.serialize_seq(Some(items.len()))?;
                for v in items {
                    seq.serialize_element(v)?;
                }
                seq.end()
            }
            Value::Fn(map) => {
                let mut seq = s.serialize_seq(Some(map.len()))?;
                for (k, v) in map {
                    seq.serialize_element(&(k, v))?;
                }
                seq.end()
            }
        }
    }
}

impl Value {
    /// A literal expression denoting this value.
    pub fn to_expr(&self) -> Expr {
        match self {
            Value::Int(n) => Expr::Int(*n),
            Value::Enum(l) => Expr::Enum(l.clone()),
            Value::Set(items) => Expr::SetLit(items.iter().map(Value::to_expr).collect()),
            Value::Fn(map) => Expr::Maplets(map.iter().map(|(k, v)| (k.to_expr(), v.to_expr())).collect()),
        }
    }
}

impl Domain {
    /// All values of the domain in canonical order.
    pub fn values(&self) -> Vec<Value> {
        match self {
            Domain::IntRange(lo, hi) => (*lo..=*hi).map(Value::Int).collect(),
            Domain::EnumSet(lits) => {
                let mut v: Vec<Value> = lits.iter().cloned().map(Value::Enum).collect();
                v.sort();
                v
            }
            Domain::TotalFn(d, r) => {
                let keys = d.values();
                let ran = r.values();
                let mut out = vec![BTreeMap::new()];
                for k in &keys {
                    let mut next = Vec::with_capacity(out.len() * ran.len());
                    for partial in &out {
                        for v in &ran {
                            let mut m = partial.clone();
                            m.insert(k.clone(), v.clone());
                            next.push(m);
                        }
                    }
                    out = next;
                }
                out.into_iter().map(Value::Fn).collect()
            }
        }
    }

    pub fn contains(&self, v: &Value) -> bool {
        match (self, v) {
            (Domain::IntRange(lo, hi), Value::Int(n)) => lo <= n && n <= hi,
            (Domain::EnumSet(lits), Value::Enum(l)) => lits.contains(l),
            (Domain::TotalFn(d, r), Value::Fn(map)) => {
                let keys = d.values();
                map.len() == keys.len()
                    && keys.iter().all(|k| map.get(k).is_some_and(|x| r.contains(x)))
            }
            _ => false,
        }
    }

    /// The first value in canonical order.
    pub fn first_value(&self) -> Value {
        match self {
            Domain::IntRange(lo, _) => Value::Int(*lo),
            Domain::EnumSet(_) => self.values().swap_remove(0),
            Domain::TotalFn(d, r) => {
                let v = r.first_value();
                Value::Fn(d.values().into_iter().map(|k| (k, v.clone())).collect())
            }
        }
    }
}

/// Renders a valuation as `x=1, y=ok`.
pub fn show_valuation(v: &Valuation) -> String {
    v.iter().map(|(k, x)| format!("{k}={x}")).collect::<Vec<_>>().join(", ")
}

/// Calls `f` on every valuation of `vars` (odometer order, last variable fastest).
/// Stops early when `f` returns `false`; returns whether enumeration completed.
pub fn for_each_valuation<F>(vars: &[(String, Vec<Value>)], mut f: F) -> bool
where
    F: FnMut(&Valuation) -> bool,
{
    if vars.iter().any(|(_, vals)| vals.is_empty()) {
        return true;
    }
    let mut idx = vec![0usize; vars.len()];
    let mut val: Valuation = vars.iter().map(|(n, vals)| (n.clone(), vals[0].clone())).collect();
    loop {
        if !f(&val) {
            return false;
        }
        let mut i = vars.len();
        loop {
            if i == 0 {
                return true;
            }
            i -= 1;
            idx[i] += 1;
            if idx[i] < vars[i].1.len() {
                val.insert(vars[i].0.clone(), vars[i].1[idx[i]].clone());
                break;
            }
            idx[i] = 0;
            val.insert(vars[i].0.clone(), vars[i].1[0].clone());
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn total_function_domain_enumerates_all_maps() {
        let d = Domain::TotalFn(
            Box::new(Domain::IntRange(1, 3)),
            Box::new(Domain::EnumSet(vec!["ok".into(), "ko".into()])),
        );
        let vals = d.values();
        assert_eq!(vals.len(), 8);
        assert!(vals.iter().all(|v| d.contains(v)));
        assert!(d.contains(&d.first_value()));
    }

    #[test]
    fn odometer_visits_product() {
        let vars = vec![
            ("a".to_string(), vec![Value::Int(0), Value::Int(1)]),
            ("b".to_string(), vec![Value::Int(0), Value::Int(1), Value::Int(2)]),
        ];
        let mut n = 0;
        assert!(for_each_valuation(&vars, |_| {
            n += 1;
            true
        }));
        assert_eq!(n, 6);
        let mut m = 0;
        assert!(!for_each_valuation(&vars, |_| {
            m += 1;
            m < 2
        }));
        assert_eq!(m, 2);
    }

    #[test]
    fn function_values_print_as_maplets() {
        let v = Value::Fn(
            [(Value::Int(1), Value::Enum("ok".into())), (Value::Int(2), Value::Enum("ko".into()))]
                .into_iter()
                .collect(),
        );
        assert_eq!(v.to_string(), "{1 |-> ok, 2 |-> ko}");
        assert_eq!(serde_json::to_string(&v).unwrap(), r#"[[1,"ok"],[2,"ko"]]"#);
    }
}
