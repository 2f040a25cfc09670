//! Slicing of finite event-B style event systems: variable selection,
//! syntactic abstraction, explicit-state semantics and test generation.

pub mod ast;
pub mod eval;
pub mod gen;
pub mod models;
pub mod normalize;
pub mod parser;
pub mod postman;
pub mod print;
pub mod semantics;
pub mod testgen;
pub mod transform;
pub mod types;
pub mod value;
pub mod varselect;
pub mod wp;

pub use ast::{Domain, EventSystem, Expr, LValue, Pred, RelOp, Subst, Term, VarRef};
pub use value::{Valuation, Value};
