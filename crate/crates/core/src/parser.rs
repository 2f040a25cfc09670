//! Reader for the `.evb` model format. The grammar is in `docs/grammar.ebnf`.

use crate::ast::{ArithOp, Domain, EventSystem, Expr, LValue, Pred, RelOp, Subst};
use crate::types::{self, Ctx};
use indexmap::IndexMap;
use std::collections::BTreeSet;
use std::fmt;
use thiserror::Error;

#[derive(Clone, Debug, PartialEq, Eq, Default)]
pub struct SourceSpan {
    pub file: String,
    pub start_line: usize,
    pub start_col: usize,
    pub end_line: usize,
    pub end_col: usize,
}

impl fmt::Display for SourceSpan {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:{}:{}", self.file, self.start_line, self.start_col)
    }
}

#[derive(Clone, Debug, Error, PartialEq, Eq)]
pub enum ParseError {
    #[error("{span}: syntax error: {msg}")]
    Syntax { span: SourceSpan, msg: String },
    #[error("{span}: type error: {msg}")]
    Type { span: SourceSpan, msg: String },
    #[error("{span}: undeclared identifier `{name}`")]
    Scope { span: SourceSpan, name: String },
}

impl ParseError {
    pub fn span(&self) -> &SourceSpan {
        match self {
            ParseError::Syntax { span, .. } | ParseError::Type { span, .. } | ParseError::Scope { span, .. } => span,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
enum Kind {
    Ident(String),
    Int(i64),
    Sym(&'static str),
    Eof,
}

#[derive(Clone, Debug)]
struct Tok {
    kind: Kind,
    line: usize,
    col: usize,
    end_line: usize,
    end_col: usize,
}

// Longest first.
const SYMBOLS: &[&str] = &[
    "-->", "==>", "|->", ":=", "==", "=>", "/=", "/:", "<=", ">=", "<+", "|>", "[]", "..", "(", ")", "{",
    "}", ",", ":", "=", "<", ">", "+", "-", "&", "!", "#", "@", ".", "'", ";",
];

fn unicode_alias(c: char) -> Option<&'static str> {
    Some(match c {
        '∈' => ":",
        '∉' => "/:",
        '≠' => "/=",
        '≤' => "<=",
        '≥' => ">=",
        '∧' => "&",
        '⇒' => "=>",
        '⟹' => "==>",
        '↦' => "|->",
        '▷' => "|>",
        '→' => "-->",
        '≜' => "==",
        '∀' => "!",
        '∃' => "#",
        _ => return None,
    })
}

const WORD_ALIASES: &[(char, &str)] = &[('∨', "or"), ('¬', "not")];

const KEYWORDS: &[&str] = &[
    "VARS", "INVARIANT", "INV", "INIT", "EVENT", "IF", "THEN", "ELSE", "END", "skip", "true", "false", "or",
    "not", "card", "dom",
];

fn lex(src: &str, file: &str) -> Result<Vec<Tok>, ParseError> {
    let chars: Vec<char> = src.chars().collect();
    let mut toks = Vec::new();
    let (mut i, mut line, mut col) = (0usize, 1usize, 1usize);
    let syntax = |line, col, msg: String| ParseError::Syntax {
        span: SourceSpan { file: file.to_string(), start_line: line, start_col: col, end_line: line, end_col: col },
        msg,
    };
    while i < chars.len() {
        let c = chars[i];
        if c == '\n' {
            i += 1;
            line += 1;
            col = 1;
            continue;
        }
        if c.is_whitespace() {
            i += 1;
            col += 1;
            continue;
        }
        if c == '/' && chars.get(i + 1) == Some(&'/') {
            while i < chars.len() && chars[i] != '\n' {
                i += 1;
            }
            continue;
        }
        let (l0, c0) = (line, col);
        let push = |toks: &mut Vec<Tok>, kind, len: usize| {
            toks.push(Tok { kind, line: l0, col: c0, end_line: l0, end_col: c0 + len });
        };
        if c.is_ascii_digit() {
            let start = i;
            while i < chars.len() && chars[i].is_ascii_digit() {
                i += 1;
            }
            let text: String = chars[start..i].iter().collect();
            let n = text.parse::<i64>().map_err(|_| syntax(l0, c0, format!("integer `{text}` out of range")))?;
            col += i - start;
            push(&mut toks, Kind::Int(n), i - start);
            continue;
        }
        if c.is_alphabetic() || c == '_' {
            let start = i;
            while i < chars.len() && (chars[i].is_alphanumeric() || chars[i] == '_') {
                i += 1;
            }
            col += i - start;
            push(&mut toks, Kind::Ident(chars[start..i].iter().collect()), i - start);
            continue;
        }
        if let Some(sym) = unicode_alias(c) {
            i += 1;
            col += 1;
            push(&mut toks, Kind::Sym(sym), 1);
            continue;
        }
        if let Some((_, w)) = WORD_ALIASES.iter().find(|(u, _)| *u == c) {
            i += 1;
            col += 1;
            push(&mut toks, Kind::Ident(w.to_string()), 1);
            continue;
        }
        let rest: String = chars[i..chars.len().min(i + 3)].iter().collect();
        match SYMBOLS.iter().find(|s| rest.starts_with(**s)) {
            Some(sym) => {
                i += sym.len();
                col += sym.len();
                push(&mut toks, Kind::Sym(sym), sym.len());
            }
            None => return Err(syntax(l0, c0, format!("unexpected character `{c}`"))),
        }
    }
    toks.push(Tok { kind: Kind::Eof, line, col, end_line: line, end_col: col });
    Ok(toks)
}

const RELOPS: &[(&str, RelOp)] = &[
    ("=", RelOp::Eq),
    ("/=", RelOp::Ne),
    ("<", RelOp::Lt),
    ("<=", RelOp::Le),
    (">", RelOp::Gt),
    (">=", RelOp::Ge),
    (":", RelOp::In),
    ("/:", RelOp::NotIn),
];

/// Tokens that may continue an expression after a closing parenthesis.
const EXPR_CONTINUATIONS: &[&str] = &["=", "/=", "<", "<=", ">", ">=", ":", "/:", "+", "-", "|>", "<+", "..", "-->", "("];

type PResult<T> = Result<T, ParseError>;

struct Parser {
    toks: Vec<Tok>,
    pos: usize,
    file: String,
    vars: IndexMap<String, Domain>,
    literals: BTreeSet<String>,
    locals: Vec<String>,
    allow_primed: bool,
    /// Furthest failure seen while backtracking, reported if every branch fails.
    furthest: Option<(usize, ParseError)>,
}

impl Parser {
    fn new(toks: Vec<Tok>, file: &str) -> Self {
        Parser {
            toks,
            pos: 0,
            file: file.to_string(),
            vars: IndexMap::new(),
            literals: BTreeSet::new(),
            locals: Vec::new(),
            allow_primed: false,
            furthest: None,
        }
    }

    fn peek(&self) -> &Kind {
        &self.toks[self.pos].kind
    }

    fn peek_at(&self, k: usize) -> &Kind {
        &self.toks[(self.pos + k).min(self.toks.len() - 1)].kind
    }

    fn is_sym(&self, s: &str) -> bool {
        matches!(self.peek(), Kind::Sym(x) if *x == s)
    }

    fn is_kw(&self, s: &str) -> bool {
        matches!(self.peek(), Kind::Ident(x) if x == s)
    }

    fn bump(&mut self) -> Tok {
        let t = self.toks[self.pos].clone();
        if self.pos + 1 < self.toks.len() {
            self.pos += 1;
        }
        t
    }

    fn span_of(&self, a: &Tok, b: &Tok) -> SourceSpan {
        SourceSpan {
            file: self.file.clone(),
            start_line: a.line,
            start_col: a.col,
            end_line: b.end_line,
            end_col: b.end_col,
        }
    }

    fn here(&self) -> SourceSpan {
        let t = &self.toks[self.pos];
        self.span_of(t, t)
    }

    fn err<T>(&mut self, msg: impl Into<String>) -> PResult<T> {
        let found = match self.peek() {
            Kind::Ident(x) => format!("`{x}`"),
            Kind::Int(n) => format!("`{n}`"),
            Kind::Sym(s) => format!("`{s}`"),
            Kind::Eof => "end of input".to_string(),
        };
        let e = ParseError::Syntax { span: self.here(), msg: format!("{}, found {found}", msg.into()) };
        self.note(e.clone());
        Err(e)
    }

    fn note(&mut self, e: ParseError) {
        if self.furthest.as_ref().is_none_or(|(p, _)| self.pos >= *p) {
            self.furthest = Some((self.pos, e));
        }
    }

    fn best_error(&self, e: ParseError) -> ParseError {
        match (&e, &self.furthest) {
            (ParseError::Syntax { .. }, Some((_, f))) => f.clone(),
            _ => e,
        }
    }

    fn expect_sym(&mut self, s: &str) -> PResult<Tok> {
        if self.is_sym(s) {
            Ok(self.bump())
        } else {
            self.err(format!("expected `{s}`"))
        }
    }

    fn expect_kw(&mut self, s: &str) -> PResult<Tok> {
        if self.is_kw(s) {
            Ok(self.bump())
        } else {
            self.err(format!("expected `{s}`"))
        }
    }

    fn ident(&mut self) -> PResult<String> {
        match self.peek().clone() {
            Kind::Ident(x) if !KEYWORDS.contains(&x.as_str()) => {
                self.bump();
                Ok(x)
            }
            _ => self.err("expected an identifier"),
        }
    }

    /// Runs `f`, restoring the position if it fails.
    fn attempt<T>(&mut self, f: impl FnOnce(&mut Self) -> PResult<T>) -> Option<T> {
        let (pos, locals) = (self.pos, self.locals.len());
        match f(self) {
            Ok(v) => Some(v),
            Err(e) => {
                if matches!(e, ParseError::Syntax { .. }) {
                    self.pos = pos;
                    self.locals.truncate(locals);
                    None
                } else {
                    // scope errors are definitive; surface them through `furthest`
                    self.furthest = Some((usize::MAX, e));
                    self.pos = pos;
                    self.locals.truncate(locals);
                    None
                }
            }
        }
    }

    fn scope_error<T>(&self, name: &str, tok: &Tok) -> PResult<T> {
        Err(ParseError::Scope { span: self.span_of(tok, tok), name: name.to_string() })
    }

    fn bind(&mut self, z: &str, tok: &Tok) -> PResult<()> {
        if self.vars.contains_key(z) || self.literals.contains(z) {
            return Err(ParseError::Syntax {
                span: self.span_of(tok, tok),
                msg: format!("bound name `{z}` shadows a variable or literal"),
            });
        }
        self.locals.push(z.to_string());
        Ok(())
    }

    // ---- domains ----

    fn int_lit(&mut self) -> PResult<i64> {
        let neg = if self.is_sym("-") {
            self.bump();
            true
        } else {
            false
        };
        match *self.peek() {
            Kind::Int(n) => {
                self.bump();
                Ok(if neg { -n } else { n })
            }
            _ => self.err("expected an integer"),
        }
    }

    /// A domain in a declaration; enumerated literals are introduced here.
    fn decl_domain(&mut self) -> PResult<Domain> {
        let d = self.domain_atom(true)?;
        if self.is_sym("-->") {
            self.bump();
            let r = self.decl_domain()?;
            return Ok(Domain::TotalFn(Box::new(d), Box::new(r)));
        }
        Ok(d)
    }

    fn domain_atom(&mut self, introduce: bool) -> PResult<Domain> {
        if self.is_sym("(") {
            self.bump();
            let d = self.decl_domain()?;
            self.expect_sym(")")?;
            return Ok(d);
        }
        if self.is_sym("{") {
            self.bump();
            let mut lits: Vec<String> = Vec::new();
            loop {
                let t = self.toks[self.pos].clone();
                let l = self.ident()?;
                if self.vars.contains_key(&l) {
                    return Err(ParseError::Syntax {
                        span: self.span_of(&t, &t),
                        msg: format!("`{l}` is a variable, not a literal"),
                    });
                }
                if !introduce && !self.literals.contains(&l) {
                    return self.scope_error(&l, &t);
                }
                if lits.contains(&l) {
                    return Err(ParseError::Syntax { span: self.span_of(&t, &t), msg: format!("duplicate literal `{l}`") });
                }
                lits.push(l);
                if self.is_sym(",") {
                    self.bump();
                } else {
                    break;
                }
            }
            self.expect_sym("}")?;
            if introduce {
                self.literals.extend(lits.iter().cloned());
            }
            return Ok(Domain::EnumSet(lits));
        }
        let lo = self.int_lit()?;
        self.expect_sym("..")?;
        let t = self.toks[self.pos].clone();
        let hi = self.int_lit()?;
        if hi < lo {
            return Err(ParseError::Syntax { span: self.span_of(&t, &t), msg: format!("empty range {lo}..{hi}") });
        }
        Ok(Domain::IntRange(lo, hi))
    }

    /// A binder domain: literals must already be declared.
    fn binder_domain(&mut self) -> PResult<Domain> {
        let d = self.domain_atom(false)?;
        if self.is_sym("-->") {
            self.bump();
            let r = self.binder_domain()?;
            return Ok(Domain::TotalFn(Box::new(d), Box::new(r)));
        }
        Ok(d)
    }

    // ---- expressions ----

    fn expr(&mut self) -> PResult<Expr> {
        let lhs = self.range_expr()?;
        if self.is_sym("-->") {
            self.bump();
            let rhs = self.expr()?;
            return Ok(Expr::FnSpace(Box::new(lhs), Box::new(rhs)));
        }
        Ok(lhs)
    }

    fn range_expr(&mut self) -> PResult<Expr> {
        let lhs = self.override_expr()?;
        if self.is_sym("..") {
            self.bump();
            let rhs = self.override_expr()?;
            return Ok(Expr::Range(Box::new(lhs), Box::new(rhs)));
        }
        Ok(lhs)
    }

    fn override_expr(&mut self) -> PResult<Expr> {
        let mut lhs = self.restrict_expr()?;
        while self.is_sym("<+") {
            self.bump();
            let rhs = self.restrict_expr()?;
            lhs = Expr::Override(Box::new(lhs), Box::new(rhs));
        }
        Ok(lhs)
    }

    fn restrict_expr(&mut self) -> PResult<Expr> {
        let mut lhs = self.additive()?;
        while self.is_sym("|>") {
            self.bump();
            let rhs = self.additive()?;
            lhs = Expr::RanRestrict(Box::new(lhs), Box::new(rhs));
        }
        Ok(lhs)
    }

    fn additive(&mut self) -> PResult<Expr> {
        let mut lhs = self.postfix()?;
        loop {
            let op = if self.is_sym("+") {
                ArithOp::Add
            } else if self.is_sym("-") {
                ArithOp::Sub
            } else {
                return Ok(lhs);
            };
            self.bump();
            let rhs = self.postfix()?;
            lhs = Expr::Arith(op, Box::new(lhs), Box::new(rhs));
        }
    }

    fn postfix(&mut self) -> PResult<Expr> {
        let mut e = self.primary()?;
        while self.is_sym("(") {
            self.bump();
            let a = self.expr()?;
            self.expect_sym(")")?;
            e = Expr::apply(e, a);
        }
        Ok(e)
    }

    fn resolve(&mut self, name: &str, tok: &Tok) -> PResult<Expr> {
        if self.locals.iter().any(|l| l == name) || self.vars.contains_key(name) {
            Ok(Expr::Var(name.to_string()))
        } else if self.literals.contains(name) {
            Ok(Expr::Enum(name.to_string()))
        } else {
            self.scope_error(name, tok)
        }
    }

    fn primary(&mut self) -> PResult<Expr> {
        match self.peek().clone() {
            Kind::Int(n) => {
                self.bump();
                Ok(Expr::Int(n))
            }
            Kind::Sym("-") if matches!(self.peek_at(1), Kind::Int(_)) => Ok(Expr::Int(self.int_lit()?)),
            Kind::Sym("(") => {
                self.bump();
                let e = self.expr()?;
                self.expect_sym(")")?;
                Ok(e)
            }
            Kind::Sym("{") => {
                self.bump();
                if self.is_sym("}") {
                    self.bump();
                    return Ok(Expr::SetLit(vec![]));
                }
                let first = self.expr()?;
                if self.is_sym("|->") {
                    self.bump();
                    let v = self.expr()?;
                    let mut pairs = vec![(first, v)];
                    while self.is_sym(",") {
                        self.bump();
                        let k = self.expr()?;
                        self.expect_sym("|->")?;
                        let v = self.expr()?;
                        pairs.push((k, v));
                    }
                    self.expect_sym("}")?;
                    return Ok(Expr::Maplets(pairs));
                }
                let mut items = vec![first];
                while self.is_sym(",") {
                    self.bump();
                    items.push(self.expr()?);
                }
                self.expect_sym("}")?;
                Ok(Expr::SetLit(items))
            }
            Kind::Ident(k) if k == "card" || k == "dom" => {
                self.bump();
                self.expect_sym("(")?;
                let e = self.expr()?;
                self.expect_sym(")")?;
                Ok(if k == "card" { Expr::Card(Box::new(e)) } else { Expr::Dom(Box::new(e)) })
            }
            Kind::Ident(x) if !KEYWORDS.contains(&x.as_str()) => {
                let tok = self.bump();
                if self.is_sym("'") {
                    let q = self.bump();
                    if !self.allow_primed {
                        return Err(ParseError::Syntax {
                            span: self.span_of(&tok, &q),
                            msg: "primed variables are not allowed in models".into(),
                        });
                    }
                    if !self.vars.contains_key(&x) {
                        return self.scope_error(&x, &tok);
                    }
                    return Ok(Expr::Primed(x));
                }
                self.resolve(&x, &tok)
            }
            _ => self.err("expected an expression"),
        }
    }

    // ---- predicates ----

    fn pred(&mut self) -> PResult<Pred> {
        let lhs = self.disj()?;
        if self.is_sym("=>") {
            self.bump();
            let rhs = self.pred()?;
            return Ok(Pred::implies(lhs, rhs));
        }
        Ok(lhs)
    }

    fn disj(&mut self) -> PResult<Pred> {
        let mut lhs = self.conj()?;
        while self.is_kw("or") {
            self.bump();
            let rhs = self.conj()?;
            lhs = Pred::or(lhs, rhs);
        }
        Ok(lhs)
    }

    fn conj(&mut self) -> PResult<Pred> {
        let mut lhs = self.neg()?;
        while self.is_sym("&") {
            self.bump();
            let rhs = self.neg()?;
            lhs = Pred::and(lhs, rhs);
        }
        Ok(lhs)
    }

    fn neg(&mut self) -> PResult<Pred> {
        if self.is_kw("not") {
            self.bump();
            return Ok(Pred::not(self.neg()?));
        }
        self.atom()
    }

    fn quantifier(&mut self) -> PResult<Pred> {
        let universal = self.is_sym("!");
        self.bump();
        let tok = self.toks[self.pos].clone();
        let z = self.ident()?;
        self.expect_sym(":")?;
        let d = self.binder_domain()?;
        self.expect_sym(".")?;
        self.expect_sym("(")?;
        self.bind(&z, &tok)?;
        let body = self.pred();
        self.locals.pop();
        let body = body?;
        self.expect_sym(")")?;
        Ok(if universal {
            Pred::Forall(z, d, Box::new(body))
        } else {
            Pred::Exists(z, d, Box::new(body))
        })
    }

    fn atom(&mut self) -> PResult<Pred> {
        if self.is_kw("true") {
            self.bump();
            return Ok(Pred::True);
        }
        if self.is_kw("false") {
            self.bump();
            return Ok(Pred::False);
        }
        if self.is_sym("!") || self.is_sym("#") {
            return self.quantifier();
        }
        if self.is_sym("(") {
            let paren = self.attempt(|p| {
                p.bump();
                let q = p.pred()?;
                p.expect_sym(")")?;
                if EXPR_CONTINUATIONS.iter().any(|s| p.is_sym(s)) {
                    return p.err("expression continues after parenthesis");
                }
                Ok(q)
            });
            if let Some(q) = paren {
                return Ok(q);
            }
            if let Some((usize::MAX, e)) = &self.furthest {
                return Err(e.clone());
            }
        }
        let lhs = self.expr()?;
        let op = match self.peek() {
            Kind::Sym(s) => RELOPS.iter().find(|(t, _)| t == s).map(|(_, op)| *op),
            _ => None,
        };
        let Some(op) = op else {
            return self.err("expected a relational operator");
        };
        self.bump();
        let rhs = self.expr()?;
        Ok(Pred::rel(lhs, op, rhs))
    }

    // ---- substitutions ----

    fn subst(&mut self) -> PResult<Subst> {
        let guarded = self.attempt(|p| {
            let g = p.pred()?;
            p.expect_sym("==>")?;
            Ok(g)
        });
        if let Some(g) = guarded {
            let body = self.subst()?;
            return Ok(Subst::guard(g, body));
        }
        if let Some((usize::MAX, e)) = &self.furthest {
            return Err(e.clone());
        }
        self.choice()
    }

    fn choice(&mut self) -> PResult<Subst> {
        let mut lhs = self.subst_primary()?;
        while self.is_sym("[]") {
            self.bump();
            let rhs = self.subst_primary()?;
            lhs = Subst::choice(lhs, rhs);
        }
        Ok(lhs)
    }

    fn subst_primary(&mut self) -> PResult<Subst> {
        if self.is_kw("skip") {
            self.bump();
            return Ok(Subst::Skip);
        }
        if self.is_sym("@") {
            return self.any();
        }
        if self.is_kw("IF") {
            self.bump();
            let c = self.pred()?;
            self.expect_kw("THEN")?;
            let a = self.subst()?;
            let b = if self.is_kw("ELSE") {
                self.bump();
                self.subst()?
            } else {
                Subst::Skip
            };
            self.expect_kw("END")?;
            return Ok(Subst::If(c, Box::new(a), Box::new(b)));
        }
        if self.is_sym("(") {
            self.bump();
            let s = self.subst()?;
            self.expect_sym(")")?;
            return Ok(s);
        }
        self.assign()
    }

    fn any(&mut self) -> PResult<Subst> {
        self.bump();
        let tok = self.toks[self.pos].clone();
        let z = self.ident()?;
        if self.is_sym(":") {
            self.bump();
            let d = self.binder_domain()?;
            self.expect_sym(".")?;
            self.expect_sym("(")?;
            self.bind(&z, &tok)?;
            let body = self.subst();
            self.locals.pop();
            let body = body?;
            self.expect_sym(")")?;
            return Ok(Subst::any(&z, d, body));
        }
        self.expect_sym(".")?;
        let open = self.expect_sym("(")?;
        self.bind(&z, &tok)?;
        let inner = (|| {
            let g = self.pred()?;
            self.expect_sym("==>")?;
            let s = self.subst()?;
            Ok((g, s))
        })();
        self.locals.pop();
        let (g, s) = inner?;
        let close = self.expect_sym(")")?;
        let d = match g.conjuncts().first() {
            Some(Pred::Rel(Expr::Var(v), RelOp::In, dom)) if *v == z => Domain::from_expr(dom),
            _ => None,
        };
        match d {
            Some(d) => Ok(Subst::any(&z, d, Subst::guard(g, s))),
            None => Err(ParseError::Syntax {
                span: self.span_of(&open, &close),
                msg: format!("the guard of `@{z}.` must start with `{z} : <domain>`"),
            }),
        }
    }

    fn lvalue(&mut self) -> PResult<LValue> {
        let tok = self.toks[self.pos].clone();
        let x = self.ident()?;
        if !self.vars.contains_key(&x) && !self.locals.contains(&x) {
            return self.scope_error(&x, &tok);
        }
        if self.is_sym("(") {
            self.bump();
            let i = self.expr()?;
            self.expect_sym(")")?;
            return Ok(LValue::Apply(x, i));
        }
        Ok(LValue::Var(x))
    }

    fn assign(&mut self) -> PResult<Subst> {
        let start = self.toks[self.pos].clone();
        let mut lhs = vec![self.lvalue()?];
        while self.is_sym(",") {
            self.bump();
            lhs.push(self.lvalue()?);
        }
        self.expect_sym(":=")?;
        let mut rhs = vec![self.expr()?];
        while self.is_sym(",") {
            self.bump();
            rhs.push(self.expr()?);
        }
        if lhs.len() != rhs.len() {
            let end = self.toks[self.pos.saturating_sub(1)].clone();
            return Err(ParseError::Syntax {
                span: self.span_of(&start, &end),
                msg: format!("{} target(s) but {} value(s)", lhs.len(), rhs.len()),
            });
        }
        Ok(Subst::Assign(lhs.into_iter().zip(rhs).collect()))
    }

    // ---- models ----

    fn section_start(&self) -> bool {
        ["VARS", "INVARIANT", "INV", "INIT", "EVENT"].iter().any(|k| self.is_kw(k)) || *self.peek() == Kind::Eof
    }

    fn check_section(&self, start: &Tok, r: Result<(), String>) -> PResult<()> {
        r.map_err(|msg| {
            let end = &self.toks[self.pos.saturating_sub(1)];
            ParseError::Type { span: self.span_of(start, end), msg }
        })
    }

    fn model(&mut self) -> PResult<EventSystem> {
        if self.is_kw("VARS") {
            self.bump();
            while !self.section_start() {
                let tok = self.toks[self.pos].clone();
                let x = self.ident()?;
                if self.vars.contains_key(&x) || self.literals.contains(&x) {
                    return Err(ParseError::Syntax {
                        span: self.span_of(&tok, &tok),
                        msg: format!("`{x}` declared twice"),
                    });
                }
                self.expect_sym(":")?;
                let d = self.decl_domain()?;
                if self.literals.contains(&x) {
                    return Err(ParseError::Syntax {
                        span: self.span_of(&tok, &tok),
                        msg: format!("`{x}` is both a variable and a literal"),
                    });
                }
                self.vars.insert(x, d);
                if self.is_sym(",") {
                    self.bump();
                }
            }
        }
        let mut invariant = Pred::True;
        if self.is_kw("INVARIANT") || self.is_kw("INV") {
            let start = self.bump();
            invariant = self.pred().map_err(|e| self.best_error(e))?;
            self.check_section(&start, types::check_pred(&invariant, &mut Ctx::new(&self.vars)))?;
        }
        let mut init = Subst::Skip;
        if self.is_kw("INIT") {
            let start = self.bump();
            self.furthest = None;
            init = self.subst().map_err(|e| self.best_error(e))?;
            self.check_section(&start, types::check_init(&init, &self.vars))?;
        }
        let mut events = IndexMap::new();
        while self.is_kw("EVENT") {
            let start = self.bump();
            let tok = self.toks[self.pos].clone();
            let name = self.ident()?;
            if events.contains_key(&name) {
                return Err(ParseError::Syntax {
                    span: self.span_of(&tok, &tok),
                    msg: format!("event `{name}` defined twice"),
                });
            }
            self.expect_sym("==")?;
            self.furthest = None;
            let body = self.subst().map_err(|e| self.best_error(e))?;
            self.check_section(&start, types::check_subst(&body, &mut Ctx::new(&self.vars)))?;
            events.insert(name, body);
        }
        if *self.peek() != Kind::Eof {
            return self.err("expected a section keyword");
        }
        Ok(EventSystem { vars: self.vars.clone(), invariant, init, events })
    }

    fn finish<T>(&mut self, r: PResult<T>) -> PResult<T> {
        let v = r.map_err(|e| self.best_error(e))?;
        if *self.peek() != Kind::Eof {
            return self.err("unexpected trailing input");
        }
        Ok(v)
    }
}

/// Parses a model from text. Diagnostics name the file `<input>`.
pub fn parse_model(text: &str) -> Result<EventSystem, ParseError> {
    parse_model_named(text, "<input>")
}

pub fn parse_model_named(text: &str, file: &str) -> Result<EventSystem, ParseError> {
    let mut p = Parser::new(lex(text, file)?, file);
    p.model()
}

fn in_context(text: &str, m: &EventSystem, primed: bool) -> Result<Parser, ParseError> {
    let mut p = Parser::new(lex(text, "<term>")?, "<term>");
    p.vars = m.vars.clone();
    for d in m.vars.values() {
        collect_literals(d, &mut p.literals);
    }
    p.allow_primed = primed;
    Ok(p)
}

fn collect_literals(d: &Domain, out: &mut BTreeSet<String>) {
    match d {
        Domain::IntRange(..) => {}
        Domain::EnumSet(l) => out.extend(l.iter().cloned()),
        Domain::TotalFn(a, b) => {
            collect_literals(a, out);
            collect_literals(b, out);
        }
    }
}

/// Parses a before-after predicate over the variables of `m`; `x'` denotes an after-value.
pub fn parse_pred(text: &str, m: &EventSystem) -> Result<Pred, ParseError> {
    let mut p = in_context(text, m, true)?;
    let r = p.pred();
    let q = p.finish(r)?;
    types::check_pred(&q, &mut Ctx::new(&m.vars))
        .map_err(|msg| ParseError::Type { span: SourceSpan { file: "<term>".into(), ..Default::default() }, msg })?;
    Ok(q)
}

/// Parses a substitution over the variables of `m`.
pub fn parse_subst(text: &str, m: &EventSystem) -> Result<Subst, ParseError> {
    let mut p = in_context(text, m, false)?;
    let r = p.subst();
    let s = p.finish(r)?;
    types::check_subst(&s, &mut Ctx::new(&m.vars))
        .map_err(|msg| ParseError::Type { span: SourceSpan { file: "<term>".into(), ..Default::default() }, msg })?;
    Ok(s)
}

#[cfg(test)]
mod tests {
    use super::*;

    const MINI: &str = "VARS x : 0..1 INV x ∈ 0..1 INIT x := 0 EVENT e ≜ skip";

    #[test]
    fn minimal_model() {
        let m = parse_model(MINI).unwrap();
        assert_eq!(m.vars.len(), 1);
        assert_eq!(m.events.len(), 1);
        assert_eq!(m.events["e"], Subst::Skip);
        assert_eq!(m.invariant, Pred::rel(Expr::var("x"), RelOp::In, Domain::IntRange(0, 1).to_expr()));
    }

    #[test]
    fn undeclared_variable_is_a_scope_error() {
        match parse_model("EVENT e == y := 1") {
            Err(ParseError::Scope { name, span }) => {
                assert_eq!(name, "y");
                assert_eq!((span.start_line, span.start_col), (1, 12));
            }
            other => panic!("unexpected {other:?}"),
        }
        assert!(matches!(
            parse_model("VARS x : 0..1 EVENT e == x = 0 ==> x := z"),
            Err(ParseError::Scope { name, .. }) if name == "z"
        ));
    }

    #[test]
    fn type_errors_carry_section_span() {
        let e = parse_model("VARS x : 0..1 c : {a, b}\nINIT x, c := 0, a\nEVENT e == x := a").unwrap_err();
        match e {
            ParseError::Type { span, .. } => assert_eq!(span.start_line, 3),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn guards_and_choices() {
        let m = parse_model("VARS x : 0..2\nEVENT e == x = 0 ==> (x = 1 ==> skip) [] x := 2").unwrap();
        let Subst::Guard(_, body) = &m.events["e"] else { panic!() };
        assert!(matches!(body.as_ref(), Subst::Choice(a, _) if matches!(a.as_ref(), Subst::Guard(..))));
    }

    #[test]
    fn any_short_form_infers_domain() {
        let m = parse_model("VARS x : 0..2\nEVENT e == @z.(z : 0..2 & z /= x ==> x := z)").unwrap();
        let Subst::Any(z, d, body) = &m.events["e"] else { panic!() };
        assert_eq!(z, "z");
        assert_eq!(d, &Domain::IntRange(0, 2));
        assert!(matches!(body.as_ref(), Subst::Guard(..)));
        assert!(parse_model("VARS x : 0..2\nEVENT e == @z.(z /= x ==> x := z)").is_err());
    }

    #[test]
    fn parenthesised_expression_atom() {
        let m = parse_model("VARS x : 0..3\nINVARIANT (x + 1) > 0 & (x > 0 or x = 0)").unwrap();
        assert_eq!(m.invariant.conjuncts().len(), 2);
    }

    #[test]
    fn primes_only_in_terms() {
        assert!(parse_model("VARS x : 0..1\nINVARIANT x' = 0").is_err());
        let m = parse_model(MINI).unwrap();
        assert_eq!(parse_pred("x' = x", &m).unwrap(), Pred::rel(Expr::primed("x"), RelOp::Eq, Expr::var("x")));
    }

    #[test]
    fn binders_cannot_shadow() {
        assert!(parse_model("VARS x : 0..1\nINVARIANT !x : 0..1 . (x = 0)").is_err());
    }

    #[test]
    fn syntax_error_points_at_offender() {
        let e = parse_model("VARS x : 0..1\nINIT x := 0\nEVENT e == x := := 1").unwrap_err();
        assert!(matches!(e, ParseError::Syntax { .. }));
        assert_eq!(e.span().start_line, 3);
    }
}
