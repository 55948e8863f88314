//! Terms, atoms, clauses, programs; the input language parser; syntactic
//! unification and renaming apart.
//!
//! Input files contain statements terminated by `.`:
//!
//! ```text
//! type list(U).
//! func cons : U, list(U) -> list(U).
//! func nil : -> list(U).
//! pred append : list(U), list(U), list(U).
//! append(nil, Ys, Ys).
//! append(cons(X,Xs), Ys, cons(X,Zs)) :- append(Xs, Ys, Zs).
//! query append(cons(A,nil), cons(B,nil), C).
//! ```
//!
//! Identifiers starting with a lowercase letter name types, functions and
//! predicates; identifiers starting with an uppercase letter (or `_`) are
//! variables in terms and parameters in types. Integer literals are constants
//! of the built-in type `int`, double-quoted literals constants of `str`.
//! `%` starts a line comment.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::sync::atomic::{AtomicU64, Ordering};

use thiserror::Error;

use crate::types::{Signature, SignatureError, TypeTerm};

#[derive(Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Debug)]
pub enum Term {
    Var(String),
    App(String, Vec<Term>),
}

impl Term {
    pub fn var(name: &str) -> Term {
        Term::Var(name.to_string())
    }

    pub fn app(name: &str, args: Vec<Term>) -> Term {
        Term::App(name.to_string(), args)
    }

    pub fn constant(name: &str) -> Term {
        Term::App(name.to_string(), vec![])
    }

    pub fn vars(&self) -> BTreeSet<String> {
        let mut out = BTreeSet::new();
        self.collect_vars(&mut out);
        out
    }

    fn collect_vars(&self, out: &mut BTreeSet<String>) {
        match self {
            Term::Var(x) => {
                out.insert(x.clone());
            }
            Term::App(_, args) => {
                for a in args {
                    a.collect_vars(out);
                }
            }
        }
    }

    pub fn apply(&self, theta: &Subst) -> Term {
        match self {
            Term::Var(x) => match theta.0.get(x) {
                Some(t) => t.clone(),
                None => self.clone(),
            },
            Term::App(f, args) => {
                Term::App(f.clone(), args.iter().map(|a| a.apply(theta)).collect())
            }
        }
    }

    fn occurs(&self, x: &str) -> bool {
        match self {
            Term::Var(y) => x == y,
            Term::App(_, args) => args.iter().any(|a| a.occurs(x)),
        }
    }
}

impl fmt::Display for Term {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Term::Var(x) => write!(f, "{x}"),
            Term::App(g, args) => {
                write!(f, "{g}")?;
                if !args.is_empty() {
                    write!(f, "(")?;
                    for (i, a) in args.iter().enumerate() {
                        if i > 0 {
                            write!(f, ",")?;
                        }
                        write!(f, "{a}")?;
                    }
                    write!(f, ")")?;
                }
                Ok(())
            }
        }
    }
}

#[derive(Clone, PartialEq, Eq, PartialOrd, Ord, Debug)]
pub struct Atom {
    pub pred: String,
    pub args: Vec<Term>,
}

impl Atom {
    pub fn vars(&self) -> BTreeSet<String> {
        let mut out = BTreeSet::new();
        for a in &self.args {
            a.collect_vars(&mut out);
        }
        out
    }

    pub fn apply(&self, theta: &Subst) -> Atom {
        Atom {
            pred: self.pred.clone(),
            args: self.args.iter().map(|a| a.apply(theta)).collect(),
        }
    }

    /// Renames variables to `V1, V2, ...` in order of first occurrence.
    pub fn canonical(&self) -> Atom {
        let mut map = BTreeMap::new();
        let mut order = Vec::new();
        for a in &self.args {
            occurrence_order(a, &mut map, &mut order);
        }
        let theta = Subst(
            order
                .iter()
                .enumerate()
                .map(|(i, x)| (x.clone(), Term::Var(format!("V{}", i + 1))))
                .collect(),
        );
        self.apply(&theta)
    }
}

fn occurrence_order(t: &Term, seen: &mut BTreeMap<String, ()>, order: &mut Vec<String>) {
    match t {
        Term::Var(x) => {
            if seen.insert(x.clone(), ()).is_none() {
                order.push(x.clone());
            }
        }
        Term::App(_, args) => {
            for a in args {
                occurrence_order(a, seen, order);
            }
        }
    }
}

impl fmt::Display for Atom {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", Term::App(self.pred.clone(), self.args.clone()))
    }
}

#[derive(Clone, PartialEq, Eq, Debug)]
pub struct Clause {
    pub head: Atom,
    pub body: Vec<Atom>,
}

impl Clause {
    pub fn vars(&self) -> BTreeSet<String> {
        let mut out = self.head.vars();
        for a in &self.body {
            out.extend(a.vars());
        }
        out
    }
}

impl fmt::Display for Clause {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.head)?;
        if !self.body.is_empty() {
            write!(f, " :- ")?;
            for (i, a) in self.body.iter().enumerate() {
                if i > 0 {
                    write!(f, ", ")?;
                }
                write!(f, "{a}")?;
            }
        }
        write!(f, ".")
    }
}

/// Predicate name used for the clause a `query` statement compiles to.
pub const GOAL_PRED: &str = "goal$";

#[derive(Clone, Debug, Default)]
pub struct Program {
    pub sig: Signature,
    pub clauses: Vec<Clause>,
    /// The body atoms of the `query` statement, if any.
    pub query: Option<Vec<Atom>>,
}

/// Idempotent substitution on terms.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct Subst(pub BTreeMap<String, Term>);

impl Subst {
    pub fn new() -> Self {
        Subst::default()
    }

    pub fn bind(&mut self, x: &str, t: Term) {
        // Keep idempotency: substitute into existing ranges first.
        let single = Subst(BTreeMap::from([(x.to_string(), t.clone())]));
        for v in self.0.values_mut() {
            *v = v.apply(&single);
        }
        self.0.insert(x.to_string(), t);
    }

    pub fn compose(&self, other: &Subst) -> Subst {
        let mut out = BTreeMap::new();
        for (x, t) in &self.0 {
            out.insert(x.clone(), t.apply(other));
        }
        for (x, t) in &other.0 {
            out.entry(x.clone()).or_insert_with(|| t.clone());
        }
        Subst(out)
    }
}

impl fmt::Display for Subst {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{{")?;
        for (i, (x, t)) in self.0.iter().enumerate() {
            if i > 0 {
                write!(f, ", ")?;
            }
            write!(f, "{x} -> {t}")?;
        }
        write!(f, "}}")
    }
}

/// Most general unifier of two term tuples, with occurs check.
pub fn mgu(lhs: &[Term], rhs: &[Term]) -> Option<Subst> {
    if lhs.len() != rhs.len() {
        return None;
    }
    let mut theta = Subst::new();
    let mut work: Vec<(Term, Term)> = lhs.iter().cloned().zip(rhs.iter().cloned()).collect();
    while let Some((a, b)) = work.pop() {
        let a = a.apply(&theta);
        let b = b.apply(&theta);
        match (a, b) {
            (Term::Var(x), Term::Var(y)) if x == y => {}
            (Term::Var(x), t) | (t, Term::Var(x)) => {
                if t.occurs(&x) {
                    return None;
                }
                theta.bind(&x, t);
            }
            (Term::App(f, xs), Term::App(g, ys)) => {
                if f != g || xs.len() != ys.len() {
                    return None;
                }
                work.extend(xs.into_iter().zip(ys));
            }
        }
    }
    Some(theta)
}

static FRESH: AtomicU64 = AtomicU64::new(0);

/// A fresh variable name that cannot be written in source programs.
pub fn fresh_var() -> String {
    format!("_G{}", FRESH.fetch_add(1, Ordering::Relaxed))
}

/// A renaming of `vars` to fresh variables.
pub fn renaming_apart(vars: &BTreeSet<String>) -> Subst {
    Subst(
        vars.iter()
            .map(|x| (x.clone(), Term::Var(fresh_var())))
            .collect(),
    )
}

#[derive(Error, Debug, Clone, PartialEq, Eq)]
#[error("{line}:{col}: {msg}")]
pub struct ParseError {
    pub line: usize,
    pub col: usize,
    pub msg: String,
}

#[derive(Clone, Debug, PartialEq, Eq)]
enum Tok {
    Lower(String),
    Upper(String),
    Int(String),
    Str(String),
    LParen,
    RParen,
    Comma,
    Dot,
    Colon,
    Arrow,
    Neck, // :-
}

struct Lexer<'a> {
    src: &'a [u8],
    pos: usize,
    line: usize,
    col: usize,
}

type Spanned = (Tok, usize, usize);

impl<'a> Lexer<'a> {
    fn new(src: &'a str) -> Self {
        Lexer {
            src: src.as_bytes(),
            pos: 0,
            line: 1,
            col: 1,
        }
    }

    fn err(&self, msg: impl Into<String>) -> ParseError {
        ParseError {
            line: self.line,
            col: self.col,
            msg: msg.into(),
        }
    }

    fn bump(&mut self) -> Option<u8> {
        let c = *self.src.get(self.pos)?;
        self.pos += 1;
        if c == b'\n' {
            self.line += 1;
            self.col = 1;
        } else {
            self.col += 1;
        }
        Some(c)
    }

    fn peek(&self) -> Option<u8> {
        self.src.get(self.pos).copied()
    }

    fn tokens(mut self) -> Result<Vec<Spanned>, ParseError> {
        let mut out = Vec::new();
        loop {
            while let Some(c) = self.peek() {
                if c.is_ascii_whitespace() {
                    self.bump();
                } else if c == b'%' {
                    while let Some(c) = self.peek() {
                        if c == b'\n' {
                            break;
                        }
                        self.bump();
                    }
                } else {
                    break;
                }
            }
            let (line, col) = (self.line, self.col);
            let Some(c) = self.peek() else { break };
            let tok = match c {
                b'(' => {
                    self.bump();
                    Tok::LParen
                }
                b')' => {
                    self.bump();
                    Tok::RParen
                }
                b',' => {
                    self.bump();
                    Tok::Comma
                }
                b'.' => {
                    self.bump();
                    Tok::Dot
                }
                b':' => {
                    self.bump();
                    if self.peek() == Some(b'-') {
                        self.bump();
                        Tok::Neck
                    } else {
                        Tok::Colon
                    }
                }
                b'-' => {
                    self.bump();
                    if self.peek() == Some(b'>') {
                        self.bump();
                        Tok::Arrow
                    } else {
                        return Err(self.err("expected '>' after '-'"));
                    }
                }
                b'"' => {
                    self.bump();
                    let mut s = String::new();
                    loop {
                        match self.bump() {
                            Some(b'"') => break,
                            Some(b'\n') | None => {
                                return Err(self.err("unterminated string literal"))
                            }
                            Some(c) => s.push(c as char),
                        }
                    }
                    Tok::Str(s)
                }
                c if c.is_ascii_digit() => {
                    let mut s = String::new();
                    while let Some(c) = self.peek() {
                        if c.is_ascii_digit() {
                            s.push(c as char);
                            self.bump();
                        } else {
                            break;
                        }
                    }
                    Tok::Int(s)
                }
                c if c.is_ascii_lowercase() => {
                    let s = self.ident();
                    Tok::Lower(s)
                }
                c if c.is_ascii_uppercase() || c == b'_' => {
                    let s = self.ident();
                    Tok::Upper(s)
                }
                c => return Err(self.err(format!("unexpected character '{}'", c as char))),
            };
            out.push((tok, line, col));
        }
        Ok(out)
    }

    fn ident(&mut self) -> String {
        let mut s = String::new();
        while let Some(c) = self.peek() {
            if c.is_ascii_alphanumeric() || c == b'_' {
                s.push(c as char);
                self.bump();
            } else {
                break;
            }
        }
        s
    }
}

pub struct Parser {
    toks: Vec<Spanned>,
    pos: usize,
}

impl Parser {
    pub fn new(src: &str) -> Result<Self, ParseError> {
        Ok(Parser {
            toks: Lexer::new(src).tokens()?,
            pos: 0,
        })
    }

    fn here(&self) -> (usize, usize) {
        match self.toks.get(self.pos) {
            Some((_, l, c)) => (*l, *c),
            None => match self.toks.last() {
                Some((_, l, c)) => (*l, *c + 1),
                None => (1, 1),
            },
        }
    }

    fn err(&self, msg: impl Into<String>) -> ParseError {
        let (line, col) = self.here();
        ParseError {
            line,
            col,
            msg: msg.into(),
        }
    }

    fn peek(&self) -> Option<&Tok> {
        self.toks.get(self.pos).map(|(t, _, _)| t)
    }

    fn bump(&mut self) -> Option<Tok> {
        let t = self.toks.get(self.pos).map(|(t, _, _)| t.clone());
        if t.is_some() {
            self.pos += 1;
        }
        t
    }

    fn expect(&mut self, tok: Tok, what: &str) -> Result<(), ParseError> {
        if self.peek() == Some(&tok) {
            self.pos += 1;
            Ok(())
        } else {
            Err(self.err(format!("expected {what}")))
        }
    }

    fn at_end(&self) -> bool {
        self.pos >= self.toks.len()
    }

    pub fn type_term(&mut self) -> Result<TypeTerm, ParseError> {
        match self.bump() {
            Some(Tok::Upper(u)) => Ok(TypeTerm::Param(u)),
            Some(Tok::Lower(c)) => {
                let mut args = Vec::new();
                if self.peek() == Some(&Tok::LParen) {
                    self.bump();
                    loop {
                        args.push(self.type_term()?);
                        match self.bump() {
                            Some(Tok::Comma) => {}
                            Some(Tok::RParen) => break,
                            _ => return Err(self.err("expected ',' or ')' in type")),
                        }
                    }
                }
                Ok(TypeTerm::Ctor(c, args))
            }
            _ => Err(self.err("expected a type")),
        }
    }

    fn type_list_until_dot_or_arrow(&mut self) -> Result<Vec<TypeTerm>, ParseError> {
        let mut tys = Vec::new();
        if matches!(self.peek(), Some(Tok::Dot) | Some(Tok::Arrow)) {
            return Ok(tys);
        }
        loop {
            tys.push(self.type_term()?);
            match self.peek() {
                Some(Tok::Comma) => {
                    self.bump();
                }
                _ => break,
            }
        }
        Ok(tys)
    }

    pub fn term(&mut self, sig: &mut Signature) -> Result<Term, ParseError> {
        match self.bump() {
            Some(Tok::Upper(x)) => Ok(Term::Var(x)),
            Some(Tok::Int(n)) => {
                register_int(sig, &n).map_err(|e| self.err(e.to_string()))?;
                Ok(Term::constant(&n))
            }
            Some(Tok::Str(s)) => {
                let name = format!("\"{s}\"");
                register_str(sig, &name).map_err(|e| self.err(e.to_string()))?;
                Ok(Term::constant(&name))
            }
            Some(Tok::Lower(f)) => {
                let mut args = Vec::new();
                if self.peek() == Some(&Tok::LParen) {
                    self.bump();
                    loop {
                        args.push(self.term(sig)?);
                        match self.bump() {
                            Some(Tok::Comma) => {}
                            Some(Tok::RParen) => break,
                            _ => return Err(self.err("expected ',' or ')' in term")),
                        }
                    }
                }
                Ok(Term::App(f, args))
            }
            _ => Err(self.err("expected a term")),
        }
    }

    fn atom(&mut self, sig: &mut Signature) -> Result<Atom, ParseError> {
        let t = self.term(sig)?;
        match t {
            Term::App(pred, args) => Ok(Atom { pred, args }),
            Term::Var(_) => Err(self.err("expected an atom, found a variable")),
        }
    }

    pub fn program(mut self) -> Result<Program, ParseError> {
        let mut prog = Program::default();
        // Builtin atomic types for numeric and string literals, usable in
        // declarations before any literal occurs.
        prog.sig.add_ctor("int", 0).expect("fresh signature");
        prog.sig.add_ctor("str", 0).expect("fresh signature");
        while !self.at_end() {
            match self.peek() {
                Some(Tok::Lower(kw)) if kw == "type" => {
                    self.bump();
                    let ty = self.type_term()?;
                    let (name, arity) = match &ty {
                        TypeTerm::Ctor(c, args) => (c.clone(), args.len()),
                        _ => return Err(self.err("expected a constructor in type declaration")),
                    };
                    if !ty.is_flat() && arity > 0 {
                        return Err(
                            self.err("type declaration must apply distinct parameters".to_string())
                        );
                    }
                    prog.sig
                        .add_ctor(&name, arity)
                        .map_err(|e| self.err(e.to_string()))?;
                    self.expect(Tok::Dot, "'.'")?;
                }
                Some(Tok::Lower(kw)) if kw == "func" => {
                    self.bump();
                    let name = match self.bump() {
                        Some(Tok::Lower(n)) => n,
                        _ => return Err(self.err("expected function name")),
                    };
                    self.expect(Tok::Colon, "':'")?;
                    let args = self.type_list_until_dot_or_arrow()?;
                    self.expect(Tok::Arrow, "'->'")?;
                    let range = self.type_term()?;
                    prog.sig
                        .add_func(&name, args, range)
                        .map_err(|e| self.err(e.to_string()))?;
                    self.expect(Tok::Dot, "'.'")?;
                }
                Some(Tok::Lower(kw)) if kw == "pred" => {
                    self.bump();
                    let name = match self.bump() {
                        Some(Tok::Lower(n)) => n,
                        _ => return Err(self.err("expected predicate name")),
                    };
                    self.expect(Tok::Colon, "':'")?;
                    let args = self.type_list_until_dot_or_arrow()?;
                    prog.sig
                        .add_pred(&name, args)
                        .map_err(|e| self.err(e.to_string()))?;
                    self.expect(Tok::Dot, "'.'")?;
                }
                Some(Tok::Lower(kw)) if kw == "query" => {
                    self.bump();
                    if prog.query.is_some() {
                        return Err(self.err("multiple query statements"));
                    }
                    let mut atoms = Vec::new();
                    loop {
                        atoms.push(self.atom(&mut prog.sig)?);
                        match self.bump() {
                            Some(Tok::Comma) => {}
                            Some(Tok::Dot) => break,
                            _ => return Err(self.err("expected ',' or '.' in query")),
                        }
                    }
                    prog.sig
                        .add_pred(GOAL_PRED, vec![])
                        .map_err(|e| self.err(e.to_string()))?;
                    prog.clauses.push(Clause {
                        head: Atom {
                            pred: GOAL_PRED.to_string(),
                            args: vec![],
                        },
                        body: atoms.clone(),
                    });
                    prog.query = Some(atoms);
                }
                _ => {
                    let head = self.atom(&mut prog.sig)?;
                    let mut body = Vec::new();
                    match self.bump() {
                        Some(Tok::Dot) => {}
                        Some(Tok::Neck) => loop {
                            body.push(self.atom(&mut prog.sig)?);
                            match self.bump() {
                                Some(Tok::Comma) => {}
                                Some(Tok::Dot) => break,
                                _ => return Err(self.err("expected ',' or '.' in clause body")),
                            }
                        },
                        _ => return Err(self.err("expected '.' or ':-' after clause head")),
                    }
                    prog.clauses.push(Clause { head, body });
                }
            }
        }
        Ok(prog)
    }
}

fn register_int(sig: &mut Signature, lit: &str) -> Result<(), SignatureError> {
    sig.add_ctor("int", 0)?;
    if !sig.funcs.contains_key(lit) {
        sig.add_func(lit, vec![], TypeTerm::ctor0("int"))?;
    }
    Ok(())
}

fn register_str(sig: &mut Signature, lit: &str) -> Result<(), SignatureError> {
    sig.add_ctor("str", 0)?;
    if !sig.funcs.contains_key(lit) {
        sig.add_func(lit, vec![], TypeTerm::ctor0("str"))?;
    }
    Ok(())
}

pub fn parse_program(src: &str) -> Result<Program, ParseError> {
    Parser::new(src)?.program()
}

/// Parses a single term against an existing signature (used by the CLI).
pub fn parse_term(src: &str, sig: &Signature) -> Result<Term, ParseError> {
    let mut sig = sig.clone();
    let mut p = Parser::new(src)?;
    let t = p.term(&mut sig)?;
    if !p.at_end() {
        return Err(p.err("trailing input after term"));
    }
    Ok(t)
}

/// Parses a single type term.
pub fn parse_type(src: &str) -> Result<TypeTerm, ParseError> {
    let mut p = Parser::new(src)?;
    let t = p.type_term()?;
    if !p.at_end() {
        return Err(p.err("trailing input after type"));
    }
    Ok(t)
}
