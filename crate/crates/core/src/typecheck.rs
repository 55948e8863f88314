//! Type checking of programs.
//!
//! A clause is well-typed if there is a variable typing under which every
//! head argument has exactly the declared type of the head predicate (the
//! head condition: no instantiation is allowed there), while body atoms may
//! use any instance of their predicate's declared types.

use std::collections::BTreeMap;

use thiserror::Error;

use crate::syntax::{Atom, Clause, Program, Term};
use crate::types::{Signature, TypeTerm, TypeUnifier};

#[derive(Error, Debug, Clone, PartialEq, Eq)]
pub enum TypeError {
    #[error("unknown predicate {0}")]
    UnknownPred(String),
    #[error("unknown function {0}")]
    UnknownFunc(String),
    #[error("predicate {pred} expects {expected} arguments, got {got}")]
    Arity {
        pred: String,
        expected: usize,
        got: usize,
    },
    #[error("head condition violated in clause {clause}: {detail}")]
    HeadCondition { clause: String, detail: String },
    #[error("ill-typed atom {atom} in clause {clause}: {detail}")]
    IllTypedAtom {
        clause: String,
        atom: String,
        detail: String,
    },
}

/// Types recorded for one body atom: the declared argument types of its
/// predicate instantiated as required by the clause.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct BodyAtomTypes {
    pub pred: String,
    pub arg_types: Vec<TypeTerm>,
}

/// The typing derived for one clause.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ClauseTyping {
    pub head_types: Vec<TypeTerm>,
    pub gamma: BTreeMap<String, TypeTerm>,
    pub body: Vec<BodyAtomTypes>,
}

/// Whether all (possibly indirect) recursive calls use exactly the declared
/// types; polymorphic recursion carries a witness atom.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum RecursionMode {
    Monomorphic,
    Polymorphic { clause: String, atom: String },
}

fn pred_types<'s>(sig: &'s Signature, atom: &Atom) -> Result<&'s [TypeTerm], TypeError> {
    let tys = sig
        .preds
        .get(&atom.pred)
        .ok_or_else(|| TypeError::UnknownPred(atom.pred.clone()))?;
    if tys.len() != atom.args.len() {
        return Err(TypeError::Arity {
            pred: atom.pred.clone(),
            expected: tys.len(),
            got: atom.args.len(),
        });
    }
    Ok(tys)
}

/// Head checking: pure top-down matching against the declared types. Fails
/// if a head argument cannot have exactly the declared type.
fn check_head_exact(
    sig: &Signature,
    term: &Term,
    expected: &TypeTerm,
    gamma: &mut BTreeMap<String, TypeTerm>,
) -> Result<(), String> {
    match term {
        Term::Var(x) => match gamma.get(x) {
            Some(t) if t == expected => Ok(()),
            Some(t) => Err(format!(
                "variable {x} would need both type {t} and type {expected}"
            )),
            None => {
                gamma.insert(x.clone(), expected.clone());
                Ok(())
            }
        },
        Term::App(f, args) => {
            let decl = sig
                .funcs
                .get(f)
                .ok_or_else(|| format!("unknown function {f}"))?;
            if decl.args.len() != args.len() {
                return Err(format!(
                    "function {f} expects {} arguments, got {}",
                    decl.args.len(),
                    args.len()
                ));
            }
            let theta = decl.range.match_onto(expected).ok_or_else(|| {
                format!(
                    "term {term} has a type headed by {}, but {expected} is required",
                    decl.range
                )
            })?;
            for (a, ty) in args.iter().zip(&decl.args) {
                check_head_exact(sig, a, &ty.apply(&theta), gamma)?;
            }
            Ok(())
        }
    }
}

struct InferCtx<'s> {
    sig: &'s Signature,
    un: TypeUnifier,
    gamma: BTreeMap<String, TypeTerm>,
}

impl<'s> InferCtx<'s> {
    fn infer(&mut self, term: &Term, expected: &TypeTerm) -> Result<(), String> {
        match term {
            Term::Var(x) => {
                let ty = match self.gamma.get(x) {
                    Some(t) => t.clone(),
                    None => {
                        let t = self.un.fresh_param();
                        self.gamma.insert(x.clone(), t.clone());
                        t
                    }
                };
                if self.un.unify(&ty, expected) {
                    Ok(())
                } else {
                    Err(format!(
                        "variable {x} has type {}, but {} is required",
                        self.un.resolve(&ty),
                        self.un.resolve(expected)
                    ))
                }
            }
            Term::App(f, args) => {
                let decl = self
                    .sig
                    .funcs
                    .get(f)
                    .ok_or_else(|| format!("unknown function {f}"))?
                    .clone();
                if decl.args.len() != args.len() {
                    return Err(format!(
                        "function {f} expects {} arguments, got {}",
                        decl.args.len(),
                        args.len()
                    ));
                }
                let mut all = decl.args.clone();
                all.push(decl.range.clone());
                let fresh = self.un.freshen_all(&all);
                let (arg_tys, range) = fresh.split_at(args.len());
                if !self.un.unify(&range[0], expected) {
                    return Err(format!(
                        "term {term} has a type headed by {}, but {} is required",
                        decl.range,
                        self.un.resolve(expected)
                    ));
                }
                for (a, ty) in args.iter().zip(arg_tys) {
                    let ty = ty.clone();
                    self.infer(a, &ty)?;
                }
                Ok(())
            }
        }
    }
}

/// Infers the most general type of a term under a fixed variable typing.
/// Parameters occurring in `gamma` are rigid.
pub fn infer_term_type(
    sig: &Signature,
    gamma: &BTreeMap<String, TypeTerm>,
    term: &Term,
) -> Result<TypeTerm, TypeError> {
    let mut ctx = InferCtx {
        sig,
        un: TypeUnifier::new(),
        gamma: gamma.clone(),
    };
    let target = ctx.un.fresh_param();
    ctx.infer(term, &target).map_err(|detail| {
        TypeError::IllTypedAtom {
            clause: term.to_string(),
            atom: term.to_string(),
            detail,
        }
    })?;
    Ok(ctx.un.generalize(&[target]).pop().unwrap())
}

/// Checks a clause in "instance mode": the head is treated like a body atom.
/// Used only to distinguish head-condition violations from genuinely
/// ill-typed clauses.
fn typable_as_instance(sig: &Signature, clause: &Clause) -> bool {
    let mut ctx = InferCtx {
        sig,
        un: TypeUnifier::new(),
        gamma: BTreeMap::new(),
    };
    for atom in std::iter::once(&clause.head).chain(&clause.body) {
        let Ok(tys) = pred_types(sig, atom) else {
            return false;
        };
        let fresh = ctx.un.freshen_all(tys);
        for (arg, ty) in atom.args.iter().zip(&fresh) {
            let ty = ty.clone();
            if ctx.infer(arg, &ty).is_err() {
                return false;
            }
        }
    }
    true
}

/// Checks one clause and returns its typing.
pub fn check_clause(sig: &Signature, clause: &Clause) -> Result<ClauseTyping, TypeError> {
    let head_types = pred_types(sig, &clause.head)?.to_vec();
    let mut gamma = BTreeMap::new();
    for (arg, ty) in clause.head.args.iter().zip(&head_types) {
        check_head_exact(sig, arg, ty, &mut gamma).map_err(|detail| {
            if typable_as_instance(sig, clause) {
                TypeError::HeadCondition {
                    clause: clause.to_string(),
                    detail,
                }
            } else {
                TypeError::IllTypedAtom {
                    clause: clause.to_string(),
                    atom: clause.head.to_string(),
                    detail,
                }
            }
        })?;
    }
    let mut ctx = InferCtx {
        sig,
        un: TypeUnifier::new(),
        gamma,
    };
    let mut body = Vec::new();
    for atom in &clause.body {
        let tys = pred_types(sig, atom)?.to_vec();
        let fresh = ctx.un.freshen_all(&tys);
        for (arg, ty) in atom.args.iter().zip(&fresh) {
            let ty = ty.clone();
            ctx.infer(arg, &ty).map_err(|detail| {
                if typable_as_instance(sig, clause) {
                    TypeError::HeadCondition {
                        clause: clause.to_string(),
                        detail,
                    }
                } else {
                    TypeError::IllTypedAtom {
                        clause: clause.to_string(),
                        atom: atom.to_string(),
                        detail,
                    }
                }
            })?;
        }
        body.push(BodyAtomTypes {
            pred: atom.pred.clone(),
            arg_types: ctx.un.generalize(&fresh),
        });
    }
    let gamma = ctx
        .gamma
        .iter()
        .map(|(x, t)| (x.clone(), ctx.un.generalize(std::slice::from_ref(t)).pop().unwrap()))
        .collect();
    Ok(ClauseTyping {
        head_types,
        gamma,
        body,
    })
}

/// Checks every clause of a program.
pub fn check_program(prog: &Program) -> Result<Vec<ClauseTyping>, TypeError> {
    prog.clauses
        .iter()
        .map(|c| check_clause(&prog.sig, c))
        .collect()
}

fn pred_sccs(prog: &Program) -> Vec<Vec<String>> {
    // Tarjan over the predicate call graph.
    let mut succ: BTreeMap<&str, Vec<&str>> = BTreeMap::new();
    for c in &prog.clauses {
        let entry = succ.entry(&c.head.pred).or_default();
        for a in &c.body {
            entry.push(&a.pred);
        }
    }
    for p in prog.sig.preds.keys() {
        succ.entry(p).or_default();
    }
    struct St<'a> {
        succ: &'a BTreeMap<&'a str, Vec<&'a str>>,
        index: BTreeMap<&'a str, usize>,
        low: BTreeMap<&'a str, usize>,
        on: std::collections::BTreeSet<&'a str>,
        stack: Vec<&'a str>,
        next: usize,
        out: Vec<Vec<String>>,
    }
    fn visit<'a>(st: &mut St<'a>, v: &'a str) {
        st.index.insert(v, st.next);
        st.low.insert(v, st.next);
        st.next += 1;
        st.stack.push(v);
        st.on.insert(v);
        if let Some(ws) = st.succ.get(v) {
            for &w in ws.clone().iter() {
                if !st.index.contains_key(w) {
                    visit(st, w);
                    let lw = st.low[w];
                    *st.low.get_mut(v).unwrap() = st.low[v].min(lw);
                } else if st.on.contains(w) {
                    *st.low.get_mut(v).unwrap() = st.low[v].min(st.index[w]);
                }
            }
        }
        if st.low[v] == st.index[v] {
            let mut comp = Vec::new();
            while let Some(w) = st.stack.pop() {
                st.on.remove(w);
                comp.push(w.to_string());
                if w == v {
                    break;
                }
            }
            st.out.push(comp);
        }
    }
    let keys: Vec<&str> = succ.keys().copied().collect();
    let mut st = St {
        succ: &succ,
        index: BTreeMap::new(),
        low: BTreeMap::new(),
        on: std::collections::BTreeSet::new(),
        stack: Vec::new(),
        next: 0,
        out: Vec::new(),
    };
    for k in keys {
        if !st.index.contains_key(k) {
            visit(&mut st, k);
        }
    }
    st.out
}

/// Checks whether two type tuples are equal up to a bijective renaming of
/// parameters.
fn equal_up_to_renaming(a: &[TypeTerm], b: &[TypeTerm]) -> bool {
    fn go(
        a: &TypeTerm,
        b: &TypeTerm,
        fwd: &mut BTreeMap<String, String>,
        bwd: &mut BTreeMap<String, String>,
    ) -> bool {
        match (a, b) {
            (TypeTerm::Param(u), TypeTerm::Param(v)) => {
                let f_ok = match fwd.get(u) {
                    Some(w) => w == v,
                    None => {
                        fwd.insert(u.clone(), v.clone());
                        true
                    }
                };
                let b_ok = match bwd.get(v) {
                    Some(w) => w == u,
                    None => {
                        bwd.insert(v.clone(), u.clone());
                        true
                    }
                };
                f_ok && b_ok
            }
            (TypeTerm::Ctor(c, xs), TypeTerm::Ctor(d, ys)) if c == d && xs.len() == ys.len() => {
                xs.iter().zip(ys).all(|(x, y)| go(x, y, fwd, bwd))
            }
            _ => false,
        }
    }
    if a.len() != b.len() {
        return false;
    }
    let mut fwd = BTreeMap::new();
    let mut bwd = BTreeMap::new();
    a.iter().zip(b).all(|(x, y)| go(x, y, &mut fwd, &mut bwd))
}

/// Classifies the recursion of a typed program. A body atom counts as
/// recursive if its predicate shares a call-graph clique with the clause
/// head's predicate.
pub fn recursion_mode(prog: &Program, typings: &[ClauseTyping]) -> RecursionMode {
    let sccs = pred_sccs(prog);
    let clique_of = |p: &str| -> usize {
        sccs.iter()
            .position(|c| c.iter().any(|q| q == p))
            .unwrap_or(usize::MAX)
    };
    for (clause, typing) in prog.clauses.iter().zip(typings) {
        let head_clique = clique_of(&clause.head.pred);
        for (atom, bt) in clause.body.iter().zip(&typing.body) {
            if clique_of(&atom.pred) != head_clique {
                continue;
            }
            let decl = &prog.sig.preds[&atom.pred];
            if !equal_up_to_renaming(decl, &bt.arg_types) {
                return RecursionMode::Polymorphic {
                    clause: clause.to_string(),
                    atom: atom.to_string(),
                };
            }
        }
    }
    RecursionMode::Monomorphic
}
