//! Concrete and abstract fixpoint semantics.
//!
//! The concrete side is the non-ground (s-semantics style) immediate
//! consequence operator, used as an oracle. The abstract side interprets
//! programs over abstract terms: clause bodies are resolved against the
//! current interpretation by unification modulo the equational theory, and
//! the resulting head atoms are collected into an antichain.

use std::collections::BTreeSet;
use std::sync::atomic::{AtomicU64, Ordering};

use thiserror::Error;

use crate::absterm::{
    abstract_term, canonical_names, canonicalize_vars, normalize, AbsError, AbstractSubst,
    AbstractTerm,
};
use crate::solver::{le_tuple, unify_tuples, SolveError};
use crate::syntax::{mgu, renaming_apart, Atom, Clause, Program, GOAL_PRED};
use crate::typecheck::{check_program, recursion_mode, ClauseTyping, RecursionMode, TypeError};
use crate::types::{Signature, TypeTerm};

#[derive(Error, Debug, Clone, PartialEq, Eq)]
pub enum AnalysisError {
    #[error(transparent)]
    Type(#[from] TypeError),
    #[error(transparent)]
    Abs(#[from] AbsError),
    #[error(transparent)]
    Solve(#[from] SolveError),
    #[error("{0}")]
    Other(String),
}

static FRESH: AtomicU64 = AtomicU64::new(0);

fn fresh_var() -> String {
    format!("_Q{}", FRESH.fetch_add(1, Ordering::Relaxed))
}

fn rename_apart_abs(args: &[AbstractTerm]) -> Vec<AbstractTerm> {
    let mut vars = BTreeSet::new();
    for a in args {
        vars.extend(a.vars());
    }
    let mut th = AbstractSubst::new();
    for v in vars {
        th.0.insert(v, AbstractTerm::var(&fresh_var()));
    }
    args.iter().map(|a| a.apply(&th)).collect()
}

/// An atom with abstract term arguments.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord)]
pub struct AbstractAtom {
    pub pred: String,
    pub args: Vec<AbstractTerm>,
}

impl std::fmt::Display for AbstractAtom {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{}", self.pred)?;
        if !self.args.is_empty() {
            write!(f, "(")?;
            for (i, a) in self.args.iter().enumerate() {
                if i > 0 {
                    write!(f, ", ")?;
                }
                write!(f, "{a}")?;
            }
            write!(f, ")")?;
        }
        Ok(())
    }
}

impl AbstractAtom {
    pub fn new(pred: &str, args: Vec<AbstractTerm>) -> Self {
        AbstractAtom {
            pred: pred.to_string(),
            args,
        }
    }

    /// Canonical form: variables at identical position sets merged, then
    /// renamed to `V1, V2, ...` in order of occurrence.
    pub fn canonical(&self) -> AbstractAtom {
        let merged = canonicalize_vars(&self.args);
        AbstractAtom {
            pred: self.pred.clone(),
            args: canonical_names(&merged),
        }
    }
}

/// Unifiers of two abstract atoms, using the declared argument types when
/// the predicate is known.
pub fn unify_atoms(
    sig: &Signature,
    a: &AbstractAtom,
    b: &AbstractAtom,
) -> Result<Vec<AbstractSubst>, AnalysisError> {
    if a.pred != b.pred || a.args.len() != b.args.len() {
        return Ok(Vec::new());
    }
    let tys = sig.preds.get(&a.pred).cloned();
    Ok(unify_tuples(sig, &a.args, &b.args, tys.as_deref())?)
}

/// "atom below atom": the first is an instance of a renamed copy of the
/// second.
pub fn atom_le(sig: &Signature, a: &AbstractAtom, b: &AbstractAtom) -> Result<bool, AnalysisError> {
    if a.pred != b.pred || a.args.len() != b.args.len() {
        return Ok(false);
    }
    let general = rename_apart_abs(&b.args);
    let tys = sig.preds.get(&a.pred).cloned();
    Ok(le_tuple(sig, &a.args, &general, tys.as_deref())?.is_some())
}

/// A set of abstract atoms kept as an antichain: no atom is below another.
#[derive(Clone, Debug, Default)]
pub struct AbstractInterpretation {
    pub atoms: Vec<AbstractAtom>,
}

impl AbstractInterpretation {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn covers(&self, sig: &Signature, atom: &AbstractAtom) -> Result<bool, AnalysisError> {
        for b in &self.atoms {
            if atom_le(sig, atom, b)? {
                return Ok(true);
            }
        }
        Ok(false)
    }

    /// Inserts unless covered; drops existing atoms the new one covers.
    /// Returns whether the set changed.
    pub fn insert(&mut self, sig: &Signature, atom: AbstractAtom) -> Result<bool, AnalysisError> {
        let atom = atom.canonical();
        if self.covers(sig, &atom)? {
            return Ok(false);
        }
        let mut kept = Vec::new();
        for b in std::mem::take(&mut self.atoms) {
            if !atom_le(sig, &b, &atom)? {
                kept.push(b);
            }
        }
        kept.push(atom);
        kept.sort();
        self.atoms = kept;
        Ok(true)
    }

    pub fn same_meaning(
        &self,
        sig: &Signature,
        other: &AbstractInterpretation,
    ) -> Result<bool, AnalysisError> {
        for a in &self.atoms {
            if !other.covers(sig, a)? {
                return Ok(false);
            }
        }
        for b in &other.atoms {
            if !self.covers(sig, b)? {
                return Ok(false);
            }
        }
        Ok(true)
    }
}

impl std::fmt::Display for AbstractInterpretation {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{{")?;
        for (i, a) in self.atoms.iter().enumerate() {
            if i > 0 {
                write!(f, ", ")?;
            }
            write!(f, "{a}")?;
        }
        write!(f, "}}")
    }
}

/// A clause with abstracted head and body arguments, plus the body argument
/// types the clause was checked at.
#[derive(Clone, Debug)]
pub struct AbstractClause {
    pub head: AbstractAtom,
    pub body: Vec<AbstractAtom>,
    pub body_types: Vec<Vec<TypeTerm>>,
}

/// Type-checks the program and abstracts every clause. Returns the clauses
/// paired with their typings, in program order.
pub fn abstract_program(
    prog: &Program,
) -> Result<(Vec<AbstractClause>, Vec<ClauseTyping>), AnalysisError> {
    let typings = check_program(prog)?;
    let mut out = Vec::new();
    for (clause, typing) in prog.clauses.iter().zip(&typings) {
        let head_args = clause
            .head
            .args
            .iter()
            .map(|t| abstract_term(&prog.sig, t))
            .collect::<Result<Vec<_>, _>>()?;
        let mut body = Vec::new();
        let mut body_types = Vec::new();
        for (atom, bt) in clause.body.iter().zip(&typing.body) {
            let args = atom
                .args
                .iter()
                .map(|t| abstract_term(&prog.sig, t))
                .collect::<Result<Vec<_>, _>>()?;
            body.push(AbstractAtom::new(&atom.pred, args));
            body_types.push(bt.arg_types.clone());
        }
        out.push(AbstractClause {
            head: AbstractAtom::new(&clause.head.pred, head_args),
            body,
            body_types,
        });
    }
    Ok((out, typings))
}

fn selections<'a>(
    per_position: &'a [Vec<&'a AbstractAtom>],
) -> impl Iterator<Item = Vec<&'a AbstractAtom>> + 'a {
    let sizes: Vec<usize> = per_position.iter().map(|v| v.len()).collect();
    let total: usize = sizes.iter().product();
    let empty_any = sizes.iter().any(|&s| s == 0);
    (0..if empty_any { 0 } else { total }).map(move |mut i| {
        let mut pick = Vec::with_capacity(sizes.len());
        for (pos, &s) in sizes.iter().enumerate() {
            pick.push(per_position[pos][i % s]);
            i /= s;
        }
        pick
    })
}

/// Resolves a clause body against the interpretation and returns the head
/// instances produced by each unifier of each selection of body atoms.
fn clause_consequences(
    sig: &Signature,
    clause: &AbstractClause,
    interp: &AbstractInterpretation,
) -> Result<Vec<(AbstractAtom, AbstractSubst)>, AnalysisError> {
    let per_position: Vec<Vec<&AbstractAtom>> = clause
        .body
        .iter()
        .map(|b| {
            interp
                .atoms
                .iter()
                .filter(|a| a.pred == b.pred && a.args.len() == b.args.len())
                .collect()
        })
        .collect();
    let mut lhs: Vec<AbstractTerm> = Vec::new();
    let mut tys: Vec<TypeTerm> = Vec::new();
    for (b, bt) in clause.body.iter().zip(&clause.body_types) {
        lhs.extend(b.args.iter().cloned());
        tys.extend(bt.iter().cloned());
    }
    let mut out = Vec::new();
    for pick in selections(&per_position) {
        let mut rhs: Vec<AbstractTerm> = Vec::new();
        for atom in &pick {
            rhs.extend(rename_apart_abs(&atom.args));
        }
        for th in unify_tuples(sig, &lhs, &rhs, Some(&tys))? {
            let args = clause
                .head
                .args
                .iter()
                .map(|a| normalize(sig, &a.apply(&th)))
                .collect::<Result<Vec<_>, _>>()?;
            out.push((AbstractAtom::new(&clause.head.pred, args).canonical(), th));
        }
    }
    Ok(out)
}

/// One step of the abstract immediate consequence operator.
pub fn abstract_tp(
    sig: &Signature,
    clauses: &[AbstractClause],
    interp: &AbstractInterpretation,
) -> Result<Vec<AbstractAtom>, AnalysisError> {
    let mut out = Vec::new();
    for clause in clauses {
        for (atom, _) in clause_consequences(sig, clause, interp)? {
            if !out.contains(&atom) {
                out.push(atom);
            }
        }
    }
    Ok(out)
}

/// Result of the abstract fixpoint iteration.
#[derive(Clone, Debug)]
pub struct Fixpoint {
    pub interp: AbstractInterpretation,
    pub iterations: usize,
    pub converged: bool,
}

/// Iterates the abstract consequence operator to a fixpoint (up to atom
/// coverage), capped at `max_iters` rounds. Query clauses are excluded.
pub fn lfp_abstract(prog: &Program, max_iters: usize) -> Result<Fixpoint, AnalysisError> {
    let (clauses, _) = abstract_program(prog)?;
    let program_clauses: Vec<AbstractClause> = clauses
        .into_iter()
        .filter(|c| c.head.pred != GOAL_PRED)
        .collect();
    let mut interp = AbstractInterpretation::new();
    for i in 0..max_iters {
        let new_atoms = abstract_tp(&prog.sig, &program_clauses, &interp)?;
        let mut changed = false;
        for atom in new_atoms {
            changed |= interp.insert(&prog.sig, atom)?;
        }
        if !changed {
            return Ok(Fixpoint {
                interp,
                iterations: i + 1,
                converged: true,
            });
        }
    }
    Ok(Fixpoint {
        interp,
        iterations: max_iters,
        converged: false,
    })
}

/// One answer to the program query: a binding for each query variable.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct QueryAnswer {
    pub bindings: Vec<(String, AbstractTerm)>,
}

impl std::fmt::Display for QueryAnswer {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        if self.bindings.is_empty() {
            return write!(f, "yes");
        }
        for (i, (x, t)) in self.bindings.iter().enumerate() {
            if i > 0 {
                write!(f, ", ")?;
            }
            write!(f, "{x} -> {t}")?;
        }
        Ok(())
    }
}

/// Structural information read off one answer binding.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Readback {
    pub var: String,
    pub value: AbstractTerm,
    /// Constructor every described term must be built with at the root.
    pub definite_ctor: Option<String>,
    /// Whether a described term may still be an unbound variable.
    pub may_be_free: bool,
    /// Whether every described term is ground.
    pub ground: bool,
}

pub fn readback(answer: &QueryAnswer) -> Vec<Readback> {
    answer
        .bindings
        .iter()
        .map(|(x, v)| {
            let (_, nodes) = v.split();
            Readback {
                var: x.clone(),
                value: v.clone(),
                definite_ctor: nodes.first().map(|(c, _)| c.clone()),
                may_be_free: nodes.is_empty() || v.is_empty(),
                ground: v.vars().is_empty(),
            }
        })
        .collect()
}

/// Answers for the program's query against a fixpoint: the query body is
/// abstracted and resolved against the interpretation; each unifier yields
/// one binding per query variable. Answers below another answer are dropped.
pub fn query_answers(
    prog: &Program,
    interp: &AbstractInterpretation,
) -> Result<Vec<QueryAnswer>, AnalysisError> {
    let Some(body) = &prog.query else {
        return Ok(Vec::new());
    };
    let (clauses, _) = abstract_program(prog)?;
    let goal = clauses
        .iter()
        .find(|c| c.head.pred == GOAL_PRED)
        .ok_or_else(|| AnalysisError::Other("query clause not found".into()))?;
    let mut query_vars: Vec<String> = Vec::new();
    for atom in body {
        for v in atom.vars() {
            if !query_vars.contains(&v) {
                query_vars.push(v);
            }
        }
    }
    let mut answers: Vec<QueryAnswer> = Vec::new();
    for (_, th) in clause_consequences(&prog.sig, goal, interp)? {
        let values: Vec<AbstractTerm> = query_vars
            .iter()
            .map(|x| normalize(&prog.sig, &AbstractTerm::var(x).apply(&th)))
            .collect::<Result<_, _>>()?;
        let values = canonical_names(&canonicalize_vars(&values));
        let ans = QueryAnswer {
            bindings: query_vars.iter().cloned().zip(values).collect(),
        };
        if !answers.contains(&ans) {
            answers.push(ans);
        }
    }
    // Keep only maximal answers.
    let mut kept: Vec<QueryAnswer> = Vec::new();
    'outer: for (i, a) in answers.iter().enumerate() {
        let tup_a: Vec<AbstractTerm> = a.bindings.iter().map(|(_, v)| v.clone()).collect();
        for (j, b) in answers.iter().enumerate() {
            if i == j {
                continue;
            }
            let tup_b = rename_apart_abs(
                &b.bindings.iter().map(|(_, v)| v.clone()).collect::<Vec<_>>(),
            );
            let below = le_tuple(&prog.sig, &tup_a, &tup_b, None)?.is_some();
            if below {
                let tup_a_gen = rename_apart_abs(&tup_a);
                let tup_b_inst: Vec<AbstractTerm> =
                    b.bindings.iter().map(|(_, v)| v.clone()).collect();
                let above = le_tuple(&prog.sig, &tup_b_inst, &tup_a_gen, None)?.is_some();
                if !above || j < i {
                    continue 'outer;
                }
            }
        }
        kept.push(a.clone());
    }
    Ok(kept)
}

/// Does the abstract term describe the concrete term, i.e. is the term's
/// abstraction an instance of (a renamed copy of) the abstract term?
pub fn describes(sig: &Signature, a: &AbstractTerm, t: &crate::syntax::Term) -> Result<bool, AnalysisError> {
    let alpha = abstract_term(sig, t)?;
    let general = rename_apart_abs(std::slice::from_ref(a));
    Ok(le_tuple(sig, &[alpha], &general, None)?.is_some())
}

/// One step of the concrete (non-ground) immediate consequence operator.
pub fn concrete_tp(prog: &Program, interp: &[Atom]) -> Vec<Atom> {
    let mut out: Vec<Atom> = Vec::new();
    for clause in &prog.clauses {
        if clause.head.pred == GOAL_PRED {
            continue;
        }
        concrete_clause(clause, interp, &mut out);
    }
    out
}

fn concrete_clause(clause: &Clause, interp: &[Atom], out: &mut Vec<Atom>) {
    // Choose an interpretation atom per body position.
    let per_position: Vec<Vec<&Atom>> = clause
        .body
        .iter()
        .map(|b| {
            interp
                .iter()
                .filter(|a| a.pred == b.pred && a.args.len() == b.args.len())
                .collect()
        })
        .collect();
    if per_position.iter().any(|v| v.is_empty()) {
        return;
    }
    let sizes: Vec<usize> = per_position.iter().map(|v| v.len()).collect();
    let total: usize = sizes.iter().product();
    for mut i in 0..total {
        let mut lhs = Vec::new();
        let mut rhs = Vec::new();
        for (pos, b) in clause.body.iter().enumerate() {
            let chosen = per_position[pos][i % sizes[pos]];
            i /= sizes[pos];
            let renaming = renaming_apart(&chosen.vars());
            let renamed = chosen.apply(&renaming);
            lhs.extend(b.args.iter().cloned());
            rhs.extend(renamed.args);
        }
        if let Some(th) = mgu(&lhs, &rhs) {
            let head = clause.head.apply(&th).canonical();
            if !out.contains(&head) {
                out.push(head);
            }
        }
    }
}

/// Iterates the concrete operator `k` times from the empty interpretation,
/// accumulating consequences (variants deduplicated).
pub fn concrete_iterates(prog: &Program, k: usize) -> Vec<Atom> {
    let mut interp: Vec<Atom> = Vec::new();
    for _ in 0..k {
        for atom in concrete_tp(prog, &interp) {
            if !interp.contains(&atom) {
                interp.push(atom);
            }
        }
    }
    interp
}

/// Checks that every atom reachable in `k` concrete steps is described by
/// some atom of the abstract fixpoint. Returns the atoms left uncovered.
pub fn check_correctness(
    prog: &Program,
    interp: &AbstractInterpretation,
    k: usize,
) -> Result<Vec<Atom>, AnalysisError> {
    let mut missed = Vec::new();
    for atom in concrete_iterates(prog, k) {
        let alpha: Vec<AbstractTerm> = atom
            .args
            .iter()
            .map(|t| abstract_term(&prog.sig, t))
            .collect::<Result<_, _>>()?;
        let abs = AbstractAtom::new(&atom.pred, alpha);
        if !interp.covers(&prog.sig, &abs)? {
            missed.push(atom);
        }
    }
    Ok(missed)
}

/// The complete analysis of a program: type check, recursion mode, abstract
/// fixpoint, and query answers.
#[derive(Clone, Debug)]
pub struct AnalysisResult {
    pub recursion: RecursionMode,
    pub fixpoint: AbstractInterpretation,
    pub iterations: usize,
    pub converged: bool,
    pub answers: Vec<QueryAnswer>,
}

pub fn analyze(prog: &Program, max_iters: usize) -> Result<AnalysisResult, AnalysisError> {
    let typings = check_program(prog)?;
    let recursion = recursion_mode(prog, &typings);
    let fp = lfp_abstract(prog, max_iters)?;
    let answers = if fp.converged {
        query_answers(prog, &fp.interp)?
    } else {
        Vec::new()
    };
    Ok(AnalysisResult {
        recursion,
        fixpoint: fp.interp,
        iterations: fp.iterations,
        converged: fp.converged,
        answers,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::syntax::parse_program;

    const APPEND: &str = "\
type list(U).
func nil : -> list(U).
func cons : U, list(U) -> list(U).
pred append : list(U), list(U), list(U).
append(nil, Ys, Ys).
append(cons(X,Xs), Ys, cons(X,Zs)) :- append(Xs, Ys, Zs).
";

    #[test]
    fn concrete_oracle_produces_append_facts() {
        let prog = parse_program(APPEND).unwrap();
        let atoms = concrete_iterates(&prog, 2);
        // After two steps the base case and one unfolding are present.
        assert!(atoms.iter().any(|a| a.pred == "append"));
        assert!(atoms.len() >= 2);
    }

    #[test]
    fn append_fixpoint_converges() {
        let prog = parse_program(APPEND).unwrap();
        let fp = lfp_abstract(&prog, 50).unwrap();
        assert!(fp.converged, "no convergence: {}", fp.interp);
        let missed = check_correctness(&prog, &fp.interp, 3).unwrap();
        assert!(missed.is_empty(), "missed: {missed:?}");
    }

    #[test]
    fn facts_only_program() {
        let prog = parse_program(
            "type t.\nfunc a : -> t.\nfunc b : -> t.\npred p : t.\np(a).\np(b).\n",
        )
        .unwrap();
        let fp = lfp_abstract(&prog, 10).unwrap();
        assert!(fp.converged);
        assert_eq!(fp.interp.atoms.len(), 1, "a and b abstract alike: {}", fp.interp);
        assert_eq!(fp.interp.atoms[0].to_string(), "p(t#)");
    }
}
