//! Labelling: which subterms of a term sit at a given nonterminal of the
//! grammar of a type.
//!
//! For a grammar type `phi`, a start nonterminal inside the recursive clique
//! of `phi` and a target nonterminal `sigma`, `labels` collects all subterms
//! `s` of `t` such that a derivation from `start(t)` reaches `sigma(s)`.

use std::collections::BTreeSet;

use thiserror::Error;

use crate::absterm::AbstractTerm;
use crate::graph::{build_grammar, recursive_clique, Grammar, GraphError};
use crate::syntax::Term;
use crate::types::{Signature, TypeTerm};

#[derive(Error, Debug, Clone, PartialEq, Eq)]
pub enum LabelError {
    #[error(transparent)]
    Graph(#[from] GraphError),
    #[error("start nonterminal {0} is not in the recursive clique of {1}")]
    BadStart(String, String),
    #[error("target nonterminal {0} is neither in the recursive clique of {1} nor one of its non-recursive subterm types")]
    BadTarget(String, String),
    #[error("term {term} does not fit nonterminal {nt}")]
    IllTyped { term: String, nt: String },
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct LabelQuery {
    /// The flat type whose grammar is used.
    pub grammar_type: TypeTerm,
    /// The nonterminal the derivation starts from.
    pub start: TypeTerm,
    /// The nonterminal whose labels are collected.
    pub target: TypeTerm,
}

struct LabelCtx {
    grammar: Grammar,
    clique: BTreeSet<TypeTerm>,
}

impl LabelCtx {
    fn new(sig: &Signature, q: &LabelQuery) -> Result<Self, LabelError> {
        let grammar = build_grammar(sig, &q.grammar_type)?;
        let clique = recursive_clique(&grammar);
        if !clique.contains(&q.start) {
            return Err(LabelError::BadStart(
                q.start.to_string(),
                q.grammar_type.to_string(),
            ));
        }
        let mut nrs = BTreeSet::new();
        for (from, to) in grammar.edges() {
            if clique.contains(&from) && !clique.contains(&to) {
                nrs.insert(to);
            }
        }
        if !clique.contains(&q.target) && !nrs.contains(&q.target) {
            return Err(LabelError::BadTarget(
                q.target.to_string(),
                q.grammar_type.to_string(),
            ));
        }
        Ok(LabelCtx { grammar, clique })
    }

    fn collect(
        &self,
        nt: &TypeTerm,
        target: &TypeTerm,
        t: &Term,
        out: &mut BTreeSet<Term>,
    ) -> Result<(), LabelError> {
        if nt == target {
            out.insert(t.clone());
        }
        let Term::App(f, args) = t else {
            return Ok(());
        };
        let prod = self.grammar.production(nt, f).ok_or(LabelError::IllTyped {
            term: t.to_string(),
            nt: nt.to_string(),
        })?;
        let prod_args = prod.args.clone();
        if prod_args.len() != args.len() {
            return Err(LabelError::IllTyped {
                term: t.to_string(),
                nt: nt.to_string(),
            });
        }
        for (sub, sub_nt) in args.iter().zip(&prod_args) {
            if sub_nt == target {
                out.insert(sub.clone());
            }
            if self.clique.contains(sub_nt) {
                self.collect(sub_nt, target, sub, out)?;
            }
        }
        Ok(())
    }
}

/// The set of subterms of `t` derivable at the target nonterminal, computed
/// by the recursion that only descends into clique positions.
pub fn labels(sig: &Signature, q: &LabelQuery, t: &Term) -> Result<BTreeSet<Term>, LabelError> {
    let ctx = LabelCtx::new(sig, q)?;
    let mut out = BTreeSet::new();
    ctx.collect(&q.start, &q.target, t, &mut out)?;
    Ok(out)
}

/// The variables among the labels.
pub fn zeta(sig: &Signature, q: &LabelQuery, t: &Term) -> Result<BTreeSet<String>, LabelError> {
    Ok(labels(sig, q, t)?
        .into_iter()
        .filter_map(|t| match t {
            Term::Var(x) => Some(x),
            _ => None,
        })
        .collect())
}

/// Reference implementation: exhaustive search over the rewriting system of
/// the grammar, descending into every argument position.
pub fn labels_by_derivation(
    sig: &Signature,
    q: &LabelQuery,
    t: &Term,
) -> Result<BTreeSet<Term>, LabelError> {
    let ctx = LabelCtx::new(sig, q)?;
    let mut out = BTreeSet::new();
    let mut stack = vec![(q.start.clone(), t.clone())];
    let mut seen = BTreeSet::new();
    while let Some((nt, s)) = stack.pop() {
        if !seen.insert((nt.clone(), s.clone())) {
            continue;
        }
        if nt == q.target {
            out.insert(s.clone());
        }
        if let Term::App(f, args) = &s {
            // Parameter nonterminals derive any term and have no
            // productions; the derivation stops there.
            if matches!(nt, TypeTerm::Param(_)) {
                continue;
            }
            let prod = ctx.grammar.production(&nt, f).ok_or(LabelError::IllTyped {
                term: s.to_string(),
                nt: nt.to_string(),
            })?;
            for (sub, sub_nt) in args.iter().zip(prod.args.clone()) {
                stack.push((sub_nt, sub.clone()));
            }
        }
    }
    Ok(out)
}

/// Labelling lifted to abstract terms: the result is the join of everything
/// derivable at the target nonterminal.
pub fn labels_abstract(
    sig: &Signature,
    q: &LabelQuery,
    a: &AbstractTerm,
) -> Result<AbstractTerm, LabelError> {
    let ctx = LabelCtx::new(sig, q)?;
    fn go(
        sig: &Signature,
        ctx: &LabelCtx,
        nt: &TypeTerm,
        target: &TypeTerm,
        a: &AbstractTerm,
        out: &mut Vec<AbstractTerm>,
    ) -> Result<(), LabelError> {
        if nt == target {
            out.push(a.clone());
        }
        for s in a.summands() {
            if let crate::absterm::Summand::Node(c, slots) = s {
                let profile =
                    crate::graph::canonical_profile(sig, c).map_err(LabelError::Graph)?;
                let theta = sig
                    .canonical_flat(c)
                    .and_then(|flat| flat.match_onto(nt))
                    .ok_or(LabelError::IllTyped {
                        term: a.to_string(),
                        nt: nt.to_string(),
                    })?;
                for (i, slot) in slots.iter().enumerate() {
                    let slot_nt = profile.slot(i).apply(&theta);
                    if &slot_nt == target {
                        out.push(slot.clone());
                    }
                    if ctx.clique.contains(&slot_nt) {
                        go(sig, ctx, &slot_nt, target, slot, out)?;
                    }
                }
            }
        }
        Ok(())
    }
    let mut parts = Vec::new();
    go(sig, &ctx, &q.start, &q.target, a, &mut parts)?;
    Ok(AbstractTerm::join_all(parts))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sigs::{lists_with_char, nests_with_int, tm};
    use crate::syntax::parse_type;

    fn q(grammar: &str, start: &str, target: &str) -> LabelQuery {
        LabelQuery {
            grammar_type: parse_type(grammar).unwrap(),
            start: parse_type(start).unwrap(),
            target: parse_type(target).unwrap(),
        }
    }

    fn terms(sig: &Signature, ts: &[&str]) -> BTreeSet<Term> {
        ts.iter().map(|s| tm(sig, s)).collect()
    }

    #[test]
    fn list_of_chars_labels() {
        let sig = lists_with_char();
        // [a,X] = cons(a, cons(X, nil))
        let t = tm(&sig, "cons(a, cons(X, nil))");
        assert_eq!(
            labels(&sig, &q("list(U)", "list(U)", "U"), &t).unwrap(),
            terms(&sig, &["a", "X"])
        );
        assert_eq!(
            labels(&sig, &q("list(U)", "list(U)", "list(U)"), &t).unwrap(),
            terms(
                &sig,
                &["cons(a, cons(X, nil))", "cons(X, nil)", "nil"]
            )
        );
        // [[a]|X] = cons(cons(a,nil), X)
        let t2 = tm(&sig, "cons(cons(a,nil), X)");
        assert_eq!(
            labels(&sig, &q("list(U)", "list(U)", "U"), &t2).unwrap(),
            terms(&sig, &["cons(a,nil)"])
        );
        assert_eq!(
            labels(&sig, &q("list(U)", "list(U)", "list(U)"), &t2).unwrap(),
            terms(&sig, &["cons(cons(a,nil), X)", "X"])
        );
    }

    #[test]
    fn nest_labels() {
        let sig = nests_with_int();
        // [n([e(7)])] = cons(n(cons(e(7),nil)), nil)
        let t = tm(&sig, "cons(n(cons(e(7),nil)), nil)");
        // Viewed at grammar nest(V): the V-positions are inside e(...).
        assert_eq!(
            labels(&sig, &q("nest(V)", "list(nest(V))", "V"), &t).unwrap(),
            terms(&sig, &["7"])
        );
        // Viewed at grammar list(U): the elements are whole nests.
        assert_eq!(
            labels(&sig, &q("list(U)", "list(U)", "U"), &t).unwrap(),
            terms(&sig, &["n(cons(e(7),nil))"])
        );
    }

    #[test]
    fn lemma_recursion_matches_derivation_search() {
        let sig = nests_with_int();
        let t = tm(&sig, "cons(n(cons(e(7),nil)), cons(n(nil), X))");
        for target in ["V", "nest(V)", "list(nest(V))"] {
            let query = q("nest(V)", "list(nest(V))", target);
            assert_eq!(
                labels(&sig, &query, &t).unwrap(),
                labels_by_derivation(&sig, &query, &t).unwrap(),
                "target {target}"
            );
        }
    }

    #[test]
    fn invalid_queries_are_rejected() {
        let sig = nests_with_int();
        let t = tm(&sig, "e(7)");
        // U is not a nonterminal of G(nest(V)).
        assert!(labels(&sig, &q("nest(V)", "nest(V)", "U"), &t).is_err());
        // V is not in the recursive clique, so it cannot be a start.
        assert!(labels(&sig, &q("nest(V)", "V", "V"), &t).is_err());
    }
}
