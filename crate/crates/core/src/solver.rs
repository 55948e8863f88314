//! Unification and ordering of abstract terms modulo the equational theory
//! (associativity, commutativity, idempotence, unit, distributivity and
//! extraction).
//!
//! The solver works on normalized sides. It interleaves three moves:
//!
//! * variable elimination when one side is a single unbound variable;
//! * structuring: a variable standing where a node could be absorbed is
//!   instantiated with a generic node plus a fresh tail, and the equation is
//!   reconsidered (normalization then performs the merging and extraction);
//! * base decomposition: same-constructor nodes decompose pointwise into
//!   slot equations, and the remaining variable/atom parts are solved by the
//!   shared-fresh-variable construction for idempotent joins.
//!
//! Completeness is not established in general; it is enforced empirically
//! against a brute-force enumeration oracle at small scale (see the
//! unification test suite).

use std::collections::{BTreeMap, BTreeSet};
use std::sync::atomic::{AtomicU64, Ordering};

use thiserror::Error;

use crate::absterm::{
    eq_acplus, normalize, AbsError, AbstractSubst, AbstractTerm,
};
use crate::graph::canonical_profile;
use crate::types::{Signature, TypeTerm};

#[derive(Error, Debug, Clone, PartialEq, Eq)]
pub enum SolveError {
    #[error(transparent)]
    Abs(#[from] AbsError),
    #[error("unification search budget exceeded")]
    Budget,
}

static FRESH: AtomicU64 = AtomicU64::new(0);

fn fresh_var() -> String {
    format!("_A{}", FRESH.fetch_add(1, Ordering::Relaxed))
}

#[derive(Clone, Debug)]
struct Eq {
    lhs: AbstractTerm,
    rhs: AbstractTerm,
    ty: TypeTerm,
}

struct Solver<'s> {
    sig: &'s Signature,
    rigid: BTreeSet<String>,
    /// Variables that may take node parts, mapped to their structuring
    /// generation and the constructors already taken (at most one node part
    /// per variable and constructor, and bounded nesting of generated
    /// variables).
    structurable: BTreeMap<String, (usize, BTreeSet<String>)>,
    budget: usize,
    first_only: bool,
    solutions: Vec<AbstractSubst>,
}

const DEPTH_CAP: usize = 64;
const GEN_CAP: usize = 2;
const BUDGET: usize = 20_000;
const MINIMIZE_BUDGET: usize = 500;
const MINIMIZE_POOL: usize = 20_000;

/// The constructor relevant for an equation: from a node on either side, or
/// from the equation's type.
fn eq_ctor(a: &AbstractTerm, b: &AbstractTerm, ty: &TypeTerm) -> Option<String> {
    for t in [a, b] {
        if let Some((c, _)) = t.split().1.first() {
            return Some(c.clone());
        }
    }
    ty.head_ctor().map(|c| c.to_string())
}

impl<'s> Solver<'s> {
    fn spend(&mut self) -> Result<(), SolveError> {
        if self.budget == 0 {
            return Err(SolveError::Budget);
        }
        self.budget -= 1;
        Ok(())
    }

    fn done(&self) -> bool {
        self.first_only && !self.solutions.is_empty()
    }

    fn is_flex(&self, x: &str) -> bool {
        !self.rigid.contains(x)
    }

    /// Extends the substitution, keeping ranges normalized so terms stay
    /// small under repeated binding.
    fn bind(
        &mut self,
        theta: &AbstractSubst,
        x: &str,
        t: &AbstractTerm,
    ) -> Result<AbstractSubst, SolveError> {
        let mut single = AbstractSubst::new();
        single.0.insert(x.to_string(), t.clone());
        let mut out = AbstractSubst::new();
        for (v, r) in &theta.0 {
            if r.vars().contains(x) {
                // Normalizing a range is the dominant cost of the search,
                // so charge it against the budget.
                self.spend()?;
                out.0.insert(v.clone(), normalize(self.sig, &r.apply(&single))?);
            } else {
                out.0.insert(v.clone(), r.clone());
            }
        }
        out.0.insert(x.to_string(), normalize(self.sig, t)?);
        Ok(out)
    }

    /// Slot types of constructor `c` at instance type `ty` (canonical if the
    /// instance does not determine them).
    fn slot_types(&self, c: &str, ty: &TypeTerm) -> Result<Vec<TypeTerm>, SolveError> {
        let profile = canonical_profile(self.sig, c).map_err(AbsError::Graph)?;
        let flat = self.sig.canonical_flat(c).expect("declared constructor");
        let theta = flat.match_onto(ty).unwrap_or_default();
        Ok(profile.slots().map(|s| s.apply(&theta)).collect())
    }

    fn is_rec_slot(&self, c: &str, j: usize) -> Result<bool, SolveError> {
        let profile = canonical_profile(self.sig, c).map_err(AbsError::Graph)?;
        Ok(profile.is_rec_slot(j))
    }

    /// `stat` has no flexible variables, so it is final under every further
    /// binding. Substitution only ever adds summands to `other` at the top
    /// and in non-recursive slots (bindings join summands in; merging and
    /// extraction never remove any, except from recursive slots). So any
    /// constructor `other` shows at such a position must already occur in
    /// `stat` there, or the equation can never be satisfied.
    fn statically_unmatchable(
        &self,
        stat: &AbstractTerm,
        other: &AbstractTerm,
    ) -> Result<bool, SolveError> {
        let (_, nodes_s) = stat.split();
        let (_, nodes_o) = other.split();
        for (c, slots_o) in &nodes_o {
            let Some((_, slots_s)) = nodes_s.iter().find(|(cs, _)| cs == c) else {
                return Ok(true);
            };
            let profile =
                crate::graph::canonical_profile(self.sig, c).map_err(AbsError::Graph)?;
            for i in 0..profile.arity() {
                if !profile.is_rec_slot(i) && self.statically_unmatchable(&slots_s[i], &slots_o[i])? {
                    return Ok(true);
                }
            }
        }
        Ok(false)
    }

    fn solve(&mut self, eqs: &[Eq], theta: &AbstractSubst, depth: usize) -> Result<(), SolveError> {
        self.spend()?;
        if depth > DEPTH_CAP {
            return Ok(());
        }
        if self.done() {
            return Ok(());
        }
        // Find the first equation not yet satisfied.
        let mut pending: Option<(usize, AbstractTerm, AbstractTerm)> = None;
        for (i, eq) in eqs.iter().enumerate() {
            let a = normalize(self.sig, &eq.lhs.apply(theta))?;
            let b = normalize(self.sig, &eq.rhs.apply(theta))?;
            if a != b {
                pending = Some((i, a, b));
                break;
            }
        }
        let Some((i, a, b)) = pending else {
            self.solutions.push(theta.clone());
            return Ok(());
        };
        let ty = eqs[i].ty.clone();

        // Variable elimination.
        for (x, other) in [(a.is_single_var(), &b), (b.is_single_var(), &a)] {
            if let Some(x) = x {
                if self.is_flex(x) && !other.vars().contains(x) {
                    let th = self.bind(theta, x, other)?;
                    return self.solve(eqs, &th, depth + 1);
                }
            }
        }

        let (vars_a, nodes_a) = a.split();
        let (vars_b, nodes_b) = b.split();

        // A side without any flexible variable is unchanged by every further
        // binding; if the other side already carries structure the static
        // side cannot exhibit, the equation is dead.
        for (x, y) in [(&a, &b), (&b, &a)] {
            if x.vars().iter().all(|v| !self.is_flex(v)) && self.statically_unmatchable(x, y)? {
                return Ok(());
            }
        }
        // Normal forms have at most one node per constructor in a join.
        let map_a: BTreeMap<&String, &Vec<AbstractTerm>> =
            nodes_a.iter().map(|(c, s)| (c, s)).collect();
        let map_b: BTreeMap<&String, &Vec<AbstractTerm>> =
            nodes_b.iter().map(|(c, s)| (c, s)).collect();

        // Base decomposition first: when the constructor sets agree, the
        // nodes decompose pointwise into slot equations. The equation is
        // replaced by them; the top-level variable parts are solved (and
        // checked) by `elementary` right away, and both stay satisfied under
        // later bindings.
        if map_a.keys().collect::<Vec<_>>() == map_b.keys().collect::<Vec<_>>() {
            let mut sub_eqs: Vec<Eq> = eqs
                .iter()
                .enumerate()
                .filter(|(k, _)| *k != i)
                .map(|(_, e)| e.clone())
                .collect();
            for (c, slots_a) in &map_a {
                let slots_b = map_b[*c];
                let inst_ty = if ty.head_ctor() == Some(c.as_str()) {
                    ty.clone()
                } else {
                    self.sig.canonical_flat(c).expect("declared constructor")
                };
                let slot_tys = self.slot_types(c, &inst_ty)?;
                for ((sa, sb), st) in slots_a.iter().zip(slots_b).zip(slot_tys) {
                    sub_eqs.push(Eq {
                        lhs: sa.clone(),
                        rhs: sb.clone(),
                        ty: st,
                    });
                }
            }
            self.elementary(&vars_a, &vars_b, sub_eqs, theta, depth)?;
            if self.done() {
                return Ok(());
            }
        }

        // Structuring: an unbound variable at the top level or in a
        // recursive slot may be a node plus a remainder. A top-level
        // variable only takes a constructor the opposite side exhibits; a
        // recursive-slot variable takes its slot's constructor. At most one
        // node part per variable and constructor.
        if nodes_a.is_empty() && nodes_b.is_empty() {
            return Ok(());
        }
        let mut candidates: Vec<(String, String)> = Vec::new();
        for x in &vars_a {
            for c in map_b.keys() {
                candidates.push((x.clone(), (*c).clone()));
            }
        }
        for x in &vars_b {
            for c in map_a.keys() {
                candidates.push((x.clone(), (*c).clone()));
            }
        }
        for (c, slots) in nodes_a.iter().chain(nodes_b.iter()) {
            let inst_ty = if ty.head_ctor() == Some(c.as_str()) {
                ty.clone()
            } else {
                self.sig.canonical_flat(c).expect("declared constructor")
            };
            let slot_tys = self.slot_types(c, &inst_ty)?;
            for (j, slot) in slots.iter().enumerate() {
                if !self.is_rec_slot(c, j)? {
                    continue;
                }
                if let Some(sc) = slot_tys[j].head_ctor() {
                    for x in slot.vars() {
                        candidates.push((x, sc.to_string()));
                    }
                }
            }
        }
        candidates.sort();
        candidates.dedup();
        for (x, ctor) in candidates {
            if !self.is_flex(&x) {
                continue;
            }
            let Some((gen, consumed)) = self.structurable.get(&x) else {
                continue;
            };
            if *gen > GEN_CAP || consumed.contains(&ctor) {
                continue;
            }
            let gen = *gen;
            let arity = canonical_profile(self.sig, &ctor)
                .map_err(AbsError::Graph)?
                .arity();
            let slot_vars: Vec<String> = (0..arity).map(|_| fresh_var()).collect();
            let slots: Vec<AbstractTerm> =
                slot_vars.iter().map(|w| AbstractTerm::var(w)).collect();
            let tail = fresh_var();
            let value = AbstractTerm::node(&ctor, slots).join(&AbstractTerm::var(&tail));
            let th = self.bind(theta, &x, &value)?;
            // The slot variables stand for arbitrary content (one
            // generation deeper); the remainder stays at the variable's
            // generation and may still take the other constructors.
            for w in &slot_vars {
                self.structurable.insert(w.clone(), (gen + 1, BTreeSet::new()));
            }
            let mut consumed = self.structurable[&x].1.clone();
            consumed.insert(ctor.clone());
            self.structurable.insert(tail.clone(), (gen, consumed));
            self.solve(eqs, &th, depth + 1)?;
            self.structurable.remove(&tail);
            for w in &slot_vars {
                self.structurable.remove(w);
            }
            if self.done() {
                return Ok(());
            }
        }
        Ok(())
    }

    /// Solves the top-level variable parts `vars_a = vars_b` (as joins) and
    /// continues with the remaining equations.
    fn elementary(
        &mut self,
        vars_a: &[String],
        vars_b: &[String],
        rest: Vec<Eq>,
        theta: &AbstractSubst,
        depth: usize,
    ) -> Result<(), SolveError> {
        let set_a: BTreeSet<&String> = vars_a.iter().collect();
        let set_b: BTreeSet<&String> = vars_b.iter().collect();
        let flex_a: Vec<&String> = vars_a.iter().filter(|x| self.is_flex(x)).collect();
        let flex_b: Vec<&String> = vars_b.iter().filter(|x| self.is_flex(x)).collect();
        let rigid_a: BTreeSet<&String> = vars_a.iter().filter(|x| !self.is_flex(x)).collect();
        let rigid_b: BTreeSet<&String> = vars_b.iter().filter(|x| !self.is_flex(x)).collect();
        let shared: BTreeSet<&String> = set_a.intersection(&set_b).copied().collect();

        // Rigid atoms only on one side must be covered by a flex var of the
        // other side; enumerate the subset each non-shared flex var takes
        // from the opposite side's rigids.
        let takers_a: Vec<&String> = flex_a
            .iter()
            .filter(|x| !shared.contains(**x))
            .copied()
            .collect();
        let takers_b: Vec<&String> = flex_b
            .iter()
            .filter(|x| !shared.contains(**x))
            .copied()
            .collect();
        let pool_a: Vec<&String> = rigid_b.difference(&rigid_a).copied().collect();
        let pool_b: Vec<&String> = rigid_a.difference(&rigid_b).copied().collect();

        // Shared fresh variables, one per (flex of a, flex of b) pair.
        let mut z: BTreeMap<(String, String), String> = BTreeMap::new();
        for va in &flex_a {
            for vb in &flex_b {
                let key = ((*va).clone(), (*vb).clone());
                z.entry(key).or_insert_with(fresh_var);
            }
        }

        let n_a = pool_a.len() * takers_a.len();
        let n_b = pool_b.len() * takers_b.len();
        if n_a + n_b > 24 {
            return Err(SolveError::Budget);
        }
        for mask_a in 0..(1usize << n_a) {
            'mask: for mask_b in 0..(1usize << n_b) {
                self.spend()?;
                if self.done() {
                    return Ok(());
                }
                let take = |mask: usize, t: usize, r: usize, pool_len: usize| -> bool {
                    mask >> (t * pool_len + r) & 1 == 1
                };
                // Coverage: every one-sided rigid must be taken by someone.
                for (r, _) in pool_a.iter().enumerate() {
                    if !(0..takers_a.len()).any(|t| take(mask_a, t, r, pool_a.len())) {
                        continue 'mask;
                    }
                }
                for (r, _) in pool_b.iter().enumerate() {
                    if !(0..takers_b.len()).any(|t| take(mask_b, t, r, pool_b.len())) {
                        continue 'mask;
                    }
                }
                let mut th = theta.clone();
                let assemble = |x: &String,
                                    on_a: bool,
                                    taken: Vec<&String>,
                                    z: &BTreeMap<(String, String), String>|
                 -> AbstractTerm {
                    let mut parts: Vec<AbstractTerm> =
                        taken.iter().map(|r| AbstractTerm::var(r)).collect();
                    for ((va, vb), zv) in z {
                        let involved = if shared.contains(x) {
                            va == x || vb == x
                        } else if on_a {
                            va == x
                        } else {
                            vb == x
                        };
                        if involved {
                            parts.push(AbstractTerm::var(zv));
                        }
                    }
                    AbstractTerm::join_all(parts)
                };
                let mut seen: BTreeSet<&String> = BTreeSet::new();
                for (t, x) in takers_a.iter().enumerate() {
                    let taken: Vec<&String> = pool_a
                        .iter()
                        .enumerate()
                        .filter(|(r, _)| take(mask_a, t, *r, pool_a.len()))
                        .map(|(_, v)| *v)
                        .collect();
                    th = self.bind(&th, x, &assemble(x, true, taken, &z))?;
                    seen.insert(x);
                }
                for (t, x) in takers_b.iter().enumerate() {
                    if seen.contains(x) {
                        continue;
                    }
                    let taken: Vec<&String> = pool_b
                        .iter()
                        .enumerate()
                        .filter(|(r, _)| take(mask_b, t, *r, pool_b.len()))
                        .map(|(_, v)| *v)
                        .collect();
                    th = self.bind(&th, x, &assemble(x, false, taken, &z))?;
                    seen.insert(x);
                }
                for x in flex_a.iter().chain(flex_b.iter()) {
                    if !seen.contains(*x) {
                        th = self.bind(&th, x, &assemble(x, set_a.contains(*x), vec![], &z))?;
                        seen.insert(x);
                    }
                }
                // After the bindings, the top-level var parts must agree.
                let top_a = AbstractTerm::join_all(vars_a.iter().map(|x| AbstractTerm::var(x)))
                    .apply(&th);
                let top_b = AbstractTerm::join_all(vars_b.iter().map(|x| AbstractTerm::var(x)))
                    .apply(&th);
                if normalize(self.sig, &top_a)? != normalize(self.sig, &top_b)? {
                    continue 'mask;
                }
                self.solve(&rest, &th, depth + 1)?;
            }
        }
        Ok(())
    }
}

fn run_solver(
    sig: &Signature,
    eqs: Vec<Eq>,
    rigid: BTreeSet<String>,
    first_only: bool,
    budget: usize,
) -> Result<(Vec<AbstractSubst>, usize), SolveError> {
    let mut structurable: BTreeMap<String, (usize, BTreeSet<String>)> = BTreeMap::new();
    for eq in &eqs {
        for v in eq.lhs.vars().into_iter().chain(eq.rhs.vars()) {
            structurable.entry(v).or_default();
        }
    }
    let mut solver = Solver {
        sig,
        rigid,
        structurable,
        budget,
        first_only,
        solutions: Vec::new(),
    };
    solver.solve(&eqs, &AbstractSubst::new(), 0)?;
    Ok((solver.solutions, solver.budget))
}

fn infer_eq_type(a: &AbstractTerm, b: &AbstractTerm, sig: &Signature) -> TypeTerm {
    match eq_ctor(a, b, &TypeTerm::param("_T")) {
        Some(c) => sig
            .canonical_flat(&c)
            .unwrap_or_else(|| TypeTerm::param("_T")),
        None => TypeTerm::param("_T"),
    }
}

fn make_eqs(
    sig: &Signature,
    lhs: &[AbstractTerm],
    rhs: &[AbstractTerm],
    tys: Option<&[TypeTerm]>,
) -> Vec<Eq> {
    lhs.iter()
        .zip(rhs)
        .enumerate()
        .map(|(i, (a, b))| Eq {
            lhs: a.clone(),
            rhs: b.clone(),
            ty: match tys {
                Some(ts) => ts[i].clone(),
                None => infer_eq_type(a, b, sig),
            },
        })
        .collect()
}

/// Restricts a solution to the interesting variables and normalizes ranges.
fn finalize(
    sig: &Signature,
    theta: &AbstractSubst,
    keep: &BTreeSet<String>,
) -> Result<AbstractSubst, SolveError> {
    let mut out = AbstractSubst::new();
    for (x, t) in &theta.0 {
        if keep.contains(x) {
            out.0.insert(x.clone(), normalize(sig, t)?);
        }
    }
    Ok(out)
}

/// Does theta1 instantiate theta2, i.e. is theta1 below theta2 on the tuple
/// of the given variables?
fn subst_le(
    sig: &Signature,
    vars: &BTreeSet<String>,
    th1: &AbstractSubst,
    th2: &AbstractSubst,
    pool: &mut usize,
) -> Result<bool, SolveError> {
    let tup1: Vec<AbstractTerm> = vars
        .iter()
        .map(|x| th1.0.get(x).cloned().unwrap_or_else(|| AbstractTerm::var(x)))
        .collect();
    let tup2: Vec<AbstractTerm> = vars
        .iter()
        .map(|x| th2.0.get(x).cloned().unwrap_or_else(|| AbstractTerm::var(x)))
        .collect();
    // The check is cosmetic (it only prunes redundant unifiers), so it
    // draws on a shared pool with a per-check cap; once the pool runs dry
    // remaining pairs count as incomparable and both solutions are kept.
    let budget = (*pool).min(MINIMIZE_BUDGET);
    if budget == 0 {
        return Ok(false);
    }
    match le_tuple_with_budget(sig, &tup1, &tup2, None, budget) {
        Ok((r, left)) => {
            *pool -= budget - left;
            Ok(r.is_some())
        }
        Err(SolveError::Budget) => {
            *pool -= budget;
            Ok(false)
        }
        Err(e) => Err(e),
    }
}

/// All unifiers found for the two tuples, minimized: solutions strictly
/// below another solution are dropped, equivalent duplicates collapsed.
pub fn unify_tuples(
    sig: &Signature,
    lhs: &[AbstractTerm],
    rhs: &[AbstractTerm],
    tys: Option<&[TypeTerm]>,
) -> Result<Vec<AbstractSubst>, SolveError> {
    assert_eq!(lhs.len(), rhs.len(), "tuple lengths differ");
    let eqs = make_eqs(sig, lhs, rhs, tys);
    let mut keep: BTreeSet<String> = BTreeSet::new();
    for eq in &eqs {
        keep.extend(eq.lhs.vars());
        keep.extend(eq.rhs.vars());
    }
    let (raw, _) = run_solver(sig, eqs, BTreeSet::new(), false, BUDGET)?;
    let mut sols = Vec::new();
    for th in &raw {
        let th = finalize(sig, th, &keep)?;
        for (a, b) in lhs.iter().zip(rhs) {
            assert!(
                eq_acplus(sig, &a.apply(&th), &b.apply(&th))?,
                "unsound unifier {th} for {a} = {b}"
            );
        }
        if !sols.contains(&th) {
            sols.push(th);
        }
    }
    // Keep only maximal solutions.
    let mut pool = MINIMIZE_POOL;
    let mut kept: Vec<AbstractSubst> = Vec::new();
    'outer: for (i, th) in sols.iter().enumerate() {
        for (j, other) in sols.iter().enumerate() {
            if i == j {
                continue;
            }
            let below = subst_le(sig, &keep, th, other, &mut pool)?;
            if below {
                let above = subst_le(sig, &keep, other, th, &mut pool)?;
                if !above || j < i {
                    continue 'outer;
                }
            }
        }
        kept.push(th.clone());
    }
    Ok(kept)
}

/// Matching: a substitution over the variables of `general` (those not in
/// `instance`) that makes it equal to `instance`, if one exists.
pub fn le_tuple(
    sig: &Signature,
    instance: &[AbstractTerm],
    general: &[AbstractTerm],
    tys: Option<&[TypeTerm]>,
) -> Result<Option<AbstractSubst>, SolveError> {
    Ok(le_tuple_with_budget(sig, instance, general, tys, BUDGET)?.0)
}

/// Like `le_tuple`, with an explicit search budget; also returns the budget
/// left over so callers can account shared pools.
fn le_tuple_with_budget(
    sig: &Signature,
    instance: &[AbstractTerm],
    general: &[AbstractTerm],
    tys: Option<&[TypeTerm]>,
    budget: usize,
) -> Result<(Option<AbstractSubst>, usize), SolveError> {
    assert_eq!(instance.len(), general.len(), "tuple lengths differ");
    let mut rigid = BTreeSet::new();
    for a in instance {
        rigid.extend(a.vars());
    }
    let mut keep = BTreeSet::new();
    for b in general {
        keep.extend(b.vars());
    }
    let keep: BTreeSet<String> = keep.difference(&rigid).cloned().collect();
    let eqs = make_eqs(sig, general, instance, tys);
    let (raw, left) = run_solver(sig, eqs, rigid, true, budget)?;
    match raw.into_iter().next() {
        Some(th) => Ok((Some(finalize(sig, &th, &keep)?), left)),
        None => Ok((None, left)),
    }
}

/// `a` is below `b`: some substitution makes `b` equal to `a`.
pub fn le_acplus(
    sig: &Signature,
    a: &AbstractTerm,
    b: &AbstractTerm,
) -> Result<Option<AbstractSubst>, SolveError> {
    le_tuple(sig, std::slice::from_ref(a), std::slice::from_ref(b), None)
}

/// Equivalence: below in both directions.
pub fn equiv(sig: &Signature, a: &AbstractTerm, b: &AbstractTerm) -> Result<bool, SolveError> {
    Ok(le_acplus(sig, a, b)?.is_some() && le_acplus(sig, b, a)?.is_some())
}

/// The common instances of two tuples: the left side instantiated by each
/// unifier, normalized.
pub fn common_instances(
    sig: &Signature,
    lhs: &[AbstractTerm],
    rhs: &[AbstractTerm],
    tys: Option<&[TypeTerm]>,
) -> Result<Vec<Vec<AbstractTerm>>, SolveError> {
    let mut out: Vec<Vec<AbstractTerm>> = Vec::new();
    for th in unify_tuples(sig, lhs, rhs, tys)? {
        let inst: Vec<AbstractTerm> = lhs
            .iter()
            .map(|a| normalize(sig, &a.apply(&th)))
            .collect::<Result<_, _>>()?;
        if !out.contains(&inst) {
            out.push(inst);
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::absterm::parse_abstract;
    use crate::sigs::{lists_with_int, nests_with_int};

    fn at(s: &str) -> AbstractTerm {
        parse_abstract(s).unwrap()
    }

    #[test]
    fn le_examples() {
        let sig = lists_with_int();
        let th = le_acplus(&sig, &at("list#(int#)"), &at("list#(X)+Y"))
            .unwrap()
            .expect("below");
        let inst = normalize(&sig, &at("list#(X)+Y").apply(&th)).unwrap();
        assert_eq!(inst, at("list#(int#)"));
        // Not below: a ground term cannot be weakened.
        assert!(le_acplus(&sig, &at("list#(X)+Y"), &at("list#(int#)"))
            .unwrap()
            .is_none());
        // Reflexive.
        assert!(le_acplus(&sig, &at("list#(X)"), &at("list#(X)"))
            .unwrap()
            .is_some());
    }

    #[test]
    fn var_merging_is_equivalent() {
        let sig = lists_with_int();
        // a{x/z, y/z} is equivalent to a when x and y occur at the same
        // positions.
        assert!(equiv(&sig, &at("list#(X+Y)"), &at("list#(Z)")).unwrap());
        assert!(!equiv(&sig, &at("list#(X)"), &at("list#(int#)")).unwrap());
    }

    #[test]
    fn unify_two_variables_shares_a_fresh_one() {
        let sig = lists_with_int();
        let sols = unify_tuples(&sig, &[at("X")], &[at("Y")], None).unwrap();
        assert!(!sols.is_empty());
        let th = &sols[0];
        assert_eq!(at("X").apply(th), at("Y").apply(th));
    }

    #[test]
    fn unify_structure_against_ground() {
        let sig = lists_with_int();
        let sols = unify_tuples(&sig, &[at("list#(X)+Y")], &[at("list#(int#)")], None).unwrap();
        // The cover {X -> int#, Y -> list#(0)} must be an instance of some
        // solution.
        let target_x = at("int#");
        let target_y = at("list#(0)");
        let covered = sols.iter().any(|th| {
            let tup1 = vec![target_x.clone(), target_y.clone()];
            let tup2 = vec![
                th.0.get("X").cloned().unwrap_or_else(|| at("X")),
                th.0.get("Y").cloned().unwrap_or_else(|| at("Y")),
            ];
            le_tuple(&sig, &tup1, &tup2, None).unwrap().is_some()
        });
        assert!(covered, "solutions: {sols:?}");
    }

    #[test]
    fn unify_fails_on_clashing_ground_terms() {
        let sig = lists_with_int();
        assert!(unify_tuples(&sig, &[at("list#(int#)")], &[at("list#(0)")], None)
            .unwrap()
            .is_empty());
        assert!(unify_tuples(&sig, &[at("int#")], &[at("0")], None)
            .unwrap()
            .is_empty());
    }

    #[test]
    fn extraction_aware_unification() {
        let sig = nests_with_int();
        // The nested-list content of the recursive slot surfaces at the top
        // level, so L can provide the int# summand: L -> list#(int#).
        let lhs = at("nest#(0,L)");
        let rhs = at("int#+nest#(0,0)");
        let sols = unify_tuples(&sig, &[lhs.clone()], &[rhs.clone()], None).unwrap();
        assert!(!sols.is_empty(), "no unifier found");
        let covered = sols.iter().any(|th| {
            let l = th.0.get("L").cloned().unwrap_or_else(|| at("L"));
            le_tuple(&sig, &[at("list#(int#)")], &[l], None)
                .unwrap()
                .is_some()
        });
        assert!(covered, "solutions: {sols:?}");
        // Content can even reach the non-recursive slot: a nest# node inside
        // the nested list surfaces and merges with the outer node, so
        // X -> list#(nest#(int#,0)) solves nest#(0,X) = nest#(int#,0).
        let sols =
            unify_tuples(&sig, &[at("nest#(0,X)")], &[at("nest#(int#,0)")], None).unwrap();
        assert!(!sols.is_empty());
        for th in &sols {
            let l = normalize(&sig, &at("nest#(0,X)").apply(th)).unwrap();
            assert_eq!(l, at("nest#(int#,0)"));
        }
    }

    #[test]
    fn absorption_family_is_covered() {
        let sig = lists_with_int();
        // x + y = x has the general solution x -> y + x'.
        let sols = unify_tuples(&sig, &[at("X+Y")], &[at("X")], None).unwrap();
        let covered = sols.iter().any(|th| {
            let y = th.0.get("Y").cloned().unwrap_or_else(|| at("Y"));
            let x = th.0.get("X").cloned().unwrap_or_else(|| at("X"));
            // y must be absorbed into x.
            let joined = x.join(&y);
            eq_acplus(&sig, &joined, &x).unwrap()
        });
        assert!(covered, "solutions: {sols:?}");
    }
}
