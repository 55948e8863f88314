//! Randomized validation of the AC+ unification engine.
//!
//! Soundness is asserted inside `unify_tuples` on every call and re-checked
//! here. Completeness is validated against a brute-force oracle that
//! enumerates candidate substitutions over the joint subterm universe of the
//! two inputs plus a shared fresh variable, keeps those that equate the
//! sides, and demands each to be an instance of some returned unifier.
//!
//! Seed defaults to a constant; override with `TLP_TEST_SEED` to reproduce.

use std::collections::hash_map::DefaultHasher;
use std::hash::{Hash, Hasher};

use rand::prelude::*;
use rand_chacha::ChaCha8Rng;
use tlp_core::sigs::nests_with_int;
use tlp_core::{
    abstract_term, eq_acplus, le_tuple, mgu, normalize, parse_type, unify_tuples, AbstractSubst,
    AbstractTerm, Signature, SolveError, Summand, Term, TypeTerm,
};

/// Runs the solver, treating budget exhaustion as a skip: the search is
/// deliberately capped, and a capped instance tells us nothing about
/// soundness or completeness. Callers assert that skips stay rare.
fn unify_or_skip(
    sig: &Signature,
    lhs: &AbstractTerm,
    rhs: &AbstractTerm,
    t: &TypeTerm,
) -> Option<Vec<AbstractSubst>> {
    match unify_tuples(
        sig,
        std::slice::from_ref(lhs),
        std::slice::from_ref(rhs),
        Some(std::slice::from_ref(t)),
    ) {
        Ok(s) => Some(s),
        Err(SolveError::Budget) => None,
        Err(e) => panic!("solver error {e:?} on {lhs} = {rhs}"),
    }
}

fn rng_for(test: &str) -> ChaCha8Rng {
    let base: u64 = std::env::var("TLP_TEST_SEED")
        .ok()
        .and_then(|s| s.parse().ok())
        .unwrap_or(0xC0FFEE);
    let mut h = DefaultHasher::new();
    test.hash(&mut h);
    ChaCha8Rng::seed_from_u64(base ^ h.finish())
}

fn ty(s: &str) -> TypeTerm {
    parse_type(s).unwrap()
}

fn gen_ty(rng: &mut ChaCha8Rng, depth: usize) -> TypeTerm {
    if depth == 0 {
        return ty("int");
    }
    match rng.gen_range(0..3) {
        0 => ty("int"),
        1 => TypeTerm::Ctor("list".into(), vec![gen_ty(rng, depth - 1)]),
        _ => TypeTerm::Ctor("nest".into(), vec![gen_ty(rng, depth - 1)]),
    }
}

/// Random abstract term typed at `t` with at most `max_vars` variables,
/// named from `prefix` so the two sides of a unification problem stay
/// disjoint. Variables are typed: a name is only reused at positions of the
/// type it first appeared at, as in the abstraction of a typed term.
fn gen_abs(
    rng: &mut ChaCha8Rng,
    t: &TypeTerm,
    depth: usize,
    prefix: &str,
    pool: &mut Vec<(String, TypeTerm)>,
    max_vars: usize,
) -> AbstractTerm {
    let parts = rng.gen_range(0..=2);
    let mut out = AbstractTerm::empty();
    for _ in 0..parts {
        let want_var = depth == 0 || rng.gen_bool(0.4);
        let reusable: Vec<String> = pool
            .iter()
            .filter(|(_, pt)| pt == t)
            .map(|(x, _)| x.clone())
            .collect();
        let part = if want_var && (pool.len() < max_vars || !reusable.is_empty()) {
            let name = if !reusable.is_empty() && (pool.len() >= max_vars || rng.gen_bool(0.3)) {
                reusable.choose(rng).unwrap().clone()
            } else {
                let name = format!("{prefix}{}", pool.len());
                pool.push((name.clone(), t.clone()));
                name
            };
            AbstractTerm::var(&name)
        } else {
            match t {
                TypeTerm::Ctor(c, _) if c == "int" => AbstractTerm::node("int", vec![]),
                TypeTerm::Ctor(c, args) if c == "list" && depth > 0 => AbstractTerm::node(
                    "list",
                    vec![gen_abs(rng, &args[0], depth - 1, prefix, pool, max_vars)],
                ),
                TypeTerm::Ctor(c, args) if c == "nest" && depth > 0 => {
                    let rec = TypeTerm::Ctor("list".into(), vec![t.clone()]);
                    AbstractTerm::node(
                        "nest",
                        vec![
                            gen_abs(rng, &args[0], depth - 1, prefix, pool, max_vars),
                            gen_abs(rng, &rec, depth - 1, prefix, pool, max_vars),
                        ],
                    )
                }
                _ => AbstractTerm::empty(),
            }
        };
        out = out.join(&part);
    }
    out
}

/// All subterms of an abstract term, including each summand on its own.
fn subterms(a: &AbstractTerm, out: &mut Vec<AbstractTerm>) {
    if !out.contains(a) {
        out.push(a.clone());
    }
    for s in a.summands() {
        let single = AbstractTerm::from_summands(vec![s.clone()]);
        if !out.contains(&single) {
            out.push(single);
        }
        if let Summand::Node(_, slots) = s {
            for slot in slots {
                subterms(slot, out);
            }
        }
    }
}

/// Candidate images for oracle substitutions: the subterm universe of both
/// sides, a shared fresh variable, the empty join, and all pairwise joins.
fn oracle_images(sig: &Signature, lhs: &AbstractTerm, rhs: &AbstractTerm) -> Vec<AbstractTerm> {
    let mut universe = Vec::new();
    subterms(lhs, &mut universe);
    subterms(rhs, &mut universe);
    universe.truncate(6);
    universe.push(AbstractTerm::var("W"));
    let mut images = vec![AbstractTerm::empty()];
    for (i, a) in universe.iter().enumerate() {
        images.push(a.clone());
        for b in &universe[i + 1..] {
            images.push(a.join(b));
        }
    }
    let mut out = Vec::new();
    for im in images {
        if let Ok(n) = normalize(sig, &im) {
            if !out.contains(&n) {
                out.push(n);
            }
        }
    }
    out
}

/// Is `inst` an instance of applying some unifier in `sols`? The returned
/// unifier's image is renamed apart so its fresh variables stay flexible.
fn covered_by_some(
    sig: &Signature,
    inst: &[AbstractTerm],
    lhs: &[AbstractTerm],
    sols: &[AbstractSubst],
) -> bool {
    sols.iter().any(|th| {
        let applied: Vec<AbstractTerm> = lhs
            .iter()
            .map(|a| {
                let b = a.apply(th);
                let renaming = AbstractSubst(
                    b.vars()
                        .into_iter()
                        .map(|x| (x.clone(), AbstractTerm::var(&format!("{x}_g"))))
                        .collect(),
                );
                b.apply(&renaming)
            })
            .collect();
        matches!(le_tuple(sig, inst, &applied, None), Ok(Some(_)))
    })
}

pub fn unifiers_are_sound_on_random_problems() {
    let sig = nests_with_int();
    let mut rng = rng_for("sound");
    let mut skipped = 0usize;
    for case in 0..500 {
        let _ = case;
        let t = gen_ty(&mut rng, 2);
        let (mut ul, mut ur) = (Vec::new(), Vec::new());
        let lhs = gen_abs(&mut rng, &t, 2, "L", &mut ul, 3);
        let rhs = gen_abs(&mut rng, &t, 2, "R", &mut ur, 3);
        let Some(sols) = unify_or_skip(&sig, &lhs, &rhs, &t) else {
            skipped += 1;
            continue;
        };
        for th in &sols {
            assert!(
                eq_acplus(&sig, &lhs.apply(th), &rhs.apply(th)).unwrap(),
                "unsound unifier {th} for {lhs} = {rhs}"
            );
        }
    }
    assert!(skipped <= 50, "{skipped} of 500 problems hit the search budget");
}

pub fn oracle_unifiers_are_covered() {
    let sig = nests_with_int();
    let mut rng = rng_for("oracle");
    let mut checked = 0usize;
    let mut skipped = 0usize;
    for case in 0..150 {
        let t = gen_ty(&mut rng, 1);
        let (mut ul, mut ur) = (Vec::new(), Vec::new());
        let lhs = gen_abs(&mut rng, &t, 2, "L", &mut ul, 2);
        let rhs = gen_abs(&mut rng, &t, 2, "R", &mut ur, 1);
        let mut vars: Vec<String> = lhs.vars().into_iter().collect();
        vars.extend(rhs.vars());
        if vars.len() > 3 {
            continue;
        }
        let Some(sols) = unify_or_skip(&sig, &lhs, &rhs, &t) else {
            skipped += 1;
            continue;
        };
        let images = oracle_images(&sig, &lhs, &rhs);
        let mut idx = vec![0usize; vars.len()];
        loop {
            let th = AbstractSubst(
                vars.iter()
                    .cloned()
                    .zip(idx.iter().map(|&i| images[i].clone()))
                    .collect(),
            );
            let (a, b) = (lhs.apply(&th), rhs.apply(&th));
            if let (Ok(na), Ok(true)) = (normalize(&sig, &a), eq_acplus(&sig, &a, &b)) {
                checked += 1;
                assert!(
                    covered_by_some(
                        &sig,
                        std::slice::from_ref(&na),
                        std::slice::from_ref(&lhs),
                        &sols
                    ),
                    "case {case}: oracle unifier {th} of {lhs} = {rhs} not covered by {sols:?}"
                );
            }
            // Next assignment in mixed radix.
            let mut k = 0;
            loop {
                if k == idx.len() {
                    break;
                }
                idx[k] += 1;
                if idx[k] < images.len() {
                    break;
                }
                idx[k] = 0;
                k += 1;
            }
            if k == idx.len() {
                break;
            }
        }
    }
    assert!(checked >= 500, "oracle only exercised {checked} unifiers");
    assert!(skipped <= 15, "{skipped} of 150 problems hit the search budget");
}

/// Concrete correctness: when two concrete atoms have a syntactic MGU, some
/// abstract unifier of their abstractions describes the unified atom.

pub fn abstract_unification_simulates_concrete_mgu() {
    let sig = nests_with_int();
    let mut rng = rng_for("concrete");

    fn gen_term(
        rng: &mut ChaCha8Rng,
        t: &TypeTerm,
        depth: usize,
        prefix: &str,
        pool: &mut Vec<(String, TypeTerm)>,
    ) -> Term {
        if rng.gen_bool(0.3) {
            let existing: Vec<String> = pool
                .iter()
                .filter(|(_, pt)| pt == t)
                .map(|(x, _)| x.clone())
                .collect();
            if !existing.is_empty() && rng.gen_bool(0.5) {
                return Term::var(existing.choose(rng).unwrap());
            }
            let name = format!("{prefix}{}", pool.len());
            pool.push((name.clone(), t.clone()));
            return Term::var(&name);
        }
        match t {
            TypeTerm::Ctor(c, _) if c == "int" => {
                Term::constant(if rng.gen_bool(0.5) { "1" } else { "7" })
            }
            TypeTerm::Ctor(c, args) if c == "list" => {
                if depth == 0 || rng.gen_bool(0.3) {
                    Term::constant("nil")
                } else {
                    let hd = gen_term(rng, &args[0], depth - 1, prefix, pool);
                    let tl = gen_term(rng, t, depth - 1, prefix, pool);
                    Term::app("cons", vec![hd, tl])
                }
            }
            TypeTerm::Ctor(c, args) if c == "nest" => {
                if depth == 0 || rng.gen_bool(0.5) {
                    Term::app(
                        "e",
                        vec![gen_term(rng, &args[0], depth.saturating_sub(1), prefix, pool)],
                    )
                } else {
                    let inner = TypeTerm::Ctor("list".into(), vec![t.clone()]);
                    Term::app("n", vec![gen_term(rng, &inner, depth - 1, prefix, pool)])
                }
            }
            other => panic!("no generator for type {other}"),
        }
    }

    let mut unified = 0usize;
    let mut skipped = 0usize;
    for case in 0..500 {
        let t = gen_ty(&mut rng, 2);
        let mut pl = Vec::new();
        let mut pr = Vec::new();
        let t1 = gen_term(&mut rng, &t, 3, "X", &mut pl);
        let t2 = gen_term(&mut rng, &t, 3, "Y", &mut pr);
        let Some(theta) = mgu(
            std::slice::from_ref(&t1),
            std::slice::from_ref(&t2),
        ) else {
            continue;
        };
        unified += 1;
        let a1 = abstract_term(&sig, &t1).unwrap();
        let a2 = abstract_term(&sig, &t2).unwrap();
        let Some(sols) = unify_or_skip(&sig, &a1, &a2, &t) else {
            skipped += 1;
            continue;
        };
        let concrete = normalize(&sig, &abstract_term(&sig, &t1.apply(&theta)).unwrap()).unwrap();
        assert!(
            covered_by_some(
                &sig,
                std::slice::from_ref(&concrete),
                std::slice::from_ref(&a1),
                &sols
            ),
            "case {case}: {t1} and {t2} unify concretely, but alpha of the \
             unified term is not below any abstract unifier of {a1} = {a2}"
        );
    }
    assert!(unified >= 100, "only {unified} concretely unifiable pairs");
    assert!(skipped <= 50, "{skipped} of 500 problems hit the search budget");
}
