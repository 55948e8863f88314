//! Randomized properties of the abstract domain, the abstraction function,
//! labelling, and the fixpoint operator.
//!
//! Every test draws at least 500 cases from a ChaCha stream. The seed
//! defaults to a constant and can be overridden with `TLP_TEST_SEED` to
//! reproduce a failure.

use std::collections::hash_map::DefaultHasher;
use std::hash::{Hash, Hasher};

use rand::prelude::*;
use rand_chacha::ChaCha8Rng;
use tlp_core::sigs::nests_with_int;
use tlp_core::{
    abstract_program, abstract_term, abstract_tp, absterm::position_count, canonicalize_vars,
    describes, eq_acplus, is_normal_form, labels, labels_abstract, le_acplus, le_tuple, normalize,
    parse_program, parse_type, readback, semantics::AbstractInterpretation, AbstractAtom,
    AbstractTerm, LabelQuery, Program, QueryAnswer, Signature, Subst, Term, TypeTerm,
};

const CASES: usize = 500;

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

/// A random ground-constructor type built from int, list and nest.
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

/// Variable pool for concrete term generation; the prefix keeps the
/// variables of a substitution's images disjoint from its domain.
struct Pool {
    prefix: &'static str,
    vars: Vec<(String, TypeTerm)>,
}

impl Pool {
    fn new(prefix: &'static str) -> Self {
        Pool {
            prefix,
            vars: Vec::new(),
        }
    }
}

/// A random concrete term of the given type; variables are drawn from a
/// per-type pool so that sharing occurs.
fn gen_term(
    rng: &mut ChaCha8Rng,
    t: &TypeTerm,
    depth: usize,
    pool: &mut Pool,
) -> Term {
    if rng.gen_bool(0.25) {
        let existing: Vec<String> = pool
            .vars
            .iter()
            .filter(|(_, pt)| pt == t)
            .map(|(x, _)| x.clone())
            .collect();
        if !existing.is_empty() && rng.gen_bool(0.5) {
            return Term::var(existing.choose(rng).unwrap());
        }
        let name = format!("{}{}", pool.prefix, pool.vars.len());
        pool.vars.push((name.clone(), t.clone()));
        return Term::var(&name);
    }
    match t {
        TypeTerm::Ctor(c, args) if c == "int" => {
            let _ = args;
            Term::constant(if rng.gen_bool(0.5) { "1" } else { "7" })
        }
        TypeTerm::Ctor(c, args) if c == "list" => {
            if depth == 0 || rng.gen_bool(0.3) {
                Term::constant("nil")
            } else {
                let hd = gen_term(rng, &args[0], depth - 1, pool);
                let tl = gen_term(rng, t, depth - 1, pool);
                Term::app("cons", vec![hd, tl])
            }
        }
        TypeTerm::Ctor(c, args) if c == "nest" => {
            if depth == 0 || rng.gen_bool(0.5) {
                Term::app("e", vec![gen_term(rng, &args[0], depth.saturating_sub(1), pool)])
            } else {
                let inner = TypeTerm::Ctor("list".into(), vec![t.clone()]);
                Term::app("n", vec![gen_term(rng, &inner, depth - 1, pool)])
            }
        }
        other => panic!("no generator for type {other}"),
    }
}

/// A random abstract term well-typed at the given type: a join of variables
/// and constructor summands whose slots are generated recursively.
fn gen_abs(rng: &mut ChaCha8Rng, t: &TypeTerm, depth: usize, next_var: &mut usize) -> AbstractTerm {
    let parts = rng.gen_range(0..=2);
    let mut out = AbstractTerm::empty();
    for _ in 0..parts {
        let part = if depth == 0 || rng.gen_bool(0.4) {
            if rng.gen_bool(0.5) {
                *next_var += 1;
                AbstractTerm::var(&format!("A{next_var}"))
            } else {
                match t {
                    TypeTerm::Ctor(c, _) if c == "int" => AbstractTerm::node("int", vec![]),
                    _ => {
                        *next_var += 1;
                        AbstractTerm::var(&format!("A{next_var}"))
                    }
                }
            }
        } else {
            match t {
                TypeTerm::Ctor(c, _) if c == "int" => AbstractTerm::node("int", vec![]),
                TypeTerm::Ctor(c, args) if c == "list" => AbstractTerm::node(
                    "list",
                    vec![gen_abs(rng, &args[0], depth - 1, next_var)],
                ),
                TypeTerm::Ctor(c, args) if c == "nest" => {
                    let rec = TypeTerm::Ctor("list".into(), vec![t.clone()]);
                    AbstractTerm::node(
                        "nest",
                        vec![
                            gen_abs(rng, &args[0], depth - 1, next_var),
                            gen_abs(rng, &rec, depth - 1, next_var),
                        ],
                    )
                }
                other => panic!("no generator for type {other}"),
            }
        };
        out = out.join(&part);
    }
    out
}

pub fn normalize_terminates_idempotently_and_preserves_typing() {
    let sig = nests_with_int();
    let mut rng = rng_for("normalize");
    for case in 0..CASES {
        let t = gen_ty(&mut rng, 2);
        let mut nv = 0;
        let a = gen_abs(&mut rng, &t, 3, &mut nv);
        let b = gen_abs(&mut rng, &t, 3, &mut nv);
        let na = normalize(&sig, &a).unwrap();
        assert!(is_normal_form(&sig, &na).unwrap(), "case {case}: {a} -> {na}");
        assert!(
            tlp_core::abstract_type_check(&sig, &na, &t),
            "case {case}: {na} no longer typed at {t}"
        );
        // Idempotence.
        assert_eq!(normalize(&sig, &na).unwrap(), na, "case {case}");
        // Rewrite order does not matter: normalizing the parts first and
        // then the join gives the same result as normalizing the join.
        let joined = normalize(&sig, &a.join(&b)).unwrap();
        let pre = normalize(&sig, &na.join(&normalize(&sig, &b).unwrap())).unwrap();
        assert_eq!(joined, pre, "case {case}: {a} + {b}");
    }
}

pub fn abstraction_commutes_with_substitution() {
    let sig = nests_with_int();
    let mut rng = rng_for("subst");
    for case in 0..CASES {
        let t = gen_ty(&mut rng, 2);
        let mut pool = Pool::new("X");
        let term = gen_term(&mut rng, &t, 3, &mut pool);
        let mut theta = Subst::new();
        let mut theta_abs = tlp_core::AbstractSubst::new();
        for (x, xt) in &pool.vars {
            let mut inner = Pool::new("Y");
            let image = gen_term(&mut rng, xt, 2, &mut inner);
            theta_abs
                .0
                .insert(x.clone(), abstract_term(&sig, &image).unwrap());
            theta.bind(x, image);
        }
        let lhs = abstract_term(&sig, &term.apply(&theta)).unwrap();
        let rhs = abstract_term(&sig, &term).unwrap().apply(&theta_abs);
        assert!(
            eq_acplus(&sig, &lhs, &rhs).unwrap(),
            "case {case}: term {term}, lhs {lhs}, rhs {rhs}"
        );
    }
}

pub fn abstraction_is_monotone_on_instances() {
    let sig = nests_with_int();
    let mut rng = rng_for("monotone");
    for case in 0..CASES {
        let t = gen_ty(&mut rng, 2);
        let mut pool = Pool::new("X");
        let term = gen_term(&mut rng, &t, 3, &mut pool);
        let mut theta = Subst::new();
        for (x, xt) in &pool.vars {
            let mut inner = Pool::new("Y");
            theta.bind(x, gen_term(&mut rng, xt, 2, &mut inner));
        }
        let general = abstract_term(&sig, &term).unwrap();
        let instance = abstract_term(&sig, &term.apply(&theta)).unwrap();
        assert!(
            le_acplus(&sig, &instance, &general).unwrap().is_some(),
            "case {case}: {instance} not below {general} (term {term})"
        );
    }
}

pub fn labelling_commutes_with_abstraction() {
    let sig = nests_with_int();
    let mut rng = rng_for("labels");
    let queries = [
        ("nest(V)", "nest(V)", "V", "nest(int)"),
        ("nest(V)", "nest(V)", "nest(V)", "nest(int)"),
        ("nest(V)", "list(nest(V))", "V", "list(nest(int))"),
        ("nest(V)", "list(nest(V))", "list(nest(V))", "list(nest(int))"),
    ];
    for case in 0..CASES {
        let (grammar, start, target, term_ty) = queries[case % queries.len()];
        let q = LabelQuery {
            grammar_type: ty(grammar),
            start: ty(start),
            target: ty(target),
        };
        let mut pool = Pool::new("X");
        let term = gen_term(&mut rng, &ty(term_ty), 4, &mut pool);
        let concrete = labels(&sig, &q, &term).unwrap();
        let lhs = normalize(
            &sig,
            &AbstractTerm::join_all(
                concrete
                    .iter()
                    .map(|l| abstract_term(&sig, l).unwrap())
                    .collect::<Vec<_>>(),
            ),
        )
        .unwrap();
        let rhs = normalize(
            &sig,
            &labels_abstract(&sig, &q, &abstract_term(&sig, &term).unwrap()).unwrap(),
        )
        .unwrap();
        assert!(
            eq_acplus(&sig, &lhs, &rhs).unwrap(),
            "case {case}: term {term}, concrete {lhs}, abstract {rhs}"
        );
    }
}

pub fn readback_flags_agree_with_described_terms() {
    let sig = nests_with_int();
    let mut rng = rng_for("readback");
    for case in 0..CASES {
        let t = gen_ty(&mut rng, 2);
        let mut nv = 0;
        let v = normalize(&sig, &gen_abs(&mut rng, &t, 2, &mut nv)).unwrap();
        let answer = QueryAnswer {
            bindings: vec![("X".to_string(), v.clone())],
        };
        let rb = &readback(&answer)[0];
        for _ in 0..3 {
            let mut pool = Pool::new("X");
            let cand = gen_term(&mut rng, &t, 2, &mut pool);
            if !describes(&sig, &v, &cand).unwrap() {
                continue;
            }
            if rb.ground {
                assert!(
                    cand.vars().is_empty(),
                    "case {case}: {v} flagged ground but describes {cand}"
                );
            }
            if let Some(c) = &rb.definite_ctor {
                if let Term::App(f, _) = &cand {
                    let range = &sig.funcs[f].range;
                    if let TypeTerm::Ctor(rc, _) = range {
                        assert_eq!(
                            rc, c,
                            "case {case}: {v} promises root {c} but describes {cand}"
                        );
                    }
                } else {
                    // A bare variable can only be described when the value
                    // has no constructor summand.
                    assert!(
                        rb.may_be_free,
                        "case {case}: {v} describes variable {cand} but not flagged free"
                    );
                }
            }
        }
    }
}

pub fn canonicalize_vars_preserves_meaning_within_variable_bound() {
    let sig = nests_with_int();
    let mut rng = rng_for("canon");
    for case in 0..CASES {
        let t1 = gen_ty(&mut rng, 2);
        let t2 = gen_ty(&mut rng, 2);
        let mut nv = 0;
        let args = vec![
            normalize(&sig, &gen_abs(&mut rng, &t1, 2, &mut nv)).unwrap(),
            normalize(&sig, &gen_abs(&mut rng, &t2, 2, &mut nv)).unwrap(),
        ];
        let canon = canonicalize_vars(&args);
        // Rename the canonicalized side apart: equivalence is up to
        // renaming, and shared names would be pinned by the matcher.
        let renaming = tlp_core::AbstractSubst(
            canon
                .iter()
                .flat_map(|a| a.vars())
                .map(|x| (x.clone(), AbstractTerm::var(&format!("{x}_r"))))
                .collect(),
        );
        let canon: Vec<AbstractTerm> = canon.iter().map(|a| a.apply(&renaming)).collect();
        assert!(
            le_tuple(&sig, &args, &canon, None).unwrap().is_some()
                && le_tuple(&sig, &canon, &args, None).unwrap().is_some(),
            "case {case}: {args:?} not equivalent to {canon:?}"
        );
        let n = position_count(&sig, &t1).unwrap() + position_count(&sig, &t2).unwrap();
        let mut vars = std::collections::BTreeSet::new();
        for a in &canon {
            vars.extend(a.vars());
        }
        if n < 20 {
            assert!(
                vars.len() <= (1usize << n) - 1,
                "case {case}: {} variables exceeds 2^{n}-1",
                vars.len()
            );
        }
    }
}

const APPEND: &str = "\
type list(U).
func nil : -> list(U).
func cons : U, list(U) -> list(U).
pred append : list(U), list(U), list(U).

append(nil, Ys, Ys).
append(cons(X, Xs), Ys, cons(X, Zs)) :- append(Xs, Ys, Zs).
";

fn gen_append_atom(rng: &mut ChaCha8Rng, sig: &Signature, next_var: &mut usize) -> AbstractAtom {
    let lt = ty("list(int)");
    let args = (0..3)
        .map(|_| normalize(sig, &gen_abs(rng, &lt, 2, next_var)).unwrap())
        .collect();
    AbstractAtom::new("append", args)
}

pub fn abstract_consequence_operator_is_monotone() {
    let prog: Program = parse_program(APPEND).unwrap();
    let sig = &prog.sig;
    let (clauses, _) = abstract_program(&prog).unwrap();
    let mut rng = rng_for("tp-monotone");
    for case in 0..CASES {
        let mut nv = 0;
        let mut small = AbstractInterpretation::new();
        let mut large = AbstractInterpretation::new();
        for i in 0..rng.gen_range(0..=2usize) {
            let atom = gen_append_atom(&mut rng, sig, &mut nv);
            if i < 2 {
                small.insert(sig, atom.clone()).unwrap();
            }
            large.insert(sig, atom).unwrap();
        }
        for _ in 0..rng.gen_range(0..=1usize) {
            large
                .insert(sig, gen_append_atom(&mut rng, sig, &mut nv))
                .unwrap();
        }
        let out_small = abstract_tp(sig, &clauses, &small).unwrap();
        let mut out_large = AbstractInterpretation::new();
        for atom in abstract_tp(sig, &clauses, &large).unwrap() {
            out_large.insert(sig, atom).unwrap();
        }
        for atom in out_small {
            assert!(
                out_large.covers(sig, &atom).unwrap(),
                "case {case}: {atom} from the smaller interpretation is not covered"
            );
        }
    }
}
