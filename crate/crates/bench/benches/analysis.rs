//! Benchmarks for the normalizer, the unification solver, and the full
//! fixpoint computation on the bundled table insertion program.

use criterion::{criterion_group, criterion_main, Criterion};
use std::hint::black_box;
use tlp_core::{
    lfp_abstract, normalize, parse_abstract, parse_program, parse_type, unify_tuples,
};

const TABLES: &str = include_str!("../../../programs/tables.tlp");
const NESTS: &str = include_str!("../../../programs/nests.tlp");

fn bench_normalize(c: &mut Criterion) {
    let sig = parse_program(NESTS).unwrap().sig;
    let a = parse_abstract(
        "nest#(0, list#(nest#(int#, 0)) + L) + nest#(X + int#, list#(nest#(0, M)))",
    )
    .unwrap();
    c.bench_function("normalize/nested join", |b| {
        b.iter(|| normalize(&sig, black_box(&a)).unwrap())
    });
}

fn bench_unify(c: &mut Criterion) {
    let sig = parse_program(NESTS).unwrap().sig;
    let lhs = parse_abstract("nest#(0, L)").unwrap();
    let rhs = parse_abstract("int# + nest#(0, 0)").unwrap();
    let ty = parse_type("nest(V)").unwrap();
    c.bench_function("unify/extraction", |b| {
        b.iter(|| {
            unify_tuples(
                &sig,
                black_box(std::slice::from_ref(&lhs)),
                black_box(std::slice::from_ref(&rhs)),
                Some(std::slice::from_ref(&ty)),
            )
            .unwrap()
        })
    });
}

fn bench_lfp(c: &mut Criterion) {
    let prog = parse_program(TABLES).unwrap();
    c.bench_function("lfp/tables", |b| {
        b.iter(|| lfp_abstract(black_box(&prog), 100).unwrap())
    });
}

criterion_group!(benches, bench_normalize, bench_unify, bench_lfp);
criterion_main!(benches);
