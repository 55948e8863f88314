//! Ready-made signatures used in tests, benches and documentation examples.

use crate::types::{Signature, TypeTerm};

fn ty(s: &str) -> TypeTerm {
    crate::syntax::parse_type(s).expect("valid type")
}

/// Lists plus the integer constants 1 and 7.
pub fn lists_with_int() -> Signature {
    let mut sig = Signature::new();
    sig.add_ctor("list", 1).unwrap();
    sig.add_ctor("int", 0).unwrap();
    sig.add_func("nil", vec![], ty("list(U)")).unwrap();
    sig.add_func("cons", vec![ty("U"), ty("list(U)")], ty("list(U)"))
        .unwrap();
    sig.add_func("1", vec![], ty("int")).unwrap();
    sig.add_func("7", vec![], ty("int")).unwrap();
    sig
}

/// Lists plus the character constants a and b.
pub fn lists_with_char() -> Signature {
    let mut sig = Signature::new();
    sig.add_ctor("list", 1).unwrap();
    sig.add_ctor("char", 0).unwrap();
    sig.add_func("nil", vec![], ty("list(U)")).unwrap();
    sig.add_func("cons", vec![ty("U"), ty("list(U)")], ty("list(U)"))
        .unwrap();
    sig.add_func("a", vec![], ty("char")).unwrap();
    sig.add_func("b", vec![], ty("char")).unwrap();
    sig
}

/// Nests of elements: `e` embeds an element, `n` a list of nests.
pub fn nests_with_int() -> Signature {
    let mut sig = lists_with_int();
    sig.add_ctor("nest", 1).unwrap();
    sig.add_func("e", vec![ty("V")], ty("nest(V)")).unwrap();
    sig.add_func("n", vec![ty("list(nest(V))")], ty("nest(V)"))
        .unwrap();
    sig
}

/// Binary search trees keyed by strings, with balance markers.
pub fn tables() -> Signature {
    let mut sig = Signature::new();
    sig.add_ctor("table", 1).unwrap();
    sig.add_ctor("bal", 0).unwrap();
    sig.add_ctor("str", 0).unwrap();
    sig.add_ctor("int", 0).unwrap();
    sig.add_func("lh", vec![], ty("bal")).unwrap();
    sig.add_func("rh", vec![], ty("bal")).unwrap();
    sig.add_func("eq", vec![], ty("bal")).unwrap();
    sig.add_func("null", vec![], ty("table(U)")).unwrap();
    sig.add_func(
        "node",
        vec![ty("table(U)"), ty("str"), ty("U"), ty("bal"), ty("table(U)")],
        ty("table(U)"),
    )
    .unwrap();
    sig.add_func("7", vec![], ty("int")).unwrap();
    sig.add_func("\"k\"", vec![], ty("str")).unwrap();
    sig.add_func("\"j\"", vec![], ty("str")).unwrap();
    sig
}

/// Parses a term in the context of a signature, for concise tests.
pub fn tm(sig: &Signature, s: &str) -> crate::syntax::Term {
    crate::syntax::parse_term(s, sig).expect("valid term")
}
