//! Regular tree grammars induced by a signature, the well-formedness
//! conditions that keep them finite, and the role profile of a type
//! (non-recursive subterm types and other members of its recursive clique).

use std::collections::{BTreeMap, BTreeSet};
use std::fmt::Write as _;

use serde::Serialize;
use thiserror::Error;

use crate::types::{Signature, TypeTerm};

/// Hard cap on the closure exploration; exceeding it means the signature
/// violates a well-formedness condition in a way the direct checks missed.
pub const CLOSURE_DEPTH_CAP: usize = 64;

#[derive(Error, Debug, Clone, PartialEq, Eq)]
pub enum GraphError {
    #[error("flat range condition violated: function {func} has range {range}, which is not a constructor applied to distinct parameters")]
    FlatRange { func: String, range: String },
    #[error("reflexive condition violated: {inner} is a subterm type of {outer} but not a syntactic subterm of it")]
    Reflexive { outer: String, inner: String },
    #[error("subterm-type closure of {start} exceeded depth {cap}; the signature is not well-formed")]
    DepthCap { start: String, cap: usize },
    #[error("{0} is not a flat type")]
    NotFlat(String),
}

/// A production `lhs -> func(args...)` of the grammar of some flat type.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct Production {
    pub lhs: TypeTerm,
    pub func: String,
    pub args: Vec<TypeTerm>,
}

/// The grammar G(phi): nonterminals are types, one production per function
/// declaration whose range matches a nonterminal.
#[derive(Clone, Debug, Serialize)]
pub struct Grammar {
    pub start: TypeTerm,
    pub nonterminals: BTreeSet<TypeTerm>,
    pub productions: Vec<Production>,
}

impl Grammar {
    pub fn productions_of<'a>(&'a self, nt: &'a TypeTerm) -> impl Iterator<Item = &'a Production> {
        self.productions.iter().filter(move |p| &p.lhs == nt)
    }

    /// The production expanding `nt` with function `func`, if any.
    pub fn production(&self, nt: &TypeTerm, func: &str) -> Option<&Production> {
        self.productions
            .iter()
            .find(|p| &p.lhs == nt && p.func == func)
    }

    /// Edges of the type graph: one per production argument.
    pub fn edges(&self) -> BTreeSet<(TypeTerm, TypeTerm)> {
        let mut out = BTreeSet::new();
        for p in &self.productions {
            for a in &p.args {
                out.insert((p.lhs.clone(), a.clone()));
            }
        }
        out
    }

    pub fn to_dot(&self) -> String {
        let mut ids = BTreeMap::new();
        for (i, nt) in self.nonterminals.iter().enumerate() {
            ids.insert(nt.clone(), i);
        }
        let mut s = String::from("digraph type_graph {\n");
        for (nt, i) in &ids {
            let _ = writeln!(s, "  n{i} [label=\"{nt}\"];");
        }
        for (from, to) in self.edges() {
            let _ = writeln!(s, "  n{} -> n{};", ids[&from], ids[&to]);
        }
        s.push_str("}\n");
        s
    }
}

/// Direct subterm types of `phi`: for every function whose range matches
/// `phi` under theta, the instantiated argument types.
pub fn direct_subterm_types(sig: &Signature, phi: &TypeTerm) -> Vec<TypeTerm> {
    let mut out = BTreeSet::new();
    if let TypeTerm::Ctor(_, _) = phi {
        for decl in sig.funcs.values() {
            if let Some(theta) = decl.range.match_onto(phi) {
                for a in &decl.args {
                    out.insert(a.apply(&theta));
                }
            }
        }
    }
    out.into_iter().collect()
}

/// Builds G(phi) by closing `phi` under direct subterm types.
pub fn build_grammar(sig: &Signature, phi: &TypeTerm) -> Result<Grammar, GraphError> {
    let (g, truncated) = closure(sig, phi);
    if truncated {
        return Err(GraphError::DepthCap {
            start: phi.to_string(),
            cap: CLOSURE_DEPTH_CAP,
        });
    }
    Ok(g)
}

/// The grammar closure, stopped (not failed) at the depth cap; the flag
/// reports truncation. A truncated grammar is still useful for reporting a
/// reflexive-condition violation, which is usually what made it diverge.
fn closure(sig: &Signature, phi: &TypeTerm) -> (Grammar, bool) {
    let mut g = Grammar {
        start: phi.clone(),
        nonterminals: BTreeSet::from([phi.clone()]),
        productions: Vec::new(),
    };
    let mut truncated = false;
    let mut frontier = vec![(phi.clone(), 0usize)];
    while let Some((nt, depth)) = frontier.pop() {
        if depth > CLOSURE_DEPTH_CAP {
            truncated = true;
            continue;
        }
        if let TypeTerm::Ctor(_, _) = &nt {
            for (name, decl) in &sig.funcs {
                if let Some(theta) = decl.range.match_onto(&nt) {
                    let args: Vec<TypeTerm> = decl.args.iter().map(|a| a.apply(&theta)).collect();
                    for a in &args {
                        if g.nonterminals.insert(a.clone()) {
                            frontier.push((a.clone(), depth + 1));
                        }
                    }
                    g.productions.push(Production {
                        lhs: nt.clone(),
                        func: name.clone(),
                        args,
                    });
                }
            }
        }
    }
    (g, truncated)
}

fn reachability(g: &Grammar) -> BTreeMap<TypeTerm, BTreeSet<TypeTerm>> {
    let edges = g.edges();
    let mut succ: BTreeMap<&TypeTerm, Vec<&TypeTerm>> = BTreeMap::new();
    for (a, b) in &edges {
        succ.entry(a).or_default().push(b);
    }
    let mut out = BTreeMap::new();
    for nt in &g.nonterminals {
        let mut seen = BTreeSet::from([nt.clone()]);
        let mut stack = vec![nt];
        while let Some(n) = stack.pop() {
            if let Some(next) = succ.get(n) {
                for &m in next {
                    if seen.insert(m.clone()) {
                        stack.push(m);
                    }
                }
            }
        }
        out.insert(nt.clone(), seen);
    }
    out
}

/// Checks the flat range condition and the reflexive condition for the whole
/// signature. The reflexive condition is checked over the subterm-type
/// closures of every type occurring in a declaration.
pub fn check_conditions(sig: &Signature) -> Result<(), GraphError> {
    for (name, decl) in &sig.funcs {
        if !decl.range.is_flat() {
            return Err(GraphError::FlatRange {
                func: name.clone(),
                range: decl.range.to_string(),
            });
        }
    }
    let mut seeds: BTreeSet<TypeTerm> = BTreeSet::new();
    for decl in sig.funcs.values() {
        seeds.insert(decl.range.clone());
        seeds.extend(decl.args.iter().cloned());
    }
    for args in sig.preds.values() {
        seeds.extend(args.iter().cloned());
    }
    for seed in seeds {
        let (g, truncated) = closure(sig, &seed);
        let reach = reachability(&g);
        for (outer, reached) in &reach {
            let Some(c) = outer.head_ctor() else { continue };
            for inner in reached {
                if inner.head_ctor() == Some(c) && !inner.is_subterm_of(outer) {
                    return Err(GraphError::Reflexive {
                        outer: outer.to_string(),
                        inner: inner.to_string(),
                    });
                }
            }
        }
        if truncated {
            return Err(GraphError::DepthCap {
                start: seed.to_string(),
                cap: CLOSURE_DEPTH_CAP,
            });
        }
    }
    Ok(())
}

/// The role profile of a flat type: the tuple of non-recursive subterm types
/// and the other members of its recursive clique, both sorted by the type
/// order. Their combined length is the arity of the abstract constructor.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct RoleProfile {
    pub typ: TypeTerm,
    pub nrs: Vec<TypeTerm>,
    pub rec_other: Vec<TypeTerm>,
}

impl RoleProfile {
    pub fn arity(&self) -> usize {
        self.nrs.len() + self.rec_other.len()
    }

    /// Slot types in order: non-recursive ones first, then recursive ones.
    pub fn slots(&self) -> impl Iterator<Item = &TypeTerm> {
        self.nrs.iter().chain(self.rec_other.iter())
    }

    pub fn slot(&self, i: usize) -> &TypeTerm {
        if i < self.nrs.len() {
            &self.nrs[i]
        } else {
            &self.rec_other[i - self.nrs.len()]
        }
    }

    pub fn is_rec_slot(&self, i: usize) -> bool {
        i >= self.nrs.len()
    }

    /// Slot index for a type, or None if it equals the profile's own type.
    pub fn route(&self, ty: &TypeTerm) -> Option<usize> {
        if *ty == self.typ {
            return None;
        }
        self.slots().position(|s| s == ty)
    }
}

fn sccs(g: &Grammar) -> Vec<BTreeSet<TypeTerm>> {
    // Tarjan's algorithm, iterative on small graphs via recursion depth that
    // is bounded by the number of nonterminals.
    struct State<'a> {
        succ: BTreeMap<&'a TypeTerm, BTreeSet<&'a TypeTerm>>,
        index: BTreeMap<&'a TypeTerm, usize>,
        low: BTreeMap<&'a TypeTerm, usize>,
        on_stack: BTreeSet<&'a TypeTerm>,
        stack: Vec<&'a TypeTerm>,
        next: usize,
        out: Vec<BTreeSet<TypeTerm>>,
    }
    fn visit<'a>(st: &mut State<'a>, v: &'a TypeTerm) {
        st.index.insert(v, st.next);
        st.low.insert(v, st.next);
        st.next += 1;
        st.stack.push(v);
        st.on_stack.insert(v);
        let succs: Vec<&TypeTerm> = st
            .succ
            .get(v)
            .map(|s| s.iter().copied().collect())
            .unwrap_or_default();
        for w in succs {
            if !st.index.contains_key(w) {
                visit(st, w);
                let lw = st.low[w];
                let lv = st.low.get_mut(v).unwrap();
                *lv = (*lv).min(lw);
            } else if st.on_stack.contains(w) {
                let iw = st.index[w];
                let lv = st.low.get_mut(v).unwrap();
                *lv = (*lv).min(iw);
            }
        }
        if st.low[v] == st.index[v] {
            let mut comp = BTreeSet::new();
            while let Some(w) = st.stack.pop() {
                st.on_stack.remove(w);
                comp.insert(w.clone());
                if w == v {
                    break;
                }
            }
            st.out.push(comp);
        }
    }
    let edges = g.edges();
    let mut succ: BTreeMap<&TypeTerm, BTreeSet<&TypeTerm>> = BTreeMap::new();
    for (a, b) in &edges {
        succ.entry(a).or_default().insert(b);
    }
    let mut st = State {
        succ,
        index: BTreeMap::new(),
        low: BTreeMap::new(),
        on_stack: BTreeSet::new(),
        stack: Vec::new(),
        next: 0,
        out: Vec::new(),
    };
    for nt in &g.nonterminals {
        if !st.index.contains_key(nt) {
            visit(&mut st, nt);
        }
    }
    st.out
}

/// The recursive clique of `phi` in G(phi): all nonterminals mutually
/// reachable with `phi`, including `phi` itself.
pub fn recursive_clique(g: &Grammar) -> BTreeSet<TypeTerm> {
    sccs(g)
        .into_iter()
        .find(|c| c.contains(&g.start))
        .unwrap_or_else(|| BTreeSet::from([g.start.clone()]))
}

/// Computes the role profile of a flat type.
pub fn role_profile(sig: &Signature, phi: &TypeTerm) -> Result<RoleProfile, GraphError> {
    if !phi.is_flat() {
        return Err(GraphError::NotFlat(phi.to_string()));
    }
    let g = build_grammar(sig, phi)?;
    let clique = recursive_clique(&g);
    let mut nrs = BTreeSet::new();
    for (from, to) in g.edges() {
        if clique.contains(&from) && !clique.contains(&to) {
            nrs.insert(to);
        }
    }
    let rec_other: Vec<TypeTerm> = clique.iter().filter(|t| *t != phi).cloned().collect();
    Ok(RoleProfile {
        typ: phi.clone(),
        nrs: nrs.into_iter().collect(),
        rec_other,
    })
}

/// The role profile of the declared range type of a function, expressed in
/// the parameters of that declaration.
pub fn range_profile(sig: &Signature, func: &str) -> Result<RoleProfile, GraphError> {
    let decl = sig
        .funcs
        .get(func)
        .unwrap_or_else(|| panic!("unknown function {func}"));
    role_profile(sig, &decl.range)
}

/// The canonical profile of a constructor, on `c(P1,...,Pk)`. Memoized per
/// signature: profile computation builds the type grammar, and callers (the
/// normalizer, the unification solver) ask for profiles in hot loops.
pub fn canonical_profile(sig: &Signature, ctor: &str) -> Result<RoleProfile, GraphError> {
    use std::cell::RefCell;
    use std::collections::hash_map::DefaultHasher;
    use std::collections::HashMap;
    use std::hash::{Hash, Hasher};

    thread_local! {
        static CACHE: RefCell<HashMap<(u64, String), RoleProfile>> =
            RefCell::new(HashMap::new());
    }
    let mut h = DefaultHasher::new();
    sig.ctors.hash(&mut h);
    for (name, decl) in &sig.funcs {
        name.hash(&mut h);
        decl.args.hash(&mut h);
        decl.range.hash(&mut h);
    }
    let key = (h.finish(), ctor.to_string());
    if let Some(p) = CACHE.with(|c| c.borrow().get(&key).cloned()) {
        return Ok(p);
    }
    let flat = sig
        .canonical_flat(ctor)
        .ok_or_else(|| GraphError::NotFlat(ctor.to_string()))?;
    let profile = role_profile(sig, &flat)?;
    CACHE.with(|c| c.borrow_mut().insert(key, profile.clone()));
    Ok(profile)
}
