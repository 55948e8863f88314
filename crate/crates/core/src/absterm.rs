//! The abstract domain: abstract terms over one join operator `+`, the empty
//! term `0`, and one abstract constructor `c#` per declared constructor.
//!
//! `c#` has one argument slot per entry of the role profile of `c`:
//! non-recursive subterm types first, then the other members of the recursive
//! clique. Joins are kept as sorted, duplicate-free summand lists, so
//! associativity, commutativity, idempotence and the unit law hold by
//! representation. `normalize` additionally applies distributivity (merging
//! same-constructor summands pointwise) and extraction (hoisting nodes out of
//! recursive slots) until no rule applies.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use thiserror::Error;

use crate::graph::{canonical_profile, GraphError, RoleProfile};
use crate::types::{Signature, TypeSubst, TypeTerm};

#[derive(Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Debug)]
pub enum Summand {
    Var(String),
    Node(String, Vec<AbstractTerm>),
}

/// A join of summands; the empty join is the unit `0`.
#[derive(Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Debug, Default)]
pub struct AbstractTerm {
    summands: Vec<Summand>,
}

#[derive(Error, Debug, Clone, PartialEq, Eq)]
pub enum AbsError {
    #[error(transparent)]
    Graph(#[from] GraphError),
    #[error("unknown function {0}")]
    UnknownFunc(String),
    #[error("abstract constructor {ctor}# expects {expected} slots, got {got}")]
    Arity {
        ctor: String,
        expected: usize,
        got: usize,
    },
    #[error("cannot route type {ty} in the profile of {of}")]
    Route { ty: String, of: String },
    #[error("abstract syntax error at byte {pos}: {msg}")]
    Syntax { pos: usize, msg: String },
}

impl AbstractTerm {
    pub fn empty() -> AbstractTerm {
        AbstractTerm::default()
    }

    pub fn var(name: &str) -> AbstractTerm {
        AbstractTerm {
            summands: vec![Summand::Var(name.to_string())],
        }
    }

    pub fn node(ctor: &str, slots: Vec<AbstractTerm>) -> AbstractTerm {
        AbstractTerm {
            summands: vec![Summand::Node(ctor.to_string(), slots)],
        }
    }

    pub fn from_summands(mut summands: Vec<Summand>) -> AbstractTerm {
        summands.sort();
        summands.dedup();
        AbstractTerm { summands }
    }

    pub fn join(&self, other: &AbstractTerm) -> AbstractTerm {
        let mut s = self.summands.clone();
        s.extend(other.summands.iter().cloned());
        AbstractTerm::from_summands(s)
    }

    pub fn join_all<I: IntoIterator<Item = AbstractTerm>>(parts: I) -> AbstractTerm {
        let mut s = Vec::new();
        for p in parts {
            s.extend(p.summands);
        }
        AbstractTerm::from_summands(s)
    }

    pub fn is_empty(&self) -> bool {
        self.summands.is_empty()
    }

    pub fn summands(&self) -> &[Summand] {
        &self.summands
    }

    pub fn is_single_var(&self) -> Option<&str> {
        match self.summands.as_slice() {
            [Summand::Var(x)] => Some(x),
            _ => None,
        }
    }

    /// Splits a join into its variables and its node summands.
    pub fn split(&self) -> (Vec<String>, Vec<(String, Vec<AbstractTerm>)>) {
        let mut vars = Vec::new();
        let mut nodes = Vec::new();
        for s in &self.summands {
            match s {
                Summand::Var(x) => vars.push(x.clone()),
                Summand::Node(c, slots) => nodes.push((c.clone(), slots.clone())),
            }
        }
        (vars, nodes)
    }

    pub fn vars(&self) -> BTreeSet<String> {
        let mut out = BTreeSet::new();
        self.collect_vars(&mut out);
        out
    }

    fn collect_vars(&self, out: &mut BTreeSet<String>) {
        for s in &self.summands {
            match s {
                Summand::Var(x) => {
                    out.insert(x.clone());
                }
                Summand::Node(_, slots) => {
                    for slot in slots {
                        slot.collect_vars(out);
                    }
                }
            }
        }
    }

    pub fn symbol_count(&self) -> usize {
        self.summands
            .iter()
            .map(|s| match s {
                Summand::Var(_) => 1,
                Summand::Node(_, slots) => {
                    1 + slots.iter().map(|a| a.symbol_count()).sum::<usize>()
                }
            })
            .sum()
    }

    /// Substitutes variables; the result is not normalized.
    pub fn apply(&self, theta: &AbstractSubst) -> AbstractTerm {
        let mut parts = Vec::new();
        for s in &self.summands {
            match s {
                Summand::Var(x) => match theta.0.get(x) {
                    Some(t) => parts.push(t.clone()),
                    None => parts.push(AbstractTerm::var(x)),
                },
                Summand::Node(c, slots) => parts.push(AbstractTerm::node(
                    c,
                    slots.iter().map(|a| a.apply(theta)).collect(),
                )),
            }
        }
        AbstractTerm::join_all(parts)
    }
}

/// Substitution mapping variables to abstract terms.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct AbstractSubst(pub BTreeMap<String, AbstractTerm>);

impl AbstractSubst {
    pub fn new() -> Self {
        Self::default()
    }
}

impl fmt::Display for AbstractSubst {
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

impl fmt::Display for AbstractTerm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.summands.is_empty() {
            return write!(f, "0");
        }
        for (i, s) in self.summands.iter().enumerate() {
            if i > 0 {
                write!(f, "+")?;
            }
            match s {
                Summand::Var(x) => write!(f, "{x}")?,
                Summand::Node(c, slots) => {
                    write!(f, "{c}#")?;
                    if !slots.is_empty() {
                        write!(f, "(")?;
                        for (j, a) in slots.iter().enumerate() {
                            if j > 0 {
                                write!(f, ",")?;
                            }
                            write!(f, "{a}")?;
                        }
                        write!(f, ")")?;
                    }
                }
            }
        }
        Ok(())
    }
}

/// Parses the textual syntax: `0`, `X`, `c#`, `c#(a,b)`, joins with `+`.
pub fn parse_abstract(src: &str) -> Result<AbstractTerm, AbsError> {
    let mut p = AParser {
        src: src.as_bytes(),
        pos: 0,
    };
    let t = p.term()?;
    p.skip_ws();
    if p.pos != p.src.len() {
        return Err(p.err("trailing input"));
    }
    Ok(t)
}

struct AParser<'a> {
    src: &'a [u8],
    pos: usize,
}

impl<'a> AParser<'a> {
    fn err(&self, msg: impl Into<String>) -> AbsError {
        AbsError::Syntax {
            pos: self.pos,
            msg: msg.into(),
        }
    }

    fn skip_ws(&mut self) {
        while self.src.get(self.pos).is_some_and(|c| c.is_ascii_whitespace()) {
            self.pos += 1;
        }
    }

    fn peek(&mut self) -> Option<u8> {
        self.skip_ws();
        self.src.get(self.pos).copied()
    }

    fn ident(&mut self) -> String {
        let start = self.pos;
        while self
            .src
            .get(self.pos)
            .is_some_and(|c| c.is_ascii_alphanumeric() || *c == b'_')
        {
            self.pos += 1;
        }
        String::from_utf8_lossy(&self.src[start..self.pos]).into_owned()
    }

    fn term(&mut self) -> Result<AbstractTerm, AbsError> {
        let mut parts = vec![self.summand()?];
        while self.peek() == Some(b'+') {
            self.pos += 1;
            parts.push(self.summand()?);
        }
        Ok(AbstractTerm::join_all(parts))
    }

    fn summand(&mut self) -> Result<AbstractTerm, AbsError> {
        match self.peek() {
            Some(b'0') => {
                self.pos += 1;
                Ok(AbstractTerm::empty())
            }
            Some(c) if c.is_ascii_uppercase() || c == b'_' => Ok(AbstractTerm::var(&self.ident())),
            Some(c) if c.is_ascii_lowercase() => {
                let name = self.ident();
                if self.src.get(self.pos) != Some(&b'#') {
                    return Err(self.err(format!("expected '#' after constructor {name}")));
                }
                self.pos += 1;
                let mut slots = Vec::new();
                if self.peek() == Some(b'(') {
                    self.pos += 1;
                    loop {
                        slots.push(self.term()?);
                        match self.peek() {
                            Some(b',') => {
                                self.pos += 1;
                            }
                            Some(b')') => {
                                self.pos += 1;
                                break;
                            }
                            _ => return Err(self.err("expected ',' or ')'")),
                        }
                    }
                }
                Ok(AbstractTerm::node(&name, slots))
            }
            _ => Err(self.err("expected a summand")),
        }
    }
}

/// Abstraction of a concrete term. The routing follows the declared argument
/// types of each function symbol: arguments of the range type itself join at
/// the top level, all others fill the slot of their role.
pub fn abstract_term(sig: &Signature, t: &crate::syntax::Term) -> Result<AbstractTerm, AbsError> {
    use crate::syntax::Term;
    match t {
        Term::Var(x) => Ok(AbstractTerm::var(x)),
        Term::App(f, args) => {
            let decl = sig
                .funcs
                .get(f)
                .ok_or_else(|| AbsError::UnknownFunc(f.clone()))?;
            let profile = crate::graph::role_profile(sig, &decl.range)?;
            let ctor = decl.range.head_ctor().expect("flat range").to_string();
            let mut slots: Vec<Vec<AbstractTerm>> = vec![Vec::new(); profile.arity()];
            let mut top = Vec::new();
            for (arg, ty) in args.iter().zip(&decl.args) {
                let a = abstract_term(sig, arg)?;
                if *ty == decl.range {
                    top.push(a);
                } else {
                    let j = profile.route(ty).ok_or_else(|| AbsError::Route {
                        ty: ty.to_string(),
                        of: decl.range.to_string(),
                    })?;
                    slots[j].push(a);
                }
            }
            top.push(AbstractTerm::node(
                &ctor,
                slots.into_iter().map(AbstractTerm::join_all).collect(),
            ));
            Ok(AbstractTerm::join_all(top))
        }
    }
}

struct Normalizer<'s> {
    sig: &'s Signature,
    profiles: BTreeMap<String, RoleProfile>,
}

impl<'s> Normalizer<'s> {
    fn profile(&mut self, ctor: &str) -> Result<RoleProfile, AbsError> {
        if let Some(p) = self.profiles.get(ctor) {
            return Ok(p.clone());
        }
        let p = canonical_profile(self.sig, ctor)?;
        self.profiles.insert(ctor.to_string(), p.clone());
        Ok(p)
    }

    /// Routing of the slots of `child` when extracted from recursive slot
    /// `j` of `parent`: Some(slot index) or None for the top level.
    fn routing(
        &mut self,
        parent: &RoleProfile,
        j: usize,
        child_ctor: &str,
    ) -> Result<Vec<Option<usize>>, AbsError> {
        let child = self.profile(child_ctor)?;
        let sigma_j = parent.slot(j).clone();
        let child_flat = self
            .sig
            .canonical_flat(child_ctor)
            .expect("declared constructor");
        let theta: TypeSubst = child_flat
            .match_onto(&sigma_j)
            .ok_or_else(|| AbsError::Route {
                ty: sigma_j.to_string(),
                of: parent.typ.to_string(),
            })?;
        let mut out = Vec::new();
        for rho in child.slots() {
            let target = rho.apply(&theta);
            if target == parent.typ {
                out.push(None);
            } else {
                let idx = parent.slots().position(|s| *s == target).ok_or_else(|| {
                    AbsError::Route {
                        ty: target.to_string(),
                        of: parent.typ.to_string(),
                    }
                })?;
                out.push(Some(idx));
            }
        }
        Ok(out)
    }

    fn normalize(&mut self, a: &AbstractTerm) -> Result<AbstractTerm, AbsError> {
        let mut vars: BTreeSet<String> = BTreeSet::new();
        let mut nodes: Vec<(String, Vec<AbstractTerm>)> = Vec::new();
        for s in a.summands() {
            match s {
                Summand::Var(x) => {
                    vars.insert(x.clone());
                }
                Summand::Node(c, slots) => {
                    let slots = slots
                        .iter()
                        .map(|t| self.normalize(t))
                        .collect::<Result<Vec<_>, _>>()?;
                    nodes.push((c.clone(), slots));
                }
            }
        }
        loop {
            // Distributivity: merge same-constructor node summands pointwise
            // (nodes of distinct constructors coexist in a join).
            nodes.sort_by(|x, y| x.0.cmp(&y.0));
            let mut merged: Vec<(String, Vec<AbstractTerm>)> = Vec::new();
            let mut changed = false;
            for (c, slots) in nodes.drain(..) {
                let expected = self.profile(&c)?.arity();
                if slots.len() != expected {
                    return Err(AbsError::Arity {
                        ctor: c,
                        expected,
                        got: slots.len(),
                    });
                }
                match merged.last_mut() {
                    Some((c0, acc)) if *c0 == c => {
                        for (dst, src) in acc.iter_mut().zip(slots) {
                            *dst = dst.join(&src);
                        }
                        changed = true;
                    }
                    _ => merged.push((c, slots)),
                }
            }
            nodes = merged;
            // Extraction: no recursive slot may contain a node summand; its
            // children are rerouted to sibling slots or to the top level.
            let mut new_tops: Vec<(String, Vec<AbstractTerm>)> = Vec::new();
            for (c, slots) in nodes.iter_mut() {
                let profile = self.profile(c)?;
                for j in 0..slots.len() {
                    if !profile.is_rec_slot(j) {
                        continue;
                    }
                    let (slot_vars, slot_nodes) = slots[j].split();
                    if slot_nodes.is_empty() {
                        continue;
                    }
                    changed = true;
                    slots[j] = AbstractTerm::from_summands(
                        slot_vars.into_iter().map(Summand::Var).collect(),
                    );
                    for (child_ctor, child_slots) in slot_nodes {
                        let routing = self.routing(&profile, j, &child_ctor)?;
                        for (content, dest) in child_slots.into_iter().zip(routing) {
                            match dest {
                                Some(idx) => {
                                    let joined = slots[idx].join(&content);
                                    slots[idx] = joined;
                                }
                                None => {
                                    let (v, ns) = content.split();
                                    vars.extend(v);
                                    new_tops.extend(ns);
                                }
                            }
                        }
                    }
                }
                if changed {
                    for s in slots.iter_mut() {
                        *s = self.normalize(s)?;
                    }
                }
            }
            nodes.extend(new_tops);
            if !changed {
                break;
            }
        }
        let mut summands: Vec<Summand> = vars.into_iter().map(Summand::Var).collect();
        summands.extend(nodes.into_iter().map(|(c, s)| Summand::Node(c, s)));
        Ok(AbstractTerm::from_summands(summands))
    }
}

/// Rewrites to the normal form: every join has at most one node summand per
/// constructor and recursive slots contain only variables.
pub fn normalize(sig: &Signature, a: &AbstractTerm) -> Result<AbstractTerm, AbsError> {
    Normalizer {
        sig,
        profiles: BTreeMap::new(),
    }
    .normalize(a)
}

/// Structural normal-form predicate.
pub fn is_normal_form(sig: &Signature, a: &AbstractTerm) -> Result<bool, AbsError> {
    let (_, nodes) = a.split();
    let ctors: BTreeSet<&String> = nodes.iter().map(|(c, _)| c).collect();
    if ctors.len() != nodes.len() {
        return Ok(false);
    }
    for (c, slots) in nodes {
        let profile = canonical_profile(&sig.clone(), &c)?;
        if slots.len() != profile.arity() {
            return Ok(false);
        }
        for (j, slot) in slots.iter().enumerate() {
            if profile.is_rec_slot(j) {
                if !slot.split().1.is_empty() {
                    return Ok(false);
                }
            } else if !is_normal_form(sig, slot)? {
                return Ok(false);
            }
        }
    }
    Ok(true)
}

/// Equality modulo the equational theory, decided on normal forms.
pub fn eq_acplus(sig: &Signature, a: &AbstractTerm, b: &AbstractTerm) -> Result<bool, AbsError> {
    Ok(normalize(sig, a)? == normalize(sig, b)?)
}

/// Typability of an abstract term at a type. `0` and variables fit any type;
/// a node needs the matching constructor and well-typed slots.
pub fn abstract_type_check(sig: &Signature, a: &AbstractTerm, ty: &TypeTerm) -> bool {
    for s in a.summands() {
        if let Summand::Node(c, slots) = s {
            let Some(flat) = sig.canonical_flat(c) else {
                return false;
            };
            let Some(theta) = flat.match_onto(ty) else {
                return false;
            };
            let Ok(profile) = canonical_profile(sig, c) else {
                return false;
            };
            if slots.len() != profile.arity() {
                return false;
            }
            for (i, slot) in slots.iter().enumerate() {
                if !abstract_type_check(sig, slot, &profile.slot(i).apply(&theta)) {
                    return false;
                }
            }
        }
    }
    true
}

/// The set of positions at which each variable occurs in a tuple of abstract
/// terms. A position is the argument index followed by the slot indices on
/// the way down.
pub fn var_paths(args: &[AbstractTerm]) -> BTreeMap<String, BTreeSet<Vec<usize>>> {
    fn go(
        a: &AbstractTerm,
        prefix: &[usize],
        out: &mut BTreeMap<String, BTreeSet<Vec<usize>>>,
    ) {
        for s in a.summands() {
            match s {
                Summand::Var(x) => {
                    out.entry(x.clone()).or_default().insert(prefix.to_vec());
                }
                Summand::Node(_, slots) => {
                    for (i, slot) in slots.iter().enumerate() {
                        let mut p = prefix.to_vec();
                        p.push(i);
                        go(slot, &p, out);
                    }
                }
            }
        }
    }
    let mut out = BTreeMap::new();
    for (i, a) in args.iter().enumerate() {
        go(a, &[i], &mut out);
    }
    out
}

/// Merges variables with identical position sets into one; the result is
/// equivalent to the input. Applied to whole argument tuples so that
/// variables shared across arguments keep their identity.
pub fn canonicalize_vars(args: &[AbstractTerm]) -> Vec<AbstractTerm> {
    let paths = var_paths(args);
    let mut groups: BTreeMap<BTreeSet<Vec<usize>>, Vec<String>> = BTreeMap::new();
    for (x, ps) in paths {
        groups.entry(ps).or_default().push(x);
    }
    let mut theta = AbstractSubst::new();
    for vars in groups.values() {
        let rep = vars[0].clone();
        for x in &vars[1..] {
            theta.0.insert(x.clone(), AbstractTerm::var(&rep));
        }
    }
    args.iter().map(|a| a.apply(&theta)).collect()
}

/// Renames the variables of a tuple to `V1, V2, ...` in order of first
/// occurrence (for stable display and duplicate detection).
pub fn canonical_names(args: &[AbstractTerm]) -> Vec<AbstractTerm> {
    fn order(a: &AbstractTerm, seen: &mut BTreeSet<String>, out: &mut Vec<String>) {
        for s in a.summands() {
            match s {
                Summand::Var(x) => {
                    if seen.insert(x.clone()) {
                        out.push(x.clone());
                    }
                }
                Summand::Node(_, slots) => {
                    for slot in slots {
                        order(slot, seen, out);
                    }
                }
            }
        }
    }
    let mut seen = BTreeSet::new();
    let mut occ = Vec::new();
    for a in args {
        order(a, &mut seen, &mut occ);
    }
    let theta = AbstractSubst(
        occ.iter()
            .enumerate()
            .map(|(i, x)| (x.clone(), AbstractTerm::var(&format!("V{}", i + 1))))
            .collect(),
    );
    args.iter().map(|a| a.apply(&theta)).collect()
}

/// Number of distinct positions a variable can occupy in a normal form of
/// the given type (used for the variable-count bound `2^n - 1`).
pub fn position_count(sig: &Signature, ty: &TypeTerm) -> Result<usize, AbsError> {
    match ty {
        TypeTerm::Param(_) => Ok(1),
        TypeTerm::Ctor(c, _) => {
            let profile = canonical_profile(sig, c)?;
            let flat = sig.canonical_flat(c).expect("declared constructor");
            let theta = flat.match_onto(ty).ok_or_else(|| AbsError::Route {
                ty: ty.to_string(),
                of: c.clone(),
            })?;
            let mut n = 1;
            for (i, slot) in profile.slots().enumerate() {
                if profile.is_rec_slot(i) {
                    n += 1;
                } else {
                    n += position_count(sig, &slot.apply(&theta))?;
                }
            }
            Ok(n)
        }
    }
}
