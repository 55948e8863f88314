//! The type language: parametric types, type substitutions, signatures.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use serde::Serialize;
use thiserror::Error;

/// A polymorphic type: either a type parameter or a constructor application.
///
/// The derived order puts parameters before constructor applications and is
/// otherwise lexicographic; role tuples rely on this order being total.
#[derive(Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Debug, Serialize)]
pub enum TypeTerm {
    Param(String),
    Ctor(String, Vec<TypeTerm>),
}

pub type TypeSubst = BTreeMap<String, TypeTerm>;

impl TypeTerm {
    pub fn ctor0(name: &str) -> TypeTerm {
        TypeTerm::Ctor(name.to_string(), vec![])
    }

    pub fn param(name: &str) -> TypeTerm {
        TypeTerm::Param(name.to_string())
    }

    /// All parameters occurring in the type, in occurrence order.
    pub fn params(&self) -> BTreeSet<String> {
        let mut out = BTreeSet::new();
        self.collect_params(&mut out);
        out
    }

    fn collect_params(&self, out: &mut BTreeSet<String>) {
        match self {
            TypeTerm::Param(u) => {
                out.insert(u.clone());
            }
            TypeTerm::Ctor(_, args) => {
                for a in args {
                    a.collect_params(out);
                }
            }
        }
    }

    /// A flat type is a constructor applied to distinct parameters.
    pub fn is_flat(&self) -> bool {
        match self {
            TypeTerm::Param(_) => false,
            TypeTerm::Ctor(_, args) => {
                let mut seen = BTreeSet::new();
                args.iter().all(|a| match a {
                    TypeTerm::Param(u) => seen.insert(u.clone()),
                    _ => false,
                })
            }
        }
    }

    pub fn apply(&self, theta: &TypeSubst) -> TypeTerm {
        match self {
            TypeTerm::Param(u) => theta.get(u).cloned().unwrap_or_else(|| self.clone()),
            TypeTerm::Ctor(c, args) => {
                TypeTerm::Ctor(c.clone(), args.iter().map(|a| a.apply(theta)).collect())
            }
        }
    }

    /// Matching: find theta with `self . theta == target`, treating the
    /// parameters of `self` as the instantiable ones.
    pub fn match_onto(&self, target: &TypeTerm) -> Option<TypeSubst> {
        let mut theta = TypeSubst::new();
        if self.match_into(target, &mut theta) {
            Some(theta)
        } else {
            None
        }
    }

    fn match_into(&self, target: &TypeTerm, theta: &mut TypeSubst) -> bool {
        match self {
            TypeTerm::Param(u) => match theta.get(u) {
                Some(bound) => bound == target,
                None => {
                    theta.insert(u.clone(), target.clone());
                    true
                }
            },
            TypeTerm::Ctor(c, args) => match target {
                TypeTerm::Ctor(d, targs) if c == d && args.len() == targs.len() => args
                    .iter()
                    .zip(targs)
                    .all(|(a, t)| a.match_into(t, theta)),
                _ => false,
            },
        }
    }

    /// Syntactic subterm test (reflexive).
    pub fn is_subterm_of(&self, other: &TypeTerm) -> bool {
        if self == other {
            return true;
        }
        match other {
            TypeTerm::Param(_) => false,
            TypeTerm::Ctor(_, args) => args.iter().any(|a| self.is_subterm_of(a)),
        }
    }

    pub fn head_ctor(&self) -> Option<&str> {
        match self {
            TypeTerm::Param(_) => None,
            TypeTerm::Ctor(c, _) => Some(c),
        }
    }

    pub fn rename_params(&self, map: &BTreeMap<String, String>) -> TypeTerm {
        match self {
            TypeTerm::Param(u) => TypeTerm::Param(map.get(u).cloned().unwrap_or_else(|| u.clone())),
            TypeTerm::Ctor(c, args) => TypeTerm::Ctor(
                c.clone(),
                args.iter().map(|a| a.rename_params(map)).collect(),
            ),
        }
    }
}

impl fmt::Display for TypeTerm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            TypeTerm::Param(u) => write!(f, "{u}"),
            TypeTerm::Ctor(c, args) => {
                write!(f, "{c}")?;
                if !args.is_empty() {
                    write!(f, "(")?;
                    for (i, a) in args.iter().enumerate() {
                        if i > 0 {
                            write!(f, ",")?;
                        }
                        write!(f, "{a}")?;
                    }
                    write!(f, ")")?;
                }
                Ok(())
            }
        }
    }
}

/// Unification of type terms where only the listed flexible parameters may be
/// bound; all other parameters act as constants.
pub struct TypeUnifier {
    bindings: TypeSubst,
    flexible: BTreeSet<String>,
    counter: u64,
}

impl TypeUnifier {
    pub fn new() -> Self {
        TypeUnifier {
            bindings: TypeSubst::new(),
            flexible: BTreeSet::new(),
            counter: 0,
        }
    }

    pub fn fresh_param(&mut self) -> TypeTerm {
        let name = format!("_F{}", self.counter);
        self.counter += 1;
        self.flexible.insert(name.clone());
        TypeTerm::Param(name)
    }

    pub fn freshen(&mut self, ty: &TypeTerm) -> TypeTerm {
        let mut map = BTreeMap::new();
        for p in ty.params() {
            let TypeTerm::Param(n) = self.fresh_param() else {
                unreachable!()
            };
            map.insert(p, n);
        }
        ty.rename_params(&map)
    }

    pub fn freshen_all(&mut self, tys: &[TypeTerm]) -> Vec<TypeTerm> {
        let mut params = BTreeSet::new();
        for ty in tys {
            params.extend(ty.params());
        }
        let mut map = BTreeMap::new();
        for p in params {
            let TypeTerm::Param(n) = self.fresh_param() else {
                unreachable!()
            };
            map.insert(p, n);
        }
        tys.iter().map(|t| t.rename_params(&map)).collect()
    }

    pub fn resolve(&self, ty: &TypeTerm) -> TypeTerm {
        match ty {
            TypeTerm::Param(u) => match self.bindings.get(u) {
                Some(t) => self.resolve(t),
                None => ty.clone(),
            },
            TypeTerm::Ctor(c, args) => {
                TypeTerm::Ctor(c.clone(), args.iter().map(|a| self.resolve(a)).collect())
            }
        }
    }

    fn occurs(&self, u: &str, ty: &TypeTerm) -> bool {
        match ty {
            TypeTerm::Param(v) => {
                if v == u {
                    return true;
                }
                match self.bindings.get(v) {
                    Some(t) => self.occurs(u, t),
                    None => false,
                }
            }
            TypeTerm::Ctor(_, args) => args.iter().any(|a| self.occurs(u, a)),
        }
    }

    pub fn unify(&mut self, a: &TypeTerm, b: &TypeTerm) -> bool {
        let a = self.resolve(a);
        let b = self.resolve(b);
        match (&a, &b) {
            (TypeTerm::Param(u), TypeTerm::Param(v)) if u == v => true,
            (TypeTerm::Param(u), _) if self.flexible.contains(u) => {
                if self.occurs(u, &b) {
                    return false;
                }
                self.bindings.insert(u.clone(), b);
                true
            }
            (_, TypeTerm::Param(v)) if self.flexible.contains(v) => {
                if self.occurs(v, &a) {
                    return false;
                }
                self.bindings.insert(v.clone(), a);
                true
            }
            (TypeTerm::Ctor(c, xs), TypeTerm::Ctor(d, ys)) if c == d && xs.len() == ys.len() => {
                xs.iter().zip(ys).all(|(x, y)| {
                    let x = x.clone();
                    let y = y.clone();
                    self.unify(&x, &y)
                })
            }
            _ => false,
        }
    }

    /// Resolve a type and rename remaining flexible parameters to `P1..Pn`.
    pub fn generalize(&self, tys: &[TypeTerm]) -> Vec<TypeTerm> {
        let resolved: Vec<TypeTerm> = tys.iter().map(|t| self.resolve(t)).collect();
        let mut map = BTreeMap::new();
        let mut n = 0;
        for t in &resolved {
            for p in t.params() {
                if self.flexible.contains(&p) && !map.contains_key(&p) {
                    n += 1;
                    map.insert(p, format!("P{n}"));
                }
            }
        }
        resolved.iter().map(|t| t.rename_params(&map)).collect()
    }
}

impl Default for TypeUnifier {
    fn default() -> Self {
        Self::new()
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct FuncDecl {
    pub args: Vec<TypeTerm>,
    pub range: TypeTerm,
}

#[derive(Error, Debug, Clone, PartialEq, Eq)]
pub enum SignatureError {
    #[error("duplicate declaration of {0}")]
    Duplicate(String),
    #[error("function {name} is not transparent: parameter {param} of an argument type does not occur in the range type {range}")]
    NotTransparent {
        name: String,
        param: String,
        range: String,
    },
    #[error("unknown type constructor {0} (arity {1})")]
    UnknownCtor(String, usize),
}

/// Declared type constructors, function symbols and predicate symbols.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct Signature {
    pub ctors: BTreeMap<String, usize>,
    pub funcs: BTreeMap<String, FuncDecl>,
    pub preds: BTreeMap<String, Vec<TypeTerm>>,
}

impl Signature {
    pub fn new() -> Self {
        Signature::default()
    }

    pub fn add_ctor(&mut self, name: &str, arity: usize) -> Result<(), SignatureError> {
        if let Some(&a) = self.ctors.get(name) {
            if a != arity {
                return Err(SignatureError::Duplicate(name.to_string()));
            }
            return Ok(());
        }
        self.ctors.insert(name.to_string(), arity);
        Ok(())
    }

    fn check_ctors(&self, ty: &TypeTerm) -> Result<(), SignatureError> {
        if let TypeTerm::Ctor(c, args) = ty {
            match self.ctors.get(c) {
                Some(&a) if a == args.len() => {}
                _ => return Err(SignatureError::UnknownCtor(c.clone(), args.len())),
            }
            for a in args {
                self.check_ctors(a)?;
            }
        }
        Ok(())
    }

    /// Adds a function declaration, enforcing transparency.
    pub fn add_func(
        &mut self,
        name: &str,
        args: Vec<TypeTerm>,
        range: TypeTerm,
    ) -> Result<(), SignatureError> {
        if self.funcs.contains_key(name) {
            return Err(SignatureError::Duplicate(name.to_string()));
        }
        for a in &args {
            self.check_ctors(a)?;
        }
        self.check_ctors(&range)?;
        let range_params = range.params();
        for a in &args {
            for p in a.params() {
                if !range_params.contains(&p) {
                    return Err(SignatureError::NotTransparent {
                        name: name.to_string(),
                        param: p,
                        range: range.to_string(),
                    });
                }
            }
        }
        self.funcs.insert(name.to_string(), FuncDecl { args, range });
        Ok(())
    }

    pub fn add_pred(&mut self, name: &str, args: Vec<TypeTerm>) -> Result<(), SignatureError> {
        if self.preds.contains_key(name) {
            return Err(SignatureError::Duplicate(name.to_string()));
        }
        for a in &args {
            self.check_ctors(a)?;
        }
        self.preds.insert(name.to_string(), args);
        Ok(())
    }

    /// The canonical flat type `c(P1,...,Pk)` of a declared constructor.
    pub fn canonical_flat(&self, ctor: &str) -> Option<TypeTerm> {
        let &k = self.ctors.get(ctor)?;
        Some(TypeTerm::Ctor(
            ctor.to_string(),
            (1..=k).map(|i| TypeTerm::Param(format!("P{i}"))).collect(),
        ))
    }
}
