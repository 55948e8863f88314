//! Static instantiation analysis for polymorphically typed logic programs.
//!
//! The crate parses typed logic programs, checks them against the typing
//! rules (including the head condition), derives an abstract domain from the
//! type declarations, and computes a finite abstract fixpoint whose atoms
//! describe the partial groundness of every answer.

pub mod absterm;
pub mod graph;
pub mod label;
pub mod semantics;
pub mod sigs;
pub mod solver;
pub mod syntax;
pub mod typecheck;
pub mod types;

pub use absterm::{
    abstract_term, abstract_type_check, canonical_names, canonicalize_vars, eq_acplus,
    is_normal_form, normalize, parse_abstract, AbsError, AbstractSubst, AbstractTerm, Summand,
};
pub use graph::{
    build_grammar, check_conditions, direct_subterm_types, role_profile, Grammar, GraphError,
    RoleProfile,
};
pub use label::{labels, labels_abstract, labels_by_derivation, zeta, LabelError, LabelQuery};
pub use semantics::{
    abstract_program, abstract_tp, analyze, atom_le, check_correctness, concrete_iterates,
    concrete_tp, describes, lfp_abstract, query_answers, readback, unify_atoms, AbstractAtom,
    AbstractClause, AbstractInterpretation, AnalysisError, AnalysisResult, Fixpoint, QueryAnswer,
    Readback,
};
pub use solver::{common_instances, equiv, le_acplus, le_tuple, unify_tuples, SolveError};
pub use syntax::{
    mgu, parse_program, parse_term, parse_type, Atom, Clause, ParseError, Program, Subst, Term,
};
pub use typecheck::{
    check_clause, check_program, infer_term_type, recursion_mode, ClauseTyping, RecursionMode,
    TypeError,
};
pub use types::{FuncDecl, Signature, SignatureError, TypeSubst, TypeTerm};
