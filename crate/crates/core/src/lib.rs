//! A query-rewriting engine for disjunctive existential rules.
//!
//! Given a knowledge base of disjunctive existential rules and a union of
//! conjunctive queries with (universally quantified) negation, the engine
//! compiles the queries into a complete union of conjunctive queries: one
//! whose direct evaluation over any fact base returns exactly the answers
//! entailed by the facts and the rules together. Static classifiers decide
//! membership in rule fragments for which that compilation is guaranteed to
//! terminate, and a saturation-based oracle provides an independent ground
//! truth for testing at small scale.

pub mod chase;
pub mod dlgp;
pub mod formula;
pub mod fragments;
pub mod logic;
pub mod reduction;
pub mod rewrite;
pub mod rules;

pub use chase::{chase, entails, Branch, ChaseResult, Entailment};
pub use formula::{
    all_homomorphisms, connected_components, facts_entail, find_homomorphism, freeze_variables,
    subsumes, ComponentPartition, Csf, Dsf,
};
pub use fragments::{
    dependency_graph, is_agrd, is_cdr, is_clr, is_dder, is_disconnected, is_domain_restricted,
    is_fus_guaranteed, is_linear, is_sticky, sticky_marking, DependencyGraph, FusReport,
    FusVerdict, RuleFlags, StickyMarking,
};
pub use logic::{
    renaming_apart, unify_atoms, unify_equations, Atom, Literal, Substitutable, Substitution, Term,
    TermClasses, VarGen, VarSet,
};
pub use reduction::{
    constraints_to_queries, negated_query_to_rule, normalize_problem, NormalizedProblem,
    NormalizedQuery, ReductionError,
};
pub use rewrite::{
    alpha_equivalent, alpha_equivalent_formulas, disjunctive_step, existential_step,
    piece_unifications, prune, rewrite_disj, rewrite_exists_k, rewrite_k, rewrite_problem,
    satisfies_step_conditions, PieceUnification, RewriteOptions, RewriteOutcome, RewritingState,
    WorkCq,
};
pub use rules::{
    validate, ConjunctiveQueryNeg, CqOrigin, Diagnostic, KnowledgeBase, Rule, RuleKind,
    RulePartition, Severity, Ucq,
};
