//! Normalizing the entailment problem.
//!
//! Certain-answer entailment of a UCQ with negation over rules with
//! constraints reduces to a constraint-free, negation-free problem:
//!
//! * a constraint `B → ⊥` moves to the query side as the positive CQ `B` —
//!   matching it witnesses inconsistency of the facts;
//! * a CQ with negated atoms moves to the rule side as its own negation:
//!   `∃X (P ∧ ¬n₁ ∧ … ∧ ¬nₖ)` flips into the rule `P → n₁ ∨ … ∨ nₖ`, whose
//!   universally-only variables become existential head variables. One
//!   negated atom yields an existential rule, several yield a disjunctive
//!   rule.
//!
//! What remains is a set of disjunctive existential rules plus a positive
//! UCQ; the rewriting engine operates on exactly that shape.

use std::fmt;

use thiserror::Error;

use crate::formula::{Csf, Dsf};
use crate::logic::VarSet;
use crate::rules::{ConjunctiveQueryNeg, CqOrigin, KnowledgeBase, Rule, Ucq};

#[derive(Debug, Error, PartialEq, Eq)]
pub enum ReductionError {
    #[error("rule '{0}' is not a constraint: it has a non-empty head")]
    NotAConstraint(String),
    #[error("query '{0}' has no negated atoms")]
    NoNegatedAtoms(String),
}

fn rule_name(r: &Rule) -> String {
    r.label.clone().unwrap_or_else(|| r.to_string())
}

fn query_name(q: &ConjunctiveQueryNeg) -> String {
    q.label.clone().unwrap_or_else(|| q.to_string())
}

/// Turns constraints `B → ⊥` into the positive Boolean queries `B`.
pub fn constraints_to_queries(
    constraints: &[Rule],
) -> Result<Vec<ConjunctiveQueryNeg>, ReductionError> {
    constraints
        .iter()
        .map(|r| {
            if !r.is_constraint() {
                return Err(ReductionError::NotAConstraint(rule_name(r)));
            }
            let mut cq = ConjunctiveQueryNeg::positive(r.body.clone());
            cq.label = r.label.clone();
            Ok(cq)
        })
        .collect()
}

/// Negates a query with negated atoms into a rule: positives become the
/// body, each negated atom becomes its own head disjunct, and variables
/// occurring only under negation become existential variables.
pub fn negated_query_to_rule(q: &ConjunctiveQueryNeg) -> Result<Rule, ReductionError> {
    if !q.has_negation() {
        return Err(ReductionError::NoNegatedAtoms(query_name(q)));
    }
    let head = Dsf::from_disjuncts(
        q.negatives
            .atoms()
            .map(|a| std::iter::once(a.clone()).collect::<Csf>()),
    );
    Ok(Rule {
        label: q.label.clone(),
        body: q.positives.clone(),
        head,
    })
}

/// One positive CQ of the normalized problem, tagged with whether matching
/// it answers the user's query or witnesses inconsistency of the facts.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct NormalizedQuery {
    pub cq: ConjunctiveQueryNeg,
    pub origin: CqOrigin,
}

impl fmt::Display for NormalizedQuery {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} ({})", self.cq, self.origin)
    }
}

/// A constraint-free, negation-free entailment problem equivalent to the
/// original one.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct NormalizedProblem {
    /// Existential and disjunctive rules only.
    pub rules: Vec<Rule>,
    /// Positive CQs, each tagged with its origin.
    pub queries: Vec<NormalizedQuery>,
    /// Answer-variable names of the original queries; these stay rigid
    /// (constant-like) through rewriting, including inside rules generated
    /// from negated queries.
    pub frozen: VarSet,
}

impl NormalizedProblem {
    pub fn positive_ucq(&self) -> Ucq {
        self.queries.iter().map(|nq| nq.cq.clone()).collect()
    }
}

/// Applies the full reduction to a knowledge base and query set.
pub fn normalize_problem(
    kb: &KnowledgeBase,
    queries: &Ucq,
) -> Result<NormalizedProblem, ReductionError> {
    let frozen: VarSet = queries.answer_var_set();

    let mut rules: Vec<Rule> = Vec::new();
    let mut constraints: Vec<Rule> = Vec::new();
    for r in &kb.rules {
        if r.is_constraint() {
            constraints.push(r.clone());
        } else {
            rules.push(r.clone());
        }
    }
    for cq in queries.cqs() {
        if cq.has_negation() {
            rules.push(negated_query_to_rule(cq)?);
        }
    }

    let mut normalized = Vec::new();
    for cq in queries.with_negated(0) {
        normalized.push(NormalizedQuery {
            cq: cq.clone(),
            origin: CqOrigin::Query,
        });
    }
    for cq in constraints_to_queries(&constraints)? {
        normalized.push(NormalizedQuery {
            cq,
            origin: CqOrigin::InconsistencyWitness,
        });
    }

    Ok(NormalizedProblem {
        rules,
        queries: normalized,
        frozen,
    })
}
