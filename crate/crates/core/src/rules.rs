//! Rules, queries with negation, and knowledge bases.
//!
//! A rule pairs a conjunctive body with a disjunctive head; its kind
//! (constraint, existential, disjunctive) is derived from the number of head
//! disjuncts. Queries carry positive atoms, individually negated atoms, and an
//! ordered tuple of answer variables. These are the values every other module
//! consumes, so the accessors here (frontier, existential variables, rule
//! partition) are the single source of truth for those notions.

use std::fmt;

use crate::formula::{Csf, Dsf};
use crate::logic::{Substitutable, Substitution, VarGen, VarSet};

/// The derived kind of a rule, determined by its head size.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum RuleKind {
    /// Empty head: the body must never hold.
    Constraint,
    /// Exactly one disjunct (possibly with existential variables).
    Existential,
    /// Two or more disjuncts.
    Disjunctive,
}

/// A disjunctive existential rule `body → d₁ ∨ … ∨ dₙ`, where each disjunct is
/// a conjunction of atoms. Head variables absent from the body are read as
/// existentially quantified; all others are universal.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Rule {
    pub label: Option<String>,
    pub body: Csf,
    pub head: Dsf,
}

impl Rule {
    pub fn new(body: Csf, head: Dsf) -> Self {
        Rule {
            label: None,
            body,
            head,
        }
    }

    pub fn with_label(label: impl Into<String>, body: Csf, head: Dsf) -> Self {
        Rule {
            label: Some(label.into()),
            body,
            head,
        }
    }

    pub fn kind(&self) -> RuleKind {
        match self.head.len() {
            0 => RuleKind::Constraint,
            1 => RuleKind::Existential,
            _ => RuleKind::Disjunctive,
        }
    }

    pub fn is_constraint(&self) -> bool {
        self.kind() == RuleKind::Constraint
    }

    pub fn is_existential(&self) -> bool {
        self.kind() == RuleKind::Existential
    }

    pub fn is_disjunctive(&self) -> bool {
        self.kind() == RuleKind::Disjunctive
    }

    /// Variables shared between body and head.
    pub fn frontier(&self) -> VarSet {
        self.body
            .vars()
            .intersection(&self.head.vars())
            .cloned()
            .collect()
    }

    /// Head variables that do not occur in the body.
    pub fn existential_vars(&self) -> VarSet {
        self.head
            .vars()
            .difference(&self.body.vars())
            .cloned()
            .collect()
    }

    /// Existential variables occurring in one particular disjunct.
    pub fn disjunct_existentials(&self, disjunct: &Csf) -> VarSet {
        disjunct
            .vars()
            .difference(&self.body.vars())
            .cloned()
            .collect()
    }

    pub fn vars(&self) -> VarSet {
        let mut vs = self.body.vars();
        vs.extend(self.head.vars());
        vs
    }

    /// A copy whose variables are disjoint from `reserved`, with the renaming
    /// that produced it.
    pub fn renamed_apart(&self, reserved: &VarSet, gen: &mut VarGen) -> (Rule, Substitution) {
        let renaming = crate::logic::renaming_apart(&self.vars(), reserved, gen);
        (self.apply(&renaming), renaming)
    }

    /// Label for a rule derived from this one, e.g. `r1` ⇒ `r1.rw3`.
    pub fn derive_label(&self, suffix: &str) -> Option<String> {
        self.label.as_ref().map(|l| format!("{l}.{suffix}"))
    }
}

impl Substitutable for Rule {
    fn apply(&self, s: &Substitution) -> Self {
        Rule {
            label: self.label.clone(),
            body: self.body.apply(s),
            head: self.head.apply(s),
        }
    }
}

impl fmt::Display for Rule {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if let Some(l) = &self.label {
            write!(f, "[{l}] ")?;
        }
        write!(f, "{} :- {}", self.head, self.body)
    }
}

/// Where a conjunctive query ultimately came from: posed by the user, or
/// injected as the positive form of a violated constraint. Matching the
/// latter signals inconsistency of the facts rather than a query answer.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum CqOrigin {
    Query,
    InconsistencyWitness,
}

impl CqOrigin {
    pub fn as_str(self) -> &'static str {
        match self {
            CqOrigin::Query => "query",
            CqOrigin::InconsistencyWitness => "inconsistency-witness",
        }
    }
}

impl fmt::Display for CqOrigin {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// A conjunctive query with negated atoms. Variables in the positive part are
/// existentially quantified (except answer variables); variables occurring
/// only under negation are universally quantified.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct ConjunctiveQueryNeg {
    pub label: Option<String>,
    /// Ordered answer tuple; must occur in the positive part.
    pub answer_vars: Vec<String>,
    pub positives: Csf,
    /// Atoms that are each individually negated.
    pub negatives: Csf,
}

impl ConjunctiveQueryNeg {
    /// A Boolean positive query.
    pub fn positive(positives: Csf) -> Self {
        ConjunctiveQueryNeg {
            label: None,
            answer_vars: Vec::new(),
            positives,
            negatives: Csf::new(),
        }
    }

    pub fn with_label(mut self, label: impl Into<String>) -> Self {
        self.label = Some(label.into());
        self
    }

    pub fn with_answer_vars<I, S>(mut self, vars: I) -> Self
    where
        I: IntoIterator<Item = S>,
        S: Into<String>,
    {
        self.answer_vars = vars.into_iter().map(Into::into).collect();
        self
    }

    pub fn with_negatives(mut self, negatives: Csf) -> Self {
        self.negatives = negatives;
        self
    }

    pub fn negated_count(&self) -> usize {
        self.negatives.len()
    }

    pub fn has_negation(&self) -> bool {
        !self.negatives.is_empty()
    }

    pub fn is_boolean(&self) -> bool {
        self.answer_vars.is_empty()
    }

    pub fn vars(&self) -> VarSet {
        let mut vs = self.positives.vars();
        vs.extend(self.negatives.vars());
        vs
    }

    pub fn answer_var_set(&self) -> VarSet {
        self.answer_vars.iter().cloned().collect()
    }

    /// Variables occurring in both the positive and the negative part.
    pub fn frontier(&self) -> VarSet {
        self.positives
            .vars()
            .intersection(&self.negatives.vars())
            .cloned()
            .collect()
    }

    /// Variables occurring only under negation; these are read universally.
    pub fn universal_vars(&self) -> VarSet {
        self.negatives
            .vars()
            .difference(&self.positives.vars())
            .cloned()
            .collect()
    }

    /// A copy whose non-answer variables are disjoint from `reserved`. Answer
    /// variables keep their names: they are rigid for the whole run.
    pub fn renamed_apart(
        &self,
        reserved: &VarSet,
        gen: &mut VarGen,
    ) -> (ConjunctiveQueryNeg, Substitution) {
        let renameable: VarSet = self
            .vars()
            .difference(&self.answer_var_set())
            .cloned()
            .collect();
        let renaming = crate::logic::renaming_apart(&renameable, reserved, gen);
        let renamed = ConjunctiveQueryNeg {
            label: self.label.clone(),
            answer_vars: self.answer_vars.clone(),
            positives: self.positives.apply(&renaming),
            negatives: self.negatives.apply(&renaming),
        };
        (renamed, renaming)
    }
}

impl fmt::Display for ConjunctiveQueryNeg {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if let Some(l) = &self.label {
            write!(f, "[{l}] ")?;
        }
        write!(f, "?")?;
        if !self.answer_vars.is_empty() {
            write!(f, "({})", self.answer_vars.join(", "))?;
        }
        if self.positives.is_empty() && self.negatives.is_empty() {
            return Ok(());
        }
        write!(f, " :- ")?;
        let mut first = true;
        for a in self.positives.atoms() {
            if !first {
                write!(f, ", ")?;
            }
            first = false;
            write!(f, "{a}")?;
        }
        for a in self.negatives.atoms() {
            if !first {
                write!(f, ", ")?;
            }
            first = false;
            write!(f, "-{a}")?;
        }
        Ok(())
    }
}

/// A union of conjunctive queries with negation, kept as an ordered set.
#[derive(Clone, Debug, Default, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Ucq {
    cqs: std::collections::BTreeSet<ConjunctiveQueryNeg>,
}

impl Ucq {
    pub fn new() -> Self {
        Ucq::default()
    }

    pub fn from_cqs(cqs: impl IntoIterator<Item = ConjunctiveQueryNeg>) -> Self {
        Ucq {
            cqs: cqs.into_iter().collect(),
        }
    }

    pub fn cqs(&self) -> impl Iterator<Item = &ConjunctiveQueryNeg> {
        self.cqs.iter()
    }

    pub fn len(&self) -> usize {
        self.cqs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.cqs.is_empty()
    }

    pub fn insert(&mut self, cq: ConjunctiveQueryNeg) {
        self.cqs.insert(cq);
    }

    /// Members with exactly `k` negated atoms.
    pub fn with_negated(&self, k: usize) -> impl Iterator<Item = &ConjunctiveQueryNeg> {
        self.cqs.iter().filter(move |cq| cq.negated_count() == k)
    }

    /// Members with two or more negated atoms.
    pub fn with_multi_negated(&self) -> impl Iterator<Item = &ConjunctiveQueryNeg> {
        self.cqs.iter().filter(|cq| cq.negated_count() >= 2)
    }

    pub fn answer_var_set(&self) -> VarSet {
        self.cqs
            .iter()
            .flat_map(|cq| cq.answer_vars.iter().cloned())
            .collect()
    }
}

impl FromIterator<ConjunctiveQueryNeg> for Ucq {
    fn from_iter<T: IntoIterator<Item = ConjunctiveQueryNeg>>(iter: T) -> Self {
        Ucq::from_cqs(iter)
    }
}

impl fmt::Display for Ucq {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (i, cq) in self.cqs.iter().enumerate() {
            if i > 0 {
                writeln!(f)?;
            }
            write!(f, "{cq}.")?;
        }
        Ok(())
    }
}

/// The rules of a knowledge base split by kind.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct RulePartition {
    pub existential: Vec<Rule>,
    pub disjunctive: Vec<Rule>,
    pub constraints: Vec<Rule>,
}

/// A rule set together with a fact base.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct KnowledgeBase {
    pub rules: Vec<Rule>,
    pub facts: Csf,
}

impl KnowledgeBase {
    pub fn new(rules: Vec<Rule>, facts: Csf) -> Self {
        KnowledgeBase { rules, facts }
    }

    /// Splits the rules into existential rules, disjunctive rules, and
    /// constraints; the three parts cover `rules` disjointly.
    pub fn partition(&self) -> RulePartition {
        let mut p = RulePartition::default();
        for r in &self.rules {
            match r.kind() {
                RuleKind::Existential => p.existential.push(r.clone()),
                RuleKind::Disjunctive => p.disjunctive.push(r.clone()),
                RuleKind::Constraint => p.constraints.push(r.clone()),
            }
        }
        p
    }

    /// Every predicate with the set of arities it is used at, across rules
    /// and facts.
    pub fn arity_table(
        &self,
    ) -> std::collections::BTreeMap<String, std::collections::BTreeSet<usize>> {
        let mut table: std::collections::BTreeMap<String, std::collections::BTreeSet<usize>> =
            std::collections::BTreeMap::new();
        let mut record = |a: &crate::logic::Atom| {
            table
                .entry(a.predicate.clone())
                .or_default()
                .insert(a.arity());
        };
        for r in &self.rules {
            r.body.atoms().for_each(&mut record);
            r.head.atoms().for_each(&mut record);
        }
        self.facts.atoms().for_each(&mut record);
        table
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord)]
pub enum Severity {
    Warning,
    Error,
}

/// A validation finding; validation reports problems instead of failing.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Diagnostic {
    pub severity: Severity,
    pub message: String,
}

impl Diagnostic {
    pub fn error(message: impl Into<String>) -> Self {
        Diagnostic {
            severity: Severity::Error,
            message: message.into(),
        }
    }

    pub fn warning(message: impl Into<String>) -> Self {
        Diagnostic {
            severity: Severity::Warning,
            message: message.into(),
        }
    }
}

impl fmt::Display for Diagnostic {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let tag = match self.severity {
            Severity::Warning => "warning",
            Severity::Error => "error",
        };
        write!(f, "{tag}: {}", self.message)
    }
}

/// Checks a knowledge base and query set for structural problems: predicates
/// used at conflicting arities, answer variables missing from the positive
/// part, and empty head disjuncts. An empty result means well-formed.
pub fn validate(kb: &KnowledgeBase, queries: &Ucq) -> Vec<Diagnostic> {
    let mut diags = Vec::new();

    let mut table = kb.arity_table();
    for cq in queries.cqs() {
        for a in cq.positives.atoms().chain(cq.negatives.atoms()) {
            table
                .entry(a.predicate.clone())
                .or_default()
                .insert(a.arity());
        }
    }
    for (pred, arities) in &table {
        if arities.len() > 1 {
            let list: Vec<String> = arities.iter().map(|n| n.to_string()).collect();
            diags.push(Diagnostic::error(format!(
                "predicate '{pred}' used at conflicting arities: {}",
                list.join(", ")
            )));
        }
    }

    for cq in queries.cqs() {
        let positive_vars = cq.positives.vars();
        for v in &cq.answer_vars {
            if !positive_vars.contains(v) {
                let name = cq.label.clone().unwrap_or_else(|| cq.to_string());
                diags.push(Diagnostic::error(format!(
                    "answer variable '{v}' of query '{name}' does not occur in a positive atom"
                )));
            }
        }
    }

    for r in &kb.rules {
        if r.head.disjuncts().any(|d| d.is_empty()) && !r.is_constraint() {
            let name = r.label.clone().unwrap_or_else(|| r.to_string());
            diags.push(Diagnostic::error(format!(
                "rule '{name}' has an empty head disjunct"
            )));
        }
    }

    diags
}
