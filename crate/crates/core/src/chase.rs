//! A bounded disjunctive-chase forward reasoner.
//!
//! This is the ground-truth side of the test strategy: on tiny instances it
//! decides entailment directly, by saturating the facts under the rules and
//! checking every resulting branch against the query union. The rewriting
//! engine never depends on it; property tests compare the two.
//!
//! The chase is *restricted*: a trigger (a rule plus a homomorphism from its
//! body into a branch's facts) only fires when no head disjunct is already
//! satisfied by some extension of the trigger. Firing a disjunctive rule
//! splits the branch into one child per disjunct, instantiating existential
//! variables with fresh labeled nulls. Rounds are breadth-first: each round
//! fires all triggers that were active at the start of the round.
//!
//! Answering `true` is sound even before saturation: every branch's facts
//! are consequences of the input under the corresponding case choices, so if
//! every branch satisfies the query union, the input entails it. The
//! converse needs saturation, which the depth bound may not reach — hence
//! the three-valued answer (`Entailed` / `Unknown`).

use std::collections::BTreeSet;

use crate::formula::{facts_entail, find_homomorphism, freeze_variables, Csf};
use crate::logic::{Substitutable, Substitution, Term, VarSet};
use crate::rules::Rule;

/// Default number of rule-application rounds.
pub const DEFAULT_MAX_DEPTH: usize = 3;

/// Hard limit on simultaneously tracked branches. Exceeding it is reported
/// via [`ChaseResult::branch_overflow`] and forces an `Unknown` answer:
/// dropping branches silently could fake entailment.
pub const BRANCH_CAP: usize = 256;

/// One branch of the disjunctive chase: a set of ground facts (constants and
/// labeled nulls) plus the number of rounds applied along its history.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord)]
pub struct Branch {
    pub facts: Csf,
    pub depth: usize,
}

/// The outcome of a bounded chase.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ChaseResult {
    pub branches: Vec<Branch>,
    /// True iff no rule is applicable on any branch — the branches are then
    /// models of the rules, and `Unknown` sharpens to a definite no.
    pub saturated: bool,
    /// True iff the branch cap was hit; some case splits are missing.
    pub branch_overflow: bool,
}

/// A three-valued entailment answer: the bounded chase can prove entailment
/// but cannot, below saturation, refute it.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Entailment {
    Entailed,
    Unknown,
}

/// Runs the restricted disjunctive chase for at most `max_depth` rounds.
/// Constraints must have been moved to the query side beforehand.
pub fn chase(rules: &[Rule], facts: &Csf, max_depth: usize) -> ChaseResult {
    debug_assert!(
        rules.iter().all(|r| !r.is_constraint()),
        "constraints must be reduced to queries before chasing"
    );
    let rules: Vec<&Rule> = rules.iter().filter(|r| !r.is_constraint()).collect();

    // Variables in the input facts name unknown individuals: freeze them so
    // every branch is ground from the start.
    let initial = freeze_variables(facts, "_:v");

    let mut live: Vec<Csf> = vec![initial];
    let mut done: Vec<Branch> = Vec::new();
    let mut null_counter: usize = 0;
    let mut overflow = false;
    let mut round = 0;

    while round < max_depth && !live.is_empty() {
        let mut next: BTreeSet<Csf> = BTreeSet::new();
        for branch in &live {
            let triggers = active_triggers(&rules, branch);
            if triggers.is_empty() {
                done.push(Branch {
                    facts: branch.clone(),
                    depth: round,
                });
                continue;
            }
            // Fire every active trigger; each disjunctive trigger multiplies
            // the branch into one child per disjunct.
            let mut children: Vec<Csf> = vec![branch.clone()];
            for (rule, binding) in &triggers {
                let mut expanded = Vec::with_capacity(children.len() * rule.head.len());
                for child in &children {
                    for disjunct in rule.head.disjuncts() {
                        let grounded = ground_disjunct(rule, disjunct, binding, &mut null_counter);
                        expanded.push(child.union(&grounded));
                    }
                }
                children = expanded;
            }
            next.extend(children);
            if done.len() + next.len() + live.len() > BRANCH_CAP {
                overflow = true;
                break;
            }
        }
        if overflow {
            // The remaining live branches are carried over unexpanded.
            done.extend(live.iter().cloned().map(|facts| Branch {
                facts,
                depth: round,
            }));
            done.extend(next.into_iter().map(|facts| Branch {
                facts,
                depth: round + 1,
            }));
            live = Vec::new();
            break;
        }
        live = next.into_iter().collect();
        round += 1;
    }

    // Whatever is still live at the bound: record it, noting whether any rule
    // would still fire.
    let mut saturated = !overflow;
    for branch in live {
        if !active_triggers(&rules, &branch).is_empty() {
            saturated = false;
        }
        done.push(Branch {
            facts: branch,
            depth: round,
        });
    }
    done.sort();
    done.dedup_by(|a, b| a.facts == b.facts);

    ChaseResult {
        branches: done,
        saturated,
        branch_overflow: overflow,
    }
}

/// Decides whether facts and rules entail the union of the given CQs, within
/// the depth bound: `Entailed` iff every branch satisfies some disjunct of
/// the union.
pub fn entails(rules: &[Rule], facts: &Csf, ucq: &[Csf], max_depth: usize) -> Entailment {
    let result = chase(rules, facts, max_depth);
    if result.branch_overflow {
        return Entailment::Unknown;
    }
    let covered = result
        .branches
        .iter()
        .all(|b| ucq.iter().any(|q| facts_entail(&b.facts, q)));
    if covered {
        Entailment::Entailed
    } else {
        Entailment::Unknown
    }
}

/// All active triggers on a branch, in deterministic order: a trigger is a
/// rule with a body match whose head no disjunct already satisfies.
fn active_triggers<'a>(rules: &[&'a Rule], facts: &Csf) -> Vec<(&'a Rule, Substitution)> {
    let frozen = VarSet::new();
    let mut out = Vec::new();
    for rule in rules {
        for binding in crate::formula::all_homomorphisms(&rule.body, facts, &frozen) {
            let satisfied = rule
                .head
                .disjuncts()
                .any(|d| find_homomorphism(&d.apply(&binding), facts, &frozen).is_some());
            if !satisfied {
                out.push((*rule, binding));
            }
        }
    }
    out
}

/// Instantiates one head disjunct under the trigger's binding, inventing a
/// fresh labeled null for each existential variable of the disjunct.
fn ground_disjunct(
    rule: &Rule,
    disjunct: &Csf,
    binding: &Substitution,
    null_counter: &mut usize,
) -> Csf {
    let mut s = binding.clone();
    for v in rule.disjunct_existentials(disjunct) {
        s.insert(v, Term::constant(format!("_:n{null_counter}")));
        *null_counter += 1;
    }
    disjunct.apply(&s)
}
