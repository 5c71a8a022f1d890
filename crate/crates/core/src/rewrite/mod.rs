//! The rewriting engine.
//!
//! Rewriting alternates two phases until nothing changes. The existential
//! phase expands the query set breadth-first against one-disjunct rules,
//! up to `k` levels per call. The disjunctive phase resolves queries
//! against disjunctive rule heads, producing new rules with strictly fewer
//! disjuncts; a rule that loses every disjunct is a constraint, and its
//! body is injected into the query set — matching it witnesses that the
//! data contradicts the rules, which makes every query hold. Kept queries
//! form a subsumption cover: anything removed is subsumed by a survivor.

mod piece;

pub use piece::{
    disjunctive_step, disjunctive_step_detailed, existential_step, existential_step_detailed,
    piece_unifications, satisfies_step_conditions, PieceUnification,
};

use std::collections::{BTreeMap, BTreeSet, VecDeque};
use std::time::{Duration, Instant};

use rayon::prelude::*;

use crate::formula::{subsumes, Csf};
use crate::logic::{renaming_apart, Atom, Substitutable, Term, VarGen, VarSet};
use crate::reduction::NormalizedProblem;
use crate::rules::{CqOrigin, Rule, RuleKind};

/// Budget and behaviour switches for a rewriting run.
#[derive(Clone, Debug)]
pub struct RewriteOptions {
    /// Levels per existential phase; `None` runs each phase to its own
    /// fixpoint (may not terminate without a timeout).
    pub k: Option<u32>,
    /// Bound on outer alternations of the two phases.
    pub max_iterations: u32,
    /// Wall-clock budget; exceeding it stops the run with `converged =
    /// false` and the sound partial result.
    pub timeout: Option<Duration>,
    /// When false, keeps every generated query instead of the subsumption
    /// cover (diagnostics).
    pub prune: bool,
    /// When true, collects every unification record for later auditing.
    pub audit: bool,
    /// Starting index for generated variable names; a seed for runs that
    /// should differ only in naming.
    pub var_start: u64,
}

impl Default for RewriteOptions {
    fn default() -> Self {
        RewriteOptions {
            k: Some(2),
            max_iterations: 64,
            timeout: None,
            prune: true,
            audit: false,
            var_start: 0,
        }
    }
}

/// A conjunctive query tracked by the engine, with the bookkeeping needed
/// to report answers: where it ultimately came from, which of its variables
/// are answer variables, and the admission generation used for pruning
/// preference.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct WorkCq {
    pub formula: Csf,
    pub origin: CqOrigin,
    pub answer_vars: Vec<String>,
    pub generation: u64,
}

/// Everything a run accumulated: rules and queries only grow, and `kept`
/// indexes the current subsumption cover inside `cqs`. `cq_generated`
/// counts existential-step outputs; `rules_generated` counts
/// disjunctive-step outputs, constraints included.
#[derive(Clone, Debug, Default)]
pub struct RewritingState {
    pub rules: Vec<Rule>,
    pub cqs: Vec<WorkCq>,
    pub kept: Vec<usize>,
    pub unifications: Vec<PieceUnification>,
    pub iterations: u32,
    pub cq_generated: u64,
    pub rules_generated: u64,
}

/// Result of a rewriting run: the kept queries in deterministic order, the
/// full state, and whether the alternation reached a fixpoint within
/// budget.
#[derive(Clone, Debug)]
pub struct RewriteOutcome {
    pub cqs: Vec<WorkCq>,
    pub state: RewritingState,
    pub converged: bool,
}

/// Rewrites a normalized problem (no constraints, no negated queries) into
/// a union of positive conjunctive queries.
pub fn rewrite_problem(problem: &NormalizedProblem, opts: &RewriteOptions) -> RewriteOutcome {
    let seeds: Vec<WorkCq> = problem
        .queries
        .iter()
        .map(|nq| {
            debug_assert!(!nq.cq.has_negation(), "normalize before rewriting");
            WorkCq {
                formula: nq.cq.positives.clone(),
                origin: nq.origin,
                answer_vars: nq.cq.answer_vars.clone(),
                generation: 0,
            }
        })
        .collect();
    let mut engine = Engine::new(&problem.rules, seeds, &problem.frozen, opts.clone());
    let converged = engine.run();
    engine.into_outcome(converged)
}

/// Rewrites a plain UCQ. Queries are seeded in set order with origin
/// `Query`; their answer variables are the frozen names they contain.
pub fn rewrite_k(
    rules: &[Rule],
    ucq: &BTreeSet<Csf>,
    frozen: &VarSet,
    opts: &RewriteOptions,
) -> RewriteOutcome {
    debug_assert!(
        rules.iter().all(|r| !r.is_constraint()),
        "normalize constraints first"
    );
    let mut engine = Engine::new(rules, seed_queries(ucq, frozen), frozen, opts.clone());
    let converged = engine.run();
    engine.into_outcome(converged)
}

/// Breadth-first existential rewriting: level 0 is the input UCQ pruned,
/// each further level rewrites the previous one against every rule, and
/// the accumulated set is pruned throughout. Stops after `k` levels
/// (`None` = run to fixpoint) or when a level adds nothing.
pub fn rewrite_exists_k(
    rules: &[Rule],
    ucq: &BTreeSet<Csf>,
    k: Option<u32>,
    frozen: &VarSet,
) -> BTreeSet<Csf> {
    debug_assert!(rules.iter().all(|r| r.is_existential()));
    let opts = RewriteOptions {
        k,
        ..RewriteOptions::default()
    };
    let mut engine = Engine::new(rules, seed_queries(ucq, frozen), frozen, opts);
    engine.exists_phase();
    engine
        .kept
        .iter()
        .map(|&i| engine.state.cqs[i].formula.clone())
        .collect()
}

/// Closure of the disjunctive step over (disjunctive rule × query) pairs,
/// including newly generated disjunctive rules, until no new rule appears
/// modulo renaming. Returns the input rules followed by everything
/// generated — derived existential rules and constraints included; callers
/// convert constraints to queries.
pub fn rewrite_disj(rules: &[Rule], ucq: &BTreeSet<Csf>, frozen: &VarSet) -> Vec<Rule> {
    let mut engine = Engine::new(
        rules,
        seed_queries(ucq, frozen),
        frozen,
        RewriteOptions::default(),
    );
    engine.disj_phase();
    engine.state.rules
}

/// ⊆-minimal subsumption cover of a UCQ: every removed query is subsumed
/// by a kept one, and no kept query subsumes another. Between equivalent
/// queries the canonically least survives.
pub fn prune(ucq: &BTreeSet<Csf>, frozen: &VarSet) -> BTreeSet<Csf> {
    let items: Vec<&Csf> = ucq.iter().collect();
    let n = items.len();
    let mut alive = vec![true; n];
    for i in (0..n).rev() {
        for j in 0..n {
            if j != i && alive[j] && subsumes(items[j], items[i], frozen) {
                alive[i] = false;
                break;
            }
        }
    }
    items
        .into_iter()
        .zip(alive)
        .filter(|(_, a)| *a)
        .map(|(f, _)| f.clone())
        .collect()
}

fn seed_queries(ucq: &BTreeSet<Csf>, frozen: &VarSet) -> Vec<WorkCq> {
    ucq.iter()
        .map(|f| WorkCq {
            answer_vars: f
                .vars()
                .iter()
                .filter(|v| frozen.contains(*v))
                .cloned()
                .collect(),
            formula: f.clone(),
            origin: CqOrigin::Query,
            generation: 0,
        })
        .collect()
}

/// Whether two rules differ only by a renaming of their non-frozen
/// variables. Labels are ignored; frozen variables must match by name.
pub fn alpha_equivalent(a: &Rule, b: &Rule, frozen: &VarSet) -> bool {
    if a.body.len() != b.body.len() || a.head.len() != b.head.len() {
        return false;
    }
    let da: Vec<&Csf> = a.head.disjuncts().collect();
    let db: Vec<&Csf> = b.head.disjuncts().collect();
    let mut used = vec![false; db.len()];
    let mut pairs = Vec::new();
    pair_disjuncts(
        0,
        &da,
        &db,
        &mut used,
        &mut pairs,
        &(&a.body, &b.body),
        frozen,
    )
}

/// Whether two formulas differ only by a renaming of their non-frozen
/// variables.
pub fn alpha_equivalent_formulas(a: &Csf, b: &Csf, frozen: &VarSet) -> bool {
    a.len() == b.len() && var_bijection(&[(a, b)], frozen)
}

fn pair_disjuncts(
    i: usize,
    da: &[&Csf],
    db: &[&Csf],
    used: &mut [bool],
    pairs: &mut Vec<(usize, usize)>,
    base: &(&Csf, &Csf),
    frozen: &VarSet,
) -> bool {
    if i == da.len() {
        let mut sets: Vec<(&Csf, &Csf)> = vec![*base];
        sets.extend(pairs.iter().map(|&(x, y)| (da[x], db[y])));
        return var_bijection(&sets, frozen);
    }
    for j in 0..db.len() {
        if used[j] || da[i].len() != db[j].len() {
            continue;
        }
        used[j] = true;
        pairs.push((i, j));
        if pair_disjuncts(i + 1, da, db, used, pairs, base, frozen) {
            return true;
        }
        pairs.pop();
        used[j] = false;
    }
    false
}

/// Searches for one variable bijection under which every left formula maps
/// onto its right counterpart atom-for-atom.
fn var_bijection(sets: &[(&Csf, &Csf)], frozen: &VarSet) -> bool {
    let pairs: Vec<(Vec<&Atom>, Vec<&Atom>)> = sets
        .iter()
        .map(|(a, b)| (a.atoms().collect(), b.atoms().collect()))
        .collect();
    if pairs.iter().any(|(xs, ys)| xs.len() != ys.len()) {
        return false;
    }
    let mut used: Vec<Vec<bool>> = pairs.iter().map(|(_, ys)| vec![false; ys.len()]).collect();
    let mut fwd: BTreeMap<String, String> = BTreeMap::new();
    let mut rev: BTreeMap<String, String> = BTreeMap::new();
    bijection_search(&pairs, 0, 0, &mut used, &mut fwd, &mut rev, frozen)
}

fn bijection_search(
    pairs: &[(Vec<&Atom>, Vec<&Atom>)],
    si: usize,
    ai: usize,
    used: &mut [Vec<bool>],
    fwd: &mut BTreeMap<String, String>,
    rev: &mut BTreeMap<String, String>,
    frozen: &VarSet,
) -> bool {
    if si == pairs.len() {
        return true;
    }
    let (xs, ys) = &pairs[si];
    if ai == xs.len() {
        return bijection_search(pairs, si + 1, 0, used, fwd, rev, frozen);
    }
    let x = xs[ai];
    for j in 0..ys.len() {
        if used[si][j] {
            continue;
        }
        let y = ys[j];
        if x.predicate != y.predicate || x.arity() != y.arity() {
            continue;
        }
        let mut added: Vec<String> = Vec::new();
        let mut ok = true;
        for (tx, ty) in x.args.iter().zip(&y.args) {
            match (tx, ty) {
                (Term::Constant(c1), Term::Constant(c2)) => {
                    if c1 != c2 {
                        ok = false;
                        break;
                    }
                }
                (Term::Variable(v1), Term::Variable(v2)) => {
                    let (f1, f2) = (frozen.contains(v1), frozen.contains(v2));
                    if f1 != f2 || (f1 && v1 != v2) {
                        ok = false;
                        break;
                    }
                    if f1 {
                        continue;
                    }
                    match (fwd.get(v1), rev.get(v2)) {
                        (Some(m), _) if m != v2 => {
                            ok = false;
                            break;
                        }
                        (_, Some(m)) if m != v1 => {
                            ok = false;
                            break;
                        }
                        (Some(_), Some(_)) => {}
                        _ => {
                            fwd.insert(v1.clone(), v2.clone());
                            rev.insert(v2.clone(), v1.clone());
                            added.push(v1.clone());
                        }
                    }
                }
                _ => {
                    ok = false;
                    break;
                }
            }
        }
        if ok {
            used[si][j] = true;
            if bijection_search(pairs, si, ai + 1, used, fwd, rev, frozen) {
                return true;
            }
            used[si][j] = false;
        }
        for v in added {
            if let Some(img) = fwd.remove(&v) {
                rev.remove(&img);
            }
        }
    }
    false
}

fn rule_signature(r: &Rule) -> (Vec<(String, usize)>, Vec<Vec<(String, usize)>>) {
    let mut body: Vec<(String, usize)> = r
        .body
        .atoms()
        .map(|a| (a.predicate.clone(), a.arity()))
        .collect();
    body.sort();
    let mut head: Vec<Vec<(String, usize)>> = r
        .head
        .disjuncts()
        .map(|d| {
            let mut v: Vec<(String, usize)> = d
                .atoms()
                .map(|a| (a.predicate.clone(), a.arity()))
                .collect();
            v.sort();
            v
        })
        .collect();
    head.sort();
    (body, head)
}

type RuleSignature = (Vec<(String, usize)>, Vec<Vec<(String, usize)>>);

struct Engine {
    frozen: VarSet,
    opts: RewriteOptions,
    state: RewritingState,
    /// Indices into `state.cqs` forming the current subsumption cover.
    kept: Vec<usize>,
    cq_index: BTreeMap<Csf, usize>,
    rule_buckets: BTreeMap<RuleSignature, Vec<usize>>,
    exist_rules: Vec<usize>,
    disj_rules: Vec<usize>,
    done_exists: BTreeSet<(usize, usize)>,
    done_disj: BTreeSet<(usize, usize)>,
    deadline: Option<Instant>,
    timed_out: bool,
    next_generation: u64,
    derived_count: u64,
}

impl Engine {
    fn new(rules: &[Rule], seeds: Vec<WorkCq>, frozen: &VarSet, opts: RewriteOptions) -> Engine {
        let deadline = opts.timeout.map(|t| Instant::now() + t);
        let mut engine = Engine {
            frozen: frozen.clone(),
            opts,
            state: RewritingState::default(),
            kept: Vec::new(),
            cq_index: BTreeMap::new(),
            rule_buckets: BTreeMap::new(),
            exist_rules: Vec::new(),
            disj_rules: Vec::new(),
            done_exists: BTreeSet::new(),
            done_disj: BTreeSet::new(),
            deadline,
            timed_out: false,
            next_generation: 0,
            derived_count: 0,
        };
        for r in rules {
            engine.admit_rule(r.clone(), None);
        }
        let seeded: Vec<usize> = seeds
            .into_iter()
            .filter_map(|s| engine.admit_cq(s.formula, s.origin, s.answer_vars))
            .collect();
        engine.kept = if engine.opts.prune {
            engine.prune_indices(&seeded)
        } else {
            seeded
        };
        engine
    }

    fn expired(&mut self) -> bool {
        if self.timed_out {
            return true;
        }
        if self.deadline.is_some_and(|d| Instant::now() >= d) {
            self.timed_out = true;
        }
        self.timed_out
    }

    /// Runs the alternation to a fixpoint or until the budget runs out;
    /// returns whether a fixpoint was reached.
    fn run(&mut self) -> bool {
        let mut converged = false;
        for it in 1..=self.opts.max_iterations {
            if self.expired() {
                break;
            }
            let e = self.exists_phase();
            let d = self.disj_phase();
            self.state.iterations = it;
            if !e && !d {
                converged = true;
                break;
            }
        }
        converged && !self.timed_out
    }

    fn into_outcome(mut self, converged: bool) -> RewriteOutcome {
        self.state.kept = self.kept.clone();
        let cqs = self
            .kept
            .iter()
            .map(|&i| self.state.cqs[i].clone())
            .collect();
        RewriteOutcome {
            cqs,
            state: self.state,
            converged,
        }
    }

    /// Admits a rule unless an equal one modulo renaming is already known.
    /// Derived rules are labelled after the rule they came from.
    fn admit_rule(&mut self, mut rule: Rule, derived_from: Option<&Rule>) -> Option<usize> {
        let sig = rule_signature(&rule);
        if let Some(bucket) = self.rule_buckets.get(&sig) {
            for &i in bucket {
                if alpha_equivalent(&self.state.rules[i], &rule, &self.frozen) {
                    return None;
                }
            }
        }
        if let Some(parent) = derived_from {
            self.derived_count += 1;
            rule.label = Some(match &parent.label {
                Some(l) => format!("{l}.rw{}", self.derived_count),
                None => format!("rw{}", self.derived_count),
            });
        }
        let idx = self.state.rules.len();
        match rule.kind() {
            RuleKind::Existential => self.exist_rules.push(idx),
            RuleKind::Disjunctive => self.disj_rules.push(idx),
            RuleKind::Constraint => {}
        }
        self.state.rules.push(rule);
        self.rule_buckets.entry(sig).or_default().push(idx);
        Some(idx)
    }

    /// Admits a query unless the identical formula is already known. A
    /// duplicate deriving from a genuine query upgrades an
    /// inconsistency-witness original, since it then answers the query
    /// directly.
    fn admit_cq(
        &mut self,
        formula: Csf,
        origin: CqOrigin,
        answer_vars: Vec<String>,
    ) -> Option<usize> {
        if let Some(&i) = self.cq_index.get(&formula) {
            let existing = &mut self.state.cqs[i];
            if existing.origin == CqOrigin::InconsistencyWitness && origin == CqOrigin::Query {
                existing.origin = CqOrigin::Query;
                existing.answer_vars = answer_vars;
            }
            return None;
        }
        let generation = self.next_generation;
        self.next_generation += 1;
        let idx = self.state.cqs.len();
        self.state.cqs.push(WorkCq {
            formula: formula.clone(),
            origin,
            answer_vars,
            generation,
        });
        self.cq_index.insert(formula, idx);
        Some(idx)
    }

    /// Subsumption cover over the given query indices. Preference order is
    /// admission generation, then canonical formula order; a dropped query
    /// is always subsumed by a survivor.
    fn prune_indices(&self, pool: &[usize]) -> Vec<usize> {
        let mut order: Vec<usize> = pool.to_vec();
        order.sort_by(|&a, &b| {
            let (ca, cb) = (&self.state.cqs[a], &self.state.cqs[b]);
            ca.generation
                .cmp(&cb.generation)
                .then_with(|| ca.formula.cmp(&cb.formula))
        });
        order.dedup();
        let n = order.len();
        let mut alive = vec![true; n];
        for i in (0..n).rev() {
            let fi = &self.state.cqs[order[i]].formula;
            for j in 0..n {
                if j == i || !alive[j] {
                    continue;
                }
                if subsumes(&self.state.cqs[order[j]].formula, fi, &self.frozen) {
                    alive[i] = false;
                    break;
                }
            }
        }
        order
            .into_iter()
            .zip(alive)
            .filter(|(_, a)| *a)
            .map(|(i, _)| i)
            .collect()
    }

    /// Folds newly admitted queries into the cover; returns those that
    /// survived (the next expansion frontier).
    fn refresh_kept(&mut self, admitted: &[usize]) -> Vec<usize> {
        let mut pool = self.kept.clone();
        pool.extend_from_slice(admitted);
        if !self.opts.prune {
            self.kept = pool;
            return admitted.to_vec();
        }
        self.kept = self.prune_indices(&pool);
        let kept: BTreeSet<usize> = self.kept.iter().copied().collect();
        admitted
            .iter()
            .copied()
            .filter(|i| kept.contains(i))
            .collect()
    }

    /// Renames a rule apart from a query deterministically: the fresh
    /// names depend only on the rule, the query, and `var_start`, so
    /// re-deriving the same pair yields the identical formula.
    fn rename_for(&self, rule: &Rule, query: &Csf) -> Rule {
        let mut reserved = query.vars();
        reserved.extend(self.frozen.iter().cloned());
        reserved.extend(rule.vars());
        let renameable: VarSet = rule
            .vars()
            .into_iter()
            .filter(|v| !self.frozen.contains(v))
            .collect();
        let mut gen = VarGen::with_start(self.opts.var_start);
        let sub = renaming_apart(&renameable, &reserved, &mut gen);
        rule.apply(&sub)
    }

    /// One existential level: every unprocessed (rule, frontier query)
    /// pair, expanded in parallel, merged back in job order.
    fn exists_level(&mut self, frontier: &[usize]) -> Vec<(usize, Csf, PieceUnification)> {
        let mut jobs: Vec<(usize, Rule, Csf)> = Vec::new();
        for &ci in frontier {
            for pos in 0..self.exist_rules.len() {
                let ri = self.exist_rules[pos];
                if !self.done_exists.insert((ri, ci)) {
                    continue;
                }
                let q = self.state.cqs[ci].formula.clone();
                let renamed = self.rename_for(&self.state.rules[ri], &q);
                jobs.push((ci, renamed, q));
            }
        }
        let frozen = &self.frozen;
        let results: Vec<Vec<(Csf, PieceUnification)>> = jobs
            .par_iter()
            .map(|(_, rule, q)| existential_step_detailed(rule, q, frozen))
            .collect();
        let mut out = Vec::new();
        for ((ci, _, _), step_results) in jobs.iter().zip(results) {
            for (formula, pu) in step_results {
                out.push((*ci, formula, pu));
            }
        }
        out
    }

    /// The existential phase: breadth-first levels from the current cover,
    /// bounded by `k`. Returns whether the cover gained a query.
    fn exists_phase(&mut self) -> bool {
        let mut changed = false;
        let mut frontier = self.kept.clone();
        let mut level = 0u32;
        loop {
            if frontier.is_empty() {
                break;
            }
            if let Some(k) = self.opts.k {
                if level >= k {
                    break;
                }
            }
            if self.expired() {
                break;
            }
            let outputs = self.exists_level(&frontier);
            if outputs.is_empty() {
                break;
            }
            self.state.cq_generated += outputs.len() as u64;
            let mut admitted = Vec::new();
            for (parent, formula, pu) in outputs {
                if self.opts.audit {
                    self.state.unifications.push(pu);
                }
                let origin = self.state.cqs[parent].origin;
                let answer_vars = self.state.cqs[parent].answer_vars.clone();
                if let Some(idx) = self.admit_cq(formula, origin, answer_vars) {
                    admitted.push(idx);
                }
            }
            if admitted.is_empty() {
                break;
            }
            let survivors = self.refresh_kept(&admitted);
            if survivors.is_empty() {
                break;
            }
            changed = true;
            frontier = survivors;
            level += 1;
        }
        changed
    }

    /// The disjunctive phase: closure of the disjunctive step over
    /// (disjunctive rule × kept query) pairs, including rules generated
    /// along the way. Derived constraints inject their bodies as queries.
    /// Returns whether any rule or kept query was added.
    fn disj_phase(&mut self) -> bool {
        let mut changed = false;
        let snapshot = self.kept.clone();
        let mut queue: VecDeque<usize> = self.disj_rules.clone().into();
        let mut injected = Vec::new();
        while let Some(ri) = queue.pop_front() {
            if self.expired() {
                break;
            }
            for &ci in &snapshot {
                if !self.done_disj.insert((ri, ci)) {
                    continue;
                }
                let rule = self.state.rules[ri].clone();
                let q = self.state.cqs[ci].formula.clone();
                let renamed = self.rename_for(&rule, &q);
                for (out_rule, pu) in disjunctive_step_detailed(&renamed, &q, &self.frozen) {
                    self.state.rules_generated += 1;
                    if self.opts.audit {
                        self.state.unifications.push(pu);
                    }
                    let kind = out_rule.kind();
                    let admitted = self.admit_rule(out_rule.clone(), Some(&rule));
                    if admitted.is_some() {
                        changed = true;
                    }
                    match kind {
                        RuleKind::Constraint => {
                            if admitted.is_some() {
                                let origin = self.state.cqs[ci].origin;
                                let answer_vars = self.state.cqs[ci].answer_vars.clone();
                                if let Some(idx) = self.admit_cq(out_rule.body, origin, answer_vars)
                                {
                                    injected.push(idx);
                                }
                            }
                        }
                        RuleKind::Disjunctive => {
                            if let Some(idx) = admitted {
                                queue.push_back(idx);
                            }
                        }
                        RuleKind::Existential => {}
                    }
                }
            }
        }
        if !injected.is_empty() {
            let survivors = self.refresh_kept(&injected);
            changed |= !survivors.is_empty();
        }
        changed
    }
}
