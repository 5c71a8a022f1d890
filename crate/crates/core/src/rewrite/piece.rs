//! Piece unification: the shared mechanism of both rewriting steps.
//!
//! A piece unification equates a nonempty part of a query with nonempty
//! parts of one or more head disjuncts of a rule, under occurrence
//! conditions that keep the induced rewriting sound: a class of unified
//! terms that touches an existential variable must consist otherwise of
//! query variables that do not occur in the untouched query remainder, and
//! may take at most one existential variable per selected disjunct.
//! Variables of the remainder may only be bound to frontier variables or
//! rigid terms (constants and frozen variables).

use std::collections::{BTreeMap, BTreeSet};

use crate::formula::{Csf, Dsf};
use crate::logic::{unify_equations, Atom, Substitutable, Substitution, Term, TermClasses, VarSet};
use crate::rules::Rule;

/// A unification of a query part with selected parts of a rule head.
///
/// `selected_disjuncts` maps positions in the head's disjunct order to the
/// atoms of that disjunct equated with `query_part`; `mgu` equates every
/// selected subset with `query_part` simultaneously. The rule is stored as
/// used (renamed apart from the query), so records are self-contained.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct PieceUnification {
    pub rule: Rule,
    pub selected_disjuncts: BTreeMap<usize, Csf>,
    pub query_part: Csf,
    pub mgu: Substitution,
}

impl PieceUnification {
    /// Rule body plus the untouched query remainder, instantiated by the
    /// mgu: the body part produced by both rewriting steps.
    pub fn rewritten_body(&self, query: &Csf) -> Csf {
        self.rule
            .body
            .union(&query.difference(&self.query_part))
            .apply(&self.mgu)
    }

    /// Head disjuncts not selected by the unification, instantiated.
    pub fn surviving_head(&self) -> Dsf {
        Dsf::from_disjuncts(
            self.rule
                .head
                .disjuncts()
                .enumerate()
                .filter(|(i, _)| !self.selected_disjuncts.contains_key(i))
                .map(|(_, d)| d.apply(&self.mgu)),
        )
    }
}

/// Enumerates every piece unification of `query` against the given head
/// disjuncts of `rule` (positions into the head's disjunct order).
///
/// pre: `rule` shares no variables with `query` except frozen ones.
///
/// Each query atom drawn into the unified part is matched against a
/// nonempty subset of same-predicate atoms in every selected disjunct, so
/// several head atoms may collapse onto one query atom and vice versa; the
/// resulting equation system is solved and kept when the occurrence
/// conditions hold. Results are deduplicated and returned in a
/// deterministic order.
pub fn piece_unifications(
    rule: &Rule,
    query: &Csf,
    selected: &[usize],
    frozen: &VarSet,
) -> Vec<PieceUnification> {
    debug_assert!(
        rule.vars()
            .intersection(&query.vars())
            .all(|v| frozen.contains(v)),
        "rule must be renamed apart from the query"
    );
    let disjuncts: Vec<&Csf> = rule.head.disjuncts().collect();
    debug_assert!(selected.windows(2).all(|w| w[0] < w[1]));
    if selected.is_empty() || query.is_empty() {
        return Vec::new();
    }
    debug_assert!(selected.iter().all(|&i| i < disjuncts.len()));

    let q_atoms: Vec<&Atom> = query.atoms().collect();
    // Per selected disjunct, per query atom: the head atoms it could equal.
    let candidates: Vec<Vec<Vec<&Atom>>> = selected
        .iter()
        .map(|&d| {
            q_atoms
                .iter()
                .map(|qa| {
                    disjuncts[d]
                        .atoms()
                        .filter(|h| h.predicate == qa.predicate && h.arity() == qa.arity())
                        .collect()
                })
                .collect()
        })
        .collect();

    // A query atom can join the unified part only if every selected
    // disjunct offers at least one match for it.
    let eligible: Vec<usize> = (0..q_atoms.len())
        .filter(|&qi| candidates.iter().all(|per| !per[qi].is_empty()))
        .collect();
    if eligible.is_empty() {
        return Vec::new();
    }
    assert!(
        eligible.len() < 63,
        "query too large for subset enumeration"
    );

    let mut search = Enumerator {
        rule,
        query,
        frozen,
        selected,
        q_atoms,
        candidates,
        frontier: rule.frontier(),
        existentials: rule.existential_vars(),
        disjunct_exts: selected
            .iter()
            .map(|&d| rule.disjunct_existentials(disjuncts[d]))
            .collect(),
        query_vars: query.vars(),
        out: Vec::new(),
    };

    for mask in 1u64..(1u64 << eligible.len()) {
        let chosen: Vec<usize> = eligible
            .iter()
            .enumerate()
            .filter(|(bit, _)| mask >> bit & 1 == 1)
            .map(|(_, &qi)| qi)
            .collect();
        search.enumerate_matchings(&chosen);
    }
    search.out
}

struct Enumerator<'a> {
    rule: &'a Rule,
    query: &'a Csf,
    frozen: &'a VarSet,
    selected: &'a [usize],
    q_atoms: Vec<&'a Atom>,
    /// Indexed `[selected position][query atom position]`.
    candidates: Vec<Vec<Vec<&'a Atom>>>,
    frontier: VarSet,
    existentials: VarSet,
    disjunct_exts: Vec<VarSet>,
    query_vars: VarSet,
    out: Vec<PieceUnification>,
}

impl<'a> Enumerator<'a> {
    /// Enumerates, for a fixed query part, every assignment of a nonempty
    /// candidate subset to each (selected disjunct, query atom) slot.
    fn enumerate_matchings(&mut self, chosen: &[usize]) {
        let query_part = Csf::from_atoms(chosen.iter().map(|&qi| self.q_atoms[qi].clone()));
        let remaining_vars = self.query.difference(&query_part).vars();
        let slots: Vec<(usize, usize)> = (0..self.selected.len())
            .flat_map(|s| chosen.iter().map(move |&qi| (s, qi)))
            .collect();
        let mut picks: Vec<Vec<&'a Atom>> = vec![Vec::new(); slots.len()];
        self.assign(0, &slots, &query_part, &remaining_vars, &mut picks);
    }

    fn assign(
        &mut self,
        slot: usize,
        slots: &[(usize, usize)],
        query_part: &Csf,
        remaining_vars: &VarSet,
        picks: &mut Vec<Vec<&'a Atom>>,
    ) {
        if slot == slots.len() {
            self.solve(slots, query_part, remaining_vars, picks);
            return;
        }
        let (s, qi) = slots[slot];
        let cands = self.candidates[s][qi].clone();
        assert!(
            cands.len() < 32,
            "head disjunct too large for subset enumeration"
        );
        for mask in 1u32..(1u32 << cands.len()) {
            picks[slot] = cands
                .iter()
                .enumerate()
                .filter(|(bit, _)| mask >> bit & 1 == 1)
                .map(|(_, &h)| h)
                .collect();
            self.assign(slot + 1, slots, query_part, remaining_vars, picks);
        }
        picks[slot].clear();
    }

    fn solve(
        &mut self,
        slots: &[(usize, usize)],
        query_part: &Csf,
        remaining_vars: &VarSet,
        picks: &[Vec<&'a Atom>],
    ) {
        let mut eqs: Vec<(Term, Term)> = Vec::new();
        for (slot, &(_, qi)) in slots.iter().enumerate() {
            let qa = self.q_atoms[qi];
            for h in &picks[slot] {
                for (a, b) in qa.args.iter().zip(&h.args) {
                    eqs.push((a.clone(), b.clone()));
                }
            }
        }
        let Some(classes) = unify_equations(&eqs, self.frozen) else {
            return;
        };
        if !self.admissible(&classes, remaining_vars) {
            return;
        }
        let mgu = classes.substitution_with(|t| self.rank(t));

        let mut selected_disjuncts: BTreeMap<usize, Csf> = BTreeMap::new();
        for (slot, &(s, _)) in slots.iter().enumerate() {
            let entry = selected_disjuncts
                .entry(self.selected[s])
                .or_insert_with(Csf::new);
            for h in &picks[slot] {
                entry.insert((*h).clone());
            }
        }
        let pu = PieceUnification {
            rule: self.rule.clone(),
            selected_disjuncts,
            query_part: query_part.clone(),
            mgu,
        };
        debug_assert!(
            satisfies_step_conditions(&pu, self.query, self.frozen),
            "enumerator produced a unification violating the step conditions: {pu:?}"
        );
        if !self.out.contains(&pu) {
            self.out.push(pu);
        }
    }

    fn rank(&self, t: &Term) -> u8 {
        match t {
            Term::Constant(_) => 0,
            Term::Variable(v) => {
                if self.frozen.contains(v) {
                    0
                } else if self.frontier.contains(v) {
                    1
                } else if self.existentials.contains(v) {
                    2
                } else {
                    3
                }
            }
        }
    }

    /// Occurrence conditions on a unification class that touches an
    /// existential variable: no rigid term, no frontier variable, at most
    /// one existential per selected disjunct, and no query variable that
    /// also occurs in the untouched remainder. Classes of frontier and
    /// query variables alone are unrestricted (rigidity is enforced by the
    /// unifier itself).
    fn admissible(&self, classes: &TermClasses, remaining_vars: &VarSet) -> bool {
        for class in classes.classes() {
            let touches_existential = class
                .iter()
                .any(|t| matches!(t, Term::Variable(v) if self.existentials.contains(v)));
            if !touches_existential {
                continue;
            }
            for t in class.iter() {
                match t {
                    Term::Constant(_) => return false,
                    Term::Variable(v) => {
                        if self.frozen.contains(v) || self.frontier.contains(v) {
                            return false;
                        }
                        if self.query_vars.contains(v) && remaining_vars.contains(v) {
                            return false;
                        }
                    }
                }
            }
            for exts in &self.disjunct_exts {
                let hits = class
                    .iter()
                    .filter(|t| matches!(t, Term::Variable(v) if exts.contains(v)))
                    .count();
                if hits > 1 {
                    return false;
                }
            }
        }
        true
    }
}

/// Independent check that a unification satisfies the step conditions:
/// every selected subset is a nonempty part of its disjunct and equates
/// with the query part under the mgu; variables of the untouched remainder
/// are bound only to frontier variables or rigid terms; existential
/// variables are never bound into the remainder.
pub fn satisfies_step_conditions(pu: &PieceUnification, query: &Csf, frozen: &VarSet) -> bool {
    if pu.selected_disjuncts.is_empty() || pu.query_part.is_empty() {
        return false;
    }
    if !pu.query_part.atoms().all(|a| query.contains(a)) {
        return false;
    }
    let disjuncts: Vec<&Csf> = pu.rule.head.disjuncts().collect();
    let target = pu.query_part.apply(&pu.mgu);
    for (&i, part) in &pu.selected_disjuncts {
        let Some(d) = disjuncts.get(i) else {
            return false;
        };
        if part.is_empty() || !part.atoms().all(|a| d.contains(a)) {
            return false;
        }
        if part.apply(&pu.mgu) != target {
            return false;
        }
    }

    let remainder_vars = query.difference(&pu.query_part).vars();
    let frontier = pu.rule.frontier();

    for v in remainder_vars.iter() {
        match pu.mgu.get(v) {
            None | Some(Term::Constant(_)) => {}
            Some(Term::Variable(u)) if u == v => {}
            Some(Term::Variable(u)) => {
                if !(frontier.contains(u) || frozen.contains(u)) {
                    return false;
                }
            }
        }
    }
    for v in pu.rule.existential_vars().iter() {
        if let Some(Term::Variable(u)) = pu.mgu.get(v) {
            if remainder_vars.contains(u) {
                return false;
            }
        }
    }
    true
}

/// One existential rewriting step: every piece unification of the query
/// with the single head disjunct yields the instantiated rule body extended
/// with the untouched query remainder, paired with its unification record.
///
/// pre: `rule` has exactly one head disjunct and is renamed apart from
/// `query`.
pub fn existential_step_detailed(
    rule: &Rule,
    query: &Csf,
    frozen: &VarSet,
) -> Vec<(Csf, PieceUnification)> {
    debug_assert!(
        rule.is_existential(),
        "existential step needs a one-disjunct head"
    );
    if rule.head.len() != 1 {
        return Vec::new();
    }
    piece_unifications(rule, query, &[0], frozen)
        .into_iter()
        .map(|pu| (pu.rewritten_body(query), pu))
        .collect()
}

/// The formulas produced by [`existential_step_detailed`], deduplicated.
pub fn existential_step(rule: &Rule, query: &Csf, frozen: &VarSet) -> BTreeSet<Csf> {
    existential_step_detailed(rule, query, frozen)
        .into_iter()
        .map(|(f, _)| f)
        .collect()
}

/// One disjunctive rewriting step: for every nonempty selection of head
/// disjuncts and every piece unification with it, the selected disjuncts
/// are resolved away and the survivors keep the instantiated body and query
/// remainder. The produced rule always has strictly fewer disjuncts;
/// selecting every disjunct yields a constraint. Produced rules carry no
/// label; callers assign one.
pub fn disjunctive_step_detailed(
    rule: &Rule,
    query: &Csf,
    frozen: &VarSet,
) -> Vec<(Rule, PieceUnification)> {
    let n = rule.head.len();
    if n == 0 {
        return Vec::new();
    }
    assert!(n < 63, "head too large for disjunct-subset enumeration");
    let mut out = Vec::new();
    for mask in 1u64..(1u64 << n) {
        let selected: Vec<usize> = (0..n).filter(|i| mask >> i & 1 == 1).collect();
        for pu in piece_unifications(rule, query, &selected, frozen) {
            let body = pu.rewritten_body(query);
            let head = pu.surviving_head();
            debug_assert!(head.len() < n, "selected disjuncts must be removed");
            out.push((Rule::new(body, head), pu));
        }
    }
    out
}

/// The rules produced by [`disjunctive_step_detailed`], deduplicated.
pub fn disjunctive_step(rule: &Rule, query: &Csf, frozen: &VarSet) -> BTreeSet<Rule> {
    disjunctive_step_detailed(rule, query, frozen)
        .into_iter()
        .map(|(r, _)| r)
        .collect()
}
