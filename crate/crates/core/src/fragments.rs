//! Static rule classifiers that predict rewriting termination.
//!
//! Whether a rule set admits a finite rewriting for every query is
//! undecidable, but several syntactic fragments guarantee it. The
//! classifiers here decide membership in each fragment, and
//! [`is_fus_guaranteed`] combines them into a verdict: `GuaranteedFus`
//! when a known termination criterion applies to the whole set, otherwise
//! `Unknown` — never "no".

use std::collections::{BTreeMap, BTreeSet};

use crate::formula::connected_components;
use crate::logic::{Term, VarGen, VarSet};
use crate::rewrite::piece_unifications;
use crate::rules::Rule;

/// Positional variable marking used by the stickiness test.
///
/// A marked entry `(rule, body atom, argument)` addresses one variable
/// occurrence; body atoms are numbered in the formula's canonical order.
/// All occurrences of a variable are marked together, so a variable is
/// marked iff any of its positions is.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct StickyMarking {
    pub marked: BTreeSet<(usize, usize, usize)>,
    pub converged: bool,
}

impl StickyMarking {
    /// The marked variables of each rule's body.
    pub fn marked_variables(&self, rules: &[Rule]) -> Vec<VarSet> {
        let mut out: Vec<VarSet> = vec![VarSet::new(); rules.len()];
        for &(ri, ai, pi) in &self.marked {
            let atom = rules[ri]
                .body
                .atoms()
                .nth(ai)
                .expect("marking addresses a body atom");
            if let Term::Variable(v) = &atom.args[pi] {
                out[ri].insert(v.clone());
            }
        }
        out
    }
}

/// Rule dependencies: an edge `(r1, r2)` means `r2` can use what `r1`
/// produces — some disjunct of `r1`'s head piece-unifies with `r2`'s body
/// read as a query.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct DependencyGraph {
    pub nodes: usize,
    pub edges: BTreeSet<(usize, usize)>,
}

impl DependencyGraph {
    /// True when no dependency cycle exists; a self-loop is a cycle.
    pub fn is_acyclic(&self) -> bool {
        // Kahn's algorithm: a cycle leaves nodes with positive in-degree.
        let mut indegree = vec![0usize; self.nodes];
        for &(_, to) in &self.edges {
            indegree[to] += 1;
        }
        let mut queue: Vec<usize> = (0..self.nodes).filter(|&n| indegree[n] == 0).collect();
        let mut seen = 0;
        while let Some(n) = queue.pop() {
            seen += 1;
            for &(from, to) in &self.edges {
                if from == n {
                    indegree[to] -= 1;
                    if indegree[to] == 0 {
                        queue.push(to);
                    }
                }
            }
        }
        seen == self.nodes
    }

    /// Number of weakly connected components (edge direction ignored).
    pub fn weak_components(&self) -> usize {
        let mut parent: Vec<usize> = (0..self.nodes).collect();
        fn root(parent: &mut [usize], mut x: usize) -> usize {
            while parent[x] != x {
                parent[x] = parent[parent[x]];
                x = parent[x];
            }
            x
        }
        for &(a, b) in &self.edges {
            let (ra, rb) = (root(&mut parent, a), root(&mut parent, b));
            if ra != rb {
                parent[ra] = rb;
            }
        }
        (0..self.nodes)
            .filter(|&n| root(&mut parent, n) == n)
            .count()
    }
}

/// Per-rule fragment membership.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct RuleFlags {
    pub linear: bool,
    pub disconnected: bool,
    pub domain_restricted: bool,
    pub cdr: bool,
    pub clr: bool,
    pub dder: bool,
    pub sticky_compatible: bool,
}

/// Termination verdict for a rule set.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum FusVerdict {
    GuaranteedFus,
    Unknown,
}

impl FusVerdict {
    pub fn as_str(self) -> &'static str {
        match self {
            FusVerdict::GuaranteedFus => "guaranteed-fus",
            FusVerdict::Unknown => "unknown",
        }
    }
}

impl std::fmt::Display for FusVerdict {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Combined classification of a rule set: per-rule flags, set-level
/// analyses, and the verdict with the criterion that justifies it.
#[derive(Clone, Debug)]
pub struct FusReport {
    pub rules: Vec<RuleFlags>,
    pub sticky: bool,
    pub agrd: bool,
    /// Informational: the dependency graph splits into several mutually
    /// independent parts, so fragment arguments may apply piecewise.
    pub independent_parts: bool,
    pub verdict: FusVerdict,
    /// The criterion justifying a `GuaranteedFus` verdict.
    pub criterion: Option<String>,
}

/// One body atom, i.e. a rule that joins nothing.
pub fn is_linear(r: &Rule) -> bool {
    r.body.len() == 1
}

/// Body and head share no variables (constants may still be shared).
pub fn is_disconnected(r: &Rule) -> bool {
    r.frontier().is_empty()
}

/// Every head atom contains none or all of the body's variables.
pub fn is_domain_restricted(r: &Rule) -> bool {
    let body_vars = r.body.vars();
    r.head.atoms().all(|h| {
        let shared: VarSet = h.vars().intersection(&body_vars).cloned().collect();
        shared.is_empty() || shared == body_vars
    })
}

/// Every head atom contains none or all of the variables of each body
/// connected component.
pub fn is_cdr(r: &Rule) -> bool {
    let parts = connected_components(&r.body);
    r.head.atoms().all(|h| {
        let head_vars = h.vars();
        parts.components().iter().all(|c| {
            let c_vars = c.vars();
            let shared: VarSet = head_vars.intersection(&c_vars).cloned().collect();
            shared.is_empty() || shared == c_vars
        })
    })
}

/// Every head atom either has no body variables, or draws them from a
/// single one-atom body component.
pub fn is_clr(r: &Rule) -> bool {
    let parts = connected_components(&r.body);
    let body_vars = r.body.vars();
    r.head.atoms().all(|h| {
        let shared: VarSet = h.vars().intersection(&body_vars).cloned().collect();
        if shared.is_empty() {
            return true;
        }
        parts
            .components()
            .iter()
            .any(|c| c.len() == 1 && shared.iter().all(|v| c.vars().contains(v)))
    })
}

/// Disconnected disjunction: no body component feeds two head disjuncts.
pub fn is_dder(r: &Rule) -> bool {
    let parts = connected_components(&r.body);
    parts.components().iter().all(|c| {
        let c_vars = c.vars();
        let touched = r
            .head
            .disjuncts()
            .filter(|d| d.vars().intersection(&c_vars).next().is_some())
            .count();
        touched <= 1
    })
}

/// Computes the marked-variable positions of a rule set.
///
/// Phase one marks every body variable that misses at least one head atom
/// of its own rule. Phase two propagates: while some marked occurrence
/// sits at a predicate position that also appears in some rule's head,
/// the variable at that head position becomes marked in that rule's body.
/// The fixpoint always exists since positions are finite.
pub fn sticky_marking(rules: &[Rule]) -> StickyMarking {
    let bodies: Vec<Vec<&crate::logic::Atom>> =
        rules.iter().map(|r| r.body.atoms().collect()).collect();
    let mut marked_vars: Vec<VarSet> = vec![VarSet::new(); rules.len()];
    for (ri, rule) in rules.iter().enumerate() {
        let head_atoms: Vec<VarSet> = rule.head.atoms().map(|a| a.vars()).collect();
        for v in rule.body.vars() {
            if head_atoms.iter().any(|h| !h.contains(&v)) {
                marked_vars[ri].insert(v);
            }
        }
    }
    loop {
        let mut positions: BTreeSet<(&str, usize, usize)> = BTreeSet::new();
        for (ri, atoms) in bodies.iter().enumerate() {
            for atom in atoms {
                for (pi, term) in atom.args.iter().enumerate() {
                    if let Term::Variable(v) = term {
                        if marked_vars[ri].contains(v) {
                            positions.insert((atom.predicate.as_str(), atom.arity(), pi));
                        }
                    }
                }
            }
        }
        let mut changed = false;
        for (ri, rule) in rules.iter().enumerate() {
            for atom in rule.head.atoms() {
                for (pi, term) in atom.args.iter().enumerate() {
                    if let Term::Variable(v) = term {
                        if positions.contains(&(atom.predicate.as_str(), atom.arity(), pi))
                            && rule.body.vars().contains(v)
                            && marked_vars[ri].insert(v.clone())
                        {
                            changed = true;
                        }
                    }
                }
            }
        }
        if !changed {
            break;
        }
    }
    let mut marked = BTreeSet::new();
    for (ri, atoms) in bodies.iter().enumerate() {
        for (ai, atom) in atoms.iter().enumerate() {
            for (pi, term) in atom.args.iter().enumerate() {
                if let Term::Variable(v) = term {
                    if marked_vars[ri].contains(v) {
                        marked.insert((ri, ai, pi));
                    }
                }
            }
        }
    }
    StickyMarking {
        marked,
        converged: true,
    }
}

fn occurrence_counts(rule: &Rule) -> BTreeMap<&str, usize> {
    let mut counts: BTreeMap<&str, usize> = BTreeMap::new();
    for atom in rule.body.atoms() {
        for term in &atom.args {
            if let Term::Variable(v) = term {
                *counts.entry(v.as_str()).or_default() += 1;
            }
        }
    }
    counts
}

/// Every marked variable occurs at most once in its rule's body.
pub fn is_sticky(rules: &[Rule]) -> bool {
    let marking = sticky_marking(rules);
    let marked = marking.marked_variables(rules);
    rules.iter().zip(&marked).all(|(rule, vars)| {
        let counts = occurrence_counts(rule);
        vars.iter()
            .all(|v| counts.get(v.as_str()).copied().unwrap_or(0) <= 1)
    })
}

/// Builds the rule dependency graph: `r2` depends on `r1` when some
/// disjunct of `r1`'s head admits a piece-unification with `r2`'s body
/// read as a single-atom-set query.
pub fn dependency_graph(rules: &[Rule]) -> DependencyGraph {
    let no_frozen = VarSet::new();
    let mut edges = BTreeSet::new();
    for (i, producer) in rules.iter().enumerate() {
        if producer.head.is_empty() {
            continue;
        }
        for (j, consumer) in rules.iter().enumerate() {
            if consumer.body.is_empty() {
                continue;
            }
            let query = &consumer.body;
            let mut gen = VarGen::new();
            let (renamed, _) = producer.renamed_apart(&query.vars(), &mut gen);
            let depends = (0..renamed.head.len())
                .any(|d| !piece_unifications(&renamed, query, &[d], &no_frozen).is_empty());
            if depends {
                edges.insert((i, j));
            }
        }
    }
    DependencyGraph {
        nodes: rules.len(),
        edges,
    }
}

/// True when the dependency graph has no cycle.
pub fn is_agrd(rules: &[Rule]) -> bool {
    dependency_graph(rules).is_acyclic()
}

fn pure_flags(r: &Rule) -> (bool, bool, bool, bool, bool, bool) {
    (
        is_linear(r),
        is_disconnected(r),
        is_domain_restricted(r),
        is_cdr(r),
        is_clr(r),
        is_dder(r),
    )
}

/// The uniform-class criterion for a set of existential rules: the name
/// of the first fragment containing every rule, if any.
fn existential_criterion(rules: &[Rule]) -> Option<&'static str> {
    if rules.iter().all(is_linear) {
        Some("linear")
    } else if rules.iter().all(is_disconnected) {
        Some("disconnected")
    } else if rules.iter().all(is_domain_restricted) {
        Some("domain-restricted")
    } else if rules.iter().all(is_cdr) {
        Some("connected-domain-restricted")
    } else if rules.iter().all(is_clr) {
        Some("connected-linear")
    } else if is_sticky(rules) {
        Some("sticky")
    } else if is_agrd(rules) {
        Some("acyclic-dependencies")
    } else {
        None
    }
}

/// Classifies a rule set and reports whether a known criterion guarantees
/// that rewriting terminates for every query.
///
/// The verdict is `GuaranteedFus` when (a) the set is purely existential
/// and fits one fragment uniformly, (b) the existential part satisfies
/// (a) and every disjunctive rule is disconnected, or (c) every rule has
/// disconnected disjunction and the whole set is uniformly
/// connected-domain-restricted or connected-linear. Anything else is
/// `Unknown` — membership of the terminating class is undecidable, so no
/// negative answer is ever given.
pub fn is_fus_guaranteed(rules: &[Rule]) -> FusReport {
    let marking = sticky_marking(rules);
    let marked = marking.marked_variables(rules);
    let flags: Vec<RuleFlags> = rules
        .iter()
        .zip(&marked)
        .map(|(r, vars)| {
            let (linear, disconnected, domain_restricted, cdr, clr, dder) = pure_flags(r);
            let counts = occurrence_counts(r);
            RuleFlags {
                linear,
                disconnected,
                domain_restricted,
                cdr,
                clr,
                dder,
                sticky_compatible: vars
                    .iter()
                    .all(|v| counts.get(v.as_str()).copied().unwrap_or(0) <= 1),
            }
        })
        .collect();
    let sticky = flags.iter().all(|f| f.sticky_compatible);
    let graph = dependency_graph(rules);
    let agrd = graph.is_acyclic();
    let independent_parts = rules.len() > 1 && graph.weak_components() > 1;

    let disjunctive: Vec<&Rule> = rules.iter().filter(|r| r.is_disjunctive()).collect();
    let existential: Vec<Rule> = rules
        .iter()
        .filter(|r| r.is_existential())
        .cloned()
        .collect();

    let criterion: Option<String> = if disjunctive.is_empty() {
        existential_criterion(rules).map(|c| format!("every rule is {c}"))
    } else if disjunctive.iter().all(|r| is_disconnected(r))
        && (existential.is_empty() || existential_criterion(&existential).is_some())
    {
        Some(match existential_criterion(&existential) {
            Some(c) if !existential.is_empty() => {
                format!("every disjunctive rule is disconnected and every existential rule is {c}")
            }
            _ => "every disjunctive rule is disconnected".to_string(),
        })
    } else if flags.iter().all(|f| f.dder && f.cdr) {
        Some("disconnected disjunction with connected-domain-restricted rules".to_string())
    } else if flags.iter().all(|f| f.dder && f.clr) {
        Some("disconnected disjunction with connected-linear rules".to_string())
    } else {
        None
    };

    let verdict = if criterion.is_some() {
        FusVerdict::GuaranteedFus
    } else {
        FusVerdict::Unknown
    };
    FusReport {
        rules: flags,
        sticky,
        agrd,
        independent_parts,
        verdict,
        criterion,
    }
}
