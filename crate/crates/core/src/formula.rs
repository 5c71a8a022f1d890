//! Set formulas over atoms: conjunctive (CSF) and disjunctive (DSF), their
//! hypergraph components, and homomorphism-based subsumption.

use std::collections::BTreeSet;
use std::fmt;

use crate::logic::{renaming_apart, Atom, Substitutable, Substitution, Term, VarGen, VarSet};

/// A conjunctive set formula: a set of atoms read as their conjunction.
/// The empty set is the always-true formula.
#[derive(Clone, Debug, Default, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Csf {
    atoms: BTreeSet<Atom>,
}

impl Csf {
    pub fn new() -> Self {
        Csf::default()
    }

    pub fn from_atoms(atoms: impl IntoIterator<Item = Atom>) -> Self {
        Csf {
            atoms: atoms.into_iter().collect(),
        }
    }

    pub fn atoms(&self) -> impl Iterator<Item = &Atom> {
        self.atoms.iter()
    }

    pub fn len(&self) -> usize {
        self.atoms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.atoms.is_empty()
    }

    pub fn contains(&self, atom: &Atom) -> bool {
        self.atoms.contains(atom)
    }

    pub fn insert(&mut self, atom: Atom) {
        self.atoms.insert(atom);
    }

    pub fn union(&self, other: &Csf) -> Csf {
        Csf {
            atoms: self.atoms.union(&other.atoms).cloned().collect(),
        }
    }

    pub fn difference(&self, other: &Csf) -> Csf {
        Csf {
            atoms: self.atoms.difference(&other.atoms).cloned().collect(),
        }
    }

    pub fn is_ground(&self) -> bool {
        self.atoms.iter().all(Atom::is_ground)
    }

    pub fn collect_vars(&self, out: &mut VarSet) {
        for a in &self.atoms {
            a.collect_vars(out);
        }
    }

    pub fn vars(&self) -> VarSet {
        let mut out = VarSet::new();
        self.collect_vars(&mut out);
        out
    }

    /// Number of distinct variables.
    pub fn cardinality(&self) -> usize {
        self.vars().len()
    }

    /// Number of atoms containing at least one variable.
    pub fn width(&self) -> usize {
        self.atoms.iter().filter(|a| !a.is_ground()).count()
    }

    /// Largest `cardinality` over connected components (0 when empty).
    pub fn connected_cardinality(&self) -> usize {
        connected_components(self)
            .components()
            .iter()
            .map(Csf::cardinality)
            .max()
            .unwrap_or(0)
    }

    /// Largest `width` over connected components (0 when empty).
    pub fn connected_width(&self) -> usize {
        connected_components(self)
            .components()
            .iter()
            .map(Csf::width)
            .max()
            .unwrap_or(0)
    }

    /// Returns a copy with variables clashing with `reserved` renamed fresh,
    /// along with the renaming used.
    pub fn renamed_apart(&self, reserved: &VarSet, gen: &mut VarGen) -> (Csf, Substitution) {
        let renaming = renaming_apart(&self.vars(), reserved, gen);
        (self.apply(&renaming), renaming)
    }
}

impl Substitutable for Csf {
    fn apply(&self, s: &Substitution) -> Self {
        Csf {
            atoms: self.atoms.iter().map(|a| a.apply(s)).collect(),
        }
    }
}

impl FromIterator<Atom> for Csf {
    fn from_iter<I: IntoIterator<Item = Atom>>(iter: I) -> Self {
        Csf::from_atoms(iter)
    }
}

impl fmt::Display for Csf {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (i, a) in self.atoms.iter().enumerate() {
            if i > 0 {
                f.write_str(", ")?;
            }
            write!(f, "{a}")?;
        }
        Ok(())
    }
}

/// A disjunctive set formula: a set of CSFs read as their disjunction.
/// The empty set is the always-false formula.
#[derive(Clone, Debug, Default, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Dsf {
    disjuncts: BTreeSet<Csf>,
}

impl Dsf {
    pub fn new() -> Self {
        Dsf::default()
    }

    pub fn from_disjuncts(disjuncts: impl IntoIterator<Item = Csf>) -> Self {
        Dsf {
            disjuncts: disjuncts.into_iter().collect(),
        }
    }

    pub fn disjuncts(&self) -> impl Iterator<Item = &Csf> {
        self.disjuncts.iter()
    }

    pub fn len(&self) -> usize {
        self.disjuncts.len()
    }

    pub fn is_empty(&self) -> bool {
        self.disjuncts.is_empty()
    }

    pub fn collect_vars(&self, out: &mut VarSet) {
        for d in &self.disjuncts {
            d.collect_vars(out);
        }
    }

    pub fn vars(&self) -> VarSet {
        let mut out = VarSet::new();
        self.collect_vars(&mut out);
        out
    }

    pub fn atoms(&self) -> impl Iterator<Item = &Atom> {
        self.disjuncts.iter().flat_map(Csf::atoms)
    }

    pub fn connected_cardinality(&self) -> usize {
        self.disjuncts
            .iter()
            .map(Csf::connected_cardinality)
            .max()
            .unwrap_or(0)
    }

    pub fn connected_width(&self) -> usize {
        self.disjuncts
            .iter()
            .map(Csf::connected_width)
            .max()
            .unwrap_or(0)
    }
}

impl Substitutable for Dsf {
    fn apply(&self, s: &Substitution) -> Self {
        Dsf {
            disjuncts: self.disjuncts.iter().map(|d| d.apply(s)).collect(),
        }
    }
}

impl FromIterator<Csf> for Dsf {
    fn from_iter<I: IntoIterator<Item = Csf>>(iter: I) -> Self {
        Dsf::from_disjuncts(iter)
    }
}

impl fmt::Display for Dsf {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.disjuncts.len() {
            0 => f.write_str("!"),
            1 => write!(f, "{}", self.disjuncts.iter().next().expect("one disjunct")),
            _ => {
                f.write_str("[")?;
                for (i, d) in self.disjuncts.iter().enumerate() {
                    if i > 0 {
                        f.write_str(", ")?;
                    }
                    if d.len() > 1 {
                        write!(f, "({d})")?;
                    } else {
                        write!(f, "{d}")?;
                    }
                }
                f.write_str("]")
            }
        }
    }
}

/// The connected components of a CSF, viewing atoms as hyperedges over their
/// variables. Ground atoms are isolated and form singleton components.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ComponentPartition {
    components: Vec<Csf>,
}

impl ComponentPartition {
    pub fn components(&self) -> &[Csf] {
        &self.components
    }

    pub fn len(&self) -> usize {
        self.components.len()
    }

    pub fn is_empty(&self) -> bool {
        self.components.is_empty()
    }
}

/// Splits a CSF into connected components, ordered by their smallest atom.
pub fn connected_components(f: &Csf) -> ComponentPartition {
    let atoms: Vec<&Atom> = f.atoms().collect();
    let n = atoms.len();
    let mut parent: Vec<usize> = (0..n).collect();

    fn find(parent: &mut Vec<usize>, mut i: usize) -> usize {
        while parent[i] != i {
            parent[i] = parent[parent[i]];
            i = parent[i];
        }
        i
    }

    // Two atoms land in one component when they share a variable.
    let mut owner: std::collections::BTreeMap<&str, usize> = Default::default();
    for (i, atom) in atoms.iter().enumerate() {
        for t in &atom.args {
            if let Term::Variable(v) = t {
                match owner.get(v.as_str()) {
                    Some(&j) => {
                        let (ri, rj) = (find(&mut parent, i), find(&mut parent, j));
                        if ri != rj {
                            parent[rj] = ri;
                        }
                    }
                    None => {
                        owner.insert(v, i);
                    }
                }
            }
        }
    }

    let mut grouped: std::collections::BTreeMap<usize, Csf> = Default::default();
    for (i, atom) in atoms.iter().enumerate() {
        let r = find(&mut parent, i);
        grouped.entry(r).or_default().insert((*atom).clone());
    }

    let mut components: Vec<Csf> = grouped.into_values().collect();
    components.sort_by(|a, b| a.atoms().next().cmp(&b.atoms().next()));
    ComponentPartition { components }
}

struct HomSearch<'a> {
    src: Vec<&'a Atom>,
    dst: &'a Csf,
    frozen: &'a VarSet,
    all: bool,
    found: Vec<Substitution>,
}

impl<'a> HomSearch<'a> {
    fn match_term(
        &self,
        binding: &mut Substitution,
        from: &Term,
        to: &Term,
    ) -> Option<Option<String>> {
        match from {
            Term::Constant(_) => (from == to).then_some(None),
            Term::Variable(v) if self.frozen.contains(v) => (from == to).then_some(None),
            Term::Variable(v) => match binding.get(v) {
                Some(img) => (img == to).then_some(None),
                None => {
                    binding.insert(v.clone(), to.clone());
                    Some(Some(v.clone()))
                }
            },
        }
    }

    fn extend(&mut self, pos: usize, binding: &mut Substitution) -> bool {
        let Some(atom) = self.src.get(pos).map(|a| (*a).clone()) else {
            self.found.push(binding.clone());
            return !self.all;
        };
        let candidates: Vec<Atom> = self
            .dst
            .atoms()
            .filter(|c| c.predicate == atom.predicate && c.arity() == atom.arity())
            .cloned()
            .collect();
        for cand in candidates {
            let mut bound_here: Vec<String> = Vec::new();
            let mut ok = true;
            for (from, to) in atom.args.iter().zip(&cand.args) {
                match self.match_term(binding, from, to) {
                    Some(Some(v)) => bound_here.push(v),
                    Some(None) => {}
                    None => {
                        ok = false;
                        break;
                    }
                }
            }
            if ok && self.extend(pos + 1, binding) {
                return true;
            }
            for v in bound_here {
                binding.remove(&v);
            }
        }
        false
    }

    fn run(mut self) -> Vec<Substitution> {
        // Most constrained atom first: fewest candidate targets.
        let mut order: Vec<&Atom> = std::mem::take(&mut self.src);
        let count = |a: &Atom| {
            self.dst
                .atoms()
                .filter(|c| c.predicate == a.predicate && c.arity() == a.arity())
                .count()
        };
        order.sort_by_key(|a| (count(a), (*a).clone()));
        self.src = order;
        let mut binding = Substitution::new();
        self.extend(0, &mut binding);
        self.found
    }
}

/// Finds a homomorphism mapping every atom of `src` into `dst`. Variables in
/// `frozen` may only map to themselves; constants are fixed.
pub fn find_homomorphism(src: &Csf, dst: &Csf, frozen: &VarSet) -> Option<Substitution> {
    let search = HomSearch {
        src: src.atoms().collect(),
        dst,
        frozen,
        all: false,
        found: Vec::new(),
    };
    search.run().into_iter().next()
}

/// Enumerates every homomorphism from `src` into `dst`.
pub fn all_homomorphisms(src: &Csf, dst: &Csf, frozen: &VarSet) -> Vec<Substitution> {
    let search = HomSearch {
        src: src.atoms().collect(),
        dst,
        frozen,
        all: true,
        found: Vec::new(),
    };
    search.run()
}

/// `general` subsumes `specific` when some homomorphism maps it into
/// `specific`; every model of the specific formula then satisfies the general
/// one.
pub fn subsumes(general: &Csf, specific: &Csf, frozen: &VarSet) -> bool {
    find_homomorphism(general, specific, frozen).is_some()
}

/// Entailment of a conjunctive query by a fact set: the facts' variables name
/// unknown individuals, so they are frozen as fresh constants before the
/// homomorphism test.
pub fn facts_entail(facts: &Csf, query: &Csf) -> bool {
    let frozen_facts = freeze_variables(facts, "_:f");
    find_homomorphism(query, &frozen_facts, &VarSet::new()).is_some()
}

/// Replaces each variable by a fresh constant with the given prefix. The
/// prefix is expected to come from a lexical space the parser cannot produce.
pub fn freeze_variables(f: &Csf, prefix: &str) -> Csf {
    let vars = f.vars();
    let s = Substitution::from_pairs(
        vars.iter()
            .enumerate()
            .map(|(i, v)| (v.clone(), Term::constant(format!("{prefix}{i}")))),
    );
    f.apply(&s)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::logic::Term;

    fn v(n: &str) -> Term {
        Term::var(n)
    }

    fn c(n: &str) -> Term {
        Term::constant(n)
    }

    fn atom(p: &str, args: &[Term]) -> Atom {
        Atom::new(p, args.to_vec())
    }

    fn csf(atoms: &[Atom]) -> Csf {
        Csf::from_atoms(atoms.iter().cloned())
    }

    #[test]
    fn duplicates_collapse() {
        let f = csf(&[atom("p", &[v("X")]), atom("p", &[v("X")])]);
        assert_eq!(f.len(), 1);
    }

    #[test]
    fn components_split_on_shared_variables() {
        let f = csf(&[
            atom("p", &[v("X"), v("Y")]),
            atom("q", &[v("Y"), v("Z")]),
            atom("r", &[v("U")]),
        ]);
        let parts = connected_components(&f);
        assert_eq!(parts.len(), 2);
        assert_eq!(parts.components()[0].len(), 2);
        assert_eq!(parts.components()[1], csf(&[atom("r", &[v("U")])]));
    }

    #[test]
    fn ground_atoms_are_singleton_components() {
        let f = csf(&[
            atom("p", &[c("a")]),
            atom("p", &[c("b")]),
            atom("q", &[v("X")]),
        ]);
        let parts = connected_components(&f);
        assert_eq!(parts.len(), 3);
        for comp in parts.components() {
            assert_eq!(comp.len(), 1);
        }
    }

    #[test]
    fn empty_formula_has_no_components() {
        assert!(connected_components(&Csf::new()).is_empty());
    }

    #[test]
    fn cardinality_and_width_count_vars_and_nonground_atoms() {
        let f = csf(&[
            atom("p", &[v("X"), v("Y")]),
            atom("q", &[c("a")]),
            atom("r", &[v("X")]),
        ]);
        assert_eq!(f.cardinality(), 2);
        assert_eq!(f.width(), 2);
        assert_eq!(Csf::new().cardinality(), 0);
        assert_eq!(Csf::new().width(), 0);
    }

    #[test]
    fn connected_measures_take_component_maxima() {
        let f = csf(&[
            atom("p", &[v("X"), v("Y")]),
            atom("q", &[v("Y"), v("Z")]),
            atom("r", &[v("U")]),
        ]);
        assert_eq!(f.connected_cardinality(), 3);
        assert_eq!(f.connected_width(), 2);

        let d = Dsf::from_disjuncts([f, csf(&[atom("s", &[v("A")])])]);
        assert_eq!(d.connected_cardinality(), 3);
        assert_eq!(Dsf::new().connected_cardinality(), 0);
    }

    #[test]
    fn connected_measures_ignore_added_ground_atoms() {
        let f = csf(&[atom("p", &[v("X"), v("Y")])]);
        let mut g = f.clone();
        g.insert(atom("fresh", &[c("k")]));
        assert_eq!(f.connected_cardinality(), g.connected_cardinality());
        assert_eq!(f.connected_width(), g.connected_width());
    }

    #[test]
    fn homomorphism_respects_constants_and_frozen_vars() {
        let src = csf(&[atom("p", &[v("X"), c("a")])]);
        let dst = csf(&[atom("p", &[c("b"), c("a")])]);
        assert!(find_homomorphism(&src, &dst, &VarSet::new()).is_some());

        let dst_bad = csf(&[atom("p", &[c("b"), c("c")])]);
        assert!(find_homomorphism(&src, &dst_bad, &VarSet::new()).is_none());

        let frozen: VarSet = ["X".to_string()].into();
        assert!(find_homomorphism(&src, &dst, &frozen).is_none());
        let dst_same = csf(&[atom("p", &[v("X"), c("a")])]);
        assert!(find_homomorphism(&src, &dst_same, &frozen).is_some());
    }

    #[test]
    fn homomorphism_needs_consistent_images() {
        let src = csf(&[atom("p", &[v("X")]), atom("q", &[v("X")])]);
        let dst = csf(&[atom("p", &[c("a")]), atom("q", &[c("b")])]);
        assert!(find_homomorphism(&src, &dst, &VarSet::new()).is_none());
        let dst_ok = csf(&[atom("p", &[c("a")]), atom("q", &[c("a")])]);
        let theta = find_homomorphism(&src, &dst_ok, &VarSet::new()).unwrap();
        assert_eq!(theta.get("X"), Some(&c("a")));
    }

    #[test]
    fn all_homomorphisms_enumerates_every_target() {
        let src = csf(&[atom("p", &[v("X")])]);
        let dst = csf(&[atom("p", &[c("a")]), atom("p", &[c("b")])]);
        assert_eq!(all_homomorphisms(&src, &dst, &VarSet::new()).len(), 2);
    }

    #[test]
    fn subsumption_examples() {
        let general = csf(&[atom("diabetic", &[v("X1")])]);
        let specific = csf(&[
            atom("diabetic", &[v("Y")]),
            atom("parent", &[v("Y"), v("X")]),
        ]);
        assert!(subsumes(&general, &specific, &VarSet::new()));
        assert!(!subsumes(&specific, &general, &VarSet::new()));
        // The empty formula subsumes everything.
        assert!(subsumes(&Csf::new(), &general, &VarSet::new()));
    }

    #[test]
    fn fact_entailment_freezes_fact_variables() {
        let facts = csf(&[atom("p", &[v("X")])]);
        // An unknown individual does not witness a query about `a`.
        assert!(!facts_entail(&facts, &csf(&[atom("p", &[c("a")])])));
        // It does witness an existential query.
        assert!(facts_entail(&facts, &csf(&[atom("p", &[v("U")])])));
        let facts = csf(&[atom("p", &[c("a")])]);
        assert!(facts_entail(&facts, &csf(&[atom("p", &[v("U")])])));
    }

    #[test]
    fn fact_entailment_decomposes_over_components() {
        // Per-component agreement with the whole-formula check.
        let facts = csf(&[atom("p", &[c("a"), c("b")]), atom("r", &[c("c")])]);
        let query = csf(&[atom("p", &[v("X"), v("Y")]), atom("r", &[v("Z")])]);
        let whole = facts_entail(&facts, &query);
        let parts = connected_components(&query);
        let split = parts
            .components()
            .iter()
            .all(|comp| facts_entail(&facts, comp));
        assert!(whole && split);
    }
}
