//! Terms, atoms, literals, substitutions, and most general unification.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

/// Set of variable names.
pub type VarSet = BTreeSet<String>;

/// A first-order term. There are no function symbols: a term is either a
/// variable or a constant, and the two draw from disjoint lexical spaces.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Term {
    Variable(String),
    Constant(String),
}

impl Term {
    pub fn var(name: impl Into<String>) -> Self {
        Term::Variable(name.into())
    }

    pub fn constant(name: impl Into<String>) -> Self {
        Term::Constant(name.into())
    }

    pub fn is_variable(&self) -> bool {
        matches!(self, Term::Variable(_))
    }

    pub fn is_constant(&self) -> bool {
        matches!(self, Term::Constant(_))
    }

    pub fn name(&self) -> &str {
        match self {
            Term::Variable(n) | Term::Constant(n) => n,
        }
    }

    pub fn as_variable(&self) -> Option<&str> {
        match self {
            Term::Variable(n) => Some(n),
            Term::Constant(_) => None,
        }
    }

    /// True when the term cannot be substituted: constants always, variables
    /// when their name is in `frozen`.
    pub fn is_rigid(&self, frozen: &VarSet) -> bool {
        match self {
            Term::Constant(_) => true,
            Term::Variable(v) => frozen.contains(v),
        }
    }
}

impl fmt::Display for Term {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// A predicate applied to an ordered argument list.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Atom {
    pub predicate: String,
    pub args: Vec<Term>,
}

impl Atom {
    pub fn new(predicate: impl Into<String>, args: Vec<Term>) -> Self {
        Atom {
            predicate: predicate.into(),
            args,
        }
    }

    pub fn arity(&self) -> usize {
        self.args.len()
    }

    pub fn is_ground(&self) -> bool {
        self.args.iter().all(Term::is_constant)
    }

    pub fn collect_vars(&self, out: &mut VarSet) {
        for t in &self.args {
            if let Term::Variable(v) = t {
                out.insert(v.clone());
            }
        }
    }

    pub fn vars(&self) -> VarSet {
        let mut out = VarSet::new();
        self.collect_vars(&mut out);
        out
    }
}

impl fmt::Display for Atom {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        // Propositional (zero-arity) atoms print bare, without parentheses.
        if self.args.is_empty() {
            return f.write_str(&self.predicate);
        }
        write!(f, "{}(", self.predicate)?;
        for (i, t) in self.args.iter().enumerate() {
            if i > 0 {
                f.write_str(",")?;
            }
            write!(f, "{t}")?;
        }
        f.write_str(")")
    }
}

/// A possibly negated atom. Negation only occurs in query bodies.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Literal {
    pub positive: bool,
    pub atom: Atom,
}

impl Literal {
    pub fn positive(atom: Atom) -> Self {
        Literal {
            positive: true,
            atom,
        }
    }

    pub fn negative(atom: Atom) -> Self {
        Literal {
            positive: false,
            atom,
        }
    }

    pub fn complement(&self) -> Self {
        Literal {
            positive: !self.positive,
            atom: self.atom.clone(),
        }
    }
}

impl fmt::Display for Literal {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if !self.positive {
            f.write_str("-")?;
        }
        write!(f, "{}", self.atom)
    }
}

/// A finite map from variables to terms. Identity bindings are never stored.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct Substitution {
    bindings: BTreeMap<String, Term>,
}

impl Substitution {
    pub fn new() -> Self {
        Substitution::default()
    }

    pub fn singleton(var: impl Into<String>, term: Term) -> Self {
        let mut s = Substitution::new();
        s.insert(var.into(), term);
        s
    }

    pub fn from_pairs(pairs: impl IntoIterator<Item = (String, Term)>) -> Self {
        let mut s = Substitution::new();
        for (v, t) in pairs {
            s.insert(v, t);
        }
        s
    }

    /// Inserts one binding, dropping it when it maps a variable to itself.
    pub fn insert(&mut self, var: String, term: Term) {
        if matches!(&term, Term::Variable(v) if *v == var) {
            self.bindings.remove(&var);
        } else {
            self.bindings.insert(var, term);
        }
    }

    pub fn get(&self, var: &str) -> Option<&Term> {
        self.bindings.get(var)
    }

    pub fn remove(&mut self, var: &str) {
        self.bindings.remove(var);
    }

    pub fn is_empty(&self) -> bool {
        self.bindings.is_empty()
    }

    pub fn len(&self) -> usize {
        self.bindings.len()
    }

    pub fn domain(&self) -> VarSet {
        self.bindings.keys().cloned().collect()
    }

    pub fn iter(&self) -> impl Iterator<Item = (&String, &Term)> {
        self.bindings.iter()
    }

    /// One-step image of a term.
    pub fn resolve(&self, t: &Term) -> Term {
        match t {
            Term::Variable(v) => self.bindings.get(v).cloned().unwrap_or_else(|| t.clone()),
            Term::Constant(_) => t.clone(),
        }
    }

    /// Sequential composition: applying the result equals applying `self`
    /// first and `other` second.
    pub fn compose(&self, other: &Substitution) -> Substitution {
        let mut out = Substitution::new();
        for (v, t) in &self.bindings {
            out.insert(v.clone(), t.apply(other));
        }
        for (v, t) in &other.bindings {
            if !self.bindings.contains_key(v) {
                out.insert(v.clone(), t.clone());
            }
        }
        out
    }

    /// True when every binding maps a variable to a variable and no two
    /// variables share an image.
    pub fn is_renaming(&self) -> bool {
        let mut seen = BTreeSet::new();
        self.bindings
            .values()
            .all(|t| t.is_variable() && seen.insert(t.clone()))
    }

    /// True when applying the substitution twice equals applying it once.
    pub fn is_idempotent(&self) -> bool {
        self.bindings.values().all(|t| match t {
            Term::Variable(v) => !self.bindings.contains_key(v),
            Term::Constant(_) => true,
        })
    }
}

/// Anything a substitution can be applied to, in one simultaneous pass.
pub trait Substitutable {
    fn apply(&self, s: &Substitution) -> Self;
}

impl Substitutable for Term {
    fn apply(&self, s: &Substitution) -> Self {
        s.resolve(self)
    }
}

impl Substitutable for Atom {
    fn apply(&self, s: &Substitution) -> Self {
        Atom {
            predicate: self.predicate.clone(),
            args: self.args.iter().map(|t| s.resolve(t)).collect(),
        }
    }
}

impl Substitutable for Literal {
    fn apply(&self, s: &Substitution) -> Self {
        Literal {
            positive: self.positive,
            atom: self.atom.apply(s),
        }
    }
}

impl<T: Substitutable> Substitutable for Vec<T> {
    fn apply(&self, s: &Substitution) -> Self {
        self.iter().map(|x| x.apply(s)).collect()
    }
}

/// Deterministic source of generated variable names `X0, X1, ...`.
///
/// Generated names live in the same lexical space as parsed variables, so
/// `fresh` skips over anything in `avoid` instead of assuming the space is
/// private.
#[derive(Clone, Debug)]
pub struct VarGen {
    next: u64,
}

impl VarGen {
    pub fn new() -> Self {
        VarGen { next: 0 }
    }

    pub fn with_start(start: u64) -> Self {
        VarGen { next: start }
    }

    pub fn fresh(&mut self, avoid: &VarSet) -> String {
        loop {
            let name = format!("X{}", self.next);
            self.next += 1;
            if !avoid.contains(&name) {
                return name;
            }
        }
    }
}

impl Default for VarGen {
    fn default() -> Self {
        VarGen::new()
    }
}

/// Renames the variables of `vars` that clash with `reserved` to fresh names,
/// returning the renaming. Fresh names avoid `reserved`, the formula's own
/// variables, and each other.
pub fn renaming_apart(vars: &VarSet, reserved: &VarSet, gen: &mut VarGen) -> Substitution {
    let mut avoid: VarSet = vars.union(reserved).cloned().collect();
    let mut renaming = Substitution::new();
    for v in vars {
        if reserved.contains(v) {
            let fresh = gen.fresh(&avoid);
            avoid.insert(fresh.clone());
            renaming.insert(v.clone(), Term::Variable(fresh));
        }
    }
    renaming
}

/// Partition of terms induced by a unification problem. Each class holds the
/// terms forced equal; a most general unifier maps every class member to one
/// chosen representative.
#[derive(Clone, Debug)]
pub struct TermClasses {
    classes: Vec<BTreeSet<Term>>,
}

impl TermClasses {
    pub fn classes(&self) -> &[BTreeSet<Term>] {
        &self.classes
    }

    /// Builds the unifier by electing, per class, the member with the lowest
    /// `rank` (ties broken by term order). Representatives are never bound,
    /// which keeps the result idempotent.
    pub fn substitution_with(&self, mut rank: impl FnMut(&Term) -> u8) -> Substitution {
        let mut theta = Substitution::new();
        for class in &self.classes {
            let rep = class
                .iter()
                .min_by(|a, b| rank(a).cmp(&rank(b)).then_with(|| a.cmp(b)))
                .expect("classes are non-empty")
                .clone();
            for member in class {
                if let Term::Variable(v) = member {
                    if *member != rep {
                        theta.insert(v.clone(), rep.clone());
                    }
                }
            }
        }
        theta
    }
}

/// Merges term equations into classes, failing when a class would contain two
/// distinct rigid terms (constants, or variables listed in `frozen`).
pub fn unify_equations(eqs: &[(Term, Term)], frozen: &VarSet) -> Option<TermClasses> {
    let mut index: BTreeMap<Term, usize> = BTreeMap::new();
    let mut parent: Vec<usize> = Vec::new();

    fn find(parent: &mut Vec<usize>, mut i: usize) -> usize {
        while parent[i] != i {
            parent[i] = parent[parent[i]];
            i = parent[i];
        }
        i
    }

    let mut id_of = |t: &Term, parent: &mut Vec<usize>| -> usize {
        if let Some(&i) = index.get(t) {
            return i;
        }
        let i = parent.len();
        parent.push(i);
        index.insert(t.clone(), i);
        i
    };

    let mut terms: Vec<Term> = Vec::new();
    for (a, b) in eqs {
        let ia = id_of(a, &mut parent);
        if ia == terms.len() {
            terms.push(a.clone());
        }
        let ib = id_of(b, &mut parent);
        if ib == terms.len() {
            terms.push(b.clone());
        }
        let (ra, rb) = (find(&mut parent, ia), find(&mut parent, ib));
        if ra != rb {
            parent[rb] = ra;
        }
    }

    let mut grouped: BTreeMap<usize, BTreeSet<Term>> = BTreeMap::new();
    for (t, &i) in index.iter() {
        let r = find(&mut parent, i);
        grouped.entry(r).or_default().insert(t.clone());
    }

    let classes: Vec<BTreeSet<Term>> = grouped.into_values().collect();
    for class in &classes {
        if class.iter().filter(|t| t.is_rigid(frozen)).count() > 1 {
            return None;
        }
    }
    Some(TermClasses { classes })
}

fn atom_equations(atoms: &[&Atom]) -> Option<Vec<(Term, Term)>> {
    let first = atoms.first()?;
    let mut eqs = Vec::new();
    for other in &atoms[1..] {
        if other.predicate != first.predicate || other.arity() != first.arity() {
            return None;
        }
        for (a, b) in first.args.iter().zip(&other.args) {
            eqs.push((a.clone(), b.clone()));
        }
    }
    Some(eqs)
}

/// Most general unifier of a set of atoms, or `None` when they do not unify.
/// Representatives prefer constants, then the lexically least variable.
pub fn unify_atoms<'a>(atoms: impl IntoIterator<Item = &'a Atom>) -> Option<Substitution> {
    let atoms: Vec<&Atom> = atoms.into_iter().collect();
    if atoms.is_empty() {
        return Some(Substitution::new());
    }
    let frozen = VarSet::new();
    let eqs = atom_equations(&atoms)?;
    let classes = unify_equations(&eqs, &frozen)?;
    Some(classes.substitution_with(|t| if t.is_constant() { 0 } else { 1 }))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn v(n: &str) -> Term {
        Term::var(n)
    }

    fn c(n: &str) -> Term {
        Term::constant(n)
    }

    fn atom(p: &str, args: &[Term]) -> Atom {
        Atom::new(p, args.to_vec())
    }

    #[test]
    fn apply_replaces_only_bound_variables() {
        let s = Substitution::from_pairs([("X".into(), c("a"))]);
        assert_eq!(
            atom("p", &[v("X"), v("Y")]).apply(&s),
            atom("p", &[c("a"), v("Y")])
        );
        assert_eq!(atom("p", &[c("b")]).apply(&s), atom("p", &[c("b")]));
        assert_eq!(v("Z").apply(&Substitution::new()), v("Z"));
    }

    #[test]
    fn apply_is_simultaneous() {
        // X goes to Y in one pass even though Y itself is bound.
        let s = Substitution::from_pairs([("X".into(), v("Y")), ("Y".into(), c("a"))]);
        assert_eq!(atom("p", &[v("X")]).apply(&s), atom("p", &[v("Y")]));
    }

    #[test]
    fn identity_bindings_are_dropped() {
        let mut s = Substitution::new();
        s.insert("X".into(), v("X"));
        assert!(s.is_empty());
    }

    #[test]
    fn compose_orders_application() {
        let s1 = Substitution::from_pairs([("X".into(), c("a"))]);
        let s2 = Substitution::from_pairs([("X".into(), c("b"))]);
        assert_eq!(
            s1.compose(&s2),
            Substitution::from_pairs([("X".into(), c("a"))])
        );

        let s1 = Substitution::from_pairs([("X".into(), v("Y"))]);
        let s2 = Substitution::from_pairs([("Y".into(), c("a"))]);
        assert_eq!(
            s1.compose(&s2),
            Substitution::from_pairs([("X".into(), c("a")), ("Y".into(), c("a"))])
        );

        let s = Substitution::from_pairs([("X".into(), c("a"))]);
        assert_eq!(s.compose(&Substitution::new()), s);
        assert_eq!(Substitution::new().compose(&s), s);
    }

    #[test]
    fn unify_binds_across_both_atoms() {
        let theta = unify_atoms([&atom("p", &[v("X"), c("a")]), &atom("p", &[c("b"), v("Y")])])
            .expect("unifiable");
        assert_eq!(theta.get("X"), Some(&c("b")));
        assert_eq!(theta.get("Y"), Some(&c("a")));
    }

    #[test]
    fn unify_rejects_constant_clash() {
        assert!(
            unify_atoms([&atom("p", &[v("X"), v("X")]), &atom("p", &[c("a"), c("b")])]).is_none()
        );
        assert!(unify_atoms([&atom("p", &[c("a")]), &atom("q", &[c("a")])]).is_none());
    }

    #[test]
    fn unify_merges_a_whole_set() {
        let a1 = atom("diabetic", &[v("Y")]);
        let a2 = atom("diabetic", &[v("Z")]);
        let a3 = atom("diabetic", &[v("X1")]);
        let theta = unify_atoms([&a1, &a2, &a3]).expect("unifiable");
        assert_eq!(theta.get("Y"), Some(&v("X1")));
        assert_eq!(theta.get("Z"), Some(&v("X1")));
        assert!(theta.is_idempotent());
    }

    #[test]
    fn frozen_variables_behave_like_constants() {
        let frozen: VarSet = ["X".to_string()].into();
        let eqs = vec![(v("X"), c("a"))];
        assert!(unify_equations(&eqs, &frozen).is_none());
        let eqs = vec![(v("X"), v("Y"))];
        let classes = unify_equations(&eqs, &frozen).expect("one class");
        let theta = classes.substitution_with(|t| if t.is_rigid(&frozen) { 0 } else { 1 });
        assert_eq!(theta.get("Y"), Some(&v("X")));
        assert_eq!(theta.get("X"), None);
    }

    #[test]
    fn renaming_apart_renames_exactly_the_clashes() {
        let mut gen = VarGen::new();
        let vars: VarSet = ["X".to_string()].into();
        let reserved: VarSet = ["X".to_string()].into();
        let r = renaming_apart(&vars, &reserved, &mut gen);
        assert_eq!(r.get("X"), Some(&v("X0")));

        let vars: VarSet = ["X".to_string(), "Y".to_string()].into();
        let r = renaming_apart(&vars, &VarSet::new(), &mut gen);
        assert!(r.is_empty());
    }

    #[test]
    fn renaming_apart_skips_colliding_fresh_names() {
        let mut gen = VarGen::new();
        let vars: VarSet = ["X0".to_string(), "X".to_string()].into();
        let reserved: VarSet = ["X".to_string(), "X0".to_string()].into();
        let r = renaming_apart(&vars, &reserved, &mut gen);
        // Both variables clash; neither may be renamed to a reserved name or
        // to the other's fresh name.
        let images: Vec<&Term> = [r.get("X").unwrap(), r.get("X0").unwrap()].into();
        assert_eq!(images.len(), 2);
        assert_ne!(images[0], images[1]);
        for t in images {
            assert!(!reserved.contains(t.name()));
        }
        assert!(r.is_renaming());
    }

    #[test]
    fn literal_complement_is_an_involution() {
        let l = Literal::negative(atom("p", &[v("X")]));
        assert_eq!(l.complement().complement(), l);
        assert!(l.complement().positive);
    }
}
