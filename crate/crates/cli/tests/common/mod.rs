//! Deterministic instance generators and process helpers shared by the CLI
//! and acceptance suites. Every stream is seeded, so separate tests can
//! replay exactly the same instances.

#![allow(dead_code)]

use std::collections::BTreeSet;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};
use std::time::Duration;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use ecompleto::rewrite::disjunctive_step_detailed;
use ecompleto::{
    is_cdr, is_clr, is_dder, is_fus_guaranteed, rewrite_k, Atom, Csf, Dsf, FusVerdict,
    PieceUnification, RewriteOptions, RewriteOutcome, Rule, Term, VarGen, VarSet,
};

pub const VARS: &[&str] = &["X", "Y", "Z", "U", "V", "W"];
pub const CONSTS: &[&str] = &["a", "b", "c"];
pub const PREDICATES: &[(&str, usize)] = &[("p", 1), ("q", 1), ("r", 2), ("s", 2)];

/// One randomized problem: rules, a positive query union, and candidate
/// fact sets to test against.
pub struct Instance {
    pub rules: Vec<Rule>,
    pub queries: BTreeSet<Csf>,
    pub dbs: Vec<Csf>,
}

pub fn gen_term(rng: &mut ChaCha8Rng, ground: bool) -> Term {
    if ground || rng.gen_bool(0.25) {
        Term::constant(*CONSTS.choose(rng).expect("nonempty"))
    } else {
        Term::var(*VARS.choose(rng).expect("nonempty"))
    }
}

pub fn gen_atom(rng: &mut ChaCha8Rng, ground: bool) -> Atom {
    let &(pred, arity) = PREDICATES.choose(rng).expect("nonempty");
    Atom::new(pred, (0..arity).map(|_| gen_term(rng, ground)).collect())
}

pub fn gen_csf(rng: &mut ChaCha8Rng, max_atoms: usize, ground: bool) -> Csf {
    let n = rng.gen_range(1..=max_atoms);
    Csf::from_atoms((0..n).map(|_| gen_atom(rng, ground)))
}

/// An arbitrary rule: one or two body atoms, one or two head disjuncts of
/// one or two atoms each.
pub fn gen_rule(rng: &mut ChaCha8Rng) -> Rule {
    let body = gen_csf(rng, 2, false);
    let disjuncts = rng.gen_range(1..=2);
    let head = Dsf::from_disjuncts((0..disjuncts).map(|_| gen_csf(rng, 2, false)));
    Rule {
        label: None,
        body,
        head,
    }
}

/// A linear rule: exactly one body atom, possibly disjunctive head.
pub fn gen_linear_rule(rng: &mut ChaCha8Rng) -> Rule {
    let body = Csf::from_atoms([gen_atom(rng, false)]);
    let disjuncts = rng.gen_range(1..=2);
    let head = Dsf::from_disjuncts((0..disjuncts).map(|_| gen_csf(rng, 2, false)));
    Rule {
        label: None,
        body,
        head,
    }
}

fn atom_over(rng: &mut ChaCha8Rng, var: &str) -> Atom {
    let &(pred, arity) = PREDICATES.choose(rng).expect("nonempty");
    Atom::new(pred, (0..arity).map(|_| Term::var(var)).collect())
}

fn disjunct_over(rng: &mut ChaCha8Rng, var: &str, fresh: &str) -> Csf {
    let n = rng.gen_range(1..=2);
    Csf::from_atoms((0..n).map(|_| {
        let &(pred, arity) = PREDICATES.choose(rng).expect("nonempty");
        let args = (0..arity)
            .map(|_| {
                if rng.gen_bool(0.6) {
                    Term::var(var)
                } else if rng.gen_bool(0.5) {
                    Term::var(fresh)
                } else {
                    Term::constant(*CONSTS.choose(rng).expect("nonempty"))
                }
            })
            .collect();
        Atom::new(pred, args)
    }))
}

/// A candidate rule whose head disjuncts draw on pairwise distinct body
/// components; callers still filter with the real classifiers.
pub fn gen_dder_candidate(rng: &mut ChaCha8Rng) -> Rule {
    let body = Csf::from_atoms([atom_over(rng, "X"), atom_over(rng, "Y")]);
    let first = disjunct_over(rng, "X", "Z1");
    let head = if rng.gen_bool(0.7) {
        Dsf::from_disjuncts([first, disjunct_over(rng, "Y", "Z2")])
    } else {
        Dsf::from_disjuncts([first])
    };
    Rule {
        label: None,
        body,
        head,
    }
}

pub fn gen_ruleset(rng: &mut ChaCha8Rng) -> Vec<Rule> {
    let n = rng.gen_range(1..=3);
    (0..n).map(|_| gen_rule(rng)).collect()
}

pub fn gen_query(rng: &mut ChaCha8Rng) -> Csf {
    gen_csf(rng, 3, false)
}

pub fn gen_facts(rng: &mut ChaCha8Rng) -> Csf {
    gen_csf(rng, 4, true)
}

fn gen_queries(rng: &mut ChaCha8Rng) -> BTreeSet<Csf> {
    let n = rng.gen_range(1..=2);
    (0..n).map(|_| gen_query(rng)).collect()
}

/// Budgeted options with the audit trail on, shared by the suites.
pub fn audit_opts(max_iterations: u32, timeout_secs: u64) -> RewriteOptions {
    RewriteOptions {
        k: Some(2),
        max_iterations,
        timeout: Some(Duration::from_secs(timeout_secs)),
        prune: true,
        audit: true,
        var_start: 0,
    }
}

/// 200 unconstrained tiny instances for the soundness suite.
pub fn soundness_instances() -> Vec<Instance> {
    let mut rng = ChaCha8Rng::seed_from_u64(0xEC03);
    (0..200)
        .map(|_| Instance {
            rules: gen_ruleset(&mut rng),
            queries: gen_queries(&mut rng),
            dbs: vec![gen_facts(&mut rng)],
        })
        .collect()
}

/// 100 instances whose rule sets the classifier vouches for, each with
/// three candidate fact sets.
pub fn completeness_instances() -> Vec<Instance> {
    let mut rng = ChaCha8Rng::seed_from_u64(0xEC04);
    let mut out = Vec::new();
    while out.len() < 100 {
        let rules = gen_ruleset(&mut rng);
        if is_fus_guaranteed(&rules).verdict != FusVerdict::GuaranteedFus {
            continue;
        }
        let queries = gen_queries(&mut rng);
        let dbs = (0..3).map(|_| gen_facts(&mut rng)).collect();
        out.push(Instance {
            rules,
            queries,
            dbs,
        });
    }
    out
}

/// 50 purely linear (one body atom) rule sets with atomic queries.
pub fn linear_sets() -> Vec<Instance> {
    let mut rng = ChaCha8Rng::seed_from_u64(0xEC05);
    (0..50)
        .map(|_| {
            let n = rng.gen_range(1..=3);
            let rules = (0..n).map(|_| gen_linear_rule(&mut rng)).collect();
            let q = rng.gen_range(1..=2);
            let queries = (0..q)
                .map(|_| Csf::from_atoms([gen_atom(&mut rng, false)]))
                .collect();
            Instance {
                rules,
                queries,
                dbs: Vec::new(),
            }
        })
        .collect()
}

fn filtered_sets(seed: u64, keep: impl Fn(&Rule) -> bool) -> Vec<Instance> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = Vec::new();
    while out.len() < 50 {
        let n = rng.gen_range(1..=2);
        let rules: Vec<Rule> = (0..n).map(|_| gen_dder_candidate(&mut rng)).collect();
        if !rules.iter().all(|r| is_dder(r) && keep(r)) {
            continue;
        }
        let queries = gen_queries(&mut rng);
        out.push(Instance {
            rules,
            queries,
            dbs: Vec::new(),
        });
    }
    out
}

pub fn dder_cdr_sets() -> Vec<Instance> {
    filtered_sets(0xEC15, is_cdr)
}

pub fn dder_clr_sets() -> Vec<Instance> {
    filtered_sets(0xEC25, is_clr)
}

/// At least 500 individual disjunctive rewriting steps taken on rules with
/// disconnected disjunction: (unifier, source query, produced rule).
pub fn dder_steps() -> Vec<(PieceUnification, Csf, Rule)> {
    let mut rng = ChaCha8Rng::seed_from_u64(0xEC35);
    let frozen = VarSet::new();
    let mut gen = VarGen::new();
    let mut steps = Vec::new();
    while steps.len() < 500 {
        let rule = gen_dder_candidate(&mut rng);
        if !is_dder(&rule) {
            continue;
        }
        let query = gen_query(&mut rng);
        let (rule, _) = rule.renamed_apart(&query.vars(), &mut gen);
        for (produced, pu) in disjunctive_step_detailed(&rule, &query, &frozen) {
            steps.push((pu, query.clone(), produced));
        }
    }
    steps
}

/// Runs the full rewriting on each instance with no frozen variables.
pub fn rewrite_instances(instances: &[Instance], opts: &RewriteOptions) -> Vec<RewriteOutcome> {
    let frozen = VarSet::new();
    instances
        .iter()
        .map(|inst| rewrite_k(&inst.rules, &inst.queries, &frozen, opts))
        .collect()
}

// Process-level helpers for driving the installed binary.

pub fn bin() -> &'static str {
    env!("CARGO_BIN_EXE_ecompleto")
}

pub fn run_cli(args: &[&str]) -> Output {
    Command::new(bin())
        .args(args)
        .output()
        .expect("binary runs")
}

pub fn run_cli_env(args: &[&str], envs: &[(&str, &str)]) -> Output {
    let mut cmd = Command::new(bin());
    cmd.args(args);
    for (k, v) in envs {
        cmd.env(k, v);
    }
    cmd.output().expect("binary runs")
}

pub fn write_file(dir: &Path, name: &str, content: &str) -> PathBuf {
    let path = dir.join(name);
    std::fs::write(&path, content).expect("test file written");
    path
}

pub fn stdout_of(out: &Output) -> String {
    String::from_utf8(out.stdout.clone()).expect("utf-8 stdout")
}

pub fn stderr_of(out: &Output) -> String {
    String::from_utf8(out.stderr.clone()).expect("utf-8 stderr")
}

// Document corpus for the round-trip criterion, the two wire-format doc
// lines included verbatim.

pub fn document_corpus() -> Vec<String> {
    let handwritten = [
        "",
        "p(a).",
        "[f1] p(a).",
        "p(a), q(b), r(a,b).",
        "knows(alice42, bob_7).",
        "age(alice, 29).",
        "q(X) :- p(X).",
        "[r1] q(X) :- p(X).",
        "bigCity(X) :- city(X), hasAirport(X).",
        "q(X,Z) :- p(X).",
        "organism(Z), ancestor(Z,X), ancestor(Z,Y) :- organism(X), organism(Y).",
        "[disj. rule] [leaf(X), (inner_node(X), edge(X,Y))] :- node(X).",
        "[q neg] ? :- person(X), -marriedTo(X,Y). ",
        "[guard] [owned(X), feral(X)] :- cat(X).",
        "[a(X), b(X), c(X)] :- p(X).",
        "[(p(X), q(X)), (r(X,Y), s(X,Y))] :- t(X).",
        "! :- p(X), q(X).",
        "[c1] ! :- city(X), rural(X).",
        "? :- p(X).",
        "?(X) :- city(X), -hasAirport(X).",
        "?(X,Y) :- r(X,Y), s(Y,X).",
        "? :- p(X), -q(X), -r(X,X).",
        "@una\np(a).",
        "@base <http://example.org/kb>\np(a).",
        "@prefix ex: <http://example.org/>\np(ex:a, ex:b1).",
        "% a comment\np(a). % trailing comment\n% final line",
        "@facts\np(a).\n@rules\nq(X) :- p(X).\n@constraints\n! :- q(X), bad(X).\n@queries\n? :- q(X).",
        "  \n\t q( X ,  Z )  :-   p( X ) \t. \n\n",
        "p(a).\nq(X) :- p(X).\n! :- q(X), r(X,X).\n?(X) :- q(X), -r(X,X).",
        "e(Y,X) :- e(X,Y).\ne(X,Z) :- e(X,Y), e(Y,Z).",
    ];
    let templates = [
        "p(a)",
        "p(a), r(a,b)",
        "q(X) :- p(X)",
        "r(X,Z) :- p(X), q(X)",
        "[q(X), r(X,Y)] :- p(X)",
        "[(q(X), s(X,X)), (r(X,Y))] :- p(X)",
        "! :- p(X), s(X,X)",
        "? :- p(X)",
        "?(X) :- q(X), -r(X,X)",
        "? :- s(X,Y), -p(X), -q(Y)",
    ];
    let mut docs: Vec<String> = handwritten.iter().map(|s| s.to_string()).collect();
    for t in templates {
        docs.push(format!("{t}."));
        docs.push(format!("[lbl 1] {t}."));
        docs.push(format!("base(a).\n{t}."));
    }
    docs
}
