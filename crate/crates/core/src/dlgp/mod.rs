//! Reading and writing the DLGP+ wire format.
//!
//! DLGP+ extends the DLGP 2.0 syntax with disjunctive rule heads (bracketed,
//! with parenthesized conjunctive disjuncts) and negated atoms in query
//! bodies. A statement is a fact, a rule, a constraint (`!` head), or a query
//! (`?` head with optional answer variables), each optionally preceded by a
//! bracketed label:
//!
//! ```text
//! @prefix ex: <http://example.org/>
//! [f1] person(alice).
//! [r1] [leaf(X), (inner_node(X), edge(X,Y))] :- node(X).
//! [c1] ! :- singleChild(X), sibling(Y,X).
//! [q1] ?(X) :- person(X), -marriedTo(X,Y).
//! ```
//!
//! Prefixed names are expanded at parse time into opaque IRI constants kept
//! in angle brackets, so printing never needs the prefix table back.

mod parser;
mod printer;

use std::fmt;

use crate::formula::Csf;
use crate::rules::{ConjunctiveQueryNeg, KnowledgeBase, Rule, Ucq};

pub use printer::{print_document, print_rules, print_statement, print_ucq};

/// A header directive, kept for round-tripping. Section markers
/// (`@facts`, `@rules`, ...) are accepted but not retained: statement kinds
/// are syntactically self-evident here.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Directive {
    /// `@base <iri>` — recorded verbatim; relative IRIs are not resolved.
    Base(String),
    /// `@prefix name: <iri>`
    Prefix(String, String),
    /// `@una` — unique name assumption marker, pass-through.
    Una,
}

/// One parsed statement. Constraints are rules with an empty head.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Statement {
    Fact { label: Option<String>, atoms: Csf },
    Rule(Rule),
    Query(ConjunctiveQueryNeg),
}

/// A parsed DLGP+ file: directives in order, then statements in order.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct Document {
    pub directives: Vec<Directive>,
    pub statements: Vec<Statement>,
}

impl Document {
    /// Splits the document into the knowledge base (facts and rules,
    /// constraints included) and the query set. Fact labels are dropped:
    /// the fact base is one set formula.
    pub fn to_problem(&self) -> (KnowledgeBase, Ucq) {
        let mut facts = Csf::new();
        let mut rules = Vec::new();
        let mut queries = Ucq::new();
        for s in &self.statements {
            match s {
                Statement::Fact { atoms, .. } => facts = facts.union(atoms),
                Statement::Rule(r) => rules.push(r.clone()),
                Statement::Query(q) => queries.insert(q.clone()),
            }
        }
        (KnowledgeBase::new(rules, facts), queries)
    }
}

/// A positioned parse problem; `line` and `col` are 1-based.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ParseDiagnostic {
    pub line: u32,
    pub col: u32,
    pub message: String,
}

impl fmt::Display for ParseDiagnostic {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:{}: {}", self.line, self.col, self.message)
    }
}

impl std::error::Error for ParseDiagnostic {}

/// Parses a document, failing if any diagnostic was produced.
pub fn parse(text: &str) -> Result<Document, Vec<ParseDiagnostic>> {
    let (doc, diagnostics) = parser::parse_lenient(text);
    if diagnostics.is_empty() {
        Ok(doc)
    } else {
        Err(diagnostics)
    }
}

/// Parses as much of a document as possible, returning whatever statements
/// survived together with all diagnostics.
pub fn parse_lenient(text: &str) -> (Document, Vec<ParseDiagnostic>) {
    parser::parse_lenient(text)
}

fn with_dot(text: &str) -> String {
    let t = text.trim_end();
    if t.ends_with('.') {
        t.to_string()
    } else {
        format!("{t}.")
    }
}

fn single<T>(mut items: Vec<T>, what: &str) -> Result<T, Vec<ParseDiagnostic>> {
    if items.len() == 1 {
        Ok(items.remove(0))
    } else {
        Err(vec![ParseDiagnostic {
            line: 1,
            col: 1,
            message: format!("expected exactly one {what}, found {}", items.len()),
        }])
    }
}

/// Parses a single rule or constraint; the trailing `.` may be omitted.
pub fn parse_rule(text: &str) -> Result<Rule, Vec<ParseDiagnostic>> {
    let doc = parse(&with_dot(text))?;
    let rules: Vec<Rule> = doc
        .statements
        .into_iter()
        .filter_map(|s| match s {
            Statement::Rule(r) => Some(r),
            _ => None,
        })
        .collect();
    single(rules, "rule")
}

/// Parses a single query; the trailing `.` may be omitted.
pub fn parse_query(text: &str) -> Result<ConjunctiveQueryNeg, Vec<ParseDiagnostic>> {
    let doc = parse(&with_dot(text))?;
    let queries: Vec<ConjunctiveQueryNeg> = doc
        .statements
        .into_iter()
        .filter_map(|s| match s {
            Statement::Query(q) => Some(q),
            _ => None,
        })
        .collect();
    single(queries, "query")
}

/// Parses a bare conjunction of atoms, e.g. `"p(X), q(X,a)"`.
pub fn parse_atoms(text: &str) -> Result<Csf, Vec<ParseDiagnostic>> {
    let doc = parse(&with_dot(text))?;
    let facts: Vec<Csf> = doc
        .statements
        .into_iter()
        .filter_map(|s| match s {
            Statement::Fact { atoms, .. } => Some(atoms),
            _ => None,
        })
        .collect();
    single(facts, "conjunction of atoms")
}

/// Parses a document consisting only of queries into a UCQ.
pub fn parse_ucq(text: &str) -> Result<Ucq, Vec<ParseDiagnostic>> {
    let doc = parse(text)?;
    let mut ucq = Ucq::new();
    for s in doc.statements {
        match s {
            Statement::Query(q) => ucq.insert(q),
            other => {
                return Err(vec![ParseDiagnostic {
                    line: 1,
                    col: 1,
                    message: format!("expected only queries, found: {}", print_statement(&other)),
                }])
            }
        }
    }
    Ok(ucq)
}
