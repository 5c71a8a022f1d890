//! Canonical text output: one statement per line, ready to be parsed back.

use crate::rules::{Rule, Ucq};

use super::{Directive, Document, Statement};

pub fn print_document(doc: &Document) -> String {
    let mut out = String::new();
    for d in &doc.directives {
        match d {
            Directive::Base(iri) => {
                out.push_str("@base <");
                out.push_str(iri);
                out.push('>');
            }
            Directive::Prefix(name, iri) => {
                out.push_str("@prefix ");
                out.push_str(name);
                out.push_str(": <");
                out.push_str(iri);
                out.push('>');
            }
            Directive::Una => out.push_str("@una"),
        }
        out.push('\n');
    }
    for s in &doc.statements {
        out.push_str(&print_statement(s));
        out.push('\n');
    }
    out
}

pub fn print_statement(s: &Statement) -> String {
    match s {
        Statement::Fact { label, atoms } => match label {
            Some(l) => format!("[{l}] {atoms}."),
            None => format!("{atoms}."),
        },
        Statement::Rule(r) => format!("{r}."),
        Statement::Query(q) => format!("{q}."),
    }
}

pub fn print_rules(rules: &[Rule]) -> String {
    let mut out = String::new();
    for r in rules {
        out.push_str(&format!("{r}.\n"));
    }
    out
}

pub fn print_ucq(ucq: &Ucq) -> String {
    let mut out = String::new();
    for cq in ucq.cqs() {
        out.push_str(&format!("{cq}.\n"));
    }
    out
}
