//! Hand-written recursive-descent parser for the DLGP+ dialect.
//!
//! The parser scans characters directly rather than going through a token
//! stream: labels may contain arbitrary text up to `]`, IRIs arbitrary text up
//! to `>`, and `%` starts a line comment — all easier to honor at the
//! character level. On an error it records a positioned diagnostic and
//! resynchronizes at the next `.`, so one bad statement does not hide the
//! rest of the file.

use std::collections::BTreeMap;

use crate::formula::{Csf, Dsf};
use crate::logic::{Atom, Term};
use crate::rules::{ConjunctiveQueryNeg, Rule};

use super::{Directive, Document, ParseDiagnostic, Statement};

pub(super) fn parse_lenient(text: &str) -> (Document, Vec<ParseDiagnostic>) {
    let mut p = Parser::new(text);
    p.document();
    (
        Document {
            directives: p.directives,
            statements: p.statements,
        },
        p.diagnostics,
    )
}

struct Parser {
    chars: Vec<char>,
    pos: usize,
    line: u32,
    col: u32,
    prefixes: BTreeMap<String, String>,
    arities: BTreeMap<String, usize>,
    directives: Vec<Directive>,
    statements: Vec<Statement>,
    diagnostics: Vec<ParseDiagnostic>,
}

#[derive(Clone, Copy)]
struct Checkpoint {
    pos: usize,
    line: u32,
    col: u32,
}

impl Parser {
    fn new(text: &str) -> Self {
        Parser {
            chars: text.chars().collect(),
            pos: 0,
            line: 1,
            col: 1,
            prefixes: BTreeMap::new(),
            arities: BTreeMap::new(),
            directives: Vec::new(),
            statements: Vec::new(),
            diagnostics: Vec::new(),
        }
    }

    fn peek(&self) -> Option<char> {
        self.chars.get(self.pos).copied()
    }

    fn peek2(&self) -> Option<char> {
        self.chars.get(self.pos + 1).copied()
    }

    fn bump(&mut self) -> Option<char> {
        let c = self.peek()?;
        self.pos += 1;
        if c == '\n' {
            self.line += 1;
            self.col = 1;
        } else {
            self.col += 1;
        }
        Some(c)
    }

    fn checkpoint(&self) -> Checkpoint {
        Checkpoint {
            pos: self.pos,
            line: self.line,
            col: self.col,
        }
    }

    fn restore(&mut self, cp: Checkpoint) {
        self.pos = cp.pos;
        self.line = cp.line;
        self.col = cp.col;
    }

    fn eat(&mut self, c: char) -> bool {
        if self.peek() == Some(c) {
            self.bump();
            true
        } else {
            false
        }
    }

    fn skip_trivia(&mut self) {
        loop {
            match self.peek() {
                Some(c) if c.is_whitespace() => {
                    self.bump();
                }
                Some('%') => {
                    while let Some(c) = self.bump() {
                        if c == '\n' {
                            break;
                        }
                    }
                }
                _ => break,
            }
        }
    }

    fn err_here(&mut self, message: impl Into<String>) {
        let (line, col) = (self.line, self.col);
        self.err_at(line, col, message);
    }

    fn err_at(&mut self, line: u32, col: u32, message: impl Into<String>) {
        self.diagnostics.push(ParseDiagnostic {
            line,
            col,
            message: message.into(),
        });
    }

    /// Skips forward to just past the next `.` so parsing can resume.
    fn recover(&mut self) {
        while let Some(c) = self.bump() {
            if c == '.' {
                break;
            }
        }
    }

    /// Skips to the end of the current line (used for malformed directives).
    fn recover_line(&mut self) {
        while let Some(c) = self.bump() {
            if c == '\n' {
                break;
            }
        }
    }

    fn document(&mut self) {
        loop {
            self.skip_trivia();
            match self.peek() {
                None => break,
                Some('@') => {
                    if self.directive().is_none() {
                        self.recover_line();
                    }
                }
                Some(_) => self.statement(),
            }
        }
    }

    fn directive(&mut self) -> Option<()> {
        self.bump(); // '@'
        let (line, col) = (self.line, self.col);
        let word = self.ident()?;
        match word.as_str() {
            "base" => {
                self.skip_trivia();
                let iri = self.iri_body()?;
                self.directives.push(Directive::Base(iri));
            }
            "prefix" => {
                self.skip_trivia();
                let name = self.ident()?;
                if !self.eat(':') {
                    self.err_here("expected ':' after prefix name");
                    return None;
                }
                self.skip_trivia();
                let iri = self.iri_body()?;
                self.prefixes.insert(name.clone(), iri.clone());
                self.directives.push(Directive::Prefix(name, iri));
            }
            "una" => self.directives.push(Directive::Una),
            // Section markers only group statements visually; every statement
            // kind is already syntactically self-evident.
            "facts" | "rules" | "constraints" | "queries" => {}
            other => {
                self.err_at(line, col, format!("unknown directive '@{other}'"));
                return None;
            }
        }
        Some(())
    }

    fn statement(&mut self) {
        let label = self.maybe_label();
        self.skip_trivia();
        let ok = match self.peek() {
            Some('!') => self.constraint_stmt(label),
            Some('?') => self.query_stmt(label),
            Some('[') => self.disjunctive_rule_stmt(label),
            Some(_) => self.fact_or_rule_stmt(label),
            None => {
                self.err_here("unexpected end of input after label");
                Some(())
            }
        };
        if ok.is_none() {
            self.recover();
        }
    }

    /// A leading `[...]` is a label unless it is followed by `:-`, in which
    /// case it is the bracketed head of an (unlabeled) disjunctive rule.
    fn maybe_label(&mut self) -> Option<String> {
        self.skip_trivia();
        if self.peek() != Some('[') {
            return None;
        }
        let cp = self.checkpoint();
        self.bump();
        let mut text = String::new();
        loop {
            match self.bump() {
                None => {
                    // Unterminated bracket: let the head parser diagnose it.
                    self.restore(cp);
                    return None;
                }
                Some(']') => break,
                Some(c) => text.push(c),
            }
        }
        self.skip_trivia();
        if self.peek() == Some(':') {
            self.restore(cp);
            return None;
        }
        let text = text.trim().to_string();
        (!text.is_empty()).then_some(text)
    }

    fn constraint_stmt(&mut self, label: Option<String>) -> Option<()> {
        self.bump(); // '!'
        self.expect_implies()?;
        let (body, _) = self.atom_list(false, true)?;
        self.expect_dot()?;
        self.statements.push(Statement::Rule(Rule {
            label,
            body,
            head: Dsf::new(),
        }));
        Some(())
    }

    fn query_stmt(&mut self, label: Option<String>) -> Option<()> {
        self.bump(); // '?'
        self.skip_trivia();
        let mut answer_vars = Vec::new();
        if self.eat('(') {
            loop {
                self.skip_trivia();
                let (line, col) = (self.line, self.col);
                match self.term()? {
                    Term::Variable(v) => answer_vars.push(v),
                    Term::Constant(_) => {
                        self.err_at(line, col, "answer positions must be variables");
                        return None;
                    }
                }
                self.skip_trivia();
                if !self.eat(',') {
                    break;
                }
            }
            if !self.eat(')') {
                self.err_here("expected ')' after answer variables");
                return None;
            }
        }
        self.skip_trivia();
        let (positives, negatives) = if self.eat('.') {
            (Csf::new(), Csf::new())
        } else {
            self.expect_implies()?;
            let lists = self.atom_list(true, true)?;
            self.expect_dot()?;
            lists
        };
        self.statements.push(Statement::Query(ConjunctiveQueryNeg {
            label,
            answer_vars,
            positives,
            negatives,
        }));
        Some(())
    }

    fn disjunctive_rule_stmt(&mut self, label: Option<String>) -> Option<()> {
        let head = self.disjunctive_head()?;
        self.expect_implies()?;
        let (body, _) = self.atom_list(false, true)?;
        self.expect_dot()?;
        self.statements
            .push(Statement::Rule(Rule { label, body, head }));
        Some(())
    }

    fn fact_or_rule_stmt(&mut self, label: Option<String>) -> Option<()> {
        let (atoms, _) = self.atom_list(false, false)?;
        self.skip_trivia();
        if self.eat('.') {
            self.statements.push(Statement::Fact { label, atoms });
            return Some(());
        }
        if self.peek() != Some(':') {
            self.err_here("expected '.' or ':-' after the atoms");
            return None;
        }
        self.expect_implies()?;
        let (body, _) = self.atom_list(false, true)?;
        self.expect_dot()?;
        let head = Dsf::from_disjuncts([atoms]);
        self.statements
            .push(Statement::Rule(Rule { label, body, head }));
        Some(())
    }

    fn disjunctive_head(&mut self) -> Option<Dsf> {
        let (line, col) = (self.line, self.col);
        self.bump(); // '['
        let mut disjuncts = Vec::new();
        loop {
            self.skip_trivia();
            let disjunct = if self.eat('(') {
                let mut atoms = Csf::new();
                loop {
                    let a = self.atom()?;
                    atoms.insert(a);
                    self.skip_trivia();
                    if !self.eat(',') {
                        break;
                    }
                }
                if !self.eat(')') {
                    self.err_here("expected ')' to close the disjunct");
                    return None;
                }
                atoms
            } else {
                std::iter::once(self.atom()?).collect()
            };
            disjuncts.push(disjunct);
            self.skip_trivia();
            if !self.eat(',') {
                break;
            }
        }
        if !self.eat(']') {
            self.err_here("expected ']' to close the rule head");
            return None;
        }
        if disjuncts.is_empty() {
            self.err_at(line, col, "a disjunctive head needs at least one disjunct");
            return None;
        }
        Some(Dsf::from_disjuncts(disjuncts))
    }

    /// A comma-separated list of literals; negation is admitted only when
    /// `neg_allowed` (query bodies). Returns (positive, negated) atoms.
    fn atom_list(&mut self, neg_allowed: bool, allow_empty: bool) -> Option<(Csf, Csf)> {
        self.skip_trivia();
        let mut positives = Csf::new();
        let mut negatives = Csf::new();
        if allow_empty && matches!(self.peek(), Some('.') | None) {
            return Some((positives, negatives));
        }
        loop {
            self.skip_trivia();
            let mut negated = false;
            if self.peek() == Some('-') {
                let (line, col) = (self.line, self.col);
                self.bump();
                if neg_allowed {
                    negated = true;
                } else {
                    self.err_at(line, col, "negation ('-') is only allowed in query bodies");
                }
            }
            let a = self.atom()?;
            if negated {
                negatives.insert(a);
            } else {
                positives.insert(a);
            }
            self.skip_trivia();
            if !self.eat(',') {
                break;
            }
        }
        Some((positives, negatives))
    }

    fn atom(&mut self) -> Option<Atom> {
        self.skip_trivia();
        let (line, col) = (self.line, self.col);
        let predicate = match self.peek() {
            Some('[') => {
                self.err_here("disjunction is only allowed in rule heads");
                return None;
            }
            Some('<') => self.iri()?,
            Some(c) if c.is_ascii_lowercase() => self.name_token()?,
            Some(c) if c.is_ascii_uppercase() => {
                self.err_here("expected a predicate (lowercase), found a variable");
                return None;
            }
            Some('"') => {
                self.err_here("string literals are not supported");
                return None;
            }
            _ => {
                self.err_here("expected an atom");
                return None;
            }
        };
        let mut args = Vec::new();
        if self.eat('(') {
            loop {
                args.push(self.term()?);
                self.skip_trivia();
                if !self.eat(',') {
                    break;
                }
            }
            if !self.eat(')') {
                self.err_here("expected ')' to close the argument list");
                return None;
            }
        }
        let arity = args.len();
        let known = *self.arities.entry(predicate.clone()).or_insert(arity);
        if known != arity {
            self.err_at(
                line,
                col,
                format!("predicate '{predicate}' used with arity {arity} but earlier with arity {known}"),
            );
        }
        Some(Atom::new(predicate, args))
    }

    fn term(&mut self) -> Option<Term> {
        self.skip_trivia();
        match self.peek() {
            Some(c) if c.is_ascii_uppercase() => Some(Term::var(self.ident()?)),
            Some(c) if c.is_ascii_lowercase() => Some(Term::constant(self.name_token()?)),
            Some(c) if c.is_ascii_digit() => Some(Term::constant(self.integer())),
            Some('<') => Some(Term::constant(self.iri()?)),
            Some('"') => {
                self.err_here("string literals are not supported");
                None
            }
            _ => {
                self.err_here("expected a term");
                None
            }
        }
    }

    /// A lowercase identifier, possibly continued as a prefixed name
    /// `prefix:local`, which is expanded to a full IRI constant.
    fn name_token(&mut self) -> Option<String> {
        let (line, col) = (self.line, self.col);
        let name = self.ident()?;
        let local_follows = self.peek() == Some(':')
            && self
                .peek2()
                .is_some_and(|c| c.is_ascii_alphanumeric() || c == '_');
        if !local_follows {
            return Some(name);
        }
        self.bump(); // ':'
        let mut local = String::new();
        while let Some(c) = self.peek() {
            if c.is_ascii_alphanumeric() || c == '_' {
                local.push(c);
                self.bump();
            } else {
                break;
            }
        }
        match self.prefixes.get(&name) {
            Some(iri) => Some(format!("<{iri}{local}>")),
            None => {
                self.err_at(line, col, format!("unknown prefix '{name}:'"));
                Some(format!("{name}:{local}"))
            }
        }
    }

    fn ident(&mut self) -> Option<String> {
        match self.peek() {
            Some(c) if c.is_ascii_alphabetic() => {}
            _ => {
                self.err_here("expected an identifier");
                return None;
            }
        }
        let mut s = String::new();
        while let Some(c) = self.peek() {
            if c.is_ascii_alphanumeric() || c == '_' {
                s.push(c);
                self.bump();
            } else {
                break;
            }
        }
        Some(s)
    }

    fn integer(&mut self) -> String {
        let mut s = String::new();
        while let Some(c) = self.peek() {
            if c.is_ascii_digit() {
                s.push(c);
                self.bump();
            } else {
                break;
            }
        }
        s
    }

    /// An `<...>` form; returns the name with the angle brackets kept, which
    /// is how IRI constants are stored and printed.
    fn iri(&mut self) -> Option<String> {
        Some(format!("<{}>", self.iri_body()?))
    }

    /// The text between `<` and `>`.
    fn iri_body(&mut self) -> Option<String> {
        if !self.eat('<') {
            self.err_here("expected an IRI in angle brackets");
            return None;
        }
        let mut s = String::new();
        loop {
            match self.bump() {
                None => {
                    self.err_here("unterminated IRI");
                    return None;
                }
                Some('>') => break,
                Some(c) => s.push(c),
            }
        }
        Some(s)
    }

    fn expect_implies(&mut self) -> Option<()> {
        self.skip_trivia();
        if self.eat(':') && self.eat('-') {
            Some(())
        } else {
            self.err_here("expected ':-'");
            None
        }
    }

    fn expect_dot(&mut self) -> Option<()> {
        self.skip_trivia();
        if self.eat('.') {
            Some(())
        } else {
            self.err_here("expected '.' to end the statement");
            None
        }
    }
}
