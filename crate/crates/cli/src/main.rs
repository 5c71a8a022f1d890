//! Command-line frontend: parses DLGP+ input, reduces negation and
//! constraints away, and then rewrites, classifies, or chases — with
//! reproducible output and machine-readable statistics.

use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::{Duration, Instant};

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde_json::{json, Value};

use ecompleto::dlgp::{self, print_statement, Document, Statement};
use ecompleto::{
    entails, is_fus_guaranteed, normalize_problem, rewrite_problem, ConjunctiveQueryNeg, CqOrigin,
    Csf, Entailment, NormalizedProblem, RewriteOptions, RewriteOutcome, Ucq, WorkCq,
};

/// Exit code for malformed input: parse diagnostics, unusable flags, or a
/// query selector that matches nothing.
const EXIT_INVALID: u8 = 2;
/// Exit code for a rewriting that ran out of budget after emitting a sound
/// partial result.
const EXIT_BUDGET: u8 = 1;
/// Exit code for a timeout that fired before the first rewriting round
/// finished, so no output was written.
const EXIT_TIMEOUT: u8 = 3;

#[derive(Parser)]
#[command(
    name = "ecompleto",
    version,
    about = "Rewrites unions of conjunctive queries, with universally quantified \
             negation, over disjunctive existential rules"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Rewrite a query set into a complete union of conjunctive queries
    Rewrite(RewriteArgs),
    /// Report which terminating rule fragments a knowledge base falls into
    Classify(ClassifyArgs),
    /// Ask the bounded-depth disjunctive chase whether the facts entail a query
    Oracle(OracleArgs),
}

#[derive(Args)]
struct RewriteArgs {
    /// DLGP+ file holding rules, constraints, facts, and optionally queries
    #[arg(long, value_name = "PATH")]
    kb: PathBuf,

    /// Query source: a DLGP+ file, or the label of a query inside the kb
    /// file; defaults to every query found in the kb file
    #[arg(long, value_name = "PATH|LABEL")]
    query: Option<String>,

    /// Existential rewriting levels per round: a number, or "inf" for
    /// rewriting to an existential fixpoint each round
    #[arg(long, value_name = "N|inf", default_value = "2", value_parser = parse_k)]
    k: KBound,

    /// Maximum number of outer rewriting rounds
    #[arg(long, value_name = "N", default_value_t = 64)]
    max_iterations: u32,

    /// Wall-clock budget in seconds
    #[arg(long, value_name = "SECS")]
    timeout_secs: Option<u64>,

    /// Keep subsumed queries instead of pruning to a minimal cover
    #[arg(long)]
    no_prune: bool,

    /// Output format for the rewritten union of queries
    #[arg(long, value_enum, default_value_t = Format::Dlgp)]
    format: Format,

    /// Print run statistics as JSON to stderr
    #[arg(long)]
    stats: bool,

    /// Write run statistics as JSON to this file instead of stderr
    #[arg(long, value_name = "PATH")]
    stats_out: Option<PathBuf>,

    /// Worker threads for the rewriting engine (1 = fully sequential)
    #[arg(long, value_name = "N", default_value_t = 1)]
    jobs: usize,
}

#[derive(Args)]
struct ClassifyArgs {
    /// DLGP+ file holding the rules to classify
    #[arg(long, value_name = "PATH")]
    kb: PathBuf,
}

#[derive(Args)]
struct OracleArgs {
    /// DLGP+ file holding rules, constraints, and optionally facts/queries
    #[arg(long, value_name = "PATH")]
    kb: PathBuf,

    /// Additional DLGP+ fact file, unioned with any facts in the kb file
    #[arg(long, value_name = "PATH")]
    facts: Option<PathBuf>,

    /// Query source: a DLGP+ file, or the label of a query inside the kb
    /// file; defaults to every query found in the kb file
    #[arg(long, value_name = "PATH|LABEL")]
    query: Option<String>,

    /// Chase depth bound
    #[arg(long, value_name = "N", default_value_t = 6)]
    depth: usize,
}

/// `--k` bound: `Some(n)` levels per round, or `None` for "inf".
#[derive(Clone, Copy)]
struct KBound(Option<u32>);

fn parse_k(s: &str) -> Result<KBound, String> {
    if s.eq_ignore_ascii_case("inf") {
        return Ok(KBound(None));
    }
    s.parse::<u32>()
        .map(|n| KBound(Some(n)))
        .map_err(|_| format!("expected a number or \"inf\", got {s:?}"))
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Format {
    Dlgp,
    Json,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let code = match cli.command {
        Command::Rewrite(args) => cmd_rewrite(&args),
        Command::Classify(args) => cmd_classify(&args),
        Command::Oracle(args) => cmd_oracle(&args),
    };
    ExitCode::from(code)
}

fn cmd_rewrite(args: &RewriteArgs) -> u8 {
    let problem = match load_problem(&args.kb, args.query.as_deref()) {
        Ok((problem, _facts)) => problem,
        Err(code) => return code,
    };

    let opts = RewriteOptions {
        k: args.k.0,
        max_iterations: args.max_iterations,
        timeout: args.timeout_secs.map(Duration::from_secs),
        prune: !args.no_prune,
        audit: false,
        var_start: seed_from_env(),
    };
    let started = Instant::now();
    let outcome = run_with_jobs(args.jobs, || rewrite_problem(&problem, &opts));
    let runtime = started.elapsed();

    if let Err(code) = emit_stats(args, &outcome, runtime) {
        return code;
    }
    if !outcome.converged && opts.timeout.is_some() && outcome.state.iterations == 0 {
        eprintln!("error: timed out before completing a rewriting round");
        return EXIT_TIMEOUT;
    }

    match args.format {
        Format::Dlgp => print!("{}", render_dlgp(&outcome.cqs)),
        Format::Json => print!("{}", render_json(&outcome.cqs)),
    }
    if outcome.converged {
        0
    } else {
        EXIT_BUDGET
    }
}

fn cmd_classify(args: &ClassifyArgs) -> u8 {
    let problem = match load_problem(&args.kb, None) {
        Ok((problem, _facts)) => problem,
        Err(code) => return code,
    };
    let report = is_fus_guaranteed(&problem.rules);
    let rules: Vec<Value> = problem
        .rules
        .iter()
        .zip(&report.rules)
        .map(|(rule, flags)| {
            json!({
                "rule": rule.to_string(),
                "linear": flags.linear,
                "disconnected": flags.disconnected,
                "domain_restricted": flags.domain_restricted,
                "cdr": flags.cdr,
                "clr": flags.clr,
                "dder": flags.dder,
                "sticky_compatible": flags.sticky_compatible,
            })
        })
        .collect();
    let report = json!({
        "rules": rules,
        "sticky": report.sticky,
        "agrd": report.agrd,
        "independent_parts": report.independent_parts,
        "verdict": report.verdict.as_str(),
        "criterion": report.criterion,
    });
    println!("{}", pretty(&report));
    0
}

fn cmd_oracle(args: &OracleArgs) -> u8 {
    let (problem, mut facts) = match load_problem(&args.kb, args.query.as_deref()) {
        Ok(pair) => pair,
        Err(code) => return code,
    };
    if let Some(path) = &args.facts {
        let doc = match load_document(path) {
            Ok(doc) => doc,
            Err(code) => return code,
        };
        let (extra, _) = doc.to_problem();
        facts = facts.union(&extra.facts);
    }
    let ucq: Vec<Csf> = problem
        .queries
        .iter()
        .map(|nq| nq.cq.positives.clone())
        .collect();
    let verdict = entails(&problem.rules, &facts, &ucq, args.depth);
    match verdict {
        Entailment::Entailed => println!("true"),
        Entailment::Unknown => println!("unknown"),
    }
    0
}

/// Reads the kb file, resolves the query selector, and reduces constraints
/// and negation away. Returns the normalized problem plus the kb facts.
fn load_problem(kb_path: &Path, query_arg: Option<&str>) -> Result<(NormalizedProblem, Csf), u8> {
    let doc = load_document(kb_path)?;
    let (kb, kb_queries) = doc.to_problem();
    let queries = resolve_queries(query_arg, kb_path, &kb_queries)?;
    match normalize_problem(&kb, &queries) {
        Ok(problem) => Ok((problem, kb.facts)),
        Err(e) => {
            eprintln!("error: {e}");
            Err(EXIT_INVALID)
        }
    }
}

fn load_document(path: &Path) -> Result<Document, u8> {
    let text = match fs::read_to_string(path) {
        Ok(text) => text,
        Err(e) => {
            eprintln!("error: cannot read {}: {e}", path.display());
            return Err(EXIT_INVALID);
        }
    };
    match dlgp::parse(&text) {
        Ok(doc) => Ok(doc),
        Err(diagnostics) => {
            for d in &diagnostics {
                eprintln!("error: {}:{d}", path.display());
            }
            Err(EXIT_INVALID)
        }
    }
}

/// `--query` semantics: absent means "the kb file's queries"; otherwise the
/// value is a file path if one exists, and a query label in the kb file if
/// not. `classify` passes no selector and tolerates an empty query set.
fn resolve_queries(arg: Option<&str>, kb_path: &Path, kb_queries: &Ucq) -> Result<Ucq, u8> {
    match arg {
        None => Ok(kb_queries.clone()),
        Some(selector) => {
            let path = Path::new(selector);
            if path.exists() {
                let doc = load_document(path)?;
                let (_, queries) = doc.to_problem();
                if queries.is_empty() {
                    eprintln!("error: no queries in {selector}");
                    return Err(EXIT_INVALID);
                }
                Ok(queries)
            } else {
                let selected = Ucq::from_cqs(
                    kb_queries
                        .cqs()
                        .filter(|q| q.label.as_deref() == Some(selector))
                        .cloned(),
                );
                if selected.is_empty() {
                    eprintln!(
                        "error: {selector:?} is neither a readable file nor a query label in {}",
                        kb_path.display()
                    );
                    return Err(EXIT_INVALID);
                }
                Ok(selected)
            }
        }
    }
}

fn render_dlgp(cqs: &[WorkCq]) -> String {
    let mut out = String::new();
    for cq in cqs {
        let mut query = ConjunctiveQueryNeg::positive(cq.formula.clone())
            .with_answer_vars(cq.answer_vars.iter().cloned());
        if cq.origin == CqOrigin::InconsistencyWitness {
            query.label = Some(cq.origin.as_str().to_string());
        }
        out.push_str(&print_statement(&Statement::Query(query)));
        out.push('\n');
    }
    out
}

fn render_json(cqs: &[WorkCq]) -> String {
    let cqs: Vec<Value> = cqs
        .iter()
        .map(|cq| {
            json!({
                "atoms": cq.formula.atoms().map(|a| a.to_string()).collect::<Vec<String>>(),
                "answer_vars": cq.answer_vars,
                "origin": cq.origin.as_str(),
            })
        })
        .collect();
    format!("{}\n", pretty(&json!({ "cqs": cqs })))
}

fn emit_stats(args: &RewriteArgs, outcome: &RewriteOutcome, runtime: Duration) -> Result<(), u8> {
    if !args.stats && args.stats_out.is_none() {
        return Ok(());
    }
    let stats = json!({
        "runtime_ms": runtime.as_millis() as u64,
        "peak_memory_estimate_bytes": peak_rss_bytes(),
        "iterations": outcome.state.iterations,
        "cq_generated": outcome.state.cq_generated,
        "cq_kept_after_prune": outcome.cqs.len() as u64,
        "rules_generated": outcome.state.rules_generated,
        "converged": outcome.converged,
    });
    let text = format!("{}\n", pretty(&stats));
    match &args.stats_out {
        Some(path) => fs::write(path, text).map_err(|e| {
            eprintln!("error: cannot write {}: {e}", path.display());
            EXIT_INVALID
        }),
        None => {
            eprint!("{text}");
            Ok(())
        }
    }
}

fn pretty(value: &Value) -> String {
    serde_json::to_string_pretty(value).expect("serializing owned JSON cannot fail")
}

/// Fresh-variable counters start here, so runs can be replayed exactly.
fn seed_from_env() -> u64 {
    std::env::var("ECOMPLETO_SEED")
        .ok()
        .and_then(|s| s.parse().ok())
        .unwrap_or(0)
}

fn run_with_jobs<T: Send>(jobs: usize, work: impl FnOnce() -> T + Send) -> T {
    match rayon::ThreadPoolBuilder::new()
        .num_threads(jobs.max(1))
        .build()
    {
        Ok(pool) => pool.install(work),
        Err(_) => work(),
    }
}

/// Best-effort peak-RSS reading; 0 where the platform offers none.
fn peak_rss_bytes() -> u64 {
    let Ok(status) = fs::read_to_string("/proc/self/status") else {
        return 0;
    };
    for line in status.lines() {
        if let Some(rest) = line.strip_prefix("VmHWM:") {
            let digits = rest.trim().trim_end_matches("kB").trim();
            return digits.parse::<u64>().unwrap_or(0) * 1024;
        }
    }
    0
}
