//! `tlp`: command-line front end for the instantiation analyzer.
//!
//! Exit codes: 0 on success, 1 when the input program fails a check or the
//! analysis reports an error, 2 on usage errors (handled by clap).

use std::fs;
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use serde_json::json;
use tlp_core::{
    abstract_term, analyze, build_grammar, check_conditions, check_program, labels,
    labels_abstract, normalize, parse_abstract, parse_program, parse_term, parse_type, readback,
    recursion_mode, role_profile, unify_tuples, LabelQuery, Program, RecursionMode, TypeTerm,
};

#[derive(Parser)]
#[command(name = "tlp", version, about = "Instantiation analysis for typed logic programs")]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Clone, Copy, ValueEnum)]
enum Format {
    Text,
    Json,
}

#[derive(Subcommand)]
enum Cmd {
    /// Parse a program and check the typing rules and type conditions.
    Check {
        /// Program file.
        file: String,
    },
    /// Print the type graph (DOT) and role profile of a type.
    Graph {
        /// Program file providing the signature.
        file: String,
        /// Type whose graph to build, e.g. "list(U)".
        #[arg(long = "type")]
        ty: String,
        #[arg(long, value_enum, default_value = "text")]
        format: Format,
    },
    /// Abstract a concrete term over a program's signature.
    Abstract {
        /// Program file providing the signature.
        #[arg(long)]
        sig: String,
        /// Concrete term, e.g. "cons(X, nil)".
        term: String,
    },
    /// Normalize an abstract term over a program's signature.
    Normalize {
        /// Program file providing the signature.
        #[arg(long)]
        sig: String,
        /// Abstract term, e.g. "list#(X + int#)".
        term: String,
    },
    /// Compute the labels of a term at a grammar position.
    Labels {
        /// Program file providing the signature.
        #[arg(long)]
        sig: String,
        /// Type whose grammar to use, e.g. "nest(V)".
        #[arg(long)]
        grammar: String,
        /// Nonterminal to start derivations from.
        #[arg(long)]
        start: String,
        /// Nonterminal whose derived subterms to collect.
        #[arg(long)]
        target: String,
        /// Concrete or abstract term ("#" marks abstract constructors).
        term: String,
    },
    /// Unify two abstract terms and print the solved forms.
    Unify {
        /// Program file providing the signature.
        #[arg(long)]
        sig: String,
        /// Type of both terms (optional, e.g. "list(U)").
        #[arg(long = "type")]
        ty: Option<String>,
        lhs: String,
        rhs: String,
    },
    /// Run the full analysis: fixpoint, query answers, readback.
    Analyze {
        /// Program file.
        file: String,
        #[arg(long, default_value_t = 1000)]
        max_iters: usize,
        /// Also compare against k rounds of the concrete semantics.
        #[arg(long)]
        check_correctness: Option<usize>,
        #[arg(long, value_enum, default_value = "text")]
        format: Format,
    },
}

fn load(file: &str) -> Result<Program, String> {
    let src = fs::read_to_string(file).map_err(|e| format!("{file}: {e}"))?;
    parse_program(&src).map_err(|e| format!("{file}: {e}"))
}

fn run(cmd: Cmd) -> Result<(), String> {
    match cmd {
        Cmd::Check { file } => {
            let prog = load(&file)?;
            check_conditions(&prog.sig).map_err(|e| e.to_string())?;
            let typings = check_program(&prog).map_err(|e| e.to_string())?;
            let mode = recursion_mode(&prog, &typings);
            println!("ok: {} clauses", prog.clauses.len());
            match mode {
                RecursionMode::Monomorphic => println!("recursion: monomorphic"),
                RecursionMode::Polymorphic { clause, atom } => {
                    println!("recursion: polymorphic (call {atom} in clause {clause})")
                }
            }
            Ok(())
        }
        Cmd::Graph { file, ty, format } => {
            let prog = load(&file)?;
            let phi = parse_type(&ty).map_err(|e| e.to_string())?;
            let g = build_grammar(&prog.sig, &phi).map_err(|e| e.to_string())?;
            let profile = role_profile(&prog.sig, &phi).map_err(|e| e.to_string())?;
            match format {
                Format::Text => {
                    println!("{}", g.to_dot());
                    println!(
                        "profile: {} content slots {:?}, recursive slots {:?}",
                        profile.typ,
                        profile.nrs.iter().map(|t| t.to_string()).collect::<Vec<_>>(),
                        profile
                            .rec_other
                            .iter()
                            .map(|t| t.to_string())
                            .collect::<Vec<_>>(),
                    );
                }
                Format::Json => {
                    let out = json!({ "grammar": g, "profile": profile });
                    println!("{}", serde_json::to_string_pretty(&out).unwrap());
                }
            }
            Ok(())
        }
        Cmd::Abstract { sig, term } => {
            let prog = load(&sig)?;
            let t = parse_term(&term, &prog.sig).map_err(|e| e.to_string())?;
            let a = abstract_term(&prog.sig, &t).map_err(|e| e.to_string())?;
            let a = normalize(&prog.sig, &a).map_err(|e| e.to_string())?;
            println!("{a}");
            Ok(())
        }
        Cmd::Normalize { sig, term } => {
            let prog = load(&sig)?;
            let a = parse_abstract(&term).map_err(|e| e.to_string())?;
            let n = normalize(&prog.sig, &a).map_err(|e| e.to_string())?;
            println!("{n}");
            Ok(())
        }
        Cmd::Labels {
            sig,
            grammar,
            start,
            target,
            term,
        } => {
            let prog = load(&sig)?;
            let q = LabelQuery {
                grammar_type: parse_type(&grammar).map_err(|e| e.to_string())?,
                start: parse_type(&start).map_err(|e| e.to_string())?,
                target: parse_type(&target).map_err(|e| e.to_string())?,
            };
            if term.contains('#') {
                let a = parse_abstract(&term).map_err(|e| e.to_string())?;
                let l = labels_abstract(&prog.sig, &q, &a).map_err(|e| e.to_string())?;
                println!("{l}");
            } else {
                let t = parse_term(&term, &prog.sig).map_err(|e| e.to_string())?;
                let ls = labels(&prog.sig, &q, &t).map_err(|e| e.to_string())?;
                for l in ls {
                    println!("{l}");
                }
            }
            Ok(())
        }
        Cmd::Unify { sig, ty, lhs, rhs } => {
            let prog = load(&sig)?;
            let a = parse_abstract(&lhs).map_err(|e| e.to_string())?;
            let b = parse_abstract(&rhs).map_err(|e| e.to_string())?;
            let tys: Option<Vec<TypeTerm>> = match ty {
                Some(t) => Some(vec![parse_type(&t).map_err(|e| e.to_string())?]),
                None => None,
            };
            let sols = unify_tuples(&prog.sig, &[a], &[b], tys.as_deref())
                .map_err(|e| e.to_string())?;
            if sols.is_empty() {
                println!("no unifier");
            } else {
                for (i, th) in sols.iter().enumerate() {
                    println!("unifier {}: {th}", i + 1);
                }
            }
            Ok(())
        }
        Cmd::Analyze {
            file,
            max_iters,
            check_correctness,
            format,
        } => {
            let prog = load(&file)?;
            let res = analyze(&prog, max_iters).map_err(|e| e.to_string())?;
            let missed = match check_correctness {
                Some(k) => Some(
                    tlp_core::check_correctness(&prog, &res.fixpoint, k)
                        .map_err(|e| e.to_string())?,
                ),
                None => None,
            };
            match format {
                Format::Text => print_analysis_text(&res, missed.as_deref()),
                Format::Json => print_analysis_json(&res, missed.as_deref()),
            }
            if let Some(m) = &missed {
                if !m.is_empty() {
                    return Err("concrete atoms escaped the abstract fixpoint".into());
                }
            }
            if !res.converged {
                return Err(format!("no fixpoint after {max_iters} iterations"));
            }
            Ok(())
        }
    }
}

fn print_analysis_text(res: &tlp_core::AnalysisResult, missed: Option<&[tlp_core::Atom]>) {
    match &res.recursion {
        RecursionMode::Monomorphic => println!("recursion: monomorphic"),
        RecursionMode::Polymorphic { clause, atom } => {
            println!("recursion: polymorphic (call {atom} in clause {clause})")
        }
    }
    println!(
        "fixpoint after {} iterations ({}):",
        res.iterations,
        if res.converged { "converged" } else { "not converged" }
    );
    for atom in &res.fixpoint.atoms {
        println!("  {atom}");
    }
    if res.answers.is_empty() {
        println!("no query");
    } else {
        for (i, ans) in res.answers.iter().enumerate() {
            println!("answer {}:", i + 1);
            for rb in readback(ans) {
                let mut notes = Vec::new();
                if rb.ground {
                    notes.push("ground".to_string());
                } else if rb.may_be_free {
                    notes.push("may be free".to_string());
                }
                if let Some(c) = &rb.definite_ctor {
                    notes.push(format!("definitely {c}"));
                }
                if notes.is_empty() {
                    println!("  {} = {}", rb.var, rb.value);
                } else {
                    println!("  {} = {}  [{}]", rb.var, rb.value, notes.join(", "));
                }
            }
        }
    }
    if let Some(m) = missed {
        if m.is_empty() {
            println!("correctness check: all concrete consequences are described");
        } else {
            println!("correctness check: {} concrete atoms escaped:", m.len());
            for a in m {
                println!("  {a}");
            }
        }
    }
}

fn print_analysis_json(res: &tlp_core::AnalysisResult, missed: Option<&[tlp_core::Atom]>) {
    let recursion = match &res.recursion {
        RecursionMode::Monomorphic => json!("monomorphic"),
        RecursionMode::Polymorphic { clause, atom } => {
            json!({ "polymorphic": { "clause": clause, "atom": atom } })
        }
    };
    let answers: Vec<_> = res
        .answers
        .iter()
        .map(|ans| {
            let vars: Vec<_> = readback(ans)
                .into_iter()
                .map(|rb| {
                    json!({
                        "var": rb.var,
                        "value": rb.value.to_string(),
                        "definite_ctor": rb.definite_ctor,
                        "may_be_free": rb.may_be_free,
                        "ground": rb.ground,
                    })
                })
                .collect();
            json!({ "bindings": vars })
        })
        .collect();
    let out = json!({
        "recursion": recursion,
        "iterations": res.iterations,
        "converged": res.converged,
        "fixpoint": res.fixpoint.atoms.iter().map(|a| a.to_string()).collect::<Vec<_>>(),
        "answers": answers,
        "missed": missed.map(|m| m.iter().map(|a| a.to_string()).collect::<Vec<_>>()),
    });
    println!("{}", serde_json::to_string_pretty(&out).unwrap());
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli.cmd) {
        Ok(()) => ExitCode::SUCCESS,
        Err(msg) => {
            eprintln!("error: {msg}");
            ExitCode::from(1)
        }
    }
}
