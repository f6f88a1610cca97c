mod commands;
mod report;

use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

use anyhow::{Context, Result};
use clap::{Parser, Subcommand};
use serde_json::{json, Value};

use factorisable::dilation::FactorizablePresentation;
use factorisable::matcore::Tolerance;

use commands::{GenerateArgs, Kind, MembershipInstance, SchurInput, Suite};
use report::{Check, Checks, RunReport};

/// Verification toolkit for factorisable bimodule channels.
#[derive(Debug, Parser)]
#[command(name = "fdil", version)]
struct Cli {
    /// Seed for every random choice.
    #[arg(long, global = true, default_value_t = 0)]
    seed: u64,

    /// Absolute tolerance for all checks.
    #[arg(long, global = true, default_value_t = 1e-8)]
    tol: f64,

    /// Also write the result to this file.
    #[arg(long, global = true)]
    out: Option<PathBuf>,

    /// Number of random instances for `verify` without an input file.
    #[arg(long, global = true, default_value_t = 100)]
    trials: usize,

    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Generate a seeded random instance as JSON.
    Generate {
        #[arg(value_enum)]
        kind: Kind,
        /// System dimension.
        #[arg(long)]
        n: usize,
        /// Ancilla dimension (defaults to the size implied by --blocks).
        #[arg(long)]
        k: Option<usize>,
        /// Ancilla blocks (`2,1` or `2@0.6,1@0.4`), or system parts (`2x1,1x2`) for families.
        #[arg(long)]
        blocks: Option<String>,
        /// System subalgebra the presentation is modular over.
        #[arg(long)]
        modular: Option<String>,
        /// Number of unitaries in a generated family.
        #[arg(long, default_value_t = 3)]
        m: usize,
    },
    /// Run an invariant battery on a file, or on random instances when no file is given.
    Verify {
        input: Option<PathBuf>,
        /// presentation, symbol, power:<m>, schur or membership.
        #[arg(long)]
        suite: Suite,
    },
    /// Operator symbol of a presentation's channel.
    Symbol { input: PathBuf },
    /// Channel of the m-th dilation power.
    Power {
        input: PathBuf,
        #[arg(long)]
        m: usize,
    },
    /// Schur symbol of an ancilla unitary tuple.
    Schur { input: PathBuf },
    /// Convex-hull membership of a target channel in a unitary family.
    Membership {
        input: PathBuf,
        /// Fall back to a heuristic search over this many unitaries of the algebra.
        #[arg(long)]
        search: Option<usize>,
        #[arg(long, default_value_t = 4)]
        restarts: usize,
    },
    /// Consecutive distances along a JSON array of presentations.
    Monitor { input: PathBuf },
}

struct Outcome {
    command: &'static str,
    inputs: Value,
    checks: Vec<Check>,
    outputs: Option<Value>,
}

fn write_file(path: &Path, text: &str) -> Result<()> {
    std::fs::write(path, format!("{text}\n")).with_context(|| format!("cannot write {}", path.display()))
}

fn emit(text: &str) -> Result<()> {
    let mut stdout = std::io::stdout().lock();
    match writeln!(stdout, "{text}").and_then(|_| stdout.flush()) {
        Err(e) if e.kind() != std::io::ErrorKind::BrokenPipe => Err(e).context("cannot write to standard output"),
        _ => Ok(()),
    }
}

fn path_value(p: &Path) -> Value {
    json!(p.display().to_string())
}

fn run(cli: &Cli) -> Result<bool> {
    let tol = Tolerance::with_abs(cli.tol).context("invalid --tol")?;
    let started = Instant::now();
    let outcome = match &cli.command {
        Command::Generate {
            kind,
            n,
            k,
            blocks,
            modular,
            m,
        } => {
            let args = GenerateArgs {
                kind: *kind,
                n: *n,
                k: *k,
                blocks: blocks.as_deref(),
                modular: modular.as_deref(),
                m: *m,
            };
            let value = commands::generate(&args, cli.seed, &tol)?;
            let text = serde_json::to_string_pretty(&value)?;
            let Some(out) = &cli.out else {
                emit(&text)?;
                return Ok(true);
            };
            write_file(out, &text)?;
            Outcome {
                command: "generate",
                inputs: json!({ "kind": kind, "n": n, "k": k, "blocks": blocks, "modular": modular, "m": m }),
                checks: Vec::new(),
                outputs: Some(json!({ "path": path_value(out) })),
            }
        }
        Command::Verify { input, suite } => {
            let (inputs, checks) = match input {
                Some(path) => (
                    json!({ "suite": suite.to_string(), "input": path_value(path) }),
                    commands::verify_file(path, *suite, cli.seed, &tol)?,
                ),
                None => (
                    json!({ "suite": suite.to_string(), "trials": cli.trials }),
                    commands::verify_random(*suite, cli.trials, cli.seed, &tol)?.into_sorted(),
                ),
            };
            Outcome {
                command: "verify",
                inputs,
                checks,
                outputs: None,
            }
        }
        Command::Symbol { input } => {
            let p: FactorizablePresentation = commands::read_json(input)?;
            let (checks, symbol) = commands::symbol_checks(&p, &tol)?;
            Outcome {
                command: "symbol",
                inputs: commands::summarize_presentation(&p),
                checks,
                outputs: Some(json!({ "symbol": symbol })),
            }
        }
        Command::Power { input, m } => {
            let p: FactorizablePresentation = commands::read_json(input)?;
            let (checks, power) = commands::power_checks(&p, *m, &tol)?;
            let mut inputs = commands::summarize_presentation(&p);
            inputs["m"] = json!(m);
            Outcome {
                command: "power",
                inputs,
                checks,
                outputs: Some(json!({ "channel": power })),
            }
        }
        Command::Schur { input } => {
            let inst: SchurInput = commands::read_json(input)?;
            let (checks, symbol) = commands::schur_checks(&inst, &tol)?;
            Outcome {
                command: "schur",
                inputs: json!({ "ancilla_dim": inst.ancilla.ambient_dim(), "dim": inst.unitaries.len() }),
                checks,
                outputs: Some(json!({ "symbol": symbol })),
            }
        }
        Command::Membership {
            input,
            search,
            restarts,
        } => {
            let inst: MembershipInstance = commands::read_json(input)?;
            let search_args = search.map(|m| (m, *restarts));
            let (checks, cert, from_search) = commands::membership_checks(&inst, search_args, cli.seed, &tol)?;
            Outcome {
                command: "membership",
                inputs: json!({
                    "dim": inst.spec.ambient_dim(),
                    "family_size": inst.unitaries.len(),
                    "search": search,
                    "restarts": restarts,
                }),
                checks,
                outputs: Some(json!({ "certificate": cert, "from_search": from_search })),
            }
        }
        Command::Monitor { input } => {
            let seq: Vec<FactorizablePresentation> = commands::read_json(input)?;
            let (checks, convergence) = commands::monitor(&seq, &tol)?;
            Outcome {
                command: "monitor",
                inputs: json!({ "length": seq.len() }),
                checks,
                outputs: Some(json!({ "convergence": convergence })),
            }
        }
    };

    let mut sorted = Checks::default();
    sorted.extend(outcome.checks);
    let pass = sorted.all_pass();
    let mut inputs = outcome.inputs;
    inputs["tol"] = json!(cli.tol);
    let report = RunReport {
        command: outcome.command.to_string(),
        seed: cli.seed,
        inputs,
        checks: sorted.into_sorted(),
        elapsed_ms: started.elapsed().as_millis() as u64,
        outputs: outcome.outputs,
    };
    let text = serde_json::to_string_pretty(&report)?;
    emit(&text)?;
    if outcome.command != "generate" {
        if let Some(out) = &cli.out {
            write_file(out, &text)?;
        }
    }
    Ok(pass)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(err) => {
            eprintln!("error: {err:#}");
            ExitCode::from(2)
        }
    }
}
