//! `cpnilp`: analyze, synthesize and batch-verify nilpotent CP maps.
//!
//! Every invocation prints one JSON document to stdout. Exit codes: 0 pass,
//! 1 a verdict failed, 2 parse or usage error, 3 numerical ambiguity,
//! 4 precondition violation.

mod commands;

use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use cpnilp_core::{Error, Tolerance};
use serde_json::json;

#[derive(Parser, Debug)]
#[command(name = "cpnilp", version, about = "Nilpotent completely positive maps toolkit")]
struct Cli {
    #[command(flatten)]
    tol: TolFlags,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Debug)]
struct TolFlags {
    /// Absolute singular-value cutoff.
    #[arg(long, global = true, default_value_t = 1e-10)]
    atol: f64,
    /// Relative singular-value cutoff.
    #[arg(long, global = true, default_value_t = 1e-8)]
    rtol: f64,
    /// Required ratio between the smallest kept and largest dropped singular value.
    #[arg(long, global = true, default_value_t = 1e4)]
    gap_ratio: f64,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Order, types, index and property verdicts of a kraus_map instance.
    Analyze {
        /// Instance file, or `-` for stdin.
        input: String,
    },
    /// Writes a nilpotent map of the given CP type with `d` Kraus coefficients.
    Synthesize {
        /// The type, e.g. `1,2`.
        #[arg(long = "type", value_delimiter = ',', required = true)]
        type_list: Vec<usize>,
        #[arg(long, short)]
        d: usize,
        /// Output file; stdout when absent.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Runs the property suite over seeded random trials.
    Verify {
        #[arg(long, default_value_t = 4, value_parser = clap::value_parser!(u64).range(1..))]
        n_max: u64,
        #[arg(long, default_value_t = 2, value_parser = clap::value_parser!(u64).range(1..))]
        d_max: u64,
        #[arg(long, default_value_t = 100, value_parser = clap::value_parser!(u64).range(1..))]
        trials: u64,
        #[arg(long, default_value_t = 1)]
        seed: u64,
        /// Directory for counterexample instance files.
        #[arg(long, default_value = "counterexamples")]
        out: PathBuf,
    },
    /// Extreme points of the majorization cone of `x`.
    Extreme {
        /// Entries of `x`, space or comma separated.
        #[arg(value_delimiter = ',', allow_negative_numbers = true, required_unless_present = "input")]
        x: Vec<f64>,
        /// A `vector` instance file instead of inline entries.
        #[arg(long, conflicts_with = "x")]
        input: Option<String>,
        /// Seed for the random cone samples used in the hull check.
        #[arg(long, default_value_t = 1)]
        seed: u64,
    },
    /// Roots of pure states.
    #[command(subcommand)]
    Root(RootCommand),
}

#[derive(Subcommand, Debug)]
enum RootCommand {
    /// Builds the root of a contractive nilpotent kraus_map instance.
    Build {
        input: String,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Checks a root_candidate instance.
    Check {
        input: String,
        /// Power to check instead of the file's `p`.
        #[arg(long)]
        p: Option<usize>,
    },
}

/// A failed command, classified by exit code.
#[derive(Debug)]
pub enum Failure {
    Usage(String),
    Numerical(String),
    Precondition(String),
}

impl Failure {
    fn code(&self) -> u8 {
        match self {
            Failure::Usage(_) => 2,
            Failure::Numerical(_) => 3,
            Failure::Precondition(_) => 4,
        }
    }

    fn kind(&self) -> &'static str {
        match self {
            Failure::Usage(_) => "usage",
            Failure::Numerical(_) => "ill_conditioned",
            Failure::Precondition(_) => "precondition",
        }
    }

    fn message(&self) -> &str {
        match self {
            Failure::Usage(m) | Failure::Numerical(m) | Failure::Precondition(m) => m,
        }
    }
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        match e {
            Error::IllConditioned(_) => Failure::Numerical(e.to_string()),
            _ => Failure::Precondition(e.to_string()),
        }
    }
}

/// Outcome of a command that ran to completion.
pub struct Outcome {
    pub document: serde_json::Value,
    pub code: u8,
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) if !e.use_stderr() => {
            // --help and --version
            let _ = write!(std::io::stdout().lock(), "{e}");
            return ExitCode::SUCCESS;
        }
        Err(e) => return fail(&Failure::Usage(e.to_string().trim_end().to_string())),
    };
    let tol = match Tolerance::new(cli.tol.rtol, cli.tol.atol, cli.tol.gap_ratio) {
        Ok(t) => t,
        Err(e) => return fail(&Failure::Usage(e.to_string())),
    };
    let result = match cli.command {
        Command::Analyze { input } => commands::analyze(&input, &tol),
        Command::Synthesize { type_list, d, out } => commands::synthesize(type_list, d, out.as_deref()),
        Command::Verify { n_max, d_max, trials, seed, out } => {
            commands::verify(n_max as usize, d_max as usize, trials, seed, &out, &tol)
        }
        Command::Extreme { x, input, seed } => commands::extreme(x, input.as_deref(), seed, &tol),
        Command::Root(RootCommand::Build { input, out }) => commands::root_build(&input, out.as_deref(), &tol),
        Command::Root(RootCommand::Check { input, p }) => commands::root_check(&input, p, &tol),
    };
    match result {
        Ok(outcome) => {
            emit(&outcome.document);
            ExitCode::from(outcome.code)
        }
        Err(f) => fail(&f),
    }
}

fn fail(f: &Failure) -> ExitCode {
    emit(&json!({ "error": { "kind": f.kind(), "message": f.message() } }));
    ExitCode::from(f.code())
}

fn emit(doc: &serde_json::Value) {
    let text = serde_json::to_string_pretty(doc).expect("serializable document");
    // a closed pipe downstream is not an error of ours
    let _ = writeln!(std::io::stdout().lock(), "{text}");
}
