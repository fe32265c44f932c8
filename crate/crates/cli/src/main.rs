//! Command-line front end.
//!
//! Every command prints a single JSON document on stdout with sorted keys,
//! so identical inputs produce byte-identical output. Exit codes: 0 for
//! success (or an isomorphic decision), 1 for a negative decision or failed
//! verification, 2 when the decision is refused (`a = d = 1`), 3 for
//! malformed input.

use clap::error::ErrorKind;
use clap::{Parser, Subcommand};

mod commands;

#[derive(Parser)]
#[command(
    name = "treeshift",
    version,
    about = "Multishift Hilbert modules on directed Cartesian products of rooted trees",
    disable_help_subcommand = true
)]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Validate a tree-spec JSON file and summarize it.
    Validate {
        /// Path to the tree-spec document.
        file: String,
    },
    /// Cokernel blocks, dimensions, moment cross-checks and kernel
    /// coefficients for a product of trees.
    Report {
        /// Comma-separated tree-spec files, one per factor.
        files: String,
        /// Weight sequence: c_a:A | recip_c_a:A | table:V,..;eventual=E | const:V.
        #[arg(long)]
        c: Option<String>,
        /// Shorthand for --c c_a:A.
        #[arg(long)]
        a: Option<String>,
        /// Total depth bound (default: total branching bound + 2).
        #[arg(long)]
        depth: Option<usize>,
        /// Largest |alpha| for moment and coefficient tables.
        #[arg(long = "max-alpha", default_value_t = 4)]
        max_alpha: usize,
    },
    /// Decide whether two products carry isomorphic Hilbert modules.
    Classify {
        /// Comma-separated tree-spec files for the first product.
        left: String,
        /// Comma-separated tree-spec files for the second product.
        right: String,
        /// The positive integer module parameter.
        #[arg(long)]
        a: usize,
        /// Also construct and verify an intertwining unitary.
        #[arg(long)]
        intertwiner: bool,
        /// Truncation depth for the intertwiner (default: branching bound + 2).
        #[arg(long)]
        depth: Option<usize>,
        /// Residual tolerance for the intertwiner certificate.
        #[arg(long, default_value_t = 1e-9)]
        tol: f64,
    },
    /// Run the full oracle-equivalence sweep on a product.
    Verify {
        /// Comma-separated tree-spec files, one per factor.
        files: String,
        #[arg(long)]
        c: Option<String>,
        #[arg(long)]
        a: Option<String>,
        #[arg(long)]
        depth: Option<usize>,
        #[arg(long = "max-alpha", default_value_t = 4)]
        max_alpha: usize,
    },
    /// Representing-measure density and its exact moment verification.
    Measure {
        #[arg(long)]
        a: usize,
        #[arg(long)]
        d: usize,
        #[arg(long)]
        l: usize,
        #[arg(long = "max-n", default_value_t = 20)]
        max_n: usize,
    },
}

fn main() {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => match e.kind() {
            ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => {
                print!("{e}");
                std::process::exit(0);
            }
            _ => {
                eprintln!("input error: {e}");
                std::process::exit(3);
            }
        },
    };

    let outcome = match cli.cmd {
        Cmd::Validate { file } => commands::validate(&file),
        Cmd::Report { files, c, a, depth, max_alpha } => {
            commands::report(&files, c.as_deref(), a.as_deref(), depth, max_alpha)
        }
        Cmd::Classify { left, right, a, intertwiner, depth, tol } => {
            commands::classify(&left, &right, a, intertwiner, depth, tol)
        }
        Cmd::Verify { files, c, a, depth, max_alpha } => {
            commands::verify(&files, c.as_deref(), a.as_deref(), depth, max_alpha)
        }
        Cmd::Measure { a, d, l, max_n } => commands::measure(a, d, l, max_n),
    };

    match outcome {
        Ok((value, code)) => {
            println!("{}", serde_json::to_string_pretty(&value).expect("valid JSON"));
            std::process::exit(code);
        }
        Err(msg) => {
            eprintln!("input error: {msg}");
            std::process::exit(3);
        }
    }
}
