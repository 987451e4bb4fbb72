//! `wildlab`: singular-tree calculus, power-counting certificates, a
//! spectral torus solver for semilinear heat equations with rough Gaussian
//! initial data, and seeded Monte Carlo scaling studies with reproducible
//! run directories.

mod commands;
mod manifest;

use clap::{Parser, Subcommand};

#[derive(Parser)]
#[command(name = "wildlab", version, about, max_term_width = 100)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Singular-tree enumeration and arithmetic.
    Trees {
        #[command(subcommand)]
        action: TreesAction,
    },
    /// Exponent bookkeeping and admissibility checks.
    Params {
        #[command(subcommand)]
        action: ParamsAction,
    },
    /// Decorated forests and power-counting certificates.
    Diagrams {
        #[command(subcommand)]
        action: DiagramsAction,
    },
    /// Random field sampling on the torus.
    Fields {
        #[command(subcommand)]
        action: FieldsAction,
    },
    /// Solve the equation from a mollified field via the remainder fixed
    /// point.
    Solve(commands::SolveArgs),
    /// Monte Carlo scaling studies.
    Study(commands::StudyArgs),
    /// Re-check the digests of a run directory's manifest.
    Verify {
        /// Run directory containing manifest.json.
        #[arg(long)]
        dir: std::path::PathBuf,
    },
}

#[derive(Subcommand)]
enum TreesAction {
    /// Print all isomorphism classes up to a leaf count as CSV.
    Enumerate(commands::TreesEnumerateArgs),
}

#[derive(Subcommand)]
enum ParamsAction {
    /// Check the admissibility condition for the canonical parameters.
    Check(commands::ParamsCheckArgs),
}

#[derive(Subcommand)]
enum DiagramsAction {
    /// Certify the two-point bounds for every pairing of a tree's forest.
    Certify(commands::DiagramsCertifyArgs),
}

#[derive(Subcommand)]
enum FieldsAction {
    /// Sample a mollified Gaussian free field and write it to disk.
    Sample(commands::FieldsSampleArgs),
}

fn init_threads() {
    if let Ok(v) = std::env::var("WILDLAB_THREADS") {
        if let Ok(n) = v.parse::<usize>() {
            if n >= 1 {
                let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
            }
        }
    }
}

fn main() {
    init_threads();
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Trees { action: TreesAction::Enumerate(args) } => commands::trees_enumerate(args),
        Command::Params { action: ParamsAction::Check(args) } => commands::params_check(args),
        Command::Diagrams { action: DiagramsAction::Certify(args) } => {
            commands::diagrams_certify(args)
        }
        Command::Fields { action: FieldsAction::Sample(args) } => commands::fields_sample(args),
        Command::Solve(args) => commands::solve(args),
        Command::Study(args) => commands::study(args),
        Command::Verify { dir } => manifest::verify_dir(&dir).map(|_| 0),
    };
    match result {
        Ok(code) => std::process::exit(code),
        Err(err) => {
            let payload = serde_json::json!({
                "error": err.to_string(),
                "chain": err.chain().skip(1).map(|c| c.to_string()).collect::<Vec<_>>(),
            });
            eprintln!("{payload}");
            std::process::exit(1);
        }
    }
}
