use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::Result;
use clap::{Args, Parser, Subcommand};
use ucgen::{cmd_check, cmd_genocl, cmd_gentests, cmd_stress, RunConfig};
use ucgen_core::scenario::Criterion;

#[derive(Parser)]
#[command(name = "ucgen", version, about = "Generate acceptance tests from use case specifications")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Parse inputs and report entities missing from the domain model.
    Check(Inputs),
    /// Generate constraints for use case steps.
    Genocl {
        #[command(flatten)]
        inputs: Inputs,
        /// Tab separated `id sentence expected` file processed instead of use cases.
        #[arg(long)]
        corpus: Option<PathBuf>,
        #[arg(long, default_value = "out")]
        out: PathBuf,
    },
    /// Generate scenarios, object diagrams and test cases.
    Gentests {
        #[command(flatten)]
        inputs: Inputs,
        #[arg(long)]
        mapping: Option<PathBuf>,
        /// Restrict generation to one top level use case.
        #[arg(long)]
        use_case: Option<String>,
        #[arg(long, default_value = "branch")]
        criterion: Criterion,
        #[arg(long = "loop-bound", short = 'T', default_value_t = 1)]
        loop_bound: usize,
        #[arg(long, default_value_t = 10)]
        max_iterations: usize,
        /// Solver threads; 0 uses every core.
        #[arg(long, default_value_t = 0)]
        jobs: usize,
        #[arg(long)]
        disable_coverage_termination: bool,
        #[arg(long, default_value = "out")]
        out: PathBuf,
    },
    /// Print node visit counts of the worst case test model as CSV.
    Stress {
        #[arg(long, short = 'n', default_value_t = 5)]
        nodes: usize,
        #[arg(long, default_value_t = 0)]
        min_loop_bound: usize,
        #[arg(long, default_value_t = 2)]
        max_loop_bound: usize,
    },
}

#[derive(Args)]
struct Inputs {
    /// Use case specification files.
    rucm: Vec<PathBuf>,
    #[arg(long)]
    model: PathBuf,
    #[arg(long)]
    lexicon: Option<PathBuf>,
    /// `key := constraint` overrides.
    #[arg(long)]
    constraints: Option<PathBuf>,
}

impl Inputs {
    fn config(self) -> RunConfig {
        RunConfig {
            rucm: self.rucm,
            model: Some(self.model),
            lexicon: self.lexicon,
            constraints: self.constraints,
            ..Default::default()
        }
    }
}

fn run() -> Result<i32> {
    let outcome = match Cli::parse().command {
        Command::Check(inputs) => cmd_check(&inputs.config())?,
        Command::Genocl { inputs, corpus, out } => cmd_genocl(&RunConfig { corpus, out, ..inputs.config() })?,
        Command::Gentests {
            inputs,
            mapping,
            use_case,
            criterion,
            loop_bound,
            max_iterations,
            jobs,
            disable_coverage_termination,
            out,
        } => cmd_gentests(&RunConfig {
            mapping,
            use_case,
            criterion,
            loop_bound,
            max_iterations,
            jobs,
            disable_coverage_termination,
            out,
            ..inputs.config()
        })?,
        Command::Stress { nodes, min_loop_bound, max_loop_bound } => {
            print!("{}", cmd_stress(nodes, min_loop_bound..=max_loop_bound));
            return Ok(0);
        }
    };
    print!("{}", outcome.output);
    Ok(outcome.code)
}

fn main() -> ExitCode {
    match run() {
        Ok(code) => ExitCode::from(code as u8),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}
