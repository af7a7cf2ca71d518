use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use lhc4_cli::{cmd_analyze, cmd_complete, cmd_split, cmd_validate, cmd_verify, VerifyOpts};

/// Completion and structural analysis of order-4 latin hypercuboids.
#[derive(Parser)]
#[command(name = "lhc4", version, about)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Check the latin property of a table file
    Validate { file: PathBuf },
    /// Complete a cuboid to a full latin hypercube
    Complete {
        file: PathBuf,
        /// Write the completed table here instead of standard output
        #[arg(short, long)]
        output: Option<PathBuf>,
    },
    /// Structural analysis of a full cube: reducibility, decomposition,
    /// semilinearity
    Analyze { file: PathBuf },
    /// Split a 2-fold MDS code (or a two-layer cuboid) into two latin layers
    Split { file: PathBuf },
    /// Reproduce a verified claim: base-cases, theorem-cuboids, prop1, or
    /// unsplittable-exists
    Verify {
        claim: String,
        #[arg(long)]
        arity: Option<usize>,
        /// exhaustive or sample (default: exhaustive when within reach)
        #[arg(long)]
        mode: Option<String>,
        #[arg(long, default_value_t = 10_000)]
        samples: u64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Worker threads (default: available parallelism); results are
        /// job-count independent
        #[arg(long)]
        jobs: Option<usize>,
        /// Soft wall-clock budget (default 60, or LHC_BUDGET_SECONDS)
        #[arg(long)]
        budget_seconds: Option<u64>,
        /// Also write the machine-readable report here
        #[arg(long)]
        report: Option<PathBuf>,
        /// Where to write the unsplittable witness code
        #[arg(long)]
        witness: Option<PathBuf>,
    },
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let stdout = std::io::stdout();
    let mut out = stdout.lock();
    let code = match cli.command {
        Command::Validate { file } => cmd_validate(&file, &mut out),
        Command::Complete { file, output } => cmd_complete(&file, output.as_deref(), &mut out),
        Command::Analyze { file } => cmd_analyze(&file, &mut out),
        Command::Split { file } => cmd_split(&file, &mut out),
        Command::Verify {
            claim,
            arity,
            mode,
            samples,
            seed,
            jobs,
            budget_seconds,
            report,
            witness,
        } => cmd_verify(
            &VerifyOpts {
                claim,
                arity,
                mode,
                samples,
                seed,
                jobs,
                budget_seconds,
                report,
                witness,
            },
            &mut out,
        ),
    };
    let _ = out.flush();
    ExitCode::from(code as u8)
}
