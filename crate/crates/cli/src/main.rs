use std::fs;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use epnozzle_cli::commands::{self, Context};
use epnozzle_cli::{parse_config, verify, CliError, CliResult};

#[derive(Parser)]
#[command(name = "epnozzle", version, about = "Steady supersonic Euler-Poisson nozzle flow")]
struct Cli {
    #[command(subcommand)]
    command: Command,
    /// Run configuration (`key = value` lines).
    #[arg(long, global = true, default_value = "configs/default.cfg")]
    config: PathBuf,
    /// Directory for CSV and SVG artifacts.
    #[arg(long, global = true, default_value = "out")]
    out: PathBuf,
    /// Seed for randomized checks.
    #[arg(long, global = true, default_value_t = 0)]
    seed: u64,
    #[arg(long, global = true)]
    verbose: bool,
}

#[derive(Subcommand, Clone, Copy)]
enum Command {
    /// Integrate and classify the background orbit.
    Background,
    /// Critical abscissas, Riccati constants and the admissible nozzle length.
    CriticalLength,
    /// One frozen-coefficient linear solve with its energy report.
    SolveLinear,
    /// Potential-flow fixed point.
    SolveIrrotational,
    /// Rotational fixed point with entropy transport.
    SolveRotational,
    /// Run the invariant suite and print a pass/fail table.
    Verify,
}

fn run(cli: &Cli) -> CliResult<()> {
    let text = fs::read_to_string(&cli.config)
        .map_err(|source| CliError::Read { path: cli.config.display().to_string(), source })?;
    let cfg = parse_config(&text)?;
    if !cfg.outputs.is_empty() {
        fs::create_dir_all(&cli.out)?;
    }
    let ctx = Context { cfg, out: cli.out.clone(), seed: cli.seed, verbose: cli.verbose };
    if ctx.verbose {
        println!("configuration {}:\n{}", cli.config.display(), ctx.cfg.to_text());
    }
    match cli.command {
        Command::Background => commands::background(&ctx),
        Command::CriticalLength => commands::critical_length_cmd(&ctx),
        Command::SolveLinear => commands::solve_linear(&ctx),
        Command::SolveIrrotational => commands::solve_nonlinear(&ctx, false),
        Command::SolveRotational => commands::solve_nonlinear(&ctx, true),
        Command::Verify => verify::run(&ctx),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
