use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use sbvp_lab::{solve, verify, Experiment, LabError, Outcome, RunConfig, RunContext};

/// Numerical lab for ½Δu = u^{-α} in a ball with a minorant vanishing on a cap.
#[derive(Debug, Parser)]
#[command(name = "sbvp", version)]
struct Cli {
    /// Run configuration (TOML). Without it the defaults are used.
    #[arg(long, global = true)]
    config: Option<PathBuf>,

    /// Overrides `mc.seed`.
    #[arg(long, global = true)]
    seed: Option<u64>,

    /// Output directory.
    #[arg(long, global = true, default_value = "out")]
    out: PathBuf,

    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Solve the boundary value problem on a grid.
    Solve,
    /// Run one diagnostic experiment.
    Verify {
        #[arg(value_enum)]
        which: Experiment,
    },
}

fn run(cli: &Cli) -> Result<Outcome, LabError> {
    let (cfg, hash) = match &cli.config {
        Some(path) => RunConfig::load(path)?,
        None => RunConfig::from_toml("")?,
    };
    let ctx = RunContext::new(cfg, hash, cli.seed, &cli.out);
    match cli.command {
        Command::Solve => solve(&ctx).map(|(_, o)| o),
        Command::Verify { which } => verify(&ctx, which).map(|(_, o)| o),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let code = match run(&cli) {
        Ok(o) => {
            if o.exit_code == 0 {
                println!("{}", o.message);
            } else {
                eprintln!("{}", o.message);
            }
            o.exit_code
        }
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    };
    ExitCode::from(code as u8)
}
