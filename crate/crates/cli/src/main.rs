use clap::{Parser, Subcommand};
use drds_cli::{run, Command, Options};
use std::path::PathBuf;

#[derive(Parser)]
#[command(name = "drds", version, about = "Distributionally robust density steering")]
struct Cli {
    #[command(subcommand)]
    command: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Solve the steering program and write `policy.txt`.
    Solve(RunArgs),
    /// Roll out a policy under a disturbance regime; writes `trajectories.csv` and `simulate.txt`.
    Simulate(RunArgs),
    /// Solve (unless `--policy` is given), simulate, and write `report.txt`, `report.csv` and `splash.csv`.
    Report(RunArgs),
    /// Run the built-in oracle suite.
    Check {
        /// Also validate this scenario file.
        scenario: Option<PathBuf>,
    },
}

#[derive(clap::Args)]
struct RunArgs {
    scenario: PathBuf,
    #[arg(long)]
    policy: Option<PathBuf>,
    #[arg(long, value_parser = ["nominal", "maximal", "student-t", "custom"])]
    noise: Option<String>,
    #[arg(long)]
    samples: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long, default_value = ".")]
    out: PathBuf,
    #[arg(long, value_parser = ["paper", "opnorm"])]
    mode: Option<String>,
    #[arg(long, default_value = "drds", value_parser = ["drds", "cs"])]
    controller: String,
    /// Print one line per solver iteration.
    #[arg(long)]
    verbose: bool,
}

impl RunArgs {
    fn options(self) -> Options {
        Options {
            scenario: Some(self.scenario),
            policy: self.policy,
            noise: self.noise,
            samples: self.samples,
            seed: self.seed,
            out: self.out,
            mode: self.mode,
            controller: self.controller,
            verbose: self.verbose,
        }
    }
}

fn main() {
    let cli = Cli::parse();
    let (cmd, opts) = match cli.command {
        Cmd::Solve(a) => (Command::Solve, a.options()),
        Cmd::Simulate(a) => (Command::Simulate, a.options()),
        Cmd::Report(a) => (Command::Report, a.options()),
        Cmd::Check { scenario } => (Command::Check, Options { scenario, ..Options::default() }),
    };
    let mut out = std::io::stdout();
    if let Err(e) = run(cmd, &opts, &mut out) {
        eprintln!("error: {e}");
        std::process::exit(e.exit_code());
    }
}
