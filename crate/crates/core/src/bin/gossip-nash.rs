use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use gossip_nash::bench::{KvReport, WanetBenchmark};
use gossip_nash::commands::{
    analyze_command, bench_wanet_command, graph_command, oracle_command, run_command, Overrides,
};
use gossip_nash::config::{Algorithm, ConfigError, ErrorCategory, RunConfig};

#[derive(Parser)]
#[command(
    name = "gossip-nash",
    version,
    about = "Gossip Nash-equilibrium seeking on graphical games"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Simulate one algorithm and write trace.csv.
    Run(Common),
    /// Contraction factor, spectra and timing model.
    Analyze(Common),
    /// Compute or load the reference equilibrium.
    Oracle(Common),
    /// Build the triangle-free subgraph and validate the communication graph.
    Graph(Common),
    /// Benchmarks.
    #[command(subcommand)]
    Bench(BenchCommand),
}

#[derive(Subcommand)]
enum BenchCommand {
    /// Graphical vs. fully coupled algorithm on the congestion game.
    Wanet(BenchArgs),
}

#[derive(Args)]
struct Overridable {
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    iters: Option<u64>,
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long)]
    stride: Option<u64>,
    #[arg(long, value_enum)]
    algorithm: Option<AlgorithmArg>,
}

#[derive(Args)]
struct Common {
    #[arg(long)]
    config: PathBuf,
    #[command(flatten)]
    o: Overridable,
}

#[derive(Args)]
struct BenchArgs {
    /// Defaults to the shipped topology.
    #[arg(long)]
    config: Option<PathBuf>,
    #[command(flatten)]
    o: Overridable,
}

#[derive(Clone, Copy, ValueEnum)]
enum AlgorithmArg {
    Graphical,
    Full,
}

impl Overridable {
    fn overrides(&self) -> Overrides {
        Overrides {
            seed: self.seed,
            iters: self.iters,
            stride: self.stride,
            algorithm: self.algorithm.map(|a| match a {
                AlgorithmArg::Graphical => Algorithm::Graphical,
                AlgorithmArg::Full => Algorithm::Full,
            }),
            out: self.out.clone(),
        }
    }
}

fn load(path: Option<&PathBuf>, o: &Overridable) -> Result<RunConfig, ConfigError> {
    let mut cfg = match path {
        Some(p) => RunConfig::load(p)?,
        None => RunConfig::wanet(&WanetBenchmark::shipped()),
    };
    cfg.apply(&o.overrides())?;
    Ok(cfg)
}

fn dispatch(cmd: &Command) -> Result<KvReport, ConfigError> {
    match cmd {
        Command::Run(c) => run_command(&load(Some(&c.config), &c.o)?),
        Command::Analyze(c) => analyze_command(&load(Some(&c.config), &c.o)?),
        Command::Oracle(c) => oracle_command(&load(Some(&c.config), &c.o)?),
        Command::Graph(c) => graph_command(&load(Some(&c.config), &c.o)?),
        Command::Bench(BenchCommand::Wanet(b)) => bench_wanet_command(&load(b.config.as_ref(), &b.o)?),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match dispatch(&cli.command) {
        Ok(report) => {
            report.write(std::io::stdout()).ok();
            ExitCode::SUCCESS
        }
        Err(e) => {
            let category = e.category();
            let record = serde_json::json!({
                "status": "error",
                "category": category.as_str(),
                "message": e.to_string(),
            });
            eprintln!("{record}");
            ExitCode::from(match category {
                ErrorCategory::Config => 2,
                ErrorCategory::Validation => 3,
                ErrorCategory::Runtime => 4,
            })
        }
    }
}
