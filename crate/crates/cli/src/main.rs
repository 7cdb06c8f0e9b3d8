mod commands;
mod grid;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    /// Bad flag combination or value; exit code 2.
    #[error("{0}")]
    Usage(String),
    /// Invalid topology, infeasible bounds or a failed check; exit code 1.
    #[error("{0}")]
    Failed(String),
    /// A check ran and found problems: `report` goes to stdout; exit code 1.
    #[error("{summary}")]
    Rejected { report: String, summary: String },
}

impl From<meshcog::Error> for CliError {
    fn from(e: meshcog::Error) -> Self {
        match e {
            meshcog::Error::Domain(msg) => CliError::Usage(msg),
            other => CliError::Failed(other.to_string()),
        }
    }
}

#[derive(Debug, Parser)]
#[command(
    name = "meshcog",
    version,
    about = "Capacity of mesh networks with overlay cognitive radio"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Exact and/or greedy capacity in baseline and overlay modes.
    Capacity(CapacityArgs),
    /// Rate factor gamma over a grid of cross gains and powers.
    Gamma(GammaArgs),
    /// Check a topology file.
    Validate { path: PathBuf },
    /// Greedy slot-by-slot simulation.
    Simulate(SimulateArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Text,
    Csv,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Engine {
    Exact,
    Greedy,
    Both,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum ModeArg {
    Baseline,
    Overlay,
    Both,
}

#[derive(Debug, Args)]
pub struct TopologyArgs {
    /// Chain of N nodes plus the gateway.
    #[arg(long, value_name = "N", group = "topology")]
    pub chain: Option<usize>,
    /// Regular layout with B branches of depth D, e.g. 4x5.
    #[arg(long, value_name = "BxD", group = "topology")]
    pub regular: Option<String>,
    /// Topology file.
    #[arg(long, value_name = "PATH", group = "topology")]
    pub file: Option<PathBuf>,
    /// Interference range as a multiple of the transmission range (generators only).
    #[arg(long)]
    pub factor: Option<f64>,
    /// Comma-separated traffic sources; defaults to the farthest nodes or the file's routes.
    #[arg(long, value_delimiter = ',')]
    pub sources: Option<Vec<String>>,
}

#[derive(Debug, Args)]
pub struct RateArgs {
    /// Pin gamma instead of computing it from the powers and cross gain.
    #[arg(long)]
    pub gamma: Option<f64>,
    /// Primary power.
    #[arg(long, default_value_t = 10.0)]
    pub pp: f64,
    /// Secondary power.
    #[arg(long, default_value_t = 10.0)]
    pub ps: f64,
    /// Cross gain from the secondary transmitter to the primary receiver.
    #[arg(long = "a", default_value_t = 0.2)]
    pub cross_gain: f64,
}

#[derive(Debug, Args)]
pub struct CapacityArgs {
    #[command(flatten)]
    pub topology: TopologyArgs,
    #[command(flatten)]
    pub rate: RateArgs,
    #[arg(long, value_enum, default_value_t = Engine::Exact)]
    pub engine: Engine,
    #[arg(long, default_value_t = meshcog::Bounds::default().t_max)]
    pub t_max: usize,
    #[arg(long, default_value_t = meshcog::Bounds::default().k_max)]
    pub k_max: usize,
    #[arg(long, default_value_t = meshcog::Bounds::default().inflight_max)]
    pub inflight_max: usize,
    /// Greedy engine: slots to simulate.
    #[arg(long, default_value_t = 10_050)]
    pub slots: usize,
    /// Greedy engine: slots discarded before measuring.
    #[arg(long, default_value_t = meshcog::simulator::DEFAULT_WARMUP)]
    pub warmup: usize,
    /// Also report capacities in bits per channel use.
    #[arg(long)]
    pub bits_per_use: bool,
    /// Write the exact schedules to this file.
    #[arg(long, value_name = "PATH")]
    pub dump_schedule: Option<PathBuf>,
    #[arg(long, value_enum, default_value_t = Format::Text)]
    pub format: Format,
}

#[derive(Debug, Args)]
pub struct GammaArgs {
    /// Cross gains: a value, a list `0.1,0.2` or a range `start:stop:step`.
    #[arg(long = "a", default_value = "0.1:1.0:0.1")]
    pub cross_gain: String,
    /// Powers (P_P = P_S), same syntax as `--a`.
    #[arg(long, default_value = "1,2,5,10,20,30,40")]
    pub power: String,
    #[arg(long, value_enum, default_value_t = Format::Csv)]
    pub format: Format,
}

#[derive(Debug, Args)]
pub struct SimulateArgs {
    #[command(flatten)]
    pub topology: TopologyArgs,
    #[command(flatten)]
    pub rate: RateArgs,
    #[arg(long, value_enum, default_value_t = ModeArg::Both)]
    pub mode: ModeArg,
    #[arg(long, default_value_t = 10_050)]
    pub slots: usize,
    #[arg(long, default_value_t = meshcog::simulator::DEFAULT_WARMUP)]
    pub warmup: usize,
    /// Randomize ties between equally urgent packets.
    #[arg(long)]
    pub seed: Option<u64>,
    /// Write every simulated slot to this file.
    #[arg(long, value_name = "PATH")]
    pub trace: Option<PathBuf>,
    #[arg(long, value_enum, default_value_t = Format::Csv)]
    pub format: Format,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Capacity(args) => commands::capacity(&args),
        Command::Gamma(args) => commands::gamma(&args),
        Command::Validate { path } => commands::validate(&path),
        Command::Simulate(args) => commands::simulate(&args),
    };
    match result {
        Ok(out) => {
            print!("{out}");
            ExitCode::SUCCESS
        }
        Err(CliError::Usage(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(2)
        }
        Err(CliError::Failed(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(1)
        }
        Err(CliError::Rejected { report, summary }) => {
            print!("{report}");
            eprintln!("error: {summary}");
            ExitCode::from(1)
        }
    }
}
