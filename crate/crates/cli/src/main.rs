use std::path::PathBuf;
use std::process::ExitCode;

use capslice_core::composite::GuardMode;
use capslice_core::slicer::DEFAULT_MAX_BASIC_SETS;
use capslice_core::Execution;
use clap::{Parser, Subcommand, ValueEnum};

mod commands;
mod dot;
mod output;

use output::Failure;

/// Capability slicing over Function Decomposition graphs.
#[derive(Debug, Parser)]
#[command(name = "capslice", version, about)]
struct Cli {
    /// Output format for the primary result.
    #[arg(long, global = true, value_enum, default_value_t = Format::Json)]
    format: Format,

    /// Hard cap on enumerated basic slice sets.
    #[arg(
        long,
        global = true,
        env = "CAPSLICE_MAX_BASIC_SETS",
        default_value_t = DEFAULT_MAX_BASIC_SETS
    )]
    max_basic_sets: usize,

    /// Worker threads for the analysis; 1 runs sequentially.
    #[arg(long, global = true, value_parser = clap::value_parser!(u16).range(1..))]
    threads: Option<u16>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Json,
    Csv,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Guard {
    Median,
    None,
}

impl From<Guard> for GuardMode {
    fn from(g: Guard) -> Self {
        match g {
            Guard::Median => GuardMode::Median,
            Guard::None => GuardMode::None,
        }
    }
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Check a graph document and list diagnostics.
    Validate { graph: PathBuf },
    /// Per-node kind, size, depth, cohesion and directive set.
    Inspect {
        graph: PathBuf,
        /// Restrict output to one node.
        #[arg(long)]
        node: Option<String>,
    },
    /// Basic slice sets, or ordered slices with --ordered.
    Slices {
        graph: PathBuf,
        #[arg(long)]
        ordered: bool,
        /// Stop after N rows.
        #[arg(long)]
        limit: Option<usize>,
    },
    /// Metrics of one ordered slice.
    Metrics {
        graph: PathBuf,
        /// Comma-separated node ids in slice order.
        #[arg(long, value_delimiter = ',', required = true)]
        slice: Vec<String>,
    },
    /// Metrics of every ordered slice and summary statistics.
    Rank { graph: PathBuf },
    /// Run the composite selection algorithm.
    Select {
        graph: PathBuf,
        #[arg(long, value_enum, default_value_t = Guard::Median)]
        cohesion_guard: Guard,
        #[arg(long, value_enum, default_value_t = Guard::Median)]
        coupling_guard: Guard,
    },
    /// Write size/depth plot data and report their correlation.
    Scatter {
        graph: PathBuf,
        #[arg(short, long)]
        output: PathBuf,
    },
    /// Build core function sets from a synthesis input document.
    Synth { input: PathBuf },
    /// Render the graph as DOT.
    ExportDot { graph: PathBuf },
}

pub struct Context {
    pub format: Format,
    pub max_basic_sets: usize,
    pub exec: Execution,
}

fn configure_threads(threads: Option<u16>) -> Result<Execution, Failure> {
    match threads {
        Some(1) => Ok(Execution::Sequential),
        #[cfg(feature = "parallel")]
        Some(n) => {
            rayon::ThreadPoolBuilder::new()
                .num_threads(usize::from(n))
                .build_global()
                .map_err(|e| Failure::Usage(format!("cannot start thread pool: {e}")))?;
            Ok(Execution::Parallel)
        }
        #[cfg(not(feature = "parallel"))]
        Some(_) => Ok(Execution::Sequential),
        None => Ok(Execution::Parallel),
    }
}

fn run(cli: Cli) -> Result<output::Success, Failure> {
    let ctx = Context {
        format: cli.format,
        max_basic_sets: cli.max_basic_sets,
        exec: configure_threads(cli.threads)?,
    };
    match cli.command {
        Command::Validate { graph } => commands::validate(&ctx, &graph),
        Command::Inspect { graph, node } => commands::inspect(&ctx, &graph, node.as_deref()),
        Command::Slices {
            graph,
            ordered,
            limit,
        } => commands::slices(&ctx, &graph, ordered, limit),
        Command::Metrics { graph, slice } => commands::metrics(&ctx, &graph, &slice),
        Command::Rank { graph } => commands::rank(&ctx, &graph),
        Command::Select {
            graph,
            cohesion_guard,
            coupling_guard,
        } => commands::select(&ctx, &graph, cohesion_guard.into(), coupling_guard.into()),
        Command::Scatter { graph, output } => commands::scatter(&ctx, &graph, &output),
        Command::Synth { input } => commands::synth(&ctx, &input),
        Command::ExportDot { graph } => commands::export_dot(&graph),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(success) => success.emit(),
        Err(failure) => failure.emit(),
    }
}
