mod commands;
mod graph_file;
mod report;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use consensus_core::dynamics::{ProtocolKind, RunOptions, Tolerances};

use commands::{AnalyzeArgs, Common, InitialState, SimulateArgs, TauArg};
use graph_file::GraphFile;

#[derive(Parser)]
#[command(
    name = "consensus",
    version,
    about = "Consensus analysis on weighted dependency digraphs"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct GraphArgs {
    /// Edge-list (`i j w` lines) or JSON graph file
    graph: PathBuf,

    /// Step size: a rational/decimal value or `max` (default tau_max/2)
    #[arg(long)]
    tau: Option<TauArg>,

    /// Use float arithmetic even when exact is possible
    #[arg(long)]
    float: bool,

    /// Print a JSON document instead of text
    #[arg(long)]
    json: bool,
}

#[derive(Subcommand)]
enum Command {
    /// Components, final classes, spectrum and eigenprojection
    Analyze {
        #[command(flatten)]
        graph: GraphArgs,
        /// Include L, S, P~, L~ and J S
        #[arg(long)]
        matrices: bool,
        /// Initial state; adds the limit of every protocol
        #[arg(long)]
        x0: Option<InitialState>,
    },
    /// Projection of x0 onto the consensus domain and its quasi-consensus value
    Project {
        #[command(flatten)]
        graph: GraphArgs,
        #[arg(long)]
        x0: InitialState,
    },
    /// Run one protocol and write its trace as CSV
    Simulate {
        #[command(flatten)]
        graph: GraphArgs,
        #[arg(long)]
        protocol: ProtocolKind,
        #[arg(long)]
        x0: InitialState,
        /// End of the continuous time grid (default 2^16 tau)
        #[arg(long)]
        t_max: Option<f64>,
        /// Step cap for discrete protocols
        #[arg(long, default_value_t = 100_000)]
        k_max: usize,
        /// Trace file; without it the CSV goes to stdout and the summary to stderr
        #[arg(long)]
        out: Option<PathBuf>,
        /// Change below which a trajectory counts as converged
        #[arg(long, default_value_t = consensus_core::dynamics::CONVERGENCE_TOL)]
        tol: f64,
        /// Steps that must all stay below --tol (discrete protocols)
        #[arg(long, default_value_t = consensus_core::dynamics::CONVERGENCE_WINDOW)]
        window: usize,
        /// Largest spread of a limit still reported as consensus
        #[arg(long, default_value_t = consensus_core::dynamics::CONSENSUS_TOL)]
        consensus_tol: f64,
    },
    /// Run the full invariant suite on this instance
    Verify {
        #[command(flatten)]
        graph: GraphArgs,
    },
}

fn load(args: GraphArgs) -> anyhow::Result<Common> {
    Ok(Common {
        graph: GraphFile::load(&args.graph)?,
        force_float: args.float,
        json: args.json,
        tau: args.tau,
    })
}

fn run(cli: Cli) -> anyhow::Result<ExitCode> {
    match cli.command {
        Command::Analyze {
            graph,
            matrices,
            x0,
        } => {
            commands::analyze(&load(graph)?, &AnalyzeArgs { matrices, x0 })?;
        }
        Command::Project { graph, x0 } => commands::project(&load(graph)?, &x0)?,
        Command::Simulate {
            graph,
            protocol,
            x0,
            t_max,
            k_max,
            out,
            tol,
            window,
            consensus_tol,
        } => {
            let options = RunOptions {
                t_max,
                k_max,
                tolerances: Tolerances {
                    convergence: tol,
                    window,
                    consensus: consensus_tol,
                },
            };
            commands::simulate(
                &load(graph)?,
                &SimulateArgs {
                    protocol,
                    x0,
                    options,
                    out,
                },
            )?;
        }
        Command::Verify { graph } => {
            if !commands::verify(&load(graph)?)? {
                return Ok(ExitCode::from(2));
            }
        }
    }
    Ok(ExitCode::SUCCESS)
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() {
                ExitCode::from(1)
            } else {
                ExitCode::SUCCESS
            };
        }
    };
    match run(cli) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("[!] error: {e:#}");
            ExitCode::from(1)
        }
    }
}
