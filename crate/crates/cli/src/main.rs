use std::fs;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use nric::reconstruction::TreeStrategy;
use nric::tangent::RIGIDITY_THRESHOLD;
use nric::Error;

mod commands;
mod settings;

use commands::{AverageArgs, DeformArgs, GeodesicArgs, ReconstructArgs, RigidityArgs, Status};
use settings::{parse_energy, Settings};

/// Exit codes. Clap reports usage errors with 2.
const EXIT_IO: u8 = 1;
const EXIT_PARSE: u8 = 3;
const EXIT_INVALID: u8 = 4;
const EXIT_INFEASIBLE: u8 = 5;
const EXIT_NOT_CONVERGED: u8 = 6;

#[derive(Parser, Debug)]
#[command(name = "nric", version, about = "Edge-length and dihedral-angle coordinates for triangle meshes")]
struct Cli {
    /// `key = value` file with solver, material and reconstruction settings.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Spanning tree for reconstruction: bfs, mst, spt or pre.
    #[arg(long, global = true, value_parser = parse_strategy)]
    strategy: Option<TreeStrategy>,
    /// Gauss–Newton steps after the traversal.
    #[arg(long = "gn-steps", global = true)]
    gn_steps: Option<usize>,
    /// Thickness weighting the bending energy.
    #[arg(long, global = true)]
    delta: Option<f64>,
    /// Deformation energy: nonlinear or quadratic.
    #[arg(long, global = true, value_parser = ["nonlinear", "quadratic"])]
    energy: Option<String>,
    /// Cap on worker threads.
    #[arg(long, global = true)]
    threads: Option<usize>,
    /// Also write the report to this file.
    #[arg(long, global = true)]
    report: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

fn parse_strategy(s: &str) -> Result<TreeStrategy, String> {
    s.parse().map_err(|e: Error| e.to_string())
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Integrability and triangle-inequality report for a mesh or an NRIC file.
    Check {
        input: PathBuf,
        /// Connectivity for NRIC input.
        #[arg(long)]
        mesh: Option<PathBuf>,
    },
    /// Infinitesimal rigidity test with respect to a set of dihedral angles.
    Rigidity {
        input: PathBuf,
        #[arg(long)]
        mesh: Option<PathBuf>,
        /// Interior edge indices whose angles may vary, one per line; default all.
        #[arg(long)]
        selector: Option<PathBuf>,
        /// Relative singular-value threshold for flexibility.
        #[arg(long, default_value_t = RIGIDITY_THRESHOLD)]
        threshold: f64,
        /// Angle step (radians, largest component) when extrapolating a flexible shape.
        #[arg(long, default_value_t = 0.05)]
        step: f64,
        /// Write the extrapolated shape when flexible.
        #[arg(long)]
        output: Option<PathBuf>,
    },
    /// Elastic projection under fixed lengths and angles.
    Deform {
        input: PathBuf,
        /// Lines `L <edge> <value>`, `A <edge> <value>`, `L*`, `A*`.
        #[arg(long)]
        constraints: Option<PathBuf>,
        #[arg(long, short)]
        output: PathBuf,
        /// Also write the solution as NRIC.
        #[arg(long)]
        nric_output: Option<PathBuf>,
    },
    /// Weighted elastic average of meshes sharing one connectivity.
    Average {
        #[arg(required = true)]
        inputs: Vec<PathBuf>,
        /// Comma-separated convex weights; uniform by default.
        #[arg(long, value_delimiter = ',')]
        weights: Option<Vec<f64>>,
        #[arg(long, short)]
        output: PathBuf,
    },
    /// Time-discrete geodesic between two meshes.
    Geodesic {
        start: PathBuf,
        end: PathBuf,
        /// Number of segments.
        #[arg(long, short = 'k', default_value_t = 10)]
        segments: usize,
        /// Keep every edge length at the endpoints' common value.
        #[arg(long)]
        fix_lengths: bool,
        /// Directory receiving `shape_000.obj` … `shape_K.obj`.
        #[arg(long = "out-dir")]
        out_dir: PathBuf,
    },
    /// Vertex positions from an NRIC file.
    Reconstruct {
        input: PathBuf,
        /// Connectivity.
        #[arg(long)]
        mesh: PathBuf,
        #[arg(long, short)]
        output: PathBuf,
        /// Extra NRIC samples for the preassembled tree.
        #[arg(long = "sample")]
        samples: Vec<PathBuf>,
        /// Per-face traversal order sidecar.
        #[arg(long)]
        order: Option<PathBuf>,
    },
    /// Mesh to NRIC or NRIC to mesh, by file extension.
    Convert {
        input: PathBuf,
        output: PathBuf,
        #[arg(long)]
        mesh: Option<PathBuf>,
    },
}

fn settings(cli: &Cli) -> nric::Result<Settings> {
    let mut s = Settings::load(cli.config.as_deref())?;
    if let Some(v) = cli.strategy {
        s.strategy = v;
    }
    if let Some(v) = cli.gn_steps {
        s.gn_steps = v;
    }
    if let Some(v) = cli.delta {
        s.params.delta = v;
    }
    if let Some(v) = &cli.energy {
        s.energy = parse_energy(v)?;
    }
    if cli.threads.is_some() {
        s.threads = cli.threads;
    }
    s.params.validate()?;
    Ok(s)
}

fn run(cli: &Cli) -> nric::Result<commands::Outcome> {
    let s = settings(cli)?;
    if let Some(n) = s.threads {
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| Error::InvalidArgument(format!("thread pool: {e}")))?;
    }
    match &cli.command {
        Command::Check { input, mesh } => commands::check(input, mesh.as_deref()),
        Command::Rigidity {
            input,
            mesh,
            selector,
            threshold,
            step,
            output,
        } => commands::rigidity(
            &RigidityArgs {
                input,
                mesh: mesh.as_deref(),
                selector: selector.as_deref(),
                threshold: *threshold,
                step: *step,
                output: output.as_deref(),
            },
            &s,
        ),
        Command::Deform {
            input,
            constraints,
            output,
            nric_output,
        } => commands::deform(
            &DeformArgs {
                input,
                constraints: constraints.as_deref(),
                output,
                nric_output: nric_output.as_deref(),
            },
            &s,
        ),
        Command::Average { inputs, weights, output } => commands::average(
            &AverageArgs {
                inputs,
                weights: weights.as_deref(),
                output,
            },
            &s,
        ),
        Command::Geodesic {
            start,
            end,
            segments,
            fix_lengths,
            out_dir,
        } => commands::geodesic(
            &GeodesicArgs {
                start,
                end,
                segments: *segments,
                fix_lengths: *fix_lengths,
                out_dir,
            },
            &s,
        ),
        Command::Reconstruct {
            input,
            mesh,
            output,
            samples,
            order,
        } => commands::reconstruct_cmd(
            &ReconstructArgs {
                input,
                mesh,
                samples,
                output,
                order: order.as_deref(),
            },
            &s,
        ),
        Command::Convert { input, output, mesh } => commands::convert(input, output, mesh.as_deref(), &s),
    }
}

fn exit_code(e: &Error) -> u8 {
    match e {
        Error::Parse { .. } => EXIT_PARSE,
        Error::Topology(_) | Error::DimensionMismatch { .. } | Error::InvalidArgument(_) | Error::NotOnManifold { .. } => EXIT_INVALID,
        Error::TriangleInequalityViolated(..)
        | Error::InfeasibleStart(_)
        | Error::InfeasiblePoint
        | Error::ReferenceDegenerate { .. }
        | Error::DegenerateFace { .. } => EXIT_INFEASIBLE,
        Error::NotPositiveDefinite => EXIT_NOT_CONVERGED,
        Error::Io(_) => EXIT_IO,
    }
}

fn main() -> ExitCode {
    env_logger::init();
    let cli = Cli::parse();
    match run(&cli) {
        Ok(outcome) => {
            print!("{}", outcome.report);
            if let Some(path) = &cli.report {
                if let Err(e) = fs::write(path, &outcome.report) {
                    eprintln!("error: cannot write report: {e}");
                    return ExitCode::from(EXIT_IO);
                }
            }
            match outcome.status {
                Status::Success => ExitCode::SUCCESS,
                Status::NotConverged => {
                    eprintln!("error: solver did not meet its stopping criterion");
                    ExitCode::from(EXIT_NOT_CONVERGED)
                }
                Status::Infeasible => {
                    eprintln!("error: input is infeasible");
                    ExitCode::from(EXIT_INFEASIBLE)
                }
            }
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code(&e))
        }
    }
}
