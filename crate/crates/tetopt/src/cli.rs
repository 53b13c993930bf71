//! Command-line interface: `optimize`, `quality` and `seed` subcommands.
//!
//! Exit codes: 0 on success, 1 on input errors (arguments, files, formats),
//! 2 on internal validation failures.

use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};

use crate::error::Error;
use crate::io::{read_mesh, write_mesh, write_report, MeshFormat, ReportDoc};
use crate::pipeline::{run_pipeline, PipelineConfig, RunTrace};
use crate::quality::build_report;
use crate::seedgen::{cube_seed, ball_seed, DomainSpec};
use crate::solver::SolverConfig;

#[derive(Parser, Debug)]
#[command(
    name = "tetopt",
    about = "Tetrahedral mesh optimizer: convex per-vertex squared-volume minimization with local remeshing"
)]
struct Cli {
    #[command(subcommand)]
    cmd: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Optimize a tetrahedral mesh toward uniform, low-sliver elements
    Optimize(OptimizeArgs),
    /// Compute quality metrics of a mesh without touching it
    Quality(QualityArgs),
    /// Generate a seed mesh for an analytic domain
    Seed(SeedArgs),
}

#[derive(Args, Debug)]
struct OptimizeArgs {
    /// Input mesh file
    #[arg(long)]
    input: PathBuf,
    /// Output mesh file
    #[arg(long)]
    output: PathBuf,
    /// Quality/trace report (JSON)
    #[arg(long)]
    report: Option<PathBuf>,
    /// Target edge length in model units
    #[arg(long = "target-edge")]
    target_edge: f64,
    /// Convergence tolerance on the average minimum dihedral angle (degrees)
    #[arg(long = "eps-theta", default_value_t = 0.01)]
    eps_theta: f64,
    /// Outer-iteration cap per stage
    #[arg(long = "max-iters", default_value_t = 100)]
    max_iters: usize,
    /// Skip the volume-oriented stage
    #[arg(long = "skip-volume-stage")]
    skip_volume_stage: bool,
    /// Skip the angle-oriented stage
    #[arg(long = "skip-angle-stage")]
    skip_angle_stage: bool,
    /// RNG seed (reserved for seeded inputs; recorded for reproducibility)
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Mesh format: medit or vtk (default: by file extension)
    #[arg(long)]
    format: Option<String>,
}

#[derive(Args, Debug)]
struct QualityArgs {
    /// Input mesh file
    #[arg(long)]
    input: PathBuf,
    /// Report destination (JSON)
    #[arg(long)]
    report: PathBuf,
    /// Mesh format: medit or vtk (default: by file extension)
    #[arg(long)]
    format: Option<String>,
}

#[derive(Args, Debug)]
struct SeedArgs {
    #[command(subcommand)]
    shape: SeedShape,
}

#[derive(Subcommand, Debug)]
enum SeedShape {
    /// Ball of the given radius centered at the origin
    Ball {
        #[arg(long)]
        radius: f64,
        #[arg(long = "target-edge")]
        target_edge: f64,
        #[arg(long)]
        output: PathBuf,
        /// RNG seed for the insertion order
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Mesh format: medit or vtk (default: by file extension)
        #[arg(long)]
        format: Option<String>,
    },
    /// Axis-aligned cube with one corner at the origin
    Cube {
        #[arg(long)]
        side: f64,
        #[arg(long = "target-edge")]
        target_edge: f64,
        #[arg(long)]
        output: PathBuf,
        /// Mesh format: medit or vtk (default: by file extension)
        #[arg(long)]
        format: Option<String>,
    },
}

fn pick_format(flag: &Option<String>, path: &Path) -> Result<MeshFormat, Error> {
    match flag {
        Some(s) => s.parse(),
        None => Ok(MeshFormat::from_path(path)),
    }
}

fn exit_code(err: &Error) -> i32 {
    match err {
        Error::ValidationFailure(_) | Error::InfeasibleStart(_) => 2,
        _ => 1,
    }
}

fn run(cli: Cli) -> Result<(), Error> {
    match cli.cmd {
        Command::Optimize(args) => {
            let in_format = pick_format(&args.format, &args.input)?;
            let out_format = pick_format(&args.format, &args.output)?;
            let mesh = read_mesh(&args.input, in_format)?;
            let cfg = PipelineConfig {
                target_edge: args.target_edge,
                eps_theta: args.eps_theta,
                max_outer_iters: args.max_iters,
                angle_focus: 40.0,
                solver: SolverConfig::default(),
                volume_stage: !args.skip_volume_stage,
                angle_stage: !args.skip_angle_stage,
                seed: args.seed,
            };
            let out = run_pipeline(mesh, &cfg)?;
            write_mesh(&out.mesh, &args.output, out_format)?;
            if let Some(report_path) = &args.report {
                write_report(&ReportDoc::new(out.report.clone(), out.trace.clone()), report_path)?;
            }
            eprintln!(
                "optimized {} tets in {:.1}s: theta_min_avg {:.2} deg, bad elements {:.3}%",
                out.report.tet_count,
                out.trace.wall_time_s,
                out.report.theta_min_avg,
                out.report.bad_fraction_percent
            );
            Ok(())
        }
        Command::Quality(args) => {
            let format = pick_format(&args.format, &args.input)?;
            let mesh = read_mesh(&args.input, format)?;
            mesh.validate()?;
            let report = build_report(&mesh)?;
            write_report(&ReportDoc::new(report, RunTrace::default()), &args.report)?;
            Ok(())
        }
        Command::Seed(args) => match args.shape {
            SeedShape::Ball {
                radius,
                target_edge,
                output,
                seed,
                format,
            } => {
                let mesh = ball_seed(&DomainSpec::ball(radius, target_edge), seed)?;
                let fmt = pick_format(&format, &output)?;
                write_mesh(&mesh, &output, fmt)
            }
            SeedShape::Cube {
                side,
                target_edge,
                output,
                format,
            } => {
                let mesh = cube_seed(&DomainSpec::cube(side, target_edge))?;
                let fmt = pick_format(&format, &output)?;
                write_mesh(&mesh, &output, fmt)
            }
        },
    }
}

/// Parses and executes the given argv; returns the process exit code.
pub fn run_cli<I, S>(argv: I) -> i32
where
    I: IntoIterator<Item = S>,
    S: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(cli) => cli,
        Err(e) => {
            // Help and version requests are successful exits.
            use clap::error::ErrorKind;
            let code = match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => 0,
                _ => 1,
            };
            let _ = e.print();
            return code;
        }
    };
    match run(cli) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            exit_code(&e)
        }
    }
}
