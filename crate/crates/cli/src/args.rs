use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use modasm_core::{AllocationMode, TrajectoryKind};

#[derive(Debug, Parser)]
#[command(name = "modasm", version, about = "Design, optimize and fly assemblies of quadrotor modules")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// List non-isomorphic configurations of n modules as JSON lines.
    Enumerate(EnumerateArgs),
    /// Optimize angles and inputs for every configuration in a JSONL file.
    Optimize(OptimizeArgs),
    /// Pick the smallest, cheapest feasible configuration across sizes.
    Select(SelectArgs),
    /// Sample the zero-torque force polytope of an optimized assembly.
    Polytope(PolytopeArgs),
    /// Fly an optimized assembly along a reference trajectory.
    Simulate(SimulateArgs),
    /// Run the stages listed in a manifest, skipping up-to-date artifacts.
    Pipeline(PipelineArgs),
    /// Turn an artifact into a plotting-ready CSV.
    PlotData(PlotDataArgs),
}

#[derive(Debug, Args)]
pub struct EnumerateArgs {
    #[arg(long)]
    pub n: usize,
    /// Keep at most this many configurations per size while growing.
    #[arg(long)]
    pub sample: Option<usize>,
    #[arg(long)]
    pub sigma: Option<f64>,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(short, long)]
    pub output: PathBuf,
}

#[derive(Debug, Args)]
pub struct SolveArgs {
    #[arg(long)]
    pub task: PathBuf,
    /// Module parameters; built-in defaults when omitted.
    #[arg(long)]
    pub params: Option<PathBuf>,
    #[arg(long, default_value_t = 4)]
    pub restarts: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Keep wall-clock solve times (outputs are then not byte-reproducible).
    #[arg(long)]
    pub keep_timing: bool,
}

#[derive(Debug, Args)]
pub struct OptimizeArgs {
    #[arg(long)]
    pub configs: PathBuf,
    #[command(flatten)]
    pub solve: SolveArgs,
    #[arg(short, long)]
    pub output: PathBuf,
}

#[derive(Debug, Args)]
pub struct SelectArgs {
    /// Directory of `.jsonl` configuration files.
    #[arg(long)]
    pub configs_dir: PathBuf,
    #[command(flatten)]
    pub solve: SolveArgs,
    #[arg(short, long)]
    pub output: PathBuf,
}

#[derive(Debug, Args)]
pub struct PolytopeArgs {
    /// Selection outcome or graph JSON with angles.
    #[arg(long)]
    pub config: PathBuf,
    #[arg(long)]
    pub params: Option<PathBuf>,
    /// Icosphere subdivision level (642 directions at 3).
    #[arg(long, default_value_t = 3)]
    pub level: usize,
    /// Measure extents from the hover force `[0, 0, n m g]` instead of the origin.
    #[arg(long)]
    pub gravity_compensated: bool,
    #[arg(short, long)]
    pub output: PathBuf,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum KindArg {
    Hover,
    Circle,
    Figure8,
}

impl From<KindArg> for TrajectoryKind {
    fn from(k: KindArg) -> Self {
        match k {
            KindArg::Hover => TrajectoryKind::Hover,
            KindArg::Circle => TrajectoryKind::Circle,
            KindArg::Figure8 => TrajectoryKind::Figure8,
        }
    }
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum AllocationArg {
    Bounded,
    Clamped,
}

impl From<AllocationArg> for AllocationMode {
    fn from(a: AllocationArg) -> Self {
        match a {
            AllocationArg::Bounded => AllocationMode::Bounded,
            AllocationArg::Clamped => AllocationMode::Clamped,
        }
    }
}

#[derive(Debug, Args)]
pub struct SimulateArgs {
    #[arg(long)]
    pub config: PathBuf,
    #[arg(long)]
    pub params: Option<PathBuf>,
    #[arg(long)]
    pub gains: Option<PathBuf>,
    /// Trajectory JSON; a circle with default sizes when omitted.
    #[arg(long)]
    pub traj: Option<PathBuf>,
    /// Overrides the trajectory kind.
    #[arg(long, value_enum)]
    pub kind: Option<KindArg>,
    #[arg(long, default_value_t = 0.001)]
    pub dt: f64,
    #[arg(long, default_value_t = 10.0)]
    pub duration: f64,
    #[arg(long, value_enum, default_value = "bounded")]
    pub allocation: AllocationArg,
    /// Log every k-th step.
    #[arg(long, default_value_t = 1)]
    pub stride: usize,
    #[arg(short, long)]
    pub output: PathBuf,
}

#[derive(Debug, Args)]
pub struct PipelineArgs {
    #[arg(long)]
    pub manifest: PathBuf,
    /// Re-run stages even when their artifacts are up to date.
    #[arg(long)]
    pub force: bool,
}

#[derive(Debug, Args)]
pub struct PlotDataArgs {
    #[arg(long)]
    pub input: PathBuf,
    /// costs-bar, polytope or tracking.
    #[arg(long)]
    pub kind: String,
    /// Keep every k-th row of a tracking log.
    #[arg(long, default_value_t = 10)]
    pub every: usize,
    /// Output CSV; stdout when omitted.
    #[arg(short, long)]
    pub output: Option<PathBuf>,
}
