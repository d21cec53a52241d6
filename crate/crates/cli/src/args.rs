use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};

/// Integrated information, Q-shapes and collapse dynamics of the two-unit
/// feedback dyad.
///
/// Every command is deterministic: identical flags give byte-identical output.
/// Exit status is 0 on success, 2 for invalid arguments and 3 when a numerical
/// guard trips (for example an integration step that is too large).
#[derive(Debug, Parser)]
#[command(name = "dyad", version)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Integrated information Φ of a classical dyad state.
    Phi(PhiArgs),
    /// Q-shape of one dyad state and its distances to the other states.
    Qshape(QshapeArgs),
    /// Pairwise Q-shape distance table of all four dyad states.
    Distances(DistancesArgs),
    /// Smallest collapse-operator eigenvalues respecting a distance table.
    Optimize(OptimizeArgs),
    /// Collapse dynamics: master equation or stochastic trajectories.
    #[command(subcommand)]
    Simulate(SimulateCommand),
    /// Quantum integrated information of a dyad density operator.
    Qphi(QphiArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Json,
    Csv,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Hamiltonian {
    /// Pure collapse, H = 0.
    Zero,
    /// H = (π/2)(I − SWAP), one SWAP per unit time.
    Swap,
}

#[derive(Debug, Args)]
pub struct OutputArgs {
    /// Write the report to this file instead of standard output. Relative
    /// paths are taken inside DYAD_OUT_DIR when that variable is set.
    #[arg(long, value_name = "PATH")]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct PhiArgs {
    /// Transition rule: swap, not-swap, identity, or the four successor
    /// indices of states 00,01,10,11 (e.g. 0,2,1,3).
    #[arg(long, default_value = "swap")]
    pub tpm: String,
    /// Current state as two binary digits, unit A first.
    #[arg(long)]
    pub state: String,
    #[command(flatten)]
    pub output: OutputArgs,
}

#[derive(Debug, Args)]
pub struct QshapeArgs {
    /// Transition rule (see `phi --help`); must be cross-coupled and bijective.
    #[arg(long, default_value = "swap")]
    pub tpm: String,
    /// Current state as two binary digits, unit A first.
    #[arg(long)]
    pub state: String,
    /// Row distance: tv (default), emd or kl.
    #[arg(long, default_value = "tv")]
    pub metric: String,
    #[command(flatten)]
    pub output: OutputArgs,
}

#[derive(Debug, Args)]
pub struct DistancesArgs {
    /// Transition rule (see `phi --help`); must be cross-coupled and bijective.
    #[arg(long, default_value = "swap")]
    pub tpm: String,
    /// Row distance: tv (default), emd or kl.
    #[arg(long, default_value = "tv")]
    pub metric: String,
    /// Include each state's two parts as points in the 8-dimensional
    /// (effect, cause) space.
    #[arg(long)]
    pub coordinates: bool,
    /// Output format. CSV holds the table only.
    #[arg(long, value_enum, default_value = "json")]
    pub format: Format,
    #[command(flatten)]
    pub output: OutputArgs,
}

#[derive(Debug, Args)]
pub struct OptimizeArgs {
    /// Distance table: `reference` (the dyad table with D=2 for five pairs
    /// and D(01,10)=4), `computed` (recomputed from the SWAP Q-shapes under
    /// total variation) or a path to a JSON 4x4 array.
    #[arg(long, default_value = "reference")]
    pub table: String,
    /// Also run the exhaustive lattice search and report agreement.
    #[arg(long)]
    pub oracle: bool,
    /// Lattice spacing of the oracle.
    #[arg(long, default_value_t = 1.0)]
    pub granularity: f64,
    /// Largest lattice value of the oracle [default: 3 x largest table entry].
    #[arg(long)]
    pub bound: Option<f64>,
    #[command(flatten)]
    pub output: OutputArgs,
}

#[derive(Debug, Args)]
pub struct DynamicsArgs {
    /// Collapse-operator eigenvalues for states 00,01,10,11.
    #[arg(long, value_delimiter = ',', default_value = "2,0,4,6")]
    pub eigenvalues: Vec<f64>,
    /// Global collapse rate λ.
    #[arg(long, default_value_t = 1.0)]
    pub lambda: f64,
    /// Hamiltonian of the unitary part.
    #[arg(long, value_enum, default_value = "zero")]
    pub hamiltonian: Hamiltonian,
    /// Start in the equal superposition of these two basis states.
    #[arg(long, num_args = 2, value_names = ["STATE", "STATE"], default_values = ["00", "01"], conflicts_with = "uniform")]
    pub pair: Vec<String>,
    /// Start in the equal superposition of all four basis states.
    #[arg(long)]
    pub uniform: bool,
    /// Time step.
    #[arg(long, default_value_t = 1e-4)]
    pub dt: f64,
    /// Record every this many steps in the path output.
    #[arg(long, default_value_t = 100)]
    pub sample_every: usize,
    /// Directory for output files.
    #[arg(long, env = "DYAD_OUT_DIR", default_value = ".")]
    pub out_dir: PathBuf,
    /// Format of path files.
    #[arg(long, value_enum, default_value = "csv")]
    pub format: Format,
}

#[derive(Debug, Subcommand)]
pub enum SimulateCommand {
    /// Integrate the master equation; writes lindblad_path.{csv,json} and
    /// lindblad_summary.json.
    Lindblad(LindbladArgs),
    /// Euler–Maruyama trajectory ensemble; writes sde_mean.{csv,json},
    /// sde_trajectory_<i>.{csv,json} and sde_summary.json.
    Sde(SdeArgs),
}

#[derive(Debug, Args)]
pub struct LindbladArgs {
    #[command(flatten)]
    pub dynamics: DynamicsArgs,
    /// Time horizon.
    #[arg(long = "t", default_value_t = 1.0)]
    pub t: f64,
}

#[derive(Debug, Args)]
pub struct SdeArgs {
    #[command(flatten)]
    pub dynamics: DynamicsArgs,
    /// Time horizon.
    #[arg(long = "t", default_value_t = 4.0)]
    pub t: f64,
    /// Number of trajectories.
    #[arg(long, default_value_t = 1000)]
    pub trajectories: u64,
    /// Seed of the random streams; trajectory i always uses stream i.
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Minimum population for a trajectory to count as collapsed.
    #[arg(long, default_value_t = 0.99)]
    pub collapse_threshold: f64,
    /// Write the full path of the first this many trajectories.
    #[arg(long, default_value_t = 1)]
    pub record: u64,
}

#[derive(Debug, Args)]
pub struct QphiArgs {
    /// Basis state (00, 01, 10, 11), plus0 for |+,0⟩ or 0plus for |0,+⟩.
    #[arg(long, conflicts_with = "amplitudes", required_unless_present = "amplitudes")]
    pub state: Option<String>,
    /// JSON file with four amplitudes, each a number or a [re, im] pair.
    #[arg(long, value_name = "FILE")]
    pub amplitudes: Option<PathBuf>,
    #[command(flatten)]
    pub output: OutputArgs,
}
