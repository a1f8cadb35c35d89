use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};

/// Simulation experiments for hypothesis tests against devices with memory.
///
/// Exit codes: 0 success, 1 runtime failure, 2 configuration error,
/// 3 resource limit exceeded.
#[derive(Debug, Parser)]
#[command(name = "noniid", version)]
pub struct Cli {
    /// Master seed; overrides the seed of a config file.
    #[arg(long, global = true)]
    pub seed: Option<u64>,

    /// Worker threads (default: all cores).
    #[arg(long, global = true)]
    pub threads: Option<usize>,

    /// Where to write the JSON report (default: the config's report path,
    /// else standard output).
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Monte Carlo acceptance rate of a config's test against its device.
    Simulate(SimulateArgs),
    /// Exact acceptance probability by transcript enumeration.
    Exact(ExactArgs),
    /// Convex-hull membership with a decomposition or separation certificate.
    Membership(MembershipArgs),
    /// Separating functional between a behavior and a set.
    Separate(MembershipArgs),
    /// Exposedness scan of the two-copy witness of a density matrix.
    Witness(WitnessArgs),
    /// Best deterministic triangle strategy for a config's test.
    Enumerate(ConfigArgs),
    /// Runs a test tailored to P_c against memory attacks and a local model.
    AttackDemo(AttackDemoArgs),
    /// Heuristic best triangle-local approximation of a target behavior.
    Approx(ApproxArgs),
    /// Checks a config without running it.
    Validate(ConfigArgs),
}

#[derive(Debug, Args)]
pub struct ConfigArgs {
    /// Scenario config file.
    pub config: PathBuf,
}

#[derive(Debug, Args)]
pub struct SimulateArgs {
    /// Scenario config file.
    pub config: PathBuf,

    /// Overrides the number of trials.
    #[arg(long)]
    pub trials: Option<usize>,

    /// Per-round trace CSV (default: the config's trace path).
    #[arg(long)]
    pub trace: Option<PathBuf>,

    /// Number of leading trials written to the trace.
    #[arg(long)]
    pub trace_trials: Option<usize>,
}

#[derive(Debug, Args)]
pub struct ExactArgs {
    /// Scenario config file.
    pub config: PathBuf,

    /// Also compute the acceptance in rational arithmetic.
    #[arg(long)]
    pub rational: bool,
}

#[derive(Debug, Args)]
pub struct MembershipArgs {
    /// Behavior to test: pc, p0, p1 or a behavior file.
    #[arg(long)]
    pub target: String,

    /// Members of the set, each pc, p0, p1 or a behavior file.
    #[arg(long = "set", required = true, num_args = 1..)]
    pub set: Vec<String>,

    /// Also solve in exact rational arithmetic.
    #[arg(long)]
    pub exact: bool,
}

#[derive(Debug, Args)]
pub struct WitnessArgs {
    /// Hilbert-space dimension of a random ρ.
    #[arg(long, default_value_t = 2)]
    pub dim: usize,

    /// Density matrix file; overrides `--dim`.
    #[arg(long)]
    pub rho: Option<PathBuf>,

    /// Random states scanned.
    #[arg(long, default_value_t = 10_000)]
    pub samples: usize,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum RegimeArg {
    Unlimited,
    Bounded,
    Banned,
}

#[derive(Debug, Args)]
pub struct AttackDemoArgs {
    #[arg(long, default_value_t = 1000)]
    pub n: usize,

    #[arg(long, default_value_t = 1000)]
    pub trials: usize,

    /// Acceptance radius: the test accepts when the ℓ1 distance to P_c is
    /// significantly below this value.
    #[arg(long, default_value_t = 0.25)]
    pub delta: f64,

    #[arg(long, default_value_t = 3.0)]
    pub k: f64,

    #[arg(long, value_enum, default_value_t = RegimeArg::Unlimited)]
    pub regime: RegimeArg,

    /// Triangle model file for the local device (default: run the optimizer).
    #[arg(long)]
    pub model: Option<PathBuf>,

    #[arg(long, default_value_t = 50)]
    pub restarts: usize,

    #[arg(long, default_value_t = 500)]
    pub iters: usize,
}

#[derive(Debug, Args)]
pub struct ApproxArgs {
    /// Target behavior: pc, p0, p1 or a behavior file.
    #[arg(long, default_value = "pc")]
    pub target: String,

    /// Source support size, shared by the three sources.
    #[arg(long, default_value_t = 4)]
    pub support: usize,

    #[arg(long, default_value_t = 50)]
    pub restarts: usize,

    #[arg(long, default_value_t = 500)]
    pub iters: usize,

    /// Writes the best model as a triangle model file.
    #[arg(long)]
    pub model_out: Option<PathBuf>,
}
