//! The `dps` command-line tool.
//!
//! Every command builds its complete output in memory; nothing is written
//! unless the whole computation succeeds.

mod commands;
pub mod io;
pub mod report;

use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;

use crate::bipartite::NEG_TOL;
use crate::matrix::{HERMITIAN_TOL, TRACE_TOL};
use crate::metrics::CHAIN_TOL;
use crate::moments::T3_TOL;

pub use report::{CliError, CliResult, Report};

#[derive(Debug, Parser)]
#[command(name = "dps", version, about = "Depolarized pure state analysis")]
pub struct Cli {
    /// Hermiticity tolerance applied when loading states.
    #[arg(long, global = true, default_value_t = HERMITIAN_TOL)]
    pub hermitian_tol: f64,
    /// Unit-trace tolerance applied when loading states.
    #[arg(long, global = true, default_value_t = TRACE_TOL)]
    pub trace_tol: f64,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Coherence vector, invariant ladder and DPS verdict of a state.
    Analyze(AnalyzeArgs),
    /// Fidelity, trace distance and Bures measures between two states.
    Distance(DistanceArgs),
    /// Partial-transpose spectrum and negativity of a bipartite state.
    Entanglement(EntanglementArgs),
    /// Schmidt form of the purification of a bipartite DPS.
    Schmidt(SchmidtArgs),
    /// Isotropic state with a given singlet fraction.
    Isotropic(IsotropicArgs),
    /// Two-qubit DPS in canonical form.
    Werner2q(Werner2qArgs),
    /// Depolarization channels and protocols.
    #[command(subcommand)]
    Channel(ChannelCommand),
    /// Trace moments Tr(rho^m).
    Moments(MomentsArgs),
    /// CSV surface data for two equally polarized states.
    Fig1(Fig1Args),
    /// Generate state files.
    #[command(subcommand)]
    Gen(GenCommand),
}

#[derive(Debug, Clone, Copy, Serialize, Args)]
pub struct DpsTolArgs {
    /// Bound on the star-product residual.
    #[arg(long, default_value_t = 1e-8)]
    pub star_tol: f64,
    /// Bound on the deviation from the DPS spectrum pattern.
    #[arg(long, default_value_t = 1e-8)]
    pub spectrum_tol: f64,
}

#[derive(Debug, Serialize, Args)]
pub struct AnalyzeArgs {
    pub state: PathBuf,
    #[command(flatten)]
    pub tol: DpsTolArgs,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum DistanceMethod {
    Closed,
    Oracle,
    Both,
}

#[derive(Debug, Serialize, Args)]
pub struct DistanceArgs {
    pub state_a: PathBuf,
    pub state_b: PathBuf,
    #[arg(long, value_enum, default_value_t = DistanceMethod::Both)]
    pub method: DistanceMethod,
    #[command(flatten)]
    pub tol: DpsTolArgs,
    /// Tolerance of the B²/2 <= T <= sqrt(1-F) chain.
    #[arg(long, default_value_t = CHAIN_TOL)]
    pub chain_tol: f64,
    /// Largest accepted closed-vs-oracle difference.
    #[arg(long, default_value_t = 1e-8)]
    pub delta_tol: f64,
}

#[derive(Debug, Serialize, Args)]
pub struct EntanglementArgs {
    pub state: PathBuf,
    /// Subsystem dimensions; defaults to the "dims" entry of the file.
    #[arg(long, num_args = 2, value_names = ["DA", "DB"])]
    pub dims: Option<Vec<usize>>,
    /// Eigenvalues below -neg_tol count as negative.
    #[arg(long, default_value_t = NEG_TOL)]
    pub neg_tol: f64,
    #[command(flatten)]
    pub tol: DpsTolArgs,
    /// Largest accepted closed-vs-brute-force PT spectrum difference.
    #[arg(long, default_value_t = 1e-8)]
    pub delta_tol: f64,
}

#[derive(Debug, Serialize, Args)]
pub struct SchmidtArgs {
    pub state: PathBuf,
    #[arg(long, num_args = 2, value_names = ["DA", "DB"])]
    pub dims: Option<Vec<usize>>,
    #[command(flatten)]
    pub tol: DpsTolArgs,
    #[arg(long, default_value_t = 1e-8)]
    pub delta_tol: f64,
}

#[derive(Debug, Serialize, Args)]
pub struct IsotropicArgs {
    #[arg(long)]
    pub da: usize,
    /// Singlet fraction.
    #[arg(long, allow_hyphen_values = true)]
    pub f: f64,
    #[arg(long, default_value_t = NEG_TOL)]
    pub neg_tol: f64,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Serialize, Args)]
pub struct Werner2qArgs {
    #[arg(long, allow_hyphen_values = true)]
    pub p: f64,
    #[arg(long)]
    pub omega: f64,
    #[arg(long, default_value_t = NEG_TOL)]
    pub neg_tol: f64,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Subcommand)]
pub enum ChannelCommand {
    /// (1-p) 1/D + p rho.
    Depolarize(DepolarizeArgs),
    /// Ancilla-assisted depolarization of a pure state.
    Protocol1(Protocol1Args),
    /// Twirl a channel into a depolarizing one.
    Twirl(TwirlArgs),
    /// Random-unitary conjugated bit flip averaged over trials.
    Recipe(RecipeArgs),
    /// Independent depolarization of both halves of a bipartite state.
    Local(LocalArgs),
}

#[derive(Debug, Serialize, Args)]
pub struct DepolarizeArgs {
    pub state: PathBuf,
    #[arg(long, allow_hyphen_values = true)]
    pub p: f64,
    /// Reject p outside the completely positive range.
    #[arg(long)]
    pub require_cp: bool,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Serialize, Args)]
pub struct PureSource {
    /// Pure input state; a seeded Haar-random state of --dim otherwise.
    #[arg(long, conflicts_with = "dim")]
    pub state: Option<PathBuf>,
    #[arg(long)]
    pub dim: Option<usize>,
}

#[derive(Debug, Serialize, Args)]
pub struct Protocol1Args {
    #[command(flatten)]
    pub source: PureSource,
    #[arg(long)]
    pub beta2: f64,
    #[arg(long, default_value_t = 0.0, allow_hyphen_values = true)]
    pub beta_phase: f64,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Largest accepted trace distance to the closed-form output.
    #[arg(long, default_value_t = 1e-10)]
    pub tol: f64,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum TwirlModeArg {
    ExactClifford,
    ExactCliffordNonidentity,
    Haar,
}

#[derive(Debug, Serialize, Args)]
pub struct TwirlArgs {
    /// Channel file; an X-flip channel of --dim and --f otherwise.
    #[arg(long, conflicts_with_all = ["dim", "f"])]
    pub channel: Option<PathBuf>,
    #[arg(long)]
    pub dim: Option<usize>,
    /// Probability of the identity in the X-flip channel.
    #[arg(long)]
    pub f: Option<f64>,
    #[arg(long, value_enum, default_value_t = TwirlModeArg::ExactClifford)]
    pub mode: TwirlModeArg,
    #[arg(long, default_value_t = 1000)]
    pub samples: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Serialize, Args)]
pub struct RecipeArgs {
    #[command(flatten)]
    pub source: PureSource,
    #[arg(long)]
    pub f: f64,
    #[arg(long, default_value_t = 10_000)]
    pub trials: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Serialize, Args)]
pub struct LocalArgs {
    pub state: PathBuf,
    #[arg(long, num_args = 2, value_names = ["DA", "DB"])]
    pub dims: Option<Vec<usize>>,
    #[arg(long, allow_hyphen_values = true)]
    pub pa: f64,
    #[arg(long, allow_hyphen_values = true)]
    pub pb: f64,
    #[command(flatten)]
    pub tol: DpsTolArgs,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum MomentMode {
    Exact,
    Perm,
    Mc,
}

#[derive(Debug, Serialize, Args)]
pub struct MomentsArgs {
    pub state: PathBuf,
    #[arg(long, num_args = 1.., default_values_t = [2, 3])]
    pub m: Vec<usize>,
    #[arg(long, value_enum, default_value_t = MomentMode::Exact)]
    pub mode: MomentMode,
    #[arg(long, default_value_t = 100_000)]
    pub shots: u64,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Recover p from Tr(rho^2) and Tr(rho^3).
    #[arg(long)]
    pub assume_dps: bool,
    #[arg(long, default_value_t = T3_TOL)]
    pub t3_tol: f64,
}

#[derive(Debug, Serialize, Args)]
pub struct Fig1Args {
    #[arg(long, default_value_t = 9)]
    pub dim: usize,
    #[arg(long, default_value_t = 50)]
    pub grid: usize,
    #[arg(long, default_value_t = CHAIN_TOL)]
    pub chain_tol: f64,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Subcommand)]
pub enum GenCommand {
    /// (1-p) 1/D + p |psi><psi| with Haar-random |psi>.
    Dps(GenDpsArgs),
    /// Isotropic state of two dA-level systems.
    Isotropic(GenIsotropicArgs),
    /// Haar-random pure state.
    HaarPure(GenHaarArgs),
}

#[derive(Debug, Serialize, Args)]
pub struct GenDpsArgs {
    #[arg(long)]
    pub dim: usize,
    #[arg(long, allow_hyphen_values = true)]
    pub p: f64,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, num_args = 2, value_names = ["DA", "DB"])]
    pub dims: Option<Vec<usize>>,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Serialize, Args)]
pub struct GenIsotropicArgs {
    #[arg(long)]
    pub da: usize,
    #[arg(long)]
    pub f: f64,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Serialize, Args)]
pub struct GenHaarArgs {
    #[arg(long)]
    pub dim: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, num_args = 2, value_names = ["DA", "DB"])]
    pub dims: Option<Vec<usize>>,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

/// What a successful command produces.
#[derive(Debug, Default, Clone, PartialEq)]
pub struct Output {
    pub stdout: Vec<u8>,
    pub files: Vec<(PathBuf, Vec<u8>)>,
}

pub fn run(cli: &Cli) -> CliResult<Output> {
    commands::dispatch(cli)
}

/// Runs the tool and returns the process exit code.
pub fn main_with_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { 2 } else { 0 };
        }
    };
    match run(&cli).and_then(|out| {
        for (path, bytes) in &out.files {
            io::write_file(path, bytes)?;
        }
        Ok(out.stdout)
    }) {
        Ok(stdout) => {
            use std::io::Write;
            let mut handle = std::io::stdout().lock();
            if handle.write_all(&stdout).and_then(|_| handle.flush()).is_err() {
                return 4;
            }
            0
        }
        Err(e) => {
            eprintln!("dps: {e}");
            e.exit_code()
        }
    }
}
