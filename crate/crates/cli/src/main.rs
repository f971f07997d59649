mod commands;
mod output;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use lsl_core::Tolerances;

#[derive(Parser, Debug)]
#[command(
    name = "lsl",
    version,
    about = "Morse strata, Arnold-Schubert cells and odd Schubert calculus on U(n)"
)]
pub struct Cli {
    #[command(flatten)]
    pub common: Common,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Args, Debug, Clone)]
pub struct Common {
    /// Ambient size n [default: 2, or the size of an input matrix].
    #[arg(long, global = true, value_parser = clap::value_parser!(u32).range(1..=64))]
    pub n: Option<u32>,
    /// Flow eigenvalues as a comma list, or "default".
    #[arg(long, global = true, default_value = "default")]
    pub spec: String,
    #[arg(long, global = true, default_value_t = 0)]
    pub seed: u64,
    /// Eigenphase kernel tolerance; the guard band ends at 100 times this.
    #[arg(long, global = true, value_parser = positive)]
    pub tol_phase: Option<f64>,
    /// Relative singular-value threshold for rank decisions.
    #[arg(long, global = true, value_parser = positive)]
    pub tol_rank: Option<f64>,
    /// Final time of flow trajectories.
    #[arg(long, global = true, default_value_t = 5.0, value_parser = positive)]
    pub tmax: f64,
    /// Random restarts in the tunnelling witness search.
    #[arg(long, global = true, default_value_t = lsl_core::morse::DEFAULT_WITNESS_BUDGET)]
    pub budget: usize,
    #[arg(long, global = true, value_enum)]
    pub format: Option<Format>,
    /// Directory for output files. Without it the primary output goes to stdout.
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
}

impl Common {
    pub fn n(&self) -> usize {
        self.n.unwrap_or(2) as usize
    }

    pub fn tolerances(&self) -> Tolerances {
        let mut tol = Tolerances::default();
        if let Some(p) = self.tol_phase {
            tol.phase_kernel = p;
            tol.phase_guard = 100.0 * p;
        }
        if let Some(r) = self.tol_rank {
            tol.rank = r;
        }
        tol
    }
}

#[derive(ValueEnum, Debug, Clone, Copy, PartialEq, Eq)]
pub enum Format {
    Json,
    Csv,
    Dot,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Hasse diagram, weight table and Möbius function of the cell order.
    Poset,
    /// Product table and Betti ranks of the cohomology ring.
    Ring,
    /// Flow one unitary and classify its limits.
    Flow(FlowArgs),
    /// Search for trajectories between critical points.
    Tunnel(TunnelArgs),
    /// Maslov index and determinant winding of a loop.
    Maslov(MaslovArgs),
    /// Run the verification suites.
    Verify(VerifyArgs),
}

#[derive(Args, Debug)]
pub struct FlowArgs {
    /// JSON matrix {"rows","cols","data":[[re,im],…]}.
    #[arg(long, conflicts_with = "random", required_unless_present = "random")]
    pub input: Option<PathBuf>,
    /// Start from a Haar-random unitary drawn from --seed.
    #[arg(long)]
    pub random: bool,
    /// Number of trajectory rows.
    #[arg(long, default_value_t = 21, value_parser = clap::value_parser!(u32).range(2..=100_000))]
    pub steps: u32,
}

#[derive(Args, Debug)]
pub struct TunnelArgs {
    /// Source critical point M, e.g. "1,3" or "{}".
    #[arg(long = "from", requires = "to")]
    pub from: Option<String>,
    /// Target critical point K.
    #[arg(long = "to", requires = "from")]
    pub to: Option<String>,
}

#[derive(Args, Debug)]
pub struct MaslovArgs {
    /// JSON list of {"theta", "S"} samples.
    #[arg(
        long,
        conflicts_with = "windings",
        required_unless_present = "windings"
    )]
    pub input: Option<PathBuf>,
    /// Winding vector of a synthesized diagonal loop, e.g. "1,-1,2".
    #[arg(long, allow_hyphen_values = true)]
    pub windings: Option<String>,
    /// Intervals of a synthesized loop.
    #[arg(long, default_value_t = 1000, value_parser = clap::value_parser!(u32).range(1..=10_000_000))]
    pub samples: u32,
}

#[derive(Args, Debug)]
pub struct VerifyArgs {
    /// Run only this suite.
    #[arg(long)]
    pub suite: Option<String>,
    /// Random cases per ambient size.
    #[arg(long, default_value_t = 20)]
    pub samples: usize,
    /// Test hook: negate one shuffle sign so the pairing suite must fail.
    #[arg(long, hide = true)]
    pub inject_sign_flip: bool,
}

fn positive(s: &str) -> Result<f64, String> {
    let v: f64 = s.parse().map_err(|e| format!("{e}"))?;
    if v.is_finite() && v > 0.0 {
        Ok(v)
    } else {
        Err("must be a positive finite number".into())
    }
}

fn configure_threads() -> Result<(), commands::CliError> {
    let threads = match std::env::var("LSL_THREADS") {
        Ok(v) => v
            .trim()
            .parse::<usize>()
            .ok()
            .filter(|&t| t >= 1)
            .ok_or_else(|| {
                commands::CliError::Usage(format!(
                    "LSL_THREADS must be a positive integer, got {v:?}"
                ))
            })?,
        Err(_) => 1,
    };
    #[cfg(feature = "parallel")]
    rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build_global()
        .map_err(|e| commands::CliError::Usage(e.to_string()))?;
    #[cfg(not(feature = "parallel"))]
    let _ = threads;
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = configure_threads().and_then(|()| commands::run(&cli));
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("lsl: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
