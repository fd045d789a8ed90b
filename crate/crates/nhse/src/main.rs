use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use nhse::{commands, CliError, Overrides, RunConfig};
use nhse_core::Statistics;

/// Exact diagonalization of interacting non-reciprocal two-leg ladders.
///
/// Exit codes: 0 success, 1 I/O, 2 configuration, 3 capacity, 4 solver,
/// 5 empty selection. NHSE_CAPACITY overrides the largest accepted basis
/// dimension.
#[derive(Parser)]
#[command(name = "nhse", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
    #[command(flatten)]
    args: Args,
}

#[derive(Subcommand, Clone, Copy)]
enum Command {
    /// Full spectrum with per-state polarization, N_cor, clusters and residuals.
    Spectrum,
    /// Site and pair density of one eigenstate.
    Density,
    /// Correlation matrix and N_cor of one two-particle eigenstate.
    Ncor,
    /// Leg and left/right entanglement entropies of one eigenstate.
    Entropy,
    /// Parameter grid.
    Sweep,
    /// Smallest inter-leg coupling with complex selected clusters.
    Threshold,
    /// Second-order bound-pair model and its deviation from the full model.
    Effective,
    /// Onsite-energy classes and their crossings.
    Eonsite,
}

#[derive(Clone, Copy, ValueEnum)]
enum StatsArg {
    Boson,
    Fermion,
}

#[derive(clap::Args)]
struct Args {
    /// JSON run config; flags below override its fields.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    #[arg(long, global = true)]
    cells: Option<usize>,
    #[arg(long, global = true)]
    particles: Option<usize>,
    #[arg(long, global = true, value_enum)]
    stats: Option<StatsArg>,
    /// Leftward hop on leg A (rightward on leg B).
    #[arg(long, global = true, allow_hyphen_values = true)]
    jl: Option<f64>,
    /// Rightward hop on leg A (leftward on leg B).
    #[arg(long, global = true, allow_hyphen_values = true)]
    jr: Option<f64>,
    /// Hopping scale J, used with --alpha (default e^-alpha).
    #[arg(long, global = true, allow_hyphen_values = true)]
    j: Option<f64>,
    #[arg(long, global = true, allow_hyphen_values = true)]
    alpha: Option<f64>,
    #[arg(long, global = true, allow_hyphen_values = true)]
    jp: Option<f64>,
    #[arg(long, global = true, allow_hyphen_values = true)]
    mu: Option<f64>,
    #[arg(long, global = true, allow_hyphen_values = true)]
    u: Option<f64>,
    #[arg(long, global = true, allow_hyphen_values = true)]
    unn: Option<f64>,
    /// Output directory (default ./nhse_out).
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    #[arg(long, global = true)]
    workers: Option<usize>,
    #[arg(long = "eps-im", global = true)]
    eps_im: Option<f64>,
    /// Eigenstate selector: max_im, index:K, cluster:<selector>.
    #[arg(long, global = true)]
    state: Option<String>,
    /// Cluster selector: all, scattering, bound, rank:K, nearest:E, tracked:E, window:LO:HI.
    #[arg(long, global = true, allow_hyphen_values = true)]
    clusters: Option<String>,
}

fn run(cli: Cli) -> Result<String, CliError> {
    let a = cli.args;
    let mut cfg = match &a.config {
        Some(p) => RunConfig::load(p)?,
        None => RunConfig::default(),
    };
    cfg.apply(&Overrides {
        cells: a.cells,
        particles: a.particles,
        statistics: a.stats.map(|s| match s {
            StatsArg::Boson => Statistics::Boson,
            StatsArg::Fermion => Statistics::Fermion,
        }),
        jl: a.jl,
        jr: a.jr,
        j: a.j,
        alpha: a.alpha,
        jp: a.jp,
        mu: a.mu,
        u: a.u,
        unn: a.unn,
        out: a.out,
        workers: a.workers,
        eps_im: a.eps_im,
        state: a.state,
        clusters: a.clusters,
    });
    cfg.apply_env()?;
    match cli.command {
        Command::Spectrum => commands::spectrum(&cfg),
        Command::Density => commands::density(&cfg),
        Command::Ncor => commands::ncor(&cfg),
        Command::Entropy => commands::entropy(&cfg),
        Command::Sweep => commands::sweep(&cfg),
        Command::Threshold => commands::threshold(&cfg),
        Command::Effective => commands::effective(&cfg),
        Command::Eonsite => commands::eonsite(&cfg),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(cli) {
        Ok(summary) => {
            // a closed stdout is not a failure of the run
            let _ = writeln!(std::io::stdout(), "{summary}");
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("nhse: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
