mod config;
mod evolve;
mod hasimoto;
mod realheat;
mod run;
mod selfsim;
mod verify;

use clap::{Parser, Subcommand};
use std::path::PathBuf;
use std::process::ExitCode;

/// Numerical laboratory for the equivariant generalized Landau-Lifshitz flow.
///
/// Every run writes its files and one manifest.json into an output directory.
/// Exit status: 0 when every asserted property holds, 1 when an assertion
/// fails, 2 when a solver or precondition fails (diagnostics.json is written).
#[derive(Parser, Debug)]
#[command(name = "gll", version)]
pub struct Cli {
    /// Output directory for this run [default: <out-root>/<command tag>]
    #[arg(long, global = true)]
    pub out_dir: Option<PathBuf>,
    /// Root under which per-command output directories are created
    #[arg(long, global = true, env = "GLL_OUT_ROOT", default_value = "gll-out")]
    pub out_root: PathBuf,
    /// TOML file with per-command tables, e.g. [selfsim] or [realheat.witness]
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Worker threads for sweeps [default: number of logical cores]
    #[arg(long, global = true)]
    pub workers: Option<usize>,
    /// Also write plot.gp, a gnuplot script over the CSV outputs
    #[arg(long, global = true)]
    pub gnuplot: bool,
    #[command(subcommand)]
    pub cmd: Cmd,
}

#[derive(Subcommand, Debug)]
pub enum Cmd {
    /// Self-similar profile with a-priori identity and tail reports
    Selfsim(selfsim::Args),
    /// Real (great-circle) heat flow: classification, profiles, witness, figure
    Realheat {
        #[command(subcommand)]
        sub: realheat::Sub,
    },
    /// Evolve radial data in time and report residual norms
    Evolve(evolve::Args),
    /// Hasimoto transform: exponents, frames and q, eigenfunction checks
    Hasimoto {
        #[command(subcommand)]
        sub: hasimoto::Sub,
    },
    /// Run named invariant suites (or all of them)
    Verify(verify::Args),
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    ExitCode::from(run::dispatch(cli))
}
