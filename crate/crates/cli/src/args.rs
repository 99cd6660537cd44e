use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};

/// Search for and check choreographic orbits of equal-phase bodies on the
/// unit sphere.
#[derive(Debug, Parser)]
#[command(name = "choreo", version)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Evaluate the action of the configured loop and compare it with the
    /// collision bound.
    Eval(Common),
    /// Minimize the action from the configured loop; writes the final loop
    /// and a JSON report.
    Minimize(Common),
    /// Integrate the equations of motion and export the trajectory as CSV.
    Integrate(Common),
    /// Check a loop file against the equations of motion, the symmetries,
    /// the collision bound and the return map.
    Verify {
        /// Loop file to check.
        loop_file: PathBuf,
        #[command(flatten)]
        common: Common,
    },
    /// Print the collision lower bound on the action.
    Bound,
}

#[derive(Debug, Args, Default)]
pub struct Common {
    /// JSON run configuration; defaults apply when omitted.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Primary output path (loop for minimize, CSV for integrate, JSON
    /// report for eval and verify).
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Sample count, overriding the configuration.
    #[arg(long)]
    pub samples: Option<usize>,
    /// Gradient tolerance for minimize, residual tolerance for verify.
    #[arg(long)]
    pub tol: Option<f64>,
}
