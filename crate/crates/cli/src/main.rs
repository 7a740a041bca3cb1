use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use convext::LossSpec;
use convext_cli::check::{CheckOptions, Suite};
use convext_cli::commands::{self, effective_seed, parse_extension, SolveMethod, SolveOptions, SEED_ENV};
use convext_cli::surface::{parse_loss_kind, parse_range, parse_reg_kind, SurfaceExtension, SurfaceSpec};
use convext_cli::CliResult;

#[derive(Debug, Parser)]
#[command(name = "convext", version, about = "Convex extensions of regularized risk with binary labels")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Solve the mixed-integer problem of an instance file.
    Solve {
        instance: PathBuf,
        /// bnb, relax or oracle.
        #[arg(long, default_value = "bnb")]
        method: String,
        /// trivial, decomposed or theorem1.
        #[arg(long, default_value = "decomposed")]
        extension: String,
        #[arg(long, default_value_t = 1e-6)]
        tol: f64,
        #[arg(long, default_value_t = 10_000)]
        node_cap: usize,
        /// Iteration budget of each relaxation solve.
        #[arg(long, default_value_t = 50_000)]
        budget: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Kept for compatibility; solves are always single-threaded.
        #[arg(long)]
        single_thread: bool,
    },
    /// Write the surface of a one-sample term over θ and y as CSV.
    Surface {
        /// hinge, squared-hinge, logistic or squared-difference.
        #[arg(long)]
        loss: String,
        #[arg(long, default_value_t = 1.0)]
        c0: f64,
        #[arg(long, default_value_t = 1.0)]
        c1: f64,
        /// l1 or l2.
        #[arg(long, default_value = "l2")]
        reg: String,
        /// Use ‖θ‖² instead of ½‖θ‖² for l2.
        #[arg(long)]
        full_square: bool,
        /// Symmetric parameter box half-width.
        #[arg(long)]
        bound: Option<f64>,
        #[arg(long = "C", short = 'C')]
        c: f64,
        #[arg(long, default_value_t = 1.0)]
        x: f64,
        /// lo:hi:step, inclusive.
        #[arg(long, allow_hyphen_values = true)]
        theta: String,
        #[arg(long, default_value = "0:1:0.05")]
        y: String,
        /// decomposed, trivial, logistic-partial or raw.
        #[arg(long, default_value = "decomposed")]
        extension: String,
        /// Evaluate an unbounded L1 envelope on a large finite box to show its discontinuity.
        #[arg(long)]
        diagnostic_unbounded: bool,
        #[arg(long)]
        out: PathBuf,
    },
    /// Run a randomized property suite.
    Check {
        /// extension, oracle, convexity or subgradient.
        suite: String,
        #[arg(long, default_value_t = 200)]
        samples: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value_t = 1)]
        dim: usize,
        /// Run the convexity suite on the raw non-convex term; it must report a violation.
        #[arg(long)]
        negative_control: bool,
    },
}

fn run(cli: Cli) -> CliResult<String> {
    let env_seed = std::env::var(SEED_ENV).ok();
    match cli.command {
        Command::Solve { instance, method, extension, tol, node_cap, budget, seed, single_thread } => {
            let opts = SolveOptions {
                method: method.parse::<SolveMethod>()?,
                extension: parse_extension(&extension)?,
                tol,
                node_cap,
                budget,
                seed: effective_seed(seed, env_seed.as_deref())?,
                single_thread,
            };
            Ok(commands::solve_file(&instance, &opts)?.render())
        }
        Command::Surface {
            loss,
            c0,
            c1,
            reg,
            full_square,
            bound,
            c,
            x,
            theta,
            y,
            extension,
            diagnostic_unbounded,
            out,
        } => {
            let spec = SurfaceSpec {
                loss: LossSpec::new(parse_loss_kind(&loss)?, c0, c1)?,
                reg_kind: parse_reg_kind(&reg)?,
                half: !full_square,
                bound,
                c,
                x,
                thetas: parse_range(&theta)?,
                ys: parse_range(&y)?,
                extension: extension.parse::<SurfaceExtension>()?,
                diagnostic_unbounded,
            };
            let rows = commands::write_surface(&spec, &out)?;
            Ok(format!("rows: {rows}\nout: {}\n", out.display()))
        }
        Command::Check { suite, samples, seed, dim, negative_control } => {
            let opts =
                CheckOptions { samples, seed: effective_seed(seed, env_seed.as_deref())?, dim, negative_control };
            Ok(commands::check(suite.parse::<Suite>()?, &opts)?.render())
        }
    }
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(text) => {
            print!("{text}");
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
