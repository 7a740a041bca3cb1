//! The `solve`, `surface` and `check` commands, callable without spawning the binary.

use std::path::Path;

use convext::{branch_and_bound, oracle_mip, solve_relaxation, BnbOptions, Extension, Instance, RelaxOptions};

use crate::check::{run_check, CheckOptions, CheckReport, Suite};
use crate::error::{CliError, CliResult};
use crate::report::Report;
use crate::surface::{evaluate_surface, render_csv, SurfaceSpec};

/// Environment variable that overrides the `--seed` flag.
pub const SEED_ENV: &str = "CONVEXT_SEED";

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SolveMethod {
    Bnb,
    Relax,
    Oracle,
}

impl std::str::FromStr for SolveMethod {
    type Err = CliError;
    fn from_str(s: &str) -> CliResult<Self> {
        match s {
            "bnb" => Ok(SolveMethod::Bnb),
            "relax" => Ok(SolveMethod::Relax),
            "oracle" => Ok(SolveMethod::Oracle),
            _ => Err(CliError::Usage(format!("unknown method `{s}`; expected bnb, relax or oracle"))),
        }
    }
}

pub fn parse_extension(s: &str) -> CliResult<Extension> {
    match s {
        "trivial" => Ok(Extension::Trivial),
        "decomposed" => Ok(Extension::Decomposed),
        "theorem1" => Ok(Extension::Theorem1),
        _ => Err(CliError::Usage(format!("unknown extension `{s}`; expected trivial, decomposed or theorem1"))),
    }
}

fn extension_name(e: Extension) -> &'static str {
    match e {
        Extension::Trivial => "trivial",
        Extension::Decomposed => "decomposed",
        Extension::Theorem1 => "theorem1",
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SolveOptions {
    pub method: SolveMethod,
    pub extension: Extension,
    pub tol: f64,
    pub node_cap: usize,
    pub budget: usize,
    pub seed: u64,
    /// Accepted for compatibility; every solver is single-threaded.
    pub single_thread: bool,
}

impl Default for SolveOptions {
    fn default() -> Self {
        SolveOptions {
            method: SolveMethod::Bnb,
            extension: Extension::Decomposed,
            tol: 1e-6,
            node_cap: 10_000,
            budget: 50_000,
            seed: 0,
            single_thread: true,
        }
    }
}

/// Resolves the seed, letting a parseable environment override win.
pub fn effective_seed(flag: u64, env: Option<&str>) -> CliResult<u64> {
    match env {
        None => Ok(flag),
        Some(s) => {
            s.trim().parse().map_err(|_| CliError::Usage(format!("{SEED_ENV}=`{s}` is not an unsigned integer")))
        }
    }
}

/// Solves an instance and returns the result document.
pub fn solve(inst: &Instance, opts: &SolveOptions) -> CliResult<Report> {
    if opts.tol.is_nan() || opts.tol <= 0.0 {
        return Err(CliError::Usage("tol must be positive".into()));
    }
    let relax = RelaxOptions { budget: opts.budget, tol: (opts.tol * 1e-3).max(1e-12), ..RelaxOptions::default() };
    let mut r = Report::new();
    match opts.method {
        SolveMethod::Bnb => {
            let res = branch_and_bound(
                inst,
                opts.extension,
                BnbOptions { tol: opts.tol, node_cap: opts.node_cap, relax, compare_trivial: false },
            )?;
            r.text("method", "bnb")
                .text("extension", extension_name(opts.extension))
                .number("value", res.incumbent_value)
                .vector("theta", &res.incumbent_theta)
                .bits("y", &res.incumbent_y)
                .count("nodes", res.nodes_explored)
                .number("proven_gap", res.proven_gap);
        }
        SolveMethod::Relax => {
            let res = solve_relaxation(inst, opts.extension, relax)?;
            r.text("method", "relax")
                .text("extension", extension_name(opts.extension))
                .number("value", res.value)
                .vector("theta", &res.theta)
                .vector("y", &res.y)
                .count("iterations", res.iterations)
                .number("lower_bound", res.lower_bound)
                .number("proven_gap", res.gap_estimate);
        }
        SolveMethod::Oracle => {
            let res = oracle_mip(inst)?;
            r.text("method", "oracle")
                .number("value", res.value)
                .vector("theta", &res.theta)
                .bits("y", &res.y)
                .count("labelings", inst.labels.feasible_labelings()?.len())
                .number("proven_gap", 0.0);
        }
    }
    r.count("seed", opts.seed as usize);
    Ok(r)
}

pub fn solve_file(path: &Path, opts: &SolveOptions) -> CliResult<Report> {
    solve(&crate::instance_file::load_instance(path)?, opts)
}

/// Evaluates a surface and writes it to `out`; returns the number of rows.
pub fn write_surface(spec: &SurfaceSpec, out: &Path) -> CliResult<usize> {
    let rows = evaluate_surface(spec)?;
    std::fs::write(out, render_csv(&rows))
        .map_err(|source| CliError::Io { path: out.display().to_string(), source })?;
    Ok(rows.len())
}

/// Runs a suite; a failing suite is an error carrying the rendered report.
pub fn check(suite: Suite, opts: &CheckOptions) -> CliResult<CheckReport> {
    let report = run_check(suite, opts)?;
    if report.passed() {
        Ok(report)
    } else {
        Err(CliError::CheckFailed(report.render()))
    }
}
