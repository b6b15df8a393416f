//! `latspec`: reproducible numerical experiments for discrete Schrödinger
//! operators on Z^d, written as CSV with a plain-text summary on stderr.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

mod commands;
mod config;

use std::fs;
use std::io::Write;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use latspec::Verdict;

use config::Params;

pub const EXIT_FAIL: u8 = 1;
pub const EXIT_USAGE: u8 = 2;
pub const EXIT_DOMAIN: u8 = 3;

#[derive(Debug)]
pub struct CliError {
    pub code: u8,
    pub message: String,
}

impl CliError {
    pub fn usage(message: impl Into<String>) -> Self {
        CliError {
            code: EXIT_USAGE,
            message: message.into(),
        }
    }
}

impl From<latspec::Error> for CliError {
    fn from(e: latspec::Error) -> Self {
        let code = match e {
            latspec::Error::TheoryDomain(_) => EXIT_DOMAIN,
            _ => EXIT_USAGE,
        };
        CliError {
            code,
            message: e.to_string(),
        }
    }
}

/// What a subcommand produced.
pub struct Outcome {
    pub csv: String,
    pub summary: String,
    /// `None` when the subcommand only tabulates.
    pub verdict: Option<Verdict>,
}

#[derive(Parser)]
#[command(
    name = "latspec",
    version,
    about = "Spectral experiments for -Δ - αV on Z^d",
    arg_required_else_help = true,
    after_help = "Exit codes: 0 ok, 1 a FAIL verdict, 2 usage or input error, 3 outside the theory's domain (e.g. d < 3)."
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Lattice Green function h_0 at a point or along an axis.
    #[command(after_help = "CSV with --x: x1..xd,value,error,m,method,laplacian\n\
CSV with --radii: r,value,error,rescaled (rescaled = value * r^(d-2))")]
    Green(Params),

    /// Box Hamiltonian: negative-eigenvalue counts or eigenvalues.
    #[command(after_help = "CSV: alpha,radius,count\n\
CSV with --eigenvalues: alpha,radius,j,eigenvalue")]
    Spectrum(Params),

    /// Birman-Schwinger spectra from the Gram and box pipelines, or duality with --alpha.
    #[command(after_help = "CSV: bound,j,lhs,rhs,margin,verdict (lhs = |gram - box|, rhs = tol * gram)\n\
CSV with --alpha: bound,alpha,radius,lhs,rhs,margin,verdict (lhs = N_-, rhs = n_+(1/alpha))")]
    Bs(Params),

    /// Cell-form constants, or box Hardy bounds for a weight given by --weight.
    #[command(after_help = "CSV: dim,c,c_prime,global_c,global_c_prime,closed_c,closed_c_prime,verdict\n\
CSV with --weight: weight,radius,lower_bound,increment,method")]
    Hardy(Params),

    /// Eigenvalue estimates for B_V.
    #[command(subcommand, arg_required_else_help = true)]
    Bounds(BoundsCommand),

    /// Sparse point sets and their Gram matrices.
    #[command(subcommand, arg_required_else_help = true)]
    Sparse(SparseCommand),

    /// Rayleigh quotients of the slowly decaying test-function sequence.
    #[command(after_help = "CSV: n,radius,b_v,q0,rho,scaled,rho_doubled,truncation_change,tail_bound")]
    Example52(Params),
}

#[derive(Subcommand)]
enum BoundsCommand {
    /// N_- <= C α^{d/2} Σ V^{d/2} with the trend of N_- / α^{d/2}.
    #[command(after_help = "CSV: bound,alpha,lhs,rhs,margin,verdict")]
    Clc(Params),
    /// Weak-Schatten norm of B_V against the weak norm of V.
    #[command(after_help = "CSV: bound,index,side,lhs,rhs,margin,verdict (side 0 upper, 1 lower)")]
    Thm31(Params),
    /// n_+(s, B_V) >= 2^{-d} #{x : V(x) > 2sd}.
    #[command(after_help = "CSV: bound,s,lhs,rhs,margin,verdict")]
    Thm32(Params),
    /// N_- <= C α^q F(V) for the weighted functional F, 2q > d.
    #[command(after_help = "CSV: bound,alpha,lhs,rhs,margin,verdict")]
    Cor53(Params),
}

#[derive(Subcommand)]
enum SparseCommand {
    /// Point set at radii round(γ^j).
    #[command(after_help = "CSV: j,x1..xd,r_y,rank")]
    Generate(Params),
    /// Weyl sandwich of the Gram-weighted spectrum around the values.
    #[command(after_help = "CSV: bound,j,side,lhs,rhs,margin,verdict (side 0 lower, 1 upper)")]
    Gram(Params),
    /// Deviation of the spectrum from μ² p_j over sizes and growth ratios.
    #[command(after_help = "CSV: n,gamma,delta_spec,deviation")]
    Thm68(Params),
}

type Runner = fn(&Params) -> Result<Outcome, CliError>;

fn dispatch(command: Command) -> Result<(Params, Outcome), CliError> {
    let (name, params, run): (&str, Params, Runner) = match command {
        Command::Green(p) => ("green", p, commands::green),
        Command::Spectrum(p) => ("spectrum", p, commands::spectrum),
        Command::Bs(p) => ("bs", p, commands::bs),
        Command::Hardy(p) => ("hardy", p, commands::hardy),
        Command::Bounds(BoundsCommand::Clc(p)) => ("bounds clc", p, commands::clc),
        Command::Bounds(BoundsCommand::Thm31(p)) => ("bounds thm31", p, commands::thm31),
        Command::Bounds(BoundsCommand::Thm32(p)) => ("bounds thm32", p, commands::thm32),
        Command::Bounds(BoundsCommand::Cor53(p)) => ("bounds cor53", p, commands::cor53),
        Command::Sparse(SparseCommand::Generate(p)) => ("sparse generate", p, commands::sparse_generate),
        Command::Sparse(SparseCommand::Gram(p)) => ("sparse gram", p, commands::sparse_gram),
        Command::Sparse(SparseCommand::Thm68(p)) => ("sparse thm68", p, commands::sparse_thm68),
        Command::Example52(p) => ("example52", p, commands::example52),
    };
    let params = params.resolve(name)?;
    let outcome = run(&params)?;
    Ok((params, outcome))
}

fn emit(params: &Params, outcome: &Outcome) -> Result<(), CliError> {
    let io = |e: std::io::Error| CliError::usage(format!("field `out`: {e}"));
    match &params.out {
        Some(path) => {
            fs::write(path, &outcome.csv).map_err(io)?;
            let mut echo = path.as_os_str().to_owned();
            echo.push(".config.json");
            fs::write(&echo, params.echo() + "\n").map_err(io)?;
        }
        None => {
            std::io::stdout().write_all(outcome.csv.as_bytes()).map_err(io)?;
        }
    }
    let mut err = std::io::stderr();
    let _ = writeln!(err, "{}", outcome.summary);
    if let Some(v) = outcome.verdict {
        let _ = writeln!(err, "verdict: {v}");
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = dispatch(cli.command).and_then(|(params, outcome)| {
        emit(&params, &outcome)?;
        Ok(outcome.verdict)
    });
    match result {
        Ok(Some(Verdict::Fail)) => ExitCode::from(EXIT_FAIL),
        Ok(_) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {}", e.message);
            ExitCode::from(e.code)
        }
    }
}
