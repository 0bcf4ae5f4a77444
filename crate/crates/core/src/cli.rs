//! Command-line front end. Exit codes: 0 success, 1 invalid input, 2 a
//! numerical check above tolerance, 3 inputs that are not equivalent.

use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand};

use crate::dynamics::{verify_model, EvolutionParams, HamiltonianModel};
use crate::ensembles::{
    equivalence_deviation, random_equivalent_ensemble, spectral_ensemble, DEFAULT_CUTOFF,
};
use crate::error::{Error, ErrorClass, Result};
use crate::formats::{self, BipartiteFile, EnsembleFile, PlanFile};
use crate::numerics::max_abs_diff;
use crate::purification::{default_dim_k, prepare_ensemble, purify, PURIFY_TOL};
use crate::qubit_gates::qubit_demo;

pub const DEFAULT_TOL: f64 = 1e-9;
pub const TOL_ENV: &str = "PURIFYKIT_TOL";

pub const EXIT_OK: i32 = 0;
pub const EXIT_INVALID: i32 = 1;
pub const EXIT_NUMERICAL: i32 = 2;
pub const EXIT_NOT_EQUIVALENT: i32 = 3;

#[derive(Debug, Parser)]
#[command(name = "purifykit", version, about = "Purify quantum ensembles and steer them into equivalent ones")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Compare the density operators of two ensembles.
    Equiv {
        a: PathBuf,
        b: PathBuf,
        #[arg(long)]
        tol: Option<f64>,
    },
    /// Purify the spectral ensemble of E onto a reference of dimension kdim.
    Purify {
        ensemble: PathBuf,
        #[arg(long)]
        kdim: Option<usize>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Build the plan that steers the purification of SPEC into TARGET.
    Steer {
        spec: PathBuf,
        target: PathBuf,
        #[arg(long)]
        tol: Option<f64>,
        #[arg(long)]
        kdim: Option<usize>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Verify the correlating Hamiltonian for the spectral ensemble of E.
    Dynamics {
        ensemble: PathBuf,
        #[arg(long, default_value_t = 1.0)]
        omega: f64,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Qubit purification circuit demonstration.
    QubitDemo {
        #[arg(long)]
        q: f64,
        #[arg(long, default_value_t = 0.0, allow_negative_numbers = true)]
        theta: f64,
        #[arg(long, default_value_t = 0.0, allow_negative_numbers = true)]
        phase: f64,
    },
    /// Draw a random ensemble with the density operator of RHO.
    RandomEquiv {
        rho: PathBuf,
        #[arg(long)]
        count: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

/// Picks `--tol`, then `PURIFYKIT_TOL`, then [`DEFAULT_TOL`].
pub fn resolve_tol(flag: Option<f64>, env: Option<&str>) -> Result<f64> {
    let tol = match (flag, env) {
        (Some(t), _) => t,
        (None, Some(raw)) => raw
            .trim()
            .parse::<f64>()
            .map_err(|_| Error::InvalidParameter(format!("{TOL_ENV}={raw} is not a number")))?,
        (None, None) => DEFAULT_TOL,
    };
    if !(tol > 0.0 && tol.is_finite()) {
        return Err(Error::InvalidParameter(format!("tol must be > 0, got {tol}")));
    }
    Ok(tol)
}

fn tol_from_env(flag: Option<f64>) -> Result<f64> {
    resolve_tol(flag, std::env::var(TOL_ENV).ok().as_deref())
}

pub fn exit_code(e: &Error) -> i32 {
    match e.class() {
        ErrorClass::Invalid => EXIT_INVALID,
        ErrorClass::Numerical => EXIT_NUMERICAL,
        ErrorClass::NotEquivalent => EXIT_NOT_EQUIVALENT,
    }
}

fn require_file(path: &Path) -> Result<()> {
    if !path.is_file() {
        return Err(Error::Parse(format!("no such file: {}", path.display())));
    }
    Ok(())
}

fn verdict(value: f64, tol: f64) -> &'static str {
    if value <= tol {
        "ok"
    } else {
        "FAIL"
    }
}

/// Runs one command, writing the human-readable report to `out`. Returns the
/// process exit code; errors are reported on `err`.
pub fn run(cli: Cli, out: &mut dyn Write, err: &mut dyn Write) -> i32 {
    match dispatch(cli, out) {
        Ok(code) => code,
        Err(e) => {
            let _ = writeln!(err, "error: {e}");
            exit_code(&e)
        }
    }
}

fn dispatch(cli: Cli, out: &mut dyn Write) -> Result<i32> {
    match cli.command {
        Command::Equiv { a, b, tol } => {
            let tol = tol_from_env(tol)?;
            require_file(&a)?;
            require_file(&b)?;
            let ea = formats::read_ensemble(&a)?;
            let eb = formats::read_ensemble(&b)?;
            let dev = equivalence_deviation(&ea, &eb)?;
            let equivalent = dev <= tol;
            writeln!(
                out,
                "max_abs_deviation = {dev:.3e} (tol {tol:e}) {}",
                if equivalent { "equivalent" } else { "not equivalent" }
            )?;
            Ok(if equivalent { EXIT_OK } else { EXIT_NOT_EQUIVALENT })
        }
        Command::Purify {
            ensemble,
            kdim,
            out: out_path,
        } => {
            require_file(&ensemble)?;
            let e = formats::read_ensemble(&ensemble)?;
            let rho = e.density_matrix();
            let spec = spectral_ensemble(&rho, DEFAULT_CUTOFF)?;
            let dim_k = kdim.unwrap_or(spec.rank());
            let psi = purify(&spec, dim_k)?;
            let residual = max_abs_diff(&psi.reduced_s(), rho.matrix());
            writeln!(out, "dimS = {}, dimK = {dim_k}, rank = {}", spec.dim(), spec.rank())?;
            writeln!(
                out,
                "partial_trace_residual = {residual:.3e} (tol {PURIFY_TOL:e}) {}",
                verdict(residual, PURIFY_TOL)
            )?;
            if let Some(p) = out_path {
                formats::write(&p, &formats::to_json(&BipartiteFile::from(&psi)))?;
            }
            Ok(if residual <= PURIFY_TOL { EXIT_OK } else { EXIT_NUMERICAL })
        }
        Command::Steer {
            spec,
            target,
            tol,
            kdim,
            out: out_path,
        } => {
            let tol = tol_from_env(tol)?;
            require_file(&spec)?;
            require_file(&target)?;
            let source = formats::read_ensemble(&spec)?;
            let target = formats::read_ensemble(&target)?;
            let spectral = spectral_ensemble(&source.density_matrix(), DEFAULT_CUTOFF)?;
            let dim_k = kdim.unwrap_or_else(|| default_dim_k(&spectral, &target));
            let prep = prepare_ensemble(&spectral, &target, dim_k, tol)?;
            writeln!(
                out,
                "rank = {}, targets = {}, dimK = {dim_k}, equivalence tol = {tol:e}",
                spectral.rank(),
                target.len()
            )?;
            write!(out, "{}", prep.report)?;
            if let Some(p) = out_path {
                let file = PlanFile::new(&prep.plan, Some(&prep.report));
                formats::write(&p, &formats::to_json(&file))?;
            }
            Ok(EXIT_OK)
        }
        Command::Dynamics {
            ensemble,
            omega,
            out: out_path,
        } => {
            require_file(&ensemble)?;
            let params = EvolutionParams::quarter_period(omega)?;
            let e = formats::read_ensemble(&ensemble)?;
            let spec = spectral_ensemble(&e.density_matrix(), DEFAULT_CUTOFF)?;
            let model = HamiltonianModel::for_spectral(&spec)?;
            let report = verify_model(&model, &params, Some(&spec))?;
            let text = report.to_string();
            write!(out, "{text}")?;
            if let Some(p) = out_path {
                formats::write(&p, &text)?;
            }
            Ok(if report.passes() { EXIT_OK } else { EXIT_NUMERICAL })
        }
        Command::QubitDemo { q, theta, phase } => {
            let report = qubit_demo(q, theta, phase)?;
            write!(out, "{report}")?;
            Ok(if report.passes() { EXIT_OK } else { EXIT_NUMERICAL })
        }
        Command::RandomEquiv {
            rho,
            count,
            seed,
            out: out_path,
        } => {
            require_file(&rho)?;
            let rho = formats::read_density(&rho)?;
            let e = random_equivalent_ensemble(&rho, count, seed)?;
            let dev = max_abs_diff(e.density_matrix().matrix(), rho.matrix());
            let json = formats::to_json(&EnsembleFile::from(&e));
            match out_path {
                Some(p) => {
                    formats::write(&p, &json)?;
                    writeln!(
                        out,
                        "wrote {} states, density_deviation = {dev:.3e} (tol {DEFAULT_TOL:e}) {}",
                        e.len(),
                        verdict(dev, DEFAULT_TOL)
                    )?;
                }
                None => write!(out, "{json}")?,
            }
            Ok(if dev <= DEFAULT_TOL { EXIT_OK } else { EXIT_NUMERICAL })
        }
    }
}
