//! `sics`: generate covariances, solve, evaluate and certify sparse precision
//! estimates from the command line.
//!
//! Exit codes: 0 success, 1 certificate failed, 2 invalid input, 3 solver
//! failure, 4 I/O failure.

use std::fs::File;
use std::io::{BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

use clap::{Args, Parser, Subcommand};
use serde_json::json;
use sics_core::datagen::{DEFAULT_NOISE_SD, DEFAULT_PLANTED, DEFAULT_SAMPLES, PRNG_NAME};
use sics_core::io::{self as sio, TraceDocument, ASYMMETRY_WARN};
use sics_core::{
    certify, cholesky, empirical_covariance, gaussian_covariance, objective, solve, sparse_structured_covariance,
    CertificateReport, CwoaConfig, Error, FamilyReport, GenKind, GenMetadata, NewtonConfig, SymMatrix,
};

const EXIT_CERT_FAILED: u8 = 1;
const EXIT_INPUT: u8 = 2;
const EXIT_SOLVER: u8 = 3;
const EXIT_IO: u8 = 4;

#[derive(Parser)]
#[command(name = "sics", version, about = "Sparsity-constrained inverse covariance selection")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Write a covariance matrix as CSV.
    #[command(subcommand)]
    Gen(GenCommand),
    /// Estimate a sparse precision matrix.
    Solve(SolveArgs),
    /// Print objective, off-diagonal nonzeros and positive definiteness of a precision matrix.
    Eval(EvalArgs),
    /// Check that a precision matrix is a coordinate-wise minimum.
    Certify(CertifyArgs),
}

#[derive(Subcommand)]
enum GenCommand {
    /// Sample covariance of standard-normal data.
    Gaussian {
        #[arg(long)]
        n: usize,
        #[arg(long, default_value_t = DEFAULT_SAMPLES)]
        m: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out: PathBuf,
    },
    /// Noisy inverse of a planted sparse precision matrix.
    SparseStruct {
        #[arg(long)]
        n: usize,
        #[arg(long, default_value_t = DEFAULT_PLANTED)]
        p: usize,
        #[arg(long, default_value_t = DEFAULT_NOISE_SD)]
        noise_sd: f64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out: PathBuf,
        /// Where to write the planted precision matrix as triplets.
        #[arg(long)]
        truth: Option<PathBuf>,
    },
    /// Covariance of a user-supplied sample matrix (one sample per CSV row).
    Empirical {
        #[arg(long)]
        samples: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
}

#[derive(Args)]
struct SolveArgs {
    #[arg(long)]
    cov: PathBuf,
    /// Budget on off-diagonal nonzeros (two per symmetric pair).
    #[arg(long)]
    sparsity: usize,
    /// Precision matrix output (triplets).
    #[arg(long)]
    out: Option<PathBuf>,
    /// Run trace output (JSON).
    #[arg(long)]
    trace: Option<PathBuf>,
    #[arg(long, default_value_t = 5)]
    t_in: usize,
    #[arg(long, default_value_t = 0.1)]
    eta: f64,
    #[arg(long, default_value_t = 0.25)]
    omega: f64,
    #[arg(long, default_value_t = 1e-8)]
    grad_tol: f64,
    #[arg(long, default_value_t = 100)]
    max_newton_iters: usize,
    #[arg(long, default_value_t = 60)]
    max_backtracks: usize,
    #[arg(long, default_value_t = 50)]
    refresh_every: usize,
    /// Cap on accepted swaps (default 10 n).
    #[arg(long)]
    max_swaps: Option<usize>,
    #[arg(long, default_value_t = 1e-10)]
    tol_improve: f64,
    /// Echoed into the trace.
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Skip the swap stage (greedy-only ablation).
    #[arg(long)]
    no_swap: bool,
    /// Write zero for all timings so that traces of identical runs are byte-identical.
    #[arg(long)]
    no_timing: bool,
}

#[derive(Args)]
struct EvalArgs {
    #[arg(long)]
    cov: PathBuf,
    /// Precision matrix (triplets).
    #[arg(long)]
    precision: PathBuf,
}

#[derive(Args)]
struct CertifyArgs {
    #[arg(long)]
    cov: PathBuf,
    #[arg(long)]
    precision: PathBuf,
    #[arg(long)]
    sparsity: usize,
    /// Absolute tolerance (default 1e-7 (1 + |f|)).
    #[arg(long)]
    tol: Option<f64>,
}

enum Failure {
    Core(Error),
    Certificate,
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure::Core(e)
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    if let Err(e) = configure_threads() {
        eprintln!("InvalidConfig: {e}");
        return ExitCode::from(EXIT_INPUT);
    }
    let result = match cli.command {
        Command::Gen(g) => cmd_gen(g),
        Command::Solve(a) => cmd_solve(a),
        Command::Eval(a) => cmd_eval(a),
        Command::Certify(a) => cmd_certify(a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Certificate) => ExitCode::from(EXIT_CERT_FAILED),
        Err(Failure::Core(e)) => {
            eprintln!("{}: {e}", e.name());
            if let Error::NonPositiveDiagonal { .. } = e {
                eprintln!("hint: constant features have zero variance; drop those columns");
            }
            ExitCode::from(if e.is_io_error() {
                EXIT_IO
            } else if e.is_input_error() {
                EXIT_INPUT
            } else {
                EXIT_SOLVER
            })
        }
    }
}

fn configure_threads() -> Result<(), String> {
    let Ok(v) = std::env::var("SICS_THREADS") else {
        return Ok(());
    };
    let n: usize = v.parse().map_err(|_| format!("SICS_THREADS must be a positive integer, got {v:?}"))?;
    if n == 0 {
        return Err("SICS_THREADS must be positive".into());
    }
    rayon::ThreadPoolBuilder::new()
        .num_threads(n)
        .build_global()
        .map_err(|e| e.to_string())
}

fn create(path: &Path) -> Result<BufWriter<File>, Error> {
    Ok(BufWriter::new(File::create(path)?))
}

fn open(path: &Path) -> Result<BufReader<File>, Error> {
    Ok(BufReader::new(File::open(path)?))
}

fn sidecar(path: &Path) -> PathBuf {
    let mut s = path.as_os_str().to_owned();
    s.push(".gen.json");
    PathBuf::from(s)
}

fn write_cov(path: &Path, m: &SymMatrix<f64>, meta: &GenMetadata) -> Result<(), Error> {
    let mut w = create(path)?;
    sio::write_covariance_csv(&mut w, m)?;
    w.flush()?;
    let side = sidecar(path);
    let mut w = create(&side)?;
    serde_json::to_writer_pretty(&mut w, meta)?;
    writeln!(w)?;
    w.flush()?;
    println!("{}", path.display());
    println!("{}", side.display());
    Ok(())
}

fn cmd_gen(cmd: GenCommand) -> Result<(), Failure> {
    match cmd {
        GenCommand::Gaussian { n, m, seed, out } => {
            let sigma = gaussian_covariance::<f64>(n, m, seed)?;
            let meta = GenMetadata {
                kind: GenKind::GaussianRandom,
                n,
                m: Some(m),
                p: None,
                noise_sd: None,
                seed: Some(seed),
                prng: Some(PRNG_NAME.into()),
                diagonal_loading: None,
            };
            write_cov(&out, &sigma, &meta)?;
        }
        GenCommand::SparseStruct {
            n,
            p,
            noise_sd,
            seed,
            out,
            truth,
        } => {
            let inst = sparse_structured_covariance::<f64>(n, p, noise_sd, seed)?;
            let meta = GenMetadata {
                kind: GenKind::SparseStructured,
                n,
                m: None,
                p: Some(p),
                noise_sd: Some(noise_sd),
                seed: Some(seed),
                prng: Some(PRNG_NAME.into()),
                diagonal_loading: Some(inst.loading),
            };
            write_cov(&out, &inst.sigma, &meta)?;
            if let Some(t) = truth {
                let mut w = create(&t)?;
                sio::write_triplets(&mut w, &inst.x_true)?;
                w.flush().map_err(Error::from)?;
                println!("{}", t.display());
            }
        }
        GenCommand::Empirical { samples, out } => {
            let rows = sio::read_csv_rows::<f64, _>(open(&samples)?)?;
            let sigma = empirical_covariance(&rows)?;
            let meta = GenMetadata {
                kind: GenKind::Empirical,
                n: sigma.dim(),
                m: Some(rows.len()),
                p: None,
                noise_sd: None,
                seed: None,
                prng: None,
                diagonal_loading: None,
            };
            write_cov(&out, &sigma, &meta)?;
        }
    }
    Ok(())
}

fn read_cov(path: &Path) -> Result<SymMatrix<f64>, Error> {
    let (m, asym) = sio::read_covariance_csv::<f64, _>(open(path)?)?;
    if asym > ASYMMETRY_WARN {
        eprintln!("warning: covariance is asymmetric by up to {asym:e}; symmetrized by averaging");
    }
    Ok(m)
}

fn read_precision(path: &Path, n: usize) -> Result<SymMatrix<f64>, Error> {
    let x = sio::read_triplets::<f64, _>(open(path)?)?;
    if x.dim() != n {
        return Err(Error::DimensionMismatch {
            expected: n,
            found: x.dim(),
        });
    }
    Ok(x)
}

fn cmd_solve(a: SolveArgs) -> Result<(), Failure> {
    let start = Instant::now();
    if a.sparsity % 2 == 1 {
        eprintln!(
            "warning: odd sparsity {}; at most {} symmetric pairs ({} off-diagonal nonzeros) will be used",
            a.sparsity,
            a.sparsity / 2,
            a.sparsity - 1
        );
    }
    let sigma = read_cov(&a.cov)?;
    let side = sidecar(&a.cov);
    let generator = if side.exists() {
        Some(serde_json::from_reader::<_, GenMetadata>(open(&side)?).map_err(Error::from)?)
    } else {
        None
    };
    let cfg = CwoaConfig {
        sparsity: a.sparsity,
        newton: NewtonConfig {
            t_in: a.t_in,
            t_out: a.max_newton_iters,
            eta: a.eta,
            omega: a.omega,
            grad_tol: a.grad_tol,
            max_backtracks: a.max_backtracks,
        },
        refresh_every: a.refresh_every,
        max_swap_sweeps: a.max_swaps,
        tol_improve: a.tol_improve,
        seed: a.seed,
        swap: !a.no_swap,
    };
    let sol = solve(&sigma, &cfg)?;
    let wall_ms = start.elapsed().as_secs_f64() * 1e3;
    let doc = TraceDocument::new(&cfg, &sol, generator, wall_ms, !a.no_timing);
    if let Some(out) = &a.out {
        let mut w = create(out)?;
        sio::write_triplets(&mut w, &sol.x)?;
        w.flush().map_err(Error::from)?;
    }
    if let Some(trace) = &a.trace {
        let mut w = create(trace)?;
        doc.write(&mut w)?;
        w.flush().map_err(Error::from)?;
    }
    let f = &doc.final_;
    if f.swap_limit_reached {
        eprintln!("warning: SwapLimitReached after {} swaps", f.swaps);
    }
    if f.newton_unconverged > 0 {
        eprintln!(
            "warning: {} restricted solves stopped at the iteration cap",
            f.newton_unconverged
        );
    }
    let summary = json!({
        "objective": f.objective,
        "nnz_off": f.nnz_off,
        "support_pairs": f.support.len(),
        "min_pivot_sq": f.min_pivot_sq,
        "iterations": doc.iterations.len(),
        "swaps": f.swaps,
        "greedy_saturated": f.greedy_saturated,
        "wall_ms": f.wall_ms,
    });
    println!("{summary}");
    Ok(())
}

fn cmd_eval(a: EvalArgs) -> Result<(), Failure> {
    let sigma = read_cov(&a.cov)?;
    let x = read_precision(&a.precision, sigma.dim())?;
    let (objective, pd) = match cholesky(&x) {
        Ok(l) => (Some(objective(&sigma, &x, &l)), true),
        Err(Error::NotPositiveDefinite { .. }) => (None, false),
        Err(e) => return Err(e.into()),
    };
    println!("{}", json!({ "objective": objective, "nnz_off": x.nnz_off(), "pd": pd }));
    Ok(())
}

fn family_json(f: &FamilyReport<f64>) -> serde_json::Value {
    json!({
        "passed": f.passed,
        "checked": f.checked,
        "worst": f.worst,
        "worst_entry": f.worst_entry.map(|(i, j)| [i + 1, j + 1]),
        "worst_add": f.worst_add.map(|c| c.one_based()),
        "worst_drop": f.worst_drop.map(|c| c.one_based()),
    })
}

fn certificate_json(r: &CertificateReport<f64>) -> serde_json::Value {
    json!({
        "passed": r.passed(),
        "objective": r.objective,
        "tol": r.tol,
        "gradient": family_json(&r.gradient),
        "addition": family_json(&r.addition),
        "swap": family_json(&r.swap),
        "skipped_removals": r.skipped_removals,
    })
}

fn cmd_certify(a: CertifyArgs) -> Result<(), Failure> {
    let sigma = read_cov(&a.cov)?;
    let x = read_precision(&a.precision, sigma.dim())?;
    let tol = match a.tol {
        Some(t) => t,
        None => {
            let l = cholesky(&x).map_err(|e| Error::InfeasibleStart(e.to_string()))?;
            1e-7 * (1.0 + objective(&sigma, &x, &l).abs())
        }
    };
    let report = certify(&sigma, &x, a.sparsity, tol).map_err(|e| match e {
        Error::NotPositiveDefinite { .. } => Error::InfeasibleStart(e.to_string()),
        e => e,
    })?;
    println!("{}", serde_json::to_string_pretty(&certificate_json(&report)).map_err(Error::from)?);
    if report.passed() {
        Ok(())
    } else {
        Err(Failure::Certificate)
    }
}
