//! File formats: dense covariance CSV, sparse precision triplets, sample
//! matrices and the JSON run trace.
//!
//! Numbers are written with 17 significant digits so that a write followed by
//! a read reproduces every `f64` exactly.

use std::io::{BufRead, Write};

use serde::{Deserialize, Serialize};

use crate::cwoa::{CwoaConfig, CwoaSolution, IterationRecord};
use crate::datagen::GenMetadata;
use crate::error::{Error, Result};
use crate::matrix::SymMatrix;
use crate::newton::NewtonStatus;
use crate::scalar::Scalar;

/// Asymmetry above which the covariance reader warns.
pub const ASYMMETRY_WARN: f64 = 1e-8;

fn parse_value<T: Scalar>(tok: &str, line: usize) -> Result<T> {
    tok.trim().parse::<T>().map_err(|_| Error::Parse {
        line,
        message: format!("invalid number {:?}", tok.trim()),
    })
}

fn data_lines<R: BufRead>(reader: R) -> impl Iterator<Item = Result<(usize, String)>> {
    reader
        .lines()
        .enumerate()
        .map(|(k, l)| l.map(|s| (k + 1, s)).map_err(Error::from))
        .filter(|r| !matches!(r, Ok((_, s)) if s.trim().is_empty()))
}

/// Rows of comma-separated numbers, all of the same length.
pub fn read_csv_rows<T: Scalar, R: BufRead>(reader: R) -> Result<Vec<Vec<T>>> {
    let mut rows: Vec<Vec<T>> = Vec::new();
    for item in data_lines(reader) {
        let (line, text) = item?;
        let row = text.split(',').map(|t| parse_value(t, line)).collect::<Result<Vec<T>>>()?;
        if let Some(first) = rows.first() {
            if row.len() != first.len() {
                return Err(Error::Parse {
                    line,
                    message: format!("expected {} values, found {}", first.len(), row.len()),
                });
            }
        }
        rows.push(row);
    }
    Ok(rows)
}

/// Reads an `n x n` covariance and symmetrizes it by averaging.
///
/// Returns the matrix and the largest `|a_ij - a_ji|` seen in the file.
pub fn read_covariance_csv<T: Scalar, R: BufRead>(reader: R) -> Result<(SymMatrix<T>, T)> {
    let rows = read_csv_rows::<T, _>(reader)?;
    let n = rows.len();
    if n == 0 {
        return Err(Error::Parse {
            line: 1,
            message: "empty covariance file".into(),
        });
    }
    if rows[0].len() != n {
        return Err(Error::DimensionMismatch {
            expected: n,
            found: rows[0].len(),
        });
    }
    let flat: Vec<T> = rows.into_iter().flatten().collect();
    SymMatrix::from_row_major_symmetrized(n, &flat)
}

pub fn write_covariance_csv<T: Scalar, W: Write>(mut w: W, m: &SymMatrix<T>) -> Result<()> {
    let n = m.dim();
    for i in 0..n {
        let line: Vec<String> = m.row(i).iter().map(|v| format!("{v:.16e}")).collect();
        writeln!(w, "{}", line.join(","))?;
    }
    Ok(())
}

/// Writes the upper triangle (diagonal included) as `i j value` lines,
/// 1-based, nonzero entries only, after an `n nnz_upper` header.
pub fn write_triplets<T: Scalar, W: Write>(mut w: W, m: &SymMatrix<T>) -> Result<()> {
    let n = m.dim();
    let entries: Vec<(usize, usize, T)> = (0..n)
        .flat_map(|i| (i..n).map(move |j| (i, j)))
        .map(|(i, j)| (i, j, m.get(i, j)))
        .filter(|&(_, _, v)| v != T::zero())
        .collect();
    writeln!(w, "{} {}", n, entries.len())?;
    for (i, j, v) in entries {
        writeln!(w, "{} {} {v:.16e}", i + 1, j + 1)?;
    }
    Ok(())
}

pub fn read_triplets<T: Scalar, R: BufRead>(reader: R) -> Result<SymMatrix<T>> {
    let mut lines = data_lines(reader);
    let (hline, header) = lines.next().transpose()?.ok_or(Error::Parse {
        line: 1,
        message: "missing header".into(),
    })?;
    let head: Vec<&str> = header.split_whitespace().collect();
    let parse_usize = |tok: &str, line: usize| {
        tok.parse::<usize>().map_err(|_| Error::Parse {
            line,
            message: format!("invalid integer {tok:?}"),
        })
    };
    if head.len() != 2 {
        return Err(Error::Parse {
            line: hline,
            message: "header must be \"n nnz_upper\"".into(),
        });
    }
    let n = parse_usize(head[0], hline)?;
    let nnz = parse_usize(head[1], hline)?;
    let mut m = SymMatrix::zeros(n);
    let mut count = 0;
    for item in lines {
        let (line, text) = item?;
        let toks: Vec<&str> = text.split_whitespace().collect();
        if toks.len() != 3 {
            return Err(Error::Parse {
                line,
                message: "expected \"i j value\"".into(),
            });
        }
        let i = parse_usize(toks[0], line)?;
        let j = parse_usize(toks[1], line)?;
        if !(1 <= i && i <= j && j <= n) {
            return Err(Error::Parse {
                line,
                message: format!("index ({i},{j}) outside the upper triangle of a {n}x{n} matrix"),
            });
        }
        m.set(i - 1, j - 1, parse_value(toks[2], line)?);
        count += 1;
    }
    if count != nnz {
        return Err(Error::Parse {
            line: hline,
            message: format!("header declares {nnz} entries, found {count}"),
        });
    }
    Ok(m)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConfigEcho {
    pub sparsity: usize,
    pub capacity_pairs: usize,
    pub t_in: usize,
    pub t_out: usize,
    pub eta: f64,
    pub omega: f64,
    pub grad_tol: f64,
    pub max_backtracks: usize,
    pub refresh_every: usize,
    pub max_swap_sweeps: usize,
    pub tol_improve: f64,
    pub seed: u64,
    pub swap_stage: bool,
    pub n: usize,
}

impl ConfigEcho {
    pub fn new<T: Scalar>(cfg: &CwoaConfig<T>, n: usize) -> Self {
        ConfigEcho {
            sparsity: cfg.sparsity,
            capacity_pairs: cfg.capacity(),
            t_in: cfg.newton.t_in,
            t_out: cfg.newton.t_out,
            eta: cfg.newton.eta.as_f64(),
            omega: cfg.newton.omega.as_f64(),
            grad_tol: cfg.newton.grad_tol.as_f64(),
            max_backtracks: cfg.newton.max_backtracks,
            refresh_every: cfg.refresh_every,
            max_swap_sweeps: cfg.swap_limit(n),
            tol_improve: cfg.tol_improve.as_f64(),
            seed: cfg.seed,
            swap_stage: cfg.swap,
            n,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TraceRecord {
    pub iter: usize,
    pub stage: String,
    /// 1-based `[i, j]`.
    pub added: Option<[usize; 2]>,
    pub dropped: Option<[usize; 2]>,
    pub theta: f64,
    pub objective: f64,
    pub support_pairs: usize,
    pub nnz_off: usize,
    pub min_pivot_sq: f64,
    pub newton_iters: usize,
    pub newton_status: String,
    pub elapsed_ms: f64,
}

fn status_name(s: NewtonStatus) -> &'static str {
    match s {
        NewtonStatus::Converged => "converged",
        NewtonStatus::MaxIterations => "max_iterations",
        NewtonStatus::Stalled => "stalled",
    }
}

impl TraceRecord {
    pub fn new<T: Scalar>(r: &IterationRecord<T>, timing: bool) -> Self {
        TraceRecord {
            iter: r.iter,
            stage: r.stage.as_str().to_string(),
            added: r.added.map(|c| c.one_based()),
            dropped: r.dropped.map(|c| c.one_based()),
            theta: r.theta.as_f64(),
            objective: r.objective.as_f64(),
            support_pairs: r.support_pairs,
            nnz_off: r.nnz_off,
            min_pivot_sq: r.min_pivot_sq.as_f64(),
            newton_iters: r.newton_iters,
            newton_status: status_name(r.newton_status).to_string(),
            elapsed_ms: if timing { r.elapsed.as_secs_f64() * 1e3 } else { 0.0 },
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FinalSummary {
    pub objective: f64,
    /// 1-based `[i, j]` pairs, column-major order.
    pub support: Vec<[usize; 2]>,
    pub wall_ms: f64,
    pub nnz_off: usize,
    /// Smallest squared Cholesky pivot of the estimate.
    pub min_pivot_sq: f64,
    pub greedy_saturated: bool,
    pub swap_limit_reached: bool,
    pub swaps: usize,
    pub skipped_removals: usize,
    pub minus_branch_infeasible: usize,
    pub newton_unconverged: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TraceDocument {
    pub config: ConfigEcho,
    pub generator: Option<GenMetadata>,
    pub iterations: Vec<TraceRecord>,
    #[serde(rename = "final")]
    pub final_: FinalSummary,
}

impl TraceDocument {
    /// With `timing = false` all durations are written as zero, which makes
    /// traces of identical runs byte-identical.
    pub fn new<T: Scalar>(
        cfg: &CwoaConfig<T>,
        sol: &CwoaSolution<T>,
        generator: Option<GenMetadata>,
        wall_ms: f64,
        timing: bool,
    ) -> Self {
        let log = &sol.log;
        TraceDocument {
            config: ConfigEcho::new(cfg, sol.x.dim()),
            generator,
            iterations: log.records.iter().map(|r| TraceRecord::new(r, timing)).collect(),
            final_: FinalSummary {
                objective: sol.objective.as_f64(),
                support: sol.support.iter().map(|c| c.one_based()).collect(),
                wall_ms: if timing { wall_ms } else { 0.0 },
                nnz_off: sol.x.nnz_off(),
                min_pivot_sq: sol.chol.min_pivot_sq().as_f64(),
                greedy_saturated: log.greedy_saturated,
                swap_limit_reached: log.swap_limit_reached,
                swaps: log.swaps,
                skipped_removals: log.skipped_removals,
                minus_branch_infeasible: log.minus_branch_infeasible,
                newton_unconverged: log.newton_unconverged,
            },
        }
    }

    pub fn write<W: Write>(&self, mut w: W) -> Result<()> {
        serde_json::to_writer_pretty(&mut w, self)?;
        writeln!(w)?;
        Ok(())
    }

    pub fn read<R: std::io::Read>(r: R) -> Result<Self> {
        Ok(serde_json::from_reader(r)?)
    }
}
