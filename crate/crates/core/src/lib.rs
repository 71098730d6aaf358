//! Sparsity-constrained inverse covariance selection.
//!
//! Given a covariance `Sigma` and a budget `s`, finds a positive definite
//! precision matrix `X` minimizing `<Sigma, X> - log det X` with at most `s`
//! nonzero off-diagonal entries. The outer search adds, then swaps, single
//! symmetric coordinate pairs using closed-form line minimizers and rank-2
//! inverse updates; each move is polished by a support-restricted Newton solve.
//!
//! Everything is generic over [`Scalar`] (`f32` or `f64`); the `*F64` and
//! `*F32` aliases below name the common instantiations.
//!
//! ```
//! use sics_core::{solve, CwoaConfig, SymMatrixF64};
//!
//! let sigma = SymMatrixF64::from_upper_fn(2, |i, j| if i == j { 1.0 } else { 0.5 });
//! let sol = solve(&sigma, &CwoaConfig::with_sparsity(2)).unwrap();
//! assert!((sol.objective - (2.0 + 0.75f64.ln())).abs() < 1e-8);
//! ```

// `!(x > 0)` style checks deliberately reject NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod cwoa;
pub mod datagen;
pub mod error;
pub mod io;
pub mod line;
pub mod linalg;
pub mod matrix;
pub mod newton;
pub mod pattern;
pub mod rank2;
pub mod scalar;

pub use cwoa::{
    certify, greedy_stage, initialize, solve, swap_stage, CertificateReport, CwoaConfig, CwoaSolution, FamilyReport,
    IterationRecord, RunLog, SolverState, Stage,
};
pub use datagen::{
    empirical_covariance, gaussian_covariance, sparse_structured_covariance, GenKind, GenMetadata, SparseInstance,
};
pub use error::{Error, Result};
pub use line::{best_addition, best_swap, line_delta, theta_star, LineResult, SwapCandidate, SwapScan};
pub use linalg::{cholesky, gradient, hessian_apply, inverse_from_cholesky, log_det, objective, CholeskyFactor};
pub use matrix::{Coord, SymMatrix};
pub use newton::{
    armijo_step, cg_direction, solve_restricted, ArmijoStep, CgOutcome, NewtonConfig, NewtonRecord, NewtonSolution,
    NewtonStatus, NewtonTrace,
};
pub use pattern::FreePattern;
pub use rank2::{det_factor, remove_coordinate, smw_inverse_update, Rank2Context};
pub use scalar::Scalar;

pub type SymMatrixF64 = SymMatrix<f64>;
pub type SymMatrixF32 = SymMatrix<f32>;
pub type CholeskyFactorF64 = CholeskyFactor<f64>;
pub type CholeskyFactorF32 = CholeskyFactor<f32>;
pub type NewtonConfigF64 = NewtonConfig<f64>;
pub type NewtonConfigF32 = NewtonConfig<f32>;
pub type CwoaConfigF64 = CwoaConfig<f64>;
pub type CwoaConfigF32 = CwoaConfig<f32>;
pub type CwoaSolutionF64 = CwoaSolution<f64>;
pub type CwoaSolutionF32 = CwoaSolution<f32>;
