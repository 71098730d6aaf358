//! Inverse and log-determinant maintenance under `X -> X + w E_j`, where
//! `E_j` has ones at `(r, c)` and `(c, r)`.
//!
//! With `Y = X^{-1}` and `delta = Y_rr Y_cc - Y_rc^2`,
//! `det(X + w E_j) = det(X) (1 + 2 Y_rc w - delta w^2)` and the new inverse is
//! a rank-2 correction of `Y` that costs `O(n^2)`.

use crate::error::{Error, Result};
use crate::matrix::{Coord, SymMatrix};
use crate::scalar::Scalar;

/// Smallest determinant factor accepted before an update counts as leaving
/// the positive definite cone.
pub const PHI_GUARD: f64 = 1e-14;

/// The three entries of `Y` that a rank-2 perturbation at `coord` touches.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Rank2Context<T> {
    pub coord: Coord,
    pub yrr: T,
    pub ycc: T,
    pub yrc: T,
    /// `Y_rr Y_cc - Y_rc^2`, positive whenever `Y` is.
    pub delta: T,
}

impl<T: Scalar> Rank2Context<T> {
    pub fn new(y: &SymMatrix<T>, coord: Coord) -> Self {
        let (r, c) = (coord.row(), coord.col());
        Self::from_entries(coord, y.get(r, r), y.get(c, c), y.get(r, c))
    }

    pub fn from_entries(coord: Coord, yrr: T, ycc: T, yrc: T) -> Self {
        Rank2Context {
            coord,
            yrr,
            ycc,
            yrc,
            delta: yrr * ycc - yrc * yrc,
        }
    }

    /// `phi(theta) = 1 + 2 Y_rc theta - delta theta^2 = det(X + theta E) / det(X)`.
    #[inline]
    pub fn det_factor(&self, theta: T) -> T {
        T::one() + self.det_factor_minus_one(theta)
    }

    /// `phi(theta) - 1`, kept separate so callers can use `ln_1p`.
    #[inline]
    pub fn det_factor_minus_one(&self, theta: T) -> T {
        let two = T::lit(2.0);
        theta * (two * self.yrc - self.delta * theta)
    }
}

pub fn det_factor<T: Scalar>(ctx: &Rank2Context<T>, theta: T) -> T {
    ctx.det_factor(theta)
}

/// Sherman-Morrison-Woodbury update: returns `(X + varpi E_coord)^{-1}` given
/// `y = X^{-1}`.
pub fn smw_inverse_update<T: Scalar>(y: &SymMatrix<T>, coord: Coord, varpi: T) -> Result<SymMatrix<T>> {
    if varpi == T::zero() {
        return Ok(y.clone());
    }
    let ctx = Rank2Context::new(y, coord);
    let phi = ctx.det_factor(varpi);
    if !(phi > T::lit(PHI_GUARD)) {
        return Err(Error::NotPositiveDefiniteUpdate { phi: phi.as_f64() });
    }
    let n = y.dim();
    let (r, c) = (coord.row(), coord.col());
    let u: Vec<T> = y.row(r).to_vec();
    let v: Vec<T> = y.row(c).to_vec();
    let scale = varpi / phi;
    let w_diag = T::one() + varpi * ctx.yrc;
    let w_rr = varpi * ctx.ycc;
    let w_cc = varpi * ctx.yrr;
    // Y_:r W Y_:c^T etc. expanded; the form below is symmetric in (a, b).
    Ok(SymMatrix::from_upper_fn(n, |a, b| {
        let corr = w_diag * (u[a] * v[b] + v[a] * u[b]) - w_rr * u[a] * u[b] - w_cc * v[a] * v[b];
        y.get(a, b) - scale * corr
    }))
}

/// Inverse after zeroing a support coordinate whose current value is
/// `current_value`, i.e. the update with `varpi = -current_value`.
pub fn remove_coordinate<T: Scalar>(y: &SymMatrix<T>, coord: Coord, current_value: T) -> Result<SymMatrix<T>> {
    smw_inverse_update(y, coord, -current_value)
}
