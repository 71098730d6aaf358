//! One-dimensional minimization along a single symmetric coordinate pair and
//! the candidate scans built on it.
//!
//! Along `V + theta E_j` the objective changes by
//! `2 theta Sigma_rc - ln(1 + 2 Y_rc theta - O_rc theta^2)` with `Y = V^{-1}`
//! and `O_rc = Y_rr Y_cc - Y_rc^2`. The constant part of the objective cancels
//! and is never formed.

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::matrix::{Coord, SymMatrix};
use crate::rank2::{remove_coordinate, Rank2Context, PHI_GUARD};
use crate::scalar::Scalar;

/// Two candidates whose objective changes differ by at most this much are
/// treated as tied and resolved by the smaller column-major index.
pub const TIE_TOL: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LineResult<T> {
    pub theta_star: T,
    /// `f(V + theta* E_j) - f(V)`, never positive.
    pub delta_f: T,
    /// The determinant factor at `theta_star` is positive.
    pub feasible: bool,
    /// The textbook "minus" root was not the feasible one.
    pub minus_branch_infeasible: bool,
}

/// Objective change along the line for an arbitrary `theta` (infinite outside
/// the positive definite interval).
pub fn line_delta<T: Scalar>(ctx: &Rank2Context<T>, sigma_rc: T, theta: T) -> T {
    let phi_m1 = ctx.det_factor_minus_one(theta);
    if !(phi_m1 > -T::one()) {
        return T::infinity();
    }
    T::lit(2.0) * theta * sigma_rc - phi_m1.ln_1p()
}

/// Closed-form minimizer of the one-dimensional subproblem.
///
/// The stationarity condition is the quadratic
/// `s O theta^2 - (2 s Y_rc + O) theta - (s - Y_rc) = 0` (with `s = Sigma_rc`);
/// both roots are computed in cancellation-free form and the one inside the
/// positive definite interval is returned.
pub fn theta_star<T: Scalar>(sigma_rc: T, yrr: T, ycc: T, yrc: T) -> Result<LineResult<T>> {
    let coord = Coord::new(0, 1).expect("distinct");
    let ctx = Rank2Context::from_entries(coord, yrr, ycc, yrc);
    line_minimize(&ctx, sigma_rc)
}

pub(crate) fn line_minimize<T: Scalar>(ctx: &Rank2Context<T>, sigma_rc: T) -> Result<LineResult<T>> {
    let o = ctx.delta;
    if !(o > T::zero()) {
        return Err(Error::DegenerateCurvature { curvature: o.as_f64() });
    }
    let yrc = ctx.yrc;
    let (theta, minus_branch_infeasible) = if sigma_rc == T::zero() {
        (yrc / o, false)
    } else {
        let two = T::lit(2.0);
        let a = sigma_rc * o;
        let b = -(two * sigma_rc * yrc + o);
        let c = yrc - sigma_rc;
        let sqrt_disc = (o * o + T::lit(4.0) * sigma_rc * sigma_rc * ctx.yrr * ctx.ycc).sqrt();
        let q = -(b + b.signum() * sqrt_disc) / two;
        let (r_big, r_small) = (q / a, c / q);
        // (-b - sqrt)/(2a) is the printed branch; it is r_small when b < 0.
        let minus = if b < T::zero() { r_small } else { r_big };
        let plus = if b < T::zero() { r_big } else { r_small };
        let phi_minus = ctx.det_factor(minus);
        let phi_plus = ctx.det_factor(plus);
        if phi_minus > T::zero() && !(phi_plus > T::zero() && line_delta(ctx, sigma_rc, plus) < line_delta(ctx, sigma_rc, minus)) {
            (minus, false)
        } else if phi_plus > T::zero() {
            (plus, true)
        } else {
            // Both roots rounded onto the boundary; fall back to the interval centre.
            (yrc / o, true)
        }
    };
    let delta_f = line_delta(ctx, sigma_rc, theta);
    let feasible = ctx.det_factor(theta) > T::zero() && delta_f.is_finite();
    Ok(LineResult {
        theta_star: theta,
        // theta = 0 is always admissible, so rounding must not report a gain
        // that is really a loss.
        delta_f: if delta_f > T::zero() { T::zero() } else { delta_f },
        feasible,
        minus_branch_infeasible,
    })
}

/// Best single-coordinate addition over `zero_coords` given `y = X^{-1}`.
///
/// Returns `None` when there is no candidate or when no candidate lowers the
/// objective by more than `threshold`.
pub fn best_addition<T: Scalar>(
    sigma: &SymMatrix<T>,
    y: &SymMatrix<T>,
    zero_coords: impl IntoIterator<Item = Coord>,
    threshold: T,
) -> Result<Option<(Coord, LineResult<T>)>> {
    let n = sigma.dim();
    let tie = T::lit(TIE_TOL);
    let mut best: Option<(Coord, LineResult<T>)> = None;
    for j in zero_coords {
        let ctx = Rank2Context::new(y, j);
        let res = line_minimize(&ctx, sigma.at(j))?;
        if !res.feasible {
            continue;
        }
        let replace = match &best {
            None => true,
            Some((bj, br)) => better(res.delta_f, j.linear_index(n), br.delta_f, bj.linear_index(n), tie),
        };
        if replace {
            best = Some((j, res));
        }
    }
    Ok(best.filter(|(_, r)| r.delta_f < -threshold))
}

#[inline]
fn better<T: Scalar>(cand: T, cand_idx: usize, best: T, best_idx: usize, tie: T) -> bool {
    if (cand - best).abs() <= tie {
        cand_idx < best_idx
    } else {
        cand < best
    }
}

/// A `(drop, add)` exchange and its one-dimensional objective change.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SwapCandidate<T> {
    pub drop: Coord,
    pub add: Coord,
    pub line: LineResult<T>,
    /// `f(X - X_drop E_drop) - f(X)`.
    pub removal_delta: T,
    /// `removal_delta + line.delta_f`.
    pub total_delta: T,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SwapScan<T> {
    pub best: Option<SwapCandidate<T>>,
    /// Support coordinates whose removal would leave the positive definite cone.
    pub skipped_removals: Vec<Coord>,
}

/// Best `(drop, add)` exchange, `O(|support| n^2)` overall: one rank-2
/// downdate per support coordinate, then `O(1)` per addition candidate.
pub fn best_swap<T: Scalar>(
    sigma: &SymMatrix<T>,
    x: &SymMatrix<T>,
    y: &SymMatrix<T>,
    support: &[Coord],
    zero_coords: &[Coord],
    threshold: T,
) -> Result<SwapScan<T>> {
    let n = sigma.dim();
    let tie = T::lit(TIE_TOL);
    let per_drop: Vec<Result<Option<Option<SwapCandidate<T>>>>> = support
        .par_iter()
        .map(|&i| best_swap_for_drop(sigma, x, y, i, zero_coords, tie))
        .collect();

    let mut skipped = Vec::new();
    let mut best: Option<SwapCandidate<T>> = None;
    for (&i, res) in support.iter().zip(per_drop) {
        match res? {
            None => skipped.push(i),
            Some(None) => {}
            Some(Some(cand)) => {
                let replace = match &best {
                    None => true,
                    Some(b) => {
                        let key = |c: &SwapCandidate<T>| (c.drop.linear_index(n), c.add.linear_index(n));
                        if (cand.total_delta - b.total_delta).abs() <= tie {
                            key(&cand) < key(b)
                        } else {
                            cand.total_delta < b.total_delta
                        }
                    }
                };
                if replace {
                    best = Some(cand);
                }
            }
        }
    }
    Ok(SwapScan {
        best: best.filter(|c| c.total_delta < -threshold),
        skipped_removals: skipped,
    })
}

/// `Ok(None)` when removing `drop` is infeasible, `Ok(Some(None))` when there
/// is no addition candidate.
fn best_swap_for_drop<T: Scalar>(
    sigma: &SymMatrix<T>,
    x: &SymMatrix<T>,
    y: &SymMatrix<T>,
    drop: Coord,
    zero_coords: &[Coord],
    tie: T,
) -> Result<Option<Option<SwapCandidate<T>>>> {
    let n = sigma.dim();
    let xi = x.at(drop);
    let ctx = Rank2Context::new(y, drop);
    let phi_m1 = ctx.det_factor_minus_one(-xi);
    if !(phi_m1 + T::one() > T::lit(PHI_GUARD)) {
        return Ok(None);
    }
    let removal_delta = -T::lit(2.0) * xi * sigma.at(drop) - phi_m1.ln_1p();
    let v_inv = match remove_coordinate(y, drop, xi) {
        Ok(v) => v,
        Err(Error::NotPositiveDefiniteUpdate { .. }) => return Ok(None),
        Err(e) => return Err(e),
    };
    let mut best: Option<(Coord, LineResult<T>)> = None;
    for &j in zero_coords {
        let res = line_minimize(&Rank2Context::new(&v_inv, j), sigma.at(j))?;
        if !res.feasible {
            continue;
        }
        let replace = match &best {
            None => true,
            Some((bj, br)) => better(res.delta_f, j.linear_index(n), br.delta_f, bj.linear_index(n), tie),
        };
        if replace {
            best = Some((j, res));
        }
    }
    Ok(Some(best.map(|(add, line)| SwapCandidate {
        drop,
        add,
        line,
        removal_delta,
        total_delta: removal_delta + line.delta_f,
    })))
}
