//! Newton-like solver for the support-restricted convex subproblem
//! `min f(X) s.t. X > 0, X_Z = 0`.
//!
//! Each iteration computes a truncated conjugate-gradient Newton direction on
//! the free entries and takes an Armijo step gated by a Cholesky positive
//! definiteness test.

use crate::error::{Error, Result};
use crate::linalg::{cholesky, objective, CholeskyFactor};
use crate::matrix::{Coord, SymMatrix};
use crate::pattern::FreePattern;
use crate::scalar::Scalar;

/// Objective differences smaller than this many ulps of the objective's
/// magnitude cannot be resolved by comparing function values.
const NOISE_ULPS: f64 = 64.0;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NewtonConfig<T> {
    /// Maximum conjugate-gradient iterations per direction.
    pub t_in: usize,
    /// Maximum Newton iterations.
    pub t_out: usize,
    /// Backtracking ratio.
    pub eta: T,
    /// Sufficient-decrease constant.
    pub omega: T,
    /// Stop once the restricted gradient's largest entry is at most
    /// `grad_tol * (1 + max|Sigma_ij|)`.
    pub grad_tol: T,
    pub max_backtracks: usize,
}

impl<T: Scalar> Default for NewtonConfig<T> {
    fn default() -> Self {
        NewtonConfig {
            t_in: 5,
            t_out: 100,
            eta: T::lit(0.1),
            omega: T::lit(0.25),
            grad_tol: T::lit(1e-8),
            max_backtracks: 60,
        }
    }
}

impl<T: Scalar> NewtonConfig<T> {
    pub fn validate(&self) -> Result<()> {
        if !(self.eta > T::zero() && self.eta < T::one()) {
            return Err(Error::InvalidConfig(format!("eta must lie in (0,1), got {}", self.eta)));
        }
        if !(self.omega > T::zero() && self.omega < T::lit(0.5)) {
            return Err(Error::InvalidConfig(format!("omega must lie in (0,0.5), got {}", self.omega)));
        }
        if self.t_in == 0 || self.t_out == 0 {
            return Err(Error::InvalidConfig("t_in and t_out must be positive".into()));
        }
        if !(self.grad_tol > T::zero()) {
            return Err(Error::InvalidConfig(format!("grad_tol must be positive, got {}", self.grad_tol)));
        }
        Ok(())
    }
}

/// One accepted Newton step, measured at the iterate it started from.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NewtonRecord<T> {
    pub objective: T,
    pub grad_norm: T,
    pub direction_norm: T,
    /// `<G, D>`, negative for a descent direction.
    pub descent: T,
    pub alpha: T,
    pub backtracks: usize,
    pub cg_iterations: usize,
    pub cg_breakdown: bool,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct NewtonTrace<T> {
    pub records: Vec<NewtonRecord<T>>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum NewtonStatus {
    Converged,
    /// `t_out` iterations ran out before the gradient tolerance was met.
    MaxIterations,
    /// The direction stopped being a descent direction before convergence.
    Stalled,
}

#[derive(Debug, Clone)]
pub struct NewtonSolution<T> {
    pub x: SymMatrix<T>,
    pub y: SymMatrix<T>,
    pub chol: CholeskyFactor<T>,
    pub objective: T,
    /// Restricted gradient norm at `x`.
    pub grad_norm: T,
    pub status: NewtonStatus,
    pub trace: NewtonTrace<T>,
}

#[derive(Debug, Clone)]
pub struct CgOutcome<T> {
    pub direction: SymMatrix<T>,
    /// `direction` gathered onto the free pattern.
    pub compact: Vec<T>,
    pub iterations: usize,
    /// `<P, YPY> <= 0` was hit; `direction` is the last good iterate.
    pub breakdown: bool,
}

/// Truncated CG for `min <D, G> + 1/2 <D, Y D Y>` over `D` supported on the
/// free pattern (the complement of the forbidden set).
///
/// Starts from `D = 0`, so the initial residual is `-G` projected onto the
/// pattern; residual and iterate stay on the pattern throughout.
pub fn cg_direction<T: Scalar>(
    y: &SymMatrix<T>,
    g: &SymMatrix<T>,
    pattern: &FreePattern,
    t_in: usize,
) -> CgOutcome<T> {
    let g_free = pattern.gather(g);
    cg_direction_compact(y, &g_free, pattern, t_in)
}

fn cg_direction_compact<T: Scalar>(y: &SymMatrix<T>, g_free: &[T], pattern: &FreePattern, t_in: usize) -> CgOutcome<T> {
    let len = pattern.len();
    let mut d = vec![T::zero(); len];
    let mut r: Vec<T> = g_free.iter().map(|&v| -v).collect();
    let mut p = r.clone();
    let mut r_old = pattern.inner(&r, &r);
    let r_floor = r_old * T::epsilon() * T::epsilon();
    let mut iterations = 0;
    let mut breakdown = false;
    for _ in 0..t_in {
        if !(r_old > r_floor) || r_old == T::zero() {
            break;
        }
        let b = pattern.hessian_apply(y, &p);
        let pb = pattern.inner(&p, &b);
        if !(pb > T::zero()) {
            breakdown = true;
            break;
        }
        let alpha = r_old / pb;
        for k in 0..len {
            d[k] += alpha * p[k];
            r[k] -= alpha * b[k];
        }
        iterations += 1;
        let r_new = pattern.inner(&r, &r);
        let beta = r_new / r_old;
        for k in 0..len {
            p[k] = r[k] + beta * p[k];
        }
        r_old = r_new;
    }
    CgOutcome {
        direction: pattern.scatter(&d),
        compact: d,
        iterations,
        breakdown,
    }
}

#[derive(Debug, Clone)]
pub struct ArmijoStep<T> {
    pub alpha: T,
    pub x: SymMatrix<T>,
    pub chol: CholeskyFactor<T>,
    /// Inverse of the accepted iterate.
    pub y: SymMatrix<T>,
    pub objective: T,
    pub backtracks: usize,
    /// Accepted on the slope test because the decrease was below rounding.
    pub slope_certified: bool,
}

/// Backtracking over `alpha = eta^k`, accepting the first step that is
/// positive definite and satisfies `f(X + a D) <= f(X) + a omega <G, D>`.
///
/// When the predicted decrease is below the rounding noise of `f`, the
/// comparison of function values is meaningless. The decrease is then
/// estimated by the trapezoidal rule `a (<G, D> + <g(X + a D), D>) / 2` from
/// the slopes at both ends, which is exact for a quadratic, and the same
/// sufficient-decrease inequality is tested on that estimate.
pub fn armijo_step<T: Scalar>(
    sigma: &SymMatrix<T>,
    x: &SymMatrix<T>,
    d: &SymMatrix<T>,
    g: &SymMatrix<T>,
    f_x: T,
    cfg: &NewtonConfig<T>,
) -> Result<ArmijoStep<T>> {
    let gd = g.inner(d);
    let lin = sigma.inner(x);
    let scale = lin.abs() + (lin - f_x).abs() + T::one();
    let noise = T::lit(NOISE_ULPS) * T::epsilon() * scale;
    let mut alpha = T::one();
    for k in 0..=cfg.max_backtracks {
        let xt = x.add_scaled(d, alpha);
        if let Ok(chol) = cholesky(&xt) {
            let ft = objective(sigma, &xt, &chol);
            if ft <= f_x + alpha * cfg.omega * gd {
                let y = chol.inverse();
                return Ok(ArmijoStep {
                    alpha,
                    x: xt,
                    chol,
                    y,
                    objective: ft,
                    backtracks: k,
                    slope_certified: false,
                });
            }
            if alpha * gd.abs() <= noise && ft.is_finite() {
                let y = chol.inverse();
                let slope = sigma.sub(&y).inner(d);
                let decrease = alpha * (gd + slope) * T::lit(0.5);
                if decrease <= alpha * cfg.omega * gd {
                    return Ok(ArmijoStep {
                        alpha,
                        x: xt,
                        chol,
                        y,
                        objective: f_x + decrease,
                        backtracks: k,
                        slope_certified: true,
                    });
                }
            }
        }
        alpha *= cfg.eta;
    }
    Err(Error::LineSearchFailed {
        backtracks: cfg.max_backtracks,
    })
}

/// Solves the subproblem restricted to `support` from the feasible start `x0`.
pub fn solve_restricted<T: Scalar>(
    sigma: &SymMatrix<T>,
    x0: &SymMatrix<T>,
    support: &[Coord],
    cfg: &NewtonConfig<T>,
) -> Result<NewtonSolution<T>> {
    cfg.validate()?;
    let n = sigma.dim();
    if x0.dim() != n {
        return Err(Error::DimensionMismatch {
            expected: n,
            found: x0.dim(),
        });
    }
    let pattern = FreePattern::new(n, support);
    let mask = pattern.mask();
    if let Some(k) = (0..n * n).find(|&k| !mask[k] && x0.as_slice()[k] != T::zero()) {
        return Err(Error::InfeasibleStart(format!(
            "entry ({},{}) is outside the support but nonzero",
            k / n + 1,
            k % n + 1
        )));
    }
    let chol = cholesky(x0).map_err(|e| Error::InfeasibleStart(e.to_string()))?;
    let y = chol.inverse();
    let f = objective(sigma, x0, &chol);
    newton_loop(sigma, x0.clone(), y, chol, f, &pattern, cfg)
}

/// Same as [`solve_restricted`] when the caller already holds the factor and
/// inverse of `x0`.
pub(crate) fn newton_loop<T: Scalar>(
    sigma: &SymMatrix<T>,
    mut x: SymMatrix<T>,
    mut y: SymMatrix<T>,
    mut chol: CholeskyFactor<T>,
    mut f: T,
    pattern: &FreePattern,
    cfg: &NewtonConfig<T>,
) -> Result<NewtonSolution<T>> {
    let tol = cfg.grad_tol * (T::one() + sigma.max_abs());
    let sigma_free = pattern.gather(sigma);
    let mut trace = NewtonTrace::default();
    let restricted_grad = |y: &SymMatrix<T>| -> Vec<T> {
        sigma_free.iter().zip(pattern.gather(y)).map(|(&s, yv)| s - yv).collect()
    };
    let mut status = NewtonStatus::MaxIterations;
    for _ in 0..cfg.t_out {
        let g_free = restricted_grad(&y);
        let grad_norm = pattern.max_abs(&g_free);
        if grad_norm <= tol {
            status = NewtonStatus::Converged;
            break;
        }
        let cg = cg_direction_compact(&y, &g_free, pattern, cfg.t_in);
        let descent = pattern.inner(&g_free, &cg.compact);
        if !(descent < T::zero()) {
            status = NewtonStatus::Stalled;
            break;
        }
        let g = pattern.scatter(&g_free);
        let step = armijo_step(sigma, &x, &cg.direction, &g, f, cfg)?;
        trace.records.push(NewtonRecord {
            objective: f,
            grad_norm,
            direction_norm: cg.direction.frobenius_norm(),
            descent,
            alpha: step.alpha,
            backtracks: step.backtracks,
            cg_iterations: cg.iterations,
            cg_breakdown: cg.breakdown,
        });
        x = step.x;
        y = step.y;
        chol = step.chol;
        f = step.objective;
    }
    let grad_norm = pattern.max_abs(&restricted_grad(&y));
    if status == NewtonStatus::MaxIterations && grad_norm <= tol {
        status = NewtonStatus::Converged;
    }
    Ok(NewtonSolution {
        x,
        y,
        chol,
        objective: f,
        grad_norm,
        status,
        trace,
    })
}
