//! The coordinate-wise outer loop: greedy pursuit until the sparsity budget is
//! filled, then single-coordinate swaps until none improves the objective.
//! Every accepted move is followed by a warm-started restricted Newton solve.

use std::time::{Duration, Instant};

use crate::error::{Error, Result};
use crate::line::{best_addition, best_swap, LineResult};
use crate::linalg::{cholesky, objective, CholeskyFactor};
use crate::matrix::{Coord, SymMatrix};
use crate::newton::{newton_loop, NewtonConfig, NewtonStatus};
use crate::pattern::FreePattern;
use crate::rank2::smw_inverse_update;
use crate::scalar::Scalar;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CwoaConfig<T> {
    /// Budget on off-diagonal nonzeros; the support holds `sparsity / 2` pairs.
    pub sparsity: usize,
    pub newton: NewtonConfig<T>,
    /// Recompute the cached inverse from scratch after this many rank-2 updates.
    pub refresh_every: usize,
    /// Cap on accepted swaps; `None` means `10 n`.
    pub max_swap_sweeps: Option<usize>,
    /// A move is accepted only if it lowers `f` by more than
    /// `tol_improve * (1 + |f|)`.
    pub tol_improve: T,
    /// Seed echoed into run metadata; the solver itself is deterministic.
    pub seed: u64,
    /// Run the swap stage. Disabling it gives the greedy-only ablation.
    pub swap: bool,
}

impl<T: Scalar> Default for CwoaConfig<T> {
    fn default() -> Self {
        CwoaConfig {
            sparsity: 0,
            newton: NewtonConfig::default(),
            refresh_every: 50,
            max_swap_sweeps: None,
            tol_improve: T::lit(1e-10),
            seed: 0,
            swap: true,
        }
    }
}

impl<T: Scalar> CwoaConfig<T> {
    pub fn with_sparsity(sparsity: usize) -> Self {
        CwoaConfig {
            sparsity,
            ..Default::default()
        }
    }

    /// Number of symmetric pairs the budget admits.
    pub fn capacity(&self) -> usize {
        self.sparsity / 2
    }

    pub fn swap_limit(&self, n: usize) -> usize {
        self.max_swap_sweeps.unwrap_or(10 * n)
    }

    pub fn validate(&self) -> Result<()> {
        self.newton.validate()?;
        if self.refresh_every == 0 {
            return Err(Error::InvalidConfig("refresh_every must be positive".into()));
        }
        if !(self.tol_improve >= T::zero()) {
            return Err(Error::InvalidConfig(format!(
                "tol_improve must be non-negative, got {}",
                self.tol_improve
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Stage {
    Greedy,
    Swap,
}

impl Stage {
    pub fn as_str(self) -> &'static str {
        match self {
            Stage::Greedy => "greedy",
            Stage::Swap => "swap",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct IterationRecord<T> {
    /// 1-based position in the run.
    pub iter: usize,
    pub stage: Stage,
    pub added: Option<Coord>,
    pub dropped: Option<Coord>,
    /// One-dimensional step taken at `added`.
    pub theta: T,
    /// Objective after the Newton re-solve.
    pub objective: T,
    pub support_pairs: usize,
    /// Off-diagonal nonzeros of the iterate.
    pub nnz_off: usize,
    /// Smallest squared Cholesky pivot of the iterate, positive by construction.
    pub min_pivot_sq: T,
    pub newton_iters: usize,
    pub newton_status: NewtonStatus,
    /// Time since the start of the run.
    pub elapsed: Duration,
}

/// Iterate, cached inverse and support carried between moves.
#[derive(Debug, Clone)]
pub struct SolverState<T> {
    pub x: SymMatrix<T>,
    pub y: SymMatrix<T>,
    pub chol: CholeskyFactor<T>,
    pub f: T,
    /// Sorted by column-major index.
    pub support: Vec<Coord>,
    pub updates_since_refresh: usize,
}

impl<T: Scalar> SolverState<T> {
    pub fn dim(&self) -> usize {
        self.x.dim()
    }

    /// Off-diagonal coordinates outside the support, in column-major order.
    pub fn zero_coords(&self) -> Vec<Coord> {
        let mut out = Vec::new();
        let mut it = self.support.iter().peekable();
        for c in Coord::all(self.dim()) {
            if it.peek() == Some(&&c) {
                it.next();
            } else {
                out.push(c);
            }
        }
        out
    }

    /// Refactors `x` and recomputes the inverse and objective from scratch.
    pub fn refresh(&mut self, sigma: &SymMatrix<T>) -> Result<()> {
        self.chol = cholesky(&self.x)?;
        self.y = self.chol.inverse();
        self.f = objective(sigma, &self.x, &self.chol);
        self.updates_since_refresh = 0;
        Ok(())
    }

    /// `(max |X Y - I|, |f - objective(X)| / (1 + |f|))`.
    pub fn consistency(&self, sigma: &SymMatrix<T>) -> Result<(T, T)> {
        let n = self.dim();
        let mut worst = T::zero();
        for i in 0..n {
            for j in 0..n {
                let v: T = (0..n).map(|k| self.x.get(i, k) * self.y.get(k, j)).sum();
                let e = if i == j { v - T::one() } else { v };
                worst = worst.max(e.abs());
            }
        }
        let chol = cholesky(&self.x)?;
        let f = objective(sigma, &self.x, &chol);
        Ok((worst, (f - self.f).abs() / (T::one() + f.abs())))
    }

    fn apply_move(&mut self, coord: Coord, new_value: T) -> Result<()> {
        let old = self.x.at(coord);
        let step = new_value - old;
        self.x.set(coord.row(), coord.col(), new_value);
        match smw_inverse_update(&self.y, coord, step) {
            Ok(y) => {
                self.y = y;
                self.updates_since_refresh = self.updates_since_refresh.saturating_add(1);
            }
            Err(Error::NotPositiveDefiniteUpdate { .. }) => self.updates_since_refresh = usize::MAX,
            Err(e) => return Err(e),
        }
        Ok(())
    }
}

/// `X^0 = diag(1 / Sigma_ii)`, for which `f = n + sum ln Sigma_ii`.
pub fn initialize<T: Scalar>(sigma: &SymMatrix<T>) -> Result<SolverState<T>> {
    let n = sigma.dim();
    let d = sigma.diag();
    if let Some((index, &value)) = d.iter().enumerate().find(|(_, &v)| !(v > T::zero())) {
        return Err(Error::NonPositiveDiagonal {
            index,
            value: value.as_f64(),
        });
    }
    let x = SymMatrix::from_diag(&d.iter().map(|&v| v.recip()).collect::<Vec<_>>());
    let chol = cholesky(&x)?;
    let f = T::from_usize(n).expect("dimension fits") + d.iter().map(|v| v.ln()).sum::<T>();
    Ok(SolverState {
        x,
        y: SymMatrix::from_diag(&d),
        chol,
        f,
        support: Vec::new(),
        updates_since_refresh: 0,
    })
}

/// Run-level bookkeeping shared by the stages.
#[derive(Debug, Clone)]
pub struct RunLog<T> {
    pub records: Vec<IterationRecord<T>>,
    /// The greedy stage stopped at least once before filling the budget.
    pub greedy_saturated: bool,
    pub swap_limit_reached: bool,
    pub swaps: usize,
    /// Support coordinates skipped during swap scans because their removal
    /// would leave the positive definite cone, counted over all scans.
    pub skipped_removals: usize,
    /// Accepted steps for which the printed minus root was infeasible.
    pub minus_branch_infeasible: usize,
    /// Newton re-solves that ended without meeting the gradient tolerance.
    pub newton_unconverged: usize,
    start: Instant,
}

impl<T: Scalar> Default for RunLog<T> {
    fn default() -> Self {
        RunLog {
            records: Vec::new(),
            greedy_saturated: false,
            swap_limit_reached: false,
            swaps: 0,
            skipped_removals: 0,
            minus_branch_infeasible: 0,
            newton_unconverged: 0,
            start: Instant::now(),
        }
    }
}

impl<T: Scalar> RunLog<T> {
    pub fn elapsed(&self) -> Duration {
        self.start.elapsed()
    }
}

fn improve_threshold<T: Scalar>(f: T, cfg: &CwoaConfig<T>) -> T {
    cfg.tol_improve * (T::one() + f.abs())
}

/// Warm-started Newton re-solve over the current support after a move.
fn resolve<T: Scalar>(
    state: &mut SolverState<T>,
    sigma: &SymMatrix<T>,
    cfg: &CwoaConfig<T>,
) -> Result<(usize, NewtonStatus)> {
    if state.updates_since_refresh >= cfg.refresh_every {
        state.refresh(sigma)?;
    } else {
        state.chol = cholesky(&state.x)?;
        state.f = objective(sigma, &state.x, &state.chol);
    }
    let pattern = FreePattern::new(state.dim(), &state.support);
    let sol = newton_loop(
        sigma,
        state.x.clone(),
        state.y.clone(),
        state.chol.clone(),
        state.f,
        &pattern,
        &cfg.newton,
    )?;
    let iters = sol.trace.records.len();
    if iters > 0 {
        state.updates_since_refresh = 0;
    }
    state.x = sol.x;
    state.y = sol.y;
    state.chol = sol.chol;
    state.f = sol.objective;
    Ok((iters, sol.status))
}

fn push_record<T: Scalar>(
    log: &mut RunLog<T>,
    state: &SolverState<T>,
    stage: Stage,
    added: Coord,
    dropped: Option<Coord>,
    line: &LineResult<T>,
    newton: (usize, NewtonStatus),
) {
    if line.minus_branch_infeasible {
        log.minus_branch_infeasible += 1;
    }
    if newton.1 != NewtonStatus::Converged {
        log.newton_unconverged += 1;
    }
    log.records.push(IterationRecord {
        iter: log.records.len() + 1,
        stage,
        added: Some(added),
        dropped,
        theta: line.theta_star,
        objective: state.f,
        support_pairs: state.support.len(),
        nnz_off: state.x.nnz_off(),
        min_pivot_sq: state.chol.min_pivot_sq(),
        newton_iters: newton.0,
        newton_status: newton.1,
        elapsed: log.elapsed(),
    });
}

fn insert_sorted(support: &mut Vec<Coord>, c: Coord) {
    if let Err(pos) = support.binary_search(&c) {
        support.insert(pos, c);
    }
}

/// Adds the best coordinate while the support is below capacity; returns the
/// number of records appended.
pub fn greedy_stage<T: Scalar>(
    state: &mut SolverState<T>,
    sigma: &SymMatrix<T>,
    cfg: &CwoaConfig<T>,
    log: &mut RunLog<T>,
) -> Result<usize> {
    let before = log.records.len();
    while state.support.len() < cfg.capacity() {
        let threshold = improve_threshold(state.f, cfg);
        let Some((j, line)) = best_addition(sigma, &state.y, state.zero_coords(), threshold)? else {
            log.greedy_saturated = true;
            break;
        };
        state.apply_move(j, line.theta_star)?;
        insert_sorted(&mut state.support, j);
        let newton = resolve(state, sigma, cfg)?;
        push_record(log, state, Stage::Greedy, j, None, &line, newton);
    }
    Ok(log.records.len() - before)
}

/// Applies improving swaps until none exists or the swap cap is hit; returns
/// the number of records appended.
pub fn swap_stage<T: Scalar>(
    state: &mut SolverState<T>,
    sigma: &SymMatrix<T>,
    cfg: &CwoaConfig<T>,
    log: &mut RunLog<T>,
) -> Result<usize> {
    let before = log.records.len();
    let limit = cfg.swap_limit(state.dim());
    loop {
        if state.support.is_empty() {
            break;
        }
        let threshold = improve_threshold(state.f, cfg);
        let zero = state.zero_coords();
        let scan = best_swap(sigma, &state.x, &state.y, &state.support, &zero, threshold)?;
        log.skipped_removals += scan.skipped_removals.len();
        let Some(cand) = scan.best else {
            break;
        };
        if log.swaps >= limit {
            log.swap_limit_reached = true;
            break;
        }
        state.apply_move(cand.drop, T::zero())?;
        state.support.retain(|&c| c != cand.drop);
        state.apply_move(cand.add, cand.line.theta_star)?;
        insert_sorted(&mut state.support, cand.add);
        let newton = resolve(state, sigma, cfg)?;
        log.swaps += 1;
        push_record(log, state, Stage::Swap, cand.add, Some(cand.drop), &cand.line, newton);
    }
    Ok(log.records.len() - before)
}

#[derive(Debug, Clone)]
pub struct CwoaSolution<T> {
    pub x: SymMatrix<T>,
    pub y: SymMatrix<T>,
    pub chol: CholeskyFactor<T>,
    pub objective: T,
    pub support: Vec<Coord>,
    pub log: RunLog<T>,
}

impl<T> CwoaSolution<T> {
    pub fn records(&self) -> &[IterationRecord<T>] {
        &self.log.records
    }
}

/// Full run: initialize, then alternate greedy and swap stages until a swap
/// stage accepts nothing.
pub fn solve<T: Scalar>(sigma: &SymMatrix<T>, cfg: &CwoaConfig<T>) -> Result<CwoaSolution<T>> {
    cfg.validate()?;
    let mut log = RunLog::default();
    let mut state = initialize(sigma)?;
    loop {
        greedy_stage(&mut state, sigma, cfg, &mut log)?;
        if !cfg.swap || swap_stage(&mut state, sigma, cfg, &mut log)? == 0 || log.swap_limit_reached {
            break;
        }
    }
    Ok(CwoaSolution {
        x: state.x,
        y: state.y,
        chol: state.chol,
        objective: state.f,
        support: state.support,
        log,
    })
}

/// Outcome of one neighbourhood family check.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FamilyReport<T> {
    pub passed: bool,
    /// `false` when the family is empty and passes vacuously.
    pub checked: bool,
    /// Largest restricted-gradient entry for the gradient family; most
    /// negative objective change for the move families.
    pub worst: T,
    /// 0-based entry `(i, j)` of the worst gradient entry.
    pub worst_entry: Option<(usize, usize)>,
    pub worst_add: Option<Coord>,
    pub worst_drop: Option<Coord>,
}

impl<T: Scalar> FamilyReport<T> {
    fn vacuous() -> Self {
        FamilyReport {
            passed: true,
            checked: false,
            worst: T::zero(),
            worst_entry: None,
            worst_add: None,
            worst_drop: None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CertificateReport<T> {
    pub objective: T,
    pub tol: T,
    /// Restricted gradient vanishes on the support and diagonal.
    pub gradient: FamilyReport<T>,
    /// No single addition improves while the budget has room.
    pub addition: FamilyReport<T>,
    /// No single (drop, add) exchange improves.
    pub swap: FamilyReport<T>,
    pub skipped_removals: usize,
}

impl<T> CertificateReport<T> {
    pub fn passed(&self) -> bool {
        self.gradient.passed && self.addition.passed && self.swap.passed
    }
}

/// Checks that `x` is a coordinate-wise minimum for budget `sparsity`.
///
/// The support is read off the nonzeros of `x`. Fails with an error only when
/// `x` is not positive definite or exceeds the budget.
pub fn certify<T: Scalar>(
    sigma: &SymMatrix<T>,
    x: &SymMatrix<T>,
    sparsity: usize,
    tol: T,
) -> Result<CertificateReport<T>> {
    let n = sigma.dim();
    if x.dim() != n {
        return Err(Error::DimensionMismatch {
            expected: n,
            found: x.dim(),
        });
    }
    let nnz_off = x.nnz_off();
    if nnz_off > sparsity {
        return Err(Error::BudgetExceeded { nnz_off, sparsity });
    }
    let chol = cholesky(x)?;
    let y = chol.inverse();
    let f = objective(sigma, x, &chol);
    let support = x.off_diagonal_support();
    let pattern = FreePattern::new(n, &support);

    let mut gradient = FamilyReport::vacuous();
    gradient.checked = true;
    for i in 0..n {
        let g = (sigma.get(i, i) - y.get(i, i)).abs();
        if g > gradient.worst {
            gradient.worst = g;
            gradient.worst_entry = Some((i, i));
        }
    }
    for c in pattern.support() {
        let g = (sigma.at(*c) - y.at(*c)).abs();
        if g > gradient.worst {
            gradient.worst = g;
            gradient.worst_entry = Some((c.row(), c.col()));
        }
    }
    gradient.passed = gradient.worst <= tol;

    let zero: Vec<Coord> = Coord::all(n).filter(|c| x.at(*c) == T::zero()).collect();
    let mut addition = FamilyReport::vacuous();
    if support.len() < sparsity / 2 && !zero.is_empty() {
        addition.checked = true;
        if let Some((j, line)) = best_addition(sigma, &y, zero.iter().copied(), T::neg_infinity())? {
            addition.worst = line.delta_f;
            addition.worst_add = Some(j);
            addition.passed = line.delta_f >= -tol;
        }
    }

    let mut swap = FamilyReport::vacuous();
    let scan = best_swap(sigma, x, &y, &support, &zero, T::neg_infinity())?;
    if let Some(c) = scan.best {
        swap.checked = true;
        swap.worst = c.total_delta;
        swap.worst_add = Some(c.add);
        swap.worst_drop = Some(c.drop);
        swap.passed = c.total_delta >= -tol;
    }

    Ok(CertificateReport {
        objective: f,
        tol,
        gradient,
        addition,
        swap,
        skipped_removals: scan.skipped_removals.len(),
    })
}
