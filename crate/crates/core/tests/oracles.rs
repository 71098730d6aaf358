mod common;

use common::*;
use nalgebra::{DMatrix, DVector};
use rand::Rng;
use sics_core::{
    best_addition, best_swap, cg_direction, cholesky, det_factor, gradient, hessian_apply, initialize, line_delta,
    smw_inverse_update, solve, solve_restricted, theta_star, Coord, CwoaConfig, FreePattern, NewtonConfig,
    NewtonStatus, Rank2Context, SymMatrix,
};

#[test]
fn hessian_apply_matches_kronecker_product() {
    let mut r = rng(1);
    for _ in 0..30 {
        let n = r.random_range(1..=6);
        let y = random_sym(&mut r, n);
        let d = random_sym(&mut r, n);
        let mut kron = DMatrix::zeros(n * n, n * n);
        for a in 0..n {
            for b in 0..n {
                for c in 0..n {
                    for e in 0..n {
                        kron[(a * n + c, b * n + e)] = y.get(a, b) * y.get(c, e);
                    }
                }
            }
        }
        let v = kron * DVector::from_row_slice(d.as_slice());
        let got = hessian_apply(&y, &d);
        for k in 0..n * n {
            assert!((got.as_slice()[k] - v[k]).abs() <= 1e-12);
        }
    }
}

#[test]
fn smw_matches_refactored_inverse() {
    let mut r = rng(2);
    let n = 12;
    for _ in 0..100 {
        let x = random_pd(&mut r, n, 0.5);
        let y = cholesky(&x).unwrap().inverse();
        let c = random_support(&mut r, n, 1)[0];
        let ctx = Rank2Context::new(&y, c);
        let (lo, hi) = pd_interval(ctx.yrc, ctx.delta);
        let w = lo + (hi - lo) * r.random_range(0.1..0.9);
        let got = smw_inverse_update(&y, c, w).unwrap();
        let mut xt = x.clone();
        xt.add_at(c.row(), c.col(), w);
        let want = from_na(&to_na(&xt).try_inverse().unwrap());
        let rel = got.sub(&want).max_abs() / want.max_abs();
        assert!(rel <= 1e-9, "relative error {rel}");
    }
}

#[test]
fn det_factor_matches_determinant_ratio() {
    let mut r = rng(3);
    for _ in 0..100 {
        let x = random_pd(&mut r, 8, 0.3);
        let y = cholesky(&x).unwrap().inverse();
        let c = random_support(&mut r, 8, 1)[0];
        let w: f64 = r.random_range(-0.5..0.5);
        let mut xt = x.clone();
        xt.add_at(c.row(), c.col(), w);
        let ratio = to_na(&xt).determinant() / to_na(&x).determinant();
        let got = det_factor(&Rank2Context::new(&y, c), w);
        assert!((got - ratio).abs() <= 1e-10 * ratio.abs().max(1e-3), "{got} vs {ratio}");
    }
}

#[test]
fn theta_star_matches_golden_section() {
    let mut r = rng(4);
    let c = Coord::new(0, 1).unwrap();
    for _ in 0..200 {
        let yrr: f64 = r.random_range(0.2..3.0);
        let ycc: f64 = r.random_range(0.2..3.0);
        let yrc = r.random_range(-0.95..0.95) * (yrr * ycc).sqrt();
        let s = r.random_range(-1.0..1.0);
        let res = theta_star(s, yrr, ycc, yrc).unwrap();
        let ctx = Rank2Context::from_entries(c, yrr, ycc, yrc);
        let (lo, hi) = pd_interval(yrc, ctx.delta);
        let (_, fmin) = golden(lo, hi, |t| line_delta(&ctx, s, t));
        assert!(res.delta_f - fmin <= 1e-10, "{} vs {fmin}", res.delta_f);
        assert!(!res.minus_branch_infeasible);
        let h = 1e-6 * (1.0 + res.theta_star.abs());
        let d = (line_delta(&ctx, s, res.theta_star + h) - line_delta(&ctx, s, res.theta_star - h)) / (2.0 * h);
        assert!(d.abs() <= 1e-7, "slope {d}");
    }
}

/// Reduced Newton system `E^T (Y kron Y) E d = -E^T vec(G)` solved densely,
/// where `E` maps compact free-entry vectors to full matrices.
fn reduced_newton(y: &SymMatrix<f64>, g: &SymMatrix<f64>, pat: &FreePattern) -> SymMatrix<f64> {
    let n = y.dim();
    let len = pat.len();
    let mut e = DMatrix::zeros(n * n, len);
    for i in 0..n {
        e[(i * n + i, i)] = 1.0;
    }
    for (k, c) in pat.support().iter().enumerate() {
        e[(c.row() * n + c.col(), n + k)] = 1.0;
        e[(c.col() * n + c.row(), n + k)] = 1.0;
    }
    let mut kron = DMatrix::zeros(n * n, n * n);
    for a in 0..n {
        for b in 0..n {
            for c in 0..n {
                for d in 0..n {
                    kron[(a * n + c, b * n + d)] = y.get(a, b) * y.get(c, d);
                }
            }
        }
    }
    let h = e.transpose() * kron * &e;
    let rhs = -(e.transpose() * DVector::from_row_slice(g.as_slice()));
    let sol = h.lu().solve(&rhs).unwrap();
    pat.scatter(sol.as_slice())
}

#[test]
fn cg_matches_dense_reduced_system() {
    let mut r = rng(5);
    for _ in 0..20 {
        let n = r.random_range(3..=6);
        let sigma = random_pd(&mut r, n, 0.2);
        let x = random_pd(&mut r, n, 1.0);
        let y = cholesky(&x).unwrap().inverse();
        let k = r.random_range(0..=3);
        let pat = FreePattern::new(n, &random_support(&mut r, n, k));
        let g = gradient(&sigma, &y);
        let out = cg_direction(&y, &g, &pat, n * n);
        let want = reduced_newton(&y, &g, &pat);
        let err = out.direction.sub(&want).max_abs();
        assert!(err <= 1e-8, "error {err}");
        assert!(!out.breakdown);
        let mask = pat.mask();
        for (k, v) in out.direction.as_slice().iter().enumerate() {
            if !mask[k] {
                assert_eq!(*v, 0.0);
            }
        }
    }
}

/// Projected gradient descent on the free entries: Barzilai-Borwein trial
/// steps safeguarded by Armijo backtracking. Once the predicted decrease is
/// below the rounding level of `f`, any positive definite BB step is taken.
fn projected_gradient(sigma: &SymMatrix<f64>, support: &[Coord]) -> f64 {
    let n = sigma.dim();
    let pat = FreePattern::new(n, support);
    let mut x = SymMatrix::from_diag(&sigma.diag().iter().map(|v| 1.0 / v).collect::<Vec<_>>());
    let mut f = f_scratch(sigma, &x);
    let grad = |x: &SymMatrix<f64>| {
        let y = cholesky(x).unwrap().inverse();
        pat.scatter(&pat.gather(&gradient(sigma, &y)))
    };
    let mut g = grad(&x);
    let mut step = 1.0;
    for _ in 0..100_000 {
        if g.max_abs() <= 1e-10 {
            return f;
        }
        let gg = g.inner(&g);
        loop {
            let xt = x.add_scaled(&g, -step);
            let ft = f_scratch(sigma, &xt);
            let noise = step * gg <= 1e-13 * (1.0 + f.abs());
            if ft <= f - 1e-4 * step * gg || (noise && ft.is_finite()) {
                let gt = grad(&xt);
                let s = xt.sub(&x);
                let dy = gt.sub(&g);
                let sy = s.inner(&dy);
                step = if sy > 0.0 { s.inner(&s) / sy } else { 1.0 };
                x = xt;
                f = ft;
                g = gt;
                break;
            }
            step *= 0.5;
            assert!(step > 1e-30, "projected gradient stalled");
        }
    }
    panic!("projected gradient did not converge");
}

#[test]
fn restricted_newton_matches_projected_gradient() {
    let mut r = rng(6);
    for _ in 0..10 {
        let n = 6;
        let sigma = random_pd(&mut r, n, 0.3);
        let sup = random_support(&mut r, n, 3);
        let x0 = initialize(&sigma).unwrap().x;
        let sol = solve_restricted(&sigma, &x0, &sup, &NewtonConfig::default()).unwrap();
        assert_eq!(sol.status, NewtonStatus::Converged);
        let oracle = projected_gradient(&sigma, &sup);
        assert!((sol.objective - oracle).abs() <= 1e-7, "{} vs {oracle}", sol.objective);
        assert!((sol.objective - f_scratch(&sigma, &sol.x)).abs() <= 1e-12);
    }
}

#[test]
fn best_addition_matches_scratch_line_search() {
    let mut r = rng(7);
    for pairs in [0usize, 1, 2] {
        let sigma = random_pd(&mut r, 6, 0.3);
        let x = if pairs == 0 {
            initialize(&sigma).unwrap().x
        } else {
            solve(&sigma, &CwoaConfig::with_sparsity(2 * pairs)).unwrap().x
        };
        let y = cholesky(&x).unwrap().inverse();
        let zero: Vec<Coord> = Coord::all(6).filter(|c| x.at(*c) == 0.0).collect();
        let (j, line) = best_addition(&sigma, &y, zero.iter().copied(), f64::NEG_INFINITY).unwrap().unwrap();
        let f0 = f_scratch(&sigma, &x);
        let scratch: Vec<f64> = zero.iter().map(|&c| best_step_scratch(&sigma, &x, c).1 - f0).collect();
        let best = scratch.iter().cloned().fold(f64::INFINITY, f64::min);
        assert!((line.delta_f - best).abs() <= 1e-9);
        let k = zero.iter().position(|&c| c == j).unwrap();
        assert!((scratch[k] - best).abs() <= 1e-9);
    }
}

#[test]
fn best_swap_matches_scratch_enumeration() {
    let mut r = rng(8);
    for _ in 0..5 {
        let n = 6;
        let sigma = random_pd(&mut r, n, 0.2);
        let x = solve(&sigma, &CwoaConfig { swap: false, ..CwoaConfig::with_sparsity(4) }).unwrap().x;
        let y = cholesky(&x).unwrap().inverse();
        let support = x.off_diagonal_support();
        let zero: Vec<Coord> = Coord::all(n).filter(|c| x.at(*c) == 0.0).collect();
        let scan = best_swap(&sigma, &x, &y, &support, &zero, f64::NEG_INFINITY).unwrap();
        let f0 = f_scratch(&sigma, &x);
        let mut best = f64::INFINITY;
        for &i in &support {
            let mut v = x.clone();
            v.set(i.row(), i.col(), 0.0);
            if cholesky(&v).is_err() {
                continue;
            }
            for &j in &zero {
                best = best.min(best_step_scratch(&sigma, &v, j).1 - f0);
            }
        }
        let cand = scan.best.unwrap();
        assert!((cand.total_delta - best).abs() <= 1e-9, "{} vs {best}", cand.total_delta);
        let mut v = x.clone();
        v.set(cand.drop.row(), cand.drop.col(), 0.0);
        v.set(cand.add.row(), cand.add.col(), cand.line.theta_star);
        assert!((f_scratch(&sigma, &v) - f0 - cand.total_delta).abs() <= 1e-10);
    }
}

#[test]
fn greedy_steps_each_improve_from_scratch() {
    let mut r = rng(9);
    let sigma = random_pd(&mut r, 8, 0.2);
    let sol = solve(&sigma, &CwoaConfig { swap: false, ..CwoaConfig::with_sparsity(6) }).unwrap();
    assert_eq!(sol.records().len(), 3);
    let mut prev = initialize(&sigma).unwrap().f;
    let mut x = initialize(&sigma).unwrap().x;
    for rec in sol.records() {
        let c = rec.added.unwrap();
        let mut moved = x.clone();
        moved.set(c.row(), c.col(), x.at(c) + rec.theta);
        let after_move = f_scratch(&sigma, &moved);
        assert!(after_move < prev);
        assert!(rec.objective <= after_move + 1e-12);
        let sup: Vec<Coord> = moved.off_diagonal_support();
        x = solve_restricted(&sigma, &moved, &sup, &NewtonConfig::default()).unwrap().x;
        prev = rec.objective;
    }
}

#[test]
fn swap_recovers_brute_force_on_planted_instances() {
    for seed in [66u64, 121, 184] {
        let sigma = sics_core::gaussian_covariance::<f64>(4, 6, seed).unwrap();
        let full = solve(&sigma, &CwoaConfig::with_sparsity(6)).unwrap();
        let greedy = solve(&sigma, &CwoaConfig { swap: false, ..CwoaConfig::with_sparsity(6) }).unwrap();
        let brute = brute_force(&sigma, 3);
        assert!(greedy.objective > full.objective + 1e-3);
        assert!((full.objective - brute).abs() <= 1e-8, "{} vs {brute}", full.objective);
        assert!(full.log.swaps >= 1);
    }
}

#[test]
fn three_by_three_greedy_is_already_optimal() {
    let mut r = rng(10);
    for _ in 0..30 {
        let sigma = random_pd(&mut r, 3, 0.05);
        for s in [2usize, 4] {
            let full = solve(&sigma, &CwoaConfig::with_sparsity(s)).unwrap();
            let greedy = solve(&sigma, &CwoaConfig { swap: false, ..CwoaConfig::with_sparsity(s) }).unwrap();
            assert_eq!(full.log.swaps, 0);
            assert!((full.objective - brute_force(&sigma, s / 2)).abs() <= 1e-8);
            assert_eq!(full.objective, greedy.objective);
        }
    }
}

#[test]
fn unconstrained_budget_recovers_inverse() {
    let mut r = rng(11);
    let sigma = random_pd(&mut r, 5, 0.5);
    let sol = solve(&sigma, &CwoaConfig::with_sparsity(20)).unwrap();
    let inv = cholesky(&sigma).unwrap().inverse();
    assert!(sol.x.sub(&inv).max_abs() <= 1e-6);
    let _ = SymMatrix::<f64>::identity(1);
}
