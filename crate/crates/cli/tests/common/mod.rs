#![allow(dead_code)]

use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use sics_core::{cholesky, objective, Coord, SymMatrix};

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// `B B^T / n + shift I` with `B` uniform in `[-1, 1]`.
pub fn random_pd(rng: &mut ChaCha8Rng, n: usize, shift: f64) -> SymMatrix<f64> {
    let b: Vec<f64> = (0..n * n).map(|_| rng.random_range(-1.0..1.0)).collect();
    SymMatrix::from_upper_fn(n, |i, j| {
        let v: f64 = (0..n).map(|k| b[i * n + k] * b[j * n + k]).sum::<f64>() / n as f64;
        if i == j {
            v + shift
        } else {
            v
        }
    })
}

pub fn random_sym(rng: &mut ChaCha8Rng, n: usize) -> SymMatrix<f64> {
    SymMatrix::from_upper_fn(n, |_, _| rng.random_range(-1.0..1.0))
}

pub fn random_support(rng: &mut ChaCha8Rng, n: usize, k: usize) -> Vec<Coord> {
    let all: Vec<Coord> = Coord::all(n).collect();
    rand::seq::index::sample(rng, all.len(), k).into_iter().map(|i| all[i]).collect()
}

pub fn to_na(m: &SymMatrix<f64>) -> DMatrix<f64> {
    DMatrix::from_row_slice(m.dim(), m.dim(), m.as_slice())
}

pub fn from_na(m: &DMatrix<f64>) -> SymMatrix<f64> {
    SymMatrix::from_upper_fn(m.nrows(), |i, j| 0.5 * (m[(i, j)] + m[(j, i)]))
}

/// Objective from scratch, `+inf` outside the positive definite cone.
pub fn f_scratch(sigma: &SymMatrix<f64>, x: &SymMatrix<f64>) -> f64 {
    match cholesky(x) {
        Ok(l) => objective(sigma, x, &l),
        Err(_) => f64::INFINITY,
    }
}

/// Golden-section minimum of a unimodal function on `[lo, hi]`.
pub fn golden(mut lo: f64, mut hi: f64, f: impl Fn(f64) -> f64) -> (f64, f64) {
    let r = (5f64.sqrt() - 1.0) / 2.0;
    let mut a = hi - r * (hi - lo);
    let mut b = lo + r * (hi - lo);
    let (mut fa, mut fb) = (f(a), f(b));
    for _ in 0..300 {
        if fa < fb {
            hi = b;
            b = a;
            fb = fa;
            a = hi - r * (hi - lo);
            fa = f(a);
        } else {
            lo = a;
            a = b;
            fa = fb;
            b = lo + r * (hi - lo);
            fb = f(b);
        }
        if hi - lo < 1e-15 * (1.0 + lo.abs()) {
            break;
        }
    }
    let t = 0.5 * (lo + hi);
    (t, f(t))
}

/// Interval `{theta : 1 + 2 yrc theta - o theta^2 > 0}`.
pub fn pd_interval(yrc: f64, o: f64) -> (f64, f64) {
    let s = (yrc * yrc + o).sqrt();
    // roots of o t^2 - 2 yrc t - 1, in cancellation-free form
    let (a, b) = if yrc >= 0.0 { (-1.0 / (yrc + s), (yrc + s) / o) } else { ((yrc - s) / o, 1.0 / (s - yrc)) };
    (a, b)
}

/// `min_theta f(x + theta E_c)` by golden section on the positive definite
/// interval, objectives evaluated from scratch.
pub fn best_step_scratch(sigma: &SymMatrix<f64>, x: &SymMatrix<f64>, c: Coord) -> (f64, f64) {
    let y = cholesky(x).unwrap().inverse();
    let (yrr, ycc, yrc) = (y.get(c.row(), c.row()), y.get(c.col(), c.col()), y.at(c));
    let (lo, hi) = pd_interval(yrc, yrr * ycc - yrc * yrc);
    let base = x.at(c);
    golden(lo, hi, |t| {
        let mut z = x.clone();
        z.set(c.row(), c.col(), base + t);
        f_scratch(sigma, &z)
    })
}

/// Brute force over every support of exactly `pairs` coordinates.
pub fn brute_force(sigma: &SymMatrix<f64>, pairs: usize) -> f64 {
    use sics_core::{solve_restricted, NewtonConfig};
    let n = sigma.dim();
    let all: Vec<Coord> = Coord::all(n).collect();
    let x0 = SymMatrix::from_diag(&sigma.diag().iter().map(|v| 1.0 / v).collect::<Vec<_>>());
    let cfg = NewtonConfig {
        grad_tol: 1e-12,
        t_in: 1000,
        ..Default::default()
    };
    let mut best = f64::INFINITY;
    for mask in 0u64..(1u64 << all.len()) {
        if mask.count_ones() as usize != pairs {
            continue;
        }
        let sup: Vec<Coord> = (0..all.len()).filter(|i| mask >> i & 1 == 1).map(|i| all[i]).collect();
        best = best.min(solve_restricted(sigma, &x0, &sup, &cfg).unwrap().objective);
    }
    best
}

pub fn sics() -> std::process::Command {
    std::process::Command::new(env!("CARGO_BIN_EXE_sics"))
}
