//! Seeded synthetic covariance generators and the empirical covariance of a
//! sample matrix.
//!
//! Every generator draws from `ChaCha8Rng::seed_from_u64(seed)`, so outputs
//! are bit-identical across runs and platforms for the same arguments.

use rand::seq::index::sample;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::cholesky;
use crate::matrix::{Coord, SymMatrix};
use crate::scalar::Scalar;

/// Name of the pseudo-random generator recorded in run metadata.
pub const PRNG_NAME: &str = "ChaCha8Rng (rand_chacha 0.9, seed_from_u64)";

/// First diagonal load tried when the noisy covariance is not positive
/// definite; doubled until it is.
pub const INITIAL_LOADING: f64 = 1e-3;

pub const DEFAULT_SAMPLES: usize = 500;
pub const DEFAULT_PLANTED: usize = 500;
pub const DEFAULT_NOISE_SD: f64 = 0.1;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum GenKind {
    GaussianRandom,
    SparseStructured,
    Empirical,
}

/// Description of a generated instance, stored alongside it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GenMetadata {
    pub kind: GenKind,
    pub n: usize,
    pub m: Option<usize>,
    pub p: Option<usize>,
    pub noise_sd: Option<f64>,
    pub seed: Option<u64>,
    pub prng: Option<String>,
    /// Diagonal load added to make the noisy covariance positive definite.
    pub diagonal_loading: Option<f64>,
}

fn normal<T: Scalar>(rng: &mut ChaCha8Rng) -> T {
    T::lit(rng.sample::<f64, _>(StandardNormal))
}

/// Covariance of an `m x n` standard-normal sample, `(m - 1)` denominator.
pub fn gaussian_covariance<T: Scalar>(n: usize, m: usize, seed: u64) -> Result<SymMatrix<T>> {
    if n < 2 || m < 2 {
        return Err(Error::InvalidConfig(format!("need n >= 2 and m >= 2, got n = {n}, m = {m}")));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let samples: Vec<Vec<T>> = (0..m).map(|_| (0..n).map(|_| normal(&mut rng)).collect()).collect();
    empirical_covariance(&samples)
}

/// Mean-centred `(m - 1)`-denominator covariance of the rows of `samples`.
pub fn empirical_covariance<T: Scalar>(samples: &[Vec<T>]) -> Result<SymMatrix<T>> {
    let m = samples.len();
    if m < 2 {
        return Err(Error::DegenerateSamples(format!("need at least 2 samples, got {m}")));
    }
    let n = samples[0].len();
    for (k, row) in samples.iter().enumerate() {
        if row.len() != n {
            return Err(Error::DimensionMismatch {
                expected: n,
                found: row.len(),
            });
        }
        if let Some(j) = row.iter().position(|v| !v.is_finite()) {
            return Err(Error::DegenerateSamples(format!("non-finite entry at sample {}, column {}", k + 1, j + 1)));
        }
    }
    let mf = T::from_usize(m).expect("sample count fits");
    let mut mean = vec![T::zero(); n];
    for row in samples {
        for (acc, &v) in mean.iter_mut().zip(row) {
            *acc += v;
        }
    }
    for v in &mut mean {
        *v /= mf;
    }
    let centred: Vec<Vec<T>> = samples
        .iter()
        .map(|row| row.iter().zip(&mean).map(|(&v, &mu)| v - mu).collect())
        .collect();
    let denom = mf - T::one();
    Ok(SymMatrix::from_upper_fn(n, |i, j| {
        centred.iter().map(|r| r[i] * r[j]).sum::<T>() / denom
    }))
}

/// Planted sparse precision matrix and a noisy covariance built from it.
#[derive(Debug, Clone)]
pub struct SparseInstance<T> {
    pub sigma: SymMatrix<T>,
    pub x_true: SymMatrix<T>,
    /// Diagonal load added to `sigma`, zero if none was needed.
    pub loading: T,
}

/// `p / 2` distinct off-diagonal pairs with values uniform in `[-0.5, 0.5]`,
/// diagonal `1 + sum_j |x_ij| + 0.1`, and
/// `sigma = x_true^{-1} + noise_sd * N` with `N` symmetric standard normal,
/// diagonally loaded until positive definite.
pub fn sparse_structured_covariance<T: Scalar>(
    n: usize,
    p: usize,
    noise_sd: T,
    seed: u64,
) -> Result<SparseInstance<T>> {
    if n < 2 {
        return Err(Error::InvalidConfig(format!("need n >= 2, got {n}")));
    }
    if !p.is_multiple_of(2) || p > n * (n - 1) {
        return Err(Error::InvalidConfig(format!(
            "p must be even and at most n(n-1) = {}, got {p}",
            n * (n - 1)
        )));
    }
    if !(noise_sd >= T::zero()) {
        return Err(Error::InvalidConfig(format!("noise_sd must be non-negative, got {noise_sd}")));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let coords: Vec<Coord> = Coord::all(n).collect();
    let mut x_true = SymMatrix::zeros(n);
    for k in sample(&mut rng, coords.len(), p / 2).into_iter() {
        let c = coords[k];
        let mut v = 0.0;
        while v == 0.0 {
            v = rng.random_range(-0.5..=0.5);
        }
        x_true.set(c.row(), c.col(), T::lit(v));
    }
    for i in 0..n {
        let off: T = (0..n).filter(|&j| j != i).map(|j| x_true.get(i, j).abs()).sum();
        x_true.set(i, i, T::one() + off + T::lit(0.1));
    }
    let inv = cholesky(&x_true)?.inverse();
    let mut sigma = SymMatrix::from_upper_fn(n, |i, j| {
        let z: T = normal(&mut rng);
        inv.get(i, j) + noise_sd * z
    });
    let mut loading = T::zero();
    let mut lambda = T::lit(INITIAL_LOADING);
    while cholesky(&sigma).is_err() {
        for i in 0..n {
            sigma.add_at(i, i, lambda - loading);
        }
        loading = lambda;
        lambda *= T::lit(2.0);
    }
    Ok(SparseInstance { sigma, x_true, loading })
}
