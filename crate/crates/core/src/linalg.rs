//! Factorization, log-determinant, inversion and the objective's derivatives.

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::matrix::SymMatrix;
use crate::scalar::Scalar;

/// Below this dimension the dense kernels stay on the calling thread.
const PAR_MIN_DIM: usize = 96;

/// Lower-triangular Cholesky factor `L` with `L L^T = X` and `L_ii > 0`.
#[derive(Debug, Clone, PartialEq)]
pub struct CholeskyFactor<T> {
    n: usize,
    lower: Vec<T>,
}

impl<T: Scalar> CholeskyFactor<T> {
    #[inline]
    pub fn dim(&self) -> usize {
        self.n
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> T {
        if j > i {
            T::zero()
        } else {
            self.lower[i * self.n + j]
        }
    }

    /// `log det X = 2 sum_i ln L_ii`.
    pub fn log_det(&self) -> T {
        let two = T::lit(2.0);
        two * (0..self.n).map(|i| self.lower[i * self.n + i].ln()).sum::<T>()
    }

    /// Smallest squared pivot, a cheap proxy for the smallest eigenvalue.
    pub fn min_pivot_sq(&self) -> T {
        (0..self.n)
            .map(|i| {
                let l = self.lower[i * self.n + i];
                l * l
            })
            .fold(T::infinity(), T::min)
    }

    /// `L L^T`.
    pub fn reconstruct(&self) -> SymMatrix<T> {
        let n = self.n;
        SymMatrix::from_upper_fn(n, |i, j| {
            let (ri, rj) = (&self.lower[i * n..i * n + i + 1], &self.lower[j * n..j * n + i + 1]);
            dot(ri, rj)
        })
    }

    /// `X^{-1}` from `L^{-T} L^{-1}`.
    pub fn inverse(&self) -> SymMatrix<T> {
        let n = self.n;
        // Row j of `ut` holds column j of L^{-1} (entries j..n are nonzero).
        let mut ut = vec![T::zero(); n * n];
        for j in 0..n {
            ut[j * n + j] = T::one() / self.lower[j * n + j];
            for i in j + 1..n {
                let l_row = &self.lower[i * n + j..i * n + i];
                let u_row = &ut[j * n + j..j * n + i];
                let s = dot(l_row, u_row);
                ut[j * n + i] = -s / self.lower[i * n + i];
            }
        }
        let mut y = vec![T::zero(); n * n];
        let fill_row = |a: usize, out: &mut [T]| {
            for (b, o) in out.iter_mut().enumerate().take(a + 1) {
                let k0 = a.max(b);
                *o = dot(&ut[a * n + k0..(a + 1) * n], &ut[b * n + k0..(b + 1) * n]);
            }
        };
        if n >= PAR_MIN_DIM {
            y.par_chunks_mut(n).enumerate().for_each(|(a, out)| fill_row(a, out));
        } else {
            y.chunks_mut(n).enumerate().for_each(|(a, out)| fill_row(a, out));
        }
        for a in 0..n {
            for b in a + 1..n {
                y[a * n + b] = y[b * n + a];
            }
        }
        SymMatrix::from_symmetric_vec(n, y)
    }
}

#[inline]
pub(crate) fn dot<T: Scalar>(a: &[T], b: &[T]) -> T {
    let mut s = T::zero();
    for (&x, &y) in a.iter().zip(b) {
        s += x * y;
    }
    s
}

/// Cholesky factorization; fails with `NotPositiveDefinite` on the first
/// pivot that is not strictly positive (no jitter is ever added).
pub fn cholesky<T: Scalar>(x: &SymMatrix<T>) -> Result<CholeskyFactor<T>> {
    let n = x.dim();
    let mut lower = vec![T::zero(); n * n];
    for i in 0..n {
        for j in 0..=i {
            let s = dot(&lower[i * n..i * n + j], &lower[j * n..j * n + j]);
            let v = x.get(i, j) - s;
            if i == j {
                // NaN also fails this test.
                if !(v > T::zero()) {
                    return Err(Error::NotPositiveDefinite {
                        pivot: i,
                        value: v.as_f64(),
                    });
                }
                lower[i * n + i] = v.sqrt();
            } else {
                lower[i * n + j] = v / lower[j * n + j];
            }
        }
    }
    Ok(CholeskyFactor { n, lower })
}

pub fn log_det<T: Scalar>(l: &CholeskyFactor<T>) -> T {
    l.log_det()
}

pub fn inverse_from_cholesky<T: Scalar>(l: &CholeskyFactor<T>) -> SymMatrix<T> {
    l.inverse()
}

/// `f(X) = <Sigma, X> - log det X`, with `l` the factor of `x`.
pub fn objective<T: Scalar>(sigma: &SymMatrix<T>, x: &SymMatrix<T>, l: &CholeskyFactor<T>) -> T {
    sigma.inner(x) - l.log_det()
}

/// `g(X) = Sigma - X^{-1}`, given `y = X^{-1}`.
pub fn gradient<T: Scalar>(sigma: &SymMatrix<T>, y: &SymMatrix<T>) -> SymMatrix<T> {
    sigma.sub(y)
}

/// Row-major `a * b` for square `n x n` operands.
pub(crate) fn mat_mul<T: Scalar>(a: &[T], b: &[T], n: usize) -> Vec<T> {
    let mut out = vec![T::zero(); n * n];
    let row = |i: usize, o: &mut [T]| {
        for k in 0..n {
            let aik = a[i * n + k];
            if aik == T::zero() {
                continue;
            }
            let bk = &b[k * n..(k + 1) * n];
            for (oj, &bkj) in o.iter_mut().zip(bk) {
                *oj += aik * bkj;
            }
        }
    };
    if n >= PAR_MIN_DIM {
        out.par_chunks_mut(n).enumerate().for_each(|(i, o)| row(i, o));
    } else {
        out.chunks_mut(n).enumerate().for_each(|(i, o)| row(i, o));
    }
    out
}

/// Hessian-vector product `(Y kron Y) vec(D) = vec(Y D Y)` without forming
/// the `n^2 x n^2` Hessian. The result is symmetrized on write.
pub fn hessian_apply<T: Scalar>(y: &SymMatrix<T>, d: &SymMatrix<T>) -> SymMatrix<T> {
    let n = y.dim();
    let yd = mat_mul(y.as_slice(), d.as_slice(), n);
    let ydy = mat_mul(&yd, y.as_slice(), n);
    let half = T::lit(0.5);
    SymMatrix::from_upper_fn(n, |i, j| {
        if i == j {
            ydy[i * n + i]
        } else {
            (ydy[i * n + j] + ydy[j * n + i]) * half
        }
    })
}
