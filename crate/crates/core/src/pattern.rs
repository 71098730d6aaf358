//! Free-variable pattern of the support-restricted subproblem.
//!
//! The free entries are the whole diagonal plus both triangles of every
//! support coordinate. Compact vectors hold the `n` diagonal values first and
//! then one value per support coordinate; the Frobenius inner product weighs
//! the off-diagonal slots twice.

use crate::linalg::dot;
use crate::matrix::{Coord, SymMatrix};
use crate::scalar::Scalar;

#[derive(Debug, Clone, PartialEq)]
pub struct FreePattern {
    n: usize,
    support: Vec<Coord>,
}

impl FreePattern {
    pub fn new(n: usize, support: &[Coord]) -> Self {
        let mut support = support.to_vec();
        support.sort();
        support.dedup();
        FreePattern { n, support }
    }

    #[inline]
    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn support(&self) -> &[Coord] {
        &self.support
    }

    /// Length of a compact vector.
    #[inline]
    pub fn len(&self) -> usize {
        self.n + self.support.len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Membership mask over all `n x n` entries.
    pub fn mask(&self) -> Vec<bool> {
        let n = self.n;
        let mut m = vec![false; n * n];
        for i in 0..n {
            m[i * n + i] = true;
        }
        for c in &self.support {
            m[c.row() * n + c.col()] = true;
            m[c.col() * n + c.row()] = true;
        }
        m
    }

    pub fn gather<T: Scalar>(&self, m: &SymMatrix<T>) -> Vec<T> {
        let mut out = m.diag();
        out.extend(self.support.iter().map(|&c| m.at(c)));
        out
    }

    pub fn scatter<T: Scalar>(&self, v: &[T]) -> SymMatrix<T> {
        let mut m = SymMatrix::zeros(self.n);
        for (i, &d) in v[..self.n].iter().enumerate() {
            m.set(i, i, d);
        }
        for (k, c) in self.support.iter().enumerate() {
            m.set(c.row(), c.col(), v[self.n + k]);
        }
        m
    }

    /// Frobenius inner product of two compact vectors.
    pub fn inner<T: Scalar>(&self, a: &[T], b: &[T]) -> T {
        let n = self.n;
        dot(&a[..n], &b[..n]) + T::lit(2.0) * dot(&a[n..], &b[n..])
    }

    /// Largest absolute entry of a compact vector.
    pub fn max_abs<T: Scalar>(&self, v: &[T]) -> T {
        v.iter().fold(T::zero(), |m, &x| m.max(x.abs()))
    }

    /// `Y P Y` evaluated only on the free entries, for `P` supported on them.
    ///
    /// `M = Y P` costs `n (n + 2|S|)` because `P` has that many nonzeros, and
    /// each free entry of `M Y` is one length-`n` dot product, so the whole
    /// product is `O(n (n + |S|))` instead of the dense `O(n^3)`.
    pub fn hessian_apply<T: Scalar>(&self, y: &SymMatrix<T>, p: &[T]) -> Vec<T> {
        let n = self.n;
        let mut m = vec![T::zero(); n * n];
        for a in 0..n {
            let yrow = y.row(a);
            let mrow = &mut m[a * n..(a + 1) * n];
            for j in 0..n {
                mrow[j] = yrow[j] * p[j];
            }
            for (k, c) in self.support.iter().enumerate() {
                let v = p[n + k];
                let (r, cc) = (c.row(), c.col());
                mrow[cc] += v * yrow[r];
                mrow[r] += v * yrow[cc];
            }
        }
        let mut out = Vec::with_capacity(self.len());
        for i in 0..n {
            out.push(dot(&m[i * n..(i + 1) * n], y.row(i)));
        }
        let half = T::lit(0.5);
        for c in &self.support {
            let (r, cc) = (c.row(), c.col());
            let upper = dot(&m[r * n..(r + 1) * n], y.row(cc));
            let lower = dot(&m[cc * n..(cc + 1) * n], y.row(r));
            out.push((upper + lower) * half);
        }
        out
    }
}
