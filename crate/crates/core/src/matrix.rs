//! Dense symmetric storage and the off-diagonal coordinate type.

use std::cmp::Ordering;
use std::fmt;

use crate::error::{Error, Result};
use crate::scalar::Scalar;

/// An off-diagonal position `(row, col)` with `row < col`, zero-based.
///
/// One coordinate stands for the symmetric pair of entries `(row, col)` and
/// `(col, row)`. Coordinates order by column-major linear index, so sorting a
/// set of them reproduces the deterministic scan order used for tie-breaking.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Coord {
    row: usize,
    col: usize,
}

impl Coord {
    /// Builds the canonical coordinate for an unordered pair of distinct indices.
    pub fn new(i: usize, j: usize) -> Option<Self> {
        match i.cmp(&j) {
            Ordering::Less => Some(Coord { row: i, col: j }),
            Ordering::Greater => Some(Coord { row: j, col: i }),
            Ordering::Equal => None,
        }
    }

    /// Builds a coordinate from one-based indices as they appear in files.
    pub fn from_one_based(i: usize, j: usize) -> Option<Self> {
        if i == 0 || j == 0 {
            return None;
        }
        Coord::new(i - 1, j - 1)
    }

    #[inline]
    pub fn row(&self) -> usize {
        self.row
    }

    #[inline]
    pub fn col(&self) -> usize {
        self.col
    }

    /// Zero-based column-major index of the upper entry in an `n x n` matrix.
    #[inline]
    pub fn linear_index(&self, n: usize) -> usize {
        self.col * n + self.row
    }

    pub fn one_based(&self) -> [usize; 2] {
        [self.row + 1, self.col + 1]
    }

    /// All off-diagonal coordinates of an `n x n` matrix in column-major order.
    pub fn all(n: usize) -> impl Iterator<Item = Coord> {
        (0..n).flat_map(|col| (0..col).map(move |row| Coord { row, col }))
    }
}

impl Ord for Coord {
    fn cmp(&self, other: &Self) -> Ordering {
        (self.col, self.row).cmp(&(other.col, other.row))
    }
}

impl PartialOrd for Coord {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl fmt::Display for Coord {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({},{})", self.row + 1, self.col + 1)
    }
}

/// Dense `n x n` symmetric matrix stored in full row-major form.
///
/// Every write goes to both `(i, j)` and `(j, i)`, so the two triangles are
/// always bitwise equal.
#[derive(Debug, Clone, PartialEq)]
pub struct SymMatrix<T> {
    n: usize,
    data: Vec<T>,
}

impl<T: Scalar> SymMatrix<T> {
    pub fn zeros(n: usize) -> Self {
        SymMatrix {
            n,
            data: vec![T::zero(); n * n],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n);
        for i in 0..n {
            m.data[i * n + i] = T::one();
        }
        m
    }

    pub fn from_diag(diag: &[T]) -> Self {
        let n = diag.len();
        let mut m = Self::zeros(n);
        for (i, &d) in diag.iter().enumerate() {
            m.data[i * n + i] = d;
        }
        m
    }

    /// Fills the upper triangle from `f(i, j)` with `i <= j` and mirrors it.
    pub fn from_upper_fn(n: usize, mut f: impl FnMut(usize, usize) -> T) -> Self {
        let mut m = Self::zeros(n);
        for i in 0..n {
            for j in i..n {
                m.set(i, j, f(i, j));
            }
        }
        m
    }

    /// Builds a matrix from row-major data, averaging the two triangles.
    ///
    /// Returns the largest absolute asymmetry seen alongside the matrix.
    pub fn from_row_major_symmetrized(n: usize, data: &[T]) -> Result<(Self, T)> {
        if data.len() != n * n {
            return Err(Error::DimensionMismatch {
                expected: n * n,
                found: data.len(),
            });
        }
        let half = T::lit(0.5);
        let mut asym = T::zero();
        let m = Self::from_upper_fn(n, |i, j| {
            let a = data[i * n + j];
            let b = data[j * n + i];
            asym = asym.max((a - b).abs());
            if i == j {
                a
            } else {
                (a + b) * half
            }
        });
        Ok((m, asym))
    }

    /// Wraps row-major data that is already exactly symmetric.
    pub(crate) fn from_symmetric_vec(n: usize, data: Vec<T>) -> Self {
        debug_assert_eq!(data.len(), n * n);
        SymMatrix { n, data }
    }

    #[inline]
    pub fn dim(&self) -> usize {
        self.n
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> T {
        self.data[i * self.n + j]
    }

    #[inline]
    pub fn set(&mut self, i: usize, j: usize, v: T) {
        let n = self.n;
        self.data[i * n + j] = v;
        self.data[j * n + i] = v;
    }

    #[inline]
    pub fn add_at(&mut self, i: usize, j: usize, v: T) {
        let x = self.get(i, j) + v;
        self.set(i, j, x);
    }

    #[inline]
    pub fn at(&self, c: Coord) -> T {
        self.get(c.row(), c.col())
    }

    #[inline]
    pub fn row(&self, i: usize) -> &[T] {
        &self.data[i * self.n..(i + 1) * self.n]
    }

    pub fn as_slice(&self) -> &[T] {
        &self.data
    }

    pub fn diag(&self) -> Vec<T> {
        (0..self.n).map(|i| self.get(i, i)).collect()
    }

    /// Frobenius inner product `<A, B> = sum_ij A_ij B_ij`.
    pub fn inner(&self, other: &Self) -> T {
        debug_assert_eq!(self.n, other.n);
        self.data
            .iter()
            .zip(&other.data)
            .map(|(&a, &b)| a * b)
            .sum()
    }

    /// Largest absolute entry.
    pub fn max_abs(&self) -> T {
        self.data.iter().fold(T::zero(), |m, &v| m.max(v.abs()))
    }

    pub fn frobenius_norm(&self) -> T {
        self.inner(self).sqrt()
    }

    pub fn is_finite(&self) -> bool {
        self.data.iter().all(|v| v.is_finite())
    }

    /// `self - other`.
    pub fn sub(&self, other: &Self) -> Self {
        SymMatrix {
            n: self.n,
            data: self
                .data
                .iter()
                .zip(&other.data)
                .map(|(&a, &b)| a - b)
                .collect(),
        }
    }

    /// `self + alpha * other`.
    pub fn add_scaled(&self, other: &Self, alpha: T) -> Self {
        SymMatrix {
            n: self.n,
            data: self
                .data
                .iter()
                .zip(&other.data)
                .map(|(&a, &b)| a + alpha * b)
                .collect(),
        }
    }

    pub fn scale(&self, alpha: T) -> Self {
        SymMatrix {
            n: self.n,
            data: self.data.iter().map(|&a| a * alpha).collect(),
        }
    }

    /// Number of nonzero off-diagonal entries (both triangles counted).
    pub fn nnz_off(&self) -> usize {
        2 * self.off_diagonal_support().len()
    }

    /// Coordinates whose value is nonzero, in column-major order.
    pub fn off_diagonal_support(&self) -> Vec<Coord> {
        Coord::all(self.n)
            .filter(|&c| self.at(c) != T::zero())
            .collect()
    }

    /// Same matrix with rows and columns reordered: `out[i][j] = self[p[i]][p[j]]`.
    pub fn permuted(&self, perm: &[usize]) -> Self {
        Self::from_upper_fn(self.n, |i, j| self.get(perm[i], perm[j]))
    }

    /// Converts to another scalar type entrywise.
    pub fn cast<U: Scalar>(&self) -> SymMatrix<U> {
        SymMatrix {
            n: self.n,
            data: self.data.iter().map(|&v| U::lit(v.as_f64())).collect(),
        }
    }
}
