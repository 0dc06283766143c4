//! Dense matrices and exact Gaussian elimination over a generic scalar.
//!
//! Everything here is pure and allocation-based; with a rational scalar the
//! results are exact (no tolerances anywhere). Pivots are chosen as the
//! first nonzero entry of the column, which is sound for exact arithmetic.

use std::ops::Index;

use crate::error::{Error, Result};
use crate::scalar::Scalar;

/// Dense row-major matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct Matrix<T> {
    rows: usize,
    cols: usize,
    data: Vec<T>,
}

impl<T: Scalar> Matrix<T> {
    pub fn new(rows: usize, cols: usize, data: Vec<T>) -> Result<Self> {
        if data.len() != rows * cols {
            return Err(Error::DimensionMismatch(format!(
                "matrix data length {} does not equal {}x{}",
                data.len(),
                rows,
                cols
            )));
        }
        Ok(Matrix { rows, cols, data })
    }

    pub fn from_rows(rows: Vec<Vec<T>>) -> Result<Self> {
        let r = rows.len();
        let c = rows.first().map_or(0, Vec::len);
        for (i, row) in rows.iter().enumerate() {
            if row.len() != c {
                return Err(Error::DimensionMismatch(format!(
                    "row {} has length {}, expected {}",
                    i,
                    row.len(),
                    c
                )));
            }
        }
        Ok(Matrix {
            rows: r,
            cols: c,
            data: rows.into_iter().flatten().collect(),
        })
    }

    pub fn zeros(rows: usize, cols: usize) -> Self {
        Matrix {
            rows,
            cols,
            data: vec![T::zero(); rows * cols],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m[(i, i)] = T::one();
        }
        m
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn row(&self, i: usize) -> &[T] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn set(&mut self, i: usize, j: usize, value: T) {
        self.data[i * self.cols + j] = value;
    }

    pub fn transpose(&self) -> Self {
        let mut out = Self::zeros(self.cols, self.rows);
        for i in 0..self.rows {
            for j in 0..self.cols {
                out[(j, i)] = self[(i, j)].clone();
            }
        }
        out
    }

    /// Extracts the given columns, in order, into a new matrix.
    pub fn select_columns(&self, cols: &[usize]) -> Self {
        let mut out = Self::zeros(self.rows, cols.len());
        for i in 0..self.rows {
            for (k, &j) in cols.iter().enumerate() {
                out[(i, k)] = self[(i, j)].clone();
            }
        }
        out
    }

    pub fn mat_vec(&self, v: &[T]) -> Result<Vec<T>> {
        if v.len() != self.cols {
            return Err(Error::DimensionMismatch(format!(
                "matrix has {} columns, vector has length {}",
                self.cols,
                v.len()
            )));
        }
        Ok((0..self.rows).map(|i| dot(self.row(i), v)).collect())
    }

    pub fn mat_mul(&self, other: &Self) -> Result<Self> {
        if self.cols != other.rows {
            return Err(Error::DimensionMismatch(format!(
                "cannot multiply {}x{} by {}x{}",
                self.rows, self.cols, other.rows, other.cols
            )));
        }
        let mut out = Self::zeros(self.rows, other.cols);
        for i in 0..self.rows {
            for k in 0..self.cols {
                let a = self[(i, k)].clone();
                if a.is_zero() {
                    continue;
                }
                for j in 0..other.cols {
                    let term = a.clone() * other[(k, j)].clone();
                    out[(i, j)] = out[(i, j)].clone() + term;
                }
            }
        }
        Ok(out)
    }

    /// Entrywise `self + factor * other`.
    pub fn add_scaled(&self, other: &Self, factor: &T) -> Result<Self> {
        if self.rows != other.rows || self.cols != other.cols {
            return Err(Error::DimensionMismatch(format!(
                "cannot combine {}x{} with {}x{}",
                self.rows, self.cols, other.rows, other.cols
            )));
        }
        let data = self
            .data
            .iter()
            .zip(&other.data)
            .map(|(a, b)| a.clone() + factor.clone() * b.clone())
            .collect();
        Ok(Matrix {
            rows: self.rows,
            cols: self.cols,
            data,
        })
    }

    fn swap_rows(&mut self, a: usize, b: usize) {
        if a == b {
            return;
        }
        for j in 0..self.cols {
            self.data.swap(a * self.cols + j, b * self.cols + j);
        }
    }
}

impl<T> Index<(usize, usize)> for Matrix<T> {
    type Output = T;
    fn index(&self, (i, j): (usize, usize)) -> &T {
        &self.data[i * self.cols + j]
    }
}

impl<T> std::ops::IndexMut<(usize, usize)> for Matrix<T> {
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut T {
        &mut self.data[i * self.cols + j]
    }
}

pub fn dot<T: Scalar>(a: &[T], b: &[T]) -> T {
    debug_assert_eq!(a.len(), b.len());
    a.iter()
        .zip(b)
        .fold(T::zero(), |acc, (x, y)| acc + x.clone() * y.clone())
}

/// Entrywise `a + factor * b`.
pub fn add_scaled_vec<T: Scalar>(a: &[T], b: &[T], factor: &T) -> Vec<T> {
    debug_assert_eq!(a.len(), b.len());
    a.iter()
        .zip(b)
        .map(|(x, y)| x.clone() + factor.clone() * y.clone())
        .collect()
}

pub fn scale_vec<T: Scalar>(v: &[T], factor: &T) -> Vec<T> {
    v.iter().map(|x| x.clone() * factor.clone()).collect()
}

pub fn sub_vec<T: Scalar>(a: &[T], b: &[T]) -> Vec<T> {
    debug_assert_eq!(a.len(), b.len());
    a.iter()
        .zip(b)
        .map(|(x, y)| x.clone() - y.clone())
        .collect()
}

pub fn inf_norm<T: Scalar>(v: &[T]) -> T {
    v.iter()
        .map(|x| x.abs())
        .fold(T::zero(), |acc, x| if x > acc { x } else { acc })
}

/// Result of solving a square linear system exactly.
#[derive(Debug, Clone, PartialEq)]
pub enum LinearSolution<T> {
    Unique(Vec<T>),
    /// The matrix is singular: no unique solution exists.
    Singular,
}

/// Solves `A x = b` for square `A` by exact Gaussian elimination.
pub fn solve_linear<T: Scalar>(a: &Matrix<T>, b: &[T]) -> Result<LinearSolution<T>> {
    if a.rows() != a.cols() {
        return Err(Error::DimensionMismatch(format!(
            "solve_linear needs a square matrix, got {}x{}",
            a.rows(),
            a.cols()
        )));
    }
    if b.len() != a.rows() {
        return Err(Error::DimensionMismatch(format!(
            "rhs length {} does not match {} rows",
            b.len(),
            a.rows()
        )));
    }
    let n = a.rows();
    let mut work = augment(a, b);
    let pivots = eliminate(&mut work);
    if pivots.len() < n {
        return Ok(LinearSolution::Singular);
    }
    // Pivot columns are exactly 0..n, so back substitution is straightforward.
    let mut x = vec![T::zero(); n];
    for (r, &pc) in pivots.iter().enumerate().rev() {
        let mut acc = work[(r, n)].clone();
        for j in pc + 1..n {
            acc = acc - work[(r, j)].clone() * x[j].clone();
        }
        x[pc] = acc / work[(r, pc)].clone();
    }
    Ok(LinearSolution::Unique(x))
}

/// Solves `A x = b` for general (possibly rectangular or rank-deficient) `A`,
/// returning one particular solution with all free coordinates set to zero,
/// or `None` if the system is inconsistent.
pub fn solve_any<T: Scalar>(a: &Matrix<T>, b: &[T]) -> Result<Option<Vec<T>>> {
    if b.len() != a.rows() {
        return Err(Error::DimensionMismatch(format!(
            "rhs length {} does not match {} rows",
            b.len(),
            a.rows()
        )));
    }
    let n = a.cols();
    let mut work = augment(a, b);
    let pivots = eliminate(&mut work);
    // A pivot in the rhs column means some row reads 0 = nonzero.
    if pivots.iter().any(|&pc| pc == n) {
        return Ok(None);
    }
    let mut x = vec![T::zero(); n];
    for (r, &pc) in pivots.iter().enumerate().rev() {
        let mut acc = work[(r, n)].clone();
        for j in pc + 1..n {
            acc = acc - work[(r, j)].clone() * x[j].clone();
        }
        x[pc] = acc / work[(r, pc)].clone();
    }
    Ok(Some(x))
}

/// Exact rank via rational Gaussian elimination.
pub fn rank<T: Scalar>(a: &Matrix<T>) -> usize {
    let mut work = a.clone();
    eliminate(&mut work).len()
}

/// Exact determinant of a square matrix.
pub fn det<T: Scalar>(a: &Matrix<T>) -> Result<T> {
    if a.rows() != a.cols() {
        return Err(Error::DimensionMismatch(format!(
            "determinant needs a square matrix, got {}x{}",
            a.rows(),
            a.cols()
        )));
    }
    let n = a.rows();
    let mut work = a.clone();
    let mut det = T::one();
    let mut row = 0;
    for col in 0..n {
        let pivot_row = (row..n).find(|&r| !work[(r, col)].is_zero());
        let pivot_row = match pivot_row {
            Some(r) => r,
            None => return Ok(T::zero()),
        };
        if pivot_row != row {
            work.swap_rows(row, pivot_row);
            det = -det;
        }
        let pivot = work[(row, col)].clone();
        det = det * pivot.clone();
        for r in row + 1..n {
            let factor = work[(r, col)].clone() / pivot.clone();
            if factor.is_zero() {
                continue;
            }
            for j in col..n {
                let delta = factor.clone() * work[(row, j)].clone();
                work[(r, j)] = work[(r, j)].clone() - delta;
            }
        }
        row += 1;
    }
    Ok(det)
}

/// Rank of the pencil `A0 + eps*A1` at all but finitely many `eps > 0`.
///
/// Every minor determinant is a polynomial in `eps` of degree at most
/// `min(m, n)`, so it cannot vanish at `min(m, n) + 1` distinct sample
/// points unless it is identically zero; the maximum sampled rank is
/// therefore the generic rank. Sample points are `1, 1/2, ..., 1/(min+1)`.
pub fn generic_rank_pencil<T: Scalar>(a0: &Matrix<T>, a1: &Matrix<T>) -> Result<usize> {
    if a0.rows() != a1.rows() || a0.cols() != a1.cols() {
        return Err(Error::DimensionMismatch(format!(
            "pencil pieces have shapes {}x{} and {}x{}",
            a0.rows(),
            a0.cols(),
            a1.rows(),
            a1.cols()
        )));
    }
    let samples = a0.rows().min(a0.cols()) + 1;
    let mut best = 0;
    for k in 1..=samples.max(1) {
        let eps = T::ratio(1, k as i64);
        let at = a0.add_scaled(a1, &eps)?;
        best = best.max(rank(&at));
    }
    Ok(best)
}

fn augment<T: Scalar>(a: &Matrix<T>, b: &[T]) -> Matrix<T> {
    let mut work = Matrix::zeros(a.rows(), a.cols() + 1);
    for i in 0..a.rows() {
        for j in 0..a.cols() {
            work[(i, j)] = a[(i, j)].clone();
        }
        work[(i, a.cols())] = b[i].clone();
    }
    work
}

/// In-place forward elimination to row echelon form.
/// Returns the pivot column of each pivot row; the length is the rank.
fn eliminate<T: Scalar>(work: &mut Matrix<T>) -> Vec<usize> {
    let rows = work.rows();
    let cols = work.cols();
    let mut pivots = Vec::new();
    let mut row = 0;
    for col in 0..cols {
        if row == rows {
            break;
        }
        let pivot_row = match (row..rows).find(|&r| !work[(r, col)].is_zero()) {
            Some(r) => r,
            None => continue,
        };
        work.swap_rows(row, pivot_row);
        let pivot = work[(row, col)].clone();
        for r in row + 1..rows {
            let factor = work[(r, col)].clone() / pivot.clone();
            if factor.is_zero() {
                continue;
            }
            work[(r, col)] = T::zero();
            for j in col + 1..cols {
                let delta = factor.clone() * work[(row, j)].clone();
                work[(r, j)] = work[(r, j)].clone() - delta;
            }
        }
        pivots.push(col);
        row += 1;
    }
    pivots
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::{rat, Rat};

    fn m(rows: Vec<Vec<i64>>) -> Matrix<Rat> {
        Matrix::from_rows(
            rows.into_iter()
                .map(|r| r.into_iter().map(|x| rat(x, 1)).collect())
                .collect(),
        )
        .unwrap()
    }

    fn v(entries: Vec<i64>) -> Vec<Rat> {
        entries.into_iter().map(|x| rat(x, 1)).collect()
    }

    #[test]
    fn solve_identity() {
        let a = Matrix::<Rat>::identity(2);
        let x = solve_linear(&a, &v(vec![3, 5])).unwrap();
        assert_eq!(x, LinearSolution::Unique(v(vec![3, 5])));
    }

    #[test]
    fn solve_singular() {
        let a = m(vec![vec![1, 1], vec![1, 1]]);
        let x = solve_linear(&a, &v(vec![1, 1])).unwrap();
        assert_eq!(x, LinearSolution::Singular);
    }

    #[test]
    fn solve_and_substitute() {
        let a = m(vec![vec![2, 1], vec![1, 3]]);
        let b = v(vec![5, 10]);
        match solve_linear(&a, &b).unwrap() {
            LinearSolution::Unique(x) => {
                assert_eq!(x, v(vec![1, 3]));
                assert_eq!(a.mat_vec(&x).unwrap(), b);
            }
            LinearSolution::Singular => panic!("expected a unique solution"),
        }
    }

    #[test]
    fn solve_dimension_mismatch() {
        let a = m(vec![vec![1, 2]]);
        assert!(matches!(
            solve_linear(&a, &v(vec![1])),
            Err(Error::DimensionMismatch(_))
        ));
    }

    #[test]
    fn rank_examples() {
        assert_eq!(rank(&Matrix::<Rat>::identity(3)), 3);
        assert_eq!(rank(&Matrix::<Rat>::zeros(2, 4)), 0);
        assert_eq!(rank(&m(vec![vec![1, 2], vec![2, 4], vec![0, 1]])), 2);
    }

    #[test]
    fn pencil_rank_examples() {
        let id = Matrix::<Rat>::identity(2);
        let zero = Matrix::<Rat>::zeros(2, 2);
        assert_eq!(generic_rank_pencil(&id, &zero).unwrap(), 2);

        let a0 = m(vec![vec![0, 0]]);
        let a1 = m(vec![vec![1, 0]]);
        assert_eq!(generic_rank_pencil(&a0, &a1).unwrap(), 1);

        // det(A0 + eps*A1) = eps here, nonzero for every eps > 0.
        let a0 = m(vec![vec![1, 1], vec![1, 1]]);
        let a1 = m(vec![vec![1, 0], vec![0, 0]]);
        assert_eq!(generic_rank_pencil(&a0, &a1).unwrap(), 2);
    }

    #[test]
    fn det_examples() {
        assert_eq!(det(&Matrix::<Rat>::identity(3)).unwrap(), rat(1, 1));
        assert_eq!(det(&m(vec![vec![1, 1], vec![1, 1]])).unwrap(), rat(0, 1));
        assert_eq!(det(&m(vec![vec![0, 1], vec![1, 0]])).unwrap(), rat(-1, 1));
        assert_eq!(det(&m(vec![vec![2, 1], vec![1, 3]])).unwrap(), rat(5, 1));
    }

    #[test]
    fn solve_any_rectangular() {
        // x1 + x2 = 3 with a redundant duplicated row.
        let a = m(vec![vec![1, 1], vec![2, 2]]);
        let x = solve_any(&a, &v(vec![3, 6])).unwrap().unwrap();
        assert_eq!(a.mat_vec(&x).unwrap(), v(vec![3, 6]));
        // Inconsistent version.
        assert_eq!(solve_any(&a, &v(vec![3, 7])).unwrap(), None);
    }
}
