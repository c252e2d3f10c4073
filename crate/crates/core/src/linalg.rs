//! Small dense linear algebra: row-major matrices, Cholesky and partially
//! pivoted LU solves.

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
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Matrix {
            rows,
            cols,
            data: vec![T::zero(); rows * cols],
        }
    }

    pub fn from_vec(rows: usize, cols: usize, data: Vec<T>) -> Result<Self> {
        if data.len() != rows * cols {
            return Err(Error::Dimension {
                expected: rows * cols,
                got: data.len(),
            });
        }
        Ok(Matrix { rows, cols, data })
    }

    pub fn from_rows(rows: &[Vec<T>]) -> Result<Self> {
        let cols = rows.first().map_or(0, Vec::len);
        let mut data = Vec::with_capacity(rows.len() * cols);
        for r in rows {
            if r.len() != cols {
                return Err(Error::Dimension {
                    expected: cols,
                    got: r.len(),
                });
            }
            data.extend_from_slice(r);
        }
        Ok(Matrix {
            rows: rows.len(),
            cols,
            data,
        })
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

    pub fn as_slice(&self) -> &[T] {
        &self.data
    }

    pub fn as_mut_slice(&mut self) -> &mut [T] {
        &mut self.data
    }

    pub fn row(&self, i: usize) -> &[T] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn row_mut(&mut self, i: usize) -> &mut [T] {
        &mut self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn transpose(&self) -> Self {
        let mut t = Self::zeros(self.cols, self.rows);
        for i in 0..self.rows {
            for j in 0..self.cols {
                t[(j, i)] = self[(i, j)];
            }
        }
        t
    }

    /// `self · v`.
    pub fn mul_vec(&self, v: &[T]) -> Vec<T> {
        debug_assert_eq!(v.len(), self.cols);
        (0..self.rows).map(|i| dot(self.row(i), v)).collect()
    }

    /// `selfᵀ · v`.
    pub fn tr_mul_vec(&self, v: &[T]) -> Vec<T> {
        debug_assert_eq!(v.len(), self.rows);
        let mut out = vec![T::zero(); self.cols];
        for (i, &vi) in v.iter().enumerate() {
            for (o, &b) in out.iter_mut().zip(self.row(i)) {
                *o += b * vi;
            }
        }
        out
    }
}

impl<T> std::ops::Index<(usize, usize)> for Matrix<T> {
    type Output = T;
    #[inline]
    fn index(&self, (i, j): (usize, usize)) -> &T {
        &self.data[i * self.cols + j]
    }
}

impl<T> std::ops::IndexMut<(usize, usize)> for Matrix<T> {
    #[inline]
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut T {
        &mut self.data[i * self.cols + j]
    }
}

/// Length above which [`dot`] switches to pairwise summation.
pub const PAIRWISE_THRESHOLD: usize = 10_000;

/// Inner product; pairwise summation for long vectors.
pub fn dot<T: Scalar>(a: &[T], b: &[T]) -> T {
    debug_assert_eq!(a.len(), b.len());
    if a.len() <= PAIRWISE_THRESHOLD {
        return a.iter().zip(b).fold(T::zero(), |acc, (&x, &y)| acc + x * y);
    }
    pairwise_dot(a, b)
}

fn pairwise_dot<T: Scalar>(a: &[T], b: &[T]) -> T {
    if a.len() <= 128 {
        return a.iter().zip(b).fold(T::zero(), |acc, (&x, &y)| acc + x * y);
    }
    let mid = a.len() / 2;
    pairwise_dot(&a[..mid], &b[..mid]) + pairwise_dot(&a[mid..], &b[mid..])
}

/// Lower-triangular Cholesky factor of a symmetric positive definite matrix.
#[derive(Debug, Clone)]
pub struct Cholesky<T> {
    l: Matrix<T>,
}

impl<T: Scalar> Cholesky<T> {
    /// Factors `a`; fails if a pivot is not strictly positive.
    pub fn new(a: &Matrix<T>) -> Result<Self> {
        let n = a.rows();
        if a.cols() != n {
            return Err(Error::Dimension {
                expected: n,
                got: a.cols(),
            });
        }
        let mut l = Matrix::zeros(n, n);
        for j in 0..n {
            let mut diag = a[(j, j)];
            for k in 0..j {
                diag -= l[(j, k)] * l[(j, k)];
            }
            if !(diag > T::zero()) || !diag.is_finite() {
                return Err(Error::Solver {
                    reason: format!("non-positive pivot at column {j}"),
                    condition: f64::INFINITY,
                });
            }
            let ljj = diag.sqrt();
            l[(j, j)] = ljj;
            for i in j + 1..n {
                let mut s = a[(i, j)];
                for k in 0..j {
                    s -= l[(i, k)] * l[(j, k)];
                }
                l[(i, j)] = s / ljj;
            }
        }
        Ok(Cholesky { l })
    }

    pub fn solve(&self, b: &[T]) -> Vec<T> {
        let n = self.l.rows();
        let l = &self.l;
        let mut y = b.to_vec();
        for i in 0..n {
            let mut s = y[i];
            for k in 0..i {
                s -= l[(i, k)] * y[k];
            }
            y[i] = s / l[(i, i)];
        }
        for i in (0..n).rev() {
            let mut s = y[i];
            for k in i + 1..n {
                s -= l[(k, i)] * y[k];
            }
            y[i] = s / l[(i, i)];
        }
        y
    }

    /// `(max Lᵢᵢ / min Lᵢᵢ)²`, a cheap lower estimate of the condition number.
    pub fn condition_estimate(&self) -> T {
        let n = self.l.rows();
        let mut lo = T::infinity();
        let mut hi = T::zero();
        for i in 0..n {
            lo = lo.min(self.l[(i, i)]);
            hi = hi.max(self.l[(i, i)]);
        }
        let r = hi / lo;
        r * r
    }
}

/// Solves `a · x = b` by Gaussian elimination with partial pivoting.
pub fn lu_solve<T: Scalar>(a: &Matrix<T>, b: &[T]) -> Result<Vec<T>> {
    let n = a.rows();
    if a.cols() != n || b.len() != n {
        return Err(Error::Dimension {
            expected: n,
            got: b.len(),
        });
    }
    let mut m = a.clone();
    let mut x = b.to_vec();
    let scale = m
        .as_slice()
        .iter()
        .fold(T::zero(), |acc, v| acc.max(v.abs()));
    let tiny = scale * T::epsilon() * T::from_count(n.max(1));
    let mut min_pivot = T::infinity();
    let mut max_pivot = T::zero();
    for col in 0..n {
        let (p, pv) =
            (col..n)
                .map(|r| (r, m[(r, col)].abs()))
                .fold(
                    (col, -T::one()),
                    |best, cur| if cur.1 > best.1 { cur } else { best },
                );
        if !(pv > tiny) || !pv.is_finite() {
            return Err(Error::Solver {
                reason: format!("matrix is singular to working precision at column {col}"),
                condition: f64::INFINITY,
            });
        }
        min_pivot = min_pivot.min(pv);
        max_pivot = max_pivot.max(pv);
        if p != col {
            for j in 0..n {
                let tmp = m[(col, j)];
                m[(col, j)] = m[(p, j)];
                m[(p, j)] = tmp;
            }
            x.swap(col, p);
        }
        let piv = m[(col, col)];
        for r in col + 1..n {
            let f = m[(r, col)] / piv;
            if f == T::zero() {
                continue;
            }
            for j in col..n {
                let v = m[(col, j)];
                m[(r, j)] -= f * v;
            }
            let v = x[col];
            x[r] -= f * v;
        }
    }
    for i in (0..n).rev() {
        let mut s = x[i];
        for k in i + 1..n {
            s -= m[(i, k)] * x[k];
        }
        x[i] = s / m[(i, i)];
    }
    if x.iter().any(|v| !v.is_finite()) {
        return Err(Error::Solver {
            reason: "non-finite solution".into(),
            condition: (max_pivot / min_pivot).as_f64(),
        });
    }
    Ok(x)
}

/// Solves a symmetric positive definite system, falling back to pivoted
/// elimination when the Cholesky factorization breaks down. Returns the
/// solution and a condition estimate (infinite when the fallback was used).
pub fn spd_solve<T: Scalar>(a: &Matrix<T>, b: &[T]) -> Result<(Vec<T>, T)> {
    match Cholesky::new(a) {
        Ok(ch) => Ok((ch.solve(b), ch.condition_estimate())),
        Err(_) => {
            log::warn!("Cholesky factorization failed; falling back to pivoted elimination");
            let x = lu_solve(a, b)?;
            Ok((x, T::infinity()))
        }
    }
}
