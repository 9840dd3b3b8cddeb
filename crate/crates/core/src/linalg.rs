//! Dense row-major matrices and the two factorizations the analysis needs.
//!
//! [`MMatrixFactor`] factors `I - Q` for a substochastic `Q` by Gaussian
//! elimination in the Grassmann–Taksar–Heyman arrangement: every pivot and
//! every substitution step is a sum of nonnegative terms, so hitting and
//! staying times keep full relative accuracy even when `1 - rho(Q)` is far
//! below machine epsilon. [`Lu`] is plain partial-pivoting LU for general
//! matrices (used for `Q^{-1}`).

use std::ops::{Index, IndexMut};

use crate::error::{Error, Result};

/// Dense row-major real matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct Matrix {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl Matrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self {
            rows,
            cols,
            data: vec![0.0; rows * cols],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m[(i, i)] = 1.0;
        }
        m
    }

    /// Builds a matrix from row vectors. Panics on ragged input.
    pub fn from_rows(rows: &[Vec<f64>]) -> Self {
        let n = rows.len();
        let c = rows.first().map_or(0, Vec::len);
        let mut data = Vec::with_capacity(n * c);
        for r in rows {
            assert_eq!(r.len(), c, "ragged rows");
            data.extend_from_slice(r);
        }
        Self {
            rows: n,
            cols: c,
            data,
        }
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn is_square(&self) -> bool {
        self.rows == self.cols
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn row_mut(&mut self, i: usize) -> &mut [f64] {
        &mut self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.data
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

    /// `self * rhs`, skipping zero entries of `self` (the kernels are sparse).
    pub fn matmul(&self, rhs: &Matrix) -> Matrix {
        assert_eq!(self.cols, rhs.rows, "matmul shape mismatch");
        let mut out = Matrix::zeros(self.rows, rhs.cols);
        for i in 0..self.rows {
            let out_row = &mut out.data[i * rhs.cols..(i + 1) * rhs.cols];
            for (k, &a) in self.row(i).iter().enumerate() {
                if a == 0.0 {
                    continue;
                }
                for (o, &b) in out_row.iter_mut().zip(rhs.row(k)) {
                    *o += a * b;
                }
            }
        }
        out
    }

    pub fn matvec(&self, x: &[f64]) -> Vec<f64> {
        assert_eq!(self.cols, x.len());
        (0..self.rows)
            .map(|i| self.row(i).iter().zip(x).map(|(a, b)| a * b).sum())
            .collect()
    }

    /// Maximum absolute row sum.
    pub fn norm_inf(&self) -> f64 {
        (0..self.rows)
            .map(|i| self.row(i).iter().map(|v| v.abs()).sum::<f64>())
            .fold(0.0, f64::max)
    }

    /// Maximum absolute column sum.
    pub fn norm_one(&self) -> f64 {
        let mut sums = vec![0.0; self.cols];
        for i in 0..self.rows {
            for (s, v) in sums.iter_mut().zip(self.row(i)) {
                *s += v.abs();
            }
        }
        sums.into_iter().fold(0.0, f64::max)
    }

    pub fn scale(&mut self, factor: f64) {
        for v in &mut self.data {
            *v *= factor;
        }
    }
}

impl Index<(usize, usize)> for Matrix {
    type Output = f64;

    fn index(&self, (i, j): (usize, usize)) -> &f64 {
        &self.data[i * self.cols + j]
    }
}

impl IndexMut<(usize, usize)> for Matrix {
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut f64 {
        &mut self.data[i * self.cols + j]
    }
}

/// LU factorization with partial pivoting, `P A = L U`.
#[derive(Debug, Clone)]
pub struct Lu {
    lu: Matrix,
    perm: Vec<usize>,
}

impl Lu {
    pub fn factor(a: &Matrix) -> Result<Self> {
        if !a.is_square() {
            return Err(Error::DimensionMismatch {
                expected: a.rows(),
                found: a.cols(),
            });
        }
        let n = a.rows();
        let scale = a.norm_inf();
        let mut lu = a.clone();
        let mut perm: Vec<usize> = (0..n).collect();
        for k in 0..n {
            let (p, pivot_abs) = (k..n)
                .map(|i| (i, lu[(i, k)].abs()))
                .fold((k, -1.0), |best, c| if c.1 > best.1 { c } else { best });
            if pivot_abs <= f64::EPSILON * scale * n as f64 || pivot_abs == 0.0 {
                return Err(Error::SingularMatrix(format!("zero pivot in column {k}")));
            }
            if p != k {
                perm.swap(p, k);
                for j in 0..n {
                    let tmp = lu[(p, j)];
                    lu[(p, j)] = lu[(k, j)];
                    lu[(k, j)] = tmp;
                }
            }
            let pivot = lu[(k, k)];
            for i in k + 1..n {
                let m = lu[(i, k)] / pivot;
                lu[(i, k)] = m;
                if m != 0.0 {
                    for j in k + 1..n {
                        lu[(i, j)] -= m * lu[(k, j)];
                    }
                }
            }
        }
        Ok(Self { lu, perm })
    }

    pub fn solve(&self, b: &[f64]) -> Vec<f64> {
        let n = self.lu.rows();
        let mut x: Vec<f64> = self.perm.iter().map(|&p| b[p]).collect();
        for i in 0..n {
            let s: f64 = (0..i).map(|k| self.lu[(i, k)] * x[k]).sum();
            x[i] -= s;
        }
        for i in (0..n).rev() {
            let s: f64 = (i + 1..n).map(|k| self.lu[(i, k)] * x[k]).sum();
            x[i] = (x[i] - s) / self.lu[(i, i)];
        }
        x
    }

    /// Explicit inverse, column by column.
    pub fn inverse(&self) -> Matrix {
        let n = self.lu.rows();
        let mut inv = Matrix::zeros(n, n);
        let mut e = vec![0.0; n];
        for j in 0..n {
            e.iter_mut().for_each(|v| *v = 0.0);
            e[j] = 1.0;
            let col = self.solve(&e);
            for (i, v) in col.into_iter().enumerate() {
                inv[(i, j)] = v;
            }
        }
        inv
    }
}

/// Factorization of `I - Q` for a nonnegative substochastic `Q`.
///
/// Entries are stored as nonnegative magnitudes: `I - Q = L U` with
/// `L = I - lower`, `U = diag(pivot) - upper`.
#[derive(Debug, Clone)]
pub struct MMatrixFactor {
    n: usize,
    /// Strictly lower multipliers, `-L[i][k]`.
    lower: Matrix,
    /// Strictly upper part, `-U[k][j]`.
    upper: Matrix,
    pivot: Vec<f64>,
}

impl MMatrixFactor {
    /// Factors `I - Q` given `Q` and the per-row absorption mass `leak`
    /// (`1 - sum_j Q[i][j]`, supplied directly so it is never formed by
    /// subtraction). Fails with [`Error::Singular`] at the first state whose
    /// pivot vanishes, which happens exactly when some closed class of
    /// non-optimal states can never be left.
    pub fn factor(q: &Matrix, leak: &[f64]) -> Result<Self> {
        let n = q.rows();
        if !q.is_square() || leak.len() != n {
            return Err(Error::DimensionMismatch {
                expected: n,
                found: leak.len(),
            });
        }
        let mut a = q.clone();
        for i in 0..n {
            a[(i, i)] = 0.0;
        }
        let mut leak = leak.to_vec();
        let mut lower = Matrix::zeros(n, n);
        let mut pivot = vec![0.0; n];
        for k in 0..n {
            let p = leak[k] + a.row(k)[k + 1..].iter().sum::<f64>();
            if p == 0.0 || !p.is_finite() {
                return Err(Error::Singular { state: k });
            }
            pivot[k] = p;
            let row_k: Vec<f64> = a.row(k)[k + 1..].to_vec();
            for i in k + 1..n {
                let aik = a[(i, k)];
                if aik == 0.0 {
                    continue;
                }
                let m = aik / p;
                lower[(i, k)] = m;
                leak[i] += m * leak[k];
                let row_i = &mut a.row_mut(i)[k + 1..];
                for (j, (dst, &src)) in row_i.iter_mut().zip(&row_k).enumerate() {
                    // the diagonal of the Schur complement is implied by the
                    // row sums and never stored
                    if j + k + 1 != i && src != 0.0 {
                        *dst += m * src;
                    }
                }
            }
        }
        let mut upper = a;
        for i in 0..n {
            for j in 0..=i {
                upper[(i, j)] = 0.0;
            }
        }
        Ok(Self {
            n,
            lower,
            upper,
            pivot,
        })
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn pivots(&self) -> &[f64] {
        &self.pivot
    }

    /// Solves `(I - Q) x = b` for `b >= 0`.
    pub fn solve(&self, b: &[f64]) -> Vec<f64> {
        let n = self.n;
        assert_eq!(b.len(), n);
        let mut y = b.to_vec();
        for i in 0..n {
            let s: f64 = self.lower.row(i)[..i]
                .iter()
                .zip(&y[..i])
                .map(|(l, v)| l * v)
                .sum();
            y[i] += s;
        }
        for k in (0..n).rev() {
            let s: f64 = self.upper.row(k)[k + 1..]
                .iter()
                .zip(&y[k + 1..])
                .map(|(u, v)| u * v)
                .sum();
            y[k] = (y[k] + s) / self.pivot[k];
        }
        y
    }

    /// Solves `x^T (I - Q) = b^T` for `b >= 0`.
    pub fn solve_transposed(&self, b: &[f64]) -> Vec<f64> {
        let n = self.n;
        assert_eq!(b.len(), n);
        let mut z = b.to_vec();
        for k in 0..n {
            let s: f64 = (0..k).map(|j| self.upper[(j, k)] * z[j]).sum();
            z[k] = (z[k] + s) / self.pivot[k];
        }
        for k in (0..n).rev() {
            let s: f64 = (k + 1..n).map(|i| self.lower[(i, k)] * z[i]).sum();
            z[k] += s;
        }
        z
    }
}
